//! Brinkman-penalized Stokes state problem: assembly of the saddle-point
//! system on the Crouzeix–Raviart / piecewise-constant pair, its direct
//! solution, and the energy functionals evaluated on the solution.
//!
//! The momentum block decouples per velocity component (full-gradient
//! viscous form), so each element contributes two independent 3×3 blocks of
//! `μ·(broken stiffness) + (design-weighted mass)`. The divergence rows are
//! exact: the broken gradient of a CR field is constant per element. A
//! traction-free outlet leaves its dofs unconstrained; if no outlet is
//! tagged, the pressure is only determined up to a constant and a weighted
//! mean-zero gauge row is appended.

use std::fmt;
use std::sync::Arc;

use crate::fespace::{
    bary_gradients, cr_boundary_values, velocity_gradient, PhaseField,
    PressureField, VelocityField,
};
use crate::mesh::{BoundaryTag, Mesh};
use crate::phasefield::double_well;
use crate::quad::{integrate_tri, TRI_DEGREE_4, TRI_DEGREE_6};
use crate::sparse::{csc_pattern, scatter, Csc, SymmetricSolver, Triplets};
use crate::Error;

/// Vector field over points.
pub type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;

/// Physical parameters of the flow problem and the interface energy.
#[derive(Clone)]
pub struct PhysParams {
    /// Viscosity.
    pub mu: f64,
    /// Impermeability ceiling: the inverse-permeability is
    /// `alpha_max·(1−φ)²`, zero in fluid (φ=1) and `alpha_max` in solid.
    pub alpha_max: f64,
    /// Interface width of the design field.
    pub epsilon: f64,
    /// Weight of the interface (perimeter) energy.
    pub gamma: f64,
    /// Body force; `None` means zero.
    pub body_force: Option<VectorFn>,
}

impl PhysParams {
    /// Inverse permeability at design value `phi`.
    pub fn alpha(&self, phi: f64) -> f64 {
        self.alpha_max * (1.0 - phi) * (1.0 - phi)
    }

    /// Derivative of [`Self::alpha`] in `phi`.
    pub fn alpha_prime(&self, phi: f64) -> f64 {
        -2.0 * self.alpha_max * (1.0 - phi)
    }

    pub fn force_at(&self, x: [f64; 2]) -> [f64; 2] {
        match &self.body_force {
            Some(f) => f(x),
            None => [0.0, 0.0],
        }
    }
}

impl Default for PhysParams {
    fn default() -> Self {
        PhysParams { mu: 1.0, alpha_max: 1e4, epsilon: 1e-2, gamma: 1e-2, body_force: None }
    }
}

impl fmt::Debug for PhysParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhysParams")
            .field("mu", &self.mu)
            .field("alpha_max", &self.alpha_max)
            .field("epsilon", &self.epsilon)
            .field("gamma", &self.gamma)
            .field("body_force", &self.body_force.as_ref().map(|_| "..."))
            .finish()
    }
}

/// The assembled saddle-point system in physical (unreduced) form.
pub struct SaddleSystem {
    pub n_velocity: usize,
    pub n_pressure: usize,
    /// Symmetric momentum block over all CR dofs (dof `2e+c` = component `c`
    /// on edge `e`): viscous stiffness plus design-weighted mass.
    pub velocity_block: Csc,
    /// Divergence rows, one per element: entry `[k][c]` multiplies dof
    /// `2·element_edges[t][k] + c` and equals `−|T| ∂ψ_k/∂x_c`, so the row
    /// dotted with the velocity dofs is `−|T| div u|_T`.
    pub div_rows: Vec<[[f64; 2]; 3]>,
    /// Velocity load vector `∫ f·ψ` (zero when there is no body force).
    pub load: Vec<f64>,
    /// Dirichlet dof values (edge means of the boundary data), ascending.
    pub constrained: Vec<(usize, f64)>,
    /// No outlet edge anywhere: pressure needs a mean-zero gauge.
    pub gauge: bool,
}

/// Assembles the state system for the design `phi`. `g` is the Dirichlet
/// velocity data (inlet profiles, zero on walls).
pub fn assemble(
    mesh: &Mesh,
    phi: &PhaseField,
    phys: &PhysParams,
    g: &dyn Fn([f64; 2]) -> [f64; 2],
) -> Result<SaddleSystem, Error> {
    let n_velocity = 2 * mesh.n_edges();
    let mut gauge = true;
    for e in 0..mesh.n_edges() {
        if mesh.is_boundary_edge(e) && mesh.boundary_tag[e].is_none() {
            let m = mesh.edge_midpoint(e);
            return Err(Error::UntaggedBoundary(m[0], m[1]));
        }
        if mesh.boundary_tag[e] == Some(BoundaryTag::Outlet) {
            gauge = false;
        }
    }

    let mut triplets = Triplets::new(n_velocity);
    let mut div_rows = Vec::with_capacity(mesh.n_elements());
    let mut load = vec![0.0; n_velocity];
    for t in 0..mesh.n_elements() {
        let pts = mesh.tri_points(t);
        let area = mesh.area(t);
        let grads = bary_gradients(&pts, area);
        let phi_loc = phi.local(mesh, t);
        let edges = mesh.element_edges[t];

        // Design-weighted mass: ∫ α(φ) ψ_k ψ_l, exact (integrand degree 4).
        let mut mass = [[0.0; 3]; 3];
        for q in TRI_DEGREE_4 {
            let a_q = phys.alpha(
                phi_loc[0] * q.bary[0] + phi_loc[1] * q.bary[1] + phi_loc[2] * q.bary[2],
            );
            let psi = [1.0 - 2.0 * q.bary[0], 1.0 - 2.0 * q.bary[1], 1.0 - 2.0 * q.bary[2]];
            for k in 0..3 {
                for l in k..3 {
                    mass[k][l] += area * q.weight * a_q * psi[k] * psi[l];
                }
            }
        }
        for k in 0..3 {
            for l in k..3 {
                // ∇ψ = −2∇λ, so the stiffness entry is 4|T| ∇λ_k·∇λ_l.
                let stiff = 4.0 * area * (grads[k][0] * grads[l][0] + grads[k][1] * grads[l][1]);
                let v = phys.mu * stiff + mass[k][l];
                for c in 0..2 {
                    triplets.push(2 * edges[k] + c, 2 * edges[l] + c, v);
                    if l != k {
                        triplets.push(2 * edges[l] + c, 2 * edges[k] + c, v);
                    }
                }
            }
        }

        let mut row = [[0.0; 2]; 3];
        for k in 0..3 {
            for c in 0..2 {
                row[k][c] = 2.0 * area * grads[k][c];
            }
        }
        div_rows.push(row);

        if phys.body_force.is_some() {
            for q in TRI_DEGREE_6 {
                let x = [
                    q.bary[0] * pts[0][0] + q.bary[1] * pts[1][0] + q.bary[2] * pts[2][0],
                    q.bary[0] * pts[0][1] + q.bary[1] * pts[1][1] + q.bary[2] * pts[2][1],
                ];
                let f = phys.force_at(x);
                for k in 0..3 {
                    let psi = 1.0 - 2.0 * q.bary[k];
                    for c in 0..2 {
                        load[2 * edges[k] + c] += area * q.weight * f[c] * psi;
                    }
                }
            }
        }
    }

    let constrained = cr_boundary_values(g, mesh, &[BoundaryTag::Dirichlet]);
    Ok(SaddleSystem {
        n_velocity,
        n_pressure: mesh.n_elements(),
        velocity_block: triplets.into_csc(),
        div_rows,
        load,
        constrained,
        gauge,
    })
}

/// The solved state.
pub struct StateSolution {
    pub u: VelocityField,
    pub p: PressureField,
    /// Final relative residual of the reduced linear system.
    pub residual: f64,
}

/// Reusable solve context for one mesh: the reduced system's sparsity, the
/// fill-reducing ordering, and the symbolic factorization survive changes of
/// the design field (only matrix *values* change between outer iterations).
pub struct StokesCache {
    n_free_velocity: usize,
    n_total: usize,
    gauge_row: Option<usize>,
    /// Per velocity dof: reduced index, or `None` when Dirichlet-constrained.
    free_index: Vec<Option<usize>>,
    boundary_value: Vec<f64>,
    /// Reduced matrix: triplet structure recorded on construction, values
    /// regathered into `vals` each solve.
    pattern: Csc,
    slots: Vec<usize>,
    vals: Vec<f64>,
    solver: SymmetricSolver,
    fresh_factor: bool,
}

impl StokesCache {
    fn note(gauge: bool) -> &'static str {
        if gauge {
            "no outlet tagged; pressure pinned by a mean-zero gauge row"
        } else {
            "traction-free outlet present"
        }
    }

    pub fn new(mesh: &Mesh, sys: &SaddleSystem) -> Result<StokesCache, Error> {
        let nv = sys.n_velocity;
        let mut free_index = vec![None; nv];
        let mut boundary_value = vec![0.0; nv];
        let mut is_constrained = vec![false; nv];
        for &(dof, val) in &sys.constrained {
            is_constrained[dof] = true;
            boundary_value[dof] = val;
        }
        let mut n_free = 0;
        for dof in 0..nv {
            if !is_constrained[dof] {
                free_index[dof] = Some(n_free);
                n_free += 1;
            }
        }
        let n_total = n_free + sys.n_pressure + usize::from(sys.gauge);
        let gauge_row = sys.gauge.then_some(n_free + sys.n_pressure);

        let (rows, cols, vals) = gather(mesh, sys, &free_index, n_free, gauge_row);
        let (mut pattern, slots) = csc_pattern(n_total, &rows, &cols);
        scatter(&slots, &vals, &mut pattern.values);

        // Geometry drives the ordering: edge midpoints for velocity dofs,
        // centroids for pressures; the dense gauge row is eliminated last.
        let mut coords = vec![[0.0; 2]; n_total];
        for e in 0..mesh.n_edges() {
            for c in 0..2 {
                if let Some(i) = free_index[2 * e + c] {
                    coords[i] = mesh.edge_midpoint(e);
                }
            }
        }
        let mut neg = vec![false; n_total];
        for t in 0..mesh.n_elements() {
            let pts = mesh.tri_points(t);
            coords[n_free + t] =
                [(pts[0][0] + pts[1][0] + pts[2][0]) / 3.0, (pts[0][1] + pts[1][1] + pts[2][1]) / 3.0];
            neg[n_free + t] = true;
        }
        let force_last: Vec<usize> = match gauge_row {
            Some(r) => {
                neg[r] = true;
                vec![r]
            }
            None => Vec::new(),
        };
        let solver = SymmetricSolver::new(&pattern, &coords, Some(&neg), &force_last)
            .map_err(|source| Error::StateSolve { note: Self::note(sys.gauge), source })?;

        Ok(StokesCache {
            n_free_velocity: n_free,
            n_total,
            gauge_row,
            free_index,
            boundary_value,
            pattern,
            slots,
            vals,
            solver,
            fresh_factor: true,
        })
    }

    /// Solves the reduced system for `sys` (which must come from the same
    /// mesh and boundary data as the system the cache was built with).
    pub fn solve(&mut self, mesh: &Mesh, sys: &SaddleSystem) -> Result<StateSolution, Error> {
        let note = Self::note(sys.gauge);
        if !self.fresh_factor {
            let (_, _, vals) = gather(mesh, sys, &self.free_index, self.n_free_velocity, self.gauge_row);
            assert_eq!(vals.len(), self.vals.len(), "system structure changed under the cache");
            self.vals = vals;
            self.pattern.values.iter_mut().for_each(|v| *v = 0.0);
            scatter(&self.slots, &self.vals, &mut self.pattern.values);
            self.solver
                .refactor(&self.pattern.values)
                .map_err(|source| Error::StateSolve { note, source })?;
        }
        self.fresh_factor = false;

        // Reduced right-hand side: loads on free dofs minus the columns of
        // the constrained dofs times their boundary values.
        let mut rhs = vec![0.0; self.n_total];
        let a = &sys.velocity_block;
        for dof in 0..sys.n_velocity {
            if let Some(i) = self.free_index[dof] {
                rhs[i] = sys.load[dof];
            }
        }
        for j in 0..sys.n_velocity {
            let gj = self.boundary_value[j];
            if self.free_index[j].is_none() && gj != 0.0 {
                for p in a.colptr[j]..a.colptr[j + 1] {
                    if let Some(i) = self.free_index[a.rowidx[p]] {
                        rhs[i] -= a.values[p] * gj;
                    }
                }
            }
        }
        for (t, row) in sys.div_rows.iter().enumerate() {
            let edges = mesh.element_edges[t];
            for k in 0..3 {
                for c in 0..2 {
                    let dof = 2 * edges[k] + c;
                    if self.free_index[dof].is_none() {
                        rhs[self.n_free_velocity + t] -= row[k][c] * self.boundary_value[dof];
                    }
                }
            }
        }

        let (x, residual) = self
            .solver
            .solve(&self.pattern, &rhs)
            .map_err(|source| Error::StateSolve { note, source })?;

        let mut u = VelocityField { edge_dofs: vec![0.0; sys.n_velocity] };
        for dof in 0..sys.n_velocity {
            u.edge_dofs[dof] = match self.free_index[dof] {
                Some(i) => x[i],
                None => self.boundary_value[dof],
            };
        }
        let p = PressureField {
            cell_values: x[self.n_free_velocity..self.n_free_velocity + sys.n_pressure].to_vec(),
        };
        Ok(StateSolution { u, p, residual })
    }
}

/// Reduced-system triplets in a fixed deterministic order; rows/cols depend
/// only on the structure, values on the current design.
fn gather(
    mesh: &Mesh,
    sys: &SaddleSystem,
    free_index: &[Option<usize>],
    n_free: usize,
    gauge_row: Option<usize>,
) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
    let a = &sys.velocity_block;
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    for j in 0..sys.n_velocity {
        if let Some(fj) = free_index[j] {
            for p in a.colptr[j]..a.colptr[j + 1] {
                if let Some(fi) = free_index[a.rowidx[p]] {
                    rows.push(fi);
                    cols.push(fj);
                    vals.push(a.values[p]);
                }
            }
        }
    }
    for (t, row) in sys.div_rows.iter().enumerate() {
        let edges = mesh.element_edges[t];
        for k in 0..3 {
            for c in 0..2 {
                if let Some(fi) = free_index[2 * edges[k] + c] {
                    rows.push(n_free + t);
                    cols.push(fi);
                    vals.push(row[k][c]);
                    rows.push(fi);
                    cols.push(n_free + t);
                    vals.push(row[k][c]);
                }
            }
        }
        // Explicit zero so the factorization always has a diagonal slot.
        rows.push(n_free + t);
        cols.push(n_free + t);
        vals.push(0.0);
    }
    if let Some(r) = gauge_row {
        for t in 0..sys.n_pressure {
            let area = mesh.area(t);
            rows.push(r);
            cols.push(n_free + t);
            vals.push(area);
            rows.push(n_free + t);
            cols.push(r);
            vals.push(area);
        }
        rows.push(r);
        cols.push(r);
        vals.push(0.0);
    }
    (rows, cols, vals)
}

/// One-shot state solve (builds and drops the cache).
pub fn solve_state(mesh: &Mesh, sys: &SaddleSystem) -> Result<StateSolution, Error> {
    StokesCache::new(mesh, sys)?.solve(mesh, sys)
}

/// The additive parts of the objective; `total` is their sum. `body` carries
/// its sign (it enters as `−(f, u)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParts {
    /// ½ ∫ α(φ) |u|².
    pub brinkman: f64,
    /// (μ/2) ‖∇u‖² over elements.
    pub dissipation: f64,
    /// −(f, u).
    pub body: f64,
    /// γ [ (ε/2) ∫ |∇φ|² + (1/ε) ∫ φ²(1−φ)²/4 ].
    pub ginzburg_landau: f64,
}

impl ObjectiveParts {
    pub fn total(&self) -> f64 {
        self.brinkman + self.dissipation + self.body + self.ginzburg_landau
    }

    pub fn zero() -> Self {
        ObjectiveParts { brinkman: 0.0, dissipation: 0.0, body: 0.0, ginzburg_landau: 0.0 }
    }
}

/// Evaluates the objective on a design/state pair.
pub fn objective(mesh: &Mesh, phi: &PhaseField, u: &VelocityField, phys: &PhysParams) -> ObjectiveParts {
    let mut parts = ObjectiveParts::zero();
    for t in 0..mesh.n_elements() {
        let pts = mesh.tri_points(t);
        let area = mesh.area(t);
        let grads = bary_gradients(&pts, area);
        let phi_loc = phi.local(mesh, t);
        let u_loc = u.local(mesh, t);

        let gu = velocity_gradient(&u_loc, &grads);
        let frob = gu[0][0] * gu[0][0] + gu[0][1] * gu[0][1] + gu[1][0] * gu[1][0] + gu[1][1] * gu[1][1];
        parts.dissipation += 0.5 * phys.mu * area * frob;

        let mut gphi = [0.0; 2];
        for k in 0..3 {
            gphi[0] += phi_loc[k] * grads[k][0];
            gphi[1] += phi_loc[k] * grads[k][1];
        }
        let mut gl = 0.5 * phys.epsilon * area * (gphi[0] * gphi[0] + gphi[1] * gphi[1]);

        for q in TRI_DEGREE_4 {
            let phi_q = phi_loc[0] * q.bary[0] + phi_loc[1] * q.bary[1] + phi_loc[2] * q.bary[2];
            let psi = [1.0 - 2.0 * q.bary[0], 1.0 - 2.0 * q.bary[1], 1.0 - 2.0 * q.bary[2]];
            let mut uq = [0.0; 2];
            for k in 0..3 {
                uq[0] += u_loc[k][0] * psi[k];
                uq[1] += u_loc[k][1] * psi[k];
            }
            parts.brinkman +=
                0.5 * area * q.weight * phys.alpha(phi_q) * (uq[0] * uq[0] + uq[1] * uq[1]);
            gl += area * q.weight * double_well(phi_q) / phys.epsilon;
        }
        parts.ginzburg_landau += phys.gamma * gl;

        if phys.body_force.is_some() {
            parts.body -= integrate_tri(&TRI_DEGREE_6, &pts, area, |x, bary| {
                let f = phys.force_at(x);
                let uq = u.at(mesh, t, bary);
                f[0] * uq[0] + f[1] * uq[1]
            });
        }
    }
    parts
}

/// Signed volume error `∫φ − β·|Ω|` (exact for the P1 design field).
pub fn volume_gap(mesh: &Mesh, phi: &PhaseField, beta: f64) -> f64 {
    let mut vol = 0.0;
    let mut total = 0.0;
    for t in 0..mesh.n_elements() {
        let area = mesh.area(t);
        let loc = phi.local(mesh, t);
        vol += area * (loc[0] + loc[1] + loc[2]) / 3.0;
        total += area;
    }
    vol - beta * total
}

/// L² norm of the broken divergence (constant per element).
pub fn divergence_l2(mesh: &Mesh, u: &VelocityField) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_elements() {
        let area = mesh.area(t);
        let grads = bary_gradients(&mesh.tri_points(t), area);
        let gu = velocity_gradient(&u.local(mesh, t), &grads);
        let div = gu[0][0] + gu[1][1];
        acc += area * div * div;
    }
    acc.sqrt()
}

/// Broken H¹ norm √(‖∇u‖² + ‖u‖²).
pub fn broken_h1_norm(mesh: &Mesh, u: &VelocityField) -> f64 {
    let mut acc = 0.0;
    for t in 0..mesh.n_elements() {
        let pts = mesh.tri_points(t);
        let area = mesh.area(t);
        let grads = bary_gradients(&pts, area);
        let u_loc = u.local(mesh, t);
        let gu = velocity_gradient(&u_loc, &grads);
        acc += area
            * (gu[0][0] * gu[0][0] + gu[0][1] * gu[0][1] + gu[1][0] * gu[1][0] + gu[1][1] * gu[1][1]);
        acc += integrate_tri(&TRI_DEGREE_4, &pts, area, |_, bary| {
            let uq = u.at(mesh, t, bary);
            uq[0] * uq[0] + uq[1] * uq[1]
        });
    }
    acc.sqrt()
}
