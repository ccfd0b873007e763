//! Augmented-Lagrangian design optimizer: an outer loop updates the volume
//! multipliers, an inner loop advances a semi-implicit gradient flow of the
//! design field with the flow state frozen.
//!
//! Each inner step solves one SPD system
//!
//! ```text
//! [(1/Δt + S̃/ε) M + γ ε K] φ⁺ = (1/Δt + S̃/ε) M φ − q(φ, u)
//! ```
//!
//! where `q` collects the sensitivity of the objective (double-well slope,
//! Brinkman sensitivity) and of the volume terms, followed by a nodal clamp
//! onto `[0, 1]`. The `S̃/ε` mass shift stabilizes the explicit treatment of
//! the nonlinear terms.
//!
//! For the volume terms the driver uses an implicit variant: the multiplier
//! contribution `(ℓ + ζ W(φ⁺)) ∫ψ_i` is kept on the unknown side — with the
//! clamp folded in — and reduced to one scalar root-find per step (see
//! [`PhaseSolver::step_implicit_volume`]). The textbook explicit update is
//! exposed as [`gradient_flow_step`]; it is first-order equivalent but
//! becomes unconditionally unstable once `Δt·ζ·|Ω|` outgrows the stability
//! region, which the growing penalty `ζ ← κζ` eventually guarantees, and its
//! multiplier update integrates the clamp's feasibility drift, driving `ℓ`
//! far past the constraint's actual shadow price.

use std::time::Instant;

use crate::estimator;
use crate::fespace::{
    p1_mass_matrix, p1_stiffness_matrix, p1_unit_load, PhaseField, PressureField, VelocityField,
};
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::quad::TRI_DEGREE_4;
use crate::sparse::{Csc, SymmetricSolver};
use crate::stokes::{assemble, ObjectiveParts, PhysParams, StokesCache, volume_gap};
use crate::Error;

/// Optimizer parameters.
#[derive(Debug, Clone, Copy)]
pub struct OptParams {
    /// Target volume fraction.
    pub beta: f64,
    /// Gradient-flow pseudo time step.
    pub dt: f64,
    /// Stabilization coefficient multiplying the `1/ε` mass shift.
    pub s_tilde: f64,
    /// Outer (multiplier) iterations per mesh.
    pub n_outer: usize,
    /// Inner (gradient-flow) steps per outer iteration.
    pub n_inner: usize,
    /// Initial volume multiplier.
    pub ell0: f64,
    /// Initial volume penalty.
    pub zeta0: f64,
    /// Penalty growth factor per outer iteration.
    pub kappa: f64,
}

impl Default for OptParams {
    fn default() -> Self {
        OptParams {
            beta: 0.5,
            dt: 1e-4,
            s_tilde: 0.25,
            n_outer: 50,
            n_inner: 10,
            ell0: 0.0,
            zeta0: 100.0,
            kappa: 1.1,
        }
    }
}

/// One outer iteration's log entry.
#[derive(Debug, Clone, Copy)]
pub struct OuterRecord {
    pub level: usize,
    pub outer: usize,
    /// Augmented Lagrangian with the multipliers the iteration ran with.
    pub lagrangian: f64,
    pub objective: ObjectiveParts,
    pub volume_gap: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub n_vertices: usize,
    /// Wall-clock seconds since the run started.
    pub seconds: f64,
}

/// Multiplier state, carried across outer iterations and mesh levels.
#[derive(Debug, Clone)]
pub struct OptState {
    pub ell: f64,
    pub zeta: f64,
    pub history: Vec<OuterRecord>,
}

impl OptState {
    pub fn new(opt: &OptParams) -> Self {
        OptState { ell: opt.ell0, zeta: opt.zeta0, history: Vec::new() }
    }
}

/// Double-well density `¼ φ²(1−φ)²`.
pub fn double_well(phi: f64) -> f64 {
    let w = phi * (1.0 - phi);
    0.25 * w * w
}

/// Its derivative `½ φ(1−φ)(1−2φ)`.
pub fn double_well_prime(phi: f64) -> f64 {
    0.5 * phi * (1.0 - phi) * (1.0 - 2.0 * phi)
}

/// Core sensitivity load (no volume terms): entry `i` is
/// `∫ [ (γ/ε) w′(φ) + ½ α′(φ) |u|² ] ψ_i`.
pub fn sensitivity_core(
    mesh: &Mesh,
    phi: &PhaseField,
    u: &VelocityField,
    phys: &PhysParams,
) -> Vec<f64> {
    let mut q = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_elements() {
        let area = mesh.area(t);
        let phi_loc = phi.local(mesh, t);
        let u_loc = u.local(mesh, t);
        let verts = mesh.elements[t];
        for qp in TRI_DEGREE_4 {
            let phi_q =
                phi_loc[0] * qp.bary[0] + phi_loc[1] * qp.bary[1] + phi_loc[2] * qp.bary[2];
            let psi = [1.0 - 2.0 * qp.bary[0], 1.0 - 2.0 * qp.bary[1], 1.0 - 2.0 * qp.bary[2]];
            let mut uq = [0.0; 2];
            for k in 0..3 {
                uq[0] += u_loc[k][0] * psi[k];
                uq[1] += u_loc[k][1] * psi[k];
            }
            let density = phys.gamma / phys.epsilon * double_well_prime(phi_q)
                + 0.5 * phys.alpha_prime(phi_q) * (uq[0] * uq[0] + uq[1] * uq[1]);
            for k in 0..3 {
                q[verts[k]] += area * qp.weight * density * qp.bary[k];
            }
        }
    }
    q
}

/// The explicit remainder of the sensitivity when the Brinkman term's
/// φ-linear part rides in the operator (see [`PhaseSolver::with_brinkman`]):
/// entry `i` is `∫ [ (γ/ε) w′(φ) − q |u|² ] ψ_i`, using
/// `½α′(φ)|u|² = −q(1−φ)|u|² = −q|u|² + q|u|²·φ`.
pub fn sensitivity_split(
    mesh: &Mesh,
    phi: &PhaseField,
    u: &VelocityField,
    phys: &PhysParams,
) -> Vec<f64> {
    let mut q = vec![0.0; mesh.n_vertices()];
    for t in 0..mesh.n_elements() {
        let area = mesh.area(t);
        let phi_loc = phi.local(mesh, t);
        let u_loc = u.local(mesh, t);
        let verts = mesh.elements[t];
        for qp in TRI_DEGREE_4 {
            let phi_q =
                phi_loc[0] * qp.bary[0] + phi_loc[1] * qp.bary[1] + phi_loc[2] * qp.bary[2];
            let psi = [1.0 - 2.0 * qp.bary[0], 1.0 - 2.0 * qp.bary[1], 1.0 - 2.0 * qp.bary[2]];
            let mut uq = [0.0; 2];
            for k in 0..3 {
                uq[0] += u_loc[k][0] * psi[k];
                uq[1] += u_loc[k][1] * psi[k];
            }
            let density = phys.gamma / phys.epsilon * double_well_prime(phi_q)
                - phys.alpha_max * (uq[0] * uq[0] + uq[1] * uq[1]);
            for k in 0..3 {
                q[verts[k]] += area * qp.weight * density * qp.bary[k];
            }
        }
    }
    q
}

/// P1 mass matrix weighted by the Brinkman sensitivity slope `q |u(x)|²`:
/// entries `∫ q |u|² ψ_i ψ_j` (degree-4 quadrature, exact for the quartic
/// integrand). Shares the sparsity pattern of [`p1_mass_matrix`].
fn brinkman_mass(mesh: &Mesh, u: &VelocityField, phys: &PhysParams) -> Csc {
    let mut trip = crate::sparse::Triplets::new(mesh.n_vertices());
    for t in 0..mesh.n_elements() {
        let area = mesh.area(t);
        let u_loc = u.local(mesh, t);
        let verts = mesh.elements[t];
        let mut local = [[0.0; 3]; 3];
        for qp in TRI_DEGREE_4 {
            let psi = [1.0 - 2.0 * qp.bary[0], 1.0 - 2.0 * qp.bary[1], 1.0 - 2.0 * qp.bary[2]];
            let mut uq = [0.0; 2];
            for k in 0..3 {
                uq[0] += u_loc[k][0] * psi[k];
                uq[1] += u_loc[k][1] * psi[k];
            }
            let w = area * qp.weight * phys.alpha_max * (uq[0] * uq[0] + uq[1] * uq[1]);
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * qp.bary[i] * qp.bary[j];
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                trip.push(verts[i], verts[j], local[i][j]);
            }
        }
    }
    trip.into_csc()
}

/// Full sensitivity load including the volume terms evaluated at the current
/// design: core plus `(ℓ + ζ W(φ)) ∫ψ_i`.
pub fn sensitivity_source(
    mesh: &Mesh,
    phi: &PhaseField,
    u: &VelocityField,
    state: &OptState,
    phys: &PhysParams,
    opt: &OptParams,
) -> Vec<f64> {
    let mut q = sensitivity_core(mesh, phi, u, phys);
    let w = volume_gap(mesh, phi, opt.beta);
    let m = p1_unit_load(mesh);
    let factor = state.ell + state.zeta * w;
    for (qi, mi) in q.iter_mut().zip(&m) {
        *qi += factor * mi;
    }
    q
}

/// Factorized gradient-flow operator for one mesh, reusable across steps.
pub struct PhaseSolver {
    /// P1 mass matrix.
    pub mass: Csc,
    /// `A = (1/Δt + S̃/ε) M + γ ε K`.
    matrix: Csc,
    solver: SymmetricSolver,
    /// `∫ψ_i`.
    pub unit_load: Vec<f64>,
    pub total_area: f64,
    /// `1/Δt + S̃/ε`.
    pub mass_coeff: f64,
    /// `A⁻¹ m` for the rank-one volume update.
    a_inv_m: Vec<f64>,
    /// `mᵀ A⁻¹ m`.
    m_dot_a_inv_m: f64,
}

impl PhaseSolver {
    pub fn new(mesh: &Mesh, phys: &PhysParams, opt: &OptParams) -> Result<PhaseSolver, Error> {
        let mass = p1_mass_matrix(mesh);
        let stiffness = p1_stiffness_matrix(mesh);
        debug_assert_eq!(mass.colptr, stiffness.colptr);
        debug_assert_eq!(mass.rowidx, stiffness.rowidx);
        let c = 1.0 / opt.dt + opt.s_tilde / phys.epsilon;
        let mut matrix = mass.clone();
        for (v, (mv, kv)) in
            matrix.values.iter_mut().zip(mass.values.iter().zip(&stiffness.values))
        {
            *v = c * mv + phys.gamma * phys.epsilon * kv;
        }
        let solver = SymmetricSolver::new(&matrix, &mesh.vertices, None, &[])
            .map_err(Error::PhaseSolve)?;
        let unit_load = p1_unit_load(mesh);
        let total_area: f64 = (0..mesh.n_elements()).map(|t| mesh.area(t)).sum();
        let (a_inv_m, _) = solver.solve(&matrix, &unit_load).map_err(Error::PhaseSolve)?;
        let m_dot_a_inv_m = dot(&unit_load, &a_inv_m);
        Ok(PhaseSolver {
            mass,
            matrix,
            solver,
            unit_load,
            total_area,
            mass_coeff: c,
            a_inv_m,
            m_dot_a_inv_m,
        })
    }

    /// `(1/Δt + S̃/ε) M φ` — the right-hand side's history term.
    fn history_term(&self, phi: &PhaseField) -> Vec<f64> {
        let mut out = vec![0.0; phi.nodal_values.len()];
        self.mass.mul_vec(&phi.nodal_values, &mut out);
        for v in &mut out {
            *v *= self.mass_coeff;
        }
        out
    }

    /// One explicit-source step: solve `A φ⁺ = c M φ − source`, then clamp.
    pub fn step(&self, phi: &PhaseField, source: &[f64]) -> Result<PhaseField, Error> {
        let mut rhs = self.history_term(phi);
        for (r, s) in rhs.iter_mut().zip(source) {
            *r -= s;
        }
        let (mut x, _) = self.solver.solve(&self.matrix, &rhs).map_err(Error::PhaseSolve)?;
        for v in &mut x {
            *v = v.clamp(0.0, 1.0);
        }
        Ok(PhaseField { nodal_values: x })
    }

    /// One step with the volume terms implicit. Solves `A x = c M φ − q_core`
    /// once, then finds the scalar multiplier λ of the fixed point
    ///
    /// ```text
    /// φ⁺ = clamp(x − λ A⁻¹m),   λ = ℓ + ζ W(φ⁺),
    /// ```
    ///
    /// by bisection (the post-clamp volume is non-increasing in λ, so the
    /// scalar residual is strictly increasing). Folding the clamp into the
    /// scalar equation keeps the multiplier bookkeeping honest: `ℓ + ζW`
    /// evaluated at the returned design equals λ, so the outer update
    /// `ℓ ← ℓ + ζW` moves ℓ to the step's own shadow price instead of
    /// integrating the clamp's feasibility drift, which otherwise grows
    /// without bound once ζ is large. When no node clamps, λ has the closed
    /// form below and the step reproduces the Sherman–Morrison solution of
    /// `(A + ζ m mᵀ) φ⁺ = c M φ − q_core − (ℓ − ζ β |Ω|) m` exactly.
    pub fn step_implicit_volume(
        &self,
        phi: &PhaseField,
        q_core: &[f64],
        ell: f64,
        zeta: f64,
        beta: f64,
    ) -> Result<PhaseField, Error> {
        let mut rhs = self.history_term(phi);
        for (r, q) in rhs.iter_mut().zip(q_core) {
            *r -= q;
        }
        let (x, _) = self.solver.solve(&self.matrix, &rhs).map_err(Error::PhaseSolve)?;
        let target = beta * self.total_area;
        // Post-clamp volume gap of the candidate φ⁺(λ).
        let gap = |lambda: f64| -> f64 {
            let mut vol = 0.0;
            for ((xi, yi), mi) in x.iter().zip(&self.a_inv_m).zip(&self.unit_load) {
                vol += mi * (xi - lambda * yi).clamp(0.0, 1.0);
            }
            vol - target
        };
        let lambda = if zeta == 0.0 {
            ell
        } else {
            let residual = |l: f64| l - ell - zeta * gap(l);
            // The clamp-free root seeds the bracket.
            let b = dot(&self.unit_load, &x);
            let seed = (ell + zeta * (b - target)) / (1.0 + zeta * self.m_dot_a_inv_m);
            let mut step = 1.0 + 0.5 * seed.abs();
            let (mut lo, mut hi) = (seed - step, seed + step);
            while residual(lo) > 0.0 {
                lo -= step;
                step *= 2.0;
            }
            step = 1.0 + 0.5 * seed.abs();
            while residual(hi) < 0.0 {
                hi += step;
                step *= 2.0;
            }
            for _ in 0..200 {
                if hi - lo <= 1e-14 * (1.0 + lo.abs().max(hi.abs())) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if residual(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let values = x
            .iter()
            .zip(&self.a_inv_m)
            .map(|(xi, yi)| (xi - lambda * yi).clamp(0.0, 1.0))
            .collect();
        Ok(PhaseField { nodal_values: values })
    }
}

/// One semi-implicit gradient-flow step with a fully explicit source (the
/// source must already contain the volume terms, see [`sensitivity_source`]).
/// Builds and drops the factorization; the optimizer loop uses a
/// [`PhaseSolver`] instead.
pub fn gradient_flow_step(
    mesh: &Mesh,
    phi: &PhaseField,
    source: &[f64],
    phys: &PhysParams,
    opt: &OptParams,
) -> Result<PhaseField, Error> {
    PhaseSolver::new(mesh, phys, opt)?.step(phi, source)
}

/// Runs the full inner–outer optimization on one mesh. Each outer iteration
/// solves the flow state, performs `n_inner` gradient-flow steps with the
/// state frozen, then updates the multipliers (`ℓ += ζW`, `ζ *= κ`) and logs
/// one [`OuterRecord`] into `state.history` (kept up to the failure point if
/// a solve fails). Returns the optimized design and the last state solution.
#[allow(clippy::too_many_arguments)]
pub fn optimize_on_mesh(
    mesh: &Mesh,
    phi0: PhaseField,
    state: &mut OptState,
    phys: &PhysParams,
    opt: &OptParams,
    problem: &ProblemSpec,
    level: usize,
    run_start: Instant,
) -> Result<(PhaseField, VelocityField, PressureField), Error> {
    assert!(opt.n_outer >= 1, "at least one outer iteration");
    let phase = PhaseSolver::new(mesh, phys, opt)?;
    let g = |x: [f64; 2]| problem.dirichlet_data(x);
    let mut phi = phi0;
    let mut cache: Option<StokesCache> = None;
    let mut flow: Option<(VelocityField, PressureField)> = None;

    for outer in 0..opt.n_outer {
        let sys = assemble(mesh, &phi, phys, &g)?;
        let sol = match cache.as_mut() {
            Some(c) => c.solve(mesh, &sys)?,
            None => {
                let mut c = StokesCache::new(mesh, &sys)?;
                let sol = c.solve(mesh, &sys)?;
                cache = Some(c);
                sol
            }
        };

        for _ in 0..opt.n_inner {
            let q_core = sensitivity_core(mesh, &phi, &sol.u, phys);
            phi = phase.step_implicit_volume(&phi, &q_core, state.ell, state.zeta, opt.beta)?;
        }

        let w = volume_gap(mesh, &phi, opt.beta);
        let parts = crate::stokes::objective(mesh, &phi, &sol.u, phys);
        let ind = estimator::indicators(mesh, &phi, &sol.u, phys, problem);
        state.history.push(OuterRecord {
            level,
            outer,
            lagrangian: parts.total() + state.ell * w + 0.5 * state.zeta * w * w,
            objective: parts,
            volume_gap: w,
            eta1: ind.global1,
            eta2: ind.global2,
            n_vertices: mesh.n_vertices(),
            seconds: run_start.elapsed().as_secs_f64(),
        });
        state.ell += state.zeta * w;
        state.zeta *= opt.kappa;
        flow = Some((sol.u, sol.p));
    }

    let (u, p) = flow.expect("n_outer >= 1");
    Ok((phi, u, p))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::bary_gradients;
    use crate::mesh::{build_rect_mesh, BoundaryTag, Rect};
    use crate::problem::{InitField, Inlet, ProblemSpec};
    use std::sync::Arc;

    /// The discrete functional one frozen-source step minimizes (proximal
    /// descent): `γ(ε/2)‖∇φ‖² + ⟨q, φ⟩`. The double-well slope and the
    /// volume terms ride in the frozen source `q`, so they appear here
    /// through the linear pairing rather than through their own densities.
    fn frozen_step_energy(
        mesh: &Mesh,
        phi: &PhaseField,
        source: &[f64],
        phys: &PhysParams,
    ) -> f64 {
        let mut gl = 0.0;
        for t in 0..mesh.n_elements() {
            let pts = mesh.tri_points(t);
            let area = mesh.area(t);
            let grads = bary_gradients(&pts, area);
            let loc = phi.local(mesh, t);
            let mut gphi = [0.0; 2];
            for k in 0..3 {
                gphi[0] += loc[k] * grads[k][0];
                gphi[1] += loc[k] * grads[k][1];
            }
            gl += 0.5 * phys.epsilon * area * (gphi[0] * gphi[0] + gphi[1] * gphi[1]);
        }
        phys.gamma * gl + dot(source, &phi.nodal_values)
    }

    fn all_dirichlet(_: [f64; 2]) -> Option<BoundaryTag> {
        Some(BoundaryTag::Dirichlet)
    }

    fn grid(n: usize) -> Mesh {
        build_rect_mesh(Rect::UNIT, n, n, &all_dirichlet).unwrap()
    }

    fn quiet_state() -> OptState {
        OptState { ell: 0.0, zeta: 0.0, history: Vec::new() }
    }

    #[test]
    fn sensitivity_vanishes_at_well_bottoms() {
        // φ ≡ 1 and φ ≡ 0 with u = 0: w′ = 0 and |u|² = 0, no volume terms.
        let mesh = grid(3);
        let u = VelocityField::zeros(&mesh);
        let phys = PhysParams::default();
        let opt = OptParams::default();
        for v in [0.0, 1.0] {
            let phi = PhaseField::constant(&mesh, v);
            let mut state = quiet_state();
            state.ell = 0.0;
            let q = sensitivity_source(&mesh, &phi, &u, &state, &phys, &opt);
            assert!(q.iter().all(|&x| x.abs() < 1e-14), "phi = {v}");
        }
        // φ ≡ 1/2: w′(1/2) = 0 pointwise, so the double-well part drops too.
        let phi = PhaseField::constant(&mesh, 0.5);
        let q = sensitivity_source(&mesh, &phi, &u, &quiet_state(), &phys, &OptParams::default());
        assert!(q.iter().all(|&x| x.abs() < 1e-14));
    }

    #[test]
    fn sensitivity_of_solid_under_unit_flow() {
        // φ ≡ 0, u ≡ (1, 0): density is ½α′(0)·1 = −alpha_max everywhere,
        // so the load is −alpha_max times the unit load.
        let mesh = grid(3);
        let phi = PhaseField::constant(&mesh, 0.0);
        let mut u = VelocityField::zeros(&mesh);
        for e in 0..mesh.n_edges() {
            u.edge_dofs[2 * e] = 1.0;
        }
        let phys = PhysParams::default();
        let q = sensitivity_core(&mesh, &phi, &u, &phys);
        let m = p1_unit_load(&mesh);
        for (qi, mi) in q.iter().zip(&m) {
            let want = -phys.alpha_max * mi;
            assert!((qi - want).abs() < 1e-9 * phys.alpha_max, "{qi} vs {want}");
        }
    }

    #[test]
    fn constant_half_is_a_fixed_point_of_the_flow() {
        // φ ≡ 1/2 with zero source: Kφ = 0 and the clamp is inactive, so the
        // step returns φ exactly (up to solver accuracy).
        let mesh = grid(3);
        let phi = PhaseField::constant(&mesh, 0.5);
        let source = vec![0.0; mesh.n_vertices()];
        let phys = PhysParams::default();
        let opt = OptParams::default();
        let next = gradient_flow_step(&mesh, &phi, &source, &phys, &opt).unwrap();
        for v in &next.nodal_values {
            assert!((v - 0.5).abs() < 1e-11, "{v}");
        }
    }

    #[test]
    fn steps_stay_in_the_box() {
        // A violent source must still produce values in [0, 1].
        let mesh = grid(4);
        let phi = PhaseField::from_fn(&mesh, |x| (x[0]).clamp(0.0, 1.0));
        let mut source = vec![0.0; mesh.n_vertices()];
        for (i, s) in source.iter_mut().enumerate() {
            *s = if i % 2 == 0 { 1e6 } else { -1e6 };
        }
        let phys = PhysParams::default();
        let opt = OptParams::default();
        let next = gradient_flow_step(&mesh, &phi, &source, &phys, &opt).unwrap();
        assert!(next.nodal_values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(next.nodal_values.iter().any(|&v| v == 0.0));
        assert!(next.nodal_values.iter().any(|&v| v == 1.0));
    }

    #[test]
    fn step_size_controls_the_update_to_first_order() {
        // With a fixed smooth source and no clamping activity, halving Δt
        // halves ‖φ⁺ − φ‖ up to O(Δt²) corrections.
        let mesh = grid(4);
        let phi = PhaseField::constant(&mesh, 0.5);
        let m = p1_unit_load(&mesh);
        let source: Vec<f64> = m.iter().map(|mi| 0.05 * mi).collect();
        let phys = PhysParams::default();
        let mut opt = OptParams { dt: 1e-4, ..OptParams::default() };
        let d1 = {
            let next = gradient_flow_step(&mesh, &phi, &source, &phys, &opt).unwrap();
            diff_norm(&next, &phi)
        };
        opt.dt /= 2.0;
        let d2 = {
            let next = gradient_flow_step(&mesh, &phi, &source, &phys, &opt).unwrap();
            diff_norm(&next, &phi)
        };
        let ratio = d1 / d2;
        assert!((ratio - 2.0).abs() < 0.05, "ratio {ratio}");
    }

    fn diff_norm(a: &PhaseField, b: &PhaseField) -> f64 {
        a.nodal_values
            .iter()
            .zip(&b.nodal_values)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn implicit_volume_step_matches_dense_solve_without_clamping() {
        // With a gentle source the update stays strictly inside (0, 1); the
        // scalar fixed point then has its closed form and must reproduce a
        // dense solve of the rank-one-augmented system.
        let mesh = grid(3);
        let phys = PhysParams::default();
        let opt = OptParams::default();
        let solver = PhaseSolver::new(&mesh, &phys, &opt).unwrap();
        let phi = PhaseField::from_fn(&mesh, |x| 0.5 + 0.05 * x[0] * x[1]);
        let q: Vec<f64> = solver.unit_load.iter().map(|v| 0.3 * v).collect();
        let (ell, zeta, beta) = (2.0, 50.0, 0.5);
        let fast = solver.step_implicit_volume(&phi, &q, ell, zeta, beta).unwrap();
        assert!(
            fast.nodal_values.iter().all(|&v| v > 0.0 && v < 1.0),
            "fixture must keep the clamp inactive"
        );

        let n = mesh.n_vertices();
        let mut dense = nalgebra::DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            for p in solver.matrix.colptr[j]..solver.matrix.colptr[j + 1] {
                dense[(solver.matrix.rowidx[p], j)] = solver.matrix.values[p];
            }
        }
        for i in 0..n {
            for j in 0..n {
                dense[(i, j)] += zeta * solver.unit_load[i] * solver.unit_load[j];
            }
        }
        let shift = ell - zeta * beta * solver.total_area;
        let mut rhs = solver.history_term(&phi);
        for i in 0..n {
            rhs[i] -= q[i] + shift * solver.unit_load[i];
        }
        let x = dense
            .lu()
            .solve(&nalgebra::DVector::from_vec(rhs))
            .expect("dense solve");
        for i in 0..n {
            assert!((fast.nodal_values[i] - x[i]).abs() < 1e-9, "node {i}");
        }
    }

    #[test]
    fn implicit_volume_step_solves_the_clamped_fixed_point() {
        // A violent source activates both clamp bounds. The returned design
        // must satisfy φ⁺ = clamp(x − λ A⁻¹m) with λ = ℓ + ζ·W(φ⁺), where x
        // solves A x = cMφ − q.
        let mesh = grid(4);
        let phys = PhysParams::default();
        let opt = OptParams::default();
        let solver = PhaseSolver::new(&mesh, &phys, &opt).unwrap();
        let phi = PhaseField::from_fn(&mesh, |x| (x[0] * 0.8 + 0.1).clamp(0.0, 1.0));
        let q: Vec<f64> = solver
            .unit_load
            .iter()
            .enumerate()
            .map(|(i, mi)| mi * if i % 3 == 0 { 4e4 } else { -3e4 })
            .collect();
        let (ell, zeta, beta) = (5.0, 200.0, 0.5);
        let next = solver.step_implicit_volume(&phi, &q, ell, zeta, beta).unwrap();
        let at_lower = next.nodal_values.iter().filter(|&&v| v == 0.0).count();
        let at_upper = next.nodal_values.iter().filter(|&&v| v == 1.0).count();
        assert!(at_lower > 0 && at_upper > 0, "fixture must clamp on both sides");

        let mut rhs = solver.history_term(&phi);
        for (r, qi) in rhs.iter_mut().zip(&q) {
            *r -= qi;
        }
        let (x, _) = solver.solver.solve(&solver.matrix, &rhs).unwrap();
        let w = volume_gap(&mesh, &next, beta);
        let lambda = ell + zeta * w;
        for i in 0..mesh.n_vertices() {
            let want = (x[i] - lambda * solver.a_inv_m[i]).clamp(0.0, 1.0);
            assert!(
                (next.nodal_values[i] - want).abs() < 1e-9,
                "node {i}: {} vs {want}",
                next.nodal_values[i]
            );
        }
    }

    fn toy_problem(n: usize) -> ProblemSpec {
        ProblemSpec {
            name: "toy".into(),
            domain: Rect::UNIT,
            grid: (n, n),
            inlets: vec![Inlet {
                on: Arc::new(|x: [f64; 2]| x[0] < 1e-12),
                velocity: Arc::new(|x: [f64; 2]| [4.0 * x[1] * (1.0 - x[1]), 0.0]),
            }],
            outlet: Arc::new(|x: [f64; 2]| x[0] > 1.0 - 1e-12),
            phys: PhysParams::default(),
            opt: OptParams { n_outer: 1, n_inner: 0, ..OptParams::default() },
            init: InitField::Constant(0.5),
        }
    }

    #[test]
    fn outer_skeleton_updates_multipliers_only() {
        // n_outer = 1, n_inner = 0: the design is untouched and the
        // multiplier moves by ζ₀·W(φ₀).
        let spec = toy_problem(4);
        let mesh = spec.build_initial_mesh().unwrap();
        let phi0 = spec.initial_phase(&mesh, 0);
        let opt = OptParams { beta: 0.4, ..spec.opt };
        let mut state = OptState::new(&opt);
        let (phi, _, _) = optimize_on_mesh(
            &mesh,
            phi0.clone(),
            &mut state,
            &spec.phys,
            &opt,
            &spec,
            0,
            Instant::now(),
        )
        .unwrap();
        assert_eq!(phi.nodal_values, phi0.nodal_values);
        let w = volume_gap(&mesh, &phi0, opt.beta);
        assert!((state.ell - (opt.ell0 + opt.zeta0 * w)).abs() < 1e-12);
        assert!((state.zeta - opt.zeta0 * opt.kappa).abs() < 1e-12);
        assert_eq!(state.history.len(), 1);
        assert_eq!(state.history[0].outer, 0);
        assert_eq!(state.history[0].n_vertices, mesh.n_vertices());
    }

    #[test]
    fn penalty_growth_is_exactly_geometric() {
        let spec = toy_problem(3);
        let mesh = spec.build_initial_mesh().unwrap();
        let phi0 = spec.initial_phase(&mesh, 0);
        let opt = OptParams { n_outer: 7, n_inner: 1, ..spec.opt };
        let mut state = OptState::new(&opt);
        optimize_on_mesh(
            &mesh,
            phi0,
            &mut state,
            &spec.phys,
            &opt,
            &spec,
            0,
            Instant::now(),
        )
        .unwrap();
        let want = opt.zeta0 * opt.kappa.powi(7);
        assert!((state.zeta - want).abs() <= 1e-12 * want, "{} vs {want}", state.zeta);
        assert_eq!(state.history.len(), 7);
    }

    #[test]
    fn inner_flow_decreases_the_frozen_energy() {
        // With the source frozen and a conservative step size, the implicit
        // gradient step is a descent method for γ·(ε/2)‖∇φ‖² + ⟨q, φ⟩: each
        // step may not increase it (up to solver tolerance).
        let mesh = grid(6);
        let phys = PhysParams::default();
        let opt = OptParams { dt: 1e-6, ..OptParams::default() };
        let solver = PhaseSolver::new(&mesh, &phys, &opt).unwrap();
        let mut phi = PhaseField::from_fn(&mesh, |x| {
            (0.5 + 0.3 * (3.0 * x[0]).sin() * (2.0 * x[1]).cos()).clamp(0.0, 1.0)
        });
        let source: Vec<f64> = p1_unit_load(&mesh)
            .iter()
            .enumerate()
            .map(|(i, mi)| mi * (0.2 + 0.1 * ((i % 5) as f64)))
            .collect();
        let mut energy = frozen_step_energy(&mesh, &phi, &source, &phys);
        for _ in 0..8 {
            phi = solver.step(&phi, &source).unwrap();
            let next = frozen_step_energy(&mesh, &phi, &source, &phys);
            assert!(next <= energy + 1e-10, "{next} > {energy}");
            energy = next;
        }
    }
}
