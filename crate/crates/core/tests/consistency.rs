//! Galerkin consistency of solved flow states.
//!
//! For any discretely divergence-free test field v vanishing on the Dirichlet
//! boundary, the flow residual μ(∇u, ∇v) + (α(φ)u, v) − (f, v) of the solved
//! state must vanish to solver precision — the pressure term drops because v
//! is in the kernel of the divergence operator. The kernel basis is computed
//! by dense eigendecomposition on small meshes. Alongside: elementwise
//! divergence and interior edge-jump means of every solved field are zero.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use topoflow::fespace::{bary_gradients, velocity_gradient, PhaseField, VelocityField};
use topoflow::manufactured::manufactured_problem;
use topoflow::mesh::{Mesh, Rect};
use topoflow::problem::{InitField, Inlet, ProblemSpec};
use topoflow::quad::{integrate_tri, TRI_DEGREE_6};
use topoflow::stokes::{
    assemble, broken_h1_norm, solve_state, PhysParams, SaddleSystem, StateSolution,
};

/// Pipe with a parabolic inflow at x = 0 and an outlet at x = 1; no body
/// force, but a sloped design so the zeroth-order (Brinkman) term is live.
fn channel_problem(n: usize) -> ProblemSpec {
    ProblemSpec {
        name: "consistency-channel".into(),
        domain: Rect::UNIT,
        grid: (n, n),
        inlets: vec![Inlet {
            on: Arc::new(|x| x[0] < 1e-12),
            velocity: Arc::new(|x| [4.0 * x[1] * (1.0 - x[1]), 0.0]),
        }],
        outlet: Arc::new(|x| x[0] > 1.0 - 1e-12),
        phys: PhysParams::default(),
        opt: Default::default(),
        init: InitField::Constant(1.0),
    }
}

struct Solved {
    mesh: Mesh,
    phi: PhaseField,
    phys: PhysParams,
    sys: SaddleSystem,
    state: StateSolution,
}

fn solve(spec: &ProblemSpec, phi_of: impl Fn(&Mesh) -> PhaseField) -> Solved {
    let mesh = spec.build_initial_mesh().unwrap();
    let phi = phi_of(&mesh);
    let sys = assemble(&mesh, &phi, &spec.phys, &|x| spec.dirichlet_data(x)).unwrap();
    let state = solve_state(&mesh, &sys).unwrap();
    Solved { mesh, phi, phys: spec.phys.clone(), sys, state }
}

fn fixtures() -> Vec<Solved> {
    vec![
        // Pure Dirichlet + body force + gauge, flat fluid design.
        solve(&manufactured_problem(4), |m| PhaseField::constant(m, 1.0)),
        // Inflow/outlet, no body force, sloped design (Brinkman term live).
        solve(&channel_problem(5), |m| {
            PhaseField::from_fn(m, |x| 0.3 + 0.6 * x[0] * x[1])
        }),
    ]
}

/// Basis of {v free: div v = 0 elementwise} as columns, via the null
/// eigenspace of Gram(Bᵀ) restricted to unconstrained dofs.
fn divergence_kernel(mesh: &Mesh, sys: &SaddleSystem) -> (Vec<usize>, DMatrix<f64>) {
    let constrained: Vec<usize> = sys.constrained.iter().map(|&(d, _)| d).collect();
    let free: Vec<usize> =
        (0..sys.n_velocity).filter(|d| !constrained.contains(d)).collect();
    let col_of: std::collections::HashMap<usize, usize> =
        free.iter().enumerate().map(|(c, &d)| (d, c)).collect();

    let mut b = DMatrix::zeros(sys.n_pressure, free.len());
    for (t, row) in sys.div_rows.iter().enumerate() {
        let ee = mesh.element_edges[t];
        for k in 0..3 {
            for c in 0..2 {
                if let Some(&col) = col_of.get(&(2 * ee[k] + c)) {
                    b[(t, col)] += row[k][c];
                }
            }
        }
    }
    let gram = b.transpose() * &b;
    let eig = SymmetricEigen::new(gram);
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut kernel_cols = Vec::new();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= 1e-12 * lambda_max {
            kernel_cols.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    assert!(
        !kernel_cols.is_empty(),
        "divergence-free subspace should be nontrivial on {} free dofs",
        free.len()
    );
    let mut basis = DMatrix::zeros(free.len(), kernel_cols.len());
    for (j, col) in kernel_cols.iter().enumerate() {
        basis.set_column(j, col);
    }
    (free, basis)
}

/// μ(∇u, ∇v) + (α(φ)u, v) − (f, v), along with the scale Σ|terms| for a
/// relative tolerance.
fn flow_residual(s: &Solved, v: &VelocityField) -> (f64, f64) {
    let mut viscous = 0.0;
    let mut zeroth = 0.0;
    let mut load = 0.0;
    for t in 0..s.mesh.n_elements() {
        let pts = s.mesh.tri_points(t);
        let area = s.mesh.area(t);
        let grads = bary_gradients(&pts, area);
        let gu = velocity_gradient(&s.state.u.local(&s.mesh, t), &grads);
        let gv = velocity_gradient(&v.local(&s.mesh, t), &grads);
        let mut dot = 0.0;
        for c in 0..2 {
            for d in 0..2 {
                dot += gu[c][d] * gv[c][d];
            }
        }
        viscous += s.phys.mu * area * dot;
        let phi_loc = s.phi.local(&s.mesh, t);
        zeroth += integrate_tri(&TRI_DEGREE_6, &pts, area, |_, bary| {
            let phi_q = phi_loc[0] * bary[0] + phi_loc[1] * bary[1] + phi_loc[2] * bary[2];
            let uq = s.state.u.at(&s.mesh, t, bary);
            let vq = v.at(&s.mesh, t, bary);
            s.phys.alpha(phi_q) * (uq[0] * vq[0] + uq[1] * vq[1])
        });
        load += integrate_tri(&TRI_DEGREE_6, &pts, area, |x, bary| {
            let f = s.phys.force_at(x);
            let vq = v.at(&s.mesh, t, bary);
            f[0] * vq[0] + f[1] * vq[1]
        });
    }
    (viscous + zeroth - load, viscous.abs() + zeroth.abs() + load.abs())
}

#[test]
fn residual_annihilates_divergence_free_test_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for s in fixtures() {
        assert!(
            s.mesh.n_elements() <= 100,
            "dense kernel computation is meant for small meshes"
        );
        let (free, basis) = divergence_kernel(&s.mesh, &s.sys);
        for _ in 0..20 {
            let coeffs: Vec<f64> = (0..basis.ncols()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut v = VelocityField::zeros(&s.mesh);
            for (row, &dof) in free.iter().enumerate() {
                let mut val = 0.0;
                for (j, &c) in coeffs.iter().enumerate() {
                    val += basis[(row, j)] * c;
                }
                v.edge_dofs[dof] = val;
            }
            // The combination really is divergence-free and supported away
            // from the Dirichlet boundary.
            for (t, row) in s.sys.div_rows.iter().enumerate() {
                let ee = s.mesh.element_edges[t];
                let mut div = 0.0;
                for k in 0..3 {
                    for c in 0..2 {
                        div += row[k][c] * v.edge_dofs[2 * ee[k] + c];
                    }
                }
                let h1 = broken_h1_norm(&s.mesh, &v);
                assert!(div.abs() <= 1e-9 * h1.max(1e-30), "kernel field leaks divergence");
            }
            let (residual, scale) = flow_residual(&s, &v);
            assert!(
                residual.abs() <= 1e-9 * scale.max(1e-12),
                "⟨R₂, v⟩ = {residual} against scale {scale} on {}",
                s.mesh.n_elements()
            );
        }
    }
}

#[test]
fn solved_states_are_elementwise_divergence_free() {
    for s in fixtures() {
        let h1 = broken_h1_norm(&s.mesh, &s.state.u);
        for (t, row) in s.sys.div_rows.iter().enumerate() {
            let ee = s.mesh.element_edges[t];
            let area = s.mesh.area(t);
            let mut div_weighted = 0.0;
            for k in 0..3 {
                for c in 0..2 {
                    div_weighted += row[k][c] * s.state.u.edge_dofs[2 * ee[k] + c];
                }
            }
            // div_rows carries the ∫_T div v functional; divide out the area
            // to get the pointwise (constant) divergence.
            let div = div_weighted / area;
            assert!(div.abs() <= 1e-9 * h1, "element {t}: div = {div}, ‖u‖ = {h1}");
        }
    }
}

#[test]
fn solved_states_have_zero_mean_jumps_on_interior_edges() {
    // CR fields are single-valued at edge midpoints, so the jump (linear per
    // edge) integrates to zero; 2-point Gauss is exact for it.
    let gauss = [-1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()];
    for s in fixtures() {
        let scale: f64 =
            s.state.u.edge_dofs.iter().fold(1.0, |m, &v| m.max(v.abs()));
        for e in 0..s.mesh.n_edges() {
            let [t_plus, t_minus] = s.mesh.edge_elements[e];
            let (Some(tp), Some(tm)) = (t_plus, t_minus) else { continue };
            let [a, b] = s.mesh.edges[e];
            let (pa, pb) = (s.mesh.vertices[a], s.mesh.vertices[b]);
            let pts_p = s.mesh.tri_points(tp);
            let pts_m = s.mesh.tri_points(tm);
            for c in 0..2 {
                let mut mean = 0.0;
                for &g in &gauss {
                    let x = [
                        0.5 * (pa[0] + pb[0]) + 0.5 * g * (pb[0] - pa[0]),
                        0.5 * (pa[1] + pb[1]) + 0.5 * g * (pb[1] - pa[1]),
                    ];
                    let vp = s.state.u.at(&s.mesh, tp, topoflow::fespace::barycentric(&pts_p, x));
                    let vm = s.state.u.at(&s.mesh, tm, topoflow::fespace::barycentric(&pts_m, x));
                    mean += 0.5 * (vp[c] - vm[c]);
                }
                assert!(
                    mean.abs() <= 1e-12 * scale,
                    "edge {e} component {c}: jump mean {mean}"
                );
            }
        }
    }
}
