//! Verification fixture with a known closed-form solution.
//!
//! On the unit square with pure fluid (φ ≡ 1, so the Brinkman term drops)
//! the pair
//!
//! ```text
//! u = ( a(x) b′(y), −a′(x) b(y) ),   p = x³ − 1/4,
//! a(s) = b(s) = s²(1−s)²
//! ```
//!
//! is exactly divergence-free, vanishes on the whole boundary, and has zero
//! mean pressure. The matching body force is `f = −μΔu + ∇p`. The study
//! solves on a sequence of uniformly refined meshes and reports broken
//! energy and L² velocity errors plus the global flow indicator, for rate
//! fitting.

use crate::estimator::eta2;
use crate::fespace::{bary_gradients, velocity_gradient, PhaseField};
use crate::mesh::{mesh_metrics, uniform_refine, Rect};
use crate::phasefield::OptParams;
use crate::problem::{InitField, ProblemSpec};
use crate::quad::{integrate_tri, TRI_DEGREE_6};
use crate::stokes::{assemble, solve_state, PhysParams};
use crate::Error;
use std::sync::Arc;

fn a(s: f64) -> f64 {
    s * s * (1.0 - s) * (1.0 - s)
}

fn a1(s: f64) -> f64 {
    2.0 * s * (1.0 - s) * (1.0 - 2.0 * s)
}

fn a2(s: f64) -> f64 {
    2.0 * (1.0 - 6.0 * s + 6.0 * s * s)
}

fn a3(s: f64) -> f64 {
    12.0 * (2.0 * s - 1.0)
}

pub fn exact_velocity(x: [f64; 2]) -> [f64; 2] {
    [a(x[0]) * a1(x[1]), -a1(x[0]) * a(x[1])]
}

/// `[c]` is ∇u_c, matching the layout of the discrete broken gradient.
pub fn exact_velocity_gradient(x: [f64; 2]) -> [[f64; 2]; 2] {
    [
        [a1(x[0]) * a1(x[1]), a(x[0]) * a2(x[1])],
        [-a2(x[0]) * a(x[1]), -a1(x[0]) * a1(x[1])],
    ]
}

pub fn exact_pressure(x: [f64; 2]) -> f64 {
    x[0] * x[0] * x[0] - 0.25
}

/// `f = −μΔu + ∇p` for the exact pair above.
pub fn forcing(mu: f64, x: [f64; 2]) -> [f64; 2] {
    let (x0, y) = (x[0], x[1]);
    [
        -mu * (a2(x0) * a1(y) + a(x0) * a3(y)) + 3.0 * x0 * x0,
        mu * (a3(x0) * a(y) + a1(x0) * a2(y)),
    ]
}

/// The verification problem: unit square, homogeneous Dirichlet data on the
/// whole boundary (so the pressure is gauged), pure fluid design.
pub fn manufactured_problem(n: usize) -> ProblemSpec {
    let mu = 1.0;
    ProblemSpec {
        name: "manufactured".into(),
        domain: Rect::UNIT,
        grid: (n, n),
        inlets: Vec::new(),
        outlet: Arc::new(|_| false),
        phys: PhysParams {
            mu,
            body_force: Some(Arc::new(move |x| forcing(mu, x))),
            ..PhysParams::default()
        },
        opt: OptParams::default(),
        init: InitField::Constant(1.0),
    }
}

/// One refinement level of the study.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceRow {
    pub n_vertices: usize,
    /// Largest edge length.
    pub h: f64,
    /// Broken energy error ‖∇(u − u_h)‖.
    pub energy_error: f64,
    /// L² velocity error ‖u − u_h‖.
    pub l2_error: f64,
    /// Global flow indicator on this level.
    pub eta2: f64,
}

/// Solves on `levels` uniformly refined meshes starting from an `n0 × n0`
/// grid and measures errors against the closed form.
pub fn convergence_study(n0: usize, levels: usize) -> Result<Vec<ConvergenceRow>, Error> {
    let spec = manufactured_problem(n0);
    let mut mesh = spec.build_initial_mesh()?;
    let mut rows = Vec::with_capacity(levels);
    for level in 0..levels {
        let phi = PhaseField::constant(&mesh, 1.0);
        let g = |x: [f64; 2]| spec.dirichlet_data(x);
        let sys = assemble(&mesh, &phi, &spec.phys, &g)?;
        let sol = solve_state(&mesh, &sys)?;

        let mut energy_sq = 0.0;
        let mut l2_sq = 0.0;
        for t in 0..mesh.n_elements() {
            let pts = mesh.tri_points(t);
            let area = mesh.area(t);
            let grads = bary_gradients(&pts, area);
            let gu_h = velocity_gradient(&sol.u.local(&mesh, t), &grads);
            energy_sq += integrate_tri(&TRI_DEGREE_6, &pts, area, |x, _| {
                let gu = exact_velocity_gradient(x);
                let mut s = 0.0;
                for c in 0..2 {
                    for d in 0..2 {
                        let diff = gu[c][d] - gu_h[c][d];
                        s += diff * diff;
                    }
                }
                s
            });
            l2_sq += integrate_tri(&TRI_DEGREE_6, &pts, area, |x, bary| {
                let ue = exact_velocity(x);
                let uh = sol.u.at(&mesh, t, bary);
                let d = [ue[0] - uh[0], ue[1] - uh[1]];
                d[0] * d[0] + d[1] * d[1]
            });
        }
        let metrics = mesh_metrics(&mesh);
        let h = metrics.h_f.iter().cloned().fold(0.0, f64::max);
        let (_, eta2_total) = eta2(&mesh, &phi, &sol.u, &spec.phys, &g);
        rows.push(ConvergenceRow {
            n_vertices: mesh.n_vertices(),
            h,
            energy_error: energy_sq.sqrt(),
            l2_error: l2_sq.sqrt(),
            eta2: eta2_total,
        });
        if level + 1 < levels {
            mesh = uniform_refine(&mesh)?;
        }
    }
    Ok(rows)
}

/// Least-squares slope of log(y) against log(x).
pub fn fit_rate(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2);
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (px, py) in lx.iter().zip(&ly) {
        num += (px - mx) * (py - my);
        den += (px - mx) * (px - mx);
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fields_are_consistent() {
        // Boundary values, incompressibility, gradient and forcing against
        // central finite differences — an oracle independent of the hand
        // calculus above.
        let h = 1e-4;
        let probes = [[0.3, 0.7], [0.51, 0.22], [0.85, 0.45], [0.12, 0.93]];
        for x in probes {
            let g = exact_velocity_gradient(x);
            assert!((g[0][0] + g[1][1]).abs() < 1e-14, "divergence at {x:?}");
            for c in 0..2 {
                for d in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[d] += h;
                    xm[d] -= h;
                    let fd = (exact_velocity(xp)[c] - exact_velocity(xm)[c]) / (2.0 * h);
                    assert!((g[c][d] - fd).abs() < 1e-6, "grad [{c}][{d}] at {x:?}");
                }
            }
            // f = −μΔu + ∇p via second differences.
            let mu = 1.3;
            let f = forcing(mu, x);
            for c in 0..2 {
                let mut lap = 0.0;
                for d in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[d] += h;
                    xm[d] -= h;
                    lap += (exact_velocity(xp)[c] - 2.0 * exact_velocity(x)[c]
                        + exact_velocity(xm)[c])
                        / (h * h);
                }
                let grad_p = {
                    let mut xp = x;
                    let mut xm = x;
                    xp[c] += h;
                    xm[c] -= h;
                    (exact_pressure(xp) - exact_pressure(xm)) / (2.0 * h)
                };
                let want = -mu * lap + grad_p;
                assert!((f[c] - want).abs() < 1e-4, "forcing [{c}] at {x:?}: {} vs {want}", f[c]);
            }
        }
        // Homogeneous boundary data.
        for s in [0.0, 0.25, 0.5, 1.0] {
            for x in [[0.0, s], [1.0, s], [s, 0.0], [s, 1.0]] {
                let u = exact_velocity(x);
                assert!(u[0].abs() < 1e-15 && u[1].abs() < 1e-15, "boundary {x:?}");
            }
        }
        // Zero-mean pressure (compatible with the gauge).
        let mut mean = 0.0;
        let n = 400;
        for i in 0..n {
            let x = (i as f64 + 0.5) / n as f64;
            mean += exact_pressure([x, 0.5]) / n as f64;
        }
        assert!(mean.abs() < 1e-5);
    }

    #[test]
    fn errors_shrink_under_refinement() {
        let rows = convergence_study(4, 2).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[1].energy_error < rows[0].energy_error);
        assert!(rows[1].l2_error < rows[0].l2_error);
        assert!(rows[1].eta2 < rows[0].eta2);
        assert!(rows[1].h < rows[0].h);
    }

    #[test]
    fn rate_fit_recovers_synthetic_slopes() {
        let x = [1.0, 0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|h| 3.0 * h * h).collect();
        assert!((fit_rate(&x, &y) - 2.0).abs() < 1e-12);
    }
}
