//! Residual-type a posteriori error indicators, one pair per element.
//!
//! The first family measures the residual of the design-field optimality
//! condition: an element term built from the double-well slope and the
//! Brinkman sensitivity, plus the jumps of the design gradient across edges
//! (the design field has natural boundary conditions, so boundary edges
//! contribute their full one-sided "jump").
//!
//! The second family measures the flow residual: a zeroth-order element
//! residual `α(φ)u − f` (the viscous term drops — broken gradients of CR
//! fields are piecewise constant), velocity jumps across interior edges
//! (split evenly between the two neighbors), and the Dirichlet data mismatch
//! on inflow/wall edges. Traction-free outlet edges carry no jump term.
//!
//! Element integrals use the degree-6 rule: the squared residuals are
//! polynomials of degree ≤ 6 there, so they are integrated exactly; edge
//! integrands are degree ≤ 2 and the 3-point Gauss rule is exact as well.

use crate::fespace::{barycentric, bary_gradients, PhaseField, VelocityField};
use crate::mesh::{mesh_metrics, BoundaryTag, Mesh};
use crate::phasefield::double_well_prime;
use crate::problem::ProblemSpec;
use crate::quad::{integrate_edge, integrate_tri, TRI_DEGREE_6};
use crate::stokes::PhysParams;

/// Both indicator families on one mesh.
#[derive(Debug, Clone)]
pub struct Indicators {
    /// Squared design-residual indicator per element.
    pub eta1_sq: Vec<f64>,
    /// Squared flow-residual indicator per element.
    pub eta2_sq: Vec<f64>,
    /// √(Σ eta1_sq).
    pub global1: f64,
    /// √(Σ eta2_sq).
    pub global2: f64,
}

/// Convenience wrapper computing both families with the problem's boundary
/// data.
pub fn indicators(
    mesh: &Mesh,
    phi: &PhaseField,
    u: &VelocityField,
    phys: &PhysParams,
    problem: &ProblemSpec,
) -> Indicators {
    let (eta1_sq, global1) = eta1(mesh, phi, u, phys);
    let (eta2_sq, global2) = eta2(mesh, phi, u, phys, &|x| problem.dirichlet_data(x));
    Indicators { eta1_sq, eta2_sq, global1, global2 }
}

/// Design-residual indicators: per-element squared values and the global
/// root-sum-square.
pub fn eta1(
    mesh: &Mesh,
    phi: &PhaseField,
    u: &VelocityField,
    phys: &PhysParams,
) -> (Vec<f64>, f64) {
    let metrics = mesh_metrics(mesh);
    let n_t = mesh.n_elements();
    let mut sq = vec![0.0; n_t];

    // Piecewise-constant design gradients, reused by the edge loop.
    let mut grad_phi = vec![[0.0; 2]; n_t];
    for t in 0..n_t {
        let grads = bary_gradients(&mesh.tri_points(t), metrics.area[t]);
        let loc = phi.local(mesh, t);
        for k in 0..3 {
            grad_phi[t][0] += loc[k] * grads[k][0];
            grad_phi[t][1] += loc[k] * grads[k][1];
        }
    }

    for t in 0..n_t {
        let pts = mesh.tri_points(t);
        let phi_loc = phi.local(mesh, t);
        let u_loc = u.local(mesh, t);
        let residual_sq = integrate_tri(&TRI_DEGREE_6, &pts, metrics.area[t], |_, bary| {
            let phi_q = phi_loc[0] * bary[0] + phi_loc[1] * bary[1] + phi_loc[2] * bary[2];
            let psi = [1.0 - 2.0 * bary[0], 1.0 - 2.0 * bary[1], 1.0 - 2.0 * bary[2]];
            let mut uq = [0.0; 2];
            for k in 0..3 {
                uq[0] += u_loc[k][0] * psi[k];
                uq[1] += u_loc[k][1] * psi[k];
            }
            let r = phys.gamma / phys.epsilon * double_well_prime(phi_q)
                + 0.5 * phys.alpha_prime(phi_q) * (uq[0] * uq[0] + uq[1] * uq[1]);
            r * r
        });
        sq[t] += metrics.h_t[t] * metrics.h_t[t] * residual_sq;
    }

    for e in 0..mesh.n_edges() {
        let n = metrics.normal[e];
        let len = metrics.h_f[e];
        match mesh.edge_elements[e] {
            [Some(tp), Some(tm)] => {
                let d = [grad_phi[tp][0] - grad_phi[tm][0], grad_phi[tp][1] - grad_phi[tm][1]];
                let j = phys.gamma * phys.epsilon * (d[0] * n[0] + d[1] * n[1]);
                // The jump is constant along the edge; its squared integral
                // is |F|·J², weighted by h_F and charged to both neighbors.
                let contrib = len * len * j * j;
                sq[tp] += contrib;
                sq[tm] += contrib;
            }
            [Some(tp), None] => {
                let g = grad_phi[tp];
                let j = phys.gamma * phys.epsilon * (g[0] * n[0] + g[1] * n[1]);
                sq[tp] += len * len * j * j;
            }
            _ => unreachable!("edge with no incident element"),
        }
    }

    let global = sq.iter().sum::<f64>().sqrt();
    (sq, global)
}

/// Flow-residual indicators: per-element squared values and the global
/// root-sum-square. `g` is the Dirichlet velocity data.
pub fn eta2(
    mesh: &Mesh,
    phi: &PhaseField,
    u: &VelocityField,
    phys: &PhysParams,
    g: &dyn Fn([f64; 2]) -> [f64; 2],
) -> (Vec<f64>, f64) {
    let metrics = mesh_metrics(mesh);
    let n_t = mesh.n_elements();
    let mut sq = vec![0.0; n_t];

    for t in 0..n_t {
        let pts = mesh.tri_points(t);
        let phi_loc = phi.local(mesh, t);
        let u_loc = u.local(mesh, t);
        let residual_sq = integrate_tri(&TRI_DEGREE_6, &pts, metrics.area[t], |x, bary| {
            let phi_q = phi_loc[0] * bary[0] + phi_loc[1] * bary[1] + phi_loc[2] * bary[2];
            let psi = [1.0 - 2.0 * bary[0], 1.0 - 2.0 * bary[1], 1.0 - 2.0 * bary[2]];
            let mut uq = [0.0; 2];
            for k in 0..3 {
                uq[0] += u_loc[k][0] * psi[k];
                uq[1] += u_loc[k][1] * psi[k];
            }
            let a = phys.alpha(phi_q);
            let f = phys.force_at(x);
            let r = [a * uq[0] - f[0], a * uq[1] - f[1]];
            r[0] * r[0] + r[1] * r[1]
        });
        sq[t] += metrics.h_t[t] * metrics.h_t[t] * residual_sq;
    }

    for e in 0..mesh.n_edges() {
        let [a, b] = mesh.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = metrics.h_f[e];
        match mesh.edge_elements[e] {
            [Some(tp), Some(tm)] => {
                let pts_p = mesh.tri_points(tp);
                let pts_m = mesh.tri_points(tm);
                let int = integrate_edge(pa, pb, |x| {
                    let up = u.at(mesh, tp, barycentric(&pts_p, x));
                    let um = u.at(mesh, tm, barycentric(&pts_m, x));
                    let d = [up[0] - um[0], up[1] - um[1]];
                    d[0] * d[0] + d[1] * d[1]
                });
                // Half the edge weight to each neighbor.
                sq[tp] += 0.5 * len * int;
                sq[tm] += 0.5 * len * int;
            }
            [Some(tp), None] => {
                if mesh.boundary_tag[e] == Some(BoundaryTag::Outlet) {
                    continue; // traction-free: no data mismatch measured
                }
                let pts_p = mesh.tri_points(tp);
                let int = integrate_edge(pa, pb, |x| {
                    let up = u.at(mesh, tp, barycentric(&pts_p, x));
                    let gx = g(x);
                    let d = [up[0] - gx[0], up[1] - gx[1]];
                    d[0] * d[0] + d[1] * d[1]
                });
                sq[tp] += len * int;
            }
            _ => unreachable!("edge with no incident element"),
        }
    }

    let global = sq.iter().sum::<f64>().sqrt();
    (sq, global)
}
