//! Throwaway marking diagnostics (not shipped).

use topoflow::adapt::{doerfler_mark, AfemConfig, Strategy};
use topoflow::estimator::indicators;
use topoflow::mesh::refine_marked;
use topoflow::phasefield::{optimize_on_mesh, OptState};
use topoflow::fespace::p1_prolongate;
use topoflow_cli::presets::preset;
use std::time::Instant;

fn band_stats(
    mesh: &topoflow::mesh::Mesh,
    phi: &topoflow::fespace::PhaseField,
    ids: &[usize],
) -> f64 {
    let mut hits = 0;
    for &t in ids {
        let loc = phi.local(mesh, t);
        let lo = loc.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = loc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > 0.05 && lo < 0.95 {
            hits += 1;
        }
    }
    hits as f64 / ids.len().max(1) as f64
}

/// Per-element decomposition of eta1²: (residual part, jump part = total − residual),
/// plus mean element residual ∫R/|T| per element.
fn eta1_parts(
    mesh: &topoflow::mesh::Mesh,
    phi: &topoflow::fespace::PhaseField,
    u: &topoflow::fespace::VelocityField,
    phys: &topoflow::stokes::PhysParams,
) -> (Vec<f64>, Vec<f64>) {
    use topoflow::phasefield::double_well_prime;
    use topoflow::quad::{integrate_tri, TRI_DEGREE_6};
    let n_t = mesh.n_elements();
    let mut res = vec![0.0; n_t];
    let mut rbar = vec![0.0; n_t];
    for t in 0..n_t {
        let pts = mesh.tri_points(t);
        let area = mesh.area(t);
        let h = {
            let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            d(pts[0], pts[1]).max(d(pts[1], pts[2])).max(d(pts[2], pts[0]))
        };
        let phi_loc = phi.local(mesh, t);
        let u_loc = u.local(mesh, t);
        let r_at = |bary: [f64; 3]| {
            let phi_q = phi_loc[0] * bary[0] + phi_loc[1] * bary[1] + phi_loc[2] * bary[2];
            let psi = [1.0 - 2.0 * bary[0], 1.0 - 2.0 * bary[1], 1.0 - 2.0 * bary[2]];
            let mut uq = [0.0; 2];
            for k in 0..3 {
                uq[0] += u_loc[k][0] * psi[k];
                uq[1] += u_loc[k][1] * psi[k];
            }
            phys.gamma / phys.epsilon * double_well_prime(phi_q)
                + 0.5 * phys.alpha_prime(phi_q) * (uq[0] * uq[0] + uq[1] * uq[1])
        };
        let rsq = integrate_tri(&TRI_DEGREE_6, &pts, area, |_, bary| r_at(bary).powi(2));
        let rint = integrate_tri(&TRI_DEGREE_6, &pts, area, |_, bary| r_at(bary));
        res[t] = h * h * rsq;
        rbar[t] = rint / area;
    }
    (res, rbar)
}

fn in_band(mesh: &topoflow::mesh::Mesh, phi: &topoflow::fespace::PhaseField, t: usize) -> bool {
    let loc = phi.local(mesh, t);
    let lo = loc.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = loc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi > 0.05 && lo < 0.95
}

fn main() {
    let spec = preset("left_inflow").unwrap();
    let cfg = AfemConfig { levels: 3, strategy: Strategy::Adaptive, ..Default::default() };
    let start = Instant::now();
    let mut mesh = spec.build_initial_mesh().unwrap();
    let mut phi = spec.initial_phase(&mesh, cfg.seed);
    let mut state = OptState::new(&spec.opt);
    for level in 0..cfg.levels {
        let (phi_opt, u, _p) = optimize_on_mesh(
            &mesh, phi, &mut state, &spec.phys, &spec.opt, &spec, level, start,
        )
        .unwrap();
        let last = *state.history.last().unwrap();
        println!(
            "level {level}: ell {:.2}, zeta {:.0}, W {:+.2e}",
            state.ell, state.zeta, last.volume_gap
        );
        let ind = indicators(&mesh, &phi_opt, &u, &spec.phys, &spec);
        {
            let (res, rbar) = eta1_parts(&mesh, &phi_opt, &u, &spec.phys);
            let (mut rb, mut ro, mut jb, mut jo) = (0.0, 0.0, 0.0, 0.0);
            let mut rbar_off = Vec::new();
            for t in 0..mesh.n_elements() {
                let jump = (ind.eta1_sq[t] - res[t]).max(0.0);
                if in_band(&mesh, &phi_opt, t) {
                    rb += res[t];
                    jb += jump;
                } else {
                    ro += res[t];
                    jo += jump;
                    rbar_off.push(rbar[t]);
                }
            }
            rbar_off.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let pct = |p: f64| rbar_off[((rbar_off.len() - 1) as f64 * p) as usize];
            println!(
                "  eta1^2 split: band res {rb:.3e} jump {jb:.3e} | off res {ro:.3e} jump {jo:.3e}; off-band mean-R percentiles 10/50/90: {:.1}/{:.1}/{:.1}",
                pct(0.1), pct(0.5), pct(0.9)
            );
        }
        let m1 = doerfler_mark(&ind.eta1_sq, cfg.theta1);
        let m2 = doerfler_mark(&ind.eta2_sq, cfg.theta2);
        let n = mesh.n_elements();
        let b1 = band_stats(&mesh, &phi_opt, &m1.element_ids);
        let b2 = band_stats(&mesh, &phi_opt, &m2.element_ids);
        // η² mass distribution: top-1% elements' share.
        let share = |sq: &[f64]| {
            let mut v: Vec<f64> = sq.to_vec();
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let total: f64 = v.iter().sum();
            let k = (n / 100).max(1);
            let top: f64 = v[..k].iter().sum();
            top / total
        };
        println!(
            "level {level}: elements {n}, |M1| {} (band {:.0}%), |M2| {} (band {:.0}%), top-1% mass: eta1 {:.2}, eta2 {:.2}",
            m1.element_ids.len(),
            100.0 * b1,
            m2.element_ids.len(),
            100.0 * b2,
            share(&ind.eta1_sq),
            share(&ind.eta2_sq),
        );
        let nv = phi_opt.nodal_values.len();
        let sat_hi = phi_opt.nodal_values.iter().filter(|&&v| v > 0.999).count();
        let sat_lo = phi_opt.nodal_values.iter().filter(|&&v| v < 0.001).count();
        let near_hi = phi_opt
            .nodal_values
            .iter()
            .filter(|&&v| (0.9..=0.999).contains(&v))
            .count();
        let mid = phi_opt
            .nodal_values
            .iter()
            .filter(|&&v| (0.05..0.9).contains(&v))
            .count();
        println!(
            "  phi: {nv} vertices — {:.1}% at 1, {:.1}% at 0, {:.1}% in [0.9, 0.999], {:.1}% in [0.05, 0.9); max {:.6}",
            100.0 * sat_hi as f64 / nv as f64,
            100.0 * sat_lo as f64 / nv as f64,
            100.0 * near_hi as f64 / nv as f64,
            100.0 * mid as f64 / nv as f64,
            phi_opt.nodal_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        );

        let union = topoflow::adapt::combined_mark(&ind, cfg.theta1, cfg.theta2);
        let next = refine_marked(&mesh, &union).unwrap();
        phi = p1_prolongate(&mesh, &next, &phi_opt).unwrap();
        mesh = next;
    }
}
