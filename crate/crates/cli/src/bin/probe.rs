//! Oscillation probe (throwaway).
use topoflow::phasefield::{optimize_on_mesh, sensitivity_core, OptState, PhaseSolver};
use topoflow::stokes::{assemble, StokesCache};
use topoflow_cli::presets::preset;
use std::time::Instant;

fn main() {
    let spec = preset("left_inflow").unwrap();
    let mesh = spec.build_initial_mesh().unwrap();
    let phi0 = spec.initial_phase(&mesh, 0);
    let mut state = OptState::new(&spec.opt);
    let (mut phi, _u, _p) =
        optimize_on_mesh(&mesh, phi0, &mut state, &spec.phys, &spec.opt, &spec, 0, Instant::now())
            .unwrap();
    // One more flow solve, then watch the inner steps.
    let g = |x: [f64; 2]| spec.dirichlet_data(x);
    let sys = assemble(&mesh, &phi, &spec.phys, &g).unwrap();
    let mut cache = StokesCache::new(&mesh, &sys).unwrap();
    let sol = cache.solve(&mesh, &sys).unwrap();
    let phase = PhaseSolver::new(&mesh, &spec.phys, &spec.opt).unwrap();
    for step in 0..8 {
        let q = sensitivity_core(&mesh, &phi, &sol.u, &spec.phys);
        let next = phase
            .step_implicit_volume(&phi, &q, state.ell, state.zeta, spec.opt.beta)
            .unwrap();
        let mut dmax = 0.0f64;
        let mut big = 0usize;
        let mut argmax = 0usize;
        for i in 0..phi.nodal_values.len() {
            let d = (next.nodal_values[i] - phi.nodal_values[i]).abs();
            if d > dmax {
                dmax = d;
                argmax = i;
            }
            if d > 0.1 {
                big += 1;
            }
        }
        let x = mesh.vertices[argmax];
        println!(
            "step {step}: max|dphi| {dmax:.3} at ({:.2},{:.2}) phi {:.3}->{:.3}, nodes with |dphi|>0.1: {big}",
            x[0], x[1], phi.nodal_values[argmax], next.nodal_values[argmax]
        );
        phi = next;
    }
}
