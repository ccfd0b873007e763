//! The three benchmark problems, fully parameterized.
//!
//! Shared defaults: μ = 1, penalization ceiling 10⁴, no body force,
//! ε = γ = 10⁻², 50 outer × 10 inner iterations, stabilization 0.25,
//! multipliers ℓ₀ = 0, ζ₀ = 100, κ = 1.1. Each preset then sets its own
//! geometry, inflow data, time step, and volume fraction, overriding the
//! shared values where noted.

use std::sync::Arc;

use topoflow::mesh::Rect;
use topoflow::phasefield::OptParams;
use topoflow::problem::{InitField, Inlet, ProblemSpec};
use topoflow::stokes::PhysParams;

use crate::CliError;

pub const PRESET_NAMES: [&str; 3] = ["left_inflow", "three_inflows", "bypass"];

const EDGE_TOL: f64 = 1e-9;

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < EDGE_TOL
}

fn within(v: f64, lo: f64, hi: f64) -> bool {
    v > lo - EDGE_TOL && v < hi + EDGE_TOL
}

/// Channel with a parabolic inflow on the whole left edge and a centered
/// outlet band on the right; half the volume available for fluid.
fn left_inflow() -> ProblemSpec {
    ProblemSpec {
        name: "left_inflow".into(),
        domain: Rect::UNIT,
        grid: (35, 40),
        inlets: vec![Inlet {
            on: Arc::new(|x| near(x[0], 0.0)),
            velocity: Arc::new(|x| [4.0 * x[1] * (1.0 - x[1]), 0.0]),
        }],
        outlet: Arc::new(|x| near(x[0], 1.0) && within(x[1], 0.3, 0.7)),
        phys: PhysParams::default(),
        opt: OptParams { beta: 0.5, dt: 1e-4, ..OptParams::default() },
        init: InitField::Constant(0.5),
    }
}

/// Three plug inflows of width 0.2 (top, bottom, left — all pointing into
/// the domain at unit speed) meeting a centered outlet band on the right.
fn three_inflows() -> ProblemSpec {
    let beta = 0.36;
    ProblemSpec {
        name: "three_inflows".into(),
        domain: Rect::UNIT,
        grid: (35, 40),
        inlets: vec![
            Inlet {
                on: Arc::new(|x| near(x[1], 1.0) && within(x[0], 0.4, 0.6)),
                velocity: Arc::new(|_| [0.0, -1.0]),
            },
            Inlet {
                on: Arc::new(|x| near(x[1], 0.0) && within(x[0], 0.4, 0.6)),
                velocity: Arc::new(|_| [0.0, 1.0]),
            },
            Inlet {
                on: Arc::new(|x| near(x[0], 0.0) && within(x[1], 0.4, 0.6)),
                velocity: Arc::new(|_| [1.0, 0.0]),
            },
        ],
        outlet: Arc::new(|x| near(x[0], 1.0) && within(x[1], 0.4, 0.6)),
        phys: PhysParams::default(),
        opt: OptParams { beta, dt: 5e-5, ..OptParams::default() },
        init: InitField::Constant(beta),
    }
}

/// Bypass around a blocked artery: a 1.5 × 1 domain with two inlet and two
/// outlet bands mirrored about y = 0, quartic inflow profile on each inlet,
/// and an absolute target volume of 0.7 (fraction 0.7/1.5).
fn bypass() -> ProblemSpec {
    let beta = 0.7 / 1.5;
    ProblemSpec {
        name: "bypass".into(),
        domain: Rect { x0: 0.0, y0: -0.5, x1: 1.5, y1: 0.5 },
        grid: (52, 40),
        inlets: vec![Inlet {
            on: Arc::new(|x| near(x[0], 0.0) && within(x[1].abs(), 0.15, 0.35)),
            velocity: Arc::new(|x| {
                let y2 = x[1] * x[1];
                [-100.0 * (y2 - 0.35 * 0.35) * (y2 - 0.15 * 0.15), 0.0]
            }),
        }],
        outlet: Arc::new(|x| near(x[0], 1.5) && within(x[1].abs(), 0.15, 0.35)),
        phys: PhysParams { epsilon: 5e-3, gamma: 0.1, ..PhysParams::default() },
        opt: OptParams { beta, dt: 5e-3, s_tilde: 1.0, zeta0: 50.0, ..OptParams::default() },
        init: InitField::Constant(beta),
    }
}

pub fn preset(name: &str) -> Result<ProblemSpec, CliError> {
    let spec = match name {
        "left_inflow" => left_inflow(),
        "three_inflows" => three_inflows(),
        "bypass" => bypass(),
        other => return Err(CliError::UnknownPreset(other.to_string())),
    };
    debug_assert!(spec.validate().is_ok());
    Ok(spec)
}
