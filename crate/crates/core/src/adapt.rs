//! Dörfler marking and the level driver: optimize on a mesh, estimate,
//! mark, refine, carrying the design field and the multiplier state to the
//! next level.

use std::time::Instant;

use crate::estimator::{self, Indicators};
use crate::fespace::{p1_prolongate, PhaseField, PressureField, VelocityField};
use crate::mesh::{refine_marked, uniform_refine, MarkedSet, Mesh};
use crate::phasefield::{optimize_on_mesh, OptState, OuterRecord};
use crate::problem::ProblemSpec;
use crate::stokes::ObjectiveParts;
use crate::Error;

/// Mesh refinement strategy of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Dörfler-marked bisection driven by the two indicator families.
    Adaptive,
    /// Uniform refinement of every element (comparison arm).
    Uniform,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "adaptive" => Ok(Strategy::Adaptive),
            "uniform" => Ok(Strategy::Uniform),
            other => Err(format!("unknown strategy '{other}' (expected adaptive or uniform)")),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Adaptive => "adaptive",
            Strategy::Uniform => "uniform",
        })
    }
}

/// Driver configuration.
#[derive(Debug, Clone, Copy)]
pub struct AfemConfig {
    /// Number of mesh levels (the initial mesh counts as level 0).
    pub levels: usize,
    /// Dörfler fraction for the design-residual indicator.
    pub theta1: f64,
    /// Dörfler fraction for the flow-residual indicator.
    pub theta2: f64,
    pub strategy: Strategy,
    /// Seed for a random initial design (unused for deterministic ones).
    pub seed: u64,
    /// Optional early stop: finish the run once the global flow indicator
    /// drops to this value.
    pub eta_stop: Option<f64>,
}

impl Default for AfemConfig {
    fn default() -> Self {
        AfemConfig {
            levels: 4,
            theta1: 0.4,
            theta2: 0.6,
            strategy: Strategy::Adaptive,
            seed: 0,
            eta_stop: None,
        }
    }
}

/// Greedy Dörfler marking: the smallest prefix of elements in decreasing
/// indicator order whose squared sum reaches `theta` times the total. Ties
/// prefer lower element ids; if every indicator is zero the lowest id is
/// marked so refinement always makes progress.
pub fn doerfler_mark(indicator_sq: &[f64], theta: f64) -> MarkedSet {
    assert!(theta > 0.0 && theta <= 1.0, "theta must lie in (0, 1], got {theta}");
    assert!(
        indicator_sq.iter().all(|v| v.is_finite() && *v >= 0.0),
        "indicators must be finite and nonnegative"
    );
    let mut order: Vec<usize> = (0..indicator_sq.len()).collect();
    order.sort_by(|&a, &b| {
        indicator_sq[b].partial_cmp(&indicator_sq[a]).unwrap().then(a.cmp(&b))
    });
    // Sum in the marking order so that theta = 1 is met exactly.
    let total: f64 = order.iter().map(|&i| indicator_sq[i]).sum();
    if total == 0.0 {
        return MarkedSet::from_ids(vec![0]);
    }
    let target = theta * total;
    let mut acc = 0.0;
    let mut ids = Vec::new();
    for &i in &order {
        acc += indicator_sq[i];
        ids.push(i);
        if acc >= target {
            break;
        }
    }
    MarkedSet::from_ids(ids)
}

/// The union of the two families' Dörfler sets.
pub fn combined_mark(ind: &Indicators, theta1: f64, theta2: f64) -> MarkedSet {
    let m1 = doerfler_mark(&ind.eta1_sq, theta1);
    let m2 = doerfler_mark(&ind.eta2_sq, theta2);
    let mut ids = m1.element_ids.clone();
    ids.extend_from_slice(&m2.element_ids);
    MarkedSet::from_ids(ids)
}

/// Per-level summary row.
#[derive(Debug, Clone, Copy)]
pub struct LevelRecord {
    pub level: usize,
    pub n_vertices: usize,
    pub n_elements: usize,
    /// Global indicators of the optimized design/state on this level.
    pub eta1: f64,
    pub eta2: f64,
    pub objective: ObjectiveParts,
    pub lagrangian: f64,
    pub volume_gap: f64,
    /// Wall-clock seconds from run start to the end of this level.
    pub seconds: f64,
    /// Elements marked for refinement (zero on the final level).
    pub marked: usize,
    /// Fraction of marked elements touching the design transition band
    /// (`None` for uniform refinement and on the final level).
    pub marked_band_fraction: Option<f64>,
}

/// Everything a finished run hands back.
pub struct RunReport {
    pub levels: Vec<LevelRecord>,
    /// One row per outer iteration across all levels.
    pub history: Vec<OuterRecord>,
    pub mesh: Mesh,
    pub phi: PhaseField,
    pub u: VelocityField,
    pub p: PressureField,
    pub indicators: Indicators,
}

/// Fraction of `marked` elements with at least one point of the transition
/// band 0.05 < φ < 0.95 (the design is linear per element, so its range per
/// element is the nodal range).
fn band_fraction(mesh: &Mesh, phi: &PhaseField, marked: &MarkedSet) -> f64 {
    if marked.element_ids.is_empty() {
        return 0.0;
    }
    let mut touching = 0usize;
    for &t in &marked.element_ids {
        let loc = phi.local(mesh, t);
        let lo = loc[0].min(loc[1]).min(loc[2]);
        let hi = loc[0].max(loc[1]).max(loc[2]);
        if hi > 0.05 && lo < 0.95 {
            touching += 1;
        }
    }
    touching as f64 / marked.element_ids.len() as f64
}

/// Runs the full pipeline: optimize on each level, estimate, mark, refine.
/// The design field transfers by nodal interpolation, the volume-multiplier
/// state carries across levels.
pub fn afem_drive(problem: &ProblemSpec, cfg: &AfemConfig) -> Result<RunReport, Error> {
    assert!(cfg.levels >= 1, "at least one level");
    let start = Instant::now();
    let mut mesh = problem.build_initial_mesh()?;
    let mut phi = problem.initial_phase(&mesh, cfg.seed);
    let mut state = OptState::new(&problem.opt);
    let mut levels = Vec::with_capacity(cfg.levels);
    let mut finished = None;

    for level in 0..cfg.levels {
        let (phi_opt, u, p) =
            optimize_on_mesh(&mesh, phi, &mut state, &problem.phys, &problem.opt, problem, level, start)?;
        let ind = estimator::indicators(&mesh, &phi_opt, &u, &problem.phys, problem);
        let outer = *state.history.last().expect("n_outer >= 1 logs at least one row");

        let stop_early = cfg.eta_stop.is_some_and(|s| ind.global2 <= s);
        let last = level + 1 == cfg.levels || stop_early;
        let mut marked_count = 0;
        let mut band = None;
        let mut next = None;
        if !last {
            match cfg.strategy {
                Strategy::Adaptive => {
                    let marked = combined_mark(&ind, cfg.theta1, cfg.theta2);
                    marked_count = marked.element_ids.len();
                    band = Some(band_fraction(&mesh, &phi_opt, &marked));
                    next = Some(refine_marked(&mesh, &marked)?);
                }
                Strategy::Uniform => {
                    marked_count = mesh.n_elements();
                    next = Some(uniform_refine(&mesh)?);
                }
            }
        }
        levels.push(LevelRecord {
            level,
            n_vertices: mesh.n_vertices(),
            n_elements: mesh.n_elements(),
            eta1: ind.global1,
            eta2: ind.global2,
            objective: outer.objective,
            lagrangian: outer.lagrangian,
            volume_gap: outer.volume_gap,
            seconds: start.elapsed().as_secs_f64(),
            marked: marked_count,
            marked_band_fraction: band,
        });
        match next {
            Some(child) => {
                phi = p1_prolongate(&mesh, &child, &phi_opt)?;
                mesh = child;
            }
            None => {
                finished = Some((phi_opt, u, p, ind));
                break;
            }
        }
    }

    let (phi, u, p, indicators) = finished.expect("loop always finishes a level");
    Ok(RunReport { levels, history: state.history, mesh, phi, u, p, indicators })
}
