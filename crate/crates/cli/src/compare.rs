//! Adaptive-vs-uniform comparison: run both arms on the same problem and
//! tabulate {vertices, final objective, wall time} per arm.

use topoflow::adapt::{afem_drive, AfemConfig, RunReport, Strategy};
use topoflow::problem::ProblemSpec;

use crate::CliError;

pub struct Comparison {
    pub adaptive: RunReport,
    pub uniform: RunReport,
}

/// The uniform arm the benchmarks compare against: one refinement fewer
/// (each uniform step quadruples the mesh), same iteration counts.
pub fn uniform_arm(adaptive: &AfemConfig) -> AfemConfig {
    AfemConfig {
        strategy: Strategy::Uniform,
        levels: adaptive.levels.saturating_sub(1).max(1),
        ..*adaptive
    }
}

pub fn compare_mode(
    spec: &ProblemSpec,
    adaptive_cfg: &AfemConfig,
    uniform_cfg: &AfemConfig,
) -> Result<Comparison, CliError> {
    let adaptive = afem_drive(spec, adaptive_cfg)?;
    let uniform = afem_drive(spec, uniform_cfg)?;
    Ok(Comparison { adaptive, uniform })
}

impl Comparison {
    /// Four-column text table, one row per arm.
    pub fn table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{:<10} {:>10} {:>14} {:>10}\n",
            "arm", "vertices", "objective", "seconds"
        ));
        for (label, report) in [("adaptive", &self.adaptive), ("uniform", &self.uniform)] {
            let last = report.levels.last().expect("non-empty run");
            s.push_str(&format!(
                "{:<10} {:>10} {:>14.4} {:>10.1}\n",
                label,
                last.n_vertices,
                last.objective.total(),
                last.seconds
            ));
        }
        s
    }
}
