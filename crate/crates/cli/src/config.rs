//! Flat key-value run configuration.
//!
//! Schema: one `key = value` pair per line; `#` starts a comment; blank
//! lines are skipped. The `preset` key picks the benchmark the remaining
//! keys override. Keys are exactly the parameter-struct field names:
//!
//! * physics — `mu`, `alpha_max`, `epsilon`, `gamma`
//! * optimizer — `beta`, `dt`, `s_tilde`, `n_outer`, `n_inner`, `ell0`,
//!   `zeta0`, `kappa`
//! * mesh loop — `levels`, `theta1`, `theta2`, `strategy`
//!   (`adaptive`/`uniform`), `seed`, `eta_stop`
//! * initial design — `init` (`constant` = the volume fraction β, or
//!   `random` = per-vertex uniform values drawn from the run seed)
//!
//! Unknown keys are rejected with their line number.

use std::path::Path;

use topoflow::adapt::AfemConfig;
use topoflow::problem::{InitField, ProblemSpec};

use crate::presets::preset;
use crate::CliError;

pub fn load_config(path: &Path) -> Result<(ProblemSpec, AfemConfig), CliError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, &path.display().to_string())
}

/// Parses config text; `label` names the source in errors (a path, usually).
pub fn parse_config(text: &str, label: &str) -> Result<(ProblemSpec, AfemConfig), CliError> {
    let fail = |line: usize, message: String| CliError::Config {
        path: label.to_string(),
        line,
        message,
    };

    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(fail(line_no, format!("expected 'key = value', got '{line}'")));
        };
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if value.is_empty() {
            return Err(fail(line_no, format!("key '{key}' has no value")));
        }
        pairs.push((line_no, key, value));
    }

    let preset_name = pairs
        .iter()
        .find(|(_, k, _)| k == "preset")
        .map(|(_, _, v)| v.clone())
        .ok_or_else(|| fail(0, "missing required key 'preset'".into()))?;
    let mut spec = preset(&preset_name)?;
    let mut afem = AfemConfig::default();

    for (line_no, key, value) in &pairs {
        let line_no = *line_no;
        macro_rules! num {
            ($ty:ty) => {
                value.parse::<$ty>().map_err(|e| {
                    fail(line_no, format!("key '{key}': cannot parse '{value}': {e}"))
                })?
            };
        }
        match key.as_str() {
            "preset" => {}
            "mu" => spec.phys.mu = num!(f64),
            "alpha_max" => spec.phys.alpha_max = num!(f64),
            "epsilon" => spec.phys.epsilon = num!(f64),
            "gamma" => spec.phys.gamma = num!(f64),
            "beta" => spec.opt.beta = num!(f64),
            "dt" => spec.opt.dt = num!(f64),
            "s_tilde" => spec.opt.s_tilde = num!(f64),
            "n_outer" => spec.opt.n_outer = num!(usize),
            "n_inner" => spec.opt.n_inner = num!(usize),
            "ell0" => spec.opt.ell0 = num!(f64),
            "zeta0" => spec.opt.zeta0 = num!(f64),
            "kappa" => spec.opt.kappa = num!(f64),
            "levels" => afem.levels = num!(usize),
            "theta1" => afem.theta1 = num!(f64),
            "theta2" => afem.theta2 = num!(f64),
            "strategy" => {
                afem.strategy = value.parse().map_err(|e| fail(line_no, format!("{e}")))?
            }
            "seed" => afem.seed = num!(u64),
            "eta_stop" => afem.eta_stop = Some(num!(f64)),
            "init" => match value.as_str() {
                "constant" => spec.init = InitField::Constant(spec.opt.beta),
                "random" => spec.init = InitField::RandomUniform,
                other => {
                    return Err(fail(
                        line_no,
                        format!("key 'init': expected 'constant' or 'random', got '{other}'"),
                    ))
                }
            },
            unknown => return Err(fail(line_no, format!("unknown key '{unknown}'"))),
        }
    }

    // A constant initial design follows an overridden volume fraction.
    if let InitField::Constant(_) = spec.init {
        spec.init = InitField::Constant(spec.opt.beta);
    }

    spec.validate().map_err(CliError::Invalid)?;
    validate_afem(&afem).map_err(CliError::Invalid)?;
    Ok((spec, afem))
}

pub fn validate_afem(cfg: &AfemConfig) -> Result<(), String> {
    if cfg.levels == 0 {
        return Err(format!("levels = {} must be at least 1", cfg.levels));
    }
    for (name, v) in [("theta1", cfg.theta1), ("theta2", cfg.theta2)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(format!("{name} = {v} out of range (0, 1]"));
        }
    }
    if let Some(stop) = cfg.eta_stop {
        if !(stop > 0.0) {
            return Err(format!("eta_stop = {stop} must be positive"));
        }
    }
    Ok(())
}
