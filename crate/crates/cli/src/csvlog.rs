//! Convergence-history CSV: one row per outer iteration.
//!
//! The header is frozen (golden-tested). All columns except `seconds` are
//! deterministic for a fixed config and seed; `seconds` is wall clock.

use std::io::Write;
use std::path::Path;

use topoflow::phasefield::OuterRecord;

pub const CSV_HEADER: &str = "level,outer,lagrangian,objective,brinkman,dissipation,body,\
ginzburg_landau,volume_gap,eta1,eta2,vertices,seconds";

pub fn render_csv(history: &[OuterRecord]) -> String {
    let mut s = String::with_capacity(64 * (history.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in history {
        let o = &r.objective;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.level,
            r.outer,
            r.lagrangian,
            o.total(),
            o.brinkman,
            o.dissipation,
            o.body,
            o.ginzburg_landau,
            r.volume_gap,
            r.eta1,
            r.eta2,
            r.n_vertices,
            r.seconds,
        ));
    }
    s
}

pub fn write_csv_log(history: &[OuterRecord], path: &Path) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(render_csv(history).as_bytes())
}

/// Drops the wall-clock column from rendered CSV, for determinism checks.
pub fn strip_time_column(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rfind(',') {
            Some(i) => &line[..i],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
