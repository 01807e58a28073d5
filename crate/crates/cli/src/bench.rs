//! Oracle benchmark runner: evaluates modes over a dataset and renders reports.

use std::fmt::Write as _;

use iqa_core::harness::{compute_metrics, evaluate, EvalQuestion, GroupMetrics, InteractionTrace, MetricsReport, Mode};
use iqa_core::Engine;
use serde::Serialize;

pub struct BenchOutput {
    pub report: MetricsReport,
    pub traces: Vec<InteractionTrace>,
}

pub fn run_benchmark(engine: &Engine, dataset: &[EvalQuestion], modes: &[Mode]) -> BenchOutput {
    let traces = evaluate(dataset, engine, modes);
    let report = compute_metrics(&traces, dataset);
    BenchOutput { report, traces }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn cell(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{x:.digits$}"))
}

fn row(out: &mut String, mode: &str, group: &str, m: &GroupMetrics) {
    let _ = writeln!(
        out,
        "{mode:<8} {group:<8} {:>3} {:>8} {:>6} {:>9} {:>8}",
        m.n,
        cell(m.success_rate, 3),
        cell(m.f1, 3),
        cell(m.cost_mean, 2),
        cell(m.cost_std, 2),
    );
}

/// Per-mode, per-category table.
pub fn render_table(report: &MetricsReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<8} {:<8} {:>3} {:>8} {:>6} {:>9} {:>8}",
        "mode", "category", "n", "success", "f1", "cost", "std"
    );
    for (name, mode) in &report.modes {
        for (category, m) in &mode.by_category {
            if m.n > 0 {
                row(&mut out, name, category, m);
            }
        }
        row(&mut out, name, "all", &mode.overall);
    }
    out
}

/// Parses a comma-separated mode list, keeping first occurrences.
pub fn parse_modes(list: &str) -> Result<Vec<Mode>, String> {
    let mut modes = Vec::new();
    for part in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let mode: Mode = part
            .parse()
            .map_err(|e: iqa_core::harness::UnknownMode| e.to_string())?;
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }
    if modes.is_empty() {
        return Err("no modes given".into());
    }
    Ok(modes)
}
