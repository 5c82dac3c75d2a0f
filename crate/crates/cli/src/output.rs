//! On-disk schemas. Floats are written with 17 significant digits; an empty
//! cell is `NA`.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use slideregret::theory::Prediction;

use crate::config::ExperimentConfig;
use crate::experiment::{ExperimentOutput, PolicySummary};

pub const SCHEMA_VERSION: u32 = 1;
pub const EMPTY: &str = "NA";

pub const RUNS_CSV: &str = "runs.csv";
pub const EPISODES_CSV: &str = "episodes.csv";
pub const CURVE_CSV: &str = "regexp_curve.csv";
pub const SLIDING_MAX_CSV: &str = "sliding_max.csv";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const SUMMARY_JSON: &str = "summary.json";
pub const PREDICTIONS_JSON: &str = "predictions.json";
pub const ANALYSIS_CSV: &str = "analysis.csv";

pub const RUNS_HEADER: [&str; 6] = [
    "run_id",
    "policy",
    "seed",
    "N2_final",
    "max_window_regret",
    "longest_subopt_run",
];
pub const EPISODES_HEADER: [&str; 4] = ["policy", "run_id", "tau", "window_suboptimal_count"];
pub const CURVE_HEADER: [&str; 5] = ["policy", "t", "estimate", "n_samples", "std_err"];
pub const SLIDING_MAX_HEADER: [&str; 4] = ["policy", "run_id", "start", "window_suboptimal_count"];
pub const TRACE_HEADER: [&str; 3] = ["round", "action", "reward"];
pub const ANALYSIS_HEADER: [&str; 11] = [
    "policy",
    "t",
    "estimate",
    "n_samples",
    "std_err",
    "predicted",
    "rel_deviation",
    "mean_max_window_regret",
    "max_window_std_err",
    "n_runs",
    "ordering_holds",
];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| EMPTY.to_string(), fmt_f64)
}

pub fn trace_file_name(policy: &str, run_id: u64) -> String {
    format!("trace_{policy}_{run_id}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub optimal_arm: usize,
    pub gap: f64,
    pub t_min: usize,
    pub curve_step: usize,
    pub files: Vec<String>,
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

/// Writes every artifact of `out` into `dir` and returns the file names.
pub fn write_outputs(out: &ExperimentOutput, dir: &Path) -> anyhow::Result<Vec<String>> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output dir {}", dir.display()))?;
    let mut files = vec![
        RUNS_CSV.to_string(),
        EPISODES_CSV.to_string(),
        CURVE_CSV.to_string(),
        SLIDING_MAX_CSV.to_string(),
    ];

    let mut runs = csv_writer(&dir.join(RUNS_CSV))?;
    let mut episodes = csv_writer(&dir.join(EPISODES_CSV))?;
    let mut curve = csv_writer(&dir.join(CURVE_CSV))?;
    let mut sliding = csv_writer(&dir.join(SLIDING_MAX_CSV))?;
    runs.write_record(RUNS_HEADER)?;
    episodes.write_record(EPISODES_HEADER)?;
    curve.write_record(CURVE_HEADER)?;
    sliding.write_record(SLIDING_MAX_HEADER)?;

    for p in &out.policies {
        let name = p.config.kind.name();
        for r in &p.records {
            runs.write_record([
                r.run_id.to_string(),
                name.to_string(),
                r.seed.to_string(),
                r.n2_final.to_string(),
                fmt_f64(r.max_window_regret),
                r.longest_subopt_run.to_string(),
            ])?;
            for e in &r.episodes {
                episodes.write_record([
                    name.to_string(),
                    r.run_id.to_string(),
                    e.tau.to_string(),
                    e.window_suboptimal_count.to_string(),
                ])?;
            }
            for &(start, count) in r.suffix_maxima.iter().rev() {
                sliding.write_record([
                    name.to_string(),
                    r.run_id.to_string(),
                    start.to_string(),
                    count.to_string(),
                ])?;
            }
            if let Some(trace) = &r.trace {
                let file = trace_file_name(name, r.run_id);
                let mut w = csv_writer(&dir.join(&file))?;
                w.write_record(TRACE_HEADER)?;
                for (i, (a, y)) in trace.actions.iter().zip(&trace.rewards).enumerate() {
                    w.write_record([(i + 1).to_string(), (a + 1).to_string(), y.to_string()])?;
                }
                w.flush()?;
                files.push(file);
            }
        }
        for pt in &p.summary.regexp_curve.points {
            curve.write_record([
                name.to_string(),
                pt.t.to_string(),
                fmt_opt(pt.estimate),
                pt.n_samples.to_string(),
                fmt_opt(pt.std_err),
            ])?;
        }
    }
    for w in [&mut runs, &mut episodes, &mut curve, &mut sliding] {
        w.flush()?;
    }

    let summaries: Vec<&PolicySummary> = out.policies.iter().map(|p| &p.summary).collect();
    write_json(&dir.join(SUMMARY_JSON), &summaries)?;
    let predictions: Vec<&Prediction> = summaries
        .iter()
        .filter_map(|s| s.prediction.as_ref())
        .collect();
    write_json(&dir.join(PREDICTIONS_JSON), &predictions)?;
    files.extend([
        SUMMARY_JSON.to_string(),
        PREDICTIONS_JSON.to_string(),
        MANIFEST_JSON.to_string(),
    ]);
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        config: out.config.clone(),
        optimal_arm: out.instance.optimal_arm(),
        gap: out.instance.gap(),
        t_min: out.config.t_min(),
        curve_step: out.config.curve_step(),
        files: files.clone(),
    };
    write_json(&dir.join(MANIFEST_JSON), &manifest)?;
    Ok(files)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}
