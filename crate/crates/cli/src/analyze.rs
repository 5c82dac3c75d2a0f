//! Re-estimation of RegExp' at requested rounds from simulate outputs, with
//! the comparison against predictions and the ordering check against the
//! sliding-regret proxy.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use slideregret::metrics::{estimates_at, suffix_max_at};
use slideregret::theory::Prediction;
use slideregret::{EpisodeSample, PolicyKind};

use crate::experiment::Stat;
use crate::output::{
    fmt_opt, Manifest, ANALYSIS_CSV, ANALYSIS_HEADER, EMPTY, EPISODES_CSV, MANIFEST_JSON,
    PREDICTIONS_JSON, SLIDING_MAX_CSV,
};
use crate::ExitError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisRow {
    pub policy: PolicyKind,
    pub t: usize,
    pub estimate: Option<f64>,
    pub n_samples: usize,
    pub std_err: Option<f64>,
    pub predicted: Option<f64>,
    pub rel_deviation: Option<f64>,
    pub mean_max_window_regret: Option<f64>,
    pub max_window_std_err: Option<f64>,
    pub n_runs: usize,
    /// `estimate <= mean_max_window_regret + 2 SE`; `None` when either side is empty.
    pub ordering_holds: Option<bool>,
}

#[derive(Debug, Deserialize)]
struct EpisodeRow {
    policy: String,
    run_id: u64,
    tau: usize,
    window_suboptimal_count: u32,
}

#[derive(Debug, Deserialize)]
struct SlidingRow {
    policy: String,
    run_id: u64,
    start: usize,
    window_suboptimal_count: u32,
}

fn require(dir: &Path, name: &str) -> anyhow::Result<std::path::PathBuf> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(ExitError::usage(format!("missing input file {}", path.display())).into());
    }
    Ok(path)
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<Vec<T>> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .with_context(|| format!("malformed {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> anyhow::Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed {}", path.display()))
}

fn parse_policy(name: &str) -> anyhow::Result<PolicyKind> {
    name.parse().map_err(|e| anyhow::anyhow!("{e}"))
}

/// Analyzes the simulate outputs in `dir` at rounds `ts`.
pub fn analyze_dir(dir: &Path, ts: &[usize]) -> anyhow::Result<Vec<AnalysisRow>> {
    let manifest: Manifest = read_json(&require(dir, MANIFEST_JSON)?)?;
    let episodes: Vec<EpisodeRow> = read_rows(&require(dir, EPISODES_CSV)?)?;
    let sliding: Vec<SlidingRow> = read_rows(&require(dir, SLIDING_MAX_CSV)?)?;
    let predictions: Vec<Prediction> = read_json(&require(dir, PREDICTIONS_JSON)?)?;
    let cfg = &manifest.config;

    let mut samples: BTreeMap<PolicyKind, Vec<EpisodeSample>> = BTreeMap::new();
    for e in episodes {
        samples
            .entry(parse_policy(&e.policy)?)
            .or_default()
            .push(EpisodeSample {
                run_id: e.run_id,
                tau: e.tau,
                window_suboptimal_count: e.window_suboptimal_count,
                window_regret: manifest.gap * f64::from(e.window_suboptimal_count),
            });
    }
    let mut breakpoints: BTreeMap<(PolicyKind, u64), Vec<(usize, u32)>> = BTreeMap::new();
    for s in sliding {
        breakpoints
            .entry((parse_policy(&s.policy)?, s.run_id))
            .or_default()
            .push((s.start, s.window_suboptimal_count));
    }
    // Rows hold increasing starts; suffix_max_at wants them decreasing.
    for bps in breakpoints.values_mut() {
        bps.sort_by_key(|&(s, _)| std::cmp::Reverse(s));
    }

    let last = cfg.horizon.saturating_sub(cfg.window);
    let mut rows = Vec::new();
    for &policy in &cfg.policies {
        let empty = Vec::new();
        let mine = samples.get(&policy).unwrap_or(&empty);
        let predicted = predictions
            .iter()
            .find(|p| p.policy == policy)
            .map(|p| p.predicted_regexp);
        let estimates = estimates_at(mine, ts, cfg.half_width);
        for (est, &t) in estimates.into_iter().zip(ts) {
            if t == 0 || t > last {
                rows.push(AnalysisRow {
                    policy,
                    t,
                    estimate: None,
                    n_samples: 0,
                    std_err: None,
                    predicted,
                    rel_deviation: None,
                    mean_max_window_regret: None,
                    max_window_std_err: None,
                    n_runs: 0,
                    ordering_holds: None,
                });
                continue;
            }
            let maxima: Vec<f64> = breakpoints
                .range((policy, 0)..=(policy, u64::MAX))
                .filter_map(|(_, bps)| suffix_max_at(bps, t))
                .map(|c| manifest.gap * f64::from(c))
                .collect();
            let stat = Stat::of(&maxima);
            let upper = stat
                .as_ref()
                .map(|s| s.mean + 2.0 * s.std_err.unwrap_or(0.0));
            rows.push(AnalysisRow {
                policy,
                t,
                estimate: est.estimate,
                n_samples: est.n_samples,
                std_err: est.std_err,
                predicted,
                rel_deviation: est.estimate.zip(predicted).map(|(e, p)| (e - p) / p),
                mean_max_window_regret: stat.as_ref().map(|s| s.mean),
                max_window_std_err: stat.as_ref().and_then(|s| s.std_err),
                n_runs: maxima.len(),
                ordering_holds: est.estimate.zip(upper).map(|(e, u)| e <= u),
            });
        }
    }
    write_analysis(&dir.join(ANALYSIS_CSV), &rows)?;
    Ok(rows)
}

pub fn write_analysis(path: &Path, rows: &[AnalysisRow]) -> anyhow::Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(ANALYSIS_HEADER)?;
    for r in rows {
        w.write_record([
            r.policy.name().to_string(),
            r.t.to_string(),
            fmt_opt(r.estimate),
            r.n_samples.to_string(),
            fmt_opt(r.std_err),
            fmt_opt(r.predicted),
            fmt_opt(r.rel_deviation),
            fmt_opt(r.mean_max_window_regret),
            fmt_opt(r.max_window_std_err),
            r.n_runs.to_string(),
            r.ordering_holds
                .map_or(EMPTY.to_string(), |b| b.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable rendering of `rows`.
pub fn render(rows: &[AnalysisRow]) -> String {
    let cell = |x: Option<f64>| x.map_or(EMPTY.to_string(), |v| format!("{v:.6}"));
    let mut out = format!(
        "{:<6} {:>8} {:>10} {:>8} {:>10} {:>10} {:>10} {:>8}\n",
        "policy", "t", "estimate", "n", "predicted", "rel_dev", "slireg", "order"
    );
    for r in rows {
        out += &format!(
            "{:<6} {:>8} {:>10} {:>8} {:>10} {:>10} {:>10} {:>8}\n",
            r.policy.name(),
            r.t,
            cell(r.estimate),
            r.n_samples,
            cell(r.predicted),
            cell(r.rel_deviation),
            cell(r.mean_max_window_regret),
            r.ordering_holds
                .map_or(EMPTY.to_string(), |b| b.to_string()),
        );
    }
    out
}
