//! Parallel execution of `runs x policies` simulations and the
//! single-threaded, order-canonical merge.

use std::collections::BTreeMap;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use slideregret::metrics::{
    episode_samples, max_window_regret, suboptimal_run_lengths, window_suffix_maxima,
};
use slideregret::theory::{predict, Prediction};
use slideregret::{
    run_once, run_seed, BanditInstance, EpisodeSample, PolicyConfig, PolicyKind, RegExpCurve,
};

use crate::config::ExperimentConfig;

/// Everything kept from one simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub policy: PolicyKind,
    pub run_id: u64,
    pub seed: u64,
    pub n2_final: usize,
    pub max_window_start: usize,
    pub max_window_regret: f64,
    pub longest_subopt_run: usize,
    pub run_lengths: Vec<usize>,
    pub episodes: Vec<EpisodeSample>,
    pub suffix_maxima: Vec<(usize, u32)>,
    pub trace: Option<Trace>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub actions: Vec<usize>,
    pub rewards: Vec<u8>,
}

/// Summary statistic with its sample count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stat {
    pub n: usize,
    pub mean: f64,
    pub std_err: Option<f64>,
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Some(Self {
            n,
            mean,
            std_err,
            min: sorted[0],
            median,
            max: sorted[n - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLengthHistogram {
    pub t_min: usize,
    pub blocks: usize,
    /// Block length to number of blocks.
    pub counts: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub runs: usize,
    pub episode_samples: usize,
    pub max_window_regret: Option<Stat>,
    pub n2_final: Option<Stat>,
    pub longest_subopt_run: Option<Stat>,
    pub run_length_histogram: RunLengthHistogram,
    pub prediction: Option<Prediction>,
    pub prediction_error: Option<String>,
    pub regexp_curve: RegExpCurve,
}

#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub config: PolicyConfig,
    pub records: Vec<RunRecord>,
    pub summary: PolicySummary,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub instance: BanditInstance,
    pub policies: Vec<PolicyOutcome>,
}

/// Simulates one run and reduces it to a [`RunRecord`].
pub fn simulate_run(
    cfg: &ExperimentConfig,
    instance: &BanditInstance,
    policy: &PolicyConfig,
    run_id: u64,
) -> slideregret::Result<RunRecord> {
    let seed = run_seed(cfg.master_seed, run_id);
    let log = run_once(instance, policy, cfg.horizon, seed)?;
    let optimal = instance.optimal_arm();
    let (max_window_start, max_window_regret) =
        max_window_regret(&log, instance, cfg.window, cfg.t_min())?;
    let run_lengths = suboptimal_run_lengths(&log, optimal, cfg.t_min());
    let trace = ((run_id as usize) < cfg.n_trace).then(|| Trace {
        actions: log.actions.clone(),
        rewards: log.rewards.clone(),
    });
    Ok(RunRecord {
        policy: policy.kind,
        run_id,
        seed,
        n2_final: log.horizon() - log.pulls_of(optimal),
        max_window_start,
        max_window_regret,
        longest_subopt_run: run_lengths.iter().copied().max().unwrap_or(0),
        episodes: episode_samples(&log, instance, cfg.window, run_id)?,
        suffix_maxima: window_suffix_maxima(&log, cfg.window)?,
        run_lengths,
        trace,
    })
}

fn summarize(
    cfg: &ExperimentConfig,
    instance: &BanditInstance,
    policy: PolicyKind,
    records: &[RunRecord],
) -> anyhow::Result<PolicySummary> {
    let samples: Vec<EpisodeSample> = records
        .iter()
        .flat_map(|r| r.episodes.iter().copied())
        .collect();
    let curve = RegExpCurve::build(
        &samples,
        cfg.window,
        cfg.half_width,
        cfg.curve_step(),
        cfg.horizon - cfg.window,
    )?;
    let mut counts = BTreeMap::new();
    for len in records.iter().flat_map(|r| r.run_lengths.iter()) {
        *counts.entry(*len).or_insert(0) += 1;
    }
    let column = |f: fn(&RunRecord) -> f64| Stat::of(&records.iter().map(f).collect::<Vec<_>>());
    let (mu1, mu2) = (instance.best_mean(), instance.suboptimal_mean()?);
    let (prediction, prediction_error) = match predict(policy, mu1, mu2, cfg.window, cfg.ucbv_c) {
        Ok(p) => (Some(p), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(PolicySummary {
        policy,
        runs: records.len(),
        episode_samples: samples.len(),
        max_window_regret: column(|r| r.max_window_regret),
        n2_final: column(|r| r.n2_final as f64),
        longest_subopt_run: column(|r| r.longest_subopt_run as f64),
        run_length_histogram: RunLengthHistogram {
            t_min: cfg.t_min(),
            blocks: counts.values().sum(),
            counts,
        },
        prediction,
        prediction_error,
        regexp_curve: curve,
    })
}

/// Runs the whole experiment on a pool of `cfg.workers` threads. The result
/// does not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<ExperimentOutput> {
    let instance = cfg.validate()?;
    let policies = cfg.policy_configs();
    let tasks: Vec<(usize, u64)> = (0..policies.len())
        .flat_map(|p| (0..cfg.runs as u64).map(move |r| (p, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.threads())
        .build()
        .context("cannot start worker pool")?;
    let mut records: Vec<RunRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(p, r)| simulate_run(cfg, &instance, &policies[p], r))
            .collect::<slideregret::Result<Vec<_>>>()
    })?;
    records.sort_by_key(|r| (r.policy, r.run_id));

    let mut outcomes = Vec::with_capacity(policies.len());
    for policy in &policies {
        let mine: Vec<RunRecord> = records
            .iter()
            .filter(|r| r.policy == policy.kind)
            .cloned()
            .collect();
        let summary = summarize(cfg, &instance, policy.kind, &mine)?;
        outcomes.push(PolicyOutcome {
            config: *policy,
            records: mine,
            summary,
        });
    }
    Ok(ExperimentOutput {
        config: cfg.clone(),
        instance,
        policies: outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            vec![0.9, 0.8],
            vec![PolicyKind::Ucb, PolicyKind::Ts],
            400,
            6,
        );
        cfg.window = 20;
        cfg.half_width = 16;
        cfg.master_seed = 3;
        cfg
    }

    #[test]
    fn stat_basics() {
        let s = Stat::of(&[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_eq!((s.n, s.min, s.max), (4, 1.0, 4.0));
        assert_eq!((s.mean, s.median), (2.5, 2.5));
        assert!(Stat::of(&[]).is_none());
        assert!(Stat::of(&[1.0]).unwrap().std_err.is_none());
    }

    #[test]
    fn records_are_canonical_and_worker_independent() {
        let mut a = small();
        a.workers = crate::config::Workers::Count(1);
        let mut b = small();
        b.workers = crate::config::Workers::Count(3);
        let (ra, rb) = (run_experiment(&a).unwrap(), run_experiment(&b).unwrap());
        for (pa, pb) in ra.policies.iter().zip(&rb.policies) {
            assert_eq!(pa.records, pb.records);
            assert_eq!(pa.summary, pb.summary);
            let ids: Vec<u64> = pa.records.iter().map(|r| r.run_id).collect();
            assert_eq!(ids, (0..6).collect::<Vec<_>>());
        }
    }

    #[test]
    fn traces_only_for_first_runs() {
        let out = run_experiment(&small()).unwrap();
        for p in &out.policies {
            let traced: Vec<u64> = p
                .records
                .iter()
                .filter(|r| r.trace.is_some())
                .map(|r| r.run_id)
                .collect();
            assert_eq!(traced, vec![0, 1]);
        }
    }

    #[test]
    fn record_consistency() {
        let out = run_experiment(&small()).unwrap();
        for p in &out.policies {
            for r in &p.records {
                let tail: usize = r.run_lengths.iter().sum();
                assert!(tail <= r.n2_final);
                assert!(r.longest_subopt_run <= tail);
                let best =
                    slideregret::metrics::suffix_max_at(&r.suffix_maxima, out.config.t_min())
                        .unwrap();
                assert!((0.1 * f64::from(best) - r.max_window_regret).abs() < 1e-12);
            }
            assert_eq!(p.summary.runs, 6);
        }
    }
}
