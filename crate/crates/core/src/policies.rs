//! Decision rules: five index policies and two randomized ones.
//!
//! Every policy first pulls each arm once, lowest id first. Index policies
//! then pick the argmax of their index, breaking exact ties uniformly with
//! one draw from the run's generator.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::env::{ArmStats, History};
use crate::error::{BanditError, Result};
use crate::theory::bernoulli_kl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PolicyKind {
    Ucb,
    Moss,
    Ucbv,
    Klucb,
    Imed,
    Ts,
    Med,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 7] = [
        PolicyKind::Ucb,
        PolicyKind::Moss,
        PolicyKind::Ucbv,
        PolicyKind::Klucb,
        PolicyKind::Imed,
        PolicyKind::Ts,
        PolicyKind::Med,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Ucb => "UCB",
            PolicyKind::Moss => "MOSS",
            PolicyKind::Ucbv => "UCBV",
            PolicyKind::Klucb => "KLUCB",
            PolicyKind::Imed => "IMED",
            PolicyKind::Ts => "TS",
            PolicyKind::Med => "MED",
        }
    }

    pub fn is_index(self) -> bool {
        !matches!(self, PolicyKind::Ts | PolicyKind::Med)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_uppercase();
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| BanditError::Config(format!("unknown policy kind {s:?}")))
    }
}

impl From<PolicyKind> for String {
    fn from(k: PolicyKind) -> String {
        k.name().to_string()
    }
}

impl TryFrom<String> for PolicyKind {
    type Error = BanditError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

pub const DEFAULT_UCBV_C: f64 = 1.0;
pub const DEFAULT_KLUCB_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_KLUCB_MAX_ITERS: u32 = 100;
/// Upper end of the KL-UCB search interval.
pub const KLUCB_CEILING: f64 = 1.0 - 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default = "default_ucbv_c")]
    pub ucbv_c: f64,
    #[serde(default = "default_klucb_tolerance")]
    pub klucb_tolerance: f64,
    #[serde(default = "default_klucb_max_iters")]
    pub klucb_max_iters: u32,
}

fn default_ucbv_c() -> f64 {
    DEFAULT_UCBV_C
}
fn default_klucb_tolerance() -> f64 {
    DEFAULT_KLUCB_TOLERANCE
}
fn default_klucb_max_iters() -> u32 {
    DEFAULT_KLUCB_MAX_ITERS
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            ucbv_c: DEFAULT_UCBV_C,
            klucb_tolerance: DEFAULT_KLUCB_TOLERANCE,
            klucb_max_iters: DEFAULT_KLUCB_MAX_ITERS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PolicyKind::Ucbv if !(self.ucbv_c > 0.0 && self.ucbv_c.is_finite()) => Err(
                BanditError::Config(format!("ucbv_c = {} must be positive", self.ucbv_c)),
            ),
            PolicyKind::Klucb if !(self.klucb_tolerance > 0.0 && self.klucb_tolerance <= 1e-6) => {
                Err(BanditError::Config(format!(
                    "klucb_tolerance = {} must lie in (0, 1e-6]",
                    self.klucb_tolerance
                )))
            }
            PolicyKind::Klucb if self.klucb_max_iters == 0 => Err(BanditError::Config(
                "klucb_max_iters must be positive".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Index of one arm; `None` for randomized kinds.
    pub fn index(&self, stats: &ArmStats, history: &History) -> Option<f64> {
        let t = history.t;
        Some(match self.kind {
            PolicyKind::Ucb => ucb_index(stats, t),
            PolicyKind::Moss => moss_index(stats, t, history.arms()),
            PolicyKind::Ucbv => ucbv_index(stats, t, self.ucbv_c),
            PolicyKind::Klucb => klucb_index(stats, t, self.klucb_tolerance, self.klucb_max_iters),
            PolicyKind::Imed => imed_index(stats, history.best_empirical_mean().unwrap_or(0.0), t),
            PolicyKind::Ts | PolicyKind::Med => return None,
        })
    }

    /// Chooses the arm for round `history.t`.
    pub fn select_arm<R: Rng + ?Sized>(&self, history: &History, rng: &mut R) -> Result<usize> {
        if let Some(arm) = history.first_unvisited() {
            return Ok(arm);
        }
        match self.kind {
            PolicyKind::Ts => Ok(ts_draw(history, rng)),
            PolicyKind::Med => {
                let dist = med_distribution(history)?;
                Ok(sample_categorical(&dist, rng))
            }
            _ => {
                let indexes: Vec<f64> = history
                    .per_arm
                    .iter()
                    .map(|s| self.index(s, history).expect("index kind"))
                    .collect();
                Ok(argmax_random_tie(&indexes, rng))
            }
        }
    }
}

/// Argmax with exact ties broken uniformly. Draws from `rng` only on ties.
pub fn argmax_random_tie<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == best)
        .map(|(i, _)| i)
        .collect();
    match ties.len() {
        0 => 0,
        1 => ties[0],
        n => ties[rng.random_range(0..n)],
    }
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

// Index formulas on real-valued counts. `n > 0` is assumed; the `ArmStats` wrappers handle `n = 0`.

pub fn ucb_value(mean: f64, n: f64, t: f64) -> f64 {
    mean + (2.0 * t.ln() / n).sqrt()
}

pub fn moss_value(mean: f64, n: f64, t: f64, arms: f64) -> f64 {
    mean + ((t / (arms * n)).ln().max(0.0) / n).sqrt()
}

pub fn ucbv_value(mean: f64, n: f64, t: f64, c: f64) -> f64 {
    let log_t = t.ln();
    mean + (2.0 * mean * (1.0 - mean) * log_t / n).sqrt() + 3.0 * c * log_t / n
}

/// Largest `mu` in `[mean, 1)` with `n kl(mean, mu) <= log t`, by bisection.
pub fn klucb_value(mean: f64, n: f64, t: f64, tol: f64, max_iters: u32) -> f64 {
    let budget = t.ln();
    let mut lo = mean;
    let mut hi = KLUCB_CEILING;
    if lo >= hi {
        return 1.0;
    }
    if n * bernoulli_kl(mean, hi) <= budget {
        return hi;
    }
    let mut iters = 0;
    while hi - lo > tol && iters < max_iters {
        let mid = 0.5 * (lo + hi);
        if n * bernoulli_kl(mean, mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
        iters += 1;
    }
    lo
}

/// `log t / (n kl(mean, best) + log n)`, `+inf` on a zero denominator.
pub fn imed_value(mean: f64, best: f64, n: f64, t: f64) -> f64 {
    let denom = n * bernoulli_kl(mean, best) + n.ln();
    if denom == 0.0 {
        f64::INFINITY
    } else {
        t.ln() / denom
    }
}

pub fn ucb_index(stats: &ArmStats, t: u64) -> f64 {
    match stats.empirical_mean() {
        None => f64::INFINITY,
        Some(m) => ucb_value(m, stats.pulls as f64, t as f64),
    }
}

pub fn moss_index(stats: &ArmStats, t: u64, arms: usize) -> f64 {
    match stats.empirical_mean() {
        None => f64::INFINITY,
        Some(m) => moss_value(m, stats.pulls as f64, t as f64, arms as f64),
    }
}

pub fn ucbv_index(stats: &ArmStats, t: u64, c: f64) -> f64 {
    match stats.empirical_mean() {
        None => f64::INFINITY,
        Some(m) => ucbv_value(m, stats.pulls as f64, t as f64, c),
    }
}

/// KL-UCB index; 1 for an unvisited arm.
pub fn klucb_index(stats: &ArmStats, t: u64, tol: f64, max_iters: u32) -> f64 {
    match stats.empirical_mean() {
        None => 1.0,
        Some(m) => klucb_value(m, stats.pulls as f64, t as f64, tol, max_iters),
    }
}

/// Reworked IMED index (maximized), against the best empirical mean.
pub fn imed_index(stats: &ArmStats, best_empirical_mean: f64, t: u64) -> f64 {
    match stats.empirical_mean() {
        None => f64::INFINITY,
        Some(m) => imed_value(m, best_empirical_mean, stats.pulls as f64, t as f64),
    }
}

/// One posterior draw `Beta(1 + S, 1 + N - S)`.
pub fn ts_sample<R: Rng + ?Sized>(stats: &ArmStats, rng: &mut R) -> f64 {
    let alpha = 1.0 + stats.successes as f64;
    let beta = 1.0 + (stats.pulls - stats.successes) as f64;
    Beta::new(alpha, beta)
        .expect("positive parameters")
        .sample(rng)
}

/// Thompson Sampling: one posterior draw per arm, in arm order; argmax with
/// ties to the lowest id.
pub fn ts_draw<R: Rng + ?Sized>(history: &History, rng: &mut R) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (arm, stats) in history.per_arm.iter().enumerate() {
        let theta = ts_sample(stats, rng);
        if theta > best.1 {
            best = (arm, theta);
        }
    }
    best.0
}

/// MED sampling distribution, `p_a ~ exp(-N_a kl(mean_a, best mean))`.
pub fn med_distribution(history: &History) -> Result<Vec<f64>> {
    let means: Vec<f64> = history
        .per_arm
        .iter()
        .map(|s| s.empirical_mean())
        .collect::<Option<_>>()
        .ok_or_else(|| BanditError::Precondition("MED needs every arm pulled once".into()))?;
    let best = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = history
        .per_arm
        .iter()
        .zip(&means)
        .map(|(s, &m)| {
            if m == best {
                1.0
            } else {
                (-(s.pulls as f64) * bernoulli_kl(m, best)).exp()
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}
