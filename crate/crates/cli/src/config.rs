//! Experiment configuration: a flat TOML file, overridden by CLI flags.
//!
//! ```toml
//! means = [0.9, 0.8]
//! policies = ["UCB", "TS"]
//! horizon = 10000
//! runs = 2000
//! master_seed = 1
//! T = 100
//! W = 128
//! ```

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use slideregret::policies::{DEFAULT_KLUCB_MAX_ITERS, DEFAULT_KLUCB_TOLERANCE, DEFAULT_UCBV_C};
use slideregret::{BanditInstance, PolicyConfig, PolicyKind};

use crate::ExitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Workers {
    Count(usize),
    Named(AutoWorkers),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoWorkers {
    Auto,
}

impl Workers {
    pub const AUTO: Workers = Workers::Named(AutoWorkers::Auto);

    /// Thread count; 0 lets the pool choose.
    pub fn threads(self) -> usize {
        match self {
            Workers::Count(n) => n,
            Workers::Named(AutoWorkers::Auto) => 0,
        }
    }

    pub fn parse(s: &str) -> anyhow::Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::AUTO);
        }
        let n: usize = s.parse().map_err(|_| {
            ExitError::usage(format!("workers must be a count or \"auto\", got {s:?}"))
        })?;
        Ok(Workers::Count(n))
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::AUTO
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub means: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub horizon: usize,
    pub runs: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Episode window length.
    #[serde(rename = "T", default = "default_window")]
    pub window: usize,
    /// Estimator half-width: samples with `|tau - t| < W` are pooled.
    #[serde(rename = "W", default = "default_half_width")]
    pub half_width: usize,
    /// Start of the sliding-regret search; `horizon / 2` when absent.
    #[serde(default)]
    pub t_min: Option<usize>,
    /// Grid step of the emitted curve; `W / 4` when absent.
    #[serde(default)]
    pub curve_step: Option<usize>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub workers: Workers,
    /// Runs (per policy) whose full trace is written.
    #[serde(default = "default_n_trace")]
    pub n_trace: usize,
    #[serde(default = "default_ucbv_c")]
    pub ucbv_c: f64,
    #[serde(default = "default_klucb_tolerance")]
    pub klucb_tolerance: f64,
    #[serde(default = "default_klucb_max_iters")]
    pub klucb_max_iters: u32,
}

fn default_window() -> usize {
    100
}
fn default_half_width() -> usize {
    128
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_n_trace() -> usize {
    2
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

/// Flag values that win over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub runs: Option<usize>,
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub workers: Option<Workers>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Builds a config with defaults for every optional key.
    pub fn new(means: Vec<f64>, policies: Vec<PolicyKind>, horizon: usize, runs: usize) -> Self {
        Self {
            means,
            policies,
            horizon,
            runs,
            master_seed: 0,
            window: default_window(),
            half_width: default_half_width(),
            t_min: None,
            curve_step: None,
            output_dir: default_output_dir(),
            workers: Workers::AUTO,
            n_trace: default_n_trace(),
            ucbv_c: DEFAULT_UCBV_C,
            klucb_tolerance: DEFAULT_KLUCB_TOLERANCE,
            klucb_max_iters: DEFAULT_KLUCB_MAX_ITERS,
        }
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| ExitError::usage(format!("invalid config: {e}")).into())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExitError::usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(r) = o.runs {
            self.runs = r;
        }
        if let Some(h) = o.horizon {
            self.horizon = h;
        }
        if let Some(s) = o.seed {
            self.master_seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
    }

    pub fn t_min(&self) -> usize {
        self.t_min.unwrap_or(self.horizon / 2).max(1)
    }

    pub fn curve_step(&self) -> usize {
        self.curve_step.unwrap_or(self.half_width / 4).max(1)
    }

    pub fn policy_configs(&self) -> Vec<PolicyConfig> {
        self.policies
            .iter()
            .map(|&kind| PolicyConfig {
                kind,
                ucbv_c: self.ucbv_c,
                klucb_tolerance: self.klucb_tolerance,
                klucb_max_iters: self.klucb_max_iters,
            })
            .collect()
    }

    pub fn instance(&self) -> anyhow::Result<BanditInstance> {
        BanditInstance::new(self.means.clone()).map_err(|e| ExitError::usage(e.to_string()).into())
    }

    /// Checks every invariant; failures map to exit code 2.
    pub fn validate(&self) -> anyhow::Result<BanditInstance> {
        let instance = self.instance()?;
        if instance.arms() != 2 {
            return Err(ExitError::usage("episode metrics need exactly two arms").into());
        }
        let fail =
            |m: String| -> anyhow::Result<BanditInstance> { Err(ExitError::usage(m).into()) };
        if self.policies.is_empty() {
            return fail("at least one policy is required".into());
        }
        let mut seen = self.policies.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.policies.len() {
            return fail("policies must not repeat".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.window == 0 || self.half_width == 0 {
            return fail("T and W must be at least 1".into());
        }
        if self.horizon < self.window + self.t_min() {
            return fail(format!(
                "horizon {} must be at least T + t_min = {}",
                self.horizon,
                self.window + self.t_min()
            ));
        }
        for p in self.policy_configs() {
            p.validate().map_err(|e| ExitError::usage(e.to_string()))?;
        }
        Ok(instance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"
means = [0.9, 0.8]
policies = ["UCB", "TS"]
horizon = 10000
runs = 10000
master_seed = 7
T = 100
W = 200
"#;

    #[test]
    fn parses_and_defaults() {
        let cfg = ExperimentConfig::from_toml(FIG2).unwrap();
        assert_eq!(cfg.policies, vec![PolicyKind::Ucb, PolicyKind::Ts]);
        assert_eq!((cfg.window, cfg.half_width), (100, 200));
        assert_eq!(cfg.t_min(), 5000);
        assert_eq!(cfg.curve_step(), 50);
        assert_eq!(cfg.workers, Workers::AUTO);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn workers_forms() {
        let cfg = ExperimentConfig::from_toml(&format!("{FIG2}workers = 3\n")).unwrap();
        assert_eq!(cfg.workers, Workers::Count(3));
        let cfg = ExperimentConfig::from_toml(&format!("{FIG2}workers = \"auto\"\n")).unwrap();
        assert_eq!(cfg.workers.threads(), 0);
        assert!(Workers::parse("many").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = ExperimentConfig::from_toml(FIG2).unwrap();
        cfg.apply(&Overrides {
            runs: Some(5),
            horizon: Some(400),
            seed: Some(9),
            workers: Some(Workers::Count(2)),
            output_dir: None,
        });
        assert_eq!((cfg.runs, cfg.horizon, cfg.master_seed), (5, 400, 9));
        assert_eq!(cfg.workers, Workers::Count(2));
    }

    #[test]
    fn invalid_configs() {
        let bad = |extra: &str| {
            let text = FIG2.replace("runs = 10000", extra);
            ExperimentConfig::from_toml(&text).and_then(|c| c.validate().map(|_| ()))
        };
        assert!(bad("runs = 0").is_err());
        assert!(bad("runs = 1\nt_min = 9950").is_err());
        assert!(bad("runs = 1\nbogus = 1").is_err());
        let same = FIG2.replace("[0.9, 0.8]", "[0.8, 0.8]");
        assert!(ExperimentConfig::from_toml(&same)
            .unwrap()
            .validate()
            .is_err());
        let unknown = FIG2.replace("\"TS\"", "\"EXP3\"");
        assert!(ExperimentConfig::from_toml(&unknown).is_err());
    }
}
