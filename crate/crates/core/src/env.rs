//! Bernoulli environments, per-arm statistics and the simulation loop.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};
use crate::policies::PolicyConfig;
use crate::rng::run_rng;

/// Arm means of a Bernoulli bandit. The optimal arm is unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    means: Vec<f64>,
    optimal_arm: usize,
    gap: f64,
}

impl BanditInstance {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.len() < 2 {
            return Err(BanditError::InvalidInstance(format!(
                "need at least two arms, got {}",
                means.len()
            )));
        }
        if let Some(m) = means.iter().find(|m| !(**m > 0.0 && **m < 1.0)) {
            return Err(BanditError::InvalidInstance(format!(
                "mean {m} is not strictly inside (0, 1)"
            )));
        }
        let mut sorted = means.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(BanditError::InvalidInstance(
                "arm means must be pairwise distinct".into(),
            ));
        }
        let optimal_arm = means
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .expect("non-empty");
        let gap = sorted[0] - sorted[1];
        Ok(Self {
            means,
            optimal_arm,
            gap,
        })
    }

    /// Two-arm instance `(B(mu1), B(mu2))`, arm 0 first.
    pub fn two_arm(mu1: f64, mu2: f64) -> Result<Self> {
        Self::new(vec![mu1, mu2])
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn arms(&self) -> usize {
        self.means.len()
    }

    pub fn optimal_arm(&self) -> usize {
        self.optimal_arm
    }

    /// Largest minus second-largest mean.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn best_mean(&self) -> f64 {
        self.means[self.optimal_arm]
    }

    /// The unique suboptimal arm of a two-arm instance.
    pub fn suboptimal_arm(&self) -> Result<usize> {
        if self.arms() != 2 {
            return Err(BanditError::Unsupported(format!(
                "metric defined for two arms only, instance has {}",
                self.arms()
            )));
        }
        Ok(1 - self.optimal_arm)
    }

    /// Mean of the unique suboptimal arm (two-arm instances).
    pub fn suboptimal_mean(&self) -> Result<f64> {
        Ok(self.means[self.suboptimal_arm()?])
    }
}

/// Pull and success counts of one arm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArmStats {
    pub pulls: u64,
    pub successes: u64,
}

impl ArmStats {
    pub fn new(pulls: u64, successes: u64) -> Self {
        debug_assert!(successes <= pulls);
        Self { pulls, successes }
    }

    /// `S/N`, or `None` for an unvisited arm.
    pub fn empirical_mean(&self) -> Option<f64> {
        (self.pulls > 0).then(|| self.successes as f64 / self.pulls as f64)
    }

    pub fn record(&mut self, reward: u8) {
        self.pulls += 1;
        self.successes += u64::from(reward);
    }
}

/// What a policy sees before deciding round `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    /// Current round, 1-based. `sum of pulls == t - 1`.
    pub t: u64,
    pub per_arm: Vec<ArmStats>,
}

impl History {
    pub fn new(arms: usize) -> Self {
        Self {
            t: 1,
            per_arm: vec![ArmStats::default(); arms],
        }
    }

    pub fn arms(&self) -> usize {
        self.per_arm.len()
    }

    pub fn record(&mut self, arm: usize, reward: u8) {
        self.per_arm[arm].record(reward);
        self.t += 1;
    }

    /// Lowest-id arm that has never been pulled.
    pub fn first_unvisited(&self) -> Option<usize> {
        self.per_arm.iter().position(|s| s.pulls == 0)
    }

    /// Largest empirical mean over visited arms.
    pub fn best_empirical_mean(&self) -> Option<f64> {
        self.per_arm
            .iter()
            .filter_map(ArmStats::empirical_mean)
            .max_by(f64::total_cmp)
    }
}

/// One seeded trajectory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLog {
    pub seed: u64,
    pub arms: usize,
    pub optimal_arm: usize,
    pub actions: Vec<usize>,
    pub rewards: Vec<u8>,
    /// `subopt_prefix[i]` counts suboptimal pulls in rounds `1..=i+1`.
    pub subopt_prefix: Vec<u32>,
}

impl RunLog {
    pub fn horizon(&self) -> usize {
        self.actions.len()
    }

    /// Suboptimal pulls in rounds `1..=t` (`t = 0` gives 0).
    pub fn suboptimal_through(&self, t: usize) -> u32 {
        if t == 0 {
            0
        } else {
            self.subopt_prefix[t - 1]
        }
    }

    /// Suboptimal pulls in rounds `[s, e)`.
    pub fn suboptimal_in(&self, s: usize, e: usize) -> u32 {
        self.suboptimal_through(e - 1) - self.suboptimal_through(s - 1)
    }

    /// Action taken at round `t` (1-based).
    pub fn action(&self, t: usize) -> usize {
        self.actions[t - 1]
    }

    /// Pull count of `arm` over the whole run.
    pub fn pulls_of(&self, arm: usize) -> usize {
        self.actions.iter().filter(|&&a| a == arm).count()
    }

    /// Builds a log from raw actions, recomputing prefix counts. Rewards are
    /// taken as given (zeros when empty).
    pub fn from_actions(
        actions: Vec<usize>,
        rewards: Vec<u8>,
        arms: usize,
        optimal_arm: usize,
    ) -> Self {
        let rewards = if rewards.is_empty() {
            vec![0; actions.len()]
        } else {
            rewards
        };
        assert_eq!(rewards.len(), actions.len());
        let mut count = 0u32;
        let subopt_prefix = actions
            .iter()
            .map(|&a| {
                count += u32::from(a != optimal_arm);
                count
            })
            .collect();
        Self {
            seed: 0,
            arms,
            optimal_arm,
            actions,
            rewards,
            subopt_prefix,
        }
    }
}

/// Bernoulli reward for `arm`. Consumes exactly one `f64` draw.
pub fn draw_reward<R: Rng + ?Sized>(
    instance: &BanditInstance,
    arm: usize,
    rng: &mut R,
) -> Result<u8> {
    let mean = *instance.means.get(arm).ok_or(BanditError::InvalidArm {
        arm,
        arms: instance.arms(),
    })?;
    Ok(u8::from(rng.random::<f64>() < mean))
}

/// Simulates rounds `1..=horizon`. Deterministic in `(instance, policy, seed)`.
pub fn run_once(
    instance: &BanditInstance,
    policy: &PolicyConfig,
    horizon: usize,
    seed: u64,
) -> Result<RunLog> {
    policy.validate()?;
    let arms = instance.arms();
    if horizon < arms {
        return Err(BanditError::Precondition(format!(
            "horizon {horizon} shorter than the {arms} bootstrap rounds"
        )));
    }
    let mut rng = run_rng(seed);
    let mut history = History::new(arms);
    let optimal = instance.optimal_arm();
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let mut subopt_prefix = Vec::with_capacity(horizon);
    let mut subopt = 0u32;
    for _ in 0..horizon {
        let arm = policy.select_arm(&history, &mut rng)?;
        let reward = draw_reward(instance, arm, &mut rng)?;
        history.record(arm, reward);
        subopt += u32::from(arm != optimal);
        actions.push(arm);
        rewards.push(reward);
        subopt_prefix.push(subopt);
    }
    Ok(RunLog {
        seed,
        arms,
        optimal_arm: optimal,
        actions,
        rewards,
        subopt_prefix,
    })
}

/// `sum over t in [s, e) of (mu* - mu_{A_t})`. Equals `gap * suboptimal count`
/// on two-arm instances.
pub fn pseudo_regret(log: &RunLog, instance: &BanditInstance, s: usize, e: usize) -> Result<f64> {
    let horizon = log.horizon();
    if s < 1 || s > e || e > horizon {
        return Err(BanditError::InvalidWindow {
            start: s,
            end: e,
            horizon,
        });
    }
    if instance.arms() == 2 {
        return Ok(instance.gap() * f64::from(log.suboptimal_in(s, e)));
    }
    let best = instance.best_mean();
    Ok(log.actions[s - 1..e - 1]
        .iter()
        .map(|&a| best - instance.means()[a])
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policies::PolicyKind;
    use crate::rng::run_rng;

    #[test]
    fn instance_validation() {
        assert!(BanditInstance::two_arm(0.9, 0.8).is_ok());
        assert!(BanditInstance::two_arm(0.9, 0.9).is_err());
        assert!(BanditInstance::two_arm(1.0, 0.8).is_err());
        assert!(BanditInstance::two_arm(0.9, 0.0).is_err());
        assert!(BanditInstance::new(vec![0.5]).is_err());
        let inst = BanditInstance::new(vec![0.2, 0.7, 0.5]).unwrap();
        assert_eq!(inst.optimal_arm(), 1);
        assert!((inst.gap() - 0.2).abs() < 1e-15);
        assert!(inst.suboptimal_arm().is_err());
    }

    #[test]
    fn reward_frequency_near_one() {
        let inst = BanditInstance::two_arm(0.999, 0.5).unwrap();
        let mut rng = run_rng(11);
        let n = 1_000_000;
        let hits: u64 = (0..n)
            .map(|_| u64::from(draw_reward(&inst, 0, &mut rng).unwrap()))
            .sum();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.999).abs() <= 0.001, "{freq}");
    }

    #[test]
    fn reward_stream_is_reproducible() {
        let inst = BanditInstance::two_arm(0.9, 0.5).unwrap();
        let draw = |seed| {
            let mut rng = run_rng(seed);
            (0..256)
                .map(|_| draw_reward(&inst, 1, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn invalid_arm_rejected() {
        let inst = BanditInstance::two_arm(0.9, 0.8).unwrap();
        let mut rng = run_rng(0);
        assert_eq!(
            draw_reward(&inst, 2, &mut rng),
            Err(BanditError::InvalidArm { arm: 2, arms: 2 })
        );
    }

    #[test]
    fn run_accounting_and_replay() {
        let inst = BanditInstance::two_arm(0.9, 0.8).unwrap();
        for kind in PolicyKind::ALL {
            let cfg = PolicyConfig::new(kind);
            let log = run_once(&inst, &cfg, 10, 3).unwrap();
            assert_eq!(log.horizon(), 10);
            assert_eq!(log.rewards.len(), 10);
            assert_eq!(log.subopt_prefix.len(), 10);
            assert_eq!(log.pulls_of(0) + log.pulls_of(1), 10);
            assert_eq!(log, run_once(&inst, &cfg, 10, 3).unwrap());
        }
    }

    #[test]
    fn regret_is_gap_times_suboptimal_count() {
        let inst = BanditInstance::two_arm(0.9, 0.8).unwrap();
        let log = run_once(&inst, &PolicyConfig::new(PolicyKind::Ucb), 500, 1).unwrap();
        for t in 1..=log.horizon() {
            let reg = pseudo_regret(&log, &inst, 1, t).unwrap();
            let direct = log.actions[..t - 1].iter().filter(|&&a| a == 1).count();
            assert!((reg - 0.1 * direct as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn pseudo_regret_examples() {
        let inst = BanditInstance::two_arm(0.9, 0.8).unwrap();
        let log = RunLog::from_actions(vec![0, 1, 0, 1, 0], vec![], 2, 0);
        assert!((pseudo_regret(&log, &inst, 1, 5).unwrap() - 0.2).abs() < 1e-12);
        let opt = RunLog::from_actions(vec![0; 8], vec![], 2, 0);
        assert_eq!(pseudo_regret(&opt, &inst, 2, 7).unwrap(), 0.0);
        let bad = RunLog::from_actions(vec![1; 8], vec![], 2, 0);
        assert!((pseudo_regret(&bad, &inst, 2, 7).unwrap() - 0.5).abs() < 1e-12);
        assert!(pseudo_regret(&bad, &inst, 0, 3).is_err());
        assert!(pseudo_regret(&bad, &inst, 4, 3).is_err());
        assert!(pseudo_regret(&bad, &inst, 1, 9).is_err());
    }

    #[test]
    fn pseudo_regret_many_arms() {
        let inst = BanditInstance::new(vec![0.2, 0.7, 0.5]).unwrap();
        let log = RunLog::from_actions(vec![0, 1, 2, 2], vec![], 3, 1);
        let reg = pseudo_regret(&log, &inst, 1, 4).unwrap();
        assert!((reg - 0.7).abs() < 1e-12);
    }
}
