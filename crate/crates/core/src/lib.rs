//! Stochastic two-arm Bernoulli bandits: a deterministic simulation core,
//! seven decision rules, trajectory metrics (windowed pseudo-regret,
//! exploration episodes, sliding-regret proxy) and closed-form predictors
//! for the regret accumulated after each exploration episode.
//!
//! Rounds are 1-indexed throughout. Arm ids are 0-based `usize` values.

pub mod env;
pub mod error;
pub mod metrics;
pub mod policies;
pub mod rng;
pub mod theory;
pub mod verify;

pub use env::{draw_reward, pseudo_regret, run_once, ArmStats, BanditInstance, History, RunLog};
pub use error::{BanditError, Result};
pub use metrics::{EpisodeSample, RegExpCurve, WindowEstimate};
pub use policies::{PolicyConfig, PolicyKind};
pub use rng::{run_rng, run_seed, SimRng};
