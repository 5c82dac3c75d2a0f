//! Closed-form and exactly computable quantities used to predict and
//! cross-check simulation output.

mod beta;
mod kl;
pub mod quadrature;
mod regime;
mod sanov;
mod walk;

pub use beta::{beta_cdf, beta_density, ln_beta, ts_pick_probability};
pub use kl::{bernoulli_kl, kl_log_odds};
pub use regime::{
    assumption_check, predict, predicted_regexp, regime_info, AssumptionReport, Prediction,
    RegimeInfo,
};
pub use sanov::{clip_unit, sanov_bounds, sanov_bounds_with, SanovBounds, Tail};
pub use walk::{expected_sigma, survival_probabilities, StopThreshold, WalkSpec};
