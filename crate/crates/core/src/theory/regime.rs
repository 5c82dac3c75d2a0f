//! Asymptotic regimes of index policies on two-arm Bernoulli bandits and
//! the resulting regret-of-exploration predictions.
//!
//! In the regime the suboptimal arm is visited `n2(t) = coefficient * log t`
//! times and the optimism constant is
//! `rho = -(n2 * d_n I2) / ((1 - mu2) * d_mu2 I2)`. Each exploration episode
//! then behaves like a Bernoulli walk with drift `rho (1 - mu2)`.

use serde::{Deserialize, Serialize};

use super::kl::{bernoulli_kl, kl_log_odds};
use super::walk::{expected_sigma, WalkSpec};
use crate::error::{BanditError, Result};
use crate::policies::{
    imed_value, klucb_value, moss_value, ucb_value, ucbv_value, PolicyConfig, PolicyKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInfo {
    pub kind: PolicyKind,
    pub mu1: f64,
    pub mu2: f64,
    /// `n2(t) / log t`.
    pub n2_coefficient: f64,
    /// Partial derivative of the suboptimal arm's index in its mean.
    pub d_mu2_i2: f64,
    /// `n2(t) * d_n I2`, free of `log t` for every supported kind.
    pub d_n_i2_times_n2: f64,
    pub rho: f64,
}

impl RegimeInfo {
    pub fn n2(&self, t: f64) -> f64 {
        self.n2_coefficient * t.ln()
    }

    /// Drift of the exploration walk, `rho (1 - mu2)`.
    pub fn drift(&self) -> f64 {
        self.rho * (1.0 - self.mu2)
    }
}

fn check_means(mu1: f64, mu2: f64) -> Result<()> {
    if !(0.0 < mu2 && mu2 < mu1 && mu1 < 1.0) {
        return Err(BanditError::Precondition(format!(
            "need 0 < mu2 < mu1 < 1, got mu1 = {mu1}, mu2 = {mu2}"
        )));
    }
    Ok(())
}

/// Regime quantities for the five index policies. `ucbv_c` is read only
/// for UCB-V.
pub fn regime_info(kind: PolicyKind, mu1: f64, mu2: f64, ucbv_c: f64) -> Result<RegimeInfo> {
    check_means(mu1, mu2)?;
    let gap = mu1 - mu2;
    let kl21 = bernoulli_kl(mu2, mu1);
    let (n2_coefficient, d_mu2_i2, d_n_i2_times_n2) = match kind {
        PolicyKind::Ucb => (2.0 / (gap * gap), 1.0, -gap / 2.0),
        PolicyKind::Moss => (1.0 / (gap * gap), 1.0, -gap / 2.0),
        PolicyKind::Klucb => {
            let slope = gap / (mu1 * (1.0 - mu1));
            (1.0 / kl21, kl_log_odds(mu1, mu2) / slope, -kl21 / slope)
        }
        PolicyKind::Imed => (1.0 / kl21, kl_log_odds(mu1, mu2) / kl21, -1.0),
        PolicyKind::Ucbv => {
            if ucbv_c.is_nan() || ucbv_c <= 0.0 {
                return Err(BanditError::Config(format!(
                    "ucbv_c = {ucbv_c} must be positive"
                )));
            }
            let var = mu2 * (1.0 - mu2);
            // Root of mu2 + sqrt(2 var x) + 3 c x = mu1 in x = log t / n.
            let coeff =
                var / (2.0 * gap * gap) * (1.0 + (1.0 + 6.0 * ucbv_c * gap / var).sqrt()).powi(2);
            let d_mu = 1.0 + (1.0 - 2.0 * mu2) * (1.0 / (2.0 * coeff * var)).sqrt();
            let dn_n2 = -((var / (2.0 * coeff)).sqrt() + 3.0 * ucbv_c / coeff);
            (coeff, d_mu, dn_n2)
        }
        PolicyKind::Ts | PolicyKind::Med => {
            return Err(BanditError::Unsupported(format!(
                "{kind} is randomized; no index regime"
            )))
        }
    };
    let rho = -d_n_i2_times_n2 / ((1.0 - mu2) * d_mu2_i2);
    if !(0.0..1.0).contains(&rho) {
        return Err(BanditError::Precondition(format!(
            "optimism constant rho = {rho} outside [0, 1)"
        )));
    }
    Ok(RegimeInfo {
        kind,
        mu1,
        mu2,
        n2_coefficient,
        d_mu2_i2,
        d_n_i2_times_n2,
        rho,
    })
}

/// Lower bound on the regret of exploration over windows of length `horizon`:
/// `gap * E[sigma_T]` for index policies, `gap` for TS and MED.
pub fn predicted_regexp(
    kind: PolicyKind,
    mu1: f64,
    mu2: f64,
    horizon: usize,
    ucbv_c: f64,
) -> Result<f64> {
    Ok(predict(kind, mu1, mu2, horizon, ucbv_c)?.predicted_regexp)
}

/// Prediction record emitted by the `predict` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub policy: PolicyKind,
    pub mu1: f64,
    pub mu2: f64,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub rho: Option<f64>,
    pub drift: Option<f64>,
    pub expected_sigma: Option<f64>,
    pub predicted_regexp: f64,
}

pub fn predict(
    kind: PolicyKind,
    mu1: f64,
    mu2: f64,
    horizon: usize,
    ucbv_c: f64,
) -> Result<Prediction> {
    check_means(mu1, mu2)?;
    if horizon == 0 {
        return Err(BanditError::Precondition("T must be at least 1".into()));
    }
    let gap = mu1 - mu2;
    if !kind.is_index() {
        return Ok(Prediction {
            policy: kind,
            mu1,
            mu2,
            horizon,
            rho: None,
            drift: None,
            expected_sigma: None,
            predicted_regexp: gap,
        });
    }
    let regime = regime_info(kind, mu1, mu2, ucbv_c)?;
    let sigma = expected_sigma(&WalkSpec::new(mu2, regime.drift(), horizon)?)?;
    Ok(Prediction {
        policy: kind,
        mu1,
        mu2,
        horizon,
        rho: Some(regime.rho),
        drift: Some(regime.drift()),
        expected_sigma: Some(sigma),
        predicted_regexp: gap * sigma,
    })
}

/// Finite-difference check of the regime derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub kind: PolicyKind,
    pub t: f64,
    pub n2: f64,
    pub rho_expected: f64,
    pub rho_measured: f64,
    pub rho_rel_deviation: f64,
    /// `|d_t I2| / |d_n I2|`
    pub time_ratio: f64,
    /// `|d_mu2 I1| / |d_mu2 I2|`
    pub cross_ratio: f64,
    pub rel_tol: f64,
    pub passed: bool,
}

const MEAN_STEP: f64 = 1e-6;
const COUNT_STEP: f64 = 1.0;
const TIME_STEP: f64 = 1.0;

/// Evaluates the index at the regime `(mu1, mu2, t, n2(t))` and measures
/// its partial derivatives by central differences (mean step 1e-6, count
/// and time steps 1).
pub fn assumption_check(
    policy: &PolicyConfig,
    mu1: f64,
    mu2: f64,
    t: f64,
    rel_tol: f64,
) -> Result<AssumptionReport> {
    let regime = regime_info(policy.kind, mu1, mu2, policy.ucbv_c)?;
    let n2 = regime.n2(t);
    if n2 < 10.0 {
        return Err(BanditError::Precondition(format!(
            "n2(t) = {n2} below 10; t too small for the regime"
        )));
    }
    let (tol, iters) = (1e-15, 200);
    // Index of arm `a` given its mean, the other arm's mean, its count, t.
    let index = |own: f64, other: f64, n: f64, t: f64| -> f64 {
        match policy.kind {
            PolicyKind::Ucb => ucb_value(own, n, t),
            PolicyKind::Moss => moss_value(own, n, t, 2.0),
            PolicyKind::Ucbv => ucbv_value(own, n, t, policy.ucbv_c),
            PolicyKind::Klucb => klucb_value(own, n, t, tol, iters),
            PolicyKind::Imed => imed_value(own, own.max(other), n, t),
            PolicyKind::Ts | PolicyKind::Med => unreachable!("rejected by regime_info"),
        }
    };
    let i2 = |m2: f64, n: f64, t: f64| index(m2, mu1, n, t);
    let i1 = |m2: f64, t: f64| index(mu1, m2, t, t);

    let d_mu2 = (i2(mu2 + MEAN_STEP, n2, t) - i2(mu2 - MEAN_STEP, n2, t)) / (2.0 * MEAN_STEP);
    let d_n = (i2(mu2, n2 + COUNT_STEP, t) - i2(mu2, n2 - COUNT_STEP, t)) / (2.0 * COUNT_STEP);
    let d_t = (i2(mu2, n2, t + TIME_STEP) - i2(mu2, n2, t - TIME_STEP)) / (2.0 * TIME_STEP);
    let d_mu2_i1 = (i1(mu2 + MEAN_STEP, t) - i1(mu2 - MEAN_STEP, t)) / (2.0 * MEAN_STEP);

    let rho_measured = -n2 * d_n / ((1.0 - mu2) * d_mu2);
    let rho_rel_deviation = ((rho_measured - regime.rho) / regime.rho).abs();
    let time_ratio = d_t.abs() / d_n.abs();
    let cross_ratio = d_mu2_i1.abs() / d_mu2.abs();
    Ok(AssumptionReport {
        kind: policy.kind,
        t,
        n2,
        rho_expected: regime.rho,
        rho_measured,
        rho_rel_deviation,
        time_ratio,
        cross_ratio,
        rel_tol,
        passed: rho_rel_deviation <= rel_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ucb_row() {
        let r = regime_info(PolicyKind::Ucb, 0.9, 0.8, 1.0).unwrap();
        assert!((r.n2_coefficient - 200.0).abs() < 1e-9);
        assert_eq!(r.d_mu2_i2, 1.0);
        assert!((r.d_n_i2_times_n2 + 0.05).abs() < 1e-15);
        assert!((r.rho - 0.25).abs() < 1e-12);
        assert!((r.drift() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn moss_shares_ucb_rho() {
        let ucb = regime_info(PolicyKind::Ucb, 0.7, 0.4, 1.0).unwrap();
        let moss = regime_info(PolicyKind::Moss, 0.7, 0.4, 1.0).unwrap();
        assert!((ucb.rho - moss.rho).abs() < 1e-15);
        assert!((moss.rho * 0.6 - 0.15).abs() < 1e-12);
    }

    #[test]
    fn klucb_and_imed_share_rho() {
        for (mu1, mu2) in [(0.9, 0.8), (0.6, 0.3), (0.2, 0.1)] {
            let k = regime_info(PolicyKind::Klucb, mu1, mu2, 1.0).unwrap();
            let i = regime_info(PolicyKind::Imed, mu1, mu2, 1.0).unwrap();
            assert!((k.rho - i.rho).abs() < 1e-12);
            let ratio = bernoulli_kl(mu2, mu1) / kl_log_odds(mu1, mu2);
            assert!((k.rho * (1.0 - mu2) - ratio).abs() < 1e-12);
        }
    }

    #[test]
    fn randomized_kinds_have_no_regime() {
        assert!(regime_info(PolicyKind::Ts, 0.9, 0.8, 1.0).is_err());
        assert!(regime_info(PolicyKind::Ucb, 0.8, 0.8, 1.0).is_err());
    }

    #[test]
    fn predictions() {
        let ts = predict(PolicyKind::Ts, 0.9, 0.8, 100, 1.0).unwrap();
        assert!((ts.predicted_regexp - 0.1).abs() < 1e-15);
        assert_eq!(ts.rho, None);
        let ucb = predict(PolicyKind::Ucb, 0.9, 0.8, 100, 1.0).unwrap();
        assert!((ucb.drift.unwrap() - 0.05).abs() < 1e-12);
        assert!((ucb.predicted_regexp - 0.936_800_654_831_894_9).abs() < 1e-11);
        assert!(
            (predicted_regexp(PolicyKind::Med, 0.9, 0.8, 100, 1.0).unwrap() - 0.1).abs() < 1e-15
        );
    }

    #[test]
    fn ucb_finite_differences() {
        let cfg = PolicyConfig::new(PolicyKind::Ucb);
        let rep = assumption_check(&cfg, 0.9, 0.8, 1e8, 0.05).unwrap();
        assert!(rep.passed, "{rep:?}");
        assert!(rep.time_ratio < 0.05 && rep.cross_ratio < 0.05, "{rep:?}");
    }

    #[test]
    fn ucbv_finite_differences_match_closed_form() {
        let cfg = PolicyConfig::new(PolicyKind::Ucbv);
        let rep = assumption_check(&cfg, 0.9, 0.8, 1e8, 0.05).unwrap();
        assert!(rep.rho_rel_deviation < 1e-3, "{rep:?}");
    }

    #[test]
    fn regime_needs_enough_visits() {
        let cfg = PolicyConfig::new(PolicyKind::Imed);
        assert!(assumption_check(&cfg, 0.9, 0.1, 3.0, 0.05).is_err());
    }
}
