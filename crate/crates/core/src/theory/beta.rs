//! Beta posteriors with integer parameters, evaluated through Binomial tails:
//! `F_{Beta(1+S, 1+N-S)}(x) = 1 - F_{Bin(N+1, x)}(S)`.

use super::quadrature::adaptive_simpson_pieces;
use crate::env::ArmStats;
use crate::error::{BanditError, Result};

fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `ln B(alpha, beta)` for integer parameters.
pub fn ln_beta(alpha: u64, beta: u64) -> f64 {
    ln_factorial(alpha - 1) + ln_factorial(beta - 1) - ln_factorial(alpha + beta - 1)
}

pub fn beta_density(alpha: u64, beta: u64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return 0.0;
    }
    let a = (alpha - 1) as f64;
    let b = (beta - 1) as f64;
    let log_kernel = |v: f64, e: f64| if e == 0.0 { 0.0 } else { e * v.ln() };
    (log_kernel(x, a) + log_kernel(1.0 - x, b) - ln_beta(alpha, beta)).exp()
}

/// CDF of `Beta(alpha, beta)` at `x`, as `P(Bin(alpha + beta - 1, x) >= alpha)`.
pub fn beta_cdf(alpha: u64, beta: u64, x: f64) -> Result<f64> {
    if alpha == 0 || beta == 0 {
        return Err(BanditError::Precondition(
            "Beta parameters must be positive integers".into(),
        ));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(BanditError::Precondition(format!("x = {x} outside [0, 1]")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let trials = alpha + beta - 1;
    let (lx, l1x) = (x.ln(), (1.0 - x).ln());
    // log pmf at k = alpha, then the ratio recurrence upward.
    let ln_choose = ln_factorial(trials) - ln_factorial(alpha) - ln_factorial(trials - alpha);
    let mut log_pmf = ln_choose + alpha as f64 * lx + (trials - alpha) as f64 * l1x;
    let odds = lx - l1x;
    let mut total = 0.0;
    for k in alpha..=trials {
        total += log_pmf.exp();
        if k < trials {
            log_pmf += ((trials - k) as f64 / (k + 1) as f64).ln() + odds;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

fn posterior(stats: &ArmStats) -> (u64, u64) {
    (1 + stats.successes, 1 + stats.pulls - stats.successes)
}

/// Probability that Thompson Sampling's draw for arm 2 exceeds arm 1's,
/// `integral of F_1(x) f_2(x) dx`, under uniform priors.
pub fn ts_pick_probability(stats1: &ArmStats, stats2: &ArmStats) -> f64 {
    let (a1, b1) = posterior(stats1);
    let (a2, b2) = posterior(stats2);
    let integrand =
        |x: f64| beta_cdf(a1, b1, x).expect("valid posterior") * beta_density(a2, b2, x);
    let total = stats1.pulls + stats2.pulls;
    let pieces = 64.max((8.0 * (total as f64).sqrt()) as usize);
    adaptive_simpson_pieces(&integrand, 0.0, 1.0, pieces, 1e-8, 40).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::run_rng;
    use rand_distr::{Beta, Distribution};

    #[test]
    fn uniform_and_small_closed_forms() {
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert!((beta_cdf(1, 1, x).unwrap() - x).abs() < 1e-15);
            // Beta(2,1): x^2, Beta(1,2): 1 - (1-x)^2.
            assert!((beta_cdf(2, 1, x).unwrap() - x * x).abs() < 1e-15);
            assert!((beta_cdf(1, 2, x).unwrap() - (1.0 - (1.0 - x).powi(2))).abs() < 1e-15);
        }
        assert_eq!(beta_cdf(2, 1, 0.5).unwrap(), 0.25);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(beta_cdf(0, 3, 0.5).is_err());
        assert!(beta_cdf(2, 3, 1.5).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for (a, b) in [(1, 1), (4, 3), (30, 70), (101, 1)] {
            let mass = adaptive_simpson_pieces(&|x| beta_density(a, b, x), 0.0, 1.0, 32, 1e-12, 40);
            assert!((mass - 1.0).abs() < 1e-9, "({a},{b}) -> {mass}");
        }
    }

    #[test]
    fn pick_probability_symmetry_and_dominance() {
        let s = ArmStats::new(7, 4);
        assert!((ts_pick_probability(&s, &s) - 0.5).abs() < 1e-7);
        let strong = ArmStats::new(10, 8);
        let weak = ArmStats::new(10, 5);
        assert!(ts_pick_probability(&strong, &weak) < 0.5);
        assert!(ts_pick_probability(&weak, &strong) > 0.5);
        let p = ts_pick_probability(&strong, &weak) + ts_pick_probability(&weak, &strong);
        assert!((p - 1.0).abs() < 1e-7);
    }

    #[test]
    fn pick_probability_matches_monte_carlo() {
        // Arm 1 ~ Beta(2,1), arm 2 ~ Beta(1,2); exact value is 1/6.
        let s1 = ArmStats::new(1, 1);
        let s2 = ArmStats::new(1, 0);
        let exact = ts_pick_probability(&s1, &s2);
        let d1 = Beta::new(2.0, 1.0).unwrap();
        let d2 = Beta::new(1.0, 2.0).unwrap();
        let mut rng = run_rng(2024);
        let n = 1_000_000;
        let wins = (0..n)
            .filter(|_| d2.sample(&mut rng) > d1.sample(&mut rng))
            .count();
        let mc = wins as f64 / n as f64;
        assert!((exact - mc).abs() < 0.002, "{exact} vs {mc}");
        assert!((exact - 1.0 / 6.0).abs() < 1e-8);
    }
}
