/// Bernoulli relative entropy `kl(p, q)` with `0 log 0 = 0`.
///
/// Returns `+inf` when `q` is 0 or 1 and `p` differs from it.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
    if p == q {
        return 0.0;
    }
    if q <= 0.0 || q >= 1.0 {
        return f64::INFINITY;
    }
    let head = if p > 0.0 { p * log_ratio(p, q) } else { 0.0 };
    let tail = if p < 1.0 {
        (1.0 - p) * log_ratio(1.0 - p, 1.0 - q)
    } else {
        0.0
    };
    // Rounding can push tiny divergences slightly below zero.
    (head + tail).max(0.0)
}

/// `ln(a / b)`; through `ln_1p` when the ratio is near 1.
fn log_ratio(a: f64, b: f64) -> f64 {
    let rel = (a - b) / b;
    if rel.abs() < 0.5 {
        rel.ln_1p()
    } else {
        (a / b).ln()
    }
}

/// `log(mu1 (1 - mu2) / (mu2 (1 - mu1)))`, the log-odds ratio appearing in
/// derivatives of kl-based indexes.
pub fn kl_log_odds(mu1: f64, mu2: f64) -> f64 {
    (mu1 * (1.0 - mu2) / (mu2 * (1.0 - mu1))).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(bernoulli_kl(0.3, 0.3), 0.0);
        assert!((bernoulli_kl(0.0, 0.4) + (0.6f64).ln()).abs() < 1e-15);
        // Frozen from a 40-digit evaluation.
        assert!((bernoulli_kl(0.8, 0.9) - 0.044_403_007_586_882_29).abs() < 1e-15);
        assert_eq!(bernoulli_kl(0.5, 1.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(1.0, 1.0), 0.0);
        assert_eq!(bernoulli_kl(0.0, 0.0), 0.0);
    }

    #[test]
    fn matches_integrated_log_likelihood_ratio() {
        // kl(p, q) = integral over u in [q, p] of (p - u) / (u (1 - u)) du.
        let (p, q) = (0.8, 0.9);
        let f = |u: f64| (p - u) / (u * (1.0 - u));
        let integral = crate::theory::quadrature::adaptive_simpson_pieces(&f, q, p, 16, 1e-14, 50);
        assert!((integral - bernoulli_kl(p, q)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn nonnegative_and_zero_only_on_diagonal(p in 0.0f64..=1.0, q in 0.001f64..0.999) {
            let d = bernoulli_kl(p, q);
            prop_assert!(d >= 0.0);
            if (p - q).abs() > 1e-6 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn convex_in_second_argument(p in 0.0f64..=1.0, a in 0.01f64..0.99, b in 0.01f64..0.99, w in 0.0f64..=1.0) {
            let mid = w * a + (1.0 - w) * b;
            let lhs = bernoulli_kl(p, mid);
            let rhs = w * bernoulli_kl(p, a) + (1.0 - w) * bernoulli_kl(p, b);
            prop_assert!(lhs <= rhs + 1e-12);
        }
    }
}
