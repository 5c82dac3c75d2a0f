//! The clipped first-passage time of a drifted Bernoulli average:
//!
//! `sigma_T = min(T, inf{ t >= 1 : S_t - t (mu2 + drift) <= 0 })`
//!
//! with `S_t` a sum of `t` i.i.d. `B(mu2)` draws. `E[sigma_T]` is computed
//! exactly (up to float summation) by propagating the survivor distribution
//! of `S_t` and summing `P(sigma_T > t)` for `t < T`.

use serde::{Deserialize, Serialize};

use crate::error::{BanditError, Result};

/// Float ties closer than this count as reaching the threshold.
pub const TIE_TOLERANCE: f64 = 1e-12;
const MAX_DENOMINATOR: i128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub mu2: f64,
    pub drift: f64,
    pub horizon: usize,
}

impl WalkSpec {
    pub fn new(mu2: f64, drift: f64, horizon: usize) -> Result<Self> {
        let spec = Self {
            mu2,
            drift,
            horizon,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu2 > 0.0 && self.mu2 < 1.0) {
            return Err(BanditError::Precondition(format!(
                "mu2 = {} outside (0, 1)",
                self.mu2
            )));
        }
        if !(self.drift > 0.0 && self.drift.is_finite()) {
            return Err(BanditError::Precondition(format!(
                "drift = {} must be positive",
                self.drift
            )));
        }
        if self.horizon == 0 {
            return Err(BanditError::Precondition(
                "horizon must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn threshold(&self) -> StopThreshold {
        StopThreshold::new(self.mu2, self.drift)
    }
}

/// Per-step level `theta = mu2 + drift`; the walk survives step `u` while
/// `S_u > u * theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopThreshold {
    /// `theta = num / den` exactly; comparisons are done in integers.
    Rational {
        num: i128,
        den: i128,
    },
    Float(f64),
}

/// Best rational approximation with denominator at most `MAX_DENOMINATOR`,
/// accepted only when it reproduces `x` to a few ulps.
fn as_ratio(x: f64) -> Option<(i128, i128)> {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e12 {
            return None;
        }
        let ai = a as i128;
        let (h2, k2) = (ai * h1 + h0, ai * k1 + k0);
        if k2 > MAX_DENOMINATOR {
            return None;
        }
        if ((h2 as f64 / k2 as f64) - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            return Some((h2, k2));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac == 0.0 {
            return None;
        }
        r = 1.0 / frac;
    }
    None
}

impl StopThreshold {
    pub fn new(mu2: f64, drift: f64) -> Self {
        match (as_ratio(mu2), as_ratio(drift)) {
            (Some((a, b)), Some((c, d))) => {
                let (num, den) = (a * d + c * b, b * d);
                let g = gcd(num, den);
                StopThreshold::Rational {
                    num: num / g,
                    den: den / g,
                }
            }
            _ => StopThreshold::Float(mu2 + drift),
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            StopThreshold::Rational { num, den } => num as f64 / den as f64,
            StopThreshold::Float(theta) => theta,
        }
    }

    /// True while the walk has not stopped at step `u` with `successes` ones.
    pub fn survives(&self, successes: u64, u: u64) -> bool {
        match *self {
            StopThreshold::Rational { num, den } => successes as i128 * den > u as i128 * num,
            StopThreshold::Float(theta) => successes as f64 - u as f64 * theta > TIE_TOLERANCE,
        }
    }

    /// Smallest success count that survives step `u`.
    fn min_surviving(&self, u: u64) -> u64 {
        let approx = (u as f64 * self.value()).floor().max(0.0) as u64;
        let mut s = approx.saturating_sub(2);
        while !self.survives(s, u) {
            s += 1;
        }
        s
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// `P(sigma_T > t)` for `t = 0..T-1`.
pub fn survival_probabilities(spec: &WalkSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let threshold = spec.threshold();
    let (p, q) = (spec.mu2, 1.0 - spec.mu2);
    let mut out = Vec::with_capacity(spec.horizon);
    out.push(1.0);
    // mass[s] = P(S_t = s, survived through t); index offset `lo`.
    let mut mass = vec![1.0f64];
    let mut lo = 0u64;
    let mut next = Vec::new();
    for t in 1..spec.horizon as u64 {
        let floor = threshold.min_surviving(t);
        let new_hi = lo + mass.len() as u64; // max success count after the step
        next.clear();
        if floor <= new_hi {
            next.resize((new_hi - floor + 1) as usize, 0.0);
            for (i, &m) in mass.iter().enumerate() {
                if m == 0.0 {
                    continue;
                }
                let s = lo + i as u64;
                if s >= floor {
                    next[(s - floor) as usize] += m * q;
                }
                if s + 1 >= floor {
                    next[(s + 1 - floor) as usize] += m * p;
                }
            }
        }
        std::mem::swap(&mut mass, &mut next);
        lo = floor;
        let alive: f64 = mass.iter().sum();
        out.push(alive);
        if alive == 0.0 {
            out.resize(spec.horizon, 0.0);
            break;
        }
    }
    Ok(out)
}

/// `E[sigma_T] = sum_{t=0}^{T-1} P(sigma_T > t)`.
pub fn expected_sigma(spec: &WalkSpec) -> Result<f64> {
    Ok(survival_probabilities(spec)?.iter().sum())
}
