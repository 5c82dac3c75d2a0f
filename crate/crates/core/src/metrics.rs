//! Trajectory analytics on two-arm runs: exploration episodes, windowed
//! regret after each episode, the kernel estimate of the expected regret of
//! exploration around a round, and the finite-horizon sliding-regret proxy.

use serde::{Deserialize, Serialize};

use crate::env::{BanditInstance, RunLog};
use crate::error::{BanditError, Result};

fn require_two_arms(log: &RunLog) -> Result<()> {
    if log.arms != 2 {
        return Err(BanditError::Unsupported(format!(
            "episode metrics need two arms, run has {}",
            log.arms
        )));
    }
    Ok(())
}

/// Rounds where play switches from `optimal` to the other arm. The first
/// suboptimal round always counts.
pub fn detect_episodes(log: &RunLog, optimal: usize) -> Result<Vec<usize>> {
    require_two_arms(log)?;
    let mut taus = Vec::new();
    let mut seen_suboptimal = false;
    let mut prev = None;
    for (i, &a) in log.actions.iter().enumerate() {
        if a != optimal && (!seen_suboptimal || prev == Some(optimal)) {
            taus.push(i + 1);
            seen_suboptimal = true;
        }
        prev = Some(a);
    }
    Ok(taus)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSample {
    pub run_id: u64,
    pub tau: usize,
    pub window_suboptimal_count: u32,
    pub window_regret: f64,
}

/// One sample per episode `tau` with `tau + window <= horizon`; the window
/// covers rounds `[tau, tau + window)`. Overlapping windows are all kept.
pub fn episode_samples(
    log: &RunLog,
    instance: &BanditInstance,
    window: usize,
    run_id: u64,
) -> Result<Vec<EpisodeSample>> {
    if window == 0 {
        return Err(BanditError::Precondition(
            "window T must be at least 1".into(),
        ));
    }
    let gap = instance.gap();
    let horizon = log.horizon();
    Ok(detect_episodes(log, instance.optimal_arm())?
        .into_iter()
        .filter(|&tau| tau + window <= horizon)
        .map(|tau| {
            let count = log.suboptimal_in(tau, tau + window);
            EpisodeSample {
                run_id,
                tau,
                window_suboptimal_count: count,
                window_regret: gap * f64::from(count),
            }
        })
        .collect())
}

/// Windowed mean at one round. `estimate` is `None` when no sample falls in
/// the window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    pub t: usize,
    pub estimate: Option<f64>,
    pub n_samples: usize,
    /// Standard error of the mean; `None` below two samples.
    pub std_err: Option<f64>,
}

/// Mean `window_regret` over samples with `|tau - t| < half_width`.
pub fn regexp_estimate(
    samples: &[EpisodeSample],
    t: usize,
    half_width: usize,
) -> Result<WindowEstimate> {
    if half_width == 0 {
        return Err(BanditError::Precondition("W must be at least 1".into()));
    }
    let mut acc = Moments::default();
    for s in samples {
        if s.tau.abs_diff(t) < half_width {
            acc.push(s.window_regret);
        }
    }
    Ok(acc.estimate(t))
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    fn estimate(&self, t: usize) -> WindowEstimate {
        let mean = (self.n > 0).then(|| self.sum / self.n as f64);
        let std_err = mean.filter(|_| self.n > 1).map(|m| {
            let var = ((self.sum_sq - self.n as f64 * m * m) / (self.n - 1) as f64).max(0.0);
            (var / self.n as f64).sqrt()
        });
        WindowEstimate {
            t,
            estimate: mean,
            n_samples: self.n,
            std_err,
        }
    }
}

/// Estimates on an arithmetic grid of rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegExpCurve {
    pub points: Vec<WindowEstimate>,
    pub half_width: usize,
    pub window: usize,
}

impl RegExpCurve {
    /// Evaluates the estimator at `step, 2 step, ...` up to `last`. Samples
    /// are sorted once; each point costs two binary searches.
    pub fn build(
        samples: &[EpisodeSample],
        window: usize,
        half_width: usize,
        step: usize,
        last: usize,
    ) -> Result<Self> {
        if half_width == 0 || step == 0 {
            return Err(BanditError::Precondition(
                "W and the grid step must be positive".into(),
            ));
        }
        let grid: Vec<usize> = (1..).map(|k| k * step).take_while(|&t| t <= last).collect();
        Ok(Self {
            points: estimates_at(samples, &grid, half_width),
            half_width,
            window,
        })
    }
}

/// [`regexp_estimate`] at many rounds at once.
pub fn estimates_at(
    samples: &[EpisodeSample],
    ts: &[usize],
    half_width: usize,
) -> Vec<WindowEstimate> {
    let mut sorted: Vec<(usize, f64)> = samples.iter().map(|s| (s.tau, s.window_regret)).collect();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut prefix = Vec::with_capacity(sorted.len() + 1);
    let mut prefix_sq = Vec::with_capacity(sorted.len() + 1);
    prefix.push(0.0);
    prefix_sq.push(0.0);
    for &(_, y) in &sorted {
        prefix.push(prefix.last().unwrap() + y);
        prefix_sq.push(prefix_sq.last().unwrap() + y * y);
    }
    ts.iter()
        .map(|&t| {
            // |tau - t| < W  <=>  t - W < tau < t + W
            let lo = sorted.partition_point(|&(tau, _)| tau + half_width <= t);
            let hi = sorted.partition_point(|&(tau, _)| tau < t + half_width);
            let m = Moments {
                n: hi - lo,
                sum: prefix[hi] - prefix[lo],
                sum_sq: prefix_sq[hi] - prefix_sq[lo],
            };
            m.estimate(t)
        })
        .collect()
}

/// Largest windowed regret `pseudo_regret(s, s + window)` over
/// `s in [t_min, horizon - window]`; returns the first maximizing start.
pub fn max_window_regret(
    log: &RunLog,
    instance: &BanditInstance,
    window: usize,
    t_min: usize,
) -> Result<(usize, f64)> {
    let horizon = log.horizon();
    if window == 0 || t_min == 0 || t_min + window > horizon {
        return Err(BanditError::InvalidWindow {
            start: t_min,
            end: t_min + window,
            horizon,
        });
    }
    let mut best = (t_min, 0u32);
    let mut count = log.suboptimal_in(t_min, t_min + window);
    best.1 = count;
    for s in t_min + 1..=horizon - window {
        // Slide [s-1, s-1+w) to [s, s+w).
        count = count + u32::from(log.action(s + window - 1) != log.optimal_arm)
            - u32::from(log.action(s - 1) != log.optimal_arm);
        if count > best.1 {
            best = (s, count);
        }
    }
    Ok((best.0, instance.gap() * f64::from(best.1)))
}

/// Breakpoints of `t -> max over s >= t of suboptimal count in [s, s + window)`
/// for `s <= horizon - window`. Each entry `(s, c)` is a start where the
/// running maximum, scanned backwards, strictly increases; starts are
/// decreasing. The maximum from `t` on is the count of the last entry with
/// `s >= t`.
pub fn window_suffix_maxima(log: &RunLog, window: usize) -> Result<Vec<(usize, u32)>> {
    let horizon = log.horizon();
    if window == 0 || window + 1 > horizon {
        return Err(BanditError::InvalidWindow {
            start: 1,
            end: 1 + window,
            horizon,
        });
    }
    let mut out = Vec::new();
    let last = horizon - window;
    let mut count = log.suboptimal_in(last, last + window);
    let mut running: Option<u32> = None;
    let mut s = last;
    loop {
        if running.is_none_or(|r| count > r) {
            out.push((s, count));
            running = Some(count);
        }
        if s == 1 {
            break;
        }
        s -= 1;
        count = count + u32::from(log.action(s) != log.optimal_arm)
            - u32::from(log.action(s + window) != log.optimal_arm);
    }
    Ok(out)
}

/// Reads a suffix maximum off breakpoints from [`window_suffix_maxima`].
pub fn suffix_max_at(breakpoints: &[(usize, u32)], t: usize) -> Option<u32> {
    breakpoints
        .iter()
        .rev()
        .find(|&&(s, _)| s >= t)
        .map(|&(_, c)| c)
}

/// Lengths of maximal suboptimal blocks within rounds `t_min..=horizon`. A
/// block straddling `t_min` contributes only its part from `t_min` on, so
/// the lengths sum to the suboptimal pulls from `t_min` on.
pub fn suboptimal_run_lengths(log: &RunLog, optimal: usize, t_min: usize) -> Vec<usize> {
    let start = t_min.max(1) - 1;
    let mut out = Vec::new();
    let mut current = 0;
    for &a in log.actions.iter().skip(start) {
        if a != optimal {
            current += 1;
        } else if current > 0 {
            out.push(current);
            current = 0;
        }
    }
    if current > 0 {
        out.push(current);
    }
    out
}
