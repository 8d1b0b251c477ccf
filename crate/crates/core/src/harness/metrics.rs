use std::f64::consts::PI;
use std::ops::Range;

use crate::error::HarnessError;
use crate::grid::Timeline;

/// One-sided 95% critical value of the standard normal.
pub const Z_95: f64 = 1.644_853_626_951_472_2;

/// Fraction of each constant-condition segment treated as steady state.
pub const DEFAULT_STEADY_FRACTION: f64 = 0.2;

/// Sample ranges over which a timeline's operating condition and frequency
/// stay constant.
pub fn constant_segments(timeline: &Timeline) -> Vec<Range<usize>> {
    let n = timeline.frequency_hz.len();
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=n {
        let split = k == n
            || timeline.frequency_hz[k] != timeline.frequency_hz[k - 1]
            || timeline.condition[k] != timeline.condition[k - 1];
        if split {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// The last `fraction` of every constant segment (at least one sample each).
pub fn steady_windows(timeline: &Timeline, fraction: f64) -> Result<Vec<Range<usize>>, HarnessError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(HarnessError::Config(format!(
            "steady-state fraction must lie in (0, 1], got {fraction}"
        )));
    }
    Ok(constant_segments(timeline)
        .into_iter()
        .map(|seg| {
            let len = ((seg.len() as f64 * fraction).ceil() as usize).clamp(1, seg.len());
            seg.end - len..seg.end
        })
        .collect())
}

/// Error statistics of one trial over the steady-state samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialSummary {
    pub count: usize,
    pub mean_error: f64,
    /// Sum of squared deviations of the error about `mean_error`.
    pub m2: f64,
}

impl TrialSummary {
    pub fn from_errors(errors: &[f64]) -> Self {
        let count = errors.len();
        let mean_error = errors.iter().sum::<f64>() / count as f64;
        let m2 = errors.iter().map(|e| (e - mean_error).powi(2)).sum();
        Self { count, mean_error, m2 }
    }
}

/// Steady-state errors `f_hat - f_true` of one trajectory, in window order.
pub fn window_errors(
    estimate: &[f64],
    f_true: &[f64],
    windows: &[Range<usize>],
) -> Result<Vec<f64>, HarnessError> {
    check_windows(windows, estimate.len().min(f_true.len()))?;
    Ok(windows.iter().flat_map(|w| w.clone().map(|n| estimate[n] - f_true[n])).collect())
}

fn check_windows(windows: &[Range<usize>], len: usize) -> Result<(), HarnessError> {
    if windows.iter().all(|w| w.is_empty()) {
        return Err(HarnessError::Config("steady-state window is empty".into()));
    }
    if let Some(w) = windows.iter().find(|w| w.end > len) {
        return Err(HarnessError::Config(format!(
            "steady-state window {w:?} exceeds trajectory length {len}"
        )));
    }
    Ok(())
}

/// Bias and variance of one estimator at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub trials: usize,
    pub samples: usize,
    /// Mean of `f_hat - f_true` over the window and all trials.
    pub bias: f64,
    /// Sample variance of `f_hat - f_true` pooled over the window and trials.
    pub variance: f64,
    /// Monte Carlo standard error of `bias`; needs two or more trials.
    pub bias_standard_error: Option<f64>,
    /// Across-trial variance at each window sample, averaged over the window.
    pub ensemble_variance: Option<f64>,
}

/// Streaming accumulator of per-trial window errors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsAccumulator {
    summaries: Vec<TrialSummary>,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl MetricsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, errors: &[f64]) -> Result<(), HarnessError> {
        if errors.is_empty() {
            return Err(HarnessError::Config("steady-state window is empty".into()));
        }
        if self.summaries.is_empty() {
            self.sum = vec![0.0; errors.len()];
            self.sum_sq = vec![0.0; errors.len()];
        } else if errors.len() != self.sum.len() {
            return Err(HarnessError::Config(format!(
                "trial window has {} samples, expected {}",
                errors.len(),
                self.sum.len()
            )));
        }
        for ((s, q), e) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(errors) {
            *s += e;
            *q += e * e;
        }
        self.summaries.push(TrialSummary::from_errors(errors));
        Ok(())
    }

    pub fn summaries(&self) -> &[TrialSummary] {
        &self.summaries
    }

    pub fn finish(&self) -> Result<Metrics, HarnessError> {
        let mut m = metrics_from_summaries(&self.summaries)?;
        let t = self.summaries.len() as f64;
        if self.summaries.len() >= 2 {
            let total: f64 =
                self.sum.iter().zip(&self.sum_sq).map(|(s, q)| ((q - s * s / t) / (t - 1.0)).max(0.0)).sum();
            m.ensemble_variance = Some(total / self.sum.len() as f64);
        }
        Ok(m)
    }
}

/// Pools per-trial summaries that share a window length.
pub fn metrics_from_summaries(summaries: &[TrialSummary]) -> Result<Metrics, HarnessError> {
    let Some(first) = summaries.first() else {
        return Err(HarnessError::Config("no trials to summarize".into()));
    };
    let w = first.count;
    if w == 0 || summaries.iter().any(|s| s.count != w) {
        return Err(HarnessError::Config("trial windows must be equal and nonempty".into()));
    }
    let t = summaries.len();
    let bias = summaries.iter().map(|s| s.mean_error).sum::<f64>() / t as f64;
    let between: f64 = summaries.iter().map(|s| (s.mean_error - bias).powi(2)).sum();
    let m2 = summaries.iter().map(|s| s.m2).sum::<f64>() + w as f64 * between;
    let samples = t * w;
    let variance = if samples > 1 { m2 / (samples - 1) as f64 } else { 0.0 };
    let bias_standard_error = (t >= 2).then(|| (between / (t - 1) as f64 / t as f64).sqrt());
    Ok(Metrics { trials: t, samples, bias, variance, bias_standard_error, ensemble_variance: None })
}

/// Bias and variance of `trajectories[trial][n]` against `f_true[n]` over `windows`.
pub fn compute_metrics(
    trajectories: &[Vec<f64>],
    f_true: &[f64],
    windows: &[Range<usize>],
) -> Result<Metrics, HarnessError> {
    let mut acc = MetricsAccumulator::new();
    for traj in trajectories {
        acc.push(&window_errors(traj, f_true, windows)?)?;
    }
    acc.finish()
}

/// Paired comparison of two estimators' pooled variances on the same trials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairedComparison {
    /// Mean per-trial difference of variance contributions (first minus second).
    pub mean_difference: f64,
    pub standard_error: f64,
    pub z: f64,
}

impl PairedComparison {
    /// Upper one-sided 95% confidence bound of the difference is at most zero.
    pub fn first_not_larger_at_95(&self) -> bool {
        self.mean_difference + Z_95 * self.standard_error <= 0.0
    }
}

/// Compares pooled variances trial by trial.
///
/// Each trial contributes `m2 / W + (mean - pooled_mean)^2`, whose average
/// over trials is the pooled variance up to the `N - 1` normalization.
pub fn paired_variance_test(
    first: &[TrialSummary],
    second: &[TrialSummary],
) -> Result<PairedComparison, HarnessError> {
    if first.len() != second.len() || first.len() < 2 {
        return Err(HarnessError::Config(format!(
            "paired test needs matching trial sets of at least two, got {} and {}",
            first.len(),
            second.len()
        )));
    }
    let contrib = |s: &[TrialSummary]| -> Vec<f64> {
        let mean = s.iter().map(|t| t.mean_error).sum::<f64>() / s.len() as f64;
        s.iter().map(|t| t.m2 / t.count as f64 + (t.mean_error - mean).powi(2)).collect()
    };
    let a = contrib(first);
    let b = contrib(second);
    let t = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let mean_difference = d.iter().sum::<f64>() / t;
    let sd = (d.iter().map(|x| (x - mean_difference).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
    let standard_error = sd / t.sqrt();
    Ok(PairedComparison { mean_difference, standard_error, z: mean_difference / standard_error })
}

/// Largest single-bin DFT amplitude of the mean-removed signal over the
/// integer frequencies in `band_hz`.
pub fn band_amplitude(
    signal: &[f64],
    sampling_interval_s: f64,
    band_hz: std::ops::RangeInclusive<u32>,
) -> f64 {
    let n = signal.len();
    if n == 0 {
        return 0.0;
    }
    let mean = signal.iter().sum::<f64>() / n as f64;
    band_hz
        .map(|f| {
            let w = 2.0 * PI * f as f64 * sampling_interval_s;
            let (re, im) = signal.iter().enumerate().fold((0.0, 0.0), |(re, im), (k, v)| {
                let (s, c) = (w * k as f64).sin_cos();
                (re + (v - mean) * c, im - (v - mean) * s)
            });
            2.0 * (re * re + im * im).sqrt() / n as f64
        })
        .fold(0.0, f64::max)
}

/// First sample after which every listed trajectory stays within `tol` of
/// `target` through `range.end`, or `None` if that never happens.
pub fn settling_index(trajectories: &[&[f64]], target: f64, tol: f64, range: Range<usize>) -> Option<usize> {
    let mut settled = range.start;
    for n in range.clone() {
        if trajectories.iter().any(|t| (t[n] - target).abs() > tol) {
            settled = n + 1;
        }
    }
    (settled < range.end).then_some(settled)
}
