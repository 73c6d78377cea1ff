use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid_arg, Error, Result};
use crate::grid::GridSpec;
use crate::quad::pairwise_sum;

/// Default two-sided confidence level for reported intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.99;

/// Two-sided standard normal quantile for `confidence` (2.576 at 99%).
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid_arg(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(0.5 + 0.5 * confidence))
}

/// Monte Carlo estimate with its sampling error and an optional exact target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub n_samples: usize,
    pub mean: f64,
    pub stderr: f64,
    pub confidence: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub target: Option<f64>,
    pub z_score: Option<f64>,
    /// Replicates whose stopping time fell beyond the horizon; excluded from the mean.
    pub n_censored: usize,
    /// Draws thrown away and redrawn (zero drawdown, vanishing `R(1)`).
    pub n_rejected: usize,
    /// Replicates flagged by a sampler diagnostic but still used.
    pub n_flagged: usize,
    pub grid_used: GridSpec,
    pub median: Option<f64>,
    /// Mean after dropping the lowest and highest 5% of samples.
    pub trimmed_mean: Option<f64>,
}

/// Mean and standard error of a sample, reduced in a fixed order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub stderr: f64,
}

pub fn summarize(samples: &[f64]) -> Result<Summary> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::NotEnoughSamples { needed: 2, got: n });
    }
    let mean = pairwise_sum(samples) / n as f64;
    let squares: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
    let std_dev = (pairwise_sum(&squares) / (n - 1) as f64).sqrt();
    Ok(Summary {
        n,
        mean,
        std_dev,
        stderr: std_dev / (n as f64).sqrt(),
    })
}

pub(crate) fn z_score(mean: f64, stderr: f64, target: Option<f64>) -> Option<f64> {
    let target = target?;
    let diff = mean - target;
    if stderr > 0.0 {
        Some(diff / stderr)
    } else if diff == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

impl EstimateReport {
    pub fn from_samples(
        name: impl Into<String>,
        samples: &[f64],
        target: Option<f64>,
        confidence: f64,
        grid_used: GridSpec,
    ) -> Result<Self> {
        let s = summarize(samples)?;
        let z = z_for_confidence(confidence)?;
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let cut = n / 20;
        let trimmed = &sorted[cut..n - cut];
        let trimmed_mean = pairwise_sum(trimmed) / trimmed.len() as f64;
        Ok(Self {
            name: name.into(),
            n_samples: s.n,
            mean: s.mean,
            stderr: s.stderr,
            confidence,
            ci_low: s.mean - z * s.stderr,
            ci_high: s.mean + z * s.stderr,
            target,
            z_score: z_score(s.mean, s.stderr, target),
            n_censored: 0,
            n_rejected: 0,
            n_flagged: 0,
            grid_used,
            median: Some(median),
            trimmed_mean: Some(trimmed_mean),
        })
    }

    pub(crate) fn with_counts(mut self, censored: usize, rejected: usize, flagged: usize) -> Self {
        self.n_censored = censored;
        self.n_rejected = rejected;
        self.n_flagged = flagged;
        self
    }

    /// Fraction of replicates lost to censoring; bounds the bias from excluding them.
    pub fn censored_fraction(&self) -> f64 {
        self.n_censored as f64 / (self.n_samples + self.n_censored) as f64
    }

    pub fn abs_error(&self) -> Option<f64> {
        self.target.map(|t| (self.mean - t).abs())
    }

    /// Passes when `|mean - target| < max(sigmas * stderr, rel_tol * |target|)`.
    pub fn within(&self, sigmas: f64, rel_tol: f64) -> bool {
        match self.target {
            Some(t) => (self.mean - t).abs() < (sigmas * self.stderr).max(rel_tol * t.abs()),
            None => false,
        }
    }
}

/// Empirical survival probabilities against an analytic curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub levels: Vec<f64>,
    pub empirical: Vec<f64>,
    /// Absent when no closed form exists.
    pub analytic: Option<Vec<f64>>,
    /// Kolmogorov-Smirnov distance over all samples; present with `analytic`.
    pub ks_distance: Option<f64>,
    pub n_samples: usize,
}

/// Fraction of `sorted` strictly greater than `level`.
pub fn empirical_survival(sorted: &[f64], level: f64) -> f64 {
    let at_or_below = sorted.partition_point(|&x| x <= level);
    (sorted.len() - at_or_below) as f64 / sorted.len() as f64
}

impl SurvivalCurve {
    /// `levels` are sorted and deduplicated; `analytic` is the survival function, if known.
    pub fn from_samples(
        samples: &[f64],
        levels: &[f64],
        analytic: Option<&dyn Fn(f64) -> f64>,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::NotEnoughSamples { needed: 1, got: 0 });
        }
        if levels.iter().any(|l| !l.is_finite()) {
            return Err(invalid_arg("survival levels must be finite"));
        }
        let mut levels = levels.to_vec();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let empirical = levels
            .iter()
            .map(|&l| empirical_survival(&sorted, l))
            .collect();
        let (analytic_col, ks) = match analytic {
            Some(f) => (
                Some(levels.iter().map(|&l| f(l)).collect()),
                Some(super::ks::ks_statistic_sorted(&sorted, f)),
            ),
            None => (None, None),
        };
        Ok(Self {
            levels,
            empirical,
            analytic: analytic_col,
            ks_distance: ks,
            n_samples: samples.len(),
        })
    }
}
