//! Removal of grid bias `c * h^p` from a sequence of estimates on nested grids.

use crate::error::{invalid_arg, Error, Result};

use super::report::{z_for_confidence, z_score, EstimateReport};

/// Default bias exponent for extremes and stopping times of Brownian-type paths.
pub const DEFAULT_BIAS_EXPONENT: f64 = 0.5;

/// Extrapolates `reports` (coarse to fine, nested grids) to zero step size.
///
/// The means are fitted by `mu + c_1 x + ... + c_{k-1} x^{k-1}` with
/// `x = h^exponent` and evaluated at `x = 0` (Lagrange weights). The stderr is
/// propagated assuming independent inputs.
pub fn extrapolate(reports: &[EstimateReport], exponent: f64) -> Result<EstimateReport> {
    if reports.len() < 2 {
        return Err(Error::NotEnoughSamples {
            needed: 2,
            got: reports.len(),
        });
    }
    if !(exponent.is_finite() && exponent > 0.0) {
        return Err(invalid_arg(format!(
            "bias exponent must be positive, got {exponent}"
        )));
    }
    for pair in reports.windows(2) {
        if !pair[0].grid_used.is_refined_by(&pair[1].grid_used) {
            return Err(Error::NotNested(format!(
                "{} steps on [0, {}] then {} steps on [0, {}]",
                pair[0].grid_used.steps(),
                pair[0].grid_used.horizon(),
                pair[1].grid_used.steps(),
                pair[1].grid_used.horizon()
            )));
        }
    }

    let x: Vec<f64> = reports
        .iter()
        .map(|r| r.grid_used.step().powf(exponent))
        .collect();
    let weights: Vec<f64> = (0..x.len())
        .map(|i| {
            (0..x.len())
                .filter(|&j| j != i)
                .map(|j| x[j] / (x[j] - x[i]))
                .product()
        })
        .collect();

    let mean: f64 = weights.iter().zip(reports).map(|(w, r)| w * r.mean).sum();
    let stderr = weights
        .iter()
        .zip(reports)
        .map(|(w, r)| (w * r.stderr).powi(2))
        .sum::<f64>()
        .sqrt();

    let finest = &reports[reports.len() - 1];
    let z = z_for_confidence(finest.confidence)?;
    Ok(EstimateReport {
        name: format!("{}-extrapolated", finest.name),
        n_samples: reports.iter().map(|r| r.n_samples).min().unwrap_or(0),
        mean,
        stderr,
        confidence: finest.confidence,
        ci_low: mean - z * stderr,
        ci_high: mean + z * stderr,
        target: finest.target,
        z_score: z_score(mean, stderr, finest.target),
        n_censored: reports.iter().map(|r| r.n_censored).sum(),
        n_rejected: reports.iter().map(|r| r.n_rejected).sum(),
        n_flagged: reports.iter().map(|r| r.n_flagged).sum(),
        grid_used: finest.grid_used,
        median: None,
        trimmed_mean: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn report(mean: f64, stderr: f64, steps: usize) -> EstimateReport {
        EstimateReport {
            name: "synthetic".into(),
            n_samples: 1000,
            mean,
            stderr,
            confidence: 0.99,
            ci_low: mean,
            ci_high: mean,
            target: Some(1.0),
            z_score: None,
            n_censored: 0,
            n_rejected: 0,
            n_flagged: 0,
            grid_used: GridSpec::unit(steps).unwrap(),
            median: None,
            trimmed_mean: None,
        }
    }

    #[test]
    fn identical_inputs_are_fixed_points() {
        let r = extrapolate(
            &[report(1.7, 0.01, 1 << 12), report(1.7, 0.01, 1 << 14)],
            0.5,
        )
        .unwrap();
        assert!((r.mean - 1.7).abs() < 1e-14);
        // Weights 2 and -1.
        assert!((r.stderr - 0.01 * 5f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn removes_sqrt_bias_exactly() {
        let (mu, c) = (1.2533, 0.8);
        let at = |steps: usize| mu + c * (1.0 / steps as f64).sqrt();
        let r = extrapolate(
            &[
                report(at(1 << 12), 0.0, 1 << 12),
                report(at(1 << 14), 0.0, 1 << 14),
            ],
            0.5,
        )
        .unwrap();
        assert!((r.mean - mu).abs() < 1e-13, "{}", r.mean);
    }

    #[test]
    fn three_levels_remove_two_terms() {
        let at = |steps: usize| {
            let h = 1.0 / steps as f64;
            0.5 + 0.3 * h.sqrt() - 2.0 * h
        };
        let reports: Vec<_> = [1usize << 8, 1 << 10, 1 << 12]
            .iter()
            .map(|&n| report(at(n), 0.0, n))
            .collect();
        let r = extrapolate(&reports, 0.5).unwrap();
        assert!((r.mean - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(extrapolate(&[report(1.0, 0.1, 64)], 0.5).is_err());
        assert!(matches!(
            extrapolate(&[report(1.0, 0.1, 64), report(1.0, 0.1, 96)], 0.5),
            Err(Error::NotNested(_))
        ));
        assert!(matches!(
            extrapolate(&[report(1.0, 0.1, 256), report(1.0, 0.1, 64)], 0.5),
            Err(Error::NotNested(_))
        ));
        assert!(extrapolate(&[report(1.0, 0.1, 64), report(1.0, 0.1, 128)], 0.0).is_err());
    }
}
