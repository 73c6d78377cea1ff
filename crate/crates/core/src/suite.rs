//! The seven gated identities run by `mdraw verify`.
//!
//! Grid-sensitive estimates are taken on two nested grids and extrapolated
//! to zero step size before gating; identities that hold exactly on any grid
//! are gated on the raw estimate.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::{
    defaults, estimate_inv_drawdown_meander, extrapolate, run_imhof, simulate_besq4_stopping,
    simulate_timechange, EstimateReport, EstimatorConfig, DEFAULT_BIAS_EXPONENT,
};
use crate::grid::GridSpec;

/// Pass rule `|mean - target| < max(sigmas * stderr, rel_tol * |target|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub sigmas: f64,
    pub rel_tol: f64,
}

impl Gate {
    pub const fn sigma(sigmas: f64) -> Self {
        Self {
            sigmas,
            rel_tol: 0.0,
        }
    }

    pub const fn sigma_or_rel(sigmas: f64, rel_tol: f64) -> Self {
        Self { sigmas, rel_tol }
    }

    pub fn allowance(&self, report: &EstimateReport) -> f64 {
        let target = report.target.unwrap_or(0.0);
        (self.sigmas * report.stderr).max(self.rel_tol * target.abs())
    }

    /// `Ok` on pass, otherwise the reason.
    pub fn check(&self, report: &EstimateReport) -> std::result::Result<(), String> {
        let Some(target) = report.target else {
            return Err("no target".into());
        };
        let err = (report.mean - target).abs();
        let allowed = self.allowance(report);
        if err < allowed {
            Ok(())
        } else {
            Err(format!(
                "|{:.6} - {:.6}| = {:.3e} not below {:.3e}",
                report.mean, target, err, allowed
            ))
        }
    }
}

/// Gate for the two routes to `sqrt(pi/2)`.
pub const INV_DRAWDOWN_GATE: Gate = Gate::sigma_or_rel(3.0, 0.01);
/// Gate for stopping-time, value-at-stopping and time-change means.
pub const STOPPING_GATE: Gate = Gate::sigma_or_rel(3.0, 0.03);
/// Gate for identities that hold exactly on any grid.
pub const EXACT_GATE: Gate = Gate::sigma(3.0);
/// Largest `stderr / mean` accepted for an estimate without a closed-form target.
pub const MAX_RELATIVE_STDERR: f64 = 0.05;

/// Largest tolerated censoring fraction for stopping-time estimates.
pub const MAX_CENSORED_FRACTION: f64 = 1e-3;

/// One row of the verification summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub name: String,
    pub target: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub z: Option<f64>,
    pub pass: bool,
    pub reason: String,
}

impl IdentityRow {
    fn gated(name: &str, report: &EstimateReport, gate: Gate, extra: Option<String>) -> Self {
        let verdict = gate.check(report).and_then(|()| match &extra {
            Some(why) => Err(why.clone()),
            None => Ok(()),
        });
        Self {
            name: name.into(),
            target: report.target.unwrap_or(f64::NAN),
            estimate: report.mean,
            stderr: report.stderr,
            z: report.z_score,
            pass: verdict.is_ok(),
            reason: verdict.err().unwrap_or_default(),
        }
    }
}

/// Run settings for the suite; grids are fixed per identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub n_paths: usize,
    pub workers: Option<usize>,
    pub bias_exponent: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_paths: 100_000,
            workers: None,
            bias_exponent: DEFAULT_BIAS_EXPONENT,
        }
    }
}

impl SuiteConfig {
    fn estimator(&self, grid: GridSpec) -> EstimatorConfig {
        EstimatorConfig::new(self.seed, self.n_paths, grid).with_workers(self.workers)
    }
}

/// A grid with a quarter of the steps on the same horizon.
pub fn coarser(grid: &GridSpec) -> Result<GridSpec> {
    GridSpec::new(grid.horizon(), grid.steps() / 4)
}

pub fn censoring_note(report: &EstimateReport) -> Option<String> {
    let frac = report.censored_fraction();
    (frac >= MAX_CENSORED_FRACTION).then(|| format!("censored fraction {frac:.2e} too large"))
}

pub const IDENTITY_NAMES: [&str; 7] = [
    "inv-drawdown-meander",
    "inv-drawdown-imhof",
    "imhof-normalization",
    "tau1-besq4",
    "value-at-tau",
    "wald",
    "timechange",
];

/// Runs every gated identity and returns one row each, in [`IDENTITY_NAMES`] order.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<IdentityRow>> {
    let p = cfg.bias_exponent;
    let mut rows = Vec::with_capacity(IDENTITY_NAMES.len());

    let fine = defaults::meander_grid();
    let meander = extrapolate(
        &[
            estimate_inv_drawdown_meander(&cfg.estimator(coarser(&fine)?))?,
            estimate_inv_drawdown_meander(&cfg.estimator(fine))?,
        ],
        p,
    )?;
    rows.push(IdentityRow::gated(
        IDENTITY_NAMES[0],
        &meander,
        INV_DRAWDOWN_GATE,
        None,
    ));

    let coarse_imhof = run_imhof(&cfg.estimator(coarser(&fine)?))?;
    let fine_imhof = run_imhof(&cfg.estimator(fine))?;
    let imhof = extrapolate(&[coarse_imhof.inv_drawdown, fine_imhof.inv_drawdown], p)?;
    rows.push(IdentityRow::gated(
        IDENTITY_NAMES[1],
        &imhof,
        INV_DRAWDOWN_GATE,
        None,
    ));
    rows.push(IdentityRow::gated(
        IDENTITY_NAMES[2],
        &fine_imhof.normalization,
        EXACT_GATE,
        None,
    ));

    let stop_grid = defaults::stopping_grid();
    let coarse_stop = simulate_besq4_stopping(&cfg.estimator(coarser(&stop_grid)?))?;
    let fine_stop = simulate_besq4_stopping(&cfg.estimator(stop_grid))?;
    let fine_tau = fine_stop.tau_report()?;
    let tau = extrapolate(&[coarse_stop.tau_report()?, fine_tau.clone()], p)?;
    rows.push(IdentityRow::gated(
        IDENTITY_NAMES[3],
        &tau,
        STOPPING_GATE,
        censoring_note(&fine_tau),
    ));
    let value = extrapolate(&[coarse_stop.value_report()?, fine_stop.value_report()?], p)?;
    rows.push(IdentityRow::gated(
        IDENTITY_NAMES[4],
        &value,
        STOPPING_GATE,
        None,
    ));
    rows.push(IdentityRow::gated(
        IDENTITY_NAMES[5],
        &fine_stop.wald_report()?,
        EXACT_GATE,
        None,
    ));

    let tc = simulate_timechange(&cfg.estimator(defaults::timechange_grid()))?.report()?;
    rows.push(IdentityRow::gated(
        IDENTITY_NAMES[6],
        &tc,
        STOPPING_GATE,
        censoring_note(&tc),
    ));
    Ok(rows)
}
