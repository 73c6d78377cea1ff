//! Monte Carlo estimators tying the samplers and functionals to exact targets.
//!
//! Every estimator is a parallel map over replicate streams followed by a
//! reduction in stream order, so a report depends only on `(seed, config)`.

mod extrapolate;
mod ks;
mod parallel;
mod report;

use std::f64::consts::{FRAC_PI_2, PI};

use crate::drawdown::{max_drawdown_of, DrawdownScan};
use crate::error::{invalid_arg, Result};
use crate::grid::GridSpec;
use crate::lehoczky::{
    scale_hit_prob, survival_max_at_tau, survival_value_at_tau, MEAN_VALUE_AT_TAU,
};
use crate::sampler::{imhof_with_rng, MeanderSampler, PathWalk, Process};
use crate::timechange::{tau_via_timechange_with_rng, TrapezoidSum};

pub use extrapolate::{extrapolate, DEFAULT_BIAS_EXPONENT};
pub use ks::{
    ks_critical_1pct, ks_statistic, ks_two_sample, ks_two_sample_critical_1pct, KS_COEFF_1PCT,
};
pub use parallel::{domain_seed, run_replicates};
pub use report::{
    empirical_survival, summarize, z_for_confidence, EstimateReport, Summary, SurvivalCurve,
    DEFAULT_CONFIDENCE,
};

/// `E[1 / maximal drawdown of the meander] = sqrt(pi / 2)`.
pub fn inv_drawdown_target() -> f64 {
    FRAC_PI_2.sqrt()
}

/// `E[tau_1^U] = E[U(tau_1^U)] / 4 = 1/2`.
pub const TAU_TARGET: f64 = 0.5;

/// Smallest sample that still yields a standard error.
pub const MIN_PATHS: usize = 2;

/// Run settings shared by all estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub seed: u64,
    pub n_paths: usize,
    pub grid: GridSpec,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub confidence: f64,
}

impl EstimatorConfig {
    pub fn new(seed: u64, n_paths: usize, grid: GridSpec) -> Self {
        Self {
            seed,
            n_paths,
            grid,
            workers: None,
            confidence: DEFAULT_CONFIDENCE,
        }
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> Self {
        self.confidence = confidence;
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = grid;
        self
    }

    fn check(&self) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(invalid_arg(format!(
                "need at least {MIN_PATHS} paths, got {}",
                self.n_paths
            )));
        }
        z_for_confidence(self.confidence).map(|_| ())
    }

    fn run<T: Send>(
        &self,
        tag: &str,
        replicate: impl Fn(crate::rng::RngStream) -> Result<T> + Sync + Send,
    ) -> Result<Vec<T>> {
        self.check()?;
        run_replicates(
            domain_seed(self.seed, tag),
            self.n_paths,
            self.workers,
            replicate,
        )
    }
}

/// Default grids, one per family of estimators.
pub mod defaults {
    use crate::grid::GridSpec;

    pub fn meander_grid() -> GridSpec {
        GridSpec::unit(1 << 14).expect("valid grid")
    }

    pub fn stopping_grid() -> GridSpec {
        GridSpec::new(8.0, 1 << 16).expect("valid grid")
    }

    pub fn timechange_grid() -> GridSpec {
        GridSpec::new(
            crate::timechange::DEFAULT_TIMECHANGE_HORIZON,
            crate::timechange::DEFAULT_TIMECHANGE_STEPS,
        )
        .expect("valid grid")
    }

    pub fn scale_hit_grid() -> GridSpec {
        GridSpec::new(2.0, 1 << 16).expect("valid grid")
    }
}

struct Draw {
    value: f64,
    rejected: usize,
    flagged: bool,
}

/// `E[1 / max drawdown]` over last-zero meanders; target `sqrt(pi/2)`.
///
/// The internal Brownian path has as many cells as the grid, so the grid is
/// the only discretization parameter and nested grids share their coarse
/// nodes.
pub fn estimate_inv_drawdown_meander(cfg: &EstimatorConfig) -> Result<EstimateReport> {
    let sampler = MeanderSampler::new(cfg.grid.steps())?;
    let draws = cfg.run("inv-drawdown-meander", |stream| {
        let mut rng = stream.rng();
        let mut rejected = 0;
        loop {
            let (path, info) = sampler.sample_with_rng(&mut rng, &cfg.grid)?;
            let md = max_drawdown_of(path.values());
            if md > 0.0 {
                return Ok(Draw {
                    value: md.recip(),
                    rejected,
                    flagged: info.degenerate,
                });
            }
            rejected += 1;
        }
    })?;
    finish_draws(
        "inv-drawdown-meander",
        &draws,
        Some(inv_drawdown_target()),
        cfg,
    )
}

fn finish_draws(
    name: &str,
    draws: &[Draw],
    target: Option<f64>,
    cfg: &EstimatorConfig,
) -> Result<EstimateReport> {
    let values: Vec<f64> = draws.iter().map(|d| d.value).collect();
    let rejected = draws.iter().map(|d| d.rejected).sum();
    let flagged = draws.iter().filter(|d| d.flagged).count();
    Ok(
        EstimateReport::from_samples(name, &values, target, cfg.confidence, cfg.grid)?
            .with_counts(0, rejected, flagged),
    )
}

/// Both averages from one batch of weighted BES(3) paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ImhofRun {
    /// `sqrt(pi/2) * E[(1/R(1)) / max drawdown of R]`; target `sqrt(pi/2)`.
    pub inv_drawdown: EstimateReport,
    /// Weights alone (`F = 1`); target 1.
    pub normalization: EstimateReport,
}

pub fn run_imhof(cfg: &EstimatorConfig) -> Result<ImhofRun> {
    let pairs = cfg.run("inv-drawdown-imhof", |stream| {
        let mut rng = stream.rng();
        let mut rejected = 0;
        loop {
            let draw = imhof_with_rng(&mut rng, &cfg.grid)?;
            rejected += draw.rejections as usize;
            let md = max_drawdown_of(draw.weighted.path().values());
            if md > 0.0 {
                let w = draw.weighted.weight();
                return Ok((w / md, w, rejected));
            }
            rejected += 1;
        }
    })?;
    let rejected = pairs.iter().map(|p| p.2).sum();
    let weighted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(ImhofRun {
        inv_drawdown: EstimateReport::from_samples(
            "inv-drawdown-imhof",
            &weighted,
            Some(inv_drawdown_target()),
            cfg.confidence,
            cfg.grid,
        )?
        .with_counts(0, rejected, 0),
        normalization: EstimateReport::from_samples(
            "imhof-normalization",
            &weights,
            Some(1.0),
            cfg.confidence,
            cfg.grid,
        )?
        .with_counts(0, rejected, 0),
    })
}

/// Importance-weighted BES(3) route to `sqrt(pi/2)`.
pub fn estimate_inv_drawdown_imhof(cfg: &EstimatorConfig) -> Result<EstimateReport> {
    Ok(run_imhof(cfg)?.inv_drawdown)
}

/// One BESQ(4) path from 0 stopped at its first unit drawdown.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRecord {
    pub tau: f64,
    /// `U(tau)`.
    pub value: f64,
    /// Running maximum of `U` at `tau`.
    pub running_max: f64,
    /// `A(tau) = int_0^tau U(s) ds` by the trapezoid rule.
    pub area: f64,
    pub overshoot: f64,
}

/// Stopped BESQ(4) replicates in stream order; `None` marks censoring.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRun {
    records: Vec<Option<StopRecord>>,
    grid: GridSpec,
    confidence: f64,
}

/// Samples BESQ(4) from 0 on each stream until the drawdown reaches 1.
pub fn simulate_besq4_stopping(cfg: &EstimatorConfig) -> Result<StoppingRun> {
    let records = cfg.run("besq4-stopping", |stream| {
        let grid = &cfg.grid;
        let mut scan = DrawdownScan::new(1.0, grid.step())?;
        let mut area = TrapezoidSum::new(grid.step());
        for value in PathWalk::new(&stream, Process::Besq4 { start: 0.0 }, grid)? {
            let a = area.push(value);
            if let Some(hit) = scan.push(value) {
                return Ok(Some(StopRecord {
                    tau: hit.time,
                    value: hit.value,
                    running_max: hit.running_max,
                    area: a,
                    overshoot: hit.overshoot,
                }));
            }
        }
        Ok(None)
    })?;
    Ok(StoppingRun {
        records,
        grid: cfg.grid,
        confidence: cfg.confidence,
    })
}

impl StoppingRun {
    pub fn records(&self) -> &[Option<StopRecord>] {
        &self.records
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// The first `n` replicates, identical to a run with `n_paths = n`.
    pub fn prefix(&self, n: usize) -> StoppingRun {
        StoppingRun {
            records: self.records[..n.min(self.records.len())].to_vec(),
            grid: self.grid,
            confidence: self.confidence,
        }
    }

    pub fn n_censored(&self) -> usize {
        self.records.iter().filter(|r| r.is_none()).count()
    }

    pub fn hits(&self) -> impl Iterator<Item = &StopRecord> {
        self.records.iter().flatten()
    }

    fn collect(&self, f: impl Fn(&StopRecord) -> f64) -> Vec<f64> {
        self.hits().map(f).collect()
    }

    fn report(&self, name: &str, samples: &[f64], target: Option<f64>) -> Result<EstimateReport> {
        Ok(
            EstimateReport::from_samples(name, samples, target, self.confidence, self.grid)?
                .with_counts(self.n_censored(), 0, 0),
        )
    }

    pub fn taus(&self) -> Vec<f64> {
        self.collect(|r| r.tau)
    }

    pub fn values(&self) -> Vec<f64> {
        self.collect(|r| r.value)
    }

    /// Mean of `tau_1^U`; target 1/2.
    pub fn tau_report(&self) -> Result<EstimateReport> {
        self.report("tau1-besq4", &self.taus(), Some(TAU_TARGET))
    }

    /// Mean of `U(tau_1^U) / 4`; equals the mean of `tau_1^U` in expectation.
    pub fn quarter_value_report(&self) -> Result<EstimateReport> {
        self.report(
            "quarter-value-at-tau",
            &self.collect(|r| 0.25 * r.value),
            Some(TAU_TARGET),
        )
    }

    /// Mean of `U(tau_1^U)`; target 2.
    pub fn value_report(&self) -> Result<EstimateReport> {
        self.report("value-at-tau", &self.values(), Some(MEAN_VALUE_AT_TAU))
    }

    /// Indicator of `U(tau) > a`, as an estimate of `(a + 1) e^{-a}`.
    pub fn value_exceedance_report(&self, a: f64) -> Result<EstimateReport> {
        let target = survival_value_at_tau(a)?;
        let ind = self.collect(|r| if r.value > a { 1.0 } else { 0.0 });
        self.report("value-at-tau-exceedance", &ind, Some(target))
    }

    /// Survival of `U(tau)` against `(a + 1) e^{-a}`, with the KS distance over all hits.
    pub fn value_curve(&self, levels: &[f64]) -> Result<SurvivalCurve> {
        if levels.iter().any(|&a| a < 0.0) {
            return Err(invalid_arg("levels for U(tau) must be non-negative"));
        }
        let law = |a: f64| survival_max_at_tau(a + 1.0);
        SurvivalCurve::from_samples(&self.values(), levels, Some(&law))
    }

    /// Survival of the grid running maximum at `tau` against `b e^{-(b - 1)}`.
    ///
    /// On a grid the maximum exceeds `U(tau) + 1` by the overshoot, so this
    /// curve sits slightly above [`Self::corrected_max_curve`].
    pub fn max_curve(&self, levels: &[f64]) -> Result<SurvivalCurve> {
        SurvivalCurve::from_samples(
            &self.collect(|r| r.running_max),
            levels,
            Some(&survival_max_at_tau),
        )
    }

    /// Survival of `running max - overshoot = U(tau) + 1`, the maximum the
    /// continuous path would show at its stopping time.
    pub fn corrected_max_curve(&self, levels: &[f64]) -> Result<SurvivalCurve> {
        SurvivalCurve::from_samples(
            &self.collect(|r| r.value + 1.0),
            levels,
            Some(&survival_max_at_tau),
        )
    }

    /// Mean of `U(tau) - 4 tau`; target 0.
    pub fn wald_report(&self) -> Result<EstimateReport> {
        self.report("wald", &self.collect(|r| r.value - 4.0 * r.tau), Some(0.0))
    }

    pub fn areas(&self) -> Vec<f64> {
        self.collect(|r| r.area)
    }

    /// Empirical tail of `A(tau)` at `thresholds` plus its mean; no closed form.
    pub fn area_tail(&self, thresholds: &[f64]) -> Result<(SurvivalCurve, EstimateReport)> {
        let areas = self.areas();
        let curve = SurvivalCurve::from_samples(&areas, thresholds, None)?;
        Ok((curve, self.report("tail-A", &areas, None)?))
    }
}

/// Mean first unit-drawdown time of BESQ(4) from 0; target 1/2.
pub fn estimate_tau1_besq4(cfg: &EstimatorConfig) -> Result<EstimateReport> {
    simulate_besq4_stopping(cfg)?.tau_report()
}

/// Mean and survival curve of `U(tau_1^U)`; mean target 2.
pub fn estimate_value_at_tau(
    cfg: &EstimatorConfig,
    levels: &[f64],
) -> Result<(EstimateReport, SurvivalCurve)> {
    let run = simulate_besq4_stopping(cfg)?;
    Ok((run.value_report()?, run.value_curve(levels)?))
}

/// Mean of `U(tau) - 4 tau`, the sampled form of the optional-stopping identity.
pub fn wald_check(cfg: &EstimatorConfig) -> Result<EstimateReport> {
    simulate_besq4_stopping(cfg)?.wald_report()
}

/// Tail of `A(tau_1^U)` at the thresholds, plus its mean.
pub fn tail_of_a_at_tau(
    cfg: &EstimatorConfig,
    thresholds: &[f64],
) -> Result<(SurvivalCurve, EstimateReport)> {
    simulate_besq4_stopping(cfg)?.area_tail(thresholds)
}

/// `sigma(tau_1^R)` across BES(3) replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangeRun {
    samples: Vec<Option<f64>>,
    grid: GridSpec,
    confidence: f64,
}

pub fn simulate_timechange(cfg: &EstimatorConfig) -> Result<TimeChangeRun> {
    let samples = cfg.run("timechange", |stream| {
        Ok(tau_via_timechange_with_rng(stream.rng(), &cfg.grid)?.sigma())
    })?;
    Ok(TimeChangeRun {
        samples,
        grid: cfg.grid,
        confidence: cfg.confidence,
    })
}

impl TimeChangeRun {
    pub fn sigmas(&self) -> Vec<f64> {
        self.samples.iter().flatten().copied().collect()
    }

    pub fn n_censored(&self) -> usize {
        self.samples.iter().filter(|s| s.is_none()).count()
    }

    pub fn prefix(&self, n: usize) -> TimeChangeRun {
        TimeChangeRun {
            samples: self.samples[..n.min(self.samples.len())].to_vec(),
            grid: self.grid,
            confidence: self.confidence,
        }
    }

    /// Mean of `sigma(tau_1^R)`; target 1/2.
    pub fn report(&self) -> Result<EstimateReport> {
        Ok(EstimateReport::from_samples(
            "timechange",
            &self.sigmas(),
            Some(TAU_TARGET),
            self.confidence,
            self.grid,
        )?
        .with_counts(self.n_censored(), 0, 0))
    }
}

/// Mean of `sigma(tau_1^R)` on BES(3); target 1/2.
pub fn estimate_timechange(cfg: &EstimatorConfig) -> Result<EstimateReport> {
    simulate_timechange(cfg)?.report()
}

/// Probability that BESQ(4) from `start` reaches `hi` before `lo`.
pub fn estimate_scale_hit(
    cfg: &EstimatorConfig,
    start: f64,
    lo: f64,
    hi: f64,
) -> Result<EstimateReport> {
    let target = scale_hit_prob(start, lo, hi)?;
    let outcomes = cfg.run("scale-hit", |stream| {
        for u in PathWalk::new(&stream, Process::Besq4 { start }, &cfg.grid)? {
            if u >= hi {
                return Ok(Some(1.0));
            }
            if u <= lo {
                return Ok(Some(0.0));
            }
        }
        Ok(None)
    })?;
    let hits: Vec<f64> = outcomes.iter().flatten().copied().collect();
    let censored = outcomes.len() - hits.len();
    Ok(
        EstimateReport::from_samples("scale-hit", &hits, Some(target), cfg.confidence, cfg.grid)?
            .with_counts(censored, 0, 0),
    )
}

/// `sqrt(2 pi) * mean(tau)`, the third route to `sqrt(pi/2)`.
pub fn inv_drawdown_from_tau(tau: &EstimateReport) -> EstimateReport {
    let factor = (2.0 * PI).sqrt();
    let mut r = tau.clone();
    r.name = "inv-drawdown-from-tau".into();
    r.mean *= factor;
    r.stderr *= factor;
    r.ci_low *= factor;
    r.ci_high *= factor;
    r.median = r.median.map(|m| m * factor);
    r.trimmed_mean = r.trimmed_mean.map(|m| m * factor);
    r.target = Some(inv_drawdown_target());
    r.z_score = report::z_score(r.mean, r.stderr, r.target);
    r
}

/// Difference of two independent estimates in units of their combined stderr.
pub fn combined_z(a: &EstimateReport, b: &EstimateReport) -> f64 {
    (a.mean - b.mean) / (a.stderr * a.stderr + b.stderr * b.stderr).sqrt()
}
