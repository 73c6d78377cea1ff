use mdraw_core::estimators::{
    defaults, domain_seed, extrapolate, ks_critical_1pct, run_imhof, simulate_besq4_stopping,
    EstimateReport, EstimatorConfig, SurvivalCurve,
};
use mdraw_core::lehoczky::{lehoczky_product, survival_max_at_tau, Subdivision};
use mdraw_core::sampler::{
    sample_bes3, sample_besq4, sample_bm, sample_meander_imhof, sample_meander_lastzero,
};
use mdraw_core::suite::{
    censoring_note, coarser, run_suite, Gate, SuiteConfig, EXACT_GATE, INV_DRAWDOWN_GATE,
    MAX_RELATIVE_STDERR, STOPPING_GATE,
};
use mdraw_core::{GridSpec, RngStream};

use crate::args::{Command, Common, EstimatorName, ProcessName};
use crate::output::{Record, Section, Value};
use crate::CliError;

pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_CURVE_PATHS: usize = 10_000;
pub const DEFAULT_SAMPLE_PATHS: usize = 1;
pub const DEFAULT_SAMPLE_STEPS: usize = 1024;
pub const DEFAULT_AREA_THRESHOLDS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

/// Everything a command produces, ready to be written.
pub struct Document {
    /// File stem used when the output goes to `MDRAW_OUT`.
    pub stem: String,
    pub header: Record,
    pub sections: Vec<Section>,
    /// False when a requested gate failed.
    pub pass: bool,
}

/// Levels 0, 0.25, ..., 8 for survival curves of `U(tau)`.
pub fn default_levels() -> Vec<f64> {
    (0..=32).map(|i| i as f64 * 0.25).collect()
}

fn grid_for(common: &Common, default: GridSpec) -> Result<GridSpec, CliError> {
    let horizon = common.horizon.unwrap_or(default.horizon());
    let steps = common.steps.unwrap_or(default.steps());
    Ok(GridSpec::new(horizon, steps)?)
}

fn base_header(common: &Common, command: &str, subject: &str) -> Record {
    Record::new()
        .with("tool", "mdraw")
        .with("version", env!("CARGO_PKG_VERSION"))
        .with("command", command)
        .with("subject", subject)
        .with("seed", common.seed)
        .with("format", common.format.name())
        .with("gate", common.gate)
        .with("bias_exponent", common.bias_exponent)
}

fn grid_header(mut header: Record, paths: usize, grid: &GridSpec) -> Record {
    header.push("paths", paths);
    header.push("steps", grid.steps());
    header.push("horizon", grid.horizon());
    header
}

pub fn run(command: &Command, common: &Common) -> Result<Document, CliError> {
    match command {
        Command::Sample { process } => sample(common, *process),
        Command::Estimate { which } => estimate(common, *which),
        Command::Verify => verify(common),
        Command::Lehoczky { b, n } => lehoczky(common, *b, *n),
        Command::Curve => curve(common),
    }
}

fn sample(common: &Common, process: ProcessName) -> Result<Document, CliError> {
    let default = match process {
        ProcessName::Meander | ProcessName::MeanderImhof | ProcessName::Bm | ProcessName::Bes3 => {
            GridSpec::unit(DEFAULT_SAMPLE_STEPS)?
        }
        ProcessName::Besq4 => GridSpec::new(8.0, DEFAULT_SAMPLE_STEPS)?,
    };
    let grid = grid_for(common, default)?;
    let paths = common.paths.unwrap_or(DEFAULT_SAMPLE_PATHS);
    let seed = domain_seed(common.seed, &format!("sample-{}", process.as_str()));
    let times = grid.times();

    let mut records = Vec::with_capacity(paths * grid.len());
    for id in 0..paths {
        let stream = RngStream::new(seed, id as u64);
        let (path, weight) = match process {
            ProcessName::Bm => (sample_bm(&stream, &grid, 0.0)?, 1.0),
            ProcessName::Bes3 => (sample_bes3(&stream, &grid)?, 1.0),
            ProcessName::Besq4 => (sample_besq4(&stream, &grid, 0.0)?, 1.0),
            ProcessName::Meander => (sample_meander_lastzero(&stream, &grid)?, 1.0),
            ProcessName::MeanderImhof => {
                let draw = sample_meander_imhof(&stream, &grid)?;
                let w = draw.weighted.weight();
                (draw.weighted.path().clone(), w)
            }
        };
        for (k, (&t, &v)) in times.iter().zip(path.values()).enumerate() {
            records.push(
                Record::new()
                    .with("path", id)
                    .with("index", k)
                    .with("time", t)
                    .with("value", v)
                    .with("weight", weight),
            );
        }
    }
    let header = grid_header(
        base_header(common, "sample", process.as_str()),
        paths,
        &grid,
    );
    Ok(Document {
        stem: format!("sample-{}", process.as_str()),
        header,
        sections: vec![Section {
            name: "path",
            records,
        }],
        pass: true,
    })
}

fn report_record(r: &EstimateReport, role: &str, verdict: Option<&Result<(), String>>) -> Record {
    let (gate, reason) = match verdict {
        None => ("", String::new()),
        Some(Ok(())) => ("pass", String::new()),
        Some(Err(why)) => ("fail", why.clone()),
    };
    Record::new()
        .with("name", r.name.as_str())
        .with("role", role)
        .with("n_samples", r.n_samples)
        .with("mean", r.mean)
        .with("stderr", r.stderr)
        .with("confidence", r.confidence)
        .with("ci_low", r.ci_low)
        .with("ci_high", r.ci_high)
        .with("target", r.target)
        .with("z_score", r.z_score)
        .with("n_censored", r.n_censored)
        .with("n_rejected", r.n_rejected)
        .with("n_flagged", r.n_flagged)
        .with("horizon", r.grid_used.horizon())
        .with("steps", r.grid_used.steps())
        .with("median", r.median)
        .with("trimmed_mean", r.trimmed_mean)
        .with("gate", gate)
        .with("reason", reason)
}

fn curve_section(curve: &SurvivalCurve) -> Section {
    let records = curve
        .levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            Record::new()
                .with("level", level)
                .with("empirical", curve.empirical[i])
                .with("analytic", curve.analytic.as_ref().map(|a| a[i]))
        })
        .collect();
    Section {
        name: "curve",
        records,
    }
}

/// Collects report rows; with `--gate`, the gated row carries the verdict.
struct Reports {
    rows: Vec<Record>,
    pass: bool,
}

impl Reports {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            pass: true,
        }
    }

    fn plain(&mut self, r: &EstimateReport, role: &str) {
        self.rows.push(report_record(r, role, None));
    }

    fn gated(&mut self, r: &EstimateReport, role: &str, verdict: Result<(), String>) {
        self.pass &= verdict.is_ok();
        self.rows.push(report_record(r, role, Some(&verdict)));
    }
}

fn with_censoring(gate: Gate, r: &EstimateReport, raw: &EstimateReport) -> Result<(), String> {
    gate.check(r)
        .and_then(|()| censoring_note(raw).map_or(Ok(()), Err))
}

fn estimate(common: &Common, which: EstimatorName) -> Result<Document, CliError> {
    let default_grid = match which {
        EstimatorName::InvDrawdownMeander | EstimatorName::InvDrawdownImhof => {
            defaults::meander_grid()
        }
        _ => defaults::stopping_grid(),
    };
    let grid = grid_for(common, default_grid)?;
    let paths = common.paths.unwrap_or(DEFAULT_PATHS);
    let cfg = EstimatorConfig::new(common.seed, paths, grid).with_workers(common.workers);
    let coarse_cfg = || -> Result<EstimatorConfig, CliError> { Ok(cfg.with_grid(coarser(&grid)?)) };
    let p = common.bias_exponent;
    let mut header = grid_header(
        base_header(common, "estimate", which.as_str()),
        paths,
        &grid,
    );
    let mut reports = Reports::new();
    let mut sections = Vec::new();

    match which {
        EstimatorName::InvDrawdownMeander => {
            let raw = mdraw_core::estimators::estimate_inv_drawdown_meander(&cfg)?;
            if common.gate {
                let coarse = mdraw_core::estimators::estimate_inv_drawdown_meander(&coarse_cfg()?)?;
                let ex = extrapolate(&[coarse.clone(), raw.clone()], p)?;
                reports.plain(&coarse, "coarse");
                reports.plain(&raw, "raw");
                reports.gated(&ex, "extrapolated", INV_DRAWDOWN_GATE.check(&ex));
            } else {
                reports.plain(&raw, "raw");
            }
        }
        EstimatorName::InvDrawdownImhof => {
            let fine = run_imhof(&cfg)?;
            if common.gate {
                let coarse = run_imhof(&coarse_cfg()?)?;
                let ex = extrapolate(&[coarse.inv_drawdown.clone(), fine.inv_drawdown.clone()], p)?;
                reports.plain(&coarse.inv_drawdown, "coarse");
                reports.plain(&fine.inv_drawdown, "raw");
                reports.gated(&ex, "extrapolated", INV_DRAWDOWN_GATE.check(&ex));
            } else {
                reports.plain(&fine.inv_drawdown, "raw");
            }
            reports.plain(&fine.normalization, "diagnostic");
        }
        EstimatorName::Tau1Besq4 | EstimatorName::ValueAtTau => {
            let fine = simulate_besq4_stopping(&cfg)?;
            let tau = which == EstimatorName::Tau1Besq4;
            let pick = |run: &mdraw_core::estimators::StoppingRun| {
                if tau {
                    run.tau_report()
                } else {
                    run.value_report()
                }
            };
            let raw = pick(&fine)?;
            if common.gate {
                let coarse = pick(&simulate_besq4_stopping(&coarse_cfg()?)?)?;
                let ex = extrapolate(&[coarse.clone(), raw.clone()], p)?;
                reports.plain(&coarse, "coarse");
                reports.plain(&raw, "raw");
                let verdict = if tau {
                    with_censoring(STOPPING_GATE, &ex, &raw)
                } else {
                    STOPPING_GATE.check(&ex)
                };
                reports.gated(&ex, "extrapolated", verdict);
            } else {
                reports.plain(&raw, "raw");
            }
            if !tau {
                reports.plain(&fine.value_exceedance_report(1.0)?, "diagnostic");
                let levels = common.levels.clone().unwrap_or_else(default_levels);
                let curve = fine.value_curve(&levels)?;
                header.push("levels", Value::Floats(curve.levels.clone()));
                header.push("ks_distance", curve.ks_distance);
                sections.push(curve_section(&curve));
            }
        }
        EstimatorName::Wald => {
            let raw = simulate_besq4_stopping(&cfg)?.wald_report()?;
            if common.gate {
                reports.gated(&raw, "raw", EXACT_GATE.check(&raw));
            } else {
                reports.plain(&raw, "raw");
            }
        }
        EstimatorName::TailA => {
            let levels = common
                .levels
                .clone()
                .unwrap_or_else(|| DEFAULT_AREA_THRESHOLDS.to_vec());
            let (curve, raw) = simulate_besq4_stopping(&cfg)?.area_tail(&levels)?;
            if common.gate {
                let rel = raw.stderr / raw.mean.abs();
                let verdict = if rel < MAX_RELATIVE_STDERR {
                    Ok(())
                } else {
                    Err(format!(
                        "stderr/mean {rel:.3e} not below {MAX_RELATIVE_STDERR}"
                    ))
                };
                reports.gated(&raw, "raw", verdict);
            } else {
                reports.plain(&raw, "raw");
            }
            header.push("levels", Value::Floats(curve.levels.clone()));
            sections.push(curve_section(&curve));
        }
    }

    sections.insert(
        0,
        Section {
            name: "report",
            records: reports.rows,
        },
    );
    Ok(Document {
        stem: format!("estimate-{}", which.as_str()),
        header,
        sections,
        pass: reports.pass,
    })
}

fn verify(common: &Common) -> Result<Document, CliError> {
    let cfg = SuiteConfig {
        seed: common.seed,
        n_paths: common.paths.unwrap_or(DEFAULT_PATHS),
        workers: common.workers,
        bias_exponent: common.bias_exponent,
    };
    let rows = run_suite(&cfg)?;
    let pass = rows.iter().all(|r| r.pass);
    let records = rows
        .iter()
        .map(|r| {
            Record::new()
                .with("name", r.name.as_str())
                .with("target", r.target)
                .with("estimate", r.estimate)
                .with("stderr", r.stderr)
                .with("z", r.z)
                .with("pass", r.pass)
                .with("reason", r.reason.as_str())
        })
        .collect();
    let mut header = base_header(common, "verify", "");
    header.push("paths", cfg.n_paths);
    Ok(Document {
        stem: "verify".into(),
        header,
        sections: vec![Section {
            name: "identity",
            records,
        }],
        pass,
    })
}

/// Subdivision sizes 1, 2, 4, ... up to `n`, ending at `n` itself.
pub fn doubling_sizes(n: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = std::iter::successors(Some(1usize), |k| k.checked_mul(2))
        .take_while(|&k| k <= n)
        .collect();
    if sizes.last() != Some(&n) {
        sizes.push(n);
    }
    sizes
}

fn lehoczky(common: &Common, b: f64, n: usize) -> Result<Document, CliError> {
    if !(b.is_finite() && b > 1.0) {
        return Err(CliError::Usage(format!("--b must exceed 1, got {b}")));
    }
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let analytic = survival_max_at_tau(b);
    let mut records = Vec::new();
    for k in doubling_sizes(n) {
        let product = lehoczky_product(&Subdivision::uniform(b, k)?)?;
        records.push(
            Record::new()
                .with("n", k)
                .with("product", product)
                .with("analytic", analytic)
                .with("abs_diff", (product - analytic).abs()),
        );
    }
    let header = base_header(common, "lehoczky", "")
        .with("b", b)
        .with("n", n);
    Ok(Document {
        stem: "lehoczky".into(),
        header,
        sections: vec![Section {
            name: "lehoczky",
            records,
        }],
        pass: true,
    })
}

fn curve(common: &Common) -> Result<Document, CliError> {
    let grid = grid_for(common, defaults::stopping_grid())?;
    let paths = common.paths.unwrap_or(DEFAULT_CURVE_PATHS);
    let levels = common.levels.clone().unwrap_or_else(default_levels);
    if levels.is_empty() {
        return Err(CliError::Usage("--levels must not be empty".into()));
    }
    let cfg = EstimatorConfig::new(common.seed, paths, grid).with_workers(common.workers);
    let run = simulate_besq4_stopping(&cfg)?;
    let curve = run.value_curve(&levels)?;
    let critical = ks_critical_1pct(curve.n_samples);
    let ks = curve.ks_distance.unwrap_or(f64::NAN);
    let pass = !common.gate || ks < critical;

    let header = grid_header(base_header(common, "curve", "value-at-tau"), paths, &grid)
        .with("levels", Value::Floats(curve.levels.clone()))
        .with("n_samples", curve.n_samples)
        .with("n_censored", run.n_censored())
        .with("ks_distance", ks)
        .with("ks_critical_1pct", critical);
    Ok(Document {
        stem: "curve".into(),
        header,
        sections: vec![curve_section(&curve)],
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_sizes_end_at_n() {
        assert_eq!(doubling_sizes(1), vec![1]);
        assert_eq!(doubling_sizes(8), vec![1, 2, 4, 8]);
        assert_eq!(doubling_sizes(10), vec![1, 2, 4, 8, 10]);
    }

    #[test]
    fn default_levels_span_zero_to_eight() {
        let l = default_levels();
        assert_eq!(l.len(), 33);
        assert_eq!(l[0], 0.0);
        assert_eq!(l[32], 8.0);
    }
}
