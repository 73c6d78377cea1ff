//! The additive clock `sigma(t) = 1/4 * int_0^t db / R(b)` carrying BES(3) onto
//! BESQ(4), and trapezoid integrals of path values.

use rand::Rng;

use crate::drawdown::DrawdownScan;
use crate::error::{Error, Result};
use crate::grid::{GridPath, GridSpec};
use crate::rng::RngStream;
use crate::sampler::{PathWalk, Process};

/// Default horizon for the BES(3) stopping-time search.
pub const DEFAULT_TIMECHANGE_HORIZON: f64 = 16.0;
/// Default number of cells on `[0, DEFAULT_TIMECHANGE_HORIZON]`.
pub const DEFAULT_TIMECHANGE_STEPS: usize = 1 << 18;

/// A BES(3) path together with `sigma` evaluated at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockedPath {
    base: GridPath,
    clock: Vec<f64>,
}

impl ClockedPath {
    pub fn base(&self) -> &GridPath {
        &self.base
    }

    pub fn clock(&self) -> &[f64] {
        &self.clock
    }
}

/// Running `sigma` over a stream of node values.
///
/// The first cell uses `R(b) ~ R(t_1) * sqrt(b / t_1)`, whose integral is
/// `2 t_1 / R(t_1)`; later cells use the trapezoid rule on `1 / R`.
#[derive(Debug, Clone)]
pub struct SigmaClock {
    step: f64,
    index: usize,
    prev_inv: f64,
    integral: f64,
}

impl SigmaClock {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            index: 0,
            prev_inv: 0.0,
            integral: 0.0,
        }
    }

    /// Feeds the next node value and returns `sigma` at that node.
    pub fn push(&mut self, value: f64) -> Result<f64> {
        let index = self.index;
        self.index += 1;
        if index == 0 {
            return Ok(0.0);
        }
        if value <= 0.0 {
            return Err(Error::InteriorZero(index));
        }
        let inv = value.recip();
        if index == 1 {
            self.integral = 2.0 * self.step * inv;
        } else {
            self.integral += 0.5 * self.step * (self.prev_inv + inv);
        }
        self.prev_inv = inv;
        Ok(0.25 * self.integral)
    }

    pub fn value(&self) -> f64 {
        0.25 * self.integral
    }
}

/// `sigma(t_k)` at every node of a BES(3)-type path (`values[0] = 0`, positive afterwards).
pub fn sigma_clock(path: &GridPath) -> Result<ClockedPath> {
    let mut clock = SigmaClock::new(path.grid().step());
    let clock = path
        .values()
        .iter()
        .map(|&v| clock.push(v))
        .collect::<Result<Vec<_>>>()?;
    Ok(ClockedPath {
        base: path.clone(),
        clock,
    })
}

/// Running trapezoid integral of node values.
#[derive(Debug, Clone)]
pub struct TrapezoidSum {
    step: f64,
    prev: Option<f64>,
    sum: f64,
}

impl TrapezoidSum {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            prev: None,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, value: f64) -> f64 {
        if let Some(prev) = self.prev {
            self.sum += 0.5 * self.step * (prev + value);
        }
        self.prev = Some(value);
        self.sum
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Trapezoid integral of the path over `[0, t_upto_index]`.
pub fn integral_functional(path: &GridPath, upto_index: usize) -> Result<f64> {
    let values = path.values();
    if upto_index >= values.len() {
        return Err(Error::IndexOutOfRange {
            index: upto_index,
            len: values.len(),
        });
    }
    let mut acc = TrapezoidSum::new(path.grid().step());
    for &v in &values[..=upto_index] {
        acc.push(v);
    }
    Ok(acc.value())
}

/// `sigma(tau_1^R)` for one replicate, or censoring at the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeChangeSample {
    Value {
        sigma: f64,
        /// `tau_1^R` on the grid.
        tau: f64,
    },
    Censored,
}

impl TimeChangeSample {
    pub fn sigma(&self) -> Option<f64> {
        match *self {
            TimeChangeSample::Value { sigma, .. } => Some(sigma),
            TimeChangeSample::Censored => None,
        }
    }
}

pub(crate) fn tau_via_timechange_with_rng<R: Rng>(
    rng: R,
    grid: &GridSpec,
) -> Result<TimeChangeSample> {
    let mut scan = DrawdownScan::new(1.0, grid.step())?;
    let mut clock = SigmaClock::new(grid.step());
    for value in PathWalk::with_rng(rng, Process::Bes3, grid)? {
        let sigma = clock.push(value)?;
        if let Some(hit) = scan.push(value) {
            return Ok(TimeChangeSample::Value {
                sigma,
                tau: hit.time,
            });
        }
    }
    Ok(TimeChangeSample::Censored)
}

/// Samples BES(3), stops at its first unit drawdown and returns the clock there.
pub fn tau_via_timechange(stream: &RngStream, grid: &GridSpec) -> Result<TimeChangeSample> {
    tau_via_timechange_with_rng(stream.rng(), grid)
}
