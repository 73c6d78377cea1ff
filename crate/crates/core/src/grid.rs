//! Uniform time grids and the paths sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `t_k = k * horizon / steps`, `k = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    horizon: f64,
    steps: usize,
}

impl GridSpec {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 steps, got {steps}"
            )));
        }
        let grid = Self { horizon, steps };
        if grid.step() <= 0.0 {
            return Err(Error::InvalidGrid("step size underflows to zero".into()));
        }
        Ok(grid)
    }

    /// The unit interval `[0, 1]` split into `steps` cells.
    pub fn unit(steps: usize) -> Result<Self> {
        Self::new(1.0, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.time(k)).collect()
    }

    /// True when `finer` covers the same horizon with `2^j * steps` cells, `j >= 1`.
    pub fn is_refined_by(&self, finer: &GridSpec) -> bool {
        if self.horizon != finer.horizon || finer.steps <= self.steps {
            return false;
        }
        finer.steps.is_multiple_of(self.steps) && (finer.steps / self.steps).is_power_of_two()
    }
}

/// A trajectory sampled at every node of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    grid: GridSpec,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidPath(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPath(format!("non-finite value at node {k}")));
        }
        Ok(Self { grid, values })
    }

    /// Builds a path on `[0, horizon]` from raw values; convenient for tests and fixtures.
    pub fn from_values(horizon: f64, values: Vec<f64>) -> Result<Self> {
        let steps = values.len().saturating_sub(1);
        Self::new(GridSpec::new(horizon, steps)?, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Same grid, values transformed node by node.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }
}

/// A path paired with a positive importance weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPath {
    path: GridPath,
    weight: f64,
}

impl WeightedPath {
    pub fn new(path: GridPath, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "weight must be positive and finite, got {weight}"
            )));
        }
        Ok(Self { path, weight })
    }

    pub fn path(&self) -> &GridPath {
        &self.path
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }
}
