//! Drawdown functionals on sampled paths.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::grid::GridPath;

/// Running maximum `max(values[0..=k])`.
pub fn running_max(path: &GridPath) -> GridPath {
    let mut peak = f64::NEG_INFINITY;
    let values = path
        .values()
        .iter()
        .map(|&v| {
            peak = peak.max(v);
            peak
        })
        .collect();
    GridPath::new(*path.grid(), values).expect("running max of a valid path is valid")
}

/// Drawdown process `running_max[k] - values[k]`.
pub fn drawdown_process(path: &GridPath) -> GridPath {
    let mut peak = f64::NEG_INFINITY;
    let values = path
        .values()
        .iter()
        .map(|&v| {
            peak = peak.max(v);
            peak - v
        })
        .collect();
    GridPath::new(*path.grid(), values).expect("drawdown of a valid path is valid")
}

/// Largest drop from a running peak; zero iff the path never decreases.
pub fn max_drawdown(path: &GridPath) -> f64 {
    max_drawdown_of(path.values())
}

pub(crate) fn max_drawdown_of(values: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut worst = 0.0f64;
    for &v in values {
        peak = peak.max(v);
        worst = worst.max(peak - v);
    }
    worst
}

/// Where and how the drawdown first reached the level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrawdownHit {
    pub index: usize,
    pub time: f64,
    pub value: f64,
    pub running_max: f64,
    /// `(running_max - value) - level`; grid artifact, non-negative.
    pub overshoot: f64,
}

/// Result of searching a path for the first time its drawdown reaches `level`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoppingSample {
    pub level: f64,
    /// `None` when the path is censored at the horizon.
    pub hit: Option<DrawdownHit>,
}

impl StoppingSample {
    pub fn is_hit(&self) -> bool {
        self.hit.is_some()
    }
}

/// Incremental first-drawdown-time detector, fed one node at a time.
#[derive(Debug, Clone)]
pub struct DrawdownScan {
    level: f64,
    step: f64,
    index: usize,
    peak: f64,
}

impl DrawdownScan {
    pub fn new(level: f64, step: f64) -> Result<Self> {
        if !(level.is_finite() && level > 0.0) {
            return Err(invalid_arg(format!(
                "drawdown level must be positive, got {level}"
            )));
        }
        Ok(Self {
            level,
            step,
            index: 0,
            peak: f64::NEG_INFINITY,
        })
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// Running maximum of everything pushed so far.
    pub fn peak(&self) -> f64 {
        self.peak
    }

    /// Feeds the next node; returns the hit if the threshold is reached here.
    /// Ties count as hits.
    pub fn push(&mut self, value: f64) -> Option<DrawdownHit> {
        let index = self.index;
        self.index += 1;
        self.peak = self.peak.max(value);
        let drop = self.peak - value;
        (drop >= self.level).then_some(DrawdownHit {
            index,
            time: index as f64 * self.step,
            value,
            running_max: self.peak,
            overshoot: drop - self.level,
        })
    }
}

/// First grid index where `running_max - value >= level`.
pub fn first_drawdown_time(path: &GridPath, level: f64) -> Result<StoppingSample> {
    let mut scan = DrawdownScan::new(level, path.grid().step())?;
    let hit = path
        .values()
        .iter()
        .find_map(|&v| scan.push(v))
        .map(|mut hit| {
            hit.time = path.grid().time(hit.index);
            hit
        });
    Ok(StoppingSample { level, hit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(values: &[f64]) -> GridPath {
        GridPath::from_values(1.0, values.to_vec()).unwrap()
    }

    #[test]
    fn running_max_examples() {
        assert_eq!(
            running_max(&path(&[0.0, 1.0, 0.5, 2.0])).values(),
            &[0.0, 1.0, 1.0, 2.0]
        );
        assert_eq!(
            running_max(&path(&[0.0, 0.1, 0.1, 3.0])).values(),
            &[0.0, 0.1, 0.1, 3.0]
        );
        assert_eq!(
            running_max(&path(&[4.0, 4.0, 4.0])).values(),
            &[4.0, 4.0, 4.0]
        );
    }

    #[test]
    fn max_drawdown_examples() {
        assert_eq!(max_drawdown(&path(&[0.0, 1.0, 0.5, 2.0])), 0.5);
        assert_eq!(max_drawdown(&path(&[0.0, 2.0, -1.0])), 3.0);
        assert_eq!(max_drawdown(&path(&[-1.0, 0.0, 0.0, 5.0])), 0.0);
    }

    #[test]
    fn drawdown_process_examples() {
        assert_eq!(
            drawdown_process(&path(&[0.0, 1.0, 0.5, 2.0])).values(),
            &[0.0, 0.0, 0.5, 0.0]
        );
        assert_eq!(
            drawdown_process(&path(&[2.0, 2.0, 2.0])).values(),
            &[0.0, 0.0, 0.0]
        );
        assert_eq!(
            drawdown_process(&path(&[0.0, 2.0, -1.0])).values(),
            &[0.0, 0.0, 3.0]
        );
    }

    #[test]
    fn first_drawdown_time_examples() {
        let s = first_drawdown_time(&path(&[0.0, 2.0, 0.5]), 1.0).unwrap();
        let hit = s.hit.unwrap();
        assert_eq!(hit.index, 2);
        assert_eq!(hit.time, 1.0);
        assert_eq!(hit.value, 0.5);
        assert_eq!(hit.running_max, 2.0);
        assert_eq!(hit.overshoot, 0.5);

        let s = first_drawdown_time(&path(&[0.0, 1.0, 0.0]), 1.0).unwrap();
        assert_eq!(s.hit.unwrap().index, 2);
        assert_eq!(s.hit.unwrap().overshoot, 0.0);

        let s = first_drawdown_time(&path(&[0.0, 1.0, 2.0, 3.0]), 0.5).unwrap();
        assert!(!s.is_hit());
    }

    #[test]
    fn level_must_be_positive() {
        assert!(first_drawdown_time(&path(&[0.0, 1.0, 0.0]), 0.0).is_err());
        assert!(first_drawdown_time(&path(&[0.0, 1.0, 0.0]), -1.0).is_err());
        assert!(first_drawdown_time(&path(&[0.0, 1.0, 0.0]), f64::NAN).is_err());
    }

    fn small_path() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, 3..40)
    }

    proptest! {
        #[test]
        fn max_drawdown_is_max_of_process(v in small_path()) {
            let p = path(&v);
            let from_process = drawdown_process(&p).values().iter().cloned().fold(0.0, f64::max);
            prop_assert_eq!(max_drawdown(&p), from_process);
        }

        #[test]
        fn max_drawdown_matches_double_loop(v in small_path()) {
            let mut brute = 0.0f64;
            for i in 0..v.len() {
                for j in i..v.len() {
                    brute = brute.max(v[i] - v[j]);
                }
            }
            prop_assert_eq!(max_drawdown(&path(&v)), brute);
        }

        #[test]
        fn reversed_drawdown_is_max_rise(v in small_path()) {
            let mut rise = 0.0f64;
            for i in 0..v.len() {
                for j in i..v.len() {
                    rise = rise.max(v[j] - v[i]);
                }
            }
            let reversed: Vec<f64> = v.iter().rev().cloned().collect();
            prop_assert_eq!(max_drawdown(&path(&reversed)), rise);
        }

        #[test]
        fn first_hit_is_minimal(v in small_path(), level in 0.1f64..8.0) {
            let s = first_drawdown_time(&path(&v), level).unwrap();
            let first = (0..v.len()).find(|&k| {
                let peak = v[..=k].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                peak - v[k] >= level
            });
            prop_assert_eq!(s.hit.map(|h| h.index), first);
            if let Some(hit) = s.hit {
                prop_assert!(hit.overshoot >= 0.0);
                prop_assert!(hit.running_max - hit.value >= level);
            }
        }

        #[test]
        fn affine_covariance(v in small_path(), a in 0.01f64..100.0, c in -50.0f64..50.0) {
            let base = max_drawdown(&path(&v));
            let moved: Vec<f64> = v.iter().map(|x| a * x + c).collect();
            let got = max_drawdown(&path(&moved));
            let scale = (a * 10.0 + c.abs()).max(1.0);
            prop_assert!((got - a * base).abs() <= 8.0 * f64::EPSILON * scale);
        }

        #[test]
        fn running_max_dominates(v in small_path()) {
            let p = path(&v);
            let m = running_max(&p);
            for k in 0..v.len() {
                prop_assert!(m.values()[k] >= v[k]);
                if k > 0 {
                    prop_assert!(m.values()[k] >= m.values()[k - 1]);
                }
            }
        }
    }
}
