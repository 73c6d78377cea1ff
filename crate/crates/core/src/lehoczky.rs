//! Closed forms for BESQ(4) stopped at its first unit drawdown.
//!
//! `s(y) = -1/y` is a scale function of BESQ(4). Climbing from 1 to `b`
//! without a unit drawdown means, for each point of a subdivision of `[1, b]`,
//! reaching the next point before dropping by 1; the product of those
//! two-sided exit probabilities converges to `b * exp(-(b - 1))`.

use crate::error::{invalid_arg, Result};
use crate::quad::adaptive_simpson;

/// Upper limit used when integrating the survival function of `U(tau)`.
pub const MEAN_QUADRATURE_CUTOFF: f64 = 50.0;

fn scale(y: f64) -> f64 {
    -1.0 / y
}

/// `P_x{ U hits hi before lo }` for BESQ(4), `0 < lo < x < hi`.
pub fn scale_hit_prob(x: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && lo < x && x < hi && hi.is_finite()) {
        return Err(invalid_arg(format!(
            "need 0 < lo < x < hi, got lo={lo}, x={x}, hi={hi}"
        )));
    }
    Ok((scale(x) - scale(lo)) / (scale(hi) - scale(lo)))
}

/// Points `1 = b_0 < b_1 < ... < b_n = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subdivision {
    points: Vec<f64>,
}

impl Subdivision {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid_arg("a subdivision needs at least two points"));
        }
        if points[0] != 1.0 {
            return Err(invalid_arg(format!(
                "subdivision must start at 1, got {}",
                points[0]
            )));
        }
        if !points.iter().all(|p| p.is_finite()) || points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid_arg(
                "subdivision must be finite and strictly increasing",
            ));
        }
        Ok(Self { points })
    }

    /// `n` equal cells on `[1, b]`.
    pub fn uniform(b: f64, n: usize) -> Result<Self> {
        if n == 0 || !(b > 1.0) {
            return Err(invalid_arg(format!(
                "need b > 1 and n >= 1, got b={b}, n={n}"
            )));
        }
        let width = b - 1.0;
        let points = (0..=n)
            .map(|i| {
                if i == n {
                    b
                } else {
                    1.0 + width * i as f64 / n as f64
                }
            })
            .collect();
        Self::new(points)
    }

    /// `n` cells on `[1, b]` with geometrically growing widths.
    pub fn geometric(b: f64, n: usize) -> Result<Self> {
        if n == 0 || !(b > 1.0) {
            return Err(invalid_arg(format!(
                "need b > 1 and n >= 1, got b={b}, n={n}"
            )));
        }
        let ratio = b.powf(1.0 / n as f64);
        let points = (0..=n)
            .map(|i| if i == n { b } else { ratio.powi(i as i32) })
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn mesh(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

/// `prod_{i=1}^{n-1} P_{b_i}{ U hits b_{i+1} before b_i - 1 }`.
///
/// Accumulated as a sum of `log(1 - q_i)` with
/// `q_i = (1/b_i - 1/b_{i+1}) / (1/(b_i - 1) - 1/b_{i+1})`, which keeps full
/// precision when every factor is close to one.
pub fn lehoczky_product(subdivision: &Subdivision) -> Result<f64> {
    let p = subdivision.points();
    let mut log_prod = 0.0;
    for i in 1..p.len() - 1 {
        let (here, next) = (p[i], p[i + 1]);
        let floor = here - 1.0;
        if !(floor > 0.0) {
            return Err(invalid_arg(format!("b_{i} = {here} leaves no room below")));
        }
        let miss = (here.recip() - next.recip()) / (floor.recip() - next.recip());
        log_prod += (-miss).ln_1p();
    }
    Ok(log_prod.exp())
}

/// `int_1^b (r - 1)/r dr = b - 1 - log b`.
pub fn drift_integral(b: f64) -> Result<f64> {
    if !(b >= 1.0) || !b.is_finite() {
        return Err(invalid_arg(format!("need b >= 1, got {b}")));
    }
    Ok(b - 1.0 - b.ln())
}

/// `P{ max U over [0, tau] > b }`: 1 for `b <= 1`, `b * exp(-(b - 1))` above.
pub fn survival_max_at_tau(b: f64) -> f64 {
    if b <= 1.0 {
        1.0
    } else {
        b * (1.0 - b).exp()
    }
}

/// `P{ U(tau) > a } = (a + 1) exp(-a)`.
pub fn survival_value_at_tau(a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(invalid_arg(format!("need a >= 0, got {a}")));
    }
    Ok(survival_max_at_tau(a + 1.0))
}

/// Exact mean of `U(tau)`.
pub const MEAN_VALUE_AT_TAU: f64 = 2.0;

/// `E[U(tau)]` as the tail integral of its survival function.
pub fn mean_value_at_tau() -> f64 {
    adaptive_simpson(
        |a| survival_max_at_tau(a + 1.0),
        0.0,
        MEAN_QUADRATURE_CUTOFF,
        1e-13,
    )
}
