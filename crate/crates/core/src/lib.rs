//! Simulation toolkit for drawdown functionals of meander and Bessel-type paths.
//!
//! The library samples Brownian motion, the Brownian meander, BES(3) and
//! BESQ(4) on uniform grids, evaluates drawdown functionals and stopping
//! times on the samples, and checks the resulting Monte Carlo averages
//! against their closed forms:
//!
//! * `E[1 / sup (running max - m)] = sqrt(pi / 2)` for the meander `m`,
//!   directly and through the BES(3) importance weight `sqrt(pi/2) / R(1)`;
//! * `E[tau] = 1/2` and `P{U(tau) > a} = (a + 1) e^{-a}` for BESQ(4) stopped
//!   at its first unit drawdown, reached through the BES(3) clock
//!   `sigma(t) = 1/4 int_0^t db / R(b)` as well;
//! * the scale-function product converging to `b e^{-(b - 1)}`.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drawdown;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod lehoczky;
pub mod quad;
pub mod rng;
pub mod sampler;
pub mod suite;
pub mod timechange;

pub use error::{Error, Result};
pub use grid::{GridPath, GridSpec, WeightedPath};
pub use rng::RngStream;
