//! Seedable samplers for Brownian motion, the Brownian meander, BES(3) and BESQ(4).
//!
//! Brownian motion, BES(3) and BESQ(4) are built from exact Gaussian
//! increments of their Cartesian coordinates, so their marginals at the grid
//! nodes carry no discretization error. [`PathWalk`] produces the node values
//! lazily, which lets stopping-time estimators quit at the first hit; the
//! `sample_*` functions collect the same walk into a [`GridPath`].
//!
//! The meander is obtained from a Brownian path on `[0, 1]` by rescaling the
//! excursion straddling time 1 after the last zero. The internal Brownian path
//! is built by midpoint (Lévy) refinement, and its tail is refined further
//! until the final excursion is resolved on its own time scale; see
//! [`MeanderSampler`].

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid_arg, Result};
use crate::grid::{GridPath, GridSpec, WeightedPath};
use crate::rng::{RngStream, StreamRng};

/// Default internal resolution of the Brownian path behind the last-zero meander.
pub const DEFAULT_MEANDER_RESOLUTION: usize = 1 << 14;

/// The diffusions with exact node marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Process {
    /// One-dimensional Brownian motion started at `start`.
    Brownian { start: f64 },
    /// Modulus of a three-dimensional Brownian motion started at the origin.
    Bes3,
    /// Squared modulus of a four-dimensional Brownian motion; `start` is `U(0)`.
    Besq4 { start: f64 },
}

impl Process {
    fn dim(&self) -> usize {
        match self {
            Process::Brownian { .. } => 1,
            Process::Bes3 => 3,
            Process::Besq4 { .. } => 4,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Process::Brownian { start } if !start.is_finite() => {
                Err(invalid_arg(format!("start must be finite, got {start}")))
            }
            Process::Besq4 { start } if !(start.is_finite() && start >= 0.0) => Err(invalid_arg(
                format!("BESQ(4) start must be non-negative, got {start}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Lazily generated node values `X(t_0), X(t_1), ..., X(t_steps)`.
pub struct PathWalk<R = StreamRng> {
    rng: R,
    process: Process,
    coords: [f64; 4],
    sd: f64,
    index: usize,
    steps: usize,
}

impl<R: Rng> PathWalk<R> {
    pub fn with_rng(rng: R, process: Process, grid: &GridSpec) -> Result<Self> {
        process.validate()?;
        let mut coords = [0.0; 4];
        match process {
            Process::Brownian { start } => coords[0] = start,
            Process::Besq4 { start } => coords[0] = start.sqrt(),
            Process::Bes3 => {}
        }
        Ok(Self {
            rng,
            process,
            coords,
            sd: grid.step().sqrt(),
            index: 0,
            steps: grid.steps(),
        })
    }

    /// Index of the node the next call to `next` will return.
    pub fn position(&self) -> usize {
        self.index
    }

    pub fn into_rng(self) -> R {
        self.rng
    }

    fn value(&self) -> f64 {
        let c = &self.coords;
        match self.process {
            Process::Brownian { .. } => c[0],
            Process::Bes3 => (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt(),
            Process::Besq4 { .. } => c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3],
        }
    }
}

impl PathWalk<StreamRng> {
    pub fn new(stream: &RngStream, process: Process, grid: &GridSpec) -> Result<Self> {
        Self::with_rng(stream.rng(), process, grid)
    }
}

impl<R: Rng> Iterator for PathWalk<R> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.index > self.steps {
            return None;
        }
        if self.index > 0 {
            let dim = self.process.dim();
            for c in &mut self.coords[..dim] {
                let z: f64 = self.rng.sample(StandardNormal);
                *c += self.sd * z;
            }
        }
        self.index += 1;
        Some(self.value())
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.steps + 1 - self.index.min(self.steps + 1);
        (left, Some(left))
    }
}

pub(crate) fn collect_walk<R: Rng>(rng: R, process: Process, grid: &GridSpec) -> Result<GridPath> {
    let values = PathWalk::with_rng(rng, process, grid)?.collect();
    GridPath::new(*grid, values)
}

/// Brownian motion started at `start`.
pub fn sample_bm(stream: &RngStream, grid: &GridSpec, start: f64) -> Result<GridPath> {
    collect_walk(stream.rng(), Process::Brownian { start }, grid)
}

/// Three-dimensional Bessel process with `R(0) = 0`.
pub fn sample_bes3(stream: &RngStream, grid: &GridSpec) -> Result<GridPath> {
    collect_walk(stream.rng(), Process::Bes3, grid)
}

/// Four-dimensional squared Bessel process with `U(0) = start`.
pub fn sample_besq4(stream: &RngStream, grid: &GridSpec, start: f64) -> Result<GridPath> {
    collect_walk(stream.rng(), Process::Besq4 { start }, grid)
}

/// Brownian path on `[0, horizon]` with `steps` cells, built by midpoint refinement.
///
/// The endpoint is drawn first, then interval midpoints breadth-first from the
/// conditional bridge law. For `steps = 2^j` the first `2^i` normals fix the
/// path on the `2^i`-cell subgrid.
pub fn brownian_by_refinement<R: Rng>(rng: &mut R, horizon: f64, steps: usize) -> Vec<f64> {
    let h = horizon / steps as f64;
    let mut w = vec![0.0; steps + 1];
    let z: f64 = rng.sample(StandardNormal);
    w[steps] = horizon.sqrt() * z;

    let mut queue = VecDeque::with_capacity(steps / 2 + 1);
    if steps >= 2 {
        queue.push_back((0usize, steps));
    }
    while let Some((lo, hi)) = queue.pop_front() {
        let mid = lo + (hi - lo) / 2;
        let (left, right) = ((mid - lo) as f64, (hi - mid) as f64);
        let mean = (right * w[lo] + left * w[hi]) / (left + right);
        let var = h * left * right / (left + right);
        let z: f64 = rng.sample(StandardNormal);
        w[mid] = mean + var.sqrt() * z;
        if mid - lo >= 2 {
            queue.push_back((lo, mid));
        }
        if hi - mid >= 2 {
            queue.push_back((mid, hi));
        }
    }
    w
}

/// Side information from one last-zero meander draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanderInfo {
    /// Located last zero of the underlying Brownian path before time 1.
    pub last_zero: f64,
    /// Cells of the internal path covering `[last_zero, 1]`.
    pub excursion_cells: usize,
    /// Rounds of tail refinement needed to resolve the final excursion.
    pub refinements: u32,
    /// True when the unrefined path never changed sign after its first cell,
    /// or refinement stopped at the floating-point floor.
    pub degenerate: bool,
}

/// Brownian meander on `[0, 1]` via the last zero of a Brownian path.
///
/// The Brownian path is first drawn on `resolution` cells. The final
/// excursion may cover only a few of them, so the tail starting at the last
/// sign change is bisected with exact bridge midpoints until the excursion
/// spans at least `resolution` cells; new zeros uncovered by the refinement
/// move the last zero later and trigger another round. The last zero is the
/// linear-interpolation root inside the last sign-change cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeanderSampler {
    resolution: usize,
}

impl Default for MeanderSampler {
    fn default() -> Self {
        Self {
            resolution: DEFAULT_MEANDER_RESOLUTION,
        }
    }
}

/// Cells narrower than this are not bisected further.
const MIN_CELL: f64 = 1e-13;

/// Brownian knots at `start + j * dt`, the last one at time 1.
struct Tail {
    start: f64,
    dt: f64,
    w: Vec<f64>,
}

impl Tail {
    /// Last cell with a sign change; cell 0 always qualifies by construction.
    fn last_sign_change(&self) -> usize {
        let w = &self.w;
        (0..w.len() - 1)
            .rev()
            .find(|&k| w[k] * w[k + 1] <= 0.0)
            .unwrap_or(0)
    }

    /// Drops the knots before cell `k`.
    fn cut(&mut self, k: usize) {
        self.start += k as f64 * self.dt;
        self.w.drain(..k);
    }

    /// Bisects every cell once with bridge midpoints.
    fn bisect<R: Rng>(&mut self, rng: &mut R) {
        let sd = (0.25 * self.dt).sqrt();
        let mut out = Vec::with_capacity(2 * self.w.len() - 1);
        out.push(self.w[0]);
        for pair in self.w.windows(2) {
            let z: f64 = rng.sample(StandardNormal);
            out.push(0.5 * (pair[0] + pair[1]) + sd * z);
            out.push(pair[1]);
        }
        self.w = out;
        self.dt *= 0.5;
    }

    fn cells(&self) -> usize {
        self.w.len() - 1
    }
}

impl MeanderSampler {
    /// `resolution` is the minimum number of internal cells across the final excursion.
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(invalid_arg(format!(
                "meander resolution must be at least 2, got {resolution}"
            )));
        }
        Ok(Self { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn sample(&self, stream: &RngStream, grid: &GridSpec) -> Result<GridPath> {
        Ok(self.sample_with_rng(&mut stream.rng(), grid)?.0)
    }

    pub fn sample_with_rng<R: Rng>(
        &self,
        rng: &mut R,
        grid: &GridSpec,
    ) -> Result<(GridPath, MeanderInfo)> {
        if grid.horizon() != 1.0 {
            return Err(invalid_arg(format!(
                "the meander lives on [0, 1]; got horizon {}",
                grid.horizon()
            )));
        }
        let n = self.resolution;
        let mut tail = Tail {
            start: 0.0,
            dt: 1.0 / n as f64,
            w: brownian_by_refinement(rng, 1.0, n),
        };
        let mut k = tail.last_sign_change();
        let mut degenerate = k == 0;
        let mut refinements = 0;
        while tail.cells() - k < n {
            if tail.dt < MIN_CELL {
                degenerate = true;
                break;
            }
            tail.cut(k);
            while tail.cells() < n && tail.dt >= MIN_CELL {
                tail.bisect(rng);
            }
            refinements += 1;
            k = tail.last_sign_change();
        }

        let w = &tail.w;
        let root = if w[k] == w[k + 1] {
            0.0
        } else {
            w[k] / (w[k] - w[k + 1])
        };
        let last_zero = tail.start + (k as f64 + root) * tail.dt;
        let span = 1.0 - last_zero;
        let scale = span.sqrt().recip();

        // Knot j of the tail sits at start + j * dt; the last one at 1.
        let last = w.len() - 1;
        let m = grid.steps();
        let mut values = Vec::with_capacity(m + 1);
        values.push(0.0);
        for j in 1..m {
            let t = last_zero + span * (j as f64 / m as f64);
            let x = (t - tail.start) / tail.dt;
            let i = (x.floor() as usize).clamp(k, last - 1);
            let frac = (x - i as f64).clamp(0.0, 1.0);
            let wt = w[i] + frac * (w[i + 1] - w[i]);
            values.push(wt.abs() * scale);
        }
        values.push(w[last].abs() * scale);

        let info = MeanderInfo {
            last_zero,
            excursion_cells: last - k,
            refinements,
            degenerate,
        };
        Ok((GridPath::new(*grid, values)?, info))
    }
}

/// Last-zero meander at the default internal resolution (or the grid's, if finer).
pub fn sample_meander_lastzero(stream: &RngStream, grid: &GridSpec) -> Result<GridPath> {
    MeanderSampler::new(DEFAULT_MEANDER_RESOLUTION.max(grid.steps()))?.sample(stream, grid)
}

/// A BES(3) path carrying its meander importance weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ImhofDraw {
    pub weighted: WeightedPath,
    /// Draws thrown away because `R(1)` vanished numerically.
    pub rejections: u32,
}

/// Importance weight `sqrt(pi/2) / R(1)` turning BES(3) averages into meander averages.
pub fn imhof_weight(endpoint: f64) -> f64 {
    FRAC_PI_2.sqrt() / endpoint
}

pub(crate) fn imhof_with_rng<R: Rng>(rng: &mut R, grid: &GridSpec) -> Result<ImhofDraw> {
    if grid.horizon() != 1.0 {
        return Err(invalid_arg(format!(
            "the Imhof relation is stated on [0, 1]; got horizon {}",
            grid.horizon()
        )));
    }
    let mut rejections = 0;
    loop {
        let path = collect_walk(&mut *rng, Process::Bes3, grid)?;
        let weight = imhof_weight(path.last());
        if path.last() > 0.0 && weight.is_finite() {
            let weighted = WeightedPath::new(path, weight)?;
            return Ok(ImhofDraw {
                weighted,
                rejections,
            });
        }
        rejections += 1;
    }
}

/// BES(3) path with weight `sqrt(pi/2) / R(1)`; weighted averages estimate meander averages.
pub fn sample_meander_imhof(stream: &RngStream, grid: &GridSpec) -> Result<ImhofDraw> {
    imhof_with_rng(&mut stream.rng(), grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(h: f64, n: usize) -> GridSpec {
        GridSpec::new(h, n).unwrap()
    }

    #[test]
    fn initial_conditions() {
        let s = RngStream::new(1, 0);
        assert_eq!(sample_bm(&s, &grid(1.0, 2), 0.0).unwrap().values()[0], 0.0);
        assert_eq!(
            sample_bm(&s, &grid(1.0, 2), -3.5).unwrap().values()[0],
            -3.5
        );
        assert_eq!(sample_bes3(&s, &grid(1.0, 8)).unwrap().values()[0], 0.0);
        assert_eq!(
            sample_besq4(&s, &grid(1.0, 8), 0.0).unwrap().values()[0],
            0.0
        );
        assert_eq!(
            sample_besq4(&s, &grid(1.0, 8), 1.0).unwrap().values()[0],
            1.0
        );
    }

    #[test]
    fn determinism() {
        let s = RngStream::new(1, 0);
        let g = grid(1.0, 4);
        assert_eq!(
            sample_bm(&s, &g, 0.0).unwrap(),
            sample_bm(&s, &g, 0.0).unwrap()
        );
        let g = grid(1.0, 64);
        assert_eq!(
            sample_meander_lastzero(&s, &g).unwrap(),
            sample_meander_lastzero(&s, &g).unwrap()
        );
        assert_eq!(
            sample_meander_imhof(&s, &g).unwrap(),
            sample_meander_imhof(&s, &g).unwrap()
        );
    }

    #[test]
    fn negative_besq_start_rejected() {
        let s = RngStream::new(1, 0);
        assert!(sample_besq4(&s, &grid(1.0, 4), -0.1).is_err());
        assert!(PathWalk::new(&s, Process::Brownian { start: f64::NAN }, &grid(1.0, 4)).is_err());
    }

    #[test]
    fn non_negative_processes() {
        for id in 0..50 {
            let s = RngStream::new(9, id);
            let g = grid(1.0, 256);
            for p in [
                sample_bes3(&s, &g).unwrap(),
                sample_besq4(&s, &g, 0.0).unwrap(),
                sample_meander_lastzero(&s, &g).unwrap(),
            ] {
                assert!(p.values().iter().all(|&v| v >= 0.0));
                assert_eq!(p.values()[0], 0.0);
            }
            assert!(sample_meander_imhof(&s, &g).unwrap().weighted.weight() > 0.0);
        }
    }

    #[test]
    fn walk_matches_collected_path() {
        let s = RngStream::new(3, 11);
        let g = grid(2.0, 100);
        let full = sample_besq4(&s, &g, 0.5).unwrap();
        let partial: Vec<f64> = PathWalk::new(&s, Process::Besq4 { start: 0.5 }, &g)
            .unwrap()
            .take(40)
            .collect();
        assert_eq!(&full.values()[..40], &partial[..]);
        assert_eq!(PathWalk::new(&s, Process::Bes3, &g).unwrap().count(), 101);
    }

    #[test]
    fn refinement_nests_on_dyadic_grids() {
        let coarse = brownian_by_refinement(&mut RngStream::new(5, 2).rng(), 1.0, 1 << 6);
        let fine = brownian_by_refinement(&mut RngStream::new(5, 2).rng(), 1.0, 1 << 9);
        for (k, &c) in coarse.iter().enumerate() {
            assert_eq!(c, fine[k << 3]);
        }
        assert_eq!(fine[0], 0.0);
    }

    #[test]
    fn refinement_handles_odd_sizes() {
        for n in [2, 3, 5, 7, 100, 1023] {
            let w = brownian_by_refinement(&mut RngStream::new(5, n as u64).rng(), 1.0, n);
            assert_eq!(w.len(), n + 1);
            assert!(w.iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn meander_requires_unit_horizon() {
        let s = RngStream::new(1, 0);
        assert!(sample_meander_lastzero(&s, &grid(2.0, 16)).is_err());
        assert!(sample_meander_imhof(&s, &grid(0.5, 16)).is_err());
        assert!(MeanderSampler::new(1).is_err());
    }

    #[test]
    fn meander_last_zero_in_unit_interval() {
        let sampler = MeanderSampler::new(1 << 10).unwrap();
        let g = grid(1.0, 1 << 10);
        for id in 0..200 {
            let (p, info) = sampler
                .sample_with_rng(&mut RngStream::new(2, id).rng(), &g)
                .unwrap();
            assert!((0.0..1.0).contains(&info.last_zero));
            assert!(p.last() > 0.0);
            assert!(info.excursion_cells >= 1 << 10);
        }
    }

    #[test]
    fn meander_endpoint_is_rescaled_brownian_endpoint() {
        // Refinement never moves W(1), so the last node is |W(1)| / sqrt(1 - g).
        let sampler = MeanderSampler::new(512).unwrap();
        for id in 0..50 {
            let s = RngStream::new(4, id);
            let (p, info) = sampler
                .sample_with_rng(&mut s.rng(), &grid(1.0, 512))
                .unwrap();
            let w = brownian_by_refinement(&mut s.rng(), 1.0, 512);
            let expected = w[512].abs() / (1.0 - info.last_zero).sqrt();
            assert!((p.last() - expected).abs() < 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn final_excursion_is_resolved() {
        let sampler = MeanderSampler::new(256).unwrap();
        let g = grid(1.0, 256);
        let mut refined = 0;
        for id in 0..500 {
            let (p, info) = sampler
                .sample_with_rng(&mut RngStream::new(8, id).rng(), &g)
                .unwrap();
            assert!(info.excursion_cells >= 256 || info.degenerate);
            refined += (info.refinements > 0) as usize;
            // Strictly positive after time 0: the excursion has no zero inside.
            assert!(p.values()[1..].iter().all(|&v| v > 0.0));
        }
        // Most final excursions are shorter than the whole interval.
        assert!(refined > 250);
    }
}
