//! Simulation of the superposed Poisson process on the support, per-cell
//! extremes, and the closed-form law of the cell maxima.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::model::{BoundaryFunction, Partition, PointSample, ProcessConfig};
use crate::scalar::Scalar;

/// Generator behind every simulated sample.
pub type SampleRng = ChaCha8Rng;

fn poisson_count(rng: &mut SampleRng, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    // Poisson::new only fails for non-positive or non-finite means.
    Poisson::new(mean).map_or(0, |d| d.sample(rng) as u64)
}

/// Draws one realisation of the superposition `N_1 + ... + N_n` on
/// `S = {0 <= x <= 1, 0 <= y <= f(x)}` by thinning a homogeneous process
/// of intensity `nc` on the box `[0, 1] x [0, sup f]`.
pub fn sample_process<T: Scalar>(f: &BoundaryFunction<T>, cfg: &ProcessConfig) -> PointSample<T> {
    let mut rng = SampleRng::seed_from_u64(cfg.seed);
    let (_, upper) = f.bounds();
    let count = poisson_count(&mut rng, cfg.total_intensity * upper.to_f64_lossy());
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let x = T::lit(rng.random::<f64>());
        let y = T::lit(rng.random::<f64>()) * upper;
        if y <= f.value(x) {
            points.push((x, y));
        }
    }
    PointSample { points, config: Some(*cfg) }
}

/// Draws a homogeneous Poisson cloud of the given intensity inside the
/// star-shaped region `{center + ρ (cos θ, sin θ) : ρ <= radius(θ / 2π)}`.
pub fn sample_star_shaped<T: Scalar>(
    radius: &BoundaryFunction<T>,
    center: (T, T),
    intensity: f64,
    seed: u64,
) -> Result<Vec<(T, T)>> {
    if !(intensity.is_finite() && intensity > 0.0) {
        return invalid(format!("intensity must be finite and > 0, got {intensity}"));
    }
    let mut rng = SampleRng::seed_from_u64(seed);
    let outer = radius.bounds().1.to_f64_lossy();
    let count = poisson_count(&mut rng, intensity * std::f64::consts::PI * outer * outer);
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let rho = T::lit(outer * rng.random::<f64>().sqrt());
        let x = T::lit(rng.random::<f64>());
        if rho <= radius.value(x) {
            let angle = T::TAU() * x;
            points.push((center.0 + rho * angle.cos(), center.1 + rho * angle.sin()));
        }
    }
    Ok(points)
}

/// Extremes of the point heights falling in one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CellExtreme<T> {
    pub count: usize,
    /// Largest `y` in the cell, 0 when empty.
    pub max_y: T,
    /// Smallest `y` in the cell, 0 when empty.
    pub min_y: T,
}

/// Per-cell maxima and minima of a sample over a partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CellExtremes<T> {
    partition: Partition,
    cells: Vec<CellExtreme<T>>,
}

impl<T: Scalar> CellExtremes<T> {
    /// Builds from explicit cell records, checking the empty-cell convention
    /// and `0 <= min_y <= max_y`.
    pub fn from_cells(cells: Vec<CellExtreme<T>>) -> Result<Self> {
        let partition = Partition::new(cells.len())?;
        for (r, c) in cells.iter().enumerate() {
            let ok = if c.count == 0 {
                c.max_y == T::zero() && c.min_y == T::zero()
            } else {
                c.min_y >= T::zero() && c.min_y <= c.max_y && (c.count > 1 || c.min_y == c.max_y)
            };
            if !ok {
                return invalid(format!("cell {r} violates the extreme-value invariants: {c:?}"));
            }
        }
        Ok(Self { partition, cells })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn k(&self) -> usize {
        self.cells.len()
    }

    pub fn cells(&self) -> &[CellExtreme<T>] {
        &self.cells
    }

    pub fn maxima(&self) -> impl Iterator<Item = T> + '_ {
        self.cells.iter().map(|c| c.max_y)
    }

    pub fn minima(&self) -> impl Iterator<Item = T> + '_ {
        self.cells.iter().map(|c| c.min_y)
    }

    pub fn empty_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.count == 0).count()
    }
}

/// Collects `max y`, `min y` and the count of the sample points in each cell.
pub fn cell_extremes<T: Scalar>(sample: &PointSample<T>, partition: &Partition) -> CellExtremes<T> {
    let mut cells = vec![CellExtreme { count: 0, max_y: T::zero(), min_y: T::zero() }; partition.len()];
    for &(x, y) in &sample.points {
        let cell = &mut cells[partition.cell_of(x)];
        if cell.count == 0 {
            cell.max_y = y;
            cell.min_y = y;
        } else {
            cell.max_y = cell.max_y.max(y);
            cell.min_y = cell.min_y.min(y);
        }
        cell.count += 1;
    }
    CellExtremes { partition: *partition, cells }
}

/// `P(X* <= x) = exp[(nc/k)(x - k λ_cell)]`, the law of a cell maximum on
/// `[0, cell_min]` where `cell_min` is the minimum of `f` over the cell.
pub fn extreme_cdf<T: Scalar>(x: T, cell_min: T, nc: T, k: usize, lambda_cell: T) -> Result<T> {
    if k == 0 || !(nc > T::zero()) || !(lambda_cell >= T::zero()) {
        return domain("extreme_cdf needs k >= 1, nc > 0 and a non-negative cell mass");
    }
    if !(x >= T::zero() && x <= cell_min) {
        return domain(format!("extreme_cdf is only known on [0, {cell_min}], got x = {x}"));
    }
    let kf = T::from_usize_lossy(k);
    Ok(((nc / kf) * (x - kf * lambda_cell)).exp().min(T::one()))
}

/// Exact mean and variance of the cell maximum when `f` equals `f_level`
/// on the whole cell (so `k λ = f_level`).
///
/// With `a = nc/k` and `q = exp(-a f)`: the mean is `f - (1 - q)/a` and the
/// variance is `(1 - q²)/a² - 2 f q / a`, both including the atom at 0.
pub fn extreme_moments<T: Scalar>(f_level: T, nc: T, k: usize) -> Result<(T, T)> {
    if !(f_level > T::zero() && nc > T::zero()) || k == 0 {
        return domain("extreme_moments needs f_level > 0, nc > 0 and k >= 1");
    }
    let a = nc / T::from_usize_lossy(k);
    let af = a * f_level;
    let q = (-af).exp();
    let one_minus_q = -(-af).exp_m1();
    let one_minus_q2 = -(-(af + af)).exp_m1();
    let mean = f_level - one_minus_q / a;
    let variance = one_minus_q2 / (a * a) - T::lit(2.0) * f_level * q / a;
    Ok((mean, variance.max(T::zero())))
}
