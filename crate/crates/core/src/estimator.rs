//! Boundary estimates built from cell extremes.
//!
//! The raw estimate replaces each cell mass `λ(D_r)` by `X*_r / k`:
//!
//! ```text
//! f̂(x) = Σ_r K(x_r, x) X*_r / k = Σ_{i<=h} â_i e_i(x),   â_i = Σ_r e_i(x_r) X*_r / k
//! ```
//!
//! Cell maxima sit about `k/(nc)` below the boundary. The average of the
//! cell minima, `Z = (1/k) Σ_r Z*_r`, has the same expectation, so adding it
//! to every maximum gives the corrected estimate
//!
//! ```text
//! f̃(x) = Σ_r K(x_r, x) (X*_r + Z) / k = f̂(x) + Z · (1/k) Σ_r K(x_r, x)
//! ```
//!
//! Nothing here needs the intensity `c` or the number of copies `n`; the
//! functions only see [`CellExtremes`] and a [`BasisSpec`].

use serde::{Deserialize, Serialize};

use crate::basis::BasisSpec;
use crate::error::{invalid, Result};
use crate::model::Partition;
use crate::sampler::CellExtremes;
use crate::scalar::Scalar;

/// Coefficient estimates `â_i`, `0 <= i <= h`.
pub fn estimate_coeffs<T: Scalar>(ext: &CellExtremes<T>, spec: &BasisSpec) -> Vec<T> {
    let partition = ext.partition();
    let k = T::from_usize_lossy(ext.k());
    (0..=spec.order())
        .map(|i| ext.maxima().enumerate().map(|(r, m)| spec.value(i, partition.midpoint::<T>(r)) * m).sum::<T>() / k)
        .collect()
}

/// Raw estimate `f̂(x)` in kernel form.
pub fn estimate_raw<T: Scalar>(ext: &CellExtremes<T>, spec: &BasisSpec, x: T) -> T {
    let partition = ext.partition();
    let k = T::from_usize_lossy(ext.k());
    ext.maxima().enumerate().map(|(r, m)| spec.kernel(partition.midpoint::<T>(r), x) * m).sum::<T>() / k
}

/// Raw estimate `f̂(x)` in coefficient form, `Σ_i â_i e_i(x)`.
pub fn estimate_raw_by_coeffs<T: Scalar>(ext: &CellExtremes<T>, spec: &BasisSpec, x: T) -> T {
    estimate_coeffs(ext, spec).iter().enumerate().map(|(i, &a)| a * spec.value(i, x)).sum()
}

/// `Z = (1/k) Σ_r Z*_r`, the mean of the cell minima.
pub fn correction_term<T: Scalar>(ext: &CellExtremes<T>) -> T {
    ext.minima().sum::<T>() / T::from_usize_lossy(ext.k())
}

/// `(1/k) Σ_r K(x_r, x)`: the estimate that a unit maximum in every cell
/// would produce.
pub fn kernel_mass<T: Scalar>(spec: &BasisSpec, partition: &Partition, x: T) -> T {
    (0..partition.len()).map(|r| spec.kernel(partition.midpoint::<T>(r), x)).sum::<T>()
        / T::from_usize_lossy(partition.len())
}

/// Corrected estimate `f̃(x) = f̂(x) + Z (1/k) Σ_r K(x_r, x)`.
pub fn estimate_corrected<T: Scalar>(ext: &CellExtremes<T>, spec: &BasisSpec, x: T) -> T {
    estimate_raw(ext, spec, x) + correction_term(ext) * kernel_mass(spec, ext.partition(), x)
}

/// Raw and corrected estimates on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EstimateCurve<T> {
    pub grid: Vec<T>,
    pub raw: Vec<T>,
    pub corrected: Vec<T>,
    /// `(1/k) Σ_r K(x_r, x)` at each grid point.
    pub kernel_mass: Vec<T>,
    pub coeffs: Vec<T>,
    /// The correction `Z`.
    pub correction: T,
    pub spec: BasisSpec,
    pub k: usize,
}

impl<T: Scalar> EstimateCurve<T> {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// The correction curve `f̃ - f̂`.
    pub fn correction_curve(&self) -> Vec<T> {
        self.kernel_mass.iter().map(|&m| self.correction * m).collect()
    }
}

/// Kernel values `K(x_r, x_g)` for a fixed grid and partition, reusable
/// across many samples.
#[derive(Debug, Clone)]
pub struct KernelRows<T> {
    spec: BasisSpec,
    partition: Partition,
    grid: Vec<T>,
    // grid-major, one row of k values per grid point
    values: Vec<T>,
    mass: Vec<T>,
}

impl<T: Scalar> KernelRows<T> {
    pub fn new(spec: BasisSpec, partition: Partition, grid: &[T]) -> Self {
        let k = partition.len();
        let midpoints: Vec<T> = partition.midpoints();
        let mut values = Vec::with_capacity(grid.len() * k);
        let mut mass = Vec::with_capacity(grid.len());
        for &x in grid {
            let start = values.len();
            values.extend(midpoints.iter().map(|&xr| spec.kernel(xr, x)));
            mass.push(values[start..].iter().copied().sum::<T>() / T::from_usize_lossy(k));
        }
        Self { spec, partition, grid: grid.to_vec(), values, mass }
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn row(&self, g: usize) -> &[T] {
        let k = self.partition.len();
        &self.values[g * k..(g + 1) * k]
    }

    pub fn kernel_mass(&self) -> &[T] {
        &self.mass
    }

    /// Evaluates both estimates on the grid for one set of extremes.
    pub fn estimate(&self, ext: &CellExtremes<T>) -> Result<EstimateCurve<T>> {
        if ext.k() != self.partition.len() {
            return invalid(format!(
                "extremes have {} cells but the kernel rows were built for {}",
                ext.k(),
                self.partition.len()
            ));
        }
        let kf = T::from_usize_lossy(ext.k());
        let maxima: Vec<T> = ext.maxima().collect();
        let correction = correction_term(ext);
        let raw: Vec<T> = (0..self.grid.len())
            .map(|g| self.row(g).iter().zip(&maxima).map(|(&kv, &m)| kv * m).sum::<T>() / kf)
            .collect();
        let corrected = raw.iter().zip(&self.mass).map(|(&r, &m)| r + correction * m).collect();
        Ok(EstimateCurve {
            grid: self.grid.clone(),
            raw,
            corrected,
            kernel_mass: self.mass.clone(),
            coeffs: estimate_coeffs(ext, &self.spec),
            correction,
            spec: self.spec,
            k: ext.k(),
        })
    }
}

/// Raw and corrected estimates over `grid`, sharing `Z` and the kernel
/// masses between the two.
pub fn estimate_curve<T: Scalar>(ext: &CellExtremes<T>, spec: &BasisSpec, grid: &[T]) -> EstimateCurve<T> {
    KernelRows::new(*spec, *ext.partition(), grid).estimate(ext).expect("kernel rows built from the same partition")
}

/// `n` equally spaced points from 0 to 1 inclusive (`[0.5]` when `n == 1`).
pub fn uniform_grid<T: Scalar>(n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::lit(0.5)],
        _ => (0..n).map(|i| T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)).collect(),
    }
}

/// Cell midpoints of a uniform `n`-cell grid, `(i + 1/2)/n`.
pub fn midpoint_grid<T: Scalar>(n: usize) -> Vec<T> {
    Partition::new(n.max(1)).map(|p| p.midpoints()).unwrap_or_default()
}
