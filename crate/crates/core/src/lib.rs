//! Estimation of the upper boundary `f` of the support
//! `S = {(x, y) : 0 <= x <= 1, 0 <= y <= f(x)}` of a homogeneous Poisson
//! process, from the highest and lowest points in each of `k` vertical cells.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the study harness and the
//! file formats use.
//!
//! ```
//! use frontier::{BasisSpec, Boundary, Partition, ProcessConfig};
//! use frontier::{estimator, sampler};
//!
//! let f = Boundary::sinusoid(1.0, 0.5, 1, 0.0).unwrap();
//! let cfg = ProcessConfig::with_total_intensity(1e4, 7).unwrap();
//! let sample = sampler::sample_process(&f, &cfg);
//! let ext = sampler::cell_extremes(&sample, &Partition::new(100).unwrap());
//! let spec = BasisSpec::trigonometric(2).unwrap();
//! let estimate = estimator::estimate_corrected(&ext, &spec, 0.25);
//! assert!((estimate - 1.5).abs() < 0.1);
//! ```

// NaN-rejecting checks are written as `!(x > 0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod model;
pub mod quadrature;
pub mod sampler;
pub mod scalar;

pub use basis::{BasisFamily, BasisSpec, KernelNorm};
pub use error::{Error, Result};
pub use estimator::EstimateCurve;
pub use model::{BoundaryFunction, BoundaryShape, Partition, PointSample, ProcessConfig};
pub use sampler::{CellExtreme, CellExtremes};
pub use scalar::Scalar;

/// Boundary function in double precision.
pub type Boundary = BoundaryFunction<f64>;
/// Point sample in double precision.
pub type Sample = PointSample<f64>;
/// Cell extremes in double precision.
pub type Extremes = CellExtremes<f64>;
/// Estimate curve in double precision.
pub type Curve = EstimateCurve<f64>;

/// Single-precision counterparts.
pub type BoundaryF32 = BoundaryFunction<f32>;
pub type SampleF32 = PointSample<f32>;
pub type ExtremesF32 = CellExtremes<f32>;
pub type CurveF32 = EstimateCurve<f32>;
