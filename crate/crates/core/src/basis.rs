//! Orthonormal bases of `L²[0, 1]`, their Dirichlet kernels
//! `K(x, y) = Σ_{i<=h} e_i(x) e_i(y)`, the kernel-row norms `B_j(x)` over
//! cell midpoints, and the noise-free approximation `f_n` of a boundary.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::model::{BoundaryFunction, Partition};
use crate::quadrature;
use crate::scalar::Scalar;

/// Below this value of `|sin πu|` the trigonometric kernel returns its
/// diagonal value `1 + h`.
pub const DIAGONAL_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    /// `1, √2 cos 2πx, √2 sin 2πx, √2 cos 4πx, ...`
    #[serde(alias = "trig")]
    Trigonometric,
    /// `1` followed by the L²-normalised Haar wavelets, level by level.
    Haar,
}

impl BasisFamily {
    pub fn name(self) -> &'static str {
        match self {
            BasisFamily::Trigonometric => "trig",
            BasisFamily::Haar => "haar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct RawBasisSpec {
    family: BasisFamily,
    order: usize,
}

/// A basis family truncated after `e_0, ..., e_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawBasisSpec", into = "RawBasisSpec")]
pub struct BasisSpec {
    family: BasisFamily,
    order: usize,
}

impl TryFrom<RawBasisSpec> for BasisSpec {
    type Error = Error;

    fn try_from(raw: RawBasisSpec) -> Result<Self> {
        Self::new(raw.family, raw.order)
    }
}

impl From<BasisSpec> for RawBasisSpec {
    fn from(spec: BasisSpec) -> Self {
        Self { family: spec.family, order: spec.order }
    }
}

impl BasisSpec {
    /// `order` is the truncation index `h`. The trigonometric family needs
    /// `h` even; the Haar family needs `h + 1` to be a power of two.
    pub fn new(family: BasisFamily, order: usize) -> Result<Self> {
        match family {
            BasisFamily::Trigonometric if !order.is_multiple_of(2) => {
                invalid(format!("trigonometric basis needs an even order h, got {order}"))
            }
            BasisFamily::Haar if !(order + 1).is_power_of_two() => {
                invalid(format!("Haar basis needs h + 1 to be a power of two, got h = {order}"))
            }
            _ => Ok(Self { family, order }),
        }
    }

    pub fn trigonometric(order: usize) -> Result<Self> {
        Self::new(BasisFamily::Trigonometric, order)
    }

    pub fn haar(order: usize) -> Result<Self> {
        Self::new(BasisFamily::Haar, order)
    }

    pub fn family(&self) -> BasisFamily {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions kept, `h + 1`.
    pub fn dim(&self) -> usize {
        self.order + 1
    }

    fn haar_cell<T: Scalar>(&self, x: T) -> usize {
        let res = self.order + 1;
        let raw = (x * T::from_usize_lossy(res)).floor();
        if raw <= T::zero() {
            0
        } else {
            raw.to_usize().unwrap_or(res - 1).min(res - 1)
        }
    }

    /// `e_i(x)` without range checks on `x`.
    pub(crate) fn value<T: Scalar>(&self, i: usize, x: T) -> T {
        match self.family {
            BasisFamily::Trigonometric => {
                if i == 0 {
                    return T::one();
                }
                let freq = T::from_usize_lossy(i.div_ceil(2));
                let arg = T::TAU() * freq * x;
                let trig = if i % 2 == 1 { arg.cos() } else { arg.sin() };
                T::SQRT_2() * trig
            }
            BasisFamily::Haar => {
                if i == 0 {
                    return T::one();
                }
                let levels = (self.order + 1).trailing_zeros();
                let level = usize::BITS - 1 - i.leading_zeros();
                let shift = i - (1usize << level);
                let cell = self.haar_cell(x);
                if cell >> (levels - level) != shift {
                    return T::zero();
                }
                let scale = T::lit(2.0).powi(level as i32).sqrt();
                let upper_half = (cell >> (levels - level - 1)) & 1 == 1;
                if upper_half {
                    -scale
                } else {
                    scale
                }
            }
        }
    }

    /// `e_i(x)` for `0 <= i <= h`.
    pub fn eval<T: Scalar>(&self, i: usize, x: T) -> Result<T> {
        if i > self.order {
            return domain(format!("basis index {i} exceeds truncation order {}", self.order));
        }
        Ok(self.value(i, x))
    }

    /// Closed-form Dirichlet kernel.
    pub fn kernel<T: Scalar>(&self, x: T, y: T) -> T {
        let diagonal = T::from_usize_lossy(self.order + 1);
        match self.family {
            BasisFamily::Trigonometric => {
                // |x - y| reduced into [0, 1/2]; the kernel is even and 1-periodic.
                let mut u = (x - y).abs();
                u = u - u.floor();
                if u > T::lit(0.5) {
                    u = T::one() - u;
                }
                let s = (T::PI() * u).sin();
                if s.abs() < T::lit(DIAGONAL_THRESHOLD) {
                    diagonal
                } else {
                    (diagonal * T::PI() * u).sin() / s
                }
            }
            BasisFamily::Haar => {
                if self.haar_cell(x) == self.haar_cell(y) {
                    diagonal
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Dirichlet kernel computed as the sum `Σ_{i<=h} e_i(x) e_i(y)`.
    pub fn kernel_by_sum<T: Scalar>(&self, x: T, y: T) -> T {
        (0..=self.order).map(|i| self.value(i, x) * self.value(i, y)).sum()
    }

    /// Points in `[0, 1]` where basis functions up to `e_i` lose smoothness
    /// or change sign quickly; used to seed quadrature.
    fn quadrature_breaks<T: Scalar>(&self, i: usize) -> Vec<T> {
        let pieces = match self.family {
            BasisFamily::Trigonometric => i.div_ceil(2).max(1),
            BasisFamily::Haar => self.order + 1,
        };
        (0..=pieces).map(|p| T::from_usize_lossy(p) / T::from_usize_lossy(pieces)).collect()
    }
}

/// `e_i(x)`; errors when `i > h` or `x` lies outside `[0, 1]`.
pub fn eval_basis<T: Scalar>(spec: &BasisSpec, i: usize, x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return domain(format!("basis evaluated at x = {x}, outside [0, 1]"));
    }
    spec.eval(i, x)
}

/// Closed-form Dirichlet kernel `K(x, y)`.
pub fn dirichlet_kernel<T: Scalar>(spec: &BasisSpec, x: T, y: T) -> T {
    spec.kernel(x, y)
}

/// Which norm of the kernel row `{K(x_r, x)}_r` to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelNorm {
    L1,
    L2,
    L3,
    Sup,
}

impl KernelNorm {
    pub const ALL: [KernelNorm; 4] = [KernelNorm::L1, KernelNorm::L2, KernelNorm::L3, KernelNorm::Sup];

    pub fn label(self) -> &'static str {
        match self {
            KernelNorm::L1 => "1",
            KernelNorm::L2 => "2",
            KernelNorm::L3 => "3",
            KernelNorm::Sup => "inf",
        }
    }
}

/// `B_j(x) = (Σ_r |K(x_r, x)|^j)^{1/j}` over the midpoints of `partition`,
/// or `max_r |K(x_r, x)|` for [`KernelNorm::Sup`].
pub fn kernel_bounds<T: Scalar>(spec: &BasisSpec, partition: &Partition, x: T, norm: KernelNorm) -> T {
    kernel_bounds_all(spec, partition, x)[norm as usize]
}

/// All four kernel-row norms at `x` in a single pass, ordered as
/// [`KernelNorm::ALL`].
pub fn kernel_bounds_all<T: Scalar>(spec: &BasisSpec, partition: &Partition, x: T) -> [T; 4] {
    let (mut s1, mut s2, mut s3, mut sup) = (T::zero(), T::zero(), T::zero(), T::zero());
    for r in 0..partition.len() {
        let a = spec.kernel(partition.midpoint::<T>(r), x).abs();
        s1 = s1 + a;
        s2 = s2 + a * a;
        s3 = s3 + a * a * a;
        sup = sup.max(a);
    }
    [s1, s2.sqrt(), s3.cbrt(), sup]
}

/// `a_i = ∫₀¹ e_i f` by adaptive quadrature.
pub fn coefficient<T: Scalar>(spec: &BasisSpec, f: &BoundaryFunction<T>, i: usize, tol: T) -> Result<T> {
    if i > spec.order() {
        return domain(format!("basis index {i} exceeds truncation order {}", spec.order()));
    }
    let mut breaks = spec.quadrature_breaks::<T>(i);
    breaks.extend(f.breakpoints());
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    breaks.dedup();
    quadrature::integrate_with_breaks(|t| spec.value(i, t) * f.value(t), &breaks, tol)
}

/// A boundary together with its truncated expansion `S_h f = Σ a_i e_i`.
/// Coefficients are computed once on first use and shared afterwards.
#[derive(Debug)]
pub struct Projection<T: Scalar> {
    spec: BasisSpec,
    boundary: BoundaryFunction<T>,
    tol: T,
    coeffs: OnceLock<Vec<T>>,
}

impl<T: Scalar> Projection<T> {
    pub fn new(spec: BasisSpec, boundary: BoundaryFunction<T>, tol: T) -> Result<Self> {
        if !(tol > T::zero()) {
            return domain(format!("tolerance must be > 0, got {tol}"));
        }
        Ok(Self { spec, boundary, tol, coeffs: OnceLock::new() })
    }

    pub fn spec(&self) -> &BasisSpec {
        &self.spec
    }

    pub fn coefficients(&self) -> Result<&[T]> {
        if let Some(c) = self.coeffs.get() {
            return Ok(c);
        }
        let computed = (0..=self.spec.order())
            .map(|i| coefficient(&self.spec, &self.boundary, i, self.tol))
            .collect::<Result<Vec<T>>>()?;
        // A concurrent caller may have won the race; both values are identical.
        let _ = self.coeffs.set(computed);
        Ok(self.coeffs.get().expect("coefficients were just set"))
    }

    /// `S_h f(x)`.
    pub fn eval(&self, x: T) -> Result<T> {
        Ok(self.coefficients()?.iter().enumerate().map(|(i, &a)| a * self.spec.value(i, x)).sum())
    }
}

/// `S_h f(x) = Σ_{i<=h} a_i e_i(x)`.
pub fn partial_sum<T: Scalar>(spec: &BasisSpec, f: &BoundaryFunction<T>, x: T, tol: T) -> Result<T> {
    Projection::new(*spec, f.clone(), tol)?.eval(x)
}

/// The deterministic approximation `f_n(x) = Σ_r K(x_r, x) λ(D_r)`.
#[derive(Debug, Clone)]
pub struct DiscreteApproximation<T> {
    spec: BasisSpec,
    partition: Partition,
    midpoints: Vec<T>,
    masses: Vec<T>,
}

impl<T: Scalar> DiscreteApproximation<T> {
    pub fn new(spec: BasisSpec, f: &BoundaryFunction<T>, partition: Partition, tol: T) -> Result<Self> {
        let masses = f.cell_measures(&partition, tol)?;
        Ok(Self { spec, partition, midpoints: partition.midpoints(), masses })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Cell masses `λ(D_r)`.
    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    pub fn eval(&self, x: T) -> T {
        self.midpoints.iter().zip(&self.masses).map(|(&xr, &m)| self.spec.kernel(xr, x) * m).sum()
    }

    /// Discretised coefficients `a_{i,k} = Σ_r e_i(x_r) λ(D_r)`.
    pub fn coefficients(&self) -> Vec<T> {
        (0..=self.spec.order())
            .map(|i| self.midpoints.iter().zip(&self.masses).map(|(&xr, &m)| self.spec.value(i, xr) * m).sum())
            .collect()
    }
}

/// `f_n(x)` for a single point; see [`DiscreteApproximation`] for batches.
pub fn approx_fn<T: Scalar>(spec: &BasisSpec, f: &BoundaryFunction<T>, k: usize, x: T, tol: T) -> Result<T> {
    Ok(DiscreteApproximation::new(*spec, f, Partition::new(k)?, tol)?.eval(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn trig(h: usize) -> BasisSpec {
        BasisSpec::trigonometric(h).unwrap()
    }

    fn sine() -> BoundaryFunction<f64> {
        BoundaryFunction::sinusoid(1.0, 0.5, 1, 0.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(BasisSpec::trigonometric(3).is_err());
        assert!(BasisSpec::trigonometric(0).is_ok());
        assert!(BasisSpec::haar(2).is_err());
        assert!(BasisSpec::haar(7).is_ok());
        assert!(BasisSpec::haar(0).is_ok());
        assert!(serde_json::from_str::<BasisSpec>(r#"{"family":"trigonometric","order":5}"#).is_err());
        let s: BasisSpec = serde_json::from_str(r#"{"family":"haar","order":3}"#).unwrap();
        assert_eq!(s, BasisSpec::haar(3).unwrap());
    }

    #[test]
    fn basis_examples() {
        let s = trig(4);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(eval_basis(&s, 0, x).unwrap(), 1.0);
        }
        assert_abs_diff_eq!(eval_basis(&s, 1, 0.0).unwrap(), SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_basis(&s, 2, 0.25).unwrap(), SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_basis(&s, 3, 0.25).unwrap(), -SQRT_2, epsilon = 1e-14);
        assert!(eval_basis(&s, 5, 0.1).is_err());
        assert!(eval_basis(&s, 0, 1.1).is_err());
    }

    #[test]
    fn haar_functions() {
        let s = BasisSpec::haar(3).unwrap();
        // e_1 = +1 on [0, 1/2), -1 on [1/2, 1]
        assert_eq!(s.value(1, 0.2), 1.0);
        assert_eq!(s.value(1, 0.7), -1.0);
        assert_eq!(s.value(1, 1.0), -1.0);
        // e_2 = √2 on [0, 1/4), -√2 on [1/4, 1/2), 0 elsewhere
        assert_abs_diff_eq!(s.value(2, 0.1), SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.value(2, 0.3), -SQRT_2, epsilon = 1e-15);
        assert_eq!(s.value(2, 0.6), 0.0);
        assert_abs_diff_eq!(s.value(3, 0.9), -SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.value(3, 1.0), -SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn orthonormality_by_quadrature() {
        for spec in [trig(6), BasisSpec::haar(7).unwrap()] {
            for i in 0..=spec.order() {
                for j in 0..=spec.order() {
                    let breaks = spec.quadrature_breaks::<f64>(spec.order().max(1) * 2);
                    let g = quadrature::integrate_with_breaks(|t| spec.value(i, t) * spec.value(j, t), &breaks, 1e-12)
                        .unwrap();
                    assert_abs_diff_eq!(g, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn kernel_examples() {
        let s = trig(2);
        assert_eq!(dirichlet_kernel(&s, 0.4, 0.4), 3.0);
        assert_abs_diff_eq!(dirichlet_kernel(&s, 0.5, 0.5 - 1.0 / 6.0), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(dirichlet_kernel(&s, 1.0 / 3.0, 0.0), 0.0, epsilon = 1e-14);
        // Periodic: x - y = 1 is the diagonal again.
        assert_eq!(dirichlet_kernel(&s, 0.0, 1.0), 3.0);
        assert_eq!(dirichlet_kernel(&trig(0), 0.1, 0.8), 1.0);
    }

    #[test]
    fn kernel_closed_form_matches_sum_on_grid() {
        for h in [2usize, 8, 32] {
            let s = trig(h);
            for i in 0..=100 {
                for j in 0..=100 {
                    let (x, y) = (i as f64 / 100.0, j as f64 / 100.0);
                    let closed = s.kernel(x, y);
                    assert!((closed - s.kernel_by_sum(x, y)).abs() < 1e-10, "h={h} x={x} y={y}");
                    assert_eq!(closed, s.kernel(y, x));
                }
            }
        }
        let haar = BasisSpec::haar(15).unwrap();
        for i in 0..=100 {
            for j in 0..=100 {
                let (x, y) = (i as f64 / 100.0, j as f64 / 100.0);
                assert!((haar.kernel(x, y) - haar.kernel_by_sum(x, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_reproduces_basis_functions() {
        for h in [2usize, 8] {
            let s = trig(h);
            for i in 0..=h {
                for x in [0.0, 0.13, 0.5, 0.77] {
                    let breaks: Vec<f64> = (0..=2 * h).map(|p| p as f64 / (2 * h) as f64).collect();
                    let v =
                        quadrature::integrate_with_breaks(|y| s.kernel(x, y) * s.value(i, y), &breaks, 1e-11).unwrap();
                    assert!((v - s.value(i, x)).abs() < 1e-8, "h={h} i={i} x={x}: {v}");
                }
            }
        }
    }

    #[test]
    fn appendix_sine_ratio_inequality() {
        for p in [3.0f64, 9.0, 33.0] {
            for delta in [0.1f64, 0.5, 1.0] {
                for step in 1..20_000 {
                    let u = FRAC_PI_2 * step as f64 / 20_000.0;
                    let lhs = ((p * u).sin() / u.sin()).abs();
                    let mut rhs = 0.0;
                    if u <= delta {
                        rhs += p;
                    }
                    if u >= delta {
                        rhs += PI / (2.0 * u);
                    }
                    assert!(lhs <= rhs + 1e-12, "p={p} δ={delta} u={u}");
                }
            }
        }
    }

    #[test]
    fn kernel_bound_examples() {
        let p = Partition::new(50).unwrap();
        let b = kernel_bounds_all(&trig(0), &p, 0.3);
        assert_abs_diff_eq!(b[0], 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b[1], 50f64.sqrt(), epsilon = 1e-12);
        assert_eq!(b[3], 1.0);
        assert_eq!(kernel_bounds(&trig(0), &p, 0.3, KernelNorm::L2), b[1]);

        let h = 8;
        let k = 2000;
        let p = Partition::new(k).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let b = kernel_bounds_all(&trig(h), &p, x);
            assert!(b[3] <= (1 + h) as f64 + 1e-12);
            let ratio = b[1] / ((k * h) as f64).sqrt();
            assert!((0.9..=1.1).contains(&ratio), "x={x}: {ratio}");
            assert!(b[2] > 0.0);
        }
    }

    #[test]
    fn l1_bound_grows_like_log_h() {
        // sup_x B_1 / (k ln h) along h = o(k): doubling sequence stays bounded.
        let ratios: Vec<f64> = [(256usize, 8usize), (1024, 16), (4096, 32), (16384, 64)]
            .iter()
            .map(|&(k, h)| {
                let p = Partition::new(k).unwrap();
                (0..=64)
                    .map(|i| kernel_bounds(&trig(h), &p, i as f64 / (64.0 * k as f64), KernelNorm::L1))
                    .fold(0.0, f64::max)
                    / (k as f64 * (h as f64).ln())
            })
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max < 1.2 * ratios[0], "{ratios:?}");
    }

    #[test]
    fn coefficient_examples() {
        let one = BoundaryFunction::constant(1.0).unwrap();
        let s = trig(8);
        assert_abs_diff_eq!(coefficient(&s, &one, 0, 1e-10).unwrap(), 1.0, epsilon = 1e-10);
        for i in 1..=8 {
            assert_abs_diff_eq!(coefficient(&s, &one, i, 1e-10).unwrap(), 0.0, epsilon = 1e-10);
        }
        // ∫ √2 sin(2πx) (1 + sin(2πx)/2) dx = √2/4 = 0.5/√2.
        assert_abs_diff_eq!(coefficient(&s, &sine(), 2, 1e-10).unwrap(), 0.5 / SQRT_2, epsilon = 1e-10);
        assert!(coefficient(&s, &one, 9, 1e-10).is_err());
    }

    #[test]
    fn smooth_boundary_coefficients_decay_quadratically() {
        let knots: Vec<(f64, f64)> = (0..24)
            .map(|j| {
                let x = j as f64 / 24.0;
                (x, 1.5 + 0.4 * (2.0 * PI * x).cos() + 0.2 * (6.0 * PI * x).sin())
            })
            .collect();
        let f = BoundaryFunction::table(knots).unwrap();
        let s = trig(64);
        let coeffs: Vec<f64> = (1..=64).map(|i| coefficient(&s, &f, i, 1e-12).unwrap()).collect();
        let c = coeffs.iter().enumerate().map(|(j, a)| a.abs() * ((j + 1) as f64).powi(2)).fold(0.0, f64::max);
        // |a_i| i² bounded; with the largest constant attained early.
        let tail =
            coeffs.iter().enumerate().skip(16).map(|(j, a)| a.abs() * ((j + 1) as f64).powi(2)).fold(0.0, f64::max);
        assert!(c.is_finite() && tail <= c, "{c} {tail}");
    }

    #[test]
    fn partial_sum_examples() {
        let one = BoundaryFunction::constant(1.0).unwrap();
        for h in [0usize, 2, 6] {
            assert_abs_diff_eq!(partial_sum(&trig(h), &one, 0.42, 1e-10).unwrap(), 1.0, epsilon = 1e-9);
        }
        let proj = Projection::new(trig(4), sine(), 1e-12).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_abs_diff_eq!(proj.eval(x).unwrap(), sine().value(x), epsilon = 1e-10);
        }
    }

    #[test]
    fn partial_sum_converges_for_smooth_table() {
        let knots: Vec<(f64, f64)> = (0..32)
            .map(|j| {
                let x = j as f64 / 32.0;
                (x, 2.0 + (2.0 * PI * x).sin() * (4.0 * PI * x).cos())
            })
            .collect();
        let f = BoundaryFunction::table(knots).unwrap();
        let errors: Vec<f64> = [2usize, 8, 32]
            .iter()
            .map(|&h| {
                let proj = Projection::new(trig(h), f.clone(), 1e-11).unwrap();
                (0..=400)
                    .map(|i| (proj.eval(i as f64 / 400.0).unwrap() - f.value(i as f64 / 400.0)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2] && errors[2] < 1e-2, "{errors:?}");
    }

    #[test]
    fn approx_fn_examples() {
        let one = BoundaryFunction::constant(1.0).unwrap();
        for (h, k) in [(2usize, 3usize), (6, 7), (10, 64), (30, 31)] {
            let a = DiscreteApproximation::new(trig(h), &one, Partition::new(k).unwrap(), 1e-10).unwrap();
            for i in 0..=50 {
                assert_abs_diff_eq!(a.eval(i as f64 / 50.0), 1.0, epsilon = 1e-10);
            }
        }
        let f = sine();
        assert_abs_diff_eq!(approx_fn(&trig(0), &f, 1, 0.3, 1e-10).unwrap(), 1.0, epsilon = 1e-12);
        let a = DiscreteApproximation::new(trig(2), &f, Partition::new(64).unwrap(), 1e-10).unwrap();
        let err =
            (0..=1000).map(|i| (a.eval(i as f64 / 1000.0) - f.value(i as f64 / 1000.0)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn discretised_coefficients_match_kernel_form() {
        let f = sine();
        let a = DiscreteApproximation::new(trig(6), &f, Partition::new(20).unwrap(), 1e-10).unwrap();
        let c = a.coefficients();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            let by_coeffs: f64 = c.iter().enumerate().map(|(j, &cj)| cj * trig(6).value(j, x)).sum();
            assert_abs_diff_eq!(by_coeffs, a.eval(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_is_shareable_across_threads() {
        let proj = std::sync::Arc::new(Projection::new(trig(6), sine(), 1e-10).unwrap());
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let p = proj.clone();
                std::thread::spawn(move || p.coefficients().unwrap().to_vec())
            })
            .collect();
        let results: Vec<Vec<f64>> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(results.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn single_precision_kernel() {
        let s = trig(8);
        let v: f32 = s.kernel(0.3f32, 0.1f32);
        let w: f64 = s.kernel(0.3f64, 0.1f64);
        assert!((f64::from(v) - w).abs() < 1e-4);
        assert_eq!(s.kernel(0.25f32, 0.25f32), 9.0);
    }

    proptest! {
        #[test]
        fn kernel_is_symmetric(x in 0.0f64..=1.0, y in 0.0f64..=1.0, half in 0usize..40) {
            let s = trig(2 * half);
            prop_assert_eq!(s.kernel(x, y), s.kernel(y, x));
            prop_assert!((s.kernel(x, y) - s.kernel_by_sum(x, y)).abs() < 1e-10);
        }
    }
}
