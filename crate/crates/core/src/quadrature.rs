//! Adaptive Gauss–Kronrod (7/15) quadrature with a fixed subdivision budget.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default absolute tolerance for integrals treated as exact downstream.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Maximum number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 4000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
    abs_value: T,
}

fn kronrod<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Segment<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    let mut abs_kron = fc.abs() * T::lit(WGK[7]);
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = radius * T::lit(x);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kron = kron + T::lit(w) * (f1 + f2);
        abs_kron = abs_kron + T::lit(w) * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    Segment { a, b, value: kron * radius, error: ((kron - gauss) * radius).abs(), abs_value: abs_kron * radius.abs() }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<T> {
    integrate_with_breaks(f, &[a, b], tol)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from the
/// partition given by `breaks`. Useful when `f` has kinks or jumps there.
pub fn integrate_with_breaks<T: Scalar, F: Fn(T) -> T>(f: F, breaks: &[T], tol: T) -> Result<T> {
    if breaks.len() < 2 {
        return Err(Error::Domain("quadrature needs at least one interval".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!("quadrature tolerance must be > 0, got {tol}")));
    }
    let mut segments: Vec<Segment<T>> =
        breaks.windows(2).filter(|w| w[1] != w[0]).map(|w| kronrod(&f, w[0], w[1])).collect();
    if segments.is_empty() {
        return Ok(T::zero());
    }

    loop {
        let total: T = segments.iter().map(|s| s.value).sum();
        let error: T = segments.iter().map(|s| s.error).sum();
        let scale: T = segments.iter().map(|s| s.abs_value).sum();
        // Below this level the error estimate is rounding noise.
        let floor = T::lit(50.0) * T::epsilon() * scale;
        if error <= tol.max(floor) {
            return Ok(total);
        }
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::Numeric(format!(
                "quadrature did not converge: error estimate {error} > tolerance {tol} after {MAX_INTERVALS} intervals"
            )));
        }
        let (worst, _) =
            segments
                .iter()
                .enumerate()
                .fold((0, T::neg_infinity()), |acc, (i, s)| if s.error > acc.1 { (i, s.error) } else { acc });
        let seg = segments.swap_remove(worst);
        let mid = T::lit(0.5) * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            return Err(Error::Numeric("quadrature interval underflow".into()));
        }
        segments.push(kronrod(&f, seg.a, mid));
        segments.push(kronrod(&f, mid, seg.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x: f64| x.powi(5) - 3.0 * x * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 64.0 / 6.0 - 8.0 + 2.0, epsilon = 1e-12);
    }

    #[test]
    fn oscillatory_integrand() {
        let v = integrate(|x: f64| (2.0 * PI * 31.0 * x).cos().powi(2), 0.0, 1.0, 1e-11).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-11);
    }

    #[test]
    fn breaks_handle_jumps() {
        let step = |x: f64| if x < 0.3 { 1.0 } else { -2.0 };
        let v = integrate_with_breaks(step, &[0.0, 0.3, 1.0], 1e-12).unwrap();
        assert_abs_diff_eq!(v, 0.3 - 1.4, epsilon = 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_an_error() {
        let v = integrate(|x: f64| (1.0 / x).sin(), 1e-12, 1.0, 1e-14);
        assert!(matches!(v, Err(Error::Numeric(_))));
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(integrate(|x: f64| x, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let v = integrate(|x: f32| x.sin(), 0.0, std::f32::consts::PI, 1e-5).unwrap();
        assert!((v - 2.0).abs() < 1e-5);
    }
}
