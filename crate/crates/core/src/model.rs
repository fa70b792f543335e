//! Support model: the boundary function `f`, the process configuration, the
//! cell partition of `[0, 1]`, point samples, and the polar-coordinate
//! reduction used for star-shaped sets.

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Error, Result};
use crate::quadrature;
use crate::scalar::Scalar;

/// Grid used by [`BoundaryFunction::bounds_on_grid`] and constructor checks.
pub const DENSE_GRID: usize = 4096;

/// Periodic cubic interpolant of `(x, value)` knots on `[0, 1)`.
///
/// Each piece is stored as `a + b t + c t^2 + d t^3` with `t` measured from
/// its left knot; the last piece wraps around to `x_0 + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSpline<T> {
    knots: Vec<(T, T)>,
    pieces: Vec<[T; 4]>,
    widths: Vec<T>,
}

impl<T: Scalar> PeriodicSpline<T> {
    /// Builds the interpolant. Knots must have strictly increasing `x` in
    /// `[0, 1]`; a trailing knot at `x_0 + 1` is accepted when its value
    /// repeats the first one and is then dropped.
    pub fn new(mut knots: Vec<(T, T)>) -> Result<Self> {
        if knots.iter().any(|&(x, v)| !x.is_finite() || !v.is_finite()) {
            return invalid("table knots must be finite");
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return invalid("table knots must have strictly increasing x");
        }
        if knots.iter().any(|&(x, _)| x < T::zero() || x > T::one()) {
            return invalid("table knot x values must lie in [0, 1]");
        }
        if knots.len() >= 2 {
            let (x0, v0) = knots[0];
            let (xl, vl) = knots[knots.len() - 1];
            if (xl - x0 - T::one()).abs() <= T::lit(1e-12) {
                let scale = v0.abs().max(vl.abs()).max(T::one());
                if (vl - v0).abs() > T::lit(1e-9) * scale {
                    return invalid(format!("periodic table needs equal values at both ends, got {v0} and {vl}"));
                }
                knots.pop();
            }
        }
        let n = knots.len();
        if n < 3 {
            return invalid("periodic table interpolation needs at least 3 distinct knots");
        }

        let widths: Vec<T> = (0..n)
            .map(|j| if j + 1 < n { knots[j + 1].0 - knots[j].0 } else { knots[0].0 + T::one() - knots[j].0 })
            .collect();
        let value = |j: usize| knots[j % n].1;
        let six = T::lit(6.0);

        // Cyclic tridiagonal system for the second derivatives.
        let sub: Vec<T> = (0..n).map(|j| widths[(j + n - 1) % n]).collect();
        let sup: Vec<T> = widths.clone();
        let diag: Vec<T> = (0..n).map(|j| T::lit(2.0) * (sub[j] + sup[j])).collect();
        let rhs: Vec<T> = (0..n)
            .map(|j| {
                let prev = (j + n - 1) % n;
                six * ((value(j + 1) - value(j)) / widths[j] - (value(j) - value(prev)) / widths[prev])
            })
            .collect();
        let second = solve_cyclic(&sub, &diag, &sup, &rhs);

        let pieces = (0..n)
            .map(|j| {
                let h = widths[j];
                let (m0, m1) = (second[j], second[(j + 1) % n]);
                let (y0, y1) = (value(j), value(j + 1));
                [y0, (y1 - y0) / h - h * (T::lit(2.0) * m0 + m1) / six, m0 / T::lit(2.0), (m1 - m0) / (six * h)]
            })
            .collect();
        Ok(Self { knots, pieces, widths })
    }

    pub fn knots(&self) -> &[(T, T)] {
        &self.knots
    }

    fn locate(&self, x: T) -> (usize, T) {
        let x0 = self.knots[0].0;
        let mut z = x - x0;
        if z < T::zero() {
            z = z + T::one();
        }
        if z >= T::one() {
            z = z - T::one();
        }
        let p = x0 + z;
        let j = self.knots.partition_point(|k| k.0 <= p).max(1) - 1;
        (j, (p - self.knots[j].0).max(T::zero()))
    }

    pub fn eval(&self, x: T) -> T {
        let (j, t) = self.locate(x);
        let [a, b, c, d] = self.pieces[j];
        a + t * (b + t * (c + t * d))
    }

    /// Exact extrema over one period, from the critical points of each piece.
    pub fn extrema(&self) -> (T, T) {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for (piece, &h) in self.pieces.iter().zip(&self.widths) {
            let [a, b, c, d] = *piece;
            let eval = |t: T| a + t * (b + t * (c + t * d));
            let mut consider = |t: T| {
                if t >= T::zero() && t <= h {
                    let v = eval(t);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            };
            consider(T::zero());
            consider(h);
            // b + 2c t + 3d t^2 = 0
            let (qa, qb, qc) = (T::lit(3.0) * d, T::lit(2.0) * c, b);
            if qa.abs() <= T::epsilon() * (qb.abs() + qc.abs()) {
                if qb != T::zero() {
                    consider(-qc / qb);
                }
            } else {
                let disc = qb * qb - T::lit(4.0) * qa * qc;
                if disc >= T::zero() {
                    let s = disc.sqrt();
                    consider((-qb + s) / (T::lit(2.0) * qa));
                    consider((-qb - s) / (T::lit(2.0) * qa));
                }
            }
        }
        (lo, hi)
    }

    /// Breakpoints of the piecewise representation inside `[0, 1]`.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut b = vec![T::zero()];
        b.extend(self.knots.iter().map(|k| k.0).filter(|&x| x > T::zero() && x < T::one()));
        b.push(T::one());
        b
    }

    #[cfg(test)]
    pub(crate) fn exact_integral(&self) -> T {
        self.pieces
            .iter()
            .zip(&self.widths)
            .map(|(&[a, b, c, d], &h)| {
                a * h + b * h * h / T::lit(2.0) + c * h.powi(3) / T::lit(3.0) + d * h.powi(4) / T::lit(4.0)
            })
            .sum()
    }
}

/// Solves a cyclic tridiagonal system (Sherman–Morrison on top of Thomas).
/// Row `j` reads `sub[j] x[j-1] + diag[j] x[j] + sup[j] x[j+1] = rhs[j]`
/// with indices modulo `n`. Requires `n >= 3`.
fn solve_cyclic<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let alpha = sup[n - 1]; // bottom-left corner
    let beta = sub[0]; // top-right corner
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = solve_tridiagonal(sub, &bb, sup, rhs);
    let mut u = vec![T::zero(); n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(sub, &bb, sup, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (T::one() + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(&xi, &zi)| xi - fact * zi).collect()
}

fn solve_tridiagonal<T: Scalar>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Vec<T> {
    let n = diag.len();
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Parametric description of a boundary, also the JSON wire format:
/// `{"variant": "sinusoid", "params": {"base": 1, ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
#[serde(bound = "T: Scalar")]
pub enum BoundaryShape<T> {
    Constant {
        level: T,
    },
    /// `base + amplitude * sin(2π frequency x + phase)`.
    Sinusoid {
        base: T,
        amplitude: T,
        frequency: u32,
        phase: T,
    },
    TableInterpolated {
        knots: Vec<(T, T)>,
    },
}

/// The unknown upper boundary `f` of the support, with `0 < inf f <= sup f < ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BoundaryShape<T>", into = "BoundaryShape<T>")]
#[serde(bound = "T: Scalar")]
pub struct BoundaryFunction<T: Scalar> {
    shape: BoundaryShape<T>,
    spline: Option<PeriodicSpline<T>>,
    lower: T,
    upper: T,
}

impl<T: Scalar> TryFrom<BoundaryShape<T>> for BoundaryFunction<T> {
    type Error = Error;

    fn try_from(shape: BoundaryShape<T>) -> Result<Self> {
        Self::new(shape)
    }
}

impl<T: Scalar> From<BoundaryFunction<T>> for BoundaryShape<T> {
    fn from(f: BoundaryFunction<T>) -> Self {
        f.shape
    }
}

impl<T: Scalar> BoundaryFunction<T> {
    pub fn new(shape: BoundaryShape<T>) -> Result<Self> {
        let (spline, lower, upper) = match &shape {
            BoundaryShape::Constant { level } => {
                if !(level.is_finite() && *level > T::zero()) {
                    return invalid(format!("constant level must be finite and > 0, got {level}"));
                }
                (None, *level, *level)
            }
            BoundaryShape::Sinusoid { base, amplitude, frequency, phase } => {
                if !(base.is_finite() && amplitude.is_finite() && phase.is_finite()) {
                    return invalid("sinusoid parameters must be finite");
                }
                if !(amplitude.abs() < *base) {
                    return invalid(format!(
                        "sinusoid needs |amplitude| < base, got amplitude {amplitude}, base {base}"
                    ));
                }
                if *frequency == 0 {
                    let v = *base + *amplitude * phase.sin();
                    (None, v, v)
                } else {
                    (None, *base - amplitude.abs(), *base + amplitude.abs())
                }
            }
            BoundaryShape::TableInterpolated { knots } => {
                let spline = PeriodicSpline::new(knots.clone())?;
                let (lo, hi) = spline.extrema();
                if !(lo > T::zero() && hi.is_finite()) {
                    return invalid(format!("table boundary must stay positive, minimum is {lo}"));
                }
                (Some(spline), lo, hi)
            }
        };
        Ok(Self { shape, spline, lower, upper })
    }

    pub fn constant(level: T) -> Result<Self> {
        Self::new(BoundaryShape::Constant { level })
    }

    pub fn sinusoid(base: T, amplitude: T, frequency: u32, phase: T) -> Result<Self> {
        Self::new(BoundaryShape::Sinusoid { base, amplitude, frequency, phase })
    }

    pub fn table(knots: Vec<(T, T)>) -> Result<Self> {
        Self::new(BoundaryShape::TableInterpolated { knots })
    }

    pub fn shape(&self) -> &BoundaryShape<T> {
        &self.shape
    }

    /// Evaluates `f(x)` without a domain check; periodic outside `[0, 1]`
    /// for the sinusoid and table variants.
    #[inline]
    pub fn value(&self, x: T) -> T {
        match &self.shape {
            BoundaryShape::Constant { level } => *level,
            BoundaryShape::Sinusoid { base, amplitude, frequency, phase } => {
                let w = T::TAU() * T::lit(f64::from(*frequency));
                *base + *amplitude * (w * x + *phase).sin()
            }
            BoundaryShape::TableInterpolated { .. } => self.spline.as_ref().map_or(T::nan(), |s| s.eval(x)),
        }
    }

    /// Evaluates `f(x)` for `x` in `[0, 1]`.
    pub fn eval(&self, x: T) -> Result<T> {
        if !(x >= T::zero() && x <= T::one()) {
            return domain(format!("boundary evaluated at x = {x}, outside [0, 1]"));
        }
        Ok(self.value(x))
    }

    /// `(inf f, sup f)` over `[0, 1]`.
    pub fn bounds(&self) -> (T, T) {
        (self.lower, self.upper)
    }

    /// `(min, max)` of `f` over a uniform grid of `points + 1` nodes.
    pub fn bounds_on_grid(&self, points: usize) -> (T, T) {
        let points = points.max(1);
        (0..=points)
            .map(|i| self.value(T::from_usize_lossy(i) / T::from_usize_lossy(points)))
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    /// `λ(S) = ∫₀¹ f`; closed form for the parametric variants, adaptive
    /// quadrature otherwise.
    pub fn area_under(&self, tol: T) -> Result<T> {
        if !(tol > T::zero()) {
            return domain(format!("tolerance must be > 0, got {tol}"));
        }
        match &self.shape {
            BoundaryShape::Constant { level } => Ok(*level),
            BoundaryShape::Sinusoid { base, amplitude, frequency, phase } => {
                Ok(if *frequency == 0 { *base + *amplitude * phase.sin() } else { *base })
            }
            BoundaryShape::TableInterpolated { .. } => self.integrate(T::zero(), T::one(), tol),
        }
    }

    /// Points of `[0, 1]` where `f` is less smooth: table knots plus the ends.
    pub fn breakpoints(&self) -> Vec<T> {
        self.spline.as_ref().map_or_else(|| vec![T::zero(), T::one()], |s| s.breakpoints())
    }

    /// `∫_a^b f` by adaptive quadrature, split at table knots.
    pub fn integrate(&self, a: T, b: T, tol: T) -> Result<T> {
        let mut breaks = vec![a];
        breaks.extend(self.breakpoints().into_iter().filter(|&x| x > a && x < b));
        breaks.push(b);
        quadrature::integrate_with_breaks(|x| self.value(x), &breaks, tol)
    }

    /// Cell masses `λ(D_r) = ∫_{I_r} f`, each to absolute tolerance `tol`.
    pub fn cell_measures(&self, partition: &Partition, tol: T) -> Result<Vec<T>> {
        if !(tol > T::zero()) {
            return domain(format!("tolerance must be > 0, got {tol}"));
        }
        (0..partition.len())
            .map(|r| {
                let (a, b) = partition.interval::<T>(r);
                match &self.shape {
                    BoundaryShape::Constant { level } => Ok(*level * (b - a)),
                    _ => self.integrate(a, b, tol),
                }
            })
            .collect()
    }
}

/// Intensity and seeding of the superposed process `N_1 + ... + N_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    /// `n * c`: expected points per unit area of the superposition.
    pub total_intensity: f64,
    pub n: usize,
    pub c: f64,
    pub seed: u64,
}

impl ProcessConfig {
    pub fn new(n: usize, c: f64, seed: u64) -> Result<Self> {
        let cfg = Self { total_intensity: n as f64 * c, n, c, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    /// A single copy carrying the whole intensity (`n = 1`, `c = nc`).
    pub fn with_total_intensity(total_intensity: f64, seed: u64) -> Result<Self> {
        let cfg = Self { total_intensity, n: 1, c: total_intensity, seed };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return invalid("n must be a positive integer");
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return invalid(format!("c must be finite and > 0, got {}", self.c));
        }
        if !(self.total_intensity.is_finite() && self.total_intensity > 0.0) {
            return invalid(format!("total intensity must be finite and > 0, got {}", self.total_intensity));
        }
        let nc = self.n as f64 * self.c;
        if ((self.total_intensity - nc) / nc).abs() > 1e-12 {
            return invalid(format!("total intensity {} differs from n*c = {nc}", self.total_intensity));
        }
        Ok(())
    }
}

/// Partition of `[0, 1)` into `k` equal cells `I_r = [r/k, (r+1)/k)`,
/// indexed from 0 here. The point `x = 1` belongs to the last cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    k: usize,
}

impl Partition {
    pub fn new(k: usize) -> Result<Self> {
        if k == 0 {
            return invalid("partition needs k >= 1 cells");
        }
        Ok(Self { k })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.k
    }

    /// Midpoint `(2r + 1) / (2k)` of cell `r`.
    pub fn midpoint<T: Scalar>(&self, r: usize) -> T {
        T::from_usize_lossy(2 * r + 1) / T::from_usize_lossy(2 * self.k)
    }

    pub fn midpoints<T: Scalar>(&self) -> Vec<T> {
        (0..self.k).map(|r| self.midpoint(r)).collect()
    }

    pub fn interval<T: Scalar>(&self, r: usize) -> (T, T) {
        let k = T::from_usize_lossy(self.k);
        (T::from_usize_lossy(r) / k, T::from_usize_lossy(r + 1) / k)
    }

    /// Index of the cell containing `x`, clamped into `0..k`.
    pub fn cell_of<T: Scalar>(&self, x: T) -> usize {
        let k = T::from_usize_lossy(self.k);
        let raw = (x * k).floor();
        let mut r = if raw <= T::zero() { 0 } else { raw.to_usize().unwrap_or(self.k - 1).min(self.k - 1) };
        // Agree exactly with the float interval edges r/k.
        if r > 0 && x < T::from_usize_lossy(r) / k {
            r -= 1;
        } else if r + 1 < self.k && x >= T::from_usize_lossy(r + 1) / k {
            r += 1;
        }
        r
    }
}

/// Points of one realisation, `0 <= x <= 1`, `y >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PointSample<T> {
    pub points: Vec<(T, T)>,
    /// Generating configuration, when the sample was simulated.
    pub config: Option<ProcessConfig>,
}

impl<T: Scalar> PointSample<T> {
    /// Wraps externally supplied points after checking coordinates.
    pub fn from_points(points: Vec<(T, T)>) -> Result<Self> {
        if let Some(&(x, y)) =
            points.iter().find(|&&(x, y)| !(x >= T::zero() && x <= T::one() && y >= T::zero() && y.is_finite()))
        {
            return domain(format!("point ({x}, {y}) outside [0,1] x [0,∞)"));
        }
        Ok(Self { points, config: None })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Maps planar points to `(angle / 2π, radius)` about `center`, with the
/// angle taken in `[0, 2π)`. Points at the center are dropped.
pub fn polar_transform<T: Scalar>(points: &[(T, T)], center: (T, T)) -> PointSample<T> {
    let points = points
        .iter()
        .filter_map(|&(u, v)| {
            let (du, dv) = (u - center.0, v - center.1);
            let radius = du.hypot(dv);
            if radius == T::zero() {
                return None;
            }
            let mut angle = dv.atan2(du);
            if angle < T::zero() {
                angle = angle + T::TAU();
            }
            let mut x = angle / T::TAU();
            if x >= T::one() {
                x = T::zero();
            }
            Some((x, radius))
        })
        .collect();
    PointSample { points, config: None }
}

/// Inverse of [`polar_transform`] for one point.
pub fn polar_inverse<T: Scalar>(x: T, radius: T, center: (T, T)) -> (T, T) {
    let angle = T::TAU() * x;
    (center.0 + radius * angle.cos(), center.1 + radius * angle.sin())
}
