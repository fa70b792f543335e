//! Monte Carlo studies of the estimators: bias, variance, integrated error,
//! standardized residuals against the Gaussian limit, and kernel-row norms
//! along `(k_n, h_n)` schedules.
//!
//! Every replication draws from its own seed, derived from the study seed,
//! `n` and the replication index, and results are reduced in replication
//! order. A report is therefore bit-identical whatever the thread count or
//! the order in which `n` values are processed.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{kernel_bounds_all, BasisFamily, BasisSpec, DiscreteApproximation};
use crate::error::{domain, invalid, Error, Result};
use crate::estimator::{midpoint_grid, KernelRows};
use crate::model::{BoundaryFunction, Partition, ProcessConfig};
use crate::quadrature::DEFAULT_TOL;
use crate::sampler::{cell_extremes, sample_process};
use crate::scalar::Scalar;
use crate::Boundary;

/// Thresholds for the assertions embedded in study reports.
pub mod thresholds {
    /// Sup distance between standardized residuals and Φ.
    pub const NORMALITY_KS: f64 = 0.10;
    /// Bound on the mean of the standardized residuals.
    pub const NORMALITY_MEAN: f64 = 0.15;
    /// Accepted range for the variance of the standardized residuals.
    pub const NORMALITY_VARIANCE: (f64, f64) = (0.7, 1.3);
    /// Accepted range for the log-log slope of mean integrated error in n.
    pub const MISE_SLOPE: (f64, f64) = (-1.2, -0.4);
    /// Fewer replications than this make normality checks meaningless.
    pub const MIN_NORMALITY_REPLICATIONS: usize = 10;
}

/// Closed-form `(k_n, h_n)` rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePreset {
    /// `k = n^{4/5} (ln n)^{3/5} (ln ln n)^ε`, `h = n^{2/5} (ln n)^{-1/5} (ln ln n)^ε`:
    /// normality of the corrected estimate around `f`.
    Normality45,
    /// `k = n^{2/3} (ln n)^ε`, `h = (ln n)^ε`: normality of the raw estimate
    /// around its mean.
    Normality23,
    /// `k = n^{2/3}`, `h = n^{1/3}`: both mean-integrated-error conditions
    /// `h (ln h)^{1/2} = o(k)` and `k (ln h)^{1/2} = o(n)` hold with the
    /// same polynomial margin `n^{-1/3}`.
    Mise,
}

/// How a study picks `(k, h)` for each `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Normality45,
    Normality23,
    Mise,
    /// Explicit `(k, h)` pairs: one per `n`, or a single pair for all.
    Custom(Vec<(usize, usize)>),
}

impl Schedule {
    pub fn preset(&self) -> Option<SchedulePreset> {
        match self {
            Schedule::Normality45 => Some(SchedulePreset::Normality45),
            Schedule::Normality23 => Some(SchedulePreset::Normality23),
            Schedule::Mise => Some(SchedulePreset::Mise),
            Schedule::Custom(_) => None,
        }
    }

    /// `(k, h)` for the `index`-th value `n` of a study.
    pub fn resolve(&self, n: usize, index: usize, epsilon: f64) -> Result<ScheduleChoice> {
        match self {
            Schedule::Custom(pairs) => {
                let &(k, h) = match pairs.len() {
                    0 => return invalid("custom schedule needs at least one (k, h) pair"),
                    1 => &pairs[0],
                    _ => pairs.get(index).ok_or_else(|| {
                        Error::InvalidParameter(format!("custom schedule has no pair for n index {index}"))
                    })?,
                };
                if k == 0 {
                    return invalid("custom schedule needs k >= 1");
                }
                Ok(ScheduleChoice { n, k, h, warnings: kernel_warnings(k, h) })
            }
            other => schedule(n, other.preset().expect("preset variant"), epsilon),
        }
    }
}

/// A side condition that does not hold at the chosen `n`: `ratio` is the
/// left side over the right side of a `lhs = o(rhs)` requirement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleWarning {
    pub condition: String,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleChoice {
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub warnings: Vec<ScheduleWarning>,
}

fn nearest_even_at_least_two(x: f64) -> usize {
    ((2.0 * (x / 2.0).round()) as usize).max(2)
}

fn check(warnings: &mut Vec<ScheduleWarning>, condition: &str, lhs: f64, rhs: f64) {
    let ratio = lhs / rhs;
    if !(ratio < 1.0) {
        warnings.push(ScheduleWarning { condition: condition.to_string(), ratio });
    }
}

/// Warnings for the kernel-norm asymptotics, which need `h ln h = o(k)`.
pub fn kernel_warnings(k: usize, h: usize) -> Vec<ScheduleWarning> {
    let mut w = Vec::new();
    let (k, h) = (k as f64, h as f64);
    check(&mut w, "h < k", h, k);
    if h > 1.0 {
        check(&mut w, "h ln h = o(k)", h * h.ln(), k);
    }
    w
}

/// Evaluates a preset at `n` (which must be at least 16 so that
/// `ln ln n > 0`) and lists the side conditions that fail at this `n`.
pub fn schedule(n: usize, preset: SchedulePreset, epsilon: f64) -> Result<ScheduleChoice> {
    if n < 16 {
        return domain(format!("n must be ≥ 16 for schedule presets, got {n}"));
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return domain(format!("epsilon must be finite and > 0, got {epsilon}"));
    }
    let nf = n as f64;
    let ln = nf.ln();
    let lnln = ln.ln();
    let (k_raw, h_raw) = match preset {
        SchedulePreset::Normality45 => {
            (nf.powf(0.8) * ln.powf(0.6) * lnln.powf(epsilon), nf.powf(0.4) * ln.powf(-0.2) * lnln.powf(epsilon))
        }
        SchedulePreset::Normality23 => (nf.powf(2.0 / 3.0) * ln.powf(epsilon), ln.powf(epsilon)),
        SchedulePreset::Mise => (nf.powf(2.0 / 3.0), nf.powf(1.0 / 3.0)),
    };
    let k = (k_raw.round() as usize).max(1);
    let h = nearest_even_at_least_two(h_raw);
    let (kf, hf) = (k as f64, h as f64);
    let mut warnings = Vec::new();
    match preset {
        SchedulePreset::Normality45 => {
            check(&mut warnings, "h ln h = o(k)", hf * hf.ln(), kf);
            check(&mut warnings, "k = o(n / ln n)", kf, nf / ln);
            check(&mut warnings, "n = o(h^{3/2} k^{1/2})", nf, hf.powf(1.5) * kf.sqrt());
            check(&mut warnings, "n h^{1/2} ln h = o(k^{3/2})", nf * hf.sqrt() * hf.ln(), kf.powf(1.5));
        }
        SchedulePreset::Normality23 => {
            check(&mut warnings, "h = o(k)", hf, kf);
            check(&mut warnings, "k = o(n / ln n)", kf, nf / ln);
            check(&mut warnings, "n = o(k^{3/2})", nf, kf.powf(1.5));
        }
        SchedulePreset::Mise => {
            check(&mut warnings, "h (ln h)^{1/2} = o(k)", hf * hf.ln().sqrt(), kf);
            check(&mut warnings, "k (ln h)^{1/2} = o(n)", kf * hf.ln().sqrt(), nf);
        }
    }
    Ok(ScheduleChoice { n, k, h, warnings })
}

fn default_name() -> String {
    "study".to_string()
}

fn default_c() -> f64 {
    1.0
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_eval_grid() -> Vec<f64> {
    vec![0.1, 0.3, 0.5, 0.7, 0.9]
}

fn default_mise_grid() -> usize {
    256
}

fn default_family() -> BasisFamily {
    BasisFamily::Trigonometric
}

/// A Monte Carlo study. JSON field names match the struct fields; all but
/// `boundary`, `n_values`, `schedule`, `replications` and `seed` have defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub boundary: Boundary,
    #[serde(default = "default_c")]
    pub c: f64,
    pub n_values: Vec<usize>,
    pub schedule: Schedule,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    pub replications: usize,
    /// Points where pointwise bias, variance and residuals are reported.
    #[serde(default = "default_eval_grid")]
    pub eval_grid: Vec<f64>,
    /// Size of the midpoint grid used for integrated squared errors.
    #[serde(default = "default_mise_grid")]
    pub mise_grid: usize,
    #[serde(default = "default_family")]
    pub basis: BasisFamily,
    pub seed: u64,
}

impl StudyConfig {
    /// A configuration with default name, `c = 1`, `ε = 0.01` and the
    /// default evaluation grids.
    pub fn new(boundary: Boundary, n_values: Vec<usize>, schedule: Schedule, replications: usize, seed: u64) -> Self {
        Self {
            name: default_name(),
            boundary,
            c: default_c(),
            n_values,
            schedule,
            epsilon: default_epsilon(),
            replications,
            eval_grid: default_eval_grid(),
            mise_grid: default_mise_grid(),
            basis: default_family(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return invalid(format!("replications must be >= 2, got {}", self.replications));
        }
        if self.n_values.is_empty() {
            return invalid("n_values must not be empty");
        }
        if self.n_values.windows(2).any(|w| w[1] <= w[0]) || self.n_values[0] == 0 {
            return invalid("n_values must be positive and strictly increasing");
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return invalid(format!("c must be finite and > 0, got {}", self.c));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return invalid(format!("epsilon must be finite and > 0, got {}", self.epsilon));
        }
        if self.eval_grid.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return invalid("eval_grid points must lie in [0, 1]");
        }
        if self.mise_grid < MIN_MISE_GRID {
            return invalid(format!("mise_grid must have at least {MIN_MISE_GRID} points"));
        }
        if let Schedule::Custom(pairs) = &self.schedule {
            if pairs.len() != 1 && pairs.len() != self.n_values.len() {
                return invalid("custom schedule needs one (k, h) pair or one per n value");
            }
            for &(k, h) in pairs {
                BasisSpec::new(self.basis, h)?;
                Partition::new(k)?;
            }
        }
        for (i, &n) in self.n_values.iter().enumerate() {
            let choice = self.schedule.resolve(n, i, self.epsilon)?;
            BasisSpec::new(self.basis, choice.h)?;
        }
        Ok(())
    }
}

/// Seed of replication `r` at sample size `n`: independent of the order in
/// which `n` values or replications are processed.
pub fn replication_seed(base: u64, n: usize, r: usize) -> u64 {
    base.wrapping_add((n as u64) << 32).wrapping_add(r as u64)
}

/// Total bias split as `E f̂ - f = (E f̂ - f_n) + (f_n - f)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasSplit {
    /// `statistical + systematic`.
    pub total: f64,
    /// Empirical mean minus `f_n(x)`.
    pub statistical: f64,
    /// `f_n(x) - f(x)`.
    pub systematic: f64,
}

impl BiasSplit {
    fn new(mean: f64, approx: f64, truth: f64) -> Self {
        let statistical = mean - approx;
        let systematic = approx - truth;
        Self { total: statistical + systematic, statistical, systematic }
    }
}

/// Statistics at one evaluation point for one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub x: f64,
    pub f_true: f64,
    /// Noise-free approximation `f_n(x)`.
    pub f_approx: f64,
    pub mean_raw: f64,
    pub var_raw: f64,
    pub mean_corrected: f64,
    pub var_corrected: f64,
    pub bias_raw: BiasSplit,
    pub bias_corrected: BiasSplit,
    /// `nc (hk)^{-1/2} (f̃(x) - f(x))`, one per replication.
    pub standardized: Vec<f64>,
    /// `nc (hk)^{-1/2} (f̂(x) - mean f̂(x))`, one per replication.
    pub centered_raw: Vec<f64>,
    pub standardized_mean: f64,
    pub standardized_var: f64,
    /// KS distance of `standardized` to Φ; `None` with fewer than 10 replications.
    pub ks_standardized: Option<f64>,
    pub ks_centered_raw: Option<f64>,
    /// `(nc / B_2(x)) (f_n(x) - f(x))`, which must vanish asymptotically for
    /// the corrected estimate to be centred on `f`.
    pub bias_condition: f64,
}

/// Kernel-row norms at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundRow {
    pub x: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b_inf: f64,
}

/// Results for one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeReport {
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub nc: f64,
    pub warnings: Vec<ScheduleWarning>,
    pub mise_raw: f64,
    pub mise_corrected: f64,
    /// Per-replication integrated squared error of the corrected estimate.
    pub mise_corrected_values: Vec<f64>,
    pub z_mean: f64,
    pub z_var: f64,
    /// Leading-order `E Z = k/(nc)`.
    pub z_mean_expected: f64,
    /// Leading-order `Var Z = k/(nc)²`.
    pub z_var_expected: f64,
    pub mean_empty_cells: f64,
    pub points: Vec<PointReport>,
    pub kernel_bounds: Vec<KernelBoundRow>,
}

/// Outcome of one assertion embedded in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub results: Vec<SizeReport>,
    pub checks: Vec<Check>,
    pub wall_time_secs: f64,
}

impl StudyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// JSON of everything except the wall time; equal strings mean
    /// bit-identical numbers.
    pub fn fingerprint(&self) -> Result<String> {
        let mut copy = self.clone();
        copy.wall_time_secs = 0.0;
        Ok(serde_json::to_string(&copy)?)
    }
}

struct Replication {
    raw: Vec<f64>,
    corrected: Vec<f64>,
    ise_raw: f64,
    ise_corrected: f64,
    z: f64,
    empty: usize,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sample_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Runs the study on a pool of `threads` workers (all cores when `None`).
pub fn run_study(cfg: &StudyConfig, threads: Option<usize>) -> Result<StudyReport> {
    cfg.validate()?;
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::ThreadPool(e.to_string()))?;
    let results =
        cfg.n_values.iter().enumerate().map(|(i, &n)| run_size(cfg, i, n, &pool)).collect::<Result<Vec<_>>>()?;
    let checks = study_checks(cfg, &results);
    Ok(StudyReport { config: cfg.clone(), results, checks, wall_time_secs: start.elapsed().as_secs_f64() })
}

fn run_size(cfg: &StudyConfig, index: usize, n: usize, pool: &rayon::ThreadPool) -> Result<SizeReport> {
    let choice = cfg.schedule.resolve(n, index, cfg.epsilon)?;
    let spec = BasisSpec::new(cfg.basis, choice.h)?;
    let partition = Partition::new(choice.k)?;
    let f = &cfg.boundary;
    let nc = n as f64 * cfg.c;

    let eval_rows = KernelRows::new(spec, partition, &cfg.eval_grid);
    let mise_grid: Vec<f64> = midpoint_grid(cfg.mise_grid);
    let mise_rows = KernelRows::new(spec, partition, &mise_grid);
    let approx = DiscreteApproximation::new(spec, f, partition, DEFAULT_TOL)?;

    let replications: Vec<Replication> = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                one_replication(cfg, n, r, &partition, &eval_rows, &mise_rows).map_err(|e| Error::Replication {
                    n,
                    replication: r,
                    source: Box::new(e),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let reps = replications.len() as f64;
    let points = cfg
        .eval_grid
        .iter()
        .enumerate()
        .map(|(g, &x)| {
            let raw: Vec<f64> = replications.iter().map(|r| r.raw[g]).collect();
            let corrected: Vec<f64> = replications.iter().map(|r| r.corrected[g]).collect();
            let truth = f.value(x);
            let f_approx = approx.eval(x);
            let (mean_raw, mean_corrected) = (mean(&raw), mean(&corrected));
            let standardized = standardized_errors(&corrected, truth, nc, choice.k, choice.h);
            let centered_raw = standardized_errors(&raw, mean_raw, nc, choice.k, choice.h);
            let b2 = kernel_bounds_all(&spec, &partition, x)[1];
            PointReport {
                x,
                f_true: truth,
                f_approx,
                mean_raw,
                var_raw: sample_variance(&raw),
                mean_corrected,
                var_corrected: sample_variance(&corrected),
                bias_raw: BiasSplit::new(mean_raw, f_approx, truth),
                bias_corrected: BiasSplit::new(mean_corrected, f_approx, truth),
                standardized_mean: mean(&standardized),
                standardized_var: sample_variance(&standardized),
                ks_standardized: ks_distance(&standardized).ok(),
                ks_centered_raw: ks_distance(&centered_raw).ok(),
                standardized,
                centered_raw,
                bias_condition: nc / b2 * (f_approx - truth),
            }
        })
        .collect();

    let z: Vec<f64> = replications.iter().map(|r| r.z).collect();
    let mise_corrected_values: Vec<f64> = replications.iter().map(|r| r.ise_corrected).collect();
    let kf = choice.k as f64;
    Ok(SizeReport {
        n,
        k: choice.k,
        h: choice.h,
        nc,
        warnings: choice.warnings,
        mise_raw: replications.iter().map(|r| r.ise_raw).sum::<f64>() / reps,
        mise_corrected: mean(&mise_corrected_values),
        mise_corrected_values,
        z_mean: mean(&z),
        z_var: sample_variance(&z),
        z_mean_expected: kf / nc,
        z_var_expected: kf / (nc * nc),
        mean_empty_cells: replications.iter().map(|r| r.empty as f64).sum::<f64>() / reps,
        points,
        kernel_bounds: kernel_bound_rows(&spec, &partition, &cfg.eval_grid),
    })
}

fn one_replication(
    cfg: &StudyConfig,
    n: usize,
    r: usize,
    partition: &Partition,
    eval_rows: &KernelRows<f64>,
    mise_rows: &KernelRows<f64>,
) -> Result<Replication> {
    let process = ProcessConfig::new(n, cfg.c, replication_seed(cfg.seed, n, r))?;
    let sample = sample_process(&cfg.boundary, &process);
    let ext = cell_extremes(&sample, partition);
    let at_points = eval_rows.estimate(&ext)?;
    let on_grid = mise_rows.estimate(&ext)?;
    Ok(Replication {
        ise_raw: integrated_squared_error(&on_grid.grid, &on_grid.raw, &cfg.boundary)?,
        ise_corrected: integrated_squared_error(&on_grid.grid, &on_grid.corrected, &cfg.boundary)?,
        z: at_points.correction,
        empty: ext.empty_cells(),
        raw: at_points.raw,
        corrected: at_points.corrected,
    })
}

fn study_checks(cfg: &StudyConfig, results: &[SizeReport]) -> Vec<Check> {
    let mut checks = Vec::new();
    if results.len() >= 2 {
        let values: Vec<f64> = results.iter().map(|r| r.mise_corrected).collect();
        checks.push(Check {
            name: "mise_decreasing".into(),
            passed: values.windows(2).all(|w| w[1] < w[0]),
            detail: format!("mean integrated squared error by n: {values:?}"),
        });
    }
    if results.len() >= 3 {
        let ns: Vec<f64> = results.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = results.iter().map(|r| r.mise_corrected).collect();
        let (lo, hi) = thresholds::MISE_SLOPE;
        let (passed, detail) = match rate_regression(&ns, &ys) {
            Ok(slope) => ((lo..=hi).contains(&slope), format!("log-log slope {slope:.4}, accepted [{lo}, {hi}]")),
            Err(e) => (false, e.to_string()),
        };
        checks.push(Check { name: "mise_rate".into(), passed, detail });
    }
    if cfg.schedule == Schedule::Normality45 && cfg.replications >= thresholds::MIN_NORMALITY_REPLICATIONS {
        let (vlo, vhi) = thresholds::NORMALITY_VARIANCE;
        for size in results {
            for p in &size.points {
                let ks = p.ks_standardized.unwrap_or(f64::INFINITY);
                let passed = ks < thresholds::NORMALITY_KS
                    && p.standardized_mean.abs() < thresholds::NORMALITY_MEAN
                    && (vlo..=vhi).contains(&p.standardized_var);
                checks.push(Check {
                    name: format!("normality n={} x={}", size.n, p.x),
                    passed,
                    detail: format!(
                        "KS {ks:.4} (< {}), mean {:.4} (|.| < {}), variance {:.4} (in [{vlo}, {vhi}])",
                        thresholds::NORMALITY_KS,
                        p.standardized_mean,
                        thresholds::NORMALITY_MEAN,
                        p.standardized_var
                    ),
                });
            }
        }
    }
    checks
}

/// Minimum grid size accepted by [`mise`].
pub const MIN_MISE_GRID: usize = 64;

/// `∫₀¹ (v - f)²` from values on a sorted grid, each point weighted by the
/// width of its cell between neighbouring midpoints (clipped to `[0, 1]`).
/// On the midpoint grid `(i + 1/2)/G` this is the composite midpoint rule.
pub fn integrated_squared_error<T: Scalar>(grid: &[T], values: &[T], f: &BoundaryFunction<T>) -> Result<T> {
    if grid.len() < MIN_MISE_GRID {
        return domain(format!("grid has {} points; at least {MIN_MISE_GRID} are needed", grid.len()));
    }
    if grid.len() != values.len() {
        return invalid("grid and values differ in length");
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] < T::zero() || grid[grid.len() - 1] > T::one() {
        return domain("grid must be strictly increasing inside [0, 1]");
    }
    let half = T::lit(0.5);
    let last = grid.len() - 1;
    Ok((0..grid.len())
        .map(|i| {
            let left = if i == 0 { T::zero() } else { half * (grid[i - 1] + grid[i]) };
            let right = if i == last { T::one() } else { half * (grid[i] + grid[i + 1]) };
            let e = values[i] - f.value(grid[i]);
            e * e * (right - left)
        })
        .sum())
}

/// Integrated squared error of the corrected curve.
pub fn mise<T: Scalar>(curve: &crate::estimator::EstimateCurve<T>, f: &BoundaryFunction<T>) -> Result<T> {
    integrated_squared_error(&curve.grid, &curve.corrected, f)
}

/// `nc (hk)^{-1/2} (estimate - truth)` for each estimate.
pub fn standardized_errors(estimates: &[f64], truth: f64, nc: f64, k: usize, h: usize) -> Vec<f64> {
    let scale = nc / ((h * k) as f64).sqrt();
    estimates.iter().map(|&e| scale * (e - truth)).collect()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// `sup_x |F_emp(x) - cdf(x)|` for a continuous reference CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let f = cdf(v);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// KS distance between the samples and the standard normal law.
pub fn ks_distance(samples: &[f64]) -> Result<f64> {
    if samples.len() < 10 {
        return domain(format!("KS distance needs at least 10 samples, got {}", samples.len()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return domain("KS distance got NaN samples");
    }
    Ok(ks_statistic(samples, normal_cdf))
}

/// Least-squares slope of `ln y` against `ln n`.
pub fn rate_regression(n_values: &[f64], y_values: &[f64]) -> Result<f64> {
    if n_values.len() != y_values.len() || n_values.len() < 3 {
        return domain("rate regression needs two equal-length series of at least 3 values");
    }
    if n_values.iter().chain(y_values).any(|&v| !(v > 0.0 && v.is_finite())) {
        return domain("rate regression needs positive finite values");
    }
    let lx: Vec<f64> = n_values.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y_values.iter().map(|v| v.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return domain("rate regression needs distinct n values");
    }
    Ok(sxy / sxx)
}

fn kernel_bound_rows(spec: &BasisSpec, partition: &Partition, grid: &[f64]) -> Vec<KernelBoundRow> {
    grid.iter()
        .map(|&x| {
            let [b1, b2, b3, b_inf] = kernel_bounds_all(spec, partition, x);
            KernelBoundRow { x, b1, b2, b3, b_inf }
        })
        .collect()
}

/// Kernel-row norms over a grid for one `(k, h)`, with the ratios that the
/// kernel asymptotics predict to stay bounded or tend to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundTable {
    pub n: Option<usize>,
    pub k: usize,
    pub h: usize,
    pub family: BasisFamily,
    pub rows: Vec<KernelBoundRow>,
    /// `max_x B_1(x) / k`.
    pub max_b1_over_k: f64,
    /// `max_x B_1(x) / (k ln h)`; NaN when `h < 2`.
    pub max_b1_log_ratio: f64,
    /// `max_x |B_2(x) / (kh)^{1/2} - 1|`; infinite when `h = 0`.
    pub max_b2_deviation: f64,
    pub warnings: Vec<ScheduleWarning>,
}

pub fn kernel_bound_table(spec: &BasisSpec, partition: &Partition, grid: &[f64], n: Option<usize>) -> KernelBoundTable {
    let rows: Vec<KernelBoundRow> = grid
        .par_iter()
        .map(|&x| {
            let [b1, b2, b3, b_inf] = kernel_bounds_all(spec, partition, x);
            KernelBoundRow { x, b1, b2, b3, b_inf }
        })
        .collect();
    let (k, h) = (partition.len(), spec.order());
    let (kf, hf) = (k as f64, h as f64);
    let max_b1 = rows.iter().map(|r| r.b1).fold(0.0, f64::max);
    KernelBoundTable {
        n,
        k,
        h,
        family: spec.family(),
        max_b1_over_k: max_b1 / kf,
        max_b1_log_ratio: if h >= 2 { max_b1 / (kf * hf.ln()) } else { f64::NAN },
        max_b2_deviation: rows.iter().map(|r| (r.b2 / (kf * hf).sqrt() - 1.0).abs()).fold(0.0, f64::max),
        rows,
        warnings: kernel_warnings(k, h),
    }
}

/// Kernel-row diagnostics along a schedule.
pub fn verify_kernel_bounds(
    schedule: &Schedule,
    n_values: &[usize],
    grid: &[f64],
    epsilon: f64,
    family: BasisFamily,
) -> Result<Vec<KernelBoundTable>> {
    n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let choice = schedule.resolve(n, i, epsilon)?;
            let spec = BasisSpec::new(family, choice.h)?;
            let partition = Partition::new(choice.k)?;
            let mut table = kernel_bound_table(&spec, &partition, grid, Some(n));
            for w in choice.warnings {
                if !table.warnings.contains(&w) {
                    table.warnings.push(w);
                }
            }
            Ok(table)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::EstimateCurve;
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn sine() -> Boundary {
        Boundary::sinusoid(1.0, 0.5, 1, 0.0).unwrap()
    }

    #[test]
    fn schedule_regression_fixture() {
        // n = 10^4, ε = 0.01: k = 10^{3.2} (ln 10^4)^{0.6} (ln ln 10^4)^{0.01} ≈ 6053.7,
        // h = 10^{1.6} (ln 10^4)^{-0.2} (ln ln 10^4)^{0.01} ≈ 25.74 → 26.
        let c = schedule(10_000, SchedulePreset::Normality45, 0.01).unwrap();
        let (ln, lnln) = (10_000f64.ln(), 10_000f64.ln().ln());
        let k_formula = 10f64.powf(3.2) * ln.powf(0.6) * lnln.powf(0.01);
        assert_eq!(c.k, k_formula.round() as usize);
        assert_eq!((c.k, c.h), (6054, 26));
        // At this n, k exceeds n / ln n, so that condition is flagged.
        assert!(c.warnings.iter().any(|w| w.condition == "k = o(n / ln n)"));
    }

    #[test]
    fn schedule_outputs_even_h() {
        for preset in [SchedulePreset::Normality45, SchedulePreset::Normality23, SchedulePreset::Mise] {
            for n in [16usize, 17, 100, 1000, 4096, 65536, 1_000_000] {
                let c = schedule(n, preset, 0.01).unwrap();
                assert_eq!(c.h % 2, 0);
                assert!(c.h >= 2 && c.k >= 1);
            }
        }
        let m = schedule(4096, SchedulePreset::Mise, 0.01).unwrap();
        assert_eq!((m.k, m.h), (256, 16));
    }

    #[test]
    fn schedule_domain_errors() {
        let e = schedule(8, SchedulePreset::Normality45, 0.01).unwrap_err();
        assert!(e.to_string().contains("n must be ≥ 16"), "{e}");
        assert!(schedule(100, SchedulePreset::Mise, 0.0).is_err());
    }

    #[test]
    fn custom_passthrough() {
        let s = Schedule::Custom(vec![(100, 2)]);
        let c = s.resolve(12345, 3, 0.01).unwrap();
        assert_eq!((c.k, c.h), (100, 2));
        let many = Schedule::Custom(vec![(10, 2), (20, 4)]);
        assert_eq!(many.resolve(50, 1, 0.01).unwrap().k, 20);
        assert!(many.resolve(50, 2, 0.01).is_err());
        assert!(!Schedule::Custom(vec![(4, 10)]).resolve(1, 0, 0.01).unwrap().warnings.is_empty());
    }

    #[test]
    fn config_validation() {
        let base = StudyConfig::new(sine(), vec![256], Schedule::Custom(vec![(20, 2)]), 2, 1);
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.replications = 1;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.n_values = vec![512, 256];
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.schedule = Schedule::Custom(vec![(20, 3)]);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.schedule = Schedule::Normality45;
        c.n_values = vec![8];
        assert!(c.validate().unwrap_err().to_string().contains("n must be ≥ 16"));
        let mut c = base;
        c.mise_grid = 10;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_json_defaults() {
        let json = r#"{
            "boundary": {"variant": "constant", "params": {"level": 1.0}},
            "n_values": [256],
            "schedule": {"custom": [[10, 2]]},
            "replications": 2,
            "seed": 3
        }"#;
        let cfg: StudyConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.c, 1.0);
        assert_eq!(cfg.eval_grid, vec![0.1, 0.3, 0.5, 0.7, 0.9]);
        assert_eq!(cfg.schedule, Schedule::Custom(vec![(10, 2)]));
        let preset: StudyConfig =
            serde_json::from_str(&json.replace(r#"{"custom": [[10, 2]]}"#, r#""normality45""#)).unwrap();
        assert_eq!(preset.schedule, Schedule::Normality45);
    }

    #[test]
    fn minimal_study_shape() {
        let cfg = StudyConfig::new(sine(), vec![256], Schedule::Custom(vec![(16, 2)]), 2, 11);
        let report = run_study(&cfg, Some(2)).unwrap();
        assert_eq!(report.results.len(), 1);
        let r = &report.results[0];
        assert!(r.mise_corrected.is_finite() && r.mise_corrected >= 0.0);
        assert_eq!(r.mise_corrected_values.len(), 2);
        assert_eq!(r.points.len(), 5);
        assert!(r.points.iter().all(|p| p.standardized.len() == 2 && p.ks_standardized.is_none()));
        assert_eq!(r.kernel_bounds.len(), 5);
        assert!(report.all_passed());
    }

    #[test]
    fn bias_identity_holds() {
        let cfg = StudyConfig::new(sine(), vec![2000], Schedule::Custom(vec![(40, 4)]), 20, 5);
        let report = run_study(&cfg, None).unwrap();
        for p in &report.results[0].points {
            for (split, mean) in [(p.bias_raw, p.mean_raw), (p.bias_corrected, p.mean_corrected)] {
                assert_eq!(split.total, split.statistical + split.systematic);
                assert_abs_diff_eq!(split.total, mean - p.f_true, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn study_is_order_and_thread_independent() {
        let cfg = StudyConfig::new(sine(), vec![300, 600], Schedule::Custom(vec![(20, 2)]), 12, 77);
        let a = run_study(&cfg, Some(1)).unwrap();
        let b = run_study(&cfg, Some(3)).unwrap();
        assert_eq!(a.fingerprint().unwrap(), b.fingerprint().unwrap());
        // The n = 600 block alone matches the one computed alongside n = 300.
        let mut single = cfg.clone();
        single.n_values = vec![600];
        single.schedule = Schedule::Custom(vec![(20, 2)]);
        let c = run_study(&single, Some(2)).unwrap();
        assert_eq!(serde_json::to_string(&c.results[0]).unwrap(), serde_json::to_string(&a.results[1]).unwrap());
    }

    #[test]
    fn mise_examples() {
        let f = sine();
        let grid: Vec<f64> = midpoint_grid(128);
        let exact: Vec<f64> = grid.iter().map(|&x| f.value(x)).collect();
        let curve = |values: Vec<f64>| EstimateCurve {
            grid: grid.clone(),
            raw: values.clone(),
            corrected: values,
            kernel_mass: vec![1.0; 128],
            coeffs: vec![],
            correction: 0.0,
            spec: BasisSpec::trigonometric(2).unwrap(),
            k: 1,
        };
        assert_eq!(mise(&curve(exact.clone()), &f).unwrap(), 0.0);
        let shifted: Vec<f64> = exact.iter().map(|v| v + 0.1).collect();
        assert_abs_diff_eq!(mise(&curve(shifted), &f).unwrap(), 0.01, epsilon = 1e-14);
        assert!(integrated_squared_error(&grid[..10], &exact[..10], &f).is_err());
    }

    #[test]
    fn standardized_error_examples() {
        assert!(standardized_errors(&[1.0, 1.0, 1.0], 1.0, 100.0, 10, 2).iter().all(|&v| v == 0.0));
        // nc fixed at 1000: n = 1000, c = 1 versus n = 500, c = 2. The raw
        // residual of one copy scales as 1/c, the standardized one does not.
        let (raw_a, raw_b) = (0.02, 0.01);
        let a = standardized_errors(&[1.0 + raw_a], 1.0, 1000.0 * 1.0, 50, 4)[0];
        let b = standardized_errors(&[1.0 + raw_b], 1.0, 500.0 * 2.0, 50, 4)[0];
        assert_abs_diff_eq!(a, 2.0 * b, epsilon = 1e-12);
        let expected = 1000.0 / 200f64.sqrt() * 0.02;
        assert_abs_diff_eq!(a, expected, epsilon = 1e-12);
    }

    #[test]
    fn normal_cdf_accuracy() {
        let reference = Normal::new(0.0, 1.0).unwrap();
        for i in -80..=80 {
            let x = i as f64 / 10.0;
            assert!((normal_cdf(x) - reference.cdf(x)).abs() < 1e-9, "x={x}");
        }
        assert_eq!(normal_cdf(0.0), 0.5);
        // Φ(-1), Φ(-2), Φ(1.96) to 17 significant digits.
        assert_abs_diff_eq!(normal_cdf(-1.0), 0.15865525393145705, epsilon = 1e-16);
        assert_abs_diff_eq!(normal_cdf(-2.0), 0.02275013194817921, epsilon = 1e-16);
        assert_abs_diff_eq!(normal_cdf(1.96), 0.9750021048517795, epsilon = 1e-15);
    }

    #[test]
    fn ks_examples() {
        let reference = Normal::new(0.0, 1.0).unwrap();
        let quantiles: Vec<f64> = (1..=1000).map(|i| reference.inverse_cdf((i as f64 - 0.5) / 1000.0)).collect();
        assert!(ks_distance(&quantiles).unwrap() < 0.001);
        assert!(ks_distance(&[0.0; 20]).unwrap() >= 0.5);
        assert!(ks_distance(&[0.0; 5]).is_err());
        // Shifting the sample moves it away from Φ.
        let shifted: Vec<f64> = quantiles.iter().map(|q| q + 0.3).collect();
        let more: Vec<f64> = quantiles.iter().map(|q| q + 0.6).collect();
        let (d0, d1, d2) =
            (ks_distance(&quantiles).unwrap(), ks_distance(&shifted).unwrap(), ks_distance(&more).unwrap());
        assert!(d0 < d1 && d1 < d2);
        let scaled: Vec<f64> = quantiles.iter().map(|q| 2.0 * q).collect();
        assert!(ks_distance(&scaled).unwrap() > 0.1);
    }

    #[test]
    fn ks_on_simulated_normals() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
        let trials = 200;
        let below = (0..trials)
            .filter(|_| {
                let s: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
                ks_distance(&s).unwrap() < 0.0607
            })
            .count();
        assert!(below as f64 >= 0.95 * trials as f64, "{below}/{trials}");
    }

    #[test]
    fn rate_regression_examples() {
        let ns = [10.0, 100.0, 1000.0, 1e4];
        let inv: Vec<f64> = ns.iter().map(|n| 1.0 / n).collect();
        assert_abs_diff_eq!(rate_regression(&ns, &inv).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rate_regression(&ns, &[3.0; 4]).unwrap(), 0.0, epsilon = 1e-15);
        assert!(rate_regression(&ns, &[1.0, 0.0, 1.0, 1.0]).is_err());
        assert!(rate_regression(&ns[..2], &inv[..2]).is_err());
    }

    #[test]
    fn kernel_table_examples() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let t = kernel_bound_table(&BasisSpec::trigonometric(0).unwrap(), &Partition::new(100).unwrap(), &grid, None);
        assert!(t.rows.iter().all(|r| (r.b1 - 100.0).abs() < 1e-9));
        assert_abs_diff_eq!(t.max_b1_over_k, 1.0, epsilon = 1e-12);
        assert!(t.max_b1_log_ratio.is_nan());

        let tables = verify_kernel_bounds(
            &Schedule::Normality45,
            &[1 << 10, 1 << 12, 1 << 14],
            &grid,
            0.01,
            BasisFamily::Trigonometric,
        )
        .unwrap();
        let dev: Vec<f64> = tables.iter().map(|t| t.max_b2_deviation).collect();
        assert!(dev.windows(2).all(|w| w[1] < w[0]), "{dev:?}");
        let warn = kernel_bound_table(&BasisSpec::trigonometric(10).unwrap(), &Partition::new(4).unwrap(), &grid, None);
        assert!(warn.warnings.iter().any(|w| w.condition == "h < k"));
    }

    #[test]
    fn replication_errors_carry_their_index() {
        let e = Error::Replication { n: 10, replication: 3, source: Box::new(Error::Numeric("x".into())) };
        assert!(e.to_string().contains("n=10") && e.to_string().contains("replication 3"));
    }
}
