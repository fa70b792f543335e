//! `frontier`: simulate Poisson clouds under a boundary, estimate the
//! boundary from cell extremes, run Monte Carlo studies and kernel
//! diagnostics, and estimate star-shaped sets from planar point clouds.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 a study check
//! failed (the report is still written), 3 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frontier::estimator::{estimate_curve, uniform_grid};
use frontier::harness::{kernel_bound_table, run_study, verify_kernel_bounds, Schedule, StudyConfig, StudyReport};
use frontier::io::{
    default_out_dir, parse_boundary, read_points, write_coeffs, write_curve, write_extremes, write_kernel_tables,
    write_points, write_star_polygon, write_study,
};
use frontier::model::polar_transform;
use frontier::sampler::{cell_extremes, sample_process};
use frontier::{BasisFamily, BasisSpec, Partition, PointSample, ProcessConfig};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] frontier::Error),
    #[error("{0} study check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::ChecksFailed(_) => 2,
            CliError::Core(frontier::Error::Io(_)) => 3,
            CliError::Core(frontier::Error::Csv(e)) if e.is_io_error() => 3,
            CliError::Core(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

/// Prefixes a core validation error with the flag it came from.
fn flag_err(flag: &str) -> impl FnOnce(frontier::Error) -> CliError + '_ {
    move |e| CliError::Usage(format!("{flag}: {e}"))
}

#[derive(Parser)]
#[command(name = "frontier", version, about = "Boundary estimation for Poisson point processes")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a Poisson cloud under a boundary.
    Sample(SampleArgs),
    /// Estimate a boundary from a point CSV.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo study.
    Study(StudyArgs),
    /// Tabulate kernel-row norms along a schedule or for given (k, h).
    KernelDiag(KernelDiagArgs),
    /// Estimate a star-shaped set from a planar point cloud.
    StarShape(StarShapeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Trig,
    Haar,
}

impl From<BasisArg> for BasisFamily {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Trig => BasisFamily::Trigonometric,
            BasisArg::Haar => BasisFamily::Haar,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    Normality45,
    Normality23,
    Mise,
    Custom,
}

#[derive(Args)]
struct SampleArgs {
    /// JSON, JSON file, or preset: constant:L, sinusoid:B,A,F[,P], table:FILE.
    #[arg(long)]
    boundary: String,
    /// Total intensity nc.
    #[arg(long)]
    nc: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV (default: $FRONTIER_OUT_DIR/sample.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimationFlags {
    /// Number of cells.
    #[arg(long)]
    k: usize,
    /// Truncation order (even for trig, 2^j - 1 for haar).
    #[arg(long)]
    h: usize,
    #[arg(long, value_enum, default_value = "trig")]
    basis: BasisArg,
    /// Number of evaluation points.
    #[arg(long, default_value_t = 201)]
    grid: usize,
    /// Report only the raw estimate.
    #[arg(long)]
    no_correction: bool,
}

impl EstimationFlags {
    fn validate(&self) -> CliResult<(BasisSpec, Partition)> {
        let spec = BasisSpec::new(self.basis.into(), self.h).map_err(flag_err("--h"))?;
        let partition = Partition::new(self.k).map_err(flag_err("--k"))?;
        if self.grid < 2 {
            return usage("--grid: need at least 2 points");
        }
        Ok((spec, partition))
    }
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    est: EstimationFlags,
    /// Output curve CSV (default: $FRONTIER_OUT_DIR/curve.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Coefficient CSV (default: next to --out, suffixed _coeffs).
    #[arg(long)]
    coeffs_out: Option<PathBuf>,
    /// Also write per-cell extremes.
    #[arg(long)]
    extremes_out: Option<PathBuf>,
    /// True boundary, added as an f_true column.
    #[arg(long)]
    truth: Option<String>,
}

#[derive(Args)]
struct StudyArgs {
    /// JSON study configuration; inline flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    boundary: Option<String>,
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    n: Vec<usize>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
    /// k values for --schedule custom, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// h values for --schedule custom, comma separated.
    #[arg(long, value_delimiter = ',')]
    h: Vec<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    c: Option<f64>,
    /// Evaluation points, comma separated.
    #[arg(long, value_delimiter = ',')]
    eval: Vec<f64>,
    #[arg(long)]
    mise_grid: Option<usize>,
    #[arg(long, value_enum)]
    basis: Option<BasisArg>,
    /// Output directory (default: $FRONTIER_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct KernelDiagArgs {
    #[arg(long, value_enum, conflicts_with_all = ["k", "h"])]
    preset: Option<ScheduleArg>,
    /// Sample sizes for --preset, comma separated.
    #[arg(long, value_delimiter = ',', requires = "preset")]
    n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    h: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    epsilon: f64,
    /// Number of grid points in [0, 1].
    #[arg(long, default_value_t = 101)]
    grid: usize,
    #[arg(long, value_enum, default_value = "trig")]
    basis: BasisArg,
    /// Output CSV (default: $FRONTIER_OUT_DIR/kernel_bounds.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StarShapeArgs {
    /// CSV of planar points (u, v).
    #[arg(long = "in")]
    input: PathBuf,
    /// Interior point u0,v0 seen by the whole boundary.
    #[arg(long, allow_hyphen_values = true)]
    center: String,
    #[command(flatten)]
    est: EstimationFlags,
    /// Output polygon CSV (default: $FRONTIER_OUT_DIR/star.csv).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn command_line() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn out_path(given: Option<PathBuf>, default_name: &str) -> PathBuf {
    given.unwrap_or_else(|| default_out_dir().join(default_name))
}

fn pair_lists(k: &[usize], h: &[usize]) -> CliResult<Vec<(usize, usize)>> {
    if k.is_empty() || h.is_empty() {
        return usage("--k and --h are both required");
    }
    match (k.len(), h.len()) {
        (a, b) if a == b => Ok(k.iter().copied().zip(h.iter().copied()).collect()),
        (1, _) => Ok(h.iter().map(|&h| (k[0], h)).collect()),
        (_, 1) => Ok(k.iter().map(|&k| (k, h[0])).collect()),
        _ => usage("--k and --h lists must have equal length, or one of them a single value"),
    }
}

fn cmd_sample(args: SampleArgs) -> CliResult<()> {
    if !(args.nc.is_finite() && args.nc > 0.0) {
        return usage(format!("--nc must be finite and > 0, got {}", args.nc));
    }
    let boundary = parse_boundary(&args.boundary).map_err(flag_err("--boundary"))?;
    let cfg = ProcessConfig::with_total_intensity(args.nc, args.seed).map_err(flag_err("--nc"))?;
    let sample = sample_process(&boundary, &cfg);
    let out = out_path(args.out, "sample.csv");
    write_points(&out, &sample.points, Some(&command_line()))?;
    println!("{} points written to {}", sample.len(), out.display());
    Ok(())
}

fn coeffs_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("curve".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_coeffs.csv"))
}

fn cmd_estimate(args: EstimateArgs) -> CliResult<()> {
    let (spec, partition) = args.est.validate()?;
    let truth = args.truth.as_deref().map(parse_boundary).transpose().map_err(flag_err("--truth"))?;
    let points = read_points(&args.input)?;
    let sample = PointSample::from_points(points).map_err(flag_err("--in"))?;
    let ext = cell_extremes(&sample, &partition);
    let grid: Vec<f64> = uniform_grid(args.est.grid);
    let curve = estimate_curve(&ext, &spec, &grid);
    let out = out_path(args.out, "curve.csv");
    let comment = command_line();
    write_curve(&out, &curve, truth.as_ref(), !args.est.no_correction, Some(&comment))?;
    let coeffs_out = args.coeffs_out.unwrap_or_else(|| coeffs_path(&out));
    write_coeffs(&coeffs_out, &curve.coeffs, Some(&comment))?;
    if let Some(path) = &args.extremes_out {
        write_extremes(path, &ext, Some(&comment))?;
    }
    if ext.empty_cells() > 0 && !sample.is_empty() {
        eprintln!("warning: {} of {} cells are empty", ext.empty_cells(), partition.len());
    }
    println!(
        "{} points, k={} h={}: curve written to {}, coefficients to {}",
        sample.len(),
        partition.len(),
        spec.order(),
        out.display(),
        coeffs_out.display()
    );
    Ok(())
}

fn study_config(args: &StudyArgs) -> CliResult<StudyConfig> {
    let mut cfg: Option<StudyConfig> = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(frontier::Error::from)?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let schedule = match args.schedule {
        None if !args.k.is_empty() || !args.h.is_empty() => Some(Schedule::Custom(pair_lists(&args.k, &args.h)?)),
        None => None,
        Some(ScheduleArg::Custom) => Some(Schedule::Custom(pair_lists(&args.k, &args.h)?)),
        Some(ScheduleArg::Normality45) => Some(Schedule::Normality45),
        Some(ScheduleArg::Normality23) => Some(Schedule::Normality23),
        Some(ScheduleArg::Mise) => Some(Schedule::Mise),
    };
    if cfg.is_none() {
        let Some(boundary) = &args.boundary else {
            return usage("--boundary is required without --config");
        };
        if args.n.is_empty() {
            return usage("--n is required without --config");
        }
        let Some(replications) = args.replications else {
            return usage("--replications is required without --config");
        };
        let boundary = parse_boundary(boundary).map_err(flag_err("--boundary"))?;
        cfg = Some(StudyConfig::new(
            boundary,
            args.n.clone(),
            schedule.clone().unwrap_or(Schedule::Normality45),
            replications,
            args.seed.unwrap_or(0),
        ));
    }
    let mut cfg = cfg.expect("config set above");
    if let Some(name) = &args.name {
        cfg.name = name.clone();
    }
    if let Some(b) = &args.boundary {
        cfg.boundary = parse_boundary(b).map_err(flag_err("--boundary"))?;
    }
    if !args.n.is_empty() {
        cfg.n_values = args.n.clone();
    }
    if let Some(s) = schedule {
        cfg.schedule = s;
    }
    if let Some(e) = args.epsilon {
        cfg.epsilon = e;
    }
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(c) = args.c {
        cfg.c = c;
    }
    if !args.eval.is_empty() {
        cfg.eval_grid = args.eval.clone();
    }
    if let Some(g) = args.mise_grid {
        cfg.mise_grid = g;
    }
    if let Some(b) = args.basis {
        cfg.basis = b.into();
    }
    cfg.validate().map_err(|e| CliError::Usage(format!("study configuration: {e}")))?;
    Ok(cfg)
}

fn print_report(report: &StudyReport, root: &Path) {
    for s in &report.results {
        println!(
            "n={} k={} h={} mise_raw={:.4e} mise_corrected={:.4e} z_mean={:.4e} (expected {:.4e})",
            s.n, s.k, s.h, s.mise_raw, s.mise_corrected, s.z_mean, s.z_mean_expected
        );
        for w in &s.warnings {
            eprintln!("warning: n={}: condition {} does not hold (ratio {:.3})", s.n, w.condition, w.ratio);
        }
    }
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    println!("report written to {} ({:.2}s)", root.display(), report.wall_time_secs);
}

fn cmd_study(args: StudyArgs, threads: Option<usize>) -> CliResult<()> {
    let cfg = study_config(&args)?;
    let report = run_study(&cfg, threads)?;
    let dir = args.out_dir.clone().unwrap_or_else(default_out_dir);
    let root = write_study(&report, &dir, Some(&command_line()))?;
    print_report(&report, &root);
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::ChecksFailed(failed));
    }
    Ok(())
}

fn cmd_kernel_diag(args: KernelDiagArgs) -> CliResult<()> {
    if args.grid < 2 {
        return usage("--grid: need at least 2 points");
    }
    let grid: Vec<f64> = uniform_grid(args.grid);
    let family: BasisFamily = args.basis.into();
    let tables = match args.preset {
        Some(preset) => {
            if args.n.is_empty() {
                return usage("--n is required with --preset");
            }
            let schedule = match preset {
                ScheduleArg::Normality45 => Schedule::Normality45,
                ScheduleArg::Normality23 => Schedule::Normality23,
                ScheduleArg::Mise => Schedule::Mise,
                ScheduleArg::Custom => return usage("--preset custom: give --k and --h lists instead"),
            };
            verify_kernel_bounds(&schedule, &args.n, &grid, args.epsilon, family).map_err(flag_err("--n"))?
        }
        None => pair_lists(&args.k, &args.h)?
            .into_iter()
            .map(|(k, h)| {
                let spec = BasisSpec::new(family, h).map_err(flag_err("--h"))?;
                let partition = Partition::new(k).map_err(flag_err("--k"))?;
                Ok(kernel_bound_table(&spec, &partition, &grid, None))
            })
            .collect::<CliResult<Vec<_>>>()?,
    };
    for t in &tables {
        for w in &t.warnings {
            eprintln!("warning: k={} h={}: condition {} does not hold (ratio {:.3})", t.k, t.h, w.condition, w.ratio);
        }
        let n = t.n.map_or(String::new(), |n| format!("n={n} "));
        println!(
            "{n}k={} h={} max B1/k={:.4} max B1/(k ln h)={:.4} max |B2/sqrt(kh) - 1|={:.4}",
            t.k, t.h, t.max_b1_over_k, t.max_b1_log_ratio, t.max_b2_deviation
        );
    }
    let out = out_path(args.out, "kernel_bounds.csv");
    write_kernel_tables(&out, &tables, Some(&command_line()))?;
    println!("table written to {}", out.display());
    Ok(())
}

fn parse_center(s: &str) -> CliResult<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [u, v] => match (u.parse::<f64>(), v.parse::<f64>()) {
            (Ok(u), Ok(v)) if u.is_finite() && v.is_finite() => Ok((u, v)),
            _ => usage(format!("--center: cannot parse {s:?} as u0,v0")),
        },
        _ => usage(format!("--center: expected u0,v0, got {s:?}")),
    }
}

fn cmd_star_shape(args: StarShapeArgs) -> CliResult<()> {
    let (spec, partition) = args.est.validate()?;
    let center = parse_center(&args.center)?;
    let cloud = read_points(&args.input)?;
    let polar = polar_transform(&cloud, center);
    let ext = cell_extremes(&polar, &partition);
    if ext.empty_cells() > 0 {
        eprintln!(
            "warning: {} of {} angular cells are empty; the center may lie outside the cloud",
            ext.empty_cells(),
            partition.len()
        );
    }
    let angles: Vec<f64> = (0..args.est.grid).map(|i| i as f64 / args.est.grid as f64).collect();
    let curve = estimate_curve(&ext, &spec, &angles);
    let radii = if args.est.no_correction { &curve.raw } else { &curve.corrected };
    let out = out_path(args.out, "star.csv");
    write_star_polygon(&out, &angles, radii, center, Some(&command_line()))?;
    let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("{} points; radius in [{lo:.4}, {hi:.4}]; polygon written to {}", polar.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return usage("--threads must be >= 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| frontier::Error::ThreadPool(e.to_string()))?;
    }
    match cli.command {
        Command::Sample(a) => cmd_sample(a),
        Command::Estimate(a) => cmd_estimate(a),
        Command::Study(a) => cmd_study(a, cli.threads),
        Command::KernelDiag(a) => cmd_kernel_diag(a),
        Command::StarShape(a) => cmd_star_shape(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
