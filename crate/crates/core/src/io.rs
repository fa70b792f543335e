//! Plain-text artifacts: point clouds, cell extremes, curves, coefficients,
//! kernel-bound tables and study reports.
//!
//! Every CSV written here starts with an optional `#` comment line (the CLI
//! echoes its command there) followed by a header row. Readers skip `#`
//! lines. Numbers are written in Rust's shortest round-trip form.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::harness::{KernelBoundTable, StudyReport};
use crate::{Boundary, BoundaryShape, Curve, Extremes};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FRONTIER_OUT_DIR";

/// `$FRONTIER_OUT_DIR` if set and non-empty, else the current directory.
pub fn default_out_dir() -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from("."),
    }
}

fn csv_writer(path: &Path, comment: Option<&str>) -> Result<csv::Writer<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut file = File::create(path)?;
    if let Some(line) = comment {
        writeln!(file, "# {}", line.replace('\n', " "))?;
    }
    Ok(csv::Writer::from_writer(file))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?)
}

fn parse_number(field: &str, path: &Path, line: u64) -> Result<f64> {
    field
        .parse::<f64>()
        .map_err(|_| Error::InvalidParameter(format!("{}:{line}: cannot parse {field:?} as a number", path.display())))
}

/// Reads the first two numeric columns of a CSV with a header row. An empty
/// file, or one with only comments and a header, yields no pairs.
pub fn read_pairs(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv_reader(path)?;
    let mut pairs = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() < 2 {
            return invalid(format!("{}:{line}: expected at least two columns", path.display()));
        }
        pairs.push((parse_number(&record[0], path, line)?, parse_number(&record[1], path, line)?));
    }
    Ok(pairs)
}

/// Points as `x,y` rows.
pub fn write_points(path: &Path, points: &[(f64, f64)], comment: Option<&str>) -> Result<()> {
    let mut w = csv_writer(path, comment)?;
    w.write_record(["x", "y"])?;
    for (x, y) in points {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Points from a two-column CSV (`x,y` or `u,v`).
pub fn read_points(path: &Path) -> Result<Vec<(f64, f64)>> {
    read_pairs(path)
}

/// Periodic-spline knots from an `x,value` CSV.
pub fn read_knots(path: &Path) -> Result<Vec<(f64, f64)>> {
    read_pairs(path)
}

/// Cell extremes as `r,x_r,count,x_max,y_min` rows, `r` counted from 1.
pub fn write_extremes(path: &Path, ext: &Extremes, comment: Option<&str>) -> Result<()> {
    let mut w = csv_writer(path, comment)?;
    w.write_record(["r", "x_r", "count", "x_max", "y_min"])?;
    for (r, cell) in ext.cells().iter().enumerate() {
        let mid: f64 = ext.partition().midpoint(r);
        w.write_record([
            (r + 1).to_string(),
            mid.to_string(),
            cell.count.to_string(),
            cell.max_y.to_string(),
            cell.min_y.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Curve rows `x[,f_true],f_hat[,f_tilde]`.
pub fn write_curve(
    path: &Path,
    curve: &Curve,
    truth: Option<&Boundary>,
    corrected: bool,
    comment: Option<&str>,
) -> Result<()> {
    let mut w = csv_writer(path, comment)?;
    let mut header = vec!["x"];
    if truth.is_some() {
        header.push("f_true");
    }
    header.push("f_hat");
    if corrected {
        header.push("f_tilde");
    }
    w.write_record(&header)?;
    for (g, &x) in curve.grid.iter().enumerate() {
        let mut row = vec![x.to_string()];
        if let Some(f) = truth {
            row.push(f.value(x).to_string());
        }
        row.push(curve.raw[g].to_string());
        if corrected {
            row.push(curve.corrected[g].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Estimated coefficients as `i,a_hat` rows.
pub fn write_coeffs(path: &Path, coeffs: &[f64], comment: Option<&str>) -> Result<()> {
    let mut w = csv_writer(path, comment)?;
    w.write_record(["i", "a_hat"])?;
    for (i, a) in coeffs.iter().enumerate() {
        w.write_record([i.to_string(), a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per `(table, x)` with the four norms and their normalised forms.
pub fn write_kernel_tables(path: &Path, tables: &[KernelBoundTable], comment: Option<&str>) -> Result<()> {
    let mut w = csv_writer(path, comment)?;
    w.write_record([
        "n",
        "k",
        "h",
        "family",
        "x",
        "B1",
        "B2",
        "B3",
        "Binf",
        "B1_over_k_ln_h",
        "B2_over_sqrt_kh",
        "warnings",
    ])?;
    for t in tables {
        let (kf, hf) = (t.k as f64, t.h as f64);
        let warnings: Vec<&str> = t.warnings.iter().map(|w| w.condition.as_str()).collect();
        let warnings = warnings.join("; ");
        for row in &t.rows {
            w.write_record([
                t.n.map_or(String::new(), |n| n.to_string()),
                t.k.to_string(),
                t.h.to_string(),
                t.family.name().to_string(),
                row.x.to_string(),
                row.b1.to_string(),
                row.b2.to_string(),
                row.b3.to_string(),
                row.b_inf.to_string(),
                if t.h >= 2 { (row.b1 / (kf * hf.ln())).to_string() } else { String::new() },
                if t.h >= 1 { (row.b2 / (kf * hf).sqrt()).to_string() } else { String::new() },
                warnings.clone(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Boundary polygon of a star-shaped set: `theta,r,u,v` rows, closed by
/// repeating the first vertex.
pub fn write_star_polygon(
    path: &Path,
    angles: &[f64],
    radii: &[f64],
    center: (f64, f64),
    comment: Option<&str>,
) -> Result<()> {
    if angles.len() != radii.len() {
        return invalid("angles and radii differ in length");
    }
    let mut w = csv_writer(path, comment)?;
    w.write_record(["theta", "r", "u", "v"])?;
    let mut rows: Vec<[String; 4]> = angles
        .iter()
        .zip(radii)
        .map(|(&x, &r)| {
            let (u, v) = crate::model::polar_inverse(x, r, center);
            [(std::f64::consts::TAU * x).to_string(), r.to_string(), u.to_string(), v.to_string()]
        })
        .collect();
    if let Some(first) = rows.first().cloned() {
        rows.push(first);
    }
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `{dir}/{name}/report.json`, `summary.csv` and, for each `n`,
/// `{n}/pointwise.csv`, `{n}/residuals.csv` and `{n}/kernel_bounds.csv`.
/// Returns the study directory.
pub fn write_study(report: &StudyReport, dir: &Path, comment: Option<&str>) -> Result<PathBuf> {
    let root = dir.join(&report.config.name);
    fs::create_dir_all(&root)?;
    fs::write(root.join("report.json"), serde_json::to_string_pretty(report)?)?;

    let mut w = csv_writer(&root.join("summary.csv"), comment)?;
    w.write_record([
        "n",
        "k",
        "h",
        "nc",
        "mise_raw",
        "mise_corrected",
        "z_mean",
        "z_mean_expected",
        "z_var",
        "z_var_expected",
        "mean_empty_cells",
        "warnings",
    ])?;
    for s in &report.results {
        let warnings: Vec<&str> = s.warnings.iter().map(|w| w.condition.as_str()).collect();
        w.write_record([
            s.n.to_string(),
            s.k.to_string(),
            s.h.to_string(),
            s.nc.to_string(),
            s.mise_raw.to_string(),
            s.mise_corrected.to_string(),
            s.z_mean.to_string(),
            s.z_mean_expected.to_string(),
            s.z_var.to_string(),
            s.z_var_expected.to_string(),
            s.mean_empty_cells.to_string(),
            warnings.join("; "),
        ])?;
    }
    w.flush()?;

    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for s in &report.results {
        let sub = root.join(s.n.to_string());
        let mut w = csv_writer(&sub.join("pointwise.csv"), comment)?;
        w.write_record([
            "x",
            "f_true",
            "f_approx",
            "mean_raw",
            "var_raw",
            "mean_corrected",
            "var_corrected",
            "bias_raw",
            "bias_raw_statistical",
            "bias_raw_systematic",
            "bias_corrected",
            "bias_corrected_statistical",
            "bias_corrected_systematic",
            "standardized_mean",
            "standardized_var",
            "ks_standardized",
            "ks_centered_raw",
            "bias_condition",
        ])?;
        for p in &s.points {
            w.write_record([
                p.x.to_string(),
                p.f_true.to_string(),
                p.f_approx.to_string(),
                p.mean_raw.to_string(),
                p.var_raw.to_string(),
                p.mean_corrected.to_string(),
                p.var_corrected.to_string(),
                p.bias_raw.total.to_string(),
                p.bias_raw.statistical.to_string(),
                p.bias_raw.systematic.to_string(),
                p.bias_corrected.total.to_string(),
                p.bias_corrected.statistical.to_string(),
                p.bias_corrected.systematic.to_string(),
                p.standardized_mean.to_string(),
                p.standardized_var.to_string(),
                opt(p.ks_standardized),
                opt(p.ks_centered_raw),
                p.bias_condition.to_string(),
            ])?;
        }
        w.flush()?;

        let mut w = csv_writer(&sub.join("residuals.csv"), comment)?;
        w.write_record(["replication", "x", "standardized", "centered_raw", "ise_corrected"])?;
        for p in &s.points {
            for (r, (z, c)) in p.standardized.iter().zip(&p.centered_raw).enumerate() {
                w.write_record([
                    r.to_string(),
                    p.x.to_string(),
                    z.to_string(),
                    c.to_string(),
                    s.mise_corrected_values[r].to_string(),
                ])?;
            }
        }
        w.flush()?;

        let mut w = csv_writer(&sub.join("kernel_bounds.csv"), comment)?;
        w.write_record(["x", "B1", "B2", "B3", "Binf", "k", "h"])?;
        for b in &s.kernel_bounds {
            w.write_record([
                b.x.to_string(),
                b.b1.to_string(),
                b.b2.to_string(),
                b.b3.to_string(),
                b.b_inf.to_string(),
                s.k.to_string(),
                s.h.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(root)
}

fn preset_numbers(name: &str, params: &str) -> Result<Vec<f64>> {
    params
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("boundary preset {name}: cannot parse {p:?}")))
        })
        .collect()
}

/// A boundary from a JSON object, a path to a JSON file, or a preset
/// `constant:LEVEL`, `sinusoid:BASE,AMP,FREQ[,PHASE]` or `table:KNOTS.csv`.
pub fn parse_boundary(spec: &str) -> Result<Boundary> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let shape: BoundaryShape<f64> = serde_json::from_str(spec)?;
        return Boundary::new(shape);
    }
    if let Some((name, params)) = spec.split_once(':') {
        match name {
            "constant" => {
                let v = preset_numbers(name, params)?;
                if v.len() != 1 {
                    return invalid("boundary preset constant takes one value: constant:LEVEL");
                }
                return Boundary::constant(v[0]);
            }
            "sinusoid" => {
                let v = preset_numbers(name, params)?;
                if !(3..=4).contains(&v.len()) {
                    return invalid("boundary preset sinusoid takes BASE,AMP,FREQ[,PHASE]");
                }
                if v[2] < 0.0 || v[2].fract() != 0.0 || v[2] > u32::MAX as f64 {
                    return invalid(format!("sinusoid frequency must be a non-negative integer, got {}", v[2]));
                }
                return Boundary::sinusoid(v[0], v[1], v[2] as u32, v.get(3).copied().unwrap_or(0.0));
            }
            "table" => return Boundary::table(read_knots(Path::new(params))?),
            _ => {}
        }
    }
    let path = Path::new(spec);
    if path.is_file() {
        let shape: BoundaryShape<f64> = serde_json::from_str(&fs::read_to_string(path)?)?;
        return Boundary::new(shape);
    }
    invalid(format!(
        "unrecognised boundary {spec:?}: expected JSON, a JSON file, constant:L, sinusoid:B,A,F[,P] or table:FILE"
    ))
}
