use frontier::harness::{rate_regression, run_study, Schedule, StudyConfig};
use frontier::sampler::sample_process;
use frontier::{Boundary, BoundaryF32, ProcessConfig};

#[test]
fn correction_mean_matches_cell_width_over_intensity() {
    let f = Boundary::constant(1.0).unwrap();
    let cfg = StudyConfig::new(f, vec![100_000], Schedule::Custom(vec![(100, 2)]), 500, 12);
    let report = run_study(&cfg, None).unwrap();
    let z = report.results[0].z_mean;
    assert!((0.9e-3..=1.1e-3).contains(&z), "mean Z {z}");
}

#[test]
fn mise_slope_under_normality_schedule() {
    // The schedule leaves under two expected points per cell at these sizes,
    // and the empty-cell bias flattens the decay.
    let f = Boundary::sinusoid(1.0, 0.5, 1, 0.0).unwrap();
    let mut cfg = StudyConfig::new(f, vec![1 << 10, 1 << 12, 1 << 14], Schedule::Normality45, 50, 13);
    cfg.eval_grid = vec![0.5];
    let report = run_study(&cfg, None).unwrap();
    let ns: Vec<f64> = report.results.iter().map(|r| r.n as f64).collect();
    let mise: Vec<f64> = report.results.iter().map(|r| r.mise_corrected).collect();
    let slope = rate_regression(&ns, &mise).unwrap();
    assert!((-1.2..=-0.4).contains(&slope), "slope {slope}, mean ISE {mise:?}");
}

#[test]
fn equal_total_intensity_gives_equal_samples() {
    let f = Boundary::sinusoid(1.0, 0.5, 1, 0.0).unwrap();
    let a = sample_process(&f, &ProcessConfig::new(1000, 1.0, 4).unwrap());
    let b = sample_process(&f, &ProcessConfig::new(500, 2.0, 4).unwrap());
    assert_eq!(a.points, b.points);
}

#[test]
fn single_precision_pipeline() {
    use frontier::estimator::{estimate_curve, uniform_grid};
    use frontier::sampler::cell_extremes;
    use frontier::{BasisSpec, Partition};
    let f = BoundaryF32::sinusoid(1.0, 0.5, 1, 0.0).unwrap();
    let sample = sample_process(&f, &ProcessConfig::with_total_intensity(50_000.0, 8).unwrap());
    let ext = cell_extremes(&sample, &Partition::new(100).unwrap());
    let grid: Vec<f32> = uniform_grid(21);
    let curve = estimate_curve(&ext, &BasisSpec::trigonometric(2).unwrap(), &grid);
    for (x, v) in grid.iter().zip(&curve.corrected) {
        assert!((v - f.value(*x)).abs() < 0.05, "x={x} estimate {v}");
    }
}
