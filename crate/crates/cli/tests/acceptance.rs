//! End-to-end acceptance suite. Each test prints a single PASS/FAIL line
//! for its criterion; `cargo test -p spcal-cli --test acceptance` runs
//! them all.

use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spcal::analysis::{calibrate_sequence, fit_exponent, vc_independence};
use spcal::oracle::fd::{fd_solve, FdGrid};
use spcal::oracle::series::{exact_capacitance, exact_force_gradient};
use spcal::pfa::{
    self, k_el_perfect, k_el_piecewise, k_el_quadrature, k_el_reference_17, log_spaced,
    sample_curve, Normalization, OscillatorParams, VoltageState,
};
use spcal::profile::{
    perfect_sphere_sector_height, SagittaMode, SurfaceProfile, FIG1_GLOBAL_RADIUS,
    FIG1_SECTOR_HEIGHT,
};
use spcal::scan::{scan_profiles, ScanGrid};
use spcal::simulate::{
    frequency_sigma_for_vc_sem_scaled, generate_sequence_scaled, NoiseSpec, VcDrift,
    VoltageScaling,
};

fn params() -> OscillatorParams {
    OscillatorParams::new(1e-9, 700.0).unwrap()
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "{} criterion {criterion}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Criterion 1: adaptive quadrature agrees with the telescoping closed
/// form to 1e-6 over 50 random piecewise profiles and 20 distances.
#[test]
fn criterion_1_quadrature_matches_closed_form() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let params = params();
    let d_grid = log_spaced(20e-9, 3e-6, 20).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        // bubble + flattened sector + global sphere with randomized sizes
        let global: f64 = rng.random_range(1e-3..5e-2);
        let bubble_r: f64 = rng.random_range(5e-6..100e-6);
        let bubble_h: f64 = rng.random_range(2e-9..50e-9);
        let mult: f64 = rng.random_range(1.1..3.0);
        let sector_h: f64 = rng.random_range(100e-9..600e-9);
        let profile = SurfaceProfile::piecewise_from_ends(
            &[
                (bubble_r, Some(bubble_h)),
                (mult * global, Some(bubble_h + sector_h)),
                (global, None),
            ],
            SagittaMode::Paraxial,
        )
        .unwrap();
        for &d in &d_grid {
            let closed = k_el_piecewise(d, &profile, &params).unwrap();
            let quad = k_el_quadrature(d, &profile, &params, 1e-9).unwrap();
            worst = worst.max((quad / closed - 1.0).abs());
        }
    }
    let elapsed = start.elapsed();
    report(
        "1",
        worst <= 1e-6 && elapsed.as_secs() <= 10,
        &format!(
            "max |quadrature/closed-form - 1| = {worst:.2e} over 1000 cases in {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 2: the imperfect-lens curve crosses the ideal law at 30 nm
/// to within 1.5%.
#[test]
fn criterion_2_crossing_at_30nm() {
    let params = params();
    let fig1 = SurfaceProfile::fig1();
    let modeled = k_el_piecewise(30e-9, &fig1, &params).unwrap();
    let ideal = k_el_perfect(30e-9, FIG1_GLOBAL_RADIUS, &params).unwrap();
    let residual = (modeled / ideal - 1.0).abs();
    report(
        "2",
        residual <= 0.015,
        &format!("|k_mod/k_el - 1| at 30 nm = {residual:.4}"),
    );
}

/// Criterion 3: effective exponents over [30, 100] nm for the three
/// reference curves.
#[test]
fn criterion_3_anomalous_exponents() {
    let start = Instant::now();
    let params = params();
    let window = (30e-9, 100e-9);

    let grid = log_spaced(window.0, window.1, 60).unwrap();

    let fig1 = sample_curve(&SurfaceProfile::fig1(), &grid, Normalization::Si, &params).unwrap();
    let a_fig1 = fit_exponent(&fig1.samples, window).unwrap().alpha;

    let ref17: Vec<(f64, f64)> = grid
        .iter()
        .map(|&d| {
            (
                d,
                k_el_reference_17(d, FIG1_GLOBAL_RADIUS, 30e-9, &params).unwrap(),
            )
        })
        .collect();
    let a_ref = fit_exponent(&ref17, window).unwrap().alpha;

    let perfect = sample_curve(
        &SurfaceProfile::perfect_sphere(FIG1_GLOBAL_RADIUS).unwrap(),
        &grid,
        Normalization::Si,
        &params,
    )
    .unwrap();
    let a_perf = fit_exponent(&perfect.samples, window).unwrap().alpha;

    let elapsed = start.elapsed();
    let pass = (-1.85..=-1.65).contains(&a_fig1)
        && (a_ref + 1.700).abs() <= 0.001
        && (a_perf + 2.000).abs() <= 0.001
        && elapsed.as_secs() <= 1;
    report(
        "3",
        pass,
        &format!(
            "alpha(imperfect) = {a_fig1:.4}, alpha(reference) = {a_ref:.4}, \
             alpha(perfect) = {a_perf:.4} in {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 4: the parameter scan covers all four target exponents to
/// within 0.05.
#[test]
fn criterion_4_scan_covers_target_exponents() {
    let start = Instant::now();
    let grid = ScanGrid::from_ranges(
        FIG1_GLOBAL_RADIUS,
        (5e-6, 100e-6, 8),
        (2e-9, 50e-9, 8),
        (1.1, 3.0, 6),
        (100e-9, 600e-9, 6),
    )
    .unwrap();
    let rows = scan_profiles(&grid, (30e-9, 100e-9), &params()).unwrap();
    let targets = [-1.70, -1.77, -1.80, -1.54];
    let misses: Vec<f64> = targets
        .iter()
        .copied()
        .filter(|t| !rows.iter().any(|r| (r.alpha - t).abs() <= 0.05))
        .collect();
    let elapsed = start.elapsed();
    report(
        "4",
        misses.is_empty() && elapsed.as_secs() <= 60,
        &format!(
            "{} rows span [{:.3}, {:.3}], targets missed: {misses:?}, {:.2} s",
            rows.len(),
            rows.first().map_or(f64::NAN, |r| r.alpha),
            rows.last().map_or(f64::NAN, |r| r.alpha),
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 5: the image-charge series force gradient approaches the
/// parallel-plate limit near contact and the ratio is monotone in d/R.
#[test]
fn criterion_5_series_oracle() {
    let start = Instant::now();
    let radius = 1e-3;
    let sphere = SurfaceProfile::perfect_sphere(radius).unwrap();
    let voltage = VoltageState {
        applied: 0.2,
        contact: 0.0,
    };

    let ratio_at = |d_over_r: f64| -> f64 {
        let d = d_over_r * radius;
        let (fp_exact, _) = exact_force_gradient(radius, d, &voltage, 1e-12).unwrap();
        let fp_pfa = pfa::force_gradient(d, &sphere, &voltage).unwrap();
        fp_exact / fp_pfa
    };

    let near = ratio_at(1e-4);
    let grid = log_spaced(1e-5, 1e-1, 25).unwrap();
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for &d in &grid {
        let r = ratio_at(d / radius);
        if r >= prev {
            monotone = false;
        }
        prev = r;
    }
    let converged = exact_capacitance(radius, 1e-5 * radius, 1e-12)
        .unwrap()
        .last_term_relative
        <= 1e-12;
    let elapsed = start.elapsed();
    report(
        "5",
        (near - 1.0).abs() <= 0.01 && monotone && converged && elapsed.as_secs() <= 1,
        &format!(
            "series/pfa = {near:.5} at d/R = 1e-4, monotone decreasing: {monotone}, \
             term tolerance met: {converged}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 6: the finite-difference Laplace solver reproduces the
/// exact capacitance to 2% and refines at order >= 1.
#[test]
fn criterion_6_fd_solver() {
    let start = Instant::now();
    let radius = 1e-3;
    let sphere = SurfaceProfile::perfect_sphere(radius).unwrap();
    let grid = FdGrid::default_for(200, 240);

    let mut worst = 0.0f64;
    for ratio in [0.05, 0.1, 0.2] {
        let d = ratio * radius;
        let sol = fd_solve(&sphere, d, &grid, 1e-8).unwrap();
        let exact = exact_capacitance(radius, d, 1e-12).unwrap().capacitance;
        worst = worst.max((sol.capacitance / exact - 1.0).abs());
    }

    // refinement order from a coarse/fine pair at d/R = 0.1
    let d = 0.1 * radius;
    let exact = exact_capacitance(radius, d, 1e-12).unwrap().capacitance;
    let err = |n_r: usize, n_z: usize| -> f64 {
        let sol = fd_solve(&sphere, d, &FdGrid::default_for(n_r, n_z), 1e-8).unwrap();
        (sol.capacitance / exact - 1.0).abs()
    };
    let e_coarse = err(100, 120);
    let e_fine = err(200, 240);
    let order = (e_coarse / e_fine).ln() / 2.0f64.ln();

    let elapsed = start.elapsed();
    report(
        "6",
        worst <= 0.02 && order >= 1.0 && elapsed.as_secs() <= 300,
        &format!(
            "max capacitance error = {:.3}%, refinement order = {order:.2}, {:.1} s",
            100.0 * worst,
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 7: calibration round trip — noiseless recovery to 1e-9,
/// then the 500-distance campaign statistics, then drift detection.
#[test]
fn criterion_7_calibration_round_trip() {
    let start = Instant::now();
    let params = params();
    let sphere = SurfaceProfile::perfect_sphere(151.3e-6).unwrap();
    let vc = 15.29e-3;
    let v_grid: Vec<f64> = (0..9).map(|i| -0.2 + 0.05 * i as f64).collect();
    let scaling = VoltageScaling {
        reference_distance: 160.4e-9,
    };

    // noiseless recovery
    let d_small = log_spaced(160.4e-9, 5150.1e-9, 12).unwrap();
    let seq = generate_sequence_scaled(
        &sphere,
        &params,
        vc,
        &d_small,
        &v_grid,
        &NoiseSpec::noiseless(),
        0,
        Some(&scaling),
    )
    .unwrap();
    let fits = calibrate_sequence(&seq).unwrap();
    let mut worst = 0.0f64;
    for fit in &fits {
        let k_true = k_el_perfect(fit.distance_m, 151.3e-6, &params).unwrap();
        worst = worst.max((fit.vc_hat / vc - 1.0).abs());
        worst = worst.max((fit.k_hat / k_true - 1.0).abs());
        worst = worst.max((fit.nu0_hat / 700.0 - 1.0).abs());
    }

    // full campaign with sigma back-computed from the target SEM
    let d_grid = log_spaced(160.4e-9, 5150.1e-9, 500).unwrap();
    let sigma = frequency_sigma_for_vc_sem_scaled(
        &sphere,
        &params,
        vc,
        &d_grid,
        &v_grid,
        0.13e-3,
        Some(&scaling),
    )
    .unwrap();
    let noise = NoiseSpec {
        frequency_noise_sigma: sigma,
        ..NoiseSpec::noiseless()
    };
    let seq = generate_sequence_scaled(
        &sphere, &params, vc, &d_grid, &v_grid, &noise, 42, Some(&scaling),
    )
    .unwrap();
    let summary = vc_independence(&calibrate_sequence(&seq).unwrap()).unwrap();
    let mean_ok = (summary.mean - vc).abs() <= 3.0 * summary.sem;

    // injected drift must flip the verdict
    let drift_noise = NoiseSpec {
        frequency_noise_sigma: sigma,
        vc_drift: Some(VcDrift {
            slope_v_per_decade: 5e-3,
            reference_distance: 160.4e-9,
        }),
        ..NoiseSpec::noiseless()
    };
    let seq = generate_sequence_scaled(
        &sphere, &params, vc, &d_grid, &v_grid, &drift_noise, 42, Some(&scaling),
    )
    .unwrap();
    let drifted = vc_independence(&calibrate_sequence(&seq).unwrap()).unwrap();

    let elapsed = start.elapsed();
    let pass = worst <= 1e-9
        && mean_ok
        && summary.independent
        && !drifted.independent
        && elapsed.as_secs() <= 30;
    report(
        "7",
        pass,
        &format!(
            "noiseless error = {worst:.1e}; campaign mean = {:.3} mV (SEM {:.3} mV), \
             independent: {}; with drift independent: {}; {:.1} s",
            1e3 * summary.mean,
            1e3 * summary.sem,
            summary.independent,
            drifted.independent,
            elapsed.as_secs_f64()
        ),
    );
}

/// Criterion 8: the flattened sector replaces a 400 nm spherical cap,
/// a flattening of 150 nm.
#[test]
fn criterion_8_sector_geometry() {
    let fig1 = SurfaceProfile::fig1();
    let bp = fig1.breakpoints().unwrap();
    let (r_inner, r_outer) = (bp.radii[1], bp.radii[2]);
    // height the sector annulus would have at the global curvature
    let spherical_height = perfect_sphere_sector_height(FIG1_GLOBAL_RADIUS, r_outer).unwrap()
        - perfect_sphere_sector_height(FIG1_GLOBAL_RADIUS, r_inner).unwrap();
    let flattening = spherical_height - FIG1_SECTOR_HEIGHT;
    let pass = (spherical_height / 400e-9 - 1.0).abs() <= 0.01
        && (flattening / 150e-9 - 1.0).abs() <= 0.01;
    report(
        "8",
        pass,
        &format!(
            "spherical sector height = {:.1} nm, flattening = {:.1} nm",
            1e9 * spherical_height,
            1e9 * flattening
        ),
    );
}

/// Criterion 9: identical CLI invocations produce byte-identical output
/// files.
#[test]
fn criterion_9_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_spcal");
    let base = tempfile::tempdir().unwrap();
    let cases: Vec<(&str, Vec<&str>)> = vec![
        ("curve", vec!["curve", "--preset", "fig1", "--points", "50"]),
        (
            "simulate",
            vec![
                "simulate",
                "--preset",
                "perfect",
                "--radius",
                "151.3e-6",
                "--seed",
                "7",
                "--noise",
                "0.05",
                "--distances",
                "10",
            ],
        ),
        ("profile", vec!["profile", "--preset", "fig1"]),
        (
            "scan",
            vec![
                "scan", "--rcd-steps", "3", "--h-steps", "3", "--mult-steps", "2",
                "--sector-steps", "2",
            ],
        ),
    ];
    let mut all_ok = true;
    for (name, args) in &cases {
        let mut digests = Vec::new();
        for run in 0..2 {
            let dir = base.path().join(format!("{name}_{run}"));
            let status = Command::new(bin)
                .args(args)
                .arg("--out-dir")
                .arg(&dir)
                .status()
                .unwrap();
            assert!(status.success(), "spcal {name} exited with {status}");
            let mut files: Vec<_> = std::fs::read_dir(&dir)
                .unwrap()
                .map(|e| e.unwrap().path())
                .collect();
            files.sort();
            let blob: Vec<u8> = files
                .iter()
                .flat_map(|p| std::fs::read(p).unwrap())
                .collect();
            digests.push(blob);
        }
        if digests[0] != digests[1] {
            all_ok = false;
            println!("  {name}: reruns differ");
        }
    }
    report(
        "9",
        all_ok,
        "reruns of curve, simulate, profile, and scan are byte-identical",
    );
}
