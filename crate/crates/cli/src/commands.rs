//! Subcommand implementations. Each command resolves its merged
//! flag/config values, runs the corresponding library operations, writes
//! its primary output files into the output directory, and prints a short
//! summary with the paths written.

use std::path::{Path, PathBuf};

use spcal::io::{self, fmt_f64};
use spcal::oracle::fd::{fd_solve, FdGrid};
use spcal::oracle::series::{exact_capacitance, exact_force_gradient};
use spcal::pfa::{self, log_spaced, sample_curve};
use spcal::simulate::{self, generate_sequence_scaled, NoiseSpec, PiezoCreep, VcDrift, VoltageScaling};
use spcal::{analysis, scan};
use spcal::{
    Error, Normalization, OscillatorParams, Provenance, Result, SurfaceProfile, VoltageState,
};

use crate::{
    CalibrateArgs, Campaign, CurveArgs, FdArgs, Figure, FitExponentArgs, NormArg, Preset,
    ProfileArgs, ScanArgs, SeriesArgs, SimulateArgs,
};

const DEFAULT_MEFF: f64 = 1e-9;
const DEFAULT_NU0: f64 = 700.0;

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::config(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents)
        .map_err(|e| Error::config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(path)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))
}

/// Resolve a profile from `--profile PATH`, `--preset`, or neither
/// (caller supplies the fallback behavior via `default`).
fn resolve_profile(
    profile: Option<&Path>,
    preset: Option<Preset>,
    radius: Option<f64>,
    default: Option<SurfaceProfile>,
) -> Result<SurfaceProfile> {
    if let Some(path) = profile {
        return SurfaceProfile::from_json(&read_file(path)?);
    }
    match preset {
        Some(Preset::Fig1) => Ok(SurfaceProfile::fig1()),
        Some(Preset::Perfect) => {
            let r = radius
                .ok_or_else(|| Error::config("--preset perfect requires --radius <meters>"))?;
            SurfaceProfile::perfect_sphere(r)
        }
        None => default.ok_or_else(|| {
            Error::config("no profile given: pass --profile <json> or --preset fig1|perfect")
        }),
    }
}

fn oscillator(meff: Option<f64>, nu0: Option<f64>) -> Result<OscillatorParams> {
    OscillatorParams::new(meff.unwrap_or(DEFAULT_MEFF), nu0.unwrap_or(DEFAULT_NU0))
}

pub fn cmd_profile(args: ProfileArgs, out_dir: &Path) -> Result<()> {
    let profile = resolve_profile(
        args.input.as_deref(),
        args.preset,
        args.radius,
        None,
    )?;
    let n = args.samples.unwrap_or(256);
    if n < 2 {
        return Err(Error::config(format!("--samples must be at least 2, got {n}")));
    }
    let r_max = match args.r_max {
        Some(r) if r > 0.0 => r,
        Some(r) => return Err(Error::config(format!("--r-max must be positive, got {r}"))),
        None => {
            let bp = profile.breakpoints()?;
            match bp.radii.last() {
                Some(&r) if r > 0.0 => 2.0 * r,
                _ => profile.global_radius() / 100.0,
            }
        }
    };
    let mut csv = String::from("r_m,z_m\n");
    for i in 0..n {
        let r = r_max * i as f64 / (n - 1) as f64;
        let z = profile.height_at(r)?;
        csv.push_str(&format!("{},{}\n", fmt_f64(r), fmt_f64(z)));
    }
    write_file(out_dir, "profile.json", &profile.to_json())?;
    write_file(out_dir, "profile_samples.csv", &csv)?;
    println!(
        "profile: {} segment(s), global radius {:.4e} m",
        profile.segments().len(),
        profile.global_radius()
    );
    Ok(())
}

pub fn cmd_curve(args: CurveArgs, out_dir: &Path) -> Result<()> {
    let params = oscillator(args.meff, args.nu0)?;
    let dmin = args.dmin.unwrap_or(20e-9);
    let dmax = args.dmax.unwrap_or(3e-6);
    let points = args.points.unwrap_or(200);
    let grid = log_spaced(dmin, dmax, points)?;
    let norm = match args.normalization.unwrap_or(NormArg::N0) {
        NormArg::Si => Normalization::Si,
        NormArg::N0 => Normalization::N0Normalized,
    };
    let d0 = args.d0.unwrap_or(30e-9);

    if let Some(Figure::Fig2) = args.figure {
        // three labeled series over one grid: the ideal d^-2 law, the
        // imperfect-lens closed form, and the d^-1.7 reference pinned at d0
        let fig1 = SurfaceProfile::fig1();
        let radius = fig1.global_radius();
        let scale = match norm {
            Normalization::Si => 1.0,
            Normalization::N0Normalized => 1.0 / pfa::n0(&params),
        };
        let mut csv = String::from("series,d_m,k_value,normalization,provenance\n");
        let norm_name = serde_name(&norm);
        let prov_name = serde_name(&Provenance::ClosedForm);
        for &d in &grid {
            let k = pfa::k_el_perfect(d, radius, &params)? * scale;
            csv.push_str(&format!(
                "perfect,{},{},{norm_name},{prov_name}\n",
                fmt_f64(d),
                fmt_f64(k)
            ));
        }
        for &d in &grid {
            let k = pfa::k_el_piecewise(d, &fig1, &params)? * scale;
            csv.push_str(&format!(
                "imperfect,{},{},{norm_name},{prov_name}\n",
                fmt_f64(d),
                fmt_f64(k)
            ));
        }
        for &d in &grid {
            let k = pfa::k_el_reference_17(d, radius, d0, &params)? * scale;
            csv.push_str(&format!(
                "reference_17,{},{},{norm_name},{prov_name}\n",
                fmt_f64(d),
                fmt_f64(k)
            ));
        }
        write_file(out_dir, "figure_fig2.csv", &csv)?;
        let kp = pfa::k_el_perfect(d0, radius, &params)?;
        let km = pfa::k_el_piecewise(d0, &fig1, &params)?;
        println!(
            "series cross at d0 = {d0:.3e} m: imperfect/perfect = {:.5}",
            km / kp
        );
        return Ok(());
    }

    let profile = resolve_profile(args.profile.as_deref(), args.preset, args.radius, None)?;
    let curve = sample_curve(&profile, &grid, norm, &params)?;
    write_file(out_dir, "curve.csv", &io::curve_to_csv(&curve))?;
    println!(
        "curve: {} points over [{:.3e}, {:.3e}] m",
        curve.samples.len(),
        dmin,
        dmax
    );
    Ok(())
}

pub fn cmd_simulate(args: SimulateArgs, out_dir: &Path) -> Result<()> {
    // campaign presets act as defaults below explicit flags/config
    let campaign_defaults = match args.campaign {
        Some(Campaign::Fig3) => SimulateArgs {
            preset: Some(Preset::Perfect),
            radius: Some(151.3e-6),
            vc: Some(15.29e-3),
            dmin: Some(160.4e-9),
            dmax: Some(5150.1e-9),
            distances: Some(500),
            target_sem: Some(0.13e-3),
            v_ref: Some(160.4e-9),
            ..Default::default()
        },
        None => SimulateArgs::default(),
    };
    let args = args.merged(campaign_defaults);

    let params = oscillator(args.meff, args.nu0)?;
    let profile = resolve_profile(
        args.profile.as_deref(),
        args.preset,
        args.radius,
        Some(SurfaceProfile::perfect_sphere(151.3e-6)?),
    )?;
    let vc = args.vc.unwrap_or(0.015);
    let d_grid = log_spaced(
        args.dmin.unwrap_or(160.4e-9),
        args.dmax.unwrap_or(5150.1e-9),
        args.distances.unwrap_or(20),
    )?;
    let n_v = args.voltages.unwrap_or(9);
    if n_v < 5 {
        return Err(Error::config(format!(
            "--voltages must be at least 5 for a parabola fit, got {n_v}"
        )));
    }
    let v_center = args.v_center.unwrap_or(0.0);
    let v_span = args.v_span.unwrap_or(0.2);
    let v_grid: Vec<f64> = (0..n_v)
        .map(|i| v_center + v_span * (2.0 * i as f64 / (n_v - 1) as f64 - 1.0))
        .collect();

    let scaling = args.v_ref.map(|reference_distance| VoltageScaling {
        reference_distance,
    });
    let sigma = match (args.noise, args.target_sem) {
        (Some(s), _) => s,
        (None, Some(sem)) => simulate::frequency_sigma_for_vc_sem_scaled(
            &profile,
            &params,
            vc,
            &d_grid,
            &v_grid,
            sem,
            scaling.as_ref(),
        )?,
        (None, None) => 0.0,
    };
    let noise = NoiseSpec {
        frequency_noise_sigma: sigma,
        vc_drift: args.drift.map(|slope| VcDrift {
            slope_v_per_decade: slope,
            reference_distance: args.drift_ref.unwrap_or(1e-6),
        }),
        piezo_creep: args.creep_amp.map(|amp| PiezoCreep {
            amplitude: amp,
            exponent: args.creep_exp.unwrap_or(-0.5),
            reference_distance: args.creep_ref.unwrap_or(1e-6),
        }),
    };
    let seed = args.seed.unwrap_or(0);
    let seq = generate_sequence_scaled(
        &profile,
        &params,
        vc,
        &d_grid,
        &v_grid,
        &noise,
        seed,
        scaling.as_ref(),
    )?;

    let seq_id = args.seq_id.as_deref().unwrap_or("s1");
    let blind = args.blind.unwrap_or(false);
    write_file(out_dir, "sequence.csv", &io::sequence_to_csv(&seq, seq_id))?;
    write_file(
        out_dir,
        "sequence_meta.json",
        &io::sequence_metadata_json(&seq.metadata, blind),
    )?;
    println!(
        "sequence {seq_id}: {} points ({} distances x {} voltages), noise sigma {:.4e} Hz, seed {seed}",
        seq.points.len(),
        d_grid.len(),
        v_grid.len(),
        sigma
    );
    Ok(())
}

pub fn cmd_calibrate(args: CalibrateArgs, out_dir: &Path) -> Result<()> {
    let input = args
        .input
        .ok_or_else(|| Error::config("calibrate requires --input <sequence.csv>"))?;
    let points = io::sequence_points_from_csv(&read_file(&input)?)?;
    let groups = simulate::group_by_distance(&points);
    let fits: Result<Vec<_>> = groups
        .iter()
        .map(|(_, pts)| analysis::fit_parabola(pts))
        .collect();
    let fits = fits?;

    if fits.len() >= 10 {
        let summary = analysis::vc_independence(&fits)?;
        write_file(
            out_dir,
            "fit_report.json",
            &io::fit_report_json(&fits, &summary),
        )?;
        println!("{}", summary.summary_line());
        println!(
            "V_c independent of separation: {} (trend {:.3e} +/- {:.3e} V/decade)",
            summary.independent, summary.trend_slope, summary.trend_stderr
        );
    } else {
        // too few distances for a trend test: report mean and SEM only
        let n = fits.len() as f64;
        let mean = fits.iter().map(|f| f.vc_hat).sum::<f64>() / n;
        let sem = if fits.len() > 1 {
            let var =
                fits.iter().map(|f| (f.vc_hat - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        let report = serde_json::json!({
            "schema_version": 1,
            "fits": fits,
            "summary": { "mean": mean, "sem": sem },
            "note": "fewer than 10 distances; no separation-independence verdict",
        });
        write_file(
            out_dir,
            "fit_report.json",
            &serde_json::to_string_pretty(&report).expect("report serialization cannot fail"),
        )?;
        println!("V_c = {:.2} ± {:.2} mV", mean * 1e3, sem * 1e3);
        println!("V_c independence verdict: skipped (needs >= 10 distances, got {})", fits.len());
    }
    Ok(())
}

pub fn cmd_fit_exponent(args: FitExponentArgs, out_dir: &Path) -> Result<()> {
    let input = args
        .input
        .ok_or_else(|| Error::config("fit-exponent requires --input <curve.csv>"))?;
    let dmin = args
        .dmin
        .ok_or_else(|| Error::config("fit-exponent requires --dmin <meters>"))?;
    let dmax = args
        .dmax
        .ok_or_else(|| Error::config("fit-exponent requires --dmax <meters>"))?;
    let curve = io::curve_from_csv(&read_file(&input)?)?;
    let fit = analysis::fit_exponent(&curve.samples, (dmin, dmax))?;
    write_file(out_dir, "exponent.json", &io::exponent_report_json(&fit))?;
    println!(
        "alpha = {:.4} +/- {:.4} over [{:.3e}, {:.3e}] m ({} points, R^2 = {:.6})",
        fit.alpha, fit.alpha_stderr, dmin, dmax, fit.n_points, fit.r_squared
    );
    Ok(())
}

pub fn cmd_oracle_series(args: SeriesArgs, out_dir: &Path) -> Result<()> {
    let radius = args.radius.unwrap_or(1.0);
    let ratios = args
        .ratios
        .unwrap_or_else(|| vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1]);
    if ratios.is_empty() {
        return Err(Error::config("oracle series needs at least one --ratio"));
    }
    let dv = args.voltage.unwrap_or(0.2);
    let tol = args.tol.unwrap_or(1e-12);
    let voltage = VoltageState {
        applied: dv,
        contact: 0.0,
    };
    let sphere = SurfaceProfile::perfect_sphere(radius)?;
    let c_iso = 4.0 * std::f64::consts::PI * spcal::constants::EPSILON_0 * radius;

    let mut csv = String::from(
        "d_over_r,d_m,capacitance_f,capacitance_over_isolated,series_fprime_n_per_m,pfa_fprime_n_per_m,series_over_pfa\n",
    );
    for &ratio in &ratios {
        let d = ratio * radius;
        let cap = exact_capacitance(radius, d, tol)?;
        let (f_exact, _) = exact_force_gradient(radius, ratio, &voltage, tol)?;
        let f_pfa = pfa::force_gradient(d, &sphere, &voltage)?;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_f64(ratio),
            fmt_f64(d),
            fmt_f64(cap.capacitance),
            fmt_f64(cap.capacitance / c_iso),
            fmt_f64(f_exact),
            fmt_f64(f_pfa),
            fmt_f64(f_exact / f_pfa)
        ));
        println!(
            "d/R = {ratio:.3e}: C/C_isolated = {:.8}, series/PFA force gradient = {:.8}",
            cap.capacitance / c_iso,
            f_exact / f_pfa
        );
    }
    write_file(out_dir, "oracle_series.csv", &csv)?;
    Ok(())
}

pub fn cmd_oracle_fd(args: FdArgs, out_dir: &Path) -> Result<()> {
    let profile = resolve_profile(
        args.profile.as_deref(),
        args.preset,
        args.radius,
        Some(SurfaceProfile::perfect_sphere(1.0)?),
    )?;
    let ratio = args.ratio.unwrap_or(0.1);
    let d = ratio * profile.global_radius();
    let grid = FdGrid::default_for(args.nr.unwrap_or(200), args.nz.unwrap_or(240));
    let tol = args.tol.unwrap_or(1e-8);
    let sol = fd_solve(&profile, d, &grid, tol)?;

    write_file(out_dir, "fd_solution.csv", &io::fd_solution_to_csv(&sol))?;
    write_file(out_dir, "fd_meta.json", &io::fd_sidecar_json(&sol))?;
    println!(
        "FD solve: {} sweeps, residual {:.3e}, C = {:.8e} F (charge route {:.8e} F)",
        sol.iterations, sol.residual, sol.capacitance, sol.capacitance_from_charge
    );
    if profile.is_perfect_sphere() {
        let exact = exact_capacitance(profile.global_radius(), d, 1e-13)?;
        println!(
            "series cross-check: C_exact = {:.8e} F, FD/exact - 1 = {:+.4e}",
            exact.capacitance,
            sol.capacitance / exact.capacitance - 1.0
        );
    }
    Ok(())
}

pub fn cmd_scan(args: ScanArgs, out_dir: &Path) -> Result<()> {
    let grid = scan::ScanGrid::from_ranges(
        args.global_radius.unwrap_or(0.0309),
        (
            args.rcd_min.unwrap_or(5e-6),
            args.rcd_max.unwrap_or(100e-6),
            args.rcd_steps.unwrap_or(8),
        ),
        (
            args.h_min.unwrap_or(2e-9),
            args.h_max.unwrap_or(50e-9),
            args.h_steps.unwrap_or(8),
        ),
        (
            args.mult_min.unwrap_or(1.1),
            args.mult_max.unwrap_or(3.0),
            args.mult_steps.unwrap_or(6),
        ),
        (
            args.sector_min.unwrap_or(100e-9),
            args.sector_max.unwrap_or(600e-9),
            args.sector_steps.unwrap_or(6),
        ),
    )?;
    let window = (args.dmin.unwrap_or(30e-9), args.dmax.unwrap_or(100e-9));
    let params = OscillatorParams::default();
    let rows = scan::scan_profiles(&grid, window, &params)?;

    let mut csv = String::from(
        "bubble_radius_m,bubble_height_m,sector_multiplier,sector_height_m,alpha,alpha_stderr\n",
    );
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(row.bubble_radius_m),
            fmt_f64(row.bubble_height_m),
            fmt_f64(row.sector_multiplier),
            fmt_f64(row.sector_height_m),
            fmt_f64(row.alpha),
            fmt_f64(row.alpha_stderr)
        ));
    }
    write_file(out_dir, "scan.csv", &csv)?;
    let (lo, hi) = (
        rows.first().map(|r| r.alpha).unwrap_or(f64::NAN),
        rows.last().map(|r| r.alpha).unwrap_or(f64::NAN),
    );
    println!(
        "scan: {} profiles over window [{:.3e}, {:.3e}] m, alpha in [{lo:.3}, {hi:.3}]",
        rows.len(),
        window.0,
        window.1
    );
    Ok(())
}

/// serde snake_case name of a unit enum variant, for CSV labels that must
/// match the library's own serialization.
fn serde_name<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_value(value)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .expect("unit enum serializes to a string")
}
