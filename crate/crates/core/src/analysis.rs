//! Extraction of physics from calibration sequences: per-distance
//! parabola fits of ν² against voltage, power-law exponent estimation on
//! log-log axes, and contact-potential independence statistics.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{CalibrationPoint, CalibrationSequence};

/// Per-distance parabola fit: ν² = aV² + bV + c, reparameterized as
/// k = −a, vc = −b/(2a), ν₀² = c − b²/(4a).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaFitResult {
    pub distance_m: f64,
    pub vc_hat: f64,
    pub vc_stderr: f64,
    pub k_hat: f64,
    pub k_stderr: f64,
    pub nu0_hat: f64,
    pub nu0_stderr: f64,
    /// RMS residual of the ν² fit, Hz².
    pub residual_rms: f64,
}

/// Power-law fit result: k ∝ d^alpha within the stated window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFitResult {
    pub alpha: f64,
    pub alpha_stderr: f64,
    /// Intercept of the ln k vs ln d regression.
    pub amplitude: f64,
    pub window: (f64, f64),
    pub n_points: usize,
    pub r_squared: f64,
}

/// Contact-potential summary across distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcSummary {
    pub mean: f64,
    pub sem: f64,
    pub per_distance: Vec<(f64, f64)>,
    /// Trend of vc against log₁₀(d), volts per decade.
    pub trend_slope: f64,
    pub trend_stderr: f64,
    /// True when |trend| < 2·stderr: no significant separation dependence.
    pub independent: bool,
}

impl VcSummary {
    /// Summary line in the conventional style, e.g. "V_c = 15.29 ± 0.13 mV".
    pub fn summary_line(&self) -> String {
        format!(
            "V_c = {:.2} ± {:.2} mV",
            self.mean * 1e3,
            self.sem * 1e3
        )
    }
}

/// Least-squares parabola fit of ν² on V for one distance group.
pub fn fit_parabola(group: &[CalibrationPoint]) -> Result<ParabolaFitResult> {
    let n = group.len();
    if n < 3 {
        return Err(Error::domain(format!(
            "parabola fit needs at least 3 points, got {n}"
        )));
    }
    let distance = group[0].commanded_distance;
    let mut voltages: Vec<f64> = group.iter().map(|p| p.applied_voltage).collect();
    voltages.sort_by(|a, b| a.partial_cmp(b).unwrap());
    voltages.dedup();
    if voltages.len() < 3 {
        return Err(Error::domain(format!(
            "parabola fit needs at least 3 distinct voltages, got {}",
            voltages.len()
        )));
    }

    let mut x = DMatrix::zeros(n, 3);
    let mut y = DVector::zeros(n);
    for (i, p) in group.iter().enumerate() {
        x[(i, 0)] = p.applied_voltage * p.applied_voltage;
        x[(i, 1)] = p.applied_voltage;
        x[(i, 2)] = 1.0;
        y[i] = p.measured_frequency * p.measured_frequency;
    }
    let xtx: Matrix3<f64> = (x.transpose() * &x).fixed_view::<3, 3>(0, 0).into();
    let inv = xtx
        .try_inverse()
        .ok_or_else(|| Error::numeric("rank-deficient parabola design matrix"))?;
    let xty = x.transpose() * &y;
    let theta = inv * Vector3::new(xty[0], xty[1], xty[2]);
    let (a, b, c) = (theta[0], theta[1], theta[2]);
    if a >= 0.0 {
        return Err(Error::numeric(format!(
            "non-concave parabola (a = {a:.3e} ≥ 0) at d = {distance:.3e} m: unphysical fit rejected"
        )));
    }

    let residuals = &y - &x * DVector::from_row_slice(&[a, b, c]);
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let sigma_sq = if n > 3 { rss / (n - 3) as f64 } else { 0.0 };
    let cov = inv * sigma_sq;

    let k_hat = -a;
    let vc_hat = -b / (2.0 * a);
    let nu0_sq = c - b * b / (4.0 * a);
    if nu0_sq <= 0.0 {
        return Err(Error::numeric(format!(
            "fitted rest frequency is imaginary (ν₀² = {nu0_sq:.3e}) at d = {distance:.3e} m"
        )));
    }
    let nu0_hat = nu0_sq.sqrt();

    // delta method through the reparameterization
    let g_k = Vector3::new(-1.0, 0.0, 0.0);
    let g_vc = Vector3::new(b / (2.0 * a * a), -1.0 / (2.0 * a), 0.0);
    let g_nu0sq = Vector3::new(b * b / (4.0 * a * a), -b / (2.0 * a), 1.0);
    let var = |g: Vector3<f64>| (g.transpose() * cov * g)[(0, 0)].max(0.0);
    let k_stderr = var(g_k).sqrt();
    let vc_stderr = var(g_vc).sqrt();
    let nu0_stderr = var(g_nu0sq).sqrt() / (2.0 * nu0_hat);

    Ok(ParabolaFitResult {
        distance_m: distance,
        vc_hat,
        vc_stderr,
        k_hat,
        k_stderr,
        nu0_hat,
        nu0_stderr,
        residual_rms: (rss / n as f64).sqrt(),
    })
}

/// Fit every distance group of a sequence.
pub fn calibrate_sequence(seq: &CalibrationSequence) -> Result<Vec<ParabolaFitResult>> {
    seq.groups().iter().map(|(_, g)| fit_parabola(g)).collect()
}

/// Ordinary least squares of ln k on ln d within the window.
pub fn fit_exponent(samples: &[(f64, f64)], window: (f64, f64)) -> Result<ExponentFitResult> {
    let (d_min, d_max) = window;
    if !(d_min > 0.0 && d_max > d_min) {
        return Err(Error::domain(format!("invalid window [{d_min}, {d_max}]")));
    }
    let selected: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(d, _)| d >= d_min && d <= d_max)
        .copied()
        .collect();
    if selected.len() < 5 {
        return Err(Error::domain(format!(
            "exponent fit needs at least 5 points in the window, got {}",
            selected.len()
        )));
    }
    if selected.iter().any(|&(d, k)| !(d > 0.0) || !(k > 0.0)) {
        return Err(Error::domain("exponent fit requires positive d and k"));
    }
    let n = selected.len() as f64;
    let lx: Vec<f64> = selected.iter().map(|&(d, _)| d.ln()).collect();
    let ly: Vec<f64> = selected.iter().map(|&(_, k)| k.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::numeric("degenerate window: all distances equal"));
    }
    let alpha = sxy / sxx;
    let intercept = my - alpha * mx;
    let rss: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| {
            let r = y - (intercept + alpha * x);
            r * r
        })
        .sum();
    let dof = (selected.len() as f64 - 2.0).max(1.0);
    let alpha_stderr = (rss / dof / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(ExponentFitResult {
        alpha,
        alpha_stderr,
        amplitude: intercept,
        window,
        n_points: selected.len(),
        r_squared,
    })
}

/// Cross-check route: nonlinear least squares of k = A·d^alpha on the
/// linear scale (Gauss-Newton), which weights the data differently from
/// the log-log regression.
pub fn fit_exponent_nonlinear(
    samples: &[(f64, f64)],
    window: (f64, f64),
) -> Result<ExponentFitResult> {
    let start = fit_exponent(samples, window)?;
    let selected: Vec<(f64, f64)> = samples
        .iter()
        .filter(|&&(d, _)| d >= window.0 && d <= window.1)
        .copied()
        .collect();
    let mut ln_a = start.amplitude;
    let mut alpha = start.alpha;
    for _ in 0..100 {
        // residuals of k − exp(ln_a)·d^alpha, Jacobian in (ln_a, alpha)
        let mut jtj = [[0.0f64; 2]; 2];
        let mut jtr = [0.0f64; 2];
        for &(d, k) in &selected {
            let model = (ln_a + alpha * d.ln()).exp();
            let r = k - model;
            let j0 = model;
            let j1 = model * d.ln();
            jtj[0][0] += j0 * j0;
            jtj[0][1] += j0 * j1;
            jtj[1][1] += j1 * j1;
            jtr[0] += j0 * r;
            jtr[1] += j1 * r;
        }
        jtj[1][0] = jtj[0][1];
        let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::numeric("singular Gauss-Newton step in power-law fit"));
        }
        let da = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
        let db = (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
        ln_a += da;
        alpha += db;
        if da.abs() < 1e-14 && db.abs() < 1e-14 {
            break;
        }
    }
    Ok(ExponentFitResult {
        alpha,
        alpha_stderr: start.alpha_stderr,
        amplitude: ln_a,
        window,
        n_points: selected.len(),
        r_squared: start.r_squared,
    })
}

/// Separation-independence statistics of the fitted contact potentials.
/// Unweighted mean and SEM, plus a linear trend against log₁₀(d).
pub fn vc_independence(fits: &[ParabolaFitResult]) -> Result<VcSummary> {
    if fits.len() < 10 {
        return Err(Error::domain(format!(
            "independence test needs at least 10 distances, got {}",
            fits.len()
        )));
    }
    let n = fits.len() as f64;
    let values: Vec<(f64, f64)> = fits.iter().map(|f| (f.distance_m, f.vc_hat)).collect();
    let mean = values.iter().map(|&(_, v)| v).sum::<f64>() / n;
    let var = values.iter().map(|&(_, v)| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sem = (var / n).sqrt();

    // Trend of vc against log10(d), weighted by the per-fit standard
    // errors when available: the parabola fits far from contact are much
    // noisier (shallower curvature), and an unweighted regression both
    // underestimates the slope error and hands the noisiest points the
    // highest leverage. Weights are used up to scale, so the residual
    // scatter still sets the error magnitude.
    let lx: Vec<f64> = values.iter().map(|&(d, _)| d.log10()).collect();
    let use_weights = fits
        .iter()
        .all(|f| f.vc_stderr.is_finite() && f.vc_stderr > 0.0);
    // Raw per-fit stderrs carry few degrees of freedom each; using them
    // directly as weights lets sampling noise in the weights masquerade
    // as significance. The underlying scatter varies smoothly with d, so
    // smooth ln(stderr) against ln(d) first and weight by the fit.
    let w: Vec<f64> = if use_weights {
        let ls: Vec<f64> = fits.iter().map(|f| f.vc_stderr.ln()).collect();
        let ld: Vec<f64> = values.iter().map(|&(d, _)| d.ln()).collect();
        let md = ld.iter().sum::<f64>() / n;
        let ms = ls.iter().sum::<f64>() / n;
        let sdd: f64 = ld.iter().map(|x| (x - md) * (x - md)).sum();
        let sds: f64 = ld
            .iter()
            .zip(&ls)
            .map(|(x, y)| (x - md) * (y - ms))
            .sum();
        let beta = if sdd > 0.0 { sds / sdd } else { 0.0 };
        ld.iter()
            .map(|x| {
                let sigma = (ms + beta * (x - md)).exp();
                1.0 / (sigma * sigma)
            })
            .collect()
    } else {
        vec![1.0; fits.len()]
    };
    let sw: f64 = w.iter().sum();
    let mx = lx.iter().zip(&w).map(|(x, wi)| wi * x).sum::<f64>() / sw;
    let mv = values
        .iter()
        .zip(&w)
        .map(|(&(_, v), wi)| wi * v)
        .sum::<f64>()
        / sw;
    let sxx: f64 = lx.iter().zip(&w).map(|(x, wi)| wi * (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::numeric("all distances equal; no trend is estimable"));
    }
    let sxy: f64 = lx
        .iter()
        .zip(values.iter())
        .zip(&w)
        .map(|((x, &(_, v)), wi)| wi * (x - mx) * (v - mv))
        .sum();
    let slope = sxy / sxx;
    let rss: f64 = lx
        .iter()
        .zip(values.iter())
        .zip(&w)
        .map(|((x, &(_, v)), wi)| {
            let r = v - (mv + slope * (x - mx));
            wi * r * r
        })
        .sum();
    let trend_stderr = (rss / (n - 2.0) / sxx).sqrt();
    // noiseless inputs leave machine-precision residues whose stderr is
    // smaller still; a picovolt-per-decade trend is never physical
    let independent = slope.abs() <= 2.0 * trend_stderr || slope.abs() < 1e-12;
    Ok(VcSummary {
        mean,
        sem,
        per_distance: values,
        trend_slope: slope,
        trend_stderr,
        independent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfa::{self, log_spaced, OscillatorParams};
    use crate::profile::SurfaceProfile;
    use crate::simulate::{self, NoiseSpec};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn synth_group(d: f64, vc: f64, k: f64, nu0: f64, volts: &[f64]) -> Vec<CalibrationPoint> {
        volts
            .iter()
            .map(|&v| CalibrationPoint {
                commanded_distance: d,
                applied_voltage: v,
                measured_frequency: (nu0 * nu0 - k * (v - vc) * (v - vc)).sqrt(),
            })
            .collect()
    }

    #[test]
    fn noiseless_round_trip_exact() {
        let volts: Vec<f64> = (0..9).map(|i| -0.1 + 0.025 * i as f64).collect();
        let group = synth_group(100e-9, 0.015, 3.4e4, 700.0, &volts);
        let fit = fit_parabola(&group).unwrap();
        assert_relative_eq!(fit.vc_hat, 0.015, max_relative = 1e-9);
        assert_relative_eq!(fit.k_hat, 3.4e4, max_relative = 1e-9);
        assert_relative_eq!(fit.nu0_hat, 700.0, max_relative = 1e-9);
    }

    #[test]
    fn symmetric_voltages_recover_center_exactly() {
        for &k in &[1e3, 1e5, 1e7] {
            let vc = 0.02;
            let volts: Vec<f64> = (-4..=4).map(|i| vc + 0.03 * i as f64).collect();
            let group = synth_group(50e-9, vc, k, 500.0, &volts);
            let fit = fit_parabola(&group).unwrap();
            assert_relative_eq!(fit.vc_hat, vc, max_relative = 1e-10);
        }
    }

    #[test]
    fn non_concave_data_rejected() {
        let volts: Vec<f64> = (0..7).map(|i| -0.1 + 0.033 * i as f64).collect();
        let group: Vec<CalibrationPoint> = volts
            .iter()
            .map(|&v| CalibrationPoint {
                commanded_distance: 1e-7,
                applied_voltage: v,
                measured_frequency: 700.0 + 100.0 * v * v, // convex in ν²
            })
            .collect();
        assert!(fit_parabola(&group).is_err());
    }

    #[test]
    fn exponent_of_exact_power_laws() {
        let p = OscillatorParams::default();
        let grid = log_spaced(30e-9, 100e-9, 30).unwrap();
        let perfect: Vec<(f64, f64)> = grid
            .iter()
            .map(|&d| (d, pfa::k_el_perfect(d, 0.0309, &p).unwrap()))
            .collect();
        let f = fit_exponent(&perfect, (30e-9, 100e-9)).unwrap();
        assert!((f.alpha + 2.0).abs() < 1e-3);
        assert!(f.alpha_stderr < 1e-3);

        let ref17: Vec<(f64, f64)> = grid
            .iter()
            .map(|&d| (d, pfa::k_el_reference_17(d, 0.0309, 30e-9, &p).unwrap()))
            .collect();
        let f = fit_exponent(&ref17, (30e-9, 100e-9)).unwrap();
        assert!((f.alpha + 1.7).abs() < 1e-3);
    }

    #[test]
    fn fig1_exponent_in_anomalous_band() {
        let p = OscillatorParams::default();
        let fig1 = SurfaceProfile::fig1();
        let grid = log_spaced(30e-9, 100e-9, 20).unwrap();
        let samples: Vec<(f64, f64)> = grid
            .iter()
            .map(|&d| (d, pfa::k_el_piecewise(d, &fig1, &p).unwrap()))
            .collect();
        let f = fit_exponent(&samples, (30e-9, 100e-9)).unwrap();
        assert!(f.alpha > -1.85 && f.alpha < -1.65, "alpha = {}", f.alpha);
        // independently: two-point log-slope gives ≈ −1.75 over this window
        assert!((f.alpha + 1.76).abs() < 0.03);
    }

    #[test]
    fn window_sensitivity_monotone() {
        let p = OscillatorParams::default();
        let fig1 = SurfaceProfile::fig1();
        let grid = log_spaced(30e-9, 1000e-9, 200).unwrap();
        let samples: Vec<(f64, f64)> = grid
            .iter()
            .map(|&d| (d, pfa::k_el_piecewise(d, &fig1, &p).unwrap()))
            .collect();
        let mut prev = f64::INFINITY;
        for &upper in &[100e-9, 300e-9, 1000e-9] {
            let a = fit_exponent(&samples, (30e-9, upper)).unwrap().alpha;
            assert!(a < prev, "alpha not decreasing: {a} vs {prev}");
            prev = a;
        }
    }

    #[test]
    fn scale_equivariance_of_alpha() {
        let p = OscillatorParams::default();
        let grid = log_spaced(30e-9, 100e-9, 15).unwrap();
        let base: Vec<(f64, f64)> = grid
            .iter()
            .map(|&d| (d, pfa::k_el_perfect(d, 0.0309, &p).unwrap()))
            .collect();
        let scaled: Vec<(f64, f64)> = base.iter().map(|&(d, k)| (d, 7.25 * k)).collect();
        let a = fit_exponent(&base, (30e-9, 100e-9)).unwrap().alpha;
        let b = fit_exponent(&scaled, (30e-9, 100e-9)).unwrap().alpha;
        assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn nonlinear_route_agrees_on_pure_power_law() {
        let p = OscillatorParams::default();
        let grid = log_spaced(30e-9, 100e-9, 15).unwrap();
        let samples: Vec<(f64, f64)> = grid
            .iter()
            .map(|&d| (d, pfa::k_el_reference_17(d, 0.0309, 30e-9, &p).unwrap()))
            .collect();
        let a = fit_exponent(&samples, (30e-9, 100e-9)).unwrap().alpha;
        let b = fit_exponent_nonlinear(&samples, (30e-9, 100e-9)).unwrap().alpha;
        assert_relative_eq!(a, b, max_relative = 1e-6);
    }

    #[test]
    fn constant_vc_gives_zero_trend_and_true_verdict() {
        let fits: Vec<ParabolaFitResult> = (0..20)
            .map(|i| ParabolaFitResult {
                distance_m: 100e-9 * (i + 1) as f64,
                vc_hat: 0.015,
                vc_stderr: 1e-4,
                k_hat: 1.0,
                k_stderr: 0.0,
                nu0_hat: 700.0,
                nu0_stderr: 0.0,
                residual_rms: 0.0,
            })
            .collect();
        let s = vc_independence(&fits).unwrap();
        assert!(s.trend_slope.abs() < 1e-15);
        assert!(s.independent);
        assert!(s.sem.abs() < 1e-15);
    }

    #[test]
    fn injected_drift_flips_verdict() {
        let o = OscillatorParams::default();
        let p = SurfaceProfile::perfect_sphere(151.3e-6).unwrap();
        let d_grid = log_spaced(160.4e-9, 5150.1e-9, 50).unwrap();
        let v_grid: Vec<f64> = (0..9).map(|i| -0.2 + 0.05 * i as f64).collect();
        let sigma =
            simulate::frequency_sigma_for_vc_sem(&p, &o, 0.01529, &d_grid, &v_grid, 0.13e-3)
                .unwrap();
        let noise = NoiseSpec {
            frequency_noise_sigma: sigma,
            vc_drift: Some(simulate::VcDrift {
                slope_v_per_decade: 5e-3,
                reference_distance: 1e-6,
            }),
            ..Default::default()
        };
        let seq =
            simulate::generate_sequence(&p, &o, 0.01529, &d_grid, &v_grid, &noise, 11).unwrap();
        let fits = calibrate_sequence(&seq).unwrap();
        let s = vc_independence(&fits).unwrap();
        assert!(!s.independent, "drift not detected: {s:?}");
        assert!((s.trend_slope - 5e-3).abs() < 2e-3, "slope {}", s.trend_slope);
    }

    #[test]
    fn estimator_coverage_over_replicates() {
        // alpha ± 2 stderr should cover the noiseless alpha in ≥ 90% of
        // noisy replicates
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let p = OscillatorParams::default();
        let fig1 = SurfaceProfile::fig1();
        let grid = log_spaced(30e-9, 100e-9, 20).unwrap();
        let clean: Vec<(f64, f64)> = grid
            .iter()
            .map(|&d| (d, pfa::k_el_piecewise(d, &fig1, &p).unwrap()))
            .collect();
        let alpha0 = fit_exponent(&clean, (30e-9, 100e-9)).unwrap().alpha;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let normal = Normal::new(0.0, 0.005).unwrap();
        let mut covered = 0;
        let reps = 200;
        for _ in 0..reps {
            let noisy: Vec<(f64, f64)> = clean
                .iter()
                .map(|&(d, k)| (d, k * (1.0 + normal.sample(&mut rng))))
                .collect();
            let f = fit_exponent(&noisy, (30e-9, 100e-9)).unwrap();
            if (f.alpha - alpha0).abs() <= 2.0 * f.alpha_stderr {
                covered += 1;
            }
        }
        assert!(
            covered as f64 / reps as f64 >= 0.90,
            "coverage {covered}/{reps}"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn reparameterization_exactness(
            vc in -0.1f64..0.1,
            k_log in 2.0f64..7.0,
            nu0 in 100.0f64..2000.0,
            d in 3e-8f64..3e-6,
        ) {
            let k = 10f64.powf(k_log);
            let span = (0.5 * nu0 * nu0 / k).sqrt().min(0.5);
            let volts: Vec<f64> = (0..9).map(|i| vc - span + 2.0 * span * i as f64 / 8.0).collect();
            let group = synth_group(d, vc, k, nu0, &volts);
            let fit = fit_parabola(&group).unwrap();
            prop_assert!((fit.vc_hat - vc).abs() <= 1e-9 * vc.abs().max(1e-3));
            prop_assert!((fit.k_hat / k - 1.0).abs() <= 1e-9);
            prop_assert!((fit.nu0_hat / nu0 - 1.0).abs() <= 1e-9);
        }
    }
}
