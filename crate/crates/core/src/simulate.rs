//! Synthetic calibration sequences: voltage sweeps across separations
//! with configurable frequency noise, contact-potential drift, and
//! piezo-creep distance bias.
//!
//! Noise enters the measured channel (the frequency), not ν². Creep is a
//! static per-point distance bias, drift a linear-in-log₁₀(d) shift of
//! the contact potential. Generation is deterministic for a given seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pfa::{self, OscillatorParams};
use crate::profile::SurfaceProfile;

/// One record of a calibration sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    /// Commanded separation, m.
    pub commanded_distance: f64,
    /// Applied voltage, V.
    pub applied_voltage: f64,
    /// Measured resonance frequency, Hz.
    pub measured_frequency: f64,
}

/// Separation-dependent contact-potential drift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VcDrift {
    /// Slope in volts per decade of separation.
    pub slope_v_per_decade: f64,
    /// Separation at which the drift vanishes, m.
    pub reference_distance: f64,
}

/// Static piezo-creep distance bias:
/// d_actual = d_commanded + amplitude·(d_commanded/d_ref)^exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiezoCreep {
    pub amplitude: f64,
    pub exponent: f64,
    pub reference_distance: f64,
}

/// Noise and perturbation specification for sequence generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct NoiseSpec {
    /// Gaussian i.i.d. frequency noise, Hz.
    pub frequency_noise_sigma: f64,
    pub vc_drift: Option<VcDrift>,
    pub piezo_creep: Option<PiezoCreep>,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    fn validate(&self) -> Result<()> {
        if self.frequency_noise_sigma < 0.0 {
            return Err(Error::domain("frequency noise sigma must be non-negative"));
        }
        Ok(())
    }
}

/// Generation metadata recorded alongside a sequence (the ground truth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMetadata {
    pub schema_version: u32,
    pub profile: serde_json::Value,
    pub oscillator: OscillatorParams,
    /// Injected contact potential, V. Omitted in blind exports.
    pub true_contact_potential: Option<f64>,
    pub noise: Option<NoiseSpec>,
    pub seed: u64,
}

/// A generated calibration campaign, grouped by distance.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSequence {
    pub points: Vec<CalibrationPoint>,
    pub metadata: SequenceMetadata,
}

impl CalibrationSequence {
    /// Group points by commanded distance, preserving first-seen order.
    pub fn groups(&self) -> Vec<(f64, Vec<CalibrationPoint>)> {
        group_by_distance(&self.points)
    }
}

pub fn group_by_distance(points: &[CalibrationPoint]) -> Vec<(f64, Vec<CalibrationPoint>)> {
    let mut out: Vec<(f64, Vec<CalibrationPoint>)> = Vec::new();
    for &p in points {
        match out.iter_mut().find(|(d, _)| *d == p.commanded_distance) {
            Some((_, v)) => v.push(p),
            None => out.push((p.commanded_distance, vec![p])),
        }
    }
    out
}

/// Resonance frequency ν = sqrt(ν₀² − k(d)(V−vc)²) for the given profile.
pub fn frequency_at(
    d: f64,
    v: f64,
    profile: &SurfaceProfile,
    params: &OscillatorParams,
    vc: f64,
) -> Result<f64> {
    let k = pfa::k_el_piecewise(d, profile, params)?;
    let dv = v - vc;
    let nu0 = params.rest_frequency;
    let nu_sq = nu0 * nu0 - k * dv * dv;
    if nu_sq <= 0.0 {
        return Err(Error::domain(format!(
            "oscillator destabilized at d = {d:.3e} m, V = {v} V: ν² = {nu_sq:.3e}"
        )));
    }
    Ok(nu_sq.sqrt())
}

/// Distance-proportional widening of the voltage sweep: at separation d
/// the grid is scaled about its midpoint by d / reference_distance. The
/// parabola curvature signal k(d)·(V−center)² then stays comparable
/// across the campaign (k falls roughly as d⁻²), which keeps the vertex
/// estimator's SNR — and hence its nonlinearity bias — uniform in d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageScaling {
    pub reference_distance: f64,
}

fn scaled_grid(v_grid: &[f64], d: f64, scaling: Option<&VoltageScaling>) -> Vec<f64> {
    match scaling {
        None => v_grid.to_vec(),
        Some(s) => {
            let lo = v_grid.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mid = 0.5 * (lo + hi);
            let f = d / s.reference_distance;
            v_grid.iter().map(|&v| mid + (v - mid) * f).collect()
        }
    }
}

/// Generate a calibration sequence: a voltage sweep at each separation.
/// Perturbations apply in the order creep (distances), drift (contact
/// potential), Gaussian noise (frequencies).
pub fn generate_sequence(
    profile: &SurfaceProfile,
    params: &OscillatorParams,
    vc: f64,
    d_grid: &[f64],
    v_grid: &[f64],
    noise: &NoiseSpec,
    seed: u64,
) -> Result<CalibrationSequence> {
    generate_sequence_scaled(profile, params, vc, d_grid, v_grid, noise, seed, None)
}

/// [`generate_sequence`] with an optional distance-proportional voltage
/// sweep widening.
#[allow(clippy::too_many_arguments)]
pub fn generate_sequence_scaled(
    profile: &SurfaceProfile,
    params: &OscillatorParams,
    vc: f64,
    d_grid: &[f64],
    v_grid: &[f64],
    noise: &NoiseSpec,
    seed: u64,
    scaling: Option<&VoltageScaling>,
) -> Result<CalibrationSequence> {
    if d_grid.is_empty() || v_grid.is_empty() {
        return Err(Error::domain("distance and voltage grids must be non-empty"));
    }
    if v_grid.len() < 5 {
        return Err(Error::domain(format!(
            "need at least 5 voltage settings per distance for a parabola fit, got {}",
            v_grid.len()
        )));
    }
    noise.validate()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).map_err(|e| Error::domain(e.to_string()))?;

    let mut points = Vec::with_capacity(d_grid.len() * v_grid.len());
    let mut destabilized = Vec::new();
    for &d_cmd in d_grid {
        let d_actual = match &noise.piezo_creep {
            Some(c) => d_cmd + c.amplitude * (d_cmd / c.reference_distance).powf(c.exponent),
            None => d_cmd,
        };
        let vc_eff = match &noise.vc_drift {
            Some(dr) => vc + dr.slope_v_per_decade * (d_cmd / dr.reference_distance).log10(),
            None => vc,
        };
        for v in scaled_grid(v_grid, d_cmd, scaling) {
            match frequency_at(d_actual, v, profile, params, vc_eff) {
                Ok(nu) => {
                    let noisy = if noise.frequency_noise_sigma > 0.0 {
                        nu + noise.frequency_noise_sigma * normal.sample(&mut rng)
                    } else {
                        nu
                    };
                    points.push(CalibrationPoint {
                        commanded_distance: d_cmd,
                        applied_voltage: v,
                        measured_frequency: noisy.max(0.0),
                    });
                }
                Err(_) => destabilized.push((d_cmd, v)),
            }
        }
    }
    if !destabilized.is_empty() {
        let listing: Vec<String> = destabilized
            .iter()
            .take(10)
            .map(|(d, v)| format!("(d = {d:.3e} m, V = {v} V)"))
            .collect();
        return Err(Error::domain(format!(
            "{} destabilized points; shrink the voltage grid: {}{}",
            destabilized.len(),
            listing.join(", "),
            if destabilized.len() > 10 { ", ..." } else { "" }
        )));
    }
    Ok(CalibrationSequence {
        points,
        metadata: SequenceMetadata {
            schema_version: 1,
            profile: serde_json::from_str(&profile.to_json()).expect("valid profile JSON"),
            oscillator: *params,
            true_contact_potential: Some(vc),
            noise: Some(*noise),
            seed,
        },
    })
}

/// Back-compute the frequency-noise sigma that makes the standard error
/// of the campaign-mean fitted contact potential equal `target_sem`.
///
/// Uses the linearized parabola-fit covariance: with y = ν² observations
/// of variance (2ν σ)², the fitted vertex −b/(2a) has variance σ² s_d
/// with s_d = gᵀ (XᵀX)⁻¹ Xᵀ W X (XᵀX)⁻¹ g evaluated at the true
/// parameters, W = diag((2ν_i)²).
pub fn frequency_sigma_for_vc_sem(
    profile: &SurfaceProfile,
    params: &OscillatorParams,
    vc: f64,
    d_grid: &[f64],
    v_grid: &[f64],
    target_sem: f64,
) -> Result<f64> {
    frequency_sigma_for_vc_sem_scaled(profile, params, vc, d_grid, v_grid, target_sem, None)
}

/// [`frequency_sigma_for_vc_sem`] with an optional distance-proportional
/// voltage sweep widening (must match the one used for generation).
pub fn frequency_sigma_for_vc_sem_scaled(
    profile: &SurfaceProfile,
    params: &OscillatorParams,
    vc: f64,
    d_grid: &[f64],
    v_grid: &[f64],
    target_sem: f64,
    scaling: Option<&VoltageScaling>,
) -> Result<f64> {
    use nalgebra::{DMatrix, DVector, Matrix3};
    if !(target_sem > 0.0) {
        return Err(Error::domain("target SEM must be positive"));
    }
    let n_v = v_grid.len();
    let mut sum_s = 0.0;
    for &d in d_grid {
        let k = pfa::k_el_piecewise(d, profile, params)?;
        let a = -k;
        let b = 2.0 * k * vc;
        let v_local = scaled_grid(v_grid, d, scaling);
        let mut x = DMatrix::zeros(n_v, 3);
        let mut w = DVector::zeros(n_v);
        for (i, &v) in v_local.iter().enumerate() {
            x[(i, 0)] = v * v;
            x[(i, 1)] = v;
            x[(i, 2)] = 1.0;
            let nu = frequency_at(d, v, profile, params, vc)?;
            w[i] = (2.0 * nu) * (2.0 * nu);
        }
        let xtx: Matrix3<f64> = (x.transpose() * &x).fixed_view::<3, 3>(0, 0).into();
        let inv = xtx
            .try_inverse()
            .ok_or_else(|| Error::numeric("rank-deficient voltage design"))?;
        let xtwx: Matrix3<f64> = (x.transpose() * DMatrix::from_diagonal(&w) * &x)
            .fixed_view::<3, 3>(0, 0)
            .into();
        let cov = inv * xtwx * inv;
        // vc = −b/(2a): gradient wrt (a, b, c)
        let g = nalgebra::Vector3::new(b / (2.0 * a * a), -1.0 / (2.0 * a), 0.0);
        sum_s += (g.transpose() * cov * g)[(0, 0)];
    }
    let n = d_grid.len() as f64;
    Ok(target_sem * n / sum_s.sqrt())
}
