//! Electrostatic force gradients and frequency-shift coefficients under
//! the proximity force approximation.
//!
//! For a perfect sphere the coefficient is k(d) = ε₀R/(4π m_eff d²). For
//! a piecewise-spherical profile with paraxial sagitta the PFA integral
//! telescopes into the closed form
//! (ε₀/4π m_eff) Σᵢ Rᵢ [1/(d+z_{i-1})² − 1/(d+zᵢ)²], with the unbounded
//! outer segment contributing 1/(d+∞)² = 0. All gradients are reported as
//! positive magnitudes of the attractive interaction.

use serde::{Deserialize, Serialize};

use crate::constants::EPSILON_0;
use crate::error::{Error, Result};
use crate::profile::{SagittaMode, SurfaceProfile};
use crate::quad;

/// Applied and contact potentials, V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageState {
    pub applied: f64,
    pub contact: f64,
}

impl VoltageState {
    pub fn difference(&self) -> f64 {
        self.applied - self.contact
    }
}

/// Cantilever oscillator parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    /// Effective mass m_eff, kg.
    pub effective_mass: f64,
    /// Rest frequency ν₀, Hz.
    pub rest_frequency: f64,
}

impl OscillatorParams {
    pub fn new(effective_mass: f64, rest_frequency: f64) -> Result<Self> {
        if !(effective_mass > 0.0) {
            return Err(Error::domain(format!(
                "effective mass must be positive, got {effective_mass}"
            )));
        }
        if !(rest_frequency > 0.0) {
            return Err(Error::domain(format!(
                "rest frequency must be positive, got {rest_frequency}"
            )));
        }
        Ok(Self {
            effective_mass,
            rest_frequency,
        })
    }
}

impl Default for OscillatorParams {
    /// Typical microcantilever scale; normalized outputs never depend on
    /// the effective mass.
    fn default() -> Self {
        Self {
            effective_mass: 1e-9,
            rest_frequency: 700.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    Si,
    N0Normalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
    OracleSeries,
    OracleFd,
}

/// Sampled k(d) curve with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceGradientCurve {
    pub samples: Vec<(f64, f64)>,
    pub normalization: Normalization,
    pub provenance: Provenance,
}

impl ForceGradientCurve {
    pub fn new(
        samples: Vec<(f64, f64)>,
        normalization: Normalization,
        provenance: Provenance,
    ) -> Result<Self> {
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::domain("curve distances must be strictly increasing"));
            }
        }
        if samples.iter().any(|&(_, v)| !(v > 0.0)) {
            return Err(Error::domain("curve values must be positive"));
        }
        Ok(Self {
            samples,
            normalization,
            provenance,
        })
    }
}

/// Plotting normalization N₀ = ε₀/(4π m_eff) × 10¹³.
pub fn n0(params: &OscillatorParams) -> f64 {
    EPSILON_0 / (4.0 * std::f64::consts::PI * params.effective_mass) * 1e13
}

fn check_distance(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!("separation must be positive, got {d}")));
    }
    Ok(())
}

/// Telescoping geometric sum Σᵢ Rᵢ [1/(d+z_{i-1})² − 1/(d+zᵢ)²], 1/m.
/// This carries all the distance dependence; coefficients and force
/// gradients are constant multiples of it.
pub fn telescoping_sum(d: f64, profile: &SurfaceProfile) -> Result<f64> {
    check_distance(d)?;
    let mut sum = 0.0;
    for seg in profile.segments() {
        let lo = 1.0 / ((d + seg.start_height) * (d + seg.start_height));
        let hi = match seg.end_height {
            Some(z) => 1.0 / ((d + z) * (d + z)),
            None => 0.0,
        };
        sum += seg.curvature_radius * (lo - hi);
    }
    Ok(sum)
}

/// Perfect-sphere coefficient k(d) = ε₀R/(4π m_eff d²), 1/(m² s²·V²)
/// in the ν² = ν₀² − k(V−V_c)² sense.
pub fn k_el_perfect(d: f64, radius: f64, params: &OscillatorParams) -> Result<f64> {
    check_distance(d)?;
    if !(radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    Ok(EPSILON_0 * radius / (4.0 * std::f64::consts::PI * params.effective_mass * d * d))
}

/// Piecewise-profile coefficient (paraxial closed form).
pub fn k_el_piecewise(d: f64, profile: &SurfaceProfile, params: &OscillatorParams) -> Result<f64> {
    let sum = telescoping_sum(d, profile)?;
    Ok(EPSILON_0 / (4.0 * std::f64::consts::PI * params.effective_mass) * sum)
}

/// Reference curve with exponent −1.7 pinned to the perfect-sphere law
/// at d = d0: ε₀R/(4π m_eff d0^0.3 d^1.7).
pub fn k_el_reference_17(d: f64, radius: f64, d0: f64, params: &OscillatorParams) -> Result<f64> {
    check_distance(d)?;
    check_distance(d0)?;
    if !(radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    Ok(EPSILON_0 * radius
        / (4.0 * std::f64::consts::PI * params.effective_mass * d0.powf(0.3) * d.powf(1.7)))
}

/// PFA coefficient by adaptive quadrature of 2∫₀^∞ r/(d+z(r))³ dr, split
/// at the radial breakpoints. The unbounded outer segment is integrated
/// analytically in the appropriate sagitta variables.
pub fn k_el_quadrature(
    d: f64,
    profile: &SurfaceProfile,
    params: &OscillatorParams,
    rel_tol: f64,
) -> Result<f64> {
    check_distance(d)?;
    if !(rel_tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {rel_tol}")));
    }
    let segments = profile.segments();
    let bp = profile.breakpoints()?;
    let mut total = 0.0;
    // finite segments: numeric quadrature in r
    for (i, win) in bp.radii.windows(2).enumerate() {
        let _ = i;
        let f = |r: f64| {
            let z = profile.height_at(r).expect("r within validated range");
            2.0 * r / ((d + z) * (d + z) * (d + z))
        };
        total += quad::integrate(&f, win[0], win[1], rel_tol)?;
    }
    // unbounded outer segment: analytic tail
    let last = segments.last().unwrap();
    let z_last = last.start_height;
    let r_big = last.curvature_radius;
    let tail = match profile.sagitta_mode() {
        // paraxial: r dr = R dz, so 2∫ r/(d+z)³ dr = R/(d+z_last)²
        SagittaMode::Paraxial => r_big / ((d + z_last) * (d + z_last)),
        // exact: with A = apex-to-center height, r dr = (A − z) dz and
        // 2∫_{z_last}^{A} (A−z)/(d+z)³ dz has a closed form
        SagittaMode::Exact => {
            let r_inner = *bp.radii.last().unwrap();
            let a = z_last + (r_big * r_big - r_inner * r_inner).sqrt();
            let ad = a + d;
            let eval = |z: f64| ad / ((d + z) * (d + z)) - 2.0 / (d + z);
            eval(z_last) - eval(a)
        }
    };
    total += tail;
    Ok(EPSILON_0 / (4.0 * std::f64::consts::PI * params.effective_mass) * total)
}

/// Force gradient magnitude F′(d) = π ε₀ (V−V_c)² Σᵢ Rᵢ[…], N/m.
/// Equals 4π² m_eff (V−V_c)² × k(d); the effective mass cancels.
pub fn force_gradient(d: f64, profile: &SurfaceProfile, voltage: &VoltageState) -> Result<f64> {
    let sum = telescoping_sum(d, profile)?;
    let dv = voltage.difference();
    Ok(std::f64::consts::PI * EPSILON_0 * dv * dv * sum)
}

/// Logarithmically spaced grid, inclusive of both ends.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(Error::domain(format!(
            "log grid needs 0 < lo < hi and n ≥ 2, got [{lo}, {hi}], n = {n}"
        )));
    }
    let (la, lb) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect())
}

/// Sample the closed-form coefficient over a distance grid.
pub fn sample_curve(
    profile: &SurfaceProfile,
    d_grid: &[f64],
    normalization: Normalization,
    params: &OscillatorParams,
) -> Result<ForceGradientCurve> {
    let scale = match normalization {
        Normalization::Si => 1.0,
        Normalization::N0Normalized => 1.0 / n0(params),
    };
    let samples = d_grid
        .iter()
        .map(|&d| Ok((d, k_el_piecewise(d, profile, params)? * scale)))
        .collect::<Result<Vec<_>>>()?;
    ForceGradientCurve::new(samples, normalization, Provenance::ClosedForm)
}
