//! Exact sphere-plane capacitance via the classical image-charge series.
//!
//! C(d) = 4πε₀R sinh(μ) Σ_{n≥1} 1/sinh(nμ) with cosh(μ) = 1 + d/R.
//! The force gradient follows from F′(d) = ½(V−V_c)² C″(d), with C″
//! obtained by term-by-term analytic differentiation (preferred) or by
//! Richardson-extrapolated central differences for cross-checking.

use serde::{Deserialize, Serialize};

use crate::constants::EPSILON_0;
use crate::error::{Error, Result};
use crate::pfa::VoltageState;

const MAX_TERMS: usize = 20_000_000;
// sinh overflows near 710; beyond ~350 a term is < 1e-150 of the sum anyway
const ARG_CUTOFF: f64 = 350.0;

/// Converged capacitance series evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesResult {
    /// Sphere-plane capacitance, F.
    pub capacitance: f64,
    /// Number of series terms summed.
    pub terms_used: usize,
    /// Relative contribution of the last term.
    pub last_term_relative: f64,
}

fn check_args(radius: f64, d: f64) -> Result<f64> {
    if !(radius > 0.0) || !(d > 0.0) {
        return Err(Error::domain(format!(
            "radius and separation must be positive, got R = {radius}, d = {d}"
        )));
    }
    // cosh μ = 1 + d/R
    Ok(((1.0 + d / radius) + ((1.0 + d / radius).powi(2) - 1.0).sqrt()).ln())
}

/// Exact sphere-plane capacitance, summed until a term's relative
/// contribution drops below `tol`.
pub fn exact_capacitance(radius: f64, d: f64, tol: f64) -> Result<SeriesResult> {
    let mu = check_args(radius, d)?;
    let sinh_mu = mu.sinh();
    let mut sum = 0.0;
    let mut n = 1usize;
    let mut last_rel;
    loop {
        let arg = n as f64 * mu;
        if arg > ARG_CUTOFF {
            last_rel = 0.0;
            break;
        }
        let term = 1.0 / arg.sinh();
        sum += term;
        last_rel = term / sum;
        if last_rel < tol {
            break;
        }
        n += 1;
        if n > MAX_TERMS {
            return Err(Error::numeric(format!(
                "capacitance series needs more than {MAX_TERMS} terms at d/R = {:.3e}; \
                 use the PFA asymptotic regime instead",
                d / radius
            )));
        }
    }
    Ok(SeriesResult {
        capacitance: 4.0 * std::f64::consts::PI * EPSILON_0 * radius * sinh_mu * sum,
        terms_used: n,
        last_term_relative: last_rel,
    })
}

/// Second distance-derivative of the capacitance, F/m², by term-by-term
/// analytic differentiation of the image-charge series.
pub fn capacitance_second_derivative(radius: f64, d: f64, tol: f64) -> Result<f64> {
    let mu = check_args(radius, d)?;
    let s = mu.sinh();
    let c = mu.cosh();
    // dμ/dd and d²μ/dd² from cosh μ = 1 + d/R
    let dmu = 1.0 / (radius * s);
    let d2mu = -c / (radius * radius * s * s * s);
    let mut total = 0.0;
    let mut n = 1usize;
    loop {
        let nf = n as f64;
        let arg = nf * mu;
        if arg > ARG_CUTOFF {
            break;
        }
        let sn = arg.sinh();
        let cn = arg.cosh();
        // f_n(μ) = sinh μ / sinh nμ and its first two μ-derivatives
        let f1 = (c * sn - nf * s * cn) / (sn * sn);
        let f2 = s * (1.0 - nf * nf) / sn - 2.0 * nf * cn * (c * sn - nf * s * cn) / (sn * sn * sn);
        let term = f2 * dmu * dmu + f1 * d2mu;
        total += term;
        // the n = 1 term is identically zero; require a few terms before
        // testing convergence
        if n > 2 && term.abs() < tol * total.abs() {
            break;
        }
        n += 1;
        if n > MAX_TERMS {
            return Err(Error::numeric(format!(
                "capacitance derivative series needs more than {MAX_TERMS} terms at d/R = {:.3e}",
                d / radius
            )));
        }
    }
    Ok(4.0 * std::f64::consts::PI * EPSILON_0 * radius * total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMethod {
    AnalyticSeries,
    RichardsonFd,
}

/// Exact electrostatic force-gradient magnitude F′(d) = ½(V−V_c)²|C″(d)|.
pub fn exact_force_gradient(
    radius: f64,
    d: f64,
    voltage: &VoltageState,
    tol: f64,
) -> Result<(f64, GradientMethod)> {
    let cpp = capacitance_second_derivative(radius, d, tol)?;
    let dv = voltage.difference();
    Ok((0.5 * dv * dv * cpp.abs(), GradientMethod::AnalyticSeries))
}

/// Cross-check route: C″(d) by Richardson-extrapolated central
/// differences on the capacitance series.
pub fn capacitance_second_derivative_fd(radius: f64, d: f64, tol: f64) -> Result<f64> {
    let h = d * 1e-3;
    let second = |h: f64| -> Result<f64> {
        let cp = exact_capacitance(radius, d + h, tol)?.capacitance;
        let c0 = exact_capacitance(radius, d, tol)?.capacitance;
        let cm = exact_capacitance(radius, d - h, tol)?.capacitance;
        Ok((cp - 2.0 * c0 + cm) / (h * h))
    };
    let d1 = second(h)?;
    let d2 = second(h / 2.0)?;
    // O(h²) truncation: one Richardson step
    let extrapolated = (4.0 * d2 - d1) / 3.0;
    if !extrapolated.is_finite() {
        return Err(Error::numeric(
            "central differences on the capacitance series are unstable at this separation",
        ));
    }
    Ok(extrapolated)
}
