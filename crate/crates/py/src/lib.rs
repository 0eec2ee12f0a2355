//! Python bindings: surface profiles, force-gradient coefficients, the
//! image-charge oracle, synthetic calibration sequences, and the fitting
//! routines, exposed as the `spcal_py` module.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spcal::analysis::{self, ParabolaFitResult};
use spcal::oracle::series;
use spcal::pfa;
use spcal::simulate::{self, CalibrationPoint, NoiseSpec};
use spcal::{Normalization, OscillatorParams, SagittaMode, SurfaceProfile, VoltageState};

fn err(e: spcal::Error) -> PyErr {
    match e {
        spcal::Error::Numeric(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Axisymmetric lens surface: a perfect sphere or contiguous spherical
/// segments stacked in height.
#[pyclass(name = "SurfaceProfile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProfile {
    inner: SurfaceProfile,
}

#[pymethods]
impl PyProfile {
    /// The reference imperfect lens: 30 um bubble to 8 nm, flattened
    /// sector to 258 nm, then the 30.9 mm global sphere.
    #[staticmethod]
    fn fig1() -> Self {
        Self {
            inner: SurfaceProfile::fig1(),
        }
    }

    #[staticmethod]
    fn perfect(radius: f64) -> PyResult<Self> {
        Ok(Self {
            inner: SurfaceProfile::perfect_sphere(radius).map_err(err)?,
        })
    }

    /// Build from (curvature_radius_m, end_height_m | None) pairs; a None
    /// end height marks the unbounded outer segment.
    #[staticmethod]
    #[pyo3(signature = (segments, exact_sagitta = false))]
    fn piecewise(segments: Vec<(f64, Option<f64>)>, exact_sagitta: bool) -> PyResult<Self> {
        let mode = if exact_sagitta {
            SagittaMode::Exact
        } else {
            SagittaMode::Paraxial
        };
        Ok(Self {
            inner: SurfaceProfile::piecewise_from_ends(&segments, mode).map_err(err)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: SurfaceProfile::from_json(text).map_err(err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn global_radius(&self) -> f64 {
        self.inner.global_radius()
    }

    fn is_perfect_sphere(&self) -> bool {
        self.inner.is_perfect_sphere()
    }

    /// Surface height above the apex at radial coordinate r, meters.
    fn height_at(&self, r: f64) -> PyResult<f64> {
        self.inner.height_at(r).map_err(err)
    }

    /// Radial segment boundaries, including r = 0.
    fn breakpoints(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.breakpoints().map_err(err)?.radii)
    }

    fn __repr__(&self) -> String {
        format!(
            "SurfaceProfile({} segments, R = {:.4e} m)",
            self.inner.segments().len(),
            self.inner.global_radius()
        )
    }
}

/// Cantilever parameters: effective mass (kg) and rest frequency (Hz).
#[pyclass(name = "OscillatorParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyOscillator {
    inner: OscillatorParams,
}

#[pymethods]
impl PyOscillator {
    #[new]
    #[pyo3(signature = (effective_mass = 1e-9, rest_frequency = 700.0))]
    fn new(effective_mass: f64, rest_frequency: f64) -> PyResult<Self> {
        Ok(Self {
            inner: OscillatorParams::new(effective_mass, rest_frequency).map_err(err)?,
        })
    }

    #[getter]
    fn effective_mass(&self) -> f64 {
        self.inner.effective_mass
    }

    #[getter]
    fn rest_frequency(&self) -> f64 {
        self.inner.rest_frequency
    }
}

/// Ideal-sphere coefficient eps0 R / (4 pi m_eff d^2), 1/(s^2 V^2) scale.
#[pyfunction]
fn k_el_perfect(d: f64, radius: f64, params: &PyOscillator) -> PyResult<f64> {
    pfa::k_el_perfect(d, radius, &params.inner).map_err(err)
}

/// Piecewise-profile coefficient (paraxial closed form).
#[pyfunction]
fn k_el_piecewise(d: f64, profile: &PyProfile, params: &PyOscillator) -> PyResult<f64> {
    pfa::k_el_piecewise(d, &profile.inner, &params.inner).map_err(err)
}

/// Adaptive-quadrature coefficient for any profile and sagitta mode.
#[pyfunction]
#[pyo3(signature = (d, profile, params, tol = 1e-8))]
fn k_el_quadrature(d: f64, profile: &PyProfile, params: &PyOscillator, tol: f64) -> PyResult<f64> {
    pfa::k_el_quadrature(d, &profile.inner, &params.inner, tol).map_err(err)
}

/// Anomalous d^-1.7 reference pinned to the ideal law at d0.
#[pyfunction]
fn k_el_reference_17(d: f64, radius: f64, d0: f64, params: &PyOscillator) -> PyResult<f64> {
    pfa::k_el_reference_17(d, radius, d0, &params.inner).map_err(err)
}

/// Electrostatic force gradient, N/m, for applied and contact potentials.
#[pyfunction]
fn force_gradient(d: f64, profile: &PyProfile, applied: f64, contact: f64) -> PyResult<f64> {
    pfa::force_gradient(d, &profile.inner, &VoltageState { applied, contact }).map_err(err)
}

/// Plot normalization N0 = eps0/(4 pi m_eff) x 10^13.
#[pyfunction]
fn n0(params: &PyOscillator) -> f64 {
    pfa::n0(&params.inner)
}

/// Exact sphere-plane capacitance from the image-charge series, F.
#[pyfunction]
#[pyo3(signature = (radius, d, tol = 1e-12))]
fn exact_capacitance(radius: f64, d: f64, tol: f64) -> PyResult<f64> {
    Ok(series::exact_capacitance(radius, d, tol).map_err(err)?.capacitance)
}

/// Exact force gradient from the series, N/m, at gap ratio d/R.
#[pyfunction]
#[pyo3(signature = (radius, d_over_r, applied, contact, tol = 1e-12))]
fn exact_force_gradient(
    radius: f64,
    d_over_r: f64,
    applied: f64,
    contact: f64,
    tol: f64,
) -> PyResult<f64> {
    let v = VoltageState { applied, contact };
    Ok(series::exact_force_gradient(radius, d_over_r, &v, tol)
        .map_err(err)?
        .0)
}

fn fit_to_dict<'py>(py: Python<'py>, f: &ParabolaFitResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("distance_m", f.distance_m)?;
    d.set_item("vc", f.vc_hat)?;
    d.set_item("vc_stderr", f.vc_stderr)?;
    d.set_item("k", f.k_hat)?;
    d.set_item("k_stderr", f.k_stderr)?;
    d.set_item("nu0", f.nu0_hat)?;
    d.set_item("nu0_stderr", f.nu0_stderr)?;
    d.set_item("residual_rms", f.residual_rms)?;
    Ok(d)
}

/// Parabola calibration of one voltage sweep: points are
/// (distance_m, voltage_V, frequency_Hz) at a single distance.
#[pyfunction]
fn fit_parabola<'py>(
    py: Python<'py>,
    points: Vec<(f64, f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let group: Vec<CalibrationPoint> = points
        .into_iter()
        .map(|(d, v, nu)| CalibrationPoint {
            commanded_distance: d,
            applied_voltage: v,
            measured_frequency: nu,
        })
        .collect();
    let fit = analysis::fit_parabola(&group).map_err(err)?;
    fit_to_dict(py, &fit)
}

/// Log-log power-law fit of (d, k) samples inside [dmin, dmax].
#[pyfunction]
fn fit_exponent<'py>(
    py: Python<'py>,
    samples: Vec<(f64, f64)>,
    dmin: f64,
    dmax: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let fit = analysis::fit_exponent(&samples, (dmin, dmax)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("alpha", fit.alpha)?;
    d.set_item("alpha_stderr", fit.alpha_stderr)?;
    d.set_item("amplitude", fit.amplitude)?;
    d.set_item("window", fit.window)?;
    d.set_item("n_points", fit.n_points)?;
    d.set_item("r_squared", fit.r_squared)?;
    Ok(d)
}

/// Generate a synthetic calibration sequence; returns
/// (distance_m, voltage_V, frequency_Hz) tuples.
#[pyfunction]
#[pyo3(signature = (profile, params, vc, d_grid, v_grid, sigma = 0.0, seed = 0))]
fn generate_sequence(
    profile: &PyProfile,
    params: &PyOscillator,
    vc: f64,
    d_grid: Vec<f64>,
    v_grid: Vec<f64>,
    sigma: f64,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let noise = NoiseSpec {
        frequency_noise_sigma: sigma,
        ..NoiseSpec::noiseless()
    };
    let seq = simulate::generate_sequence(
        &profile.inner,
        &params.inner,
        vc,
        &d_grid,
        &v_grid,
        &noise,
        seed,
    )
    .map_err(err)?;
    Ok(seq
        .points
        .into_iter()
        .map(|p| (p.commanded_distance, p.applied_voltage, p.measured_frequency))
        .collect())
}

/// Per-distance parabola fits plus the contact-potential summary for a
/// whole sequence of (distance_m, voltage_V, frequency_Hz) points.
#[pyfunction]
fn calibrate<'py>(
    py: Python<'py>,
    points: Vec<(f64, f64, f64)>,
) -> PyResult<Bound<'py, PyDict>> {
    let pts: Vec<CalibrationPoint> = points
        .into_iter()
        .map(|(d, v, nu)| CalibrationPoint {
            commanded_distance: d,
            applied_voltage: v,
            measured_frequency: nu,
        })
        .collect();
    let groups = simulate::group_by_distance(&pts);
    let fits: Result<Vec<_>, _> = groups
        .iter()
        .map(|(_, g)| analysis::fit_parabola(g))
        .collect();
    let fits = fits.map_err(err)?;
    let summary = analysis::vc_independence(&fits).map_err(err)?;
    let out = PyDict::new(py);
    let fit_dicts: Vec<_> = fits
        .iter()
        .map(|f| fit_to_dict(py, f))
        .collect::<PyResult<_>>()?;
    out.set_item("fits", fit_dicts)?;
    out.set_item("mean", summary.mean)?;
    out.set_item("sem", summary.sem)?;
    out.set_item("trend_slope", summary.trend_slope)?;
    out.set_item("trend_stderr", summary.trend_stderr)?;
    out.set_item("independent", summary.independent)?;
    out.set_item("summary_line", summary.summary_line())?;
    Ok(out)
}

/// Sample k(d) over a log-spaced grid; returns (d, k) tuples.
#[pyfunction]
#[pyo3(signature = (profile, dmin, dmax, points, params, normalized = true))]
fn sample_curve(
    profile: &PyProfile,
    dmin: f64,
    dmax: f64,
    points: usize,
    params: &PyOscillator,
    normalized: bool,
) -> PyResult<Vec<(f64, f64)>> {
    let grid = pfa::log_spaced(dmin, dmax, points).map_err(err)?;
    let norm = if normalized {
        Normalization::N0Normalized
    } else {
        Normalization::Si
    };
    let curve = pfa::sample_curve(&profile.inner, &grid, norm, &params.inner).map_err(err)?;
    Ok(curve.samples)
}

#[pymodule]
fn spcal_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProfile>()?;
    m.add_class::<PyOscillator>()?;
    m.add_function(wrap_pyfunction!(k_el_perfect, m)?)?;
    m.add_function(wrap_pyfunction!(k_el_piecewise, m)?)?;
    m.add_function(wrap_pyfunction!(k_el_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(k_el_reference_17, m)?)?;
    m.add_function(wrap_pyfunction!(force_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(n0, m)?)?;
    m.add_function(wrap_pyfunction!(exact_capacitance, m)?)?;
    m.add_function(wrap_pyfunction!(exact_force_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(fit_parabola, m)?)?;
    m.add_function(wrap_pyfunction!(fit_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(generate_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_curve, m)?)?;
    Ok(())
}
