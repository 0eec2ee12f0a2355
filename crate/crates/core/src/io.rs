//! File formats shared by the CLI and the library: curve CSV, sequence
//! CSV with JSON sidecar, fit reports, and FD solution export. All files
//! use SI base units with unit suffixes in column names, and floats are
//! written with 17 significant digits so that every read/write round
//! trip is lossless.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analysis::{ExponentFitResult, ParabolaFitResult, VcSummary};
use crate::error::{Error, Result};
use crate::oracle::fd::FdSolution;
use crate::pfa::{ForceGradientCurve, Normalization, Provenance};
use crate::simulate::{CalibrationPoint, CalibrationSequence, SequenceMetadata};

/// Full-precision float formatting (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(field: &str, line: usize, name: &str) -> Result<f64> {
    field.trim().parse::<f64>().map_err(|_| {
        Error::config(format!("line {line}: cannot parse {name} from {field:?}"))
    })
}

// ---------------------------------------------------------------------
// Curve CSV: d_m, k_value, normalization, provenance
// ---------------------------------------------------------------------

fn normalization_str(n: Normalization) -> &'static str {
    match n {
        Normalization::Si => "si",
        Normalization::N0Normalized => "n0_normalized",
    }
}

fn provenance_str(p: Provenance) -> &'static str {
    match p {
        Provenance::ClosedForm => "closed_form",
        Provenance::Quadrature => "quadrature",
        Provenance::OracleSeries => "oracle_series",
        Provenance::OracleFd => "oracle_fd",
    }
}

pub fn curve_to_csv(curve: &ForceGradientCurve) -> String {
    let mut out = String::from("d_m,k_value,normalization,provenance\n");
    for &(d, k) in &curve.samples {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(d),
            fmt_f64(k),
            normalization_str(curve.normalization),
            provenance_str(curve.provenance)
        );
    }
    out
}

pub fn curve_from_csv(text: &str) -> Result<ForceGradientCurve> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::config("empty curve CSV"))?;
    if header.trim() != "d_m,k_value,normalization,provenance" {
        return Err(Error::config(format!("unexpected curve CSV header: {header:?}")));
    }
    let mut samples = Vec::new();
    let mut normalization = Normalization::Si;
    let mut provenance = Provenance::ClosedForm;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::config(format!("line {n}: expected 4 fields, got {}", fields.len())));
        }
        samples.push((parse_f64(fields[0], n, "d_m")?, parse_f64(fields[1], n, "k_value")?));
        normalization = match fields[2].trim() {
            "si" => Normalization::Si,
            "n0_normalized" => Normalization::N0Normalized,
            other => return Err(Error::config(format!("line {n}: unknown normalization {other:?}"))),
        };
        provenance = match fields[3].trim() {
            "closed_form" => Provenance::ClosedForm,
            "quadrature" => Provenance::Quadrature,
            "oracle_series" => Provenance::OracleSeries,
            "oracle_fd" => Provenance::OracleFd,
            other => return Err(Error::config(format!("line {n}: unknown provenance {other:?}"))),
        };
    }
    ForceGradientCurve::new(samples, normalization, provenance)
}

// ---------------------------------------------------------------------
// Sequence CSV: seq_id, d_m, V_volt, nu_hz  (+ JSON sidecar)
// ---------------------------------------------------------------------

pub fn sequence_to_csv(seq: &CalibrationSequence, seq_id: &str) -> String {
    let mut out = String::from("seq_id,d_m,V_volt,nu_hz\n");
    for p in &seq.points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            seq_id,
            fmt_f64(p.commanded_distance),
            fmt_f64(p.applied_voltage),
            fmt_f64(p.measured_frequency)
        );
    }
    out
}

pub fn sequence_points_from_csv(text: &str) -> Result<Vec<CalibrationPoint>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::config("empty sequence CSV"))?;
    if header.trim() != "seq_id,d_m,V_volt,nu_hz" {
        return Err(Error::config(format!("unexpected sequence CSV header: {header:?}")));
    }
    let mut points = Vec::new();
    let mut bad_lines = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let n = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            bad_lines.push(n);
            continue;
        }
        let d = parse_f64(fields[1], n, "d_m");
        let v = parse_f64(fields[2], n, "V_volt");
        let nu = parse_f64(fields[3], n, "nu_hz");
        match (d, v, nu) {
            (Ok(d), Ok(v), Ok(nu)) if d > 0.0 && nu >= 0.0 => points.push(CalibrationPoint {
                commanded_distance: d,
                applied_voltage: v,
                measured_frequency: nu,
            }),
            _ => bad_lines.push(n),
        }
    }
    if !bad_lines.is_empty() {
        return Err(Error::config(format!(
            "malformed sequence rows at lines: {}",
            bad_lines
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        )));
    }
    if points.is_empty() {
        return Err(Error::config("sequence CSV contains no data rows"));
    }
    Ok(points)
}

/// Sidecar written next to a sequence CSV. With `blind`, the ground
/// truth (contact potential and noise spec) is omitted.
pub fn sequence_metadata_json(metadata: &SequenceMetadata, blind: bool) -> String {
    let mut m = metadata.clone();
    if blind {
        m.true_contact_potential = None;
        m.noise = None;
    }
    serde_json::to_string_pretty(&m).expect("metadata serialization cannot fail")
}

// ---------------------------------------------------------------------
// Fit reports
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub schema_version: u32,
    pub fits: Vec<ParabolaFitResult>,
    pub summary: VcSummary,
    pub summary_line: String,
}

pub fn fit_report_json(fits: &[ParabolaFitResult], summary: &VcSummary) -> String {
    let report = FitReport {
        schema_version: 1,
        fits: fits.to_vec(),
        summary: summary.clone(),
        summary_line: summary.summary_line(),
    };
    serde_json::to_string_pretty(&report).expect("report serialization cannot fail")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentReport {
    pub schema_version: u32,
    #[serde(flatten)]
    pub fit: ExponentFitResult,
}

pub fn exponent_report_json(fit: &ExponentFitResult) -> String {
    serde_json::to_string_pretty(&ExponentReport {
        schema_version: 1,
        fit: *fit,
    })
    .expect("report serialization cannot fail")
}

// ---------------------------------------------------------------------
// FD solution export: (r_m, z_m, potential_V) CSV + JSON sidecar
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FdSidecar {
    pub schema_version: u32,
    pub n_r: usize,
    pub n_z: usize,
    pub iterations: usize,
    pub residual: f64,
    pub capacitance_f: f64,
    pub capacitance_from_charge_f: f64,
    pub energy_j: f64,
}

pub fn fd_solution_to_csv(sol: &FdSolution) -> String {
    let mut out = String::from("r_m,z_m,potential_V\n");
    for (i, &r) in sol.r.iter().enumerate() {
        for (j, &z) in sol.z.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", fmt_f64(r), fmt_f64(z), fmt_f64(sol.node(i, j)));
        }
    }
    out
}

pub fn fd_sidecar_json(sol: &FdSolution) -> String {
    serde_json::to_string_pretty(&FdSidecar {
        schema_version: 1,
        n_r: sol.r.len(),
        n_z: sol.z.len(),
        iterations: sol.iterations,
        residual: sol.residual,
        capacitance_f: sol.capacitance,
        capacitance_from_charge_f: sol.capacitance_from_charge,
        energy_j: sol.energy,
    })
    .expect("sidecar serialization cannot fail")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfa::{log_spaced, sample_curve, OscillatorParams};
    use crate::profile::SurfaceProfile;
    use crate::simulate::{generate_sequence, NoiseSpec};
    use proptest::prelude::*;

    #[test]
    fn curve_round_trip_lossless() {
        let params = OscillatorParams::default();
        let grid = log_spaced(20e-9, 3e-6, 30).unwrap();
        let curve = sample_curve(
            &SurfaceProfile::fig1(),
            &grid,
            Normalization::N0Normalized,
            &params,
        )
        .unwrap();
        let back = curve_from_csv(&curve_to_csv(&curve)).unwrap();
        assert_eq!(curve, back);
    }

    #[test]
    fn sequence_round_trip_lossless() {
        let params = OscillatorParams::new(1e-6, 700.0).unwrap();
        let d_grid = log_spaced(100e-9, 1e-6, 4).unwrap();
        let v_grid: Vec<f64> = (0..9).map(|i| -0.1 + 0.025 * i as f64).collect();
        let noise = NoiseSpec {
            frequency_noise_sigma: 0.3,
            ..Default::default()
        };
        let seq = generate_sequence(
            &SurfaceProfile::fig1(),
            &params,
            0.015,
            &d_grid,
            &v_grid,
            &noise,
            5,
        )
        .unwrap();
        let back = sequence_points_from_csv(&sequence_to_csv(&seq, "s1")).unwrap();
        assert_eq!(seq.points, back);
    }

    #[test]
    fn malformed_rows_reported_with_line_numbers() {
        let text = "seq_id,d_m,V_volt,nu_hz\ns1,1e-7,0.1,700\ns1,not_a_number,0.1,700\ns1,1e-7,0.2\n";
        let err = sequence_points_from_csv(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('3') && msg.contains('4'), "message: {msg}");
    }

    #[test]
    fn empty_input_rejected() {
        assert!(sequence_points_from_csv("").is_err());
        assert!(sequence_points_from_csv("seq_id,d_m,V_volt,nu_hz\n").is_err());
        assert!(curve_from_csv("").is_err());
    }

    #[test]
    fn blind_sidecar_omits_ground_truth() {
        let params = OscillatorParams::new(1e-6, 700.0).unwrap();
        let d_grid = log_spaced(100e-9, 1e-6, 3).unwrap();
        let v_grid: Vec<f64> = (0..9).map(|i| -0.1 + 0.025 * i as f64).collect();
        let seq = generate_sequence(
            &SurfaceProfile::fig1(),
            &params,
            0.015,
            &d_grid,
            &v_grid,
            &NoiseSpec::noiseless(),
            5,
        )
        .unwrap();
        let open = sequence_metadata_json(&seq.metadata, false);
        let blind = sequence_metadata_json(&seq.metadata, true);
        assert!(open.contains("true_contact_potential"));
        assert!(!blind.contains("0.015"));
        let parsed: serde_json::Value = serde_json::from_str(&blind).unwrap();
        assert!(parsed["true_contact_potential"].is_null());
    }

    proptest! {
        #[test]
        fn float_format_round_trips(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let s = fmt_f64(x);
            let y: f64 = s.parse().unwrap();
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
