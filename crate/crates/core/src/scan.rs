//! Grid scan over imperfection-model parameters, mapping geometry to the
//! effective power-law exponent of k(d) within a fit window.

use serde::{Deserialize, Serialize};

use crate::analysis::fit_exponent;
use crate::error::{Error, Result};
use crate::pfa::{self, OscillatorParams};
use crate::profile::{SagittaMode, SurfaceProfile};

/// Parameter grid for three-segment profiles: bubble radius R_CD and
/// height h, flattened-sector multiplier R_AB/R and height H, around a
/// fixed global radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub global_radius: f64,
    pub bubble_radius: Vec<f64>,
    pub bubble_height: Vec<f64>,
    pub sector_multiplier: Vec<f64>,
    pub sector_height: Vec<f64>,
}

impl ScanGrid {
    /// Linearly spaced grid over the stated parameter ranges.
    pub fn from_ranges(
        global_radius: f64,
        bubble_radius: (f64, f64, usize),
        bubble_height: (f64, f64, usize),
        sector_multiplier: (f64, f64, usize),
        sector_height: (f64, f64, usize),
    ) -> Result<Self> {
        let lin = |(lo, hi, n): (f64, f64, usize)| -> Result<Vec<f64>> {
            if !(lo > 0.0 && hi >= lo) || n == 0 {
                return Err(Error::domain(format!(
                    "invalid scan range [{lo}, {hi}] with {n} steps"
                )));
            }
            if n == 1 {
                return Ok(vec![lo]);
            }
            Ok((0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect())
        };
        Ok(Self {
            global_radius,
            bubble_radius: lin(bubble_radius)?,
            bubble_height: lin(bubble_height)?,
            sector_multiplier: lin(sector_multiplier)?,
            sector_height: lin(sector_height)?,
        })
    }
}

/// One scan row: the profile parameters and the fitted exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub bubble_radius_m: f64,
    pub bubble_height_m: f64,
    pub sector_multiplier: f64,
    pub sector_height_m: f64,
    pub alpha: f64,
    pub alpha_stderr: f64,
}

/// Scan the grid, fitting the exponent of each profile's closed-form
/// k(d) over `window`. Invalid geometry combinations are skipped with a
/// log entry. Rows are sorted by alpha.
pub fn scan_profiles(
    grid: &ScanGrid,
    window: (f64, f64),
    params: &OscillatorParams,
) -> Result<Vec<ScanRow>> {
    let d_grid = pfa::log_spaced(window.0, window.1, 20)?;
    let mut rows = Vec::new();
    for &r_cd in &grid.bubble_radius {
        for &h in &grid.bubble_height {
            for &mult in &grid.sector_multiplier {
                for &hh in &grid.sector_height {
                    let r_ab = mult * grid.global_radius;
                    let profile = match SurfaceProfile::piecewise_from_ends(
                        &[
                            (r_cd, Some(h)),
                            (r_ab, Some(h + hh)),
                            (grid.global_radius, None),
                        ],
                        SagittaMode::Paraxial,
                    ) {
                        Ok(p) => p,
                        Err(e) => {
                            log::warn!(
                                "skipping R_CD={r_cd:.3e}, h={h:.3e}, mult={mult}, H={hh:.3e}: {e}"
                            );
                            continue;
                        }
                    };
                    let samples: Result<Vec<(f64, f64)>> = d_grid
                        .iter()
                        .map(|&d| Ok((d, pfa::k_el_piecewise(d, &profile, params)?)))
                        .collect();
                    let samples = match samples {
                        Ok(s) if s.iter().all(|&(_, k)| k > 0.0) => s,
                        _ => {
                            log::warn!(
                                "skipping R_CD={r_cd:.3e}, h={h:.3e}, mult={mult}, H={hh:.3e}: \
                                 nonpositive coefficient in window"
                            );
                            continue;
                        }
                    };
                    let fit = fit_exponent(&samples, window)?;
                    rows.push(ScanRow {
                        bubble_radius_m: r_cd,
                        bubble_height_m: h,
                        sector_multiplier: mult,
                        sector_height_m: hh,
                        alpha: fit.alpha,
                        alpha_stderr: fit.alpha_stderr,
                    });
                }
            }
        }
    }
    rows.sort_by(|a, b| a.alpha.partial_cmp(&b.alpha).unwrap());
    Ok(rows)
}
