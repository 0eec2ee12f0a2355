//! Axisymmetric lens surface profiles.
//!
//! A profile is either a perfect sphere of a single curvature radius or a
//! stack of spherical segments with distinct local curvature radii, as in
//! the imperfect-lens model: a small bubble at the apex, a flattened
//! sector of larger curvature radius around it, and the global sphere
//! outside. Heights are measured from the lens's lowest point; the last
//! segment extends upward without bound.
//!
//! Profiles are value objects, validated at construction and immutable
//! afterwards; all evaluations are pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the sagitta of each spherical segment is evaluated.
///
/// `Paraxial` uses z = r²/(2R), under which the piecewise closed forms are
/// exact; `Exact` stacks true circular arcs and quantifies the paraxial
/// approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SagittaMode {
    Paraxial,
    Exact,
}

/// One spherical segment of a piecewise profile. `end_height == None`
/// marks the unbounded outermost segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalSegment {
    /// Local curvature radius, m.
    pub curvature_radius: f64,
    /// Height z at the segment's inner boundary, m.
    pub start_height: f64,
    /// Height z at the segment's outer boundary, m; `None` = unbounded.
    pub end_height: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileVariant {
    PerfectSphere { radius: f64 },
    PiecewiseSpherical { segments: Vec<SphericalSegment> },
}

/// Axisymmetric lens height function z(r), z(0) = 0, non-decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceProfile {
    variant: ProfileVariant,
    sagitta_mode: SagittaMode,
}

/// Radial coordinates r_i at which each segment boundary height is
/// reached, including r_0 = 0. Strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBreakpoints {
    pub radii: Vec<f64>,
}

/// Global lens radius of the reference imperfect-lens model, m.
pub const FIG1_GLOBAL_RADIUS: f64 = 0.0309;
/// Bubble curvature radius at the apex, m.
pub const FIG1_BUBBLE_RADIUS: f64 = 30e-6;
/// Bubble height h, m.
pub const FIG1_BUBBLE_HEIGHT: f64 = 8e-9;
/// Flattened-sector height H, m.
pub const FIG1_SECTOR_HEIGHT: f64 = 250e-9;
/// Flattened-sector curvature multiplier: R_AB = 1.6 R exactly.
pub const FIG1_SECTOR_MULTIPLIER: f64 = 1.6;

impl SurfaceProfile {
    /// Perfect sphere of the given radius; paraxial sagitta by default.
    pub fn perfect_sphere(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::domain(format!(
                "perfect sphere radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Self {
            variant: ProfileVariant::PerfectSphere { radius },
            sagitta_mode: SagittaMode::Paraxial,
        })
    }

    /// Piecewise-spherical profile from contiguous segments.
    pub fn piecewise(segments: Vec<SphericalSegment>, sagitta_mode: SagittaMode) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::domain("profile needs at least one segment"));
        }
        if segments[0].start_height != 0.0 {
            return Err(Error::domain(format!(
                "first segment must start at height 0, got {}",
                segments[0].start_height
            )));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.curvature_radius > 0.0) || !seg.curvature_radius.is_finite() {
                return Err(Error::domain(format!(
                    "segment {i}: curvature radius must be positive, got {}",
                    seg.curvature_radius
                )));
            }
            let last = i == segments.len() - 1;
            match seg.end_height {
                None if !last => {
                    return Err(Error::domain(format!(
                        "segment {i}: only the last segment may be unbounded"
                    )))
                }
                Some(end) if !(end > seg.start_height) => {
                    return Err(Error::domain(format!(
                        "segment {i}: end height {end} must exceed start height {}",
                        seg.start_height
                    )))
                }
                _ => {}
            }
            if !last {
                let next = &segments[i + 1];
                if seg.end_height != Some(next.start_height) {
                    return Err(Error::domain(format!(
                        "segments {i} and {} are not contiguous",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            variant: ProfileVariant::PiecewiseSpherical { segments },
            sagitta_mode,
        })
    }

    /// Build a piecewise profile from (curvature radius, end height)
    /// pairs; start heights are implied by contiguity.
    pub fn piecewise_from_ends(
        pairs: &[(f64, Option<f64>)],
        sagitta_mode: SagittaMode,
    ) -> Result<Self> {
        let mut segments = Vec::with_capacity(pairs.len());
        let mut start = 0.0;
        for &(radius, end) in pairs {
            segments.push(SphericalSegment {
                curvature_radius: radius,
                start_height: start,
                end_height: end,
            });
            if let Some(end) = end {
                start = end;
            }
        }
        Self::piecewise(segments, sagitta_mode)
    }

    /// The reference imperfect-lens model: a 30 μm bubble of height 8 nm
    /// at the apex, a flattened sector of curvature radius 1.6R up to
    /// height 258 nm, and the global R = 30.9 mm sphere beyond.
    pub fn fig1() -> Self {
        Self::piecewise_from_ends(
            &[
                (FIG1_BUBBLE_RADIUS, Some(FIG1_BUBBLE_HEIGHT)),
                (
                    FIG1_SECTOR_MULTIPLIER * FIG1_GLOBAL_RADIUS,
                    Some(FIG1_BUBBLE_HEIGHT + FIG1_SECTOR_HEIGHT),
                ),
                (FIG1_GLOBAL_RADIUS, None),
            ],
            SagittaMode::Paraxial,
        )
        .expect("fig1 parameters are valid")
    }

    pub fn with_sagitta_mode(mut self, mode: SagittaMode) -> Self {
        self.sagitta_mode = mode;
        self
    }

    pub fn sagitta_mode(&self) -> SagittaMode {
        self.sagitta_mode
    }

    pub fn variant(&self) -> &ProfileVariant {
        &self.variant
    }

    pub fn is_perfect_sphere(&self) -> bool {
        matches!(self.variant, ProfileVariant::PerfectSphere { .. })
    }

    /// Segments of the profile; a perfect sphere is the degenerate single
    /// unbounded segment.
    pub fn segments(&self) -> Vec<SphericalSegment> {
        match &self.variant {
            ProfileVariant::PerfectSphere { radius } => vec![SphericalSegment {
                curvature_radius: *radius,
                start_height: 0.0,
                end_height: None,
            }],
            ProfileVariant::PiecewiseSpherical { segments } => segments.clone(),
        }
    }

    /// Curvature radius of the outermost (unbounded) segment, m.
    pub fn global_radius(&self) -> f64 {
        match &self.variant {
            ProfileVariant::PerfectSphere { radius } => *radius,
            ProfileVariant::PiecewiseSpherical { segments } => {
                segments.last().unwrap().curvature_radius
            }
        }
    }

    /// Radial breakpoints r_i where each finite boundary height is
    /// reached, in the profile's sagitta mode. r_0 = 0.
    pub fn breakpoints(&self) -> Result<RadialBreakpoints> {
        let segments = self.segments();
        let mut radii = vec![0.0];
        for seg in &segments {
            let Some(end) = seg.end_height else { break };
            let r_prev = *radii.last().unwrap();
            let dz = end - seg.start_height;
            let r = match self.sagitta_mode {
                SagittaMode::Paraxial => {
                    (r_prev * r_prev + 2.0 * seg.curvature_radius * dz).sqrt()
                }
                SagittaMode::Exact => {
                    let rr = seg.curvature_radius;
                    let root = (rr * rr - r_prev * r_prev).sqrt() - dz;
                    if root < 0.0 {
                        return Err(Error::domain(format!(
                            "segment height {dz} exceeds the hemisphere of radius {rr}"
                        )));
                    }
                    (rr * rr - root * root).sqrt()
                }
            };
            radii.push(r);
        }
        Ok(RadialBreakpoints { radii })
    }

    /// Largest finite radial breakpoint; 0 for a perfect sphere.
    pub fn max_finite_breakpoint(&self) -> Result<f64> {
        Ok(*self.breakpoints()?.radii.last().unwrap())
    }

    /// Lens height z(r) above the apex, m.
    pub fn height_at(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::domain(format!("r must be non-negative, got {r}")));
        }
        let segments = self.segments();
        let bp = self.breakpoints()?;
        // locate the segment containing r
        let mut i = segments.len() - 1;
        for (j, window) in bp.radii.windows(2).enumerate() {
            if r <= window[1] {
                i = j;
                break;
            }
        }
        let seg = &segments[i];
        let r_inner = bp.radii[i];
        match self.sagitta_mode {
            SagittaMode::Paraxial => {
                Ok(seg.start_height + (r * r - r_inner * r_inner) / (2.0 * seg.curvature_radius))
            }
            SagittaMode::Exact => {
                let rr = seg.curvature_radius;
                if r >= rr {
                    return Err(Error::domain(format!(
                        "r = {r} exceeds the local curvature radius {rr} in exact mode"
                    )));
                }
                let inner = (rr * rr - r_inner * r_inner).sqrt();
                let here = (rr * rr - r * r).sqrt();
                Ok(seg.start_height + inner - here)
            }
        }
    }
}

/// Paraxial sector height of a perfect sphere over a given radial extent:
/// r²/(2R). Used to compare an imperfection model against the perfect
/// sphere (flattening metric).
pub fn perfect_sphere_sector_height(radius: f64, radial_extent: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {radius}")));
    }
    if !(radial_extent >= 0.0) {
        return Err(Error::domain(format!(
            "radial extent must be non-negative, got {radial_extent}"
        )));
    }
    Ok(radial_extent * radial_extent / (2.0 * radius))
}

// ---------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentJson {
    curvature_radius_m: f64,
    end_height_m: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ProfileJson {
    PerfectSphere {
        #[serde(skip_serializing_if = "Option::is_none")]
        schema_version: Option<u32>,
        radius_m: f64,
    },
    PiecewiseSpherical {
        #[serde(skip_serializing_if = "Option::is_none")]
        schema_version: Option<u32>,
        sagitta_mode: SagittaMode,
        segments: Vec<SegmentJson>,
    },
}

pub const PROFILE_SCHEMA_VERSION: u32 = 1;

impl SurfaceProfile {
    pub fn to_json(&self) -> String {
        let doc = match &self.variant {
            ProfileVariant::PerfectSphere { radius } => ProfileJson::PerfectSphere {
                schema_version: Some(PROFILE_SCHEMA_VERSION),
                radius_m: *radius,
            },
            ProfileVariant::PiecewiseSpherical { segments } => ProfileJson::PiecewiseSpherical {
                schema_version: Some(PROFILE_SCHEMA_VERSION),
                sagitta_mode: self.sagitta_mode,
                segments: segments
                    .iter()
                    .map(|s| SegmentJson {
                        curvature_radius_m: s.curvature_radius,
                        end_height_m: s.end_height,
                    })
                    .collect(),
            },
        };
        serde_json::to_string_pretty(&doc).expect("profile serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ProfileJson = serde_json::from_str(text).map_err(|e| {
            Error::config(format!(
                "invalid profile JSON at line {}, column {}: {e}",
                e.line(),
                e.column()
            ))
        })?;
        match doc {
            ProfileJson::PerfectSphere { radius_m, .. } => Self::perfect_sphere(radius_m),
            ProfileJson::PiecewiseSpherical {
                sagitta_mode,
                segments,
                ..
            } => {
                let pairs: Vec<(f64, Option<f64>)> = segments
                    .iter()
                    .map(|s| (s.curvature_radius_m, s.end_height_m))
                    .collect();
                Self::piecewise_from_ends(&pairs, sagitta_mode)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fig1_matches_stated_parameters() {
        let p = SurfaceProfile::fig1();
        let segs = p.segments();
        assert_eq!(segs.len(), 3);
        assert_eq!(segs[0].curvature_radius, 30e-6);
        assert_eq!(segs[0].end_height, Some(8e-9));
        // exact multiple 1.6R = 49.44 mm, not the rounded 49.4 mm
        assert_relative_eq!(segs[1].curvature_radius, 0.049_44, max_relative = 1e-12);
        assert_eq!(segs[1].end_height, Some(258e-9));
        assert_eq!(segs[2].curvature_radius, 0.0309);
        assert_eq!(segs[2].end_height, None);
    }

    #[test]
    fn paraxial_breakpoints_satisfy_quadratic_identity() {
        let p = SurfaceProfile::fig1();
        let bp = p.breakpoints().unwrap();
        assert_eq!(bp.radii.len(), 3);
        // r_1 = sqrt(2 R_CD h) ≈ 0.693 μm
        let r1 = (2.0 * 30e-6 * 8e-9_f64).sqrt();
        assert_relative_eq!(bp.radii[1], r1, max_relative = 1e-12);
        assert_relative_eq!(p.height_at(r1).unwrap(), 8e-9, max_relative = 1e-12);
        // r_2² = r_1² + 2 R_AB H ≈ (157.2 μm)²
        let r2 = (r1 * r1 + 2.0 * 1.6 * 0.0309 * 250e-9).sqrt();
        assert_relative_eq!(bp.radii[2], r2, max_relative = 1e-12);
        assert_relative_eq!(bp.radii[2], 157.2e-6, max_relative = 1e-3);
        assert_relative_eq!(p.height_at(r2).unwrap(), 258e-9, max_relative = 1e-12);
    }

    #[test]
    fn perfect_sphere_apex_touches() {
        let p = SurfaceProfile::perfect_sphere(0.0309).unwrap();
        assert_eq!(p.height_at(0.0).unwrap(), 0.0);
    }

    #[test]
    fn sector_height_reproduces_htilde_and_flattening() {
        let p = SurfaceProfile::fig1();
        let r2 = p.max_finite_breakpoint().unwrap();
        let htilde = perfect_sphere_sector_height(0.0309, r2).unwrap();
        assert!((htilde - 400e-9).abs() / 400e-9 < 0.01);
        let flattening = htilde - 250e-9;
        assert!((flattening - 150e-9).abs() / 150e-9 < 0.01);
        assert_eq!(perfect_sphere_sector_height(1.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn contiguity_and_monotonicity_on_sampled_grid() {
        for mode in [SagittaMode::Paraxial, SagittaMode::Exact] {
            let p = SurfaceProfile::fig1().with_sagitta_mode(mode);
            let r_max = 2.0 * p.max_finite_breakpoint().unwrap();
            let n = 10_000;
            let mut prev = -1.0;
            for i in 0..=n {
                let r = r_max * i as f64 / n as f64;
                let z = p.height_at(r).unwrap();
                assert!(z >= prev, "z(r) decreased at r={r} in {mode:?}");
                prev = z;
            }
            // continuity across breakpoints
            for &rb in &p.breakpoints().unwrap().radii[1..] {
                let lo = p.height_at(rb * (1.0 - 1e-12)).unwrap();
                let hi = p.height_at(rb * (1.0 + 1e-12)).unwrap();
                assert!((hi - lo).abs() < 1e-15, "jump at breakpoint {rb}");
            }
        }
    }

    #[test]
    fn paraxial_vs_exact_within_bound() {
        let par = SurfaceProfile::fig1();
        let ex = SurfaceProfile::fig1().with_sagitta_mode(SagittaMode::Exact);
        for i in 1..=500 {
            let r = 200e-6 * i as f64 / 500.0;
            let zp = par.height_at(r).unwrap();
            let ze = ex.height_at(r).unwrap();
            assert!((zp - ze).abs() / zp < 1e-4, "paraxial error too large at r={r}");
        }
    }

    #[test]
    fn exact_mode_rejects_radius_beyond_curvature() {
        let p = SurfaceProfile::perfect_sphere(1e-3)
            .unwrap()
            .with_sagitta_mode(SagittaMode::Exact);
        assert!(p.height_at(2e-3).is_err());
    }

    #[test]
    fn construction_rejects_bad_segments() {
        // non-contiguous
        assert!(SurfaceProfile::piecewise(
            vec![
                SphericalSegment {
                    curvature_radius: 1e-5,
                    start_height: 0.0,
                    end_height: Some(1e-9),
                },
                SphericalSegment {
                    curvature_radius: 1e-2,
                    start_height: 2e-9,
                    end_height: None,
                },
            ],
            SagittaMode::Paraxial,
        )
        .is_err());
        // unbounded segment not last
        assert!(SurfaceProfile::piecewise_from_ends(
            &[(1e-5, None), (1e-2, Some(1e-9))],
            SagittaMode::Paraxial,
        )
        .is_err());
        // negative radius
        assert!(SurfaceProfile::perfect_sphere(-1.0).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = SurfaceProfile::fig1();
        let q = SurfaceProfile::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);

        let schema = r#"{"type":"piecewise_spherical","sagitta_mode":"paraxial",
            "segments":[{"curvature_radius_m":3.0e-5,"end_height_m":8.0e-9},
                        {"curvature_radius_m":4.944e-2,"end_height_m":2.58e-7},
                        {"curvature_radius_m":3.09e-2,"end_height_m":null}]}"#;
        let q = SurfaceProfile::from_json(schema).unwrap();
        let (ps, qs) = (p.segments(), q.segments());
        assert_eq!(ps.len(), qs.len());
        for (a, b) in ps.iter().zip(qs.iter()) {
            // 1.6 · 30.9 mm differs from the JSON literal 4.944e-2 by one ulp
            assert_relative_eq!(a.curvature_radius, b.curvature_radius, max_relative = 1e-15);
            assert_eq!(a.start_height, b.start_height);
            assert_eq!(a.end_height, b.end_height);
        }

        let sphere = SurfaceProfile::from_json(r#"{"type":"perfect_sphere","radius_m":0.0309}"#)
            .unwrap();
        assert!(sphere.is_perfect_sphere());
    }

    #[test]
    fn json_rejects_unknown_keys_with_diagnostics() {
        let err = SurfaceProfile::from_json(r#"{"type":"perfect_sphere","radius_m":1.0,"bogus":2}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(err.to_string().contains("line"));
    }
}
