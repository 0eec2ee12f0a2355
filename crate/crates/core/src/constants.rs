//! Physical constants used across the crate.

/// Vacuum permittivity ε₀ in farad per meter (CODATA 2018).
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Fixed physical constants, bundled for configuration surfaces that
/// want them as a value rather than a crate-level constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Vacuum permittivity, F/m.
    pub epsilon0: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self { epsilon0: EPSILON_0 }
    }
}
