//! Electrostatic calibration toolkit for the sphere-plane geometry.
//!
//! Models how local deviations of a large spherical lens from perfect
//! sphericity turn the ideal d⁻² electrostatic force-gradient law into
//! anomalous effective power laws, and provides the calibration-analysis
//! machinery (parabola fits in voltage, contact-potential statistics,
//! power-law exponent estimation) together with independent electrostatic
//! oracles (exact image-charge series, axisymmetric finite-difference
//! Laplace solver) used to validate the proximity force approximation.

pub mod analysis;
pub mod constants;
pub mod error;
pub mod io;
pub mod oracle;
pub mod pfa;
pub mod profile;
pub mod quad;
pub mod scan;
pub mod simulate;

pub use error::{Error, Result};
pub use pfa::{ForceGradientCurve, Normalization, OscillatorParams, Provenance, VoltageState};
pub use profile::{SagittaMode, SphericalSegment, SurfaceProfile};
