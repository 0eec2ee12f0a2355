//! Independent electrostatic references used to validate the proximity
//! force approximation: the exact sphere-plane image-charge capacitance
//! series (perfect spheres at any gap) and an axisymmetric
//! finite-difference Laplace solver (arbitrary profiles at moderate
//! gaps). Together the two bracket the PFA's validity range.

pub mod fd;
pub mod series;

pub use fd::{fd_solve, FdGrid, FdSolution};
pub use series::{exact_capacitance, exact_force_gradient, GradientMethod, SeriesResult};
