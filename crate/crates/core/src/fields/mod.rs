//! Grid, fields, spectral calculus, cylinders, and parabolic rescaling.

mod cylinder;
mod derived;
mod grid;
mod rescale;
mod spectral;

pub use cylinder::{
    check_span, integrate_cylinder, snapshots_in, sup_over_time, time_integral, time_sup,
    time_weights, BallMask, Cylinder, CylinderKind, Integrand,
};
pub use derived::{s_ln_s, Derived, EPS_FLOOR};
pub use grid::{Grid, ScalarField, VectorField};
pub use rescale::{dyadic_exponent, rescale_any, rescale_state};
pub use spectral::{divergence, gradient, laplacian, leray_project, Spectral, Spectrum};
