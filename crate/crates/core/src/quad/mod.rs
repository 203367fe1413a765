//! Quadrature, interpolation and extrapolation primitives.

pub mod chebyshev;
pub mod extrapolate;
pub mod filon;
pub mod gauss;
pub mod pv;

pub use chebyshev::{lobatto_points, Chebyshev};
pub use extrapolate::{neville_to_zero, Extrapolated};
pub use filon::FilonRule;
pub use gauss::{gauss_legendre, integrate_adaptive, integrate_real, GaussRule, Quadrature};
pub use pv::{principal_value, stieltjes_boundary};
