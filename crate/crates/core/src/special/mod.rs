//! Special functions: Γ, the Wright-type density ζ_α and the two-parameter
//! Mittag-Leffler function, plus the θ-quadrature oracles that tie them
//! together.

pub mod gamma;
pub mod mittag_leffler;
pub mod oracles;
pub mod wright;

pub use gamma::{gamma, ln_gamma};
pub use mittag_leffler::{
    mittag_leffler, ml_integral, ml_series, select_route, MittagLefflerParams, MlRoute,
};
pub use wright::{wright_moment, wright_pdf, DensityEval, WrightDensity};

use crate::error::Result;

/// E_{α,1}(z), the scalar action of S_α on an eigenmode.
pub fn ml_s(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler(MittagLefflerParams::new(alpha, 1.0, z))
}

/// E_{α,α}(z), the scalar action of T_α on an eigenmode.
pub fn ml_t(alpha: f64, z: f64) -> Result<f64> {
    mittag_leffler(MittagLefflerParams::new(alpha, alpha, z))
}
