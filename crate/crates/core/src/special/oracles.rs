//! Quadrature over the density ζ_α. These evaluate the operator families by
//! their defining θ-integrals and serve as independent checks of the
//! Mittag-Leffler shortcut used in production.

use super::wright::WrightDensity;
use crate::error::Result;
use crate::quadrature::{integrate, integrate_with_breaks, Tolerance};

fn tol() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-12,
        max_intervals: 4000,
    }
}

/// Upper integration limit past which ζ_α is below double precision.
pub fn density_support_end(alpha: f64) -> f64 {
    // tail ~ exp(-c θ^{1/(1-α)}) with c = (1-α) α^{α/(1-α)}
    let c = (1.0 - alpha) * alpha.powf(alpha / (1.0 - alpha));
    (60.0 / c).powf(1.0 - alpha) + 2.0
}

/// ∫₀^∞ g(θ) ζ_α(θ) dθ, split at the series/integral seam.
pub fn integrate_against_density<G: Fn(f64) -> f64>(d: &WrightDensity, g: G) -> Result<f64> {
    let end = density_support_end(d.alpha());
    let f = |theta: f64| match d.eval(theta) {
        Ok(e) => g(theta) * e.value,
        Err(_) => f64::NAN,
    };
    let breaks = [0.0, d.series_cutoff().min(end), 0.5 * (d.series_cutoff() + end), end];
    Ok(integrate_with_breaks(f, &breaks, tol())?.value)
}

/// ∫₀^∞ ζ_α(θ) dθ.
pub fn density_mass(d: &WrightDensity) -> Result<f64> {
    integrate_against_density(d, |_| 1.0)
}

/// ∫₀^∞ θ^ν ζ_α(θ) dθ by quadrature.
pub fn density_moment(d: &WrightDensity, nu: f64) -> Result<f64> {
    integrate_against_density(d, |t| t.powf(nu))
}

/// Eigenvalue factor of S_α(t) on a mode with eigenvalue λ:
/// ∫₀^∞ ζ_α(θ) e^{-λ t^α θ} dθ.
pub fn s_factor_by_density(d: &WrightDensity, lambda: f64, t: f64) -> Result<f64> {
    let x = lambda * t.powf(d.alpha());
    integrate_against_density(d, |theta| (-x * theta).exp())
}

/// Eigenvalue factor of T_α(t): α ∫₀^∞ θ ζ_α(θ) e^{-λ t^α θ} dθ.
pub fn t_factor_by_density(d: &WrightDensity, lambda: f64, t: f64) -> Result<f64> {
    let x = lambda * t.powf(d.alpha());
    Ok(d.alpha() * integrate_against_density(d, |theta| theta * (-x * theta).exp())?)
}

/// ∫₀^T g(s) ds on a finite interval with default oracle tolerances.
pub fn integrate_finite<G: Fn(f64) -> f64>(g: G, a: f64, b: f64) -> Result<f64> {
    Ok(integrate(g, a, b, tol())?.value)
}
