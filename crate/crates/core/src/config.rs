//! Default numerical tolerances, collected in one place so that callers (and the
//! acceptance suite) can tighten them globally.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative tolerance of the radial shooting integrator.
    pub ode_rtol: f64,
    /// Absolute tolerance of the radial shooting integrator.
    pub ode_atol: f64,
    /// Starting radius for shooting from the centre.
    pub r_eps: f64,
    /// Distance from the poles where zonal shooting starts.
    pub theta_eps: f64,
    /// Tolerances for the sphere and Ψ integrations, which need more digits.
    pub fine_rtol: f64,
    pub fine_atol: f64,
    /// Relative width used when comparing exponents against thresholds.
    pub tie_rel: f64,
    /// Relative residual bound accepted for radial solutions.
    pub radial_residual: f64,
    /// Residual bound accepted for sphere profiles.
    pub sphere_residual: f64,
    /// Interior values above this count as maximum-principle violations.
    pub mp_violation: f64,
    /// Relative residual for the conjugate-gradient solve.
    pub cg_rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ode_rtol: 1e-8,
            ode_atol: 1e-10,
            r_eps: 1e-6,
            theta_eps: 1e-6,
            fine_rtol: 1e-12,
            fine_atol: 1e-14,
            tie_rel: 1e-12,
            radial_residual: 1e-6,
            sphere_residual: 1e-6,
            mp_violation: 1e-10,
            cg_rtol: 1e-13,
        }
    }
}

/// Equality test used for the sharp thresholds of the classifier.
pub fn ties(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
