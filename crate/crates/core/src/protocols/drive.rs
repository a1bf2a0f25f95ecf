use serde::{Deserialize, Serialize};

use crate::params::DerivedParams;
use crate::{Error, Result};

/// Whether `g ≥ √(2/27)·κ` holds for the optimal-drive rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriveValidity {
    Valid,
    /// `g` equals `√(2/27)·κ` to within 1e-9 relative.
    Boundary,
    /// `g < √(2/27)·κ`: Ω is real but the rule no longer equalises the decay modes.
    Violated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalDrive {
    /// e–f drive amplitude Ω (rad/s).
    pub omega: f64,
    pub validity: DriveValidity,
}

/// `Ω = (1/6)·√(18g² − κ²)`, the e–f amplitude that gives all three modes of
/// the `e0 → f0 → g1` chain the same decay rate `κ/6`.
pub fn optimal_drive(g_rabi: f64, kappa: f64) -> Result<OptimalDrive> {
    if !(g_rabi > 0.0 && kappa > 0.0 && g_rabi.is_finite() && kappa.is_finite()) {
        return Err(Error::Validation("g and κ must be positive and finite".into()));
    }
    let (a, b) = (18.0 * g_rabi * g_rabi, kappa * kappa);
    // Rounding noise at 18g² = κ² counts as the boundary itself.
    let disc = if (a - b).abs() <= 1e-12 * (a + b) { 0.0 } else { a - b };
    if disc < 0.0 {
        return Err(Error::Domain(format!(
            "18g² < κ² (g = {g_rabi:.4e} rad/s, κ = {kappa:.4e} 1/s): no real drive amplitude"
        )));
    }
    let g_min = (2.0f64 / 27.0).sqrt() * kappa;
    let validity = if ((g_rabi - g_min) / g_min).abs() <= 1e-9 {
        DriveValidity::Boundary
    } else if g_rabi > g_min {
        DriveValidity::Valid
    } else {
        DriveValidity::Violated
    };
    Ok(OptimalDrive {
        omega: disc.sqrt() / 6.0,
        validity,
    })
}

/// Ground-state occupation bound `(Γ↓ + κ/3)/(Γ↑ + Γ↓ + κ/3)` when the reset
/// channel at rate `κ/3` competes with thermal excitation.
pub fn fidelity_from_rates(gamma_up: f64, gamma_down: f64, kappa_eff: f64) -> Result<f64> {
    if [gamma_up, gamma_down, kappa_eff].iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::Validation("rates must be finite and non-negative".into()));
    }
    let num = gamma_down + kappa_eff / 3.0;
    let den = gamma_up + num;
    if den == 0.0 {
        return Err(Error::Degenerate("all rates vanish".into()));
    }
    Ok(num / den)
}

/// [`fidelity_from_rates`] with the qubit's thermal `Γ↑`, `Γ↓`.
pub fn fidelity_estimate(d: &DerivedParams, kappa_eff: f64) -> Result<f64> {
    fidelity_from_rates(d.gamma_up_q, d.gamma_down_q, kappa_eff)
}
