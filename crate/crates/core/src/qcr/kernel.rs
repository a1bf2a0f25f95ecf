//! Single-junction integrals, evaluated in units of the gap `Δ`.

use super::JunctionParams;
use crate::numerics::quadrature::panel_points;
use crate::numerics::{integrate, QuadratureSpec};
use crate::units::{E_CHARGE, H_PLANCK, K_B};
use crate::Result;

const REL_TOL: f64 = 1e-10;
const MAX_SUBDIVISIONS: usize = 4000;

/// Dynes density of states at reduced energy `x = ε/Δ`,
/// `|Re[z/√(z²−1)]|` with `z = |x| + iγ_D`.
///
/// The square root is taken in a cancellation-free form so that the small
/// subgap values (of order `γ_D`) keep full relative precision.
pub fn dynes_dos_reduced(x: f64, gamma_d: f64) -> f64 {
    let x = x.abs();
    let re = (x - 1.0) * (x + 1.0) - gamma_d * gamma_d;
    let im = 2.0 * x * gamma_d;
    let modulus = re.hypot(im);
    let (a, b) = if re >= 0.0 {
        let a = (0.5 * (modulus + re)).sqrt();
        (a, if a > 0.0 { im / (2.0 * a) } else { 0.0 })
    } else {
        let b = (0.5 * (modulus - re)).sqrt();
        (im / (2.0 * b), b)
    };
    let n = (x * a + gamma_d * b) / modulus;
    // Only the measure-zero gap edge at γ_D = 0 is singular.
    if n.is_finite() {
        n
    } else {
        0.0
    }
}

/// `n_S(ε)` for energy `ε` in joules.
pub fn dynes_dos(eps: f64, jp: &JunctionParams) -> f64 {
    dynes_dos_reduced(eps / jp.delta, jp.gamma_d)
}

/// Fermi function `1/(1 + e^y)` without overflow.
#[inline]
fn fermi(y: f64) -> f64 {
    if y > 0.0 {
        let e = (-y).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + y.exp())
    }
}

fn cutoff(e_red: f64, theta: f64) -> f64 {
    10f64.max(e_red.abs() + 10.0 * theta + 10.0)
}

fn thermal_points(center: f64, theta: f64) -> impl Iterator<Item = f64> {
    [-30.0, -10.0, -3.0, 3.0, 10.0, 30.0]
        .into_iter()
        .map(move |k| center + k * theta)
}

/// `∫ n_S(x)·f(x−e)·[1−f(x)] dx` in reduced units.
pub(crate) fn rate_integral(e_red: f64, theta: f64, gamma_d: f64) -> Result<f64> {
    let cut = cutoff(e_red, theta);
    let edge = 20.0 * gamma_d;
    let interior = [-1.0, 1.0, -1.0 - edge, -1.0 + edge, 1.0 - edge, 1.0 + edge, 0.0, e_red]
        .into_iter()
        .chain(thermal_points(0.0, theta))
        .chain(thermal_points(e_red, theta));
    let spec = QuadratureSpec::new(panel_points(-cut, cut, interior))
        .with_tolerances(f64::MIN_POSITIVE, REL_TOL)
        .with_max_subdivisions(MAX_SUBDIVISIONS);
    let q = integrate(
        |x| dynes_dos_reduced(x, gamma_d) * fermi((x - e_red) / theta) * fermi(-x / theta),
        &spec,
    )?;
    Ok(q.value.max(0.0))
}

/// Photon-assisted tunneling kernel
/// `ℱ(E) = (1/h)∫ n_S(ε)·f(ε−E)·[1−f(ε)] dε` (1/s).
pub fn rate_function_f(energy: f64, jp: &JunctionParams) -> Result<f64> {
    let theta = K_B * jp.t_n / jp.delta;
    Ok(jp.delta / H_PLANCK * rate_integral(energy / jp.delta, theta, jp.gamma_d)?)
}

/// `∫ n_S(x)·[f(x−v) − f(x+v)] dx` for `v ≥ 0`.
fn current_integral(v: f64, theta: f64, gamma_d: f64) -> Result<f64> {
    let cut = cutoff(v, theta);
    let edge = 20.0 * gamma_d;
    let interior = [-1.0, 1.0, -1.0 - edge, -1.0 + edge, 1.0 - edge, 1.0 + edge, 0.0, v, -v]
        .into_iter()
        .chain(thermal_points(v, theta))
        .chain(thermal_points(-v, theta));
    let spec = QuadratureSpec::new(panel_points(-cut, cut, interior))
        .with_tolerances(f64::MIN_POSITIVE, REL_TOL)
        .with_max_subdivisions(MAX_SUBDIVISIONS);
    let q = integrate(
        |x| {
            // Pick the branch that avoids 1 − 1 cancellation deep below the Fermi level.
            let diff = if x >= 0.0 {
                fermi((x - v) / theta) - fermi((x + v) / theta)
            } else {
                fermi((-x - v) / theta) - fermi((-x + v) / theta)
            };
            dynes_dos_reduced(x, gamma_d) * diff
        },
        &spec,
    )?;
    Ok(q.value)
}

/// SINIS current `I = (1/2eR_T)∫ n_S(E)[f(E−eV) − f(E+eV)] dE` (A).
///
/// Evaluated at `|V|` and given the sign of `V`, so `I(−V) = −I(V)` exactly.
pub fn iv_current(v: f64, jp: &JunctionParams) -> Result<f64> {
    if v == 0.0 {
        return Ok(0.0);
    }
    let theta = K_B * jp.t_n / jp.delta;
    let red = E_CHARGE * v.abs() / jp.delta;
    let i = jp.delta / (2.0 * E_CHARGE * jp.r_t) * current_integral(red, theta, jp.gamma_d)?;
    Ok(i.copysign(v))
}
