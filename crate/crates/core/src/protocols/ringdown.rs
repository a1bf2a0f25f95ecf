use serde::{Deserialize, Serialize};

use super::par_map;
use crate::numerics::{integrate, linear_fit, LinearFit, QuadratureSpec};
use crate::params::{DerivedParams, DeviceParams};
use crate::pulses::{FlatTopPulse, DEFAULT_RISE};
use crate::qcr::{JunctionParams, QcrBiasPoint, RateTable};
use crate::units::{bias_from_normalized, NS};
use crate::{Error, Result};

/// Delay between the two amplitude measurements.
pub const DEFAULT_DELTA_T_AB: f64 = 200.0 * NS;

/// Nodes of the rate tables used for ringdown simulation.
const RINGDOWN_TABLE_NODES: usize = 129;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingdownSettings {
    /// Bias pulse lengths (s).
    pub taus: Vec<f64>,
    pub delta_t_ab: f64,
    pub t_rise: f64,
    pub t_fall: f64,
}

impl Default for RingdownSettings {
    fn default() -> Self {
        Self {
            taus: (1..=15).map(|k| 10.0 * k as f64 * NS).collect(),
            delta_t_ab: DEFAULT_DELTA_T_AB,
            t_rise: DEFAULT_RISE,
            t_fall: DEFAULT_RISE,
        }
    }
}

impl RingdownSettings {
    fn validate(&self) -> Result<()> {
        if self.taus.len() < 2 {
            return Err(Error::Validation("ringdown needs at least two pulse lengths".into()));
        }
        if !(self.delta_t_ab > 0.0 && self.t_rise > 0.0 && self.t_fall > 0.0) {
            return Err(Error::Validation("ringdown times must be positive".into()));
        }
        if let Some(t) = self.taus.iter().find(|t| **t < self.t_rise + self.t_fall) {
            return Err(Error::Validation(format!(
                "pulse length {:.3} ns is shorter than rise + fall",
                t / NS
            )));
        }
        Ok(())
    }
}

/// Amplitude ratio `A_after/A_before` of a resonator ringing down through a
/// bias pulse of length `tau`:
/// `exp{−½[δγ(τ − t_r − t_f) + δγ_rf(t_r + t_f) + κ_r δt_ab]}`.
pub fn ringdown_ratio(
    delta_gamma: f64,
    delta_gamma_rise_fall: f64,
    kappa_r: f64,
    tau: f64,
    t_rise: f64,
    t_fall: f64,
    delta_t_ab: f64,
) -> f64 {
    let edges = t_rise + t_fall;
    (-0.5 * (delta_gamma * (tau - edges) + delta_gamma_rise_fall * edges + kappa_r * delta_t_ab)).exp()
}

/// Ratios from the classical amplitude equation `dA/dt = −½κ_eff(t)·A`, with
/// `δγ(t)` following the bias envelope through `table`.
pub fn simulate_ringdown_ratios(table: &RateTable, kappa_r: f64, s: &RingdownSettings) -> Result<Vec<f64>> {
    s.validate()?;
    let dg = |u: f64| {
        let (d, up) = table.rates(u);
        d - up
    };
    s.taus
        .iter()
        .map(|&tau| {
            let pulse = FlatTopPulse::new(1.0, 0.0, tau)?.with_edges(s.t_rise, s.t_fall)?;
            let (s0, s1) = pulse.support();
            if s1 - s0 > s.delta_t_ab {
                return Err(Error::Validation(format!(
                    "pulse of {:.1} ns does not fit in the {:.1} ns measurement window",
                    tau / NS,
                    s.delta_t_ab / NS
                )));
            }
            let (p0, p1) = pulse.plateau();
            let spec = |a: f64, b: f64| QuadratureSpec::interval(a, b).with_tolerances(1e-30, 1e-12);
            let rise = integrate(|t| dg(pulse.shape(t)), &spec(s0, p0))?.value;
            let fall = integrate(|t| dg(pulse.shape(t)), &spec(p1, s1))?.value;
            let area = rise + dg(1.0) * (p1 - p0) + fall;
            Ok((-0.5 * (kappa_r * s.delta_t_ab + area)).exp())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingdownResult {
    pub taus: Vec<f64>,
    pub ratios: Vec<f64>,
    /// From the slope of `ln(ratio)` against `τ` (1/s).
    pub delta_gamma: f64,
    pub delta_gamma_sigma: f64,
    /// From the intercept, given `kappa_r`.
    pub delta_gamma_rise_fall: f64,
    pub kappa_r: f64,
    pub line: LinearFit,
    /// Set when the slope implies heating beyond three standard errors.
    pub unphysical: bool,
}

fn log_ratios(ratios: &[f64]) -> Result<Vec<f64>> {
    ratios
        .iter()
        .map(|r| {
            if *r > 0.0 && r.is_finite() {
                Ok(r.ln())
            } else {
                Err(Error::Domain(format!("non-positive amplitude ratio {r}")))
            }
        })
        .collect()
}

/// Straight-line fit of `ln(ratio)` against `τ`; `κ_r` splits the intercept.
pub fn fit_ringdown(taus: &[f64], ratios: &[f64], s: &RingdownSettings, kappa_r: f64) -> Result<RingdownResult> {
    let line = linear_fit(taus, &log_ratios(ratios)?)?;
    let edges = s.t_rise + s.t_fall;
    let delta_gamma = -2.0 * line.slope;
    let delta_gamma_sigma = 2.0 * line.slope_sigma;
    let delta_gamma_rise_fall = (-2.0 * line.intercept - kappa_r * s.delta_t_ab) / edges + delta_gamma;
    Ok(RingdownResult {
        taus: taus.to_vec(),
        ratios: ratios.to_vec(),
        delta_gamma,
        delta_gamma_sigma,
        delta_gamma_rise_fall,
        kappa_r,
        line,
        unphysical: delta_gamma < -3.0 * delta_gamma_sigma,
    })
}

/// `κ_r` from a ringdown with the bias off, where the edge and plateau rates
/// coincide: `κ_r = −2·intercept/δt_ab`.
pub fn fit_kappa_r(taus: &[f64], ratios: &[f64], s: &RingdownSettings) -> Result<f64> {
    let line = linear_fit(taus, &log_ratios(ratios)?)?;
    Ok(-2.0 * line.intercept / s.delta_t_ab)
}

fn table_at(v_b: f64, p: &DeviceParams, jp: &JunctionParams) -> Result<RateTable> {
    RateTable::build(v_b, p.omega_r, jp, RINGDOWN_TABLE_NODES)
}

/// Simulated ringdown at total bias `v_b`. `κ_r` is first extracted from a
/// zero-bias run and then used to split the intercept.
pub fn ringdown(v_b: f64, s: &RingdownSettings, p: &DeviceParams, d: &DerivedParams) -> Result<RingdownResult> {
    let jp = JunctionParams::from_device(p, d);
    let reference = simulate_ringdown_ratios(&table_at(0.0, p, &jp)?, p.kappa_r, s)?;
    let kappa_r = fit_kappa_r(&s.taus, &reference, s)?;
    let ratios = simulate_ringdown_ratios(&table_at(v_b, p, &jp)?, p.kappa_r, s)?;
    fit_ringdown(&s.taus, &ratios, s, kappa_r)
}

/// One row of the `κ_eff` bias sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaPoint {
    /// `eV_b/2Δ`
    pub normalized: f64,
    pub v_b: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    pub delta_gamma: f64,
    pub kappa_eff_theory: f64,
    pub delta_gamma_ringdown: f64,
    pub kappa_eff_ringdown: f64,
    /// `None` where the QCR heats (`δγ ≤ 0`).
    pub n_t: Option<f64>,
}

/// Theory and ringdown-extracted `κ_eff` over normalised biases `eV_b/2Δ`.
pub fn kappa_sweep(
    biases: &[f64],
    p: &DeviceParams,
    d: &DerivedParams,
    s: &RingdownSettings,
) -> Result<Vec<KappaPoint>> {
    if biases.is_empty() {
        return Err(Error::Validation("bias grid is empty".into()));
    }
    if let Some(b) = biases.iter().find(|b| !(0.0..=2.2).contains(*b)) {
        return Err(Error::Validation(format!("bias {b} lies outside eV_b/2Δ ∈ [0, 2.2]")));
    }
    let jp = JunctionParams::from_device(p, d);
    let reference = simulate_ringdown_ratios(&table_at(0.0, p, &jp)?, p.kappa_r, s)?;
    let kappa_r = fit_kappa_r(&s.taus, &reference, s)?;
    par_map(biases, |&b| {
        let v_b = bias_from_normalized(b, p.delta);
        let pt = QcrBiasPoint::evaluate(v_b, p.omega_r, p.kappa_r, &jp)?;
        let ratios = simulate_ringdown_ratios(&table_at(v_b, p, &jp)?, p.kappa_r, s)?;
        let fit = fit_ringdown(&s.taus, &ratios, s, kappa_r)?;
        Ok(KappaPoint {
            normalized: b,
            v_b,
            gamma_down: pt.gamma_down,
            gamma_up: pt.gamma_up,
            delta_gamma: pt.delta_gamma,
            kappa_eff_theory: pt.kappa_eff,
            delta_gamma_ringdown: fit.delta_gamma,
            kappa_eff_ringdown: kappa_r + fit.delta_gamma,
            n_t: pt.n_t,
        })
    })
    .into_iter()
    .collect()
}
