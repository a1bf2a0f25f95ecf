//! Browser bindings: optimal drive, QCR rates at a bias, and a reset scan,
//! all on the shipped device parameters.

use qcrsim::params::DeviceParams;
use qcrsim::protocols::{
    fidelity_estimate, optimal_drive, settling_time, DriveValidity, InitialState, OmegaRule, ResetConfig,
    ResetContext, RESET_THRESHOLD,
};
use qcrsim::qcr::{JunctionParams, QcrBiasPoint};
use qcrsim::units::{angular, bias_from_normalized, hertz, MHZ, NS};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize)]
pub struct DriveView {
    pub omega_mhz: f64,
    pub valid: bool,
}

#[derive(Debug, Serialize)]
pub struct BiasView {
    pub normalized: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    pub kappa_eff: f64,
    pub n_t: Option<f64>,
    pub fidelity: f64,
}

#[derive(Debug, Serialize)]
pub struct ScanView {
    pub tau_ns: Vec<f64>,
    pub p_e: Vec<f64>,
    pub p_f: Vec<f64>,
    pub omega_mhz: f64,
    pub kappa_eff: f64,
    pub settling_ns: Option<f64>,
}

fn msg<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Optimal e–f amplitude for a given f0g1 amplitude and `κ`.
pub fn drive(g_mhz: f64, kappa: f64) -> Result<DriveView, String> {
    let d = optimal_drive(angular(g_mhz * MHZ), kappa).map_err(msg)?;
    Ok(DriveView { omega_mhz: hertz(d.omega) / MHZ, valid: d.validity != DriveValidity::Violated })
}

/// QCR rates and the reset fidelity bound at `eV_b/2Δ`.
pub fn bias_point(normalized: f64) -> Result<BiasView, String> {
    let p = DeviceParams::table1();
    let d = p.derive().map_err(msg)?;
    let jp = JunctionParams::from_device(&p, &d);
    let v = bias_from_normalized(normalized, p.delta);
    let pt = QcrBiasPoint::evaluate(v, p.omega_r, p.kappa_r, &jp).map_err(msg)?;
    Ok(BiasView {
        normalized,
        gamma_down: pt.gamma_down,
        gamma_up: pt.gamma_up,
        kappa_eff: pt.kappa_eff,
        n_t: pt.n_t,
        fidelity: fidelity_estimate(&d, pt.kappa_eff.max(0.0)).map_err(msg)?,
    })
}

/// Residual `P_e` against pulse length from the thermal state.
pub fn scan(normalized: f64, g_mhz: f64, omega_scale: f64, tau_max_ns: f64, step_ns: f64) -> Result<ScanView, String> {
    if !(step_ns >= 1.0 && tau_max_ns >= 6.0 && tau_max_ns / step_ns <= 2000.0) {
        return Err("need step ≥ 1 ns, τ_max ≥ 6 ns and at most 2000 points".into());
    }
    let p = DeviceParams::table1();
    let cfg = ResetConfig {
        bias: normalized,
        g_rabi: angular(g_mhz * MHZ),
        omega: OmegaRule::Scaled(omega_scale),
        ..ResetConfig::operating_point()
    };
    let ctx = ResetContext::new(&p, &cfg).map_err(msg)?;
    let rho0 = InitialState::Thermal(p.p_e_thermal).build(ctx.model.dims).map_err(msg)?;
    let mut taus = vec![0.0];
    let mut t = 6.0;
    while t <= tau_max_ns + 1e-9 {
        taus.push(t * NS);
        t += step_ns;
    }
    let pts = ctx.scan(&rho0, &taus).map_err(msg)?;
    let p_e: Vec<f64> = pts.iter().map(|x| x.p_e).collect();
    Ok(ScanView {
        tau_ns: taus.iter().map(|t| t / NS).collect(),
        settling_ns: settling_time(&taus, &p_e, RESET_THRESHOLD).map(|t| t / NS),
        p_f: pts.iter().map(|x| x.p_f).collect(),
        p_e,
        omega_mhz: hertz(ctx.omega) / MHZ,
        kappa_eff: ctx.kappa_eff,
    })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsError> {
    r.and_then(|v| serde_json::to_string(&v).map_err(msg)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = optimalDrive)]
pub fn optimal_drive_js(g_mhz: f64, kappa: f64) -> Result<String, JsError> {
    to_js(drive(g_mhz, kappa))
}

#[wasm_bindgen(js_name = biasPoint)]
pub fn bias_point_js(normalized: f64) -> Result<String, JsError> {
    to_js(bias_point(normalized))
}

#[wasm_bindgen(js_name = resetScan)]
pub fn reset_scan_js(normalized: f64, g_mhz: f64, omega_scale: f64, tau_max_ns: f64, step_ns: f64) -> Result<String, JsError> {
    to_js(scan(normalized, g_mhz, omega_scale, tau_max_ns, step_ns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operating_point_views() {
        let d = drive(28.4, 4.136e7).unwrap();
        assert!((d.omega_mhz - 20.05).abs() < 0.01 && d.valid);
        let b = bias_point(1.03).unwrap();
        assert!((b.kappa_eff - 4.136e7).abs() < 1e5);
        let s = scan(1.03, 28.4, 1.0, 60.0, 6.0).unwrap();
        assert_eq!(s.tau_ns.len(), s.p_e.len());
        assert_eq!(s.p_e[0], 0.15);
        assert!(scan(1.03, 28.4, 1.0, 60.0, 0.1).is_err());
    }
}
