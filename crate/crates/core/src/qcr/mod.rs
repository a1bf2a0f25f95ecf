//! SINIS junction physics: Dynes density of states, photon-assisted
//! tunneling rates, the QCR cooling rate and the I–V characteristic.
//!
//! Each of the two NIS junctions sees half of the net bias `V_b`, so the
//! photon-assisted rates depend on `eV_b/2` and the gap threshold sits at
//! `eV_b/2Δ ≈ 1`. Rates are labelled by physical direction: `gamma_down`
//! absorbs a resonator photon (`ℓ = +1`), `gamma_up` emits one (`ℓ = −1`).

mod kernel;

use serde::{Deserialize, Serialize};

pub use kernel::{dynes_dos, dynes_dos_reduced, iv_current, rate_function_f};

use crate::params::{DerivedParams, DeviceParams};
use crate::units::{normalized_bias, E_CHARGE, HBAR, R_K};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JunctionParams {
    /// Ω
    pub r_t: f64,
    /// J
    pub delta: f64,
    pub gamma_d: f64,
    /// K
    pub t_n: f64,
    /// J
    pub e_n: f64,
    pub m2_coupling: f64,
}

impl JunctionParams {
    pub fn new(
        r_t: f64,
        delta: f64,
        gamma_d: f64,
        t_n: f64,
        e_n: f64,
        m2_coupling: f64,
    ) -> Result<Self> {
        let jp = Self {
            r_t,
            delta,
            gamma_d,
            t_n,
            e_n,
            m2_coupling,
        };
        jp.validate()?;
        Ok(jp)
    }

    pub fn from_device(p: &DeviceParams, d: &DerivedParams) -> Self {
        Self {
            r_t: p.r_t,
            delta: p.delta,
            gamma_d: p.gamma_d,
            t_n: p.t_n,
            e_n: d.e_n,
            m2_coupling: p.m2_coupling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.r_t, self.delta, self.t_n]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive {
            return Err(Error::Validation("R_T, Delta and T_N must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.gamma_d) {
            return Err(Error::Validation("gamma_D must lie in [0, 1)".into()));
        }
        if !(self.e_n.is_finite() && self.e_n >= 0.0) {
            return Err(Error::Validation("E_N must be non-negative".into()));
        }
        if !(self.m2_coupling > 0.0 && self.m2_coupling <= 1.0) {
            return Err(Error::Validation("m2_coupling must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Photon direction for [`transition_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Photon {
    /// `ℓ = +1`: the junction absorbs a resonator photon.
    Absorb,
    /// `ℓ = −1`: the junction emits a photon into the resonator.
    Emit,
}

impl Photon {
    fn ell(self) -> f64 {
        match self {
            Photon::Absorb => 1.0,
            Photon::Emit => -1.0,
        }
    }
}

/// `Γ(ℓ) = |M₀₁|²·(2R_K/R_T)·[ℱ(eV_b/2 + ℓħω_r − E_N) + ℱ(−eV_b/2 + ℓħω_r − E_N)]`.
pub fn transition_rate(ell: Photon, v_b: f64, omega_r: f64, jp: &JunctionParams) -> Result<f64> {
    if v_b < 0.0 {
        return Err(Error::Validation("bias must be non-negative".into()));
    }
    let half = 0.5 * E_CHARGE * v_b;
    let shift = ell.ell() * HBAR * omega_r - jp.e_n;
    let f = rate_function_f(half + shift, jp)? + rate_function_f(-half + shift, jp)?;
    Ok(jp.m2_coupling * 2.0 * R_K / jp.r_t * f)
}

/// Rates and derived quantities at one bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QcrBiasPoint {
    pub v_b: f64,
    /// `eV_b/2Δ`.
    pub normalized: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    pub delta_gamma: f64,
    /// `None` when the junction does not cool (`δγ ≤ 0`).
    pub n_t: Option<f64>,
    pub kappa_eff: f64,
}

impl QcrBiasPoint {
    pub fn evaluate(v_b: f64, omega_r: f64, kappa_r: f64, jp: &JunctionParams) -> Result<Self> {
        let gamma_down = transition_rate(Photon::Absorb, v_b, omega_r, jp)?;
        let gamma_up = transition_rate(Photon::Emit, v_b, omega_r, jp)?;
        let delta_gamma = gamma_down - gamma_up;
        Ok(Self {
            v_b,
            normalized: normalized_bias(v_b, jp.delta),
            gamma_down,
            gamma_up,
            delta_gamma,
            n_t: (delta_gamma > 0.0).then(|| gamma_up / delta_gamma),
            kappa_eff: kappa_r + delta_gamma,
        })
    }

    pub fn is_heating(&self) -> bool {
        self.delta_gamma < 0.0
    }
}

/// `δγ = Γ(+1) − Γ(−1)`.
pub fn delta_gamma(v_b: f64, omega_r: f64, jp: &JunctionParams) -> Result<f64> {
    Ok(transition_rate(Photon::Absorb, v_b, omega_r, jp)?
        - transition_rate(Photon::Emit, v_b, omega_r, jp)?)
}

/// `κ_eff = κ_r + δγ`.
pub fn kappa_eff(v_b: f64, omega_r: f64, jp: &JunctionParams, kappa_r: f64) -> Result<f64> {
    Ok(kappa_r + delta_gamma(v_b, omega_r, jp)?)
}

/// `N_T = Γ(−1)/(Γ(+1) − Γ(−1))`; a domain error when the junction does not cool.
pub fn effective_occupation_nt(v_b: f64, omega_r: f64, jp: &JunctionParams) -> Result<f64> {
    let down = transition_rate(Photon::Absorb, v_b, omega_r, jp)?;
    let up = transition_rate(Photon::Emit, v_b, omega_r, jp)?;
    if down - up <= 0.0 {
        return Err(Error::Domain(format!(
            "no effective occupation: delta_gamma = {:.3e} 1/s",
            down - up
        )));
    }
    Ok(up / (down - up))
}

/// `|M₀₁|²` that makes `δγ(V_b)` equal `target`.
pub fn calibrate_m2(target: f64, v_b: f64, omega_r: f64, jp: &JunctionParams) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::Validation("calibration target must be positive".into()));
    }
    let unit = JunctionParams {
        m2_coupling: 1.0,
        ..*jp
    };
    let per_unit = delta_gamma(v_b, omega_r, &unit)?;
    if per_unit <= 0.0 {
        return Err(Error::ModelInconsistency(format!(
            "junction does not cool at V_b = {v_b:.4e} V"
        )));
    }
    let m2 = target / per_unit;
    if m2 > 1.0 {
        return Err(Error::ModelInconsistency(format!(
            "target {target:.3e} 1/s needs |M01|^2 = {m2:.3} > 1"
        )));
    }
    Ok(m2)
}

/// Absorption/emission rates tabulated along a bias envelope `u·V_b`,
/// `u ∈ [0, 1]`, for use inside time integration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub v_b: f64,
    down: Vec<f64>,
    up: Vec<f64>,
}

pub const RATE_TABLE_NODES: usize = 257;

impl RateTable {
    pub fn build(v_b: f64, omega_r: f64, jp: &JunctionParams, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::Validation("rate table needs at least two nodes".into()));
        }
        let eval = |k: usize| -> Result<(f64, f64)> {
            let v = v_b * k as f64 / (nodes - 1) as f64;
            Ok((
                transition_rate(Photon::Absorb, v, omega_r, jp)?,
                transition_rate(Photon::Emit, v, omega_r, jp)?,
            ))
        };
        let pairs: Vec<(f64, f64)> = (0..nodes).map(eval).collect::<Result<_>>()?;
        let (down, up) = pairs.into_iter().unzip();
        Ok(Self { v_b, down, up })
    }

    /// Constant rates, independent of the envelope.
    pub fn constant(gamma_down: f64, gamma_up: f64) -> Self {
        Self {
            v_b: 0.0,
            down: vec![gamma_down; 2],
            up: vec![gamma_up; 2],
        }
    }

    /// `(Γ_down, Γ_up)` at envelope fraction `u`, linearly interpolated.
    pub fn rates(&self, u: f64) -> (f64, f64) {
        let n = self.down.len();
        let s = u.clamp(0.0, 1.0) * (n - 1) as f64;
        let k = (s.floor() as usize).min(n - 2);
        let w = s - k as f64;
        (
            self.down[k] + w * (self.down[k + 1] - self.down[k]),
            self.up[k] + w * (self.up[k + 1] - self.up[k]),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{bias_from_normalized, H_PLANCK, K_B, UEV};

    fn table1() -> JunctionParams {
        let p = DeviceParams::table1();
        JunctionParams::from_device(&p, &p.derive().unwrap())
    }

    fn cold(gamma_d: f64) -> JunctionParams {
        JunctionParams {
            gamma_d,
            t_n: 1e-6,
            ..table1()
        }
    }

    #[test]
    fn dos_values() {
        let g = 1.3e-4;
        let at0 = dynes_dos_reduced(0.0, g);
        assert!((at0 - g / (1.0 + g * g).sqrt()).abs() < 1e-12);
        let far = dynes_dos_reduced(10.0, g);
        assert!((far - 10.0 / 99f64.sqrt()).abs() < 1e-3);
        for x in [0.3, 0.99, 1.0, 1.01, 4.0] {
            assert_eq!(dynes_dos_reduced(x, g), dynes_dos_reduced(-x, g));
        }
        assert_eq!(dynes_dos_reduced(0.5, 0.0), 0.0);
    }

    #[test]
    fn dos_matches_complex_formula() {
        use num_complex::Complex64;
        for g in [1e-3, 1.3e-4, 0.05] {
            for x in [-3.0, -1.2, -0.7, 0.0, 0.4, 0.9, 1.0, 1.1, 2.5, 30.0] {
                let z = Complex64::new(x, g);
                let direct = (z / (z * z - 1.0).sqrt()).re.abs();
                let stable = dynes_dos_reduced(x, g);
                assert!((direct - stable).abs() <= 1e-9 * direct.max(1.0), "x={x} g={g}");
            }
        }
    }

    #[test]
    fn rate_function_zero_temperature() {
        let jp = cold(0.0);
        assert!(rate_function_f(0.5 * jp.delta, &jp).unwrap() < 1e-30);
        let f2 = rate_function_f(2.0 * jp.delta, &jp).unwrap();
        let oracle = 3f64.sqrt() * jp.delta / H_PLANCK;
        assert!(((f2 - oracle) / oracle).abs() < 1e-3, "{f2} vs {oracle}");
    }

    #[test]
    fn detailed_balance_at_60mk() {
        let jp = JunctionParams {
            gamma_d: 0.0,
            ..table1()
        };
        for k in [0.5, 1.0, 2.0] {
            let e = k * jp.delta;
            let fwd = rate_function_f(e, &jp).unwrap();
            let back = rate_function_f(-e, &jp).unwrap();
            let expect = (-e / (K_B * jp.t_n)).exp() * fwd;
            assert!(((back - expect) / expect).abs() < 1e-4, "E = {k} Delta");
        }
    }

    #[test]
    fn rate_function_high_energy_limit() {
        let jp = table1();
        let e = 50.0 * jp.delta;
        let f = rate_function_f(e, &jp).unwrap();
        assert!(((f - e / H_PLANCK) / (e / H_PLANCK)).abs() < 0.01);
    }

    #[test]
    fn gap_blockade_at_zero_bias() {
        let jp = cold(0.0);
        let p = DeviceParams::table1();
        assert!(transition_rate(Photon::Absorb, 0.0, p.omega_r, &jp).unwrap() < 1e-20);
    }

    #[test]
    fn iv_zero_temperature_oracle() {
        let jp = cold(0.0);
        let v = 10.0 * jp.delta / E_CHARGE;
        let i = iv_current(v, &jp).unwrap();
        let oracle = 99f64.sqrt() * jp.delta / (E_CHARGE * jp.r_t);
        assert!(((i - oracle) / oracle).abs() < 5e-3);
        assert!((oracle * 1e9 - 26.7).abs() < 0.05);
        assert_eq!(iv_current(0.0, &jp).unwrap(), 0.0);
        assert_eq!(iv_current(-v, &jp).unwrap(), -i);
    }

    #[test]
    fn iv_subgap_dynes_leakage() {
        let jp = cold(1.3e-4);
        let v = 0.5 * jp.delta / E_CHARGE;
        let i = iv_current(v, &jp).unwrap();
        let estimate = jp.gamma_d * v / jp.r_t;
        assert!(((i - estimate) / estimate).abs() < 0.2, "{i} vs {estimate}");
    }

    #[test]
    fn rates_scale_inversely_with_resistance() {
        let jp = table1();
        let omega_r = DeviceParams::table1().omega_r;
        let v = bias_from_normalized(1.03, jp.delta);
        let a = delta_gamma(v, omega_r, &jp).unwrap();
        let doubled = JunctionParams {
            r_t: 2.0 * jp.r_t,
            ..jp
        };
        let b = delta_gamma(v, omega_r, &doubled).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn calibration_is_linear() {
        let jp = table1();
        let omega_r = DeviceParams::table1().omega_r;
        let v = bias_from_normalized(1.03, jp.delta);
        let m1 = calibrate_m2(1e7, v, omega_r, &jp).unwrap();
        let m2 = calibrate_m2(2e7, v, omega_r, &jp).unwrap();
        assert!((m2 / m1 - 2.0).abs() < 1e-12);
        assert!(calibrate_m2(1e-3, v, omega_r, &jp).unwrap() < 1e-12);
        assert!(matches!(
            calibrate_m2(1e13, v, omega_r, &jp),
            Err(Error::ModelInconsistency(_))
        ));
        let tuned = JunctionParams {
            m2_coupling: m1,
            ..jp
        };
        let got = delta_gamma(v, omega_r, &tuned).unwrap();
        assert!(((got - 1e7) / 1e7).abs() < 1e-6);
    }

    #[test]
    fn occupation_identity() {
        let jp = table1();
        let p = DeviceParams::table1();
        let v = bias_from_normalized(1.03, jp.delta);
        let pt = QcrBiasPoint::evaluate(v, p.omega_r, p.kappa_r, &jp).unwrap();
        let nt = pt.n_t.unwrap();
        assert!((pt.delta_gamma * (1.0 + nt) - pt.gamma_down).abs() <= 1e-9 * pt.gamma_down);
        assert_eq!(effective_occupation_nt(v, p.omega_r, &jp).unwrap(), nt);
        let cold_jp = JunctionParams {
            gamma_d: 1e-9,
            t_n: 1e-3,
            ..jp
        };
        assert!(effective_occupation_nt(v, p.omega_r, &cold_jp).unwrap() < 1e-6);
    }

    #[test]
    fn rate_table_interpolates_endpoints_exactly() {
        let jp = table1();
        let p = DeviceParams::table1();
        let v = 400.0 * UEV / E_CHARGE;
        let table = RateTable::build(v, p.omega_r, &jp, 9).unwrap();
        let (d1, u1) = table.rates(1.0);
        assert_eq!(d1, transition_rate(Photon::Absorb, v, p.omega_r, &jp).unwrap());
        assert_eq!(u1, transition_rate(Photon::Emit, v, p.omega_r, &jp).unwrap());
        let (d0, _) = table.rates(-0.5);
        assert_eq!(d0, transition_rate(Photon::Absorb, 0.0, p.omega_r, &jp).unwrap());
    }
}
