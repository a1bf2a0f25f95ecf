//! Device and environment parameters.
//!
//! Configuration documents are flat TOML tables whose keys carry their lab
//! unit as a suffix (`resonator_freq_GHz`, `T1_us`, `gap_ueV`, ...). Values are
//! converted to SI on load; every other module consumes SI only. The key
//! reference lives in `docs/config.md`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::units::{angular, E_CHARGE, FF, GHZ, KOHM, MHZ, MK, UEV, US};
use crate::{Error, Result};

/// The shipped parameter document for the measured device.
pub const TABLE1_CFG: &str = include_str!("../../../params/table1.cfg");

/// `|M₀₁|²` calibrated so that the cooling rate at `eV_b/2Δ = 1.03` is
/// `3.9×10⁷ 1/s` with the table parameters (see `qcr::calibrate_m2`).
pub const DEFAULT_M2_COUPLING: f64 = 2.021_242_955e-3;

/// Allowed disagreement between tabulated frequencies and the same quantity
/// recomputed from other rows (each row is rounded to 1 MHz).
pub const TABLE_ROUNDING: f64 = 2.0 * std::f64::consts::PI * 1.5 * MHZ;

pub const DEFAULT_N_FOCK: usize = 5;

/// Validated device parameters, SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Resonator angular frequency (rad/s).
    pub omega_r: f64,
    pub omega_ge: f64,
    pub omega_ef: f64,
    /// Anharmonicity `ω_ef − ω_ge` (rad/s, negative).
    pub alpha: f64,
    /// Qubit–resonator coupling λ (rad/s).
    pub lambda_c: f64,
    /// `ω_r − ω_ge` (rad/s), always recomputed.
    pub delta_d: f64,
    /// Measured f0–g1 transition (rad/s), if supplied.
    pub omega_f0g1_measured: Option<f64>,
    /// Bare resonator decay rate (1/s).
    pub kappa_r: f64,
    /// Qubit lifetime (s).
    pub t1: f64,
    /// Qubit Ramsey coherence (s).
    pub t2_star: f64,
    pub p_e_thermal: f64,
    /// SINIS tunnel resistance (Ω).
    pub r_t: f64,
    /// Superconducting gap (J).
    pub delta: f64,
    pub gamma_d: f64,
    /// Normal-metal electron temperature (K).
    pub t_n: f64,
    /// Capacitances (F).
    pub c_c: f64,
    pub c_j: f64,
    pub c_m: f64,
    /// Overrides `C_c + 2·C_j + C_m` for the island charging energy.
    pub c_sigma_override: Option<f64>,
    pub m2_coupling: f64,
    pub n_fock: usize,
    /// Static offsets (rad/s) added to the resonator and qubit frequencies in
    /// the Hamiltonian, standing in for Lamb and Stark shifts.
    pub detuning_r: f64,
    pub detuning_q: f64,
    /// Provenance-only rows.
    pub ej_over_ec: Option<f64>,
    pub c_q: Option<f64>,
    /// Lindblad overrides (1/s) and thermal occupations.
    pub gamma_ef_override: Option<f64>,
    pub gamma_phi_ef_override: Option<f64>,
    pub gamma_t_ge: f64,
    pub gamma_t_ef: f64,
    pub n_tq: f64,
    pub n_tr: f64,
    pub n_th_ef: f64,
}

/// Quantities computed from [`DeviceParams`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Island charging energy `e²/2C_Σ` (J).
    pub e_n: f64,
    pub c_sigma: f64,
    /// `2ω_ge + α − ω_r` (rad/s).
    pub omega_f0g1_bare: f64,
    /// Qubit thermal up/down rates (1/s).
    pub gamma_up_q: f64,
    pub gamma_down_q: f64,
    pub gamma_ge: f64,
    pub n_th: f64,
    pub gamma_phi_ge: f64,
    pub gamma_ef: f64,
    pub gamma_phi_ef: f64,
    pub n_th_ef: f64,
    pub n_tr: f64,
    pub gamma_t_ge: f64,
    pub gamma_t_ef: f64,
    pub n_tq: f64,
}

struct Doc {
    values: BTreeMap<String, f64>,
}

impl Doc {
    fn required(&self, key: &str) -> Result<f64> {
        self.values.get(key).copied().ok_or_else(|| {
            let name = match symbol_of(key) {
                Some(sym) => format!("{key} ({sym})"),
                None => key.to_string(),
            };
            Error::MissingKey(name)
        })
    }

    fn optional(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }
}

fn symbol_of(key: &str) -> Option<&'static str> {
    Some(match key {
        "resonator_freq_GHz" => "omega_r",
        "qubit_ge_freq_GHz" => "omega_ge",
        "qubit_ef_freq_GHz" => "omega_ef",
        "anharmonicity_MHz" => "alpha",
        "coupling_MHz" => "lambda_c",
        "kappa_r_per_s" => "kappa_r",
        "T1_us" => "T1",
        "T2_star_us" => "T2_star",
        "thermal_excited_population" => "P_e_thermal",
        "coupling_capacitance_fF" => "C_c",
        "junction_capacitance_fF" => "C_j",
        "island_capacitance_fF" => "C_m",
        "tunnel_resistance_kOhm" => "R_T",
        "electron_temperature_mK" => "T_N",
        "dynes_parameter" => "gamma_D",
        "gap_ueV" => "Delta",
        _ => return None,
    })
}

const KNOWN_KEYS: &[&str] = &[
    "resonator_freq_GHz",
    "qubit_ge_freq_GHz",
    "qubit_ef_freq_GHz",
    "f0g1_freq_GHz",
    "anharmonicity_MHz",
    "detuning_GHz",
    "coupling_MHz",
    "kappa_r_per_s",
    "T1_us",
    "T2_star_us",
    "thermal_excited_population",
    "EJ_over_EC",
    "qubit_capacitance_fF",
    "coupling_capacitance_fF",
    "junction_capacitance_fF",
    "island_capacitance_fF",
    "sigma_capacitance_fF",
    "tunnel_resistance_kOhm",
    "electron_temperature_mK",
    "dynes_parameter",
    "gap_ueV",
    "qcr_m2_coupling",
    "n_fock",
    "resonator_detuning_MHz",
    "qubit_detuning_MHz",
    "gamma_ef_per_s",
    "gamma_phi_ef_per_s",
    "qcr_qubit_decay_ge_per_s",
    "qcr_qubit_decay_ef_per_s",
    "qcr_qubit_occupation",
    "line_thermal_occupation",
    "ef_thermal_occupation",
];

impl DeviceParams {
    /// Parses and validates a flat TOML parameter document.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Parse(e.to_string()))?;
        let mut values = BTreeMap::new();
        for (key, value) in table {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Parse(format!("unknown key `{key}`")));
            }
            let v = match value {
                toml::Value::Float(f) => f,
                toml::Value::Integer(i) => i as f64,
                other => {
                    return Err(Error::Parse(format!(
                        "key `{key}` must be numeric, found {}",
                        other.type_str()
                    )))
                }
            };
            values.insert(key, v);
        }
        Self::from_values(values)
    }

    /// Builds parameters from lab-unit key/value pairs.
    pub fn from_values(values: BTreeMap<String, f64>) -> Result<Self> {
        let doc = Doc { values };
        let ghz = |k: &str| doc.required(k).map(|v| angular(v * GHZ));
        let omega_r = ghz("resonator_freq_GHz")?;
        let omega_ge = ghz("qubit_ge_freq_GHz")?;
        let omega_ef = ghz("qubit_ef_freq_GHz")?;
        let alpha = angular(doc.required("anharmonicity_MHz")? * MHZ);
        let lambda_c = angular(doc.required("coupling_MHz")? * MHZ);
        let kappa_r = doc.required("kappa_r_per_s")?;
        let t1 = doc.required("T1_us")? * US;
        let t2_star = doc.required("T2_star_us")? * US;
        let p_e_thermal = doc.required("thermal_excited_population")?;
        let c_c = doc.required("coupling_capacitance_fF")? * FF;
        let c_j = doc.required("junction_capacitance_fF")? * FF;
        let c_m = doc.required("island_capacitance_fF")? * FF;
        let r_t = doc.required("tunnel_resistance_kOhm")? * KOHM;
        let t_n = doc.required("electron_temperature_mK")? * MK;
        let gamma_d = doc.required("dynes_parameter")?;
        let delta = doc.required("gap_ueV")? * UEV;
        let n_fock = match doc.optional("n_fock") {
            Some(n) if n.fract() == 0.0 && n >= 0.0 => n as usize,
            Some(n) => return Err(Error::Validation(format!("n_fock must be a whole number, got {n}"))),
            None => DEFAULT_N_FOCK,
        };
        let delta_d_input = doc.optional("detuning_GHz").map(|v| angular(v * GHZ));

        let params = DeviceParams {
            omega_r,
            omega_ge,
            omega_ef,
            alpha,
            lambda_c,
            delta_d: omega_r - omega_ge,
            omega_f0g1_measured: doc.optional("f0g1_freq_GHz").map(|v| angular(v * GHZ)),
            kappa_r,
            t1,
            t2_star,
            p_e_thermal,
            r_t,
            delta,
            gamma_d,
            t_n,
            c_c,
            c_j,
            c_m,
            c_sigma_override: doc.optional("sigma_capacitance_fF").map(|v| v * FF),
            m2_coupling: doc.optional("qcr_m2_coupling").unwrap_or(DEFAULT_M2_COUPLING),
            n_fock,
            detuning_r: angular(doc.optional("resonator_detuning_MHz").unwrap_or(0.0) * MHZ),
            detuning_q: angular(doc.optional("qubit_detuning_MHz").unwrap_or(0.0) * MHZ),
            ej_over_ec: doc.optional("EJ_over_EC"),
            c_q: doc.optional("qubit_capacitance_fF").map(|v| v * FF),
            gamma_ef_override: doc.optional("gamma_ef_per_s"),
            gamma_phi_ef_override: doc.optional("gamma_phi_ef_per_s"),
            gamma_t_ge: doc.optional("qcr_qubit_decay_ge_per_s").unwrap_or(0.0),
            gamma_t_ef: doc.optional("qcr_qubit_decay_ef_per_s").unwrap_or(0.0),
            n_tq: doc.optional("qcr_qubit_occupation").unwrap_or(0.0),
            n_tr: doc.optional("line_thermal_occupation").unwrap_or(0.0),
            n_th_ef: doc.optional("ef_thermal_occupation").unwrap_or(0.0),
        };
        if let Some(dd) = delta_d_input {
            if (dd - params.delta_d).abs() > TABLE_ROUNDING {
                return Err(Error::Validation(format!(
                    "detuning_GHz = {:.6} disagrees with resonator − qubit = {:.6} GHz",
                    dd / angular(GHZ),
                    params.delta_d / angular(GHZ)
                )));
            }
        }
        params.validate()?;
        Ok(params)
    }

    /// The measured device, loaded from the shipped `params/table1.cfg`.
    pub fn table1() -> Self {
        Self::from_config_str(TABLE1_CFG).expect("shipped table1.cfg is valid")
    }

    /// Checks every documented invariant, listing the first violated rule.
    pub fn validate(&self) -> Result<()> {
        let fail = |rule: &str| Err(Error::Validation(rule.to_string()));
        let all_finite = [
            self.omega_r,
            self.omega_ge,
            self.omega_ef,
            self.alpha,
            self.lambda_c,
            self.kappa_r,
            self.t1,
            self.t2_star,
            self.p_e_thermal,
            self.r_t,
            self.delta,
            self.gamma_d,
            self.t_n,
            self.c_c,
            self.c_j,
            self.c_m,
            self.m2_coupling,
            self.detuning_r,
            self.detuning_q,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return fail("all parameters must be finite");
        }
        if self.alpha >= 0.0 {
            return fail("alpha must be negative (alpha = omega_ef - omega_ge < 0)");
        }
        if !(self.omega_r > self.omega_ge && self.omega_ge > self.omega_ef && self.omega_ef > 0.0) {
            return fail("frequencies must satisfy omega_r > omega_ge > omega_ef > 0");
        }
        if (self.alpha - (self.omega_ef - self.omega_ge)).abs() > TABLE_ROUNDING {
            return fail("alpha must equal omega_ef - omega_ge within table rounding");
        }
        if (self.delta_d - (self.omega_r - self.omega_ge)).abs() > 1e-9 * self.delta_d.abs() {
            return fail("delta_d must equal omega_r - omega_ge");
        }
        if self.kappa_r <= 0.0 {
            return fail("kappa_r must be positive");
        }
        if self.r_t <= 0.0 {
            return fail("R_T must be positive");
        }
        if self.delta <= 0.0 {
            return fail("Delta must be positive");
        }
        if !(0.0..1.0).contains(&self.gamma_d) {
            return fail("gamma_D must lie in [0, 1)");
        }
        if self.t_n <= 0.0 {
            return fail("T_N must be positive");
        }
        if self.n_fock < 2 {
            return fail("n_fock must be at least 2");
        }
        if !(0.0..0.5).contains(&self.p_e_thermal) {
            return fail("P_e_thermal must lie in [0, 0.5)");
        }
        if self.t1 <= 0.0 || self.t2_star <= 0.0 {
            return fail("T1 and T2* must be positive");
        }
        if self.lambda_c < 0.0 {
            return fail("coupling lambda must be non-negative");
        }
        if self.c_c <= 0.0 || self.c_j < 0.0 || self.c_m < 0.0 {
            return fail("capacitances must be positive");
        }
        if !(self.m2_coupling > 0.0 && self.m2_coupling <= 1.0) {
            return fail("m2_coupling must lie in (0, 1]");
        }
        let rates = [self.gamma_t_ge, self.gamma_t_ef, self.n_tq, self.n_tr, self.n_th_ef];
        if rates.iter().any(|r| *r < 0.0) {
            return fail("thermal occupations and QCR qubit rates must be non-negative");
        }
        if self.gamma_ef_override.is_some_and(|g| g < 0.0)
            || self.gamma_phi_ef_override.is_some_and(|g| g < 0.0)
        {
            return fail("Lindblad overrides must be non-negative");
        }
        Ok(())
    }

    /// Computes the Lindblad coefficients and other derived quantities.
    pub fn derive(&self) -> Result<DerivedParams> {
        self.validate()?;
        let gamma_phi_ge = 1.0 / self.t2_star - 1.0 / (2.0 * self.t1);
        if gamma_phi_ge < 0.0 {
            return Err(Error::Validation(
                "T2* > 2·T1 implies negative pure dephasing".into(),
            ));
        }
        let c_sigma = self
            .c_sigma_override
            .unwrap_or(self.c_c + 2.0 * self.c_j + self.c_m);
        let p = self.p_e_thermal;
        let n_th = p / (1.0 - 2.0 * p);
        let gamma_ge = 1.0 / (self.t1 * (1.0 + 2.0 * n_th));
        Ok(DerivedParams {
            e_n: E_CHARGE * E_CHARGE / (2.0 * c_sigma),
            c_sigma,
            omega_f0g1_bare: 2.0 * self.omega_ge + self.alpha - self.omega_r,
            gamma_up_q: p / self.t1,
            gamma_down_q: (1.0 - p) / self.t1,
            gamma_ge,
            n_th,
            gamma_phi_ge,
            gamma_ef: self.gamma_ef_override.unwrap_or(2.0 * gamma_ge),
            gamma_phi_ef: self.gamma_phi_ef_override.unwrap_or(2.0 * gamma_phi_ge),
            n_th_ef: self.n_th_ef,
            n_tr: self.n_tr,
            gamma_t_ge: self.gamma_t_ge,
            gamma_t_ef: self.gamma_t_ef,
            n_tq: self.n_tq,
        })
    }

    /// SI JSON serialisation (bit-exact round trip).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters serialise")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: DeviceParams = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::hertz;

    fn table1_values() -> BTreeMap<String, f64> {
        let table: toml::Table = TABLE1_CFG.parse().unwrap();
        table
            .into_iter()
            .map(|(k, v)| (k, v.as_float().or(v.as_integer().map(|i| i as f64)).unwrap()))
            .collect()
    }

    #[test]
    fn loads_table1_in_si() {
        let p = DeviceParams::table1();
        assert!((hertz(p.omega_r) / GHZ - 6.538).abs() < 1e-12);
        assert_eq!(p.kappa_r, 2.36e6);
        assert!((p.r_t - 72e3).abs() < 1e-9);
        assert!((p.delta / UEV - 193.0).abs() < 1e-9);
        assert_eq!(p.n_fock, DEFAULT_N_FOCK);
    }

    #[test]
    fn positive_anharmonicity_rejected() {
        let mut v = table1_values();
        v.insert("anharmonicity_MHz".into(), 261.8);
        let err = DeviceParams::from_values(v).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("alpha")), "{err}");
    }

    #[test]
    fn missing_dynes_parameter_named() {
        let mut v = table1_values();
        v.remove("dynes_parameter");
        match DeviceParams::from_values(v) {
            Err(Error::MissingKey(name)) => assert!(name.contains("gamma_D"), "{name}"),
            other => panic!("expected missing key, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{TABLE1_CFG}\nresonator_frequency = 1.0\n");
        assert!(matches!(DeviceParams::from_config_str(&text), Err(Error::Parse(_))));
    }

    #[test]
    fn inconsistent_detuning_rejected() {
        let mut v = table1_values();
        v.insert("detuning_GHz".into(), 1.9);
        assert!(matches!(DeviceParams::from_values(v), Err(Error::Validation(_))));
    }

    #[test]
    fn derived_table1_values() {
        let d = DeviceParams::table1().derive().unwrap();
        assert!((hertz(d.omega_f0g1_bare) / GHZ - 2.5262).abs() < 1e-9);
        assert!((d.n_th - 0.2143).abs() < 5e-5);
        assert!((d.gamma_ge - 7.29e4).abs() < 0.005e4);
        assert!((d.gamma_phi_ge - 3.83e5).abs() < 0.005e5);
        assert!((d.c_sigma / FF - 37.7).abs() < 1e-9);
        assert!((d.e_n / UEV - 2.12).abs() < 0.005);
    }

    #[test]
    fn thermal_rate_identities() {
        let p = DeviceParams::table1();
        let d = p.derive().unwrap();
        let total = d.gamma_up_q + d.gamma_down_q;
        assert!((total * p.t1 - 1.0).abs() < 1e-12);
        assert!((d.gamma_up_q / total - p.p_e_thermal).abs() < 1e-12);
        assert!((d.gamma_ge * (1.0 + 2.0 * d.n_th) * p.t1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_limit() {
        let mut v = table1_values();
        v.insert("thermal_excited_population".into(), 0.0);
        let p = DeviceParams::from_values(v).unwrap();
        let d = p.derive().unwrap();
        assert_eq!(d.gamma_up_q, 0.0);
        assert_eq!(d.n_th, 0.0);
        assert!((d.gamma_ge - 1.0 / p.t1).abs() < 1e-9);
    }

    #[test]
    fn negative_dephasing_rejected() {
        let mut v = table1_values();
        v.insert("T2_star_us".into(), 25.0);
        let p = DeviceParams::from_values(v).unwrap();
        assert!(matches!(p.derive(), Err(Error::Validation(_))));
    }

    #[test]
    fn measured_f0g1_close_to_bare() {
        let p = DeviceParams::table1();
        let d = p.derive().unwrap();
        let measured = p.omega_f0g1_measured.unwrap();
        assert!(hertz((measured - d.omega_f0g1_bare).abs()) < 40.0 * MHZ);
    }

    #[test]
    fn json_round_trip_is_bit_identical() {
        let p = DeviceParams::table1();
        let back = DeviceParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn derive_is_pure() {
        let p = DeviceParams::table1();
        assert_eq!(p.derive().unwrap(), p.derive().unwrap());
    }
}
