//! Physical constants (exact SI 2019 values) and unit helpers.

use std::f64::consts::PI;

/// Elementary charge (C).
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Planck constant (J·s).
pub const H_PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant (J·s).
pub const HBAR: f64 = H_PLANCK / (2.0 * PI);
/// Boltzmann constant (J/K).
pub const K_B: f64 = 1.380_649e-23;
/// Resistance quantum `h/e²` (Ω).
pub const R_K: f64 = H_PLANCK / (E_CHARGE * E_CHARGE);

pub const GHZ: f64 = 1e9;
pub const MHZ: f64 = 1e6;
pub const NS: f64 = 1e-9;
pub const US: f64 = 1e-6;
pub const FF: f64 = 1e-15;
pub const KOHM: f64 = 1e3;
pub const UEV: f64 = 1e-6 * E_CHARGE;
pub const MK: f64 = 1e-3;
pub const UV: f64 = 1e-6;

/// Converts a frequency in Hz into an angular frequency in rad/s.
pub fn angular(hz: f64) -> f64 {
    2.0 * PI * hz
}

/// Converts an angular frequency in rad/s into Hz.
pub fn hertz(rad_per_s: f64) -> f64 {
    rad_per_s / (2.0 * PI)
}

/// Total SINIS bias voltage for a normalised bias `eV_b / 2Δ`.
pub fn bias_from_normalized(normalized: f64, gap: f64) -> f64 {
    normalized * 2.0 * gap / E_CHARGE
}

/// Normalised bias `eV_b / 2Δ` for a total SINIS bias voltage.
pub fn normalized_bias(v_b: f64, gap: f64) -> f64 {
    E_CHARGE * v_b / (2.0 * gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resistance_quantum() {
        assert!((R_K - 25_812.807_45).abs() < 1e-3);
    }

    #[test]
    fn operating_bias_voltage() {
        let v = bias_from_normalized(1.03, 193.0 * UEV);
        assert!((v / UV - 397.58).abs() < 1e-9 * 397.58 + 1e-6);
        assert!((normalized_bias(v, 193.0 * UEV) - 1.03).abs() < 1e-12);
    }
}
