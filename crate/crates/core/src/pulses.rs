//! Flat-top Gaussian envelopes and the reset pulse schedule.
//!
//! A pulse of length `tau` starting at `t_start` rises as a Gaussian of width
//! `σ = t_rise/2` that reaches the plateau at `t_start + t_rise`, stays flat
//! and falls symmetrically so that it leaves the plateau at
//! `t_start + tau − t_fall`. The Gaussian flanks are not clipped at
//! `t_start`/`t_start + tau`; they continue until they drop below
//! `1e-6·amplitude` (see [`TAIL_CUTOFF`]).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::units::NS;
use crate::{Error, Result};

/// Envelope values below this fraction of the amplitude are set to zero.
pub const TAIL_CUTOFF: f64 = 1e-6;

pub const DEFAULT_RISE: f64 = 2.5 * NS;

/// Default `σ/t_rise`.
pub const DEFAULT_SIGMA_FRACTION: f64 = 0.5;

fn default_sigma_fraction() -> f64 {
    DEFAULT_SIGMA_FRACTION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatTopPulse {
    /// rad/s for drives, V for the bias channel.
    pub amplitude: f64,
    pub t_start: f64,
    pub tau: f64,
    pub t_rise: f64,
    pub t_fall: f64,
    /// Offset of the carrier from its target transition (rad/s).
    pub carrier_detuning: f64,
    #[serde(default = "default_sigma_fraction")]
    pub sigma_fraction: f64,
}

impl FlatTopPulse {
    pub fn new(amplitude: f64, t_start: f64, tau: f64) -> Result<Self> {
        let p = Self {
            amplitude,
            t_start,
            tau,
            t_rise: DEFAULT_RISE,
            t_fall: DEFAULT_RISE,
            carrier_detuning: 0.0,
            sigma_fraction: DEFAULT_SIGMA_FRACTION,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_edges(mut self, t_rise: f64, t_fall: f64) -> Result<Self> {
        self.t_rise = t_rise;
        self.t_fall = t_fall;
        self.validate()?;
        Ok(self)
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.carrier_detuning = detuning;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.amplitude, self.t_start, self.tau, self.t_rise, self.t_fall]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !self.carrier_detuning.is_finite() {
            return Err(Error::Validation("pulse fields must be finite".into()));
        }
        if self.t_rise <= 0.0 || self.t_fall <= 0.0 || self.sigma_fraction <= 0.0 {
            return Err(Error::Validation("rise and fall times must be positive".into()));
        }
        if self.tau < self.t_rise + self.t_fall {
            return Err(Error::Validation(format!(
                "pulse length {:.3} ns is shorter than rise + fall {:.3} ns",
                self.tau / NS,
                (self.t_rise + self.t_fall) / NS
            )));
        }
        Ok(())
    }

    fn sigmas(&self) -> (f64, f64) {
        (self.sigma_fraction * self.t_rise, self.sigma_fraction * self.t_fall)
    }

    pub fn plateau(&self) -> (f64, f64) {
        (self.t_start + self.t_rise, self.t_start + self.tau - self.t_fall)
    }

    /// Times before/after which the envelope is exactly zero.
    pub fn support(&self) -> (f64, f64) {
        let k = tail_width();
        let (sr, sf) = self.sigmas();
        let (p0, p1) = self.plateau();
        (p0 - k * sr, p1 + k * sf)
    }

    /// How far the leading tail reaches before `t_start`.
    pub fn lead(&self) -> f64 {
        (self.t_start - self.support().0).max(0.0)
    }

    /// How far the trailing tail reaches after `t_start + tau`.
    pub fn trail(&self) -> f64 {
        (self.support().1 - self.t_start - self.tau).max(0.0)
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.amplitude * self.shape(t)
    }

    /// Envelope divided by the amplitude, in `[0, 1]`.
    pub fn shape(&self, t: f64) -> f64 {
        let (p0, p1) = self.plateau();
        let (sr, sf) = self.sigmas();
        let g = if t < p0 {
            let x = (t - p0) / sr;
            (-0.5 * x * x).exp()
        } else if t > p1 {
            let x = (t - p1) / sf;
            (-0.5 * x * x).exp()
        } else {
            1.0
        };
        if g < TAIL_CUTOFF {
            0.0
        } else {
            g
        }
    }

    /// `tau − t_rise − t_fall`.
    pub fn effective_flat_duration(&self) -> Result<f64> {
        let d = self.tau - self.t_rise - self.t_fall;
        if d < 0.0 {
            return Err(Error::Validation(format!(
                "pulse length {:.3} ns is shorter than rise + fall",
                self.tau / NS
            )));
        }
        Ok(d)
    }
}

/// Half-width (in σ) at which a Gaussian flank reaches [`TAIL_CUTOFF`].
pub fn tail_width() -> f64 {
    (-2.0 * TAIL_CUTOFF.ln()).sqrt()
}

/// `∫ shape dt` over one Gaussian flank divided by its nominal edge time,
/// for the default `σ = t_rise/2`: `√(π/2)/2`, ignoring the 1e-6 cutoff.
pub fn gaussian_edge_fraction() -> f64 {
    DEFAULT_SIGMA_FRACTION * (std::f64::consts::PI / 2.0).sqrt()
}

/// Ideal instantaneous qubit gates used for state preparation and RPM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Gate {
    PiGe,
    PiEf,
    TwoPiEf,
}

impl Gate {
    /// 3×3 unitary on `(g, e, f)`.
    pub fn unitary(self) -> [[Complex64; 3]; 3] {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let mi = Complex64::new(0.0, -1.0);
        match self {
            Gate::PiGe => [[z, mi, z], [mi, z, z], [z, z, o]],
            Gate::PiEf => [[o, z, z], [z, z, mi], [z, mi, z]],
            Gate::TwoPiEf => [[o, z, z], [z, -o, z], [z, z, -o]],
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Gate::PiGe => "pi_ge",
            Gate::PiEf => "pi_ef",
            Gate::TwoPiEf => "2pi_ef",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateMarker {
    pub gate: Gate,
    pub time: f64,
}

/// The reset timeline: preparation gates, three co-timed pulses, readout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    /// e0–f0 drive, amplitude Ω (rad/s).
    pub ef_drive: FlatTopPulse,
    /// f0–g1 drive, amplitude g (rad/s).
    pub f0g1_drive: FlatTopPulse,
    /// Net SINIS bias (V).
    pub qcr_bias: FlatTopPulse,
    pub prep_gates: Vec<GateMarker>,
    pub measure_time: f64,
    pub t_end: f64,
}

impl PulseSchedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialises")
    }

    /// All three pulses share timing, so the reset window is that of any one.
    pub fn reset_window(&self) -> (f64, f64) {
        (self.f0g1_drive.t_start, self.f0g1_drive.t_start + self.f0g1_drive.tau)
    }
}

/// Builds the reset schedule: gates at `t = 0`, then the two drives and the
/// bias as identical flat-top windows of length `tau_reset`, placed so their
/// leading tails start at `t = 0`, then the readout marker.
pub fn reset_schedule(
    tau_reset: f64,
    v_b: f64,
    g_rabi: f64,
    omega_rabi: f64,
    prep: &[Gate],
) -> Result<PulseSchedule> {
    let probe = FlatTopPulse::new(1.0, 0.0, tau_reset)?;
    let t_start = probe.lead();
    let ef_drive = FlatTopPulse::new(omega_rabi, t_start, tau_reset)?;
    let f0g1_drive = FlatTopPulse::new(g_rabi, t_start, tau_reset)?;
    let qcr_bias = FlatTopPulse::new(v_b, t_start, tau_reset)?;
    let t_end = qcr_bias.support().1;
    Ok(PulseSchedule {
        ef_drive,
        f0g1_drive,
        qcr_bias,
        prep_gates: prep.iter().map(|&gate| GateMarker { gate, time: 0.0 }).collect(),
        measure_time: t_end,
        t_end,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate, QuadratureSpec};

    fn pulse(tau_ns: f64) -> FlatTopPulse {
        FlatTopPulse::new(1.7, 10.0 * NS, tau_ns * NS).unwrap()
    }

    #[test]
    fn plateau_midpoint_is_amplitude() {
        let p = pulse(100.0);
        assert_eq!(p.envelope(p.t_start + 50.0 * NS), 1.7);
    }

    #[test]
    fn start_value_is_e_minus_two() {
        let p = pulse(100.0);
        let v = p.envelope(p.t_start);
        assert!((v - 1.7 * (-2.0f64).exp()).abs() < 1e-14);
        let end = p.envelope(p.t_start + p.tau);
        assert!((end - 1.7 * (-2.0f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn zero_amplitude_is_zero() {
        let p = FlatTopPulse::new(0.0, 0.0, 20.0 * NS).unwrap();
        assert!((0..100).all(|i| p.envelope(i as f64 * 0.3 * NS) == 0.0));
    }

    #[test]
    fn effective_flat_duration_rules() {
        assert!((pulse(100.0).effective_flat_duration().unwrap() / NS - 95.0).abs() < 1e-9);
        assert_eq!(pulse(5.0).effective_flat_duration().unwrap(), 0.0);
        assert!(FlatTopPulse::new(1.0, 0.0, 4.0 * NS).is_err());
    }

    #[test]
    fn tails_vanish_beyond_cutoff() {
        let p = pulse(20.0);
        let (lo, hi) = p.support();
        assert_eq!(p.envelope(lo - 1e-12), 0.0);
        assert_eq!(p.envelope(hi + 1e-12), 0.0);
        assert!(p.envelope(lo + 1e-12) >= 1.7 * TAIL_CUTOFF * 0.999);
        assert!((p.lead() / NS - (tail_width() * 1.25 - 2.5)).abs() < 1e-9);
    }

    #[test]
    fn envelope_area_matches_flat_plus_gaussian_edges() {
        for tau in [5.0, 37.0, 200.0] {
            let p = pulse(tau);
            let (lo, hi) = p.support();
            let (p0, p1) = p.plateau();
            let spec = QuadratureSpec::new(vec![lo, p0, p1.max(p0 + 1e-15), hi])
                .with_tolerances(1e-22, 1e-12);
            let area = integrate(|t| p.envelope(t), &spec).unwrap().value;
            let expect = 1.7 * (p.effective_flat_duration().unwrap()
                + (p.t_rise + p.t_fall) * gaussian_edge_fraction());
            assert!(((area - expect) / expect).abs() < 1e-6, "tau {tau}: {area} vs {expect}");
        }
    }

    #[test]
    fn reset_schedule_topology() {
        let s = reset_schedule(200.0 * NS, 397.6e-6, 1.0e8, 1.2e8, &[Gate::PiGe]).unwrap();
        assert_eq!(s.prep_gates.len(), 1);
        assert_eq!(s.ef_drive.t_start, s.qcr_bias.t_start);
        assert_eq!(s.f0g1_drive.tau, s.qcr_bias.tau);
        assert!(s.qcr_bias.support().0.abs() < 1e-18);
        assert!(s.measure_time >= s.qcr_bias.t_start + s.qcr_bias.tau);
        let back: PulseSchedule = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(reset_schedule(4.0 * NS, 0.0, 0.0, 0.0, &[]).is_err());
    }

    #[test]
    fn gates_are_unitary() {
        for g in [Gate::PiGe, Gate::PiEf, Gate::TwoPiEf] {
            let u = g.unitary();
            for i in 0..3 {
                for j in 0..3 {
                    let dot: Complex64 = (0..3).map(|k| u[k][i].conj() * u[k][j]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - Complex64::new(expect, 0.0)).norm() < 1e-15);
                }
            }
        }
    }
}
