use serde::{Deserialize, Serialize};

use crate::hilbert::{populations, qubit_operator, DensityMatrix};
use crate::pulses::Gate;
use crate::{Error, Result};

/// `P_f` above which the no-leakage assumption of RPM is reported as violated.
pub const RPM_LEAKAGE_WARNING: f64 = 0.05;

/// Readout amplitudes of the four RPM sequences.
///
/// `a1`/`a2`: with a leading `π_ge`, followed by `2π_ef` or `π_ef`.
/// `b1`/`b2`: without it. Every sequence ends with `π_ge` before readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpmAmplitudes {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpmEstimate {
    /// Clamped to `[0, 1]`.
    pub p_e: f64,
    pub raw: f64,
    pub out_of_range: bool,
}

/// `P_e = (b1−b2)/((b1−b2)+(a1−a2))`.
pub fn rpm_estimate(amp: &RpmAmplitudes) -> Result<RpmEstimate> {
    let b = amp.b1 - amp.b2;
    let den = b + (amp.a1 - amp.a2);
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Degenerate("RPM amplitudes sum to zero".into()));
    }
    let raw = b / den;
    Ok(RpmEstimate {
        p_e: raw.clamp(0.0, 1.0),
        raw,
        out_of_range: !(0.0..=1.0).contains(&raw),
    })
}

fn readout(rho: &DensityMatrix, seq: &[Gate]) -> Result<f64> {
    let mut r = rho.clone();
    for g in seq {
        r = r.conjugate_by(&qubit_operator(rho.dims, &g.unitary()));
    }
    Ok(populations(&r)?.p_g)
}

/// Applies the four ideal-gate sequences to `rho` and reads out `P_g` with
/// unit gain. Also returns whether `P_f` exceeds [`RPM_LEAKAGE_WARNING`].
pub fn simulate_rpm(rho: &DensityMatrix) -> Result<(RpmAmplitudes, bool)> {
    use Gate::*;
    let amps = RpmAmplitudes {
        a1: readout(rho, &[PiGe, TwoPiEf, PiGe])?,
        a2: readout(rho, &[PiGe, PiEf, PiGe])?,
        b1: readout(rho, &[TwoPiEf, PiGe])?,
        b2: readout(rho, &[PiEf, PiGe])?,
    };
    let leak = populations(rho)?.p_f > RPM_LEAKAGE_WARNING;
    Ok((amps, leak))
}
