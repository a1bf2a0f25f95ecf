use serde::{Deserialize, Serialize};

use crate::dynamics::PopulationTrace;
use crate::numerics::{curve_fit, nonlinear_least_squares, FitReport, LsqOptions};
use crate::qcr::{iv_current, JunctionParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Fit {
    pub t1: f64,
    pub p_inf: f64,
    pub p0: f64,
    pub report: FitReport,
}

/// Fits `P(t) = P∞ + (P0 − P∞)·e^(−t/T1)` to the excited population of a
/// free-decay trace.
pub fn t1_fit(trace: &PopulationTrace) -> Result<T1Fit> {
    let (ts, ps) = (&trace.times, &trace.p_e);
    if ts.len() < 4 {
        return Err(Error::Validation("a T1 fit needs at least four samples".into()));
    }
    let (first, last) = (ps[0], ps[ps.len() - 1]);
    let span = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - ps.iter().copied().fold(f64::INFINITY, f64::min);
    if span <= 1e-12 {
        return Err(Error::Degenerate("P0 equals P∞: the trace does not decay".into()));
    }
    let t0 = ts[0];
    let duration = ts[ts.len() - 1] - t0;
    // Decay time guess from the 1/e point.
    let target = last + (first - last) / std::f64::consts::E;
    let t_e = ts
        .iter()
        .zip(ps)
        .find(|(_, p)| (*p - target) * (first - last).signum() <= 0.0)
        .map_or(duration / 3.0, |(t, _)| (t - t0).max(duration / 100.0));
    let model = |t: f64, p: &[f64]| Ok(p[1] + (p[0] - p[1]) * (-(t - t0) * (-p[2]).exp()).exp());
    let report = curve_fit(model, ts, ps, None, &[first, last, t_e.ln()], None, &LsqOptions::default())?;
    if !report.converged {
        return Err(Error::Fit {
            iterations: report.iterations,
            residual_norm: report.residual_norm,
            reason: "T1 fit did not converge".into(),
        });
    }
    let p = &report.parameters;
    Ok(T1Fit {
        t1: p[2].exp(),
        p_inf: p[1],
        p0: p[0],
        report,
    })
}

/// Relative `γ_D` sensitivity below which the leakage parameter counts as
/// unidentifiable.
pub const IV_LEAKAGE_SENSITIVITY: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvFit {
    pub r_t: f64,
    pub delta: f64,
    pub t_n: f64,
    pub gamma_d: f64,
    /// False when the data carry no leverage on `γ_D` (e.g. no subgap points).
    pub gamma_d_identifiable: bool,
    /// Relative one-sigma proxies for `(R_T, Δ, T_N, γ_D)`.
    pub relative_errors: [f64; 4],
    pub report: FitReport,
}

/// Fits `(R_T, Δ, T_N, γ_D)` to `(V, I)` samples with relative residuals.
/// Parameters are fitted as logarithms, so they stay positive. A fit that
/// stops without converging still returns its best iterate with
/// `report.converged = false`.
pub fn fit_iv(v: &[f64], i: &[f64], guess: &JunctionParams) -> Result<IvFit> {
    if v.len() != i.len() {
        return Err(Error::Validation("V and I lengths differ".into()));
    }
    if v.len() < 20 {
        return Err(Error::Validation("an I–V fit needs at least 20 samples".into()));
    }
    guess.validate()?;
    if guess.gamma_d <= 0.0 {
        return Err(Error::Validation("the γ_D guess must be positive".into()));
    }
    let i_max = i.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if i_max == 0.0 {
        return Err(Error::Degenerate("all currents are zero".into()));
    }
    let scale: Vec<f64> = i.iter().map(|x| 1.0 / (x.abs() + 1e-6 * i_max)).collect();
    let unpack = |p: &[f64]| JunctionParams {
        r_t: p[0].exp(),
        delta: p[1].exp(),
        t_n: p[2].exp(),
        gamma_d: p[3].exp().min(0.5),
        ..*guess
    };
    let residuals = |p: &[f64], out: &mut [f64]| -> Result<()> {
        let jp = unpack(p);
        for k in 0..v.len() {
            out[k] = (iv_current(v[k], &jp)? - i[k]) * scale[k];
        }
        Ok(())
    };
    let p0 = [guess.r_t.ln(), guess.delta.ln(), guess.t_n.ln(), guess.gamma_d.ln()];
    let report = nonlinear_least_squares(residuals, v.len(), &p0, None, &LsqOptions::default())?;
    let p = &report.parameters;
    let sens: Vec<f64> = report
        .sensitivities
        .iter()
        .zip(p)
        .map(|(s, x)| s / x.abs().max(1e-300))
        .collect();
    let s_max = sens.iter().copied().fold(0.0, f64::max);
    let jp = unpack(p);
    let rel = |k: usize| report.std_errors[k];
    Ok(IvFit {
        r_t: jp.r_t,
        delta: jp.delta,
        t_n: jp.t_n,
        gamma_d: jp.gamma_d,
        gamma_d_identifiable: sens[3] >= IV_LEAKAGE_SENSITIVITY * s_max,
        relative_errors: [rel(0), rel(1), rel(2), rel(3)],
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::DeviceParams;

    fn synthetic_trace(t1: f64, p0: f64, pinf: f64) -> PopulationTrace {
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.75e-6).collect();
        let p_e: Vec<f64> = times.iter().map(|t| pinf + (p0 - pinf) * (-t / t1).exp()).collect();
        PopulationTrace {
            levels: vec![],
            p_g: vec![0.0; times.len()],
            p_f: vec![0.0; times.len()],
            n_mean: vec![0.0; times.len()],
            trace_err: vec![0.0; times.len()],
            min_eig: vec![0.0; times.len()],
            hermiticity: vec![0.0; times.len()],
            accepted_steps: 0,
            rejected_steps: 0,
            times,
            p_e,
        }
    }

    #[test]
    fn exact_exponential_recovery() {
        let f = t1_fit(&synthetic_trace(9.6e-6, 1.0, 0.15)).unwrap();
        assert!((f.t1 / 9.6e-6 - 1.0).abs() < 1e-9);
        assert!((f.p_inf - 0.15).abs() < 1e-9);
        assert!((f.p0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn flat_trace_is_degenerate() {
        assert!(matches!(t1_fit(&synthetic_trace(9.6e-6, 0.15, 0.15)), Err(Error::Degenerate(_))));
    }

    #[test]
    fn iv_fit_needs_samples() {
        let p = DeviceParams::table1();
        let d = p.derive().unwrap();
        let jp = JunctionParams::from_device(&p, &d);
        assert!(fit_iv(&[1e-4; 5], &[1e-9; 5], &jp).is_err());
    }
}
