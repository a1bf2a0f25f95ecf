use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dissipators::DissipatorSet;
use super::generator::{Bias, Generator};
use super::model::{Frame, HamiltonianModel};
use crate::hilbert::{populations_of, qubit_operator, DensityMatrix, C64};
use crate::numerics::ode::{self, OdeOptions, OdeStats};
use crate::pulses::PulseSchedule;
use crate::{Error, Result};

pub const TRACE_LIMIT: f64 = 1e-8;
pub const POSITIVITY_LIMIT: f64 = -1e-7;

/// Integration settings for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    pub ode: OdeOptions,
    /// Steps are bounded by `1/(steps_per_cycle·f_max)`.
    pub steps_per_cycle: f64,
    /// Fail on trace or positivity breaches at the samples.
    pub check_integrity: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            steps_per_cycle: 50.0,
            check_integrity: true,
        }
    }
}

impl EvolveOptions {
    /// Same settings with both tolerances scaled by `factor`.
    pub fn scaled_tolerances(&self, factor: f64) -> Self {
        let mut o = *self;
        o.ode.rtol *= factor;
        o.ode.atol *= factor;
        o
    }
}

/// Sampled populations and integrity diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    /// Per-sample diagonal of ρ in basis order.
    pub levels: Vec<Vec<f64>>,
    pub p_g: Vec<f64>,
    pub p_e: Vec<f64>,
    pub p_f: Vec<f64>,
    pub n_mean: Vec<f64>,
    pub trace_err: Vec<f64>,
    pub min_eig: Vec<f64>,
    pub hermiticity: Vec<f64>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl PopulationTrace {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            levels: Vec::with_capacity(n),
            p_g: Vec::with_capacity(n),
            p_e: Vec::with_capacity(n),
            p_f: Vec::with_capacity(n),
            n_mean: Vec::with_capacity(n),
            trace_err: Vec::with_capacity(n),
            min_eig: Vec::with_capacity(n),
            hermiticity: Vec::with_capacity(n),
            accepted_steps: 0,
            rejected_steps: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_trace_error(&self) -> f64 {
        self.trace_err.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        self.hermiticity.iter().copied().fold(0.0, f64::max)
    }

    /// Largest population difference between two traces on the same grid.
    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    fn record(&mut self, dims: crate::SpaceDims, t: f64, y: &[C64]) -> Result<()> {
        let rho = DensityMatrix::from_row_major(dims, y)?;
        let pops = populations_of(dims, y);
        self.times.push(t);
        self.p_g.push(pops.p_g);
        self.p_e.push(pops.p_e);
        self.p_f.push(pops.p_f);
        self.n_mean.push(pops.n_mean);
        self.levels.push(pops.levels);
        self.trace_err.push(rho.trace_error());
        self.hermiticity.push(rho.hermiticity_defect());
        self.min_eig.push(rho.min_eigenvalue()?);
        Ok(())
    }
}

/// Result of [`evolve`]: samples plus the lab-frame state at the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Evolution {
    pub trace: PopulationTrace,
    pub final_state: DensityMatrix,
}

fn frame_phase(nu: &[f64], t: f64, y: &mut [C64], sign: f64) {
    let n = nu.len();
    if nu.iter().all(|v| *v == 0.0) {
        return;
    }
    for i in 0..n {
        for k in 0..n {
            y[i * n + k] *= Complex64::cis(sign * (nu[i] - nu[k]) * t);
        }
    }
}

/// Integrates the master equation from `t = 0` through `t_grid`.
///
/// Preparation gates in the schedule are applied as ideal unitaries at their
/// marker times; a sample at exactly a gate time sees the post-gate state.
/// Drive envelopes and the QCR bias follow the schedule; without a schedule
/// the drives are off and a QCR rate table, if any, is held at its top node.
pub fn evolve(
    rho0: &DensityMatrix,
    model: &HamiltonianModel,
    diss: &DissipatorSet,
    schedule: Option<&PulseSchedule>,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Evolution> {
    evolve_from(rho0, 0.0, model, diss, schedule, t_grid, opts)
}

/// As [`evolve`], but starting from the lab-frame state `rho0` at time `t0`.
/// Gates scheduled before `t0` are taken as already applied.
pub fn evolve_from(
    rho0: &DensityMatrix,
    t0: f64,
    model: &HamiltonianModel,
    diss: &DissipatorSet,
    schedule: Option<&PulseSchedule>,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Evolution> {
    if rho0.dims != model.dims {
        return Err(Error::Validation("state and model dimensions differ".into()));
    }
    if !t0.is_finite()
        || t_grid.first().is_some_and(|t| *t < t0)
        || t_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::Validation(
            "time grid must be increasing and start at or after the initial time".into(),
        ));
    }
    diss.validate()?;
    let dims = model.dims;
    let bias = match schedule {
        Some(s) => Bias::Envelope(s),
        None => Bias::Fixed(1.0),
    };
    let mut gen = Generator::new(model, diss, schedule, bias);
    let (ef_det, fg_det) = schedule
        .map(|s| (s.ef_drive.carrier_detuning, s.f0g1_drive.carrier_detuning))
        .unwrap_or((0.0, 0.0));
    let f_max = model.max_frequency_hz(ef_det, fg_det, schedule.is_some());
    let mut ode_opts = opts.ode;
    if f_max > 0.0 {
        ode_opts.h_max = ode_opts.h_max.min(1.0 / (opts.steps_per_cycle * f_max));
    }
    let nu = model.frame_frequencies();

    let mut gates: Vec<_> = schedule.map(|s| s.prep_gates.clone()).unwrap_or_default();
    gates.retain(|g| g.time >= t0);
    gates.sort_by(|a, b| a.time.total_cmp(&b.time));

    let mut y = rho0.to_row_major();
    let mut t = t0;
    frame_phase(&nu, t, &mut y, 1.0);
    let mut trace = PopulationTrace::with_capacity(t_grid.len());
    let mut stats = OdeStats::default();
    let mut next_sample = 0;
    let mut gate_iter = gates.iter().peekable();
    loop {
        // Gates due now.
        while let Some(g) = gate_iter.peek() {
            if g.time > t {
                break;
            }
            frame_phase(&nu, t, &mut y, -1.0);
            let u = qubit_operator(dims, &g.gate.unitary());
            let rho = DensityMatrix::from_row_major(dims, &y)?.conjugate_by(&u);
            y = rho.to_row_major();
            frame_phase(&nu, t, &mut y, 1.0);
            gate_iter.next();
        }
        let horizon = gate_iter.peek().map(|g| g.time).unwrap_or(f64::INFINITY);
        let end = t_grid[next_sample..]
            .iter()
            .position(|&s| s >= horizon)
            .map_or(t_grid.len(), |k| next_sample + k);
        let mut outs: Vec<f64> = t_grid[next_sample..end].to_vec();
        let land_on_gate = horizon.is_finite() && end < t_grid.len();
        if land_on_gate {
            outs.push(horizon);
        }
        if outs.is_empty() {
            break;
        }
        let n_samples = end - next_sample;
        let seg = ode::solve(
            |tt, yy, out| gen.apply(tt, yy, out),
            t,
            &mut y,
            &outs,
            &ode_opts,
            |idx, tt, yy| {
                if idx < n_samples {
                    trace.record(dims, tt, yy)?;
                    if opts.check_integrity {
                        let k = trace.len() - 1;
                        if trace.trace_err[k] >= TRACE_LIMIT || trace.min_eig[k] <= POSITIVITY_LIMIT {
                            return Err(Error::Integrity(format!(
                                "at t = {tt:.6e} s: trace error {:.3e}, min eigenvalue {:.3e}",
                                trace.trace_err[k], trace.min_eig[k]
                            )));
                        }
                    }
                }
                Ok(())
            },
        );
        let seg = seg?;
        stats.accepted += seg.accepted;
        stats.rejected += seg.rejected;
        t = *outs.last().expect("non-empty");
        next_sample = end;
        if !land_on_gate {
            break;
        }
    }
    trace.accepted_steps = stats.accepted;
    trace.rejected_steps = stats.rejected;
    frame_phase(&nu, t, &mut y, -1.0);
    let final_state = DensityMatrix::from_row_major(dims, &y)?;
    Ok(Evolution { trace, final_state })
}

/// Outcome of running one scenario in both frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCheck {
    pub max_deviation: f64,
    pub literal: PopulationTrace,
    pub rotating: PopulationTrace,
}

pub const FRAME_TOLERANCE: f64 = 1e-2;

/// Runs the same scenario in the literal and rotating frames and compares
/// populations sample by sample.
pub fn frame_equivalence_check(
    rho0: &DensityMatrix,
    model: &HamiltonianModel,
    diss: &DissipatorSet,
    schedule: Option<&PulseSchedule>,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<FrameCheck> {
    let lit = evolve(rho0, &model.with_frame(Frame::Literal), diss, schedule, t_grid, opts)?;
    let rot = evolve(rho0, &model.with_frame(Frame::Rotating), diss, schedule, t_grid, opts)?;
    let max_deviation = lit.trace.max_deviation(&rot.trace);
    if max_deviation > FRAME_TOLERANCE {
        return Err(Error::ModelInconsistency(format!(
            "literal and rotating frames differ by {max_deviation:.3e}"
        )));
    }
    Ok(FrameCheck {
        max_deviation,
        literal: lit.trace,
        rotating: rot.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{populations, thermal_state, Level};
    use crate::params::DeviceParams;
    use crate::pulses::{reset_schedule, Gate};
    use crate::qcr::{JunctionParams, QcrBiasPoint, RateTable};
    use crate::units::{E_CHARGE, NS, US};

    fn idle_model(p: &DeviceParams) -> HamiltonianModel {
        HamiltonianModel::from_params(p, Frame::Rotating).unwrap().uncoupled()
    }

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
    }

    #[test]
    fn thermal_state_is_a_fixed_point() {
        let p = DeviceParams::table1();
        let d = p.derive().unwrap();
        let m = idle_model(&p);
        let diss = DissipatorSet::from_params(&p, &d, p.kappa_r);
        let rho0 = thermal_state(m.dims, p.p_e_thermal).unwrap();
        let ev = evolve(&rho0, &m, &diss, None, &grid(1.0 * US, 20), &EvolveOptions::default()).unwrap();
        for k in 0..ev.trace.len() {
            assert!((ev.trace.p_e[k] - 0.15).abs() < 1e-6);
            assert!((ev.trace.p_g[k] - 0.85).abs() < 1e-6);
        }
    }

    #[test]
    fn excited_state_relaxes_at_t1() {
        let p = DeviceParams::table1();
        let d = p.derive().unwrap();
        let m = idle_model(&p);
        let diss = DissipatorSet::from_params(&p, &d, p.kappa_r);
        let rho0 = DensityMatrix::pure(m.dims, Level::E, 0);
        let ts = grid(3.0 * p.t1, 30);
        let ev = evolve(&rho0, &m, &diss, None, &ts, &EvolveOptions::default()).unwrap();
        for (t, pe) in ts.iter().zip(&ev.trace.p_e) {
            let oracle = 0.15 + 0.85 * (-t / p.t1).exp();
            assert!((pe - oracle).abs() < 0.02 * oracle, "t = {t}: {pe} vs {oracle}");
            assert!((pe - oracle).abs() < 1e-6);
        }
    }

    #[test]
    fn photon_decays_at_kappa_eff() {
        let p = DeviceParams::table1();
        let d = p.derive().unwrap();
        let jp = JunctionParams::from_device(&p, &d);
        let vb = 1.03 * 2.0 * jp.delta / E_CHARGE;
        let pt = QcrBiasPoint::evaluate(vb, p.omega_r, p.kappa_r, &jp).unwrap();
        let m = idle_model(&p);
        let diss = DissipatorSet::from_params(&p, &d, p.kappa_r)
            .with_qcr(RateTable::constant(pt.gamma_down, pt.gamma_up));
        let (down, up) = diss.resonator_rates(1.0);
        let n_inf = up / (down - up);
        let rho0 = DensityMatrix::pure(m.dims, Level::G, 1);
        let ts = grid(100.0 * NS, 20);
        let ev = evolve(&rho0, &m, &diss, None, &ts, &EvolveOptions::default()).unwrap();
        let ys: Vec<f64> = ev.trace.n_mean.iter().map(|n| (n - n_inf).ln()).collect();
        let fit = crate::numerics::linear_fit(&ts, &ys).unwrap();
        assert!((-fit.slope / pt.kappa_eff - 1.0).abs() < 0.03);
        assert!((pt.kappa_eff / 4.14e7 - 1.0).abs() < 0.03);
    }

    fn reset_case() -> (HamiltonianModel, DissipatorSet, PulseSchedule) {
        let p = DeviceParams::table1();
        let d = p.derive().unwrap();
        let m = HamiltonianModel::from_params(&p, Frame::Rotating).unwrap();
        let diss = DissipatorSet::from_params(&p, &d, p.kappa_r)
            .with_qcr(RateTable::constant(3.9e7, 1.7e5));
        let g = 2.0 * std::f64::consts::PI * 28.4e6;
        let s = reset_schedule(30.0 * NS, 0.4e-3, g, 0.7 * g, &[]).unwrap();
        (m, diss, s)
    }

    #[test]
    fn liouvillian_is_linear() {
        let (m, diss, s) = reset_case();
        let r1 = thermal_state(m.dims, 0.15).unwrap();
        let r2 = DensityMatrix::pure(m.dims, Level::F, 0);
        let ts = [0.0, s.t_end];
        let opts = EvolveOptions::default();
        let mixed = evolve(&r1.mix(&r2, 0.3), &m, &diss, Some(&s), &ts, &opts).unwrap();
        let a = evolve(&r1, &m, &diss, Some(&s), &ts, &opts).unwrap();
        let b = evolve(&r2, &m, &diss, Some(&s), &ts, &opts).unwrap();
        let combo = a.final_state.mix(&b.final_state, 0.3);
        let diff = (&mixed.final_state.entries - &combo.entries).camax();
        assert!(diff < 1e-7, "{diff}");
    }

    #[test]
    fn integrity_holds_during_reset() {
        let (m, diss, s) = reset_case();
        let rho0 = thermal_state(m.dims, 0.15).unwrap();
        let ev = evolve(&rho0, &m, &diss, Some(&s), &grid(s.t_end, 40), &EvolveOptions::default()).unwrap();
        assert!(ev.trace.max_trace_error() < TRACE_LIMIT);
        assert!(ev.trace.min_eigenvalue() > POSITIVITY_LIMIT);
        assert!(ev.trace.max_hermiticity_defect() < 1e-10);
        assert!(ev.trace.accepted_steps > 0);
    }

    #[test]
    fn gate_at_zero_is_seen_by_first_sample() {
        let p = DeviceParams::table1();
        let m = idle_model(&p);
        let mut s = reset_schedule(20.0 * NS, 0.0, 0.0, 0.0, &[Gate::PiGe]).unwrap();
        s.t_end = 10.0 * NS;
        let rho0 = DensityMatrix::pure(m.dims, Level::G, 0);
        let ev = evolve(&rho0, &m, &DissipatorSet::none(), Some(&s), &[0.0, 5.0 * NS], &EvolveOptions::default()).unwrap();
        assert!((ev.trace.p_e[0] - 1.0).abs() < 1e-12);
        assert!((populations(&ev.final_state).unwrap().p_e - 1.0).abs() < 1e-9);
    }

    #[test]
    fn restart_matches_single_run() {
        let (m, diss, s) = reset_case();
        let rho0 = thermal_state(m.dims, 0.15).unwrap();
        let opts = EvolveOptions::default();
        let t_mid = 17.3 * NS;
        let whole = evolve(&rho0, &m, &diss, Some(&s), &[0.0, s.t_end], &opts).unwrap();
        let first = evolve(&rho0, &m, &diss, Some(&s), &[0.0, t_mid], &opts).unwrap();
        let second = evolve_from(&first.final_state, t_mid, &m, &diss, Some(&s), &[s.t_end], &opts).unwrap();
        let diff = (&whole.final_state.entries - &second.final_state.entries).camax();
        assert!(diff < 1e-7, "{diff}");
        assert!(evolve_from(&rho0, t_mid, &m, &diss, Some(&s), &[1.0 * NS], &opts).is_err());
    }

    #[test]
    fn frames_coincide_without_drives() {
        let p = DeviceParams::table1();
        let d = p.derive().unwrap();
        let m = HamiltonianModel::from_params(&p, Frame::Rotating).unwrap();
        let diss = DissipatorSet::from_params(&p, &d, p.kappa_r);
        let rho0 = DensityMatrix::pure(m.dims, Level::E, 0);
        let chk = frame_equivalence_check(&rho0, &m, &diss, None, &grid(20.0 * NS, 10), &EvolveOptions::default()).unwrap();
        assert!(chk.max_deviation < 1e-9, "{}", chk.max_deviation);
    }

    #[test]
    fn rejects_bad_grids() {
        let (m, diss, _) = reset_case();
        let rho0 = thermal_state(m.dims, 0.15).unwrap();
        let opts = EvolveOptions::default();
        assert!(evolve(&rho0, &m, &diss, None, &[1.0, 0.5], &opts).is_err());
        assert!(evolve(&rho0, &m, &diss, None, &[-1.0], &opts).is_err());
        let small = thermal_state(crate::SpaceDims::new(3).unwrap(), 0.1).unwrap();
        assert!(evolve(&small, &m, &diss, None, &[0.0], &opts).is_err());
    }
}
