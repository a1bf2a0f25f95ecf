use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::drive::{optimal_drive, DriveValidity};
use super::par_map;
use crate::dynamics::{
    evolve, evolve_from, DissipatorSet, EvolveOptions, Frame, HamiltonianModel, PopulationTrace,
};
use crate::hilbert::{populations, thermal_state, DensityMatrix, Level};
use crate::numerics::{nonlinear_least_squares, FitReport, LsqOptions};
use crate::params::{DerivedParams, DeviceParams};
use crate::pulses::{reset_schedule, FlatTopPulse, PulseSchedule};
use crate::qcr::{JunctionParams, RateTable, RATE_TABLE_NODES};
use crate::units::bias_from_normalized;
use crate::{Error, Result, SpaceDims};

/// Residual excited population that counts as reset.
pub const RESET_THRESHOLD: f64 = 0.01;

/// Thermal weight allowed beyond the resonator Fock cutoff of a reset run.
pub const FOCK_TAIL: f64 = 1e-9;

/// How the e–f drive amplitude Ω is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaRule {
    /// `Ω = (1/6)√(18g² − κ_eff²)`.
    Optimal,
    /// The optimal value times a factor.
    Scaled(f64),
    /// A fixed amplitude (rad/s).
    Explicit(f64),
}

/// Qubit state before the pulse, resonator empty. Built per context since
/// the Fock cutoff depends on the bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// Qubit thermal with this excited population.
    Thermal(f64),
    Ground,
    Excited,
}

impl InitialState {
    pub fn build(&self, dims: SpaceDims) -> Result<DensityMatrix> {
        match *self {
            InitialState::Thermal(p_e) => thermal_state(dims, p_e),
            InitialState::Ground => Ok(DensityMatrix::pure(dims, Level::G, 0)),
            InitialState::Excited => Ok(DensityMatrix::pure(dims, Level::E, 0)),
        }
    }

    pub fn p_e(&self) -> f64 {
        match *self {
            InitialState::Thermal(p_e) => p_e,
            InitialState::Ground => 0.0,
            InitialState::Excited => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResetConfig {
    /// `eV_b/2Δ` during the pulse.
    pub bias: f64,
    /// f0–g1 drive amplitude (rad/s).
    pub g_rabi: f64,
    pub omega: OmegaRule,
    /// QCR biased during the pulse. When false, `bias` is ignored.
    pub qcr: bool,
    pub frame: Frame,
    pub opts: EvolveOptions,
}

impl ResetConfig {
    /// Bias 1.03, `g/2π = 28.4 MHz`, optimal Ω, QCR on, rotating frame.
    pub fn operating_point() -> Self {
        Self {
            bias: 1.03,
            g_rabi: 2.0 * std::f64::consts::PI * 28.4e6,
            omega: OmegaRule::Optimal,
            qcr: true,
            frame: Frame::Rotating,
            opts: EvolveOptions::default(),
        }
    }
}

/// Everything fixed for one bias point: rates, drive amplitudes, model.
#[derive(Debug, Clone)]
pub struct ResetContext {
    pub config: ResetConfig,
    pub params: DeviceParams,
    pub derived: DerivedParams,
    pub model: HamiltonianModel,
    pub diss: DissipatorSet,
    /// Total SINIS bias during the pulse (V).
    pub v_b: f64,
    pub kappa_eff: f64,
    pub omega: f64,
    /// Validity of the optimal-drive rule, when it was used.
    pub drive_validity: Option<DriveValidity>,
}

/// Populations after one reset pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub tau: f64,
    pub p_g: f64,
    pub p_e: f64,
    pub p_f: f64,
    pub n_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResetOutcome {
    pub tau: f64,
    pub v_b: f64,
    pub omega: f64,
    pub kappa_eff: f64,
    pub residual_p_e: f64,
    pub p_f: f64,
    pub p_g: f64,
    pub n_mean: f64,
    /// Sampled trace over the window; empty when no samples were requested.
    pub trace: PopulationTrace,
    pub final_state: DensityMatrix,
}

impl ResetContext {
    /// `p.n_fock` is a minimum: the Fock space grows with the photon
    /// occupation the biased QCR drives the resonator towards, keeping the
    /// thermal weight beyond the cutoff below [`FOCK_TAIL`] with one level
    /// spare for the transferred excitation.
    pub fn new(p: &DeviceParams, cfg: &ResetConfig) -> Result<Self> {
        let mut p = p.clone();
        let derived = p.derive()?;
        if !(cfg.g_rabi.is_finite() && cfg.g_rabi >= 0.0) {
            return Err(Error::Validation("g must be finite and non-negative".into()));
        }
        let mut diss = DissipatorSet::from_params(&p, &derived, p.kappa_r);
        let v_b = if cfg.qcr {
            if !(cfg.bias.is_finite() && cfg.bias >= 0.0) {
                return Err(Error::Validation("bias must be finite and non-negative".into()));
            }
            let v_b = bias_from_normalized(cfg.bias, p.delta);
            let jp = JunctionParams::from_device(&p, &derived);
            diss = diss.with_qcr(RateTable::build(v_b, p.omega_r, &jp, RATE_TABLE_NODES)?);
            v_b
        } else {
            0.0
        };
        let (down, up) = diss.resonator_rates(1.0);
        let kappa_eff = down - up;
        if kappa_eff > 0.0 {
            p.n_fock = p.n_fock.max(SpaceDims::fock_levels_for(up / kappa_eff, FOCK_TAIL) + 1);
        }
        let mut drive_validity = None;
        let mut optimal = || -> Result<f64> {
            let d = optimal_drive(cfg.g_rabi, kappa_eff)?;
            drive_validity = Some(d.validity);
            Ok(d.omega)
        };
        let omega = match cfg.omega {
            OmegaRule::Optimal => optimal()?,
            OmegaRule::Scaled(f) => f * optimal()?,
            OmegaRule::Explicit(w) => w,
        };
        if !(omega.is_finite() && omega >= 0.0) {
            return Err(Error::Validation("Ω must be finite and non-negative".into()));
        }
        let model = HamiltonianModel::from_params(&p, cfg.frame)?;
        Ok(Self {
            config: cfg.clone(),
            params: p,
            derived,
            model,
            diss,
            v_b,
            kappa_eff,
            omega,
            drive_validity,
        })
    }

    pub fn schedule(&self, tau: f64) -> Result<PulseSchedule> {
        reset_schedule(tau, self.v_b, self.config.g_rabi, self.omega, &[])
    }

    /// End of the plateau for pulse length `tau`. Up to this time every
    /// longer pulse has the same envelope.
    pub fn fork_time(&self, tau: f64) -> Result<f64> {
        let probe = FlatTopPulse::new(1.0, 0.0, tau)?;
        Ok(probe.lead() + tau - probe.t_fall)
    }

    /// Ripple period of the residual in `τ`.
    pub fn ripple_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.chain_frequency()
    }

    /// Oscillation frequency of the `e0, f0, g1` chain under the drives,
    /// `√(Ω² + g² − κ²/12)`, which is exact when Ω follows the optimal rule.
    pub fn chain_frequency(&self) -> f64 {
        let g = self.config.g_rabi;
        (self.omega * self.omega + g * g - self.kappa_eff * self.kappa_eff / 12.0)
            .max(0.0)
            .sqrt()
    }

    /// Populations at pulse end for every `tau` (strictly increasing, s).
    /// `tau = 0` means no pulse. The integration up to each plateau end is
    /// shared between pulse lengths.
    pub fn scan(&self, rho0: &DensityMatrix, taus: &[f64]) -> Result<Vec<ScanPoint>> {
        if taus.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || taus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("pulse lengths must be non-negative and increasing".into()));
        }
        let point = |tau: f64, rho: &DensityMatrix| -> Result<ScanPoint> {
            let p = populations(rho)?;
            Ok(ScanPoint { tau, p_g: p.p_g, p_e: p.p_e, p_f: p.p_f, n_mean: p.n_mean })
        };
        let Some(&tau_max) = taus.last() else {
            return Ok(Vec::new());
        };
        let long = if tau_max > 0.0 { Some(self.schedule(tau_max)?) } else { None };
        let opts = &self.config.opts;
        let mut state = rho0.clone();
        let mut t = 0.0;
        let mut out = Vec::with_capacity(taus.len());
        for &tau in taus {
            if tau == 0.0 {
                out.push(point(0.0, rho0)?);
                continue;
            }
            let s = self.schedule(tau)?;
            let fork = self.fork_time(tau)?;
            if fork > t {
                state = evolve_from(&state, t, &self.model, &self.diss, long.as_ref(), &[fork], opts)?.final_state;
                t = fork;
            }
            let end = evolve_from(&state, fork, &self.model, &self.diss, Some(&s), &[s.t_end], opts)?;
            out.push(point(tau, &end.final_state)?);
        }
        Ok(out)
    }

    /// One reset pulse of length `tau`. The residual comes from the same
    /// path as [`ResetContext::scan`]; with `samples > 0` a separate sampled
    /// run provides the trace.
    pub fn simulate(&self, rho0: &DensityMatrix, tau: f64, samples: usize) -> Result<ResetOutcome> {
        if tau <= 0.0 {
            return Err(Error::Validation("pulse length must be positive".into()));
        }
        let s = self.schedule(tau)?;
        let fork = self.fork_time(tau)?;
        let opts = &self.config.opts;
        let mid = evolve(rho0, &self.model, &self.diss, Some(&s), &[fork], opts)?;
        let end = evolve_from(&mid.final_state, fork, &self.model, &self.diss, Some(&s), &[s.t_end], opts)?;
        let trace = if samples > 0 {
            let grid: Vec<f64> = (0..=samples).map(|k| s.t_end * k as f64 / samples as f64).collect();
            evolve(rho0, &self.model, &self.diss, Some(&s), &grid, opts)?.trace
        } else {
            let mut tr = mid.trace;
            tr.times.extend(end.trace.times);
            tr.levels.extend(end.trace.levels);
            tr.p_g.extend(end.trace.p_g);
            tr.p_e.extend(end.trace.p_e);
            tr.p_f.extend(end.trace.p_f);
            tr.n_mean.extend(end.trace.n_mean);
            tr.trace_err.extend(end.trace.trace_err);
            tr.min_eig.extend(end.trace.min_eig);
            tr.hermiticity.extend(end.trace.hermiticity);
            tr.accepted_steps += end.trace.accepted_steps;
            tr.rejected_steps += end.trace.rejected_steps;
            tr
        };
        let pops = populations(&end.final_state)?;
        Ok(ResetOutcome {
            tau,
            v_b: self.v_b,
            omega: self.omega,
            kappa_eff: self.kappa_eff,
            residual_p_e: pops.p_e,
            p_f: pops.p_f,
            p_g: pops.p_g,
            n_mean: pops.n_mean,
            trace,
            final_state: end.final_state,
        })
    }
}

/// Single reset run; see [`ResetContext::simulate`].
pub fn simulate_reset(
    p: &DeviceParams,
    cfg: &ResetConfig,
    rho0: &DensityMatrix,
    tau: f64,
    samples: usize,
) -> Result<ResetOutcome> {
    ResetContext::new(p, cfg)?.simulate(rho0, tau, samples)
}

fn interpolate_crossing(t0: f64, r0: f64, t1: f64, r1: f64, threshold: f64) -> f64 {
    if r0 == r1 {
        t1
    } else {
        t0 + (r0 - threshold) / (r0 - r1) * (t1 - t0)
    }
}

/// Earliest `τ` at which the residual drops to `threshold` (linear
/// interpolation between grid points).
pub fn first_crossing(taus: &[f64], residuals: &[f64], threshold: f64) -> Option<f64> {
    let k = residuals.iter().position(|r| *r <= threshold)?;
    if k == 0 {
        return Some(taus[0]);
    }
    Some(interpolate_crossing(taus[k - 1], residuals[k - 1], taus[k], residuals[k], threshold))
}

/// Settling time: the `τ` after which the residual stays at or below
/// `threshold` for the rest of the grid. `None` if the last point is above.
pub fn settling_time(taus: &[f64], residuals: &[f64], threshold: f64) -> Option<f64> {
    if residuals.iter().any(|r| r.is_nan()) || *residuals.last()? > threshold {
        return None;
    }
    match residuals.iter().rposition(|r| *r > threshold) {
        None => Some(taus[0]),
        Some(j) => Some(interpolate_crossing(taus[j], residuals[j], taus[j + 1], residuals[j + 1], threshold)),
    }
}

/// True when the residual's maxima over consecutive windows of one
/// `period`, starting at `after`, never rise. Coherent exchange in the drive
/// chain makes the residual ripple in `τ`, so monotonicity is a property of
/// the envelope. A window with no samples is skipped.
pub fn periodic_maxima_nonincreasing(taus: &[f64], residuals: &[f64], after: f64, period: f64) -> bool {
    if !(period > 0.0) {
        return false;
    }
    let mut windows: Vec<(i64, f64)> = Vec::new();
    for (t, r) in taus.iter().zip(residuals) {
        if *t < after {
            continue;
        }
        let k = ((t - after) / period).floor() as i64;
        match windows.last_mut() {
            Some((j, m)) if *j == k => *m = m.max(*r),
            _ => windows.push((k, *r)),
        }
    }
    windows.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9))
}

/// Fit of `P∞ + e^(−rτ)·Q(τ)`, with `Q` a second-order trigonometric
/// polynomial of frequency `ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Decay rate of the excited-population envelope (1/s).
    pub rate: f64,
    /// Modulation frequency (rad/s).
    pub omega: f64,
    pub floor: f64,
    /// `[a0, a1, b1, a2, b2]` of `Q`.
    pub harmonics: [f64; 5],
    pub report: FitReport,
}

fn design(taus: &[f64], rate: f64, omega: f64) -> DMatrix<f64> {
    DMatrix::from_fn(taus.len(), 6, |i, j| {
        let t = taus[i];
        let env = (-rate * t).exp();
        match j {
            0 => 1.0,
            1 => env,
            2 => env * (omega * t).cos(),
            3 => env * (omega * t).sin(),
            4 => env * (2.0 * omega * t).cos(),
            _ => env * (2.0 * omega * t).sin(),
        }
    })
}

fn linear_part(taus: &[f64], ys: &DVector<f64>, rate: f64, omega: f64) -> Result<DVector<f64>> {
    design(taus, rate, omega)
        .svd(true, true)
        .solve(ys, 1e-14)
        .map_err(|e| Error::Degenerate(e.to_string()))
}

/// Fits the reset tail over `τ ≥ t_min`. The linear coefficients are
/// eliminated for each `(r, ω)` (variable projection); `rate_guess` and
/// `omega_guess` seed the outer fit.
pub fn reset_decay_fit(
    taus: &[f64],
    residuals: &[f64],
    t_min: f64,
    rate_guess: f64,
    omega_guess: f64,
) -> Result<DecayFit> {
    let (ts, ys): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(residuals)
        .filter(|(t, _)| **t >= t_min)
        .map(|(t, r)| (*t, *r))
        .unzip();
    if ts.len() < 12 {
        return Err(Error::Validation("decay fit needs at least 12 tail samples".into()));
    }
    if !(rate_guess > 0.0 && omega_guess > 0.0) {
        return Err(Error::Validation("rate and frequency guesses must be positive".into()));
    }
    let t0 = ts[0];
    let shifted: Vec<f64> = ts.iter().map(|t| t - t0).collect();
    let yv = DVector::from_column_slice(&ys);
    let resid = |p: &[f64], out: &mut [f64]| -> Result<()> {
        let (r, w) = (p[0].exp(), p[1].exp());
        let beta = linear_part(&shifted, &yv, r, w)?;
        let fit = design(&shifted, r, w) * beta;
        for (o, (f, y)) in out.iter_mut().zip(fit.iter().zip(&ys)) {
            *o = f - y;
        }
        Ok(())
    };
    let report = nonlinear_least_squares(
        resid,
        ts.len(),
        &[rate_guess.ln(), omega_guess.ln()],
        None,
        &LsqOptions::default(),
    )?;
    let (rate, omega) = (report.parameters[0].exp(), report.parameters[1].exp());
    let beta = linear_part(&shifted, &yv, rate, omega)?;
    Ok(DecayFit {
        rate,
        omega,
        floor: beta[0],
        harmonics: [beta[1], beta[2], beta[3], beta[4], beta[5]],
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub bias_index: usize,
    /// `None` when the whole bias row failed.
    pub tau_index: Option<usize>,
    pub message: String,
}

/// Residual excited population over a bias × pulse-length grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    /// `eV_b/2Δ`
    pub biases: Vec<f64>,
    /// s
    pub taus: Vec<f64>,
    /// `residual[bias][tau]`; NaN marks a failed cell.
    pub residual: Vec<Vec<f64>>,
    pub leakage: Vec<Vec<f64>>,
    pub kappa_eff: Vec<f64>,
    pub omega: Vec<f64>,
    /// Settling time at [`RESET_THRESHOLD`] per bias.
    pub settling: Vec<Option<f64>>,
    pub g_rabi: f64,
    pub omega_rule: OmegaRule,
    pub initial: InitialState,
    pub failures: Vec<CellFailure>,
}

impl SweepGrid {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }

    /// Bias with the shortest settling time, and that time.
    pub fn fastest(&self) -> Option<(f64, f64)> {
        self.biases
            .iter()
            .zip(&self.settling)
            .filter_map(|(b, s)| s.map(|s| (*b, s)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Runs a pulse-length scan at every bias. Failed rows are recorded and the
/// sweep continues.
pub fn reset_sweep(
    p: &DeviceParams,
    base: &ResetConfig,
    biases: &[f64],
    taus: &[f64],
    initial: InitialState,
) -> Result<SweepGrid> {
    if biases.is_empty() || taus.is_empty() {
        return Err(Error::Validation("sweep grids must be non-empty".into()));
    }
    let rows = par_map(biases, |&b| -> Result<(ResetContext, Vec<ScanPoint>)> {
        let cfg = ResetConfig { bias: b, ..base.clone() };
        let ctx = ResetContext::new(p, &cfg)?;
        let pts = ctx.scan(&initial.build(ctx.model.dims)?, taus)?;
        Ok((ctx, pts))
    });
    let mut grid = SweepGrid {
        biases: biases.to_vec(),
        taus: taus.to_vec(),
        residual: Vec::with_capacity(biases.len()),
        leakage: Vec::with_capacity(biases.len()),
        kappa_eff: Vec::with_capacity(biases.len()),
        omega: Vec::with_capacity(biases.len()),
        settling: Vec::with_capacity(biases.len()),
        g_rabi: base.g_rabi,
        omega_rule: base.omega,
        initial,
        failures: Vec::new(),
    };
    for (i, row) in rows.into_iter().enumerate() {
        match row {
            Ok((ctx, pts)) => {
                let res: Vec<f64> = pts.iter().map(|q| q.p_e).collect();
                grid.settling.push(settling_time(taus, &res, RESET_THRESHOLD));
                grid.residual.push(res);
                grid.leakage.push(pts.iter().map(|q| q.p_f).collect());
                grid.kappa_eff.push(ctx.kappa_eff);
                grid.omega.push(ctx.omega);
            }
            Err(e) => {
                grid.failures.push(CellFailure {
                    bias_index: i,
                    tau_index: None,
                    message: e.to_string(),
                });
                grid.residual.push(vec![f64::NAN; taus.len()]);
                grid.leakage.push(vec![f64::NAN; taus.len()]);
                grid.kappa_eff.push(f64::NAN);
                grid.omega.push(f64::NAN);
                grid.settling.push(None);
            }
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_helpers() {
        let taus = [0.0, 1.0, 2.0, 3.0, 4.0];
        let r = [0.05, 0.005, 0.02, 0.008, 0.004];
        assert!((first_crossing(&taus, &r, 0.01).unwrap() - (0.04 / 0.045)).abs() < 1e-12);
        let s = settling_time(&taus, &r, 0.01).unwrap();
        assert!((s - (2.0 + 0.01 / 0.012)).abs() < 1e-12);
        assert_eq!(settling_time(&taus, &[0.5, 0.4, 0.3, 0.2, 0.1], 0.01), None);
        assert_eq!(settling_time(&taus, &[0.001; 5], 0.01), Some(0.0));
    }

    #[test]
    fn maxima_check() {
        let taus: Vec<f64> = (0..200).map(|k| k as f64).collect();
        let decaying: Vec<f64> = taus.iter().map(|t| 0.01 + (-t / 50.0).exp() * (1.0 + (t / 3.0).cos())).collect();
        let period = 6.0 * std::f64::consts::PI;
        assert!(periodic_maxima_nonincreasing(&taus, &decaying, 5.0, period));
        let growing: Vec<f64> = taus.iter().map(|t| (t / 50.0).exp() * (1.0 + (t / 3.0).cos())).collect();
        assert!(!periodic_maxima_nonincreasing(&taus, &growing, 5.0, period));
    }

    #[test]
    fn decay_fit_recovers_modulated_exponential() {
        let taus: Vec<f64> = (0..150).map(|k| 40e-9 + k as f64 * 2e-9).collect();
        let (r, w) = (1.38e7, 2.18e8);
        let ys: Vec<f64> = taus
            .iter()
            .map(|t| 0.005 + (-r * t).exp() * (0.1 + 0.05 * (w * t).cos() - 0.02 * (2.0 * w * t).sin()))
            .collect();
        let f = reset_decay_fit(&taus, &ys, 50e-9, 1.2e7, 2.1e8).unwrap();
        assert!((f.rate / r - 1.0).abs() < 1e-6, "{}", f.rate);
        assert!((f.omega / w - 1.0).abs() < 1e-6);
        assert!((f.floor - 0.005).abs() < 1e-9);
    }

    #[test]
    fn optimal_rule_and_kappa() {
        let p = DeviceParams::table1();
        let cfg = ResetConfig { qcr: false, ..ResetConfig::operating_point() };
        let ctx = ResetContext::new(&p, &cfg).unwrap();
        assert!((ctx.kappa_eff / p.kappa_r - 1.0).abs() < 1e-12);
        let k = p.kappa_r;
        let g = cfg.g_rabi;
        assert!((ctx.omega - (18.0 * g * g - k * k).sqrt() / 6.0).abs() < 1e-6 * ctx.omega);
        assert_eq!(ctx.drive_validity, Some(DriveValidity::Valid));
        let scaled = ResetContext::new(&p, &ResetConfig { omega: OmegaRule::Scaled(0.5), ..cfg.clone() }).unwrap();
        assert!((scaled.omega / ctx.omega - 0.5).abs() < 1e-12);
        let weak = ResetConfig { g_rabi: 1e5, ..cfg };
        assert!(matches!(ResetContext::new(&p, &weak), Err(Error::Domain(_))));
    }
}
