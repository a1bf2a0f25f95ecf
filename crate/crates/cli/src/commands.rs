use std::path::Path;

use qcrsim::dynamics::{evolve, DissipatorSet, EvolveOptions, Frame, HamiltonianModel};
use qcrsim::hilbert::Level;
use qcrsim::params::DeviceParams;
use qcrsim::protocols::{
    kappa_sweep as run_kappa_sweep, reset_sweep as run_reset_sweep, ringdown as run_ringdown, fit_iv, rpm_estimate,
    simulate_rpm, t1_fit, InitialState, OmegaRule, ResetConfig, ResetContext, RingdownSettings, RpmAmplitudes,
    RESET_THRESHOLD,
};
use qcrsim::pulses::DEFAULT_RISE;
use qcrsim::qcr::{iv_current, JunctionParams};
use qcrsim::units::{angular, bias_from_normalized, hertz, GHZ, MHZ, NS, US};
use rayon::prelude::*;
use serde_json::json;

use crate::output::{num, opt, sibling, Outputs};
use crate::{
    CliError, DriveArgs, FrameArg, IvArgs, KappaSweepArgs, Report, ResetArgs, ResetSweepArgs, RingdownArgs,
    RpmArgs, SpectrumArgs, T1Args,
};

/// Shortest nonzero reset pulse: one rise plus one fall edge.
const MIN_PULSE: f64 = 2.0 * DEFAULT_RISE;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// `steps` evenly spaced points; a single step gives `[min]`.
fn linspace(min: f64, max: f64, steps: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if steps == 0 {
        return Err(config_err(format!("{what}: steps must be at least 1")));
    }
    if !(min.is_finite() && max.is_finite()) || (steps > 1 && max <= min) {
        return Err(config_err(format!("{what}: need finite min < max")));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    Ok((0..steps).map(|k| min + (max - min) * k as f64 / (steps - 1) as f64).collect())
}

fn parse_omega(s: &str) -> Result<OmegaRule, CliError> {
    let s = s.trim();
    if s == "eq2" || s == "optimal" {
        return Ok(OmegaRule::Optimal);
    }
    if let Some(k) = s.strip_prefix("eq2*").or_else(|| s.strip_prefix("optimal*")) {
        let k: f64 = k.parse().map_err(|_| config_err(format!("bad --omega scale `{k}`")))?;
        return Ok(OmegaRule::Scaled(k));
    }
    let mhz: f64 = s.parse().map_err(|_| config_err(format!("--omega expects eq2, eq2*K, optimal, optimal*K or MHz, got `{s}`")))?;
    Ok(OmegaRule::Explicit(angular(mhz * MHZ)))
}

fn reset_config(d: &DriveArgs, bias: f64) -> Result<ResetConfig, CliError> {
    Ok(ResetConfig {
        bias,
        g_rabi: angular(d.g_rabi_mhz * MHZ),
        omega: parse_omega(&d.omega)?,
        qcr: !d.qcr_off,
        frame: match d.frame {
            FrameArg::Rotating => Frame::Rotating,
            FrameArg::Literal => Frame::Literal,
        },
        opts: EvolveOptions::default(),
    })
}

fn initial(d: &DriveArgs, p: &DeviceParams) -> InitialState {
    match d.initial {
        crate::InitialState::Thermal => InitialState::Thermal(p.p_e_thermal),
        crate::InitialState::Ground => InitialState::Ground,
        crate::InitialState::Excited => InitialState::Excited,
    }
}

pub fn kappa_sweep(a: &KappaSweepArgs, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    let biases = linspace(a.bias_min, a.bias_max, a.steps, "bias grid")?;
    let d = p.derive()?;
    let points = run_kappa_sweep(&biases, p, &d, &RingdownSettings::default())?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|k| {
            vec![
                num(k.normalized),
                num(k.gamma_down),
                num(k.gamma_up),
                num(k.delta_gamma),
                num(k.kappa_eff_theory),
                num(k.kappa_eff_ringdown),
            ]
        })
        .collect();
    out.csv(
        &a.out,
        &["eVb_over_2Delta", "gamma_down", "gamma_up", "delta_gamma", "kappa_eff_theory", "kappa_eff_ringdown"],
        &rows,
    )?;
    let peak = points.iter().max_by(|x, y| x.kappa_eff_theory.total_cmp(&y.kappa_eff_theory));
    Ok(Report::ok(json!({
        "points": points.len(),
        "kappa_r": p.kappa_r,
        "max_kappa_eff_theory": peak.map(|k| k.kappa_eff_theory),
        "max_at_eVb_over_2Delta": peak.map(|k| k.normalized),
    })))
}

pub fn reset(a: &ResetArgs, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    let cfg = reset_config(&a.drive, a.bias)?;
    let ctx = ResetContext::new(p, &cfg)?;
    let rho0 = initial(&a.drive, p).build(ctx.model.dims)?;
    let o = ctx.simulate(&rho0, a.tau_ns * NS, a.samples)?;
    let t = &o.trace;
    let rows: Vec<Vec<String>> = (0..t.len())
        .map(|k| vec![num(t.times[k] / NS), num(t.p_g[k]), num(t.p_e[k]), num(t.p_f[k]), num(t.n_mean[k])])
        .collect();
    out.csv(&a.out, &["time_ns", "p_g", "p_e", "p_f", "n_mean"], &rows)?;
    Ok(Report::ok(json!({
        "tau_ns": a.tau_ns,
        "eVb_over_2Delta": a.bias,
        "residual_p_e": o.residual_p_e,
        "p_f": o.p_f,
        "p_g": o.p_g,
        "n_mean": o.n_mean,
        "omega_rabi_MHz": hertz(o.omega) / MHZ,
        "g_rabi_MHz": a.drive.g_rabi_mhz,
        "kappa_eff": o.kappa_eff,
        "drive_validity": ctx.drive_validity.map(|v| format!("{v:?}")),
        "n_fock": ctx.model.dims.n_fock,
        "below_threshold": o.residual_p_e <= RESET_THRESHOLD,
        "max_trace_error": t.max_trace_error(),
        "min_eigenvalue": t.min_eigenvalue(),
    })))
}

pub fn reset_sweep(a: &ResetSweepArgs, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    let biases = linspace(a.bias_min, a.bias_max, a.bias_steps, "bias grid")?;
    let taus: Vec<f64> = linspace(a.tau_min_ns, a.tau_max_ns, a.tau_steps, "pulse-length grid")?
        .into_iter()
        .map(|t| t * NS)
        .collect();
    if let Some(t) = taus.iter().find(|t| **t != 0.0 && **t < MIN_PULSE) {
        return Err(config_err(format!(
            "pulse length {:.3} ns is shorter than rise + fall ({:.1} ns); use 0 or at least that",
            t / NS,
            MIN_PULSE / NS
        )));
    }
    let cfg = reset_config(&a.drive, biases[0])?;
    let grid = run_reset_sweep(p, &cfg, &biases, &taus, initial(&a.drive, p))?;

    let mut rows = Vec::with_capacity(biases.len() * taus.len());
    for (i, b) in biases.iter().enumerate() {
        let row_failed = grid.failures.iter().any(|f| f.bias_index == i);
        for (j, t) in taus.iter().enumerate() {
            rows.push(vec![
                num(*b),
                num(t / NS),
                num(grid.residual[i][j]),
                num(grid.leakage[i][j]),
                if row_failed { "failed".into() } else { "ok".into() },
            ]);
        }
    }
    out.csv(&a.out, &["eVb_over_2Delta", "tau_ns", "residual_p_e", "p_f", "status"], &rows)?;
    let contour: Vec<Vec<String>> = biases
        .iter()
        .enumerate()
        .map(|(i, b)| {
            vec![
                num(*b),
                num(grid.kappa_eff[i]),
                num(hertz(grid.omega[i]) / MHZ),
                opt(grid.settling[i].map(|t| t / NS)),
            ]
        })
        .collect();
    out.csv(
        &sibling(&a.out, "contour"),
        &["eVb_over_2Delta", "kappa_eff", "omega_rabi_MHz", "settling_ns"],
        &contour,
    )?;
    let fastest = grid.fastest();
    let summary = json!({
        "biases": biases.len(),
        "taus": taus.len(),
        "g_rabi_MHz": a.drive.g_rabi_mhz,
        "omega_rule": a.drive.omega,
        "initial": grid.initial,
        "threshold": RESET_THRESHOLD,
        "fastest_eVb_over_2Delta": fastest.map(|f| f.0),
        "fastest_settling_ns": fastest.map(|f| f.1 / NS),
        "failures": grid.failures,
    });
    let partial = (!grid.is_complete()).then(|| {
        CliError::Numeric(format!("{} of {} bias rows failed", grid.failures.len(), biases.len()))
    });
    Ok(Report { summary, partial })
}

fn read_iv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let (mut v, mut i) = (Vec::new(), Vec::new());
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let field = |c: usize| -> Result<f64, CliError> {
            rec.get(c)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| config_err(format!("{}: row {} column {} is not a number", path.display(), k + 2, c + 1)))
        };
        v.push(field(0)?);
        i.push(field(1)?);
    }
    Ok((v, i))
}

pub fn iv(a: &IvArgs, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    let jp = JunctionParams::from_device(p, &p.derive()?);
    if let Some(s) = &a.mode.synth {
        let (vmax, steps) = (s[0] * 1e-3, s[1]);
        if steps < 1.0 || steps.fract() != 0.0 {
            return Err(config_err("--synth STEPS must be a positive integer"));
        }
        let v = linspace(vmax / steps, vmax, steps as usize, "voltage grid")?;
        let i: Vec<f64> = v.par_iter().map(|&x| iv_current(x, &jp)).collect::<Result<_, _>>()?;
        let rows: Vec<Vec<String>> = v.iter().zip(&i).map(|(v, i)| vec![num(*v), num(*i)]).collect();
        out.csv(&a.out, &["voltage_V", "current_A"], &rows)?;
        return Ok(Report::ok(json!({ "mode": "synth", "points": v.len(), "v_max": vmax })));
    }
    let path = a.mode.fit.as_ref().expect("clap enforces one mode");
    let (v, i) = read_iv(path)?;
    let f = fit_iv(&v, &i, &jp)?;
    let rows = vec![
        vec!["R_T_kOhm".into(), num(f.r_t / 1e3), num(f.relative_errors[0])],
        vec!["Delta_ueV".into(), num(f.delta / qcrsim::units::UEV), num(f.relative_errors[1])],
        vec!["T_N_mK".into(), num(f.t_n / 1e-3), num(f.relative_errors[2])],
        vec!["gamma_D".into(), num(f.gamma_d), num(f.relative_errors[3])],
    ];
    out.csv(&a.out, &["parameter", "value", "relative_error"], &rows)?;
    Ok(Report::ok(json!({
        "mode": "fit",
        "points": v.len(),
        "gamma_d_identifiable": f.gamma_d_identifiable,
        "converged": f.report.converged,
        "iterations": f.report.iterations,
        "residual_norm": f.report.residual_norm,
        "condition": f.report.condition,
    })))
}

pub fn ringdown(a: &RingdownArgs, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    let mut s = RingdownSettings { delta_t_ab: a.delta_t_ab_ns * NS, ..RingdownSettings::default() };
    if !a.taus_ns.is_empty() {
        s.taus = a.taus_ns.iter().map(|t| t * NS).collect();
    }
    let r = run_ringdown(bias_from_normalized(a.bias, p.delta), &s, p, &p.derive()?)?;
    let rows: Vec<Vec<String>> =
        r.taus.iter().zip(&r.ratios).map(|(t, q)| vec![num(t / NS), num(*q), num(q.ln())]).collect();
    out.csv(&a.out, &["tau_ns", "ratio", "ln_ratio"], &rows)?;
    Ok(Report::ok(json!({
        "eVb_over_2Delta": a.bias,
        "delta_gamma": r.delta_gamma,
        "delta_gamma_sigma": r.delta_gamma_sigma,
        "delta_gamma_rise_fall": r.delta_gamma_rise_fall,
        "kappa_r": r.kappa_r,
        "kappa_eff": r.kappa_r + r.delta_gamma,
        "slope": r.line.slope,
        "intercept": r.line.intercept,
        "fit_residual": r.line.residual_norm,
        "unphysical": r.unphysical,
    })))
}

pub fn rpm(a: &RpmArgs, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    let (amps, truth, leak) = match (a.a1, a.a2, a.b1, a.b2, a.after_reset_ns) {
        (Some(a1), Some(a2), Some(b1), Some(b2), None) => (RpmAmplitudes { a1, a2, b1, b2 }, None, false),
        (None, None, None, None, Some(tau)) => {
            let ctx = ResetContext::new(p, &ResetConfig::operating_point())?;
            let rho0 = InitialState::Thermal(p.p_e_thermal).build(ctx.model.dims)?;
            let o = ctx.simulate(&rho0, tau * NS, 0)?;
            let (amps, leak) = simulate_rpm(&o.final_state)?;
            (amps, Some(o.residual_p_e), leak)
        }
        _ => return Err(config_err("give either all of --a1 --a2 --b1 --b2 or --after-reset-ns")),
    };
    let est = rpm_estimate(&amps)?;
    let rows = vec![vec![
        num(amps.a1),
        num(amps.a2),
        num(amps.b1),
        num(amps.b2),
        num(est.p_e),
        num(est.raw),
        est.out_of_range.to_string(),
        opt(truth),
    ]];
    out.csv(&a.out, &["a1", "a2", "b1", "b2", "p_e", "p_e_raw", "out_of_range", "p_e_simulated"], &rows)?;
    Ok(Report::ok(json!({
        "p_e": est.p_e,
        "out_of_range": est.out_of_range,
        "p_e_simulated": truth,
        "leakage_warning": leak,
    })))
}

pub fn t1(a: &T1Args, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    if a.samples < 4 || !(a.duration_us > 0.0) {
        return Err(config_err("t1 needs a positive duration and at least 4 samples"));
    }
    let d = p.derive()?;
    let model = HamiltonianModel::from_params(p, Frame::Rotating)?.uncoupled();
    let diss = DissipatorSet::from_params(p, &d, p.kappa_r);
    let rho0 = InitialState::Excited.build(model.dims)?;
    let grid = linspace(0.0, a.duration_us * US, a.samples, "time grid")?;
    let ev = evolve(&rho0, &model, &diss, None, &grid, &EvolveOptions::default())?;
    let t = &ev.trace;
    let rows: Vec<Vec<String>> =
        (0..t.len()).map(|k| vec![num(t.times[k] / US), num(t.p_g[k]), num(t.p_e[k]), num(t.p_f[k])]).collect();
    out.csv(&a.out, &["time_us", "p_g", "p_e", "p_f"], &rows)?;
    let f = t1_fit(t)?;
    Ok(Report::ok(json!({
        "t1_us": f.t1 / US,
        "p_inf": f.p_inf,
        "p0": f.p0,
        "configured_t1_us": p.t1 / US,
        "residual_norm": f.report.residual_norm,
    })))
}

pub fn spectrum(a: &SpectrumArgs, p: &DeviceParams, out: &mut Outputs) -> Result<Report, CliError> {
    let model = HamiltonianModel::from_params(p, Frame::Literal)?;
    let s = model.dressed_spectrum()?;
    let ghz = |w: f64| num(hertz(w) / GHZ);
    let mut rows = vec![
        vec!["ge_dressed_GHz".to_string(), ghz(s.ge())],
        vec!["ef_dressed_GHz".into(), ghz(s.ef())],
        vec!["resonator_dressed_GHz".into(), ghz(s.resonator())],
        vec!["f0g1_dressed_GHz".into(), ghz(s.f0g1())],
        vec!["f0g1_bare_GHz".into(), ghz(model.bare_f0g1())],
    ];
    if let Some(m) = p.omega_f0g1_measured {
        rows.push(vec!["f0g1_measured_GHz".into(), ghz(m)]);
    }
    for (q, name) in [(Level::G, "g"), (Level::E, "e"), (Level::F, "f")] {
        for m in 0..s.dims.n_fock {
            rows.push(vec![format!("level_{name}{m}_GHz"), ghz(s.energy(q, m))]);
        }
    }
    out.csv(&a.out, &["quantity", "value"], &rows)?;
    Ok(Report::ok(json!({
        "f0g1_dressed_GHz": hertz(s.f0g1()) / GHZ,
        "f0g1_bare_GHz": hertz(model.bare_f0g1()) / GHZ,
        "min_overlap": s.overlaps.iter().copied().fold(f64::INFINITY, f64::min),
    })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(linspace(0.0, 2.2, 1, "x").unwrap(), vec![0.0]);
        let g = linspace(0.0, 2.0, 5, "x").unwrap();
        assert_eq!(g, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(linspace(1.0, 0.0, 3, "x").is_err());
        assert!(linspace(0.0, 1.0, 0, "x").is_err());
    }

    #[test]
    fn omega_rules() {
        assert_eq!(parse_omega("eq2").unwrap(), OmegaRule::Optimal);
        assert_eq!(parse_omega("eq2*0.5").unwrap(), OmegaRule::Scaled(0.5));
        assert_eq!(parse_omega("optimal*2").unwrap(), OmegaRule::Scaled(2.0));
        assert_eq!(parse_omega("0").unwrap(), OmegaRule::Explicit(0.0));
        assert!(parse_omega("fast").is_err());
    }

    #[test]
    fn fixed_formatting() {
        assert_eq!(num(1.03), "1.03000000000e0");
        assert_eq!(num(f64::NAN), "NaN");
        assert_eq!(opt(None), "");
    }
}
