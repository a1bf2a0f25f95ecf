//! Explicit Runge–Kutta integration of complex-valued systems `y' = f(t, y)`.
//!
//! The default stepper is the Dormand–Prince 5(4) pair with FSAL and an
//! elementary step-size controller. A fixed-step classical RK4 mode exists
//! for cross-checks.

use num_complex::Complex64;

use crate::{Error, Result};

type C = Complex64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepper {
    DormandPrince45,
    /// Classical RK4 with the given step (s); tolerances are ignored.
    Rk4Fixed { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size.
    pub h_max: f64,
    /// Step floor; the solver fails if it would need a smaller step.
    pub h_min: f64,
    pub h_init: Option<f64>,
    pub max_steps: usize,
    pub stepper: Stepper,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_max: f64::INFINITY,
            h_min: 0.0,
            h_init: None,
            max_steps: 50_000_000,
            stepper: Stepper::DormandPrince45,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

struct Workspace {
    k: [Vec<C>; 7],
    tmp: Vec<C>,
    stage: Vec<C>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![C::new(0.0, 0.0); n]),
            tmp: vec![C::new(0.0, 0.0); n],
            stage: vec![C::new(0.0, 0.0); n],
        }
    }
}

fn combine(out: &mut [C], y: &[C], h: f64, terms: &[(f64, &[C])]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o = y[i] + acc * h;
    }
}

/// Integrates `y` from `t0` through every time in `t_out` (non-decreasing,
/// all ≥ `t0`), calling `observer(index, t, y)` at each. On return `y` holds
/// the state at the last output time.
pub fn solve<F, O>(
    mut rhs: F,
    t0: f64,
    y: &mut Vec<C>,
    t_out: &[f64],
    opts: &OdeOptions,
    mut observer: O,
) -> Result<OdeStats>
where
    F: FnMut(f64, &[C], &mut [C]),
    O: FnMut(usize, f64, &[C]) -> Result<()>,
{
    if t_out.windows(2).any(|w| w[1] < w[0]) || t_out.first().is_some_and(|&t| t < t0) {
        return Err(Error::Validation(
            "output times must be non-decreasing and not before t0".into(),
        ));
    }
    let n = y.len();
    let mut ws = Workspace::new(n);
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut h = opts.h_init.unwrap_or(0.0);
    let mut fsal_valid = false;
    for (idx, &target) in t_out.iter().enumerate() {
        while target - t > 1e-15 * target.abs().max(1e-30) {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Integration {
                    time: t,
                    reason: format!("step budget of {} exhausted", opts.max_steps),
                });
            }
            match opts.stepper {
                Stepper::Rk4Fixed { step } => {
                    let h_step = step.min(target - t);
                    rk4_step(&mut rhs, t, y, h_step, &mut ws);
                    stats.rhs_evals += 4;
                    stats.accepted += 1;
                    t += h_step;
                    if target - t < 1e-12 * h_step {
                        t = target;
                    }
                }
                Stepper::DormandPrince45 => {
                    if !fsal_valid {
                        rhs(t, y, &mut ws.k[0]);
                        stats.rhs_evals += 1;
                        fsal_valid = true;
                    }
                    if h <= 0.0 {
                        h = initial_step(y, &ws.k[0], opts).min(opts.h_max);
                    }
                    let remaining = target - t;
                    let mut h_try = h.min(opts.h_max).max(opts.h_min);
                    let landing = h_try >= remaining;
                    if landing {
                        h_try = remaining;
                    }
                    let err = dp45_trial(&mut rhs, t, y, h_try, opts, &mut ws);
                    stats.rhs_evals += 6;
                    if !err.is_finite() {
                        return Err(Error::Integration {
                            time: t,
                            reason: "non-finite state encountered".into(),
                        });
                    }
                    if err <= 1.0 {
                        stats.accepted += 1;
                        t = if landing { target } else { t + h_try };
                        std::mem::swap(y, &mut ws.tmp);
                        ws.k.swap(0, 6);
                        let fac = if err == 0.0 {
                            5.0
                        } else {
                            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                        };
                        // A landing step is artificially short; keep the old proposal.
                        h = if landing { h.max(h_try * fac) } else { h_try * fac };
                    } else {
                        stats.rejected += 1;
                        h = h_try * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                        if h_try <= opts.h_min || h < 1e-15 * t.abs().max(f64::MIN_POSITIVE) {
                            return Err(Error::Integration {
                                time: t,
                                reason: format!(
                                    "tolerance rtol={:.1e}, atol={:.1e} not achievable above step floor {:.3e}",
                                    opts.rtol, opts.atol, opts.h_min
                                ),
                            });
                        }
                    }
                }
            }
        }
        observer(idx, target, y)?;
    }
    Ok(stats)
}

fn initial_step(y: &[C], f0: &[C], opts: &OdeOptions) -> f64 {
    let mut d0: f64 = 0.0;
    let mut d1: f64 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = opts.atol + opts.rtol * yi.norm();
        d0 += (yi.norm() / sc).powi(2);
        d1 += (fi.norm() / sc).powi(2);
    }
    let n = y.len().max(1) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(opts.h_max)
}

fn dp45_trial<F>(rhs: &mut F, t: f64, y: &[C], h: f64, opts: &OdeOptions, ws: &mut Workspace) -> f64
where
    F: FnMut(f64, &[C], &mut [C]),
{
    let n = y.len();
    {
        let stage = &mut ws.stage;
        let [k1, k2, k3, k4, k5, k6, k7] = &mut ws.k;
        combine(stage, y, h, &[(A21, k1)]);
        rhs(t + C2 * h, stage, k2);
        combine(stage, y, h, &[(A31, k1), (A32, k2)]);
        rhs(t + C3 * h, stage, k3);
        combine(stage, y, h, &[(A41, k1), (A42, k2), (A43, k3)]);
        rhs(t + C4 * h, stage, k4);
        combine(stage, y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        rhs(t + C5 * h, stage, k5);
        combine(
            stage,
            y,
            h,
            &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
        );
        rhs(t + h, stage, k6);
        combine(
            &mut ws.tmp,
            y,
            h,
            &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
        );
        rhs(t + h, &ws.tmp, k7);
    }
    let [k1, _k2, k3, k4, k5, k6, k7] = &ws.k;
    let mut acc = 0.0;
    for i in 0..n {
        let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        let sc = opts.atol + opts.rtol * y[i].norm().max(ws.tmp[i].norm());
        acc += (e.norm() / sc).powi(2);
    }
    (acc / n.max(1) as f64).sqrt()
}

fn rk4_step<F>(rhs: &mut F, t: f64, y: &mut Vec<C>, h: f64, ws: &mut Workspace)
where
    F: FnMut(f64, &[C], &mut [C]),
{
    let n = y.len();
    let stage = &mut ws.stage;
    let [k1, k2, k3, k4, ..] = &mut ws.k;
    rhs(t, y, k1);
    combine(stage, y, h, &[(0.5, k1)]);
    rhs(t + 0.5 * h, stage, k2);
    combine(stage, y, h, &[(0.5, k2)]);
    rhs(t + 0.5 * h, stage, k3);
    combine(stage, y, h, &[(1.0, k3)]);
    rhs(t + h, stage, k4);
    for i in 0..n {
        y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
    }
}
