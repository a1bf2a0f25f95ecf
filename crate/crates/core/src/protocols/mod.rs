//! Experimental procedures built on the model: resonator ringdown and the
//! `κ_eff` bias sweep, reset simulations and sweeps, the optimal-drive rule,
//! Rabi population measurement, T1 and I–V fits, and the ground-state
//! fidelity estimate.

mod drive;
mod fits;
mod reset;
mod ringdown;
mod rpm;

pub use drive::{fidelity_estimate, fidelity_from_rates, optimal_drive, DriveValidity, OptimalDrive};
pub use fits::{fit_iv, t1_fit, IvFit, T1Fit, IV_LEAKAGE_SENSITIVITY};
pub use reset::{
    first_crossing, periodic_maxima_nonincreasing, reset_decay_fit, reset_sweep, settling_time,
    simulate_reset, CellFailure, DecayFit, InitialState, OmegaRule, ResetConfig, ResetContext, ResetOutcome,
    ScanPoint, SweepGrid, FOCK_TAIL, RESET_THRESHOLD,
};
pub use ringdown::{
    fit_kappa_r, fit_ringdown, kappa_sweep, ringdown, ringdown_ratio, simulate_ringdown_ratios,
    KappaPoint, RingdownResult, RingdownSettings, DEFAULT_DELTA_T_AB,
};
pub use rpm::{rpm_estimate, simulate_rpm, RpmAmplitudes, RpmEstimate, RPM_LEAKAGE_WARNING};

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order follows input order.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, R>(items: &[T], f: impl Fn(&T) -> R) -> Vec<R> {
    items.iter().map(f).collect()
}
