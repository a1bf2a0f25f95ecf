//! Pulse-level simulation of superconducting-qubit initialization through a
//! quantum-circuit refrigerator (QCR).
//!
//! The crate models a transmon (truncated to `|g⟩, |e⟩, |f⟩`) coupled to a
//! readout resonator whose decay rate is tuned by a voltage-biased SINIS
//! junction. Two microwave drives (`e0 → f0` and `f0 → g1`) move the qubit
//! excitation into a resonator photon, which the biased junction then absorbs.
//!
//! Module map:
//!
//! - [`params`]: device parameters, unit conversion on load, derived rates.
//! - [`hilbert`]: qutrit ⊗ Fock operator algebra and density matrices.
//! - [`pulses`]: flat-top Gaussian envelopes and the reset pulse schedule.
//! - [`qcr`]: Dynes density of states, photon-assisted tunneling rates, `κ_eff`,
//!   the SINIS I–V characteristic.
//! - [`dynamics`]: time-dependent Lindblad integration and steady states.
//! - [`protocols`]: ringdown, bias sweeps, reset sweeps, RPM, T1 and I–V fits.
//! - [`numerics`]: quadrature, Runge–Kutta stepping, least squares, eigensolver.
//!
//! All internal quantities are SI: rad/s, s, J, F, Ω, K, V, A.

pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod numerics;
pub mod params;
pub mod protocols;
pub mod pulses;
pub mod qcr;
pub mod units;

pub use error::{Error, Result};
pub use hilbert::{DensityMatrix, OperatorMatrix, Populations, SpaceDims};
pub use params::{DerivedParams, DeviceParams};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
