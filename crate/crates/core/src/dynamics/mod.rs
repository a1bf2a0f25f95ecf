//! Lindblad master-equation dynamics of the driven transmon–resonator system.
//!
//! States are integrated as row-major flattened density matrices with the
//! Dormand–Prince stepper. Two frames are available: the literal Schrödinger
//! picture and a rotating frame in which both drives are static at
//! resonance. Populations agree between the two up to integration error.

mod dissipators;
mod evolve;
mod generator;
mod model;
mod steady;

pub use dissipators::DissipatorSet;
pub use evolve::{
    evolve, evolve_from, frame_equivalence_check, EvolveOptions, Evolution, FrameCheck, PopulationTrace,
    FRAME_TOLERANCE, POSITIVITY_LIMIT, TRACE_LIMIT,
};
pub use model::{Channel, DressedSpectrum, DriveAmplitudes, Frame, HamiltonianModel, Term};
pub use steady::{steady_state, SteadyState, NULL_THRESHOLD};
