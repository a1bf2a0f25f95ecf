//! Shared numerical kernels.

pub mod eigen;
pub mod lsq;
pub mod ode;
pub mod quadrature;

pub use eigen::{hermitian_eigen, hermiticity_defect, HermitianEigen};
pub use lsq::{curve_fit, linear_fit, nonlinear_least_squares, FitReport, LinearFit, LsqOptions};
pub use ode::{OdeOptions, OdeStats, Stepper};
pub use quadrature::{integrate, Quadrature, QuadratureSpec};
