use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::dissipators::DissipatorSet;
use super::generator::{Bias, Generator};
use super::model::{Frame, HamiltonianModel};
use crate::hilbert::{DensityMatrix, C64};
use crate::{Error, Result};

/// Relative singular-value threshold below which a Liouvillian direction
/// counts as stationary.
pub const NULL_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖L(ρ)‖ / ‖L‖` (Frobenius norms).
    pub residual: f64,
}

/// Dense Liouvillian superoperator on row-major vec(ρ), drives off.
fn superoperator(model: &HamiltonianModel, diss: &DissipatorSet, u: f64) -> DMatrix<C64> {
    let lit = model.with_frame(Frame::Literal);
    let mut gen = Generator::new(&lit, diss, None, Bias::Fixed(u));
    let n2 = model.dims.dim().pow(2);
    let mut l = DMatrix::zeros(n2, n2);
    let mut basis = vec![Complex64::new(0.0, 0.0); n2];
    let mut col = vec![Complex64::new(0.0, 0.0); n2];
    for c in 0..n2 {
        basis[c] = Complex64::new(1.0, 0.0);
        gen.apply(0.0, &basis, &mut col);
        basis[c] = Complex64::new(0.0, 0.0);
        for (r, v) in col.iter().enumerate() {
            l[(r, c)] = *v;
        }
    }
    l
}

/// Stationary state of the static Liouvillian (drives off, QCR table, if
/// any, held at envelope fraction `u`).
pub fn steady_state(model: &HamiltonianModel, diss: &DissipatorSet, u: f64) -> Result<SteadyState> {
    diss.validate()?;
    let n = model.dims.dim();
    let l = superoperator(model, diss, u);
    let norm = l.norm();
    let sv = l.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let null_dim = sv.iter().filter(|s| **s <= NULL_THRESHOLD * smax).count();
    if null_dim != 1 {
        return Err(Error::Degenerate(format!(
            "stationary subspace has dimension {null_dim}"
        )));
    }
    // Replace the ρ_00 equation by the trace constraint.
    let mut a = l.clone();
    let mut b = DVector::zeros(n * n);
    for c in 0..n * n {
        a[(0, c)] = Complex64::new(0.0, 0.0);
    }
    for i in 0..n {
        a[(0, i * n + i)] = Complex64::new(1.0, 0.0);
    }
    b[0] = Complex64::new(1.0, 0.0);
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::Degenerate("trace-constrained Liouvillian is singular".into()))?;
    let residual = (&l * &x).norm() / norm;
    let raw = DMatrix::from_row_slice(n, n, x.as_slice());
    let herm = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let rho = DensityMatrix::new(model.dims, herm)?;
    Ok(SteadyState { rho, residual })
}
