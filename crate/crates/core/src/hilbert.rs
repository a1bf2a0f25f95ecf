//! Truncated qutrit ⊗ Fock space.
//!
//! Basis ordering is qubit-major and fixed: `|q, m⟩` has index
//! `q·n_fock + m`, with `q ∈ {g=0, e=1, f=2}` and `m ∈ 0..n_fock`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{hermitian_eigen, hermiticity_defect};
use crate::{Error, Result};

pub type C64 = Complex64;

pub const N_QUBIT: usize = 3;

/// Qubit level labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    G = 0,
    E = 1,
    F = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceDims {
    pub n_fock: usize,
}

impl SpaceDims {
    pub fn new(n_fock: usize) -> Result<Self> {
        if n_fock < 2 {
            return Err(Error::Validation(format!("n_fock must be at least 2, got {n_fock}")));
        }
        Ok(Self { n_fock })
    }

    pub fn dim(&self) -> usize {
        N_QUBIT * self.n_fock
    }

    /// Fock levels needed for a thermal resonator state of mean occupation
    /// `occupation`: the weight `(N/(1+N))^n` beyond the cutoff stays at or
    /// below `tail`.
    pub fn fock_levels_for(occupation: f64, tail: f64) -> usize {
        if !(occupation > 0.0) {
            return 1;
        }
        let ratio = occupation / (1.0 + occupation);
        (tail.ln() / ratio.ln()).ceil().max(1.0) as usize
    }

    pub fn index(&self, q: Level, m: usize) -> usize {
        debug_assert!(m < self.n_fock);
        q as usize * self.n_fock + m
    }

    /// Inverse of [`SpaceDims::index`].
    pub fn split(&self, i: usize) -> (usize, usize) {
        (i / self.n_fock, i % self.n_fock)
    }
}

/// Dense operator on the product space.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub dims: SpaceDims,
    pub entries: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn zeros(dims: SpaceDims) -> Self {
        Self {
            dims,
            entries: DMatrix::zeros(dims.dim(), dims.dim()),
        }
    }

    pub fn identity(dims: SpaceDims) -> Self {
        Self {
            dims,
            entries: DMatrix::identity(dims.dim(), dims.dim()),
        }
    }

    pub fn from_entries(dims: SpaceDims, entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != dims.dim() || entries.ncols() != dims.dim() {
            return Err(Error::Validation(format!(
                "operator is {}x{}, space has dimension {}",
                entries.nrows(),
                entries.ncols(),
                dims.dim()
            )));
        }
        Ok(Self { dims, entries })
    }

    pub fn dagger(&self) -> Self {
        Self {
            dims: self.dims,
            entries: self.entries.adjoint(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            dims: self.dims,
            entries: &self.entries * &other.entries,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            dims: self.dims,
            entries: &self.entries + &other.entries,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dims: self.dims,
            entries: &self.entries * s,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    /// Non-zero entries as `(row, col, value)`, row-major order.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let n = self.dims.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = self.entries[(i, j)];
                if v != C64::new(0.0, 0.0) {
                    out.push((i, j, v));
                }
            }
        }
        out
    }
}

/// `â`: lowers the resonator photon number.
pub fn annihilation_resonator(dims: SpaceDims) -> OperatorMatrix {
    let mut a = OperatorMatrix::zeros(dims);
    for q in [Level::G, Level::E, Level::F] {
        for m in 1..dims.n_fock {
            a.entries[(dims.index(q, m - 1), dims.index(q, m))] = C64::new((m as f64).sqrt(), 0.0);
        }
    }
    a
}

/// `b̂`: three-level transmon lowering operator.
pub fn lowering_qubit(dims: SpaceDims) -> OperatorMatrix {
    let mut b = OperatorMatrix::zeros(dims);
    for m in 0..dims.n_fock {
        b.entries[(dims.index(Level::G, m), dims.index(Level::E, m))] = C64::new(1.0, 0.0);
        b.entries[(dims.index(Level::E, m), dims.index(Level::F, m))] = C64::new(2f64.sqrt(), 0.0);
    }
    b
}

/// `|p⟩⟨q| ⊗ 1`.
pub fn qubit_transition(dims: SpaceDims, p: Level, q: Level) -> OperatorMatrix {
    let mut op = OperatorMatrix::zeros(dims);
    for m in 0..dims.n_fock {
        op.entries[(dims.index(p, m), dims.index(q, m))] = C64::new(1.0, 0.0);
    }
    op
}

/// Embeds a 3×3 qubit operator as `U ⊗ 1`.
pub fn qubit_operator(dims: SpaceDims, u: &[[C64; 3]; 3]) -> OperatorMatrix {
    let mut op = OperatorMatrix::zeros(dims);
    let levels = [Level::G, Level::E, Level::F];
    for (p, row) in levels.iter().zip(u.iter()) {
        for (q, v) in levels.iter().zip(row.iter()) {
            for m in 0..dims.n_fock {
                op.entries[(dims.index(*p, m), dims.index(*q, m))] = *v;
            }
        }
    }
    op
}

/// Level populations and marginals of a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Populations {
    /// Diagonal of ρ in basis order.
    pub levels: Vec<f64>,
    pub p_g: f64,
    pub p_e: f64,
    pub p_f: f64,
    /// `⟨â†â⟩`.
    pub n_mean: f64,
}

/// Density matrix on the product space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub dims: SpaceDims,
    pub entries: DMatrix<C64>,
}

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-9;

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(dims: SpaceDims, entries: DMatrix<C64>) -> Result<Self> {
        let rho = Self::unchecked(dims, entries)?;
        let herm = hermiticity_defect(&rho.entries);
        if herm > HERMITIAN_TOL {
            return Err(Error::Integrity(format!("density matrix not Hermitian (defect {herm:e})")));
        }
        let tr = rho.trace_error();
        if tr > TRACE_TOL {
            return Err(Error::Integrity(format!("density matrix trace off by {tr:e}")));
        }
        let min = rho.min_eigenvalue()?;
        if min < -POSITIVITY_TOL {
            return Err(Error::Integrity(format!("density matrix eigenvalue {min:e}")));
        }
        Ok(rho)
    }

    /// Wraps entries after a shape check only.
    pub fn unchecked(dims: SpaceDims, entries: DMatrix<C64>) -> Result<Self> {
        let op = OperatorMatrix::from_entries(dims, entries)?;
        Ok(Self {
            dims,
            entries: op.entries,
        })
    }

    pub fn pure(dims: SpaceDims, q: Level, m: usize) -> Self {
        let mut entries = DMatrix::zeros(dims.dim(), dims.dim());
        let i = dims.index(q, m);
        entries[(i, i)] = C64::new(1.0, 0.0);
        Self { dims, entries }
    }

    pub fn maximally_mixed(dims: SpaceDims) -> Self {
        let n = dims.dim();
        Self {
            dims,
            entries: DMatrix::identity(n, n) * C64::new(1.0 / n as f64, 0.0),
        }
    }

    /// Row-major flattening used by the integrators.
    pub fn to_row_major(&self) -> Vec<C64> {
        self.entries.transpose().as_slice().to_vec()
    }

    pub fn from_row_major(dims: SpaceDims, data: &[C64]) -> Result<Self> {
        let n = dims.dim();
        if data.len() != n * n {
            return Err(Error::Validation("flattened state has the wrong length".into()));
        }
        Ok(Self {
            dims,
            entries: DMatrix::from_row_slice(n, n, data),
        })
    }

    pub fn trace_error(&self) -> f64 {
        (self.entries.trace() - C64::new(1.0, 0.0)).norm()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.entries)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let h = (&self.entries + self.entries.adjoint()) * C64::new(0.5, 0.0);
        let eig = hermitian_eigen(&h)?;
        Ok(eig.values[0])
    }

    pub fn conjugate_by(&self, u: &OperatorMatrix) -> Self {
        Self {
            dims: self.dims,
            entries: &u.entries * &self.entries * u.entries.adjoint(),
        }
    }

    pub fn expectation(&self, op: &OperatorMatrix) -> C64 {
        (&self.entries * &op.entries).trace()
    }

    /// Convex combination `w·self + (1−w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Self {
        Self {
            dims: self.dims,
            entries: &self.entries * C64::new(w, 0.0) + &other.entries * C64::new(1.0 - w, 0.0),
        }
    }
}

/// Diagonal state with qubit populations `(1−P_e, P_e, 0)` and an empty resonator.
pub fn thermal_state(dims: SpaceDims, p_e: f64) -> Result<DensityMatrix> {
    if !(0.0..0.5).contains(&p_e) {
        return Err(Error::Validation(format!("thermal P_e must lie in [0, 0.5), got {p_e}")));
    }
    let mut entries = DMatrix::zeros(dims.dim(), dims.dim());
    let g = dims.index(Level::G, 0);
    let e = dims.index(Level::E, 0);
    entries[(g, g)] = C64::new(1.0 - p_e, 0.0);
    entries[(e, e)] = C64::new(p_e, 0.0);
    Ok(DensityMatrix { dims, entries })
}

/// Populations from a row-major flattened state, without validation.
pub fn populations_of(dims: SpaceDims, data: &[C64]) -> Populations {
    let n = dims.dim();
    let levels: Vec<f64> = (0..n).map(|i| data[i * n + i].re).collect();
    let mut marg = [0.0; 3];
    let mut n_mean = 0.0;
    for (i, p) in levels.iter().enumerate() {
        let (q, m) = dims.split(i);
        marg[q] += p;
        n_mean += m as f64 * p;
    }
    Populations {
        levels,
        p_g: marg[0],
        p_e: marg[1],
        p_f: marg[2],
        n_mean,
    }
}

/// Level populations; fails on a state that is not Hermitian or not normalised.
pub fn populations(rho: &DensityMatrix) -> Result<Populations> {
    let herm = rho.hermiticity_defect();
    if herm > HERMITIAN_TOL {
        return Err(Error::Integrity(format!("state not Hermitian (defect {herm:e})")));
    }
    let pops = populations_of(rho.dims, &rho.to_row_major());
    let total: f64 = pops.levels.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Integrity(format!("populations sum to {total}")));
    }
    Ok(pops)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fock_cutoff_rule() {
        assert_eq!(SpaceDims::fock_levels_for(0.0, 1e-9), 1);
        assert_eq!(SpaceDims::fock_levels_for(1.0, 0.25), 2);
        let n = SpaceDims::fock_levels_for(1.2, 1e-9);
        let r: f64 = 1.2 / 2.2;
        assert!(r.powi(n as i32) <= 1e-9 && r.powi(n as i32 - 1) > 1e-9);
    }

    fn dims(n: usize) -> SpaceDims {
        SpaceDims::new(n).unwrap()
    }

    fn close(a: &OperatorMatrix, b: &OperatorMatrix, tol: f64) -> bool {
        (&a.entries - &b.entries).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn annihilation_n2_structure() {
        let d = dims(2);
        let a = annihilation_resonator(d);
        assert_eq!(a.entries.nrows(), 6);
        let nz = a.triplets();
        assert_eq!(nz.len(), 3);
        for q in 0..3 {
            assert_eq!(a.get(q * 2, q * 2 + 1), C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn ladder_matrix_element() {
        let d = dims(4);
        let a = annihilation_resonator(d);
        let v = a.get(d.index(Level::G, 1), d.index(Level::G, 2));
        assert!((v.re - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn number_operators() {
        let d = dims(4);
        let a = annihilation_resonator(d);
        let b = lowering_qubit(d);
        let na = a.dagger().mul(&a);
        let nb = b.dagger().mul(&b);
        for i in 0..d.dim() {
            let (q, m) = d.split(i);
            assert!((na.get(i, i).re - m as f64).abs() < 1e-14);
            assert!((nb.get(i, i).re - q as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn commutator_on_interior_block() {
        let d = dims(6);
        let a = annihilation_resonator(d);
        let comm = a.mul(&a.dagger()).add(&a.dagger().mul(&a).scale(C64::new(-1.0, 0.0)));
        for i in 0..d.dim() {
            let (_, m) = d.split(i);
            if m < d.n_fock - 1 {
                assert!((comm.get(i, i) - C64::new(1.0, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn qubit_truncation_and_two_photon_raise() {
        let d = dims(3);
        let b = lowering_qubit(d);
        let b3 = b.mul(&b).mul(&b);
        assert!(b3.entries.iter().all(|z| z.norm() == 0.0));
        let bd2 = b.dagger().mul(&b.dagger());
        for m in 0..3 {
            let v = bd2.get(d.index(Level::F, m), d.index(Level::G, m));
            assert!((v.re - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn anharmonic_term_diagonal() {
        let d = dims(3);
        let b = lowering_qubit(d);
        let bd = b.dagger();
        let kerr = bd.mul(&bd).mul(&b).mul(&b);
        for i in 0..d.dim() {
            let (q, _) = d.split(i);
            let expect = [0.0, 0.0, 2.0][q];
            assert!((kerr.get(i, i) - C64::new(expect, 0.0)).norm() < 1e-14);
        }
        let nb = bd.mul(&b);
        let lhs = nb.mul(&nb).add(&nb.scale(C64::new(-1.0, 0.0)));
        assert!(close(&lhs, &kerr, 1e-14));
    }

    #[test]
    fn thermal_state_weights() {
        let d = dims(5);
        let rho = thermal_state(d, 0.15).unwrap();
        let p = populations(&rho).unwrap();
        assert!((p.p_g - 0.85).abs() < 1e-15);
        assert!((p.p_e - 0.15).abs() < 1e-15);
        assert_eq!(p.p_f, 0.0);
        assert_eq!(p.n_mean, 0.0);
        DensityMatrix::new(d, rho.entries.clone()).unwrap();
        let ground = thermal_state(d, 0.0).unwrap();
        assert_eq!(ground, DensityMatrix::pure(d, Level::G, 0));
        assert!(thermal_state(d, 0.5).is_err());
    }

    #[test]
    fn pure_f_and_mixed() {
        let d = dims(2);
        let p = populations(&DensityMatrix::pure(d, Level::F, 0)).unwrap();
        assert_eq!(p.p_f, 1.0);
        let mixed = populations(&DensityMatrix::maximally_mixed(d)).unwrap();
        assert!(mixed.levels.iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn non_hermitian_state_rejected() {
        let d = dims(2);
        let mut rho = DensityMatrix::pure(d, Level::G, 0);
        rho.entries[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(populations(&rho), Err(Error::Integrity(_))));
        assert!(DensityMatrix::new(d, rho.entries).is_err());
    }

    #[test]
    fn row_major_round_trip() {
        let d = dims(2);
        let mut rho = DensityMatrix::maximally_mixed(d);
        rho.entries[(0, 1)] = C64::new(0.01, 0.02);
        rho.entries[(1, 0)] = C64::new(0.01, -0.02);
        let flat = rho.to_row_major();
        assert_eq!(flat[1], C64::new(0.01, 0.02));
        assert_eq!(DensityMatrix::from_row_major(d, &flat).unwrap(), rho);
    }
}
