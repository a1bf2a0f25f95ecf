use crate::hilbert::{Level, SpaceDims};
use crate::params::{DerivedParams, DeviceParams};
use crate::qcr::RateTable;
use crate::{Error, Result};

/// Lindblad channels of the master equation.
///
/// Resonator: `(κ_r(1+N_tr) + Γ_down(t))·D[a]` and `(κ_r N_tr + Γ_up(t))·D[a†]`,
/// where `Γ_down = δγ(1+N_T)` and `Γ_up = δγ·N_T` follow the bias envelope.
/// Qubit: thermal ladders on `g↔e` and `e↔f` plus dephasing
/// `(γ_φ/2)·D[|e⟩⟨e| − |g⟩⟨g|]` (and likewise for `f, e`), which damps the
/// corresponding coherence at `γ_φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipatorSet {
    pub kappa_r: f64,
    pub n_tr: f64,
    /// QCR photon rates along the bias envelope; `None` leaves the QCR off.
    pub qcr: Option<RateTable>,
    pub gamma_ge: f64,
    pub n_th: f64,
    pub gamma_ef: f64,
    pub n_th_ef: f64,
    pub gamma_t_ge: f64,
    pub gamma_t_ef: f64,
    pub n_tq: f64,
    pub gamma_phi_ge: f64,
    pub gamma_phi_ef: f64,
}

/// Sparse jump operator `L = Σ v·|row⟩⟨col|`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Jump {
    pub entries: Vec<(usize, usize, f64)>,
    /// Diagonal of `L†L`.
    pub ldl: Vec<f64>,
}

impl Jump {
    fn new(dim: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut ldl = vec![0.0; dim];
        for &(_, c, v) in &entries {
            ldl[c] += v * v;
        }
        Self { entries, ldl }
    }
}

impl DissipatorSet {
    /// Intrinsic channels from the device parameters, QCR off.
    pub fn from_params(_p: &DeviceParams, d: &DerivedParams, kappa_r: f64) -> Self {
        Self {
            kappa_r,
            n_tr: d.n_tr,
            qcr: None,
            gamma_ge: d.gamma_ge,
            n_th: d.n_th,
            gamma_ef: d.gamma_ef,
            n_th_ef: d.n_th_ef,
            gamma_t_ge: d.gamma_t_ge,
            gamma_t_ef: d.gamma_t_ef,
            n_tq: d.n_tq,
            gamma_phi_ge: d.gamma_phi_ge,
            gamma_phi_ef: d.gamma_phi_ef,
        }
    }

    pub fn with_qcr(mut self, table: RateTable) -> Self {
        self.qcr = Some(table);
        self
    }

    /// Every channel switched off.
    pub fn none() -> Self {
        Self {
            kappa_r: 0.0,
            n_tr: 0.0,
            qcr: None,
            gamma_ge: 0.0,
            n_th: 0.0,
            gamma_ef: 0.0,
            n_th_ef: 0.0,
            gamma_t_ge: 0.0,
            gamma_t_ef: 0.0,
            n_tq: 0.0,
            gamma_phi_ge: 0.0,
            gamma_phi_ef: 0.0,
        }
    }

    /// `(down, up)` resonator rates at bias envelope fraction `u`.
    pub fn resonator_rates(&self, u: f64) -> (f64, f64) {
        let (qd, qu) = self.qcr.as_ref().map_or((0.0, 0.0), |t| t.rates(u));
        (
            self.kappa_r * (1.0 + self.n_tr) + qd,
            self.kappa_r * self.n_tr + qu,
        )
    }

    /// Rates of all channels in the order of [`DissipatorSet::jumps`].
    pub(crate) fn rates(&self, u: f64) -> [f64; 8] {
        let (down, up) = self.resonator_rates(u);
        [
            down,
            up,
            self.gamma_ge * (1.0 + self.n_th) + self.gamma_t_ge * (1.0 + self.n_tq),
            self.gamma_ge * self.n_th + self.gamma_t_ge * self.n_tq,
            self.gamma_ef * (1.0 + self.n_th_ef) + self.gamma_t_ef * (1.0 + self.n_tq),
            self.gamma_ef * self.n_th_ef + self.gamma_t_ef * self.n_tq,
            0.5 * self.gamma_phi_ge,
            0.5 * self.gamma_phi_ef,
        ]
    }

    pub(crate) fn jumps(dims: SpaceDims) -> Vec<Jump> {
        let n = dims.dim();
        let levels = [Level::G, Level::E, Level::F];
        let mut a = Vec::new();
        let mut ad = Vec::new();
        for q in levels {
            for m in 1..dims.n_fock {
                let s = (m as f64).sqrt();
                a.push((dims.index(q, m - 1), dims.index(q, m), s));
                ad.push((dims.index(q, m), dims.index(q, m - 1), s));
            }
        }
        let ladder = |lo: Level, hi: Level| -> Vec<(usize, usize, f64)> {
            (0..dims.n_fock)
                .map(|m| (dims.index(lo, m), dims.index(hi, m), 1.0))
                .collect()
        };
        let dephase = |lo: Level, hi: Level| -> Vec<(usize, usize, f64)> {
            (0..dims.n_fock)
                .flat_map(|m| {
                    [
                        (dims.index(hi, m), dims.index(hi, m), 1.0),
                        (dims.index(lo, m), dims.index(lo, m), -1.0),
                    ]
                })
                .collect()
        };
        vec![
            Jump::new(n, a),
            Jump::new(n, ad),
            Jump::new(n, ladder(Level::G, Level::E)),
            Jump::new(n, ladder(Level::E, Level::G)),
            Jump::new(n, ladder(Level::E, Level::F)),
            Jump::new(n, ladder(Level::F, Level::E)),
            Jump::new(n, dephase(Level::G, Level::E)),
            Jump::new(n, dephase(Level::E, Level::F)),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for u in [0.0, 0.25, 0.5, 0.75, 1.0] {
            if self.rates(u).iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return Err(Error::Validation(format!(
                    "dissipator rates must be finite and non-negative (envelope fraction {u})"
                )));
            }
        }
        Ok(())
    }
}
