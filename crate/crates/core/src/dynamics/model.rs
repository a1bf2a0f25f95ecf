use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::hilbert::{Level, OperatorMatrix, SpaceDims, C64};
use crate::numerics::hermitian_eigen;
use crate::params::DeviceParams;
use crate::pulses::PulseSchedule;
use crate::{Error, Result};

/// Reference frame used for integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    /// Schrödinger picture: static level energies and explicit carrier phases.
    Literal,
    /// Per-level frame frequencies chosen so both drives are static at resonance.
    Rotating,
}

/// Drive channel feeding a Hamiltonian term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Static,
    /// `Ω(t)`, e–f drive.
    Ef,
    /// `g(t)`, f0–g1 drive.
    F0g1,
}

/// One off-diagonal matrix element `H_ij = coeff·amp(t)·e^{i·freq·t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub row: usize,
    pub col: usize,
    pub coeff: C64,
    pub freq: f64,
    pub channel: Channel,
}

/// Transmon–resonator Hamiltonian (ħ = 1, rad/s).
///
/// `H = ω_r a†a + ω_ge b†b + (α/2)b†b†bb + λ(b†a + ba†)
///    + (Ω(t)/√2)(b e^{iω_ef t} + b† e^{−iω_ef t})
///    + (g(t)/√2)(b†b†a e^{−iω_f0g1 t} + a†bb e^{iω_f0g1 t})`
///
/// The drive phases are oriented so each drive is resonant with its named
/// transition. Carriers default to the dressed `e0–f0` and `f0–g1`
/// transition frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianModel {
    pub dims: SpaceDims,
    pub omega_r: f64,
    pub omega_ge: f64,
    pub alpha: f64,
    pub lambda_c: f64,
    pub frame: Frame,
    pub ef_carrier: f64,
    pub f0g1_carrier: f64,
}

/// Dressed energies of the static Hamiltonian, labelled by bare state.
#[derive(Debug, Clone, PartialEq)]
pub struct DressedSpectrum {
    pub dims: SpaceDims,
    /// Eigenvalue assigned to each bare basis state (rad/s).
    pub energies: Vec<f64>,
    /// Overlap `|⟨bare|dressed⟩|²` of each assignment.
    pub overlaps: Vec<f64>,
}

impl DressedSpectrum {
    pub fn energy(&self, q: Level, m: usize) -> f64 {
        self.energies[self.dims.index(q, m)]
    }

    pub fn f0g1(&self) -> f64 {
        self.energy(Level::F, 0) - self.energy(Level::G, 1)
    }

    pub fn ef(&self) -> f64 {
        self.energy(Level::F, 0) - self.energy(Level::E, 0)
    }

    pub fn ge(&self) -> f64 {
        self.energy(Level::E, 0) - self.energy(Level::G, 0)
    }

    pub fn resonator(&self) -> f64 {
        self.energy(Level::G, 1) - self.energy(Level::G, 0)
    }
}

impl HamiltonianModel {
    /// Builds the model with carriers on the dressed transitions.
    pub fn from_params(p: &DeviceParams, frame: Frame) -> Result<Self> {
        let dims = SpaceDims::new(p.n_fock)?;
        let mut model = Self {
            dims,
            omega_r: p.omega_r + p.detuning_r,
            omega_ge: p.omega_ge + p.detuning_q,
            alpha: p.alpha,
            lambda_c: p.lambda_c,
            frame,
            ef_carrier: 0.0,
            f0g1_carrier: 0.0,
        };
        let spec = model.dressed_spectrum()?;
        model.ef_carrier = spec.ef();
        model.f0g1_carrier = spec.f0g1();
        Ok(model)
    }

    pub fn with_frame(&self, frame: Frame) -> Self {
        Self {
            frame,
            ..self.clone()
        }
    }

    pub fn with_dims(&self, dims: SpaceDims) -> Self {
        Self {
            dims,
            ..self.clone()
        }
    }

    /// Same model with the qubit–resonator coupling removed. Idle runs use
    /// it so that Purcell exchange with the cold resonator does not pull the
    /// qubit away from its thermal populations.
    pub fn uncoupled(&self) -> Self {
        Self {
            lambda_c: 0.0,
            ..self.clone()
        }
    }

    /// `2ω_ge + α − ω_r`.
    pub fn bare_f0g1(&self) -> f64 {
        2.0 * self.omega_ge + self.alpha - self.omega_r
    }

    /// Bare energy of `|q, m⟩`.
    pub fn bare_energy(&self, q: usize, m: usize) -> f64 {
        let kerr = if q == 2 { self.alpha } else { 0.0 };
        m as f64 * self.omega_r + q as f64 * self.omega_ge + kerr
    }

    /// Frame frequency of `|q, m⟩` (zero in the literal frame).
    pub fn frame_frequency(&self, q: usize, m: usize) -> f64 {
        match self.frame {
            Frame::Literal => 0.0,
            Frame::Rotating => {
                let nu_f = 2.0 * self.omega_ge + self.alpha;
                let nu_q = [0.0, nu_f - self.ef_carrier, nu_f][q];
                nu_q + m as f64 * (nu_f - self.f0g1_carrier)
            }
        }
    }

    pub fn frame_frequencies(&self) -> Vec<f64> {
        (0..self.dims.dim())
            .map(|i| {
                let (q, m) = self.dims.split(i);
                self.frame_frequency(q, m)
            })
            .collect()
    }

    /// Diagonal of the frame Hamiltonian: bare energy minus frame frequency.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dims.dim())
            .map(|i| {
                let (q, m) = self.dims.split(i);
                self.bare_energy(q, m) - self.frame_frequency(q, m)
            })
            .collect()
    }

    /// Off-diagonal terms in the chosen frame, both triangles listed.
    /// `ef_detuning`/`f0g1_detuning` offset the carriers of the two drives.
    pub fn terms(&self, ef_detuning: f64, f0g1_detuning: f64) -> Vec<Term> {
        let d = self.dims;
        let nu = self.frame_frequencies();
        let mut upper = Vec::new();
        let sqrt2 = 2f64.sqrt();
        let w_ef = self.ef_carrier + ef_detuning;
        let w_fg = self.f0g1_carrier + f0g1_detuning;
        // Lowering elements of b: ⟨q−1|b|q⟩ = √q.
        for q in 1..3 {
            let bq = (q as f64).sqrt();
            for m in 0..d.n_fock {
                // λ b†a: |q−1, m⟩ → |q, m−1⟩
                if m >= 1 {
                    upper.push((q * d.n_fock + m - 1, (q - 1) * d.n_fock + m, self.lambda_c * bq * (m as f64).sqrt(), 0.0, Channel::Static));
                }
                // (Ω/√2) b† e^{−iω_ef t}: |q−1, m⟩ → |q, m⟩
                upper.push((q * d.n_fock + m, (q - 1) * d.n_fock + m, bq / sqrt2, -w_ef, Channel::Ef));
            }
        }
        // (g/√2) b†b†a e^{−iω_f0g1 t}: |g, m⟩ → |f, m−1⟩, ⟨f|b†b†|g⟩ = √2.
        for m in 1..d.n_fock {
            upper.push((2 * d.n_fock + m - 1, m, (m as f64).sqrt(), -w_fg, Channel::F0g1));
        }
        let mut terms = Vec::with_capacity(2 * upper.len());
        for (i, j, c, carrier, channel) in upper {
            let freq = nu[i] - nu[j] + carrier;
            terms.push(Term { row: i, col: j, coeff: Complex64::new(c, 0.0), freq, channel });
            terms.push(Term { row: j, col: i, coeff: Complex64::new(c, 0.0), freq: -freq, channel });
        }
        terms
    }

    /// Static Hamiltonian (drives off) in the literal frame.
    pub fn static_hamiltonian(&self) -> OperatorMatrix {
        let lit = self.with_frame(Frame::Literal);
        let mut h = OperatorMatrix::zeros(self.dims);
        for (i, e) in lit.diagonal().into_iter().enumerate() {
            h.entries[(i, i)] = Complex64::new(e, 0.0);
        }
        for t in lit.terms(0.0, 0.0) {
            if t.channel == Channel::Static {
                h.entries[(t.row, t.col)] += t.coeff;
            }
        }
        h
    }

    /// Frame Hamiltonian at time `t` with the schedule's drive envelopes.
    pub fn hamiltonian_at(&self, t: f64, schedule: Option<&PulseSchedule>) -> OperatorMatrix {
        let (ef_det, fg_det) = schedule
            .map(|s| (s.ef_drive.carrier_detuning, s.f0g1_drive.carrier_detuning))
            .unwrap_or((0.0, 0.0));
        let amps = DriveAmplitudes::at(schedule, t);
        let mut h = OperatorMatrix::zeros(self.dims);
        for (i, e) in self.diagonal().into_iter().enumerate() {
            h.entries[(i, i)] = Complex64::new(e, 0.0);
        }
        for term in self.terms(ef_det, fg_det) {
            h.entries[(term.row, term.col)] += term.coeff * amps.of(term.channel) * Complex64::cis(term.freq * t);
        }
        h
    }

    /// Fastest phase rotation in the frame (Hz): the spread of the diagonal
    /// and the largest frequency among active coupling terms. Drive terms
    /// count only when `drives` is set.
    pub fn max_frequency_hz(&self, ef_detuning: f64, f0g1_detuning: f64, drives: bool) -> f64 {
        let diag = self.diagonal();
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let coupling = self
            .terms(ef_detuning, f0g1_detuning)
            .iter()
            .filter(|t| t.coeff.norm() > 0.0 && (drives || t.channel == Channel::Static))
            .map(|t| t.freq.abs())
            .fold(0.0, f64::max);
        (hi - lo).max(coupling) / (2.0 * std::f64::consts::PI)
    }

    /// Diagonalises the static Hamiltonian and labels each eigenvalue by the
    /// bare state it overlaps most.
    pub fn dressed_spectrum(&self) -> Result<DressedSpectrum> {
        let h = self.static_hamiltonian();
        let eig = hermitian_eigen(&h.entries)?;
        let n = self.dims.dim();
        let mut energies = vec![f64::NAN; n];
        let mut overlaps = vec![0.0; n];
        let mut taken = vec![false; n];
        // Greedy assignment by descending overlap.
        let mut pairs: Vec<(f64, usize, usize)> = (0..n)
            .flat_map(|bare| (0..n).map(move |k| (bare, k)))
            .map(|(bare, k)| (eig.vectors[(bare, k)].norm_sqr(), bare, k))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (ov, bare, k) in pairs {
            if energies[bare].is_nan() && !taken[k] {
                energies[bare] = eig.values[k];
                overlaps[bare] = ov;
                taken[k] = true;
            }
        }
        if energies.iter().any(|e| e.is_nan()) {
            return Err(Error::Integrity("dressed-state assignment incomplete".into()));
        }
        Ok(DressedSpectrum {
            dims: self.dims,
            energies,
            overlaps,
        })
    }
}

/// Drive amplitudes (rad/s) at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveAmplitudes {
    pub ef: f64,
    pub f0g1: f64,
}

impl DriveAmplitudes {
    pub fn at(schedule: Option<&PulseSchedule>, t: f64) -> Self {
        match schedule {
            Some(s) => Self {
                ef: s.ef_drive.envelope(t),
                f0g1: s.f0g1_drive.envelope(t),
            },
            None => Self { ef: 0.0, f0g1: 0.0 },
        }
    }

    pub fn of(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Static => 1.0,
            Channel::Ef => self.ef,
            Channel::F0g1 => self.f0g1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{annihilation_resonator, lowering_qubit};
    use crate::numerics::hermiticity_defect;
    use crate::pulses::reset_schedule;
    use crate::units::{hertz, GHZ, MHZ, NS};

    fn table1(frame: Frame) -> HamiltonianModel {
        HamiltonianModel::from_params(&DeviceParams::table1(), frame).unwrap()
    }

    #[test]
    fn static_hamiltonian_matches_operator_algebra() {
        let m = table1(Frame::Literal);
        let d = m.dims;
        let a = annihilation_resonator(d);
        let b = lowering_qubit(d);
        let (ad, bd) = (a.dagger(), b.dagger());
        let c = |x: f64| Complex64::new(x, 0.0);
        let h = ad.mul(&a).scale(c(m.omega_r))
            .add(&bd.mul(&b).scale(c(m.omega_ge)))
            .add(&bd.mul(&bd).mul(&b).mul(&b).scale(c(m.alpha / 2.0)))
            .add(&bd.mul(&a).add(&b.mul(&ad)).scale(c(m.lambda_c)));
        let diff = (&h.entries - &m.static_hamiltonian().entries).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-9 * m.omega_r, "{diff}");
    }

    #[test]
    fn drive_elements_are_resonant_and_normalised() {
        let m = table1(Frame::Literal);
        let s = reset_schedule(100.0 * NS, 0.0, 2.0e8, 1.0e8, &[]).unwrap();
        let t = 50.0 * NS;
        let h = m.hamiltonian_at(t, Some(&s));
        let d = m.dims;
        let fe = h.get(d.index(Level::F, 0), d.index(Level::E, 0));
        let expect = Complex64::new(1.0e8, 0.0) * Complex64::cis(-m.ef_carrier * t);
        assert!((fe - expect).norm() < 1e-6 * 1e8);
        let fg = h.get(d.index(Level::F, 0), d.index(Level::G, 1));
        let expect = Complex64::new(2.0e8, 0.0) * Complex64::cis(-m.f0g1_carrier * t);
        assert!((fg - expect).norm() < 1e-6 * 2e8);
    }

    #[test]
    fn frame_hamiltonian_is_hermitian() {
        let s = reset_schedule(60.0 * NS, 0.0, 1.8e8, 1.3e8, &[]).unwrap();
        for frame in [Frame::Literal, Frame::Rotating] {
            let m = table1(frame);
            for k in 0..20 {
                let h = m.hamiltonian_at(k as f64 * 3.7 * NS, Some(&s));
                let scale = h.entries.iter().map(|z| z.norm()).fold(1.0, f64::max);
                assert!(hermiticity_defect(&h.entries) <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn rotating_frame_makes_drives_static() {
        let m = table1(Frame::Rotating);
        for t in m.terms(0.0, 0.0) {
            let (qi, qj) = (m.dims.split(t.row).0, m.dims.split(t.col).0);
            let resonant = match t.channel {
                Channel::F0g1 => true,
                Channel::Ef => qi.min(qj) == 1,
                Channel::Static => false,
            };
            if resonant {
                assert!(t.freq.abs() < 1e-3, "{t:?}");
            }
        }
        assert!(m.max_frequency_hz(0.0, 0.0, true) < 3.0 * GHZ);
        let lit = table1(Frame::Literal);
        assert!(lit.max_frequency_hz(0.0, 0.0, true) > 30.0 * GHZ);
    }

    #[test]
    fn dressed_f0g1_near_measured() {
        let p = DeviceParams::table1();
        let m = table1(Frame::Literal);
        let s = m.dressed_spectrum().unwrap();
        assert!((hertz(m.bare_f0g1()) / GHZ - 2.5262).abs() < 1e-9);
        let off = hertz((s.f0g1() - p.omega_f0g1_measured.unwrap()).abs());
        assert!(off < 40.0 * MHZ, "{} MHz", off / MHZ);
        assert!(s.overlaps.iter().all(|o| *o > 0.5));
    }
}
