use num_complex::Complex64;

use super::dissipators::{DissipatorSet, Jump};
use super::model::{Channel, DriveAmplitudes, HamiltonianModel};
use crate::hilbert::C64;
use crate::pulses::PulseSchedule;

/// How the QCR bias envelope is evaluated.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Bias<'a> {
    /// Follow the schedule's bias pulse shape.
    Envelope(&'a PulseSchedule),
    /// Hold a fixed envelope fraction.
    Fixed(f64),
}

struct Pair {
    row: usize,
    col: usize,
    coeff: f64,
    freq: f64,
    channel: Channel,
}

/// Right-hand side of the master equation on a row-major flattened ρ.
pub(crate) struct Generator<'a> {
    n: usize,
    diag: Vec<f64>,
    pairs: Vec<Pair>,
    jumps: Vec<Jump>,
    diss: &'a DissipatorSet,
    drives: Option<&'a PulseSchedule>,
    bias: Bias<'a>,
    decay: Vec<f64>,
}

impl<'a> Generator<'a> {
    pub fn new(
        model: &HamiltonianModel,
        diss: &'a DissipatorSet,
        drives: Option<&'a PulseSchedule>,
        bias: Bias<'a>,
    ) -> Self {
        let (ef_det, fg_det) = drives
            .map(|s| (s.ef_drive.carrier_detuning, s.f0g1_drive.carrier_detuning))
            .unwrap_or((0.0, 0.0));
        let pairs = model
            .terms(ef_det, fg_det)
            .into_iter()
            .filter(|t| t.row > t.col && t.coeff.norm() > 0.0)
            .filter(|t| drives.is_some() || t.channel == Channel::Static)
            .map(|t| Pair {
                row: t.row,
                col: t.col,
                coeff: t.coeff.re,
                freq: t.freq,
                channel: t.channel,
            })
            .collect();
        let n = model.dims.dim();
        Self {
            n,
            diag: model.diagonal(),
            pairs,
            jumps: DissipatorSet::jumps(model.dims),
            diss,
            drives,
            bias,
            decay: vec![0.0; n],
        }
    }

    pub fn envelope_fraction(&self, t: f64) -> f64 {
        match self.bias {
            Bias::Envelope(s) => s.qcr_bias.shape(t),
            Bias::Fixed(u) => u,
        }
    }

    pub fn apply(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        let rates = self.diss.rates(self.envelope_fraction(t));
        self.decay.iter_mut().for_each(|d| *d = 0.0);
        for (jump, &r) in self.jumps.iter().zip(rates.iter()) {
            if r != 0.0 {
                for (d, l) in self.decay.iter_mut().zip(&jump.ldl) {
                    *d += r * l;
                }
            }
        }
        for i in 0..n {
            for k in 0..n {
                let c = Complex64::new(
                    -0.5 * (self.decay[i] + self.decay[k]),
                    -(self.diag[i] - self.diag[k]),
                );
                out[i * n + k] = c * rho[i * n + k];
            }
        }
        let amps = DriveAmplitudes::at(self.drives, t);
        let minus_i = Complex64::new(0.0, -1.0);
        for p in &self.pairs {
            let amp = amps.of(p.channel);
            if amp == 0.0 {
                continue;
            }
            let h = Complex64::cis(p.freq * t) * (p.coeff * amp);
            let hc = h.conj();
            let (i, j) = (p.row, p.col);
            // −i(Hρ − ρH) with H_ij = h, H_ji = h*.
            let mh = minus_i * h;
            let mhc = minus_i * hc;
            for k in 0..n {
                out[i * n + k] += mh * rho[j * n + k];
                out[j * n + k] += mhc * rho[i * n + k];
                out[k * n + j] -= mh * rho[k * n + i];
                out[k * n + i] -= mhc * rho[k * n + j];
            }
        }
        for (jump, &r) in self.jumps.iter().zip(rates.iter()) {
            if r == 0.0 {
                continue;
            }
            for &(ia, ja, va) in &jump.entries {
                let w = r * va;
                for &(ib, jb, vb) in &jump.entries {
                    out[ia * n + ib] += rho[ja * n + jb] * (w * vb);
                }
            }
        }
    }
}
