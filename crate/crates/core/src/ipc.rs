//! Instantaneous phase correction: the unimodular matrix `E` that cancels the
//! frame-to-frame phase advance predicted by an instantaneous-frequency map,
//! and the corrected transform `E ⊙ G^w(x)` with its inverse.

use std::f64::consts::TAU;

use ndarray::{Array2, Zip};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frames::{istft, istft_complex, stft, symmetrize_conjugate, Spectrogram};
use crate::ifreq::IfMap;
use crate::signals::SignalBuffer;

/// `E[ξ, τ] = Π_{η<τ} exp(−2πj v[ξ, η] a / L)`, with `E[ξ, 0] = 1`.
#[derive(Debug, Clone)]
pub struct PhaseCorrector {
    e: Array2<Complex64>,
    source_if: IfMap,
    hop: usize,
    window_len: usize,
}

impl PhaseCorrector {
    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.e
    }

    pub fn source_if(&self) -> &IfMap {
        &self.source_if
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn dim(&self) -> (usize, usize) {
        self.e.dim()
    }

    fn check_shape(&self, dim: (usize, usize)) -> Result<()> {
        if dim != self.e.dim() {
            return Err(Error::shape(format!("{:?}", self.e.dim()), format!("{dim:?}")));
        }
        Ok(())
    }

    /// `E ⊙ M`.
    pub fn apply(&self, m: &Array2<Complex64>) -> Result<Array2<Complex64>> {
        self.check_shape(m.dim())?;
        Ok(&self.e * m)
    }

    /// `conj(E) ⊙ M`.
    pub fn apply_inverse(&self, m: &Array2<Complex64>) -> Result<Array2<Complex64>> {
        self.check_shape(m.dim())?;
        let mut out = m.clone();
        Zip::from(&mut out).and(&self.e).for_each(|o, e| *o *= e.conj());
        Ok(out)
    }

    /// Projects `M` onto matrices of the form `E ⊙ Y` with `Y` conjugate
    /// symmetric across `ξ ↔ K − ξ` (the image of real signals), in place.
    pub fn symmetrize(&self, m: &mut Array2<Complex64>) -> Result<()> {
        let mut y = self.apply_inverse(m)?;
        symmetrize_conjugate(&mut y);
        *m = &self.e * &y;
        Ok(())
    }
}

/// Builds `E` from an instantaneous-frequency map by a running product,
/// renormalizing each entry to unit modulus.
pub fn build_corrector(v: &IfMap) -> Result<PhaseCorrector> {
    let cfg = v.config();
    let (bins, frames) = v.dim();
    let step = TAU * cfg.hop as f64 / cfg.window_len as f64;
    let mut e = Array2::from_elem((bins, frames), Complex64::from(1.0));
    for xi in 0..bins {
        let mut acc = Complex64::from(1.0);
        for tau in 1..frames {
            acc *= Complex64::from_polar(1.0, -step * v.values()[[xi, tau - 1]]);
            acc /= acc.norm();
            e[[xi, tau]] = acc;
        }
    }
    Ok(PhaseCorrector {
        e,
        source_if: v.clone(),
        hop: cfg.hop,
        window_len: cfg.window_len,
    })
}

/// `E ⊙ G^w(x)`, flagged as phase-corrected.
pub fn ipc_stft(s: &Spectrogram, c: &PhaseCorrector) -> Result<Spectrogram> {
    if s.config().hop != c.hop || s.config().window_len != c.window_len {
        return Err(Error::ConfigMismatch("corrector built for a different configuration".into()));
    }
    Ok(s.with_data(c.apply(s.data())?)?.mark_phase_corrected(true))
}

/// Undoes the correction (`conj(E) ⊙ S`) and synthesizes.
pub fn ipc_istft(s_ipc: &Spectrogram, c: &PhaseCorrector, w_synth: &[f64], sample_rate_hz: f64) -> Result<SignalBuffer> {
    let plain = s_ipc.with_data(c.apply_inverse(s_ipc.data())?)?.mark_phase_corrected(false);
    istft(&plain, w_synth, sample_rate_hz)
}

/// The linear operator `A x = E ⊙ G^w(x)` with a fixed corrector and window,
/// together with its adjoint restricted to real signals.
#[derive(Debug, Clone)]
pub struct IpcOperator {
    corrector: PhaseCorrector,
    window: Vec<f64>,
    template: Spectrogram,
}

impl IpcOperator {
    /// `template` fixes the configuration and signal length.
    pub fn new(corrector: PhaseCorrector, template: &Spectrogram) -> Result<Self> {
        corrector.check_shape(template.data().dim())?;
        Ok(Self {
            window: template.config().analysis_window(),
            template: template.clone(),
            corrector,
        })
    }

    pub fn corrector(&self) -> &PhaseCorrector {
        &self.corrector
    }

    pub fn signal_len(&self) -> usize {
        self.template.origin_len()
    }

    pub fn forward(&self, x: &SignalBuffer) -> Result<Array2<Complex64>> {
        if x.len() != self.signal_len() {
            return Err(Error::shape(self.signal_len(), x.len()));
        }
        let s = stft(x, self.template.config(), &self.window)?;
        self.corrector.apply(s.data())
    }

    /// `Re(A^H Z)`.
    pub fn adjoint_real(&self, z: &Array2<Complex64>) -> Result<Vec<f64>> {
        let plain = self.template.with_data(self.corrector.apply_inverse(z)?)?;
        Ok(istft_complex(&plain, &self.window)?.into_iter().map(|v| v.re).collect())
    }
}
