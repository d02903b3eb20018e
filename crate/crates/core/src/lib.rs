//! Instantaneous-phase-corrected STFT and complex low-rank spectrogram models.
//!
//! The crate is organized bottom-up:
//!
//! - [`signals`]: synthetic test signals, noise at a prescribed SNR, SNR metrics.
//! - [`frames`]: Hann / tight windows and a Parseval-tight STFT.
//! - [`ifreq`]: instantaneous-frequency maps from derivative-window reassignment.
//! - [`ipc`]: the phase-correction matrix and the corrected transform.
//! - [`lowrank`]: complex SVD, rank-k approximation, nuclear norm, SVT.
//! - [`denoise`]: ADMM for nuclear-norm denoising in the corrected domain.
//! - [`experiments`]: rank-k approximation studies on sums of sinusoids.
//! - [`io`]: WAV and CSV.

pub mod denoise;
pub mod error;
pub mod experiments;
pub mod frames;
pub mod ifreq;
pub mod io;
pub mod ipc;
pub mod lowrank;
pub mod signals;

pub use error::{Error, Result};
pub use frames::{Boundary, Spectrogram, StftConfig, WindowKind};
pub use ifreq::IfMap;
pub use ipc::PhaseCorrector;
pub use lowrank::{CMatrix, SvdFactors};
pub use signals::{SignalBuffer, SinusoidSpec};
