//! Windows and the forward/inverse short-time Fourier transform.
//!
//! Coefficients follow
//! `G[ξ, τ] = L^{-1/2} Σ_l x[l + s_τ] w[l] e^{-2πj ξ l / L}`,
//! i.e. the DFT is normalized to be unitary. With a canonical tight window
//! the analysis operator is then a Parseval frame and the synthesis routine
//! ([`istft`]) is both its adjoint and its inverse.
//!
//! Two boundary treatments are supported. [`Boundary::ZeroPad`] places the
//! frame lattice so that the frame starting at sample 0 is preceded by the
//! `⌈L/a⌉ − 1` frames that partially overlap the start of the signal; every
//! sample is therefore covered by the full set of overlapping frames and
//! reconstruction is exact on the original support. [`Boundary::Periodic`]
//! wraps the signal circularly; it requires the length to be a multiple of
//! the hop and produces `N / a` frames with the first one starting at 0.

use std::f64::consts::TAU;

use ndarray::{s, Array2, Axis};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signals::SignalBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowKind {
    Hann,
    /// Canonical tight window derived from the periodic Hann window.
    HannTight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    ZeroPad,
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zeropad" | "zero-pad" | "zero" => Ok(Boundary::ZeroPad),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::invalid(format!("unknown boundary mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub window_kind: WindowKind,
    pub frequency_step: usize,
    pub boundary: Boundary,
}

impl StftConfig {
    /// Tight Hann analysis with zero-padded boundaries, `K = L`, `b = 1`.
    pub fn new(window_len: usize, hop: usize) -> Result<Self> {
        let cfg = Self {
            window_len,
            hop,
            fft_size: window_len,
            window_kind: WindowKind::HannTight,
            frequency_step: 1,
            boundary: Boundary::ZeroPad,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_window(mut self, kind: WindowKind) -> Self {
        self.window_kind = kind;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (l, a) = (self.window_len, self.hop);
        if l < 2 {
            return Err(Error::invalid(format!("window length must be ≥ 2, got {l}")));
        }
        if a == 0 || 2 * a > l {
            return Err(Error::invalid(format!(
                "hop must satisfy 1 ≤ a ≤ L/2, got a={a}, L={l}"
            )));
        }
        if self.fft_size != l {
            return Err(Error::invalid(format!(
                "fft size must equal the window length ({l}), got {}",
                self.fft_size
            )));
        }
        if self.frequency_step != 1 {
            return Err(Error::invalid(format!(
                "frequency step must be 1, got {}",
                self.frequency_step
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size
    }

    pub fn analysis_window(&self) -> Vec<f64> {
        let hann = hann_window(self.window_len).expect("validated window length");
        match self.window_kind {
            WindowKind::Hann => hann,
            WindowKind::HannTight => {
                canonical_tight_window(&hann, self.hop).expect("Hann is compatible with a ≤ L/2")
            }
        }
    }

    /// Derivative of [`Self::analysis_window`] in the units used for
    /// instantaneous-frequency estimation.
    pub fn derivative_window(&self) -> Vec<f64> {
        derivative_window(&self.analysis_window())
    }

    /// Number of left-padding samples before the frame starting at sample 0.
    fn lead(&self) -> usize {
        match self.boundary {
            Boundary::ZeroPad => self.hop * (self.window_len.div_ceil(self.hop) - 1),
            Boundary::Periodic => 0,
        }
    }

    /// Frame count for a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> Result<usize> {
        if len == 0 {
            return Err(Error::invalid("empty signal"));
        }
        match self.boundary {
            Boundary::ZeroPad => Ok((len - 1 + self.lead()) / self.hop + 1),
            Boundary::Periodic => {
                if len % self.hop != 0 || len < self.window_len {
                    return Err(Error::ConfigMismatch(format!(
                        "periodic boundary needs a length that is a multiple of the hop {} and at least {} samples, got {len}",
                        self.hop, self.window_len
                    )));
                }
                Ok(len / self.hop)
            }
        }
    }

    /// Start sample of frame `tau` (may be negative for zero-padded frames).
    pub fn frame_start(&self, tau: usize) -> isize {
        (tau * self.hop) as isize - self.lead() as isize
    }

    /// Frame whose start coincides with sample 0.
    pub fn frame_at_origin(&self) -> usize {
        self.lead() / self.hop
    }
}

/// Periodic Hann window, `w[l] = 0.5 − 0.5 cos(2π l / L)`.
pub fn hann_window(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::invalid(format!("window length must be ≥ 2, got {len}")));
    }
    let l = len as f64;
    Ok((0..len)
        .map(|i| 0.5 - 0.5 * (TAU * i as f64 / l).cos())
        .collect())
}

/// Closed-form derivative of the periodic Hann window scaled by `L/2π`:
/// `w'[l] = 0.5 sin(2π l / L)`.
pub fn hann_derivative_window(len: usize) -> Result<Vec<f64>> {
    if len < 2 {
        return Err(Error::invalid(format!("window length must be ≥ 2, got {len}")));
    }
    let l = len as f64;
    Ok((0..len).map(|i| 0.5 * (TAU * i as f64 / l).sin()).collect())
}

/// Spectral derivative of a periodic window, scaled by `L/2π` so that the
/// reassignment ratio yields frequencies in DFT bins.
///
/// Equivalent to [`hann_derivative_window`] for the plain Hann window; for
/// other windows (e.g. the tight Hann at hop `L/2`) it differentiates the
/// trigonometric interpolant.
pub fn derivative_window(w: &[f64]) -> Vec<f64> {
    let n = w.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = w.iter().map(|&v| Complex64::from(v)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let signed = if 2 * k < n {
            k as f64
        } else if 2 * k == n {
            0.0
        } else {
            k as f64 - n as f64
        };
        *z *= Complex64::new(0.0, signed);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

/// `Σ_n w²[l − n a]` for `l = 0..a`; the lattice sum is `a`-periodic.
pub fn lattice_energy(w: &[f64], hop: usize) -> Vec<f64> {
    let mut acc = vec![0.0; hop];
    for (l, v) in w.iter().enumerate() {
        acc[l % hop] += v * v;
    }
    acc
}

/// Canonical tight window `w[l] / sqrt(Σ_n w²[l − n a])`.
pub fn canonical_tight_window(w: &[f64], hop: usize) -> Result<Vec<f64>> {
    if hop == 0 || 2 * hop > w.len() {
        return Err(Error::invalid(format!(
            "hop must satisfy 1 ≤ a ≤ L/2, got a={hop}, L={}",
            w.len()
        )));
    }
    let energy = lattice_energy(w, hop);
    if let Some(l) = energy.iter().position(|&e| e <= 0.0) {
        return Err(Error::invalid(format!(
            "window and hop are incompatible: shifted squared sum vanishes at l={l}"
        )));
    }
    Ok(w.iter()
        .enumerate()
        .map(|(l, v)| v / energy[l % hop].sqrt())
        .collect())
}

/// Whether `w` generates a Parseval frame at hop `a` (lattice energy ≡ 1).
pub fn is_tight(w: &[f64], hop: usize) -> bool {
    hop > 0 && lattice_energy(w, hop).iter().all(|e| (e - 1.0).abs() < 1e-10)
}

/// Complex time-frequency coefficients with the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Array2<Complex64>,
    config: StftConfig,
    origin_len: usize,
    phase_corrected: bool,
}

impl Spectrogram {
    /// Wraps existing coefficients; the shape must match `config` and `origin_len`.
    pub fn from_parts(data: Array2<Complex64>, config: StftConfig, origin_len: usize) -> Result<Self> {
        let expected = (config.bins(), config.frame_count(origin_len)?);
        if data.dim() != expected {
            return Err(Error::shape(format!("{expected:?}"), format!("{:?}", data.dim())));
        }
        Ok(Self {
            data,
            config,
            origin_len,
            phase_corrected: false,
        })
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn origin_len(&self) -> usize {
        self.origin_len
    }

    pub fn is_phase_corrected(&self) -> bool {
        self.phase_corrected
    }

    pub fn bins(&self) -> usize {
        self.data.nrows()
    }

    pub fn frames(&self) -> usize {
        self.data.ncols()
    }

    /// Same metadata, different coefficients of identical shape.
    pub fn with_data(&self, data: Array2<Complex64>) -> Result<Self> {
        if data.dim() != self.data.dim() {
            return Err(Error::shape(
                format!("{:?}", self.data.dim()),
                format!("{:?}", data.dim()),
            ));
        }
        Ok(Self {
            data,
            ..self.clone()
        })
    }

    pub(crate) fn mark_phase_corrected(mut self, corrected: bool) -> Self {
        self.phase_corrected = corrected;
        self
    }

    pub fn amplitude(&self) -> Array2<f64> {
        self.data.mapv(|z| z.norm())
    }

    /// Rows `0..=K/2` (non-negative frequencies).
    pub fn one_sided(&self) -> Array2<Complex64> {
        one_sided(&self.data)
    }

    /// Largest deviation from `row[K−ξ] = conj(row[ξ])`, relative to the largest magnitude.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let k = self.bins();
        let peak = self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if peak == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for xi in 1..k {
            let mirror = k - xi;
            for t in 0..self.frames() {
                worst = worst.max((self.data[[xi, t]] - self.data[[mirror, t]].conj()).norm());
            }
        }
        worst / peak
    }
}

/// Rows `0..=K/2` of a two-sided coefficient matrix.
pub fn one_sided(two_sided: &Array2<Complex64>) -> Array2<Complex64> {
    let k = two_sided.nrows();
    two_sided.slice(s![..=k / 2, ..]).to_owned()
}

/// Rebuilds a conjugate-symmetric two-sided matrix with `bins` rows from its
/// non-negative-frequency half.
pub fn mirror_one_sided(half: &Array2<Complex64>, bins: usize) -> Result<Array2<Complex64>> {
    if half.nrows() != bins / 2 + 1 {
        return Err(Error::shape(bins / 2 + 1, half.nrows()));
    }
    let mut full = Array2::zeros((bins, half.ncols()));
    full.slice_mut(s![..half.nrows(), ..]).assign(half);
    for xi in bins / 2 + 1..bins {
        let src = half.row(bins - xi).mapv(|z| z.conj());
        full.row_mut(xi).assign(&src);
    }
    Ok(full)
}

/// Replaces each row pair `(ξ, K−ξ)` by the average of the row and the
/// conjugate of its mirror, enforcing conjugate symmetry in place.
pub fn symmetrize_conjugate(m: &mut Array2<Complex64>) {
    let k = m.nrows();
    for xi in 0..=k / 2 {
        let mirror = (k - xi) % k;
        for t in 0..m.ncols() {
            let avg = 0.5 * (m[[xi, t]] + m[[mirror, t]].conj());
            m[[xi, t]] = avg;
            m[[mirror, t]] = avg.conj();
        }
    }
}

fn check_window(config: &StftConfig, w: &[f64]) -> Result<()> {
    config.validate()?;
    if w.len() != config.window_len {
        return Err(Error::ConfigMismatch(format!(
            "window has {} taps, configuration expects {}",
            w.len(),
            config.window_len
        )));
    }
    Ok(())
}

/// STFT of a complex sequence; see the module docs for conventions.
pub fn stft_complex(x: &[Complex64], config: &StftConfig, w: &[f64]) -> Result<Spectrogram> {
    check_window(config, w)?;
    let n = x.len();
    let frames = config.frame_count(n)?;
    let l = config.window_len;
    let scale = 1.0 / (l as f64).sqrt();
    let fft = FftPlanner::new().plan_fft_forward(l);
    let mut data = Array2::zeros((config.bins(), frames));
    let mut buf = vec![Complex64::default(); l];
    for tau in 0..frames {
        let start = config.frame_start(tau);
        for (i, slot) in buf.iter_mut().enumerate() {
            let idx = start + i as isize;
            let sample = match config.boundary {
                Boundary::ZeroPad if idx < 0 || idx >= n as isize => Complex64::default(),
                Boundary::ZeroPad => x[idx as usize],
                Boundary::Periodic => x[idx.rem_euclid(n as isize) as usize],
            };
            *slot = sample * (w[i] * scale);
        }
        fft.process(&mut buf);
        data.column_mut(tau)
            .iter_mut()
            .zip(&buf)
            .for_each(|(d, v)| *d = *v);
    }
    Ok(Spectrogram {
        data,
        config: *config,
        origin_len: n,
        phase_corrected: false,
    })
}

/// STFT of a real signal.
pub fn stft(x: &SignalBuffer, config: &StftConfig, w: &[f64]) -> Result<Spectrogram> {
    let z: Vec<Complex64> = x.samples().iter().map(|&v| Complex64::from(v)).collect();
    stft_complex(&z, config, w)
}

/// Overlap-add synthesis (the adjoint of [`stft_complex`]) returning complex samples.
pub fn istft_complex(s: &Spectrogram, w_synth: &[f64]) -> Result<Vec<Complex64>> {
    let config = s.config();
    check_window(config, w_synth)?;
    let n = s.origin_len();
    let expected = (config.bins(), config.frame_count(n)?);
    if s.data().dim() != expected {
        return Err(Error::ConfigMismatch(format!(
            "spectrogram shape {:?} does not match configuration {:?}",
            s.data().dim(),
            expected
        )));
    }
    let l = config.window_len;
    let scale = 1.0 / (l as f64).sqrt();
    let ifft = FftPlanner::new().plan_fft_inverse(l);
    let mut out = vec![Complex64::default(); n];
    let mut buf = vec![Complex64::default(); l];
    for (tau, col) in s.data().axis_iter(Axis(1)).enumerate() {
        buf.iter_mut().zip(col).for_each(|(b, c)| *b = *c);
        ifft.process(&mut buf);
        let start = config.frame_start(tau);
        for (i, v) in buf.iter().enumerate() {
            let idx = start + i as isize;
            let target = match config.boundary {
                Boundary::ZeroPad if idx < 0 || idx >= n as isize => continue,
                Boundary::ZeroPad => idx as usize,
                Boundary::Periodic => idx.rem_euclid(n as isize) as usize,
            };
            out[target] += v * (w_synth[i] * scale);
        }
    }
    Ok(out)
}

/// Real part of the overlap-add synthesis, carrying `sample_rate_hz`.
pub fn istft(s: &Spectrogram, w_synth: &[f64], sample_rate_hz: f64) -> Result<SignalBuffer> {
    let z = istft_complex(s, w_synth)?;
    SignalBuffer::new(z.into_iter().map(|v| v.re).collect(), sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frobenius(m: &Array2<Complex64>) -> f64 {
        m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn hann_closed_form() {
        let w = hann_window(4).unwrap();
        let expected = [0.0, 0.5, 1.0, 0.5];
        for (a, b) in w.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for len in [2, 3, 17, 4096] {
            assert_eq!(hann_window(len).unwrap()[0], 0.0);
        }
        assert!(hann_window(1).is_err());
    }

    #[test]
    fn hann_quarter_hop_has_constant_overlap() {
        let energy = lattice_energy(&hann_window(64).unwrap(), 16);
        for e in &energy {
            assert!((e - 1.5).abs() < 1e-12, "{e}");
        }
    }

    #[test]
    fn derivative_window_matches_closed_form() {
        let closed = hann_derivative_window(256).unwrap();
        let spectral = derivative_window(&hann_window(256).unwrap());
        assert_eq!(closed[0], 0.0);
        for l in 1..256 {
            assert!((closed[l] + closed[256 - l]).abs() < 1e-15);
            assert!((closed[l] - spectral[l]).abs() < 1e-13);
        }
        assert!(hann_derivative_window(1).is_err());
    }

    #[test]
    fn tight_window_of_uniform_overlap_is_rescaled() {
        let w = hann_window(64).unwrap();
        let t = canonical_tight_window(&w, 16).unwrap();
        for (a, b) in w.iter().zip(&t) {
            assert!((a / 1.5f64.sqrt() - b).abs() < 1e-15);
        }
        assert!(is_tight(&t, 16));
        assert!(!is_tight(&w, 16));
    }

    #[test]
    fn tight_window_rejects_gaps() {
        let mut w = vec![1.0; 8];
        w[0] = 0.0;
        w[4] = 0.0;
        assert!(canonical_tight_window(&w, 4).is_err());
        assert!(canonical_tight_window(&hann_window(8).unwrap(), 5).is_err());
    }

    #[test]
    fn impulse_at_origin_frame() {
        let cfg = StftConfig::new(16, 4).unwrap().with_window(WindowKind::Hann);
        let w: Vec<f64> = (0..16).map(|l| 1.0 + l as f64).collect();
        let mut x = vec![Complex64::default(); 40];
        x[0] = Complex64::from(1.0);
        let s = stft_complex(&x, &cfg, &w).unwrap();
        let col = s.data().column(cfg.frame_at_origin());
        for z in col {
            assert!((z - Complex64::from(w[0] / 4.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn on_grid_exponential_occupies_one_bin() {
        let cfg = StftConfig::new(32, 8)
            .unwrap()
            .with_window(WindowKind::Hann)
            .with_boundary(Boundary::Periodic);
        let rect = vec![1.0; 32];
        let f = 5.0;
        let x: Vec<Complex64> = (0..128)
            .map(|n| Complex64::from_polar(1.0, TAU * f * n as f64 / 32.0))
            .collect();
        let s = stft_complex(&x, &cfg, &rect).unwrap();
        for ((xi, _), z) in s.data().indexed_iter() {
            if xi == 5 {
                assert!((z.norm() - 32f64.sqrt()).abs() < 1e-10);
            } else {
                assert!(z.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn matrix_form_matches_fft() {
        // Dense F·diag(w)·X on small instances.
        for (l, a, n) in [(8usize, 2usize, 21usize), (16, 4, 40), (12, 6, 30)] {
            let cfg = StftConfig::new(l, a).unwrap();
            let w = cfg.analysis_window();
            let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
            let sig = SignalBuffer::new(x.clone(), 1.0).unwrap();
            let s = stft(&sig, &cfg, &w).unwrap();
            let t = cfg.frame_count(n).unwrap();
            for tau in 0..t {
                let start = cfg.frame_start(tau);
                let patch: Vec<f64> = (0..l)
                    .map(|i| {
                        let idx = start + i as isize;
                        if idx < 0 || idx >= n as isize { 0.0 } else { x[idx as usize] }
                    })
                    .collect();
                for xi in 0..l {
                    let mut acc = Complex64::default();
                    for i in 0..l {
                        let f = Complex64::from_polar(1.0 / (l as f64).sqrt(), -TAU * (xi * i) as f64 / l as f64);
                        acc += f * w[i] * patch[i];
                    }
                    assert!((acc - s.data()[[xi, tau]]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_spectrogram_synthesizes_silence() {
        let cfg = StftConfig::new(16, 4).unwrap();
        let s = Spectrogram::from_parts(Array2::zeros((16, cfg.frame_count(30).unwrap())), cfg, 30).unwrap();
        let x = istft(&s, &cfg.analysis_window(), 1.0).unwrap();
        assert_eq!(x.len(), 30);
        assert!(x.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn istft_rejects_mismatched_shapes() {
        let cfg = StftConfig::new(16, 4).unwrap();
        let s = Spectrogram::from_parts(Array2::zeros((16, cfg.frame_count(30).unwrap())), cfg, 30).unwrap();
        assert!(istft(&s, &vec![1.0; 8], 1.0).is_err());
        assert!(Spectrogram::from_parts(Array2::zeros((16, 3)), cfg, 30).is_err());
    }

    #[test]
    fn periodic_requires_hop_multiple() {
        let cfg = StftConfig::new(16, 4).unwrap().with_boundary(Boundary::Periodic);
        assert!(cfg.frame_count(30).is_err());
        assert_eq!(cfg.frame_count(32).unwrap(), 8);
        assert!(cfg.frame_count(8).is_err());
    }

    #[test]
    fn full_size_round_trip() {
        let cfg = StftConfig::new(4096, 1024).unwrap();
        let w = cfg.analysis_window();
        let x = crate::signals::white_noise(9000, 5);
        let sig = SignalBuffer::new(x.clone(), 16000.0).unwrap();
        let s = stft(&sig, &cfg, &w).unwrap();
        assert!((frobenius(s.data()) - norm(&x)).abs() <= 1e-10 * norm(&x));
        let y = istft(&s, &w, 16000.0).unwrap();
        let err: Vec<f64> = x.iter().zip(y.samples()).map(|(a, b)| a - b).collect();
        assert!(norm(&err) <= 1e-10 * norm(&x));
        assert!(s.conjugate_asymmetry() < 1e-10);
    }

    #[test]
    fn one_sided_mirror_round_trip() {
        let cfg = StftConfig::new(16, 4).unwrap();
        let x = SignalBuffer::new(crate::signals::white_noise(50, 2), 1.0).unwrap();
        let s = stft(&x, &cfg, &cfg.analysis_window()).unwrap();
        let back = mirror_one_sided(&s.one_sided(), 16).unwrap();
        assert!(frobenius(&(back - s.data())) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn tight_frames_reconstruct(
            seed in any::<u64>(),
            len in 1usize..200,
            (l, a) in prop_oneof![Just((16usize, 4usize)), Just((16, 8)), Just((32, 8)), Just((24, 5))],
            periodic in any::<bool>(),
        ) {
            let boundary = if periodic { Boundary::Periodic } else { Boundary::ZeroPad };
            let len = if periodic { (len / a + l.div_ceil(a)) * a } else { len };
            let cfg = StftConfig::new(l, a).unwrap().with_boundary(boundary);
            let w = cfg.analysis_window();
            let x = crate::signals::white_noise(len, seed);
            let sig = SignalBuffer::new(x.clone(), 1.0).unwrap();
            let s = stft(&sig, &cfg, &w).unwrap();
            prop_assert!((frobenius(s.data()) - norm(&x)).abs() <= 1e-10 * norm(&x));
            let y = istft(&s, &w, 1.0).unwrap();
            prop_assert_eq!(y.len(), len);
            let err: Vec<f64> = x.iter().zip(y.samples()).map(|(p, q)| p - q).collect();
            prop_assert!(norm(&err) <= 1e-10 * norm(&x));
            prop_assert!(s.conjugate_asymmetry() < 1e-10);
        }
    }
}
