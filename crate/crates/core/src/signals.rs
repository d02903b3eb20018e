//! Test-signal synthesis, additive noise at a prescribed SNR, and SNR metrics.

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Real-valued time-domain samples together with their sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBuffer {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl SignalBuffer {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::invalid(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("sample {i} is {}", samples[i])));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::new(vec![0.0; len], sample_rate_hz)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|v| v * v).sum()
    }

    /// Same sampling rate, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.sample_rate_hz)
    }
}

/// One component of a sum of sinusoids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinusoidSpec {
    pub amplitude: f64,
    pub frequency_hz: f64,
    /// Initial phase in radians, in `[0, 2π)`.
    pub initial_phase: f64,
}

impl SinusoidSpec {
    pub fn new(amplitude: f64, frequency_hz: f64) -> Self {
        Self {
            amplitude,
            frequency_hz,
            initial_phase: 0.0,
        }
    }

    pub fn with_phase(mut self, initial_phase: f64) -> Self {
        self.initial_phase = initial_phase;
        self
    }
}

/// The harmonic test recipe: `A_h = 10 − h`, `f_h = (h + 1)·f0`.
pub fn harmonic_specs(count: usize, fundamental_hz: f64) -> Vec<SinusoidSpec> {
    (0..count)
        .map(|h| SinusoidSpec::new(10.0 - h as f64, (h + 1) as f64 * fundamental_hz))
        .collect()
}

/// `samples[l] = Σ_h A_h sin(2π f_h l / fs + φ_h)` over `round(duration·fs)` samples.
pub fn synth_sinusoid_sum(
    specs: &[SinusoidSpec],
    duration_s: f64,
    sample_rate_hz: f64,
) -> Result<SignalBuffer> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(Error::invalid(format!(
            "duration must be positive, got {duration_s}"
        )));
    }
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return Err(Error::invalid(format!(
            "sample rate must be positive, got {sample_rate_hz}"
        )));
    }
    let nyquist = sample_rate_hz / 2.0;
    for (i, s) in specs.iter().enumerate() {
        if !(s.amplitude.is_finite() && s.amplitude >= 0.0) {
            return Err(Error::invalid(format!(
                "sinusoid {i}: amplitude must be non-negative, got {}",
                s.amplitude
            )));
        }
        if !(s.frequency_hz.is_finite() && s.frequency_hz >= 0.0 && s.frequency_hz < nyquist) {
            return Err(Error::invalid(format!(
                "sinusoid {i}: frequency {} Hz outside [0, {nyquist}) Hz",
                s.frequency_hz
            )));
        }
        if !(s.initial_phase.is_finite() && (0.0..TAU).contains(&s.initial_phase)) {
            return Err(Error::invalid(format!(
                "sinusoid {i}: initial phase {} outside [0, 2π)",
                s.initial_phase
            )));
        }
        if specs[..i].iter().any(|p| p.frequency_hz == s.frequency_hz) {
            return Err(Error::invalid(format!(
                "duplicate sinusoid frequency {} Hz",
                s.frequency_hz
            )));
        }
    }

    let len = (duration_s * sample_rate_hz).round() as usize;
    let samples = (0..len)
        .map(|l| {
            let t = l as f64 / sample_rate_hz;
            specs
                .iter()
                .map(|s| s.amplitude * (TAU * s.frequency_hz * t + s.initial_phase).sin())
                .sum()
        })
        .collect();
    SignalBuffer::new(samples, sample_rate_hz)
}

fn check_snr_target(target_snr_db: f64) -> Result<()> {
    if target_snr_db.is_nan() || target_snr_db == f64::NEG_INFINITY {
        return Err(Error::invalid(format!(
            "target SNR must be a number or +inf, got {target_snr_db}"
        )));
    }
    Ok(())
}

/// Adds white Gaussian noise scaled so the realized SNR equals `target_snr_db`.
///
/// The noise is drawn first and rescaled afterwards, so the target holds for
/// the particular realization, not just in expectation. `f64::INFINITY`
/// returns the clean signal unchanged.
pub fn add_noise_at_snr(clean: &SignalBuffer, target_snr_db: f64, seed: u64) -> Result<SignalBuffer> {
    check_snr_target(target_snr_db)?;
    let clean_energy = clean.energy();
    if clean_energy == 0.0 {
        return Err(Error::invalid("clean signal has zero energy"));
    }
    if target_snr_db == f64::INFINITY {
        return Ok(clean.clone());
    }
    let noise = white_noise(clean.len(), seed);
    let noise_energy: f64 = noise.iter().map(|v| v * v).sum();
    let scale = (clean_energy / 10f64.powf(target_snr_db / 10.0) / noise_energy).sqrt();
    let samples = clean
        .samples()
        .iter()
        .zip(&noise)
        .map(|(c, n)| c + scale * n)
        .collect();
    clean.with_samples(samples)
}

/// Unit-variance white Gaussian noise, reproducible from `seed`.
pub fn white_noise(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Adds circular complex Gaussian noise to every entry of a time-frequency matrix,
/// scaled so that the realized SNR against `clean` is exactly `target_snr_db`.
pub fn add_complex_noise_at_snr(
    clean: &Array2<Complex64>,
    target_snr_db: f64,
    seed: u64,
) -> Result<Array2<Complex64>> {
    check_snr_target(target_snr_db)?;
    let clean_energy: f64 = clean.iter().map(|z| z.norm_sqr()).sum();
    if clean_energy == 0.0 {
        return Err(Error::invalid("clean matrix has zero energy"));
    }
    if target_snr_db == f64::INFINITY {
        return Ok(clean.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Array2::from_shape_simple_fn(clean.raw_dim(), || {
        Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng))
    });
    let noise_energy: f64 = noise.iter().map(|z| z.norm_sqr()).sum();
    let scale = (clean_energy / 10f64.powf(target_snr_db / 10.0) / noise_energy).sqrt();
    Ok(clean + &(noise * Complex64::from(scale)))
}

fn snr_from_energies(signal: f64, error: f64) -> Result<f64> {
    if signal == 0.0 {
        return Err(Error::invalid("reference has zero energy"));
    }
    if error == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / error).log10())
}

/// `10·log10(‖reference‖² / ‖reference − estimate‖²)`; `+∞` for an exact match.
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::shape(reference.len(), estimate.len()));
    }
    let signal = reference.iter().map(|v| v * v).sum();
    let error = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (r - e) * (r - e))
        .sum();
    snr_from_energies(signal, error)
}

/// Complex-matrix counterpart of [`snr_db`].
pub fn snr_db_complex(reference: &Array2<Complex64>, estimate: &Array2<Complex64>) -> Result<f64> {
    if reference.dim() != estimate.dim() {
        return Err(Error::shape(
            format!("{:?}", reference.dim()),
            format!("{:?}", estimate.dim()),
        ));
    }
    let signal = reference.iter().map(|z| z.norm_sqr()).sum();
    let error = reference
        .iter()
        .zip(estimate)
        .map(|(r, e)| (r - e).norm_sqr())
        .sum();
    snr_from_energies(signal, error)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn harmonic_recipe_matches_reference_values() {
        let specs = harmonic_specs(3, 100.0);
        let amps: Vec<f64> = specs.iter().map(|s| s.amplitude).collect();
        let freqs: Vec<f64> = specs.iter().map(|s| s.frequency_hz).collect();
        assert_eq!(amps, [10.0, 9.0, 8.0]);
        assert_eq!(freqs, [100.0, 200.0, 300.0]);
        let x = synth_sinusoid_sum(&specs, 1.0, 16000.0).unwrap();
        assert_eq!(x.len(), 16000);
    }

    #[test]
    fn empty_spec_list_gives_silence() {
        let x = synth_sinusoid_sum(&[], 0.01, 8000.0).unwrap();
        assert_eq!(x.len(), 80);
        assert!(x.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_sinusoid_matches_pointwise_evaluation() {
        let fs = 8000.0;
        let x = synth_sinusoid_sum(&[SinusoidSpec::new(1.0, fs / 8.0)], 8.0 / fs, fs).unwrap();
        assert_eq!(x.len(), 8);
        for (l, v) in x.samples().iter().enumerate() {
            let expected = (TAU * l as f64 / 8.0).sin();
            assert!((v - expected).abs() < 1e-12, "l={l}: {v} vs {expected}");
        }
    }

    #[test]
    fn synth_rejects_bad_specs() {
        let fs = 16000.0;
        assert!(synth_sinusoid_sum(&[SinusoidSpec::new(1.0, 8000.0)], 1.0, fs).is_err());
        let dup = [SinusoidSpec::new(1.0, 100.0), SinusoidSpec::new(2.0, 100.0)];
        assert!(synth_sinusoid_sum(&dup, 1.0, fs).is_err());
        assert!(synth_sinusoid_sum(&[], 0.0, fs).is_err());
        assert!(synth_sinusoid_sum(&[SinusoidSpec::new(-1.0, 10.0)], 1.0, fs).is_err());
    }

    #[test]
    fn zero_db_noise_has_clean_energy() {
        let clean = synth_sinusoid_sum(&harmonic_specs(3, 100.0), 0.1, 16000.0).unwrap();
        let noisy = add_noise_at_snr(&clean, 0.0, 3).unwrap();
        let noise_energy: f64 = clean
            .samples()
            .iter()
            .zip(noisy.samples())
            .map(|(c, y)| (y - c) * (y - c))
            .sum();
        assert!((noise_energy / clean.energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infinite_snr_returns_clean() {
        let clean = synth_sinusoid_sum(&harmonic_specs(2, 50.0), 0.05, 8000.0).unwrap();
        assert_eq!(add_noise_at_snr(&clean, f64::INFINITY, 1).unwrap(), clean);
    }

    #[test]
    fn zero_energy_rejected() {
        let silent = SignalBuffer::zeros(16, 8000.0).unwrap();
        assert!(add_noise_at_snr(&silent, 10.0, 0).is_err());
        assert!(snr_db(&[0.0, 0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn snr_examples() {
        assert_eq!(snr_db(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), f64::INFINITY);
        assert!(snr_db(&[1.0, -2.0, 3.0], &[0.0; 3]).unwrap().abs() < 1e-12);
        let v = snr_db(&[3.0, 4.0], &[3.0, 3.0]).unwrap();
        assert!((v - 13.979_400_086_720_377).abs() < 1e-9, "{v}");
        assert!(snr_db(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn complex_noise_hits_target() {
        let clean = Array2::from_shape_fn((7, 5), |(i, j)| Complex64::new(i as f64, j as f64 - 2.0));
        let noisy = add_complex_noise_at_snr(&clean, 13.0, 9).unwrap();
        assert!((snr_db_complex(&clean, &noisy).unwrap() - 13.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn realized_snr_matches_target(seed in any::<u64>(), target in -10.0f64..40.0) {
            let clean = synth_sinusoid_sum(&harmonic_specs(3, 100.0), 0.05, 16000.0).unwrap();
            let noisy = add_noise_at_snr(&clean, target, seed).unwrap();
            let measured = snr_db(clean.samples(), noisy.samples()).unwrap();
            prop_assert!((measured - target).abs() < 1e-9);
            let again = add_noise_at_snr(&clean, target, seed).unwrap();
            prop_assert_eq!(noisy, again);
        }

        #[test]
        fn synthesis_is_linear(f1 in 10.0f64..3000.0, f2 in 3001.0f64..7000.0, a1 in 0.0f64..5.0, a2 in 0.0f64..5.0) {
            let fs = 16000.0;
            let s1 = [SinusoidSpec::new(a1, f1)];
            let s2 = [SinusoidSpec::new(a2, f2).with_phase(1.0)];
            let both = synth_sinusoid_sum(&[s1[0], s2[0]], 0.01, fs).unwrap();
            let x1 = synth_sinusoid_sum(&s1, 0.01, fs).unwrap();
            let x2 = synth_sinusoid_sum(&s2, 0.01, fs).unwrap();
            for ((b, p), q) in both.samples().iter().zip(x1.samples()).zip(x2.samples()) {
                prop_assert!((b - p - q).abs() < 1e-12);
            }
        }
    }
}
