//! Instantaneous-frequency estimation by the derivative-window
//! (reassignment) formula `v = bξ − Im[G^{w'} / G^{w}]`.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::frames::{stft, Spectrogram, StftConfig};
use crate::signals::SignalBuffer;

/// Default magnitude guard, relative to the spectrogram maximum.
pub const DEFAULT_GUARD_EPS: f64 = 1e-6;

/// Per-bin instantaneous frequency in DFT bins (cycles per window length).
#[derive(Debug, Clone, PartialEq)]
pub struct IfMap {
    values: Array2<f64>,
    config: StftConfig,
}

impl IfMap {
    pub fn new(values: Array2<f64>, config: StftConfig) -> Result<Self> {
        if values.nrows() != config.bins() {
            return Err(Error::shape(config.bins(), values.nrows()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("instantaneous frequency map".into()));
        }
        Ok(Self { values, config })
    }

    /// Every bin at its own carrier frequency `b·ξ`.
    pub fn carrier(config: StftConfig, frames: usize) -> Self {
        let b = config.frequency_step as f64;
        Self {
            values: Array2::from_shape_fn((config.bins(), frames), |(xi, _)| b * xi as f64),
            config,
        }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }
}

/// Estimates the instantaneous-frequency map from the spectrograms taken
/// with a window `w` and its derivative `w'`.
///
/// Bins whose magnitude falls below `guard_eps · max|G^w|` keep their carrier
/// frequency `b·ξ`.
pub fn estimate_if(s_w: &Spectrogram, s_wprime: &Spectrogram, guard_eps: f64) -> Result<IfMap> {
    if s_w.data().dim() != s_wprime.data().dim() {
        return Err(Error::shape(
            format!("{:?}", s_w.data().dim()),
            format!("{:?}", s_wprime.data().dim()),
        ));
    }
    if s_w.config() != s_wprime.config() || s_w.origin_len() != s_wprime.origin_len() {
        return Err(Error::ConfigMismatch(
            "spectrograms were computed with different configurations".into(),
        ));
    }
    if !(guard_eps >= 0.0) {
        return Err(Error::invalid(format!("guard must be non-negative, got {guard_eps}")));
    }
    let b = s_w.config().frequency_step as f64;
    let peak = s_w.data().iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let floor = guard_eps * peak;
    let mut values = Array2::zeros(s_w.data().dim());
    for (((xi, tau), g), gp) in s_w.data().indexed_iter().zip(s_wprime.data()) {
        let carrier = b * xi as f64;
        let mag = g.norm();
        values[[xi, tau]] = if mag > 0.0 && mag >= floor {
            carrier - (gp / g).im
        } else {
            carrier
        };
    }
    IfMap::new(values, *s_w.config())
}

/// Convenience wrapper: analyses `x` with the configured window and its
/// derivative and estimates the map.
pub fn estimate_if_from_signal(x: &SignalBuffer, config: &StftConfig, guard_eps: f64) -> Result<IfMap> {
    let s_w = stft(x, config, &config.analysis_window())?;
    let s_wp = stft(x, config, &config.derivative_window())?;
    estimate_if(&s_w, &s_wp, guard_eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{stft_complex, Boundary};
    use num_complex::Complex64;
    use std::f64::consts::TAU;

    fn peak_row(s: &Spectrogram, tau: usize) -> usize {
        (0..s.bins())
            .max_by(|&a, &b| s.data()[[a, tau]].norm().total_cmp(&s.data()[[b, tau]].norm()))
            .unwrap()
    }

    fn exponential_if(freq_bins: f64, l: usize, a: usize) -> (Spectrogram, IfMap) {
        let cfg = StftConfig::new(l, a).unwrap().with_boundary(Boundary::Periodic);
        let x: Vec<Complex64> = (0..8 * l)
            .map(|n| Complex64::from_polar(1.0, TAU * freq_bins * n as f64 / l as f64))
            .collect();
        let s = stft_complex(&x, &cfg, &cfg.analysis_window()).unwrap();
        let sp = stft_complex(&x, &cfg, &cfg.derivative_window()).unwrap();
        let v = estimate_if(&s, &sp, DEFAULT_GUARD_EPS).unwrap();
        (s, v)
    }

    #[test]
    fn on_grid_exponential_calibrates() {
        let (s, v) = exponential_if(37.0, 512, 128);
        for tau in 0..s.frames() {
            let p = peak_row(&s, tau);
            assert_eq!(p, 37);
            assert!((v.values()[[p, tau]] - 37.0).abs() < 0.01);
        }
    }

    #[test]
    fn off_grid_neighbours_point_at_the_component() {
        let (s, v) = exponential_if(20.25, 256, 64);
        let p = peak_row(&s, 0);
        for xi in p - 1..=p + 1 {
            for tau in 0..s.frames() {
                assert!((v.values()[[xi, tau]] - 20.25).abs() < 1e-3, "{}", v.values()[[xi, tau]]);
            }
        }
    }

    #[test]
    fn zero_signal_falls_back_to_carrier() {
        let cfg = StftConfig::new(64, 16).unwrap();
        let x = SignalBuffer::zeros(100, 1.0).unwrap();
        let v = estimate_if_from_signal(&x, &cfg, DEFAULT_GUARD_EPS).unwrap();
        for ((xi, _), val) in v.values().indexed_iter() {
            assert_eq!(*val, xi as f64);
        }
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let cfg = StftConfig::new(64, 16).unwrap();
        let x = SignalBuffer::new(crate::signals::white_noise(100, 1), 1.0).unwrap();
        let y = SignalBuffer::new(crate::signals::white_noise(120, 1), 1.0).unwrap();
        let a = stft(&x, &cfg, &cfg.analysis_window()).unwrap();
        let b = stft(&y, &cfg, &cfg.derivative_window()).unwrap();
        assert!(estimate_if(&a, &b, 1e-6).is_err());
    }
}
