//! Python bindings. Signals are plain lists of floats and matrices are lists
//! of rows (complex entries as Python `complex`).

use ipclr::denoise::{denoise as run_denoise, AdmmParams, IfSource};
use ipclr::experiments::{IfReference, Observation, Representation};
use ipclr::frames::{istft as run_istft, stft as run_stft};
use ipclr::ifreq::{estimate_if_from_signal, DEFAULT_GUARD_EPS};
use ipclr::io::WavFormat;
use ipclr::ipc::build_corrector;
use ipclr::lowrank::{self, CMatrix};
use ipclr::signals::{self, SignalBuffer};
use ipclr::{Boundary, Error};
use ndarray::Array2;
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    if e.is_numerical() {
        PyArithmeticError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn parsed<T: std::str::FromStr<Err = Error>>(text: &str) -> PyResult<T> {
    text.parse().map_err(py_err)
}

fn to_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("matrix rows must have equal length"));
    }
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect())
        .map_err(|e| PyValueError::new_err(e.to_string()))
}

fn to_rows<T: Clone>(m: &Array2<T>) -> Vec<Vec<T>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn signal(x: Vec<f64>, sample_rate: f64) -> PyResult<SignalBuffer> {
    SignalBuffer::new(x, sample_rate).map_err(py_err)
}

/// Window length, hop and boundary handling (`"zeropad"` or `"periodic"`).
#[pyclass(frozen, module = "ipclr")]
struct StftConfig {
    inner: ipclr::StftConfig,
}

#[pymethods]
impl StftConfig {
    #[new]
    #[pyo3(signature = (window_len, hop, boundary = "zeropad"))]
    fn new(window_len: usize, hop: usize, boundary: &str) -> PyResult<Self> {
        let b: Boundary = parsed(boundary)?;
        let inner = ipclr::StftConfig::new(window_len, hop).map_err(py_err)?.with_boundary(b);
        Ok(Self { inner })
    }

    #[getter]
    fn window_len(&self) -> usize {
        self.inner.window_len
    }

    #[getter]
    fn hop(&self) -> usize {
        self.inner.hop
    }

    #[getter]
    fn bins(&self) -> usize {
        self.inner.bins()
    }

    fn frame_count(&self, length: usize) -> PyResult<usize> {
        self.inner.frame_count(length).map_err(py_err)
    }

    fn analysis_window(&self) -> Vec<f64> {
        self.inner.analysis_window()
    }

    fn __repr__(&self) -> String {
        format!(
            "StftConfig(window_len={}, hop={}, boundary={:?})",
            self.inner.window_len, self.inner.hop, self.inner.boundary
        )
    }
}

/// Complex spectrogram (bins x frames) with the configuration that produced it.
#[pyclass(frozen, module = "ipclr")]
struct Spectrogram {
    inner: ipclr::Spectrogram,
    sample_rate: f64,
}

#[pymethods]
impl Spectrogram {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        self.inner.data().dim()
    }

    /// Coefficients as a list of rows.
    fn data(&self) -> Vec<Vec<Complex64>> {
        to_rows(self.inner.data())
    }

    fn amplitude(&self) -> Vec<Vec<f64>> {
        to_rows(&self.inner.amplitude())
    }

    /// Inverse transform with the analysis window (exact for tight windows).
    fn istft(&self) -> PyResult<Vec<f64>> {
        let w = self.inner.config().analysis_window();
        Ok(run_istft(&self.inner, &w, self.sample_rate).map_err(py_err)?.into_samples())
    }
}

#[pyfunction]
#[pyo3(signature = (x, config, sample_rate = 1.0))]
fn stft(x: Vec<f64>, config: &StftConfig, sample_rate: f64) -> PyResult<Spectrogram> {
    let x = signal(x, sample_rate)?;
    let cfg = config.inner;
    let inner = run_stft(&x, &cfg, &cfg.analysis_window()).map_err(py_err)?;
    Ok(Spectrogram { inner, sample_rate })
}

/// Instantaneous frequency per bin, in bins (cycles per window length).
#[pyfunction]
#[pyo3(signature = (x, config, guard = DEFAULT_GUARD_EPS))]
fn instantaneous_frequency(x: Vec<f64>, config: &StftConfig, guard: f64) -> PyResult<Vec<Vec<f64>>> {
    let v = estimate_if_from_signal(&signal(x, 1.0)?, &config.inner, guard).map_err(py_err)?;
    Ok(to_rows(v.values()))
}

/// Phase-corrected spectrogram of `x`, with the correction estimated from
/// `reference` (default: `x` itself).
#[pyfunction]
#[pyo3(signature = (x, config, reference = None))]
fn ipc_stft(x: Vec<f64>, config: &StftConfig, reference: Option<Vec<f64>>) -> PyResult<Vec<Vec<Complex64>>> {
    let cfg = config.inner;
    let x = signal(x, 1.0)?;
    let r = match reference {
        Some(r) => signal(r, 1.0)?,
        None => x.clone(),
    };
    let v = estimate_if_from_signal(&r, &cfg, DEFAULT_GUARD_EPS).map_err(py_err)?;
    let c = build_corrector(&v).map_err(py_err)?;
    let s = run_stft(&x, &cfg, &cfg.analysis_window()).map_err(py_err)?;
    Ok(to_rows(&c.apply(s.data()).map_err(py_err)?))
}

/// `(u, s, v)` with `m = u · diag(s) · v^H`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn svd(m: Vec<Vec<Complex64>>) -> PyResult<(Vec<Vec<Complex64>>, Vec<f64>, Vec<Vec<Complex64>>)> {
    let f = lowrank::svd(&to_matrix(m)?).map_err(py_err)?;
    Ok((to_rows(&f.u), f.singular_values, to_rows(&f.v)))
}

#[pyfunction]
fn rank_k_approx(m: Vec<Vec<Complex64>>, k: usize) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(to_rows(&lowrank::rank_k_approx(&to_matrix(m)?, k).map_err(py_err)?))
}

#[pyfunction]
fn svt(m: Vec<Vec<Complex64>>, threshold: f64) -> PyResult<Vec<Vec<Complex64>>> {
    Ok(to_rows(&lowrank::svt(&to_matrix(m)?, threshold).map_err(py_err)?))
}

#[pyfunction]
fn nuclear_norm(m: Vec<Vec<Complex64>>) -> PyResult<f64> {
    lowrank::nuclear_norm(&to_matrix(m)?).map_err(py_err)
}

/// Sum of `components` harmonics of `f0` with amplitudes 10, 9, 8, ...
#[pyfunction]
#[pyo3(signature = (components = 3, f0 = 100.0, duration = 10.24, sample_rate = 16000.0))]
fn harmonics(components: usize, f0: f64, duration: f64, sample_rate: f64) -> PyResult<Vec<f64>> {
    let specs = signals::harmonic_specs(components, f0);
    Ok(signals::synth_sinusoid_sum(&specs, duration, sample_rate).map_err(py_err)?.into_samples())
}

#[pyfunction]
#[pyo3(signature = (x, snr_db, seed = 0))]
fn add_noise(x: Vec<f64>, snr_db: f64, seed: u64) -> PyResult<Vec<f64>> {
    let y = signals::add_noise_at_snr(&signal(x, 1.0)?, snr_db, seed).map_err(py_err)?;
    Ok(y.into_samples())
}

#[pyfunction]
fn snr_db(reference: Vec<f64>, estimate: Vec<f64>) -> PyResult<f64> {
    signals::snr_db(&reference, &estimate).map_err(py_err)
}

/// SNR (dB) of the rank-k approximation of one representation of `x`'s
/// one-sided spectrogram, optionally after adding coefficient noise.
#[pyfunction]
#[pyo3(signature = (x, config, representation = "ipc", k = 1, snr = None, seed = 0, if_reference = "clean"))]
fn rank_k_snr(
    x: Vec<f64>,
    config: &StftConfig,
    representation: &str,
    k: usize,
    snr: Option<f64>,
    seed: u64,
    if_reference: &str,
) -> PyResult<f64> {
    let rep: Representation = parsed(representation)?;
    let if_ref: IfReference = parsed(if_reference)?;
    let obs = Observation::prepare(&signal(x, 1.0)?, &config.inner, snr, seed, if_ref).map_err(py_err)?;
    obs.snr(rep, k).map_err(py_err)
}

/// Nuclear-norm denoising in the phase-corrected domain. Returns the
/// denoised signal and the per-iteration objective values.
#[pyfunction]
#[pyo3(signature = (d, config, lam, rho = 1.0, iters = 100, tol = 0.0, if_reference = None))]
fn denoise(
    d: Vec<f64>,
    config: &StftConfig,
    lam: f64,
    rho: f64,
    iters: usize,
    tol: f64,
    if_reference: Option<Vec<f64>>,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let d = signal(d, 1.0)?;
    let source = match if_reference {
        Some(r) => IfSource::External(
            estimate_if_from_signal(&signal(r, 1.0)?, &config.inner, DEFAULT_GUARD_EPS).map_err(py_err)?,
        ),
        None => IfSource::FromObservation,
    };
    let params = AdmmParams {
        lambda: lam,
        rho,
        max_iter: iters,
        tol,
    };
    let (x, state) = run_denoise(&d, &params, &config.inner, &source).map_err(py_err)?;
    Ok((x.into_samples(), state.objective_history))
}

/// `(samples, sample_rate)`.
#[pyfunction]
fn read_wav(path: &str) -> PyResult<(Vec<f64>, f64)> {
    let x = ipclr::io::read_wav(path).map_err(py_err)?;
    let fs = x.sample_rate_hz();
    Ok((x.into_samples(), fs))
}

/// Returns the number of clamped samples.
#[pyfunction]
#[pyo3(signature = (path, x, sample_rate, format = "float32"))]
fn write_wav(path: &str, x: Vec<f64>, sample_rate: f64, format: &str) -> PyResult<usize> {
    let fmt: WavFormat = parsed(format)?;
    ipclr::io::write_wav(&signal(x, sample_rate)?, path, fmt).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "ipclr")]
fn ipclr_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<StftConfig>()?;
    m.add_class::<Spectrogram>()?;
    m.add_function(wrap_pyfunction!(stft, m)?)?;
    m.add_function(wrap_pyfunction!(instantaneous_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(ipc_stft, m)?)?;
    m.add_function(wrap_pyfunction!(svd, m)?)?;
    m.add_function(wrap_pyfunction!(rank_k_approx, m)?)?;
    m.add_function(wrap_pyfunction!(svt, m)?)?;
    m.add_function(wrap_pyfunction!(nuclear_norm, m)?)?;
    m.add_function(wrap_pyfunction!(harmonics, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(snr_db, m)?)?;
    m.add_function(wrap_pyfunction!(rank_k_snr, m)?)?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(read_wav, m)?)?;
    m.add_function(wrap_pyfunction!(write_wav, m)?)?;
    Ok(())
}
