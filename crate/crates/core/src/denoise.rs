//! Nuclear-norm denoising in the phase-corrected time-frequency domain.
//!
//! Solves `min_x ½‖x − d‖² + λ‖E ⊙ G^w(x)‖_*` over real signals `x` by
//! scaled-dual ADMM on the split `Z = A x`, `A = E ⊙ G^w(·)`. The corrector
//! `E` is computed once (from the observation or an external map) and held
//! fixed, which makes `A` linear. With a tight window and unimodular `E`,
//! `A^H A = I`, so the x-update has the closed form
//! `x = (d + ρ Re A^H(Z − U)) / (1 + ρ)`.

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{is_tight, stft, StftConfig};
use crate::ifreq::{estimate_if_from_signal, IfMap, DEFAULT_GUARD_EPS};
use crate::ipc::{build_corrector, IpcOperator, PhaseCorrector};
use crate::lowrank::{nuclear_norm, svt};
use crate::signals::{snr_db, SignalBuffer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmmParams {
    pub lambda: f64,
    pub rho: f64,
    pub max_iter: usize,
    /// Relative primal-residual stopping threshold; 0 runs all iterations.
    pub tol: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            rho: 1.0,
            max_iter: 100,
            tol: 0.0,
        }
    }
}

impl AdmmParams {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid(format!("tol must be non-negative, got {}", self.tol)));
        }
        Ok(())
    }
}

/// Where the instantaneous frequency for `E` comes from.
#[derive(Debug, Clone)]
pub enum IfSource {
    /// Estimated from the noisy input itself.
    FromObservation,
    /// Supplied by the caller, e.g. estimated from a clean reference.
    External(IfMap),
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub x: SignalBuffer,
    pub z: Array2<Complex64>,
    pub u: Array2<Complex64>,
    pub objective_history: Vec<f64>,
    /// `‖A x − Z‖_F` after each iteration.
    pub residual_history: Vec<f64>,
    /// `‖A x‖_F` after each iteration.
    pub transform_norm_history: Vec<f64>,
    pub iterations: usize,
}

impl AdmmState {
    /// Final primal residual relative to `‖A x‖_F`.
    pub fn relative_residual(&self) -> f64 {
        match (self.residual_history.last(), self.transform_norm_history.last()) {
            (Some(r), Some(n)) if *n > 0.0 => r / n,
            (Some(r), _) => *r,
            _ => 0.0,
        }
    }
}

fn frobenius(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn half_sq_dist(x: &[f64], d: &[f64]) -> f64 {
    0.5 * x.iter().zip(d).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// `½‖x − d‖² + λ‖E ⊙ G^w(x)‖_*`.
pub fn ipclr_objective(
    x: &SignalBuffer,
    d: &SignalBuffer,
    lambda: f64,
    corrector: &PhaseCorrector,
    config: &StftConfig,
) -> Result<f64> {
    if x.len() != d.len() {
        return Err(Error::shape(d.len(), x.len()));
    }
    let data = half_sq_dist(x.samples(), d.samples());
    if lambda == 0.0 {
        return Ok(data);
    }
    let s = stft(x, config, &config.analysis_window())?;
    Ok(data + lambda * nuclear_norm(&corrector.apply(s.data())?)?)
}

pub fn resolve_corrector(d: &SignalBuffer, config: &StftConfig, source: &IfSource) -> Result<PhaseCorrector> {
    let v = match source {
        IfSource::FromObservation => estimate_if_from_signal(d, config, DEFAULT_GUARD_EPS)?,
        IfSource::External(v) => {
            if v.config() != config {
                return Err(Error::ConfigMismatch("external IF map uses a different configuration".into()));
            }
            v.clone()
        }
    };
    build_corrector(&v)
}

/// Runs ADMM and returns the final signal together with the solver state.
pub fn denoise(
    d: &SignalBuffer,
    params: &AdmmParams,
    config: &StftConfig,
    if_source: &IfSource,
) -> Result<(SignalBuffer, AdmmState)> {
    params.validate()?;
    config.validate()?;
    if d.is_empty() {
        return Err(Error::invalid("empty observation"));
    }
    let window = config.analysis_window();
    if !is_tight(&window, config.hop) {
        return Err(Error::ConfigMismatch(
            "ADMM x-update requires a tight analysis window".into(),
        ));
    }
    let template = stft(d, config, &window)?;
    let corrector = resolve_corrector(d, config, if_source)?;
    let op = IpcOperator::new(corrector, &template)?;
    let rho = params.rho;
    let threshold = params.lambda / rho;

    let mut x = d.samples().to_vec();
    let mut z = op.forward(d)?;
    let mut u = Array2::<Complex64>::zeros(z.dim());
    let mut objective_history = Vec::with_capacity(params.max_iter);
    let mut residual_history = Vec::with_capacity(params.max_iter);
    let mut transform_norm_history = Vec::with_capacity(params.max_iter);
    let mut iterations = 0;

    for it in 0..params.max_iter {
        let back = op.adjoint_real(&(&z - &u))?;
        for ((xi, di), bi) in x.iter_mut().zip(d.samples()).zip(&back) {
            *xi = (di + rho * bi) / (1.0 + rho);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("iterate became non-finite at iteration {it}")));
        }
        let xs = d.with_samples(x.clone())?;
        let ax = op.forward(&xs)?;
        z = svt(&(&ax + &u), threshold)?;
        op.corrector().symmetrize(&mut z)?;
        let gap = &ax - &z;
        u += &gap;

        let residual = frobenius(&gap);
        let ax_norm = frobenius(&ax);
        let objective = half_sq_dist(&x, d.samples()) + params.lambda * nuclear_norm(&ax)?;
        if !(objective.is_finite() && residual.is_finite()) {
            return Err(Error::Numerical(format!("ADMM diverged at iteration {it}")));
        }
        objective_history.push(objective);
        residual_history.push(residual);
        transform_norm_history.push(ax_norm);
        iterations = it + 1;
        if params.tol > 0.0 && residual <= params.tol * ax_norm {
            break;
        }
    }

    let x = d.with_samples(x)?;
    let state = AdmmState {
        x: x.clone(),
        z,
        u,
        objective_history,
        residual_history,
        transform_norm_history,
        iterations,
    };
    Ok((x, state))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub snr_db: f64,
    pub objective: f64,
    /// Objective of the observation itself at the same `λ`.
    pub observation_objective: f64,
    pub relative_residual: f64,
}

/// One denoising run per `λ` in `grid`, scored against `clean`; rows sorted by `λ`.
pub fn lambda_sweep(
    d: &SignalBuffer,
    clean: &SignalBuffer,
    grid: &[f64],
    params: &AdmmParams,
    config: &StftConfig,
    if_source: &IfSource,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::invalid("empty lambda grid"));
    }
    if let Some(l) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::invalid(format!("lambda grid values must be positive, got {l}")));
    }
    if clean.len() != d.len() {
        return Err(Error::shape(d.len(), clean.len()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let corrector = resolve_corrector(d, config, if_source)?;
    sorted
        .par_iter()
        .map(|&lambda| {
            let p = params.with_lambda(lambda);
            let (x, state) = denoise(d, &p, config, if_source)?;
            Ok(SweepRow {
                lambda,
                snr_db: snr_db(clean.samples(), x.samples())?,
                objective: state.objective_history.last().copied().unwrap_or(f64::NAN),
                observation_objective: ipclr_objective(d, d, lambda, &corrector, config)?,
                relative_residual: state.relative_residual(),
            })
        })
        .collect()
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && count >= 1) {
        return Err(Error::invalid(format!("invalid log grid [{lo}, {hi}] × {count}")));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{Boundary, WindowKind};
    use crate::signals::{add_noise_at_snr, harmonic_specs, synth_sinusoid_sum};

    fn small_case() -> (SignalBuffer, SignalBuffer, StftConfig) {
        let clean = synth_sinusoid_sum(&harmonic_specs(3, 100.0), 0.64, 16000.0).unwrap();
        let noisy = add_noise_at_snr(&clean, 10.0, 7).unwrap();
        let cfg = StftConfig::new(1024, 256).unwrap().with_boundary(Boundary::Periodic);
        (clean, noisy, cfg)
    }

    #[test]
    fn params_validation() {
        assert!(AdmmParams::default().validate().is_ok());
        assert!(AdmmParams::default().with_lambda(0.0).validate().is_err());
        assert!(AdmmParams { rho: -1.0, ..Default::default() }.validate().is_err());
        assert!(AdmmParams { max_iter: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn non_tight_window_rejected() {
        let (_, noisy, cfg) = small_case();
        let cfg = cfg.with_window(WindowKind::Hann);
        assert!(denoise(&noisy, &AdmmParams::default(), &cfg, &IfSource::FromObservation).is_err());
    }

    #[test]
    fn objective_special_cases() {
        let (_, noisy, cfg) = small_case();
        let c = resolve_corrector(&noisy, &cfg, &IfSource::FromObservation).unwrap();
        let zero = SignalBuffer::zeros(noisy.len(), 16000.0).unwrap();
        assert_eq!(ipclr_objective(&zero, &zero, 3.0, &c, &cfg).unwrap(), 0.0);
        let half = 0.5 * noisy.energy();
        assert!((ipclr_objective(&zero, &noisy, 0.0, &c, &cfg).unwrap() - half).abs() < 1e-9 * half);
        let short = SignalBuffer::zeros(10, 16000.0).unwrap();
        assert!(ipclr_objective(&short, &noisy, 1.0, &c, &cfg).is_err());
    }

    #[test]
    fn objective_of_sinusoid_is_scaled_nuclear_norm() {
        let x = synth_sinusoid_sum(&harmonic_specs(1, 100.0), 0.64, 16000.0).unwrap();
        let cfg = StftConfig::new(1024, 256).unwrap().with_boundary(Boundary::Periodic);
        let c = resolve_corrector(&x, &cfg, &IfSource::FromObservation).unwrap();
        let s = stft(&x, &cfg, &cfg.analysis_window()).unwrap();
        let nn = nuclear_norm(&c.apply(s.data()).unwrap()).unwrap();
        let obj = ipclr_objective(&x, &x, 2.5, &c, &cfg).unwrap();
        assert!((obj - 2.5 * nn).abs() < 1e-9 * obj);
    }

    #[test]
    fn tiny_lambda_returns_observation() {
        let (_, noisy, cfg) = small_case();
        let params = AdmmParams { lambda: 1e-12, max_iter: 10, ..Default::default() };
        let (x, _) = denoise(&noisy, &params, &cfg, &IfSource::FromObservation).unwrap();
        let err: f64 = x.samples().iter().zip(noisy.samples()).map(|(a, b)| (a - b).powi(2)).sum();
        assert!(err.sqrt() < 1e-6 * noisy.energy().sqrt());
    }

    #[test]
    fn denoising_is_deterministic_and_improves_snr() {
        let (clean, noisy, cfg) = small_case();
        let params = AdmmParams { lambda: 30.0, max_iter: 30, ..Default::default() };
        let (x1, s1) = denoise(&noisy, &params, &cfg, &IfSource::FromObservation).unwrap();
        let (x2, s2) = denoise(&noisy, &params, &cfg, &IfSource::FromObservation).unwrap();
        assert_eq!(x1, x2);
        assert_eq!(s1.objective_history, s2.objective_history);
        assert!(s1.objective_history.iter().all(|v| v.is_finite() && *v >= 0.0));
        let before = snr_db(clean.samples(), noisy.samples()).unwrap();
        let after = snr_db(clean.samples(), x1.samples()).unwrap();
        assert!(after > before + 3.0, "{before} -> {after}");
    }

    #[test]
    fn tolerance_stops_early() {
        let (_, noisy, cfg) = small_case();
        let params = AdmmParams { lambda: 1e-9, tol: 1e-3, max_iter: 50, ..Default::default() };
        let (_, state) = denoise(&noisy, &params, &cfg, &IfSource::FromObservation).unwrap();
        assert!(state.iterations < 50);
    }

    #[test]
    fn sweep_sorted_and_matches_direct_call() {
        let (clean, noisy, cfg) = small_case();
        let params = AdmmParams { max_iter: 5, ..Default::default() };
        let rows = lambda_sweep(&noisy, &clean, &[10.0, 0.1, 1.0], &params, &cfg, &IfSource::FromObservation).unwrap();
        assert_eq!(rows.iter().map(|r| r.lambda).collect::<Vec<_>>(), [0.1, 1.0, 10.0]);
        let (x, _) = denoise(&noisy, &params.with_lambda(1.0), &cfg, &IfSource::FromObservation).unwrap();
        assert_eq!(rows[1].snr_db, snr_db(clean.samples(), x.samples()).unwrap());
        assert!(lambda_sweep(&noisy, &clean, &[], &params, &cfg, &IfSource::FromObservation).is_err());
        assert!(lambda_sweep(&noisy, &clean, &[-1.0], &params, &cfg, &IfSource::FromObservation).is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 1e3, 7).unwrap();
        assert_eq!(g.len(), 7);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[6] - 1e3).abs() < 1e-9 && (g[3] - 1.0).abs() < 1e-12);
    }
}
