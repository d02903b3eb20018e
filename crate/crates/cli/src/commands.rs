use std::path::{Path, PathBuf};

use ipclr::denoise::{denoise, log_grid, AdmmParams, IfSource, SweepRow};
use ipclr::experiments::{
    column_constancy, rank_curve_csv, run_denoise_comparison, run_fig3, run_table1, table1_csv, Fig3Config,
    IfReference, Observation, Representation, SinusoidStudy, Table1Config,
};
use ipclr::frames::stft;
use ipclr::ifreq::{estimate_if_from_signal, DEFAULT_GUARD_EPS};
use ipclr::io::{matrix_to_csv, read_wav, write_wav, MatrixData, WavFormat};
use ipclr::ipc::{build_corrector, ipc_stft};
use ipclr::signals::{add_noise_at_snr, harmonic_specs, snr_db, synth_sinusoid_sum, SignalBuffer, SinusoidSpec};
use ipclr::{Boundary, StftConfig};
use ndarray::s;

use crate::config::{parse_list, Config};
use crate::{CliError, Command, StftArgs};

pub fn dispatch(command: Command, cfg: &Config) -> Result<(), CliError> {
    match command {
        Command::Synth {
            output,
            components,
            f0,
            sinusoids,
            duration,
            sample_rate,
            snr,
            seed,
            format,
            gain,
        } => {
            let output: PathBuf = cfg.require(output, "output")?;
            let specs = if sinusoids.is_empty() {
                harmonic_specs(cfg.get(components, "components", 3)?, cfg.get(f0, "f0", 100.0)?)
            } else {
                sinusoids.iter().map(|s| parse_sinusoid(s)).collect::<Result<_, _>>()?
            };
            let duration = cfg.get(duration, "duration", SinusoidStudy::default().duration_s)?;
            let fs = cfg.get(sample_rate, "sample-rate", 16000.0)?;
            let snr: Option<f64> = cfg.opt(snr, "snr")?;
            let seed = cfg.get(seed, "seed", 0)?;
            let format = wav_format(cfg, format)?;
            let gain = cfg.get(gain, "gain", 1.0 / 64.0)?;
            if !(gain > 0.0 && gain.is_finite()) {
                return Err(CliError::Usage(format!("gain must be positive, got {gain}")));
            }
            let clean = synth_sinusoid_sum(&specs, duration, fs)?;
            let x = match snr {
                Some(snr) => add_noise_at_snr(&clean, snr, seed)?,
                None => clean,
            };
            let x = x.with_samples(x.samples().iter().map(|v| v * gain).collect())?;
            write_wav(&x, &output, format)?;
            println!("wrote {} samples at {fs} Hz to {}", x.len(), output.display());
            Ok(())
        }
        Command::Spectrogram {
            input,
            output_dir,
            stft: stft_args,
            ipc,
            one_sided,
        } => {
            let input: PathBuf = cfg.require(input, "input")?;
            let output_dir: PathBuf = cfg.require(output_dir, "output-dir")?;
            let analysis = Analysis::resolve(cfg, &stft_args)?;
            let ipc = cfg.get(ipc, "ipc", false)?;
            let one_sided = cfg.get(one_sided, "one-sided", false)?;
            let x = read_wav(&input)?;
            let config = analysis.config_for(x.len())?;
            let mut spec = stft(&x, &config, &config.analysis_window())?;
            let mut if_map = None;
            if ipc {
                let v = estimate_if_from_signal(&x, &config, DEFAULT_GUARD_EPS)?;
                spec = ipc_stft(&spec, &build_corrector(&v)?)?;
                if_map = Some(v.values().clone());
            }
            let rows = if one_sided { config.bins() / 2 + 1 } else { config.bins() };
            let complex = spec.data().slice(s![..rows, ..]).to_owned();
            if ipc {
                println!("max column deviation of the phase-corrected spectrogram: {:.3e}", column_constancy(&complex));
            }
            let mut files = vec![
                ("amplitude.csv", matrix_to_csv(&MatrixData::Real(complex.mapv(|z| z.norm())))?),
                ("complex.csv", matrix_to_csv(&MatrixData::Complex(complex))?),
            ];
            if let Some(v) = if_map {
                files.push(("if.csv", matrix_to_csv(&MatrixData::Real(v.slice(s![..rows, ..]).to_owned()))?));
            }
            write_outputs(&output_dir, &files)?;
            println!("{} x {} spectrogram written to {}", rows, spec.frames(), output_dir.display());
            Ok(())
        }
        Command::Lowrank {
            input,
            k,
            representation,
            stft: stft_args,
            snr,
            seed,
            if_reference,
            output,
            format,
        } => {
            let input: PathBuf = cfg.require(input, "input")?;
            let k = cfg.get(k, "k", 1)?;
            let rep: Representation = parsed(cfg.get(representation, "representation", "ipc".into())?)?;
            let analysis = Analysis::resolve(cfg, &stft_args)?;
            let snr: Option<f64> = cfg.opt(snr, "snr")?;
            let seed = cfg.get(seed, "seed", 0)?;
            let if_reference: IfReference = parsed(cfg.get(if_reference, "if-reference", "clean".into())?)?;
            let output: Option<PathBuf> = cfg.opt(output, "output")?;
            let format = wav_format(cfg, format)?;
            let x = read_wav(&input)?;
            let config = analysis.config_for(x.len())?;
            let obs = Observation::prepare(&x, &config, snr, seed, if_reference)?;
            let estimate = obs.estimate(rep, k)?;
            if snr.is_some() {
                println!("input SNR: {:.4} dB", obs.input_snr()?);
            }
            let value = ipclr::signals::snr_db_complex(&obs.clean, &estimate)?;
            println!("rank-{k} {rep} SNR: {value:.4} dB");
            if let Some(path) = output {
                let y = obs.synthesize(&estimate, x.sample_rate_hz())?;
                write_wav(&y, &path, format)?;
            }
            Ok(())
        }
        Command::Table1 {
            output_dir,
            seeds,
            shifts,
            snrs,
            duration,
            window_len,
            if_reference,
        } => {
            let output_dir: PathBuf = cfg.require(output_dir, "output-dir")?;
            let defaults = Table1Config::default();
            let study = study(cfg, None, duration, window_len, if_reference)?;
            let seeds: u64 = cfg.get(seeds, "seeds", defaults.seeds.len() as u64)?;
            let shifts: Option<String> = cfg.opt(shifts, "shifts")?;
            let snrs: Option<String> = cfg.opt(snrs, "snrs")?;
            let table = Table1Config {
                shift_divisors: match shifts {
                    Some(s) => parse_list(&s, "shifts")?,
                    None => defaults.shift_divisors,
                },
                input_snrs_db: match snrs {
                    Some(s) => parse_list(&s, "snrs")?,
                    None => defaults.input_snrs_db,
                },
                seeds: (0..seeds).collect(),
                study,
            };
            if table.seeds.is_empty() {
                return Err(CliError::Usage("--seeds must be at least 1".into()));
            }
            for &d in &table.shift_divisors {
                table.study.config(d)?;
            }
            let cells = run_table1(&table)?;
            let csv = table1_csv(&table, &cells);
            write_outputs(&output_dir, &[("table1.csv", csv.clone())])?;
            print!("{csv}");
            Ok(())
        }
        Command::Fig3 {
            output_dir,
            components,
            snr,
            k_min,
            k_max,
            shift,
            seeds,
            duration,
            window_len,
            if_reference,
        } => {
            let output_dir: PathBuf = cfg.require(output_dir, "output-dir")?;
            let defaults = Fig3Config::default();
            let study = study(cfg, components, duration, window_len, if_reference)?;
            let seeds: u64 = cfg.get(seeds, "seeds", 1)?;
            let fig = Fig3Config {
                shift_divisor: cfg.get(shift, "shift", defaults.shift_divisor)?,
                input_snr_db: cfg.opt(snr, "snr")?,
                k_min: cfg.get(k_min, "k-min", defaults.k_min)?,
                k_max: cfg.get(k_max, "k-max", defaults.k_max)?,
                seeds: (0..seeds).collect(),
                study,
            };
            fig.study.config(fig.shift_divisor)?;
            let rows = run_fig3(&fig)?;
            let csv = rank_curve_csv(&rows);
            write_outputs(&output_dir, &[("fig3.csv", csv.clone())])?;
            print!("{csv}");
            Ok(())
        }
        Command::Denoise {
            input,
            output,
            lambda,
            rho,
            iters,
            tol,
            if_oracle,
            reference,
            stft: stft_args,
            convergence,
            format,
        } => {
            let input: PathBuf = cfg.require(input, "input")?;
            let output: PathBuf = cfg.require(output, "output")?;
            let params = admm_params(cfg, lambda, rho, iters, tol)?;
            let if_oracle: Option<PathBuf> = cfg.opt(if_oracle, "if-oracle")?;
            let reference: Option<PathBuf> = cfg.opt(reference, "reference")?;
            let analysis = Analysis::resolve(cfg, &stft_args)?;
            let convergence: PathBuf = cfg.get(convergence, "convergence", output.with_extension("csv"))?;
            let format = wav_format(cfg, format)?;

            let d = read_wav(&input)?;
            let config = analysis.config_for(d.len())?;
            let source = match &if_oracle {
                Some(path) => {
                    let clean = read_matching(path, &d)?;
                    IfSource::External(estimate_if_from_signal(&clean, &config, DEFAULT_GUARD_EPS)?)
                }
                None => IfSource::FromObservation,
            };
            let reference = reference.map(|p| read_matching(&p, &d)).transpose()?;
            let (x, state) = denoise(&d, &params, &config, &source)?;
            write_wav(&x, &output, format)?;
            let mut csv = String::from("iteration,objective,residual,relative_residual\n");
            for (i, (obj, (r, n))) in state
                .objective_history
                .iter()
                .zip(state.residual_history.iter().zip(&state.transform_norm_history))
                .enumerate()
            {
                let rel = if *n > 0.0 { r / n } else { *r };
                csv.push_str(&format!("{},{obj:.10e},{r:.10e},{rel:.10e}\n", i + 1));
            }
            write_file(&convergence, &csv)?;
            println!(
                "{} iterations, final objective {:.6e}, relative residual {:.3e}",
                state.iterations,
                state.objective_history.last().copied().unwrap_or(f64::NAN),
                state.relative_residual()
            );
            if let Some(clean) = reference {
                println!(
                    "SNR: input {:.3} dB, output {:.3} dB",
                    snr_db(clean.samples(), d.samples())?,
                    snr_db(clean.samples(), x.samples())?
                );
            }
            Ok(())
        }
        Command::DenoiseSweep {
            output_dir,
            lambda_min,
            lambda_max,
            lambda_count,
            snr,
            seed,
            components,
            duration,
            window_len,
            shift,
            rho,
            iters,
        } => {
            let output_dir: PathBuf = cfg.require(output_dir, "output-dir")?;
            let grid = log_grid(
                cfg.get(lambda_min, "lambda-min", 10.0)?,
                cfg.get(lambda_max, "lambda-max", 1000.0)?,
                cfg.get(lambda_count, "lambda-count", 9)?,
            )?;
            let snr = cfg.get(snr, "snr", 10.0)?;
            let seed = cfg.get(seed, "seed", 0)?;
            let duration = Some(cfg.get(duration, "duration", 2.56)?);
            let study = study(cfg, components, duration, window_len, None)?;
            let shift = cfg.get(shift, "shift", 4)?;
            study.config(shift)?;
            let params = admm_params(cfg, None, rho, iters, None)?;
            let cmp = run_denoise_comparison(&study, shift, snr, seed, &grid, &params)?;
            let mut csv = String::from("if_source,lambda,snr_db,objective,observation_objective,relative_residual\n");
            for (name, rows) in [("estimated", &cmp.estimated), ("clean", &cmp.oracle)] {
                for r in rows {
                    csv.push_str(&sweep_line(name, r));
                }
            }
            write_outputs(&output_dir, &[("denoise_sweep.csv", csv)])?;
            println!("input SNR {:.3} dB", cmp.input_snr_db);
            for (name, best) in [("estimated", cmp.best_estimated()), ("clean", cmp.best_oracle())] {
                if let Some(b) = best {
                    println!("best {name}-IF output {:.3} dB at lambda {:.4}", b.snr_db, b.lambda);
                }
            }
            Ok(())
        }
    }
}

fn sweep_line(name: &str, r: &SweepRow) -> String {
    format!(
        "{name},{:.6},{:.6},{:.10e},{:.10e},{:.6e}\n",
        r.lambda, r.snr_db, r.objective, r.observation_objective, r.relative_residual
    )
}

fn parsed<T: std::str::FromStr<Err = ipclr::Error>>(text: String) -> Result<T, CliError> {
    text.parse().map_err(|e: ipclr::Error| CliError::Usage(e.to_string()))
}

fn wav_format(cfg: &Config, flag: Option<String>) -> Result<WavFormat, CliError> {
    parsed(cfg.get(flag, "format", "float32".into())?)
}

fn parse_sinusoid(text: &str) -> Result<SinusoidSpec, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("sinusoid '{text}': expected AMP:FREQ[:PHASE]"));
    if !(2..=3).contains(&parts.len()) {
        return Err(bad());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let spec = SinusoidSpec::new(num(parts[0])?, num(parts[1])?);
    Ok(match parts.get(2) {
        Some(p) => spec.with_phase(num(p)?),
        None => spec,
    })
}

fn study(
    cfg: &Config,
    components: Option<usize>,
    duration: Option<f64>,
    window_len: Option<usize>,
    if_reference: Option<String>,
) -> Result<SinusoidStudy, CliError> {
    let d = SinusoidStudy::default();
    Ok(SinusoidStudy {
        components: cfg.get(components, "components", d.components)?,
        duration_s: cfg.get(duration, "duration", d.duration_s)?,
        window_len: cfg.get(window_len, "window-len", d.window_len)?,
        if_reference: parsed(cfg.get(if_reference, "if-reference", "clean".into())?)?,
        ..d
    })
}

fn admm_params(
    cfg: &Config,
    lambda: Option<f64>,
    rho: Option<f64>,
    iters: Option<usize>,
    tol: Option<f64>,
) -> Result<AdmmParams, CliError> {
    let d = AdmmParams::default();
    let p = AdmmParams {
        lambda: cfg.get(lambda, "lambda", d.lambda)?,
        rho: cfg.get(rho, "rho", d.rho)?,
        max_iter: cfg.get(iters, "iters", d.max_iter)?,
        tol: cfg.get(tol, "tol", d.tol)?,
    };
    p.validate()?;
    Ok(p)
}

fn read_matching(path: &Path, like: &SignalBuffer) -> Result<SignalBuffer, CliError> {
    let x = read_wav(path)?;
    if x.len() != like.len() {
        return Err(CliError::Usage(format!(
            "{} has {} samples, the input has {}",
            path.display(),
            x.len(),
            like.len()
        )));
    }
    Ok(x)
}

/// Window settings with the boundary mode possibly left to the signal length.
struct Analysis {
    window_len: usize,
    hop: usize,
    boundary: Option<Boundary>,
}

impl Analysis {
    fn resolve(cfg: &Config, args: &StftArgs) -> Result<Self, CliError> {
        let window_len = cfg.get(args.window_len, "window-len", 4096)?;
        let shift = cfg.get(args.shift, "shift", 4)?;
        if shift < 2 || window_len % shift != 0 {
            return Err(CliError::Usage(format!(
                "shift {shift} must be at least 2 and divide the window length {window_len}"
            )));
        }
        let boundary = match cfg.get(args.boundary.clone(), "boundary", "auto".to_string())?.as_str() {
            "auto" => None,
            other => Some(parsed(other.to_string())?),
        };
        let hop = window_len / shift;
        StftConfig::new(window_len, hop)?;
        Ok(Self {
            window_len,
            hop,
            boundary,
        })
    }

    fn config_for(&self, len: usize) -> Result<StftConfig, CliError> {
        let fits = len % self.hop == 0 && len >= self.window_len;
        let boundary = self
            .boundary
            .unwrap_or(if fits { Boundary::Periodic } else { Boundary::ZeroPad });
        let config = StftConfig::new(self.window_len, self.hop)?.with_boundary(boundary);
        config.frame_count(len)?;
        Ok(config)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(ipclr::Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Writes through a temporary sibling so readers never see a partial file.
fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.partial"));
    std::fs::write(&tmp, contents).map_err(|e| io_error(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

/// Writes `files` into `dir`. A directory that does not exist yet is
/// assembled under a temporary name and renamed into place at the end.
fn write_outputs(dir: &Path, files: &[(&str, String)]) -> Result<(), CliError> {
    if dir.is_dir() {
        for (name, contents) in files {
            write_file(&dir.join(name), contents)?;
        }
        return Ok(());
    }
    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let staging = dir.with_file_name(format!(".{name}.partial"));
    if let Some(parent) = staging.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    std::fs::create_dir_all(&staging).map_err(|e| io_error(&staging, e))?;
    for (name, contents) in files {
        let path = staging.join(name);
        std::fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
    }
    std::fs::rename(&staging, dir).map_err(|e| io_error(dir, e))
}

