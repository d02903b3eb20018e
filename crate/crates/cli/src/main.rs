//! `ipclr` command-line front end.
//!
//! Exit status: 0 on success, 1 for invalid flags, configuration or input
//! files, 2 when a computation fails numerically. `IPCLR_THREADS` caps the
//! worker pool used by sweeps.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(ipclr::Error),
}

impl From<ipclr::Error> for CliError {
    fn from(e: ipclr::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ipclr", version, about = "Phase-corrected STFT, low-rank spectrogram models and denoising")]
struct Cli {
    /// Flat key = value file supplying defaults for any long flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

/// Analysis settings shared by the signal-processing commands.
#[derive(Args, Debug, Clone, Default)]
pub struct StftArgs {
    /// Window length L (also the DFT size).
    #[arg(long)]
    window_len: Option<usize>,
    /// Hop as a fraction of the window: the hop is L / SHIFT.
    #[arg(long)]
    shift: Option<usize>,
    /// zeropad, periodic, or auto (periodic when the length allows it).
    #[arg(long)]
    boundary: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a sum of sinusoids (default: three harmonics of 100 Hz) as WAV.
    Synth {
        #[arg(long, short)]
        output: Option<PathBuf>,
        /// Number of harmonics h = 0.. with amplitude 10 - h at (h + 1)·f0.
        #[arg(long)]
        components: Option<usize>,
        #[arg(long)]
        f0: Option<f64>,
        /// Explicit component AMP:FREQ[:PHASE]; repeat to add more. Replaces the harmonic recipe.
        #[arg(long = "sinusoid")]
        sinusoids: Vec<String>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        sample_rate: Option<f64>,
        /// Add white Gaussian noise at this SNR (dB).
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// pcm16, pcm24 or float32.
        #[arg(long)]
        format: Option<String>,
        /// Output gain. The default 1/64 keeps the harmonic recipe (peak
        /// amplitude sum 27) plus noise at 0 dB and above inside [-1, 1].
        #[arg(long)]
        gain: Option<f64>,
    },
    /// Export amplitude and complex spectrograms (optionally phase-corrected) as CSV.
    Spectrogram {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        stft: StftArgs,
        /// Phase-correct with the IF estimated from the input and also export the IF map.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        ipc: Option<bool>,
        /// Keep only rows 0..=L/2.
        #[arg(long, num_args = 0..=1, default_missing_value = "true")]
        one_sided: Option<bool>,
    },
    /// Rank-k approximation of one representation of a signal's spectrogram.
    Lowrank {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// amplitude, stft or ipc.
        #[arg(long)]
        representation: Option<String>,
        #[command(flatten)]
        stft: StftArgs,
        /// Add complex Gaussian noise to the coefficients at this SNR (dB) first.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// clean (the input) or observation (resynthesized noisy signal).
        #[arg(long)]
        if_reference: Option<String>,
        /// Write the approximation back to a WAV file.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// Rank-1 SNR table over representations, shifts and input SNRs.
    Table1 {
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Number of noise realizations (seeds 0..N).
        #[arg(long)]
        seeds: Option<u64>,
        /// Comma-separated shift divisors.
        #[arg(long)]
        shifts: Option<String>,
        /// Comma-separated input SNRs in dB.
        #[arg(long)]
        snrs: Option<String>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        window_len: Option<usize>,
        #[arg(long)]
        if_reference: Option<String>,
    },
    /// SNR against rank k for each representation.
    Fig3 {
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        components: Option<usize>,
        /// Input SNR in dB; omit for the noiseless curves.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        shift: Option<usize>,
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        window_len: Option<usize>,
        #[arg(long)]
        if_reference: Option<String>,
    },
    /// Nuclear-norm denoising of a WAV file in the phase-corrected domain.
    Denoise {
        #[arg(long, short)]
        input: Option<PathBuf>,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        /// Take the IF from this clean recording instead of the noisy input.
        #[arg(long)]
        if_oracle: Option<PathBuf>,
        /// Clean recording used only to report the output SNR.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[command(flatten)]
        stft: StftArgs,
        /// Per-iteration objective and residual CSV.
        #[arg(long)]
        convergence: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// λ sweep of the denoiser on a noisy sum of sinusoids, estimated and clean IF.
    DenoiseSweep {
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        lambda_count: Option<usize>,
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        components: Option<usize>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        window_len: Option<usize>,
        #[arg(long)]
        shift: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
    },
}

fn init_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("IPCLR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| CliError::Usage(format!("IPCLR_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    commands::dispatch(cli.command, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
