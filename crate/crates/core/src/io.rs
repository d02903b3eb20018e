//! WAV ingestion/emission and CSV export of real or complex matrices.
//!
//! Matrix CSV layout: a header line `# <rows>,<cols>,<kind>` where kind is
//! `real` or `complex`, then one line per row. Complex entries occupy two
//! adjacent columns (real part, imaginary part).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use log::{info, warn};
use ndarray::Array2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signals::SignalBuffer;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WavFormat {
    Pcm16,
    Pcm24,
    Float32,
}

impl std::str::FromStr for WavFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pcm16" => Ok(WavFormat::Pcm16),
            "pcm24" => Ok(WavFormat::Pcm24),
            "float32" | "f32" => Ok(WavFormat::Float32),
            other => Err(Error::invalid(format!("unknown WAV format '{other}'"))),
        }
    }
}

fn format_err(path: &Path, reason: impl ToString) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn hound_err(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::IoError(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => format_err(path, other),
    }
}

/// Reads a PCM or IEEE-float WAV file as a mono signal; PCM is normalized to
/// `[−1, 1)` and multichannel audio is averaged.
pub fn read_wav(path: impl AsRef<Path>) -> Result<SignalBuffer> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| hound_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(format_err(path, "zero channels"));
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => {
            if spec.bits_per_sample != 32 {
                return Err(format_err(path, format!("unsupported float width {}", spec.bits_per_sample)));
            }
            reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| hound_err(path, e))?
        }
        SampleFormat::Int => {
            let bits = spec.bits_per_sample;
            if !(8..=32).contains(&bits) {
                return Err(format_err(path, format!("unsupported PCM width {bits}")));
            }
            let scale = 2f64.powi(bits as i32 - 1);
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| hound_err(path, e))?
        }
    };
    if interleaved.is_empty() {
        return Err(format_err(path, "empty data chunk"));
    }
    if interleaved.iter().any(|v| !v.is_finite()) {
        return Err(format_err(path, "non-finite sample values"));
    }
    let samples = if channels == 1 {
        interleaved
    } else {
        info!("{}: downmixing {channels} channels to mono", path.display());
        interleaved
            .chunks(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect()
    };
    SignalBuffer::new(samples, spec.sample_rate as f64)
}

/// Writes a mono WAV file and returns how many samples fell outside
/// `[−1, 1]` and were clamped.
pub fn write_wav(x: &SignalBuffer, path: impl AsRef<Path>, format: WavFormat) -> Result<usize> {
    let path = path.as_ref();
    let rate = x.sample_rate_hz();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(Error::invalid(format!("WAV needs an integral sample rate, got {rate}")));
    }
    let (bits, sample_format) = match format {
        WavFormat::Pcm16 => (16, SampleFormat::Int),
        WavFormat::Pcm24 => (24, SampleFormat::Int),
        WavFormat::Float32 => (32, SampleFormat::Float),
    };
    let spec = WavSpec {
        channels: 1,
        sample_rate: rate as u32,
        bits_per_sample: bits,
        sample_format,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| hound_err(path, e))?;
    let mut clamped = 0usize;
    for &v in x.samples() {
        if !(-1.0..=1.0).contains(&v) {
            clamped += 1;
        }
        let c = v.clamp(-1.0, 1.0);
        let res = match format {
            WavFormat::Float32 => writer.write_sample(c as f32),
            WavFormat::Pcm16 | WavFormat::Pcm24 => {
                let full = 2f64.powi(bits as i32 - 1);
                let q = (c * full).round().clamp(-full, full - 1.0) as i32;
                writer.write_sample(q)
            }
        };
        res.map_err(|e| hound_err(path, e))?;
    }
    writer.finalize().map_err(|e| hound_err(path, e))?;
    if clamped > 0 {
        warn!("{}: clamped {clamped} samples outside [-1, 1]", path.display());
    }
    Ok(clamped)
}

/// A matrix destined for CSV export.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixData {
    Real(Array2<f64>),
    Complex(Array2<Complex64>),
}

impl MatrixData {
    pub fn dim(&self) -> (usize, usize) {
        match self {
            MatrixData::Real(m) => m.dim(),
            MatrixData::Complex(m) => m.dim(),
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            MatrixData::Real(_) => "real",
            MatrixData::Complex(_) => "complex",
        }
    }
}

/// Serializes a matrix to the CSV layout described in the module docs.
pub fn matrix_to_csv(m: &MatrixData) -> Result<String> {
    let (rows, cols) = m.dim();
    let mut out = String::new();
    writeln!(out, "# {rows},{cols},{}", m.kind()).unwrap();
    match m {
        MatrixData::Real(a) => {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("matrix export".into()));
            }
            for row in a.rows() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", line.join(",")).unwrap();
            }
        }
        MatrixData::Complex(a) => {
            if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite("matrix export".into()));
            }
            for row in a.rows() {
                let line: Vec<String> = row.iter().map(|z| format!("{},{}", z.re, z.im)).collect();
                writeln!(out, "{}", line.join(",")).unwrap();
            }
        }
    }
    Ok(out)
}

pub fn write_matrix_csv(m: &MatrixData, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = matrix_to_csv(m)?;
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<MatrixData> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|h| h.strip_prefix("# "))
        .ok_or_else(|| format_err(path, "missing '# rows,cols,kind' header"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 3 {
        return Err(format_err(path, format!("bad header '{header}'")));
    }
    let rows: usize = fields[0].trim().parse().map_err(|_| format_err(path, "bad row count"))?;
    let cols: usize = fields[1].trim().parse().map_err(|_| format_err(path, "bad column count"))?;
    let complex = match fields[2].trim() {
        "real" => false,
        "complex" => true,
        k => return Err(format_err(path, format!("unknown kind '{k}'"))),
    };
    let width = if complex { 2 * cols } else { cols };
    let mut values = Vec::with_capacity(rows * width);
    let mut seen = 0;
    for line in lines {
        let parsed: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| format_err(path, format!("row {seen}: {e}")))?;
        if parsed.len() != width {
            return Err(format_err(path, format!("row {seen} has {} fields, expected {width}", parsed.len())));
        }
        values.extend(parsed);
        seen += 1;
    }
    if seen != rows {
        return Err(format_err(path, format!("expected {rows} rows, found {seen}")));
    }
    if complex {
        let z: Vec<Complex64> = values.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
        Ok(MatrixData::Complex(Array2::from_shape_vec((rows, cols), z).expect("sized above")))
    } else {
        Ok(MatrixData::Real(Array2::from_shape_vec((rows, cols), values).expect("sized above")))
    }
}
