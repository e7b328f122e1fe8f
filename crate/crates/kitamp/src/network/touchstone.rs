//! Touchstone v1 two-port (`.s2p`) reader and writer.
//!
//! Reads RI/MA/DB value formats and Hz/kHz/MHz/GHz frequency units; data
//! rows carry nine columns in the v1 two-port order
//! `f S11 S21 S12 S22`. The writer always emits `# HZ S RI R <z0>` with
//! shortest round-trip float formatting, so write→read is lossless and a
//! second write is byte-identical to the first.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use thiserror::Error;

use super::{SMatrix, TwoPortNetwork};

#[derive(Debug, Error)]
pub enum TouchstoneError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{file}:{line}: {reason}")]
    Parse {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("{file}: no data rows found")]
    Empty { file: String },
    #[error("{file}:{line}: frequency {f} does not increase over previous row")]
    NonIncreasing { file: String, line: usize, f: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ValueFormat {
    Ri,
    Ma,
    Db,
}

impl ValueFormat {
    fn to_complex(self, x: f64, y: f64) -> Complex64 {
        match self {
            ValueFormat::Ri => Complex64::new(x, y),
            ValueFormat::Ma => Complex64::from_polar(x, y.to_radians()),
            ValueFormat::Db => Complex64::from_polar(10f64.powf(x / 20.0), y.to_radians()),
        }
    }
}

/// Read a two-port Touchstone v1 file.
pub fn read_touchstone(path: &Path) -> Result<TwoPortNetwork, TouchstoneError> {
    let text = std::fs::read_to_string(path).map_err(|source| TouchstoneError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_touchstone(&text, &path.display().to_string())
}

pub(crate) fn parse_touchstone(text: &str, file: &str) -> Result<TwoPortNetwork, TouchstoneError> {
    // Touchstone defaults when the option line is omitted.
    let mut freq_scale = 1e9;
    let mut format = ValueFormat::Ma;
    let mut z0 = 50.0;
    let mut seen_options = false;

    let mut freqs: Vec<f64> = Vec::new();
    let mut s: Vec<SMatrix> = Vec::new();

    let err = |line: usize, reason: String| TouchstoneError::Parse {
        file: file.to_string(),
        line,
        reason,
    };

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('!') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if seen_options {
                return Err(err(line_no, "duplicate option line".to_string()));
            }
            seen_options = true;
            let mut tokens = rest.split_whitespace().peekable();
            while let Some(tok) = tokens.next() {
                let upper = tok.to_ascii_uppercase();
                match upper.as_str() {
                    "HZ" => freq_scale = 1.0,
                    "KHZ" => freq_scale = 1e3,
                    "MHZ" => freq_scale = 1e6,
                    "GHZ" => freq_scale = 1e9,
                    "S" => {}
                    "RI" => format = ValueFormat::Ri,
                    "MA" => format = ValueFormat::Ma,
                    "DB" => format = ValueFormat::Db,
                    "R" => {
                        let v = tokens
                            .next()
                            .ok_or_else(|| err(line_no, "R without impedance".to_string()))?;
                        z0 = v.parse().map_err(|_| {
                            err(line_no, format!("bad reference impedance `{v}`"))
                        })?;
                    }
                    "G" | "H" | "Y" | "Z" => {
                        return Err(err(
                            line_no,
                            format!("unsupported parameter type `{tok}` (S only)"),
                        ))
                    }
                    _ => return Err(err(line_no, format!("unrecognized option `{tok}`"))),
                }
            }
            continue;
        }

        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 9 {
            return Err(err(
                line_no,
                format!("expected 9 columns (f + four S pairs), got {}", fields.len()),
            ));
        }
        let mut vals = [0.0; 9];
        for (i, field) in fields.iter().enumerate() {
            vals[i] = field
                .parse()
                .map_err(|_| err(line_no, format!("bad number `{field}`")))?;
        }
        let f = vals[0] * freq_scale;
        if let Some(&prev) = freqs.last() {
            if f <= prev {
                return Err(TouchstoneError::NonIncreasing {
                    file: file.to_string(),
                    line: line_no,
                    f,
                });
            }
        }
        freqs.push(f);
        // v1 two-port column order: S11 S21 S12 S22.
        let s11 = format.to_complex(vals[1], vals[2]);
        let s21 = format.to_complex(vals[3], vals[4]);
        let s12 = format.to_complex(vals[5], vals[6]);
        let s22 = format.to_complex(vals[7], vals[8]);
        s.push([[s11, s12], [s21, s22]]);
    }

    if freqs.is_empty() {
        return Err(TouchstoneError::Empty {
            file: file.to_string(),
        });
    }
    TwoPortNetwork::new(freqs, s, z0).map_err(|e| TouchstoneError::Parse {
        file: file.to_string(),
        line: 0,
        reason: e.to_string(),
    })
}

/// Render a network as Touchstone v1 text (`# HZ S RI R <z0>`).
pub fn render_touchstone(net: &TwoPortNetwork) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# HZ S RI R {}", net.ref_impedance);
    for (i, &f) in net.freqs.iter().enumerate() {
        let m = &net.s[i];
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {} {}",
            f,
            m[0][0].re,
            m[0][0].im,
            m[1][0].re,
            m[1][0].im,
            m[0][1].re,
            m[0][1].im,
            m[1][1].re,
            m[1][1].im
        );
    }
    out
}

/// Write a network to a `.s2p` file.
pub fn write_touchstone(net: &TwoPortNetwork, path: &Path) -> Result<(), TouchstoneError> {
    std::fs::write(path, render_touchstone(net)).map_err(|source| TouchstoneError::Io {
        path: path.to_path_buf(),
        source,
    })
}
