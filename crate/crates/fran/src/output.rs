//! CSV and JSON tables.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use fran_core::placement::FragmentStat;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::analysis::{BaselineRow, SweepRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum OutputError {
    #[error("refusing to write an empty table")]
    EmptyRows,
    #[error("output path is empty")]
    EmptyPath,
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A row with a fixed CSV header.
pub trait TableRow: Serialize {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

/// C `%.12g`: 12 significant digits, trailing zeros dropped, scientific
/// notation below `1e-4` or from `1e12` up.
pub fn fmt_g12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    let decimals = (11 - exp) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn floats(values: &[f64]) -> Vec<String> {
    values.iter().map(|&v| fmt_g12(v)).collect()
}

impl TableRow for SweepRow {
    fn header() -> &'static [&'static str] {
        &[
            "mu_t",
            "mu_r",
            "r",
            "delta_s_dec",
            "delta_p_dec",
            "delta_s_lb",
            "delta_p_lb",
            "gap_s",
            "gap_p",
            "ratio_s",
            "ratio_p",
        ]
    }

    fn cells(&self) -> Vec<String> {
        floats(&[
            self.mu_t,
            self.mu_r,
            self.r,
            self.delta_s_dec,
            self.delta_p_dec,
            self.delta_s_lb,
            self.delta_p_lb,
            self.gap_s,
            self.gap_p,
            self.ratio_s,
            self.ratio_p,
        ])
    }
}

impl TableRow for BaselineRow {
    fn header() -> &'static [&'static str] {
        &["mu_r", "two_antenna", "single_antenna", "difference"]
    }

    fn cells(&self) -> Vec<String> {
        floats(&[self.mu_r, self.two_antenna, self.single_antenna, self.difference])
    }
}

impl TableRow for FragmentStat {
    fn header() -> &'static [&'static str] {
        &[
            "key_en_mask",
            "key_user_mask",
            "observed_bits",
            "expected_bits",
            "rel_error",
        ]
    }

    fn cells(&self) -> Vec<String> {
        vec![
            self.key.en_set.to_string(),
            self.key.user_set.to_string(),
            fmt_g12(self.observed_bits),
            fmt_g12(self.expected_bits),
            self.rel_error.map(fmt_g12).unwrap_or_default(),
        ]
    }
}

pub fn write_csv<R: TableRow, W: Write>(rows: &[R], out: W) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(R::header())?;
    for row in rows {
        w.write_record(row.cells())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_json<R: Serialize, W: Write>(rows: &[R], mut out: W) -> Result<(), OutputError> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    out.write_all(b"\n").map_err(|e| OutputError::Io {
        path: PathBuf::from("-"),
        source: e,
    })?;
    Ok(())
}

/// Writes `rows` to `dest`, or to stdout when `dest` is `None`.
pub fn emit_table<R: TableRow>(rows: &[R], format: Format, dest: Option<&Path>) -> Result<(), OutputError> {
    if rows.is_empty() {
        return Err(OutputError::EmptyRows);
    }
    let write = |out: &mut dyn Write| match format {
        Format::Csv => write_csv(rows, out),
        Format::Json => write_json(rows, out),
    };
    match dest {
        None => write(&mut io::stdout().lock()),
        Some(path) => {
            if path.as_os_str().is_empty() {
                return Err(OutputError::EmptyPath);
            }
            let io_err = |source| OutputError::Io {
                path: path.to_path_buf(),
                source,
            };
            let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
            write(&mut out)?;
            out.flush().map_err(io_err)
        }
    }
}

pub fn read_json<R: DeserializeOwned>(path: &Path) -> Result<Vec<R>, OutputError> {
    let file = File::open(path).map_err(|source| OutputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_reader(io::BufReader::new(file))?)
}
