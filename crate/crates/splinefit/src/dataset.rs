//! Loading, validation, and train/test splitting of univariate regression
//! data, plus the residual-vs-fitted diagnostic table.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Error, Debug)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("column '{0}' not found in header")]
    MissingColumn(String),
    #[error("row {row}, column '{column}': cannot parse '{value}' as a number")]
    ParseError {
        row: usize,
        column: String,
        value: String,
    },
    #[error("file has a header but no data rows")]
    EmptyFile,
    #[error("row {0}: non-finite value")]
    NonFiniteValue(usize),
    #[error("need at least 2 observations, got {0}")]
    TooFew(usize),
    #[error("split with fraction {fraction} would leave an empty part (n = {n})")]
    DegenerateSplit { fraction: f64, n: usize },
    #[error("fraction must be in (0, 1), got {0}")]
    BadFraction(f64),
    #[error("fitted and residual vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("window must be odd and >= 1, got {0}")]
    BadWindow(usize),
}

/// Univariate regression data: covariate `z` and response `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

impl DataSet {
    pub fn new(z: Vec<f64>, y: Vec<f64>) -> Result<Self, DataError> {
        if z.len() != y.len() {
            return Err(DataError::LengthMismatch(z.len(), y.len()));
        }
        if z.len() < 2 {
            return Err(DataError::TooFew(z.len()));
        }
        for (i, (&a, &b)) in z.iter().zip(&y).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(DataError::NonFiniteValue(i));
            }
        }
        Ok(Self { z, y })
    }

    pub fn n(&self) -> usize {
        self.z.len()
    }

    /// FNV-1a over the bit patterns of (z, y), for experiment manifests.
    pub fn checksum(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut feed = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        for &v in &self.z {
            feed(v);
        }
        for &v in &self.y {
            feed(v);
        }
        h
    }

    /// Affine map of `z` onto `[0, 1]`; returns the rescaled data and the
    /// (offset, scale) pair so grid points can be mapped back.
    pub fn rescale_unit(&self) -> (DataSet, f64, f64) {
        let lo = self.z.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let scale = if hi > lo { hi - lo } else { 1.0 };
        let z = self.z.iter().map(|&v| (v - lo) / scale).collect();
        (
            DataSet {
                z,
                y: self.y.clone(),
            },
            lo,
            scale,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitMode {
    /// Seeded uniform shuffle without replacement.
    Random,
    /// Chronological: first `round(fraction * n)` rows train.
    Head,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataSet {
    pub train: DataSet,
    pub test: DataSet,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub fraction: f64,
}

/// Load a two-column dataset from a delimited file with a header row.
pub fn load_csv(
    path: impl AsRef<Path>,
    x_col: &str,
    y_col: &str,
    delimiter: u8,
) -> Result<DataSet, DataError> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
            },
            _ => DataError::Csv(e),
        })?;
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let xi = find(x_col)?;
    let yi = find(y_col)?;
    let mut z = Vec::new();
    let mut y = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let parse = |idx: usize, col: &str| -> Result<f64, DataError> {
            let raw = record.get(idx).unwrap_or("");
            raw.trim().parse::<f64>().map_err(|_| DataError::ParseError {
                row: row + 1,
                column: col.to_string(),
                value: raw.to_string(),
            })
        };
        let zv = parse(xi, x_col)?;
        let yv = parse(yi, y_col)?;
        if !zv.is_finite() || !yv.is_finite() {
            return Err(DataError::NonFiniteValue(row + 1));
        }
        z.push(zv);
        y.push(yv);
    }
    if z.is_empty() {
        return Err(DataError::EmptyFile);
    }
    DataSet::new(z, y)
}

/// Write a dataset back out with full round-trip precision.
pub fn write_csv<W: Write>(data: &DataSet, x_col: &str, y_col: &str, out: W) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "{x_col},{y_col}")?;
    for (z, y) in data.z.iter().zip(&data.y) {
        writeln!(out, "{z},{y}")?;
    }
    Ok(())
}

/// Deterministic train/test split. Training indices are drawn by a seeded
/// shuffle (size `round(fraction * n)`); within each part the original order
/// is preserved.
pub fn split(data: &DataSet, fraction: f64, seed: u64) -> Result<SplitDataSet, DataError> {
    split_with_mode(data, fraction, seed, SplitMode::Random)
}

pub fn split_with_mode(
    data: &DataSet,
    fraction: f64,
    seed: u64,
    mode: SplitMode,
) -> Result<SplitDataSet, DataError> {
    if !(0.0 < fraction && fraction < 1.0) {
        return Err(DataError::BadFraction(fraction));
    }
    let n = data.n();
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(DataError::DegenerateSplit { fraction, n });
    }
    let (mut train_indices, mut test_indices) = match mode {
        SplitMode::Random => {
            let mut indices: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            indices.shuffle(&mut rng);
            let (tr, te) = indices.split_at(n_train);
            (tr.to_vec(), te.to_vec())
        }
        SplitMode::Head => ((0..n_train).collect(), (n_train..n).collect()),
    };
    train_indices.sort_unstable();
    test_indices.sort_unstable();
    let pick = |idx: &[usize]| DataSet {
        z: idx.iter().map(|&i| data.z[i]).collect(),
        y: idx.iter().map(|&i| data.y[i]).collect(),
    };
    Ok(SplitDataSet {
        train: pick(&train_indices),
        test: pick(&test_indices),
        train_indices,
        test_indices,
        seed,
        fraction,
    })
}

/// Rows of (fitted, residual, smoothed residual), sorted by fitted value.
/// The smoother is a centered moving average with edge truncation.
pub fn residual_diagnostic(
    fitted: &[f64],
    residuals: &[f64],
    window: usize,
) -> Result<Vec<(f64, f64, f64)>, DataError> {
    if fitted.len() != residuals.len() {
        return Err(DataError::LengthMismatch(fitted.len(), residuals.len()));
    }
    if window == 0 || window % 2 == 0 {
        return Err(DataError::BadWindow(window));
    }
    let mut order: Vec<usize> = (0..fitted.len()).collect();
    order.sort_by(|&a, &b| fitted[a].partial_cmp(&fitted[b]).unwrap());
    let sorted_resid: Vec<f64> = order.iter().map(|&i| residuals[i]).collect();
    let half = window / 2;
    let n = sorted_resid.len();
    let mut rows = Vec::with_capacity(n);
    for (pos, &i) in order.iter().enumerate() {
        let lo = pos.saturating_sub(half);
        let hi = (pos + half + 1).min(n);
        let mean: f64 = sorted_resid[lo..hi].iter().sum::<f64>() / (hi - lo) as f64;
        rows.push((fitted[i], residuals[i], mean));
    }
    Ok(rows)
}
