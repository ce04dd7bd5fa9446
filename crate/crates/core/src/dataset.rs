//! Tabular input: response vector, design matrix with intercept, and the
//! per-column standardization needed to map coefficients back to the
//! original covariate scale.
//!
//! Numeric covariates are centered and scaled to sample standard deviation
//! 0.5; columns whose values all lie in {0, 1} are treated as binary and left
//! alone.

use crate::error::{Error, Result};
use crate::linalg::Qr;
use crate::rng::{self, Purpose};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Target standard deviation of standardized numeric columns.
pub const TARGET_SD: f64 = 0.5;

/// Singular values below this fraction of the largest count as zero.
const RANK_SVD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Intercept,
    Binary,
    Numeric,
    /// Numeric column kept on its original scale.
    Raw,
}

/// `standardized = (raw - mean) / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub kind: ColumnKind,
    pub mean: f64,
    pub scale: f64,
}

impl ColumnScaling {
    fn identity(kind: ColumnKind) -> Self {
        ColumnScaling {
            kind,
            mean: 0.0,
            scale: 1.0,
        }
    }

    pub fn apply(&self, raw: f64) -> f64 {
        (raw - self.mean) / self.scale
    }

    pub fn invert(&self, standardized: f64) -> f64 {
        standardized * self.scale + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub columns: Vec<ColumnScaling>,
}

impl Standardization {
    pub fn intercept_index(&self) -> Option<usize> {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Intercept)
    }

    /// Map coefficients on the standardized design to coefficients on the
    /// original design, so that `x_raw · b_raw == x_std · b_std` row by row.
    pub fn destandardize(&self, coef: &[f64]) -> Result<Vec<f64>> {
        if coef.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "{} coefficients for {} columns",
                coef.len(),
                self.columns.len()
            )));
        }
        let mut out = coef.to_vec();
        let mut shift = 0.0;
        for (j, c) in self.columns.iter().enumerate() {
            if c.mean == 0.0 && c.scale == 1.0 {
                continue;
            }
            out[j] = coef[j] / c.scale;
            shift += coef[j] * c.mean / c.scale;
        }
        if shift != 0.0 {
            let Some(ic) = self.intercept_index() else {
                return Err(Error::InvalidArgument(
                    "centered columns need an intercept to de-standardize".into(),
                ));
            };
            out[ic] -= shift;
        }
        Ok(out)
    }
}

/// Options for turning raw columns into a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DesignOptions {
    pub intercept: bool,
    pub standardize: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        DesignOptions {
            intercept: true,
            standardize: true,
        }
    }
}

/// Response plus an `n x p` design. Immutable once built.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub response_name: String,
    pub y: Vec<f64>,
    pub x: DMatrix<f64>,
    /// The design on its original scale, kept verbatim rather than recovered
    /// from `x` so that it round-trips exactly.
    pub raw: DMatrix<f64>,
    pub column_names: Vec<String>,
    pub standardization: Standardization,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Build a dataset from raw covariate columns (without intercept).
    pub fn from_columns(
        response_name: &str,
        y: Vec<f64>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        opts: DesignOptions,
    ) -> Result<Dataset> {
        let n = y.len();
        if names.len() != columns.len() {
            return Err(Error::Dimension("column names and columns differ".into()));
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::Dimension(format!(
                    "column `{name}` has {} rows, response has {n}",
                    col.len()
                )));
            }
        }
        let mut scalings = Vec::with_capacity(columns.len() + 1);
        let mut all_names = Vec::with_capacity(columns.len() + 1);
        if opts.intercept {
            scalings.push(ColumnScaling::identity(ColumnKind::Intercept));
            all_names.push("intercept".to_string());
        }
        for (name, col) in names.iter().zip(&columns) {
            let (mean, sd) = mean_sd(col);
            if opts.intercept && n > 1 && sd == 0.0 {
                return Err(Error::ConstantColumn(name.clone()));
            }
            let scaling = if col.iter().all(|&v| v == 0.0 || v == 1.0) {
                ColumnScaling::identity(ColumnKind::Binary)
            } else if opts.standardize && sd > 0.0 {
                ColumnScaling {
                    kind: ColumnKind::Numeric,
                    mean,
                    scale: sd / TARGET_SD,
                }
            } else {
                ColumnScaling::identity(ColumnKind::Raw)
            };
            scalings.push(scaling);
            all_names.push(name.clone());
        }
        let standardization = Standardization { columns: scalings };
        let raw_with_intercept = assemble(&columns, n, opts.intercept);
        Dataset::with_standardization(response_name, y, all_names, &raw_with_intercept, standardization)
    }

    /// Apply a fixed standardization to a raw design (intercept column
    /// included), e.g. training-split parameters applied to held-out rows.
    pub fn with_standardization(
        response_name: &str,
        y: Vec<f64>,
        column_names: Vec<String>,
        raw: &DMatrix<f64>,
        standardization: Standardization,
    ) -> Result<Dataset> {
        let n = y.len();
        let p = raw.ncols();
        if raw.nrows() != n || column_names.len() != p || standardization.columns.len() != p {
            return Err(Error::Dimension(format!(
                "design {}x{}, response {n}, {} names, {} scalings",
                raw.nrows(),
                p,
                column_names.len(),
                standardization.columns.len()
            )));
        }
        if n < p {
            return Err(Error::TooFewRows { n, p });
        }
        let x = DMatrix::from_fn(n, p, |i, j| standardization.columns[j].apply(raw[(i, j)]));
        let d = Dataset {
            response_name: response_name.to_string(),
            y,
            x,
            raw: raw.clone(),
            column_names,
            standardization,
        };
        d.check_rank()?;
        Ok(d)
    }

    fn check_rank(&self) -> Result<()> {
        if self.p() == 0 {
            return Ok(());
        }
        let sv = self.x.clone().singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > RANK_SVD_TOL * smax).count();
        if rank == self.p() {
            return Ok(());
        }
        let qr = Qr::new(&self.x);
        let mut names: Vec<String> = qr
            .deficient_columns()
            .into_iter()
            .map(|j| self.column_names[j].clone())
            .collect();
        if names.is_empty() {
            names.push(format!("numerical rank {rank} < {}", self.p()));
        }
        Err(Error::RankDeficient(names))
    }

    /// The design on its original scale.
    pub fn raw_design(&self) -> &DMatrix<f64> {
        &self.raw
    }

    /// Deterministic partition into training and held-out rows. The training
    /// split is re-standardized from its own rows and its parameters are then
    /// applied to the held-out rows.
    pub fn train_test_split(&self, n_test: usize, seed: u64) -> Result<(Dataset, Dataset)> {
        let n = self.n();
        if n_test == 0 || n_test >= n {
            return Err(Error::InvalidArgument(format!(
                "n_test must lie in 1..{n}, got {n_test}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng::stream(seed, 0, Purpose::Split));
        let (test_rows, train_rows) = order.split_at(n_test);
        let mut train_rows = train_rows.to_vec();
        let mut test_rows = test_rows.to_vec();
        train_rows.sort_unstable();
        test_rows.sort_unstable();

        let raw = self.raw_design();
        let has_intercept = self.standardization.intercept_index().is_some();
        let cov_idx: Vec<usize> = (0..self.p())
            .filter(|&j| self.standardization.columns[j].kind != ColumnKind::Intercept)
            .collect();
        let standardize = self
            .standardization
            .columns
            .iter()
            .any(|c| c.kind == ColumnKind::Numeric);

        let pick = |rows: &[usize]| -> (Vec<f64>, Vec<Vec<f64>>) {
            let y = rows.iter().map(|&i| self.y[i]).collect();
            let cols = cov_idx
                .iter()
                .map(|&j| rows.iter().map(|&i| raw[(i, j)]).collect())
                .collect();
            (y, cols)
        };
        let (y_train, cols_train) = pick(&train_rows);
        let names: Vec<String> = cov_idx.iter().map(|&j| self.column_names[j].clone()).collect();
        let train = Dataset::from_columns(
            &self.response_name,
            y_train,
            names,
            cols_train,
            DesignOptions {
                intercept: has_intercept,
                standardize,
            },
        )?;
        let (y_test, cols_test) = pick(&test_rows);
        let test_raw = assemble(&cols_test, test_rows.len(), has_intercept);
        let test = Dataset {
            response_name: self.response_name.clone(),
            y: y_test,
            x: DMatrix::from_fn(test_rows.len(), train.p(), |i, j| {
                train.standardization.columns[j].apply(test_raw[(i, j)])
            }),
            raw: test_raw,
            column_names: train.column_names.clone(),
            standardization: train.standardization.clone(),
        };
        Ok((train, test))
    }
}

fn assemble(columns: &[Vec<f64>], n: usize, intercept: bool) -> DMatrix<f64> {
    let offset = usize::from(intercept);
    DMatrix::from_fn(n, columns.len() + offset, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            columns[j - offset][i]
        }
    })
}

/// Mean and sample (n - 1) standard deviation.
pub(crate) fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = v.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub response: String,
    pub design: DesignOptions,
}

impl CsvOptions {
    pub fn new(response: &str) -> Self {
        CsvOptions {
            response: response.to_string(),
            design: DesignOptions::default(),
        }
    }
}

fn parse_cell(raw: &str, column: &str, row: usize) -> Result<f64> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") {
        return Err(Error::MissingValue {
            column: column.to_string(),
            row,
        });
    }
    match s.to_ascii_lowercase().as_str() {
        "true" | "yes" => return Ok(1.0),
        "false" | "no" => return Ok(0.0),
        _ => {}
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::MissingValue {
            column: column.to_string(),
            row,
        }),
        Err(_) => Err(Error::NonNumeric {
            column: column.to_string(),
            row,
            value: s.to_string(),
        }),
    }
}

/// Read a headed CSV. Every column other than the response becomes a
/// covariate, in file order.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let response_idx = headers
        .iter()
        .position(|h| *h == opts.response)
        .ok_or_else(|| Error::MissingColumn(opts.response.clone()))?;
    let mut y = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); headers.len() - 1];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Dimension(format!(
                "row {} has {} fields, header has {}",
                row + 1,
                record.len(),
                headers.len()
            )));
        }
        let mut c = 0;
        for (j, cell) in record.iter().enumerate() {
            let v = parse_cell(cell, &headers[j], row + 1)?;
            if j == response_idx {
                y.push(v);
            } else {
                columns[c].push(v);
                c += 1;
            }
        }
    }
    let names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != response_idx)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::from_columns(&opts.response, y, names, columns, opts.design)
}

/// Write a response and raw covariate columns as a headed CSV.
pub fn write_csv(
    path: impl AsRef<Path>,
    response_name: &str,
    y: &[f64],
    names: &[String],
    columns: &[Vec<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec![response_name.to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(header.len());
    for i in 0..y.len() {
        row.clear();
        row.push(format!("{}", y[i]));
        for col in columns {
            row.push(format!("{}", col[i]));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
