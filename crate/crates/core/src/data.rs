//! Tabular data ingestion, preprocessing, and resampling plans.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Per-column affine map used to standardize predictors: `z = (x - mean) / sd`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Predictor matrix (no constant column), response, and labels.
#[derive(Clone, Debug)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: DVector<f64>,
    names: Vec<String>,
    target_name: String,
    standardization: Option<Standardization>,
    dropped_rows: usize,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    names: &'a [String],
    target: &'a str,
    n: usize,
    m: usize,
    standardization: Option<&'a Standardization>,
    dropped_rows: usize,
}

/// Column selector for the response.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
    Last,
}

impl ColumnRef {
    /// Matches a header name first, falling back to a zero-based index.
    fn resolve(&self, header: &[String]) -> Option<usize> {
        match self {
            ColumnRef::Index(i) => (*i < header.len()).then_some(*i),
            ColumnRef::Last => header.len().checked_sub(1),
            ColumnRef::Name(name) => header
                .iter()
                .position(|h| h == name)
                .or_else(|| name.parse::<usize>().ok().filter(|&i| i < header.len())),
        }
    }
}

impl From<&str> for ColumnRef {
    fn from(s: &str) -> Self {
        ColumnRef::Name(s.to_string())
    }
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, names: Vec<String>) -> Result<Self> {
        let (n, m) = x.shape();
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        if m < 1 {
            return Err(Error::InvalidArgument("dataset needs at least one predictor".into()));
        }
        if y.len() != n {
            return Err(Error::Dimension(format!("{} responses for {n} rows", y.len())));
        }
        if names.len() != m {
            return Err(Error::Dimension(format!("{} names for {m} columns", names.len())));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value in dataset".into()));
        }
        Ok(Dataset {
            x,
            y,
            names,
            target_name: "y".to_string(),
            standardization: None,
            dropped_rows: 0,
        })
    }

    /// Names predictors `x1..xm`.
    pub fn from_matrix(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{j}")).collect();
        Dataset::new(x, y, names)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    /// Rows discarded by [`load_csv`] because of missing values.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// `n × (m+1)` design with the constant column first.
    pub fn design(&self) -> DMatrix<f64> {
        let (n, m) = self.x.shape();
        DMatrix::from_fn(n, m + 1, |i, j| if j == 0 { 1.0 } else { self.x[(i, j - 1)] })
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let x = self.x.select_rows(rows.iter());
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i]));
        Dataset {
            x,
            y,
            names: self.names.clone(),
            target_name: self.target_name.clone(),
            standardization: self.standardization.clone(),
            dropped_rows: self.dropped_rows,
        }
    }

    /// Centers and scales every predictor column (sample sd, `n - 1`).
    ///
    /// Applying this to an already standardized dataset composes the stored
    /// maps, so the metadata always refers to the originally loaded values.
    pub fn standardize(&self) -> Result<Dataset> {
        let (n, m) = self.x.shape();
        let mut mean = Vec::with_capacity(m);
        let mut sd = Vec::with_capacity(m);
        for (j, col) in self.x.column_iter().enumerate() {
            let mu = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let s = var.sqrt();
            if !(s > 0.0) || s <= 1e-12 * mu.abs() {
                return Err(Error::ConstantColumn(self.names[j].clone()));
            }
            mean.push(mu);
            sd.push(s);
        }
        let step = Standardization { mean, sd };
        let mut out = self.apply_map(&step);
        out.standardization = Some(match &self.standardization {
            None => step,
            Some(prev) => Standardization {
                mean: (0..m).map(|j| prev.mean[j] + prev.sd[j] * step.mean[j]).collect(),
                sd: (0..m).map(|j| prev.sd[j] * step.sd[j]).collect(),
            },
        });
        Ok(out)
    }

    /// Standardizes with externally supplied statistics, e.g. the training
    /// set's, so held-out rows live in the same coordinates.
    pub fn apply_standardization(&self, s: &Standardization) -> Result<Dataset> {
        if self.standardization.is_some() {
            return Err(Error::InvalidArgument("dataset is already standardized".into()));
        }
        if s.mean.len() != self.m() || s.sd.len() != self.m() {
            return Err(Error::Dimension(format!(
                "standardization for {} columns applied to {}",
                s.mean.len(),
                self.m()
            )));
        }
        let mut out = self.apply_map(s);
        out.standardization = Some(s.clone());
        Ok(out)
    }

    fn apply_map(&self, s: &Standardization) -> Dataset {
        let x = DMatrix::from_fn(self.n(), self.m(), |i, j| (self.x[(i, j)] - s.mean[j]) / s.sd[j]);
        Dataset { x, ..self.clone() }
    }

    /// Predictors on their original scale.
    pub fn original_x(&self) -> DMatrix<f64> {
        match &self.standardization {
            None => self.x.clone(),
            Some(s) => DMatrix::from_fn(self.n(), self.m(), |i, j| self.x[(i, j)] * s.sd[j] + s.mean[j]),
        }
    }

    /// Same rows with the standardization undone.
    pub fn unstandardized(&self) -> Dataset {
        Dataset {
            x: self.original_x(),
            standardization: None,
            ..self.clone()
        }
    }

    /// Replaces `y` by `ln y`. Applying it twice takes the log twice.
    pub fn log_transform_response(&self) -> Result<Dataset> {
        if let Some((row, &value)) = self.y.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveResponse { row, value });
        }
        Ok(Dataset {
            y: self.y.map(f64::ln),
            ..self.clone()
        })
    }

    /// Writes `<stem>.json` (labels and preprocessing metadata) and
    /// `<stem>.csv` (predictors plus response, header row included).
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        let sidecar = Sidecar {
            names: &self.names,
            target: &self.target_name,
            n: self.n(),
            m: self.m(),
            standardization: self.standardization.as_ref(),
            dropped_rows: self.dropped_rows,
        };
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&json_path, e))?;

        let mut out = String::new();
        out.push_str(&self.names.join(","));
        let _ = writeln!(out, ",{}", self.target_name);
        for i in 0..self.n() {
            for j in 0..self.m() {
                let _ = write!(out, "{:.16e},", self.x[(i, j)]);
            }
            let _ = writeln!(out, "{:.16e}", self.y[i]);
        }
        let csv_path = dir.join(format!("{stem}.csv"));
        fs::write(&csv_path, out).map_err(|e| Error::io(&csv_path, e))
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

fn split_fields(line: &str, comma: bool) -> Vec<&str> {
    if comma {
        line.split(',').map(|f| f.trim()).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Reads a delimited numeric table (comma or whitespace separated, header
/// row required). Rows with an empty or `?` cell are dropped.
pub fn load_csv(path: impl AsRef<Path>, target: impl Into<ColumnRef>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, path, &target.into())
}

fn parse_table(text: &str, path: &Path, target: &ColumnRef) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines.next().ok_or(Error::TooFewRows(0))?;
    let comma = header_line.contains(',');
    let header: Vec<String> = split_fields(header_line, comma)
        .into_iter()
        .map(|h| h.trim_matches('"').to_string())
        .collect();
    let target_col = target.resolve(&header).ok_or_else(|| {
        Error::MissingTarget(match target {
            ColumnRef::Name(s) => s.clone(),
            ColumnRef::Index(i) => i.to_string(),
            ColumnRef::Last => "<last>".to_string(),
        })
    })?;
    if header.len() < 2 {
        return Err(Error::InvalidArgument(
            "table needs a target and at least one predictor".into(),
        ));
    }

    let mut rows: Vec<f64> = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0;
    for (lineno, line) in lines {
        let fields = split_fields(line, comma);
        if fields.len() != header.len() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("expected {} fields, found {}", header.len(), fields.len()),
            });
        }
        if fields.iter().any(|f| is_missing(f)) {
            dropped += 1;
            continue;
        }
        let mut values = Vec::with_capacity(fields.len());
        for f in &fields {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("non-numeric cell `{f}`"),
            })?;
            values.push(v);
        }
        ys.push(values[target_col]);
        rows.extend(
            values
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != target_col)
                .map(|(_, v)| *v),
        );
    }

    let n = ys.len();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if dropped > 0 {
        log::info!("{}: dropped {dropped} rows with missing values", path.display());
    }
    let m = header.len() - 1;
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != target_col)
        .map(|(_, h)| h.clone())
        .collect();
    let x = DMatrix::from_row_slice(n, m, &rows);
    let mut ds = Dataset::new(x, DVector::from_vec(ys), names)?;
    ds.target_name = header[target_col].clone();
    ds.dropped_rows = dropped;
    Ok(ds)
}

/// A train/test partition of row indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

pub fn random_split(ds: &Dataset, n_train: usize, seed: u64) -> Result<Split> {
    split_indices(ds.n(), n_train, seed)
}

pub fn split_indices(n: usize, n_train: usize, seed: u64) -> Result<Split> {
    if n_train < 1 || n_train >= n {
        return Err(Error::InvalidArgument(format!(
            "n_train must lie in 1..{n}, got {n_train}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let test = perm.split_off(n_train);
    Ok(Split {
        train_indices: perm,
        test_indices: test,
        seed,
    })
}

/// Balanced random assignment of `n` rows to `k` folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub fold_of: Vec<usize>,
    pub seed: u64,
}

impl FoldAssignment {
    pub fn held_out(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn in_fold(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_of {
            sizes[f] += 1;
        }
        sizes
    }
}

pub fn assign_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count must lie in 2..={n}, got {k}"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng_from_seed(seed));
    let mut fold_of = vec![0; n];
    for (pos, &row) in perm.iter().enumerate() {
        fold_of[row] = pos % k;
    }
    Ok(FoldAssignment { k, fold_of, seed })
}
