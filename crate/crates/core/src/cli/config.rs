//! Run configuration: defaults, a flat `key = value` file, the
//! `PROJPRED_OUTPUT_DIR` variable and command-line flags, applied in that
//! order so later sources win.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

pub const OUTPUT_DIR_ENV: &str = "PROJPRED_OUTPUT_DIR";
pub const DEFAULT_MAX_VARS: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    /// Column name or zero-based index; the last column when absent.
    pub target: Option<String>,
    pub standardize: bool,
    pub log_response: bool,
    pub nu: f64,
    pub plus: bool,
    pub chains: usize,
    pub iterations: usize,
    pub warmup: usize,
    pub thin: usize,
    pub seed: u64,
    pub n_train: Option<usize>,
    pub folds: Option<usize>,
    pub max_vars: Option<usize>,
    pub output_dir: PathBuf,
    pub draws: Option<PathBuf>,
    pub nus: Vec<f64>,
    pub grid: usize,
    pub samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: None,
            target: None,
            standardize: true,
            log_response: false,
            nu: 1.0,
            plus: false,
            chains: 4,
            iterations: 1000,
            warmup: 500,
            thin: 1,
            seed: 1,
            n_train: None,
            folds: None,
            max_vars: None,
            output_dir: PathBuf::from("."),
            draws: None,
            nus: vec![1.0, 2.0, 5.0],
            grid: 99,
            samples: 100_000,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

pub fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|t| parse_num(key, t.trim())).collect()
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.replace('-', "_");
        let k = key.as_str();
        match k {
            "data" => self.data = Some(PathBuf::from(value)),
            "target" => self.target = Some(value.to_string()),
            "standardize" => self.standardize = parse_bool(k, value)?,
            "log_response" => self.log_response = parse_bool(k, value)?,
            "nu" => self.nu = parse_num(k, value)?,
            "plus" => self.plus = parse_bool(k, value)?,
            "chains" => self.chains = parse_num(k, value)?,
            "iterations" => self.iterations = parse_num(k, value)?,
            "warmup" => self.warmup = parse_num(k, value)?,
            "thin" => self.thin = parse_num(k, value)?,
            "seed" => self.seed = parse_num(k, value)?,
            "n_train" => self.n_train = Some(parse_num(k, value)?),
            "folds" => self.folds = Some(parse_num(k, value)?),
            "max_vars" => self.max_vars = Some(parse_num(k, value)?),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "draws" => self.draws = Some(PathBuf::from(value)),
            "nus" => self.nus = parse_list(k, value)?,
            "grid" => self.grid = parse_num(k, value)?,
            "samples" => self.samples = parse_num(k, value)?,
            _ => return Err(Error::Config(format!("unknown key `{k}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: no + 1,
                message: "expected `key = value`".into(),
            })?;
            self.set(key.trim(), value.trim().trim_matches('"'))
                .map_err(|e| Error::Parse {
                    path: origin.to_path_buf(),
                    line: no + 1,
                    message: e.to_string(),
                })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
            self.output_dir = PathBuf::from(dir);
        }
    }

    pub fn check_modes(&self) -> Result<()> {
        if self.n_train.is_some() && self.folds.is_some() {
            return Err(Error::Config(
                "split (n_train) and cross-validation (folds) modes are mutually exclusive".into(),
            ));
        }
        if let Some(k) = self.folds {
            if k < 2 {
                return Err(Error::Config(format!("folds must be at least 2, got {k}")));
            }
        }
        Ok(())
    }

    /// The data path, which must exist.
    pub fn data_path(&self) -> Result<&Path> {
        let path = self
            .data
            .as_deref()
            .ok_or_else(|| Error::Config("no data file given (use --data or `data =`)".into()))?;
        if !path.exists() {
            return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        Ok(path)
    }

    /// `max_vars` resolved against `m`: defaults to `min(m, 50)`, and larger
    /// requests are clamped with a warning.
    pub fn max_vars_for(&self, m: usize) -> Result<usize> {
        match self.max_vars {
            None => Ok(m.min(DEFAULT_MAX_VARS)),
            Some(0) => Err(Error::Config("max_vars must be at least 1".into())),
            Some(v) if v > m => {
                log::warn!("max_vars = {v} exceeds the {m} available predictors; using {m}");
                Ok(m)
            }
            Some(v) => Ok(v),
        }
    }
}
