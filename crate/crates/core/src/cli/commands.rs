use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use super::config::RunConfig;
use crate::data::{load_csv, random_split, ColumnRef, Dataset, Split};
use crate::error::{Error, Result};
use crate::evaluate::{cross_validate, curve};
use crate::priors::{shrinkage_profile, shrinkage_profile_mc, PriorSpec};
use crate::rng::derive_seed;
use crate::sampler::{export_draws, fit as fit_draws, import_draws, Diagnostics, SamplerConfig};
use crate::search::forward_search;

const DEFAULT_FOLDS: usize = 10;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a RunConfig,
    outputs: Vec<String>,
}

struct Output {
    dir: PathBuf,
    written: Vec<String>,
}

impl Output {
    fn new(cfg: &RunConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir).map_err(|e| Error::io(&cfg.output_dir, e))?;
        Ok(Output {
            dir: cfg.output_dir.clone(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn text(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    }

    fn finish(self, command: &str, cfg: &RunConfig) -> Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: cfg.seed,
            config: cfg,
            outputs: self.written,
        };
        let path = self.dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
    }
}

struct Prepared {
    train: Dataset,
    test: Option<Dataset>,
    split: Option<Split>,
}

/// Load, optional log response, optional split, then standardization of the
/// training rows (held-out rows reuse the training statistics).
fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let path = cfg.data_path()?;
    let target = cfg.target.as_deref().map_or(ColumnRef::Last, ColumnRef::from);
    let mut ds = load_csv(path, target)?;
    if ds.dropped_rows() > 0 {
        log::warn!("dropped {} rows with missing values", ds.dropped_rows());
    }
    if cfg.log_response {
        ds = ds.log_transform_response()?;
    }
    let Some(n_train) = cfg.n_train else {
        let train = if cfg.standardize { ds.standardize()? } else { ds };
        return Ok(Prepared {
            train,
            test: None,
            split: None,
        });
    };
    let split = random_split(&ds, n_train, derive_seed(cfg.seed, "split", 0))?;
    let mut train = ds.select_rows(&split.train_indices);
    let mut test = ds.select_rows(&split.test_indices);
    if cfg.standardize {
        train = train.standardize()?;
        let stats = train.standardization().expect("just standardized").clone();
        test = test.apply_standardization(&stats)?;
    }
    Ok(Prepared {
        train,
        test: Some(test),
        split: Some(split),
    })
}

fn prior(cfg: &RunConfig) -> Result<PriorSpec> {
    PriorSpec::new(cfg.nu, cfg.plus)
}

fn sampler_config(cfg: &RunConfig) -> SamplerConfig {
    SamplerConfig {
        chains: cfg.chains,
        iterations_per_chain: cfg.iterations,
        warmup: cfg.warmup,
        seed: cfg.seed,
        thin: cfg.thin,
    }
}

#[derive(Serialize)]
struct DiagnosticsReport<'a> {
    draws: usize,
    chains: usize,
    predictors: usize,
    rows: usize,
    seconds: f64,
    #[serde(flatten)]
    diagnostics: &'a Diagnostics,
}

pub fn fit(cfg: &RunConfig) -> Result<()> {
    let data = prepare(cfg)?;
    let prior = prior(cfg)?;
    let sc = sampler_config(cfg);
    let mut out = Output::new(cfg)?;
    let start = Instant::now();
    let dr = fit_draws(&data.train, &prior, &sc)?;
    let seconds = start.elapsed().as_secs_f64();
    export_draws(&dr, out.path("draws.csv"))?;
    let diagnostics = dr.diagnostics().expect("sampler records diagnostics");
    let report = DiagnosticsReport {
        draws: dr.draws(),
        chains: sc.chains,
        predictors: dr.m(),
        rows: data.train.n(),
        seconds,
        diagnostics,
    };
    out.text("diagnostics.json", &serde_json::to_string_pretty(&report)?)?;
    if let Some(split) = &data.split {
        out.text("split.json", &serde_json::to_string_pretty(split)?)?;
    }
    out.finish("fit", cfg)
}

pub fn select(cfg: &RunConfig) -> Result<()> {
    let data = prepare(cfg)?;
    let draws_path = cfg.draws.clone().unwrap_or_else(|| cfg.output_dir.join("draws.csv"));
    let dr = import_draws(&draws_path, data.train.m())?;
    let max_vars = cfg.max_vars_for(data.train.m())?;
    let mut out = Output::new(cfg)?;
    let path = forward_search(&data.train, &dr, max_vars)?;
    path.save(out.path("search_path.json"))?;
    if let Some(test) = &data.test {
        let c = curve(&data.train, test, &dr, &path)?;
        out.text("curve.csv", &c.to_csv(None))?;
        out.text("curve.json", &serde_json::to_string_pretty(&c)?)?;
    }
    out.finish("select", cfg)
}

pub fn cv(cfg: &RunConfig) -> Result<()> {
    if cfg.n_train.is_some() {
        return Err(Error::Config(
            "cv does not take n_train; split and cross-validation modes are mutually exclusive".into(),
        ));
    }
    let data = prepare(cfg)?;
    let prior = prior(cfg)?;
    let k = cfg.folds.unwrap_or(DEFAULT_FOLDS);
    let max_vars = cfg.max_vars_for(data.train.m())?;
    let mut out = Output::new(cfg)?;
    let report = cross_validate(&data.train, &prior, &sampler_config(cfg), k, max_vars, cfg.seed)?;
    out.text("cv_report.json", &report.to_json()?)?;
    out.text("cv_curves.csv", &report.to_csv())?;
    out.finish("cv", cfg)
}

fn profile_name(nu: f64, plus: bool) -> String {
    format!("shrinkage_{}nu{nu}.csv", if plus { "plus_" } else { "" })
}

pub fn shrinkage(cfg: &RunConfig) -> Result<()> {
    if cfg.nus.is_empty() {
        return Err(Error::Config("no nu values given".into()));
    }
    for &nu in &cfg.nus {
        PriorSpec::new(nu, cfg.plus)?;
    }
    let mut out = Output::new(cfg)?;
    for (i, &nu) in cfg.nus.iter().enumerate() {
        let profile = if cfg.plus {
            shrinkage_profile_mc(
                nu,
                true,
                cfg.grid,
                cfg.samples,
                derive_seed(cfg.seed, "shrinkage", i as u64),
            )?
        } else {
            shrinkage_profile(nu, cfg.grid)?
        };
        out.text(&profile_name(nu, cfg.plus), &profile.to_csv())?;
    }
    out.finish("shrinkage", cfg)
}
