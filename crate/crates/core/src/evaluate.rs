//! Held-out predictive performance of submodels relative to the full model.

use std::fmt::Write as _;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{assign_folds, Dataset};
use crate::error::{Error, Result};
use crate::priors::PriorSpec;
use crate::projection::{PredictiveMoments, PredictiveSource, Projector};
use crate::rng::derive_seed;
use crate::sampler::{fit, DrawSet, SamplerConfig};
use crate::search::{forward_search, SearchPath};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// z-value of the two-sided 95% normal band.
pub const BAND_Z: f64 = 1.96;

fn check_rows(y: &DVector<f64>, pm: &PredictiveMoments) -> Result<()> {
    if pm.rows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} responses for {} predictive rows",
            y.len(),
            pm.rows()
        )));
    }
    if pm.draws() == 0 || y.is_empty() {
        return Err(Error::InvalidArgument("need at least one draw and one row".into()));
    }
    Ok(())
}

/// Mean over rows of the log of the draw-averaged Gaussian density.
pub fn mlpd(y: &DVector<f64>, pm: &PredictiveMoments) -> Result<f64> {
    check_rows(y, pm)?;
    if let Some(s) = pm.variance.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "draw {s} has non-positive predictive variance {}",
            pm.variance[s]
        )));
    }
    let s_count = pm.draws();
    let ln_s = (s_count as f64).ln();
    let half_log_var: Vec<f64> = pm.variance.iter().map(|v| 0.5 * (LN_2PI + v.ln())).collect();
    let mut logs = vec![0.0; s_count];
    let mut total = 0.0;
    for (i, yi) in y.iter().enumerate() {
        let row = pm.mean.row(i);
        for s in 0..s_count {
            let r = yi - row[s];
            logs[s] = -half_log_var[s] - r * r / (2.0 * pm.variance[s]);
        }
        let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|l| (l - top).exp()).sum();
        total += top + sum.ln() - ln_s;
    }
    Ok(total / y.len() as f64)
}

/// Mean squared error of the draw-averaged predictive mean.
pub fn mse(y: &DVector<f64>, pm: &PredictiveMoments) -> Result<f64> {
    check_rows(y, pm)?;
    let s = pm.draws() as f64;
    let total: f64 = y
        .iter()
        .enumerate()
        .map(|(i, yi)| (yi - pm.mean.row(i).sum() / s).powi(2))
        .sum();
    Ok(total / y.len() as f64)
}

/// Submodel-minus-full metrics along a search path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceCurve {
    pub sizes: Vec<usize>,
    pub delta_mlpd: Vec<f64>,
    pub delta_mse: Vec<f64>,
    pub n_eval: usize,
    pub full_mlpd: f64,
    pub full_mse: f64,
}

impl PerformanceCurve {
    /// Tidy rows `fold,size,delta_mlpd,delta_mse`; `fold` is left blank when `None`.
    pub fn to_csv(&self, fold: Option<usize>) -> String {
        let mut out = String::from("fold,size,delta_mlpd,delta_mse\n");
        self.push_rows(&mut out, fold);
        out
    }

    fn push_rows(&self, out: &mut String, fold: Option<usize>) {
        let label = fold.map(|f| f.to_string()).unwrap_or_default();
        for (j, size) in self.sizes.iter().enumerate() {
            let _ = writeln!(
                out,
                "{label},{size},{:.16e},{:.16e}",
                self.delta_mlpd[j], self.delta_mse[j]
            );
        }
    }
}

/// Scores every prefix of `path` on `test`. `test` must be in the same
/// predictor coordinates as `train`.
pub fn curve(train: &Dataset, test: &Dataset, dr: &DrawSet, path: &SearchPath) -> Result<PerformanceCurve> {
    if test.m() != train.m() {
        return Err(Error::Dimension(format!(
            "test set has {} predictors, training set {}",
            test.m(),
            train.m()
        )));
    }
    let full = dr.predictive_moments(test.x())?;
    let full_mlpd = mlpd(test.y(), &full)?;
    let full_mse = mse(test.y(), &full)?;
    let proj = Projector::new(train, dr)?;
    let sizes: Vec<usize> = (0..=path.len()).collect();
    let mut delta_mlpd = Vec::with_capacity(sizes.len());
    let mut delta_mse = Vec::with_capacity(sizes.len());
    for &j in &sizes {
        let pm = proj.project(&path.prefix(j))?.predictive_moments(test.x())?;
        delta_mlpd.push(mlpd(test.y(), &pm)? - full_mlpd);
        delta_mse.push(mse(test.y(), &pm)? - full_mse);
    }
    Ok(PerformanceCurve {
        sizes,
        delta_mlpd,
        delta_mse,
        n_eval: test.n(),
        full_mlpd,
        full_mse,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCurve {
    pub sizes: Vec<usize>,
    pub delta_mlpd: Vec<f64>,
    pub delta_mse: Vec<f64>,
    /// Mean over folds of the full model's held-out MSE.
    pub full_mse: f64,
}

/// Pointwise band `mean ± 1.96 · sd / sqrt(K)` across folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub method: String,
    pub delta_mlpd_lower: Vec<f64>,
    pub delta_mlpd_upper: Vec<f64>,
    pub delta_mse_lower: Vec<f64>,
    pub delta_mse_upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub k: usize,
    pub seed: u64,
    pub per_fold: Vec<PerformanceCurve>,
    pub paths: Vec<SearchPath>,
    pub mean_curve: MeanCurve,
    pub interval: Interval,
}

impl CvReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Tidy rows for every fold.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fold,size,delta_mlpd,delta_mse\n");
        for (f, c) in self.per_fold.iter().enumerate() {
            c.push_rows(&mut out, Some(f));
        }
        out
    }
}

fn mean_and_band(values: &[Vec<f64>], j: usize) -> (f64, f64, f64) {
    let column: Vec<f64> = values.iter().map(|v| v[j]).collect();
    let k = column.len() as f64;
    let mean = crate::stats::mean(&column);
    let half = if column.len() > 1 {
        BAND_Z * crate::stats::sample_variance(&column).sqrt() / k.sqrt()
    } else {
        0.0
    };
    (mean, mean - half, mean + half)
}

fn aggregate(per_fold: &[PerformanceCurve]) -> (MeanCurve, Interval) {
    let sizes = per_fold[0].sizes.clone();
    let mlpd: Vec<Vec<f64>> = per_fold.iter().map(|c| c.delta_mlpd.clone()).collect();
    let msev: Vec<Vec<f64>> = per_fold.iter().map(|c| c.delta_mse.clone()).collect();
    let mut mean = MeanCurve {
        sizes: sizes.clone(),
        delta_mlpd: Vec::new(),
        delta_mse: Vec::new(),
        full_mse: per_fold.iter().map(|c| c.full_mse).sum::<f64>() / per_fold.len() as f64,
    };
    let mut band = Interval {
        method: "normal approximation across folds: mean +/- 1.96 sd / sqrt(K)".into(),
        delta_mlpd_lower: Vec::new(),
        delta_mlpd_upper: Vec::new(),
        delta_mse_lower: Vec::new(),
        delta_mse_upper: Vec::new(),
    };
    for j in 0..sizes.len() {
        let (m, lo, hi) = mean_and_band(&mlpd, j);
        mean.delta_mlpd.push(m);
        band.delta_mlpd_lower.push(lo);
        band.delta_mlpd_upper.push(hi);
        let (m, lo, hi) = mean_and_band(&msev, j);
        mean.delta_mse.push(m);
        band.delta_mse_lower.push(lo);
        band.delta_mse_upper.push(hi);
    }
    (mean, band)
}

/// Training and held-out sets for one fold. When `ds` carries
/// standardization metadata the training rows are re-standardized on their
/// own and the held-out rows reuse those statistics.
fn fold_data(ds: &Dataset, train_rows: &[usize], test_rows: &[usize]) -> Result<(Dataset, Dataset)> {
    let train = ds.select_rows(train_rows);
    let test = ds.select_rows(test_rows);
    if ds.standardization().is_none() {
        return Ok((train, test));
    }
    let train = train.unstandardized().standardize()?;
    let stats = train.standardization().expect("just standardized").clone();
    let test = test.unstandardized().apply_standardization(&stats)?;
    Ok((train, test))
}

/// K-fold fit, search and evaluation.
///
/// Fold `f` samples with seed `derive_seed(seed, "cv-fold", f)`; the fold
/// assignment uses `derive_seed(seed, "folds", 0)`. `cfg.seed` is ignored.
pub fn cross_validate(
    ds: &Dataset,
    prior: &PriorSpec,
    cfg: &SamplerConfig,
    k: usize,
    max_vars: usize,
    seed: u64,
) -> Result<CvReport> {
    if max_vars < 1 || max_vars > ds.m() {
        return Err(Error::InvalidArgument(format!(
            "max_vars must lie in 1..={}, got {max_vars}",
            ds.m()
        )));
    }
    let folds = assign_folds(ds.n(), k, derive_seed(seed, "folds", 0))?;
    for f in 0..k {
        let held_in = ds.n() - folds.fold_sizes()[f];
        if held_in <= 2 {
            return Err(Error::Degenerate(format!(
                "fold {f} leaves only {held_in} training rows; sampling needs more than 2"
            )));
        }
    }
    let results: Vec<(PerformanceCurve, SearchPath)> = (0..k)
        .into_par_iter()
        .map(|f| -> Result<_> {
            let (train, test) = fold_data(ds, &folds.in_fold(f), &folds.held_out(f))?;
            let fold_cfg = SamplerConfig {
                seed: derive_seed(seed, "cv-fold", f as u64),
                ..*cfg
            };
            let dr = fit(&train, prior, &fold_cfg)?;
            let path = forward_search(&train, &dr, max_vars)?;
            if path.truncated {
                return Err(Error::RankDeficient {
                    indices: path.order.clone(),
                    ratio: 0.0,
                });
            }
            log::info!("fold {f}: selected {:?}", path.order);
            Ok((curve(&train, &test, &dr, &path)?, path))
        })
        .collect::<Result<_>>()?;
    let (per_fold, paths): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let (mean_curve, interval) = aggregate(&per_fold);
    Ok(CvReport {
        k,
        seed,
        per_fold,
        paths,
        mean_curve,
        interval,
    })
}
