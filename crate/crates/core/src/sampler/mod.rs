//! Posterior sampling for the linear Gaussian model under HS-t priors.
//!
//! The sampler is a Gibbs scheme. Every half-Student-t scale is written as
//! an inverse-gamma mixture, `s^2 | a ~ IG(nu/2, nu/a)`, `a ~ IG(1/2, 1)`,
//! so all full conditionals are standard:
//!
//! ```text
//! (w0, w) | ...      ~ N(A^-1 X'y / sigma2, A^-1),  A = X'X / sigma2 + D^-1
//! sigma2 | ...       ~ IG(n/2 - 1, |y - Xw|^2 / 2)
//! lambda_j^2 | ...   ~ IG((nu+1)/2, nu/a_j + w_j^2 / (2 eta_j^2 tau^2))
//! a_j | ...          ~ IG((nu+1)/2, 1 + nu/lambda_j^2)
//! eta_j^2 | ...      ~ IG((nu+1)/2, nu/b_j + w_j^2 / (2 lambda_j^2 tau^2))   (plus variant)
//! b_j | ...          ~ IG((nu+1)/2, 1 + nu/eta_j^2)
//! tau^2 | ...        ~ IG((m+1)/2, 1/xi + sum_j w_j^2 / (2 lambda_j^2 eta_j^2))
//! xi | ...           ~ IG(1, 1 + 1/tau^2)
//! ```

mod diagnostics;
mod gibbs;
mod interchange;

use nalgebra::DMatrix;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::priors::PriorSpec;
use crate::rng::{derive_seed, rng_from_seed};

pub use diagnostics::{split_rhat, Diagnostics, RHAT_THRESHOLD};
pub use gibbs::WeightConditional;
pub use interchange::{export_draws, import_draws, read_draws, write_draws};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub chains: usize,
    pub iterations_per_chain: usize,
    pub warmup: usize,
    pub seed: u64,
    pub thin: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 4,
            iterations_per_chain: 1000,
            warmup: 500,
            seed: 1,
            thin: 1,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains < 1 {
            return Err(Error::InvalidArgument("chains must be >= 1".into()));
        }
        if self.thin < 1 {
            return Err(Error::InvalidArgument("thin must be >= 1".into()));
        }
        if self.warmup >= self.iterations_per_chain {
            return Err(Error::InvalidArgument(format!(
                "warmup ({}) must be smaller than iterations_per_chain ({})",
                self.warmup, self.iterations_per_chain
            )));
        }
        Ok(())
    }

    /// Retained draws per chain.
    pub fn kept_per_chain(&self) -> usize {
        (self.iterations_per_chain - self.warmup).div_ceil(self.thin)
    }

    pub fn total_draws(&self) -> usize {
        self.chains * self.kept_per_chain()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DrawMeta {
    pub chains: usize,
    pub warmup: usize,
    pub seed: Option<u64>,
    pub prior: Option<PriorSpec>,
    pub diagnostics: Option<Diagnostics>,
}

/// Pooled posterior draws. Row `s` of `weights` is `(w0, w1, ..., wm)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawSet {
    weights: DMatrix<f64>,
    sigma2: Vec<f64>,
    lambda: Option<DMatrix<f64>>,
    tau: Option<Vec<f64>>,
    eta: Option<DMatrix<f64>>,
    meta: DrawMeta,
}

impl DrawSet {
    pub fn new(weights: DMatrix<f64>, sigma2: Vec<f64>) -> Result<Self> {
        let s = weights.nrows();
        if s == 0 || weights.ncols() < 1 {
            return Err(Error::InvalidArgument(
                "draw set needs at least one draw and an intercept".into(),
            ));
        }
        if sigma2.len() != s {
            return Err(Error::Dimension(format!(
                "{} noise draws for {s} weight draws",
                sigma2.len()
            )));
        }
        if let Some(row) = sigma2.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::DrawFormat {
                row: row + 1,
                message: format!("sigma2 must be positive, got {}", sigma2[row]),
            });
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite weight draw".into()));
        }
        Ok(DrawSet {
            weights,
            sigma2,
            lambda: None,
            tau: None,
            eta: None,
            meta: DrawMeta::default(),
        })
    }

    /// Attaches scale draws; `lambda` and `eta` are `S × m`.
    pub fn with_scales(mut self, lambda: DMatrix<f64>, tau: Vec<f64>, eta: Option<DMatrix<f64>>) -> Result<Self> {
        let (s, m) = (self.draws(), self.m());
        let shape_ok = |mat: &DMatrix<f64>| mat.shape() == (s, m);
        if !shape_ok(&lambda) || tau.len() != s || eta.as_ref().is_some_and(|e| !shape_ok(e)) {
            return Err(Error::Dimension("scale draws do not match weight draws".into()));
        }
        let positive = |v: &f64| *v > 0.0 && v.is_finite();
        if !lambda.iter().all(positive) || !tau.iter().all(positive) || !eta.iter().flat_map(|e| e.iter()).all(positive)
        {
            return Err(Error::InvalidArgument("scale draws must be positive".into()));
        }
        self.lambda = Some(lambda);
        self.tau = Some(tau);
        self.eta = eta;
        Ok(self)
    }

    pub fn with_meta(mut self, meta: DrawMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn sigma2(&self) -> &[f64] {
        &self.sigma2
    }

    pub fn lambda(&self) -> Option<&DMatrix<f64>> {
        self.lambda.as_ref()
    }

    pub fn tau(&self) -> Option<&[f64]> {
        self.tau.as_deref()
    }

    pub fn eta(&self) -> Option<&DMatrix<f64>> {
        self.eta.as_ref()
    }

    pub fn meta(&self) -> &DrawMeta {
        &self.meta
    }

    pub fn draws(&self) -> usize {
        self.weights.nrows()
    }

    /// Number of non-constant predictors.
    pub fn m(&self) -> usize {
        self.weights.ncols() - 1
    }

    pub fn diagnostics(&self) -> Option<&Diagnostics> {
        self.meta.diagnostics.as_ref()
    }

    /// Posterior mean of `(w0, ..., wm)`.
    pub fn mean_weights(&self) -> Vec<f64> {
        self.weights
            .column_iter()
            .map(|c| c.sum() / self.draws() as f64)
            .collect()
    }
}

/// Scales held fixed in the diagnostic (conjugate) mode. `local` holds the
/// per-weight products `lambda_j * eta_j`.
#[doc(hidden)]
#[derive(Clone, Debug)]
pub struct FixedScales {
    pub local: Vec<f64>,
    pub tau: f64,
    pub sigma2: f64,
}

pub fn fit(ds: &Dataset, prior: &PriorSpec, cfg: &SamplerConfig) -> Result<DrawSet> {
    run(ds, prior, cfg, None)
}

/// Runs the sampler with every scale and `sigma2` fixed, so the weight draws
/// are exact draws from a Gaussian. Test surface only.
#[doc(hidden)]
pub fn fit_fixed_scales(ds: &Dataset, prior: &PriorSpec, cfg: &SamplerConfig, fixed: &FixedScales) -> Result<DrawSet> {
    if fixed.local.len() != ds.m() {
        return Err(Error::Dimension("fixed local scales must have length m".into()));
    }
    run(ds, prior, cfg, Some(fixed))
}

fn run(ds: &Dataset, prior: &PriorSpec, cfg: &SamplerConfig, fixed: Option<&FixedScales>) -> Result<DrawSet> {
    let prior = prior.validated()?;
    cfg.validate()?;
    if ds.n() <= 2 {
        return Err(Error::Degenerate(format!(
            "the sigma2 conditional needs n > 2, got n = {}",
            ds.n()
        )));
    }
    let y = ds.y();
    let ybar = y.mean();
    if y.iter().all(|v| (v - ybar).abs() <= 1e-14 * ybar.abs().max(1.0)) {
        return Err(Error::Degenerate("response has zero variance".into()));
    }
    if ds.standardization().is_none() {
        log::warn!("fitting on unstandardized predictors; the shrinkage prior assumes comparable scales");
    }

    let problem = gibbs::Problem::new(ds, prior)?;
    let chains: Vec<gibbs::ChainOutput> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng_from_seed(derive_seed(cfg.seed, "chain", c as u64));
            problem.run_chain(cfg, fixed, &mut rng)
        })
        .collect();

    let m = ds.m();
    let kept = cfg.kept_per_chain();
    let s = kept * cfg.chains;
    let mut weights = DMatrix::zeros(s, m + 1);
    let mut sigma2 = Vec::with_capacity(s);
    let mut lambda = DMatrix::zeros(s, m);
    let mut tau = Vec::with_capacity(s);
    let mut eta = prior.plus_variant.then(|| DMatrix::zeros(s, m));
    for (c, out) in chains.iter().enumerate() {
        for k in 0..kept {
            let row = c * kept + k;
            weights.row_mut(row).copy_from_slice(&out.weights[k]);
            lambda.row_mut(row).copy_from_slice(&out.lambda[k]);
            if let Some(e) = eta.as_mut() {
                e.row_mut(row).copy_from_slice(&out.eta[k]);
            }
            sigma2.push(out.sigma2[k]);
            tau.push(out.tau[k]);
        }
    }

    let per_weight: Vec<Vec<Vec<f64>>> = (0..=m)
        .map(|j| {
            chains
                .iter()
                .map(|ch| ch.weights.iter().map(|w| w[j]).collect())
                .collect()
        })
        .collect();
    let diagnostics = Diagnostics::from_chains(&per_weight);
    if !diagnostics.converged {
        log::warn!(
            "split R-hat above {RHAT_THRESHOLD} (max {:.4}); consider more iterations",
            diagnostics.max_rhat
        );
    }

    let meta = DrawMeta {
        chains: cfg.chains,
        warmup: cfg.warmup,
        seed: Some(cfg.seed),
        prior: Some(prior),
        diagnostics: Some(diagnostics),
    };
    Ok(DrawSet::new(weights, sigma2)?
        .with_scales(lambda, tau, eta)?
        .with_meta(meta))
}

fn inv_gamma(shape: &Gamma<f64>, rate: f64, rng: &mut crate::rng::Rng) -> f64 {
    rate / shape.sample(rng)
}

/// Forward draws of the local shrinkage coefficients implied by the
/// sampler's own inverse-gamma parameterization of the prior: an `S × m`
/// matrix of `1 / (1 + lambda^2 eta^2)` (`eta = 1` unless plus variant).
pub fn prior_predictive_check(prior: &PriorSpec, m: usize, draws: usize, seed: u64) -> Result<DMatrix<f64>> {
    let prior = prior.validated()?;
    if draws == 0 || m == 0 {
        return Err(Error::InvalidArgument(
            "need at least one draw and one predictor".into(),
        ));
    }
    let nu = prior.nu;
    let half = Gamma::new(0.5, 1.0).expect("valid shape");
    let local = Gamma::new(nu / 2.0, 1.0).expect("valid shape");
    let mut rng = rng_from_seed(derive_seed(seed, "prior-check", 0));
    let scale2 = |rng: &mut crate::rng::Rng| {
        let aux = inv_gamma(&half, 1.0, rng);
        inv_gamma(&local, nu / aux, rng)
    };
    Ok(DMatrix::from_fn(draws, m, |_, _| {
        let mut v = scale2(&mut rng);
        if prior.plus_variant {
            v *= scale2(&mut rng);
        }
        1.0 / (1.0 + v)
    }))
}
