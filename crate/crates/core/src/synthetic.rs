//! Seeded synthetic regression data with known sparse weights.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::derived_rng;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    /// True weights `w1..wm`; `m` is their length.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub noise_sd: f64,
    /// Common pairwise correlation of the Gaussian predictors, in `[0, 1)`.
    pub correlation: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// `relevant` unit weights spread evenly over `m` positions, independent
    /// predictors, and noise set so that `var(Xw) / noise_sd^2 = snr`.
    pub fn sparse(n: usize, m: usize, relevant: usize, snr: f64, seed: u64) -> Result<Self> {
        if relevant == 0 || relevant > m || !(snr > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= relevant <= m and snr > 0, got relevant = {relevant}, m = {m}, snr = {snr}"
            )));
        }
        let mut weights = vec![0.0; m];
        for k in 0..relevant {
            weights[k * m / relevant] = 1.0;
        }
        Ok(SyntheticSpec {
            n,
            weights,
            intercept: 0.0,
            noise_sd: (relevant as f64 / snr).sqrt(),
            correlation: 0.0,
            seed,
        })
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    /// 1-based indices of the nonzero weights.
    pub fn relevant(&self) -> Vec<usize> {
        (1..=self.m()).filter(|&j| self.weights[j - 1] != 0.0).collect()
    }

    pub fn generate(&self) -> Result<Dataset> {
        let m = self.m();
        if self.n < 2 || m == 0 {
            return Err(Error::InvalidArgument("need n >= 2 and m >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.correlation) || !(self.noise_sd >= 0.0) {
            return Err(Error::InvalidArgument(
                "correlation must lie in [0, 1) and noise_sd >= 0".into(),
            ));
        }
        let mut rng = derived_rng(self.seed, "synthetic", 0);
        let own = (1.0 - self.correlation).sqrt();
        let shared = self.correlation.sqrt();
        let mut x = DMatrix::zeros(self.n, m);
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let common: f64 = StandardNormal.sample(&mut rng);
            for j in 0..m {
                let z: f64 = StandardNormal.sample(&mut rng);
                x[(i, j)] = own * z + shared * common;
            }
            let eps: f64 = StandardNormal.sample(&mut rng);
            y[i] = self.intercept
                + x.row(i).transpose().dot(&DVector::from_column_slice(&self.weights))
                + self.noise_sd * eps;
        }
        Dataset::from_matrix(x, y)
    }
}
