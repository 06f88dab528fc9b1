use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{inv_gamma, FixedScales, SamplerConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::PivotedQr;
use crate::priors::PriorSpec;
use crate::rng::Rng;

const SCALE_MIN: f64 = 1e-100;
const SCALE_MAX: f64 = 1e100;
const VAR_MIN: f64 = 1e-200;

/// Data reduced once by a QR of the design: `X = Q1 C`, so that
/// `|y - Xw|^2 = |c_y - C w|^2 + tail_rss` for every `w`.
pub(super) struct Problem {
    c: DMatrix<f64>,
    c_y: DVector<f64>,
    tail_rss: f64,
    n: usize,
    m: usize,
    prior: PriorSpec,
}

pub(super) struct ChainOutput {
    pub weights: Vec<Vec<f64>>,
    pub sigma2: Vec<f64>,
    pub lambda: Vec<Vec<f64>>,
    pub eta: Vec<Vec<f64>>,
    pub tau: Vec<f64>,
}

fn reduce(ds: &Dataset) -> (DMatrix<f64>, DVector<f64>, f64) {
    let qr = PivotedQr::new(ds.design());
    let c = qr.reduced_factor();
    let mut qty = ds.y().clone();
    qr.apply_qt_vec(&mut qty);
    let r = c.nrows();
    let tail_rss = qty.rows_range(r..).norm_squared();
    (c, qty.rows(0, r).into_owned(), tail_rss)
}

impl Problem {
    pub fn new(ds: &Dataset, prior: PriorSpec) -> Result<Self> {
        let (c, c_y, tail_rss) = reduce(ds);
        Ok(Problem {
            c,
            c_y,
            tail_rss,
            n: ds.n(),
            m: ds.m(),
            prior,
        })
    }

    fn rss(&self, w: &DVector<f64>) -> f64 {
        (&self.c_y - &self.c * w).norm_squared() + self.tail_rss
    }

    pub fn run_chain(&self, cfg: &SamplerConfig, fixed: Option<&FixedScales>, rng: &mut Rng) -> ChainOutput {
        let m = self.m;
        let nu = self.prior.nu;
        let plus = self.prior.plus_variant;
        let local_shape = Gamma::new((nu + 1.0) / 2.0, 1.0).expect("valid shape");
        let sigma_shape = Gamma::new(self.n as f64 / 2.0 - 1.0, 1.0).expect("n > 2");
        let tau_shape = Gamma::new((m as f64 + 1.0) / 2.0, 1.0).expect("valid shape");
        let unit_shape = Gamma::new(1.0, 1.0).expect("valid shape");

        let jitter = |rng: &mut Rng| {
            let z: f64 = StandardNormal.sample(rng);
            z.exp()
        };

        // Overdispersed start.
        let mut lambda2: Vec<f64> = (0..m).map(|_| jitter(rng)).collect();
        let mut eta2 = vec![1.0; m];
        if plus {
            eta2.iter_mut().for_each(|e| *e = jitter(rng));
        }
        let mut aux_l = vec![1.0; m];
        let mut aux_e = vec![1.0; m];
        let mut tau2 = 0.1 * jitter(rng);
        let mut xi = 1.0;
        let mut sigma2 = (self.rss(&DVector::zeros(m + 1)) / self.n as f64) * jitter(rng).sqrt();
        if let Some(f) = fixed {
            lambda2 = f.local.iter().map(|l| l * l).collect();
            eta2 = vec![1.0; m];
            tau2 = f.tau * f.tau;
            sigma2 = f.sigma2;
        }

        let kept = cfg.kept_per_chain();
        let mut out = ChainOutput {
            weights: Vec::with_capacity(kept),
            sigma2: Vec::with_capacity(kept),
            lambda: Vec::with_capacity(kept),
            eta: Vec::with_capacity(kept),
            tau: Vec::with_capacity(kept),
        };

        let mut prior_sd = vec![self.prior.intercept_sd; m + 1];
        for it in 0..cfg.iterations_per_chain {
            for j in 0..m {
                prior_sd[j + 1] = (lambda2[j] * eta2[j] * tau2).clamp(VAR_MIN, 1.0 / VAR_MIN).sqrt();
            }
            let cond = WeightConditional::build(&self.c, &self.c_y, &prior_sd, sigma2);
            let w = cond.draw(rng);

            if fixed.is_none() {
                sigma2 = inv_gamma(&sigma_shape, self.rss(&w) / 2.0, rng);

                for j in 0..m {
                    let wj2 = w[j + 1] * w[j + 1];
                    lambda2[j] = inv_gamma(&local_shape, nu / aux_l[j] + wj2 / (2.0 * eta2[j] * tau2), rng)
                        .clamp(SCALE_MIN, SCALE_MAX);
                    aux_l[j] = inv_gamma(&local_shape, 1.0 + nu / lambda2[j], rng);
                    if plus {
                        eta2[j] = inv_gamma(&local_shape, nu / aux_e[j] + wj2 / (2.0 * lambda2[j] * tau2), rng)
                            .clamp(SCALE_MIN, SCALE_MAX);
                        aux_e[j] = inv_gamma(&local_shape, 1.0 + nu / eta2[j], rng);
                    }
                }

                let ss: f64 = (0..m).map(|j| w[j + 1] * w[j + 1] / (2.0 * lambda2[j] * eta2[j])).sum();
                tau2 = inv_gamma(&tau_shape, 1.0 / xi + ss, rng).clamp(SCALE_MIN, SCALE_MAX);
                xi = inv_gamma(&unit_shape, 1.0 + 1.0 / tau2, rng);
            }

            if it >= cfg.warmup && (it - cfg.warmup).is_multiple_of(cfg.thin) {
                out.weights.push(w.as_slice().to_vec());
                out.sigma2.push(sigma2);
                out.lambda.push(lambda2.iter().map(|v| v.sqrt()).collect());
                out.eta.push(eta2.iter().map(|v| v.sqrt()).collect());
                out.tau.push(tau2.sqrt());
            }
        }
        out
    }
}

/// Gaussian full conditional of `(w0, ..., wm)` given prior standard
/// deviations and the noise variance.
///
/// Built from the pivoted QR of the regularized design
/// `[C / sigma; diag(1 / prior_sd)]`, so the precision is never formed.
pub struct WeightConditional {
    qr: PivotedQr,
    qtb: DMatrix<f64>,
}

impl WeightConditional {
    fn build(c: &DMatrix<f64>, c_y: &DVector<f64>, prior_sd: &[f64], sigma2: f64) -> Self {
        let (r, p) = c.shape();
        let sigma = sigma2.sqrt();
        let mut z = DMatrix::zeros(r + p, p);
        z.view_mut((0, 0), (r, p)).copy_from(&(c / sigma));
        for (j, sd) in prior_sd.iter().enumerate() {
            z[(r + j, j)] = 1.0 / sd;
        }
        let qr = PivotedQr::new(z);
        let mut b = DMatrix::zeros(r + p, 1);
        b.view_mut((0, 0), (r, 1)).copy_from(&(c_y / sigma));
        qr.apply_qt(&mut b);
        let qtb = b.rows(0, p).into_owned();
        WeightConditional { qr, qtb }
    }

    /// `prior_sd[0]` is the intercept's, `prior_sd[j]` the prior standard
    /// deviation of `w_j`.
    #[doc(hidden)]
    pub fn from_dataset(ds: &Dataset, prior_sd: &[f64], sigma2: f64) -> Result<Self> {
        if prior_sd.len() != ds.m() + 1 {
            return Err(Error::Dimension("prior_sd must have length m + 1".into()));
        }
        if !(sigma2 > 0.0) || prior_sd.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::InvalidArgument("scales must be positive".into()));
        }
        let (c, c_y, _) = reduce(ds);
        Ok(Self::build(&c, &c_y, prior_sd, sigma2))
    }

    pub fn mean(&self) -> DVector<f64> {
        self.qr.solve_upper(&self.qtb).column(0).into_owned()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let p = self.qr.cols();
        let root = self.qr.solve_upper(&DMatrix::identity(p, p));
        &root * root.transpose()
    }

    pub fn draw(&self, rng: &mut Rng) -> DVector<f64> {
        let mut rhs = self.qtb.clone();
        for v in rhs.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += z;
        }
        self.qr.solve_upper(&rhs).column(0).into_owned()
    }
}
