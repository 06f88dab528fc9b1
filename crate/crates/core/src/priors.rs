//! Hierarchical shrinkage priors and the implied prior on the shrinkage
//! coefficient `kappa = 1 / (1 + lambda^2)`.

use std::f64::consts::PI;

use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Prior on the regression weights.
///
/// Each weight gets `N(0, lambda^2 tau^2)` (or `N(0, lambda^2 eta^2 tau^2)`
/// with `plus_variant`), local scales are half-Student-t with `nu` degrees of
/// freedom, `tau` is half-Cauchy(0, 1), the intercept is `N(0, intercept_sd^2)`
/// and the noise variance has the flat prior `p(sigma^2) ∝ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub nu: f64,
    pub plus_variant: bool,
    pub intercept_sd: f64,
}

impl PriorSpec {
    pub fn new(nu: f64, plus_variant: bool) -> Result<Self> {
        Self {
            nu,
            plus_variant,
            intercept_sd: 5.0,
        }
        .validated()
    }

    pub fn with_intercept_sd(self, intercept_sd: f64) -> Result<Self> {
        Self { intercept_sd, ..self }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if !(self.nu >= 1.0) || !self.nu.is_finite() {
            return Err(Error::InvalidArgument(format!("nu must be >= 1, got {}", self.nu)));
        }
        if !(self.intercept_sd > 0.0) || !self.intercept_sd.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "intercept_sd must be positive, got {}",
                self.intercept_sd
            )));
        }
        Ok(self)
    }
}

/// Density of a half-Student-t(nu, 0, 1) at `x >= 0`.
pub fn half_t_pdf(x: f64, nu: f64) -> f64 {
    let log_norm = ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * PI).ln();
    2.0 * (log_norm - (nu + 1.0) / 2.0 * (x * x / nu).ln_1p()).exp()
}

fn check_nu(nu: f64) -> Result<()> {
    if nu >= 1.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("nu must be >= 1, got {nu}")))
    }
}

/// Prior density of `kappa` when `lambda ~ half-t_nu(0, 1)`.
///
/// With `lambda(kappa) = sqrt(1/kappa - 1)` and `|d lambda / d kappa| =
/// 1 / (2 kappa^2 lambda)`. For `nu = 1` this is the Beta(1/2, 1/2) density.
pub fn shrinkage_density(kappa: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::InvalidArgument(format!("kappa must lie in (0, 1), got {kappa}")));
    }
    let lambda = ((1.0 - kappa) / kappa).sqrt();
    Ok(half_t_pdf(lambda, nu) / (2.0 * kappa * kappa * lambda))
}

/// Prior on the shrinkage coefficient evaluated on a grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShrinkageProfile {
    pub nu: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
}

impl ShrinkageProfile {
    /// Trapezoid rule over the grid points. The density is unbounded at the
    /// end points, so this converges only like `sqrt(1 / grid_size)`.
    pub fn trapezoid(&self) -> f64 {
        trapezoid(&self.grid, &self.density)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("kappa,density\n");
        for (k, d) in self.grid.iter().zip(&self.density) {
            s.push_str(&format!("{k:.16e},{d:.16e}\n"));
        }
        s
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Open grid `(i + 1/2) / grid_size`, `i = 0..grid_size`.
pub fn open_grid(grid_size: usize) -> Vec<f64> {
    (0..grid_size).map(|i| (i as f64 + 0.5) / grid_size as f64).collect()
}

pub fn shrinkage_profile(nu: f64, grid_size: usize) -> Result<ShrinkageProfile> {
    check_nu(nu)?;
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid_size must be >= 2".into()));
    }
    let grid = open_grid(grid_size);
    let density = grid
        .iter()
        .map(|&k| shrinkage_density(k, nu))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShrinkageProfile { nu, grid, density })
}

/// Histogram estimate of the kappa density from prior draws, on the same
/// open grid as [`shrinkage_profile`]. This is the only route for the plus
/// variant, whose kappa density has no simple closed form.
pub fn shrinkage_profile_mc(
    nu: f64,
    plus: bool,
    grid_size: usize,
    samples: usize,
    seed: u64,
) -> Result<ShrinkageProfile> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid_size must be >= 2".into()));
    }
    let draws = sample_kappa_prior(nu, plus, samples, seed)?;
    let mut counts = vec![0usize; grid_size];
    for k in draws {
        let bin = ((k * grid_size as f64) as usize).min(grid_size - 1);
        counts[bin] += 1;
    }
    let width = 1.0 / grid_size as f64;
    let density = counts.iter().map(|&c| c as f64 / (samples as f64 * width)).collect();
    Ok(ShrinkageProfile {
        nu,
        grid: open_grid(grid_size),
        density,
    })
}

// 5-point Gauss–Legendre on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Prior mass of `kappa` in `[lo, hi]`, by quadrature after substituting
/// `kappa = sin^2(theta)`, which removes both end-point singularities.
pub fn shrinkage_mass(lo: f64, hi: f64, nu: f64) -> Result<f64> {
    check_nu(nu)?;
    if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
        return Err(Error::InvalidArgument(format!("invalid interval [{lo}, {hi}]")));
    }
    let (a, b) = (lo.sqrt().asin(), hi.sqrt().asin());
    // lambda = cot(theta), so the integrand is p_lambda(cot theta) / sin^2 theta.
    let integrand = |t: f64| {
        let s = t.sin();
        half_t_pdf(t.cos() / s, nu) / (s * s)
    };
    let panels = 256;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            total += w * integrand(mid + 0.5 * h * x);
        }
    }
    Ok(total * 0.5 * h)
}

/// Forward draws of `kappa = 1 / (1 + lambda^2)` (or `1 / (1 + lambda^2 eta^2)`
/// for the plus variant) with half-Student-t local scales.
pub fn sample_kappa_prior(nu: f64, plus: bool, count: usize, seed: u64) -> Result<Vec<f64>> {
    check_nu(nu)?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be >= 1".into()));
    }
    let t = StudentT::new(nu).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    Ok((0..count)
        .map(|_| {
            let lambda: f64 = t.sample(&mut rng);
            let mut scale2 = lambda * lambda;
            if plus {
                let eta: f64 = t.sample(&mut rng);
                scale2 *= eta * eta;
            }
            // Keep the draw inside the open interval.
            (1.0 / (1.0 + scale2)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
        })
        .collect())
}
