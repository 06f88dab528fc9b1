mod common;

use common::{design, normal, random_dataset};
use nalgebra::{DMatrix, DVector};
use projpred::priors::sample_kappa_prior;
use projpred::rng::derived_rng;
use projpred::sampler::{
    fit_fixed_scales, import_draws, prior_predictive_check, write_draws, DrawSet, FixedScales, WeightConditional,
    RHAT_THRESHOLD,
};
use projpred::stats::{ks_one_sample, ks_two_sample};
use projpred::synthetic::SyntheticSpec;
use projpred::{fit, project_drawset, Dataset, PriorSpec, SamplerConfig, Submodel};
use rand::Rng as _;

fn beta_half_cdf(x: f64) -> f64 {
    2.0 / std::f64::consts::PI * x.sqrt().asin()
}

/// Posterior of the weights with every scale fixed, by normal equations.
fn analytic_posterior(ds: &Dataset, prior_sd: &[f64], sigma2: f64) -> (DVector<f64>, DMatrix<f64>) {
    let x = design(ds);
    let mut precision = x.transpose() * &x / sigma2;
    for (j, sd) in prior_sd.iter().enumerate() {
        precision[(j, j)] += 1.0 / (sd * sd);
    }
    let cov = precision.try_inverse().unwrap();
    let mean = &cov * x.transpose() * ds.y() / sigma2;
    (mean, cov)
}

fn recovery_data() -> (Dataset, Vec<f64>) {
    let mut weights = vec![0.0; 10];
    weights[0] = 3.0;
    weights[1] = -2.0;
    let spec = SyntheticSpec {
        n: 100,
        weights,
        intercept: 0.0,
        noise_sd: 1.0,
        correlation: 0.0,
        seed: 2024,
    };
    let ds = spec.generate().unwrap().standardize().unwrap();
    let sd = &ds.standardization().unwrap().sd;
    let truth = spec.weights.iter().zip(sd).map(|(w, s)| w * s).collect();
    (ds, truth)
}

#[test]
fn recovers_sparse_truth_and_mixes() {
    let (ds, truth) = recovery_data();
    let dr = fit(&ds, &PriorSpec::new(3.0, false).unwrap(), &SamplerConfig::default()).unwrap();
    assert_eq!(dr.draws(), 2000);
    let mean = dr.mean_weights();
    let sd: Vec<f64> = (0..=10)
        .map(|j| {
            let c = dr.weights().column(j);
            let mu = c.mean();
            (c.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (c.len() - 1) as f64).sqrt()
        })
        .collect();
    for j in [1, 2] {
        assert!(
            (mean[j] - truth[j - 1]).abs() < 3.0 * sd[j],
            "w{j}: {} vs {}",
            mean[j],
            truth[j - 1]
        );
    }
    let smallest_relevant = mean[1].abs().min(mean[2].abs());
    for (j, m) in mean.iter().enumerate().skip(3) {
        assert!(m.abs() < smallest_relevant, "w{j} = {m}");
    }
    let diag = dr.diagnostics().unwrap();
    assert!(diag.converged && diag.max_rhat < RHAT_THRESHOLD, "{diag:?}");
    assert_eq!(diag.rhat.len(), 11);
}

#[test]
fn identical_inputs_identical_draws() {
    let ds = random_dataset(40, 6, 5).standardize().unwrap();
    let cfg = SamplerConfig {
        iterations_per_chain: 200,
        warmup: 100,
        ..SamplerConfig::default()
    };
    let prior = PriorSpec::new(1.0, true).unwrap();
    let a = fit(&ds, &prior, &cfg).unwrap();
    let b = fit(&ds, &prior, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.eta().is_some() && a.lambda().is_some() && a.tau().is_some());
    let c = fit(&ds, &prior, &SamplerConfig { seed: 2, ..cfg }).unwrap();
    assert_ne!(a.weights(), c.weights());
}

#[test]
fn conditional_matches_normal_equations() {
    for case in 0..5 {
        let ds = random_dataset(25, 4, 100 + case).standardize().unwrap();
        let prior_sd = [5.0, 0.3, 1.0, 2.0, 0.05];
        let cond = WeightConditional::from_dataset(&ds, &prior_sd, 0.8).unwrap();
        let (mean, cov) = analytic_posterior(&ds, &prior_sd, 0.8);
        assert!((cond.mean() - &mean).amax() < 1e-10 * mean.amax().max(1.0));
        assert!((cond.covariance() - &cov).amax() < 1e-10 * cov.amax());
    }
}

#[test]
fn fixed_scale_draws_match_analytic_mean() {
    for case in 0..4u64 {
        let ds = random_dataset(30, 4, 200 + case).standardize().unwrap();
        let mut rng = derived_rng(case, "fixed-scales", 0);
        let local: Vec<f64> = (0..4).map(|_| rng.random_range(0.2..2.0)).collect();
        let fixed = FixedScales {
            local: local.clone(),
            tau: 0.7,
            sigma2: 0.6,
        };
        let prior = PriorSpec::new(1.0, false).unwrap();
        let cfg = SamplerConfig {
            seed: case,
            ..SamplerConfig::default()
        };
        let dr = fit_fixed_scales(&ds, &prior, &cfg, &fixed).unwrap();
        let prior_sd: Vec<f64> = std::iter::once(5.0).chain(local.iter().map(|l| l * 0.7)).collect();
        let (mean, cov) = analytic_posterior(&ds, &prior_sd, 0.6);
        let got = dr.mean_weights();
        for j in 0..5 {
            let se = (cov[(j, j)] / dr.draws() as f64).sqrt();
            assert!(
                (got[j] - mean[j]).abs() < 3.0 * se,
                "case {case} w{j}: {} vs {}",
                got[j],
                mean[j]
            );
        }
    }
}

#[test]
fn sampler_prior_is_beta_half_at_nu_one() {
    let k = prior_predictive_check(&PriorSpec::new(1.0, false).unwrap(), 1, 100_000, 17).unwrap();
    let ks = ks_one_sample(k.as_slice(), beta_half_cdf);
    assert!(ks.statistic < 0.02, "{ks:?}");
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn sampler_prior_matches_priors_module() {
    let k = prior_predictive_check(&PriorSpec::new(3.0, false).unwrap(), 1, 100_000, 18).unwrap();
    let other = sample_kappa_prior(3.0, false, 100_000, 19).unwrap();
    let ks = ks_two_sample(k.as_slice(), &other);
    assert!(ks.p_value > 0.01, "{ks:?}");

    let plus = prior_predictive_check(&PriorSpec::new(1.0, true).unwrap(), 1, 100_000, 20).unwrap();
    let other = sample_kappa_prior(1.0, true, 100_000, 21).unwrap();
    assert!(ks_two_sample(plus.as_slice(), &other).p_value > 0.01);
}

#[test]
fn prior_check_single_draw_is_reproducible() {
    let p = PriorSpec::new(2.0, true).unwrap();
    let a = prior_predictive_check(&p, 3, 1, 4).unwrap();
    assert_eq!(a.shape(), (1, 3));
    assert_eq!(a, prior_predictive_check(&p, 3, 1, 4).unwrap());
}

#[test]
fn external_draws_give_matching_projections() {
    let ds = random_dataset(40, 5, 300).standardize().unwrap();
    let local = vec![1.0, 0.5, 2.0, 0.3, 1.5];
    let fixed = FixedScales {
        local: local.clone(),
        tau: 1.0,
        sigma2: 0.5,
    };
    let internal = fit_fixed_scales(
        &ds,
        &PriorSpec::new(1.0, false).unwrap(),
        &SamplerConfig::default(),
        &fixed,
    )
    .unwrap();

    // Exact draws from the same Gaussian via a Cholesky root, written out as text.
    let prior_sd: Vec<f64> = std::iter::once(5.0).chain(local).collect();
    let (mean, cov) = analytic_posterior(&ds, &prior_sd, 0.5);
    let root = cov.cholesky().unwrap().l();
    let mut rng = derived_rng(301, "external", 0);
    let s = 2000;
    let mut w = DMatrix::zeros(s, 6);
    for r in 0..s {
        let z = DVector::from_fn(6, |_, _| normal(&mut rng));
        w.row_mut(r).copy_from(&(&mean + &root * z).transpose());
    }
    let external = DrawSet::new(w, vec![0.5; s]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("external.csv");
    let mut buf = Vec::new();
    write_draws(&external, &mut buf).unwrap();
    std::fs::write(&path, buf).unwrap();
    let imported = import_draws(&path, 5).unwrap();

    for sub in [vec![], vec![1], vec![1, 3, 5]] {
        let sub = Submodel::new(sub, 5).unwrap();
        let a = project_drawset(&ds, &internal, &sub).unwrap();
        let b = project_drawset(&ds, &imported, &sub).unwrap();
        let se = |kl: &[f64]| {
            let mu = kl.iter().sum::<f64>() / kl.len() as f64;
            (kl.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (kl.len() * (kl.len() - 1)) as f64).sqrt()
        };
        let tol = 3.0 * (se(&a.kl).powi(2) + se(&b.kl).powi(2)).sqrt();
        assert!(
            (a.discrepancy - b.discrepancy).abs() < tol,
            "{sub:?}: {} vs {}",
            a.discrepancy,
            b.discrepancy
        );
    }
}

#[test]
fn degenerate_inputs_are_rejected() {
    let prior = PriorSpec::new(1.0, false).unwrap();
    let cfg = SamplerConfig::default();
    let tiny = Dataset::from_matrix(
        DMatrix::from_row_slice(2, 1, &[1.0, 2.0]),
        DVector::from_vec(vec![0.0, 1.0]),
    )
    .unwrap();
    assert_eq!(fit(&tiny, &prior, &cfg).unwrap_err().kind(), "degenerate");
    let flat = Dataset::from_matrix(
        DMatrix::from_fn(5, 2, |i, j| (i * j) as f64),
        DVector::from_element(5, 3.0),
    )
    .unwrap();
    assert_eq!(fit(&flat, &prior, &cfg).unwrap_err().kind(), "degenerate");
    let bad = SamplerConfig { warmup: 1000, ..cfg };
    assert!(fit(&random_dataset(10, 2, 1), &prior, &bad).is_err());
}

#[test]
fn more_predictors_than_rows() {
    let ds = random_dataset(12, 30, 8).standardize().unwrap();
    let cfg = SamplerConfig {
        chains: 2,
        iterations_per_chain: 300,
        warmup: 150,
        ..SamplerConfig::default()
    };
    let dr = fit(&ds, &PriorSpec::new(1.0, false).unwrap(), &cfg).unwrap();
    assert_eq!(dr.weights().shape(), (300, 31));
    assert!(dr.weights().iter().all(|v| v.is_finite()));
}
