use projpred::priors::{
    sample_kappa_prior, shrinkage_density, shrinkage_mass, shrinkage_profile, shrinkage_profile_mc, PriorSpec,
};
use projpred::stats::ks_one_sample;
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

fn beta_half_pdf(k: f64) -> f64 {
    1.0 / (std::f64::consts::PI * (k * (1.0 - k)).sqrt())
}

fn beta_half_cdf(k: f64) -> f64 {
    2.0 / std::f64::consts::PI * k.sqrt().asin()
}

/// `P(kappa <= k) = P(lambda >= sqrt(1/k - 1)) = 2 (1 - T_nu(sqrt(1/k - 1)))`.
fn kappa_cdf(k: f64, nu: f64) -> f64 {
    let t = StudentsT::new(0.0, 1.0, nu).unwrap();
    2.0 * (1.0 - t.cdf((1.0 / k - 1.0).sqrt()))
}

/// Density by central differences of the Student-t based CDF.
fn kappa_pdf_by_differences(k: f64, nu: f64) -> f64 {
    let h = 1e-5;
    (kappa_cdf(k + h, nu) - kappa_cdf(k - h, nu)) / (2.0 * h)
}

#[test]
fn nu_one_is_beta_half() {
    let worst = (1..=99)
        .map(|i| {
            let k = i as f64 / 100.0;
            (shrinkage_density(k, 1.0).unwrap() - beta_half_pdf(k)).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
    assert!((shrinkage_density(0.5, 1.0).unwrap() - 2.0 / std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn other_nu_match_student_t_oracle() {
    for nu in [2.0, 3.0, 5.0, 10.0] {
        for i in 1..20 {
            let k = i as f64 / 20.0;
            let got = shrinkage_density(k, nu).unwrap();
            let want = kappa_pdf_by_differences(k, nu);
            assert!(
                (got - want).abs() < 1e-5 * want.max(1.0),
                "nu {nu} kappa {k}: {got} vs {want}"
            );
        }
    }
    let at_half = shrinkage_density(0.5, 3.0).unwrap();
    assert!((at_half - kappa_pdf_by_differences(0.5, 3.0)).abs() < 1e-6);
}

#[test]
fn densities_integrate_to_one() {
    for nu in [1.0, 2.0, 3.0, 5.0] {
        let mass = shrinkage_mass(0.0, 1.0, nu).unwrap();
        assert!((mass - 1.0).abs() < 1e-3, "nu {nu}: {mass}");
    }
    let fine = shrinkage_profile(1.0, 1_000_000).unwrap();
    assert!((fine.trapezoid() - 1.0).abs() < 1e-3);
}

#[test]
fn mass_agrees_with_cdf_oracle() {
    for nu in [1.0, 3.0] {
        for (lo, hi) in [(0.0f64, 0.1f64), (0.2, 0.7), (0.9, 1.0)] {
            let want = kappa_cdf(hi, nu) - if lo > 0.0 { kappa_cdf(lo, nu) } else { 0.0 };
            let got = shrinkage_mass(lo, hi, nu).unwrap();
            assert!((got - want).abs() < 1e-7, "nu {nu} [{lo}, {hi}]: {got} vs {want}");
        }
    }
}

#[test]
fn profile_shapes() {
    let one = shrinkage_profile(1.0, 99).unwrap();
    let n = one.density.len();
    for i in 0..n {
        let d = (one.density[i] - one.density[n - 1 - i]).abs();
        assert!(d <= 1e-12 * one.density[i], "asymmetry {d} at {i}");
    }
    let three = shrinkage_profile(3.0, 99).unwrap();
    assert!(three.density[0] / three.density[n - 1] < one.density[0] / one.density[n - 1]);
    assert!(three.density[0] < one.density[0]);
    for nu in [1.0, 2.0, 3.0, 5.0] {
        let p = shrinkage_profile(nu, 99).unwrap();
        assert!(p.density[n / 2..].windows(2).all(|w| w[1] > w[0]), "nu {nu}");
        assert!(p.density.iter().all(|d| d.is_finite() && *d >= 0.0));
    }
    let two = shrinkage_profile(1.0, 2).unwrap();
    assert_eq!(two.grid, vec![0.25, 0.75]);
    assert!(two.density.iter().all(|d| d.is_finite()));
}

#[test]
fn samples_pass_ks_against_beta_half() {
    let s = sample_kappa_prior(1.0, false, 100_000, 42).unwrap();
    let ks = ks_one_sample(&s, beta_half_cdf);
    assert!(ks.statistic < 0.01, "{ks:?}");
}

#[test]
fn samples_pass_chi_square_against_density() {
    let bins = 20;
    for (nu, seed) in [(1.0, 7), (3.0, 8), (5.0, 9)] {
        let s = sample_kappa_prior(nu, false, 100_000, seed).unwrap();
        let mut counts = vec![0usize; bins];
        for k in &s {
            counts[((k * bins as f64) as usize).min(bins - 1)] += 1;
        }
        let stat: f64 = (0..bins)
            .map(|b| {
                let lo = b as f64 / bins as f64;
                let expected = s.len() as f64 * shrinkage_mass(lo, lo + 1.0 / bins as f64, nu).unwrap();
                (counts[b] as f64 - expected).powi(2) / expected
            })
            .sum();
        let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.01, "nu {nu}: chi2 = {stat}, p = {p}");
    }
}

#[test]
fn plus_variant_has_heavier_ends() {
    let plain = sample_kappa_prior(1.0, false, 100_000, 1).unwrap();
    let plus = sample_kappa_prior(1.0, true, 100_000, 2).unwrap();
    let frac = |s: &[f64], f: &dyn Fn(f64) -> bool| s.iter().filter(|k| f(**k)).count() as f64 / s.len() as f64;
    assert!(frac(&plus, &|k| k < 0.01) > frac(&plain, &|k| k < 0.01));
    assert!(frac(&plus, &|k| k > 0.99) > frac(&plain, &|k| k > 0.99));
    let mc = shrinkage_profile_mc(1.0, true, 50, 100_000, 3).unwrap();
    assert!((mc.density.iter().sum::<f64>() / 50.0 - 1.0).abs() < 1e-12);
}

#[test]
fn invalid_parameters() {
    assert!(shrinkage_density(0.0, 1.0).is_err());
    assert!(shrinkage_density(1.0, 1.0).is_err());
    assert!(shrinkage_density(0.5, 0.5).is_err());
    assert!(shrinkage_profile(1.0, 1).is_err());
    assert!(PriorSpec::new(0.5, false).is_err());
    assert!(PriorSpec::new(1.0, false).unwrap().with_intercept_sd(0.0).is_err());
    let a = sample_kappa_prior(4.0, true, 1, 5).unwrap();
    assert_eq!(a, sample_kappa_prior(4.0, true, 1, 5).unwrap());
}
