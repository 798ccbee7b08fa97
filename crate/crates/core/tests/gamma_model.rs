mod common;

use nalgebra::DVector;
use pivotal::gamma::{
    deviance_term, fit_irls, fit_mean, gamma_loglik, kappa_prime, profile_deviance_beta,
    profile_deviance_precision, solve_precision,
};
use pivotal::linear::Dataset;
use pivotal::numerics::{chisq_cdf, DrawLaw};
use pivotal::Error;
use proptest::prelude::*;
use rayon::prelude::*;

use common::Draws;

#[test]
fn single_observation_deviance_term() {
    let e = std::f64::consts::E;
    assert!((deviance_term(1.0, e) - 0.3678794412).abs() < 1e-10);
}

#[test]
fn loglik_at_exact_means_is_minus_n_kappa() {
    let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![1.0, i as f64 / 4.0]).collect();
    let beta = [0.2, -0.7];
    let y = common::means(&rows, &beta);
    let data = Dataset::from_rows(&y, &rows).unwrap();
    for phi in [0.3, 1.0, 4.0, 25.0] {
        let l = gamma_loglik(&common::to_vector(&beta), phi, &data).unwrap();
        assert!((l + 8.0 * common::kappa(phi)).abs() < 1e-10);
    }
}

#[test]
fn loglik_is_concave_in_precision() {
    let inst = common::gamma_instance(&mut Draws::new(3, 0), 30, 2, (2.0, 2.0));
    let beta = common::to_vector(&inst.beta);
    let grid: Vec<f64> = (0..60).map(|i| 0.1 * 1.1f64.powi(i)).collect();
    let l: Vec<f64> = grid
        .iter()
        .map(|&phi| gamma_loglik(&beta, phi, &inst.data).unwrap())
        .collect();
    for i in 1..grid.len() - 1 {
        // second divided difference on an uneven grid
        let left = (l[i] - l[i - 1]) / (grid[i] - grid[i - 1]);
        let right = (l[i + 1] - l[i]) / (grid[i + 1] - grid[i]);
        assert!(right <= left);
    }
}

#[test]
fn intercept_only_mean_is_sample_mean() {
    let y = Draws::new(3, 1).take(DrawLaw::Gamma { shape: 3.0, scale: 0.7 }, 25);
    let data = Dataset::from_rows(&y, &vec![vec![1.0]; 25]).unwrap();
    let fit = fit_irls(&data, None).unwrap();
    let mean = y.iter().sum::<f64>() / 25.0;
    assert!((fit.beta_hat[0] - mean.ln()).abs() < 1e-12);
}

#[test]
fn precision_for_mean_deviance_one_tenth() {
    let oracle = common::bisect(|phi| common::kappa_prime(phi) + 0.1, 0.1, 100.0);
    assert!((oracle - 5.160875503).abs() < 1e-8);
    assert!((solve_precision(0.1).unwrap() - oracle).abs() < 1e-10);
}

#[test]
fn precision_root_is_unique_across_scales() {
    for k in -12..=6 {
        let mean_b = 10f64.powi(k);
        let phi = solve_precision(mean_b).unwrap();
        assert!((kappa_prime(phi) + mean_b).abs() <= 1e-12 * mean_b);
    }
}

#[test]
fn noise_free_response() {
    let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![1.0, i as f64 / 9.0]).collect();
    let beta = [0.4, 1.1];
    let y = common::means(&rows, &beta);
    let data = Dataset::from_rows(&y, &rows).unwrap();
    let mean = fit_mean(&data, None).unwrap();
    for (a, b) in mean.beta_hat.iter().zip(beta) {
        assert!((a - b).abs() < 1e-8);
    }
    assert!(matches!(fit_irls(&data, None), Err(Error::DegenerateFit(_))));
}

#[test]
fn profile_deviances_vanish_at_the_mle_and_are_nonnegative() {
    let inst = common::gamma_instance(&mut Draws::new(3, 2), 40, 3, (1.0, 5.0));
    let fit = fit_irls(&inst.data, None).unwrap();
    assert_eq!(profile_deviance_precision(&fit, fit.precision_hat).unwrap().d_p, 0.0);
    for i in 0..=40 {
        let phi = fit.precision_hat * 10f64.powf(-1.0 + i as f64 / 20.0);
        assert!(profile_deviance_precision(&fit, phi).unwrap().d_p >= 0.0);
    }
    let at_hat = profile_deviance_beta(&inst.data, &fit, &fit.beta_hat).unwrap().d_p;
    assert!(at_hat.abs() < 1e-12);
}

#[test]
fn coefficient_deviance_is_monotone_along_rays() {
    for s in 0..5 {
        let mut draws = Draws::new(3, 10 + s);
        let inst = common::gamma_instance(&mut draws, 15, 2, (1.0, 5.0));
        let fit = fit_irls(&inst.data, None).unwrap();
        for _ in 0..4 {
            let u = DVector::from_vec(vec![draws.uniform(-1.0, 1.0), draws.uniform(-1.0, 1.0)]);
            let mut last = 0.0;
            for k in 1..=40 {
                let beta = &fit.beta_hat + &u * (0.05 * k as f64);
                let d = profile_deviance_beta(&inst.data, &fit, &beta).unwrap().d_p;
                assert!(d >= last);
                last = d;
            }
        }
    }
}

/// Kolmogorov distance between a sample and a CDF.
fn ks_distance(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn first_order_deviances_are_calibrated_at_n_200() {
    let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![1.0, -1.0 + 2.0 * i as f64 / 199.0]).collect();
    let beta = [0.5, 1.0];
    let phi = 2.0;
    let mu = common::means(&rows, &beta);
    let pairs: Vec<(f64, f64)> = (0..10_000u64)
        .into_par_iter()
        .map(|r| {
            let mut draws = Draws::new(404, r);
            let y: Vec<f64> = mu
                .iter()
                .map(|&m| draws.take(DrawLaw::Gamma { shape: phi, scale: m / phi }, 1)[0])
                .collect();
            let data = Dataset::from_rows(&y, &rows).unwrap();
            let fit = fit_irls(&data, None).unwrap();
            let dp_phi = profile_deviance_precision(&fit, phi).unwrap().d_p;
            let dp_beta = profile_deviance_beta(&data, &fit, &common::to_vector(&beta)).unwrap().d_p;
            (dp_phi, dp_beta)
        })
        .collect();
    let (phis, betas): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let ks_phi = ks_distance(phis, |x| chisq_cdf(x, 1.0).unwrap());
    let ks_beta = ks_distance(betas, |x| chisq_cdf(x, 2.0).unwrap());
    assert!(ks_phi < 0.03, "precision profile KS distance {ks_phi}");
    assert!(ks_beta < 0.03, "coefficient profile KS distance {ks_beta}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn row_permutation_leaves_the_fit_unchanged(seed in 0u64..10_000, shift in 1usize..30) {
        let inst = common::gamma_instance(&mut Draws::new(seed, 0), 30, 3, (0.5, 10.0));
        let order: Vec<usize> = (0..30).map(|i| (i * 7 + shift) % 30).collect();
        let y: Vec<f64> = order.iter().map(|&i| inst.y[i]).collect();
        let rows: Vec<Vec<f64>> = order.iter().map(|&i| inst.rows[i].clone()).collect();
        let permuted = Dataset::from_rows(&y, &rows).unwrap();
        let (a, b) = (fit_irls(&inst.data, None).unwrap(), fit_irls(&permuted, None).unwrap());
        for (u, v) in a.beta_hat.iter().zip(b.beta_hat.iter()) {
            prop_assert!((u - v).abs() < 1e-12);
        }
        prop_assert!((a.precision_hat - b.precision_hat).abs() < 1e-12 * a.precision_hat);
        let phi = 0.7 * a.precision_hat;
        let (da, db) = (
            profile_deviance_precision(&a, phi).unwrap().d_p,
            profile_deviance_precision(&b, phi).unwrap().d_p,
        );
        prop_assert!((da - db).abs() < 1e-12 * da.max(1.0));
        let beta = a.beta_hat.map(|v| v + 0.1);
        let (da, db) = (
            profile_deviance_beta(&inst.data, &a, &beta).unwrap().d_p,
            profile_deviance_beta(&permuted, &b, &beta).unwrap().d_p,
        );
        prop_assert!((da - db).abs() < 1e-12 * da.max(1.0));
    }
}
