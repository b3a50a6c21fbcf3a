//! Statistical properties of the randomized estimator.

use specquad::estimator::{
    estimate_spectrum, sample_unit_sphere, EstimateConfig, FunctionSpec, Method,
};
use specquad::measures::DistributionFunction;
use specquad::operators::diagonal_operator;

fn psi(eigs: &[f64], v: &[f64], x: f64) -> f64 {
    eigs.iter()
        .zip(v)
        .filter(|(l, _)| **l <= x)
        .map(|(_, vi)| vi * vi)
        .sum()
}

#[test]
fn weighted_cesm_is_unbiased_with_beta_variance() {
    let n = 200;
    let eigs: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let x = 100.0;
    let runs = 2000;
    let samples: Vec<f64> = (0..runs)
        .map(|r| psi(&eigs, &sample_unit_sphere(n, 77, r), x))
        .collect();
    let mean = samples.iter().sum::<f64>() / runs as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;

    let m = 100.0;
    let (a, b) = (m / 2.0, (n as f64 - m) / 2.0);
    let beta_var = a * b / ((a + b).powi(2) * (a + b + 1.0));
    let phi = m / n as f64;
    assert!(
        (mean - phi).abs() <= 4.0 * (beta_var / runs as f64).sqrt(),
        "mean {mean}"
    );
    assert!(
        (var / beta_var - 1.0).abs() <= 0.1,
        "variance {var} vs {beta_var}"
    );
}

#[test]
fn exact_per_sample_cesm_through_the_estimator() {
    // k = n Lanczos steps recover each weighted CESM; averaging many of them approaches Φ
    let n = 20;
    let eigs: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
    let a = diagonal_operator(eigs.clone()).unwrap();
    let cfg = EstimateConfig {
        k: n,
        n_v: 400,
        reorth: true,
        seed: 3,
        ..Default::default()
    };
    let rep = estimate_spectrum(&a, &cfg).unwrap();
    for (l, s) in rep.samples.iter().enumerate().take(5) {
        let v = sample_unit_sphere(n, 3, l as u64);
        for w in eigs.windows(2) {
            let x = 0.5 * (w[0] + w[1]);
            assert!((s.cdf(x) - psi(&eigs, &v, x)).abs() < 1e-10);
        }
    }
    for (i, &lam) in eigs.iter().enumerate() {
        let x = lam + 1e-6;
        let phi = (i + 1) as f64 / n as f64;
        let m = (i + 1) as f64;
        let (al, be) = (m / 2.0, (n as f64 - m) / 2.0);
        let sd = if be > 0.0 {
            (al * be / ((al + be).powi(2) * (al + be + 1.0)) / 400.0).sqrt()
        } else {
            0.0
        };
        assert!(
            (rep.average.cdf(x) - phi).abs() <= 4.0 * sd + 1e-10,
            "x = {x}"
        );
    }
}

#[test]
fn averaged_sums_are_linear_in_samples() {
    let a = diagonal_operator(
        (0..150)
            .map(|i| 0.2 + (i as f64 * 0.61).sin().abs())
            .collect(),
    )
    .unwrap();
    for method in [Method::Slq, Method::Iq, Method::Aaq] {
        let cfg = EstimateConfig {
            method,
            k: 8,
            n_v: 9,
            seed: 21,
            functions: vec![FunctionSpec::Log, FunctionSpec::ExpNeg(3.0)],
            ..Default::default()
        };
        let rep = estimate_spectrum(&a, &cfg).unwrap();
        for s in &rep.sums {
            let mean = s.samples.iter().sum::<f64>() / s.samples.len() as f64;
            assert!(
                (s.trace - mean).abs() <= 1e-12 * mean.abs().max(1.0),
                "{method} {}",
                s.function
            );
        }
    }
}

#[test]
fn trace_estimates_concentrate() {
    let n = 400;
    let eigs: Vec<f64> = (0..n)
        .map(|i| -1.0 + (2 * i + 1) as f64 / n as f64)
        .collect();
    let a = diagonal_operator(eigs.clone()).unwrap();
    let exact: f64 = eigs.iter().map(|x| 1.0 / (1.0 + 16.0 * x * x)).sum();
    let mut errs = Vec::new();
    for n_v in [1usize, 16, 64] {
        let cfg = EstimateConfig {
            k: 25,
            n_v,
            seed: 5,
            reorth: true,
            functions: vec![FunctionSpec::Runge],
            ..Default::default()
        };
        errs.push((estimate_spectrum(&a, &cfg).unwrap().sums[0].trace - exact).abs() / exact);
    }
    assert!(errs[2] < 0.02, "{errs:?}");
}
