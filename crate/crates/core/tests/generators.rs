//! Full-length Lanczos on the built-in problems reproduces the weighted CESM.

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use specquad::estimator::{estimate_spectrum, sample_unit_sphere, EstimateConfig};
use specquad::measures::DistributionFunction;
use specquad::operators::{to_dense, LinearOperator};
use specquad::problems::{
    gapped_spectrum, heisenberg_ring, kneser_adjacency, model_problem, uniform_spectrum,
};

fn build(kind: usize, size: usize) -> Box<dyn LinearOperator> {
    match kind {
        0 => Box::new(uniform_spectrum(size).unwrap()),
        1 => Box::new(gapped_spectrum(4 * size).unwrap()),
        2 => Box::new(model_problem(size.max(2), 50.0, 0.9).unwrap()),
        3 => Box::new(kneser_adjacency(5 + size % 3, 2).unwrap()),
        _ => Box::new(heisenberg_ring(2 + size % 4, 0.5, 1.0, 1.0, 1.0).unwrap()),
    }
}

/// Distinct eigenvalues and `vᵀ P_λ v` for each, from a dense eigendecomposition.
fn weighted_cesm(a: &dyn LinearOperator, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = a.dim();
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &to_dense(a)));
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let p: f64 = (0..n).map(|i| eig.eigenvectors[(i, j)] * v[i]).sum();
            (eig.eigenvalues[j], p * p)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (mut nodes, mut weights): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for (l, w) in pairs {
        match nodes.last() {
            Some(&last) if (l - last).abs() < 1e-9 => *weights.last_mut().unwrap() += w,
            _ => {
                nodes.push(l);
                weights.push(w);
            }
        }
    }
    (nodes, weights)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn slq_with_k_equal_n_is_exact(kind in 0usize..5, size in 3usize..16, seed in any::<u64>()) {
        let a = build(kind, size);
        let n = a.dim();
        prop_assume!(n <= 64);
        let spectrum = a.exact_spectrum().map(|s| s.to_vec());
        let cfg = EstimateConfig { k: n, n_v: 1, reorth: true, seed, ..Default::default() };
        let rep = estimate_spectrum(&a, &cfg).unwrap();
        let v = sample_unit_sphere(n, seed, 0);
        let (nodes, weights) = weighted_cesm(&a, &v);
        if let Some(s) = spectrum {
            prop_assert!(s.iter().all(|x| nodes.iter().any(|y| (x - y).abs() < 1e-9)));
        }
        let mut cum = 0.0;
        for i in 0..nodes.len() {
            cum += weights[i];
            let x = if i + 1 < nodes.len() { 0.5 * (nodes[i] + nodes[i + 1]) } else { nodes[i] + 1.0 };
            prop_assert!((rep.average.cdf(x) - cum).abs() < 1e-8, "kind {} size {} at {}", kind, size, x);
        }
    }
}
