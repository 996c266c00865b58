mod common;

use lolrec_core::regression::{
    expert_predict, fit_local_linear, kernel_weights, knn_select, windowize, ExpertSpec,
};
use rand::Rng;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn fit_matches_explicit_inverse_on_random_instances() {
    let mut rng = common::rng(11);
    for _ in 0..200 {
        let labels: Vec<f64> = (0..5).map(|_| rng.random_range(0.9..1.1)).collect();
        let preds: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..2).map(|_| rng.random_range(0.9..1.1)).collect())
            .collect();
        let weights: Vec<f64> = (0..5).map(|_| rng.random_range(0.3..1.0)).collect();
        let beta = fit_local_linear(
            labels.iter().copied().zip(preds.iter().map(Vec::as_slice)),
            &weights,
            0.01,
        )
        .unwrap();
        let expected = common::oracle_fit(&labels, &preds, &weights, 0.01).unwrap();
        for (b, e) in beta.iter().zip(&expected) {
            assert!(
                (b - e).abs() <= 1e-9 * (1.0 + e.abs()),
                "{beta:?} vs {expected:?}"
            );
        }
    }
}

#[test]
fn expert_matches_brute_force_oracle() {
    let mut rng = common::rng(7);
    for _ in 0..300 {
        let len = rng.random_range(3..=60);
        let series: Vec<f64> = (0..len).map(|_| rng.random_range(0.8..1.25)).collect();
        let w = rng.random_range(1..=5.min(len - 2));
        let k = rng.random_range(1..=12);
        let period = rng.random_range(w + 1..=len);
        let got = expert_predict(&series, period, ExpertSpec::new(k, w).unwrap()).unwrap();
        let want = common::oracle_predict(&series, period, k, w, 0.01).unwrap();
        assert!(
            rel_err(got.value, want) <= 1e-9,
            "k={k} w={w} {} vs {want}",
            got.value
        );
    }
}

#[test]
fn full_neighbourhood_uniform_weights_is_ols() {
    // simple regression closed form: slope = cov(x, y) / var(x)
    let mut rng = common::rng(3);
    for _ in 0..50 {
        let series: Vec<f64> = (0..40).map(|_| rng.random_range(0.9..1.1)).collect();
        let set = windowize(&series, 1).unwrap();
        let xs: Vec<f64> = set.rows().map(|(_, x)| x[0]).collect();
        let ys: Vec<f64> = set.rows().map(|(y, _)| y).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = cov / var;
        let intercept = my - slope * mx;

        let neighbours = knn_select(&[1.0], &set, set.len());
        assert_eq!(neighbours.len(), set.len());
        let beta = fit_local_linear(set.rows(), &vec![1.0; set.len()], 0.0).unwrap();
        assert!((beta[1] - slope).abs() < 1e-9);
        assert!((beta[0] - intercept).abs() < 1e-9);
    }
}

#[test]
fn exact_hyperplane_is_reproduced_without_ridge() {
    let mut rng = common::rng(5);
    for _ in 0..50 {
        let coef = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let preds: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..2).map(|_| rng.random_range(0.5..1.5)).collect())
            .collect();
        let labels: Vec<f64> = preds
            .iter()
            .map(|x| coef[0] + coef[1] * x[0] + coef[2] * x[1])
            .collect();
        let weights: Vec<f64> = (0..6).map(|_| rng.random_range(0.1..1.0)).collect();
        let beta = fit_local_linear(
            labels.iter().copied().zip(preds.iter().map(Vec::as_slice)),
            &weights,
            0.0,
        )
        .unwrap();
        for (x, y) in preds.iter().zip(&labels) {
            let fitted = beta[0] + beta[1] * x[0] + beta[2] * x[1];
            assert!((fitted - y).abs() < 1e-9);
        }
    }
}

#[test]
fn kernel_weights_match_formula() {
    let w = kernel_weights(&[1.0, 2.0, 4.0]);
    let want = [0.7788007830714049, 0.6065306597126334, 0.36787944117144233];
    for (a, b) in w.iter().zip(want) {
        assert!(rel_err(*a, b) < 1e-15);
    }
}
