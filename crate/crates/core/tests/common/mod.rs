//! Test-only helpers: an independent brute-force expert and synthetic markets.

#![allow(dead_code)]

use lolrec_core::MarketMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Gauss-Jordan inverse with partial pivoting. Returns `None` when a pivot
/// vanishes.
pub fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                for j in 0..n {
                    a[r][j] -= f * a[col][j];
                    inv[r][j] -= f * inv[col][j];
                }
            }
        }
    }
    Some(inv)
}

/// Explicit `(X'WX + R)^-1 X'Wy` with the intercept unpenalised.
pub fn oracle_fit(
    labels: &[f64],
    predictors: &[Vec<f64>],
    weights: &[f64],
    ridge: f64,
) -> Option<Vec<f64>> {
    let p = predictors[0].len() + 1;
    let design: Vec<Vec<f64>> = predictors
        .iter()
        .map(|x| std::iter::once(1.0).chain(x.iter().copied()).collect())
        .collect();
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    for ((row, &y), &w) in design.iter().zip(labels).zip(weights) {
        for i in 0..p {
            b[i] += w * row[i] * y;
            for j in 0..p {
                a[i][j] += w * row[i] * row[j];
            }
        }
    }
    for (i, r) in a.iter_mut().enumerate().skip(1) {
        r[i] += ridge;
    }
    let inv = invert(a)?;
    Some(
        (0..p)
            .map(|i| (0..p).map(|j| inv[i][j] * b[j]).sum())
            .collect(),
    )
}

/// End-to-end re-derivation of one expert's estimate for `series[period]`.
pub fn oracle_predict(
    series: &[f64],
    period: usize,
    k: usize,
    w: usize,
    ridge: f64,
) -> Option<f64> {
    if period < w + 1 || period > series.len() {
        return None;
    }
    let history = &series[..period];
    // (label, predictors newest first, original row index)
    let mut rows: Vec<(f64, Vec<f64>, usize)> = Vec::new();
    for t in w..history.len() {
        let x: Vec<f64> = (1..=w).map(|lag| history[t - lag]).collect();
        rows.push((history[t], x, t));
    }
    let query: Vec<f64> = (1..=w).map(|lag| series[period - lag]).collect();
    let mut scored: Vec<(f64, usize, f64, Vec<f64>)> = rows
        .into_iter()
        .map(|(y, x, t)| {
            let d = x
                .iter()
                .zip(&query)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            (d, t, y, x)
        })
        .collect();
    // stable sort by distance keeps the older row first on ties
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    scored.truncate(k);
    let h = scored.last().unwrap().0.max(1e-12);
    let weights: Vec<f64> = scored.iter().map(|s| (-s.0 / h).exp()).collect();
    let labels: Vec<f64> = scored.iter().map(|s| s.2).collect();
    let preds: Vec<Vec<f64>> = scored.iter().map(|s| s.3.clone()).collect();
    let beta = oracle_fit(&labels, &preds, &weights, ridge)?;
    Some(
        beta[0]
            + beta[1..]
                .iter()
                .zip(&query)
                .map(|(b, x)| b * x)
                .sum::<f64>(),
    )
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tickers(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("S{j:02}")).collect()
}

/// i.i.d. log-normal-ish relatives `1 + N(0, sigma)` clipped at 0.
pub fn random_market(seed: u64, n: usize, d: usize, sigma: f64) -> MarketMatrix {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let rows = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| (1.0 + noise.sample(&mut r)).max(0.0))
                .collect()
        })
        .collect();
    MarketMatrix::from_relatives(tickers(d), rows, None).unwrap()
}

/// One asset alternating `1.02, 0.99` (random phase) and `noisy` assets whose
/// relatives are `1 + N(0, sigma)`, mean 1.
pub fn predictable_market(seed: u64, n: usize, noisy: usize, sigma: f64) -> MarketMatrix {
    let mut r = rng(seed);
    let phase: usize = r.random_range(0..2);
    let noise = Normal::new(0.0, sigma).unwrap();
    let rows = (0..n)
        .map(|t| {
            let cycle = if (t + phase).is_multiple_of(2) { 1.02 } else { 0.99 };
            std::iter::once(cycle)
                .chain((0..noisy).map(|_| (1.0 + noise.sample(&mut r)).max(0.0)))
                .collect()
        })
        .collect();
    MarketMatrix::from_relatives(tickers(noisy + 1), rows, None).unwrap()
}
