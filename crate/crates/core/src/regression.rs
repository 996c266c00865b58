//! Local linear regression experts.
//!
//! An expert `E(k, w)` for one asset turns the asset's history of price
//! relatives into lagged examples (label `x[t]`, predictors
//! `x[t-1], ..., x[t-w]`), picks the `k` examples whose predictor windows are
//! closest (Euclidean) to the most recent window, weights them with an
//! exponential kernel and fits a degree-1 ridge regression on them. The fit
//! evaluated at the most recent window is the expert's estimate of the next
//! price relative.
//!
//! Training for period `i` only ever sees relatives with index `< i`.

use std::cmp::Ordering;

use crate::error::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 0.01;

/// Floor for the kernel bandwidth when every neighbour sits at distance zero.
pub const BANDWIDTH_FLOOR: f64 = 1e-12;

/// Parameters of one expert. The polynomial degree is always 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertSpec {
    pub k: usize,
    pub w: usize,
    pub ridge: f64,
}

impl ExpertSpec {
    pub fn new(k: usize, w: usize) -> Result<Self> {
        Self::with_ridge(k, w, DEFAULT_RIDGE)
    }

    pub fn with_ridge(k: usize, w: usize, ridge: f64) -> Result<Self> {
        if k == 0 || w == 0 {
            return Err(Error::InvalidParameter(format!(
                "expert needs k >= 1 and w >= 1, got k={k}, w={w}"
            )));
        }
        if !(ridge.is_finite() && ridge >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ridge must be finite and non-negative, got {ridge}"
            )));
        }
        Ok(Self { k, w, ridge })
    }

    pub const fn degree(&self) -> usize {
        1
    }
}

/// A prediction of the next price relative made by one expert.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpertEstimate {
    pub value: f64,
    pub period: usize,
    pub spec: ExpertSpec,
}

/// Lagged examples built from one series.
///
/// Row `r` has label `series[first_label_index + r]` and predictors
/// `series[t-1], ..., series[t-w]` for that label index `t`, most recent
/// first. Predictors are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSet {
    width: usize,
    labels: Vec<f64>,
    predictors: Vec<f64>,
    pub first_label_index: usize,
}

impl WindowedSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn label(&self, row: usize) -> f64 {
        self.labels[row]
    }

    pub fn predictors(&self, row: usize) -> &[f64] {
        &self.predictors[row * self.width..(row + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.labels
            .iter()
            .copied()
            .zip(self.predictors.chunks_exact(self.width))
    }
}

/// Sliding-window transform of a series into `len - w` lagged examples.
pub fn windowize(series: &[f64], w: usize) -> Result<WindowedSet> {
    if w == 0 {
        return Err(Error::InvalidParameter("window size must be >= 1".into()));
    }
    if series.len() <= w {
        return Err(Error::InsufficientHistory {
            len: series.len(),
            window: w,
        });
    }
    let rows = series.len() - w;
    let mut labels = Vec::with_capacity(rows);
    let mut predictors = Vec::with_capacity(rows * w);
    for t in w..series.len() {
        labels.push(series[t]);
        predictors.extend(series[t - w..t].iter().rev());
    }
    Ok(WindowedSet {
        width: w,
        labels,
        predictors,
        first_label_index: w,
    })
}

/// A selected training row and its distance from the query window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub row: usize,
    pub distance: f64,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn by_distance_then_row(a: &Neighbor, b: &Neighbor) -> Ordering {
    a.distance
        .total_cmp(&b.distance)
        .then_with(|| a.row.cmp(&b.row))
}

/// The `min(k, rows)` nearest rows among the first `rows` of `train`,
/// ascending by distance, ties going to the older row.
pub fn knn_select_prefix(
    query: &[f64],
    train: &WindowedSet,
    rows: usize,
    k: usize,
) -> Vec<Neighbor> {
    let rows = rows.min(train.len());
    let mut all: Vec<Neighbor> = (0..rows)
        .map(|row| Neighbor {
            row,
            distance: euclidean(query, train.predictors(row)),
        })
        .collect();
    let k = k.min(all.len());
    if k == 0 {
        return Vec::new();
    }
    if k < all.len() {
        all.select_nth_unstable_by(k - 1, by_distance_then_row);
        all.truncate(k);
    }
    all.sort_unstable_by(by_distance_then_row);
    all
}

/// The `min(k, |train|)` nearest rows of `train` to `query`.
pub fn knn_select(query: &[f64], train: &WindowedSet, k: usize) -> Vec<Neighbor> {
    knn_select_prefix(query, train, train.len(), k)
}

/// Exponential kernel `exp(-d / h)` with the bandwidth `h` set to the largest
/// distance in the neighbourhood (floored at [`BANDWIDTH_FLOOR`]).
pub fn kernel_weights(distances: &[f64]) -> Vec<f64> {
    let h = distances
        .iter()
        .copied()
        .fold(0.0_f64, f64::max)
        .max(BANDWIDTH_FLOOR);
    distances.iter().map(|d| (-d / h).exp()).collect()
}

/// Weighted ridge fit of `label ~ b0 + b1 . predictors`.
///
/// Returns `[b0, b1...]`. The intercept is not penalised. Solves the normal
/// equations `(X'WX + R) b = X'Wy` by Cholesky factorisation.
pub fn fit_local_linear<'a, I>(rows: I, weights: &[f64], ridge: f64) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = (f64, &'a [f64])>,
{
    let mut rows = rows.into_iter().peekable();
    let width = match rows.peek() {
        Some((_, x)) => x.len(),
        None => return Err(Error::InvalidParameter("no rows to fit".into())),
    };
    let p = width + 1;
    let mut gram = vec![0.0; p * p];
    let mut rhs = vec![0.0; p];
    let mut used = 0;
    for ((label, x), &wt) in rows.zip(weights) {
        if x.len() != width {
            return Err(Error::Dimension {
                expected: width,
                got: x.len(),
            });
        }
        used += 1;
        // design row is [1, x...]
        for a in 0..p {
            let xa = if a == 0 { 1.0 } else { x[a - 1] };
            rhs[a] += wt * xa * label;
            for b in 0..=a {
                let xb = if b == 0 { 1.0 } else { x[b - 1] };
                gram[a * p + b] += wt * xa * xb;
            }
        }
    }
    if used != weights.len() {
        return Err(Error::Dimension {
            expected: used,
            got: weights.len(),
        });
    }
    for a in 1..p {
        gram[a * p + a] += ridge;
    }
    cholesky_solve(&mut gram, &mut rhs, p)?;
    Ok(rhs)
}

/// Solves `A x = b` in place for symmetric positive definite `A`, of which
/// only the lower triangle is read. `b` is overwritten with `x`.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], p: usize) -> Result<()> {
    let scale = (0..p).map(|i| a[i * p + i].abs()).fold(0.0, f64::max);
    let tol = scale * 1e-13;
    for j in 0..p {
        let mut diag = a[j * p + j];
        for m in 0..j {
            diag -= a[j * p + m] * a[j * p + m];
        }
        if !(diag > tol) {
            return Err(Error::Singular);
        }
        let diag = diag.sqrt();
        a[j * p + j] = diag;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for m in 0..j {
                s -= a[i * p + m] * a[j * p + m];
            }
            a[i * p + j] = s / diag;
        }
    }
    for i in 0..p {
        let mut s = b[i];
        for m in 0..i {
            s -= a[i * p + m] * b[m];
        }
        b[i] = s / a[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for m in i + 1..p {
            s -= a[m * p + i] * b[m];
        }
        b[i] = s / a[i * p + i];
    }
    Ok(())
}

fn evaluate(beta: &[f64], query: &[f64]) -> f64 {
    beta[0] + beta[1..].iter().zip(query).map(|(b, x)| b * x).sum::<f64>()
}

/// Most recent `w` observations before `period`, newest first.
pub fn query_window(series: &[f64], period: usize, w: usize) -> Vec<f64> {
    series[period - w..period].iter().rev().copied().collect()
}

/// Fits the expert on `series[..period]` and predicts `series[period]`.
///
/// Needs `period >= w + 1`: one training row plus the query window.
pub fn expert_predict(series: &[f64], period: usize, spec: ExpertSpec) -> Result<ExpertEstimate> {
    if period > series.len() {
        return Err(Error::InvalidParameter(format!(
            "period {period} is beyond a series of length {}",
            series.len()
        )));
    }
    let train = windowize(&series[..period], spec.w)?;
    let query = query_window(series, period, spec.w);
    let value = predict_from_window(&train, train.len(), &query, &[spec.k], spec.ridge)?[0];
    Ok(ExpertEstimate {
        value,
        period,
        spec,
    })
}

/// Estimates for several neighbourhood sizes sharing one window size.
///
/// Uses the first `rows` examples of `train` only. The neighbour search runs
/// once for the largest `k`; each expert takes its prefix of that ordering,
/// which is exactly its own `k`-nearest set under the same tie rule.
pub fn predict_from_window(
    train: &WindowedSet,
    rows: usize,
    query: &[f64],
    ks: &[usize],
    ridge: f64,
) -> Result<Vec<f64>> {
    let rows = rows.min(train.len());
    if rows == 0 {
        return Err(Error::InsufficientHistory {
            len: train.first_label_index,
            window: train.width(),
        });
    }
    let k_max = ks.iter().copied().max().unwrap_or(0);
    let neighbors = knn_select_prefix(query, train, rows, k_max);
    ks.iter()
        .map(|&k| {
            let local = &neighbors[..k.min(neighbors.len())];
            let distances: Vec<f64> = local.iter().map(|n| n.distance).collect();
            let weights = kernel_weights(&distances);
            let beta = fit_local_linear(
                local
                    .iter()
                    .map(|n| (train.label(n.row), train.predictors(n.row))),
                &weights,
                ridge,
            )?;
            Ok(evaluate(&beta, query))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn windowize_layout() {
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        let set = windowize(&s, 3).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.label(0), 3.0);
        assert_eq!(set.predictors(0), &[2.0, 1.0, 0.0]);
        assert_eq!(set.label(1), 4.0);
        assert_eq!(set.predictors(1), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn windowize_minimal_and_constant() {
        let set = windowize(&[7.0, 9.0], 1).unwrap();
        assert_eq!(set.rows().collect::<Vec<_>>(), vec![(9.0, &[7.0][..])]);
        let set = windowize(&[1.0; 4], 2).unwrap();
        assert_eq!(set.len(), 2);
        assert!(set.rows().all(|(y, x)| y == 1.0 && x == [1.0, 1.0]));
    }

    #[test]
    fn windowize_too_short() {
        assert!(matches!(
            windowize(&[1.0, 2.0], 2),
            Err(Error::InsufficientHistory { len: 2, window: 2 })
        ));
    }

    #[test]
    fn knn_sorted_and_capped() {
        // predictors 1,2,3 from series [1,2,3,4] with w=1
        let set = windowize(&[1.0, 2.0, 3.0, 4.0], 1).unwrap();
        let nn = knn_select(&[0.0], &set, 2);
        assert_eq!(
            nn,
            vec![
                Neighbor {
                    row: 0,
                    distance: 1.0
                },
                Neighbor {
                    row: 1,
                    distance: 2.0
                }
            ]
        );
        assert_eq!(knn_select(&[0.0], &set, 5).len(), 3);
        let nn = knn_select(&[2.0], &set, 1);
        assert_eq!(
            nn[0],
            Neighbor {
                row: 1,
                distance: 0.0
            }
        );
    }

    #[test]
    fn knn_ties_prefer_older_rows() {
        // predictors 1,3,1,3: query 2 is equidistant from all
        let set = windowize(&[1.0, 3.0, 1.0, 3.0, 0.0], 1).unwrap();
        let nn = knn_select(&[2.0], &set, 2);
        assert_eq!(nn.iter().map(|n| n.row).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn kernel_examples() {
        let h = 0.7;
        let w = kernel_weights(&[0.0, h, h]);
        assert_eq!(w[0], 1.0);
        assert!(close(w[1], (-1.0f64).exp(), 1e-15));
        assert!(close(w[2], (-1.0f64).exp(), 1e-15));

        assert_eq!(kernel_weights(&[0.0, 0.0, 0.0]), vec![1.0; 3]);

        let w = kernel_weights(&[1.0, 2.0, 4.0]);
        let expected = [(-0.25f64).exp(), (-0.5f64).exp(), (-1.0f64).exp()];
        for (a, b) in w.iter().zip(expected) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn exact_line_without_ridge() {
        let x1 = [1.0];
        let x2 = [2.0];
        let beta = fit_local_linear([(2.0, &x1[..]), (4.0, &x2[..])], &[1.0, 1.0], 0.0).unwrap();
        assert!(beta[0].abs() < 1e-12);
        assert!((beta[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_labels_give_flat_fit() {
        let xs = [[0.9, 1.1], [1.05, 0.97], [1.2, 1.0], [0.8, 0.95]];
        let beta = fit_local_linear(
            xs.iter().map(|x| (1.3, &x[..])),
            &[1.0, 0.5, 0.25, 0.9],
            0.01,
        )
        .unwrap();
        assert!((beta[0] - 1.3).abs() < 1e-12);
        assert!(beta[1].abs() < 1e-12 && beta[2].abs() < 1e-12);
    }

    #[test]
    fn singular_without_ridge() {
        let x = [1.0];
        let r = fit_local_linear([(1.0, &x[..]), (2.0, &x[..])], &[1.0, 1.0], 0.0);
        assert!(matches!(r, Err(Error::Singular)));
        // ridge makes the same system solvable
        assert!(fit_local_linear([(1.0, &x[..]), (2.0, &x[..])], &[1.0, 1.0], 0.01).is_ok());
    }

    #[test]
    fn constant_series_predicts_one() {
        let s = vec![1.0; 20];
        for (k, w) in [(1, 1), (3, 2), (10, 5)] {
            let e = expert_predict(&s, 15, ExpertSpec::new(k, w).unwrap()).unwrap();
            assert!((e.value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn alternating_series_single_neighbour() {
        let s: Vec<f64> = (0..10)
            .map(|i| if i % 2 == 0 { 2.0 } else { 0.5 })
            .collect();
        // s[7] = 0.5, so period 8 follows a 0.5
        let e = expert_predict(&s, 8, ExpertSpec::new(1, 1).unwrap()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        let e = expert_predict(&s, 9, ExpertSpec::new(1, 1).unwrap()).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn insufficient_history() {
        let s = [1.0, 1.1, 0.9];
        assert!(matches!(
            expert_predict(&s, 2, ExpertSpec::new(1, 2).unwrap()),
            Err(Error::InsufficientHistory { .. })
        ));
        assert!(expert_predict(&s, 3, ExpertSpec::new(1, 2).unwrap()).is_ok());
    }

    #[test]
    fn shared_search_matches_single_expert() {
        let s: Vec<f64> = (0..40)
            .map(|i| 1.0 + 0.03 * ((i * 7 % 11) as f64 - 5.0) / 5.0)
            .collect();
        let w = 3;
        let full = windowize(&s, w).unwrap();
        let period = 30;
        let rows = period - w;
        let query = query_window(&s, period, w);
        let ks = [1, 2, 5, 8, 100];
        let shared = predict_from_window(&full, rows, &query, &ks, DEFAULT_RIDGE).unwrap();
        for (k, v) in ks.iter().zip(shared) {
            let single = expert_predict(&s, period, ExpertSpec::new(*k, w).unwrap()).unwrap();
            assert_eq!(single.value, v);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(ExpertSpec::new(0, 1).is_err());
        assert!(ExpertSpec::new(1, 0).is_err());
        assert!(ExpertSpec::with_ridge(1, 1, -1.0).is_err());
        let spec = ExpertSpec::new(3, 2).unwrap();
        assert_eq!(spec.ridge, 0.01);
        assert_eq!(spec.degree(), 1);
    }
}
