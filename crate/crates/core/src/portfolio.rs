//! Portfolio construction and the per-period backtest fold.
//!
//! Each period the committee estimates are truncated (anything below 1.0
//! becomes 0), the `m` largest survivors are selected, and each selected
//! asset gets weight proportional to `estimate * committee wealth`. When
//! nothing survives, the whole capital sits in cash for the period.
//!
//! Expert estimates and committee wealth do not depend on `m`, so they are
//! computed once into an [`EstimatePanel`] and replayed for every `m`.

use rayon::prelude::*;

use crate::committee::{update_committee_wealth, vote, CommitteeSpec, CommitteeState};
use crate::error::{Error, Result};
use crate::market_data::MarketMatrix;
use crate::regression::{predict_from_window, query_window, windowize};

/// Allocation for one period: either fully invested (`cash == 0`) or fully in
/// cash (`cash == 1`, all weights zero).
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioVector {
    pub weights: Vec<f64>,
    pub cash: f64,
}

impl PortfolioVector {
    pub fn uniform(d: usize) -> Self {
        Self {
            weights: vec![1.0 / d as f64; d],
            cash: 0.0,
        }
    }

    pub fn all_cash(d: usize) -> Self {
        Self {
            weights: vec![0.0; d],
            cash: 1.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum::<f64>() + self.cash
    }

    pub fn is_cash(&self) -> bool {
        self.cash == 1.0
    }
}

/// Zeroes estimates below 1.0 and absent ones; 1.0 itself passes.
pub fn truncate_estimates(voted: &[Option<f64>]) -> Vec<f64> {
    voted
        .iter()
        .map(|v| match v {
            Some(x) if *x >= 1.0 => *x,
            _ => 0.0,
        })
        .collect()
}

/// Indices of the up-to-`m` largest strictly positive entries, largest
/// first. Equal values keep the lower index first.
pub fn select_top_m(truncated: &[f64], m: usize) -> Vec<usize> {
    let mut candidates: Vec<usize> = (0..truncated.len())
        .filter(|&j| truncated[j] > 0.0)
        .collect();
    candidates.sort_by(|&a, &b| truncated[b].total_cmp(&truncated[a]).then(a.cmp(&b)));
    candidates.truncate(m);
    candidates
}

/// Weights proportional to `truncated[j] * committee_wealth[j]` over the
/// selected assets; all cash when those products sum to zero.
pub fn compute_weights(
    truncated: &[f64],
    selected: &[usize],
    committee_wealth: &[f64],
) -> PortfolioVector {
    let d = truncated.len();
    let mut weights = vec![0.0; d];
    for &j in selected {
        weights[j] = truncated[j] * committee_wealth[j];
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        for b in &mut weights {
            *b /= total;
        }
        PortfolioVector { weights, cash: 0.0 }
    } else {
        PortfolioVector::all_cash(d)
    }
}

/// Growth of capital over one period: `cash + sum(b_j * x_j)`.
pub fn portfolio_return(portfolio: &PortfolioVector, market_vector: &[f64]) -> Result<f64> {
    if portfolio.weights.len() != market_vector.len() {
        return Err(Error::Dimension {
            expected: portfolio.weights.len(),
            got: market_vector.len(),
        });
    }
    Ok(portfolio.cash
        + portfolio
            .weights
            .iter()
            .zip(market_vector)
            .map(|(b, x)| b * x)
            .sum::<f64>())
}

/// Everything a backtest produced.
///
/// `wealth` has one more entry than there are periods (`wealth[0] == 1`).
/// `committee_wealth[j][i]` is committee `j`'s wealth after `i` periods;
/// benchmark ledgers leave it empty. `selection_counts` and
/// `average_weights` cover the periods after warm-up; the average is taken
/// over the periods in which the asset was selected.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestLedger {
    pub wealth: Vec<f64>,
    pub period_returns: Vec<f64>,
    pub portfolio_history: Vec<PortfolioVector>,
    pub committee_wealth: Vec<Vec<f64>>,
    pub selection_counts: Vec<usize>,
    pub average_weights: Vec<f64>,
    pub first_tradable: usize,
}

impl BacktestLedger {
    /// Compounds a fixed sequence of portfolios over the market.
    pub fn from_portfolios(
        market: &MarketMatrix,
        portfolios: Vec<PortfolioVector>,
    ) -> Result<Self> {
        if portfolios.len() != market.n_periods() {
            return Err(Error::Dimension {
                expected: market.n_periods(),
                got: portfolios.len(),
            });
        }
        let mut wealth = Vec::with_capacity(portfolios.len() + 1);
        let mut period_returns = Vec::with_capacity(portfolios.len());
        wealth.push(1.0);
        for (b, x) in portfolios.iter().zip(&market.relatives) {
            let r = portfolio_return(b, x)?;
            period_returns.push(r);
            wealth.push(wealth.last().unwrap() * r);
        }
        let d = market.n_assets();
        Ok(Self {
            wealth,
            period_returns,
            portfolio_history: portfolios,
            committee_wealth: Vec::new(),
            selection_counts: vec![0; d],
            average_weights: vec![0.0; d],
            first_tradable: 0,
        })
    }

    pub fn final_wealth(&self) -> f64 {
        *self.wealth.last().unwrap()
    }
}

/// The `m`-independent part of a run: committee estimates per period and
/// asset, and committee wealth trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatePanel {
    pub spec: CommitteeSpec,
    /// First period with estimates for every expert; earlier periods are
    /// warm-up.
    pub first_tradable: usize,
    /// `voted[period][asset]`; `None` during warm-up.
    pub voted: Vec<Vec<Option<f64>>>,
    /// `committee_wealth[asset][i]`, wealth after `i` periods.
    pub committee_wealth: Vec<Vec<f64>>,
    /// `expert_estimates[asset][period - first_tradable][expert]`, experts in
    /// [`CommitteeSpec::experts`] order. Only kept on request.
    pub expert_estimates: Option<Vec<Vec<Vec<f64>>>>,
}

struct AssetTrack {
    voted: Vec<Option<f64>>,
    wealth: Vec<f64>,
    experts: Option<Vec<Vec<f64>>>,
}

fn track_asset(
    series: &[f64],
    asset: usize,
    spec: &CommitteeSpec,
    first_tradable: usize,
    keep_experts: bool,
) -> Result<AssetTrack> {
    let n = series.len();
    let windowed = spec
        .ws()
        .iter()
        .map(|&w| windowize(series, w))
        .collect::<Result<Vec<_>>>()?;

    let mut voted = vec![None; n];
    let mut experts = keep_experts.then(|| Vec::with_capacity(n - first_tradable));
    let mut estimates = Vec::with_capacity(spec.size());
    for (t, slot) in voted.iter_mut().enumerate().skip(first_tradable) {
        estimates.clear();
        for (set, &w) in windowed.iter().zip(spec.ws()) {
            let query = query_window(series, t, w);
            estimates.extend(predict_from_window(
                set,
                t - w,
                &query,
                spec.ks(),
                spec.ridge,
            )?);
        }
        *slot = Some(vote(&estimates, spec.voting)?);
        if let Some(all) = experts.as_mut() {
            all.push(estimates.clone());
        }
    }

    let mut state = CommitteeState::new(asset);
    let mut wealth = Vec::with_capacity(n + 1);
    wealth.push(state.wealth);
    for (v, &x) in voted.iter().zip(series) {
        // warm-up counts as cash
        state = update_committee_wealth(state, v.unwrap_or(1.0), x);
        wealth.push(state.wealth);
    }

    Ok(AssetTrack {
        voted,
        wealth,
        experts,
    })
}

impl EstimatePanel {
    /// Runs every expert of every committee over the market. Assets are
    /// processed in parallel on the current rayon pool; the result does not
    /// depend on the pool size.
    pub fn build(market: &MarketMatrix, spec: &CommitteeSpec, keep_experts: bool) -> Result<Self> {
        let n = market.n_periods();
        let first_tradable = spec.max_w() + 1;
        if n < first_tradable + 1 {
            return Err(Error::TooShort {
                needed: first_tradable + 1,
                got: n,
            });
        }
        let tracks = (0..market.n_assets())
            .into_par_iter()
            .map(|j| track_asset(&market.series(j), j, spec, first_tradable, keep_experts))
            .collect::<Result<Vec<_>>>()?;

        let voted = (0..n)
            .map(|t| tracks.iter().map(|tr| tr.voted[t]).collect())
            .collect();
        let mut committee_wealth = Vec::with_capacity(tracks.len());
        let mut expert_estimates = keep_experts.then(Vec::new);
        for track in tracks {
            committee_wealth.push(track.wealth);
            if let (Some(all), Some(e)) = (expert_estimates.as_mut(), track.experts) {
                all.push(e);
            }
        }
        Ok(Self {
            spec: spec.clone(),
            first_tradable,
            voted,
            committee_wealth,
            expert_estimates,
        })
    }

    pub fn n_periods(&self) -> usize {
        self.voted.len()
    }

    /// Replays the selection and weighting steps for one `m`.
    pub fn backtest(&self, market: &MarketMatrix, m: usize) -> Result<BacktestLedger> {
        if m == 0 {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        let n = market.n_periods();
        let d = market.n_assets();
        if n != self.n_periods() || d != self.committee_wealth.len() {
            return Err(Error::Dimension {
                expected: self.n_periods(),
                got: n,
            });
        }

        let mut portfolios = Vec::with_capacity(n);
        let mut selection_counts = vec![0usize; d];
        let mut weight_sums = vec![0.0; d];
        let mut wealth_now = vec![0.0; d];
        for t in 0..n {
            if t < self.first_tradable {
                portfolios.push(PortfolioVector::uniform(d));
                continue;
            }
            let truncated = truncate_estimates(&self.voted[t]);
            let selected = select_top_m(&truncated, m);
            for (j, w) in wealth_now.iter_mut().enumerate() {
                *w = self.committee_wealth[j][t];
            }
            let b = compute_weights(&truncated, &selected, &wealth_now);
            for &j in &selected {
                selection_counts[j] += 1;
                weight_sums[j] += b.weights[j];
            }
            portfolios.push(b);
        }

        let mut ledger = BacktestLedger::from_portfolios(market, portfolios)?;
        ledger.average_weights = weight_sums
            .iter()
            .zip(&selection_counts)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect();
        ledger.selection_counts = selection_counts;
        ledger.committee_wealth = self.committee_wealth.clone();
        ledger.first_tradable = self.first_tradable;
        Ok(ledger)
    }
}

/// Full strategy run: builds the estimate panel and replays it for `m`.
pub fn run_backtest(
    market: &MarketMatrix,
    spec: &CommitteeSpec,
    m: usize,
) -> Result<BacktestLedger> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    EstimatePanel::build(market, spec, false)?.backtest(market, m)
}
