//! Performance measures: annual yield, one-period return statistics and
//! per-committee reports.

use crate::error::{Error, Result};
use crate::market_data::MarketMatrix;
use crate::portfolio::BacktestLedger;

/// Trading days per year used to convert period counts to years.
pub const DEFAULT_YEARS_DIVISOR: f64 = 252.0;

/// Average annual yield in both conventions. `gross` is `S^(1/N)`, `net` is
/// `gross - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnualYield {
    pub gross: f64,
    pub net: f64,
}

pub fn aay(final_wealth: f64, years: f64) -> Result<AnnualYield> {
    if !(final_wealth > 0.0 && final_wealth.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "final wealth must be positive, got {final_wealth}"
        )));
    }
    if !(years > 0.0 && years.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "years must be positive, got {years}"
        )));
    }
    let gross = final_wealth.powf(years.recip());
    Ok(AnnualYield {
        gross,
        net: gross - 1.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodStats {
    /// Smallest one-period return as a signed fraction (`-0.17` for -17%).
    pub worst: f64,
    /// Population standard deviation of the gross returns `S_i / S_{i-1}`.
    pub std: f64,
    pub mean: f64,
    /// Lowest wealth reached, including the starting value.
    pub min_capital: f64,
}

pub fn period_return_stats(wealth: &[f64]) -> Result<PeriodStats> {
    if wealth.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: wealth.len(),
        });
    }
    let returns: Vec<f64> = wealth.windows(2).map(|p| p[1] / p[0]).collect();
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok(PeriodStats {
        worst: returns.iter().copied().fold(f64::INFINITY, f64::min) - 1.0,
        std: var.sqrt(),
        mean,
        min_capital: wealth.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

/// The columns reported for one strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceReport {
    pub final_wealth: f64,
    pub aay_gross: f64,
    pub aay_net: f64,
    pub min_capital: f64,
    pub worst_period_return: f64,
    pub std_period_returns: f64,
    pub mean_period_return: f64,
    pub years: f64,
}

impl PerformanceReport {
    /// `years_divisor` is the number of periods per year.
    pub fn from_wealth(wealth: &[f64], years_divisor: f64) -> Result<Self> {
        if !(years_divisor > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "years divisor must be positive, got {years_divisor}"
            )));
        }
        let stats = period_return_stats(wealth)?;
        let years = (wealth.len() - 1) as f64 / years_divisor;
        let final_wealth = *wealth.last().unwrap();
        // wiped-out runs have no meaningful yield; report -100%
        let yield_ = if final_wealth > 0.0 {
            aay(final_wealth, years)?
        } else {
            AnnualYield {
                gross: 0.0,
                net: -1.0,
            }
        };
        Ok(Self {
            final_wealth,
            aay_gross: yield_.gross,
            aay_net: yield_.net,
            min_capital: stats.min_capital,
            worst_period_return: stats.worst,
            std_period_returns: stats.std,
            mean_period_return: stats.mean,
            years,
        })
    }
}

/// One row of the per-committee report.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeRow {
    pub ticker: String,
    pub committee_wealth: f64,
    pub buy_and_hold_wealth: f64,
    pub relative_performance: f64,
    pub average_weight: f64,
    pub times_selected: usize,
}

pub fn committee_report(
    ledger: &BacktestLedger,
    market: &MarketMatrix,
) -> Result<Vec<CommitteeRow>> {
    if ledger.committee_wealth.len() != market.n_assets() {
        return Err(Error::Dimension {
            expected: market.n_assets(),
            got: ledger.committee_wealth.len(),
        });
    }
    Ok(market
        .tickers
        .iter()
        .enumerate()
        .map(|(j, ticker)| {
            let committee_wealth = *ledger.committee_wealth[j].last().unwrap();
            let buy_and_hold_wealth: f64 = market.relatives.iter().map(|row| row[j]).product();
            CommitteeRow {
                ticker: ticker.clone(),
                committee_wealth,
                buy_and_hold_wealth,
                relative_performance: committee_wealth / buy_and_hold_wealth,
                average_weight: ledger.average_weights[j],
                times_selected: ledger.selection_counts[j],
            }
        })
        .collect())
}
