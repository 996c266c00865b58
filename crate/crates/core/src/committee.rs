//! Expert committees: one per asset, one expert per `(k, w)` pair, combined
//! by a voting function.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::regression::{ExpertSpec, DEFAULT_RIDGE};

/// Histogram bin width used by [`Voting::Mode`], in price-relative units.
pub const MODE_BIN_WIDTH: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Voting {
    Average,
    Median,
    Mode,
}

impl Voting {
    pub const ALL: [Voting; 3] = [Voting::Average, Voting::Median, Voting::Mode];

    pub fn name(self) -> &'static str {
        match self {
            Voting::Average => "average",
            Voting::Median => "median",
            Voting::Mode => "mode",
        }
    }
}

impl fmt::Display for Voting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Voting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "average" | "mean" => Ok(Voting::Average),
            "median" => Ok(Voting::Median),
            "mode" => Ok(Voting::Mode),
            other => Err(Error::InvalidParameter(format!(
                "unknown voting function `{other}` (expected average, median or mode)"
            ))),
        }
    }
}

/// The `K x W` grid of experts an asset's committee holds, and how it votes.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitteeSpec {
    ks: Vec<usize>,
    ws: Vec<usize>,
    pub voting: Voting,
    pub ridge: f64,
}

impl CommitteeSpec {
    /// Duplicate values are dropped; both sets are kept sorted.
    pub fn new(ks: &[usize], ws: &[usize], voting: Voting) -> Result<Self> {
        Self::with_ridge(ks, ws, voting, DEFAULT_RIDGE)
    }

    pub fn with_ridge(ks: &[usize], ws: &[usize], voting: Voting, ridge: f64) -> Result<Self> {
        let mut ks = ks.to_vec();
        let mut ws = ws.to_vec();
        ks.sort_unstable();
        ks.dedup();
        ws.sort_unstable();
        ws.dedup();
        if ks.is_empty() || ws.is_empty() {
            return Err(Error::InvalidParameter(
                "committee needs at least one k and one w".into(),
            ));
        }
        // validates every member
        ExpertSpec::with_ridge(ks[0], ws[0], ridge)?;
        Ok(Self {
            ks,
            ws,
            voting,
            ridge,
        })
    }

    pub fn ks(&self) -> &[usize] {
        &self.ks
    }

    pub fn ws(&self) -> &[usize] {
        &self.ws
    }

    pub fn size(&self) -> usize {
        self.ks.len() * self.ws.len()
    }

    pub fn max_w(&self) -> usize {
        *self.ws.last().unwrap()
    }

    /// Members in `(w, k)` order, the order estimates are produced in.
    pub fn experts(&self) -> impl Iterator<Item = ExpertSpec> + '_ {
        self.ws.iter().flat_map(move |&w| {
            self.ks.iter().map(move |&k| ExpertSpec {
                k,
                w,
                ridge: self.ridge,
            })
        })
    }
}

/// Combines expert estimates into the committee estimate.
pub fn vote(estimates: &[f64], voting: Voting) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot vote on no estimates".into(),
        ));
    }
    if let Some(x) = estimates.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite estimate {x}")));
    }
    Ok(match voting {
        Voting::Average => mean(estimates),
        Voting::Median => median(estimates),
        Voting::Mode => histogram_mode(estimates, MODE_BIN_WIDTH),
    })
}

/// Summed in sorted order so the result does not depend on expert order.
fn mean(estimates: &[f64]) -> f64 {
    let mut sorted = estimates.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    sorted.iter().sum::<f64>() / sorted.len() as f64
}

fn median(estimates: &[f64]) -> f64 {
    let mut sorted = estimates.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn bin_of(x: f64, width: f64) -> i64 {
    // the nudge keeps grid points such as 1.01 in their own bin
    (x / width + 1e-9).floor() as i64
}

/// Midpoint of the most populated fixed-width bin on the grid `[i*width,
/// (i+1)*width)`. Ties go to the bin whose midpoint is nearest the median,
/// then to the lower bin.
pub fn histogram_mode(estimates: &[f64], width: f64) -> f64 {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &x in estimates {
        *counts.entry(bin_of(x, width)).or_default() += 1;
    }
    let centre = median(estimates);
    let midpoint = |bin: i64| (bin as f64 + 0.5) * width;
    let top = counts.values().copied().max().unwrap_or(0);
    let best = counts
        .iter()
        .filter(|(_, &c)| c == top)
        .map(|(&bin, _)| bin)
        .min_by(|a, b| {
            let da = (midpoint(*a) - centre).abs();
            let db = (midpoint(*b) - centre).abs();
            da.total_cmp(&db).then(a.cmp(b))
        })
        .expect("estimates are non-empty");
    midpoint(best)
}

/// Accumulated wealth of a strategy that holds the asset whenever its
/// committee predicts growth and sits in cash otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommitteeState {
    pub asset: usize,
    pub wealth: f64,
}

impl CommitteeState {
    pub fn new(asset: usize) -> Self {
        Self { asset, wealth: 1.0 }
    }
}

/// One period of committee wealth: invest when the committee estimate is
/// above 1.0, otherwise stay in cash.
pub fn update_committee_wealth(
    state: CommitteeState,
    voted_estimate: f64,
    realized_relative: f64,
) -> CommitteeState {
    let growth = if voted_estimate > 1.0 {
        realized_relative
    } else {
        1.0
    };
    CommitteeState {
        wealth: state.wealth * growth,
        ..state
    }
}
