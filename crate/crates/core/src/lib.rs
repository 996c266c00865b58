//! Sequential portfolio selection driven by per-asset committees of local
//! linear regression experts.
//!
//! The pipeline runs bottom-up:
//!
//! * [`market_data`] loads prices (or pre-computed price relatives) from CSV
//!   and produces a [`MarketMatrix`].
//! * [`regression`] builds one expert `E(k, w)`: a windowed, kNN-localised,
//!   exponentially weighted ridge fit that predicts the next price relative.
//! * [`committee`] votes the experts of one asset into a single estimate and
//!   tracks the wealth of a strategy that follows that committee alone.
//! * [`portfolio`] turns the committee estimates into portfolio vectors
//!   (truncation, top-`m` selection, wealth weighting, cash fallback) and
//!   compounds wealth.
//! * [`metrics`] computes annual yield, drawdown-style statistics and
//!   per-committee reports.
//! * [`harness`] wires everything into configured runs with benchmarks,
//!   `m` sweeps and CSV/text output.

pub mod committee;
pub mod error;
pub mod harness;
pub mod market_data;
pub mod metrics;
pub mod portfolio;
pub mod regression;

pub use committee::{CommitteeSpec, CommitteeState, Voting};
pub use error::{Error, Result};
pub use market_data::{MarketMatrix, PriceTable};
pub use portfolio::{BacktestLedger, EstimatePanel, PortfolioVector};
pub use regression::ExpertSpec;
