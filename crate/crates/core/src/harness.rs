//! Configured runs: the strategy, its benchmarks, `m` sweeps and the files
//! they are written to.
//!
//! Output files (all CSVs carry shortest round-trip decimals, so identical
//! inputs give byte-identical files):
//!
//! * `wealth.csv`: `period,date,S_lolrec,S_equal,S_bnh`, period 0 is the start
//! * `weights.csv`: `period,date,cash,<tickers...>`
//! * `committees.csv`: per-asset committee wealth against buy-and-hold
//! * `report.txt` / `report.csv`: summary metrics per strategy
//! * `sweep.csv`: `m,final_wealth,std` when a sweep is requested
//! * `estimates.csv`: every expert estimate, when requested

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::committee::{CommitteeSpec, Voting};
use crate::error::{Error, Result};
use crate::market_data::{load_market, DataKind, MarketMatrix};
use crate::metrics::{
    committee_report, period_return_stats, PerformanceReport, DEFAULT_YEARS_DIVISOR,
};
use crate::portfolio::{BacktestLedger, EstimatePanel, PortfolioVector};

/// Rebalances to `1/d` in every asset each period.
pub fn run_equal_weight_benchmark(market: &MarketMatrix) -> Result<BacktestLedger> {
    let d = market.n_assets();
    BacktestLedger::from_portfolios(
        market,
        vec![PortfolioVector::uniform(d); market.n_periods()],
    )
}

/// Buys `initial` (uniform when `None`) once and never rebalances. The
/// recorded portfolio vectors are the drifted holdings at the start of each
/// period.
pub fn run_buy_and_hold_benchmark(
    market: &MarketMatrix,
    initial: Option<&[f64]>,
) -> Result<BacktestLedger> {
    let d = market.n_assets();
    let start: Vec<f64> = match initial {
        Some(w) => {
            if w.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: w.len(),
                });
            }
            let total: f64 = w.iter().sum();
            if w.iter().any(|x| !(*x >= 0.0)) || !(total > 0.0) {
                return Err(Error::InvalidParameter(
                    "buy-and-hold weights must be non-negative with a positive sum".into(),
                ));
            }
            w.iter().map(|x| x / total).collect()
        }
        None => vec![1.0 / d as f64; d],
    };

    let mut holdings = start;
    let mut portfolios = Vec::with_capacity(market.n_periods());
    for row in &market.relatives {
        let total: f64 = holdings.iter().sum();
        portfolios.push(if total > 0.0 {
            PortfolioVector {
                weights: holdings.iter().map(|h| h / total).collect(),
                cash: 0.0,
            }
        } else {
            PortfolioVector::all_cash(d)
        });
        for (h, x) in holdings.iter_mut().zip(row) {
            *h *= x;
        }
    }
    BacktestLedger::from_portfolios(market, portfolios)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub m: usize,
    pub final_wealth: f64,
    pub std: f64,
}

/// One backtest per `m` (sorted, duplicates dropped) over a shared panel.
pub fn sweep_from_panel(
    panel: &EstimatePanel,
    market: &MarketMatrix,
    m_values: &[usize],
) -> Result<Vec<SweepRow>> {
    if m_values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one m".into()));
    }
    let mut ms = m_values.to_vec();
    ms.sort_unstable();
    ms.dedup();
    ms.into_iter()
        .map(|m| {
            let ledger = panel.backtest(market, m)?;
            Ok(SweepRow {
                m,
                final_wealth: ledger.final_wealth(),
                std: period_return_stats(&ledger.wealth)?.std,
            })
        })
        .collect()
}

pub fn sweep_m(
    market: &MarketMatrix,
    spec: &CommitteeSpec,
    m_values: &[usize],
) -> Result<Vec<SweepRow>> {
    if m_values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one m".into()));
    }
    let panel = EstimatePanel::build(market, spec, false)?;
    sweep_from_panel(&panel, market, m_values)
}

/// Parses `a..b` (inclusive), `n`, or comma-separated mixtures of both into a
/// sorted set of positive integers.
pub fn parse_int_set(text: &str) -> Result<Vec<usize>> {
    let bad = |part: &str| Error::InvalidParameter(format!("cannot parse `{part}` in `{text}`"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad(part))?;
            let b: usize = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .map_err(|_| bad(part))?;
            if a > b {
                return Err(bad(part));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad(part))?);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "empty integer set `{text}`"
        )));
    }
    if out.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "`{text}`: values must be at least 1"
        )));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Benchmarks {
    pub equal_weight: bool,
    pub buy_and_hold: bool,
}

impl Default for Benchmarks {
    fn default() -> Self {
        Self {
            equal_weight: true,
            buy_and_hold: true,
        }
    }
}

impl std::str::FromStr for Benchmarks {
    type Err = Error;

    /// Comma list of `equal`, `bnh`; `none` or `all` also accepted.
    fn from_str(s: &str) -> Result<Self> {
        let mut b = Benchmarks {
            equal_weight: false,
            buy_and_hold: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.to_ascii_lowercase().as_str() {
                "equal" | "equal-weight" | "ew" => b.equal_weight = true,
                "bnh" | "buy-and-hold" => b.buy_and_hold = true,
                "all" => b = Benchmarks::default(),
                "none" => {}
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown benchmark `{other}` (expected equal, bnh, all or none)"
                    )))
                }
            }
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub data_kind: DataKind,
    pub date_range: Option<(NaiveDate, NaiveDate)>,
    pub ks: Vec<usize>,
    pub ws: Vec<usize>,
    pub voting: Voting,
    pub m: usize,
    pub sweep_m: Vec<usize>,
    pub years_divisor: f64,
    pub output_dir: PathBuf,
    pub initial_capital: f64,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub benchmarks: Benchmarks,
    pub dump_estimates: bool,
}

impl RunConfig {
    pub fn new(data_path: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_path: data_path.into(),
            data_kind: DataKind::Prices,
            date_range: None,
            ks: vec![1, 2, 3],
            ws: vec![1, 2, 3],
            voting: Voting::Average,
            m: 10,
            sweep_m: Vec::new(),
            years_divisor: DEFAULT_YEARS_DIVISOR,
            output_dir: output_dir.into(),
            initial_capital: 1.0,
            threads: None,
            benchmarks: Benchmarks::default(),
            dump_estimates: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.sweep_m.contains(&0) {
            return Err(Error::InvalidParameter("m must be at least 1".into()));
        }
        if !(self.years_divisor > 0.0 && self.years_divisor.is_finite()) {
            return Err(Error::InvalidParameter(
                "years divisor must be positive".into(),
            ));
        }
        if !(self.initial_capital > 0.0 && self.initial_capital.is_finite()) {
            return Err(Error::InvalidParameter(
                "initial capital must be positive".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// In-memory results of [`run`], before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub market: MarketMatrix,
    pub panel: EstimatePanel,
    pub lolrec: BacktestLedger,
    pub equal_weight: Option<BacktestLedger>,
    pub buy_and_hold: Option<BacktestLedger>,
    pub sweep: Vec<SweepRow>,
}

/// Loads the data and computes every requested ledger.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let market = load_market(&config.data_path, config.data_kind, config.date_range)?;
    let spec = CommitteeSpec::new(&config.ks, &config.ws, config.voting)?;
    let compute = || -> Result<RunOutput> {
        let panel = EstimatePanel::build(&market, &spec, config.dump_estimates)?;
        let lolrec = panel.backtest(&market, config.m)?;
        let sweep = if config.sweep_m.is_empty() {
            Vec::new()
        } else {
            sweep_from_panel(&panel, &market, &config.sweep_m)?
        };
        let equal_weight = config
            .benchmarks
            .equal_weight
            .then(|| run_equal_weight_benchmark(&market))
            .transpose()?;
        let buy_and_hold = config
            .benchmarks
            .buy_and_hold
            .then(|| run_buy_and_hold_benchmark(&market, None))
            .transpose()?;
        Ok(RunOutput {
            market: market.clone(),
            panel,
            lolrec,
            equal_weight,
            buy_and_hold,
            sweep,
        })
    };
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(compute),
        None => compute(),
    }
}

/// Runs the configuration and writes every output file. Returns the paths
/// written, in a fixed order.
pub fn run(config: &RunConfig) -> Result<(RunOutput, Vec<PathBuf>)> {
    let output = execute(config)?;
    let written = write_outputs(config, &output)?;
    Ok((output, written))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_csv(path: &Path, rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_owned(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

fn date_text(market: &MarketMatrix, period: usize) -> String {
    let date = if period == 0 {
        market.origin
    } else {
        market.dates.get(period - 1).copied()
    };
    date.map(|d| d.to_string()).unwrap_or_default()
}

pub fn strategy_label(voting: Voting) -> String {
    format!("lolrec-{voting}")
}

pub fn write_outputs(config: &RunConfig, out: &RunOutput) -> Result<Vec<PathBuf>> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let cap = config.initial_capital;
    let market = &out.market;
    let mut written = Vec::new();

    let path = dir.join("wealth.csv");
    let opt = |ledger: &Option<BacktestLedger>, i: usize| {
        ledger
            .as_ref()
            .map(|l| (cap * l.wealth[i]).to_string())
            .unwrap_or_default()
    };
    let header = ["period", "date", "S_lolrec", "S_equal", "S_bnh"]
        .map(String::from)
        .to_vec();
    write_csv(
        &path,
        std::iter::once(header).chain((0..out.lolrec.wealth.len()).map(|i| {
            vec![
                i.to_string(),
                date_text(market, i),
                (cap * out.lolrec.wealth[i]).to_string(),
                opt(&out.equal_weight, i),
                opt(&out.buy_and_hold, i),
            ]
        })),
    )?;
    written.push(path);

    let path = dir.join("weights.csv");
    let mut header = vec!["period".to_string(), "date".into(), "cash".into()];
    header.extend(market.tickers.iter().cloned());
    write_csv(
        &path,
        std::iter::once(header).chain(out.lolrec.portfolio_history.iter().enumerate().map(
            |(t, b)| {
                let mut row = vec![
                    (t + 1).to_string(),
                    date_text(market, t + 1),
                    b.cash.to_string(),
                ];
                row.extend(b.weights.iter().map(f64::to_string));
                row
            },
        )),
    )?;
    written.push(path);

    let path = dir.join("committees.csv");
    let header = [
        "ticker",
        "committee_wealth",
        "buy_and_hold_wealth",
        "relative_performance",
        "average_weight",
        "times_selected",
    ]
    .map(String::from)
    .to_vec();
    let rows = committee_report(&out.lolrec, market)?;
    write_csv(
        &path,
        std::iter::once(header).chain(rows.into_iter().map(|r| {
            vec![
                r.ticker,
                r.committee_wealth.to_string(),
                r.buy_and_hold_wealth.to_string(),
                r.relative_performance.to_string(),
                r.average_weight.to_string(),
                r.times_selected.to_string(),
            ]
        })),
    )?;
    written.push(path);

    let mut reports = vec![(
        strategy_label(config.voting),
        PerformanceReport::from_wealth(&out.lolrec.wealth, config.years_divisor)?,
    )];
    if let Some(l) = &out.equal_weight {
        reports.push((
            "equal-weight".into(),
            PerformanceReport::from_wealth(&l.wealth, config.years_divisor)?,
        ));
    }
    if let Some(l) = &out.buy_and_hold {
        reports.push((
            "buy-and-hold".into(),
            PerformanceReport::from_wealth(&l.wealth, config.years_divisor)?,
        ));
    }
    let metrics = report_rows(&reports, cap);

    let path = dir.join("report.csv");
    let mut header = vec!["metric".to_string()];
    header.extend(reports.iter().map(|(name, _)| name.clone()));
    write_csv(
        &path,
        std::iter::once(header).chain(metrics.iter().map(|(name, values)| {
            let mut row = vec![name.to_string()];
            row.extend(values.iter().map(f64::to_string));
            row
        })),
    )?;
    written.push(path);

    let path = dir.join("report.txt");
    let text = render_report(config, market, &reports, &metrics);
    fs::write(&path, text).map_err(io_err(&path))?;
    written.push(path);

    if !out.sweep.is_empty() {
        let path = dir.join("sweep.csv");
        let header = ["m", "final_wealth", "std"].map(String::from).to_vec();
        write_csv(
            &path,
            std::iter::once(header).chain(out.sweep.iter().map(|r| {
                vec![
                    r.m.to_string(),
                    (cap * r.final_wealth).to_string(),
                    r.std.to_string(),
                ]
            })),
        )?;
        written.push(path);
    }

    if let Some(experts) = &out.panel.expert_estimates {
        let path = dir.join("estimates.csv");
        let header = ["period", "ticker", "k", "w", "estimate"]
            .map(String::from)
            .to_vec();
        let specs: Vec<_> = out.panel.spec.experts().collect();
        let first = out.panel.first_tradable;
        let rows = (0..experts.first().map_or(0, Vec::len)).flat_map(|offset| {
            let specs = &specs;
            experts.iter().enumerate().flat_map(move |(j, per_asset)| {
                per_asset[offset].iter().zip(specs).map(move |(e, s)| {
                    vec![
                        (first + offset + 1).to_string(),
                        market.tickers[j].clone(),
                        s.k.to_string(),
                        s.w.to_string(),
                        e.to_string(),
                    ]
                })
            })
        });
        write_csv(&path, std::iter::once(header).chain(rows))?;
        written.push(path);
    }

    Ok(written)
}

type MetricRow = (&'static str, Vec<f64>);

fn report_rows(reports: &[(String, PerformanceReport)], cap: f64) -> Vec<MetricRow> {
    let col = |f: &dyn Fn(&PerformanceReport) -> f64| reports.iter().map(|(_, r)| f(r)).collect();
    vec![
        ("final_wealth", col(&|r| cap * r.final_wealth)),
        ("aay_gross", col(&|r| r.aay_gross)),
        ("aay_net", col(&|r| r.aay_net)),
        ("min_capital", col(&|r| cap * r.min_capital)),
        ("worst_period_return", col(&|r| r.worst_period_return)),
        ("std_period_returns", col(&|r| r.std_period_returns)),
        ("mean_period_return", col(&|r| r.mean_period_return)),
        ("years", col(&|r| r.years)),
    ]
}

fn render_report(
    config: &RunConfig,
    market: &MarketMatrix,
    reports: &[(String, PerformanceReport)],
    metrics: &[MetricRow],
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "assets: {}  periods: {}  K: {:?}  W: {:?}  voting: {}  m: {}",
        market.n_assets(),
        market.n_periods(),
        config.ks,
        config.ws,
        config.voting,
        config.m
    );
    let _ = writeln!(s, "years = periods / {}", config.years_divisor);
    let _ = writeln!(s);

    fn label(name: &str) -> &str {
        match name {
            "final_wealth" => "final wealth",
            "aay_gross" => "AAY gross, S^(1/N)",
            "aay_net" => "AAY net, S^(1/N) - 1",
            "min_capital" => "minimum of capital",
            "worst_period_return" => "worst 1-period return",
            "std_period_returns" => "std of 1-period returns",
            "mean_period_return" => "mean 1-period return",
            "years" => "years (N)",
            other => other,
        }
    }
    let percent = |name: &str| matches!(name, "aay_net" | "worst_period_return");

    let first_width = metrics
        .iter()
        .map(|(n, _)| label(n).len())
        .max()
        .unwrap_or(0);
    let width = reports
        .iter()
        .map(|(n, _)| n.len())
        .max()
        .unwrap_or(0)
        .max(14);
    let _ = write!(s, "{:<first_width$}", "");
    for (name, _) in reports {
        let _ = write!(s, "  {name:>width$}");
    }
    let _ = writeln!(s);
    for (name, values) in metrics {
        let _ = write!(s, "{:<first_width$}", label(name));
        for v in values {
            let cell = if percent(name) {
                format!("{:.2}%", 100.0 * v)
            } else {
                format!("{v:.6}")
            };
            let _ = write!(s, "  {cell:>width$}");
        }
        let _ = writeln!(s);
    }
    s
}
