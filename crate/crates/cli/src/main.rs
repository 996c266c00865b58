use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lolrec_core::harness::{self, parse_int_set, Benchmarks, RunConfig};
use lolrec_core::market_data::{parse_date, DataKind, Date};
use lolrec_core::metrics::{PerformanceReport, DEFAULT_YEARS_DIVISOR};
use lolrec_core::Voting;

/// A parsed `a..b` / comma-list flag value.
#[derive(Debug, Clone)]
struct IntSet(Vec<usize>);

fn int_set(s: &str) -> Result<IntSet, String> {
    parse_int_set(s).map(IntSet).map_err(|e| e.to_string())
}

/// Backtest local linear regression ensemble committees on daily data.
#[derive(Debug, Parser)]
#[command(name = "lolrec", version)]
struct Args {
    /// CSV with a `date` column followed by one column per ticker.
    #[arg(long)]
    data: PathBuf,

    /// Whether the CSV holds prices or pre-computed price relatives.
    #[arg(long, default_value = "prices", value_parser = parse_kind)]
    data_kind: DataKind,

    /// First date to keep (inclusive).
    #[arg(long, value_parser = parse_date)]
    from: Option<Date>,

    /// Last date to keep (inclusive).
    #[arg(long, value_parser = parse_date)]
    to: Option<Date>,

    /// Neighbour counts, e.g. `1..10` or `1,2,5`.
    #[arg(long, default_value = "1..3", value_parser = int_set)]
    k: IntSet,

    /// Window sizes, e.g. `1..5`.
    #[arg(long, default_value = "1..3", value_parser = int_set)]
    w: IntSet,

    #[arg(long, default_value = "average", value_parser = parse_voting)]
    voting: Voting,

    /// Assets held per period. A range also sweeps over it; the main run
    /// uses its smallest value.
    #[arg(long, default_value = "10", value_parser = int_set)]
    m: IntSet,

    /// Values of m to sweep, written to sweep.csv.
    #[arg(long, value_parser = int_set)]
    sweep_m: Option<IntSet>,

    /// Periods per year when converting to annual yield.
    #[arg(long, default_value_t = DEFAULT_YEARS_DIVISOR)]
    years_divisor: f64,

    #[arg(long, default_value = "lolrec-out")]
    output: PathBuf,

    /// Worker threads for expert fitting; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,

    /// Comma list of `equal`, `bnh`, `all` or `none`.
    #[arg(long, default_value = "all", value_parser = parse_benchmarks)]
    benchmarks: Benchmarks,

    #[arg(long, default_value_t = 1.0)]
    initial_capital: f64,

    /// Also write every expert estimate to estimates.csv.
    #[arg(long)]
    dump_estimates: bool,
}

fn parse_kind(s: &str) -> Result<DataKind, String> {
    s.parse().map_err(|e: lolrec_core::Error| e.to_string())
}

fn parse_voting(s: &str) -> Result<Voting, String> {
    s.parse().map_err(|e: lolrec_core::Error| e.to_string())
}

fn parse_benchmarks(s: &str) -> Result<Benchmarks, String> {
    s.parse().map_err(|e: lolrec_core::Error| e.to_string())
}

impl Args {
    fn into_config(self) -> RunConfig {
        let date_range = match (self.from, self.to) {
            (None, None) => None,
            (from, to) => Some((from.unwrap_or(Date::MIN), to.unwrap_or(Date::MAX))),
        };
        let mut sweep = self.sweep_m.map(|s| s.0).unwrap_or_default();
        let m = self.m.0;
        if m.len() > 1 {
            sweep.extend(&m);
            sweep.sort_unstable();
            sweep.dedup();
        }
        let mut config = RunConfig::new(self.data, self.output);
        config.data_kind = self.data_kind;
        config.date_range = date_range;
        config.ks = self.k.0;
        config.ws = self.w.0;
        config.voting = self.voting;
        config.m = m[0];
        config.sweep_m = sweep;
        config.years_divisor = self.years_divisor;
        config.initial_capital = self.initial_capital;
        config.threads = self.threads;
        config.benchmarks = self.benchmarks;
        config.dump_estimates = self.dump_estimates;
        config
    }
}

fn summary_line(name: &str, r: &PerformanceReport, capital: f64) -> String {
    format!(
        "{name:<16} final {:>14.6}  AAY {:>8.2}%  min capital {:>10.6}  worst period {:>7.2}%",
        capital * r.final_wealth,
        100.0 * r.aay_net,
        capital * r.min_capital,
        100.0 * r.worst_period_return,
    )
}

fn main() -> ExitCode {
    let args = Args::parse();
    let config = args.into_config();
    let (output, written) = match harness::run(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("lolrec: {e}");
            return ExitCode::FAILURE;
        }
    };

    println!(
        "{} assets, {} periods, {} experts per committee, voting {}, m {}",
        output.market.n_assets(),
        output.market.n_periods(),
        output.panel.spec.size(),
        config.voting,
        config.m
    );
    let ledgers = [
        (harness::strategy_label(config.voting), Some(&output.lolrec)),
        ("equal-weight".to_string(), output.equal_weight.as_ref()),
        ("buy-and-hold".to_string(), output.buy_and_hold.as_ref()),
    ];
    for (name, ledger) in ledgers {
        let Some(ledger) = ledger else { continue };
        match PerformanceReport::from_wealth(&ledger.wealth, config.years_divisor) {
            Ok(r) => println!("{}", summary_line(&name, &r, config.initial_capital)),
            Err(e) => eprintln!("lolrec: {name}: {e}"),
        }
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    ExitCode::SUCCESS
}
