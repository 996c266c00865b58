//! Price and price-relative ingestion.
//!
//! Both file kinds share one layout: a header `date,TICKER1,...,TICKERd`
//! followed by one row per trading day with ISO-8601 dates. Prices must be
//! strictly positive; relatives must be non-negative. Missing cells are
//! rejected, never imputed.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::error::{Error, Result};

pub type Date = NaiveDate;

/// Parses an ISO-8601 calendar date (`YYYY-MM-DD`).
pub fn parse_date(text: &str) -> std::result::Result<Date, chrono::ParseError> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
}

/// Adjusted closing prices, `n` days by `d` assets.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// Row-major, `prices[day][asset]`.
    pub prices: Vec<Vec<f64>>,
}

/// Price relatives `x[i][j] = p[i+1][j] / p[i][j]`.
///
/// `dates[i]` is the date at the end of period `i`. `origin` is the date the
/// first period starts from, when known (it is not recoverable from a
/// relatives file).
#[derive(Debug, Clone, PartialEq)]
pub struct MarketMatrix {
    pub tickers: Vec<String>,
    pub dates: Vec<NaiveDate>,
    pub origin: Option<NaiveDate>,
    pub relatives: Vec<Vec<f64>>,
}

impl PriceTable {
    pub fn n_days(&self) -> usize {
        self.prices.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }
}

impl MarketMatrix {
    /// Builds a matrix from raw relatives, validating shape and sign. Dates are
    /// synthesised as consecutive days from 1970-01-02 when `dates` is `None`.
    pub fn from_relatives(
        tickers: Vec<String>,
        relatives: Vec<Vec<f64>>,
        dates: Option<Vec<NaiveDate>>,
    ) -> Result<Self> {
        let d = tickers.len();
        if d == 0 {
            return Err(Error::InvalidParameter("market has no assets".into()));
        }
        for row in &relatives {
            if row.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: row.len(),
                });
            }
            if let Some(x) = row.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "price relative {x} is not a finite non-negative number"
                )));
            }
        }
        let dates = match dates {
            Some(dates) => {
                if dates.len() != relatives.len() {
                    return Err(Error::Dimension {
                        expected: relatives.len(),
                        got: dates.len(),
                    });
                }
                dates
            }
            None => synthetic_dates(relatives.len()),
        };
        Ok(Self {
            tickers,
            dates,
            origin: None,
            relatives,
        })
    }

    pub fn n_periods(&self) -> usize {
        self.relatives.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// The relatives of one asset over all periods.
    pub fn series(&self, asset: usize) -> Vec<f64> {
        self.relatives.iter().map(|row| row[asset]).collect()
    }
}

fn synthetic_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(1970, 1, 1).unwrap();
    (1..=n)
        .map(|i| start + chrono::Duration::days(i as i64))
        .collect()
}

/// Which kind of numbers a CSV holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Prices,
    Relatives,
}

impl std::str::FromStr for DataKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prices" => Ok(Self::Prices),
            "relatives" => Ok(Self::Relatives),
            other => Err(Error::InvalidParameter(format!(
                "unknown data kind `{other}` (expected prices or relatives)"
            ))),
        }
    }
}

struct RawGrid {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    values: Vec<Vec<f64>>,
}

fn read_grid(
    path: &Path,
    date_range: Option<(NaiveDate, NaiveDate)>,
    accept: impl Fn(f64) -> bool,
    requirement: &str,
) -> Result<RawGrid> {
    let path_buf = PathBuf::from(path);
    let csv_err = |source| Error::Csv {
        path: path_buf.clone(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;

    let header = reader.headers().map_err(csv_err)?.clone();
    if header.len() < 2 {
        return Err(Error::BadHeader {
            path: path_buf,
            message: "expected `date` followed by at least one ticker column".into(),
        });
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut seen = HashSet::new();
    for t in &tickers {
        if t.is_empty() {
            return Err(Error::BadHeader {
                path: path_buf,
                message: "empty ticker name in header".into(),
            });
        }
        if !seen.insert(t.as_str()) {
            return Err(Error::BadHeader {
                path: path_buf,
                message: format!("duplicate ticker `{t}`"),
            });
        }
    }

    let mut dates = Vec::new();
    let mut values = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = idx + 2;
        let bad = |column: &str, message: String| Error::BadCell {
            path: path_buf.clone(),
            row: line,
            column: column.to_owned(),
            message,
        };
        if record.len() != header.len() {
            return Err(bad(
                "*",
                format!("expected {} fields, found {}", header.len(), record.len()),
            ));
        }
        let date_text = &record[0];
        let date = parse_date(date_text)
            .map_err(|e| bad("date", format!("cannot parse date `{date_text}`: {e}")))?;

        let mut row = Vec::with_capacity(tickers.len());
        for (j, cell) in record.iter().skip(1).enumerate() {
            let column = &tickers[j];
            if cell.is_empty() {
                return Err(bad(column, "missing value".into()));
            }
            let x: f64 = cell
                .parse()
                .map_err(|_| bad(column, format!("cannot parse `{cell}` as a number")))?;
            if !accept(x) {
                return Err(bad(column, format!("value {x} is not {requirement}")));
            }
            row.push(x);
        }

        if let Some((from, to)) = date_range {
            if date < from || date > to {
                continue;
            }
        }
        if let Some(prev) = dates.last() {
            if date <= *prev {
                return Err(Error::BadDates {
                    path: path_buf,
                    message: format!("line {line}: date {date} does not follow {prev}"),
                });
            }
        }
        dates.push(date);
        values.push(row);
    }

    Ok(RawGrid {
        dates,
        tickers,
        values,
    })
}

/// Loads a price CSV, keeping only rows inside the inclusive `date_range`.
pub fn load_price_table(
    path: impl AsRef<Path>,
    date_range: Option<(NaiveDate, NaiveDate)>,
) -> Result<PriceTable> {
    let grid = read_grid(
        path.as_ref(),
        date_range,
        |x| x.is_finite() && x > 0.0,
        "a finite positive price",
    )?;
    Ok(PriceTable {
        dates: grid.dates,
        tickers: grid.tickers,
        prices: grid.values,
    })
}

/// Loads a CSV of pre-computed price relatives. Each row's date is the end of
/// its period.
pub fn load_relatives(
    path: impl AsRef<Path>,
    date_range: Option<(NaiveDate, NaiveDate)>,
) -> Result<MarketMatrix> {
    let grid = read_grid(
        path.as_ref(),
        date_range,
        |x| x.is_finite() && x >= 0.0,
        "a finite non-negative relative",
    )?;
    Ok(MarketMatrix {
        tickers: grid.tickers,
        dates: grid.dates,
        origin: None,
        relatives: grid.values,
    })
}

/// Loads either kind of file and returns the market it describes.
pub fn load_market(
    path: impl AsRef<Path>,
    kind: DataKind,
    date_range: Option<(NaiveDate, NaiveDate)>,
) -> Result<MarketMatrix> {
    match kind {
        DataKind::Prices => to_market_matrix(&load_price_table(path, date_range)?),
        DataKind::Relatives => load_relatives(path, date_range),
    }
}

/// Ratios of consecutive prices. Needs at least two days.
pub fn to_market_matrix(table: &PriceTable) -> Result<MarketMatrix> {
    let n = table.n_days();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let relatives = table
        .prices
        .windows(2)
        .map(|pair| {
            pair[1]
                .iter()
                .zip(&pair[0])
                .map(|(next, prev)| next / prev)
                .collect()
        })
        .collect();
    Ok(MarketMatrix {
        tickers: table.tickers.clone(),
        dates: table.dates[1..].to_vec(),
        origin: Some(table.dates[0]),
        relatives,
    })
}
