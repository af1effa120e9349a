//! Price CSV ingestion and the report, trajectory and manifest file formats.
//!
//! Input: `date,close` with ISO-8601 dates, strictly increasing.
//!
//! Output files:
//! - `report.json`: one row per kappa (`alpha_hat`, `lr_uc`, `lr_ind`, `mean_var_x100`, ...)
//! - `trajectory_<kappa>.csv`: `step,date,var_adj,hit,alpha_hat`
//! - `band_<kappa>.csv`: `step,band`
//! - `ensemble_<kappa>.csv`: `step,mean_alpha_tilde,variance,band`
//! - `manifest.json`: command, config echo, input digest, seed, artifacts, version
//!
//! Floats are written with Rust's shortest round-trip formatting.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::BacktestReport;
use crate::error::{Error, Result};
use crate::series::{log_returns, ReturnSeries};
use crate::sims::EnsembleResult;

pub const TOOL_NAME: &str = "compvar";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One row of the input price file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PriceCsvRow {
    pub date: String,
    pub close: f64,
}

/// Parsed and validated price file.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceData {
    pub rows: Vec<PriceCsvRow>,
    pub digest: String,
}

impl PriceData {
    pub fn closes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.close).collect()
    }

    /// Log returns, each labelled with the date of the later close.
    pub fn returns(&self) -> Result<ReturnSeries> {
        let dates = self.rows.iter().skip(1).map(|r| r.date.clone()).collect();
        log_returns(&self.closes())?.with_dates(dates)
    }
}

/// `sha256:<hex>` of the given bytes.
pub fn digest_bytes(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let mut out = String::with_capacity(7 + 64);
    out.push_str("sha256:");
    for b in hash.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Parses price CSV bytes. Row numbers in errors are 1-based file lines
/// (the header is line 1).
pub fn parse_prices(bytes: &[u8]) -> Result<PriceData> {
    let digest = digest_bytes(bytes);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader.headers().map_err(|e| Error::Parse {
        row: 1,
        column: "header".into(),
        message: e.to_string(),
    })?;
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "close" {
        return Err(Error::Parse {
            row: 1,
            column: "header".into(),
            message: format!(
                "expected header `date,close`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut rows: Vec<PriceCsvRow> = Vec::new();
    let mut previous: Option<NaiveDate> = None;
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: "record".into(),
            message: e.to_string(),
        })?;
        let date_str = record.get(0).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_str, "%Y-%m-%d").map_err(|e| Error::Parse {
            row,
            column: "date".into(),
            message: format!("`{date_str}`: {e}"),
        })?;
        let close_str = record.get(1).unwrap_or("");
        let close: f64 = close_str.parse().map_err(|_| Error::Parse {
            row,
            column: "close".into(),
            message: format!("`{close_str}` is not a number"),
        })?;
        if !(close.is_finite() && close > 0.0) {
            return Err(Error::NonPositivePrice {
                index: row,
                value: close,
            });
        }
        if let Some(prev) = previous {
            if date <= prev {
                return Err(Error::NonMonotoneDates {
                    row,
                    date: date_str.to_string(),
                    previous: prev.to_string(),
                });
            }
        }
        previous = Some(date);
        rows.push(PriceCsvRow {
            date: date_str.to_string(),
            close,
        });
    }
    if rows.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: rows.len(),
            window: 0,
            needed: 1,
        });
    }
    Ok(PriceData { rows, digest })
}

pub fn read_prices(path: &Path) -> Result<PriceData> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    parse_prices(&bytes)
}

/// Reads a price file and converts it to dated log returns.
pub fn ingest_prices(path: &Path) -> Result<ReturnSeries> {
    read_prices(path)?.returns()
}

/// Summary statistics of one backtest, named after the usual table columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub kappa: Option<f64>,
    /// Raw hit rate `M1 / (M0 + M1)`.
    pub alpha_hat: f64,
    pub alpha_hat_weighted: f64,
    pub lr_uc: f64,
    pub lr_ind: f64,
    pub t1: f64,
    pub t2: f64,
    pub mean_var_x100: f64,
    pub m00: u64,
    pub m01: u64,
    pub m10: u64,
    pub m11: u64,
    pub steps: usize,
    pub hits: usize,
}

impl From<&BacktestReport> for ReportRow {
    fn from(r: &BacktestReport) -> Self {
        ReportRow {
            kappa: r.kappa,
            alpha_hat: r.alpha_hat_raw,
            alpha_hat_weighted: r.alpha_hat_weighted(),
            lr_uc: r.kupiec.p_value,
            lr_ind: r.christoffersen.p_value,
            t1: r.kupiec.statistic,
            t2: r.christoffersen.statistic,
            mean_var_x100: r.mean_var_x100,
            m00: r.ledger.m00,
            m01: r.ledger.m01,
            m10: r.ledger.m10,
            m11: r.ledger.m11,
            steps: r.steps(),
            hits: r.hits.iter().filter(|&&h| h).count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestFile {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub generated_unix: u64,
    pub alpha: f64,
    pub window: usize,
    pub dist: String,
    pub n_returns: usize,
    pub bound_l: f64,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRow {
    #[serde(flatten)]
    pub stats: ReportRow,
    pub terminal_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub kappa: f64,
    pub replications: usize,
    pub terminal_mean_alpha_tilde: f64,
    pub terminal_std_error: f64,
    pub terminal_band: Option<f64>,
    pub quantile_bound: f64,
}

impl From<&EnsembleResult> for EnsembleSummary {
    fn from(e: &EnsembleResult) -> Self {
        EnsembleSummary {
            kappa: e.kappa,
            replications: e.replications,
            terminal_mean_alpha_tilde: e.terminal_mean(),
            terminal_std_error: e.terminal_std_error(),
            terminal_band: e.band.as_ref().and_then(|b| b.last().copied()),
            quantile_bound: e.quantile_bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationFile {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub generated_unix: u64,
    pub n_total: usize,
    pub window: usize,
    pub alpha: f64,
    pub dist: String,
    pub seed: u64,
    pub bound_l: f64,
    pub rows: Vec<SimulationRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ensemble: Vec<EnsembleSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub generated_unix: u64,
    pub config: serde_json::Value,
    pub input_digest: Option<String>,
    pub seed: Option<u64>,
    pub artifacts: Vec<String>,
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Label used in per-kappa file names: `trajectory_<kappa>.csv`.
pub fn kappa_label(kappa: f64) -> String {
    format!("{kappa}")
}

/// Trajectory CSV. `step` is the 1-based index of the tested observation,
/// running from `window + 1` to `T`; `date` is empty for undated series.
pub fn trajectory_csv(report: &BacktestReport, dates: Option<&[String]>) -> String {
    let mut out = String::from("step,date,var_adj,hit,alpha_hat\n");
    for i in 0..report.steps() {
        let idx = report.window + i;
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            idx + 1,
            dates.and_then(|d| d.get(idx)).map_or("", String::as_str),
            report.var_adj[i],
            u8::from(report.hits[i]),
            report.alpha_hat_weighted_path[i]
        );
    }
    out
}

pub fn band_csv(band: &[f64], window: usize) -> String {
    let mut out = String::from("step,band\n");
    for (i, b) in band.iter().enumerate() {
        let _ = writeln!(out, "{},{}", window + i + 1, b);
    }
    out
}

pub fn ensemble_csv(result: &EnsembleResult, window: usize) -> String {
    let mut out = String::from("step,mean_alpha_tilde,variance,band\n");
    for i in 0..result.mean_alpha_tilde_path.len() {
        let band = result
            .band
            .as_ref()
            .map(|b| b[i].to_string())
            .unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            window + i + 1,
            result.mean_alpha_tilde_path[i],
            result.variance_path[i],
            band
        );
    }
    out
}

/// Writes `contents` to `dir/name` and records the name.
pub fn write_artifact(
    dir: &Path,
    name: &str,
    contents: &[u8],
    artifacts: &mut Vec<String>,
) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    artifacts.push(name.to_string());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows_telescoping() {
        let csv = b"date,close\n2020-01-01,100\n2020-01-02,110\n2020-01-03,100\n";
        let data = parse_prices(csv).unwrap();
        let s = data.returns().unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.values().iter().sum::<f64>().abs() < 1e-15);
        assert_eq!(s.date(0), Some("2020-01-02"));
        assert!(data.digest.starts_with("sha256:"));
        assert_eq!(data.digest.len(), 7 + 64);
    }

    #[test]
    fn out_of_order_dates() {
        let csv = b"date,close\n2020-01-02,100\n2020-01-03,101\n2020-01-01,102\n";
        match parse_prices(csv) {
            Err(Error::NonMonotoneDates { row, .. }) => assert_eq!(row, 4),
            other => panic!("unexpected {other:?}"),
        }
        let dup = b"date,close\n2020-01-02,100\n2020-01-02,101\n";
        assert!(matches!(
            parse_prices(dup),
            Err(Error::NonMonotoneDates { row: 3, .. })
        ));
    }

    #[test]
    fn parse_errors_name_row_and_column() {
        let bad_close = b"date,close\n2020-01-01,100\n2020-01-02,abc\n";
        match parse_prices(bad_close) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "close");
            }
            other => panic!("unexpected {other:?}"),
        }
        let bad_date = b"date,close\n01/02/2020,100\n2020-01-02,1\n";
        assert!(matches!(
            parse_prices(bad_date),
            Err(Error::Parse { row: 2, ref column, .. }) if column == "date"
        ));
        let bad_header = b"day,price\n2020-01-01,1\n2020-01-02,2\n";
        assert!(matches!(
            parse_prices(bad_header),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn non_positive_close() {
        let csv = b"date,close\n2020-01-01,100\n2020-01-02,0\n";
        assert!(matches!(
            parse_prices(csv),
            Err(Error::NonPositivePrice { index: 3, .. })
        ));
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            digest_bytes(b"abc"),
            "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn kappa_labels() {
        assert_eq!(kappa_label(0.0), "0");
        assert_eq!(kappa_label(20.0), "20");
        assert_eq!(kappa_label(0.5), "0.5");
    }
}
