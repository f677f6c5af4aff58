//! Market-data ingestion and risk-report emission. Input is a directory of
//! per-asset minute CSVs (`timestamp,close`); outputs are a JSON risk report
//! plus CSV tables, deterministic across runs (assets processed in sorted
//! order).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use secplf_core::analyzer::{self, PriceSeries, RiskParams};
use secplf_core::types::AssetId;

/// Name of the optional market-capitalization sidecar consumed by the
/// `tz` report (`asset,market_cap_usd`). Never treated as a price series.
pub const MARKET_CAP_SIDECAR: &str = "market_caps.csv";

#[derive(Debug)]
pub struct AnalysisError {
    pub file: String,
    pub message: String,
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.file, self.message)
    }
}

impl std::error::Error for AnalysisError {}

/// Sampled `(x, cumulative_probability)` pairs for one asset.
pub type AssetCdf = (String, Vec<(f64, f64)>);

fn err(file: &Path, message: impl Into<String>) -> AnalysisError {
    AnalysisError {
        file: file.display().to_string(),
        message: message.into(),
    }
}

/// Reads one `timestamp,close` CSV into a validated series.
pub fn ingest_csv(path: &Path, asset: &str) -> Result<PriceSeries, AnalysisError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| err(path, e.to_string()))?;
    {
        let headers = reader.headers().map_err(|e| err(path, e.to_string()))?;
        if headers.iter().ne(["timestamp", "close"]) {
            return Err(err(
                path,
                format!("expected header `timestamp,close`, got {headers:?}"),
            ));
        }
    }
    let mut rows: Vec<(i64, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        // CSV rows are 1-based and the header occupies the first line.
        let line = i + 2;
        let record = record.map_err(|e| err(path, format!("row {line}: {e}")))?;
        let ts: i64 = record
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| err(path, format!("row {line}: bad timestamp {:?}", record.get(0))))?;
        let close: f64 = record
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| err(path, format!("row {line}: bad close {:?}", record.get(1))))?;
        rows.push((ts, close));
    }
    PriceSeries::from_rows(AssetId::new(asset), &rows).map_err(|e| err(path, e.to_string()))
}

/// Loads every `*.csv` in the directory (minus the market-cap sidecar) as a
/// price series keyed by file stem, sorted.
pub fn load_series_dir(dir: &Path) -> Result<Vec<(String, PriceSeries)>, AnalysisError> {
    let mut out = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| err(dir, e.to_string()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .filter(|p| p.file_name().is_none_or(|n| n != MARKET_CAP_SIDECAR))
        .collect();
    paths.sort();
    for path in paths {
        let asset = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| err(&path, "unreadable file name"))?
            .to_string();
        let series = ingest_csv(&path, &asset)?;
        out.push((asset, series));
    }
    if out.is_empty() {
        return Err(err(dir, "no price CSVs found"));
    }
    Ok(out)
}

/// Optional `asset,market_cap_usd` sidecar for the refresh-interval table.
pub fn load_market_caps(dir: &Path) -> Result<Option<BTreeMap<String, f64>>, AnalysisError> {
    let path = dir.join(MARKET_CAP_SIDECAR);
    if !path.exists() {
        return Ok(None);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(&path)
        .map_err(|e| err(&path, e.to_string()))?;
    let mut caps = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| err(&path, format!("row {line}: {e}")))?;
        let asset = record
            .get(0)
            .ok_or_else(|| err(&path, format!("row {line}: missing asset")))?
            .trim()
            .to_string();
        let cap: f64 = record
            .get(1)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| err(&path, format!("row {line}: bad market cap")))?;
        caps.insert(asset, cap);
    }
    Ok(Some(caps))
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct AssetRisk {
    pub asset: String,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tz: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exceedance_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exceedance_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub market_cap_usd: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct RiskReport {
    pub epsilon: f64,
    pub z: f64,
    pub t: usize,
    pub assets: Vec<AssetRisk>,
}

/// Largest safe refresh interval per asset; with the market-cap sidecar the
/// table doubles as plot data of interval vs capitalization.
pub fn tz_report(
    series: &[(String, PriceSeries)],
    params: &RiskParams,
    caps: Option<&BTreeMap<String, f64>>,
) -> Result<RiskReport, AnalysisError> {
    let mut assets = Vec::new();
    for (name, s) in series {
        let tz = analyzer::compute_tz(s, params.epsilon, params.z).map_err(|e| AnalysisError {
            file: name.clone(),
            message: e.to_string(),
        })?;
        assets.push(AssetRisk {
            asset: name.clone(),
            points: s.len(),
            tz: Some(tz),
            exceedance_count: None,
            exceedance_probability: None,
            market_cap_usd: caps.and_then(|c| c.get(name).copied()),
        });
    }
    Ok(RiskReport {
        epsilon: params.epsilon,
        z: params.z,
        t: params.t,
        assets,
    })
}

/// Non-exceedance probability and exceedance count at the fixed window `t`.
pub fn exceedance_report(
    series: &[(String, PriceSeries)],
    params: &RiskParams,
) -> Result<RiskReport, AnalysisError> {
    let mut assets = Vec::new();
    for (name, s) in series {
        let deltas = analyzer::max_deltas(s, params.t, params.epsilon).map_err(|e| {
            AnalysisError {
                file: name.clone(),
                message: e.to_string(),
            }
        })?;
        let exceedances = deltas.iter().filter(|d| **d > 0.0).count();
        assets.push(AssetRisk {
            asset: name.clone(),
            points: s.len(),
            tz: None,
            exceedance_count: Some(exceedances),
            exceedance_probability: Some(1.0 - exceedances as f64 / deltas.len() as f64),
            market_cap_usd: None,
        });
    }
    Ok(RiskReport {
        epsilon: params.epsilon,
        z: params.z,
        t: params.t,
        assets,
    })
}

/// Per-asset sampled CDF of the normalized windowed discrepancy.
pub fn cdf_reports(
    series: &[(String, PriceSeries)],
    params: &RiskParams,
    buckets: usize,
) -> Result<Vec<AssetCdf>, AnalysisError> {
    let mut out = Vec::new();
    for (name, s) in series {
        let cdf = analyzer::cdf_report(s, params.t, params.epsilon, buckets).map_err(|e| {
            AnalysisError {
                file: name.clone(),
                message: e.to_string(),
            }
        })?;
        out.push((name.clone(), cdf));
    }
    Ok(out)
}

fn write(path: &Path, contents: &str) -> Result<(), AnalysisError> {
    fs::write(path, contents).map_err(|e| err(path, e.to_string()))
}

/// Writes `risk_report.json` plus the relevant CSV tables into `out_dir`.
pub fn write_artifacts(
    out_dir: &Path,
    report: &RiskReport,
    cdfs: Option<&[AssetCdf]>,
) -> Result<Vec<PathBuf>, AnalysisError> {
    fs::create_dir_all(out_dir).map_err(|e| err(out_dir, e.to_string()))?;
    let mut written = Vec::new();

    let json_path = out_dir.join("risk_report.json");
    let body = serde_json::to_string_pretty(report)
        .map_err(|e| err(&json_path, e.to_string()))?;
    write(&json_path, &body)?;
    written.push(json_path);

    if report.assets.iter().any(|a| a.tz.is_some()) {
        let mut csv = String::from("asset,points,tz\n");
        for a in &report.assets {
            csv.push_str(&format!("{},{},{}\n", a.asset, a.points, a.tz.unwrap_or(0)));
        }
        let path = out_dir.join("tz.csv");
        write(&path, &csv)?;
        written.push(path);

        if report.assets.iter().any(|a| a.market_cap_usd.is_some()) {
            // Plot-data table: interval vs market capitalization, sorted by
            // capitalization so the curve reads left to right.
            let mut rows: Vec<&AssetRisk> = report
                .assets
                .iter()
                .filter(|a| a.market_cap_usd.is_some())
                .collect();
            rows.sort_by(|a, b| {
                a.market_cap_usd
                    .partial_cmp(&b.market_cap_usd)
                    .expect("finite market caps")
            });
            let mut csv = String::from("asset,market_cap_usd,tz\n");
            for a in rows {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    a.asset,
                    a.market_cap_usd.unwrap(),
                    a.tz.unwrap_or(0)
                ));
            }
            let path = out_dir.join("tz_vs_market_cap.csv");
            write(&path, &csv)?;
            written.push(path);
        }
    }

    if report.assets.iter().any(|a| a.exceedance_count.is_some()) {
        let mut csv = String::from("asset,points,t,exceedances,probability\n");
        for a in &report.assets {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                a.asset,
                a.points,
                report.t,
                a.exceedance_count.unwrap_or(0),
                a.exceedance_probability.unwrap_or(0.0)
            ));
        }
        let path = out_dir.join("exceedance.csv");
        write(&path, &csv)?;
        written.push(path);
    }

    if let Some(cdfs) = cdfs {
        for (asset, cdf) in cdfs {
            let mut csv = String::from("x,cumulative_probability\n");
            for (x, p) in cdf {
                csv.push_str(&format!("{x},{p}\n"));
            }
            let path = out_dir.join(format!("cdf_{asset}.csv"));
            write(&path, &csv)?;
            written.push(path);
        }
    }
    Ok(written)
}
