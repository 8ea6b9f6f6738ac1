//! Result rows and the CSV schemas they are written under. The CSV output
//! is the deliverable contract: byte-stable column order and formatting so
//! that a config file plus its seed reproduces a results file exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::federation::{RoundRecord, Scope};
use crate::metrics::{median, MetricRecord};

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub n_workers: usize,
    pub seed: u64,
    pub round: u32,
    pub scope: String,
    pub metrics: MetricRecord,
}

impl ResultRow {
    pub fn from_record(
        dataset: &str,
        method: &str,
        n_workers: usize,
        seed: u64,
        record: &RoundRecord,
    ) -> ResultRow {
        ResultRow {
            dataset: dataset.to_string(),
            method: method.to_string(),
            n_workers,
            seed,
            round: record.round,
            scope: record.scope.to_string(),
            metrics: record.metrics,
        }
    }
}

pub const RESULTS_HEADER: &str =
    "dataset,method,n_workers,seed,round,scope,roc_auc,f_score,dr,g_mean";

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

/// Renders the results CSV, header included.
pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.dataset,
            r.method,
            r.n_workers,
            r.seed,
            r.round,
            r.scope,
            fmt_metric(r.metrics.roc_auc),
            fmt_metric(r.metrics.f_score),
            fmt_metric(r.metrics.dr),
            fmt_metric(r.metrics.g_mean),
        ));
    }
    out
}

/// Median-over-seeds summary of the final-round global metrics of one
/// `(dataset, method, n_workers)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: String,
    pub n_workers: usize,
    pub metrics: MetricRecord,
}

pub const SUMMARY_HEADER: &str = "dataset,method,n_workers,roc_auc,f_score,dr,g_mean";

/// Groups raw rows by `(dataset, method, n_workers)` and reports the median
/// over seeds of the global metrics at each group's final round.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    let mut keys: Vec<(String, String, usize)> = Vec::new();
    for r in rows {
        let key = (r.dataset.clone(), r.method.clone(), r.n_workers);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort();

    let mut summaries = Vec::with_capacity(keys.len());
    for (dataset, method, n_workers) in keys {
        let group: Vec<&ResultRow> = rows
            .iter()
            .filter(|r| {
                r.dataset == dataset
                    && r.method == method
                    && r.n_workers == n_workers
                    && r.scope == Scope::Global.to_string()
            })
            .collect();
        let final_round = group.iter().map(|r| r.round).max().ok_or_else(|| {
            Error::Contract(format!(
                "group ({dataset}, {method}, {n_workers}) has no global rows"
            ))
        })?;
        let finals: Vec<&&ResultRow> = group.iter().filter(|r| r.round == final_round).collect();
        let collect = |f: fn(&MetricRecord) -> f64| -> Vec<f64> {
            finals.iter().map(|r| f(&r.metrics)).collect()
        };
        summaries.push(SummaryRow {
            dataset,
            method,
            n_workers,
            metrics: MetricRecord {
                roc_auc: median(&collect(|m| m.roc_auc)),
                f_score: median(&collect(|m| m.f_score)),
                dr: median(&collect(|m| m.dr)),
                g_mean: median(&collect(|m| m.g_mean)),
            },
        });
    }
    Ok(summaries)
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.dataset,
            r.method,
            r.n_workers,
            fmt_metric(r.metrics.roc_auc),
            fmt_metric(r.metrics.f_score),
            fmt_metric(r.metrics.dr),
            fmt_metric(r.metrics.g_mean),
        ));
    }
    out
}

/// One row of the partition-diagnostics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsRow {
    pub dataset: String,
    pub k: usize,
    pub homogeneity: f64,
    pub minority_free: usize,
    pub below_global: usize,
    pub theorem1_holds: bool,
}

pub const DIAGNOSTICS_HEADER: &str =
    "dataset,k,homogeneity,minority_free,below_global_ratio,theorem1_holds";

pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.dataset,
            r.k,
            fmt_metric(r.homogeneity),
            r.minority_free,
            r.below_global,
            r.theorem1_holds,
        ));
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    if let Some(parent) = path.as_ref().parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}
