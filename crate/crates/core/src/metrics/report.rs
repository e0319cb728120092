use serde::{Deserialize, Serialize};

use super::{FoldOutcome, MetricsError};
use crate::fsio::fmt_f64;

/// Mean, sample standard deviation and raw values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub values: Vec<f64>,
}

impl Summary {
    pub fn of(values: Vec<f64>) -> Self {
        let n = values.len() as f64;
        let mean = if values.is_empty() { 0.0 } else { values.iter().sum::<f64>() / n };
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Self { mean, std, values }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    #[serde(flatten)]
    pub summary: Summary,
}

/// Per-method evaluation summary. Fields serialize in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub seeds: Vec<u64>,
    pub folds: usize,
    pub metrics: Vec<MetricSummary>,
    pub gap: Summary,
}

impl EvalReport {
    /// Aggregates fold outcomes that all report the same metric names.
    pub fn from_folds(method: &str, seeds: Vec<u64>, outcomes: &[FoldOutcome]) -> Result<Self, MetricsError> {
        let first = outcomes.first().ok_or_else(|| MetricsError::InvalidInput("no folds".into()))?;
        let names: Vec<&String> = first.metrics.iter().map(|(n, _)| n).collect();
        let mut metrics = Vec::new();
        for (idx, name) in names.iter().enumerate() {
            let values = outcomes
                .iter()
                .map(|o| match o.metrics.get(idx) {
                    Some((n, v)) if n == *name => Ok(*v),
                    _ => Err(MetricsError::InvalidInput(format!("fold is missing metric {name}"))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            metrics.push(MetricSummary { name: (*name).clone(), summary: Summary::of(values) });
        }
        Ok(Self {
            method: method.to_string(),
            seeds,
            folds: outcomes.len(),
            metrics,
            gap: Summary::of(outcomes.iter().map(|o| o.gap).collect()),
        })
    }

    pub fn metric(&self, name: &str) -> Option<&Summary> {
        self.metrics.iter().find(|m| m.name == name).map(|m| &m.summary)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Aligned text table: one row per report, one `mean ± std` column per
/// metric name (first-seen order) plus the feasibility gap.
pub fn render_table(reports: &[EvalReport]) -> String {
    let mut columns: Vec<String> = Vec::new();
    for r in reports {
        for m in &r.metrics {
            if !columns.contains(&m.name) {
                columns.push(m.name.clone());
            }
        }
    }
    let cell = |s: &Summary| format!("{} ± {}", fmt_f64(s.mean), fmt_f64(s.std));
    let mut rows: Vec<Vec<String>> = vec![std::iter::once("method".to_string())
        .chain(columns.iter().cloned())
        .chain(std::iter::once("gap".to_string()))
        .collect()];
    for r in reports {
        let mut row = vec![r.method.clone()];
        for c in &columns {
            row.push(r.metric(c).map(cell).unwrap_or_else(|| "-".into()));
        }
        row.push(cell(&r.gap));
        rows.push(row);
    }
    let widths: Vec<usize> =
        (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (i, row) in rows.iter().enumerate() {
        let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
        if i == 0 {
            out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
            out.push('\n');
        }
    }
    out
}
