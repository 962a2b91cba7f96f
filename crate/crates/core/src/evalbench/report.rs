use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{match_centerlines, missed_ribs, PointCounts};
use crate::centerline::{CenterlineSet, RibLabel};
use crate::error::{Error, Result};

/// One table row: label and the measures of its pooled counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub sensitivity: Option<f64>,
    pub precision: Option<f64>,
    pub mean_distance_mm: Option<f64>,
    pub dice: Option<f64>,
    pub counts: PointCounts,
}

impl ReportRow {
    fn new(label: String, counts: PointCounts) -> Self {
        let m = counts.class_counts().measures();
        ReportRow {
            label,
            sensitivity: m.sensitivity,
            precision: m.precision,
            mean_distance_mm: counts.mean_distance(),
            dice: m.dice,
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub delta_mm: f64,
    pub cases: usize,
    /// Rows for the ground-truth labels, `01l, 01r, 02l, ...`.
    pub rows: Vec<ReportRow>,
    pub aggregate: ReportRow,
    /// Missed ribs per case.
    pub missed_per_case: Vec<usize>,
    /// Fraction of cases with 0, 1, 2 and 3 or more missed ribs.
    pub missed_histogram: [f64; 4],
}

/// Pools point counts over all cases per label and tabulates the measures
/// and the missed-rib distribution.
pub fn build_report(cases: &[(CenterlineSet, CenterlineSet)], delta: f64) -> Result<EvalReport> {
    if cases.is_empty() {
        return Err(Error::NoCases);
    }
    let mut pooled: BTreeMap<RibLabel, (PointCounts, Vec<f64>)> = BTreeMap::new();
    let mut gt_labels = std::collections::BTreeSet::new();
    let mut missed_per_case = Vec::with_capacity(cases.len());
    for (pred, gt) in cases {
        gt_labels.extend(gt.ribs.iter().map(|r| r.label));
        for (label, c) in match_centerlines(pred, gt, delta).per_label {
            let (acc, sums) = pooled.entry(label).or_default();
            acc.tp += c.tp;
            acc.fp += c.fp;
            acc.fn_ += c.fn_;
            acc.n_distance += c.n_distance;
            sums.push(c.sum_distance);
        }
        missed_per_case.push(missed_ribs(pred, gt, delta));
    }

    // distance sums are added in sorted order so case order cannot matter
    let mut total = PointCounts::default();
    let mut rows = Vec::new();
    for (label, (mut c, mut sums)) in pooled {
        sums.sort_by(f64::total_cmp);
        c.sum_distance = sums.iter().sum();
        total.tp += c.tp;
        total.fp += c.fp;
        total.fn_ += c.fn_;
        total.n_distance += c.n_distance;
        total.sum_distance += c.sum_distance;
        if gt_labels.contains(&label) {
            rows.push(ReportRow::new(label.to_string(), c));
        }
    }

    let mut histogram = [0.0; 4];
    for &m in &missed_per_case {
        histogram[m.min(3)] += 1.0;
    }
    for h in &mut histogram {
        *h /= cases.len() as f64;
    }

    Ok(EvalReport {
        delta_mm: delta,
        cases: cases.len(),
        rows,
        aggregate: ReportRow::new("all ribs".into(), total),
        missed_per_case,
        missed_histogram: histogram,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Rib-wise table followed by the missed-rib distribution.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10}{:>8}{:>8}{:>12}{:>8}", "rib", "sens.", "prec.", "dist.(mm)", "Dice");
        for row in self.rows.iter().chain(std::iter::once(&self.aggregate)) {
            let _ = writeln!(
                out,
                "{:<10}{:>8}{:>8}{:>12}{:>8}",
                row.label,
                cell(row.sensitivity),
                cell(row.precision),
                cell(row.mean_distance_mm),
                cell(row.dice)
            );
        }
        out.push('\n');
        let _ = writeln!(out, "{:<14}{:>8}{:>8}{:>8}{:>8}", "missed ribs", "0", "1", "2", ">=3");
        let pct: Vec<String> = self.missed_histogram.iter().map(|f| format!("{:.1}", 100.0 * f)).collect();
        let _ = writeln!(out, "{:<14}{:>8}{:>8}{:>8}{:>8}", "cases (%)", pct[0], pct[1], pct[2], pct[3]);
        out
    }
}
