//! Point-wise centerline evaluation: label-aware matching within a
//! true-positive distance, missed-rib counting and pooled reports.

mod report;

pub use report::{build_report, EvalReport, ReportRow};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::centerline::{point_to_polyline_distance, resample_arclength, CenterlineSet, RibLabel};
use crate::geom::Vec3;
use crate::probmap::ClassCounts;

/// Point spacing used for matching.
pub const RESAMPLE_STEP_MM: f64 = 1.0;

/// Point counts for one label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Sum of point-to-line distances over true-positive prediction points.
    pub sum_distance: f64,
    pub n_distance: u64,
}

impl PointCounts {
    pub fn class_counts(&self) -> ClassCounts {
        ClassCounts { tp: self.tp, fp: self.fp, fn_: self.fn_ }
    }

    pub fn mean_distance(&self) -> Option<f64> {
        (self.n_distance > 0).then(|| self.sum_distance / self.n_distance as f64)
    }

    fn add(&mut self, o: &PointCounts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.sum_distance += o.sum_distance;
        self.n_distance += o.n_distance;
    }
}

/// Per-label counts of one comparison; predicted labels absent from the
/// ground truth (including `unlabeled`) carry only false positives.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub per_label: BTreeMap<RibLabel, PointCounts>,
}

impl MatchCounts {
    pub fn aggregate(&self) -> PointCounts {
        let mut total = PointCounts::default();
        for c in self.per_label.values() {
            total.add(c);
        }
        total
    }
}

fn samples(points: &[Vec3]) -> Vec<Vec3> {
    resample_arclength(points, RESAMPLE_STEP_MM).unwrap_or_else(|_| points.to_vec())
}

/// Resampled points and original polylines grouped by label.
struct Grouped {
    points: BTreeMap<RibLabel, Vec<Vec3>>,
    lines: BTreeMap<RibLabel, Vec<Vec<Vec3>>>,
}

fn group(set: &CenterlineSet) -> Grouped {
    let mut g = Grouped { points: BTreeMap::new(), lines: BTreeMap::new() };
    for rib in &set.ribs {
        g.points.entry(rib.label).or_default().extend(samples(&rib.points));
        g.lines.entry(rib.label).or_default().push(rib.points.clone());
    }
    g
}

fn any_within(p: Vec3, others: &[Vec3], delta: f64) -> bool {
    let d2 = delta * delta;
    others.iter().any(|o| (*o - p).norm_squared() <= d2)
}

pub fn match_centerlines(pred: &CenterlineSet, gt: &CenterlineSet, delta: f64) -> MatchCounts {
    let (p, g) = (group(pred), group(gt));
    let mut out = MatchCounts::default();
    let none: Vec<Vec3> = Vec::new();

    for (label, gt_points) in &g.points {
        let pred_points = match label {
            RibLabel::Unlabeled => &none,
            _ => p.points.get(label).unwrap_or(&none),
        };
        let c = out.per_label.entry(*label).or_default();
        c.fn_ = gt_points.iter().filter(|q| !any_within(**q, pred_points, delta)).count() as u64;
    }
    for (label, pred_points) in &p.points {
        let gt_points = match label {
            RibLabel::Unlabeled => &none,
            _ => g.points.get(label).unwrap_or(&none),
        };
        let lines = g.lines.get(label);
        let c = out.per_label.entry(*label).or_default();
        for q in pred_points {
            if any_within(*q, gt_points, delta) {
                c.tp += 1;
                let d = lines
                    .into_iter()
                    .flatten()
                    .map(|l| point_to_polyline_distance(*q, l))
                    .fold(f64::INFINITY, f64::min);
                c.sum_distance += d;
                c.n_distance += 1;
            } else {
                c.fp += 1;
            }
        }
    }
    out
}

/// Number of ground-truth ribs with less than half of their points
/// matched by a correctly labeled prediction point.
pub fn missed_ribs(pred: &CenterlineSet, gt: &CenterlineSet, delta: f64) -> usize {
    let p = group(pred);
    let none: Vec<Vec3> = Vec::new();
    gt.ribs
        .iter()
        .filter(|rib| {
            let pred_points = match rib.label {
                RibLabel::Unlabeled => &none,
                l => p.points.get(&l).unwrap_or(&none),
            };
            let pts = samples(&rib.points);
            let hit = pts.iter().filter(|q| any_within(**q, pred_points, delta)).count();
            2 * hit < pts.len()
        })
        .count()
}
