//! Class-map algebra: combined rib probability, argmax labels and
//! voxel-wise class metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volgrid::{Grid, ProbabilityMap, VoxelGrid};

/// Per-voxel class labels in `0..=3`.
pub type LabelGrid = Grid<u8>;

/// `q = min(p1 + p2 + p3, 1)` per voxel.
pub fn combined_probability(map: &ProbabilityMap) -> VoxelGrid {
    let g = *map.geometry();
    let values = (0..g.len())
        .map(|idx| {
            let p = map.probabilities(idx);
            (p[1] as f64 + p[2] as f64 + p[3] as f64).min(1.0) as f32
        })
        .collect();
    VoxelGrid::new(g, values).expect("same geometry")
}

/// Index of the largest class probability; ties go to the smallest index.
pub fn argmax_class(p: [f32; 4]) -> u8 {
    let mut best = 0;
    for c in 1..4 {
        if p[c] > p[best] {
            best = c;
        }
    }
    best as u8
}

pub fn argmax_labels(map: &ProbabilityMap) -> LabelGrid {
    let g = *map.geometry();
    let values = (0..g.len()).map(|idx| argmax_class(map.probabilities(idx))).collect();
    LabelGrid::new(g, values).expect("same geometry")
}

/// Maps every rib class onto label 1.
pub fn merge_rib_classes(labels: &LabelGrid) -> LabelGrid {
    labels.map(|l| u8::from(l != 0))
}

/// True-positive, false-positive and false-negative counts for one class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Sensitivity, precision and Dice; `None` marks a 0/0 ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub sensitivity: Option<f64>,
    pub precision: Option<f64>,
    pub dice: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ClassCounts {
    pub fn measures(&self) -> ClassMetrics {
        ClassMetrics {
            sensitivity: ratio(self.tp, self.tp + self.fn_),
            precision: ratio(self.tp, self.tp + self.fp),
            dice: ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_),
        }
    }
}

impl std::ops::AddAssign for ClassCounts {
    fn add_assign(&mut self, o: ClassCounts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

pub fn class_counts(pred: &LabelGrid, gt: &LabelGrid, class: u8) -> Result<ClassCounts> {
    if pred.geometry() != gt.geometry() {
        return Err(Error::GeometryMismatch);
    }
    let mut counts = ClassCounts::default();
    for (&p, &g) in pred.values().iter().zip(gt.values()) {
        match (p == class, g == class) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(counts)
}

pub fn voxel_metrics(pred: &LabelGrid, gt: &LabelGrid, class: u8) -> Result<ClassMetrics> {
    Ok(class_counts(pred, gt, class)?.measures())
}
