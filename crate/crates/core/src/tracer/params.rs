use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Every numeric constant of the tracer. Unknown keys in a JSON config are
/// rejected; absent keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceParams {
    /// Combined-probability threshold for "rib" responses.
    pub prob_threshold: f64,
    /// Minimum valid axial bounding rectangle, x by y.
    pub min_box_mm: [f64; 2],
    /// Left/right seed anchors as fractions of the box width.
    pub anchor_fractions: [f64; 2],
    /// Sagittal seed window, y by z.
    pub search_window_mm: [f64; 2],
    pub sphere_diameter_mm: f64,
    pub max_step_mm: f64,
    pub stall_threshold_mm: f64,
    pub fan_anchor_offset_mm: f64,
    pub fan_step_mm: f64,
    pub label_score_threshold: f64,
    pub cone_half_angle_deg: f64,
    pub cone_length_mm: f64,
    pub fan_radius_mm: f64,
    pub fan_half_angle_deg: f64,
    pub duplicate_distance_mm: f64,
    pub min_rib_length_mm: f64,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams {
            prob_threshold: 0.5,
            min_box_mm: [30.0, 10.0],
            anchor_fractions: [0.25, 0.75],
            search_window_mm: [100.0, 100.0],
            sphere_diameter_mm: 15.0,
            max_step_mm: 7.5,
            stall_threshold_mm: 3.0,
            fan_anchor_offset_mm: 10.0,
            fan_step_mm: 10.0,
            label_score_threshold: 0.5,
            cone_half_angle_deg: 30.0,
            cone_length_mm: 20.0,
            fan_radius_mm: 40.0,
            fan_half_angle_deg: 60.0,
            duplicate_distance_mm: 5.0,
            min_rib_length_mm: 20.0,
        }
    }
}

impl TraceParams {
    pub fn from_json(text: &str) -> Result<Self> {
        let params: TraceParams = serde_json::from_str(text)?;
        params.validate()?;
        Ok(params)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let lengths = [
            ("min_box_mm[0]", self.min_box_mm[0]),
            ("min_box_mm[1]", self.min_box_mm[1]),
            ("search_window_mm[0]", self.search_window_mm[0]),
            ("search_window_mm[1]", self.search_window_mm[1]),
            ("sphere_diameter_mm", self.sphere_diameter_mm),
            ("max_step_mm", self.max_step_mm),
            ("stall_threshold_mm", self.stall_threshold_mm),
            ("fan_anchor_offset_mm", self.fan_anchor_offset_mm),
            ("fan_step_mm", self.fan_step_mm),
            ("cone_length_mm", self.cone_length_mm),
            ("fan_radius_mm", self.fan_radius_mm),
            ("duplicate_distance_mm", self.duplicate_distance_mm),
            ("min_rib_length_mm", self.min_rib_length_mm),
        ];
        for (name, v) in lengths {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be > 0")));
            }
        }
        for (name, v) in [
            ("cone_half_angle_deg", self.cone_half_angle_deg),
            ("fan_half_angle_deg", self.fan_half_angle_deg),
        ] {
            if !(v > 0.0 && v <= 90.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be in (0, 90]")));
            }
        }
        for (name, v) in [
            ("prob_threshold", self.prob_threshold),
            ("label_score_threshold", self.label_score_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be in (0, 1)")));
            }
        }
        let [a, b] = self.anchor_fractions;
        if !((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) && a < b) {
            return Err(Error::InvalidParams(format!(
                "anchor_fractions {:?} must be increasing within [0, 1]",
                self.anchor_fractions
            )));
        }
        Ok(())
    }

    pub(crate) fn sphere_radius(&self) -> f64 {
        self.sphere_diameter_mm / 2.0
    }
}
