//! Centerline geometry: labels, arc-length resampling, point-to-polyline
//! distance and tube dilation into label masks.

mod json;
mod spline;

pub use spline::spline_interpolate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, polyline_length, Vec3};
use crate::probmap::LabelGrid;
use crate::volgrid::{Geometry, FIRST_RIB, INTERMEDIATE_RIB, TWELFTH_RIB};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Unknown,
}

impl Side {
    pub fn mirrored(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Unknown => Side::Unknown,
        }
    }
}

/// Anatomical rib label such as `07r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RibLabel {
    Unlabeled,
    Rib { index: u8, side: Side },
}

impl RibLabel {
    pub fn rib(index: u8, side: Side) -> Option<RibLabel> {
        ((1..=12).contains(&index) && side != Side::Unknown).then_some(RibLabel::Rib { index, side })
    }

    pub fn index(&self) -> Option<u8> {
        match self {
            RibLabel::Rib { index, .. } => Some(*index),
            RibLabel::Unlabeled => None,
        }
    }

    /// Probability-map class of this rib (first, twelfth or intermediate).
    pub fn class(&self) -> Option<u8> {
        self.index().map(|i| match i {
            1 => FIRST_RIB as u8,
            12 => TWELFTH_RIB as u8,
            _ => INTERMEDIATE_RIB as u8,
        })
    }

    pub fn mirrored(self) -> RibLabel {
        match self {
            RibLabel::Rib { index, side } => RibLabel::Rib { index, side: side.mirrored() },
            RibLabel::Unlabeled => RibLabel::Unlabeled,
        }
    }
}

impl fmt::Display for RibLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RibLabel::Unlabeled => f.write_str("unlabeled"),
            RibLabel::Rib { index, side } => {
                let s = match side {
                    Side::Left => 'l',
                    Side::Right => 'r',
                    Side::Unknown => '?',
                };
                write!(f, "{index:02}{s}")
            }
        }
    }
}

impl Serialize for RibLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RibLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for RibLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "unlabeled" {
            return Ok(RibLabel::Unlabeled);
        }
        let bad = || Error::InvalidCenterline(format!("bad rib label {s:?}"));
        if s.len() != 3 || !s.is_ascii() {
            return Err(bad());
        }
        let index: u8 = s[..2].parse().map_err(|_| bad())?;
        let side = match &s[2..] {
            "l" => Side::Left,
            "r" => Side::Right,
            _ => return Err(bad()),
        };
        RibLabel::rib(index, side).ok_or_else(bad)
    }
}

/// An ordered rib centerline in world millimetres.
#[derive(Debug, Clone, PartialEq)]
pub struct RibCenterline {
    pub points: Vec<Vec3>,
    pub label: RibLabel,
    pub side: Side,
    /// Mean first, twelfth and intermediate rib probability along the line.
    pub class_scores: Option<[f64; 3]>,
}

impl RibCenterline {
    pub fn new(points: Vec<Vec3>, label: RibLabel, side: Side) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidCenterline(format!(
                "a centerline needs at least 2 points, got {}",
                points.len()
            )));
        }
        Ok(RibCenterline { points, label, side, class_scores: None })
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points)
    }

    pub fn first(&self) -> Vec3 {
        self.points[0]
    }

    pub fn last(&self) -> Vec3 {
        *self.points.last().expect("at least two points")
    }

    /// Arc-length weighted mean height.
    pub fn mean_z(&self) -> f64 {
        let (mut acc, mut total) = (0.0, 0.0);
        for w in self.points.windows(2) {
            let len = w[0].distance(w[1]);
            acc += len * 0.5 * (w[0].z + w[1].z);
            total += len;
        }
        if total > 0.0 {
            acc / total
        } else {
            self.points[0].z
        }
    }

    pub fn reverse(&mut self) {
        self.points.reverse();
    }
}

/// Centerlines of one volume ordered feet to head.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CenterlineSet {
    pub volume: String,
    pub ribs: Vec<RibCenterline>,
}

impl CenterlineSet {
    pub fn new(volume: impl Into<String>, ribs: Vec<RibCenterline>) -> Self {
        CenterlineSet { volume: volume.into(), ribs }
    }

    /// Stable sort by each rib's mean height.
    pub fn sort_feet_to_head(&mut self) {
        self.ribs.sort_by(|a, b| a.mean_z().total_cmp(&b.mean_z()));
    }

    pub fn len(&self) -> usize {
        self.ribs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ribs.is_empty()
    }

    pub fn find(&self, label: RibLabel) -> Option<&RibCenterline> {
        self.ribs.iter().find(|r| r.label == label)
    }
}

/// Points at arc lengths `0, step, 2 step, ...`; the final polyline vertex
/// is appended when it lies more than `step / 2` beyond the last sample, and
/// always when only one sample fits.
pub fn resample_arclength(line: &[Vec3], step: f64) -> Result<Vec<Vec3>> {
    if line.len() < 2 {
        return Err(Error::InvalidCenterline("resampling needs at least 2 points".into()));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidCenterline(format!("step {step} must be positive")));
    }
    let total = polyline_length(line);
    if total <= 0.0 {
        return Err(Error::InvalidCenterline("zero-length line".into()));
    }
    let count = (total / step + 1e-9).floor() as usize + 1;
    let mut out = Vec::with_capacity(count + 1);
    let mut seg = 0;
    let mut seg_start = 0.0;
    let mut seg_len = line[0].distance(line[1]);
    for n in 0..count {
        let s = (n as f64 * step).min(total);
        while seg + 2 < line.len() && s > seg_start + seg_len {
            seg_start += seg_len;
            seg += 1;
            seg_len = line[seg].distance(line[seg + 1]);
        }
        let t = if seg_len > 0.0 { ((s - seg_start) / seg_len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(line[seg].lerp(line[seg + 1], t));
    }
    let end = *line.last().expect("non-empty");
    let tail = total - (count - 1) as f64 * step;
    if out.len() == 1 || tail > step / 2.0 {
        out.push(end);
    } else if tail.abs() <= 1e-9 * total.max(1.0) {
        // the last sample sits on the end vertex; pin it exactly
        *out.last_mut().expect("non-empty") = end;
    }
    Ok(out)
}

/// Point at arc length `s` (clamped to the line).
pub fn point_at_arclength(line: &[Vec3], s: f64) -> Vec3 {
    let mut acc = 0.0;
    for w in line.windows(2) {
        let len = w[0].distance(w[1]);
        if acc + len >= s {
            let t = if len > 0.0 { ((s - acc) / len).clamp(0.0, 1.0) } else { 0.0 };
            return w[0].lerp(w[1], t);
        }
        acc += len;
    }
    *line.last().expect("non-empty line")
}

pub fn point_to_polyline_distance(p: Vec3, line: &[Vec3]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => only.distance(p),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]).0)
            .fold(f64::INFINITY, f64::min),
    }
}

/// Label mask with tubes of `radius` around every labeled centerline. A
/// voxel takes the class of the nearest line within `radius`; equal
/// distances go to the smaller class index. Unlabeled lines are skipped.
pub fn dilate_to_mask(lines: &CenterlineSet, geometry: &Geometry, radius: f64) -> LabelGrid {
    let n = geometry.len();
    let mut best_dist = vec![f64::INFINITY; n];
    let mut labels = vec![0u8; n];
    for rib in &lines.ribs {
        let Some(class) = rib.label.class() else { continue };
        for w in rib.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            let lo = Vec3::new(a.x.min(b.x), a.y.min(b.y), a.z.min(b.z));
            let hi = Vec3::new(a.x.max(b.x), a.y.max(b.y), a.z.max(b.z));
            let Some(ranges) = box_ranges(geometry, lo, hi, radius) else { continue };
            for k in ranges[2].0..=ranges[2].1 {
                for j in ranges[1].0..=ranges[1].1 {
                    for i in ranges[0].0..=ranges[0].1 {
                        let p = geometry.world_of_unchecked(i, j, k);
                        let d = point_segment_distance(p, a, b).0;
                        if d > radius {
                            continue;
                        }
                        let idx = geometry.index(i, j, k);
                        if d < best_dist[idx] || (d == best_dist[idx] && class < labels[idx]) {
                            best_dist[idx] = d;
                            labels[idx] = class;
                        }
                    }
                }
            }
        }
    }
    LabelGrid::new(*geometry, labels).expect("same geometry")
}

/// Voxel index ranges covering the box `[lo, hi]` grown by `margin`.
pub(crate) fn box_ranges(g: &Geometry, lo: Vec3, hi: Vec3, margin: f64) -> Option<[(usize, usize); 3]> {
    let mut out = [(0, 0); 3];
    for axis in 0..3 {
        let a = (lo[axis] - margin - g.origin[axis]) / g.spacing[axis] - 1e-9;
        let b = (hi[axis] + margin - g.origin[axis]) / g.spacing[axis] + 1e-9;
        let a = a.ceil().max(0.0);
        let b = b.floor().min(g.dims[axis] as f64 - 1.0);
        if a > b {
            return None;
        }
        out[axis] = (a as usize, b as usize);
    }
    Some(out)
}
