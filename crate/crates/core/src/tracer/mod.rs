//! Rib cage box detection, seeding, ridge tracing with drop-out bridging,
//! fan-based neighbor discovery and anatomical labeling.

mod bbox;
pub mod eigen;
mod fan;
mod label;
mod moments;
mod params;
mod seed;
mod trace;

pub use bbox::{detect_bounding_box, LinearFace, RibCageBox};
pub use eigen::{principal_direction, symmetric_eigen, Mat3, SymmetricEigen};
pub use fan::{find_neighbor_rib, Direction};
pub use label::label_ribs;
pub use moments::{sphere_moments, Moments};
pub use params::TraceParams;
pub use seed::{initial_rib_detection, seed_anchor, seed_in_window, InitialSeeds};
pub use trace::trace_rib;

use crate::centerline::{point_to_polyline_distance, resample_arclength, CenterlineSet, RibCenterline, Side};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::probmap::combined_probability;
use crate::volgrid::{ProbabilityMap, VoxelGrid};

/// Tracer state at a control point.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    pub center: Vec3,
    /// Unit tangent.
    pub tangent: Vec3,
    pub covariance: Mat3,
    pub history: Vec<Vec3>,
}

impl TraceState {
    pub fn new(center: Vec3, tangent: Vec3, covariance: Mat3) -> Self {
        let tangent = tangent.normalized().unwrap_or(Vec3::X);
        TraceState { center, tangent, covariance, history: vec![center] }
    }
}

/// Where new seeds may not be placed: near traced centerlines, near
/// rejected seeds, or on the other half of the rib cage.
#[derive(Debug, Clone, Copy, Default)]
pub struct SearchContext<'a> {
    pub existing: &'a [RibCenterline],
    pub excluded: &'a [Vec3],
    pub half: Option<(&'a RibCageBox, Side)>,
}

impl SearchContext<'_> {
    pub fn admissible(&self, p: Vec3, params: &TraceParams) -> bool {
        let d = params.duplicate_distance_mm;
        if let Some((b, side)) = self.half {
            if b.is_left(p) != (side == Side::Left) {
                return false;
            }
        }
        self.excluded.iter().all(|e| e.distance(p) > d)
            && self.existing.iter().all(|r| point_to_polyline_distance(p, &r.points) > d)
    }
}

/// Sign of an in-plane axis built by a cross product, fixed by its y/z
/// components so that scan orders commute with mirroring in x.
pub(crate) fn mirror_consistent(v: Vec3) -> Vec3 {
    let key = if v.y.abs() >= v.z.abs() { v.y } else { v.z };
    if key < 0.0 {
        -v
    } else {
        v
    }
}

/// Minimum ratio of the two largest covariance eigenvalues for a sphere to
/// define a direction.
pub(crate) const MIN_ANISOTROPY: f64 = 1.5;
const MAX_SEED_RETRIES: usize = 32;
const MAX_RIBS_PER_SIDE: usize = 24;

/// Full pipeline: box, per-side seeding and tracing, neighbor discovery in
/// both vertical directions, ordering and labeling.
pub fn extract_all(prob: &ProbabilityMap, params: &TraceParams) -> Result<CenterlineSet> {
    params.validate()?;
    let q = combined_probability(prob);
    let cage = detect_bounding_box(&q, params)?;
    let mut ribs: Vec<RibCenterline> = Vec::new();

    for side in [Side::Left, Side::Right] {
        let anchor = seed_anchor(&cage, side, params);
        let first = accept_trace(&q, &cage, side, &mut ribs, params, |ctx| {
            seed_in_window(&q, anchor, params, ctx)
        });
        if !first {
            continue;
        }
        for direction in [Direction::Up, Direction::Down] {
            while ribs.iter().filter(|r| r.side == side).count() < MAX_RIBS_PER_SIDE {
                let mut own: Vec<&RibCenterline> = ribs.iter().filter(|r| r.side == side).collect();
                own.sort_by(|a, b| a.mean_z().total_cmp(&b.mean_z()));
                if direction == Direction::Down {
                    own.reverse();
                }
                // outermost rib in the search direction, hint is its inner neighbor
                let reference = own[own.len() - 1].clone();
                let hint = (own.len() >= 2).then(|| own[own.len() - 2].clone());
                let found = accept_trace(&q, &cage, side, &mut ribs, params, |ctx| {
                    find_neighbor_rib(&q, &reference, hint.as_ref(), direction, ctx, params)
                });
                if !found {
                    break;
                }
            }
        }
    }

    if ribs.is_empty() {
        return Err(Error::NoRibsDetected);
    }
    let mut set = CenterlineSet::new("", ribs);
    set.sort_feet_to_head();
    Ok(label_ribs(set, prob, params))
}

/// Repeatedly seeds with `find`, traces, and keeps the first trace that is
/// long enough and not a duplicate; rejected seeds are excluded from later
/// attempts.
fn accept_trace(
    q: &VoxelGrid,
    cage: &RibCageBox,
    side: Side,
    ribs: &mut Vec<RibCenterline>,
    params: &TraceParams,
    find: impl Fn(&SearchContext) -> Option<TraceState>,
) -> bool {
    let mut excluded: Vec<Vec3> = Vec::new();
    for _ in 0..MAX_SEED_RETRIES {
        let ctx = SearchContext { existing: ribs, excluded: &excluded, half: Some((cage, side)) };
        let Some(seed) = find(&ctx) else { return false };
        match trace_rib(q, &seed, params) {
            Some(mut rib) if rib.length() >= params.min_rib_length_mm && !is_duplicate(&rib, ribs, params) => {
                orient_spine_first(&mut rib, cage);
                rib.side = side;
                ribs.push(rib);
                return true;
            }
            _ => excluded.push(seed.center),
        }
    }
    false
}

/// Whether more than half of the rib's 1 mm samples lie within the
/// duplicate distance of a single existing centerline.
fn is_duplicate(rib: &RibCenterline, existing: &[RibCenterline], params: &TraceParams) -> bool {
    let Ok(samples) = resample_arclength(&rib.points, 1.0) else { return true };
    existing.iter().any(|other| {
        let close = samples
            .iter()
            .filter(|p| point_to_polyline_distance(**p, &other.points) <= params.duplicate_distance_mm)
            .count();
        2 * close > samples.len()
    })
}

/// Orders the rib so it starts at the end nearer the posterior midline.
fn orient_spine_first(rib: &mut RibCenterline, cage: &RibCageBox) {
    let planar = |p: Vec3| {
        let s = cage.spine_point(p.z);
        (p.x - s.x).hypot(p.y - s.y)
    };
    if planar(rib.last()) < planar(rib.first()) {
        rib.reverse();
    }
}
