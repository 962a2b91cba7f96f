use crate::centerline::Side;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::tracer::eigen::{principal_direction, symmetric_eigen};
use crate::tracer::moments::sphere_moments;
use crate::tracer::{RibCageBox, SearchContext, TraceParams, TraceState, MIN_ANISOTROPY};
use crate::volgrid::VoxelGrid;

/// Seeds found for the left and right sides.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialSeeds {
    pub left: Option<TraceState>,
    pub right: Option<TraceState>,
}

/// Window anchor for `side`: the configured fraction of the left-right
/// extent, on the posterior face, at the middle of the box's z range.
pub fn seed_anchor(b: &RibCageBox, side: Side, params: &TraceParams) -> Vec3 {
    let z = b.z_mid();
    let f = match side {
        Side::Right => params.anchor_fractions[1],
        _ => params.anchor_fractions[0],
    };
    let (l, r) = (b.left.at(z), b.right.at(z));
    Vec3::new(l + f * (r - l), b.posterior.at(z), z)
}

pub fn initial_rib_detection(q: &VoxelGrid, b: &RibCageBox, params: &TraceParams) -> Result<InitialSeeds> {
    let ctx = SearchContext::default();
    let left = seed_in_window(q, seed_anchor(b, Side::Left, params), params, &ctx);
    let right = seed_in_window(q, seed_anchor(b, Side::Right, params), params, &ctx);
    if left.is_none() && right.is_none() {
        return Err(Error::NoRibsDetected);
    }
    Ok(InitialSeeds { left, right })
}

/// Scans the sagittal window around `anchor` nearest-first and returns the
/// first admissible hit refined by sphere moments.
pub fn seed_in_window(q: &VoxelGrid, anchor: Vec3, params: &TraceParams, ctx: &SearchContext) -> Option<TraceState> {
    let step = q.geometry().min_spacing();
    let ny = (params.search_window_mm[0] / 2.0 / step + 1e-9).floor() as i64;
    let nz = (params.search_window_mm[1] / 2.0 / step + 1e-9).floor() as i64;
    let mut offsets: Vec<(i64, i64)> = Vec::with_capacity(((2 * ny + 1) * (2 * nz + 1)) as usize);
    for b in -nz..=nz {
        for a in -ny..=ny {
            offsets.push((a, b));
        }
    }
    offsets.sort_by_key(|&(a, b)| (a * a + b * b, b, a));

    for (a, b) in offsets {
        let p = anchor + Vec3::new(0.0, a as f64 * step, b as f64 * step);
        if q.sample_trilinear(p) < params.prob_threshold || !ctx.admissible(p, params) {
            continue;
        }
        if let Some(state) = refine_seed(q, p, None, params, ctx) {
            return Some(state);
        }
    }
    None
}

/// Sphere-moment seed at `hit`, rejected when its centroid falls below the
/// threshold, is not admissible, or the moments have no dominant axis.
pub(crate) fn refine_seed(
    q: &VoxelGrid,
    hit: Vec3,
    reference: Option<Vec3>,
    params: &TraceParams,
    ctx: &SearchContext,
) -> Option<TraceState> {
    let m = sphere_moments(q, hit, params.sphere_radius())?;
    if q.sample_trilinear(m.mean) < params.prob_threshold || !ctx.admissible(m.mean, params) {
        return None;
    }
    let eig = symmetric_eigen(&m.covariance).ok()?;
    if eig.values[0] < MIN_ANISOTROPY * eig.values[1] {
        return None;
    }
    let t = principal_direction(&m.covariance, reference).ok()?;
    Some(TraceState::new(m.mean, t, m.covariance))
}
