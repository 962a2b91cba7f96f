use crate::centerline::{point_at_arclength, RibCenterline};
use crate::geom::Vec3;
use crate::tracer::seed::refine_seed;
use crate::tracer::{mirror_consistent, SearchContext, TraceParams, TraceState};
use crate::volgrid::VoxelGrid;

const FAN_RADIAL_STEP_MM: f64 = 2.0;
const FAN_ANGULAR_STEP_DEG: f64 = 5.0;
const TANGENT_HALF_WINDOW_MM: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    fn unit(self) -> Vec3 {
        match self {
            Direction::Up => Vec3::Z,
            Direction::Down => -Vec3::Z,
        }
    }
}

/// Searches planar fans anchored along `reference` (ordered spine to
/// distal) for an untraced neighbor rib in `direction`.
pub fn find_neighbor_rib(
    q: &VoxelGrid,
    reference: &RibCenterline,
    hint: Option<&RibCenterline>,
    direction: Direction,
    ctx: &SearchContext,
    params: &TraceParams,
) -> Option<TraceState> {
    let line = &reference.points;
    let length = reference.length();
    let mut s = params.fan_anchor_offset_mm.min(length);
    loop {
        let anchor = point_at_arclength(line, s);
        let ahead = point_at_arclength(line, s + TANGENT_HALF_WINDOW_MM);
        let behind = point_at_arclength(line, (s - TANGENT_HALF_WINDOW_MM).max(0.0));
        if let Some(normal) = (ahead - behind).normalized() {
            let opening = opening_direction(anchor, normal, hint, direction, params);
            if let Some(opening) = opening {
                if let Some(state) = scan_fan(q, anchor, normal, opening, ctx, params) {
                    return Some(state);
                }
            }
        }
        s += params.fan_step_mm;
        if s > length {
            return None;
        }
    }
}

fn project(v: Vec3, normal: Vec3) -> Vec3 {
    v - normal * v.dot(normal)
}

/// In-plane fan axis: away from where the hint rib crosses the fan plane
/// (the hint lies on the far side of the reference), else the vertical
/// search direction.
fn opening_direction(
    anchor: Vec3,
    normal: Vec3,
    hint: Option<&RibCenterline>,
    direction: Direction,
    params: &TraceParams,
) -> Option<Vec3> {
    let up = direction.unit();
    if let Some(x) = hint.and_then(|h| plane_crossing(&h.points, anchor, normal)) {
        if x.distance(anchor) <= 2.0 * params.fan_radius_mm {
            if let Some(o) = project(anchor - x, normal).normalized() {
                if o.dot(up) > 0.0 {
                    return Some(o);
                }
            }
        }
    }
    project(up, normal).normalized()
}

/// Intersection of a polyline with the plane through `anchor`, nearest to
/// the anchor.
fn plane_crossing(points: &[Vec3], anchor: Vec3, normal: Vec3) -> Option<Vec3> {
    let mut best: Option<Vec3> = None;
    for w in points.windows(2) {
        let da = (w[0] - anchor).dot(normal);
        let db = (w[1] - anchor).dot(normal);
        if da * db > 0.0 || da == db {
            continue;
        }
        let x = w[0].lerp(w[1], da / (da - db));
        if best.is_none_or(|b| x.distance(anchor) < b.distance(anchor)) {
            best = Some(x);
        }
    }
    best
}

/// Fan samples ordered by radius, then by angle 0, +a, -a, +2a, ...
pub(crate) fn fan_samples(anchor: Vec3, normal: Vec3, opening: Vec3, params: &TraceParams) -> Vec<Vec3> {
    let binormal = mirror_consistent(normal.cross(opening));
    let radii = (params.fan_radius_mm / FAN_RADIAL_STEP_MM + 1e-9).floor() as usize;
    let angles = (params.fan_half_angle_deg / FAN_ANGULAR_STEP_DEG + 1e-9).floor() as i64;
    let mut order = vec![0i64];
    for a in 1..=angles {
        order.push(a);
        order.push(-a);
    }
    let mut out = Vec::with_capacity(radii * order.len());
    for n in 1..=radii {
        let r = n as f64 * FAN_RADIAL_STEP_MM;
        for &a in &order {
            let phi = (a as f64 * FAN_ANGULAR_STEP_DEG).to_radians();
            out.push(anchor + (opening * phi.cos() + binormal * phi.sin()) * r);
        }
    }
    out
}

fn scan_fan(
    q: &VoxelGrid,
    anchor: Vec3,
    normal: Vec3,
    opening: Vec3,
    ctx: &SearchContext,
    params: &TraceParams,
) -> Option<TraceState> {
    for p in fan_samples(anchor, normal, opening, params) {
        if q.sample_trilinear(p) < params.prob_threshold || !ctx.admissible(p, params) {
            continue;
        }
        if let Some(state) = refine_seed(q, p, Some(normal), params, ctx) {
            return Some(state);
        }
    }
    None
}
