use crate::centerline::{RibCenterline, RibLabel, Side};
use crate::geom::Vec3;
use crate::tracer::eigen::{principal_direction, symmetric_eigen};
use crate::tracer::moments::sphere_moments;
use crate::tracer::{mirror_consistent, TraceParams, TraceState, MIN_ANISOTROPY};
use crate::volgrid::VoxelGrid;

const SUBSTEP_MM: f64 = 1.0;
const CONE_POLAR_STEP_DEG: f64 = 5.0;
const CONE_LATERAL_STEP_MM: f64 = 1.0;
const MAX_STEPS: usize = 2000;

/// Traces a rib through `seed` in both directions. Returns `None` when
/// fewer than two distinct control points were found.
pub fn trace_rib(q: &VoxelGrid, seed: &TraceState, params: &TraceParams) -> Option<RibCenterline> {
    let mut backward = trace_direction(q, seed.center, -seed.tangent, params);
    let forward = trace_direction(q, seed.center, seed.tangent, params);
    backward.reverse();
    backward.push(seed.center);
    backward.extend(forward);
    backward.dedup_by(|a, b| a.distance(*b) <= 1e-9);
    RibCenterline::new(backward, RibLabel::Unlabeled, Side::Unknown).ok()
}

/// Control points reached from `start` (excluded) marching along `tangent`.
pub(crate) fn trace_direction(q: &VoxelGrid, start: Vec3, tangent: Vec3, params: &TraceParams) -> Vec<Vec3> {
    let thr = params.prob_threshold;
    let radius = params.sphere_radius();
    let mut points = Vec::new();
    let mut c = start;
    let mut t = tangent;

    for _ in 0..MAX_STEPS {
        let stop = march(q, c, t, params);
        let Some(m) = sphere_moments(q, stop, radius) else { break };
        let progress = (m.mean - c).dot(t);
        let t_next = local_tangent(q, m.mean, (m.mean - c).normalized().unwrap_or(t), t, radius);
        if progress > 0.0 {
            points.push(m.mean);
            c = m.mean;
        }
        if progress >= params.stall_threshold_mm {
            match t_next {
                Some(t_next) => t = t_next,
                None => break,
            }
            continue;
        }

        // stalled: the sphere holds only a stub, so keep the incoming
        // tangent and look past a drop-out for a continuation
        let Some(hit) = cone_search(q, c, t, params) else { break };
        let Some(m) = sphere_moments(q, hit, radius) else { break };
        if (m.mean - c).dot(t) < params.stall_threshold_mm || q.sample_trilinear(m.mean) < thr {
            break;
        }
        points.push(m.mean);
        c = m.mean;
    }
    points
}

/// Principal axis of the sphere moments centred on `center`, oriented
/// along `motion`. Near-isotropic moments (rib ends, drop-out edges) keep
/// the previous tangent.
fn local_tangent(q: &VoxelGrid, center: Vec3, motion: Vec3, previous: Vec3, radius: f64) -> Option<Vec3> {
    let m = sphere_moments(q, center, radius)?;
    let eig = symmetric_eigen(&m.covariance).ok()?;
    if eig.values[0] < MIN_ANISOTROPY * eig.values[1] {
        return Some(previous);
    }
    principal_direction(&m.covariance, Some(motion)).ok()
}

/// Point where marching from `c` along `t` first samples `q` below the
/// threshold, or the full step length.
fn march(q: &VoxelGrid, c: Vec3, t: Vec3, params: &TraceParams) -> Vec3 {
    let mut s = 0.0;
    loop {
        s = (s + SUBSTEP_MM).min(params.max_step_mm);
        let p = c + t * s;
        if q.sample_trilinear(p) < params.prob_threshold || s >= params.max_step_mm {
            return p;
        }
    }
}

/// Unit ray directions of the search cone around `axis`, axis first.
pub(crate) fn cone_directions(axis: Vec3, half_angle_deg: f64, length: f64) -> Vec<Vec3> {
    let helper = if axis.z.abs() < 0.9 { Vec3::Z } else { Vec3::Y };
    let e1 = (helper - axis * helper.dot(axis)).normalized().expect("non-parallel helper");
    let e2 = mirror_consistent(axis.cross(e1));
    let mut dirs = vec![axis];
    let rings = (half_angle_deg / CONE_POLAR_STEP_DEG + 1e-9).floor() as usize;
    for ring in 1..=rings {
        let phi = (ring as f64 * CONE_POLAR_STEP_DEG).to_radians();
        let circumference = 2.0 * std::f64::consts::PI * length * phi.sin();
        let n = ((circumference / CONE_LATERAL_STEP_MM).ceil() as usize).max(6);
        for a in 0..n {
            let psi = 2.0 * std::f64::consts::PI * a as f64 / n as f64;
            let lateral = e1 * psi.cos() + e2 * psi.sin();
            dirs.push(axis * phi.cos() + lateral * phi.sin());
        }
    }
    dirs
}

/// Nearest point in the forward cone with `q` above threshold that lies
/// beyond a sub-threshold gap along its ray.
pub(crate) fn cone_search(q: &VoxelGrid, apex: Vec3, axis: Vec3, params: &TraceParams) -> Option<Vec3> {
    let dirs = cone_directions(axis, params.cone_half_angle_deg, params.cone_length_mm);
    let mut gap_seen = vec![false; dirs.len()];
    let steps = (params.cone_length_mm / SUBSTEP_MM + 1e-9).floor() as usize;
    for n in 1..=steps {
        let d = n as f64 * SUBSTEP_MM;
        for (dir, gap) in dirs.iter().zip(gap_seen.iter_mut()) {
            let p = apex + *dir * d;
            if q.sample_trilinear(p) >= params.prob_threshold {
                if *gap {
                    return Some(p);
                }
            } else {
                *gap = true;
            }
        }
    }
    None
}
