use crate::geom::Vec3;
use crate::tracer::eigen::Mat3;
use crate::volgrid::VoxelGrid;

/// Probability-weighted first and second moments of a spherical region.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean: Vec3,
    pub covariance: Mat3,
    pub mass: f64,
}

/// Weighted mean and covariance over voxel centres within `radius` of
/// `center`; `None` when the sphere carries no probability.
pub fn sphere_moments(q: &VoxelGrid, center: Vec3, radius: f64) -> Option<Moments> {
    let g = q.geometry();
    let (i0, i1) = g.axis_range(center, radius, 0)?;
    let (j0, j1) = g.axis_range(center, radius, 1)?;
    let (k0, k1) = g.axis_range(center, radius, 2)?;
    let r2 = radius * radius;

    let mut samples = Vec::new();
    for k in k0..=k1 {
        for j in j0..=j1 {
            for i in i0..=i1 {
                let w = q.get(i, j, k) as f64;
                if w <= 0.0 {
                    continue;
                }
                let p = g.world_of_unchecked(i, j, k);
                if (p - center).norm_squared() <= r2 {
                    samples.push((p, w));
                }
            }
        }
    }
    let mass: f64 = samples.iter().map(|s| s.1).sum();
    if mass <= 0.0 {
        return None;
    }
    let mean = samples.iter().fold(Vec3::ZERO, |acc, &(p, w)| acc + p * w) / mass;
    let mut cov = [[0.0; 3]; 3];
    for &(p, w) in &samples {
        let d = (p - mean).to_array();
        for a in 0..3 {
            for b in a..3 {
                cov[a][b] += w * d[a] * d[b];
            }
        }
    }
    for a in 0..3 {
        for b in a..3 {
            cov[a][b] /= mass;
            cov[b][a] = cov[a][b];
        }
    }
    Some(Moments { mean, covariance: cov, mass })
}
