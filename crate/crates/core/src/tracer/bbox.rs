use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::tracer::TraceParams;
use crate::volgrid::VoxelGrid;

/// Border position as a linear function of z: `slope * z + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFace {
    pub slope: f64,
    pub intercept: f64,
}

impl LinearFace {
    pub fn at(&self, z: f64) -> f64 {
        self.slope * z + self.intercept
    }

    /// Least-squares fit of `values` against `zs`.
    fn fit(zs: &[f64], values: &[f64]) -> LinearFace {
        let n = zs.len() as f64;
        let zm = zs.iter().sum::<f64>() / n;
        let vm = values.iter().sum::<f64>() / n;
        let (mut szz, mut szv) = (0.0, 0.0);
        for (z, v) in zs.iter().zip(values) {
            szz += (z - zm) * (z - zm);
            szv += (z - zm) * (v - vm);
        }
        let slope = if szz > 0.0 { szv / szz } else { 0.0 };
        LinearFace { slope, intercept: vm - slope * zm }
    }
}

/// Rib cage box with inclined faces, valid over `z_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RibCageBox {
    pub z_range: [f64; 2],
    pub left: LinearFace,
    pub right: LinearFace,
    pub anterior: LinearFace,
    pub posterior: LinearFace,
}

impl RibCageBox {
    pub fn z_mid(&self) -> f64 {
        0.5 * (self.z_range[0] + self.z_range[1])
    }

    pub fn midline_x(&self, z: f64) -> f64 {
        0.5 * (self.left.at(z) + self.right.at(z))
    }

    /// Posterior midline point at height `z`, where the spine sits.
    pub fn spine_point(&self, z: f64) -> Vec3 {
        Vec3::new(self.midline_x(z), self.posterior.at(z), z)
    }

    /// Whether `p` lies on the low-x half of the box midline.
    pub fn is_left(&self, p: Vec3) -> bool {
        p.x < self.midline_x(p.z.clamp(self.z_range[0], self.z_range[1]))
    }
}

/// Fits the rib cage box from slice-wise bounding rectangles of `q`.
pub fn detect_bounding_box(q: &VoxelGrid, params: &TraceParams) -> Result<RibCageBox> {
    let g = q.geometry();
    let [nx, ny, nz] = g.dims;
    let thr = params.prob_threshold as f32;

    let mut rects: Vec<Option<[usize; 4]>> = Vec::with_capacity(nz);
    for k in 0..nz {
        let mut r: Option<[usize; 4]> = None;
        for j in 0..ny {
            for i in 0..nx {
                if q.get(i, j, k) >= thr {
                    let b = r.get_or_insert([i, i, j, j]);
                    b[0] = b[0].min(i);
                    b[1] = b[1].max(i);
                    b[2] = b[2].min(j);
                    b[3] = b[3].max(j);
                }
            }
        }
        let valid = r.filter(|b| {
            let wx = (b[1] - b[0] + 1) as f64 * g.spacing.x;
            let wy = (b[3] - b[2] + 1) as f64 * g.spacing.y;
            wx >= params.min_box_mm[0] && wy >= params.min_box_mm[1]
        });
        rects.push(valid);
    }

    // longest run of consecutive valid slices, lowest on ties
    let (mut best, mut start) = ((0, 0), None);
    for k in 0..=nz {
        let valid = k < nz && rects[k].is_some();
        match (valid, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                if k - s > best.1 - best.0 {
                    best = (s, k);
                }
                start = None;
            }
            _ => {}
        }
    }
    if best.1 - best.0 < 3 {
        return Err(Error::NoRibCage);
    }

    let run = best.0..best.1;
    let zs: Vec<f64> = run.clone().map(|k| g.origin.z + k as f64 * g.spacing.z).collect();
    let border = |f: &dyn Fn(&[usize; 4]) -> f64| -> Vec<f64> {
        run.clone().map(|k| f(rects[k].as_ref().expect("valid slice"))).collect()
    };
    let left = border(&|b| g.origin.x + b[0] as f64 * g.spacing.x);
    let right = border(&|b| g.origin.x + b[1] as f64 * g.spacing.x);
    let anterior = border(&|b| g.origin.y + b[2] as f64 * g.spacing.y);
    let posterior = border(&|b| g.origin.y + b[3] as f64 * g.spacing.y);

    Ok(RibCageBox {
        z_range: [zs[0], zs[zs.len() - 1]],
        left: LinearFace::fit(&zs, &left),
        right: LinearFace::fit(&zs, &right),
        anterior: LinearFace::fit(&zs, &anterior),
        posterior: LinearFace::fit(&zs, &posterior),
    })
}
