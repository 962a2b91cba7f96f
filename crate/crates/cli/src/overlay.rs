use std::str::FromStr;

use anyhow::bail;
use ribtrace::centerline::resample_arclength;
use ribtrace::{CenterlineSet, VoxelGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Axis> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => bail!("unknown axis {other:?}; expected x, y or z"),
        }
    }
}

/// 8-bit grayscale image, rows top to bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    /// Binary PGM (P5) encoding.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// Image (column, row) of voxel (i, j, k). Projections along x and y put
/// the head at the top; the axial projection puts anterior at the top.
fn pixel_of(dims: [usize; 3], axis: Axis, [i, j, k]: [usize; 3]) -> (usize, usize) {
    match axis {
        Axis::X => (j, dims[2] - 1 - k),
        Axis::Y => (i, dims[2] - 1 - k),
        Axis::Z => (i, j),
    }
}

/// Maximum-intensity projection of `q` along `axis`, scaled to 0..=255,
/// with centerline samples set to 255.
pub fn project(q: &VoxelGrid, lines: &CenterlineSet, axis: Axis) -> Image {
    let g = *q.geometry();
    let d = g.dims;
    let (width, height) = match axis {
        Axis::X => (d[1], d[2]),
        Axis::Y => (d[0], d[2]),
        Axis::Z => (d[0], d[1]),
    };
    let mut mip = vec![0f32; width * height];
    for (idx, &v) in q.values().iter().enumerate() {
        let (c, r) = pixel_of(d, axis, g.coords(idx));
        let slot = &mut mip[r * width + c];
        *slot = slot.max(v);
    }
    let mut pixels: Vec<u8> = mip.iter().map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8).collect();

    let step = 0.5 * g.min_spacing();
    for rib in &lines.ribs {
        let samples = resample_arclength(&rib.points, step).unwrap_or_else(|_| rib.points.clone());
        for p in samples {
            if let Some(ijk) = g.voxel_of(p) {
                let (c, r) = pixel_of(d, axis, ijk);
                pixels[r * width + c] = 255;
            }
        }
    }
    Image { width, height, pixels }
}
