//! Axis-aligned voxel volumes with world coordinate mapping.
//!
//! Voxel `(i, j, k)` has its centre at `origin + (i, j, k) * spacing` and is
//! stored at `i + nx * (j + ny * k)` (x fastest).

mod rvf;

pub use rvf::{read_rvf, write_rvf, RvfVolume};

use crate::error::{Error, Result};
use crate::geom::Vec3;

const HULL_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub dims: [usize; 3],
    pub spacing: Vec3,
    pub origin: Vec3,
}

impl Geometry {
    pub fn new(dims: [usize; 3], spacing: Vec3, origin: Vec3) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidGeometry(format!("dims {dims:?} must be positive")));
        }
        for s in spacing.to_array() {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidGeometry(format!(
                    "spacing {:?} must be positive",
                    spacing.to_array()
                )));
            }
        }
        if origin.to_array().iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGeometry("origin must be finite".into()));
        }
        dims.iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| Error::InvalidGeometry("voxel count overflows".into()))?;
        Ok(Geometry { dims, spacing, origin })
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    /// Inverse of [`Geometry::index`].
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        i < self.dims[0] && j < self.dims[1] && k < self.dims[2]
    }

    pub fn world_of(&self, i: usize, j: usize, k: usize) -> Result<Vec3> {
        if !self.contains(i, j, k) {
            return Err(Error::OutOfBounds(i, j, k));
        }
        Ok(self.world_of_unchecked(i, j, k))
    }

    #[inline]
    pub fn world_of_unchecked(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin.x + i as f64 * self.spacing.x,
            self.origin.y + j as f64 * self.spacing.y,
            self.origin.z + k as f64 * self.spacing.z,
        )
    }

    /// Continuous voxel coordinates of a world point.
    #[inline]
    pub fn continuous_index(&self, p: Vec3) -> Vec3 {
        Vec3::new(
            (p.x - self.origin.x) / self.spacing.x,
            (p.y - self.origin.y) / self.spacing.y,
            (p.z - self.origin.z) / self.spacing.z,
        )
    }

    /// Nearest voxel of a world point, if it falls inside the grid.
    pub fn voxel_of(&self, p: Vec3) -> Option<[usize; 3]> {
        let c = self.continuous_index(p);
        let mut out = [0usize; 3];
        for axis in 0..3 {
            let r = c[axis].round();
            if !(r >= 0.0 && r < self.dims[axis] as f64) {
                return None;
            }
            out[axis] = r as usize;
        }
        Some(out)
    }

    /// World coordinate of the last node along each axis.
    pub fn far_corner(&self) -> Vec3 {
        self.world_of_unchecked(self.dims[0] - 1, self.dims[1] - 1, self.dims[2] - 1)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.x.min(self.spacing.y).min(self.spacing.z)
    }

    /// Inclusive index range of voxels whose centres may lie within
    /// `radius` of `center` along `axis`; `None` when the range is empty.
    pub(crate) fn axis_range(&self, center: Vec3, radius: f64, axis: usize) -> Option<(usize, usize)> {
        let c = self.continuous_index(center)[axis];
        let r = radius / self.spacing[axis];
        let lo = (c - r).ceil().max(0.0);
        let hi = (c + r).floor().min(self.dims[axis] as f64 - 1.0);
        (lo <= hi).then(|| (lo as usize, hi as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    geometry: Geometry,
    values: Vec<T>,
}

/// Scalar volume.
pub type VoxelGrid = Grid<f32>;

impl<T: Copy> Grid<T> {
    pub fn new(geometry: Geometry, values: Vec<T>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} values for {} voxels",
                values.len(),
                geometry.len()
            )));
        }
        Ok(Grid { geometry, values })
    }

    pub fn filled(geometry: Geometry, value: T) -> Self {
        Grid { values: vec![value; geometry.len()], geometry }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.geometry.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: T) {
        let idx = self.geometry.index(i, j, k);
        self.values[idx] = v;
    }

    pub fn world_of(&self, i: usize, j: usize, k: usize) -> Result<Vec3> {
        self.geometry.world_of(i, j, k)
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid { geometry: self.geometry, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Same values under a different origin (a rigid translation).
    pub fn with_origin(mut self, origin: Vec3) -> Self {
        self.geometry.origin = origin;
        self
    }

    /// Mirror image about the grid's central x plane.
    pub fn flipped_x(&self) -> Self {
        let [nx, ny, nz] = self.geometry.dims;
        let mut values = Vec::with_capacity(self.values.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    values.push(self.get(nx - 1 - i, j, k));
                }
            }
        }
        Grid { geometry: self.geometry, values }
    }

    /// Sub-volume of the slices `k_lo..=k_hi`.
    pub fn crop_z(&self, k_lo: usize, k_hi: usize) -> Result<Self> {
        let [nx, ny, nz] = self.geometry.dims;
        if k_lo > k_hi || k_hi >= nz {
            return Err(Error::InvalidGeometry(format!("z crop {k_lo}..={k_hi} outside 0..{nz}")));
        }
        let slice = nx * ny;
        let values = self.values[k_lo * slice..(k_hi + 1) * slice].to_vec();
        let mut origin = self.geometry.origin;
        origin.z += k_lo as f64 * self.geometry.spacing.z;
        let geometry = Geometry::new([nx, ny, k_hi - k_lo + 1], self.geometry.spacing, origin)?;
        Grid::new(geometry, values)
    }
}

impl Grid<f32> {
    /// Trilinear interpolation at a world point; zero outside the node hull.
    pub fn sample_trilinear(&self, p: Vec3) -> f64 {
        let c = self.geometry.continuous_index(p);
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..3 {
            let n = self.geometry.dims[axis];
            let f = c[axis];
            if !(f >= -HULL_EPS && f <= (n - 1) as f64 + HULL_EPS) {
                return 0.0;
            }
            let f = f.clamp(0.0, (n - 1) as f64);
            if n == 1 {
                continue;
            }
            let i0 = (f.floor() as usize).min(n - 2);
            base[axis] = i0;
            frac[axis] = f - i0 as f64;
        }
        self.interpolate(base, frac)
    }

    /// Trilinear interpolation with coordinates clamped into the hull.
    fn sample_clamped(&self, p: Vec3) -> f64 {
        let c = self.geometry.continuous_index(p);
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for axis in 0..3 {
            let n = self.geometry.dims[axis];
            if n == 1 {
                continue;
            }
            let f = c[axis].clamp(0.0, (n - 1) as f64);
            let i0 = (f.floor() as usize).min(n - 2);
            base[axis] = i0;
            frac[axis] = f - i0 as f64;
        }
        self.interpolate(base, frac)
    }

    #[inline]
    fn interpolate(&self, base: [usize; 3], frac: [f64; 3]) -> f64 {
        let [nx, ny, nz] = self.geometry.dims;
        let step = [usize::from(nx > 1), usize::from(ny > 1), usize::from(nz > 1)];
        let mut acc = 0.0;
        for dk in 0..=step[2] {
            let wz = if dk == 0 { 1.0 - frac[2] } else { frac[2] };
            if wz == 0.0 {
                continue;
            }
            for dj in 0..=step[1] {
                let wy = if dj == 0 { 1.0 - frac[1] } else { frac[1] };
                if wy == 0.0 {
                    continue;
                }
                for di in 0..=step[0] {
                    let wx = if di == 0 { 1.0 - frac[0] } else { frac[0] };
                    if wx == 0.0 {
                        continue;
                    }
                    let v = self.get(base[0] + di, base[1] + dj, base[2] + dk);
                    acc += wx * wy * wz * v as f64;
                }
            }
        }
        acc
    }

    /// Resample onto an isotropic grid with the same origin covering the
    /// same world extent. Nodes overshooting the old hull take the value of
    /// the nearest hull point.
    pub fn resample_isotropic(&self, target_spacing: f64) -> Result<VoxelGrid> {
        let geometry = isotropic_geometry(&self.geometry, target_spacing)?;
        let [nx, ny, nz] = geometry.dims;
        let mut values = Vec::with_capacity(geometry.len());
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    let p = geometry.world_of_unchecked(i, j, k);
                    values.push(self.sample_clamped(p) as f32);
                }
            }
        }
        Grid::new(geometry, values)
    }
}

fn isotropic_geometry(g: &Geometry, t: f64) -> Result<Geometry> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidGeometry(format!("target spacing {t} must be positive")));
    }
    let mut dims = [0usize; 3];
    for (axis, d) in dims.iter_mut().enumerate() {
        let extent = (g.dims[axis] - 1) as f64 * g.spacing[axis];
        // tolerate round-off when the extent is an exact multiple of t
        *d = ((extent / t) - 1e-9).ceil().max(0.0) as usize + 1;
    }
    Geometry::new(dims, Vec3::new(t, t, t), g.origin)
}

/// Four-channel class probability volume: background, first rib, twelfth
/// rib, intermediate rib.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    channels: [VoxelGrid; 4],
}

pub const BACKGROUND: usize = 0;
pub const FIRST_RIB: usize = 1;
pub const TWELFTH_RIB: usize = 2;
pub const INTERMEDIATE_RIB: usize = 3;

impl ProbabilityMap {
    pub fn new(channels: [VoxelGrid; 4]) -> Result<Self> {
        let g = *channels[0].geometry();
        if channels.iter().any(|c| *c.geometry() != g) {
            return Err(Error::GeometryMismatch);
        }
        for (c, ch) in channels.iter().enumerate() {
            if let Some(v) = ch.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidGeometry(format!(
                    "channel {c} holds {v}, outside [0, 1]"
                )));
            }
        }
        Ok(ProbabilityMap { channels })
    }

    pub fn geometry(&self) -> &Geometry {
        self.channels[0].geometry()
    }

    pub fn channel(&self, c: usize) -> &VoxelGrid {
        &self.channels[c]
    }

    pub fn channels(&self) -> &[VoxelGrid; 4] {
        &self.channels
    }

    pub fn into_channels(self) -> [VoxelGrid; 4] {
        self.channels
    }

    /// Class probabilities of one voxel by flat index.
    #[inline]
    pub fn probabilities(&self, idx: usize) -> [f32; 4] {
        [
            self.channels[0].values()[idx],
            self.channels[1].values()[idx],
            self.channels[2].values()[idx],
            self.channels[3].values()[idx],
        ]
    }

    pub fn resample_isotropic(&self, target_spacing: f64) -> Result<Self> {
        let [a, b, c, d] = &self.channels;
        ProbabilityMap::new([
            a.resample_isotropic(target_spacing)?,
            b.resample_isotropic(target_spacing)?,
            c.resample_isotropic(target_spacing)?,
            d.resample_isotropic(target_spacing)?,
        ])
    }

    pub fn with_origin(self, origin: Vec3) -> Self {
        ProbabilityMap { channels: self.channels.map(|c| c.with_origin(origin)) }
    }

    pub fn flipped_x(&self) -> Self {
        ProbabilityMap { channels: std::array::from_fn(|c| self.channels[c].flipped_x()) }
    }

    pub fn crop_z(&self, k_lo: usize, k_hi: usize) -> Result<Self> {
        let [a, b, c, d] = &self.channels;
        Ok(ProbabilityMap {
            channels: [
                a.crop_z(k_lo, k_hi)?,
                b.crop_z(k_lo, k_hi)?,
                c.crop_z(k_lo, k_hi)?,
                d.crop_z(k_lo, k_hi)?,
            ],
        })
    }
}
