//! Synthetic rib cages: half-elliptical rib arcs with cranial narrowing,
//! rasterized into 4-class probability maps with optional degradations,
//! together with their ground-truth centerlines.
//!
//! World frame: x runs from the left (negative) to the right side, y from
//! anterior (negative) to posterior, z from the feet to the head. Rib 1 is
//! the most cranial pair; its spine end sits at `z = cage_height`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::centerline::{resample_arclength, CenterlineSet, RibCenterline, RibLabel, Side};
use crate::centerline::box_ranges;
use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, Vec3};
use crate::volgrid::{Geometry, ProbabilityMap, VoxelGrid, BACKGROUND, INTERMEDIATE_RIB};

/// Ellipse parameter at the spine end of every rib, degrees.
pub const SPINE_ANGLE_DEG: f64 = 75.0;
/// Ellipse parameter at the sternal end of every rib, degrees.
pub const STERNUM_ANGLE_DEG: f64 = -70.0;
const GRID_MARGIN_MM: f64 = 20.0;
const ARC_SAMPLE_MM: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSpec {
    pub pairs: u8,
    pub cage_width: f64,
    pub cage_depth: f64,
    pub cage_height: f64,
    /// Fraction of the width lost from the lowest to the highest rib.
    pub narrowing: f64,
    pub rib_radius: f64,
    pub rib_spacing: f64,
    pub seed: u64,
    pub degradations: Vec<Degradation>,
}

impl Default for PhantomSpec {
    fn default() -> Self {
        PhantomSpec {
            pairs: 12,
            cage_width: 260.0,
            cage_depth: 180.0,
            cage_height: 315.0,
            narrowing: 0.3,
            rib_radius: 4.5,
            rib_spacing: 25.0,
            seed: 0,
            degradations: Vec::new(),
        }
    }
}

/// Map degradations. Dropouts and scoliosis change the rasterized geometry;
/// blobs, noise and crops are applied to the map in listed order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Degradation {
    /// Zeroes a rib's channels where the nearest axis point lies within
    /// `[arc_start_mm, arc_start_mm + arc_len_mm]` from the spine end.
    Dropout { rib: RibLabel, arc_start_mm: f64, arc_len_mm: f64 },
    NoiseSigma(f64),
    /// False intermediate-rib response in a ball.
    Blob { center: Vec3, radius: f64, value: f64 },
    FovCrop { z_lo: f64, z_hi: f64 },
    /// Lateral rib offset `A sin(pi z / cage_height)`.
    ScoliosisAmplitudeMm(f64),
}

impl PhantomSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: PhantomSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(1..=12).contains(&self.pairs) {
            return bad(format!("pairs = {} must be in 1..=12", self.pairs));
        }
        for (name, v) in [
            ("cage_width", self.cage_width),
            ("cage_depth", self.cage_depth),
            ("cage_height", self.cage_height),
            ("rib_radius", self.rib_radius),
            ("rib_spacing", self.rib_spacing),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} = {v} must be > 0"));
            }
        }
        if !(0.0..1.0).contains(&self.narrowing) {
            return bad(format!("narrowing = {} must be in [0, 1)", self.narrowing));
        }
        if self.drop_mm() <= 0.0 {
            return bad(format!(
                "cage_height {} is too small for {} pairs at spacing {}",
                self.cage_height, self.pairs, self.rib_spacing
            ));
        }
        for d in &self.degradations {
            match *d {
                Degradation::Dropout { rib, arc_start_mm, arc_len_mm } => {
                    if rib.index().is_none_or(|i| i > self.pairs) {
                        return bad(format!("dropout rib {rib} does not exist"));
                    }
                    if !(arc_start_mm >= 0.0 && arc_len_mm > 0.0) {
                        return bad("dropout needs arc_start_mm >= 0 and arc_len_mm > 0".into());
                    }
                }
                Degradation::NoiseSigma(s) => {
                    if !(s >= 0.0 && s.is_finite()) {
                        return bad(format!("noise_sigma = {s} must be >= 0"));
                    }
                }
                Degradation::Blob { radius, value, .. } => {
                    if !(radius > 0.0 && (0.0..=1.0).contains(&value)) {
                        return bad("blob needs radius > 0 and value in [0, 1]".into());
                    }
                }
                Degradation::FovCrop { z_lo, z_hi } => {
                    if !(z_lo < z_hi) {
                        return bad(format!("fov_crop z_lo {z_lo} must be below z_hi {z_hi}"));
                    }
                }
                Degradation::ScoliosisAmplitudeMm(a) => {
                    if !a.is_finite() {
                        return bad("scoliosis amplitude must be finite".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// Height lost from the spine end to the sternal end of every rib.
    pub fn drop_mm(&self) -> f64 {
        self.cage_height - (self.pairs as f64 - 1.0) * self.rib_spacing
    }

    /// Height of the spine end of rib `index` (1 is cranial).
    pub fn spine_z(&self, index: u8) -> f64 {
        self.drop_mm() + (self.pairs as f64 - index as f64) * self.rib_spacing
    }

    fn scoliosis(&self) -> f64 {
        self.degradations
            .iter()
            .map(|d| match d {
                Degradation::ScoliosisAmplitudeMm(a) => *a,
                _ => 0.0,
            })
            .sum()
    }

    /// Point of rib `index` at ellipse parameter `theta` (radians).
    pub fn rib_point(&self, index: u8, side: Side, theta: f64) -> Vec3 {
        let n = self.pairs as f64;
        let t = if self.pairs > 1 { (n - index as f64) / (n - 1.0) } else { 0.0 };
        let a = 0.5 * self.cage_width * (1.0 - self.narrowing * t);
        let b = 0.5 * self.cage_depth;
        let spine = SPINE_ANGLE_DEG.to_radians();
        let u = (spine - theta) / (spine - STERNUM_ANGLE_DEG.to_radians());
        let z_spine = self.spine_z(index);
        let shift = self.scoliosis() * (std::f64::consts::PI * z_spine / self.cage_height).sin();
        let sign = if side == Side::Right { 1.0 } else { -1.0 };
        Vec3::new(sign * a * theta.cos() + shift, b * theta.sin(), z_spine - self.drop_mm() * u)
    }

    /// Dense polyline of a rib from spine to sternum.
    fn rib_polyline(&self, index: u8, side: Side) -> Vec<Vec3> {
        let (t0, t1) = (SPINE_ANGLE_DEG.to_radians(), STERNUM_ANGLE_DEG.to_radians());
        let bound = 0.5 * self.cage_width.max(self.cage_depth) * (t0 - t1) + self.drop_mm();
        let n = (bound / ARC_SAMPLE_MM).ceil() as usize;
        (0..=n)
            .map(|i| self.rib_point(index, side, t0 + (t1 - t0) * i as f64 / n as f64))
            .collect()
    }

    fn grid_geometry(&self, spacing: f64) -> Result<Geometry> {
        let snap = |v: f64| (v / spacing).ceil() * spacing;
        let pad = self.rib_radius + GRID_MARGIN_MM;
        let x = snap(0.5 * self.cage_width + self.scoliosis().abs() + pad);
        let y = snap(0.5 * self.cage_depth + pad);
        let z0 = -snap(pad);
        let z1 = self.cage_height + pad;
        let count = |extent: f64| (extent / spacing - 1e-9).ceil() as usize + 1;
        Geometry::new(
            [count(2.0 * x), count(2.0 * y), count(z1 - z0)],
            Vec3::new(spacing, spacing, spacing),
            Vec3::new(-x, -y, z0),
        )
    }
}

/// Generates the probability map and the ground-truth centerlines,
/// resampled at 1 mm and ordered spine to sternum.
pub fn generate(spec: &PhantomSpec, spacing: f64) -> Result<(ProbabilityMap, CenterlineSet)> {
    spec.validate()?;
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::InvalidGeometry(format!("spacing {spacing} must be > 0")));
    }
    let geometry = spec.grid_geometry(spacing)?;
    let mut channels: [Vec<f32>; 4] = std::array::from_fn(|_| vec![0.0f32; geometry.len()]);
    let mut gt = Vec::new();

    for index in 1..=spec.pairs {
        for side in [Side::Left, Side::Right] {
            let label = RibLabel::rib(index, side).expect("valid index");
            let line = spec.rib_polyline(index, side);
            let dropouts: Vec<(f64, f64)> = spec
                .degradations
                .iter()
                .filter_map(|d| match *d {
                    Degradation::Dropout { rib, arc_start_mm, arc_len_mm } if rib == label => {
                        Some((arc_start_mm, arc_start_mm + arc_len_mm))
                    }
                    _ => None,
                })
                .collect();
            let class = label.class().expect("labeled") as usize;
            rasterize_rib(&line, &dropouts, spec.rib_radius, &geometry, &mut channels[class]);
            gt.push(RibCenterline::new(resample_arclength(&line, 1.0)?, label, side)?);
        }
    }
    let mut channels = channels.map(|v| VoxelGrid::new(geometry, v).expect("same geometry"));
    refresh_background(&mut channels);
    let mut map = ProbabilityMap::new(channels)?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for d in &spec.degradations {
        match *d {
            Degradation::Blob { center, radius, value } => map = add_blob(map, center, radius, value),
            Degradation::NoiseSigma(sigma) if sigma > 0.0 => map = add_noise(map, sigma, &mut rng),
            Degradation::FovCrop { z_lo, z_hi } => {
                let g = *map.geometry();
                let k_lo = ((z_lo - g.origin.z) / g.spacing.z - 1e-9).ceil().max(0.0) as usize;
                let k_hi = ((z_hi - g.origin.z) / g.spacing.z + 1e-9).floor();
                if k_hi < k_lo as f64 || k_lo >= g.dims[2] {
                    return Err(Error::InvalidSpec(format!("fov_crop [{z_lo}, {z_hi}] leaves no slices")));
                }
                let k_hi = (k_hi as usize).min(g.dims[2] - 1);
                map = map.crop_z(k_lo, k_hi)?;
                let zs = [g.origin.z + k_lo as f64 * g.spacing.z, g.origin.z + k_hi as f64 * g.spacing.z];
                gt = gt.into_iter().filter_map(|rib| clip_to_z(rib, zs)).collect();
                if gt.is_empty() {
                    return Err(Error::InvalidSpec(format!("fov_crop [{z_lo}, {z_hi}] leaves no ribs")));
                }
            }
            _ => {}
        }
    }
    Ok((map, CenterlineSet::new("phantom", gt)))
}

/// Writes the tapered tube of one rib into `channel` (maximum with the
/// present values). Each voxel is judged by its nearest axis point.
fn rasterize_rib(line: &[Vec3], dropouts: &[(f64, f64)], radius: f64, g: &Geometry, channel: &mut [f32]) {
    let taper = g.min_spacing();
    let reach = radius + taper;
    let lo = line.iter().fold(Vec3::splat(f64::INFINITY), |m, p| m.min(*p));
    let hi = line.iter().fold(Vec3::splat(f64::NEG_INFINITY), |m, p| m.max(*p));
    let Some(r) = box_ranges(g, lo, hi, reach) else { return };
    let dims = [r[0].1 - r[0].0 + 1, r[1].1 - r[1].0 + 1, r[2].1 - r[2].0 + 1];
    let local = |i: usize, j: usize, k: usize| ((k - r[2].0) * dims[1] + (j - r[1].0)) * dims[0] + (i - r[0].0);
    let mut best = vec![(f64::INFINITY, 0.0f64); dims[0] * dims[1] * dims[2]];

    let mut arc = 0.0;
    for w in line.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = a.distance(b);
        if let Some(s) = box_ranges(g, a.min(b), a.max(b), reach) {
            for k in s[2].0..=s[2].1 {
                for j in s[1].0..=s[1].1 {
                    for i in s[0].0..=s[0].1 {
                        let (d, t) = point_segment_distance(g.world_of_unchecked(i, j, k), a, b);
                        let cell = &mut best[local(i, j, k)];
                        if d < cell.0 {
                            *cell = (d, arc + t * len);
                        }
                    }
                }
            }
        }
        arc += len;
    }

    for k in r[2].0..=r[2].1 {
        for j in r[1].0..=r[1].1 {
            for i in r[0].0..=r[0].1 {
                let (d, s) = best[local(i, j, k)];
                if d > reach || dropouts.iter().any(|&(a, b)| s >= a && s <= b) {
                    continue;
                }
                let v = ((reach - d) / taper).clamp(0.0, 1.0) as f32;
                let idx = g.index(i, j, k);
                channel[idx] = channel[idx].max(v);
            }
        }
    }
}

fn refresh_background(channels: &mut [VoxelGrid; 4]) {
    let n = channels[0].values().len();
    for idx in 0..n {
        let sum: f32 = (1..4).map(|c| channels[c].values()[idx]).sum();
        channels[BACKGROUND].values_mut()[idx] = 1.0 - sum.min(1.0);
    }
}

fn add_blob(map: ProbabilityMap, center: Vec3, radius: f64, value: f64) -> ProbabilityMap {
    let g = *map.geometry();
    let taper = g.min_spacing();
    let mut channels = map.into_channels();
    if let Some(r) = box_ranges(&g, center, center, radius + taper) {
        for k in r[2].0..=r[2].1 {
            for j in r[1].0..=r[1].1 {
                for i in r[0].0..=r[0].1 {
                    let d = g.world_of_unchecked(i, j, k).distance(center);
                    let w = ((radius + taper - d) / taper).clamp(0.0, 1.0) * value;
                    if w > 0.0 {
                        let idx = g.index(i, j, k);
                        let v = &mut channels[INTERMEDIATE_RIB].values_mut()[idx];
                        *v = (*v + w as f32).min(1.0);
                    }
                }
            }
        }
    }
    refresh_background(&mut channels);
    ProbabilityMap::new(channels).expect("values clipped to [0, 1]")
}

/// Adds clipped Gaussian noise to every channel and renormalizes each
/// voxel's channels to sum to one.
fn add_noise(map: ProbabilityMap, sigma: f64, rng: &mut ChaCha8Rng) -> ProbabilityMap {
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    let mut channels = map.into_channels();
    let n = channels[0].values().len();
    for idx in 0..n {
        let mut p = [0.0f64; 4];
        for (c, v) in p.iter_mut().enumerate() {
            *v = (channels[c].values()[idx] as f64 + normal.sample(rng)).clamp(0.0, 1.0);
        }
        let sum: f64 = p.iter().sum();
        if sum <= 0.0 {
            p = [1.0, 0.0, 0.0, 0.0];
        }
        for (c, v) in p.iter().enumerate() {
            let v = if sum > 0.0 { v / sum } else { *v };
            channels[c].values_mut()[idx] = (v as f32).clamp(0.0, 1.0);
        }
    }
    ProbabilityMap::new(channels).expect("values clipped to [0, 1]")
}

/// Longest run of points inside `[zs[0], zs[1]]`, if it has 2 or more.
fn clip_to_z(rib: RibCenterline, zs: [f64; 2]) -> Option<RibCenterline> {
    let mut best = (0, 0);
    let mut start = None;
    for (i, p) in rib.points.iter().chain(std::iter::once(&Vec3::splat(f64::NAN))).enumerate() {
        let inside = p.z >= zs[0] && p.z <= zs[1];
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s > best.1 - best.0 {
                    best = (s, i);
                }
                start = None;
            }
            _ => {}
        }
    }
    if best.1 - best.0 < 2 {
        return None;
    }
    let points = rib.points[best.0..best.1].to_vec();
    RibCenterline::new(points, rib.label, rib.side).ok()
}
