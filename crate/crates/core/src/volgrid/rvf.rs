//! Rib volume format: a `key = value` text header next to a raw
//! little-endian `f32` payload (x fastest, channel-major).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{Geometry, ProbabilityMap, VoxelGrid};
use crate::error::{Error, Result};
use crate::geom::Vec3;

const KEYS: [&str; 5] = ["dims", "spacing", "origin", "channels", "data_file"];

/// Contents of an RVF file.
#[derive(Debug, Clone, PartialEq)]
pub enum RvfVolume {
    Scalar(VoxelGrid),
    Probability(ProbabilityMap),
}

impl RvfVolume {
    pub fn geometry(&self) -> &Geometry {
        match self {
            RvfVolume::Scalar(g) => g.geometry(),
            RvfVolume::Probability(m) => m.geometry(),
        }
    }

    pub fn into_probability(self) -> Result<ProbabilityMap> {
        match self {
            RvfVolume::Probability(m) => Ok(m),
            RvfVolume::Scalar(_) => Err(Error::Format("expected 4 channels, found 1".into())),
        }
    }
}

/// Writes `header` plus a `.raw` payload beside it. All channels must share
/// one geometry; 1 or 4 channels are allowed.
pub fn write_rvf(header: &Path, channels: &[&VoxelGrid]) -> Result<()> {
    if channels.len() != 1 && channels.len() != 4 {
        return Err(Error::Format(format!("{} channels; expected 1 or 4", channels.len())));
    }
    let g = *channels[0].geometry();
    if channels.iter().any(|c| *c.geometry() != g) {
        return Err(Error::GeometryMismatch);
    }
    let data_path = header.with_extension("raw");
    let data_name = data_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Format(format!("unusable path {}", header.display())))?
        .to_string();

    let text = format!(
        "dims = {} {} {}\nspacing = {} {} {}\norigin = {} {} {}\nchannels = {}\ndata_file = {}\n",
        g.dims[0],
        g.dims[1],
        g.dims[2],
        g.spacing.x,
        g.spacing.y,
        g.spacing.z,
        g.origin.x,
        g.origin.y,
        g.origin.z,
        channels.len(),
        data_name
    );
    let mut bytes = Vec::with_capacity(g.len() * channels.len() * 4);
    for c in channels {
        for v in c.values() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(header, text)?;
    fs::write(data_path, bytes)?;
    Ok(())
}

pub fn read_rvf(header: &Path) -> Result<RvfVolume> {
    let text = fs::read_to_string(header)?;
    let fields = parse_header(&text)?;

    let dims: [usize; 3] = parse_triple(&fields, "dims")?;
    let spacing: [f64; 3] = parse_triple(&fields, "spacing")?;
    let origin: [f64; 3] = parse_triple(&fields, "origin")?;
    let channels: usize = fields["channels"]
        .parse()
        .map_err(|_| Error::Format(format!("bad channels value {:?}", fields["channels"])))?;
    if channels != 1 && channels != 4 {
        return Err(Error::Format(format!("channels = {channels}; expected 1 or 4")));
    }
    let geometry = Geometry::new(dims, Vec3::from(spacing), Vec3::from(origin))
        .map_err(|e| Error::Format(e.to_string()))?;

    let data_path = resolve_data(header, &fields["data_file"]);
    let bytes = fs::read(&data_path)?;
    let n = geometry.len();
    if bytes.len() != n * channels * 4 {
        return Err(Error::Format(format!(
            "{} holds {} bytes; header implies {}",
            data_path.display(),
            bytes.len(),
            n * channels * 4
        )));
    }
    let mut grids = bytes
        .chunks_exact(n * 4)
        .map(|chunk| {
            let values = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            VoxelGrid::new(geometry, values)
        })
        .collect::<Result<Vec<_>>>()?;

    if channels == 1 {
        return Ok(RvfVolume::Scalar(grids.pop().expect("one channel")));
    }
    let arr: [VoxelGrid; 4] = grids.try_into().expect("four channels");
    ProbabilityMap::new(arr)
        .map(RvfVolume::Probability)
        .map_err(|e| Error::Format(e.to_string()))
}

fn parse_header(text: &str) -> Result<BTreeMap<String, String>> {
    let mut fields = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::Format(format!("line {}: unknown key {key:?}", lineno + 1)));
        }
        if fields.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(Error::Format(format!("line {}: duplicate key {key:?}", lineno + 1)));
        }
    }
    for key in KEYS {
        if !fields.contains_key(key) {
            return Err(Error::Format(format!("missing key {key:?}")));
        }
    }
    Ok(fields)
}

fn parse_triple<T: std::str::FromStr>(fields: &BTreeMap<String, String>, key: &str) -> Result<[T; 3]> {
    let parts: Vec<T> = fields[key]
        .split_whitespace()
        .map(|s| s.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format(format!("bad {key} value {:?}", fields[key])))?;
    parts
        .try_into()
        .map_err(|_| Error::Format(format!("{key} needs exactly 3 values")))
}

fn resolve_data(header: &Path, name: &str) -> PathBuf {
    let p = Path::new(name);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        header.parent().unwrap_or(Path::new(".")).join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_grid() -> VoxelGrid {
        let g = Geometry::new([3, 2, 2], Vec3::new(1.5, 1.5, 2.0), Vec3::new(-10.25, 0.0, 3.5)).unwrap();
        VoxelGrid::new(g, (0..12).map(|i| i as f32 / 11.0).collect()).unwrap()
    }

    #[test]
    fn scalar_round_trip_and_header_text() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vol.rvf");
        let grid = sample_grid();
        write_rvf(&path, &[&grid]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "dims = 3 2 2\nspacing = 1.5 1.5 2\norigin = -10.25 0 3.5\nchannels = 1\ndata_file = vol.raw\n"
        );
        assert_eq!(fs::read(dir.path().join("vol.raw")).unwrap().len(), 48);
        assert_eq!(read_rvf(&path).unwrap(), RvfVolume::Scalar(grid));
    }

    #[test]
    fn four_channels_are_channel_major() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.rvf");
        let a = sample_grid();
        let zero = a.map(|_| 0.0);
        let map = ProbabilityMap::new([a.clone(), zero.clone(), zero.clone(), zero]).unwrap();
        let refs: Vec<&VoxelGrid> = map.channels().iter().collect();
        write_rvf(&path, &refs).unwrap();
        let raw = fs::read(dir.path().join("p.raw")).unwrap();
        assert_eq!(&raw[4..8], &a.values()[1].to_le_bytes());
        assert!(raw[48..].iter().all(|&b| b == 0));
        assert_eq!(read_rvf(&path).unwrap().into_probability().unwrap(), map);
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.rvf");
        write_rvf(&path, &[&sample_grid()]).unwrap();
        let good = fs::read_to_string(&path).unwrap();

        for bad in [
            good.replace("channels = 1", "channels = 2"),
            good.replace("dims = 3 2 2", "dims = 3 2"),
            good.replace("spacing", "Spacing"),
            good.replace("origin = -10.25 0 3.5\n", ""),
            format!("{good}dims = 3 2 2\n"),
            good.replace("dims = 3 2 2", "dims = 3 2 3"),
        ] {
            fs::write(&path, &bad).unwrap();
            assert!(matches!(read_rvf(&path), Err(Error::Format(_))), "accepted:\n{bad}");
        }
    }
}
