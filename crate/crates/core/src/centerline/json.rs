//! Centerline JSON: `{"volume": ..., "ribs": [{"label": "01l", "points": [[x, y, z], ...]}]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CenterlineSet, RibCenterline, RibLabel, Side};
use crate::error::Result;
use crate::geom::Vec3;

#[derive(Serialize, Deserialize)]
struct FileSet {
    volume: String,
    ribs: Vec<FileRib>,
}

#[derive(Serialize, Deserialize)]
struct FileRib {
    label: String,
    points: Vec<Vec3>,
}

impl CenterlineSet {
    pub fn to_json(&self) -> Result<String> {
        let file = FileSet {
            volume: self.volume.clone(),
            ribs: self
                .ribs
                .iter()
                .map(|r| FileRib { label: r.label.to_string(), points: r.points.clone() })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&file)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: FileSet = serde_json::from_str(text)?;
        let ribs = file
            .ribs
            .into_iter()
            .map(|r| {
                let label: RibLabel = r.label.parse()?;
                let side = match label {
                    RibLabel::Rib { side, .. } => side,
                    RibLabel::Unlabeled => Side::Unknown,
                };
                RibCenterline::new(r.points, label, side)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CenterlineSet { volume: file.volume, ribs })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
