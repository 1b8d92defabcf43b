//! Patch manifests: JSON descriptions of a tiled image whose patches live as
//! 8-bit PNG files next to the manifest.
//!
//! ```json
//! {
//!   "source": "HW01",
//!   "geometry": { "patch_size": 224, "rows": 2, "cols": 3, "pad_right": 12,
//!                 "pad_bottom": 40, "original_width": 660, "original_height": 408 },
//!   "records": [ { "row": 0, "col": 0, "channel": "red", "path": "HW01/r000_c000_red.png" } ]
//! }
//! ```
//!
//! Record paths are relative to the directory holding the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::patching::{GridGeometry, PatchGrid};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelTag {
    Gray,
    Red,
    Green,
    Blue,
    Rgb,
}

impl ChannelTag {
    pub const COLOR: [ChannelTag; 3] = [ChannelTag::Red, ChannelTag::Green, ChannelTag::Blue];

    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelTag::Gray => "gray",
            ChannelTag::Red => "red",
            ChannelTag::Green => "green",
            ChannelTag::Blue => "blue",
            ChannelTag::Rgb => "rgb",
        }
    }
}

impl fmt::Display for ChannelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchRecord {
    pub row: usize,
    pub col: usize,
    pub channel: ChannelTag,
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchManifest {
    pub source: String,
    pub geometry: GridGeometry,
    pub records: Vec<PatchRecord>,
}

impl PatchManifest {
    pub fn new(source: impl Into<String>, geometry: GridGeometry) -> Self {
        PatchManifest {
            source: source.into(),
            geometry,
            records: Vec::new(),
        }
    }

    /// Channels present, each of which must cover the full grid.
    pub fn channels(&self) -> BTreeSet<ChannelTag> {
        self.records.iter().map(|r| r.channel).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        let g = &self.geometry;
        let mut seen = BTreeSet::new();
        let mut per_channel: BTreeMap<ChannelTag, usize> = BTreeMap::new();
        for r in &self.records {
            if r.row >= g.rows || r.col >= g.cols {
                return Err(Error::Structure(format!(
                    "record (row {}, col {}, {}) outside {}x{} grid",
                    r.row, r.col, r.channel, g.rows, g.cols
                )));
            }
            if !seen.insert((r.row, r.col, r.channel)) {
                return Err(Error::Structure(format!(
                    "duplicate record (row {}, col {}, {})",
                    r.row, r.col, r.channel
                )));
            }
            *per_channel.entry(r.channel).or_default() += 1;
        }
        for (tag, n) in per_channel {
            if n != g.patch_count() {
                return Err(Error::Structure(format!(
                    "channel {tag} covers {n} of {} patches",
                    g.patch_count()
                )));
            }
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let m: PatchManifest = serde_json::from_str(&text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        self.validate()?;
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }

    /// Write every patch of `grid` as PNG under `base_dir/rel_dir` and record
    /// it with a path relative to `base_dir`.
    pub fn add_grid(&mut self, base_dir: &Path, rel_dir: &Path, grid: &PatchGrid, channel: ChannelTag) -> Result<()> {
        if grid.geometry() != &self.geometry {
            return Err(Error::Structure("grid geometry differs from manifest".into()));
        }
        fs::create_dir_all(base_dir.join(rel_dir))?;
        for ((row, col), patch) in grid.coords().zip(grid.patches()) {
            let rel = rel_dir.join(format!("r{row:03}_c{col:03}_{channel}.png"));
            patch.save(base_dir.join(&rel))?;
            self.records.push(PatchRecord {
                row,
                col,
                channel,
                path: rel,
            });
        }
        Ok(())
    }

    /// Load the patches of one channel as a grid. `base_dir` is the manifest's
    /// directory. Missing or mis-sized patches are reported by coordinate.
    pub fn load_grid(&self, base_dir: &Path, channel: ChannelTag) -> Result<PatchGrid> {
        let g = &self.geometry;
        let mut slots: Vec<Option<Raster>> = vec![None; g.patch_count()];
        for r in self.records.iter().filter(|r| r.channel == channel) {
            let img = Raster::load(base_dir.join(&r.path)).map_err(|e| Error::ExternalPatch {
                row: r.row,
                col: r.col,
                channel: channel.to_string(),
                reason: e.to_string(),
            })?;
            if img.dims() != (g.patch_size, g.patch_size) {
                return Err(Error::ExternalPatch {
                    row: r.row,
                    col: r.col,
                    channel: channel.to_string(),
                    reason: format!(
                        "image is {}x{}, expected {}x{}",
                        img.width(),
                        img.height(),
                        g.patch_size,
                        g.patch_size
                    ),
                });
            }
            slots[r.row * g.cols + r.col] = Some(img);
        }
        let mut patches = Vec::with_capacity(slots.len());
        let mut channels = None;
        for (i, slot) in slots.into_iter().enumerate() {
            let (row, col) = (i / g.cols, i % g.cols);
            let p = slot.ok_or_else(|| Error::ExternalPatch {
                row,
                col,
                channel: channel.to_string(),
                reason: "missing from manifest".into(),
            })?;
            match channels {
                None => channels = Some(p.channels()),
                Some(c) if c != p.channels() => {
                    return Err(Error::ExternalPatch {
                        row,
                        col,
                        channel: channel.to_string(),
                        reason: format!("has {} channels, earlier patches have {c}", p.channels()),
                    })
                }
                _ => {}
            }
            patches.push(p);
        }
        PatchGrid::from_patches(*g, patches)
    }
}

/// Conventional file name of the manifest for one source image.
pub fn manifest_file_name(source: &str) -> String {
    format!("{source}.manifest.json")
}
