//! Fixed-size, non-overlapping tiling with edge-replicated padding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::Raster;

pub const DEFAULT_PATCH_SIZE: usize = 224;

/// Geometry of a tiling; enough to rebuild the full image from its patches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub patch_size: usize,
    pub rows: usize,
    pub cols: usize,
    pub pad_right: usize,
    pub pad_bottom: usize,
    pub original_width: usize,
    pub original_height: usize,
}

impl GridGeometry {
    pub fn for_image(width: usize, height: usize, patch_size: usize) -> Result<Self> {
        if patch_size == 0 {
            return Err(Error::InvalidArgument("patch size must be at least 1".into()));
        }
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let cols = width.div_ceil(patch_size);
        let rows = height.div_ceil(patch_size);
        Ok(GridGeometry {
            patch_size,
            rows,
            cols,
            pad_right: cols * patch_size - width,
            pad_bottom: rows * patch_size - height,
            original_width: width,
            original_height: height,
        })
    }

    pub fn patch_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.patch_size > 0
            && self.original_width > 0
            && self.original_height > 0
            && self.rows * self.patch_size == self.original_height + self.pad_bottom
            && self.cols * self.patch_size == self.original_width + self.pad_right
            && self.pad_right < self.patch_size
            && self.pad_bottom < self.patch_size;
        if ok {
            Ok(())
        } else {
            Err(Error::Structure(format!("inconsistent grid geometry {self:?}")))
        }
    }
}

/// A tiled image: `rows x cols` patches in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    geometry: GridGeometry,
    patches: Vec<Raster>,
}

impl PatchGrid {
    /// Build a grid from existing patches, checking count, size and channels.
    pub fn from_patches(geometry: GridGeometry, patches: Vec<Raster>) -> Result<Self> {
        geometry.validate()?;
        if patches.len() != geometry.patch_count() {
            return Err(Error::Structure(format!(
                "grid expects {} patches, got {}",
                geometry.patch_count(),
                patches.len()
            )));
        }
        let channels = patches[0].channels();
        for (i, p) in patches.iter().enumerate() {
            if p.dims() != (geometry.patch_size, geometry.patch_size) {
                return Err(Error::Structure(format!(
                    "patch (row {}, col {}) is {}x{}, expected {}x{}",
                    i / geometry.cols,
                    i % geometry.cols,
                    p.width(),
                    p.height(),
                    geometry.patch_size,
                    geometry.patch_size
                )));
            }
            if p.channels() != channels {
                return Err(Error::Structure(format!(
                    "patch (row {}, col {}) has {} channels, expected {channels}",
                    i / geometry.cols,
                    i % geometry.cols,
                    p.channels()
                )));
            }
        }
        Ok(PatchGrid { geometry, patches })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn patches(&self) -> &[Raster] {
        &self.patches
    }

    pub fn into_patches(self) -> Vec<Raster> {
        self.patches
    }

    pub fn patch(&self, row: usize, col: usize) -> &Raster {
        &self.patches[row * self.geometry.cols + col]
    }

    pub fn channels(&self) -> usize {
        self.patches[0].channels()
    }

    /// `(row, col)` for each patch index, in storage order.
    pub fn coords(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.geometry.cols;
        (0..self.patches.len()).map(move |i| (i / cols, i % cols))
    }

    /// Apply `f` to every patch, keeping the geometry.
    pub fn map_patches<F>(&self, f: F) -> Result<PatchGrid>
    where
        F: Fn(usize, usize, &Raster) -> Result<Raster> + Sync,
    {
        use rayon::prelude::*;
        let cols = self.geometry.cols;
        let patches = self
            .patches
            .par_iter()
            .enumerate()
            .map(|(i, p)| f(i / cols, i % cols, p))
            .collect::<Result<Vec<_>>>()?;
        PatchGrid::from_patches(self.geometry, patches)
    }
}

/// Pad right/bottom by edge replication to a multiple of `patch_size`, then
/// tile left-to-right, top-to-bottom.
pub fn split_patches(img: &Raster, patch_size: usize) -> Result<PatchGrid> {
    let geometry = GridGeometry::for_image(img.width(), img.height(), patch_size)?;
    let mut patches = Vec::with_capacity(geometry.patch_count());
    for row in 0..geometry.rows {
        for col in 0..geometry.cols {
            patches.push(img.window_replicated(
                col * patch_size,
                row * patch_size,
                patch_size,
                patch_size,
            ));
        }
    }
    Ok(PatchGrid { geometry, patches })
}

/// Place patches back in row-major order and crop the padding.
pub fn reassemble(grid: &PatchGrid) -> Result<Raster> {
    let g = &grid.geometry;
    g.validate()?;
    if grid.patches.len() != g.patch_count() {
        return Err(Error::Structure(format!(
            "grid expects {} patches, got {}",
            g.patch_count(),
            grid.patches.len()
        )));
    }
    let c = grid.channels();
    let (w, h, ps) = (g.original_width, g.original_height, g.patch_size);
    let mut data = vec![0u8; w * h * c];
    for (i, patch) in grid.patches.iter().enumerate() {
        if patch.dims() != (ps, ps) || patch.channels() != c {
            return Err(Error::Structure(format!(
                "patch {i} does not match grid geometry"
            )));
        }
        let (row, col) = (i / g.cols, i % g.cols);
        let (x0, y0) = (col * ps, row * ps);
        let copy_w = ps.min(w.saturating_sub(x0));
        for py in 0..ps.min(h.saturating_sub(y0)) {
            let src = &patch.data()[py * ps * c..(py * ps + copy_w) * c];
            let dst_at = ((y0 + py) * w + x0) * c;
            data[dst_at..dst_at + copy_w * c].copy_from_slice(src);
        }
    }
    Raster::new(w, h, c, data)
}
