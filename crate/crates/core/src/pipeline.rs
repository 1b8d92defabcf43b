//! Three-stage binarization: per-channel wavelet preprocessing, pluggable
//! per-channel enhancement with weighted fusion, then local/global fusion into
//! the final mask.
//!
//! Enhancers stand in for trained generators. `Identity` and
//! `DwtNormBaseline` need no model; `External` substitutes patches produced
//! elsewhere and described by a [`PatchManifest`].

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::manifest::{ChannelTag, PatchManifest};
use crate::error::{Error, Result};
use crate::patching::{reassemble, split_patches, GridGeometry, PatchGrid, DEFAULT_PATCH_SIZE};
use crate::raster::{
    binarize, binarize_otsu, resize_bicubic, split_channels, BinaryMask, FloatPlane, Raster,
};
use crate::wavelet::{stage1_channel_transform_with, NormParams};

pub const DEFAULT_GLOBAL_SIZE: usize = 512;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    /// Weight of the color-channel output against the gray output.
    pub omega: f64,
    /// Weight of the local prediction against the upsampled global one.
    pub local_global_weight: f64,
}

impl Default for FusionWeights {
    fn default() -> Self {
        FusionWeights {
            omega: 0.5,
            local_global_weight: 0.5,
        }
    }
}

impl FusionWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("omega", self.omega), ("local_global_weight", self.local_global_weight)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnhancerKind {
    Identity,
    /// Wavelet preprocessing followed by Otsu binarization, per channel.
    DwtNormBaseline,
    /// Patches listed in the manifest at this path.
    External(PathBuf),
}

/// Per-channel training target: background in `y` stays background; where
/// `y` is text, the pixel takes `binarize(x_prime, t)`.
pub fn make_channel_groundtruth(x_prime: &FloatPlane, y: &BinaryMask, t: f64) -> Result<BinaryMask> {
    if x_prime.dims() != y.dims() {
        return Err(Error::dims(x_prime.dims(), y.dims()));
    }
    let local = binarize(x_prime, t);
    let data = y.data().iter().zip(local.data()).map(|(&g, &l)| g && l).collect();
    BinaryMask::new(y.width(), y.height(), data)
}

/// `omega * color + (1 - omega) * gray`, clamped to `[0, 255]`.
pub fn fuse_channels(color_out: &FloatPlane, gray_out: &FloatPlane, w: &FusionWeights) -> Result<FloatPlane> {
    w.validate()?;
    if color_out.dims() != gray_out.dims() {
        return Err(Error::dims(color_out.dims(), gray_out.dims()));
    }
    let (cw, gw) = (w.omega, 1.0 - w.omega);
    let data = color_out
        .data()
        .iter()
        .zip(gray_out.data())
        .map(|(&c, &g)| (cw * c + gw * g).clamp(0.0, 255.0))
        .collect();
    FloatPlane::new(color_out.width(), color_out.height(), data)
}

/// Stack fused R, G, B planes into a 24-bit raster.
pub fn assemble_color_prediction(r: &FloatPlane, g: &FloatPlane, b: &FloatPlane) -> Result<Raster> {
    Raster::from_rgb_planes(r, g, b)
}

/// Upsample the global prediction to `out_w x out_h`, blend it with the local
/// one (`local_global_weight` on the local plane) and threshold at 0.5:
/// text iff the blend is below 127.5.
pub fn fuse_local_global(
    local: &FloatPlane,
    global_small: &FloatPlane,
    out_w: usize,
    out_h: usize,
    w: &FusionWeights,
) -> Result<BinaryMask> {
    w.validate()?;
    if local.dims() != (out_w, out_h) {
        return Err(Error::dims(local.dims(), (out_w, out_h)));
    }
    let global = resize_bicubic(global_small, out_w, out_h)?.clamped(0.0, 255.0);
    let (lw, gw) = (w.local_global_weight, 1.0 - w.local_global_weight);
    let blended = local
        .data()
        .iter()
        .zip(global.data())
        .map(|(&l, &g)| lw * l + gw * g)
        .collect();
    let blended = FloatPlane::new(out_w, out_h, blended)?;
    Ok(binarize(&blended, DEFAULT_THRESHOLD))
}

/// Pad to even dims by edge replication, transform, crop back.
fn stage1_any_dims(plane: &FloatPlane, norm: Option<&NormParams>) -> Result<FloatPlane> {
    let (w, h) = plane.dims();
    if w % 2 == 0 && h % 2 == 0 {
        return stage1_channel_transform_with(plane, norm);
    }
    let (pw, ph) = (w + w % 2, h + h % 2);
    let padded = FloatPlane::from_fn(pw, ph, |x, y| plane.get(x.min(w - 1), y.min(h - 1)));
    let out = stage1_channel_transform_with(&padded, norm)?;
    Ok(FloatPlane::from_fn(w, h, |x, y| out.get(x, y)))
}

/// Stage-1 output for one patch: the raw gray plane and, for color input, the
/// transformed red/green/blue planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Patch {
    pub row: usize,
    pub col: usize,
    pub gray: FloatPlane,
    pub rgb: Option<[FloatPlane; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage1Output {
    pub geometry: GridGeometry,
    pub patches: Vec<Stage1Patch>,
}

impl Stage1Output {
    pub fn is_color(&self) -> bool {
        self.patches.first().is_some_and(|p| p.rgb.is_some())
    }

    /// The given channel as an 8-bit patch grid.
    pub fn channel_grid(&self, tag: ChannelTag) -> Result<PatchGrid> {
        let patches = self
            .patches
            .iter()
            .map(|p| {
                let plane = match (tag, &p.rgb) {
                    (ChannelTag::Gray, _) => &p.gray,
                    (ChannelTag::Red, Some(rgb)) => &rgb[0],
                    (ChannelTag::Green, Some(rgb)) => &rgb[1],
                    (ChannelTag::Blue, Some(rgb)) => &rgb[2],
                    (ChannelTag::Rgb, Some(rgb)) => {
                        return Raster::from_rgb_planes(&rgb[0], &rgb[1], &rgb[2]);
                    }
                    _ => return Err(Error::GrayInput),
                };
                Ok(Raster::from_plane(plane))
            })
            .collect::<Result<Vec<_>>>()?;
        PatchGrid::from_patches(self.geometry, patches)
    }

    /// Channels available: gray alone, or gray plus the three color planes.
    pub fn channel_tags(&self) -> Vec<ChannelTag> {
        if self.is_color() {
            vec![ChannelTag::Gray, ChannelTag::Red, ChannelTag::Green, ChannelTag::Blue]
        } else {
            vec![ChannelTag::Gray]
        }
    }
}

/// Tile the image; color patches are split into gray/R/G/B and the color
/// planes pass through the wavelet transform, gray is left untouched.
pub fn run_stage1(img: &Raster, patch_size: usize, norm: Option<&NormParams>) -> Result<Stage1Output> {
    let grid = split_patches(img, patch_size)?;
    let color = img.channels() == 3;
    let patches = grid
        .patches()
        .par_iter()
        .enumerate()
        .map(|(i, patch)| {
            let (row, col) = (i / grid.geometry().cols, i % grid.geometry().cols);
            if !color {
                return Ok(Stage1Patch {
                    row,
                    col,
                    gray: patch.channel_plane(0),
                    rgb: None,
                });
            }
            let b = split_channels(patch)?;
            Ok(Stage1Patch {
                row,
                col,
                rgb: Some([
                    stage1_any_dims(&b.red, norm)?,
                    stage1_any_dims(&b.green, norm)?,
                    stage1_any_dims(&b.blue, norm)?,
                ]),
                gray: b.gray,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Stage1Output {
        geometry: *grid.geometry(),
        patches,
    })
}

fn baseline_patch(patch: &Raster) -> Result<Raster> {
    let render = |plane: &FloatPlane| -> Result<FloatPlane> {
        let t = stage1_any_dims(plane, None)?;
        let m = binarize_otsu(&t)?;
        let data = m.data().iter().map(|&fg| if fg { 0.0 } else { 255.0 }).collect();
        FloatPlane::new(m.width(), m.height(), data)
    };
    if patch.channels() == 1 {
        return Ok(Raster::from_plane(&render(&patch.channel_plane(0))?));
    }
    Raster::from_rgb_planes(
        &render(&patch.channel_plane(0))?,
        &render(&patch.channel_plane(1))?,
        &render(&patch.channel_plane(2))?,
    )
}

/// Run one enhancer over a grid. `channel` selects the manifest records for
/// `External`.
pub fn apply_enhancer(grid: &PatchGrid, kind: &EnhancerKind, channel: ChannelTag) -> Result<PatchGrid> {
    match kind {
        EnhancerKind::Identity => Ok(grid.clone()),
        EnhancerKind::DwtNormBaseline => grid.map_patches(|_, _, p| baseline_patch(p)),
        EnhancerKind::External(path) => {
            let manifest = PatchManifest::read(path)?;
            if &manifest.geometry != grid.geometry() {
                return Err(Error::Structure(format!(
                    "manifest {} geometry {:?} does not match grid {:?}",
                    path.display(),
                    manifest.geometry,
                    grid.geometry()
                )));
            }
            let base = path.parent().unwrap_or(Path::new("."));
            manifest.load_grid(base, channel)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub patch_size: usize,
    pub global_size: usize,
    pub weights: FusionWeights,
    pub norm: Option<NormParams>,
    pub stage2: EnhancerKind,
    pub local: EnhancerKind,
    pub global: EnhancerKind,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            patch_size: DEFAULT_PATCH_SIZE,
            global_size: DEFAULT_GLOBAL_SIZE,
            weights: FusionWeights::default(),
            norm: None,
            stage2: EnhancerKind::Identity,
            local: EnhancerKind::Identity,
            global: EnhancerKind::Identity,
        }
    }
}

/// Every intermediate of one pipeline run.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub stage1: Stage1Output,
    /// Stage-2 enhancer output per channel.
    pub enhanced: Vec<(ChannelTag, PatchGrid)>,
    /// Fused prediction at full resolution (3 channels for color input).
    pub fused: Raster,
    pub local: FloatPlane,
    pub global_small: FloatPlane,
    pub mask: BinaryMask,
}

/// Geometry of the single-patch grid used by the global branch.
pub fn global_geometry(global_size: usize) -> Result<GridGeometry> {
    GridGeometry::for_image(global_size, global_size, global_size)
}

fn resize_raster(img: &Raster, w: usize, h: usize) -> Result<Raster> {
    if img.channels() == 1 {
        return Ok(Raster::from_plane(&resize_bicubic(&img.channel_plane(0), w, h)?));
    }
    Raster::from_rgb_planes(
        &resize_bicubic(&img.channel_plane(0), w, h)?,
        &resize_bicubic(&img.channel_plane(1), w, h)?,
        &resize_bicubic(&img.channel_plane(2), w, h)?,
    )
}

pub fn run_pipeline(img: &Raster, cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.weights.validate()?;
    let stage1 = run_stage1(img, cfg.patch_size, cfg.norm.as_ref())?;
    let color = stage1.is_color();

    let enhanced = stage1
        .channel_tags()
        .into_iter()
        .map(|tag| Ok((tag, apply_enhancer(&stage1.channel_grid(tag)?, &cfg.stage2, tag)?)))
        .collect::<Result<Vec<_>>>()?;

    let fused_grid = if color {
        let gray = &enhanced[0].1;
        let patches = (0..gray.patches().len())
            .into_par_iter()
            .map(|i| {
                let g = gray.patches()[i].luma_plane();
                let fused: Vec<FloatPlane> = enhanced[1..]
                    .iter()
                    .map(|(_, grid)| fuse_channels(&grid.patches()[i].luma_plane(), &g, &cfg.weights))
                    .collect::<Result<_>>()?;
                assemble_color_prediction(&fused[0], &fused[1], &fused[2])
            })
            .collect::<Result<Vec<_>>>()?;
        PatchGrid::from_patches(stage1.geometry, patches)?
    } else {
        enhanced[0].1.clone()
    };
    let fused = reassemble(&fused_grid)?;

    let branch_tag = if color { ChannelTag::Rgb } else { ChannelTag::Gray };
    let local_grid = apply_enhancer(&fused_grid, &cfg.local, branch_tag)?;
    let local = reassemble(&local_grid)?.luma_plane();

    let small = resize_raster(img, cfg.global_size, cfg.global_size)?;
    let global_grid = PatchGrid::from_patches(global_geometry(cfg.global_size)?, vec![small])?;
    let global_small = apply_enhancer(&global_grid, &cfg.global, branch_tag)?.patches()[0].luma_plane();

    let mask = fuse_local_global(&local, &global_small, img.width(), img.height(), &cfg.weights)?;
    Ok(PipelineRun {
        stage1,
        enhanced,
        fused,
        local,
        global_small,
        mask,
    })
}

pub fn binarize_image(img: &Raster, cfg: &PipelineConfig) -> Result<BinaryMask> {
    Ok(run_pipeline(img, cfg)?.mask)
}

impl PipelineRun {
    /// Write every intermediate as PNG, named by stage and patch coordinate.
    pub fn dump(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for tag in self.stage1.channel_tags() {
            let grid = self.stage1.channel_grid(tag)?;
            write_grid(&dir.join("stage1"), &grid, tag)?;
        }
        for (tag, grid) in &self.enhanced {
            write_grid(&dir.join("stage2"), grid, *tag)?;
        }
        self.fused.save(dir.join("fused.png"))?;
        Raster::from_plane(&self.local).save(dir.join("local.png"))?;
        Raster::from_plane(&self.global_small).save(dir.join("global.png"))?;
        self.mask.save(dir.join("mask.png"))?;
        Ok(())
    }
}

fn write_grid(dir: &Path, grid: &PatchGrid, tag: ChannelTag) -> Result<()> {
    fs::create_dir_all(dir)?;
    for ((row, col), p) in grid.coords().zip(grid.patches()) {
        p.save(dir.join(format!("r{row:03}_c{col:03}_{tag}.png")))?;
    }
    Ok(())
}
