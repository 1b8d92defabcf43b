//! Batch front-end: dataset ingestion, the four commands and their reports.
//!
//! Every command processes images in parallel but assembles its outputs in
//! sorted file-name order, so identical inputs produce identical bytes.

pub mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{aggregate, evaluate_with, MeanScores, MetricsReport, PseudoWeighting, Scores};
use crate::patching::{split_patches, DEFAULT_PATCH_SIZE};
use crate::pipeline::{
    make_channel_groundtruth, run_pipeline, run_stage1, EnhancerKind, FusionWeights, PipelineConfig,
    DEFAULT_GLOBAL_SIZE, DEFAULT_THRESHOLD,
};
use crate::raster::{BinaryMask, Raster};
use crate::wavelet::NormParams;
use manifest::{manifest_file_name, ChannelTag, PatchManifest};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "DOCBIN_WORKERS";

pub const IMAGE_EXTENSIONS: [&str; 4] = ["png", "bmp", "tif", "tiff"];

/// Where an enhancer's patches come from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum EnhancerChoice {
    Identity,
    Baseline,
    /// Directory holding `<image id>.manifest.json` files.
    External { dir: PathBuf },
}

impl EnhancerChoice {
    fn resolve(&self, id: &str) -> EnhancerKind {
        match self {
            EnhancerChoice::Identity => EnhancerKind::Identity,
            EnhancerChoice::Baseline => EnhancerKind::DwtNormBaseline,
            EnhancerChoice::External { dir } => EnhancerKind::External(dir.join(manifest_file_name(id))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub patch_size: usize,
    pub global_size: usize,
    pub omega: f64,
    pub local_global_weight: f64,
    /// Threshold on the unit scale for per-channel GT synthesis.
    pub threshold: f64,
    pub stage2: EnhancerChoice,
    pub local: EnhancerChoice,
    pub global: EnhancerChoice,
    pub norm: Option<NormParams>,
    pub debug_dump: Option<PathBuf>,
    pub gt_suffixes: Vec<String>,
    pub pseudo_weighting: PseudoWeighting,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            patch_size: DEFAULT_PATCH_SIZE,
            global_size: DEFAULT_GLOBAL_SIZE,
            omega: 0.5,
            local_global_weight: 0.5,
            threshold: DEFAULT_THRESHOLD,
            stage2: EnhancerChoice::Identity,
            local: EnhancerChoice::Identity,
            global: EnhancerChoice::Identity,
            norm: None,
            debug_dump: None,
            gt_suffixes: vec!["_gt".into(), "_GT".into()],
            pseudo_weighting: PseudoWeighting::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 || self.global_size == 0 {
            return Err(Error::InvalidArgument("patch and global sizes must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidArgument(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        self.weights().validate()?;
        if let Some(n) = &self.norm {
            n.validate()?;
        }
        Ok(())
    }

    pub fn weights(&self) -> FusionWeights {
        FusionWeights {
            omega: self.omega,
            local_global_weight: self.local_global_weight,
        }
    }

    pub fn pipeline_for(&self, id: &str) -> PipelineConfig {
        PipelineConfig {
            patch_size: self.patch_size,
            global_size: self.global_size,
            weights: self.weights(),
            norm: self.norm,
            stage2: self.stage2.resolve(id),
            local: self.local.resolve(id),
            global: self.global.resolve(id),
        }
    }
}

/// One source image and, when found, its ground truth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub id: String,
    pub original: PathBuf,
    pub gt: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    /// Sorted by id.
    pub entries: Vec<DatasetEntry>,
    /// GT files with no matching original.
    pub orphan_gt: Vec<PathBuf>,
}

impl Dataset {
    pub fn pairs(&self) -> impl Iterator<Item = (&DatasetEntry, &Path)> {
        self.entries.iter().filter_map(|e| e.gt.as_deref().map(|g| (e, g)))
    }
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && is_image(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Pair originals with GT files in `root` by stem: `<id>.<ext>` pairs with
/// `<id><suffix>.<ext'>` for any of `suffixes`. Extensions may differ.
pub fn ingest_dataset(root: &Path, suffixes: &[String]) -> Result<Dataset> {
    if !root.is_dir() {
        return Err(Error::InvalidArgument(format!("{} is not a directory", root.display())));
    }
    let mut originals = BTreeMap::new();
    let mut gts = BTreeMap::new();
    for path in list_images(root)? {
        let s = stem(&path);
        match suffixes.iter().find(|suf| s.len() > suf.len() && s.ends_with(suf.as_str())) {
            Some(suf) => {
                gts.insert(s[..s.len() - suf.len()].to_string(), path);
            }
            None => {
                originals.insert(s, path);
            }
        }
    }
    let mut entries = Vec::with_capacity(originals.len());
    for (id, original) in originals {
        let gt = gts.remove(&id);
        if gt.is_none() {
            warn!("{}: no ground truth found", original.display());
        }
        entries.push(DatasetEntry { id, original, gt });
    }
    let orphan_gt: Vec<PathBuf> = gts.into_values().collect();
    for p in &orphan_gt {
        warn!("{}: ground truth without original", p.display());
    }
    if entries.is_empty() {
        warn!("{}: no images found", root.display());
    }
    Ok(Dataset { entries, orphan_gt })
}

/// Per-file failure recorded by a batch command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileError {
    pub file: String,
    pub error: String,
}

/// Result of a batch command: how many files succeeded, which failed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BatchOutcome {
    pub processed: usize,
    pub failures: Vec<FileError>,
}

impl BatchOutcome {
    fn from_results<T>(items: Vec<(String, Result<T>)>) -> (Self, Vec<(String, T)>) {
        let mut outcome = BatchOutcome::default();
        let mut ok = Vec::new();
        for (file, r) in items {
            match r {
                Ok(v) => {
                    outcome.processed += 1;
                    ok.push((file, v));
                }
                Err(e) => {
                    warn!("{file}: {e}");
                    outcome.failures.push(FileError {
                        file,
                        error: e.to_string(),
                    });
                }
            }
        }
        (outcome, ok)
    }

    /// 0 on full success, 2 when some files failed.
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Write Stage-1 patches and `<id>.manifest.json` for every image under
/// `root`; with GT available, also the per-channel GT patches and
/// `<id>.gt.manifest.json`.
pub fn cmd_preprocess(root: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<BatchOutcome> {
    cfg.validate()?;
    let dataset = ingest_dataset(root, &cfg.gt_suffixes)?;
    fs::create_dir_all(out_dir)?;
    let results: Vec<_> = dataset
        .entries
        .par_iter()
        .map(|e| (file_name(&e.original), preprocess_one(e, out_dir, cfg)))
        .collect();
    let (outcome, _) = BatchOutcome::from_results(results);
    info!("preprocess: {} image(s), {} failure(s)", outcome.processed, outcome.failures.len());
    Ok(outcome)
}

pub fn gt_manifest_file_name(id: &str) -> String {
    format!("{id}.gt.manifest.json")
}

fn preprocess_one(entry: &DatasetEntry, out_dir: &Path, cfg: &RunConfig) -> Result<()> {
    let img = Raster::load(&entry.original)?;
    let stage1 = run_stage1(&img, cfg.patch_size, cfg.norm.as_ref())?;
    let mut manifest = PatchManifest::new(&entry.id, stage1.geometry);
    let rel = PathBuf::from(&entry.id);
    for tag in stage1.channel_tags() {
        manifest.add_grid(out_dir, &rel, &stage1.channel_grid(tag)?, tag)?;
    }
    manifest.write(out_dir.join(manifest_file_name(&entry.id)))?;

    let Some(gt_path) = &entry.gt else {
        return Ok(());
    };
    let gt = BinaryMask::load(gt_path)?;
    if gt.dims() != img.dims() {
        return Err(Error::dims(img.dims(), gt.dims()));
    }
    let gt_grid = split_patches(&gt.to_raster(), cfg.patch_size)?;
    let mut gt_manifest = PatchManifest::new(&entry.id, stage1.geometry);
    let gt_rel = PathBuf::from(format!("{}_gt", entry.id));
    // gray trains on the dataset GT directly, color channels on the gated
    // binarization of their transformed planes
    gt_manifest.add_grid(out_dir, &gt_rel, &gt_grid, ChannelTag::Gray)?;
    if stage1.is_color() {
        for (k, tag) in ChannelTag::COLOR.into_iter().enumerate() {
            let patches = stage1
                .patches
                .iter()
                .zip(gt_grid.patches())
                .map(|(p, y)| {
                    let x_prime = &p.rgb.as_ref().expect("color stage-1 patch")[k];
                    let y = BinaryMask::from_raster(y);
                    Ok(make_channel_groundtruth(x_prime, &y, cfg.threshold)?.to_raster())
                })
                .collect::<Result<Vec<_>>>()?;
            let grid = crate::patching::PatchGrid::from_patches(stage1.geometry, patches)?;
            gt_manifest.add_grid(out_dir, &gt_rel, &grid, tag)?;
        }
    }
    gt_manifest.write(out_dir.join(gt_manifest_file_name(&entry.id)))
}

/// Run the full pipeline on every original under `root` and write
/// `<id>.png` masks (text black) to `out_dir`.
pub fn cmd_binarize(root: &Path, out_dir: &Path, cfg: &RunConfig) -> Result<BatchOutcome> {
    cfg.validate()?;
    let dataset = ingest_dataset(root, &cfg.gt_suffixes)?;
    fs::create_dir_all(out_dir)?;
    let results: Vec<_> = dataset
        .entries
        .par_iter()
        .map(|e| (file_name(&e.original), binarize_one(e, out_dir, cfg)))
        .collect();
    let (outcome, _) = BatchOutcome::from_results(results);
    info!("binarize: {} image(s), {} failure(s)", outcome.processed, outcome.failures.len());
    Ok(outcome)
}

fn binarize_one(entry: &DatasetEntry, out_dir: &Path, cfg: &RunConfig) -> Result<()> {
    let img = Raster::load(&entry.original)?;
    let run = run_pipeline(&img, &cfg.pipeline_for(&entry.id))?;
    if let Some(dir) = &cfg.debug_dump {
        run.dump(&dir.join(&entry.id))?;
    }
    run.mask.save(out_dir.join(format!("{}.png", entry.id)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub file: String,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub images: Vec<ImageReport>,
    pub mean: Option<MeanScores>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<FileError>,
}

impl EvaluationReport {
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}

/// Find the GT for prediction `id` in `gt_dir`: `<id><suffix>.*` first, then
/// a plain `<id>.*`.
fn find_gt(gt_files: &[PathBuf], id: &str, suffixes: &[String]) -> Option<PathBuf> {
    let by_stem = |want: &str| gt_files.iter().find(|p| stem(p) == want).cloned();
    suffixes
        .iter()
        .find_map(|suf| by_stem(&format!("{id}{suf}")))
        .or_else(|| by_stem(id))
}

/// Score every mask in `pred_dir` against its GT in `gt_dir`.
pub fn cmd_evaluate(pred_dir: &Path, gt_dir: &Path, cfg: &RunConfig) -> Result<(EvaluationReport, BatchOutcome)> {
    let preds = list_images(pred_dir)?;
    let gt_files = list_images(gt_dir)?;
    if preds.is_empty() {
        warn!("{}: no predictions found", pred_dir.display());
    }
    let jobs = preds
        .into_iter()
        .map(|p| {
            let gt = find_gt(&gt_files, &stem(&p), &cfg.gt_suffixes);
            (p, gt)
        })
        .collect::<Vec<_>>();
    Ok(evaluate_pairs(&jobs, cfg))
}

/// Score (prediction, GT) pairs; a missing GT is a per-file failure.
pub fn evaluate_pairs(jobs: &[(PathBuf, Option<PathBuf>)], cfg: &RunConfig) -> (EvaluationReport, BatchOutcome) {
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(p, gt_path)| {
            let r = (|| {
                let gt_path = gt_path.as_ref().ok_or_else(|| {
                    Error::InvalidArgument(format!("no ground truth for {}", stem(p)))
                })?;
                let pred = BinaryMask::load(p)?;
                let gt = BinaryMask::load(gt_path)?;
                evaluate_with(&pred, &gt, cfg.pseudo_weighting)
            })();
            (file_name(p), r)
        })
        .collect();
    let (outcome, ok) = BatchOutcome::from_results(results);
    let images: Vec<ImageReport> = ok
        .into_iter()
        .map(|(file, metrics)| ImageReport { file, metrics })
        .collect();
    let rows: Vec<Scores> = images.iter().map(|r| r.metrics.scores).collect();
    let report = EvaluationReport {
        mean: aggregate(&rows),
        images,
        errors: outcome.failures.clone(),
    };
    (report, outcome)
}

/// Paths written by [`cmd_pipeline`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineLayout {
    pub preprocess: PathBuf,
    pub masks: PathBuf,
    pub report: PathBuf,
}

impl PipelineLayout {
    pub fn under(out_dir: &Path, report: Option<&Path>) -> Self {
        PipelineLayout {
            preprocess: out_dir.join("preprocess"),
            masks: out_dir.join("masks"),
            report: report.map(Path::to_path_buf).unwrap_or_else(|| out_dir.join("report.json")),
        }
    }
}

/// preprocess, binarize, then evaluate the masks of every image that has GT.
pub fn cmd_pipeline(root: &Path, layout: &PipelineLayout, cfg: &RunConfig) -> Result<(EvaluationReport, BatchOutcome)> {
    let mut outcome = cmd_preprocess(root, &layout.preprocess, cfg)?;
    let binarized = cmd_binarize(root, &layout.masks, cfg)?;
    outcome.failures.extend(binarized.failures);

    let dataset = ingest_dataset(root, &cfg.gt_suffixes)?;
    let jobs: Vec<_> = dataset
        .pairs()
        .map(|(e, gt)| (layout.masks.join(format!("{}.png", e.id)), Some(gt.to_path_buf())))
        .filter(|(mask, _)| mask.is_file())
        .collect();
    let (report, evaluated) = evaluate_pairs(&jobs, cfg);
    report.write(&layout.report)?;
    outcome.processed = evaluated.processed;
    outcome.failures.extend(evaluated.failures);
    Ok((report, outcome))
}
