//! C ABI over the docbin toolkit.
//!
//! Images and masks cross the boundary as opaque handles created and freed
//! by this library. Every fallible call returns a [`DocbinStatus`]; on
//! failure, [`docbin_last_error_message`] describes the error for the calling
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use docbin::metrics::{self, PseudoWeighting};
use docbin::pipeline::{self, EnhancerKind, FusionWeights, PipelineConfig};
use docbin::raster::{self, BinaryMask, FloatPlane, Raster};
use docbin::wavelet;
use docbin::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocbinStatus {
    Ok = 0,
    /// A required pointer was NULL.
    NullPointer = 1,
    /// Value out of range, odd size where even is needed, bad UTF-8 path.
    InvalidArgument = 2,
    /// Two inputs that must share a size do not.
    DimensionMismatch = 3,
    /// File missing, unreadable or undecodable.
    Io = 4,
    /// Metric undefined for the input, e.g. ground truth without text.
    Undefined = 5,
    /// Buffer length, grid or manifest inconsistent with the stated shape.
    Structure = 6,
    /// Panic caught at the boundary.
    Internal = 7,
}

/// Model-free enhancers selectable from C.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocbinEnhancer {
    Identity = 0,
    Baseline = 1,
}

impl From<DocbinEnhancer> for EnhancerKind {
    fn from(e: DocbinEnhancer) -> Self {
        match e {
            DocbinEnhancer::Identity => EnhancerKind::Identity,
            DocbinEnhancer::Baseline => EnhancerKind::DwtNormBaseline,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocbinConfig {
    pub patch_size: usize,
    pub global_size: usize,
    pub omega: f64,
    pub local_global_weight: f64,
    pub stage2: DocbinEnhancer,
    pub local: DocbinEnhancer,
    pub global: DocbinEnhancer,
}

impl From<&DocbinConfig> for PipelineConfig {
    fn from(c: &DocbinConfig) -> Self {
        PipelineConfig {
            patch_size: c.patch_size,
            global_size: c.global_size,
            weights: FusionWeights {
                omega: c.omega,
                local_global_weight: c.local_global_weight,
            },
            norm: None,
            stage2: c.stage2.into(),
            local: c.local.into(),
            global: c.global.into(),
        }
    }
}

/// Scores for one prediction. `psnr` is +infinity for identical masks, in
/// which case `avg` is NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DocbinMetrics {
    pub fm: f64,
    pub pfm: f64,
    pub psnr: f64,
    pub drd: f64,
    pub avg: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

/// Opaque 8-bit image handle.
pub struct DocbinRaster(Raster);

/// Opaque binary mask handle.
pub struct DocbinMask(BinaryMask);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> DocbinStatus {
    match err {
        Error::EmptyImage | Error::ChannelCount { .. } | Error::GrayInput | Error::OddDimensions { .. } => {
            DocbinStatus::InvalidArgument
        }
        Error::InvalidArgument(_) => DocbinStatus::InvalidArgument,
        Error::DimensionMismatch { .. } => DocbinStatus::DimensionMismatch,
        Error::Undefined(_) => DocbinStatus::Undefined,
        Error::Structure(_) | Error::ExternalPatch { .. } => DocbinStatus::Structure,
        Error::Image { .. } | Error::Io(_) | Error::Json(_) => DocbinStatus::Io,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (DocbinStatus, String)>) -> DocbinStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DocbinStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            DocbinStatus::Internal
        }
    }
}

fn lift(err: Error) -> (DocbinStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (DocbinStatus, String) {
    (DocbinStatus::NullPointer, format!("{what} is null"))
}

fn area(width: usize, height: usize) -> Result<usize, (DocbinStatus, String)> {
    width
        .checked_mul(height)
        .ok_or_else(|| (DocbinStatus::InvalidArgument, format!("{width}x{height} overflows")))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, (DocbinStatus, String)> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| (DocbinStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn docbin_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn docbin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Defaults: 224 px patches, 512 px global branch, equal fusion weights,
/// identity enhancers.
#[no_mangle]
pub extern "C" fn docbin_config_default() -> DocbinConfig {
    let d = PipelineConfig::default();
    DocbinConfig {
        patch_size: d.patch_size,
        global_size: d.global_size,
        omega: d.weights.omega,
        local_global_weight: d.weights.local_global_weight,
        stage2: DocbinEnhancer::Identity,
        local: DocbinEnhancer::Identity,
        global: DocbinEnhancer::Identity,
    }
}

/// Copy `len` bytes of interleaved pixel data into a new raster.
///
/// # Safety
/// `data` must point to `len` readable bytes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn docbin_raster_new(
    width: usize,
    height: usize,
    channels: usize,
    data: *const u8,
    len: usize,
    out: *mut *mut DocbinRaster,
) -> DocbinStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let bytes = slice::from_raw_parts(data, len).to_vec();
        let r = Raster::new(width, height, channels, bytes).map_err(lift)?;
        *out = Box::into_raw(Box::new(DocbinRaster(r)));
        Ok(())
    })
}

/// Decode a PNG, BMP or TIFF file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn docbin_raster_load(path: *const c_char, out: *mut *mut DocbinRaster) -> DocbinStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = Raster::load(path).map_err(lift)?;
        *out = Box::into_raw(Box::new(DocbinRaster(r)));
        Ok(())
    })
}

/// # Safety
/// `raster` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn docbin_raster_width(raster: *const DocbinRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.width())
}

/// # Safety
/// `raster` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn docbin_raster_height(raster: *const DocbinRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.height())
}

/// # Safety
/// `raster` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn docbin_raster_channels(raster: *const DocbinRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.channels())
}

/// # Safety
/// `raster` must come from this library and not be freed twice. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn docbin_raster_free(raster: *mut DocbinRaster) {
    if !raster.is_null() {
        drop(Box::from_raw(raster));
    }
}

/// Run the full three-stage pipeline. `config` may be NULL for defaults.
///
/// # Safety
/// `raster` must be a live handle, `config` NULL or valid, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn docbin_binarize(
    raster: *const DocbinRaster,
    config: *const DocbinConfig,
    out: *mut *mut DocbinMask,
) -> DocbinStatus {
    guard(|| {
        let raster = raster.as_ref().ok_or_else(|| null("raster"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = config.as_ref().copied().unwrap_or_else(|| docbin_config_default());
        let mask = pipeline::binarize_image(&raster.0, &(&cfg).into()).map_err(lift)?;
        *out = Box::into_raw(Box::new(DocbinMask(mask)));
        Ok(())
    })
}

/// Mask from one byte per pixel; nonzero marks text.
///
/// # Safety
/// `data` must point to `width * height` readable bytes; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn docbin_mask_new(
    width: usize,
    height: usize,
    data: *const u8,
    out: *mut *mut DocbinMask,
) -> DocbinStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let bits = slice::from_raw_parts(data, area(width, height)?).iter().map(|&v| v != 0).collect();
        let m = BinaryMask::new(width, height, bits).map_err(lift)?;
        *out = Box::into_raw(Box::new(DocbinMask(m)));
        Ok(())
    })
}

/// Decode an image and threshold it at 0.5 (dark pixels are text).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn docbin_mask_load(path: *const c_char, out: *mut *mut DocbinMask) -> DocbinStatus {
    guard(|| {
        let path = path_arg(path)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = BinaryMask::load(path).map_err(lift)?;
        *out = Box::into_raw(Box::new(DocbinMask(m)));
        Ok(())
    })
}

/// Write the mask as an image, text black on white.
///
/// # Safety
/// `mask` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn docbin_mask_save(mask: *const DocbinMask, path: *const c_char) -> DocbinStatus {
    guard(|| {
        let mask = mask.as_ref().ok_or_else(|| null("mask"))?;
        let path = path_arg(path)?;
        mask.0.save(path).map_err(lift)
    })
}

/// # Safety
/// `mask` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn docbin_mask_width(mask: *const DocbinMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.width())
}

/// # Safety
/// `mask` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn docbin_mask_height(mask: *const DocbinMask) -> usize {
    mask.as_ref().map_or(0, |m| m.0.height())
}

/// Copy the mask into `buf` as one byte per pixel (1 text, 0 background).
///
/// # Safety
/// `mask` must be a live handle; `buf` must have room for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn docbin_mask_copy(mask: *const DocbinMask, buf: *mut u8, len: usize) -> DocbinStatus {
    guard(|| {
        let mask = mask.as_ref().ok_or_else(|| null("mask"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let data = mask.0.data();
        if len < data.len() {
            return Err((
                DocbinStatus::InvalidArgument,
                format!("buffer holds {len} bytes, mask needs {}", data.len()),
            ));
        }
        let out = slice::from_raw_parts_mut(buf, data.len());
        for (o, &fg) in out.iter_mut().zip(data) {
            *o = fg as u8;
        }
        Ok(())
    })
}

/// # Safety
/// `mask` must come from this library and not be freed twice. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn docbin_mask_free(mask: *mut DocbinMask) {
    if !mask.is_null() {
        drop(Box::from_raw(mask));
    }
}

/// Compute FM, pseudo-FM (contour-distance weighting), PSNR, DRD and Avg.
///
/// # Safety
/// `pred` and `gt` must be live handles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn docbin_evaluate(
    pred: *const DocbinMask,
    gt: *const DocbinMask,
    out: *mut DocbinMetrics,
) -> DocbinStatus {
    guard(|| {
        let pred = pred.as_ref().ok_or_else(|| null("pred"))?;
        let gt = gt.as_ref().ok_or_else(|| null("gt"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = metrics::evaluate_with(&pred.0, &gt.0, PseudoWeighting::ContourDistance).map_err(lift)?;
        *out = DocbinMetrics {
            fm: r.scores.fm,
            pfm: r.scores.pfm,
            psnr: r.scores.psnr,
            drd: r.scores.drd,
            avg: r.avg.unwrap_or(f64::NAN),
            tp: r.counts.tp,
            fp: r.counts.fp,
            fn_: r.counts.fn_,
            tn: r.counts.tn,
        };
        Ok(())
    })
}

/// `(fm + pfm + psnr + (100 - drd)) / 4`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn docbin_avg_score(fm: f64, pfm: f64, psnr: f64, drd: f64, out: *mut f64) -> DocbinStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = metrics::avg_score(fm, pfm, psnr, drd).map_err(lift)?;
        Ok(())
    })
}

unsafe fn plane_arg(data: *const f64, width: usize, height: usize) -> Result<FloatPlane, (DocbinStatus, String)> {
    if data.is_null() {
        return Err(null("data"));
    }
    FloatPlane::new(width, height, slice::from_raw_parts(data, area(width, height)?).to_vec()).map_err(lift)
}

/// Wavelet preprocessing of one even-sized plane: LL subband, sigmoid
/// normalization with automatic parameters, bicubic upsampling.
///
/// # Safety
/// `input` and `output` must each hold `width * height` doubles.
#[no_mangle]
pub unsafe extern "C" fn docbin_stage1_transform(
    input: *const f64,
    width: usize,
    height: usize,
    output: *mut f64,
) -> DocbinStatus {
    guard(|| {
        let plane = plane_arg(input, width, height)?;
        if output.is_null() {
            return Err(null("output"));
        }
        let t = wavelet::stage1_channel_transform(&plane).map_err(lift)?;
        slice::from_raw_parts_mut(output, width * height).copy_from_slice(t.data());
        Ok(())
    })
}

/// Otsu threshold of a plane; pixels whose rounded value is below it form the
/// dark class.
///
/// # Safety
/// `input` must hold `width * height` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn docbin_otsu_threshold(
    input: *const f64,
    width: usize,
    height: usize,
    out: *mut u8,
) -> DocbinStatus {
    guard(|| {
        let plane = plane_arg(input, width, height)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = raster::otsu_threshold(&plane).map_err(lift)?;
        Ok(())
    })
}
