//! Pixel containers and the global raster operations.
//!
//! Intensities follow the 8-bit convention `[0, 255]`. Binary masks use the
//! dark-is-text convention: a foreground (text) pixel renders as 0, a
//! background pixel as 255.

use std::path::Path;

use image::{DynamicImage, GrayImage, RgbImage};

use crate::error::{Error, Result};

/// BT.601 luma weights for (R, G, B).
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Intensity cut used for GT decoding and the fixed 0.5 threshold.
pub const MID_INTENSITY: f64 = 127.5;

/// 1- or 3-channel 8-bit image, row-major and channel-interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "channel count must be 1 or 3, got {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::Structure(format!(
                "raster data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Raster {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Raster::new(width, height, channels, vec![value; width * height * channels])
    }

    /// Single-channel raster from a plane, clamped to `[0, 255]` and rounded.
    pub fn from_plane(plane: &FloatPlane) -> Self {
        Raster {
            width: plane.width,
            height: plane.height,
            channels: 1,
            data: plane.data.iter().map(|&v| to_u8(v)).collect(),
        }
    }

    /// Three-channel raster from R, G, B planes.
    pub fn from_rgb_planes(r: &FloatPlane, g: &FloatPlane, b: &FloatPlane) -> Result<Self> {
        r.ensure_same_dims(g)?;
        r.ensure_same_dims(b)?;
        let mut data = Vec::with_capacity(r.data.len() * 3);
        for i in 0..r.data.len() {
            data.push(to_u8(r.data[i]));
            data.push(to_u8(g.data[i]));
            data.push(to_u8(b.data[i]));
        }
        Raster::new(r.width, r.height, 3, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize, channel: usize) -> u8 {
        self.data[(y * self.width + x) * self.channels + channel]
    }

    /// One channel as a real-valued plane.
    pub fn channel_plane(&self, channel: usize) -> FloatPlane {
        assert!(channel < self.channels, "channel {channel} out of range");
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px[channel] as f64)
            .collect();
        FloatPlane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Luma for color rasters, the plane itself for gray ones.
    pub fn luma_plane(&self) -> FloatPlane {
        if self.channels == 1 {
            return self.channel_plane(0);
        }
        let data = self.data.chunks_exact(3).map(luma).collect();
        FloatPlane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Copy of the `width x height` window at `(x0, y0)`; coordinates past the
    /// right/bottom edge replicate the last column/row.
    pub fn window_replicated(&self, x0: usize, y0: usize, width: usize, height: usize) -> Raster {
        let c = self.channels;
        let mut data = Vec::with_capacity(width * height * c);
        for y in 0..height {
            let sy = (y0 + y).min(self.height - 1);
            for x in 0..width {
                let sx = (x0 + x).min(self.width - 1);
                let at = (sy * self.width + sx) * c;
                data.extend_from_slice(&self.data[at..at + c]);
            }
        }
        Raster {
            width,
            height,
            channels: c,
            data,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Raster::from_dynamic(img))
    }

    /// Gray-like sources (L, LA, L16) decode to one channel, everything else
    /// to RGB.
    pub fn from_dynamic(img: DynamicImage) -> Self {
        match img {
            DynamicImage::ImageLuma8(_)
            | DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_) => {
                let g = img.into_luma8();
                let (w, h) = g.dimensions();
                Raster {
                    width: w as usize,
                    height: h as usize,
                    channels: 1,
                    data: g.into_raw(),
                }
            }
            other => {
                let rgb = other.into_rgb8();
                let (w, h) = rgb.dimensions();
                Raster {
                    width: w as usize,
                    height: h as usize,
                    channels: 3,
                    data: rgb.into_raw(),
                }
            }
        }
    }

    /// Encode by file extension (png, bmp, tif/tiff).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let (w, h) = (self.width as u32, self.height as u32);
        let res = if self.channels == 1 {
            GrayImage::from_raw(w, h, self.data.clone())
                .expect("raster invariant")
                .save(path)
        } else {
            RgbImage::from_raw(w, h, self.data.clone())
                .expect("raster invariant")
                .save(path)
        };
        res.map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[inline]
fn luma(px: &[u8]) -> f64 {
    LUMA_WEIGHTS[0] * px[0] as f64 + LUMA_WEIGHTS[1] * px[1] as f64 + LUMA_WEIGHTS[2] * px[2] as f64
}

#[inline]
pub(crate) fn to_u8(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round() as u8
}

/// Real-valued single-channel workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatPlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatPlane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Structure(format!(
                "plane data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("plane contains non-finite values".into()));
        }
        Ok(FloatPlane {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        FloatPlane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        FloatPlane {
            width,
            height,
            data,
        }
    }

    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        FloatPlane {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> FloatPlane {
        FloatPlane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn clamped(&self, lo: f64, hi: f64) -> FloatPlane {
        self.map(|v| v.clamp(lo, hi))
    }

    /// Sum of squares.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub(crate) fn ensure_same_dims(&self, other: &FloatPlane) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// The four single-channel planes of a color image.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelBundle {
    pub gray: FloatPlane,
    pub red: FloatPlane,
    pub green: FloatPlane,
    pub blue: FloatPlane,
}

/// Per-pixel text/background labeling; `true` is foreground (text).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Structure(format!(
                "mask data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        Ok(BinaryMask {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, foreground: bool) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![foreground; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, foreground: bool) {
        self.data[y * self.width + x] = foreground;
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    /// Render as 8-bit: text 0, background 255.
    pub fn to_raster(&self) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            channels: 1,
            data: self.data.iter().map(|&fg| if fg { 0 } else { 255 }).collect(),
        }
    }

    /// Threshold a decoded image at 0.5; color GT is reduced to luma first.
    pub fn from_raster(img: &Raster) -> Self {
        binarize(&img.luma_plane(), 0.5)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(BinaryMask::from_raster(&Raster::load(path)?))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_raster().save(path)
    }

    pub(crate) fn ensure_same_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }
}

/// Split a color raster into gray (BT.601 luma), red, green and blue planes.
pub fn split_channels(img: &Raster) -> Result<ChannelBundle> {
    if img.channels == 1 {
        return Err(Error::GrayInput);
    }
    Ok(ChannelBundle {
        gray: img.luma_plane(),
        red: img.channel_plane(0),
        green: img.channel_plane(1),
        blue: img.channel_plane(2),
    })
}

const CUBIC_A: f64 = -0.5;

/// Cubic convolution kernel with `a = -0.5`.
#[inline]
pub fn cubic_kernel(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        ((CUBIC_A + 2.0) * x - (CUBIC_A + 3.0)) * x * x + 1.0
    } else if x < 2.0 {
        ((CUBIC_A * x - 5.0 * CUBIC_A) * x + 8.0 * CUBIC_A) * x - 4.0 * CUBIC_A
    } else {
        0.0
    }
}

/// Source taps for one output coordinate along an axis.
#[derive(Clone, Copy)]
struct Taps {
    base: usize,
    index: [usize; 4],
    weight: [f64; 4],
}

fn axis_taps(src_len: usize, dst_len: usize) -> Vec<Taps> {
    let scale = src_len as f64 / dst_len as f64;
    let last = src_len as isize - 1;
    (0..dst_len)
        .map(|d| {
            let s = (d as f64 + 0.5) * scale - 0.5;
            let fl = s.floor();
            let t = s - fl;
            let fl = fl as isize;
            let clamp = |i: isize| i.clamp(0, last) as usize;
            Taps {
                base: clamp(fl),
                index: [clamp(fl - 1), clamp(fl), clamp(fl + 1), clamp(fl + 2)],
                weight: [
                    cubic_kernel(1.0 + t),
                    cubic_kernel(t),
                    cubic_kernel(1.0 - t),
                    cubic_kernel(2.0 - t),
                ],
            }
        })
        .collect()
}

/// Interpolate relative to the base sample; the kernel weights sum to one, so
/// constant neighbourhoods come out bit-exact.
#[inline]
fn interpolate(taps: &Taps, sample: impl Fn(usize) -> f64) -> f64 {
    let anchor = sample(taps.base);
    let mut acc = 0.0;
    for k in 0..4 {
        acc += taps.weight[k] * (sample(taps.index[k]) - anchor);
    }
    anchor + acc
}

/// Separable bicubic resampling (Keys kernel, `a = -0.5`) with pixel-center
/// alignment and edge replication. The result is not clamped.
pub fn resize_bicubic(plane: &FloatPlane, new_width: usize, new_height: usize) -> Result<FloatPlane> {
    if plane.is_empty() {
        return Err(Error::EmptyImage);
    }
    if new_width == 0 || new_height == 0 {
        return Err(Error::InvalidArgument(format!(
            "target size {new_width}x{new_height} must be at least 1x1"
        )));
    }
    if plane.dims() == (new_width, new_height) {
        return Ok(plane.clone());
    }
    let (w, h) = plane.dims();
    let xt = axis_taps(w, new_width);
    let yt = axis_taps(h, new_height);

    let mut horizontal = Vec::with_capacity(new_width * h);
    for y in 0..h {
        let row = &plane.data[y * w..(y + 1) * w];
        for taps in &xt {
            horizontal.push(interpolate(taps, |i| row[i]));
        }
    }

    let mut out = Vec::with_capacity(new_width * new_height);
    for taps in &yt {
        for x in 0..new_width {
            out.push(interpolate(taps, |j| horizontal[j * new_width + x]));
        }
    }
    Ok(FloatPlane::from_vec_unchecked(new_width, new_height, out))
}

/// 256-bin histogram of the plane rounded and clamped to 8-bit.
pub fn histogram(plane: &FloatPlane) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for &v in &plane.data {
        hist[to_u8(v) as usize] += 1;
    }
    hist
}

/// Otsu's threshold over the 8-bit histogram.
///
/// For a returned `t`, the dark class is the bins `< t` and the bright class
/// the bins `>= t`. Ties go to the smallest `t`. A plane occupying a single
/// bin returns that bin.
pub fn otsu_threshold(plane: &FloatPlane) -> Result<u8> {
    if plane.is_empty() {
        return Err(Error::EmptyImage);
    }
    Ok(otsu_from_histogram(&histogram(plane)))
}

pub fn otsu_from_histogram(hist: &[u64; 256]) -> u8 {
    let total: u64 = hist.iter().sum();
    let total_sum: u64 = hist.iter().enumerate().map(|(i, &c)| i as u64 * c).sum();

    let mut n_dark = 0u64;
    let mut sum_dark = 0u64;
    let mut best: Option<(f64, usize)> = None;
    for t in 1..256 {
        n_dark += hist[t - 1];
        sum_dark += (t as u64 - 1) * hist[t - 1];
        let n_bright = total - n_dark;
        if n_dark == 0 || n_bright == 0 {
            continue;
        }
        let sum_bright = total_sum - sum_dark;
        // w0 w1 (mu0 - mu1)^2 up to the constant 1/N^2
        let diff = n_dark as i128 * sum_bright as i128 - n_bright as i128 * sum_dark as i128;
        let score = (diff as f64) * (diff as f64) / (n_dark as f64 * n_bright as f64);
        if best.is_none_or(|(s, _)| score > s) {
            best = Some((score, t));
        }
    }
    match best {
        Some((_, t)) => t as u8,
        None => hist.iter().position(|&c| c > 0).unwrap_or(0) as u8,
    }
}

/// Fixed-threshold binarization; `t` is on the unit scale, so a pixel is text
/// iff its intensity is below `t * 255`.
pub fn binarize(plane: &FloatPlane, t: f64) -> BinaryMask {
    binarize_below(plane, t * 255.0)
}

/// Text iff intensity `< cut` (cut in intensity units).
pub fn binarize_below(plane: &FloatPlane, cut: f64) -> BinaryMask {
    BinaryMask {
        width: plane.width,
        height: plane.height,
        data: plane.data.iter().map(|&v| v < cut).collect(),
    }
}

/// Binarize with the Otsu threshold of the plane.
pub fn binarize_otsu(plane: &FloatPlane) -> Result<BinaryMask> {
    let t = otsu_threshold(plane)?;
    // text iff the rounded value falls in the dark class (bins < t)
    Ok(binarize_below(plane, t as f64 - 0.5))
}
