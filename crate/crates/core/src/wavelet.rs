//! Single-level 2-D Haar filter bank and sigmoid intensity normalization.
//!
//! The forward transform runs a horizontal analysis pass followed by a
//! vertical one, each convolving with the orthonormal Haar pair and keeping
//! every second sample. Subband names put the horizontal filter first: `hl`
//! is high-pass across columns and low-pass across rows.

use crate::error::{Error, Result};
use crate::raster::{resize_bicubic, FloatPlane, Raster};

const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Low-pass analysis taps.
pub const HAAR_LOW: [f64; 2] = [INV_SQRT2, INV_SQRT2];
/// High-pass analysis taps.
pub const HAAR_HIGH: [f64; 2] = [INV_SQRT2, -INV_SQRT2];

/// The four half-resolution planes of one decomposition level.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub ll: FloatPlane,
    pub hl: FloatPlane,
    pub lh: FloatPlane,
    pub hh: FloatPlane,
}

impl SubbandSet {
    pub fn dims(&self) -> (usize, usize) {
        self.ll.dims()
    }

    pub fn energy(&self) -> f64 {
        self.ll.energy() + self.hl.energy() + self.lh.energy() + self.hh.energy()
    }

    fn validate(&self) -> Result<()> {
        let d = self.ll.dims();
        for band in [&self.hl, &self.lh, &self.hh] {
            if band.dims() != d {
                return Err(Error::Structure(format!(
                    "subband dims differ: {:?} vs {:?}",
                    d,
                    band.dims()
                )));
            }
        }
        Ok(())
    }
}

/// Filter and decimate along x: `out[n] = taps[0] x[2n] + taps[1] x[2n+1]`.
fn analyze_rows(plane: &FloatPlane, taps: [f64; 2]) -> FloatPlane {
    let (w, h) = plane.dims();
    let half = w / 2;
    let src = plane.data();
    let mut out = Vec::with_capacity(half * h);
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for n in 0..half {
            out.push(taps[0] * row[2 * n] + taps[1] * row[2 * n + 1]);
        }
    }
    FloatPlane::from_vec_unchecked(half, h, out)
}

/// Filter and decimate along y.
fn analyze_cols(plane: &FloatPlane, taps: [f64; 2]) -> FloatPlane {
    let (w, h) = plane.dims();
    let half = h / 2;
    let src = plane.data();
    let mut out = Vec::with_capacity(w * half);
    for m in 0..half {
        let (r0, r1) = (&src[2 * m * w..(2 * m + 1) * w], &src[(2 * m + 1) * w..(2 * m + 2) * w]);
        for x in 0..w {
            out.push(taps[0] * r0[x] + taps[1] * r1[x]);
        }
    }
    FloatPlane::from_vec_unchecked(w, half, out)
}

/// One-level 2-D Haar decomposition. Both dimensions must be even.
pub fn dwt2_haar(plane: &FloatPlane) -> Result<SubbandSet> {
    let (w, h) = plane.dims();
    if w == 0 || h == 0 {
        return Err(Error::EmptyImage);
    }
    if w % 2 != 0 || h % 2 != 0 {
        return Err(Error::OddDimensions {
            width: w,
            height: h,
        });
    }
    let low = analyze_rows(plane, HAAR_LOW);
    let high = analyze_rows(plane, HAAR_HIGH);
    Ok(SubbandSet {
        ll: analyze_cols(&low, HAAR_LOW),
        lh: analyze_cols(&low, HAAR_HIGH),
        hl: analyze_cols(&high, HAAR_LOW),
        hh: analyze_cols(&high, HAAR_HIGH),
    })
}

/// Inverse of [`dwt2_haar`].
pub fn idwt2_haar(sub: &SubbandSet) -> Result<FloatPlane> {
    sub.validate()?;
    let (hw, hh) = sub.dims();
    let (w, h) = (hw * 2, hh * 2);
    let mut out = vec![0.0; w * h];
    let (ll, hl, lh, hhb) = (sub.ll.data(), sub.hl.data(), sub.lh.data(), sub.hh.data());
    for m in 0..hh {
        for n in 0..hw {
            let i = m * hw + n;
            // undo the vertical pass, then the horizontal one
            let low_top = (ll[i] + lh[i]) * INV_SQRT2;
            let low_bot = (ll[i] - lh[i]) * INV_SQRT2;
            let high_top = (hl[i] + hhb[i]) * INV_SQRT2;
            let high_bot = (hl[i] - hhb[i]) * INV_SQRT2;
            let top = 2 * m * w + 2 * n;
            let bot = top + w;
            out[top] = (low_top + high_top) * INV_SQRT2;
            out[top + 1] = (low_top - high_top) * INV_SQRT2;
            out[bot] = (low_bot + high_bot) * INV_SQRT2;
            out[bot + 1] = (low_bot - high_bot) * INV_SQRT2;
        }
    }
    Ok(FloatPlane::from_vec_unchecked(w, h, out))
}

/// Logistic mapping parameters: `alpha` is the width of the input range,
/// `beta` its center; the output spans `(out_min, out_max)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NormParams {
    pub alpha: f64,
    pub beta: f64,
    pub out_min: f64,
    pub out_max: f64,
}

pub const MIN_ALPHA: f64 = 1e-6;

impl NormParams {
    pub fn new(alpha: f64, beta: f64, out_min: f64, out_max: f64) -> Result<Self> {
        let p = NormParams {
            alpha,
            beta,
            out_min,
            out_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be > 0, got {}", self.alpha)));
        }
        let ordered = self.out_min.is_finite() && self.out_max.is_finite() && self.out_min < self.out_max;
        if !self.beta.is_finite() || !ordered {
            return Err(Error::InvalidArgument(format!(
                "invalid normalization range [{}, {}] or center {}",
                self.out_min, self.out_max, self.beta
            )));
        }
        Ok(())
    }

    /// `beta` = plane mean, `alpha` = max(std, 1e-6), output `[0, 255]`.
    pub fn auto(plane: &FloatPlane) -> Self {
        let (beta, std) = mean_std(plane.data());
        NormParams {
            alpha: std.max(MIN_ALPHA),
            beta,
            out_min: 0.0,
            out_max: 255.0,
        }
    }
}

/// Population mean and standard deviation, accumulated as offsets from the
/// first sample so a constant input yields exactly `(value, 0)`.
fn mean_std(data: &[f64]) -> (f64, f64) {
    if data.is_empty() {
        return (0.0, 0.0);
    }
    let origin = data[0];
    let n = data.len() as f64;
    let mean = origin + data.iter().map(|v| v - origin).sum::<f64>() / n;
    let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `out = (out_max - out_min) * sigmoid((I - beta) / alpha) + out_min`.
pub fn normalize_sigmoid(plane: &FloatPlane, p: &NormParams) -> FloatPlane {
    let span = p.out_max - p.out_min;
    plane.map(|v| span * logistic((v - p.beta) / p.alpha) + p.out_min)
}

/// Per-channel preprocessing: Haar LL subband, sigmoid-normalized (auto
/// parameters unless `params` is given), upsampled bicubically back to the
/// source size and clamped to `[0, 255]`.
pub fn stage1_channel_transform_with(
    plane: &FloatPlane,
    params: Option<&NormParams>,
) -> Result<FloatPlane> {
    let sub = dwt2_haar(plane)?;
    let p = match params {
        Some(p) => {
            p.validate()?;
            *p
        }
        None => NormParams::auto(&sub.ll),
    };
    let normalized = normalize_sigmoid(&sub.ll, &p);
    let up = resize_bicubic(&normalized, plane.width(), plane.height())?;
    Ok(up.clamped(0.0, 255.0))
}

pub fn stage1_channel_transform(plane: &FloatPlane) -> Result<FloatPlane> {
    stage1_channel_transform_with(plane, None)
}

/// The LL subband without normalization, upsampled to the source size.
/// Values keep the filter-bank gain (up to 510 for 8-bit input).
pub fn ll_upsampled(plane: &FloatPlane) -> Result<FloatPlane> {
    let sub = dwt2_haar(plane)?;
    resize_bicubic(&sub.ll, plane.width(), plane.height())
}

/// Eight-bit renderings of the four subbands for inspection, each normalized
/// with its own automatic parameters. Order: LL, HL, LH, HH.
pub fn subband_previews(sub: &SubbandSet) -> [Raster; 4] {
    let render = |band: &FloatPlane| Raster::from_plane(&normalize_sigmoid(band, &NormParams::auto(band)));
    [
        render(&sub.ll),
        render(&sub.hl),
        render(&sub.lh),
        render(&sub.hh),
    ]
}
