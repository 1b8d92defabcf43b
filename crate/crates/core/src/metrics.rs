//! Binarization quality metrics: F-measure, pseudo F-measure, PSNR, DRD and
//! the Avg-Score that combines them.
//!
//! Foreground (text) is the positive class throughout. Masks are embedded as
//! `{0, 1}` where a numeric value is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::BinaryMask;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask) -> Result<ConfusionCounts> {
    pred.ensure_same_dims(gt)?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

fn harmonic_percent(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        100.0 * 2.0 * precision * recall / (precision + recall)
    }
}

/// F-measure in percent; 0 when there are no true positives.
pub fn f_measure(c: &ConfusionCounts) -> f64 {
    if c.tp == 0 {
        return 0.0;
    }
    harmonic_percent(c.precision(), c.recall())
}

/// Pixel weighting for the pseudo F-measure.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PseudoWeighting {
    /// Recall weights `1 / (1 + d)` with `d` the chessboard distance to the
    /// GT text contour. Precision weights are 1 on GT text and `d / (1 + d)`
    /// elsewhere, `d` being the chessboard distance to GT text, so stray
    /// pixels far from any stroke cost more than those hugging one.
    #[default]
    ContourDistance,
    /// All weights 1; reduces to the plain F-measure.
    Uniform,
}

/// Exact chessboard distance from every pixel to the nearest seed, via the
/// two-pass 8-neighbour chamfer. `None` where there are no seeds at all.
pub fn chessboard_distance(seeds: &[bool], width: usize, height: usize) -> Option<Vec<u32>> {
    if !seeds.iter().any(|&s| s) {
        return None;
    }
    const FAR: u32 = u32::MAX / 2;
    let mut d: Vec<u32> = seeds.iter().map(|&s| if s { 0 } else { FAR }).collect();
    let at = |x: usize, y: usize| y * width + x;
    for y in 0..height {
        for x in 0..width {
            let mut v = d[at(x, y)];
            if x > 0 {
                v = v.min(d[at(x - 1, y)] + 1);
            }
            if y > 0 {
                v = v.min(d[at(x, y - 1)] + 1);
                if x > 0 {
                    v = v.min(d[at(x - 1, y - 1)] + 1);
                }
                if x + 1 < width {
                    v = v.min(d[at(x + 1, y - 1)] + 1);
                }
            }
            d[at(x, y)] = v;
        }
    }
    for y in (0..height).rev() {
        for x in (0..width).rev() {
            let mut v = d[at(x, y)];
            if x + 1 < width {
                v = v.min(d[at(x + 1, y)] + 1);
            }
            if y + 1 < height {
                v = v.min(d[at(x, y + 1)] + 1);
                if x + 1 < width {
                    v = v.min(d[at(x + 1, y + 1)] + 1);
                }
                if x > 0 {
                    v = v.min(d[at(x - 1, y + 1)] + 1);
                }
            }
            d[at(x, y)] = v;
        }
    }
    Some(d)
}

/// Text pixels with a 4-neighbour that is background or outside the image.
pub fn text_contour(gt: &BinaryMask) -> BinaryMask {
    let (w, h) = gt.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        if !gt.get(x, y) {
            return false;
        }
        x == 0
            || y == 0
            || x + 1 == w
            || y + 1 == h
            || !gt.get(x - 1, y)
            || !gt.get(x + 1, y)
            || !gt.get(x, y - 1)
            || !gt.get(x, y + 1)
    })
}

/// Pseudo F-measure in percent.
pub fn pseudo_f_measure(pred: &BinaryMask, gt: &BinaryMask, weighting: PseudoWeighting) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    if gt.foreground_count() == 0 {
        return Err(Error::Undefined("undefined pseudo-recall: ground truth has no text"));
    }
    let (w, h) = gt.dims();
    let (recall_w, precision_w): (Vec<f64>, Vec<f64>) = match weighting {
        PseudoWeighting::Uniform => (vec![1.0; w * h], vec![1.0; w * h]),
        PseudoWeighting::ContourDistance => {
            let contour = text_contour(gt);
            let dc = chessboard_distance(contour.data(), w, h).expect("text implies contour");
            let df = chessboard_distance(gt.data(), w, h).expect("text present");
            let rw = dc.iter().map(|&d| 1.0 / (1.0 + d as f64)).collect();
            let pw = df
                .iter()
                .map(|&d| if d == 0 { 1.0 } else { d as f64 / (1.0 + d as f64) })
                .collect();
            (rw, pw)
        }
    };

    let (mut r_num, mut r_den, mut p_num, mut p_den) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..w * h {
        let (p, g) = (pred.data()[i], gt.data()[i]);
        if g {
            r_den += recall_w[i];
            if p {
                r_num += recall_w[i];
            }
        }
        if p {
            p_den += precision_w[i];
            if g {
                p_num += precision_w[i];
            }
        }
    }
    let recall = r_num / r_den;
    let precision = if p_den == 0.0 { 0.0 } else { p_num / p_den };
    Ok(harmonic_percent(precision, recall))
}

/// PSNR in dB with `V = 1`; identical masks give `f64::INFINITY`.
pub fn psnr(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    let flips = pred.data().iter().zip(gt.data()).filter(|(a, b)| a != b).count();
    if flips == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = flips as f64 / pred.data().len() as f64;
    Ok(10.0 * (1.0 / mse).log10())
}

pub const NUBN_BLOCK: usize = 8;

/// Number of 8x8 GT blocks (border blocks may be partial) holding both text
/// and background.
pub fn nubn(gt: &BinaryMask) -> usize {
    let (w, h) = gt.dims();
    let mut count = 0;
    for by in (0..h).step_by(NUBN_BLOCK) {
        for bx in (0..w).step_by(NUBN_BLOCK) {
            let (mut fg, mut bg) = (false, false);
            'block: for y in by..(by + NUBN_BLOCK).min(h) {
                for x in bx..(bx + NUBN_BLOCK).min(w) {
                    if gt.get(x, y) {
                        fg = true;
                    } else {
                        bg = true;
                    }
                    if fg && bg {
                        break 'block;
                    }
                }
            }
            if fg && bg {
                count += 1;
            }
        }
    }
    count
}

/// 5x5 reciprocal-distance weights, indexed `[j + 2][i + 2]` for offset
/// `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMatrix5x5 {
    pub weights: [[f64; 5]; 5],
}

impl WeightMatrix5x5 {
    /// Raw weight `1 / sqrt(i^2 + j^2)`, center 0, normalized to sum 1.
    pub fn reciprocal_distance() -> Self {
        let mut weights = [[0.0; 5]; 5];
        let mut total = 0.0;
        for (r, row) in weights.iter_mut().enumerate() {
            for (c, w) in row.iter_mut().enumerate() {
                let (i, j) = (c as f64 - 2.0, r as f64 - 2.0);
                if i != 0.0 || j != 0.0 {
                    *w = 1.0 / (i * i + j * j).sqrt();
                    total += *w;
                }
            }
        }
        for w in weights.iter_mut().flatten() {
            *w /= total;
        }
        WeightMatrix5x5 { weights }
    }

    #[inline]
    pub fn at(&self, i: isize, j: isize) -> f64 {
        self.weights[(j + 2) as usize][(i + 2) as usize]
    }
}

/// Distortion of the flipped pixel at `(x, y)` given its predicted value.
pub fn drd_at(gt: &BinaryMask, x: usize, y: usize, predicted: bool, nw: &WeightMatrix5x5) -> f64 {
    let (w, h) = gt.dims();
    let mut acc = 0.0;
    for j in -2isize..=2 {
        let gy = (y as isize + j).clamp(0, h as isize - 1) as usize;
        for i in -2isize..=2 {
            let gx = (x as isize + i).clamp(0, w as isize - 1) as usize;
            if gt.get(gx, gy) != predicted {
                acc += nw.at(i, j);
            }
        }
    }
    acc
}

/// Distance-reciprocal distortion: summed per-flip distortion over NUBN.
pub fn drd(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    pred.ensure_same_dims(gt)?;
    let nw = WeightMatrix5x5::reciprocal_distance();
    let (w, h) = gt.dims();
    let mut total = 0.0;
    let mut flipped = false;
    for y in 0..h {
        for x in 0..w {
            let p = pred.get(x, y);
            if p != gt.get(x, y) {
                flipped = true;
                total += drd_at(gt, x, y, p, &nw);
            }
        }
    }
    if !flipped {
        return Ok(0.0);
    }
    match nubn(gt) {
        0 => Err(Error::Undefined("DRD undefined on uniform GT")),
        n => Ok(total / n as f64),
    }
}

/// `(fm + pfm + psnr + (100 - drd)) / 4`; requires finite PSNR.
pub fn avg_score(fm: f64, pfm: f64, psnr: f64, drd: f64) -> Result<f64> {
    if !psnr.is_finite() {
        return Err(Error::Undefined("Avg-Score undefined for infinite PSNR"));
    }
    Ok((fm + pfm + psnr + (100.0 - drd)) / 4.0)
}

/// The four headline metrics of one prediction (or a mean over several).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub fm: f64,
    pub pfm: f64,
    #[serde(with = "inf_as_string")]
    pub psnr: f64,
    pub drd: f64,
}

impl Scores {
    pub fn avg(&self) -> Option<f64> {
        avg_score(self.fm, self.pfm, self.psnr, self.drd).ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub scores: Scores,
    pub avg: Option<f64>,
    pub counts: ConfusionCounts,
}

pub fn evaluate(pred: &BinaryMask, gt: &BinaryMask) -> Result<MetricsReport> {
    evaluate_with(pred, gt, PseudoWeighting::default())
}

pub fn evaluate_with(pred: &BinaryMask, gt: &BinaryMask, weighting: PseudoWeighting) -> Result<MetricsReport> {
    let counts = confusion(pred, gt)?;
    let scores = Scores {
        fm: f_measure(&counts),
        pfm: pseudo_f_measure(pred, gt, weighting)?,
        psnr: psnr(pred, gt)?,
        drd: drd(pred, gt)?,
    };
    Ok(MetricsReport {
        scores,
        avg: scores.avg(),
        counts,
    })
}

/// Arithmetic mean of each metric, with the Avg-Score recomputed from the
/// means. An infinite PSNR anywhere makes the mean PSNR infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub count: usize,
    #[serde(flatten)]
    pub scores: Scores,
    pub avg: Option<f64>,
}

pub fn aggregate(rows: &[Scores]) -> Option<MeanScores> {
    if rows.is_empty() {
        return None;
    }
    let n = rows.len() as f64;
    let mean = |f: fn(&Scores) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let scores = Scores {
        fm: mean(|s| s.fm),
        pfm: mean(|s| s.pfm),
        psnr: mean(|s| s.psnr),
        drd: mean(|s| s.drd),
    };
    Some(MeanScores {
        count: rows.len(),
        scores,
        avg: scores.avg(),
    })
}

/// Serde adapter writing infinite values as the string `"inf"`.
pub mod inf_as_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum NumOrStr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match NumOrStr::deserialize(d)? {
            NumOrStr::Num(v) => Ok(v),
            NumOrStr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            NumOrStr::Str(s) => Err(serde::de::Error::custom(format!("unexpected value {s:?}"))),
        }
    }
}
