#![allow(dead_code)]

use docbin::{BinaryMask, FloatPlane, Raster};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_plane(rng: &mut impl Rng, w: usize, h: usize, lo: f64, hi: f64) -> FloatPlane {
    let data = (0..w * h).map(|_| rng.random_range(lo..hi)).collect();
    FloatPlane::new(w, h, data).unwrap()
}

pub fn random_raster(rng: &mut impl Rng, w: usize, h: usize, channels: usize) -> Raster {
    let data = (0..w * h * channels).map(|_| rng.random()).collect();
    Raster::new(w, h, channels, data).unwrap()
}

/// Blobby ground truth: a handful of filled rectangles.
pub fn random_gt(rng: &mut impl Rng, w: usize, h: usize) -> BinaryMask {
    let mut m = BinaryMask::filled(w, h, false);
    for _ in 0..rng.random_range(1..12) {
        let (x0, y0) = (rng.random_range(0..w), rng.random_range(0..h));
        let (bw, bh) = (rng.random_range(1..w / 3 + 2), rng.random_range(1..h / 3 + 2));
        for y in y0..(y0 + bh).min(h) {
            for x in x0..(x0 + bw).min(w) {
                m.set(x, y, true);
            }
        }
    }
    m
}

/// Copy of `gt` with each pixel flipped with probability `p`.
pub fn perturb(rng: &mut impl Rng, gt: &BinaryMask, p: f64) -> BinaryMask {
    let (w, h) = gt.dims();
    BinaryMask::from_fn(w, h, |x, y| gt.get(x, y) ^ rng.random_bool(p))
}

// ---------------------------------------------------------------------------
// pixel-loop oracles

pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

pub fn oracle_counts(pred: &BinaryMask, gt: &BinaryMask) -> Counts {
    let (w, h) = gt.dims();
    let mut c = Counts { tp: 0, fp: 0, fn_: 0, tn: 0 };
    for y in 0..h {
        for x in 0..w {
            let (p, g) = (pred.get(x, y), gt.get(x, y));
            if p && g {
                c.tp += 1;
            } else if p {
                c.fp += 1;
            } else if g {
                c.fn_ += 1;
            } else {
                c.tn += 1;
            }
        }
    }
    c
}

/// Dice form, `2TP / (2TP + FP + FN)`, algebraically equal to the F-measure.
pub fn oracle_fm(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let c = oracle_counts(pred, gt);
    if c.tp == 0 {
        return 0.0;
    }
    100.0 * (2 * c.tp) as f64 / (2 * c.tp + c.fp + c.fn_) as f64
}

pub fn oracle_psnr(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let (w, h) = gt.dims();
    let mut se = 0.0;
    for y in 0..h {
        for x in 0..w {
            let d = pred.get(x, y) as u8 as f64 - gt.get(x, y) as u8 as f64;
            se += d * d;
        }
    }
    if se == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (1.0 / (se / (w * h) as f64)).log10()
}

pub fn oracle_nubn(gt: &BinaryMask) -> usize {
    let (w, h) = gt.dims();
    let (bw, bh) = (w.div_ceil(8), h.div_ceil(8));
    let mut fg = vec![0usize; bw * bh];
    let mut all = vec![0usize; bw * bh];
    for y in 0..h {
        for x in 0..w {
            let b = (y / 8) * bw + x / 8;
            all[b] += 1;
            fg[b] += gt.get(x, y) as usize;
        }
    }
    fg.iter().zip(&all).filter(|&(&f, &a)| f > 0 && f < a).count()
}

pub fn oracle_drd(pred: &BinaryMask, gt: &BinaryMask) -> Option<f64> {
    let (w, h) = gt.dims();
    let mut raw = [[0.0f64; 5]; 5];
    for (j, row) in raw.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 2.0, j as f64 - 2.0);
            if (i, j) != (2, 2) {
                *v = 1.0 / (di * di + dj * dj).sqrt();
            }
        }
    }
    let sum: f64 = raw.iter().flatten().sum();
    let mut total = 0.0;
    let mut flips = 0;
    for y in 0..h {
        for x in 0..w {
            let p = pred.get(x, y);
            if p == gt.get(x, y) {
                continue;
            }
            flips += 1;
            for (j, row) in raw.iter().enumerate() {
                for (i, wgt) in row.iter().enumerate() {
                    let gx = (x as isize + i as isize - 2).clamp(0, w as isize - 1) as usize;
                    let gy = (y as isize + j as isize - 2).clamp(0, h as isize - 1) as usize;
                    if gt.get(gx, gy) != p {
                        total += wgt / sum;
                    }
                }
            }
        }
    }
    if flips == 0 {
        return Some(0.0);
    }
    match oracle_nubn(gt) {
        0 => None,
        n => Some(total / n as f64),
    }
}

/// Exhaustive Otsu scan with exact integer comparison; dark class is `< t`,
/// ties to the smallest `t`.
pub fn oracle_otsu(plane: &FloatPlane) -> u8 {
    let vals: Vec<i128> = plane.data().iter().map(|v| v.round().clamp(0.0, 255.0) as i128).collect();
    let mut best: Option<(i128, i128, usize)> = None;
    for t in 1..256 {
        let dark: Vec<i128> = vals.iter().copied().filter(|&v| v < t as i128).collect();
        let bright: Vec<i128> = vals.iter().copied().filter(|&v| v >= t as i128).collect();
        if dark.is_empty() || bright.is_empty() {
            continue;
        }
        let (n0, n1) = (dark.len() as i128, bright.len() as i128);
        let (s0, s1): (i128, i128) = (dark.iter().sum(), bright.iter().sum());
        let d = n0 * s1 - n1 * s0;
        // score d^2 / (n0 n1) kept as a fraction
        let (num, den) = (d * d, n0 * n1);
        let better = match best {
            None => true,
            Some((bn, bd, _)) => num * bd > bn * den,
        };
        if better {
            best = Some((num, den, t));
        }
    }
    match best {
        Some((_, _, t)) => t as u8,
        None => vals[0] as u8,
    }
}

/// Keys cubic, written from its piecewise definition with `a = -0.5`.
pub fn oracle_keys(x: f64) -> f64 {
    let a = -0.5;
    let x = x.abs();
    if x < 1.0 {
        (a + 2.0) * x.powi(3) - (a + 3.0) * x.powi(2) + 1.0
    } else if x < 2.0 {
        a * x.powi(3) - 5.0 * a * x.powi(2) + 8.0 * a * x - 4.0 * a
    } else {
        0.0
    }
}

/// Direct 2-D bicubic evaluation, 16 taps per output sample.
pub fn oracle_bicubic(plane: &FloatPlane, ow: usize, oh: usize) -> FloatPlane {
    let (w, h) = plane.dims();
    FloatPlane::from_fn(ow, oh, |ox, oy| {
        let sx = (ox as f64 + 0.5) * w as f64 / ow as f64 - 0.5;
        let sy = (oy as f64 + 0.5) * h as f64 / oh as f64 - 0.5;
        let (fx, fy) = (sx.floor() as isize, sy.floor() as isize);
        let mut acc = 0.0;
        for j in fy - 1..=fy + 2 {
            for i in fx - 1..=fx + 2 {
                let v = plane.get(i.clamp(0, w as isize - 1) as usize, j.clamp(0, h as isize - 1) as usize);
                acc += v * oracle_keys(sx - i as f64) * oracle_keys(sy - j as f64);
            }
        }
        acc
    })
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

// ---------------------------------------------------------------------------
// synthetic degraded documents

/// Aged color page with handwriting-like strokes and its text mask.
pub struct SyntheticDoc {
    pub image: Raster,
    pub gt: BinaryMask,
}

/// Yellowed paper (blue channel below mid-gray), a soft illumination
/// gradient, sensor noise and ink whose strength fades from word to word.
pub fn degraded_document(seed: u64, w: usize, h: usize) -> SyntheticDoc {
    let mut rng = rng(seed);
    let paper = [
        rng.random_range(196.0..212.0),
        rng.random_range(166.0..182.0),
        rng.random_range(108.0..124.0),
    ];
    let ink = [82.0, 74.0, 78.0];
    let fade_to = [170.0, 150.0, 105.0];

    let mut gt = BinaryMask::filled(w, h, false);
    let mut strength = vec![0.0f64; w * h];
    let line_pitch = rng.random_range(26..34);
    let mut y0 = rng.random_range(8..16);
    while y0 + 20 < h {
        let mut x = rng.random_range(6..14);
        while x + 10 < w {
            let word_len = rng.random_range(18..60).min(w - 8 - x);
            let fade: f64 = if rng.random_bool(0.4) { rng.random_range(0.4..0.9) } else { rng.random_range(0.0..0.2) };
            let mut sx = x;
            while sx < x + word_len {
                let thick = rng.random_range(4..8);
                let tall = rng.random_range(10..18);
                let top = y0 + rng.random_range(0..4);
                for yy in top..(top + tall).min(h) {
                    for xx in sx..(sx + thick).min(w) {
                        gt.set(xx, yy, true);
                        strength[yy * w + xx] = 1.0 - fade;
                    }
                }
                if rng.random_bool(0.5) {
                    let bar_y = top + rng.random_range(0..tall);
                    for xx in sx..(sx + rng.random_range(6..12)).min(w) {
                        for yy in bar_y..(bar_y + thick - 1).min(h) {
                            gt.set(xx, yy, true);
                            strength[yy * w + xx] = 1.0 - fade;
                        }
                    }
                }
                sx += thick + rng.random_range(3..8);
            }
            x += word_len + rng.random_range(10..24);
        }
        y0 += line_pitch;
    }

    let noise = Normal::new(0.0, 5.0).unwrap();
    let tilt = rng.random_range(-0.04..0.04);
    let mut data = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let light = 1.0 + tilt * (x as f64 / w as f64 - 0.5) + 0.5 * tilt * (y as f64 / h as f64 - 0.5);
            let s = strength[y * w + x];
            for c in 0..3 {
                let bg = paper[c] * light;
                let fg = ink[c] + (fade_to[c] - ink[c]) * (1.0 - s);
                let v = if gt.get(x, y) { fg } else { bg } + noise.sample(&mut rng);
                data.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    SyntheticDoc {
        image: Raster::new(w, h, 3, data).unwrap(),
        gt,
    }
}
