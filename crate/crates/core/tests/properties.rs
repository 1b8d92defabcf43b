mod common;

use docbin::metrics::{self, PseudoWeighting, WeightMatrix5x5};
use docbin::patching::{reassemble, split_patches};
use docbin::pipeline::{binarize_image, make_channel_groundtruth, PipelineConfig};
use docbin::raster::{binarize, otsu_threshold, resize_bicubic, split_channels};
use docbin::wavelet::{dwt2_haar, idwt2_haar, normalize_sigmoid, stage1_channel_transform, NormParams};
use docbin::{BinaryMask, FloatPlane, Raster};
use proptest::prelude::*;
use rand::Rng;

use common::*;

fn plane_strategy(max: usize) -> impl Strategy<Value = FloatPlane> {
    (1..=max, 1..=max, any::<u64>()).prop_map(|(w, h, seed)| random_plane(&mut rng(seed), w, h, -20.0, 280.0))
}

fn mask_pair(max: usize) -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (4..=max, 4..=max, any::<u64>(), 0.0..0.4).prop_map(|(w, h, seed, p)| {
        let mut r = rng(seed);
        let gt = random_gt(&mut r, w, h);
        let pred = perturb(&mut r, &gt, p);
        (pred, gt)
    })
}

/// Planes drawn from a small palette plus jitter, so histograms have gaps
/// and repeated bins.
fn palette_plane() -> impl Strategy<Value = FloatPlane> {
    (1usize..24, 1usize..24, 1usize..12, any::<u64>()).prop_map(|(w, h, levels, seed)| {
        let mut r = rng(seed);
        let palette: Vec<f64> = (0..levels).map(|_| r.random_range(0.0..255.0)).collect();
        let data = (0..w * h)
            .map(|_| palette[r.random_range(0..levels)] + r.random_range(-3.0..3.0))
            .collect();
        FloatPlane::new(w, h, data).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn otsu_matches_exhaustive_scan(plane in palette_plane()) {
        prop_assert_eq!(otsu_threshold(&plane).unwrap(), oracle_otsu(&plane));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn threshold_is_monotone(plane in plane_strategy(20), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (t1, t2) = if a <= b { (a, b) } else { (b, a) };
        let (m1, m2) = (binarize(&plane, t1), binarize(&plane, t2));
        for (&lo, &hi) in m1.data().iter().zip(m2.data()) {
            prop_assert!(!lo || hi);
        }
    }

    #[test]
    fn split_channels_recombines((w, h, seed) in (1usize..30, 1usize..30, any::<u64>())) {
        let img = random_raster(&mut rng(seed), w, h, 3);
        let b = split_channels(&img).unwrap();
        prop_assert_eq!(Raster::from_rgb_planes(&b.red, &b.green, &b.blue).unwrap(), img);
    }

    #[test]
    fn bicubic_matches_direct_evaluation(plane in plane_strategy(12), ow in 1usize..30, oh in 1usize..30) {
        let fast = resize_bicubic(&plane, ow, oh).unwrap();
        let slow = oracle_bicubic(&plane, ow, oh);
        for (a, b) in fast.data().iter().zip(slow.data()) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }

    #[test]
    fn bicubic_keeps_constants(w in 1usize..20, h in 1usize..20, ow in 1usize..40, oh in 1usize..40, k in -300.0..300.0f64) {
        let out = resize_bicubic(&FloatPlane::filled(w, h, k), ow, oh).unwrap();
        prop_assert!(out.data().iter().all(|&v| v == k));
    }

    #[test]
    fn bicubic_identity_is_exact(plane in plane_strategy(20)) {
        let (w, h) = plane.dims();
        prop_assert_eq!(resize_bicubic(&plane, w, h).unwrap(), plane);
    }

    #[test]
    fn patches_round_trip((w, h, c, ps, seed) in (1usize..90, 1usize..90, prop_oneof![Just(1usize), Just(3)], 1usize..40, any::<u64>())) {
        let img = random_raster(&mut rng(seed), w, h, c);
        let grid = split_patches(&img, ps).unwrap();
        prop_assert_eq!(grid.patches().len(), w.div_ceil(ps) * h.div_ceil(ps));
        prop_assert_eq!(reassemble(&grid).unwrap(), img);
    }

    #[test]
    fn haar_reconstructs_and_keeps_energy((hw, hh, seed) in (1usize..20, 1usize..20, any::<u64>())) {
        let x = random_plane(&mut rng(seed), 2 * hw, 2 * hh, -500.0, 500.0);
        let sub = dwt2_haar(&x).unwrap();
        let back = idwt2_haar(&sub).unwrap();
        for (a, b) in x.data().iter().zip(back.data()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
        prop_assert!((sub.energy() - x.energy()).abs() <= 1e-6 * x.energy());
    }

    #[test]
    fn sigmoid_is_strictly_monotone_and_bounded(
        alpha in 0.5..100.0f64,
        beta in -50.0..300.0f64,
        lo in -100.0..100.0f64,
        span in 1.0..300.0f64,
        za in -20.0..20.0f64,
        gap in 1e-3..10.0f64,
    ) {
        let p = NormParams::new(alpha, beta, lo, lo + span).unwrap();
        let a = beta + za * alpha;
        let b = a + gap * alpha;
        let b = if (b - beta) / alpha > 20.0 { beta + 20.0 * alpha } else { b };
        prop_assume!(b > a);
        let out = normalize_sigmoid(&FloatPlane::new(2, 1, vec![a, b]).unwrap(), &p);
        let (fa, fb) = (out.data()[0], out.data()[1]);
        prop_assert!(fa < fb);
        prop_assert!(fa > lo && fb < lo + span);
    }

    #[test]
    fn stage1_keeps_dims_and_repeats((hw, hh, seed) in (1usize..24, 1usize..24, any::<u64>())) {
        let x = random_plane(&mut rng(seed), 2 * hw, 2 * hh, 0.0, 255.0);
        let a = stage1_channel_transform(&x).unwrap();
        prop_assert_eq!(a.dims(), x.dims());
        prop_assert_eq!(a, stage1_channel_transform(&x).unwrap());
    }

    #[test]
    fn scores_stay_in_range((pred, gt) in mask_pair(40)) {
        let c = metrics::confusion(&pred, &gt).unwrap();
        let fm = metrics::f_measure(&c);
        prop_assert!((0.0..=100.0).contains(&fm));
        let pfm = metrics::pseudo_f_measure(&pred, &gt, PseudoWeighting::ContourDistance).unwrap();
        prop_assert!((0.0..=100.0).contains(&pfm));
        if let Ok(d) = metrics::drd(&pred, &gt) {
            prop_assert!(d >= 0.0);
        }
    }

    #[test]
    fn uniform_pseudo_f_is_f_measure((pred, gt) in mask_pair(40)) {
        let fm = metrics::f_measure(&metrics::confusion(&pred, &gt).unwrap());
        let pfm = metrics::pseudo_f_measure(&pred, &gt, PseudoWeighting::Uniform).unwrap();
        prop_assert!(rel_close(fm, pfm, 1e-12), "{} vs {}", fm, pfm);
    }

    #[test]
    fn extra_flip_lowers_psnr((pred, gt) in mask_pair(40), pick in any::<prop::sample::Index>()) {
        let agree: Vec<usize> = (0..gt.data().len()).filter(|&i| pred.data()[i] == gt.data()[i]).collect();
        prop_assume!(!agree.is_empty());
        let i = agree[pick.index(agree.len())];
        let (w, _) = gt.dims();
        let mut worse = pred.clone();
        worse.set(i % w, i / w, !pred.data()[i]);
        prop_assert!(metrics::psnr(&worse, &gt).unwrap() < metrics::psnr(&pred, &gt).unwrap());
    }

    #[test]
    fn full_foreground_gt_is_plain_binarize(plane in plane_strategy(20), t in 0.0..1.0f64) {
        let (w, h) = plane.dims();
        let y = BinaryMask::filled(w, h, true);
        prop_assert_eq!(make_channel_groundtruth(&plane, &y, t).unwrap(), binarize(&plane, t));
    }

    #[test]
    fn gray_identity_pipeline_matches_scalar_blend(
        (w, h, seed) in (1usize..48, 1usize..48, any::<u64>()),
        ps in 1usize..32,
        gs in 1usize..24,
    ) {
        let img = random_raster(&mut rng(seed), w, h, 1);
        let cfg = PipelineConfig { patch_size: ps, global_size: gs, ..PipelineConfig::default() };
        let got = binarize_image(&img, &cfg).unwrap();

        let raw = img.channel_plane(0);
        let small = resize_bicubic(&raw, gs, gs).unwrap();
        let small = FloatPlane::from_fn(gs, gs, |x, y| small.get(x, y).clamp(0.0, 255.0).round());
        let up = resize_bicubic(&small, w, h).unwrap();
        let want = BinaryMask::from_fn(w, h, |x, y| {
            let g = up.get(x, y).clamp(0.0, 255.0);
            0.5 * raw.get(x, y) + 0.5 * g < 127.5
        });
        prop_assert_eq!(got, want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn color_identity_pipeline_matches_scalar_blend(half in 2usize..12, gs in 1usize..20, seed in any::<u64>()) {
        let n = 2 * half;
        let img = random_raster(&mut rng(seed), n, n, 3);
        let cfg = PipelineConfig { patch_size: n, global_size: gs, ..PipelineConfig::default() };
        let got = binarize_image(&img, &cfg).unwrap();

        let q = |v: f64| v.clamp(0.0, 255.0).round();
        let luma = |r: f64, g: f64, b: f64| 0.299 * r + 0.587 * g + 0.114 * b;
        let planes: Vec<FloatPlane> = (0..3).map(|c| img.channel_plane(c)).collect();
        let gray = FloatPlane::from_fn(n, n, |x, y| q(luma(planes[0].get(x, y), planes[1].get(x, y), planes[2].get(x, y))));
        let fused: Vec<FloatPlane> = planes
            .iter()
            .map(|p| {
                let t = stage1_channel_transform(p).unwrap();
                FloatPlane::from_fn(n, n, |x, y| q(0.5 * q(t.get(x, y)) + 0.5 * gray.get(x, y)))
            })
            .collect();
        let local = FloatPlane::from_fn(n, n, |x, y| luma(fused[0].get(x, y), fused[1].get(x, y), fused[2].get(x, y)));
        let small: Vec<FloatPlane> = planes
            .iter()
            .map(|p| {
                let s = resize_bicubic(p, gs, gs).unwrap();
                FloatPlane::from_fn(gs, gs, |x, y| q(s.get(x, y)))
            })
            .collect();
        let small_luma = FloatPlane::from_fn(gs, gs, |x, y| luma(small[0].get(x, y), small[1].get(x, y), small[2].get(x, y)));
        let up = resize_bicubic(&small_luma, n, n).unwrap();
        let want = BinaryMask::from_fn(n, n, |x, y| 0.5 * local.get(x, y) + 0.5 * up.get(x, y).clamp(0.0, 255.0) < 127.5);
        prop_assert_eq!(got, want);
    }
}

#[test]
fn weight_matrix_shape() {
    let m = WeightMatrix5x5::reciprocal_distance();
    let total: f64 = m.weights.iter().flatten().sum();
    assert!((total - 1.0).abs() < 1e-15);
    assert_eq!(m.at(0, 0), 0.0);
    for j in -2isize..=2 {
        for i in -2isize..=2 {
            // quarter turn (i, j) -> (-j, i)
            assert_eq!(m.at(i, j), m.at(-j, i));
        }
    }
}

#[test]
fn bicubic_oracle_on_two_by_two() {
    let src = FloatPlane::new(2, 2, vec![0.0, 100.0, 100.0, 200.0]).unwrap();
    let got = resize_bicubic(&src, 4, 4).unwrap();
    let want = oracle_bicubic(&src, 4, 4);
    for (a, b) in got.data().iter().zip(want.data()) {
        assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }
    // output (0, 0) samples source -0.25; taps -2, -1, 0 clamp onto index 0
    let k = |x: f64| oracle_keys(x);
    let (near, far) = (k(1.75) + k(0.75) + k(0.25), k(1.25));
    let row = |v0: f64, v1: f64| v0 * near + v1 * far;
    let corner = row(0.0, 100.0) * near + row(100.0, 200.0) * far;
    assert!((got.get(0, 0) - corner).abs() < 1e-9);
}
