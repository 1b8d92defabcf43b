mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use docbin::cli::manifest::{ChannelTag, PatchManifest};
use docbin::BinaryMask;
use serde_json::Value;

use common::degraded_document;

fn docbin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_docbin"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn docbin")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `<root>/page.png` (color) and `<root>/page_gt.png`.
fn dataset(root: &Path, seed: u64, w: usize, h: usize) -> BinaryMask {
    fs::create_dir_all(root).unwrap();
    let doc = degraded_document(seed, w, h);
    doc.image.save(root.join("page.png")).unwrap();
    doc.gt.save(root.join("page_gt.png")).unwrap();
    doc.gt
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

#[test]
fn identity_binarize_reproduces_clean_mask() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    fs::create_dir_all(&input).unwrap();
    let gt = degraded_document(3, 200, 150).gt;
    gt.save(input.join("clean.png")).unwrap();
    let out = tmp.path().join("out");

    let o = docbin(&["binarize", s(&input), "-o", s(&out), "--global-size", "128"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(BinaryMask::load(out.join("clean.png")).unwrap(), gt);
}

#[test]
fn evaluate_identical_masks() {
    let tmp = tempfile::tempdir().unwrap();
    let (pred, gtd) = (tmp.path().join("pred"), tmp.path().join("gt"));
    fs::create_dir_all(&pred).unwrap();
    fs::create_dir_all(&gtd).unwrap();
    let gt = degraded_document(9, 96, 80).gt;
    gt.save(pred.join("a.png")).unwrap();
    gt.save(gtd.join("a_gt.png")).unwrap();
    let report = tmp.path().join("r.json");

    let o = docbin(&["evaluate", "--pred", s(&pred), "--gt", s(&gtd), "--report", s(&report)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let img = &v["images"][0];
    assert_eq!(img["file"], "a.png");
    assert_eq!(img["fm"], 100.0);
    assert_eq!(img["pfm"], 100.0);
    assert_eq!(img["drd"], 0.0);
    assert_eq!(img["psnr"], "inf");
    assert!(img["avg"].is_null());
    assert_eq!(img["counts"]["fp"], 0);
    assert_eq!(v["mean"]["count"], 1);
}

#[test]
fn pipeline_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    dataset(&input, 21, 250, 230);
    let runs: Vec<PathBuf> = (0..2).map(|i| tmp.path().join(format!("run{i}"))).collect();
    for (i, out) in runs.iter().enumerate() {
        let workers = if i == 0 { "1" } else { "3" };
        let o = Command::new(env!("CARGO_BIN_EXE_docbin"))
            .args(["pipeline", s(&input), "-o", s(out), "--stage2", "baseline", "--global-size", "256"])
            .env("DOCBIN_WORKERS", workers)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (a, b) = (files_under(&runs[0]), files_under(&runs[1]));
    assert_eq!(a, b);
    assert!(a.contains(&PathBuf::from("masks/page.png")));
    assert!(a.contains(&PathBuf::from("report.json")));
    for rel in &a {
        assert_eq!(fs::read(runs[0].join(rel)).unwrap(), fs::read(runs[1].join(rel)).unwrap(), "{}", rel.display());
    }
    let v: Value = serde_json::from_str(&fs::read_to_string(runs[0].join("report.json")).unwrap()).unwrap();
    assert_eq!(v["images"].as_array().unwrap().len(), 1);
    assert!(v["mean"]["avg"].is_f64());
}

#[test]
fn preprocess_writes_valid_manifests() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    let gt = dataset(&input, 4, 250, 230);
    let out = tmp.path().join("pre");

    let o = docbin(&["preprocess", s(&input), "-o", s(&out), "--patch-size", "128"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let m = PatchManifest::read(out.join("page.manifest.json")).unwrap();
    assert_eq!((m.geometry.rows, m.geometry.cols), (2, 2));
    assert_eq!((m.geometry.pad_right, m.geometry.pad_bottom), (6, 26));
    let tags: Vec<_> = m.channels().into_iter().collect();
    assert_eq!(tags, [ChannelTag::Gray, ChannelTag::Red, ChannelTag::Green, ChannelTag::Blue]);
    let copy = tmp.path().join("copy.manifest.json");
    m.write(&copy).unwrap();
    assert_eq!(PatchManifest::read(&copy).unwrap(), m);

    let gm = PatchManifest::read(out.join("page.gt.manifest.json")).unwrap();
    assert_eq!(gm.channels().len(), 4);
    let gray = gm.load_grid(&out, ChannelTag::Gray).unwrap();
    let back = BinaryMask::from_raster(&docbin::patching::reassemble(&gray).unwrap());
    assert_eq!(back, gt);
    // a color channel's GT never marks text outside the dataset GT
    let red = gm.load_grid(&out, ChannelTag::Red).unwrap();
    let red = BinaryMask::from_raster(&docbin::patching::reassemble(&red).unwrap());
    assert!(red.data().iter().zip(gt.data()).all(|(&r, &g)| !r || g));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    dataset(&input, 2, 64, 48);
    fs::write(input.join("broken.png"), b"not an image").unwrap();
    let out = tmp.path().join("out");

    let o = docbin(&["binarize", s(&input), "-o", s(&out), "--global-size", "64"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join("page.png").is_file());
    assert!(String::from_utf8_lossy(&o.stderr).contains("broken.png"));

    let o = docbin(&["binarize", s(&tmp.path().join("missing")), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(1));

    let o = docbin(&["binarize", s(&input), "-o", s(&out), "--omega", "1.5"]);
    assert_eq!(o.status.code(), Some(1));

    let o = docbin(&["binarize", s(&input), "-o", s(&out), "--stage2", "external"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--stage2-dir"));
}

#[test]
fn debug_dump_writes_intermediates() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("in");
    dataset(&input, 8, 100, 90);
    let (out, dump) = (tmp.path().join("out"), tmp.path().join("dump"));
    let o = docbin(&[
        "binarize",
        s(&input),
        "-o",
        s(&out),
        "--patch-size",
        "64",
        "--global-size",
        "64",
        "--debug-dump",
        s(&dump),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = files_under(&dump.join("page"));
    assert!(files.iter().any(|p| p.starts_with("stage1")));
    assert!(files.iter().any(|p| p.starts_with("stage2")));
}
