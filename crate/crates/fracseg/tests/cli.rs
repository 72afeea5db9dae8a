use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fracseg::io::{read_ffm, read_mask, write_ffm, write_image_png, write_mask_png};
use fracseg_core::ffm::{compute_ffm, FfmParams};
use fracseg_core::topo::{extract_edges, skeletonize};
use fracseg_core::{BinaryMask, GrayImage, Grid};
use serde_json::Value;

fn fracseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracseg")).args(args).output().expect("spawn fracseg")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn texture(w: usize, h: usize) -> GrayImage {
    GrayImage::new(w, h, (0..w * h).map(|i| ((i * 37 + (i / w) * 11) % 256) as u16).collect()).unwrap()
}

fn ring(n: usize) -> BinaryMask {
    let c = (n as f64 - 1.0) / 2.0;
    BinaryMask::from_fn(n, n, |x, y| {
        let d = (x as f64 - c).hypot(y as f64 - c);
        (n as f64 * 0.2..=n as f64 * 0.35).contains(&d)
    })
}

#[test]
fn ffm_writes_engine_output_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let (inp, out) = (dir.path().join("in"), dir.path().join("out"));
    fs::create_dir(&inp).unwrap();
    let image = texture(23, 19);
    write_image_png(&image, inp.join("tex.png")).unwrap();
    write_image_png(&GrayImage::filled(12, 12, 90).unwrap(), inp.join("flat.png")).unwrap();

    let args = ["ffm", s(&inp), "--out", s(&out), "--window", "7", "--step", "2", "--png16"];
    let first = fracseg(&args);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let recs = records(&first);
    assert_eq!(recs.len(), 2);
    assert!(recs[0]["file"].as_str().unwrap().ends_with("flat.png"));

    let want = compute_ffm(&image, &FfmParams::new(7, 2).unwrap()).unwrap();
    let got = read_ffm(out.join("tex.ffm")).unwrap();
    assert!(got.as_slice().iter().zip(want.as_slice()).all(|(a, b)| a.to_bits() == f64::from(*b as f32).to_bits()));
    assert!(read_ffm(out.join("flat.ffm")).unwrap().as_slice().iter().all(|&v| v == 1.0));

    let snapshot = |name: &str| fs::read(out.join(name)).unwrap();
    let before = [snapshot("tex.ffm"), snapshot("tex.ffm.png"), snapshot("flat.ffm")];
    let second = fracseg(&args);
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(before, [snapshot("tex.ffm"), snapshot("tex.ffm.png"), snapshot("flat.ffm")]);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("t.png");
    write_image_png(&texture(40, 40), &img).unwrap();
    let outs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|t| {
            let out = dir.path().join(format!("o{t}"));
            assert!(fracseg(&["ffm", s(&img), "--out", s(&out), "--threads", t]).status.success());
            fs::read(out.join("t.ffm")).unwrap()
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
}

#[test]
fn unreadable_inputs_fail_per_file() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.png");
    let junk = dir.path().join("junk.png");
    write_image_png(&texture(8, 8), &good).unwrap();
    fs::write(&junk, b"not an image").unwrap();
    let missing = dir.path().join("missing.pgm");
    let out = dir.path().join("out");
    let res = fracseg(&["ffm", s(&good), s(&junk), s(&missing), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(1));
    let recs = records(&res);
    assert!(recs[0].get("error").is_none());
    assert!(recs[1]["error"].as_str().unwrap().contains("unsupported"));
    assert!(recs[2].get("error").is_some());
    assert!(out.join("good.ffm").exists());
    let stderr = String::from_utf8_lossy(&res.stderr);
    assert!(stderr.contains("junk.png") && stderr.contains("missing.pgm"));
}

#[test]
fn invalid_parameters_write_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("a.png");
    write_image_png(&texture(8, 8), &img).unwrap();
    let out = dir.path().join("out");
    let res = fracseg(&["ffm", s(&img), "--out", s(&out), "--window", "4"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());

    let sub = dir.path().join("sub");
    fs::create_dir(&sub).unwrap();
    write_image_png(&texture(8, 8), sub.join("a.png")).unwrap();
    let res = fracseg(&["ffm", s(&img), s(&sub.join("a.png")), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn weights_follow_label_structure() {
    let dir = tempfile::tempdir().unwrap();
    write_mask_png(&BinaryMask::zeros(10, 10), dir.path().join("empty.png")).unwrap();
    write_mask_png(&BinaryMask::from_fn(10, 10, |_, _| true), dir.path().join("full.png")).unwrap();
    let line = BinaryMask::from_fn(20, 20, |_, y| (9..12).contains(&y));
    write_mask_png(&line, dir.path().join("line.png")).unwrap();
    let out = dir.path().join("w");
    let res = fracseg(&[
        "weights",
        s(&dir.path().join("empty.png")),
        s(&dir.path().join("full.png")),
        s(&dir.path().join("line.png")),
        "--out",
        s(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["empty", "full"] {
        assert!(read_ffm(out.join(format!("{name}.weights.ffm"))).unwrap().as_slice().iter().all(|&v| v == 1.0));
    }
    let w = read_ffm(out.join("line.weights.ffm")).unwrap();
    // Weight peaks at the band boundary; far background is uniform and lower.
    let peak = (7..14).map(|y| w.get(10, y)).fold(0.0, f64::max);
    assert_eq!(peak, 1.0);
    assert!((0..5).all(|y| w.get(10, y) == w.get(10, 0)) && w.get(10, 0) < peak);
}

#[test]
fn extract_matches_topology_kit() {
    let dir = tempfile::tempdir().unwrap();
    let label = dir.path().join("ring.png");
    let mask = ring(24);
    write_mask_png(&mask, &label).unwrap();
    let out = dir.path().join("gt");
    let res = fracseg(&["extract", s(&label), "--out", s(&out)]);
    assert!(res.status.success());
    assert_eq!(read_mask(out.join("ring_edge.png")).unwrap(), extract_edges(&mask));
    assert_eq!(read_mask(out.join("ring_skeleton.png")).unwrap(), skeletonize(&mask));
}

#[test]
fn fd_reports_two_for_constant_images() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("c.pgm");
    let mut bytes = b"P5 16 16 255\n".to_vec();
    bytes.extend(std::iter::repeat_n(77u8, 256));
    fs::write(&img, bytes).unwrap();
    let res = fracseg(&["fd", s(&img), "--json", "--scales", "2,4,8"]);
    assert!(res.status.success());
    let rec = &records(&res)[0];
    assert!((rec["fd"].as_f64().unwrap() - 2.0).abs() < 1e-9);
    assert_eq!(rec["scales"], serde_json::json!([2, 4, 8]));

    let table = fracseg(&["fd", s(&img)]);
    assert!(table.status.success());
    let text = String::from_utf8_lossy(&table.stdout);
    assert!(text.lines().next().unwrap().contains("fd") && text.contains("2.000000"));

    assert_eq!(fracseg(&["fd", s(&img), "--scales", "4,2"]).status.code(), Some(2));
}

fn eval_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let (pred, gt) = (dir.join("pred"), dir.join("gt"));
    fs::create_dir_all(&pred).unwrap();
    fs::create_dir_all(&gt).unwrap();
    let mask = ring(20);
    write_mask_png(&mask, gt.join("a.png")).unwrap();
    write_ffm(&mask.to_float(), pred.join("a.ffm")).unwrap();
    let noisy = Grid::from_fn(20, 20, |x, y| if mask.get(x, y) { 0.8 } else { ((x * 7 + y * 3) % 10) as f64 / 20.0 });
    write_mask_png(&mask, gt.join("b.png")).unwrap();
    write_ffm(&noisy, pred.join("b.ffm")).unwrap();
    (pred, gt)
}

#[test]
fn eval_reports_each_pair_and_the_mean() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gt) = eval_fixture(dir.path());
    let res = fracseg(&["eval", "--pred", s(&pred), "--gt", s(&gt)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let recs = records(&res);
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[0]["image"], "a");
    assert_eq!(recs[0]["iou"], 100.0);
    assert_eq!(recs[0]["cl_dice"], 100.0);
    assert_eq!(recs[0]["hd"], 0.0);
    assert_eq!(recs[0]["betti_error"], 0);
    let mean = &recs[2];
    assert_eq!(mean["mean"], true);
    assert_eq!(mean["images"], 2);
    let avg = (recs[0]["auc"].as_f64().unwrap() + recs[1]["auc"].as_f64().unwrap()) / 2.0;
    assert!((mean["auc"].as_f64().unwrap() - avg).abs() < 1e-12);

    let out = dir.path().join("report.jsonl");
    let again = fracseg(&["eval", "--pred", s(&pred), "--gt", s(&gt), "--out", s(&out)]);
    assert!(again.status.success() && again.stdout.is_empty());
    assert_eq!(fs::read(&out).unwrap(), res.stdout);
}

#[test]
fn eval_metric_subset_and_image_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let (_, gt) = eval_fixture(dir.path());
    let pred = dir.path().join("p.png");
    let img = GrayImage::from_u8(20, 20, &ring(20).as_slice().iter().map(|&v| v * 200).collect::<Vec<_>>()).unwrap();
    write_image_png(&img, &pred).unwrap();
    let res =
        fracseg(&["eval", "--pred", s(&pred), "--gt", s(&gt.join("a.png")), "--metrics", "iou,betti", "--betti", "b1"]);
    // Stems differ (p vs a): both sides are orphans.
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(records(&res).iter().filter(|r| r.get("error").is_some()).count(), 2);

    let renamed = dir.path().join("a.png");
    fs::rename(&pred, &renamed).unwrap();
    let res = fracseg(&[
        "eval",
        "--pred",
        s(&renamed),
        "--gt",
        s(&gt.join("a.png")),
        "--metrics",
        "iou,betti",
        "--betti-patch",
        "5",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rec = &records(&res)[0];
    assert_eq!(rec["iou"], 100.0);
    assert_eq!(rec["betti_error"], 0);
    assert!(rec["auc"].is_null() && rec["hd"].is_null());
}

#[test]
fn eval_mismatched_sets_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (pred, gt) = eval_fixture(dir.path());
    fs::remove_file(gt.join("b.png")).unwrap();
    let res = fracseg(&["eval", "--pred", s(&pred), "--gt", s(&gt)]);
    assert_eq!(res.status.code(), Some(1));
    let recs = records(&res);
    assert!(recs[1]["error"].as_str().unwrap().contains("ground-truth"));
    assert_eq!(recs.last().unwrap()["images"], 1);
}

#[test]
fn bench_reports_requested_samples() {
    let res = fracseg(&["bench", "--size", "64", "--reps", "1", "--threads", "1"]);
    assert!(res.status.success());
    let rec = &records(&res)[0];
    assert_eq!(rec["samples_ms"].as_array().unwrap().len(), 1);
    assert!(rec["median_ms"].as_f64().unwrap() > 0.0);
    assert!(rec["step_exponent"].is_number());
    assert_eq!(fracseg(&["bench", "--size", "32"]).status.code(), Some(2));
}
