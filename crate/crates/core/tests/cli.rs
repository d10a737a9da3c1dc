//! End-to-end runs of the `ottc` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ottc::cli::RunManifest;
use ottc::ingest::{parse_annotations, write_dense_map, write_predictions};
use ottc::{AnnotationMethod, DenseMiDMap, PredictionKey, PredictionRecord};

fn ottc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ottc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/kitti")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn assert_ok(o: &Output) {
    assert_eq!(o.status.code(), Some(0), "stderr: {}", stderr(o));
}

fn gen_gt(method: &str, out: &Path) -> Output {
    ottc(&["gen-gt", "--kitti", s(&fixture()), "--kfps", "10", "--method", method, "--out", s(out)])
}

#[test]
fn gen_gt_on_kitti_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gt");
    let o = gen_gt("tracks3d", &out);
    assert_ok(&o);
    let anns = parse_annotations(&std::fs::read_to_string(out.join("annotations.txt")).unwrap()).unwrap();
    // Car 0→1→2→3, Pedestrian 0→1 (gap at 2), Cyclist 2→3
    assert_eq!(anns.len(), 5);
    assert!(anns.iter().all(|a| a.method() == AnnotationMethod::Tracks3D));
    let car0 = anns.iter().find(|a| a.track_id() == 2 && a.frame_index() == 0).unwrap();
    let dist = |z: f64| (2.85f64 * 2.85 + 1.70 * 1.70 + z * z).sqrt();
    assert!((car0.eta() - dist(11.84) / dist(12.34)).abs() < 1e-15);
    let tau = car0.tau().seconds().unwrap();
    assert!((tau - 0.1 / (1.0 - car0.eta())).abs() < 1e-9);
    assert_eq!(car0.center(), ((599.41 + 629.75) / 2.0, (156.40 + 189.25) / 2.0));
    assert!(RunManifest::read(&out).unwrap().verify(&out).unwrap());
}

#[test]
fn missing_calibration_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let kitti = dir.path().join("kitti");
    std::fs::create_dir_all(kitti.join("label_02")).unwrap();
    std::fs::copy(fixture().join("label_02/0004.txt"), kitti.join("label_02/0004.txt")).unwrap();
    let o = ottc(&["gen-gt", "--kitti", s(&kitti), "--kfps", "10", "--out", s(&dir.path().join("gt"))]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("ottc-error code=3"), "{err}");
    assert!(err.contains("MissingCalibration"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn corrected_method_reports_skips_and_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("gt");
    let o = gen_gt("tracks2d-corrected", &out);
    assert_ok(&o);
    let skipped = std::fs::read_to_string(out.join("skipped.tsv")).unwrap();
    // last key frame of every track, plus the pedestrian's gap
    assert!(skipped.lines().filter(|l| l.contains("no-successor")).count() >= 3);
}

#[test]
fn missing_kfps_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ottc(&["gen-gt", "--kitti", s(&fixture()), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn simulate_suite_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let digests: Vec<String> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            assert_ok(&ottc(&["simulate", "--suite", "42", "--out", s(&out)]));
            RunManifest::read(&out).unwrap().output_digest
        })
        .collect();
    assert_eq!(digests[0], digests[1]);
    let a = std::fs::read(dir.path().join("a/exact.txt")).unwrap();
    let b = std::fs::read(dir.path().join("b/exact.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn degenerate_spec_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    assert_ok(&ottc(&["simulate", "--suite", "1", "--family", "plate", "--out", s(&out)]));
    let spec_path = out.join("specs/plate-0000.json");
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&spec_path).unwrap()).unwrap();
    doc["objects"][0]["initial_position"][2] = serde_json::json!(-1.0);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let o = ottc(&["simulate", "--spec", s(&bad), "--out", s(&dir.path().join("bad"))]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("DegenerateSpec"), "{}", stderr(&o));

    // the untouched spec renders the same scene as the suite did
    let again = dir.path().join("again");
    assert_ok(&ottc(&["simulate", "--spec", s(&spec_path), "--out", s(&again)]));
    assert_eq!(
        std::fs::read(again.join("scenes/plate-0000.json")).unwrap(),
        std::fs::read(out.join("scenes/plate-0000.json")).unwrap()
    );
}

/// Simulated plate scene plus its exact annotations.
fn plate_scene(dir: &Path) -> (PathBuf, PathBuf) {
    let out = dir.join("sim");
    assert_ok(&ottc(&["simulate", "--suite", "3", "--family", "plate", "--out", s(&out)]));
    let exact = std::fs::read_to_string(out.join("exact.txt")).unwrap();
    let one: Vec<_> = parse_annotations(&exact)
        .unwrap()
        .into_iter()
        .filter(|a| a.sequence_id() == "plate-0000")
        .collect();
    let path = dir.join("gt.txt");
    std::fs::write(&path, ottc::ingest::write_annotations(&one)).unwrap();
    (path, out.join("scenes/plate-0000.json"))
}

fn report_line(out: &Path) -> Vec<String> {
    let text = std::fs::read_to_string(out.join("report.txt")).unwrap();
    let report = ottc::MetricsReport::parse(&text).unwrap();
    vec![
        report.overall.n_matched.to_string(),
        format!("{:?}", report.o_mid()),
    ]
}

#[test]
fn eval_ground_truth_copy_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, scene) = plate_scene(dir.path());
    let anns = parse_annotations(&std::fs::read_to_string(&gt).unwrap()).unwrap();
    let preds: Vec<_> = anns
        .iter()
        .map(|a| PredictionRecord::new(a.frame_index(), PredictionKey::Track(a.track_id()), a.eta(), None).unwrap())
        .collect();
    let pred_path = dir.path().join("preds.txt");
    std::fs::write(&pred_path, write_predictions(&preds)).unwrap();

    let out = dir.path().join("eval");
    assert_ok(&ottc(&["eval", "--annotations", s(&gt), "--predictions", s(&pred_path), "--out", s(&out)]));
    assert_eq!(report_line(&out), vec![anns.len().to_string(), "Some(0.0)".to_string()]);

    // a category that is not in the scene leaves nothing to score
    let out = dir.path().join("eval-ped");
    assert_ok(&ottc(&[
        "eval", "--annotations", s(&gt), "--predictions", s(&pred_path), "--categories", "Pedestrian", "--out", s(&out),
    ]));
    assert_eq!(report_line(&out), vec!["0".to_string(), "None".to_string()]);

    // IoU matching: box-keyed predictions against the scene's boxes
    let seq = ottc::ingest::parse_scene(&std::fs::read_to_string(&scene).unwrap()).unwrap();
    let boxed: Vec<_> = anns
        .iter()
        .map(|a| {
            let o = seq.frames()[a.frame_index() as usize].object(a.track_id()).unwrap();
            let b = o.bbox().translate(0.5, -0.5).unwrap();
            PredictionRecord::new(a.frame_index(), PredictionKey::Box(b), a.eta(), None).unwrap()
        })
        .collect();
    let boxed_path = dir.path().join("boxed.txt");
    std::fs::write(&boxed_path, write_predictions(&boxed)).unwrap();
    let out = dir.path().join("eval-iou");
    assert_ok(&ottc(&[
        "eval", "--annotations", s(&gt), "--predictions", s(&boxed_path), "--match-mode", "iou:0.5",
        "--gt-scene", s(&scene), "--out", s(&out),
    ]));
    assert_eq!(report_line(&out), vec![anns.len().to_string(), "Some(0.0)".to_string()]);
    let err = ottc(&[
        "eval", "--annotations", s(&gt), "--predictions", s(&boxed_path), "--match-mode", "iou:0.5",
        "--out", s(&dir.path().join("eval-iou-nobox")),
    ]);
    assert_eq!(err.status.code(), Some(4), "{}", stderr(&err));
}

#[test]
fn eval_key_mode_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, _) = plate_scene(dir.path());
    let preds = [PredictionRecord::new(0, PredictionKey::Center { u: 10.0, v: 10.0 }, 0.9, None).unwrap()];
    let pred_path = dir.path().join("preds.txt");
    std::fs::write(&pred_path, write_predictions(&preds)).unwrap();
    let o = ottc(&["eval", "--annotations", s(&gt), "--predictions", s(&pred_path), "--out", s(&dir.path().join("e"))]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn eval_dense_maps() {
    let dir = tempfile::tempdir().unwrap();
    let (gt, _) = plate_scene(dir.path());
    let anns = parse_annotations(&std::fs::read_to_string(&gt).unwrap()).unwrap();
    let maps = dir.path().join("maps");
    std::fs::create_dir_all(&maps).unwrap();
    for a in &anns {
        let map = DenseMiDMap::uniform(a.frame_index(), 1242, 375, 1.0).unwrap();
        std::fs::write(maps.join(format!("{}.omid", a.frame_index())), write_dense_map(&map)).unwrap();
    }
    let out = dir.path().join("eval");
    assert_ok(&ottc(&["eval", "--annotations", s(&gt), "--dense-maps", s(&maps), "--out", s(&out)]));
    let report = ottc::MetricsReport::parse(&std::fs::read_to_string(out.join("report.txt")).unwrap()).unwrap();
    let unit = anns.iter().map(|a| a.eta().ln().abs() * 1e4).sum::<f64>() / anns.len() as f64;
    assert_eq!(report.overall.n_matched as usize, anns.len());
    assert!((report.o_mid().unwrap() - unit).abs() <= 1e-9 * unit);
}

#[test]
fn bench_without_methods_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = ottc(&["bench", "--suite", "1", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ottc-error code=2"));
}

#[test]
fn bench_ranks_baselines_on_plates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    assert_ok(&ottc(&[
        "bench", "--suite", "5", "--family", "plate", "--baselines", "unit,height-ratio", "--out", s(&out),
    ]));
    let ranking = std::fs::read_to_string(out.join("ranking.txt")).unwrap();
    let first = ranking.lines().nth(1).unwrap();
    assert!(first.contains("height-ratio"), "{ranking}");
    let hr = ottc::MetricsReport::parse(&std::fs::read_to_string(out.join("reports/height-ratio.txt")).unwrap()).unwrap();
    assert!(hr.o_mid().unwrap() < 1e-6);
    let unit = ottc::MetricsReport::parse(&std::fs::read_to_string(out.join("reports/unit.txt")).unwrap()).unwrap();
    assert!(unit.o_mid().unwrap() > hr.o_mid().unwrap());
    assert_eq!(hr.overall.n_matched, unit.overall.n_matched);
}
