//! Ground truth from KITTI tracking labels with each annotation method.
//!
//! `cargo run --example kitti_ground_truth -- [label.txt calib.txt]`
//! defaults to the small fixture shipped with the tests.

use ottc::ingest::{parse_kitti_tracking, KittiConfig};
use ottc::{annotate_sequence, GtMethod};

fn main() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/kitti");
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (label, calib) = match args.as_slice() {
        [l, c] => (l.clone(), c.clone()),
        _ => (format!("{dir}/label_02/0004.txt"), format!("{dir}/calib/0004.txt")),
    };
    let (seq, diag) = parse_kitti_tracking(
        &std::fs::read_to_string(&label).expect("label file"),
        &std::fs::read_to_string(&calib).expect("calib file"),
        &KittiConfig::new("0004", 10.0),
    )
    .expect("valid KITTI input");
    println!("{} frames, {} objects, {} records skipped", seq.frames().len(), seq.instances().count(), diag.warnings.len());

    for method in [GtMethod::Tracks3D, GtMethod::Tracks2D, GtMethod::Tracks2DCorrected, GtMethod::DepthVelocity] {
        let out = annotate_sequence(&seq, method);
        println!("\n{method}: {} annotations, {} skipped", out.annotations.len(), out.skipped.len());
        for a in &out.annotations {
            println!(
                "  frame {} track {:>2} {:<10} eta {:.5} tau {:?}",
                a.frame_index(),
                a.track_id(),
                a.category(),
                a.eta(),
                a.tau()
            );
        }
        for s in &out.skipped {
            if s.reason.tag() != "no-successor" {
                println!("  skipped frame {} track {}: {}", s.frame_index, s.track_id, s.reason);
            }
        }
    }
}
