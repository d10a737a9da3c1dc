//! Scoring a noisy predictor under the three matching modes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ottc::eval::{evaluate_with_boxes, GtBoxes};
use ottc::sim::{constant_yaw_scenes, simulate};
use ottc::{evaluate, EvalConfig, MatchMode, PredictionKey, PredictionRecord};

fn main() {
    let sim = simulate(&constant_yaw_scenes(7, 1)[0]).expect("valid scene");
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut by_track = Vec::new();
    let mut by_center = Vec::new();
    let mut by_box = Vec::new();
    for a in &sim.exact {
        let eta = a.eta() * (1.0 + rng.random_range(-0.01..0.01));
        let o = sim.sequence.frames()[a.frame_index() as usize].object(a.track_id()).unwrap();
        let (u, v) = a.center();
        let rec = |key| PredictionRecord::new(a.frame_index(), key, eta, None).unwrap();
        by_track.push(rec(PredictionKey::Track(a.track_id())));
        by_center.push(rec(PredictionKey::Center { u: u + 2.0, v: v - 1.0 }));
        by_box.push(rec(PredictionKey::Box(o.bbox().translate(3.0, 0.0).unwrap())));
    }

    let boxes = GtBoxes::from_sequence(&sim.sequence);
    for (mode, preds) in [
        (MatchMode::ByTrackId, &by_track),
        (MatchMode::ByCenterRadius(5.0), &by_center),
        (MatchMode::ByIoU(0.5), &by_box),
    ] {
        let cfg = EvalConfig { match_mode: mode, ..EvalConfig::default() };
        let report = match mode {
            MatchMode::ByIoU(_) => evaluate_with_boxes(preds, &sim.exact, &boxes, &cfg),
            _ => evaluate(preds, &sim.exact, &cfg),
        }
        .expect("evaluation");
        println!("match mode {mode}:");
        print!("{}", report.to_table());
    }
}
