//! Dense per-pixel eta maps: write, read back and score at object centres.

use ottc::eval::{dense_map_predictions, sample_pixel};
use ottc::ingest::{parse_dense_map, write_dense_map};
use ottc::sim::{plate_scenes, simulate};
use ottc::{evaluate, DenseMiDMap, EvalConfig};

fn main() {
    let sim = simulate(&plate_scenes(11, 1)[0]).expect("valid scene");
    let (w, h) = sim.sequence.intrinsics().image_size();

    // one map per frame: the exact eta painted in a 9x9 patch around each centre
    let mut maps = Vec::new();
    for frame in sim.sequence.frames() {
        let mut values = vec![f32::NAN; (w * h) as usize];
        for a in sim.exact.iter().filter(|a| a.frame_index() == frame.frame_index()) {
            let (u, v) = a.center();
            for dv in -4..=4 {
                for du in -4..=4 {
                    let (x, y) = (u.round() as i64 + du, v.round() as i64 + dv);
                    if x >= 0 && y >= 0 && x < i64::from(w) && y < i64::from(h) {
                        values[(y * i64::from(w) + x) as usize] = a.eta() as f32;
                    }
                }
            }
        }
        let map = DenseMiDMap::new(frame.frame_index(), w, h, values).unwrap();
        let bytes = write_dense_map(&map);
        maps.push(parse_dense_map(&bytes, frame.frame_index()).unwrap());
    }
    println!("{} maps of {w}x{h}, {} bytes each", maps.len(), write_dense_map(&maps[0]).len());
    println!("pixel (0, 0) of frame 0: {:?}", sample_pixel(&maps[0], (0.0, 0.0)));

    let preds = dense_map_predictions(&maps, &sim.exact);
    let report = evaluate(&preds, &sim.exact, &EvalConfig::default()).unwrap();
    // f32 storage costs a little precision
    print!("{}", report.to_table());
}
