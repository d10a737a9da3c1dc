//! An object crossing in front of the camera at constant depth: distance
//! changes, depth does not, so only the distance ratio sees the motion.

use ottc::sim::{lateral_mover_scenes, simulate};
use ottc::{annotate_sequence, GtMethod};

fn main() {
    let sim = simulate(&lateral_mover_scenes(3, 1)[0]).expect("valid scene");
    let tracks3d = annotate_sequence(&sim.sequence, GtMethod::Tracks3D).annotations;
    println!("frame   X (m)    Z (m)   exact eta      3D-track eta   depth ratio");
    for (exact, est) in sim.exact.iter().zip(&tracks3d) {
        let frames = sim.sequence.frames();
        let k = exact.frame_index() as usize;
        let p0 = frames[k].object(exact.track_id()).unwrap().location().unwrap();
        let p1 = frames[k + 1].object(exact.track_id()).unwrap().location().unwrap();
        println!(
            "{:>5} {:>7.3} {:>8.3}   {:.10}   {:.10}   {:.10}",
            k,
            p0.x,
            p0.z,
            exact.eta(),
            est.eta(),
            p1.z / p0.z
        );
    }
}
