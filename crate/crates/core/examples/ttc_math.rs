//! Scale ratio, time to contact and the MiD loss on a few hand-picked numbers.

use ottc::eval::{mid_loss, o_mid};
use ottc::ttc::{eta_from_depth_pair, eta_from_height_pair, eta_from_tau, projected_height, tau_from_eta};
use ottc::Tau;

fn main() {
    let period = 0.1; // 10 key frames per second

    // an object 20 m away, 19.5 m one key frame later
    let eta = eta_from_depth_pair(20.0, 19.5).unwrap();
    let tau = tau_from_eta(eta, period).unwrap();
    println!("depth 20 m -> 19.5 m: eta = {eta:.4}, tau = {tau:?}");

    // the same motion seen as box heights, h = f H / Z
    let eta_h = eta_from_height_pair(60.0, 60.0 * 20.0 / 19.5).unwrap();
    println!("box height 60 px -> {:.2} px: eta = {eta_h:.4}", 60.0 * 20.0 / 19.5);

    // receding and static objects never reach the camera
    for eta in [1.0, 1.02] {
        println!("eta = {eta}: tau = {:?}", tau_from_eta(eta, period).unwrap());
    }
    println!("tau 2 s at 10 kfps: eta = {}", eta_from_tau(Tau::Seconds(2.0), period).unwrap());

    // orientation-corrected height
    for theta in [0.0, 0.2, -0.2] {
        println!("projected height of 100x50 box at theta {theta:+}: {:.3}", projected_height(100.0, 50.0, theta).unwrap());
    }

    let pairs = [(0.99, 1.0), (1.1, 1.0), (0.95, 0.97)];
    for (p, g) in pairs {
        println!("MiD({p}, {g}) = {:.3}", mid_loss(p, g).unwrap());
    }
    let (mean, mean_plus) = o_mid(&pairs).unwrap();
    println!("oMiD = {mean:.3}, oMiD+ = {mean_plus:?}");
}
