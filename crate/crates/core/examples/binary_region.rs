//! Rate-distortion region of the binary CEO source, queried on a few rate pairs.
//!
//! Usage: `cargo run --release --example binary_region [alpha] [beta]`

use ceo_rd::classify::{binary_ceo_joint, discrete_region, distortion_endpoints, BinaryCeoParams};
use ceo_rd::dm_ceo::{default_s1_grid, default_s2_grid, BaConfig};

fn main() -> ceo_rd::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().expect("numeric argument"));
    let alpha = args.next().unwrap_or(0.25);
    let beta = args.next().unwrap_or(0.25);
    let joint = binary_ceo_joint(BinaryCeoParams { alpha1: alpha, alpha2: alpha, beta })?;
    let (d0, dinf) = distortion_endpoints(&joint)?;
    println!("H(X|Y0) = {d0:.6} nats, H(X|Y0,Y1,Y2) = {dinf:.6} nats");

    let hull = discrete_region(&joint, &default_s1_grid(20), &default_s2_grid(20), &BaConfig::default())?;
    println!("{} hull points, {:?}", hull.points.len(), hull.kind);
    println!("{:>6} {:>6} {:>10}", "R1", "R2", "D*");
    for (r1, r2) in [(0.0, 0.0), (0.1, 0.1), (0.3, 0.0), (0.3, 0.3), (0.7, 0.7), (2.0, 2.0)] {
        let d = hull.min_distortion(r1, r2).unwrap_or(f64::NAN);
        println!("{r1:>6.2} {r2:>6.2} {d:>10.6}");
    }
    Ok(())
}
