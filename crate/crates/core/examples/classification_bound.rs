//! Misclassification lower bound 1 − exp(−D*) against the common rate R1 = R2 = R.
//!
//! Usage: `cargo run --release --example classification_bound [p ...]`

use ceo_rd::classify::{bound_curve, ClassificationParams, RegionGrid};
use ceo_rd::dm_ceo::BaConfig;

fn main() -> ceo_rd::Result<()> {
    let mut ps: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().expect("numeric p")).collect();
    if ps.is_empty() {
        ps = vec![0.01, 0.1, 0.25];
    }
    let rates: Vec<f64> = (0..=8).map(|i| i as f64 * 0.25).collect();
    let grid = RegionGrid::default();
    let curves = ps
        .iter()
        .map(|&p| bound_curve(ClassificationParams { p }, &rates, &grid, &BaConfig::default()))
        .collect::<ceo_rd::Result<Vec<_>>>()?;

    print!("{:>6}", "R");
    for p in &ps {
        print!(" {:>10}", format!("p={p}"));
    }
    println!();
    for (i, r) in rates.iter().enumerate() {
        print!("{r:>6.2}");
        for c in &curves {
            print!(" {:>10.6}", c[i].bound);
        }
        println!();
    }
    Ok(())
}
