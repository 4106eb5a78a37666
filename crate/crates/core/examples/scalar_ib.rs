//! Scalar Gaussian relevance-complexity curve three ways: closed form,
//! the eigenvalue solver, and a brute-force grid over the test-channel gain.

use ceo_rd::linalg::Mat;
use ceo_rd::region_analytic::{scalar_ib_grid, single_ib_curve};

fn closed_form(snr: f64, r: f64) -> f64 {
    (1.0 + snr).ln() - (1.0 + snr * (-r).exp()).ln()
}

fn main() -> ceo_rd::Result<()> {
    let snr: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let one = Mat::identity(1, 1);
    let h = Mat::from_element(1, 1, snr.sqrt());
    let rates: Vec<f64> = (0..=12).map(|i| i as f64 * 0.25).collect();
    let curve = single_ib_curve(&one, &h, &one, &rates)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "R", "closed", "solver", "grid");
    for (r, d) in curve {
        println!("{r:>6.2} {:>12.8} {d:>12.8} {:>12.8}", closed_form(snr, r), scalar_ib_grid(snr, r, 100_000));
    }
    Ok(())
}
