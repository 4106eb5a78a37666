//! Gaussian BA against direct Ω optimization on a seeded 3×4×4×4 network.

use std::time::Instant;

use ceo_rd::classify::gauss_example_instance;
use ceo_rd::dm_ceo::TradeoffParams;
use ceo_rd::gauss_ba::{run_gauss_ba, GaussBaConfig};
use ceo_rd::region_analytic::{centralized_ib, optimize_omega, OmegaObjective, OmegaSolverConfig, RateBudget};

fn main() -> ceo_rd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let model = gauss_example_instance(seed, 3, 4, 4, 4)?;
    let solver = OmegaSolverConfig::default();
    println!("s,R1,R2,Rsum,delta_ba,delta_direct_split,delta_direct_sum,delta_central,iters,ms");
    for i in 0..10 {
        let s = 0.05 + 0.09 * i as f64;
        let t = Instant::now();
        let ba = run_gauss_ba(&model, TradeoffParams { s1: s, s2: s }, &GaussBaConfig::default())?;
        let (r1, r2) = (ba.point.rates[0], ba.point.rates[1]);
        let split = optimize_omega(&model, OmegaObjective::MaxRelevance, &RateBudget::PerAgent(vec![r1, r2]), &solver)?;
        let sum = optimize_omega(&model, OmegaObjective::MaxRelevance, &RateBudget::SumRate(r1 + r2), &solver)?;
        let cen = centralized_ib(&model, &[r1 + r2])?[0].1;
        println!(
            "{s:.3},{r1:.6},{r2:.6},{:.6},{:.7},{:.7},{:.7},{cen:.6},{},{}",
            r1 + r2,
            ba.relevance,
            split.relevance,
            sum.relevance,
            ba.iterations,
            t.elapsed().as_millis()
        );
    }
    Ok(())
}
