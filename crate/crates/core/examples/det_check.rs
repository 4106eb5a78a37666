//! Evaluates every subset constraint of the Gaussian outer description for a
//! random model and a random admissible Ω, in both log and determinant form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ceo_rd::gauss_model::{random_model, random_omega, SubsetSpec};
use ceo_rd::region_analytic::{det_region_bound, det_to_log_loss, eval_rd_bound, eval_rd_bound_independent};

fn main() -> ceo_rd::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = random_model(&mut rng, 2, 1, &[2, 2], false)?;
    let omega = random_omega(&mut rng, &model)?;
    let rates = [2.5, 2.5];
    let d_det = 0.2;
    let d_log = det_to_log_loss(model.nx(), d_det);
    println!("rates {rates:?} nats, D_det = {d_det}, log-loss D = {d_log:.6}");
    println!("{:>8} {:>12} {:>12} {:>12} {:>6}", "subset", "rhs", "log slack", "det slack", "ok");
    for s in SubsetSpec::all(model.k()) {
        let ev = eval_rd_bound(&model, &omega, &s)?;
        let indep = eval_rd_bound_independent(&model, &omega, &s)?;
        assert!((ev.rhs - indep.rhs).abs() < 1e-9);
        let det = det_region_bound(&model, &omega, &s, &rates, d_det)?;
        let label = format!("{:?}", s.in_set().iter().map(|k| k + 1).collect::<Vec<_>>());
        println!("{label:>8} {:>12.6} {:>12.6} {:>12.6} {:>6}", ev.rhs, ev.slack(&rates, d_log), det.slack, det.satisfied);
    }
    Ok(())
}
