use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ceo_rd::cli::{parse_grid, Unit};
use ceo_rd::dm_ceo::{self, lp_min_distortion, BaConfig, TradeoffParams};
use ceo_rd::gauss_model::*;
use ceo_rd::linalg::{eigen_sym, Mat};
use ceo_rd::probcore::{kl_div, JointSourcePmf, Pmf, AX_X, AX_Y0, AX_Y1, AX_Y2};
use ceo_rd::region_analytic::single_ib_curve;
use ceo_rd::{Permutation, RegionPoint};

fn pmf(dims: Vec<usize>, seed: u64) -> Pmf {
    Pmf::random(dims, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chain_rule(a in 1usize..5, b in 1usize..5, seed in any::<u64>()) {
        let p = pmf(vec![a, b], seed);
        let joint = p.entropy();
        let split = p.entropy_of_axes(&[0]).unwrap() + p.cond_entropy(&[1], &[0]).unwrap();
        prop_assert!((joint - split).abs() < 1e-10);
    }

    #[test]
    fn mutual_information_is_symmetric_and_nonnegative(a in 1usize..5, b in 1usize..5, seed in any::<u64>()) {
        let p = pmf(vec![a, b], seed);
        let ab = p.mutual_info(&[0], &[1]).unwrap();
        let ba = p.mutual_info(&[1], &[0]).unwrap();
        prop_assert!(ab >= -1e-12);
        prop_assert!((ab - ba).abs() < 1e-12);
    }

    #[test]
    fn kl_is_nonnegative(n in 1usize..6, s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = pmf(vec![n], s1);
        let q = pmf(vec![n], s2);
        prop_assert!(kl_div(p.table(), q.table()).unwrap() >= -1e-12);
        prop_assert!(kl_div(p.table(), p.table()).unwrap().abs() < 1e-15);
    }

    #[test]
    fn marginals_reconstruct(seed in any::<u64>()) {
        let j = JointSourcePmf::random_markov([2, 3, 2, 2], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let m = j.pmf().marginal(&[AX_X, AX_Y0]).unwrap();
        prop_assert!((m.table().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(j.markov_gap() < 1e-12);
        // side information never hurts
        let pm = j.pmf();
        prop_assert!(pm.cond_entropy(&[AX_X], &[AX_Y0]).unwrap() <= pm.entropy_of_axes(&[AX_X]).unwrap() + 1e-12);
        prop_assert!(pm.cond_entropy(&[AX_X], &[AX_Y0, AX_Y1, AX_Y2]).unwrap() <= pm.cond_entropy(&[AX_X], &[AX_Y0]).unwrap() + 1e-12);
    }

    #[test]
    fn ba_point_is_consistent(seed in 0u64..1000, s1 in 0.05f64..1.0, s2 in 0.05f64..5.0) {
        let j = JointSourcePmf::random_markov([2, 2, 2, 2], &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let s = TradeoffParams { s1, s2 };
        let r = dm_ceo::run_ba(&j, s, &BaConfig { restarts: 1, seed, ..Default::default() }).unwrap();
        let [r1, r2, d] = [r.point.rates[0], r.point.rates[1], r.point.value];
        prop_assert!(r1 >= -1e-10 && r2 >= -1e-10);
        prop_assert!((r.objective - (d + s1 * r1 + s2 * r2)).abs() < 1e-8);
        let (h0, hall) = (j.pmf().cond_entropy(&[AX_X], &[AX_Y0]).unwrap(), j.pmf().cond_entropy(&[AX_X], &[AX_Y0, AX_Y1, AX_Y2]).unwrap());
        prop_assert!(d <= h0 + 1e-9 && d >= hall - 1e-9);
    }

    #[test]
    fn lp_is_monotone_in_budget(seed in any::<u64>(), r1 in 0.0f64..2.0, r2 in 0.0f64..2.0, dr in 0.0f64..1.0) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts: Vec<[f64; 3]> = (0..8).map(|_| [rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0), rng.gen_range(0.0..1.0)]).collect();
        pts.push([0.0, 0.0, 1.0]);
        let a = lp_min_distortion(&pts, r1, r2).unwrap();
        let b = lp_min_distortion(&pts, r1 + dr, r2).unwrap();
        prop_assert!(b <= a + 1e-12);
        prop_assert!(a <= 1.0 + 1e-12);
    }

    #[test]
    fn projection_is_admissible(seed in any::<u64>(), n in 1usize..4, scale in 0.1f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_cov(&mut rng, n) * scale - Mat::identity(n, n) * (scale / 2.0);
        let vals = eigen_sym(&project_t(&t)).eigenvalues;
        // reassembling V diag(λ) Vᵀ costs a few ulps
        prop_assert!(vals.iter().all(|&v| (-1e-14..=1.0 - ADMISSIBLE_SLACK + 1e-14).contains(&v)), "{vals:?}");
    }

    #[test]
    fn ib_curve_is_concave_nondecreasing(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sx = random_cov(&mut rng, 2);
        let h = random_cov(&mut rng, 2);
        let sn = random_cov(&mut rng, 2);
        let grid: Vec<f64> = (0..12).map(|i| i as f64 * 0.5).collect();
        let c: Vec<f64> = single_ib_curve(&sx, &h, &sn, &grid).unwrap().into_iter().map(|p| p.1).collect();
        prop_assert!(c.windows(2).all(|w| w[1] >= w[0] - 1e-10));
        prop_assert!(c.windows(3).all(|w| w[1] >= (w[0] + w[2]) / 2.0 - 1e-9));
        // slope at most one nat of relevance per nat of rate
        prop_assert!(c.windows(2).all(|w| w[1] - w[0] <= 0.5 + 1e-9));
    }

    #[test]
    fn flip_kind_is_an_involution(r1 in 0.0f64..5.0, r2 in 0.0f64..5.0, d in -3.0f64..3.0, hx in -3.0f64..3.0) {
        let p = RegionPoint::distortion(vec![r1, r2], d, Permutation::Rd2);
        let back = p.flip_kind(hx).flip_kind(hx);
        prop_assert_eq!(back.kind, p.kind);
        prop_assert!((back.value - d).abs() < 1e-12);
    }

    #[test]
    fn unit_conversion_round_trips(v in -1e6f64..1e6) {
        for u in [Unit::Bits, Unit::Nats] {
            prop_assert!((u.to_nats(u.from_nats(v)) - v).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn range_grids_hit_both_ends(lo in 0u32..20, n in 1u32..40) {
        let (lo, step) = (lo as f64 * 0.25, 0.25);
        let hi = lo + (n - 1) as f64 * step;
        let g = parse_grid(&format!("{lo}:{hi}:{step}"), "r_grid", None).unwrap();
        prop_assert_eq!(g.len(), n as usize);
        prop_assert!((g[g.len() - 1] - hi).abs() < 1e-9);
    }
}
