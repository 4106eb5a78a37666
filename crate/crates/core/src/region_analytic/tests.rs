use super::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scalar_model(h0: f64) -> GaussCeoModel {
    let n0 = usize::from(h0 != 0.0);
    GaussCeoModel::new(
        Mat::identity(1, 1),
        Mat::from_element(n0, 1, h0),
        Mat::identity(n0, n0),
        vec![AgentObs { h: Mat::identity(1, 1), sigma: Mat::identity(1, 1) }],
        None,
    )
    .unwrap()
}

fn random_subset<R: Rng>(rng: &mut R, k: usize) -> SubsetSpec {
    SubsetSpec::from_mask(rng.gen_range(0..1usize << k), k)
}

#[test]
fn scalar_hand_examples() {
    let m = scalar_model(0.0);
    let om = OmegaSet { omegas: vec![Mat::from_element(1, 1, 0.5)] };
    let e = eval_rd_bound(&m, &om, &SubsetSpec::full(1)).unwrap();
    assert!((e.rate_term - 2f64.ln()).abs() < 1e-15);
    assert!((e.entropy_term - ln_pie()).abs() < 1e-15);
    assert!((e.rhs - e.rate_term - e.entropy_term).abs() < 1e-12);
    let e = eval_rd_bound(&m, &om, &SubsetSpec::empty(1)).unwrap();
    assert!((e.rhs - (PI * E / 1.5).ln()).abs() < 1e-15);
    assert_eq!(e.rate_term, 0.0);
}

#[test]
fn zero_omega_leaves_side_information_entropy() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for coupled in [false, true] {
        let m = random_model(&mut rng, 3, 2, &[2, 3], coupled).unwrap();
        let l = m.layout();
        let c = m.joint_cov();
        let want = gauss_entropy(&cond_cov(&c, &idx(&[&l.x]), &idx(&[&l.y0])).unwrap()).unwrap();
        let e = eval_rd_bound(&m, &OmegaSet::zeros(&m), &SubsetSpec::empty(2)).unwrap();
        assert!((e.entropy_term - want).abs() < 1e-10, "{} vs {want}", e.entropy_term);
    }
}

#[test]
fn independent_noise_specialization() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let m = random_model(&mut rng, 3, 2, &[2, 3], false).unwrap();
        let om = random_omega(&mut rng, &m).unwrap();
        let s = random_subset(&mut rng, 2);
        let a = eval_rd_bound(&m, &om, &s).unwrap();
        let b = eval_rd_bound_independent(&m, &om, &s).unwrap();
        assert!((a.rhs - b.rhs).abs() < 1e-10);
    }
}

#[test]
fn entropy_term_is_monotone_in_omega() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for coupled in [false, true] {
        let m = random_model(&mut rng, 3, 2, &[2, 2], coupled).unwrap();
        for _ in 0..10 {
            let om = random_omega(&mut rng, &m).unwrap();
            // Ω' = Ω + small PSD, scaled to stay admissible
            let mut bigger = om.clone();
            for o in &mut bigger.omegas {
                let v = Mat::from_fn(o.nrows(), 1, |_, _| rng.gen_range(-1.0..1.0));
                *o += &v * v.transpose() * 0.01;
            }
            let bigger = match bigger.check_admissible(&m) {
                Ok(()) => bigger,
                Err(_) => continue,
            };
            let s = random_subset(&mut rng, 2);
            let a = eval_rd_bound(&m, &om, &s).unwrap().entropy_term;
            let b = eval_rd_bound(&m, &bigger, &s).unwrap().entropy_term;
            assert!(b <= a + 1e-9);
        }
    }
}

#[test]
fn relevance_and_distortion_bounds_are_dual() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = random_model(&mut rng, 3, 2, &[2, 3], true).unwrap();
    let hx = m.h_x().unwrap();
    for _ in 0..10 {
        let om = random_omega(&mut rng, &m).unwrap();
        let s = random_subset(&mut rng, 2);
        let rd = eval_rd_bound(&m, &om, &s).unwrap();
        let ib = eval_ib_bound(&m, &om, &s).unwrap();
        assert!((ib.relevance_term - (hx - rd.entropy_term)).abs() < 1e-10);
        assert!((ib.rate_offset + rd.rate_term).abs() < 1e-12);
    }
    // Ω = 0 with every agent in S: I(X;Y0)
    let c = m.joint_cov();
    let l = m.layout();
    let i_xy0 = gauss_cond_mi(&c, &idx(&[&l.x]), &idx(&[&l.y0]), &[]).unwrap();
    let ib = eval_ib_bound(&m, &OmegaSet::zeros(&m), &SubsetSpec::full(2)).unwrap();
    assert!((ib.bound(&[0.0, 0.0]) - i_xy0).abs() < 1e-10);
}

#[test]
fn single_encoder_ib_bound_pair() {
    // without Y0 the two constraints are log(1 + ω) and R + log(1 − ω)
    let m = scalar_model(0.0);
    let om = OmegaSet { omegas: vec![Mat::from_element(1, 1, 0.3)] };
    let free = eval_ib_bound(&m, &om, &SubsetSpec::empty(1)).unwrap();
    let paid = eval_ib_bound(&m, &om, &SubsetSpec::full(1)).unwrap();
    assert!((free.bound(&[5.0]) - 1.3f64.ln()).abs() < 1e-14);
    assert!((paid.bound(&[0.5]) - (0.5 + 0.7f64.ln())).abs() < 1e-14);
}

#[test]
fn scalar_ib_curve_is_concave_and_nondecreasing() {
    let one = Mat::identity(1, 1);
    let rs: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
    let c = single_ib_curve(&one, &one, &one, &rs).unwrap();
    for w in c.windows(3) {
        assert!(w[1].1 >= w[0].1 - 1e-14);
        assert!(w[1].1 >= 0.5 * (w[0].1 + w[2].1) - 1e-12);
    }
}

#[test]
fn single_ib_curve_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sx = random_cov(&mut rng, 3);
    let h = Mat::from_fn(2, 3, |_, _| rng.gen_range(-1.0..1.0));
    let sg = random_cov(&mut rng, 2);
    let c = single_ib_curve(&sx, &h, &sg, &[0.0, 60.0, f64::INFINITY]).unwrap();
    assert_eq!(c[0].1, 0.0);
    let via_j = logdet_spd(&sx, "x").unwrap() + logdet_spd(&(spd_inverse(&sx, "x").unwrap() + h.transpose() * spd_inverse(&sg, "s").unwrap() * &h), "j").unwrap();
    assert!((c[1].1 - via_j).abs() < 1e-9, "{} vs {via_j}", c[1].1);
    assert!((c[2].1 - via_j).abs() < 1e-12);

    // scalar unit SNR at R = log 2 against a 1e5-point grid
    let one = Mat::identity(1, 1);
    let r = 2f64.ln();
    let d = single_ib_curve(&one, &one, &one, &[r]).unwrap()[0].1;
    // closed form: log(1+ω) = R + log(1−ω) ⇒ ω = 1/3
    assert!((d - (4.0f64 / 3.0).ln()).abs() < 1e-12);
    assert!((scalar_ib_grid(1.0, r, 100_000) - d).abs() < 1e-5);
}

#[test]
fn det_bound_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let m = random_model(&mut rng, 2, 2, &[2, 2], false).unwrap();
    let l = m.layout();
    let dd = cond_cov(&m.joint_cov(), &idx(&[&l.x]), &idx(&[&l.y0])).unwrap().determinant();
    let chk = det_region_bound(&m, &OmegaSet::zeros(&m), &SubsetSpec::empty(2), &[0.0, 0.0], dd).unwrap();
    assert!(chk.slack.abs() < 1e-9);
    let chk = det_region_bound(&m, &OmegaSet::zeros(&m), &SubsetSpec::full(2), &[1.0, 1.0], 1e-300).unwrap();
    assert!(!chk.satisfied);
    assert!(det_region_bound(&m, &OmegaSet::zeros(&m), &SubsetSpec::full(2), &[1.0, 1.0], 0.0).is_err());
}

#[test]
fn det_and_log_loss_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..20 {
        let m = random_model(&mut rng, 3, 2, &[2, 2], i % 2 == 1).unwrap();
        let om = random_omega(&mut rng, &m).unwrap();
        let s = random_subset(&mut rng, 2);
        let rates = [rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0)];
        let d_det: f64 = rng.gen_range(1e-3..1.0);
        let det = det_region_bound(&m, &om, &s, &rates, d_det).unwrap();
        let log = eval_rd_bound(&m, &om, &s).unwrap().slack(&rates, det_to_log_loss(3, d_det));
        assert!((det.slack - log).abs() < 1e-9);
    }
}

#[test]
fn centralized_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = random_model(&mut rng, 3, 2, &[2, 3], false).unwrap();
    let c = m.joint_cov();
    let l = m.layout();
    let x = idx(&[&l.x]);
    let i0 = gauss_cond_mi(&c, &x, &idx(&[&l.y0]), &[]).unwrap();
    let iall = gauss_cond_mi(&c, &x, &idx(&[&l.y0, &l.y[0], &l.y[1]]), &[]).unwrap();
    let curve = centralized_ib(&m, &[0.0, 200.0]).unwrap();
    assert!((curve[0].1 - i0).abs() < 1e-10);
    assert!((curve[1].1 - iall).abs() < 1e-8, "{} vs {iall}", curve[1].1);
}

#[test]
fn fisher_precision_matches_conditioned_covariance() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..20 {
        let m = random_model(&mut rng, 3, 2, &[2, 3], i % 2 == 0).unwrap();
        let om = random_omega(&mut rng, &m).unwrap();
        let s = random_subset(&mut rng, 2);
        let ch = channels_from_omega(&m, &om).unwrap();
        let (c, l) = augmented_cov(&m, &ch).unwrap();
        let mut given: Vec<usize> = idx(&[&l.y0]);
        for k in s.complement() {
            given.extend(l.u[k].clone());
        }
        let direct = cond_cov(&c, &idx(&[&l.x]), &given).unwrap();
        let j = posterior_precision(&m, &om, &s).unwrap();
        let via = spd_inverse(&j, "J").unwrap();
        assert!(rel_frobenius(&via, &direct) < 1e-8, "{}", rel_frobenius(&via, &direct));
    }
}

#[test]
fn zero_budget_gives_zero_omega() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let m = random_model(&mut rng, 2, 2, &[2, 2], false).unwrap();
    let sol = optimize_omega(&m, OmegaObjective::MaxRelevance, &RateBudget::PerAgent(vec![0.0, 0.0]), &OmegaSolverConfig::default()).unwrap();
    assert!(sol.omega.omegas.iter().all(|o| o.norm() < 1e-6), "{:?}", sol.omega);
    let c = m.joint_cov();
    let l = m.layout();
    let i0 = gauss_cond_mi(&c, &idx(&[&l.x]), &idx(&[&l.y0]), &[]).unwrap();
    assert!((sol.relevance - i0).abs() < 1e-6);
}

#[test]
fn scalar_solver_matches_ib_curve() {
    let m = scalar_model(0.0);
    let one = Mat::identity(1, 1);
    for r in [0.1, 0.5, 2f64.ln(), 2.0] {
        let want = single_ib_curve(&one, &one, &one, &[r]).unwrap()[0].1;
        let sol = optimize_omega(&m, OmegaObjective::MaxRelevance, &RateBudget::PerAgent(vec![r]), &OmegaSolverConfig::default()).unwrap();
        assert!((sol.relevance - want).abs() < 1e-6, "R = {r}: {} vs {want}", sol.relevance);
        let sol = optimize_omega(&m, OmegaObjective::MinDistortion, &RateBudget::SumRate(r), &OmegaSolverConfig::default()).unwrap();
        assert!((sol.point.value - (m.h_x().unwrap() - want)).abs() < 1e-6);
    }
}

#[test]
fn solver_output_satisfies_every_subset() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = random_model(&mut rng, 3, 2, &[2, 2], true).unwrap();
    let sol = optimize_omega(&m, OmegaObjective::MaxRelevance, &RateBudget::SumRate(1.5), &OmegaSolverConfig::default()).unwrap();
    assert!((sol.rates.iter().sum::<f64>() - 1.5).abs() < 1e-12);
    for s in SubsetSpec::all(2) {
        assert!(eval_ib_bound(&m, &sol.omega, &s).unwrap().bound(&sol.rates) >= sol.relevance - 1e-9);
    }
    let cen = centralized_ib(&m, &[1.5]).unwrap()[0].1;
    assert!(cen >= sol.relevance - 1e-9);
}

#[test]
fn simplex_projection() {
    assert_eq!(project_simplex(&[0.5, 0.5], 1.0), vec![0.5, 0.5]);
    assert_eq!(project_simplex(&[2.0, 0.0], 1.0), vec![1.0, 0.0]);
    let p = project_simplex(&[0.3, -0.2, 0.9], 1.0);
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15 && p.iter().all(|v| *v >= 0.0));
    assert_eq!(project_simplex(&[0.7, 0.2], 0.0), vec![0.0, 0.0]);
}
