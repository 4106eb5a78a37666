//! Bundled experiment generators and the misclassification bound.

use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dm_ceo::{self, BaConfig, RegionHull};
use crate::error::{Error, Result};
use crate::gauss_model::{AgentObs, GaussCeoModel};
use crate::linalg::Mat;
use crate::probcore::{JointSourcePmf, AX_X, AX_Y0};
use crate::region::Permutation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinaryCeoParams {
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
}

fn check_prob(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidParam(format!("{name} = {v} is not in [0, 1]")));
    }
    Ok(())
}

/// X ~ Bern(1/2), Y_k = X ⊕ S_k with S_k ~ Bern(α_k), Y0 = X ⊕ S0 with S0 ~ Bern(β).
pub fn binary_ceo_joint(params: BinaryCeoParams) -> Result<JointSourcePmf> {
    check_prob("alpha1", params.alpha1)?;
    check_prob("alpha2", params.alpha2)?;
    check_prob("beta", params.beta)?;
    let flip = |eps: f64, x: usize, y: usize| if x == y { 1.0 - eps } else { eps };
    let mut t = Vec::with_capacity(16);
    for x in 0..2 {
        for y0 in 0..2 {
            for y1 in 0..2 {
                for y2 in 0..2 {
                    t.push(0.5 * flip(params.beta, x, y0) * flip(params.alpha1, x, y1) * flip(params.alpha2, x, y2));
                }
            }
        }
    }
    JointSourcePmf::new([2, 2, 2, 2], t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationParams {
    pub p: f64,
}

/// S uniform on {1, 2} (stored as Y0 ∈ {0, 1}); X1 uniform on {1, 3},
/// X2 uniform on {0, 2}; X = X_S; Y_k = X + Z_k mod 4 with Z_k ~ Bern(p).
pub fn classification_joint(params: ClassificationParams) -> Result<JointSourcePmf> {
    let p = params.p;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParam(format!("p = {p} is not in (0, 1)")));
    }
    let support = [[1usize, 3], [0, 2]];
    let noise = |x: usize, y: usize| match (y + 4 - x) % 4 {
        0 => 1.0 - p,
        1 => p,
        _ => 0.0,
    };
    let mut t = vec![0.0; 4 * 2 * 4 * 4];
    for (s, xs) in support.iter().enumerate() {
        for &x in xs {
            for y1 in 0..4 {
                for y2 in 0..4 {
                    t[((x * 2 + s) * 4 + y1) * 4 + y2] = 0.25 * noise(x, y1) * noise(x, y2);
                }
            }
        }
    }
    JointSourcePmf::new([4, 2, 4, 4], t)
}

/// 1 − exp(−d) for a log-loss distortion d in nats.
pub fn error_bound(d_star_nats: f64) -> Result<f64> {
    if !(d_star_nats >= 0.0) {
        return Err(Error::InvalidParam(format!("distortion {d_star_nats} must be ≥ 0")));
    }
    Ok(1.0 - (-d_star_nats).exp())
}

/// Sweeps both decoding orders, adds the exactly evaluated corner points,
/// and assembles the lower hull.
pub fn discrete_region(joint: &JointSourcePmf, s1_grid: &[f64], s2_grid: &[f64], cfg: &BaConfig) -> Result<RegionHull> {
    let rd1 = dm_ceo::sweep(joint, s1_grid, s2_grid, cfg, Permutation::Rd1)?;
    let rd2 = dm_ceo::sweep(joint, s1_grid, s2_grid, cfg, Permutation::Rd2)?;
    let mut pts = dm_ceo::sweep_points(&rd1);
    pts.extend(dm_ceo::anchor_points(joint)?);
    dm_ceo::assemble_region(&pts, &dm_ceo::sweep_points(&rd2))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundPoint {
    pub rate_nats: f64,
    pub d_star_nats: f64,
    pub bound: f64,
}

/// Grids used by `bound_curve` unless overridden.
#[derive(Clone, Debug)]
pub struct RegionGrid {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
}

impl Default for RegionGrid {
    fn default() -> Self {
        RegionGrid { s1: dm_ceo::default_s1_grid(20), s2: dm_ceo::default_s2_grid(20) }
    }
}

/// inf D over the region at R1 = R2 = R, mapped through the error bound.
pub fn bound_curve_for_joint(joint: &JointSourcePmf, r_grid: &[f64], grid: &RegionGrid, cfg: &BaConfig) -> Result<Vec<BoundPoint>> {
    let hull = discrete_region(joint, &grid.s1, &grid.s2, cfg)?;
    r_grid
        .iter()
        .map(|&r| {
            let d = hull.min_distortion(r, r).ok_or_else(|| Error::InvalidParam(format!("rate {r} below every swept point")))?;
            let d = d.max(0.0);
            Ok(BoundPoint { rate_nats: r, d_star_nats: d, bound: error_bound(d)? })
        })
        .collect()
}

pub fn bound_curve(params: ClassificationParams, r_grid: &[f64], grid: &RegionGrid, cfg: &BaConfig) -> Result<Vec<BoundPoint>> {
    bound_curve_for_joint(&classification_joint(params)?, r_grid, grid, cfg)
}

/// H(X|Y0) and H(X|Y0,Y1,Y2) of a joint: the two ends of any D curve.
pub fn distortion_endpoints(joint: &JointSourcePmf) -> Result<(f64, f64)> {
    let pm = joint.pmf();
    Ok((pm.cond_entropy(&[AX_X], &[AX_Y0])?, pm.cond_entropy(&[AX_X], &[AX_Y0, 2, 3])?))
}

/// Seeded stand-in for a two-agent vector Gaussian network: Σ_x = I,
/// standard-normal H_0, H_1, H_2 and identity noise covariances.
pub fn gauss_example_instance(seed: u64, nx: usize, n0: usize, n1: usize, n2: usize) -> Result<GaussCeoModel> {
    if nx == 0 || n1 == 0 || n2 == 0 {
        return Err(Error::InvalidParam("dimensions n_x, n_1, n_2 must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |r: usize| {
        Mat::from_fn(r, nx, |_, _| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v
        })
    };
    let h0 = draw(n0);
    let agents = [n1, n2].iter().map(|&n| AgentObs { h: draw(n), sigma: Mat::identity(n, n) }).collect();
    GaussCeoModel::new(Mat::identity(nx, nx), h0, Mat::identity(n0, n0), agents, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probcore::entropy_of;

    #[test]
    fn binary_examples() {
        let j = binary_ceo_joint(BinaryCeoParams { alpha1: 0.0, alpha2: 0.0, beta: 0.0 }).unwrap();
        for x in 0..2 {
            assert_eq!(j.at(x, x, x, x), 0.5);
        }
        let j = binary_ceo_joint(BinaryCeoParams { alpha1: 0.25, alpha2: 0.25, beta: 0.5 }).unwrap();
        assert_eq!(j.pmf().marginal(&[AX_X]).unwrap().table(), &[0.5, 0.5]);
        assert!(j.pmf().mutual_info(&[AX_X], &[AX_Y0]).unwrap().abs() < 1e-15);
        let j = binary_ceo_joint(BinaryCeoParams { alpha1: 0.25, alpha2: 0.25, beta: 0.25 }).unwrap();
        let h = j.pmf().cond_entropy(&[AX_X], &[AX_Y0]).unwrap();
        assert!((h - entropy_of(&[0.25, 0.75])).abs() < 1e-15);
        assert!(j.markov_gap() < 1e-14);
    }

    #[test]
    fn classification_examples() {
        for p in [1e-9, 0.01, 0.1, 0.25, 0.5] {
            let j = classification_joint(ClassificationParams { p }).unwrap();
            assert!(j.markov_gap() < 1e-14);
            let (h0, _) = distortion_endpoints(&j).unwrap();
            assert!((h0 - 2f64.ln()).abs() < 1e-14);
        }
        let j = classification_joint(ClassificationParams { p: 1e-12 }).unwrap();
        assert!(j.pmf().cond_entropy(&[AX_X], &[2]).unwrap() < 1e-9);

        // p = 1/2: Y1 = X + Z, Z uniform on {0, 1}; X uniform on {0..3}
        let j = classification_joint(ClassificationParams { p: 0.5 }).unwrap();
        let mi = j.pmf().mutual_info(&[AX_X], &[2]).unwrap();
        // H(Y1) = ln 4, H(Y1|X) = ln 2
        assert!((mi - 2f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn classification_side_info_plus_one_agent_identifies_x() {
        // (Y0, Y_k) pins X down for every p: the two candidates given Y0 differ by 2
        for p in [0.01, 0.1, 0.25, 0.5] {
            let j = classification_joint(ClassificationParams { p }).unwrap();
            assert!(j.pmf().cond_entropy(&[AX_X], &[AX_Y0, 2]).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn gauss_instance_examples() {
        let a = gauss_example_instance(7, 3, 4, 4, 4).unwrap();
        assert_eq!(a, gauss_example_instance(7, 3, 4, 4, 4).unwrap());
        assert_ne!(a, gauss_example_instance(8, 3, 4, 4, 4).unwrap());
        assert_eq!((a.nx(), a.n0(), a.nk(0), a.nk(1)), (3, 4, 4, 4));
        assert_eq!(a.agents[1].h.shape(), (4, 3));
        assert!(crate::linalg::min_eig(&a.joint_cov()) > -1e-10);
    }

    #[test]
    fn error_bound_examples() {
        assert_eq!(error_bound(0.0).unwrap(), 0.0);
        assert!((error_bound(2f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        assert!(error_bound(-0.1).is_err());
    }
}
