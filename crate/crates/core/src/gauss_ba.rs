//! Alternating minimization over Gaussian test channels U_k = A_k Y_k + Z_k
//! for two agents.
//!
//! Agents are updated one at a time with a cache refresh in between, so every
//! half-step is an exact block minimization and the objective trace is
//! monotone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dm_ceo::{cell_seed, TradeoffParams};
use crate::error::{Error, Result};
use crate::gauss_model::*;
use crate::linalg::*;
use crate::region::{Permutation, PointKind, RegionPoint};

/// Eigenvalue floor applied to a non-PSD Σ_z^{-1} combination.
pub const SIGMA_Z_FLOOR: f64 = 1e-10;
const DIVERGE_STREAK: usize = 10;
const RISE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussBaConfig {
    /// dim U_k; `None` means n_k.
    pub u_dims: [Option<usize>; 2],
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for GaussBaConfig {
    fn default() -> Self {
        GaussBaConfig { u_dims: [None, None], tol: 1e-8, max_iter: 5000, seed: 0, restarts: 1 }
    }
}

/// Covariances of the model alone, reused across iterations.
#[derive(Clone, Debug)]
struct ModelBlocks {
    s_y0: Mat,
    s_y: [Mat; 2],
    s_y_xy0: [Mat; 2],
    s_y_y0: [Mat; 2],
    s_y_y0_cross: [Mat; 2],
    s_y12: Mat,
}

impl ModelBlocks {
    fn new(model: &GaussCeoModel) -> Result<ModelBlocks> {
        let c = model.joint_cov();
        let l = model.layout();
        let y0 = idx(&[&l.y0]);
        let xy0 = idx(&[&l.x, &l.y0]);
        let yk = |k: usize| idx(&[&l.y[k]]);
        let per = |f: &dyn Fn(usize) -> Result<Mat>| -> Result<[Mat; 2]> { Ok([f(0)?, f(1)?]) };
        Ok(ModelBlocks {
            s_y0: select(&c, &y0, &y0),
            s_y: per(&|k| Ok(select(&c, &yk(k), &yk(k))))?,
            s_y_xy0: per(&|k| cond_cov(&c, &yk(k), &xy0))?,
            s_y_y0: per(&|k| cond_cov(&c, &yk(k), &y0))?,
            s_y_y0_cross: per(&|k| Ok(select(&c, &yk(k), &y0)))?,
            s_y12: select(&c, &yk(0), &yk(1)),
        })
    }
}

/// Per-agent cached covariances. `k̄` is the other agent.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentCache {
    pub s_u: Mat,
    pub s_u_given_xy0: Mat,
    pub s_u_given_uy0: Mat,
    pub s_u_given_y0: Mat,
    pub s_u_y0: Mat,
    pub s_y: Mat,
    pub s_y_given_uy0: Mat,
    pub s_y_given_xy0: Mat,
    pub s_y_given_y0: Mat,
    /// Σ_{y_k, u_k̄}.
    pub s_y_u_other: Mat,
}

#[derive(Clone, Debug)]
pub struct GaussBaState {
    pub channels: GaussTestChannels,
    pub agents: [AgentCache; 2],
    /// Σ_{u1, u2}.
    pub s_u12: Mat,
    pub iteration: usize,
}

fn schur(saa: &Mat, sab: &Mat, sbb: &Mat, block: &str) -> Result<Mat> {
    if sbb.nrows() == 0 {
        return Ok(sym(saa));
    }
    Ok(sym(&(saa - sab * spd_inverse(sbb, block)? * sab.transpose())))
}

fn two_block(a: &Mat, ab: &Mat, b: &Mat) -> Mat {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut m = Mat::zeros(na + nb, na + nb);
    m.view_mut((0, 0), (na, na)).copy_from(a);
    m.view_mut((0, na), (na, nb)).copy_from(ab);
    m.view_mut((na, 0), (nb, na)).copy_from(&ab.transpose());
    m.view_mut((na, na), (nb, nb)).copy_from(b);
    m
}

fn hcat(a: &Mat, b: &Mat) -> Mat {
    let mut m = Mat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

fn build_cache(blocks: &ModelBlocks, channels: &GaussTestChannels, iteration: usize) -> Result<GaussBaState> {
    let ch = &channels.channels;
    let s_u12 = &ch[0].a * &blocks.s_y12 * ch[1].a.transpose();
    let s_u: Vec<Mat> = (0..2).map(|k| sym(&(&ch[k].a * &blocks.s_y[k] * ch[k].a.transpose() + &ch[k].sigma_z))).collect();
    let s_u_y0: Vec<Mat> = (0..2).map(|k| &ch[k].a * &blocks.s_y_y0_cross[k]).collect();
    let mut agents = Vec::with_capacity(2);
    for k in 0..2 {
        let o = 1 - k;
        let (a, sz) = (&ch[k].a, &ch[k].sigma_z);
        let s_uu = if k == 0 { s_u12.clone() } else { s_u12.transpose() };
        let s_y_u_other = if k == 0 { &blocks.s_y12 * ch[1].a.transpose() } else { blocks.s_y12.transpose() * ch[0].a.transpose() };
        let given = two_block(&s_u[o], &s_u_y0[o], &blocks.s_y0);
        let label = format!("(U{}, Y0)", o + 1);
        let s_u_given_uy0 = schur(&s_u[k], &hcat(&s_uu, &s_u_y0[k]), &given, &label)?;
        let s_y_given_uy0 = schur(&blocks.s_y[k], &hcat(&s_y_u_other, &blocks.s_y_y0_cross[k]), &given, &label)?;
        let s_u_given_y0 = schur(&s_u[k], &s_u_y0[k], &blocks.s_y0, "Y0")?;
        agents.push(AgentCache {
            s_u: s_u[k].clone(),
            s_u_given_xy0: sym(&(a * &blocks.s_y_xy0[k] * a.transpose() + sz)),
            s_u_given_uy0,
            s_u_given_y0,
            s_u_y0: s_u_y0[k].clone(),
            s_y: blocks.s_y[k].clone(),
            s_y_given_uy0,
            s_y_given_xy0: blocks.s_y_xy0[k].clone(),
            s_y_given_y0: blocks.s_y_y0[k].clone(),
            s_y_u_other,
        });
    }
    let [a0, a1]: [AgentCache; 2] = agents.try_into().expect("two agents");
    Ok(GaussBaState { channels: channels.clone(), agents: [a0, a1], s_u12, iteration })
}

fn check_two_agents(model: &GaussCeoModel, channels: &GaussTestChannels) -> Result<()> {
    if model.k() != 2 {
        return Err(Error::InvalidModel(format!("the Gaussian BA iteration needs 2 agents, got {}", model.k())));
    }
    channels.check(model)
}

/// All cached covariances for the current channels, computed from the
/// model blocks and the channel parameters.
pub fn refresh_cache(model: &GaussCeoModel, channels: &GaussTestChannels) -> Result<GaussBaState> {
    check_two_agents(model, channels)?;
    build_cache(&ModelBlocks::new(model)?, channels, 0)
}

fn coefficients(s: TradeoffParams, k: usize) -> (f64, f64, f64) {
    let sk = if k == 0 { s.s1 } else { s.s2 };
    (1.0 / sk, (1.0 - s.s1) / sk, (sk - s.s1) / sk)
}

/// New Σ_{z_k}, and whether the eigenvalue floor had to be applied.
pub fn step_sigma_z(state: &GaussBaState, s: TradeoffParams, k: usize) -> Result<(Mat, bool)> {
    let c = &state.agents[k];
    let (a, b, d) = coefficients(s, k);
    let name = |w: &str| format!("Σ_{{u{}|{w}}}", k + 1);
    let mut m = spd_inverse(&c.s_u_given_xy0, &name("x,y0"))? * a - spd_inverse(&c.s_u_given_uy0, &name("u,y0"))? * b;
    if d != 0.0 {
        m += spd_inverse(&c.s_u_given_y0, &name("y0"))? * d;
    }
    let m = sym(&m);
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { block: format!("Σ_z^-1 combination of agent {}", k + 1), cond: f64::INFINITY });
    }
    let floored = min_eig(&m) < SIGMA_Z_FLOOR;
    Ok((spectral_map(&m, |v| 1.0 / v.max(SIGMA_Z_FLOOR)), floored))
}

/// New A_k from the cache and the freshly computed Σ_{z_k}.
pub fn step_a(state: &GaussBaState, sigma_z_new: &Mat, s: TradeoffParams, k: usize) -> Result<Mat> {
    let c = &state.agents[k];
    let a_t = &state.channels.channels[k].a;
    let (wa, wb, wd) = coefficients(s, k);
    let n = c.s_y.nrows();
    let eye = Mat::identity(n, n);
    let sy_inv = spd_inverse(&c.s_y, &format!("Σ_{{y{}}}", k + 1))?;
    let name = |w: &str| format!("Σ_{{u{}|{w}}}", k + 1);
    let mut bracket = spd_inverse(&c.s_u_given_xy0, &name("x,y0"))? * a_t * (&eye - &c.s_y_given_xy0 * &sy_inv) * wa
        - spd_inverse(&c.s_u_given_uy0, &name("u,y0"))? * a_t * (&eye - &c.s_y_given_uy0 * &sy_inv) * wb;
    if wd != 0.0 {
        bracket += spd_inverse(&c.s_u_given_y0, &name("y0"))? * a_t * (&eye - &c.s_y_given_y0 * &sy_inv) * wd;
    }
    Ok(sigma_z_new * bracket)
}

/// Information-equivalent channels with Σ_z = I.
pub fn whiten(channels: &GaussTestChannels) -> Result<GaussTestChannels> {
    let channels = channels
        .channels
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let w = inv_sqrtm_pd(&c.sigma_z, &format!("Σ_{{z{}}}", k + 1))?;
            let m = c.a.nrows();
            Ok(TestChannel { a: w * &c.a, sigma_z: Mat::identity(m, m) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussTestChannels { channels })
}

/// (R1, R2, D) with R1 = I(Y1;U1|U2,Y0), R2 = I(Y2;U2|Y0), D = h(X|U1,U2,Y0).
pub fn rate_distortion_triple(model: &GaussCeoModel, channels: &GaussTestChannels) -> Result<[f64; 3]> {
    check_two_agents(model, channels)?;
    let (c, l) = augmented_cov(model, &whiten(channels)?)?;
    let d = gauss_entropy(&cond_cov(&c, &idx(&[&l.x]), &idx(&[&l.u[0], &l.u[1], &l.y0]))?)?;
    let r1 = gauss_cond_mi(&c, &idx(&[&l.y[0]]), &idx(&[&l.u[0]]), &idx(&[&l.u[1], &l.y0]))?;
    let r2 = gauss_cond_mi(&c, &idx(&[&l.y[1]]), &idx(&[&l.u[1]]), &idx(&[&l.y0]))?;
    Ok([r1.max(0.0), r2.max(0.0), d])
}

/// D + s1·R1 + s2·R2 at the given channels.
pub fn objective(model: &GaussCeoModel, channels: &GaussTestChannels, s: TradeoffParams) -> Result<f64> {
    let [r1, r2, d] = rate_distortion_triple(model, channels)?;
    Ok(d + s.s1 * r1 + s.s2 * r2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective_nats: f64,
    pub delta_param_frobenius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GaussBaResult {
    pub channels: GaussTestChannels,
    /// (R_k…, D).
    pub point: RegionPoint,
    /// h(X) − D.
    pub relevance: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of Σ_z updates that needed the eigenvalue floor.
    pub floored_steps: usize,
    pub trace: Vec<TraceRow>,
    /// Objective at the start and after every single-agent update.
    pub half_steps: Vec<f64>,
}

impl GaussBaResult {
    pub fn flagged(&self) -> bool {
        self.floored_steps > 0
    }
}

fn random_channels(model: &GaussCeoModel, dims: [usize; 2], rng: &mut ChaCha8Rng) -> GaussTestChannels {
    let channels = (0..2)
        .map(|k| {
            let n = model.nk(k);
            let scale = 1.0 / (n as f64).sqrt();
            let a = Mat::from_fn(dims[k], n, |_, _| {
                let v: f64 = StandardNormal.sample(rng);
                v * scale
            });
            TestChannel { a, sigma_z: Mat::identity(dims[k], dims[k]) }
        })
        .collect();
    GaussTestChannels { channels }
}

fn param_change(a: &GaussTestChannels, b: &GaussTestChannels) -> f64 {
    a.channels
        .iter()
        .zip(&b.channels)
        .map(|(x, y)| (&x.a - &y.a).norm().max((&x.sigma_z - &y.sigma_z).norm()))
        .fold(0.0, f64::max)
}

struct Run {
    channels: GaussTestChannels,
    objective: f64,
    iterations: usize,
    converged: bool,
    floored_steps: usize,
    trace: Vec<TraceRow>,
    half_steps: Vec<f64>,
}

fn run_from(model: &GaussCeoModel, s: TradeoffParams, cfg: &GaussBaConfig, init: GaussTestChannels, frozen: [bool; 2]) -> Result<Run> {
    let blocks = ModelBlocks::new(model)?;
    let mut ch = init;
    let mut f = objective(model, &ch, s)?;
    let mut half_steps = vec![f];
    let mut trace = Vec::new();
    let mut floored_steps = 0;
    let mut rises = 0;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        iterations = it;
        let before = ch.clone();
        for k in 0..2 {
            if frozen[k] {
                continue;
            }
            let state = build_cache(&blocks, &ch, it)?;
            let (sz, floored) = step_sigma_z(&state, s, k)?;
            let a = step_a(&state, &sz, s, k)?;
            floored_steps += floored as usize;
            ch.channels[k] = TestChannel { a, sigma_z: sz };
            half_steps.push(objective(model, &ch, s)?);
        }
        let f_new = *half_steps.last().expect("non-empty");
        let delta = param_change(&before, &ch);
        trace.push(TraceRow { iteration: it, objective_nats: f_new, delta_param_frobenius: delta });
        rises = if f_new > f + RISE_TOL { rises + 1 } else { 0 };
        f = f_new;
        if rises >= DIVERGE_STREAK {
            return Err(Error::Diverged { iterations: it, trace: trace.iter().map(|r| r.objective_nats).collect() });
        }
        if delta <= cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(Run { channels: ch, objective: f, iterations, converged, floored_steps, trace, half_steps })
}

fn validate(s: TradeoffParams, cfg: &GaussBaConfig) -> Result<()> {
    s.validate()?;
    if cfg.max_iter == 0 || cfg.restarts == 0 || !(cfg.tol >= 0.0) {
        return Err(Error::InvalidParam("Gaussian BA config needs max_iter ≥ 1, restarts ≥ 1, tol ≥ 0".into()));
    }
    Ok(())
}

/// Runs the iteration from `cfg.restarts` seeded random starts and keeps the
/// lowest objective. A one-agent model is padded with an inert second agent
/// whose channel stays at A = 0; its rate is then dropped from the output.
pub fn run_gauss_ba(model: &GaussCeoModel, s: TradeoffParams, cfg: &GaussBaConfig) -> Result<GaussBaResult> {
    validate(s, cfg)?;
    let single = model.k() == 1;
    let work = match model.k() {
        1 => model.with_inert_agent(),
        2 => model.clone(),
        k => return Err(Error::InvalidModel(format!("the Gaussian BA iteration handles 1 or 2 agents, got {k}"))),
    };
    let dims = [cfg.u_dims[0].unwrap_or(work.nk(0)), if single { 1 } else { cfg.u_dims[1].unwrap_or(work.nk(1)) }];
    for k in 0..2 {
        if dims[k] == 0 || dims[k] > work.nk(k) {
            return Err(Error::InvalidParam(format!("dim U{} = {} must be in 1..={}", k + 1, dims[k], work.nk(k))));
        }
    }
    let mut best: Option<Run> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let mut init = random_channels(&work, dims, &mut rng);
        if single {
            init.channels[1].a.fill(0.0);
        }
        let run = run_from(&work, s, cfg, init, [false, single])?;
        if best.as_ref().map_or(true, |b| run.objective < b.objective - 1e-12) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let [r1, r2, d] = rate_distortion_triple(&work, &best.channels)?;
    let mut channels = best.channels;
    let rates = if single {
        channels.channels.truncate(1);
        vec![r1]
    } else {
        vec![r1, r2]
    };
    Ok(GaussBaResult {
        channels,
        point: RegionPoint::distortion(rates, d, Permutation::Rd1),
        relevance: model.h_x()? - d,
        objective: best.objective,
        iterations: best.iterations,
        converged: best.converged,
        floored_steps: best.floored_steps,
        trace: best.trace,
        half_steps: best.half_steps,
    })
}

/// Either decoding order; `Rd2` runs on the agent-swapped model and maps the
/// result back.
pub fn run_gauss_ba_permuted(model: &GaussCeoModel, s: TradeoffParams, cfg: &GaussBaConfig, perm: Permutation) -> Result<GaussBaResult> {
    match perm {
        Permutation::Rd1 => run_gauss_ba(model, s, cfg),
        Permutation::Rd2 => {
            if model.k() != 2 {
                return Err(Error::InvalidModel("the RD2 order needs two agents".into()));
            }
            let cfg2 = GaussBaConfig { u_dims: [cfg.u_dims[1], cfg.u_dims[0]], ..*cfg };
            let mut res = run_gauss_ba(&model.swap_agents(), s, &cfg2)?;
            res.channels.channels.swap(0, 1);
            res.point.rates.swap(0, 1);
            res.point.permutation = Permutation::Rd2;
            Ok(res)
        }
    }
}

#[derive(Debug)]
pub struct GaussSweepCell {
    pub index: usize,
    pub s: TradeoffParams,
    pub permutation: Permutation,
    pub outcome: Result<GaussBaResult>,
}

/// One run per (s1, s2) cell, s1 varying slowest, in parallel.
pub fn sweep(model: &GaussCeoModel, s1_grid: &[f64], s2_grid: &[f64], cfg: &GaussBaConfig, perm: Permutation) -> Result<Vec<GaussSweepCell>> {
    if s1_grid.is_empty() || s2_grid.is_empty() {
        return Err(Error::InvalidParam("empty s-grid".into()));
    }
    let cells: Vec<(usize, f64, f64)> = s1_grid
        .iter()
        .flat_map(|&a| s2_grid.iter().map(move |&b| (a, b)))
        .enumerate()
        .map(|(i, (a, b))| (i, a, b))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(index, s1, s2)| {
            let s = TradeoffParams { s1, s2 };
            let cfg = GaussBaConfig { seed: cell_seed(cfg.seed, index), ..*cfg };
            GaussSweepCell { index, s, permutation: perm, outcome: run_gauss_ba_permuted(model, s, &cfg, perm) }
        })
        .collect())
}

/// Points of successful, unflagged cells.
pub fn sweep_points(cells: &[GaussSweepCell]) -> Vec<RegionPoint> {
    cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok())
        .filter(|r| !r.flagged())
        .map(|r| r.point.clone())
        .filter(|p| p.kind == PointKind::Distortion && p.is_finite())
        .collect()
}
