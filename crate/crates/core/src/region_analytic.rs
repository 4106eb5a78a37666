//! Closed-form evaluation of the Gaussian region bounds, the single-encoder
//! and centralized information-bottleneck curves, and a projected-gradient
//! solver over Ω.

use std::collections::VecDeque;
use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss_model::*;
use crate::linalg::*;
use crate::region::{Permutation, PointKind, RegionPoint};

const NONMONOTONE_WINDOW: usize = 10;

/// Largest K for which all 2^K subset constraints are enumerated.
pub const MAX_AGENTS: usize = 8;

fn ln_pie() -> f64 {
    (PI * E).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionBoundEvaluation {
    pub subset: SubsetSpec,
    /// Σ_{k∈S} R_k + D must be at least this.
    pub rhs: f64,
    /// Σ_{k∈S} −log|I − Ω_kΣ_k|.
    pub rate_term: f64,
    /// log|(πe) J^{-1}|.
    pub entropy_term: f64,
}

fn check_subset(model: &GaussCeoModel, subset: &SubsetSpec) -> Result<()> {
    if subset.members.len() != model.k() {
        return Err(Error::ShapeMismatch(format!("subset over {} agents for a {}-agent model", subset.members.len(), model.k())));
    }
    Ok(())
}

/// Σ_{k∈S} −log|I − T_k|, with T_k = Σ_k^{1/2}Ω_kΣ_k^{1/2}.
fn rate_term(t: &[Mat], subset: &SubsetSpec) -> Result<f64> {
    let mut sum = 0.0;
    for k in subset.in_set() {
        let n = t[k].nrows();
        let m = Mat::identity(n, n) - &t[k];
        if min_eig(&m) <= 0.0 {
            return Err(Error::Singular { block: format!("I − Ω_{}Σ_{}", k + 1, k + 1), cond: f64::INFINITY });
        }
        sum -= logdet_pd(&m);
    }
    Ok(sum)
}

pub fn eval_rd_bound(model: &GaussCeoModel, omega: &OmegaSet, subset: &SubsetSpec) -> Result<RegionBoundEvaluation> {
    check_subset(model, subset)?;
    let j = posterior_precision(model, omega, subset)?;
    finish_rd(model, omega, subset, &j)
}

/// Same bound through the independent-noise precision formula.
pub fn eval_rd_bound_independent(model: &GaussCeoModel, omega: &OmegaSet, subset: &SubsetSpec) -> Result<RegionBoundEvaluation> {
    check_subset(model, subset)?;
    let j = posterior_precision_independent(model, omega, subset)?;
    finish_rd(model, omega, subset, &j)
}

fn finish_rd(model: &GaussCeoModel, omega: &OmegaSet, subset: &SubsetSpec, j: &Mat) -> Result<RegionBoundEvaluation> {
    let rate_term = rate_term(&omega.to_t(model), subset)?;
    let entropy_term = model.nx() as f64 * ln_pie() - logdet_spd(j, "posterior precision J")?;
    Ok(RegionBoundEvaluation { subset: subset.clone(), rhs: rate_term + entropy_term, rate_term, entropy_term })
}

impl RegionBoundEvaluation {
    /// Σ_{k∈S} R_k + D − rhs; non-negative when the constraint holds.
    pub fn slack(&self, rates: &[f64], d: f64) -> f64 {
        self.subset.in_set().iter().map(|&k| rates[k]).sum::<f64>() + d - self.rhs
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IbBoundEvaluation {
    pub subset: SubsetSpec,
    /// Σ_{k∈S} log|I − Ω_kΣ_k| (≤ 0).
    pub rate_offset: f64,
    /// log|I + Σ_x H_S̄† Σ_{n_S̄}^{-1}(I − Λ_S̄ Σ_{n_S̄}^{-1}) H_S̄|.
    pub relevance_term: f64,
}

impl IbBoundEvaluation {
    /// Upper bound on Δ at the given rates.
    pub fn bound(&self, rates: &[f64]) -> f64 {
        self.subset.in_set().iter().map(|&k| rates[k]).sum::<f64>() + self.rate_offset + self.relevance_term
    }
}

pub fn eval_ib_bound(model: &GaussCeoModel, omega: &OmegaSet, subset: &SubsetSpec) -> Result<IbBoundEvaluation> {
    check_subset(model, subset)?;
    let j = posterior_precision(model, omega, subset)?;
    // |I + Σ_x(J − Σ_x^{-1})| = |Σ_x|·|J|
    let relevance_term = logdet_spd(&model.sigma_x, "Σ_x")? + logdet_spd(&j, "posterior precision J")?;
    Ok(IbBoundEvaluation { subset: subset.clone(), rate_offset: -rate_term(&omega.to_t(model), subset)?, relevance_term })
}

/// Outcome of the determinant-constraint check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DetBoundCheck {
    pub satisfied: bool,
    /// rhs − log(1/D_det), in nats.
    pub slack: f64,
}

/// log(1/D_det) ≤ Σ_{k∈S} R_k + Σ_{k∈S} log|I − Ω_kΣ_k| + log|J|.
pub fn det_region_bound(model: &GaussCeoModel, omega: &OmegaSet, subset: &SubsetSpec, rates: &[f64], d_det: f64) -> Result<DetBoundCheck> {
    check_subset(model, subset)?;
    if !(d_det > 0.0) {
        return Err(Error::InvalidParam(format!("D_det = {d_det} must be positive")));
    }
    if rates.len() != model.k() {
        return Err(Error::ShapeMismatch(format!("{} rates for {} agents", rates.len(), model.k())));
    }
    let j = posterior_precision(model, omega, subset)?;
    let rhs = subset.in_set().iter().map(|&k| rates[k]).sum::<f64>() - rate_term(&omega.to_t(model), subset)? + logdet_spd(&j, "posterior precision J")?;
    let slack = rhs + d_det.ln();
    Ok(DetBoundCheck { satisfied: slack >= 0.0, slack })
}

/// The log-loss distortion matching a determinant distortion.
pub fn det_to_log_loss(nx: usize, d_det: f64) -> f64 {
    nx as f64 * ln_pie() + d_det.ln()
}

/// Eigenvalues of Σ^{-1/2} H Σ_x H† Σ^{-1/2}, the per-mode SNRs of a
/// single-encoder instance.
fn ib_gains(sigma_x: &Mat, h: &Mat, sigma: &Mat) -> Result<Vec<f64>> {
    if h.ncols() != sigma_x.nrows() || sigma.nrows() != h.nrows() {
        return Err(Error::ShapeMismatch("single-encoder instance dimensions".into()));
    }
    let w = inv_sqrtm_pd(sigma, "Σ")?;
    let g = sym(&(&w * h * sigma_x * h.transpose() * &w));
    Ok(eigen_sym(&g).eigenvalues.iter().map(|&v| v.max(0.0)).collect())
}

/// (Δ, R) at multiplier λ: t_i = ((g_i − λ)/(g_i(1+λ)))⁺.
fn ib_at(gains: &[f64], lambda: f64) -> (f64, f64) {
    let (mut delta, mut rate) = (0.0, 0.0);
    for &g in gains {
        if g <= lambda {
            continue;
        }
        let t = (g - lambda) / (g * (1.0 + lambda));
        // 1 − t = λ(1+g) / (g(1+λ))
        let log_one_minus_t = lambda.ln() + (1.0 + g).ln() - g.ln() - (1.0 + lambda).ln();
        let d = (1.0 + g * t).ln();
        delta += d;
        rate += d - log_one_minus_t;
    }
    (delta, rate)
}

fn ib_value(gains: &[f64], r: f64) -> f64 {
    let gmax = gains.iter().copied().fold(0.0, f64::max);
    if r <= 0.0 || gmax <= 0.0 {
        return 0.0;
    }
    if r.is_infinite() {
        return gains.iter().map(|g| g.ln_1p()).sum();
    }
    // rate decreases in λ; bisect on log λ
    let (mut lo, mut hi) = ((1e-300f64).ln(), gmax.ln());
    if ib_at(gains, lo.exp()).1 < r {
        return gains.iter().map(|g| g.ln_1p()).sum();
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ib_at(gains, mid.exp()).1 > r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (d_lo, r_lo) = ib_at(gains, lo.exp());
    let (d_hi, r_hi) = ib_at(gains, hi.exp());
    if (r_lo - r_hi).abs() < 1e-300 {
        return d_hi;
    }
    d_hi + (d_lo - d_hi) * (r - r_hi) / (r_lo - r_hi)
}

/// Δ*(R) of a single encoder observing Y = H X + N, N ~ N(0, Σ), for each R.
pub fn single_ib_curve(sigma_x: &Mat, h: &Mat, sigma: &Mat, r_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let gains = ib_gains(sigma_x, h, sigma)?;
    r_grid
        .iter()
        .map(|&r| {
            if !(r >= 0.0) {
                return Err(Error::InvalidParam(format!("rate {r} must be ≥ 0")));
            }
            Ok((r, ib_value(&gains, r)))
        })
        .collect()
}

/// Scalar grid oracle: max over t on an n-point grid of [0, 1) of
/// min(log(1 + snr·t), R + log(1 − t)).
pub fn scalar_ib_grid(snr: f64, r: f64, n: usize) -> f64 {
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            (snr * t).ln_1p().min(r + (-t).ln_1p())
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Joint encoding of all agents' observations with Y0 at the decoder:
/// Δ(R) = I(X;Y0) + the single-encoder curve of the model conditioned on Y0.
pub fn centralized_ib(model: &GaussCeoModel, r_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let c = model.joint_cov();
    let l = model.layout();
    let x = idx(&[&l.x]);
    let y0 = idx(&[&l.y0]);
    let ys: Vec<usize> = l.y.iter().flat_map(|r| r.clone()).collect();
    let sx = cond_cov(&c, &x, &y0)?;
    let syx = cond_cross(&c, &ys, &x, &y0)?;
    let h = &syx * spd_inverse(&sx, "Σ_{x|y0}")?;
    let xy0: Vec<usize> = x.iter().chain(&y0).copied().collect();
    let w = cond_cov(&c, &ys, &xy0)?;
    let base = if model.n0() == 0 { 0.0 } else { gauss_cond_mi(&c, &x, &y0, &[])? };
    Ok(single_ib_curve(&sx, &h, &w, r_grid)?.into_iter().map(|(r, d)| (r, base + d)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum OmegaObjective {
    MaxRelevance,
    MinDistortion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RateBudget {
    PerAgent(Vec<f64>),
    /// Total rate, split freely among the agents.
    SumRate(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSolverConfig {
    /// Iteration cap per smoothing stage.
    pub max_iter: usize,
    /// Projected-gradient norm at which a stage stops.
    pub tol: f64,
    pub tau_start: f64,
    pub tau_end: f64,
    pub armijo: f64,
}

impl Default for OmegaSolverConfig {
    fn default() -> Self {
        OmegaSolverConfig { max_iter: 20000, tol: 1e-6, tau_start: 1e-1, tau_end: 1e-7, armijo: 1e-4 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaSolution {
    pub omega: OmegaSet,
    pub rates: Vec<f64>,
    pub relevance: f64,
    pub distortion: f64,
    /// (rates, Δ) or (rates, D) according to the objective.
    pub point: RegionPoint,
    pub iterations: usize,
    pub proj_grad_norm: f64,
    pub converged: bool,
}

/// Per-subset data: J_S(T) = j0 − Σ_{k∈S^c} C_k†(I − T_k)C_k.
struct SubsetTerm {
    members: Vec<bool>,
    j0: Mat,
    c: Vec<(usize, Mat)>,
}

struct Problem {
    terms: Vec<SubsetTerm>,
    logdet_sx: f64,
    dims: Vec<usize>,
}

#[derive(Clone)]
struct Point {
    t: Vec<Mat>,
    r: Vec<f64>,
}

impl Problem {
    fn new(model: &GaussCeoModel) -> Result<Problem> {
        let k = model.k();
        let sxi = spd_inverse(&model.sigma_x, "Σ_x")?;
        let nc = model.noise_cov();
        let mut terms = Vec::new();
        for s in SubsetSpec::all(k) {
            let comp = s.complement();
            let mut rows: Vec<usize> = (0..model.n0()).collect();
            let mut hs = vec![&model.h0];
            let mut local = Vec::new();
            let mut at = model.n0();
            let mut starts = vec![model.n0()];
            for kk in 0..k {
                starts.push(starts[kk] + model.nk(kk));
            }
            for &kk in &comp {
                local.push(at..at + model.nk(kk));
                rows.extend(starts[kk]..starts[kk + 1]);
                hs.push(&model.agents[kk].h);
                at += model.nk(kk);
            }
            let h = vstack(&hs, model.nx());
            let ninv = spd_inverse(&select(&nc, &rows, &rows), "Σ_{n_S̄}")?;
            let nh = &ninv * &h;
            let j0 = sym(&(&sxi + h.transpose() * &nh));
            let c = comp
                .iter()
                .zip(&local)
                .map(|(&kk, r)| {
                    let rows: Vec<usize> = r.clone().collect();
                    let cols: Vec<usize> = (0..model.nx()).collect();
                    (kk, sqrtm_psd(&model.agents[kk].sigma) * select(&nh, &rows, &cols))
                })
                .collect();
            terms.push(SubsetTerm { members: s.members, j0, c });
        }
        Ok(Problem { terms, logdet_sx: logdet_spd(&model.sigma_x, "Σ_x")?, dims: (0..k).map(|i| model.nk(i)).collect() })
    }

    /// g_S for every subset, with gradients when asked.
    fn eval(&self, p: &Point, grad: bool) -> Option<(Vec<f64>, Vec<Point>)> {
        let k = self.dims.len();
        let mut log_i_t = Vec::with_capacity(k);
        let mut inv_i_t = Vec::with_capacity(k);
        for (kk, t) in p.t.iter().enumerate() {
            let m = Mat::identity(self.dims[kk], self.dims[kk]) - t;
            let ch = m.clone().cholesky()?;
            log_i_t.push(2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>());
            inv_i_t.push(if grad { ch.inverse() } else { Mat::zeros(0, 0) });
        }
        let mut vals = Vec::with_capacity(self.terms.len());
        let mut grads = Vec::new();
        for term in &self.terms {
            let mut j = term.j0.clone();
            for (kk, c) in &term.c {
                let n = self.dims[*kk];
                j -= c.transpose() * (Mat::identity(n, n) - &p.t[*kk]) * c;
            }
            let ch = sym(&j).cholesky()?;
            let mut v = self.logdet_sx + 2.0 * ch.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
            for kk in 0..k {
                if term.members[kk] {
                    v += p.r[kk] + log_i_t[kk];
                }
            }
            if !v.is_finite() {
                return None;
            }
            vals.push(v);
            if grad {
                let jinv = ch.inverse();
                let mut g = Point { t: self.dims.iter().map(|&n| Mat::zeros(n, n)).collect(), r: vec![0.0; k] };
                for (kk, c) in &term.c {
                    g.t[*kk] = sym(&(c * &jinv * c.transpose()));
                }
                for kk in 0..k {
                    if term.members[kk] {
                        g.t[kk] = -inv_i_t[kk].clone();
                        g.r[kk] = 1.0;
                    }
                }
                grads.push(g);
            }
        }
        Some((vals, grads))
    }
}

fn soft_min(vals: &[f64], tau: f64) -> (f64, Vec<f64>) {
    let m = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = vals.iter().map(|v| (-(v - m) / tau).exp()).collect();
    let z: f64 = w.iter().sum();
    (m - tau * z.ln(), w.iter().map(|x| x / z).collect())
}

/// Euclidean projection onto {r ≥ 0, Σ r = total}.
fn project_simplex(v: &[f64], total: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = u.first().map_or(0.0, |m| m - total);
    for (i, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - total) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

struct Solver<'a> {
    prob: &'a Problem,
    budget: &'a RateBudget,
}

impl Solver<'_> {
    fn project(&self, p: &Point) -> Point {
        let r = match self.budget {
            RateBudget::PerAgent(r) => r.clone(),
            RateBudget::SumRate(total) => project_simplex(&p.r, *total),
        };
        Point { t: p.t.iter().map(project_t).collect(), r }
    }

    fn step(&self, p: &Point, g: &Point, alpha: f64) -> Point {
        let moved = Point {
            t: p.t.iter().zip(&g.t).map(|(t, d)| t + d * alpha).collect(),
            r: p.r.iter().zip(&g.r).map(|(r, d)| r + d * alpha).collect(),
        };
        self.project(&moved)
    }

    fn value_grad(&self, p: &Point, tau: f64) -> Option<(f64, Point)> {
        let (vals, grads) = self.prob.eval(p, true)?;
        let (f, w) = soft_min(&vals, tau);
        let mut g = Point { t: p.t.iter().map(|t| Mat::zeros(t.nrows(), t.ncols())).collect(), r: vec![0.0; p.r.len()] };
        for (wi, gi) in w.iter().zip(&grads) {
            for (a, b) in g.t.iter_mut().zip(&gi.t) {
                *a += b * *wi;
            }
            for (a, b) in g.r.iter_mut().zip(&gi.r) {
                *a += b * wi;
            }
        }
        Some((f, g))
    }
}

fn diff_norm(a: &Point, b: &Point) -> f64 {
    let t: f64 = a.t.iter().zip(&b.t).map(|(x, y)| (x - y).norm_squared()).sum();
    let r: f64 = a.r.iter().zip(&b.r).map(|(x, y)| (x - y).powi(2)).sum();
    (t + r).sqrt()
}

fn lerp(a: &Point, b: &Point, lam: f64) -> Point {
    Point {
        t: a.t.iter().zip(&b.t).map(|(x, y)| x + (y - x) * lam).collect(),
        r: a.r.iter().zip(&b.r).map(|(x, y)| x + (y - x) * lam).collect(),
    }
}

// ⟨g1 − g0, p1 − p0⟩
fn inner_diff(g1: &Point, g0: &Point, p1: &Point, p0: &Point) -> f64 {
    let t: f64 = (0..g1.t.len()).map(|i| (&g1.t[i] - &g0.t[i]).dot(&(&p1.t[i] - &p0.t[i]))).sum();
    let r: f64 = (0..g1.r.len()).map(|i| (g1.r[i] - g0.r[i]) * (p1.r[i] - p0.r[i])).sum();
    t + r
}

fn inner(g: &Point, d: &Point, base: &Point) -> f64 {
    let t: f64 = g.t.iter().zip(d.t.iter().zip(&base.t)).map(|(g, (d, b))| g.dot(&(d - b))).sum();
    let r: f64 = g.r.iter().zip(d.r.iter().zip(&base.r)).map(|(g, (d, b))| g * (d - b)).sum();
    t + r
}

/// Maximizes the smallest subset bound on Δ over admissible Ω (and over the
/// rate split, for a sum-rate budget) by projected gradient ascent in
/// T_k = Σ_k^{1/2}Ω_kΣ_k^{1/2} coordinates, smoothing the minimum with a
/// soft-min whose temperature is lowered in stages. Steps use
/// Barzilai-Borwein lengths with a nonmonotone Armijo backtrack.
pub fn optimize_omega(model: &GaussCeoModel, objective: OmegaObjective, budget: &RateBudget, cfg: &OmegaSolverConfig) -> Result<OmegaSolution> {
    optimize_omega_from(model, objective, budget, cfg, None)
}

/// `optimize_omega` with an explicit starting Ω.
pub fn optimize_omega_from(model: &GaussCeoModel, objective: OmegaObjective, budget: &RateBudget, cfg: &OmegaSolverConfig, start: Option<&OmegaSet>) -> Result<OmegaSolution> {
    let k = model.k();
    if k > MAX_AGENTS {
        return Err(Error::InvalidParam(format!("{k} agents exceed the subset-enumeration limit of {MAX_AGENTS}")));
    }
    let r0 = match budget {
        RateBudget::PerAgent(r) => {
            if r.len() != k || r.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::InvalidParam(format!("need {k} non-negative rate budgets")));
            }
            r.clone()
        }
        RateBudget::SumRate(total) => {
            if !(*total >= 0.0) || total.is_infinite() {
                return Err(Error::InvalidParam(format!("sum-rate budget {total} must be finite and ≥ 0")));
            }
            vec![total / k as f64; k]
        }
    };
    if !(cfg.tau_start >= cfg.tau_end && cfg.tau_end > 0.0 && cfg.max_iter > 0) {
        return Err(Error::InvalidParam("solver needs tau_start ≥ tau_end > 0 and max_iter ≥ 1".into()));
    }
    let prob = Problem::new(model)?;
    let solver = Solver { prob: &prob, budget };
    let t0 = match start {
        Some(o) => {
            o.check_admissible(model)?;
            o.to_t(model).iter().map(project_t).collect()
        }
        None => prob.dims.iter().map(|&n| Mat::zeros(n, n)).collect(),
    };
    let mut x = solver.project(&Point { t: t0, r: r0 });
    let mut iterations = 0;
    let mut pg = f64::INFINITY;
    let mut tau = cfg.tau_start;
    let mut converged = true;
    // the exact minimum is tracked separately: late smoothing stages may stall
    let exact = |p: &Point| prob.eval(p, false).map(|(v, _)| v.iter().copied().fold(f64::INFINITY, f64::min));
    let mut best = (exact(&x).unwrap_or(f64::NEG_INFINITY), x.clone());
    let singular = || Error::Singular { block: "subset bound at the current Ω".into(), cond: f64::INFINITY };
    let mut alpha_bb = 1.0;
    loop {
        let mut stage_done = false;
        let mut recent: VecDeque<f64> = VecDeque::with_capacity(NONMONOTONE_WINDOW);
        let (mut f, mut g) = solver.value_grad(&x, tau).ok_or_else(singular)?;
        for _ in 0..cfg.max_iter {
            iterations += 1;
            if let Some(v) = exact(&x) {
                if v > best.0 {
                    best = (v, x.clone());
                }
            }
            pg = diff_norm(&solver.step(&x, &g, 1.0), &x);
            if pg <= cfg.tol {
                stage_done = true;
                break;
            }
            if recent.len() == NONMONOTONE_WINDOW {
                recent.pop_front();
            }
            recent.push_back(f);
            let f_ref = recent.iter().copied().fold(f64::INFINITY, f64::min);
            let target = solver.step(&x, &g, alpha_bb);
            let slope = inner(&g, &target, &x);
            let mut lam = 1.0;
            let mut next = None;
            for _ in 0..60 {
                let cand = lerp(&x, &target, lam);
                if let Some((fc, gc)) = solver.value_grad(&cand, tau) {
                    if fc >= f_ref + cfg.armijo * lam * slope {
                        next = Some((cand, fc, gc));
                        break;
                    }
                }
                lam *= 0.5;
            }
            let Some((cand, fc, gc)) = next else {
                stage_done = true;
                break;
            };
            // Barzilai-Borwein step for ascent: ⟨s,s⟩ / −⟨s,y⟩
            let ss = diff_norm(&cand, &x).powi(2);
            let sy = inner_diff(&gc, &g, &cand, &x);
            alpha_bb = if sy < 0.0 { (ss / -sy).clamp(1e-10, 1e10) } else { 1e10 };
            if ss == 0.0 {
                stage_done = true;
                break;
            }
            x = cand;
            f = fc;
            g = gc;
        }
        converged &= stage_done;
        if tau <= cfg.tau_end {
            break;
        }
        tau = (tau * 0.1).max(cfg.tau_end);
    }
    if exact(&x).map_or(true, |v| v < best.0) {
        x = best.1;
    }
    let (vals, _) = prob.eval(&x, false).ok_or_else(|| Error::Singular { block: "subset bound at the final Ω".into(), cond: f64::INFINITY })?;
    let relevance = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let distortion = model.h_x()? - relevance;
    let omega = OmegaSet::from_t(model, &x.t)?;
    let (value, kind) = match objective {
        OmegaObjective::MaxRelevance => (relevance, PointKind::Relevance),
        OmegaObjective::MinDistortion => (distortion, PointKind::Distortion),
    };
    let point = RegionPoint { rates: x.r.clone(), value, kind, permutation: Permutation::Rd1 };
    Ok(OmegaSolution { omega, rates: x.r, relevance, distortion, point, iterations, proj_grad_norm: pg, converged: converged && pg <= cfg.tol })
}

/// Δ bound min over all subsets at a given Ω and rates.
pub fn relevance_at(model: &GaussCeoModel, omega: &OmegaSet, rates: &[f64]) -> Result<f64> {
    if model.k() > MAX_AGENTS {
        return Err(Error::InvalidParam(format!("{} agents exceed the subset-enumeration limit", model.k())));
    }
    let mut best = f64::INFINITY;
    for s in SubsetSpec::all(model.k()) {
        best = best.min(eval_ib_bound(model, omega, &s)?.bound(rates));
    }
    Ok(best)
}

#[cfg(test)]
mod tests;
