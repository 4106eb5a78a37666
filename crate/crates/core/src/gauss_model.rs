//! Vector Gaussian CEO model: Y0 = H0 X + N0 at the decoder and
//! Y_k = H_k X + N_k at agent k. Gaussian entropies follow the circular
//! convention h = log det(πe Σ).

use std::f64::consts::PI;
use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::*;

const SYM_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;
const COUPLING_TOL: f64 = 1e-8;
pub const ADMISSIBLE_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct AgentObs {
    pub h: Mat,
    /// Σ_k = Σ_{n_k | n_0}.
    pub sigma: Mat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussCeoModel {
    pub sigma_x: Mat,
    pub h0: Mat,
    pub sigma0: Mat,
    pub agents: Vec<AgentObs>,
    /// Full covariance of the stacked noise (N0, N1, …, NK), if correlated.
    pub noise_coupling: Option<Mat>,
}

#[derive(Serialize, Deserialize)]
struct RawAgent {
    h: Vec<Vec<f64>>,
    sigma: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct RawModel {
    sigma_x: Vec<Vec<f64>>,
    #[serde(default)]
    h0: Vec<Vec<f64>>,
    #[serde(default)]
    sigma0: Vec<Vec<f64>>,
    agents: Vec<RawAgent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    noise_coupling: Option<Vec<Vec<f64>>>,
}

impl Serialize for GaussCeoModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawModel {
            sigma_x: to_rows(&self.sigma_x),
            h0: to_rows(&self.h0),
            sigma0: to_rows(&self.sigma0),
            agents: self.agents.iter().map(|a| RawAgent { h: to_rows(&a.h), sigma: to_rows(&a.sigma) }).collect(),
            noise_coupling: self.noise_coupling.as_ref().map(to_rows),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GaussCeoModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawModel::deserialize(d)?;
        GaussCeoModel::from_raw(raw).map_err(serde::de::Error::custom)
    }
}

fn check_cov(m: &Mat, name: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::InvalidModel(format!("`{name}` is not square")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel(format!("`{name}` has non-finite entries")));
    }
    if max_asym(m) > SYM_TOL {
        return Err(Error::InvalidModel(format!("`{name}` is not symmetric")));
    }
    if min_eig(m) < -PSD_TOL {
        return Err(Error::InvalidModel(format!("`{name}` is not positive semidefinite")));
    }
    Ok(())
}

impl GaussCeoModel {
    fn from_raw(raw: RawModel) -> Result<Self> {
        let sigma_x = from_rows(&raw.sigma_x, None, "sigma_x")?;
        let nx = sigma_x.nrows();
        let h0 = from_rows(&raw.h0, Some(nx), "h0")?;
        let sigma0 = from_rows(&raw.sigma0, Some(h0.nrows()), "sigma0")?;
        let agents = raw
            .agents
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let h = from_rows(&a.h, Some(nx), &format!("agents[{k}].h"))?;
                let sigma = from_rows(&a.sigma, Some(h.nrows()), &format!("agents[{k}].sigma"))?;
                Ok(AgentObs { h, sigma })
            })
            .collect::<Result<Vec<_>>>()?;
        let noise_coupling = raw.noise_coupling.as_ref().map(|c| from_rows(c, None, "noise_coupling")).transpose()?;
        GaussCeoModel::new(sigma_x, h0, sigma0, agents, noise_coupling)
    }

    pub fn new(sigma_x: Mat, h0: Mat, sigma0: Mat, agents: Vec<AgentObs>, noise_coupling: Option<Mat>) -> Result<Self> {
        let m = GaussCeoModel { sigma_x, h0, sigma0, agents, noise_coupling };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let nx = self.nx();
        if nx == 0 {
            return Err(Error::InvalidModel("empty source".into()));
        }
        check_cov(&self.sigma_x, "sigma_x")?;
        if self.h0.ncols() != nx || self.sigma0.nrows() != self.h0.nrows() {
            return Err(Error::InvalidModel("decoder block dimensions".into()));
        }
        check_cov(&self.sigma0, "sigma0")?;
        if self.agents.is_empty() {
            return Err(Error::InvalidModel("no agents".into()));
        }
        for (k, a) in self.agents.iter().enumerate() {
            if a.h.ncols() != nx || a.sigma.nrows() != a.h.nrows() || a.h.nrows() == 0 {
                return Err(Error::InvalidModel(format!("agent {k} dimensions")));
            }
            check_cov(&a.sigma, &format!("agents[{k}].sigma"))?;
        }
        if let Some(c) = &self.noise_coupling {
            let n = self.n0() + self.agents.iter().map(|a| a.h.nrows()).sum::<usize>();
            if c.nrows() != n {
                return Err(Error::InvalidModel(format!("noise_coupling must be {n}x{n}")));
            }
            check_cov(c, "noise_coupling")?;
            let b0: Vec<usize> = (0..self.n0()).collect();
            if max_asym(&(select(c, &b0, &b0) - &self.sigma0)) > COUPLING_TOL
                || (select(c, &b0, &b0) - &self.sigma0).abs().max() > COUPLING_TOL
            {
                return Err(Error::InvalidModel("noise_coupling decoder block differs from sigma0".into()));
            }
            let rest: Vec<usize> = (self.n0()..n).collect();
            let cond = cond_cov(c, &rest, &b0)?;
            let mut off = 0;
            for (k, a) in self.agents.iter().enumerate() {
                let nk = a.h.nrows();
                let own: Vec<usize> = (off..off + nk).collect();
                if (select(&cond, &own, &own) - &a.sigma).abs().max() > COUPLING_TOL {
                    return Err(Error::InvalidModel(format!("agents[{k}].sigma differs from the conditional block of noise_coupling")));
                }
                let others: Vec<usize> = (0..cond.nrows()).filter(|i| !own.contains(i)).collect();
                if !others.is_empty() && select(&cond, &own, &others).abs().max() > COUPLING_TOL {
                    return Err(Error::InvalidModel(format!("agent {k} noise is not conditionally independent given N0")));
                }
                off += nk;
            }
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        self.sigma_x.nrows()
    }

    pub fn n0(&self) -> usize {
        self.h0.nrows()
    }

    pub fn k(&self) -> usize {
        self.agents.len()
    }

    pub fn nk(&self, k: usize) -> usize {
        self.agents[k].h.nrows()
    }

    pub fn layout(&self) -> Layout {
        let mut at = 0;
        let mut next = |n: usize| {
            let r = at..at + n;
            at += n;
            r
        };
        let x = next(self.nx());
        let y0 = next(self.n0());
        let y = self.agents.iter().map(|a| next(a.h.nrows())).collect();
        Layout { x, y0, y, u: Vec::new(), dim: at }
    }

    /// Covariance of the stacked noise (N0, N1, …, NK).
    pub fn noise_cov(&self) -> Mat {
        match &self.noise_coupling {
            Some(c) => c.clone(),
            None => {
                let mut blocks = vec![&self.sigma0];
                blocks.extend(self.agents.iter().map(|a| &a.sigma));
                block_diag(&blocks)
            }
        }
    }

    /// Covariance over the stacked (X, Y0, Y1, …, YK).
    pub fn joint_cov(&self) -> Mat {
        let nx = self.nx();
        let mut hs = vec![&self.h0];
        hs.extend(self.agents.iter().map(|a| &a.h));
        let h = vstack(&hs, nx);
        let ny = h.nrows();
        let mut c = Mat::zeros(nx + ny, nx + ny);
        let sxh = &self.sigma_x * h.transpose();
        c.view_mut((0, 0), (nx, nx)).copy_from(&self.sigma_x);
        c.view_mut((0, nx), (nx, ny)).copy_from(&sxh);
        c.view_mut((nx, 0), (ny, nx)).copy_from(&sxh.transpose());
        c.view_mut((nx, nx), (ny, ny)).copy_from(&(&h * &sxh + self.noise_cov()));
        sym(&c)
    }

    /// Index ranges of the noise blocks inside `noise_cov`: N0 first, then agents.
    fn noise_ranges(&self) -> (Range<usize>, Vec<Range<usize>>) {
        let mut at = self.n0();
        let agents = self
            .agents
            .iter()
            .map(|a| {
                let r = at..at + a.h.nrows();
                at += a.h.nrows();
                r
            })
            .collect();
        (0..self.n0(), agents)
    }

    /// Source entropy log det(πe Σ_x).
    pub fn h_x(&self) -> Result<f64> {
        gauss_entropy(&self.sigma_x)
    }

    /// The same network with agents listed in `order`.
    pub fn reorder_agents(&self, order: &[usize]) -> GaussCeoModel {
        let agents = order.iter().map(|&k| self.agents[k].clone()).collect();
        let noise_coupling = self.noise_coupling.as_ref().map(|c| {
            let (r0, ra) = self.noise_ranges();
            let mut rows: Vec<usize> = r0.collect();
            for &k in order {
                rows.extend(ra[k].clone());
            }
            select(c, &rows, &rows)
        });
        GaussCeoModel { agents, noise_coupling, ..self.clone() }
    }

    pub fn swap_agents(&self) -> GaussCeoModel {
        let mut order: Vec<usize> = (0..self.k()).collect();
        order.reverse();
        self.reorder_agents(&order)
    }

    /// Appends an agent that observes pure unit noise (H = 0).
    pub fn with_inert_agent(&self) -> GaussCeoModel {
        let nx = self.nx();
        let mut m = self.clone();
        m.agents.push(AgentObs { h: Mat::zeros(1, nx), sigma: Mat::identity(1, 1) });
        m.noise_coupling = self.noise_coupling.as_ref().map(|c| block_diag(&[c, &Mat::identity(1, 1)]));
        m
    }
}

/// Positions of each variable inside a stacked covariance.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub x: Range<usize>,
    pub y0: Range<usize>,
    pub y: Vec<Range<usize>>,
    pub u: Vec<Range<usize>>,
    pub dim: usize,
}

/// Concatenated indices of several ranges.
pub fn idx(ranges: &[&Range<usize>]) -> Vec<usize> {
    ranges.iter().flat_map(|r| (*r).clone()).collect()
}

/// Σ_{a|b} = Σ_a − Σ_{ab} Σ_b^{-1} Σ_{ba} on index sets of `joint`.
pub fn cond_cov(joint: &Mat, target: &[usize], given: &[usize]) -> Result<Mat> {
    let saa = select(joint, target, target);
    if given.is_empty() {
        return Ok(sym(&saa));
    }
    let sab = select(joint, target, given);
    let sbb = select(joint, given, given);
    let inv = spd_inverse(&sbb, &format!("conditioning block {:?}", given_label(given)))?;
    Ok(sym(&(saa - &sab * inv * sab.transpose())))
}

/// Conditional cross-covariance Σ_{ab|c}.
pub fn cond_cross(joint: &Mat, a: &[usize], b: &[usize], given: &[usize]) -> Result<Mat> {
    let sab = select(joint, a, b);
    if given.is_empty() {
        return Ok(sab);
    }
    let sac = select(joint, a, given);
    let sbc = select(joint, b, given);
    let inv = spd_inverse(&select(joint, given, given), &format!("conditioning block {:?}", given_label(given)))?;
    Ok(sab - sac * inv * sbc.transpose())
}

fn given_label(given: &[usize]) -> String {
    match (given.first(), given.last()) {
        (Some(a), Some(b)) if given.windows(2).all(|w| w[1] == w[0] + 1) => format!("{a}..{}", b + 1),
        _ => format!("{given:?}"),
    }
}

/// log det(πe Σ).
pub fn gauss_entropy(sigma: &Mat) -> Result<f64> {
    Ok(sigma.nrows() as f64 * (PI * std::f64::consts::E).ln() + logdet_spd(sigma, "entropy argument")?)
}

/// I(A; B | C) = log|Σ_{A|C}| − log|Σ_{A|B,C}|.
pub fn gauss_cond_mi(joint: &Mat, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    let bc: Vec<usize> = b.iter().chain(c).copied().collect();
    Ok(logdet_spd(&cond_cov(joint, a, c)?, "Σ_{A|C}")? - logdet_spd(&cond_cov(joint, a, &bc)?, "Σ_{A|B,C}")?)
}

/// The agents in S (zero-based). S̄ = {0} ∪ S^c is implied.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetSpec {
    pub members: Vec<bool>,
}

impl SubsetSpec {
    pub fn from_mask(mask: usize, k: usize) -> SubsetSpec {
        SubsetSpec { members: (0..k).map(|i| mask >> i & 1 == 1).collect() }
    }

    pub fn empty(k: usize) -> SubsetSpec {
        SubsetSpec { members: vec![false; k] }
    }

    pub fn full(k: usize) -> SubsetSpec {
        SubsetSpec { members: vec![true; k] }
    }

    pub fn all(k: usize) -> impl Iterator<Item = SubsetSpec> {
        (0..1usize << k).map(move |m| SubsetSpec::from_mask(m, k))
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members[k]
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&k| !self.members[k]).collect()
    }

    pub fn in_set(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&k| self.members[k]).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSet {
    pub omegas: Vec<Mat>,
}

#[derive(Serialize, Deserialize)]
struct RawOmega {
    omegas: Vec<Vec<Vec<f64>>>,
}

impl Serialize for OmegaSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawOmega { omegas: self.omegas.iter().map(to_rows).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for OmegaSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawOmega::deserialize(d)?;
        let omegas = raw
            .omegas
            .iter()
            .enumerate()
            .map(|(k, o)| from_rows(o, None, &format!("omegas[{k}]")))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        Ok(OmegaSet { omegas })
    }
}

impl OmegaSet {
    pub fn zeros(model: &GaussCeoModel) -> OmegaSet {
        OmegaSet { omegas: (0..model.k()).map(|k| Mat::zeros(model.nk(k), model.nk(k))).collect() }
    }

    /// T_k = Σ_k^{1/2} Ω_k Σ_k^{1/2} for every agent.
    pub fn to_t(&self, model: &GaussCeoModel) -> Vec<Mat> {
        self.omegas
            .iter()
            .zip(&model.agents)
            .map(|(o, a)| {
                let r = sqrtm_psd(&a.sigma);
                sym(&(&r * o * &r))
            })
            .collect()
    }

    pub fn from_t(model: &GaussCeoModel, t: &[Mat]) -> Result<OmegaSet> {
        let omegas = t
            .iter()
            .zip(&model.agents)
            .enumerate()
            .map(|(k, (t, a))| {
                let ir = inv_sqrtm_pd(&a.sigma, &format!("Σ_{}", k + 1))?;
                Ok(sym(&(&ir * t * &ir)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OmegaSet { omegas })
    }

    /// 0 ⪯ Σ_k^{1/2} Ω_k Σ_k^{1/2} ⪯ I within the admissibility slack.
    pub fn check_admissible(&self, model: &GaussCeoModel) -> Result<()> {
        if self.omegas.len() != model.k() {
            return Err(Error::ShapeMismatch(format!("{} omegas for {} agents", self.omegas.len(), model.k())));
        }
        for (k, o) in self.omegas.iter().enumerate() {
            if o.nrows() != model.nk(k) || o.ncols() != model.nk(k) {
                return Err(Error::ShapeMismatch(format!("omega {k} must be {0}x{0}", model.nk(k))));
            }
        }
        for (k, t) in self.to_t(model).iter().enumerate() {
            let ev = eigen_sym(t).eigenvalues;
            for &e in ev.iter() {
                if !(-ADMISSIBLE_SLACK..=1.0 + ADMISSIBLE_SLACK).contains(&e) {
                    return Err(Error::InadmissibleOmega { agent: k, eig: e });
                }
            }
        }
        Ok(())
    }

    /// Eigenvalue clipping of each T_k to [0, 1 − 1e-9].
    pub fn project(&self, model: &GaussCeoModel) -> Result<OmegaSet> {
        let t: Vec<Mat> = self.to_t(model).iter().map(project_t).collect();
        OmegaSet::from_t(model, &t)
    }
}

pub fn project_t(t: &Mat) -> Mat {
    spectral_map(t, |v| v.clamp(0.0, 1.0 - ADMISSIBLE_SLACK))
}

/// Stacked observation matrix and noise covariance of (Y0, Y_{S^c}).
fn sbar_blocks(model: &GaussCeoModel, subset: &SubsetSpec) -> (Mat, Mat, Vec<Range<usize>>) {
    let comp = subset.complement();
    let (r0, ra) = model.noise_ranges();
    let mut hs = vec![&model.h0];
    hs.extend(comp.iter().map(|&k| &model.agents[k].h));
    let h = vstack(&hs, model.nx());
    let mut rows: Vec<usize> = r0.collect();
    let mut local = Vec::new();
    for &k in &comp {
        let start = rows.len();
        rows.extend(ra[k].clone());
        local.push(start..rows.len());
    }
    let n = select(&model.noise_cov(), &rows, &rows);
    (h, n, local)
}

/// J = Σ_x^{-1} + H_S̄† Σ_{n_S̄}^{-1} (I − Λ_S̄ Σ_{n_S̄}^{-1}) H_S̄ with
/// Λ_S̄ = diag(0, {Σ_k − Σ_k Ω_k Σ_k}_{k ∈ S^c}).
pub fn posterior_precision(model: &GaussCeoModel, omega: &OmegaSet, subset: &SubsetSpec) -> Result<Mat> {
    omega.check_admissible(model)?;
    let (h, n, local) = sbar_blocks(model, subset);
    let comp = subset.complement();
    let mut lambda = Mat::zeros(n.nrows(), n.nrows());
    for (r, &k) in local.iter().zip(&comp) {
        let s = &model.agents[k].sigma;
        let blk = s - s * &omega.omegas[k] * s;
        lambda.view_mut((r.start, r.start), (r.len(), r.len())).copy_from(&blk);
    }
    let ninv = spd_inverse(&n, "Σ_{n_S̄}")?;
    let eye = Mat::identity(n.nrows(), n.nrows());
    let inner = &ninv * (eye - &lambda * &ninv);
    let j = spd_inverse(&model.sigma_x, "Σ_x")? + h.transpose() * inner * &h;
    Ok(sym(&j))
}

/// Independent-noise specialization: Σ_x^{-1} + H0†Σ0^{-1}H0 + Σ_{k∈S^c} H_k†Ω_kH_k.
pub fn posterior_precision_independent(model: &GaussCeoModel, omega: &OmegaSet, subset: &SubsetSpec) -> Result<Mat> {
    if model.noise_coupling.is_some() {
        return Err(Error::InvalidModel("independent-noise formula on a coupled model".into()));
    }
    omega.check_admissible(model)?;
    let mut j = spd_inverse(&model.sigma_x, "Σ_x")?;
    if model.n0() > 0 {
        j += model.h0.transpose() * spd_inverse(&model.sigma0, "Σ_0")? * &model.h0;
    }
    for k in subset.complement() {
        let h = &model.agents[k].h;
        j += h.transpose() * &omega.omegas[k] * h;
    }
    Ok(sym(&j))
}

/// U_k = A_k Y_k + Z_k with Z_k ~ N(0, Σ_{z_k}).
#[derive(Clone, Debug, PartialEq)]
pub struct TestChannel {
    pub a: Mat,
    pub sigma_z: Mat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussTestChannels {
    pub channels: Vec<TestChannel>,
}

#[derive(Serialize, Deserialize)]
struct RawChannel {
    a: Vec<Vec<f64>>,
    sigma_z: Vec<Vec<f64>>,
}

impl Serialize for GaussTestChannels {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<RawChannel> = self.channels.iter().map(|c| RawChannel { a: to_rows(&c.a), sigma_z: to_rows(&c.sigma_z) }).collect();
        raw.serialize(s)
    }
}

impl GaussTestChannels {
    pub fn check(&self, model: &GaussCeoModel) -> Result<()> {
        if self.channels.len() != model.k() {
            return Err(Error::ShapeMismatch(format!("{} channels for {} agents", self.channels.len(), model.k())));
        }
        for (k, c) in self.channels.iter().enumerate() {
            if c.a.ncols() != model.nk(k) || c.sigma_z.nrows() != c.a.nrows() || c.sigma_z.ncols() != c.a.nrows() {
                return Err(Error::ShapeMismatch(format!("channel {k} dimensions")));
            }
            if min_eig(&c.sigma_z) < -PSD_TOL {
                return Err(Error::InvalidParam(format!("channel {k}: Σ_z is not PSD")));
            }
        }
        Ok(())
    }
}

/// Covariance over (X, Y0, Y1, …, YK, U1, …, UK) and its layout.
pub fn augmented_cov(model: &GaussCeoModel, channels: &GaussTestChannels) -> Result<(Mat, Layout)> {
    channels.check(model)?;
    let base = model.joint_cov();
    let mut lay = model.layout();
    let nb = lay.dim;
    let mu: usize = channels.channels.iter().map(|c| c.a.nrows()).sum();
    // U = G·W + Z where W is the base vector and G selects and maps each Y_k
    let mut g = Mat::zeros(mu, nb);
    let mut zc = Mat::zeros(mu, mu);
    let mut at = 0;
    for (k, c) in channels.channels.iter().enumerate() {
        let m = c.a.nrows();
        g.view_mut((at, lay.y[k].start), (m, lay.y[k].len())).copy_from(&c.a);
        zc.view_mut((at, at), (m, m)).copy_from(&c.sigma_z);
        lay.u.push(nb + at..nb + at + m);
        at += m;
    }
    let cross = &g * &base;
    let mut out = Mat::zeros(nb + mu, nb + mu);
    out.view_mut((0, 0), (nb, nb)).copy_from(&base);
    out.view_mut((nb, 0), (mu, nb)).copy_from(&cross);
    out.view_mut((0, nb), (nb, mu)).copy_from(&cross.transpose());
    out.view_mut((nb, nb), (mu, mu)).copy_from(&(&cross * g.transpose() + zc));
    lay.dim = nb + mu;
    Ok((sym(&out), lay))
}

/// Ω_k = Σ_k^{-1}(Σ_k − mmse(Y_k | X, U_k, Y0))Σ_k^{-1}, the mmse taken by
/// conditioning the joint law induced by the test channel.
pub fn omega_from_channel(model: &GaussCeoModel, channels: &GaussTestChannels, k: usize) -> Result<Mat> {
    let (c, lay) = augmented_cov(model, channels)?;
    let mmse = cond_cov(&c, &idx(&[&lay.y[k]]), &idx(&[&lay.x, &lay.u[k], &lay.y0]))?;
    let s = &model.agents[k].sigma;
    let si = spd_inverse(s, &format!("Σ_{}", k + 1))?;
    Ok(sym(&(&si * (s - mmse) * &si)))
}

/// Closed form of the same map: A†(A Σ_k A† + Σ_z)^{-1} A.
pub fn omega_from_channel_closed_form(model: &GaussCeoModel, channel: &TestChannel, k: usize) -> Result<Mat> {
    let s = &model.agents[k].sigma;
    let m = &channel.a * s * channel.a.transpose() + &channel.sigma_z;
    Ok(sym(&(channel.a.transpose() * spd_inverse(&m, "A Σ A† + Σ_z")? * &channel.a)))
}

/// Test channels (Σ_z = I) whose induced Ω equals `omega`, eigenvalues of
/// T_k clipped to [0, 1 − 1e-9].
pub fn channels_from_omega(model: &GaussCeoModel, omega: &OmegaSet) -> Result<GaussTestChannels> {
    omega.check_admissible(model)?;
    let ts = omega.to_t(model);
    let channels = ts
        .iter()
        .zip(&model.agents)
        .enumerate()
        .map(|(k, (t, a))| {
            let e = eigen_sym(t);
            let d = e.eigenvalues.map(|l| {
                let l = l.clamp(0.0, 1.0 - ADMISSIBLE_SLACK);
                (l / (1.0 - l)).sqrt()
            });
            let ir = inv_sqrtm_pd(&a.sigma, &format!("Σ_{}", k + 1))?;
            let am = Mat::from_diagonal(&d) * e.eigenvectors.transpose() * ir;
            let n = am.nrows();
            Ok(TestChannel { a: am, sigma_z: Mat::identity(n, n) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GaussTestChannels { channels })
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> Mat {
    Mat::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// A random well-conditioned covariance: W Wᵀ / n + I / 2.
pub fn random_cov<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Mat {
    let w = gaussian_matrix(rng, n, n);
    sym(&((&w * w.transpose()) / n as f64 + Mat::identity(n, n) * 0.5))
}

/// Random model with standard-normal observation matrices. With `coupled`,
/// agent noises are correlated with the decoder noise through
/// N_k = C_k N0 + Ñ_k, which keeps them conditionally independent given N0.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, nx: usize, n0: usize, nks: &[usize], coupled: bool) -> Result<GaussCeoModel> {
    let sigma_x = random_cov(rng, nx);
    let h0 = gaussian_matrix(rng, n0, nx);
    let sigma0 = random_cov(rng, n0);
    let mut agents = Vec::new();
    let mut mixes = Vec::new();
    for &nk in nks {
        agents.push(AgentObs { h: gaussian_matrix(rng, nk, nx), sigma: random_cov(rng, nk) });
        mixes.push(if coupled { gaussian_matrix(rng, nk, n0) * 0.5 } else { Mat::zeros(nk, n0) });
    }
    let coupling = if coupled && n0 > 0 {
        let mut m = vstack(&[&Mat::identity(n0, n0)], n0);
        for c in &mixes {
            m = vstack(&[&m, c], n0);
        }
        let mut sig = vec![&sigma0];
        sig.extend(agents.iter().map(|a| &a.sigma));
        // cov = M Σ0 Mᵀ + diag(0, Σ̃_k)
        let mut resid = block_diag(&sig);
        resid.view_mut((0, 0), (n0, n0)).fill(0.0);
        Some(sym(&(&m * &sigma0 * m.transpose() + resid)))
    } else {
        None
    };
    GaussCeoModel::new(sigma_x, h0, sigma0, agents, coupling)
}

/// Random Ω with T_k eigenvalues uniform in [0, 0.99).
pub fn random_omega<R: Rng + ?Sized>(rng: &mut R, model: &GaussCeoModel) -> Result<OmegaSet> {
    let ts: Vec<Mat> = (0..model.k())
        .map(|k| {
            let n = model.nk(k);
            let q = gaussian_matrix(rng, n, n).qr().q();
            let d = Mat::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.gen_range(0.0..0.99)));
            sym(&(&q * d * q.transpose()))
        })
        .collect();
    OmegaSet::from_t(model, &ts)
}
