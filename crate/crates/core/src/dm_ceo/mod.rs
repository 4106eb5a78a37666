//! Blahut–Arimoto style alternating minimization for the discrete two-agent
//! CEO problem with decoder side information, and assembly of the region
//! from the swept boundary points.

mod hull;

pub use hull::{assemble_region, lp_min_distortion, HullKind, RegionHull};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probcore::{kl_unchecked, CondTable, JointSourcePmf, Pmf, AX_X, AX_Y0};
use crate::region::{Permutation, PointKind, RegionPoint};

const MARKOV_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffParams {
    pub s1: f64,
    pub s2: f64,
}

impl TradeoffParams {
    pub fn new(s1: f64, s2: f64) -> Result<Self> {
        let t = TradeoffParams { s1, s2 };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s1 > 0.0 && self.s1 <= 1.0) {
            return Err(Error::InvalidParam(format!("s1 = {} must lie in (0, 1]", self.s1)));
        }
        if !(self.s2 > 0.0 && self.s2.is_finite()) {
            return Err(Error::InvalidParam(format!("s2 = {} must be positive", self.s2)));
        }
        Ok(())
    }

    fn s_k(&self, k: usize) -> f64 {
        if k == 1 {
            self.s1
        } else {
            self.s2
        }
    }
}

/// The encoders' test channels p(u1|y1), p(u2|y2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxChannelSet {
    pub p_u1_given_y1: CondTable,
    pub p_u2_given_y2: CondTable,
}

impl AuxChannelSet {
    pub fn swapped(&self) -> AuxChannelSet {
        AuxChannelSet { p_u1_given_y1: self.p_u2_given_y2.clone(), p_u2_given_y2: self.p_u1_given_y1.clone() }
    }

    pub fn constant(n1: usize, n2: usize) -> AuxChannelSet {
        AuxChannelSet {
            p_u1_given_y1: CondTable::constant_rows(n1, &[1.0]).expect("unit row"),
            p_u2_given_y2: CondTable::constant_rows(n2, &[1.0]).expect("unit row"),
        }
    }

    pub fn identity(n1: usize, n2: usize) -> AuxChannelSet {
        AuxChannelSet { p_u1_given_y1: CondTable::identity(n1), p_u2_given_y2: CondTable::identity(n2) }
    }

    fn random(n: [usize; 2], m: [usize; 2], rng: &mut ChaCha8Rng) -> AuxChannelSet {
        AuxChannelSet {
            p_u1_given_y1: CondTable::random(n[0], m[0], rng),
            p_u2_given_y2: CondTable::random(n[1], m[1], rng),
        }
    }

    fn check(&self, joint: &JointSourcePmf) -> Result<()> {
        let [_, _, n1, n2] = joint.dims();
        if self.p_u1_given_y1.rows() != n1 || self.p_u2_given_y2.rows() != n2 {
            return Err(Error::ShapeMismatch(format!(
                "channels have {} and {} rows, alphabets are {n1} and {n2}",
                self.p_u1_given_y1.rows(),
                self.p_u2_given_y2.rows()
            )));
        }
        Ok(())
    }
}

/// Distributions induced by the source and the current channels.
#[derive(Clone, Debug)]
pub struct InducedDistributions {
    /// p(x, y0), index x·|Y0| + y0.
    pub p_xy0: Vec<f64>,
    pub p_u1: Vec<f64>,
    pub p_u2: Vec<f64>,
    /// Rows y0.
    pub p_u1_given_y0: CondTable,
    pub p_u2_given_y0: CondTable,
    /// Rows x·|Y0| + y0.
    pub p_u1_given_xy0: CondTable,
    pub p_u2_given_xy0: CondTable,
    /// Rows (u1·|U2| + u2)·|Y0| + y0, columns x.
    pub p_x_given_u1u2y0: CondTable,
}

/// The auxiliary tables Q held fixed during a channel update.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxPriorSet {
    pub q_u1: Vec<f64>,
    pub q_u2: Vec<f64>,
    /// Rows (u1·|U2| + u2)·|Y0| + y0, columns x.
    pub q_x_given_u1u2y0: CondTable,
    /// Rows u1·|Y0| + y0, columns x.
    pub q_x_given_u1y0: CondTable,
    pub q_x_given_u2y0: CondTable,
    /// Rows u_k, columns y0.
    pub q_y0_given_u1: CondTable,
    pub q_y0_given_u2: CondTable,
}

impl AuxPriorSet {
    /// Same priors seen from the problem with agents 1 and 2 exchanged.
    pub fn swapped(&self) -> AuxPriorSet {
        let (m1, m2) = (self.q_u1.len(), self.q_u2.len());
        let t = &self.q_x_given_u1u2y0;
        let n0 = t.rows() / (m1 * m2);
        let nx = t.cols();
        let mut data = vec![0.0; t.data().len()];
        for u1 in 0..m1 {
            for u2 in 0..m2 {
                for y0 in 0..n0 {
                    let src = (u1 * m2 + u2) * n0 + y0;
                    let dst = (u2 * m1 + u1) * n0 + y0;
                    data[dst * nx..(dst + 1) * nx].copy_from_slice(t.row(src));
                }
            }
        }
        AuxPriorSet {
            q_u1: self.q_u2.clone(),
            q_u2: self.q_u1.clone(),
            q_x_given_u1u2y0: CondTable::normalize_rows(data, nx),
            q_x_given_u1y0: self.q_x_given_u2y0.clone(),
            q_x_given_u2y0: self.q_x_given_u1y0.clone(),
            q_y0_given_u1: self.q_y0_given_u2.clone(),
            q_y0_given_u2: self.q_y0_given_u1.clone(),
        }
    }
}

pub fn induced_distributions(joint: &JointSourcePmf, channels: &AuxChannelSet) -> Result<InducedDistributions> {
    channels.check(joint)?;
    let [nx, n0, n1, n2] = joint.dims();
    let (c1, c2) = (&channels.p_u1_given_y1, &channels.p_u2_given_y2);
    let (m1, m2) = (c1.cols(), c2.cols());

    // p(x, y0, y1) and p(x, y0, y2)
    let mut pxy0y1 = vec![0.0; nx * n0 * n1];
    let mut pxy0y2 = vec![0.0; nx * n0 * n2];
    for x in 0..nx {
        for y0 in 0..n0 {
            for a in 0..n1 {
                for b in 0..n2 {
                    let v = joint.at(x, y0, a, b);
                    pxy0y1[(x * n0 + y0) * n1 + a] += v;
                    pxy0y2[(x * n0 + y0) * n2 + b] += v;
                }
            }
        }
    }
    let p_xy0: Vec<f64> = (0..nx * n0).map(|r| pxy0y1[r * n1..(r + 1) * n1].iter().sum()).collect();

    // joint weights p(x, y0, u_k), normalized per (x, y0)
    let mut w1 = vec![0.0; nx * n0 * m1];
    let mut w2 = vec![0.0; nx * n0 * m2];
    for r in 0..nx * n0 {
        for a in 0..n1 {
            let p = pxy0y1[r * n1 + a];
            for u in 0..m1 {
                w1[r * m1 + u] += p * c1.get(a, u);
            }
        }
        for b in 0..n2 {
            let p = pxy0y2[r * n2 + b];
            for u in 0..m2 {
                w2[r * m2 + u] += p * c2.get(b, u);
            }
        }
    }
    let sum_over_x = |w: &[f64], m: usize| {
        let mut out = vec![0.0; n0 * m];
        for x in 0..nx {
            for y0 in 0..n0 {
                for u in 0..m {
                    out[y0 * m + u] += w[(x * n0 + y0) * m + u];
                }
            }
        }
        out
    };
    let w1_y0 = sum_over_x(&w1, m1);
    let w2_y0 = sum_over_x(&w2, m2);
    let p_u1: Vec<f64> = (0..m1).map(|u| (0..n0).map(|y0| w1_y0[y0 * m1 + u]).sum()).collect();
    let p_u2: Vec<f64> = (0..m2).map(|u| (0..n0).map(|y0| w2_y0[y0 * m2 + u]).sum()).collect();
    let p_u1_given_xy0 = CondTable::normalize_rows(w1, m1);
    let p_u2_given_xy0 = CondTable::normalize_rows(w2, m2);

    let mut post = vec![0.0; m1 * m2 * n0 * nx];
    for u1 in 0..m1 {
        for u2 in 0..m2 {
            for y0 in 0..n0 {
                let row = (u1 * m2 + u2) * n0 + y0;
                for x in 0..nx {
                    let r = x * n0 + y0;
                    post[row * nx + x] = p_u1_given_xy0.get(r, u1) * p_u2_given_xy0.get(r, u2) * p_xy0[r];
                }
            }
        }
    }

    Ok(InducedDistributions {
        p_u1,
        p_u2,
        p_u1_given_y0: CondTable::normalize_rows(w1_y0, m1),
        p_u2_given_y0: CondTable::normalize_rows(w2_y0, m2),
        p_u1_given_xy0,
        p_u2_given_xy0,
        p_x_given_u1u2y0: CondTable::normalize_rows(post, nx),
        p_xy0,
    })
}

/// Q-step: every auxiliary table becomes the corresponding induced law.
pub fn update_q(ind: &InducedDistributions) -> AuxPriorSet {
    let n0 = ind.p_u1_given_y0.rows();
    let nx = ind.p_xy0.len() / n0;
    let p_y0: Vec<f64> = (0..n0).map(|y0| (0..nx).map(|x| ind.p_xy0[x * n0 + y0]).sum()).collect();

    let x_given_uy0 = |given_xy0: &CondTable| {
        let m = given_xy0.cols();
        let mut w = vec![0.0; m * n0 * nx];
        for u in 0..m {
            for y0 in 0..n0 {
                for x in 0..nx {
                    let r = x * n0 + y0;
                    w[(u * n0 + y0) * nx + x] = given_xy0.get(r, u) * ind.p_xy0[r];
                }
            }
        }
        CondTable::normalize_rows(w, nx)
    };
    let y0_given_u = |given_y0: &CondTable| {
        let m = given_y0.cols();
        let mut w = vec![0.0; m * n0];
        for u in 0..m {
            for y0 in 0..n0 {
                w[u * n0 + y0] = given_y0.get(y0, u) * p_y0[y0];
            }
        }
        CondTable::normalize_rows(w, n0)
    };

    AuxPriorSet {
        q_u1: ind.p_u1.clone(),
        q_u2: ind.p_u2.clone(),
        q_x_given_u1u2y0: ind.p_x_given_u1u2y0.clone(),
        q_x_given_u1y0: x_given_uy0(&ind.p_u1_given_xy0),
        q_x_given_u2y0: x_given_uy0(&ind.p_u2_given_xy0),
        q_y0_given_u1: y0_given_u(&ind.p_u1_given_y0),
        q_y0_given_u2: y0_given_u(&ind.p_u2_given_y0),
    }
}

/// ψ_1 for the problem as oriented; `other` is the channel of agent 2.
/// Rows y1, columns u1. Entries may be +∞.
fn psi_agent1(joint: &JointSourcePmf, other: &CondTable, q: &AuxPriorSet, c_joint: f64, c_single: f64) -> Vec<f64> {
    let [nx, n0, n1, n2] = joint.dims();
    let m1 = q.q_u1.len();
    let m2 = other.cols();
    let mut psi = vec![0.0; n1 * m1];
    let mut w = vec![0.0; m2 * n0 * nx];
    let mut pxy0 = vec![0.0; n0 * nx];
    let mut buf = vec![0.0; nx];
    for y1 in 0..n1 {
        w.iter_mut().for_each(|v| *v = 0.0);
        pxy0.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..nx {
            for y0 in 0..n0 {
                for y2 in 0..n2 {
                    let p = joint.at(x, y0, y1, y2);
                    if p == 0.0 {
                        continue;
                    }
                    pxy0[y0 * nx + x] += p;
                    for u2 in 0..m2 {
                        w[(u2 * n0 + y0) * nx + x] += p * other.get(y2, u2);
                    }
                }
            }
        }
        let py1: f64 = pxy0.iter().sum();
        if py1 <= 0.0 {
            continue;
        }
        let py0: Vec<f64> = (0..n0).map(|y0| pxy0[y0 * nx..(y0 + 1) * nx].iter().sum::<f64>() / py1).collect();
        for u1 in 0..m1 {
            let mut a = 0.0;
            if c_joint != 0.0 {
                for u2 in 0..m2 {
                    for y0 in 0..n0 {
                        let cell = &w[(u2 * n0 + y0) * nx..(u2 * n0 + y0 + 1) * nx];
                        let mass: f64 = cell.iter().sum();
                        if mass <= 0.0 {
                            continue;
                        }
                        buf.iter_mut().zip(cell).for_each(|(b, c)| *b = c / mass);
                        let qrow = q.q_x_given_u1u2y0.row((u1 * m2 + u2) * n0 + y0);
                        a += mass / py1 * kl_unchecked(&buf, qrow);
                    }
                }
            }
            let mut b = 0.0;
            for y0 in 0..n0 {
                if py0[y0] <= 0.0 {
                    continue;
                }
                let cell = &pxy0[y0 * nx..(y0 + 1) * nx];
                let mass = py0[y0] * py1;
                buf.iter_mut().zip(cell).for_each(|(b, c)| *b = c / mass);
                b += py0[y0] * kl_unchecked(&buf, q.q_x_given_u1y0.row(u1 * n0 + y0));
            }
            let c = kl_unchecked(&py0, q.q_y0_given_u1.row(u1));
            let mut v = c;
            if c_joint != 0.0 {
                v += c_joint * a;
            }
            if c_single != 0.0 {
                v += c_single * b;
            }
            psi[y1 * m1 + u1] = v;
        }
    }
    psi
}

/// ψ_k(u_k, y_k) as a table with rows y_k, columns u_k; may hold +∞.
fn psi_unchecked(joint: &JointSourcePmf, channels: &AuxChannelSet, q: &AuxPriorSet, k: usize, s: TradeoffParams) -> Vec<f64> {
    let sk = s.s_k(k);
    let c_joint = (1.0 - s.s1) / sk;
    let c_single = s.s1 / sk;
    if k == 1 {
        psi_agent1(joint, &channels.p_u2_given_y2, q, c_joint, c_single)
    } else {
        psi_agent1(&joint.swap_agents(), &channels.p_u1_given_y1, &q.swapped(), c_joint, c_single)
    }
}

/// ψ_k(u_k, y_k) (rows y_k, columns u_k). An infinite entry is an error.
pub fn psi(joint: &JointSourcePmf, channels: &AuxChannelSet, q: &AuxPriorSet, k: usize, s: TradeoffParams) -> Result<PsiTable> {
    if k != 1 && k != 2 {
        return Err(Error::InvalidParam(format!("agent index {k} (expected 1 or 2)")));
    }
    s.validate()?;
    channels.check(joint)?;
    let m = if k == 1 { q.q_u1.len() } else { q.q_u2.len() };
    let t = psi_unchecked(joint, channels, q, k, s);
    if let Some(i) = t.iter().position(|v| !v.is_finite()) {
        return Err(Error::InfinitePsi { k, u: i % m, y: i / m });
    }
    Ok(PsiTable { rows: t.len() / m, cols: m, data: t })
}

/// A plain row-major matrix of reals (not normalized).
#[derive(Clone, Debug, PartialEq)]
pub struct PsiTable {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl PsiTable {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// P-step for one agent: p(u|y) ∝ q(u) exp(−ψ(u, y)), normalized in the log domain.
pub fn update_p(q_u: &[f64], psi: &PsiTable) -> CondTable {
    CondTable::normalize_rows(gibbs_rows(q_u, &psi.data), psi.cols)
}

fn gibbs_rows(q_u: &[f64], psi: &[f64]) -> Vec<f64> {
    let m = q_u.len();
    let mut out = vec![0.0; psi.len()];
    let mut logits = vec![0.0; m];
    for (r, row) in psi.chunks(m).enumerate() {
        for u in 0..m {
            logits[u] = if q_u[u] > 0.0 && row[u].is_finite() { q_u[u].ln() - row[u] } else { f64::NEG_INFINITY };
        }
        let mx = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if mx == f64::NEG_INFINITY {
            continue; // left all-zero: normalize_rows makes it uniform and flags it
        }
        for u in 0..m {
            out[r * m + u] = (logits[u] - mx).exp();
        }
    }
    out
}

/// Joint law of (X, Y0, Y1, Y2, U1, U2) as a 6-axis pmf.
pub fn extended_joint(joint: &JointSourcePmf, channels: &AuxChannelSet) -> Result<Pmf> {
    channels.check(joint)?;
    let [nx, n0, n1, n2] = joint.dims();
    let (c1, c2) = (&channels.p_u1_given_y1, &channels.p_u2_given_y2);
    let (m1, m2) = (c1.cols(), c2.cols());
    let mut t = Vec::with_capacity(joint.table().len() * m1 * m2);
    for x in 0..nx {
        for y0 in 0..n0 {
            for a in 0..n1 {
                for b in 0..n2 {
                    let p = joint.at(x, y0, a, b);
                    for u1 in 0..m1 {
                        for u2 in 0..m2 {
                            t.push(p * c1.get(a, u1) * c2.get(b, u2));
                        }
                    }
                }
            }
        }
    }
    let s: f64 = t.iter().sum();
    t.iter_mut().for_each(|v| *v /= s);
    Pmf::new(vec![nx, n0, n1, n2, m1, m2], t)
}

const E_X: usize = 0;
const E_Y0: usize = 1;
const E_Y1: usize = 2;
const E_Y2: usize = 3;
const E_U1: usize = 4;
const E_U2: usize = 5;

/// (R1, R2, D) = (I(Y1;U1|U2,Y0), I(Y2;U2|Y0), H(X|U1,U2,Y0)).
pub fn rate_distortion_triple(joint: &JointSourcePmf, channels: &AuxChannelSet) -> Result<[f64; 3]> {
    let e = extended_joint(joint, channels)?;
    let d = e.cond_entropy(&[E_X], &[E_U1, E_U2, E_Y0])?;
    let r1 = e.cond_mutual_info(&[E_Y1], &[E_U1], &[E_U2, E_Y0])?;
    let r2 = e.cond_mutual_info(&[E_Y2], &[E_U2], &[E_Y0])?;
    Ok([r1, r2, d])
}

/// F_s(P) = H(X|U1,U2,Y0) + s1·I(Y1;U1|U2,Y0) + s2·I(Y2;U2|Y0).
pub fn objective(joint: &JointSourcePmf, channels: &AuxChannelSet, s: TradeoffParams) -> Result<f64> {
    let [r1, r2, d] = rate_distortion_triple(joint, channels)?;
    Ok(d + s.s1 * r1 + s.s2 * r2)
}

fn neg_ln(q: f64) -> f64 {
    if q > 0.0 {
        -q.ln()
    } else {
        f64::INFINITY
    }
}

/// Weighted −Σ w ln q over the cells where w > 0.
fn cross(w: f64, q: f64) -> f64 {
    if w > 0.0 {
        w * neg_ln(q)
    } else {
        0.0
    }
}

/// F_s(P, Q): every entropy of F_s(P) replaced by a cross-entropy against Q,
/// and every I(Y_k; U_k) by the divergence to Q_{U_k}.
pub fn objective_variational(joint: &JointSourcePmf, channels: &AuxChannelSet, q: &AuxPriorSet, s: TradeoffParams) -> Result<f64> {
    channels.check(joint)?;
    let [nx, n0, n1, n2] = joint.dims();
    let (c1, c2) = (&channels.p_u1_given_y1, &channels.p_u2_given_y2);
    let (m1, m2) = (c1.cols(), c2.cols());
    let pm = joint.pmf();
    let h_x_y0 = pm.cond_entropy(&[AX_X], &[AX_Y0])?;
    let h_y0 = pm.entropy_of_axes(&[AX_Y0])?;
    let mut f = -s.s1 * h_x_y0 - (s.s1 + s.s2) * h_y0;

    let mut acc = 0.0;
    for x in 0..nx {
        for y0 in 0..n0 {
            for a in 0..n1 {
                for b in 0..n2 {
                    let p = joint.at(x, y0, a, b);
                    if p == 0.0 {
                        continue;
                    }
                    let mut t = 0.0;
                    if s.s1 != 1.0 {
                        let mut j = 0.0;
                        for u1 in 0..m1 {
                            for u2 in 0..m2 {
                                let w = c1.get(a, u1) * c2.get(b, u2);
                                j += cross(w, q.q_x_given_u1u2y0.get((u1 * m2 + u2) * n0 + y0, x));
                            }
                        }
                        t += (1.0 - s.s1) * j;
                    }
                    for u1 in 0..m1 {
                        let w = c1.get(a, u1);
                        t += s.s1 * cross(w, q.q_x_given_u1y0.get(u1 * n0 + y0, x));
                        t += s.s1 * cross(w, q.q_y0_given_u1.get(u1, y0));
                    }
                    for u2 in 0..m2 {
                        let w = c2.get(b, u2);
                        t += s.s1 * cross(w, q.q_x_given_u2y0.get(u2 * n0 + y0, x));
                        t += s.s2 * cross(w, q.q_y0_given_u2.get(u2, y0));
                    }
                    acc += p * t;
                }
            }
        }
    }
    f += acc;
    let py1 = pm.marginal(&[2])?;
    let py2 = pm.marginal(&[3])?;
    for (a, &p) in py1.table().iter().enumerate() {
        if p > 0.0 {
            f += s.s1 * p * kl_unchecked(c1.row(a), &q.q_u1);
        }
    }
    for (b, &p) in py2.table().iter().enumerate() {
        if p > 0.0 {
            f += s.s2 * p * kl_unchecked(c2.row(b), &q.q_u2);
        }
    }
    Ok(f)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaConfig {
    /// |U1|, |U2|; `None` means |Y_k|.
    pub u_card: [Option<usize>; 2],
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for BaConfig {
    fn default() -> Self {
        BaConfig { u_card: [None, None], tol: 1e-6, max_iter: 2000, restarts: 5, seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BaResult {
    pub channels: AuxChannelSet,
    pub objective: f64,
    pub point: RegionPoint,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    /// Variational objective after each half-step of the winning restart:
    /// Q update, agent-1 update, agent-2 update, Q update, ...
    pub trace: Vec<f64>,
}

struct SingleRun {
    channels: AuxChannelSet,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn ba_single(joint: &JointSourcePmf, s: TradeoffParams, cfg: &BaConfig, init: AuxChannelSet) -> Result<SingleRun> {
    let mut ch = init;
    let mut trace = Vec::with_capacity(3 * cfg.max_iter.min(4096));
    let mut prev = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let swapped = joint.swap_agents();
    for it in 1..=cfg.max_iter {
        iterations = it;
        let q = update_q(&induced_distributions(joint, &ch)?);
        let f_tight = objective_variational(joint, &ch, &q, s)?;
        trace.push(f_tight);
        if (prev - f_tight).abs() <= cfg.tol {
            converged = true;
            break;
        }
        prev = f_tight;

        let psi1 = psi_agent1(joint, &ch.p_u2_given_y2, &q, (1.0 - s.s1) / s.s1, 1.0);
        ch.p_u1_given_y1 = CondTable::normalize_rows(gibbs_rows(&q.q_u1, &psi1), q.q_u1.len());
        trace.push(objective_variational(joint, &ch, &q, s)?);

        let qs = q.swapped();
        let psi2 = psi_agent1(&swapped, &ch.p_u1_given_y1, &qs, (1.0 - s.s1) / s.s2, s.s1 / s.s2);
        ch.p_u2_given_y2 = CondTable::normalize_rows(gibbs_rows(&q.q_u2, &psi2), q.q_u2.len());
        trace.push(objective_variational(joint, &ch, &q, s)?);
    }
    let objective = objective(joint, &ch, s)?;
    Ok(SingleRun { channels: ch, objective, iterations, converged, trace })
}

fn check_markov(joint: &JointSourcePmf) -> Result<()> {
    let gap = joint.markov_gap();
    if gap > MARKOV_TOL {
        return Err(Error::NotMarkov(gap));
    }
    Ok(())
}

fn validate_config(cfg: &BaConfig) -> Result<()> {
    if cfg.restarts == 0 || cfg.max_iter == 0 || !(cfg.tol >= 0.0) {
        return Err(Error::InvalidParam("BA config needs restarts ≥ 1, max_iter ≥ 1, tol ≥ 0".into()));
    }
    if cfg.u_card.iter().any(|c| *c == Some(0)) {
        return Err(Error::InvalidParam("auxiliary cardinality must be ≥ 1".into()));
    }
    Ok(())
}

/// Runs the alternating minimization from `cfg.restarts` random starts and
/// keeps the lowest objective.
pub fn run_ba(joint: &JointSourcePmf, s: TradeoffParams, cfg: &BaConfig) -> Result<BaResult> {
    s.validate()?;
    validate_config(cfg)?;
    check_markov(joint)?;
    let [_, _, n1, n2] = joint.dims();
    let m = [cfg.u_card[0].unwrap_or(n1), cfg.u_card[1].unwrap_or(n2)];
    let mut best: Option<SingleRun> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let init = AuxChannelSet::random([n1, n2], m, &mut rng);
        let run = ba_single(joint, s, cfg, init)?;
        if best.as_ref().map_or(true, |b| run.objective < b.objective - 1e-12) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let [r1, r2, d] = rate_distortion_triple(joint, &best.channels)?;
    Ok(BaResult {
        point: RegionPoint::distortion(vec![r1, r2], d, Permutation::Rd1),
        channels: best.channels,
        objective: best.objective,
        iterations: best.iterations,
        converged: best.converged,
        restarts_used: cfg.restarts,
        trace: best.trace,
    })
}

/// BA for either decoding order. For `Rd2` the agents are swapped, the
/// solver runs, and the result is mapped back to the original labels.
pub fn run_ba_permuted(joint: &JointSourcePmf, s: TradeoffParams, cfg: &BaConfig, perm: Permutation) -> Result<BaResult> {
    match perm {
        Permutation::Rd1 => run_ba(joint, s, cfg),
        Permutation::Rd2 => {
            let cfg2 = BaConfig { u_card: [cfg.u_card[1], cfg.u_card[0]], ..*cfg };
            let mut res = run_ba(&joint.swap_agents(), s, &cfg2)?;
            res.channels = res.channels.swapped();
            res.point.rates.swap(0, 1);
            res.point.permutation = Permutation::Rd2;
            Ok(res)
        }
    }
}

/// Exhaustive minimum of F_s over a lattice of channel entries with
/// `steps` levels per free parameter (denominator `steps − 1`).
pub fn oracle_min(joint: &JointSourcePmf, s: TradeoffParams, u_card: [usize; 2], steps: usize) -> Result<f64> {
    s.validate()?;
    check_markov(joint)?;
    if steps < 2 {
        return Err(Error::InvalidParam("oracle needs at least 2 quantization steps".into()));
    }
    let [_, _, n1, n2] = joint.dims();
    let params = n1 * (u_card[0] - 1) + n2 * (u_card[1] - 1);
    if params > 8 {
        return Err(Error::OracleTooLarge { params });
    }
    let rows1 = simplex_lattice(u_card[0], steps - 1);
    let rows2 = simplex_lattice(u_card[1], steps - 1);
    let tables1 = product_tables(&rows1, n1);
    let tables2 = product_tables(&rows2, n2);
    let best = tables1
        .par_iter()
        .map(|t1| {
            let mut best = f64::INFINITY;
            for t2 in &tables2 {
                let ch = AuxChannelSet {
                    p_u1_given_y1: CondTable::normalize_rows(t1.clone(), u_card[0]),
                    p_u2_given_y2: CondTable::normalize_rows(t2.clone(), u_card[1]),
                };
                let f = objective(joint, &ch, s).unwrap_or(f64::INFINITY);
                best = best.min(f);
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best)
}

/// All points of the simplex in dimension `m` with coordinates in {0, 1/n, …, 1}.
fn simplex_lattice(m: usize, n: usize) -> Vec<Vec<f64>> {
    fn rec(m: usize, left: usize, n: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<f64>>) {
        if m == 1 {
            cur.push(left);
            out.push(cur.iter().map(|&c| c as f64 / n as f64).collect());
            cur.pop();
            return;
        }
        for c in 0..=left {
            cur.push(c);
            rec(m - 1, left - c, n, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, n, n, &mut Vec::new(), &mut out);
    out
}

/// Every table whose `rows` rows are drawn from `choices`, flattened.
fn product_tables(choices: &[Vec<f64>], rows: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..rows {
        out = out.iter().flat_map(|t| choices.iter().map(move |c| [t.as_slice(), c].concat())).collect();
    }
    out
}

/// Log-spaced grid of `n` points over [lo, hi].
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
        }
    }
}

pub fn default_s1_grid(n: usize) -> Vec<f64> {
    log_grid(1e-3, 1.0, n)
}

pub fn default_s2_grid(n: usize) -> Vec<f64> {
    log_grid(1e-3, 10.0, n)
}

#[derive(Debug)]
pub struct SweepCell {
    pub index: usize,
    pub s: TradeoffParams,
    pub permutation: Permutation,
    pub outcome: Result<BaResult>,
}

pub(crate) fn cell_seed(base: u64, index: usize) -> u64 {
    // splitmix64 of (base, index) so neighbouring cells get unrelated streams
    let mut z = base ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One BA run per (s1, s2) cell, s1 varying slowest. Cells run in parallel
/// on the current rayon pool; the output order is the grid order.
pub fn sweep(joint: &JointSourcePmf, s1_grid: &[f64], s2_grid: &[f64], cfg: &BaConfig, perm: Permutation) -> Result<Vec<SweepCell>> {
    if s1_grid.is_empty() || s2_grid.is_empty() {
        return Err(Error::InvalidParam("empty s-grid".into()));
    }
    let cells: Vec<(usize, f64, f64)> = s1_grid
        .iter()
        .flat_map(|&a| s2_grid.iter().map(move |&b| (a, b)))
        .enumerate()
        .map(|(i, (a, b))| (i, a, b))
        .collect();
    let out = cells
        .into_par_iter()
        .map(|(index, s1, s2)| {
            let s = TradeoffParams { s1, s2 };
            let cfg = BaConfig { seed: cell_seed(cfg.seed, index), ..*cfg };
            let outcome = s.validate().and_then(|_| run_ba_permuted(joint, s, &cfg, perm));
            SweepCell { index, s, permutation: perm, outcome }
        })
        .collect();
    Ok(out)
}

/// Points of the converged cells of a sweep.
pub fn sweep_points(cells: &[SweepCell]) -> Vec<RegionPoint> {
    cells.iter().filter_map(|c| c.outcome.as_ref().ok()).map(|r| r.point.clone()).collect()
}

/// Exactly evaluated corner points: constant channels (0, 0, H(X|Y0)) and
/// identity channels under both decoding orders.
pub fn anchor_points(joint: &JointSourcePmf) -> Result<Vec<RegionPoint>> {
    let [_, _, n1, n2] = joint.dims();
    let mut pts = Vec::new();
    let [r1, r2, d] = rate_distortion_triple(joint, &AuxChannelSet::constant(n1, n2))?;
    pts.push(RegionPoint::distortion(vec![r1, r2], d, Permutation::Rd1));
    let [r1, r2, d] = rate_distortion_triple(joint, &AuxChannelSet::identity(n1, n2))?;
    pts.push(RegionPoint::distortion(vec![r1, r2], d, Permutation::Rd1));
    let [r2, r1, d] = rate_distortion_triple(&joint.swap_agents(), &AuxChannelSet::identity(n2, n1))?;
    pts.push(RegionPoint::distortion(vec![r1, r2], d, Permutation::Rd2));
    Ok(pts)
}

/// Δ = H(X) − D.
pub fn to_information(point: &RegionPoint, joint: &JointSourcePmf) -> Result<RegionPoint> {
    if point.kind != PointKind::Distortion {
        return Err(Error::InvalidParam("point is already a relevance point".into()));
    }
    let hx = joint.pmf().entropy_of_axes(&[AX_X])?;
    Ok(point.flip_kind(hx))
}
