//! Dense probability tensors over finite alphabets and the information
//! measures built on them. Everything is in nats.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest alphabet product accepted for a dense tensor.
pub const MAX_CELLS: usize = 10_000_000;

const SUM_TOL: f64 = 1e-12;

/// A pmf over `dims.len()` finite axes, stored row-major (last axis fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPmf", into = "RawPmf")]
pub struct Pmf {
    dims: Vec<usize>,
    table: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawPmf {
    dims: Vec<usize>,
    table: Vec<f64>,
}

impl TryFrom<RawPmf> for Pmf {
    type Error = Error;
    fn try_from(raw: RawPmf) -> Result<Self> {
        Pmf::new(raw.dims, raw.table)
    }
}

impl From<Pmf> for RawPmf {
    fn from(p: Pmf) -> Self {
        RawPmf { dims: p.dims, table: p.table }
    }
}

fn cell_count(dims: &[usize]) -> Result<usize> {
    let mut n: usize = 1;
    for &d in dims {
        if d == 0 {
            return Err(Error::InvalidPmf("zero-sized axis".into()));
        }
        n = n.checked_mul(d).ok_or(Error::TooLarge(usize::MAX))?;
        if n > MAX_CELLS {
            return Err(Error::TooLarge(n));
        }
    }
    Ok(n)
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

impl Pmf {
    pub fn new(dims: Vec<usize>, table: Vec<f64>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidPmf("no axes".into()));
        }
        let n = cell_count(&dims)?;
        if table.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "dims {:?} need {} entries, table has {}",
                dims,
                n,
                table.len()
            )));
        }
        if let Some(bad) = table.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidPmf(format!("entry {bad} is not a finite nonnegative number")));
        }
        let total: f64 = table.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidPmf(format!("entries sum to {total}")));
        }
        Ok(Pmf { dims, table })
    }

    /// Builds a pmf from nonnegative weights, dividing by their sum.
    pub fn from_weights(dims: Vec<usize>, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidPmf("weights have no positive finite mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Pmf::new(dims, weights)
    }

    pub fn uniform(dims: Vec<usize>) -> Result<Self> {
        let n = cell_count(&dims)?;
        Pmf::new(dims, vec![1.0 / n as f64; n])
    }

    /// Flat-Dirichlet draw over all cells.
    pub fn random<R: Rng + ?Sized>(dims: Vec<usize>, rng: &mut R) -> Result<Self> {
        let n = cell_count(&dims)?;
        Pmf::from_weights(dims, dirichlet_flat(n, rng))
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let st = strides(&self.dims);
        self.table[idx.iter().zip(&st).map(|(i, s)| i * s).sum::<usize>()]
    }

    fn check_axes(&self, sets: &[&[usize]]) -> Result<()> {
        let mut seen = vec![false; self.ndim()];
        for set in sets {
            for &a in *set {
                if a >= self.ndim() {
                    return Err(Error::AxisOutOfRange { axis: a, ndim: self.ndim() });
                }
                if seen[a] {
                    return Err(Error::RepeatedAxis(a));
                }
                seen[a] = true;
            }
        }
        Ok(())
    }

    /// Sums out every axis not in `keep`; output axes follow the order of `keep`.
    pub fn marginal(&self, keep: &[usize]) -> Result<Pmf> {
        if keep.is_empty() {
            return Err(Error::EmptyAxisSet);
        }
        self.check_axes(&[keep])?;
        let out_dims: Vec<usize> = keep.iter().map(|&a| self.dims[a]).collect();
        let out = self.project(keep, &out_dims);
        Ok(Pmf { dims: out_dims, table: out })
    }

    /// Accumulates the table onto the axes `keep` (which may be empty: a scalar).
    fn project(&self, keep: &[usize], out_dims: &[usize]) -> Vec<f64> {
        let out_strides = strides(out_dims);
        let mut map = vec![0usize; self.ndim()];
        for (pos, &a) in keep.iter().enumerate() {
            map[a] = out_strides[pos];
        }
        let mut out = vec![0.0; out_dims.iter().product()];
        let mut idx = vec![0usize; self.ndim()];
        let mut o = 0usize;
        for &v in &self.table {
            out[o] += v;
            // odometer increment, tracking the output offset incrementally
            for ax in (0..self.ndim()).rev() {
                idx[ax] += 1;
                o += map[ax];
                if idx[ax] < self.dims[ax] {
                    break;
                }
                o -= map[ax] * idx[ax];
                idx[ax] = 0;
            }
        }
        out
    }

    /// p(target | given) as a table with one row per `given` cell.
    pub fn conditional(&self, target: &[usize], given: &[usize]) -> Result<CondTable> {
        if target.is_empty() {
            return Err(Error::EmptyAxisSet);
        }
        self.check_axes(&[target, given])?;
        let axes: Vec<usize> = given.iter().chain(target).copied().collect();
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        let joint = self.project(&axes, &dims);
        let cols: usize = target.iter().map(|&a| self.dims[a]).product();
        Ok(CondTable::normalize_rows(joint, cols))
    }

    pub fn entropy(&self) -> f64 {
        entropy_of(&self.table)
    }

    /// H of the marginal on `axes`; the empty set has zero entropy.
    pub fn entropy_of_axes(&self, axes: &[usize]) -> Result<f64> {
        if axes.is_empty() {
            return Ok(0.0);
        }
        self.check_axes(&[axes])?;
        let dims: Vec<usize> = axes.iter().map(|&a| self.dims[a]).collect();
        Ok(entropy_of(&self.project(axes, &dims)))
    }

    pub fn cond_entropy(&self, target: &[usize], given: &[usize]) -> Result<f64> {
        self.check_axes(&[target, given])?;
        let all: Vec<usize> = target.iter().chain(given).copied().collect();
        Ok(self.entropy_of_axes(&all)? - self.entropy_of_axes(given)?)
    }

    pub fn mutual_info(&self, a: &[usize], b: &[usize]) -> Result<f64> {
        self.cond_mutual_info(a, b, &[])
    }

    /// I(A;B|C) = H(A,C) + H(B,C) − H(A,B,C) − H(C).
    pub fn cond_mutual_info(&self, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptyAxisSet);
        }
        self.check_axes(&[a, b, c])?;
        let cat = |xs: &[&[usize]]| xs.concat();
        Ok(self.entropy_of_axes(&cat(&[a, c]))? + self.entropy_of_axes(&cat(&[b, c]))?
            - self.entropy_of_axes(&cat(&[a, b, c]))?
            - self.entropy_of_axes(c)?)
    }

    /// Reorders the axes: output axis i is input axis `order[i]`.
    pub fn permute(&self, order: &[usize]) -> Result<Pmf> {
        if order.len() != self.ndim() {
            return Err(Error::ShapeMismatch("permutation length".into()));
        }
        self.marginal(order)
    }
}

/// Σ −p ln p with 0 ln 0 = 0.
pub fn entropy_of(p: &[f64]) -> f64 {
    p.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum()
}

/// Normalized Exp(1) draws, i.e. a flat Dirichlet sample.
pub fn dirichlet_flat<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// D(p‖q) in nats; +∞ when p puts mass where q has none.
pub fn kl_div(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch(format!("kl_div of lengths {} and {}", p.len(), q.len())));
    }
    Ok(kl_unchecked(p, q))
}

pub(crate) fn kl_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).ln();
        }
    }
    d.max(0.0)
}

/// Conditional pmf p(col | row). Rows whose conditioning cell has no mass
/// hold the uniform distribution and are flagged degenerate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondTable {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    degenerate: Vec<bool>,
}

impl CondTable {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!("{rows}x{cols} table with {} entries", data.len())));
        }
        for r in 0..rows {
            let row = &data[r * cols..(r + 1) * cols];
            if row.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidPmf(format!("row {r} has a negative or non-finite entry")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SUM_TOL {
                return Err(Error::InvalidPmf(format!("row {r} sums to {s}")));
            }
        }
        Ok(CondTable { rows, cols, data, degenerate: vec![false; rows] })
    }

    /// Normalizes each row of a nonnegative weight matrix.
    pub fn normalize_rows(mut data: Vec<f64>, cols: usize) -> Self {
        let rows = data.len() / cols;
        let mut degenerate = vec![false; rows];
        for (r, row) in data.chunks_mut(cols).enumerate() {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / cols as f64);
                degenerate[r] = true;
            }
        }
        CondTable { rows, cols, data, degenerate }
    }

    pub fn random<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let data = (0..rows).flat_map(|_| dirichlet_flat(cols, rng)).collect();
        CondTable { rows, cols, data, degenerate: vec![false; rows] }
    }

    /// Every row equal to `row`.
    pub fn constant_rows(rows: usize, row: &[f64]) -> Result<Self> {
        CondTable::new(rows, row.len(), row.repeat(rows))
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        (0..n).for_each(|i| data[i * n + i] = 1.0);
        CondTable { rows: n, cols: n, data, degenerate: vec![false; n] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_degenerate(&self, r: usize) -> bool {
        self.degenerate[r]
    }

    pub fn any_degenerate(&self) -> bool {
        self.degenerate.iter().any(|&d| d)
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &CondTable) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

pub const AX_X: usize = 0;
pub const AX_Y0: usize = 1;
pub const AX_Y1: usize = 2;
pub const AX_Y2: usize = 3;

/// The discrete source law p(x, y0, y1, y2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Pmf", into = "Pmf")]
pub struct JointSourcePmf {
    pmf: Pmf,
}

impl TryFrom<Pmf> for JointSourcePmf {
    type Error = Error;
    fn try_from(pmf: Pmf) -> Result<Self> {
        JointSourcePmf::from_pmf(pmf)
    }
}

impl From<JointSourcePmf> for Pmf {
    fn from(j: JointSourcePmf) -> Self {
        j.pmf
    }
}

impl JointSourcePmf {
    pub fn from_pmf(pmf: Pmf) -> Result<Self> {
        if pmf.ndim() != 4 {
            return Err(Error::ShapeMismatch(format!("joint source needs 4 axes, got {}", pmf.ndim())));
        }
        Ok(JointSourcePmf { pmf })
    }

    pub fn new(dims: [usize; 4], table: Vec<f64>) -> Result<Self> {
        JointSourcePmf::from_pmf(Pmf::new(dims.to_vec(), table)?)
    }

    /// p(x,y0) p(y1|x,y0) p(y2|x,y0) from the three factors, indexed
    /// [x*n0 + y0] for the rows of the conditional tables.
    pub fn from_factors(p_xy0: &Pmf, y1: &CondTable, y2: &CondTable) -> Result<Self> {
        let d = p_xy0.dims();
        if d.len() != 2 || y1.rows() != d[0] * d[1] || y2.rows() != d[0] * d[1] {
            return Err(Error::ShapeMismatch("factor shapes".into()));
        }
        let (n1, n2) = (y1.cols(), y2.cols());
        let mut t = Vec::with_capacity(d[0] * d[1] * n1 * n2);
        for (r, &pxy) in p_xy0.table().iter().enumerate() {
            for a in 0..n1 {
                for b in 0..n2 {
                    t.push(pxy * y1.get(r, a) * y2.get(r, b));
                }
            }
        }
        let s: f64 = t.iter().sum();
        t.iter_mut().for_each(|v| *v /= s);
        JointSourcePmf::new([d[0], d[1], n1, n2], t)
    }

    /// Random joint satisfying Y1 ⟂ Y2 | (X, Y0), every factor flat-Dirichlet.
    pub fn random_markov<R: Rng + ?Sized>(dims: [usize; 4], rng: &mut R) -> Result<Self> {
        let pxy = Pmf::random(vec![dims[0], dims[1]], rng)?;
        let rows = dims[0] * dims[1];
        let y1 = CondTable::random(rows, dims[2], rng);
        let y2 = CondTable::random(rows, dims[3], rng);
        JointSourcePmf::from_factors(&pxy, &y1, &y2)
    }

    pub fn pmf(&self) -> &Pmf {
        &self.pmf
    }

    pub fn dims(&self) -> [usize; 4] {
        let d = self.pmf.dims();
        [d[0], d[1], d[2], d[3]]
    }

    pub fn table(&self) -> &[f64] {
        self.pmf.table()
    }

    #[inline]
    pub fn at(&self, x: usize, y0: usize, y1: usize, y2: usize) -> f64 {
        let [_, n0, n1, n2] = self.dims();
        self.pmf.table[((x * n0 + y0) * n1 + y1) * n2 + y2]
    }

    /// Swaps the roles of Y1 and Y2.
    pub fn swap_agents(&self) -> JointSourcePmf {
        JointSourcePmf { pmf: self.pmf.permute(&[AX_X, AX_Y0, AX_Y2, AX_Y1]).expect("4-axis permutation") }
    }

    /// Replaces Y0 by a constant (one-letter alphabet).
    pub fn drop_side_info(&self) -> JointSourcePmf {
        let [nx, n0, n1, n2] = self.dims();
        let mut t = vec![0.0; nx * n1 * n2];
        for x in 0..nx {
            for y0 in 0..n0 {
                for a in 0..n1 {
                    for b in 0..n2 {
                        t[(x * n1 + a) * n2 + b] += self.at(x, y0, a, b);
                    }
                }
            }
        }
        JointSourcePmf { pmf: Pmf { dims: vec![nx, 1, n1, n2], table: t } }
    }

    /// max over (x,y0,y1,y2) of |p(y1,y2|x,y0) − p(y1|x,y0) p(y2|x,y0)| · p(x,y0).
    pub fn markov_gap(&self) -> f64 {
        let [nx, n0, n1, n2] = self.dims();
        let mut gap: f64 = 0.0;
        for x in 0..nx {
            for y0 in 0..n0 {
                let mut m1 = vec![0.0; n1];
                let mut m2 = vec![0.0; n2];
                let mut tot = 0.0;
                for a in 0..n1 {
                    for b in 0..n2 {
                        let v = self.at(x, y0, a, b);
                        m1[a] += v;
                        m2[b] += v;
                        tot += v;
                    }
                }
                if tot <= 0.0 {
                    continue;
                }
                for a in 0..n1 {
                    for b in 0..n2 {
                        gap = gap.max((self.at(x, y0, a, b) - m1[a] * m2[b] / tot).abs());
                    }
                }
            }
        }
        gap
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hb(p: f64) -> f64 {
        entropy_of(&[p, 1.0 - p])
    }

    fn bsc_joint(eps: f64) -> Pmf {
        Pmf::new(vec![2, 2], vec![0.5 * (1.0 - eps), 0.5 * eps, 0.5 * eps, 0.5 * (1.0 - eps)]).unwrap()
    }

    #[test]
    fn marginal_examples() {
        let u = Pmf::uniform(vec![2, 2]).unwrap();
        assert_eq!(u.marginal(&[0]).unwrap().table(), &[0.5, 0.5]);
        let p = [0.2, 0.8];
        let q = [0.1, 0.3, 0.6];
        let prod: Vec<f64> = p.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
        let pq = Pmf::new(vec![2, 3], prod).unwrap();
        let m = pq.marginal(&[1]).unwrap();
        for (a, b) in m.table().iter().zip(q) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(pq.marginal(&[]), Err(Error::EmptyAxisSet)));
    }

    #[test]
    fn marginal_keeps_requested_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Pmf::random(vec![2, 3, 4], &mut rng).unwrap();
        let m = p.marginal(&[2, 0]).unwrap();
        assert_eq!(m.dims(), &[4, 2]);
        let direct: f64 = (0..3).map(|j| p.get(&[1, j, 3])).sum();
        assert!((m.get(&[3, 1]) - direct).abs() < 1e-15);
    }

    #[test]
    fn conditional_examples() {
        let c = bsc_joint(0.25).conditional(&[0], &[1]).unwrap();
        assert!((c.get(0, 0) - 0.75).abs() < 1e-15 && (c.get(0, 1) - 0.25).abs() < 1e-15);
        assert!((c.get(1, 0) - 0.25).abs() < 1e-15 && (c.get(1, 1) - 0.75).abs() < 1e-15);

        let copy = Pmf::new(vec![3, 3], vec![0.2, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.3]).unwrap();
        assert_eq!(copy.conditional(&[1], &[0]).unwrap(), CondTable::identity(3));

        let indep = Pmf::new(vec![2, 2], vec![0.08, 0.12, 0.32, 0.48]).unwrap();
        let c = indep.conditional(&[1], &[0]).unwrap();
        assert!((c.get(0, 0) - 0.4).abs() < 1e-15 && (c.get(1, 1) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn conditional_zero_mass_row_is_flagged_uniform() {
        let p = Pmf::new(vec![2, 3], vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let c = p.conditional(&[1], &[0]).unwrap();
        assert!(!c.is_degenerate(0));
        assert!(c.is_degenerate(1));
        assert!(c.row(1).iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn measures_examples() {
        let b = Pmf::new(vec![2], vec![0.5, 0.5]).unwrap();
        assert!((b.entropy() - 2f64.ln()).abs() < 1e-15);
        let indep = Pmf::new(vec![2, 2], vec![0.08, 0.12, 0.32, 0.48]).unwrap();
        assert!(indep.mutual_info(&[0], &[1]).unwrap().abs() < 1e-15);
        let bsc = bsc_joint(0.25);
        let mi = bsc.mutual_info(&[0], &[1]).unwrap();
        assert!((mi - (2f64.ln() - hb(0.25))).abs() < 1e-14);
    }

    #[test]
    fn kl_examples() {
        let p = [0.3, 0.7];
        assert_eq!(kl_div(&p, &p).unwrap(), 0.0);
        assert!((kl_div(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((kl_div(&[0.75, 0.25], &[0.25, 0.75]).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert_eq!(kl_div(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), f64::INFINITY);
        assert!(matches!(kl_div(&[1.0], &[0.5, 0.5]), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn validation_rejects_bad_tables() {
        assert!(Pmf::new(vec![2], vec![0.5, 0.6]).is_err());
        assert!(Pmf::new(vec![2], vec![1.5, -0.5]).is_err());
        assert!(Pmf::new(vec![3], vec![0.5, 0.5]).is_err());
        assert!(matches!(Pmf::uniform(vec![10_000, 10_000]), Err(Error::TooLarge(_))));
        let p = Pmf::uniform(vec![2, 2]).unwrap();
        assert!(matches!(p.conditional(&[0], &[0]), Err(Error::RepeatedAxis(0))));
        assert!(matches!(p.marginal(&[2]), Err(Error::AxisOutOfRange { .. })));
    }

    #[test]
    fn json_round_trip() {
        let j = JointSourcePmf::random_markov([2, 3, 2, 2], &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let s = serde_json::to_string(&j).unwrap();
        assert!(s.starts_with("{\"dims\":[2,3,2,2],\"table\":["));
        let back: JointSourcePmf = serde_json::from_str(&s).unwrap();
        assert_eq!(back, j);
        assert!(serde_json::from_str::<JointSourcePmf>(r#"{"dims":[2],"table":[0.5,0.5]}"#).is_err());
    }

    #[test]
    fn markov_generator_and_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let j = JointSourcePmf::random_markov([3, 2, 4, 3], &mut rng).unwrap();
        assert!(j.markov_gap() < 1e-15);
        let generic = JointSourcePmf::from_pmf(Pmf::random(vec![2, 2, 2, 2], &mut rng).unwrap()).unwrap();
        assert!(generic.markov_gap() > 1e-3);
    }

    #[test]
    fn swap_and_drop_side_info() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let j = JointSourcePmf::random_markov([2, 3, 2, 4], &mut rng).unwrap();
        let s = j.swap_agents();
        assert_eq!(s.dims(), [2, 3, 4, 2]);
        assert_eq!(s.at(1, 2, 3, 0), j.at(1, 2, 0, 3));
        let d = j.drop_side_info();
        assert_eq!(d.dims(), [2, 1, 2, 4]);
        let hx = j.pmf().entropy_of_axes(&[AX_X]).unwrap();
        assert!((d.pmf().cond_entropy(&[AX_X], &[AX_Y0]).unwrap() - hx).abs() < 1e-14);
    }
}
