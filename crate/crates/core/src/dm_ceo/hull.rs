//! Lower convex hull of (R1, R2, D) clouds and the infimum-distortion query.

use std::collections::HashSet;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::region::{PointKind, RegionPoint};

type P3 = [f64; 3];

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HullKind {
    /// Lower facets of a 3-D hull (or a triangulated planar cloud).
    Lower3d,
    /// Degenerate cloud: lower hull of (R1 + R2, D).
    Lower2d,
}

#[derive(Clone, Debug)]
pub struct RegionHull {
    /// Deduplicated input points, sorted lexicographically by (R1, R2, D).
    pub points: Vec<P3>,
    /// Lower facets as point indices (`Lower3d` only).
    pub facets: Vec<[usize; 3]>,
    /// Lower chain as point indices sorted by R1 + R2 (`Lower2d` only).
    pub chain: Vec<usize>,
    pub kind: HullKind,
}

/// Convex hull of the union of the two decoding orders' clouds, reduced to
/// its lower envelope.
pub fn assemble_region(points_rd1: &[RegionPoint], points_rd2: &[RegionPoint]) -> Result<RegionHull> {
    let mut pts: Vec<P3> = Vec::new();
    for p in points_rd1.iter().chain(points_rd2) {
        if p.kind != PointKind::Distortion || p.rates.len() != 2 {
            return Err(Error::InvalidParam("hull assembly needs two-rate distortion points".into()));
        }
        if p.is_finite() {
            pts.push([p.rates[0], p.rates[1], p.value]);
        }
    }
    RegionHull::from_points(pts)
}

impl RegionHull {
    pub fn from_points(mut pts: Vec<P3>) -> Result<RegionHull> {
        if pts.is_empty() {
            return Err(Error::InvalidParam("no finite points to assemble".into()));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
        pts.dedup_by(|a, b| (0..3).all(|i| (a[i] - b[i]).abs() <= 1e-12));
        let scale = 1.0 + pts.iter().flat_map(|p| p.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        let eps = 1e-10 * scale;

        let lower_2d = |pts: Vec<P3>| {
            let chain = lower_chain(&pts);
            RegionHull { points: pts, facets: Vec::new(), chain, kind: HullKind::Lower2d }
        };

        let Some((i1, i2)) = spanning_pair(&pts, eps) else {
            return Ok(lower_2d(pts));
        };
        let n = cross(sub(pts[i1], pts[0]), sub(pts[i2], pts[0]));
        let nn = norm(n);
        let un = [n[0] / nn, n[1] / nn, n[2] / nn];
        let (i3, h) = pts
            .iter()
            .enumerate()
            .map(|(i, p)| (i, dot(un, sub(*p, pts[0])).abs()))
            .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if h <= eps {
            // planar cloud: triangulate it when it is the graph of a function of (R1, R2)
            if un[2].abs() <= 1e-9 {
                return Ok(lower_2d(pts));
            }
            let poly = planar_hull(&pts);
            let facets = (1..poly.len().saturating_sub(1)).map(|i| [poly[0], poly[i], poly[i + 1]]).collect();
            return Ok(RegionHull { points: pts, facets, chain: Vec::new(), kind: HullKind::Lower3d });
        }
        let faces = hull3d(&pts, [0, i1, i2, i3], eps);
        let facets = faces
            .into_iter()
            .filter(|f| {
                let n = cross(sub(pts[f[1]], pts[f[0]]), sub(pts[f[2]], pts[f[0]]));
                n[2] < -1e-12 * norm(n)
            })
            .collect();
        Ok(RegionHull { points: pts, facets, chain: Vec::new(), kind: HullKind::Lower3d })
    }

    /// inf D over convex combinations of the points whose rates do not
    /// exceed (r1, r2); `None` when no combination meets the budget.
    pub fn min_distortion(&self, r1: f64, r2: f64) -> Option<f64> {
        lp_min_distortion(&self.points, r1, r2)
    }

    /// Height of the lower envelope above (r1, r2), if (r1, r2) lies in the
    /// projection of the hull (3-D) or in the chain's R1 + R2 range (2-D).
    pub fn envelope_at(&self, r1: f64, r2: f64) -> Option<f64> {
        match self.kind {
            HullKind::Lower3d => {
                let mut best: Option<f64> = None;
                for f in &self.facets {
                    let [a, b, c] = f.map(|i| self.points[i]);
                    let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                    if det.abs() < 1e-300 {
                        continue;
                    }
                    let l1 = ((r1 - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (r2 - a[1])) / det;
                    let l2 = ((b[0] - a[0]) * (r2 - a[1]) - (r1 - a[0]) * (b[1] - a[1])) / det;
                    let l0 = 1.0 - l1 - l2;
                    if l0 >= -1e-9 && l1 >= -1e-9 && l2 >= -1e-9 {
                        let z = l0 * a[2] + l1 * b[2] + l2 * c[2];
                        best = Some(best.map_or(z, |v: f64| v.min(z)));
                    }
                }
                best
            }
            HullKind::Lower2d => {
                let s = r1 + r2;
                let pts: Vec<(f64, f64)> = self.chain.iter().map(|&i| (self.points[i][0] + self.points[i][1], self.points[i][2])).collect();
                if pts.len() == 1 {
                    return ((s - pts[0].0).abs() <= 1e-9).then_some(pts[0].1);
                }
                pts.windows(2).find(|w| s >= w[0].0 - 1e-9 && s <= w[1].0 + 1e-9).map(|w| {
                    let t = if w[1].0 > w[0].0 { ((s - w[0].0) / (w[1].0 - w[0].0)).clamp(0.0, 1.0) } else { 0.0 };
                    w[0].1 + t * (w[1].1 - w[0].1)
                })
            }
        }
    }

    /// Facets as a JSON triangle list (2-D hulls emit their chain segments).
    pub fn to_json(&self) -> Value {
        let p = |i: usize| json!(self.points[i]);
        match self.kind {
            HullKind::Lower3d => json!({
                "kind": "lower3d",
                "axes": ["R1_nats", "R2_nats", "D_nats"],
                "triangles": self.facets.iter().map(|f| json!([p(f[0]), p(f[1]), p(f[2])])).collect::<Vec<_>>(),
            }),
            HullKind::Lower2d => json!({
                "kind": "lower2d",
                "axes": ["R1_nats", "R2_nats", "D_nats"],
                "chain": self.chain.iter().map(|&i| p(i)).collect::<Vec<_>>(),
            }),
        }
    }
}

/// Two indices that, together with point 0, span a non-degenerate triangle.
fn spanning_pair(pts: &[P3], eps: f64) -> Option<(usize, usize)> {
    let (i1, d1) = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, norm(sub(*p, pts[0]))))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    if d1 <= eps {
        return None;
    }
    let dir = sub(pts[i1], pts[0]);
    let (i2, d2) = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, norm(cross(dir, sub(*p, pts[0]))) / d1))
        .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
    (d2 > eps).then_some((i1, i2))
}

/// Lower hull of (R1 + R2, D) by the monotone chain, as point indices.
fn lower_chain(pts: &[P3]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let key = |i: usize| (pts[i][0] + pts[i][1], pts[i][2]);
    idx.sort_by(|&a, &b| key(a).partial_cmp(&key(b)).expect("finite").then(a.cmp(&b)));
    let mut chain: Vec<usize> = Vec::new();
    for i in idx {
        let (x, y) = key(i);
        if let Some(&last) = chain.last() {
            if (key(last).0 - x).abs() <= 1e-12 {
                continue; // same abscissa, larger or equal D
            }
        }
        while chain.len() >= 2 {
            let (ax, ay) = key(chain[chain.len() - 2]);
            let (bx, by) = key(chain[chain.len() - 1]);
            if (bx - ax) * (y - ay) - (by - ay) * (x - ax) <= 0.0 {
                chain.pop();
            } else {
                break;
            }
        }
        chain.push(i);
    }
    chain
}

/// Convex polygon (counter-clockwise index list) of the (R1, R2) projections.
fn planar_hull(pts: &[P3]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    idx.sort_by(|&a, &b| (pts[a][0], pts[a][1]).partial_cmp(&(pts[b][0], pts[b][1])).expect("finite"));
    let turn = |o: usize, a: usize, b: usize| {
        (pts[a][0] - pts[o][0]) * (pts[b][1] - pts[o][1]) - (pts[a][1] - pts[o][1]) * (pts[b][0] - pts[o][0])
    };
    let mut hull: Vec<usize> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let seq: Box<dyn Iterator<Item = &usize>> = if pass == 0 { Box::new(idx.iter()) } else { Box::new(idx.iter().rev()) };
        for &i in seq {
            while hull.len() >= start + 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], i) <= 1e-15 {
                hull.pop();
            }
            hull.push(i);
        }
        hull.pop();
    }
    hull
}

/// Incremental convex hull; returns outward-oriented triangles.
fn hull3d(pts: &[P3], init: [usize; 4], eps: f64) -> Vec<[usize; 3]> {
    struct Face {
        v: [usize; 3],
        n: P3,
        off: f64,
        alive: bool,
    }
    let make = |v: [usize; 3]| {
        let n = cross(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
        let l = norm(n).max(1e-300);
        let n = [n[0] / l, n[1] / l, n[2] / l];
        Face { v, n, off: dot(n, pts[v[0]]), alive: true }
    };
    let [a, b, c, d] = init;
    let centroid = [0, 1, 2].map(|k| (pts[a][k] + pts[b][k] + pts[c][k] + pts[d][k]) / 4.0);
    let mut faces: Vec<Face> = Vec::new();
    for tri in [[a, b, c], [a, b, d], [a, c, d], [b, c, d]] {
        let mut f = make(tri);
        if dot(f.n, centroid) - f.off > 0.0 {
            f = make([tri[0], tri[2], tri[1]]);
        }
        faces.push(f);
    }
    for (pi, &p) in pts.iter().enumerate() {
        if init.contains(&pi) {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len()).filter(|&i| faces[i].alive && dot(faces[i].n, p) - faces[i].off > eps).collect();
        if visible.is_empty() {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for &i in &visible {
            let v = faces[i].v;
            edges.extend([(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]);
        }
        let mut horizon: Vec<(usize, usize)> = edges.iter().filter(|(x, y)| !edges.contains(&(*y, *x))).copied().collect();
        horizon.sort_unstable();
        for &i in &visible {
            faces[i].alive = false;
        }
        for (x, y) in horizon {
            faces.push(make([x, y, pi]));
        }
    }
    faces.into_iter().filter(|f| f.alive).map(|f| f.v).collect()
}

/// Budget slack so that points evaluated at rate ±1e-16 count as zero-rate.
const RATE_SLACK: f64 = 1e-9;

/// min Σλ_i D_i  s.t.  Σλ_i R1_i ≤ r1,  Σλ_i R2_i ≤ r2,  Σλ_i = 1,  λ ≥ 0.
/// An infeasible budget is retried once with both rates widened by 1e-9.
pub fn lp_min_distortion(points: &[P3], r1: f64, r2: f64) -> Option<f64> {
    let n = points.len();
    if n == 0 {
        return None;
    }
    // columns: λ_1..λ_n, slack1, slack2
    let mut a = vec![vec![0.0; n + 2]; 3];
    for (j, p) in points.iter().enumerate() {
        a[0][j] = p[0];
        a[1][j] = p[1];
        a[2][j] = 1.0;
    }
    a[0][n] = 1.0;
    a[1][n + 1] = 1.0;
    let mut c: Vec<f64> = points.iter().map(|p| p[2]).collect();
    c.extend([0.0, 0.0]);
    if r1 < 0.0 || r2 < 0.0 {
        return None;
    }
    simplex_min(&c, a.clone(), vec![r1, r2, 1.0])
        .or_else(|| simplex_min(&c, a, vec![r1 + RATE_SLACK, r2 + RATE_SLACK, 1.0]))
        .map(|(v, _)| v)
}

/// Two-phase dense simplex for min cᵀx, Ax = b, x ≥ 0 (b ≥ 0), Bland's rule.
fn simplex_min(c: &[f64], a: Vec<Vec<f64>>, b: Vec<f64>) -> Option<(f64, Vec<f64>)> {
    const TOL: f64 = 1e-12;
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    // tableau rows with artificial columns n..n+m and rhs last
    let mut t: Vec<Vec<f64>> = a
        .into_iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (mut row, &bi))| {
            row.resize(width, 0.0);
            row[n + i] = 1.0;
            row[width - 1] = bi;
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| -> bool {
        for _ in 0..10_000 {
            // reduced costs
            let entering = (0..allowed).find(|&j| {
                if basis.contains(&j) {
                    return false;
                }
                let rc = cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
                rc < -TOL
            });
            let Some(j) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if t[i][j] > TOL {
                    let ratio = t[i][width - 1] / t[i][j];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => ratio < lr - TOL || (ratio <= lr + TOL && basis[i] < basis[li]),
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false }; // unbounded
            pivot(t, r, j);
            basis[r] = j;
        }
        true
    };

    let mut phase1 = vec![0.0; n + m];
    phase1[n..].iter_mut().for_each(|v| *v = 1.0);
    run(&mut t, &mut basis, &phase1, n + m);
    let infeas: f64 = (0..m).filter(|&i| basis[i] >= n).map(|i| t[i][width - 1]).sum();
    if infeas > 1e-9 {
        return None;
    }
    for i in 0..m {
        if basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t[i][j].abs() > 1e-9 && !basis.contains(&j)) {
                pivot(&mut t, i, j);
                basis[i] = j;
            }
        }
    }
    let mut cost = c.to_vec();
    cost.extend(std::iter::repeat(0.0).take(m));
    if !run(&mut t, &mut basis, &cost, n) {
        return None;
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] = t[i][width - 1];
        }
    }
    let v = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Some((v, x))
}

fn pivot(t: &mut [Vec<f64>], r: usize, j: usize) {
    let p = t[r][j];
    t[r].iter_mut().for_each(|v| *v /= p);
    let row = t[r].clone();
    for (i, other) in t.iter_mut().enumerate() {
        if i != r {
            let f = other[j];
            if f != 0.0 {
                other.iter_mut().zip(&row).for_each(|(v, w)| *v -= f * w);
            }
        }
    }
}
