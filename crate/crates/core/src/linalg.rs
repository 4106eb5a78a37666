//! Small dense symmetric-matrix helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;

pub const REG: f64 = 1e-10;
pub const MAX_COND: f64 = 1e12;

pub fn sym(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn eigen_sym(m: &Mat) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(sym(m))
}

pub fn min_eig(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    eigen_sym(m).eigenvalues.min()
}

fn condition(m: &Mat) -> (f64, f64) {
    let ev = eigen_sym(m).eigenvalues;
    let (lo, hi) = (ev.min(), ev.max());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    (lo, cond)
}

/// Returns `m` itself when it is comfortably positive definite, otherwise
/// `m + 1e-10·I`; either way the condition number must stay below 1e12.
pub fn conditioned(m: &Mat, block: &str) -> Result<Mat> {
    let s = sym(m);
    let (_, cond) = condition(&s);
    if cond <= MAX_COND && s.clone().cholesky().is_some() {
        return Ok(s);
    }
    let r = &s + Mat::identity(s.nrows(), s.nrows()) * REG;
    let (lo, cond) = condition(&r);
    if lo <= 0.0 || cond > MAX_COND {
        return Err(Error::Singular { block: block.to_string(), cond });
    }
    Ok(r)
}

pub fn spd_inverse(m: &Mat, block: &str) -> Result<Mat> {
    if m.nrows() == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let c = conditioned(m, block)?;
    let ch = c.cholesky().ok_or_else(|| Error::Singular { block: block.to_string(), cond: f64::INFINITY })?;
    Ok(sym(&ch.inverse()))
}

pub fn logdet_spd(m: &Mat, block: &str) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let c = conditioned(m, block)?;
    let ch = c.cholesky().ok_or_else(|| Error::Singular { block: block.to_string(), cond: f64::INFINITY })?;
    Ok(2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// log det of a positive definite matrix without conditioning guards
/// (I − T and I + (…) forms whose eigenvalues are known to be positive).
pub fn logdet_pd(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    match sym(m).cholesky() {
        Some(ch) => 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
        None => eigen_sym(m).eigenvalues.iter().map(|v| v.max(0.0).ln()).sum(),
    }
}

/// f applied to the eigenvalues of a symmetric matrix.
pub fn spectral_map(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let e = eigen_sym(m);
    let d = Mat::from_diagonal(&e.eigenvalues.map(f));
    sym(&(&e.eigenvectors * d * e.eigenvectors.transpose()))
}

pub fn sqrtm_psd(m: &Mat) -> Mat {
    spectral_map(m, |v| v.max(0.0).sqrt())
}

pub fn inv_sqrtm_pd(m: &Mat, block: &str) -> Result<Mat> {
    let c = conditioned(m, block)?;
    Ok(spectral_map(&c, |v| 1.0 / v.sqrt()))
}

/// Submatrix picking the given rows and columns.
pub fn select(m: &Mat, rows: &[usize], cols: &[usize]) -> Mat {
    Mat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(r, c);
    let (mut i, mut j) = (0, 0);
    for b in blocks {
        out.view_mut((i, j), (b.nrows(), b.ncols())).copy_from(*b);
        i += b.nrows();
        j += b.ncols();
    }
    out
}

/// Rows stacked vertically; all blocks share the column count `cols`.
pub fn vstack(blocks: &[&Mat], cols: usize) -> Mat {
    let r: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(r, cols);
    let mut i = 0;
    for b in blocks {
        out.view_mut((i, 0), (b.nrows(), cols)).copy_from(*b);
        i += b.nrows();
    }
    out
}

pub fn rel_frobenius(a: &Mat, b: &Mat) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

pub fn max_asym(m: &Mat) -> f64 {
    (m - m.transpose()).abs().max()
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Matrix from rows; `cols` fixes the width when there are no rows.
pub fn from_rows(rows: &[Vec<f64>], cols: Option<usize>, name: &str) -> Result<Mat> {
    let c = rows.first().map(|r| r.len()).or(cols).unwrap_or(0);
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::InvalidModel(format!("`{name}` has ragged rows")));
    }
    if let Some(want) = cols {
        if c != want {
            return Err(Error::InvalidModel(format!("`{name}` has {c} columns, expected {want}")));
        }
    }
    Ok(Mat::from_fn(rows.len(), c, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_logdet() {
        let m = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let inv = spd_inverse(&m, "m").unwrap();
        assert!((&m * &inv - Mat::identity(2, 2)).norm() < 1e-14);
        assert!((logdet_spd(&m, "m").unwrap() - 1.75f64.ln()).abs() < 1e-14);
        let sing = Mat::from_row_slice(2, 2, &[1e3, 0.0, 0.0, 0.0]);
        assert!(matches!(spd_inverse(&sing, "sing"), Err(Error::Singular { .. })));
        // small singular block survives through the ridge
        let tiny = Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]) * 1e-3;
        assert!(spd_inverse(&tiny, "tiny").is_ok());
    }

    #[test]
    fn roots() {
        let m = Mat::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let r = sqrtm_psd(&m);
        assert!((&r * &r - &m).norm() < 1e-13);
        let ir = inv_sqrtm_pd(&m, "m").unwrap();
        assert!((&ir * &m * &ir - Mat::identity(2, 2)).norm() < 1e-13);
    }
}
