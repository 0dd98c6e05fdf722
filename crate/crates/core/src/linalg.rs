//! Dense decompositions on `nalgebra` matrices backed by `faer`.
//!
//! Exactly rank-deficient data matrices are the normal case here (noiseless
//! Hankel matrices), so every SVD goes through this module.

use faer::{Mat, MatRef, Side};
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin SVD `m = U diag(s) V'` with `s` in non-increasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let f = to_faer(m);
    let dec = f
        .thin_svd()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = dec.S().column_vector();
    Ok(Svd {
        u: from_faer(dec.U()),
        singular_values: (0..s.nrows()).map(|i| s[i]).collect(),
        v: from_faer(dec.V()),
    })
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    to_faer(m)
        .singular_values()
        .map_err(|e| Error::Decomposition(format!("{e:?}")))
}

impl Svd {
    pub fn max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `rel_tol` times the largest.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let max = self.max();
        if max == 0.0 {
            return 0;
        }
        self.singular_values
            .iter()
            .filter(|&&s| s > rel_tol * max)
            .count()
    }

    /// Minimum-norm least-squares solution of `m x = b` keeping the leading
    /// `rank` singular triplets.
    pub fn solve_truncated(&self, b: &DMatrix<f64>, rank: usize) -> Result<DMatrix<f64>> {
        Error::check_dim("right-hand side rows", self.u.nrows(), b.nrows())?;
        let k = rank.min(self.singular_values.len());
        let ut_b = self.u.columns(0, k).transpose() * b;
        let mut scaled = ut_b;
        for i in 0..k {
            let inv = 1.0 / self.singular_values[i];
            scaled.row_mut(i).scale_mut(inv);
        }
        Ok(self.v.columns(0, k) * scaled)
    }

    pub fn solve(&self, b: &DMatrix<f64>, rel_tol: f64) -> Result<DMatrix<f64>> {
        self.solve_truncated(b, self.rank(rel_tol))
    }

    pub fn solve_vector(&self, b: &DVector<f64>, rel_tol: f64) -> Result<DVector<f64>> {
        let x = self.solve(&DMatrix::from_column_slice(b.len(), 1, b.as_slice()), rel_tol)?;
        Ok(x.column(0).into_owned())
    }
}

/// Eigen-decomposition of a symmetric matrix: eigenvalues in non-decreasing
/// order and orthonormal eigenvectors as columns.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    Error::check_dim("symmetric matrix columns", m.nrows(), m.ncols())?;
    if m.is_empty() {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let dec = to_faer(m)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    let s = dec.S().column_vector();
    Ok((
        (0..s.nrows()).map(|i| s[i]).collect(),
        from_faer(dec.U()),
    ))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> Result<f64> {
    Error::check_dim("symmetric matrix columns", m.nrows(), m.ncols())?;
    if m.is_empty() {
        return Ok(f64::INFINITY);
    }
    let ev = to_faer(m)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
    Ok(ev.into_iter().fold(f64::INFINITY, f64::min))
}
