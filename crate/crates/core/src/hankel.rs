//! Block-Hankel data matrices, numerical rank and persistency of excitation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative threshold for rank decisions.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// A sequence of equally sized sample vectors.
pub type Signal = Vec<DVector<f64>>;

/// A `q s x N` block-Hankel matrix built from samples `i .. i + N + s - 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHankel {
    pub start: usize,
    pub block_rows: usize,
    pub columns: usize,
    pub block_dim: usize,
    pub matrix: DMatrix<f64>,
}

impl BlockHankel {
    /// Block `(a, b)`, a `q`-vector equal to sample `start + a + b`.
    pub fn block(&self, a: usize, b: usize) -> DVector<f64> {
        self.matrix
            .view((a * self.block_dim, b), (self.block_dim, 1))
            .column(0)
            .into_owned()
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

/// Arrange `data[i + a + b]` at block `(a, b)` for `a < s`, `b < n`.
pub fn block_hankel(data: &[DVector<f64>], i: usize, s: usize, n: usize) -> Result<BlockHankel> {
    if s == 0 || n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let required = i + n + s - 1;
    if data.len() < required {
        return Err(Error::InsufficientData {
            what: "block-Hankel matrix",
            required,
            available: data.len(),
        });
    }
    let q = data[i].len();
    let mut matrix = DMatrix::zeros(q * s, n);
    for a in 0..s {
        for b in 0..n {
            let sample = &data[i + a + b];
            Error::check_dim("Hankel sample", q, sample.len())?;
            matrix.view_mut((a * q, b), (q, 1)).copy_from(sample);
        }
    }
    Ok(BlockHankel {
        start: i,
        block_rows: s,
        columns: n,
        block_dim: q,
        matrix,
    })
}

/// Rank and full singular spectrum (descending) of a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    pub rel_tol: f64,
}

impl RankReport {
    /// Ratio between the smallest retained and the largest singular value.
    pub fn smallest_retained_ratio(&self) -> f64 {
        match (self.singular_values.first(), self.rank) {
            (Some(&max), r) if r > 0 && max > 0.0 => self.singular_values[r - 1] / max,
            _ => 0.0,
        }
    }
}

/// Count singular values above `rel_tol` times the largest one.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> Result<RankReport> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    assert!(rel_tol > 0.0, "rank tolerance must be positive");
    let singular_values = crate::linalg::singular_values(m)?;
    let max = singular_values[0];
    let rank = if max == 0.0 {
        0
    } else {
        singular_values.iter().filter(|&&s| s > rel_tol * max).count()
    };
    Ok(RankReport {
        rank,
        singular_values,
        rel_tol,
    })
}

/// Outcome of a persistency-of-excitation test.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationReport {
    pub exciting: bool,
    pub order: usize,
    pub required_rank: usize,
    pub rank: Option<RankReport>,
    pub reason: String,
}

/// Whether `signal` is persistently exciting of order `s`, judged on the
/// widest Hankel matrix the data allows.
pub fn is_persistently_exciting(
    signal: &[DVector<f64>],
    s: usize,
    rel_tol: f64,
) -> ExcitationReport {
    let q = signal.first().map_or(0, |v| v.len());
    let required_rank = q * s;
    let fail = |reason: String| ExcitationReport {
        exciting: false,
        order: s,
        required_rank,
        rank: None,
        reason,
    };
    if s == 0 || q == 0 {
        return fail("empty signal or zero order".into());
    }
    if signal.len() < s {
        return fail(format!("{} samples cannot fill {s} block rows", signal.len()));
    }
    let columns = signal.len() - s + 1;
    if columns < required_rank {
        return fail(format!(
            "{} samples give {columns} columns, fewer than the {required_rank} rows \
             (need at least {} samples)",
            signal.len(),
            required_rank + s - 1
        ));
    }
    let hankel = match block_hankel(signal, 0, s, columns) {
        Ok(h) => h,
        Err(e) => return fail(e.to_string()),
    };
    let report = match numerical_rank(&hankel.matrix, rel_tol) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let exciting = report.rank == required_rank;
    ExcitationReport {
        exciting,
        order: s,
        required_rank,
        reason: format!("rank {} of {required_rank}", report.rank),
        rank: Some(report),
    }
}

/// Vertically stack matrices with equal column counts.
pub fn vstack(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = parts.first().map_or(0, |m| m.ncols());
    let rows = parts.iter().map(|m| m.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for m in parts {
        assert_eq!(m.ncols(), cols, "vstack column mismatch");
        out.view_mut((r, 0), m.shape()).copy_from(*m);
        r += m.nrows();
    }
    out
}

/// Concatenate vectors into one column.
pub fn stack_vectors<'a>(parts: impl IntoIterator<Item = &'a DVector<f64>>) -> DVector<f64> {
    let data: Vec<f64> = parts.into_iter().flat_map(|v| v.iter().copied()).collect();
    DVector::from_vec(data)
}

/// Minimum-norm least-squares solution of `m g = target` with singular
/// values below `rel_tol` times the largest treated as zero. Returns the
/// solution and the relative residual `|m g - target| / |target|`.
pub fn min_norm_solve(
    m: &DMatrix<f64>,
    target: &DVector<f64>,
    rel_tol: f64,
) -> Result<(DVector<f64>, f64)> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Error::check_dim("least-squares target", m.nrows(), target.len())?;
    let g = crate::linalg::svd(m)?.solve_vector(target, rel_tol)?;
    let norm = target.norm();
    let res = (m * &g - target).norm();
    let residual = if norm > 0.0 { res / norm } else { res };
    Ok((g, residual))
}
