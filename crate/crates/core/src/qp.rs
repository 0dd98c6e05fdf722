//! Dense convex quadratic programming by a primal active-set method.
//!
//! Solves
//!
//! ```text
//! minimize    1/2 x' H x + c' x
//! subject to  A x <= b
//! ```
//!
//! for positive semi-definite `H`, starting from a feasible point. Every
//! iterate stays feasible and the objective never increases, which the
//! solver records in [`QpSolution::trace`]. Directions of zero curvature
//! inside the working set (slack variables with a purely linear cost) are
//! followed until a constraint blocks them.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constraints: DMatrix<f64>,
    pub bounds: DVector<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct QpOptions {
    pub max_iterations: usize,
    /// Feasibility tolerance for the starting point and activity detection.
    pub feasibility_tol: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        QpOptions {
            max_iterations: 500,
            feasibility_tol: 1e-9,
        }
    }
}

/// Residuals of the optimality conditions, each scaled to be dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// One multiplier per constraint row; zero for rows outside the final
    /// working set.
    pub multipliers: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
    pub kkt: KktReport,
}

impl QpProblem {
    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        Error::check_dim("QP Hessian rows", n, self.hessian.nrows())?;
        Error::check_dim("QP Hessian columns", n, self.hessian.ncols())?;
        Error::check_dim("QP constraint columns", n, self.constraints.ncols())?;
        Error::check_dim("QP constraint bounds", self.constraints.nrows(), self.bounds.len())
    }

    fn scale(&self) -> f64 {
        1.0 + self.linear.amax() + self.hessian.amax()
    }

    /// Scaled optimality residuals at `x` with multipliers `lambda`.
    pub fn kkt(&self, x: &DVector<f64>, lambda: &DVector<f64>) -> KktReport {
        let grad = &self.hessian * x + &self.linear;
        let stat = &grad + self.constraints.transpose() * lambda;
        let slack = &self.constraints * x - &self.bounds;
        let gscale = 1.0 + grad.amax() + self.linear.amax();
        let bscale = 1.0 + self.bounds.amax();
        let lscale = 1.0 + lambda.amax();
        let primal = slack.iter().fold(0.0f64, |acc, &v| acc.max(v));
        let dual = lambda.iter().fold(0.0f64, |acc, &v| acc.max(-v));
        let comp = lambda
            .iter()
            .zip(slack.iter())
            .fold(0.0f64, |acc, (l, s)| acc.max((l * s).abs()));
        KktReport {
            stationarity: stat.amax() / gscale,
            primal: primal / bscale,
            dual: dual / lscale,
            complementarity: comp / (lscale * bscale),
        }
    }
}

/// Orthonormal basis of the span of the working-set rows, used to keep the
/// working set linearly independent.
struct RowBasis {
    rows: Vec<DVector<f64>>,
}

impl RowBasis {
    fn residual(&self, a: &DVector<f64>) -> DVector<f64> {
        let mut r = a.clone();
        // two passes of Gram-Schmidt
        for _ in 0..2 {
            for q in &self.rows {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        r
    }

    fn try_add(&mut self, a: &DVector<f64>) -> bool {
        let r = self.residual(a);
        let norm = r.norm();
        if norm > 1e-9 * a.norm().max(f64::MIN_POSITIVE) {
            self.rows.push(r / norm);
            true
        } else {
            false
        }
    }
}

struct Subspace {
    /// Orthonormal null-space basis of the working-set rows (`n x (n - w)`).
    null: DMatrix<f64>,
    /// Orthonormal basis of the working-set row span and the triangular
    /// factor with `A_W' = range * tri`.
    range: DMatrix<f64>,
    tri: DMatrix<f64>,
}

fn subspace(a: &DMatrix<f64>, working: &[usize]) -> Subspace {
    let n = a.ncols();
    let w = working.len();
    if w == 0 {
        return Subspace {
            null: DMatrix::identity(n, n),
            range: DMatrix::zeros(n, 0),
            tri: DMatrix::zeros(0, 0),
        };
    }
    // QR of [A_W' | I] yields a complete orthonormal basis whose first w
    // columns span the working-set rows
    let mut m = DMatrix::zeros(n, w + n);
    for (j, &i) in working.iter().enumerate() {
        m.column_mut(j).copy_from(&a.row(i).transpose());
    }
    m.view_mut((0, w), (n, n)).fill_with_identity();
    let qr = m.qr();
    let q = qr.q();
    let r = qr.r();
    Subspace {
        null: q.columns(w, n - w).into_owned(),
        range: q.columns(0, w).into_owned(),
        tri: r.view((0, 0), (w, w)).into_owned(),
    }
}

enum Direction {
    /// Minimizer of the subspace problem is at the current point.
    Stationary,
    /// Newton step to the subspace minimizer (full step length one).
    Newton(DVector<f64>),
    /// Descent direction of zero curvature; must be stopped by a constraint.
    Ray(DVector<f64>),
}

fn direction(problem: &QpProblem, x: &DVector<f64>, sub: &Subspace) -> Result<Direction> {
    let z = &sub.null;
    if z.ncols() == 0 {
        return Ok(Direction::Stationary);
    }
    let g = &problem.hessian * x + &problem.linear;
    let hr = z.transpose() * &problem.hessian * z;
    let hr = (&hr + hr.transpose()) * 0.5;
    let gr = z.transpose() * &g;
    let (eigenvalues, eigenvectors) = crate::linalg::symmetric_eigen(&hr)?;
    let lam_max = eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let curv_tol = 1e-10 * lam_max.max(1e-300);
    let t = eigenvectors.transpose() * &gr;
    let gtol = 1e-12 * (1.0 + g.amax());

    let mut ray = DVector::zeros(z.ncols());
    let mut has_ray = false;
    let mut y = DVector::zeros(z.ncols());
    for i in 0..t.len() {
        let v = eigenvectors.column(i);
        if eigenvalues[i] <= curv_tol {
            if t[i].abs() > gtol {
                ray.axpy(-t[i], &v, 1.0);
                has_ray = true;
            }
        } else {
            y.axpy(-t[i] / eigenvalues[i], &v, 1.0);
        }
    }
    if has_ray {
        return Ok(Direction::Ray(z * ray));
    }
    let p = z * y;
    let xscale = 1.0 + x.amax();
    Ok(if p.amax() <= 1e-13 * xscale {
        Direction::Stationary
    } else {
        Direction::Newton(p)
    })
}

/// Solve a convex QP from the feasible starting point `x0`.
pub fn solve(problem: &QpProblem, x0: &DVector<f64>, options: &QpOptions) -> Result<QpSolution> {
    problem.validate()?;
    Error::check_dim("QP starting point", problem.dim(), x0.len())?;
    let a = &problem.constraints;
    let b = &problem.bounds;
    let m = a.nrows();
    let bscale = 1.0 + b.amax();
    let ftol = options.feasibility_tol * bscale;

    let slack0 = a * x0 - b;
    if let Some((i, v)) = slack0
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > ftol)
        .max_by(|x, y| x.1.total_cmp(y.1))
    {
        return Err(Error::QpInfeasible(format!(
            "starting point violates constraint {i} by {v:e}"
        )));
    }

    let mut x = x0.clone();
    let mut working: Vec<usize> = Vec::new();
    let mut basis = RowBasis { rows: Vec::new() };
    for i in 0..m {
        if slack0[i].abs() <= ftol {
            let row = a.row(i).transpose();
            if basis.try_add(&row) {
                working.push(i);
            }
        }
    }

    let mut trace = vec![problem.objective(&x)];
    let mut at_minimum = false;
    let dual_tol = 1e-10 * problem.scale();

    for iteration in 1..=options.max_iterations {
        let sub = subspace(a, &working);
        if !at_minimum {
            let (p, is_ray) = match direction(problem, &x, &sub)? {
                Direction::Stationary => (None, false),
                Direction::Newton(p) => (Some(p), false),
                Direction::Ray(p) => (Some(p), true),
            };
            match p {
                None => {}
                Some(p) => {
                    let ap = a * &p;
                    let ax = a * &x;
                    let pnorm = p.norm();
                    let mut alpha = if is_ray { f64::INFINITY } else { 1.0 };
                    let mut blocking = None;
                    for i in 0..m {
                        if working.contains(&i) || ap[i] <= 1e-14 * pnorm * a.row(i).norm() {
                            continue;
                        }
                        let step = (b[i] - ax[i]).max(0.0) / ap[i];
                        if step < alpha {
                            alpha = step;
                            blocking = Some(i);
                        }
                    }
                    if alpha.is_infinite() {
                        return Err(Error::QpUnbounded);
                    }
                    x.axpy(alpha, &p, 1.0);
                    trace.push(problem.objective(&x));
                    match blocking {
                        Some(i) => working.push(i),
                        None => at_minimum = true,
                    }
                    continue;
                }
            }
        }

        // multipliers from A_W' lambda = -g
        let g = &problem.hessian * &x + &problem.linear;
        let lambda_w = if working.is_empty() {
            DVector::zeros(0)
        } else {
            let rhs = -(sub.range.transpose() * &g);
            sub.tri
                .solve_upper_triangular(&rhs)
                .unwrap_or_else(|| DVector::zeros(working.len()))
        };
        let most_negative = lambda_w
            .iter()
            .enumerate()
            .filter(|(_, &l)| l < -dual_tol)
            .min_by(|p, q| p.1.total_cmp(q.1))
            .map(|(j, _)| j);
        match most_negative {
            None => {
                let mut multipliers = DVector::zeros(m);
                for (j, &i) in working.iter().enumerate() {
                    multipliers[i] = lambda_w[j].max(0.0);
                }
                let kkt = problem.kkt(&x, &multipliers);
                return Ok(QpSolution {
                    objective: problem.objective(&x),
                    x,
                    multipliers,
                    iterations: iteration,
                    trace,
                    kkt,
                });
            }
            Some(j) => {
                working.remove(j);
                at_minimum = false;
            }
        }
    }
    Err(Error::QpIterationLimit {
        iterations: options.max_iterations,
        objective: problem.objective(&x),
        best: x.iter().copied().collect(),
    })
}
