//! Numerical checks of the rank and representability results for LTI systems
//! driven by an autonomous exogenous disturbance.
//!
//! The augmented state `xbar = [x; d]` evolves as
//!
//! ```text
//! xbar_{k+1} = [[A, Bd], [0, Ad]] xbar_k + [B; 0] u_k
//! y_k        = [C, Cd] xbar_k + D u_k
//! ```
//!
//! and the checks sample random instances, assemble Hankel matrices from a
//! simulated experiment and compare SVD ranks and least-squares residuals
//! against the predicted values.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hankel::{
    block_hankel, is_persistently_exciting, min_norm_solve, numerical_rank, vstack,
    ExcitationReport, RankReport, Signal, DEFAULT_REL_TOL,
};
use crate::lifting::LiftedSystem;

/// Relative residual below which a target counts as a trajectory.
pub const TRAJECTORY_TOL: f64 = 1e-8;
/// Relative residual above which a target counts as not a trajectory.
pub const NON_TRAJECTORY_TOL: f64 = 1e-3;
/// Singular-value cutoff for the representability least-squares solves.
/// Tighter than the rank tolerance so weakly excited directions still count.
pub const SOLVE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LtiDisturbedSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub bd: DMatrix<f64>,
    pub ad: DMatrix<f64>,
    pub cd: DMatrix<f64>,
}

impl LtiDisturbedSystem {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        bd: DMatrix<f64>,
        ad: DMatrix<f64>,
        cd: DMatrix<f64>,
    ) -> Result<Self> {
        let (nx, nu, ny, nd) = (a.nrows(), b.ncols(), c.nrows(), ad.nrows());
        Error::check_dim("A columns", nx, a.ncols())?;
        Error::check_dim("B rows", nx, b.nrows())?;
        Error::check_dim("C columns", nx, c.ncols())?;
        Error::check_dim("D rows", ny, d.nrows())?;
        Error::check_dim("D columns", nu, d.ncols())?;
        Error::check_dim("Bd rows", nx, bd.nrows())?;
        Error::check_dim("Bd columns", nd, bd.ncols())?;
        Error::check_dim("Ad columns", nd, ad.ncols())?;
        Error::check_dim("Cd rows", ny, cd.nrows())?;
        Error::check_dim("Cd columns", nd, cd.ncols())?;
        Ok(LtiDisturbedSystem { a, b, c, d, bd, ad, cd })
    }

    /// Lifted plant with its constant lifted disturbance (`Ad = I`).
    pub fn from_lifted(lifted: &LiftedSystem) -> Self {
        let md = lifted.disturbance_dim();
        LtiDisturbedSystem {
            a: lifted.a.clone(),
            b: lifted.b.clone(),
            c: lifted.c.clone(),
            d: lifted.d.clone(),
            bd: lifted.f.clone(),
            ad: DMatrix::identity(md, md),
            cd: lifted.g.clone(),
        }
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn disturbances(&self) -> usize {
        self.ad.nrows()
    }
    /// `n_x + n_d`.
    pub fn augmented_dim(&self) -> usize {
        self.states() + self.disturbances()
    }

    pub fn augmented_state_matrix(&self) -> DMatrix<f64> {
        let (nx, nd) = (self.states(), self.disturbances());
        let mut m = DMatrix::zeros(nx + nd, nx + nd);
        m.view_mut((0, 0), (nx, nx)).copy_from(&self.a);
        m.view_mut((0, nx), (nx, nd)).copy_from(&self.bd);
        m.view_mut((nx, nx), (nd, nd)).copy_from(&self.ad);
        m
    }

    pub fn augmented_input_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.augmented_dim(), self.inputs());
        m.view_mut((0, 0), (self.states(), self.inputs()))
            .copy_from(&self.b);
        m
    }

    pub fn augmented_output_matrix(&self) -> DMatrix<f64> {
        let (nx, nd) = (self.states(), self.disturbances());
        let mut m = DMatrix::zeros(self.outputs(), nx + nd);
        m.view_mut((0, 0), (self.outputs(), nx)).copy_from(&self.c);
        m.view_mut((0, nx), (self.outputs(), nd)).copy_from(&self.cd);
        m
    }

    /// Augmented states `xbar_0 .. xbar_{T-1}` and outputs for `T` inputs.
    pub fn simulate(
        &self,
        xbar0: &DVector<f64>,
        u: &[DVector<f64>],
    ) -> Result<(Signal, Signal)> {
        Error::check_dim("augmented initial state", self.augmented_dim(), xbar0.len())?;
        let al = self.augmented_state_matrix();
        let bl = self.augmented_input_matrix();
        let cl = self.augmented_output_matrix();
        let mut x = xbar0.clone();
        let mut xs = Vec::with_capacity(u.len());
        let mut ys = Vec::with_capacity(u.len());
        for uk in u {
            Error::check_dim("input sample", self.inputs(), uk.len())?;
            ys.push(&cl * &x + &self.d * uk);
            let next = &al * &x + &bl * uk;
            xs.push(std::mem::replace(&mut x, next));
        }
        Ok((xs, ys))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllabilityReport {
    pub label: String,
    pub rank: usize,
    pub dim: usize,
    /// Orthonormal basis of the controllability matrix column space.
    pub basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

impl ControllabilityReport {
    pub fn is_controllable(&self) -> bool {
        self.rank == self.dim
    }
}

/// Rank of `[B, AB, .., A^{n-1} B]` with an orthonormal column-space basis.
pub fn controllability_rank(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    rel_tol: f64,
) -> Result<ControllabilityReport> {
    let n = a.nrows();
    Error::check_dim("square matrix columns", n, a.ncols())?;
    Error::check_dim("input matrix rows", n, b.nrows())?;
    let label = format!("({n}x{n}, {n}x{})", b.ncols());
    if n == 0 || b.ncols() == 0 {
        return Ok(ControllabilityReport {
            label,
            rank: 0,
            dim: n,
            basis: DMatrix::zeros(n, 0),
            singular_values: Vec::new(),
        });
    }
    let mut blocks = Vec::with_capacity(n);
    let mut cur = b.clone();
    for _ in 0..n {
        let next = a * &cur;
        blocks.push(std::mem::replace(&mut cur, next));
    }
    let mut krylov = DMatrix::zeros(n, n * b.ncols());
    for (i, blk) in blocks.iter().enumerate() {
        krylov.columns_mut(i * b.ncols(), b.ncols()).copy_from(blk);
    }
    let svd = crate::linalg::svd(&krylov)?;
    let rank = svd.rank(rel_tol);
    Ok(ControllabilityReport {
        label,
        rank,
        dim: n,
        basis: svd.u.columns(0, rank).into_owned(),
        singular_values: svd.singular_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankVerdict {
    /// Rank equals `L n_u + n_x + n_d`.
    Full,
    /// Rank equals `L n_u + n_x + nu` with `nu < n_d`.
    DeficientAsPredicted,
    /// Neither prediction matched.
    Unexpected,
}

#[derive(Debug, Clone)]
pub struct StateInputRank {
    pub rank: RankReport,
    pub full_rank: usize,
    pub predicted_rank: usize,
    pub nu: usize,
    /// `nu == n_d` with `n_d > 0`: the strict-inequality deficiency result
    /// does not apply and the prediction coincides with full rank.
    pub boundary: bool,
    pub verdict: RankVerdict,
    pub excitation: ExcitationReport,
}

impl StateInputRank {
    pub fn deficiency(&self) -> usize {
        self.full_rank.saturating_sub(self.rank.rank)
    }
}

/// `[H_1(xbar); H_L(u)]` over the columns the input data allow.
pub fn state_input_matrix(
    xbar: &[DVector<f64>],
    u: &[DVector<f64>],
    l: usize,
) -> Result<DMatrix<f64>> {
    if l == 0 || u.len() < l {
        return Err(Error::InsufficientData {
            what: "input samples for the depth-L Hankel",
            required: l.max(1),
            available: u.len(),
        });
    }
    let columns = u.len() - l + 1;
    if xbar.len() < columns {
        return Err(Error::InsufficientData {
            what: "augmented state samples",
            required: columns,
            available: xbar.len(),
        });
    }
    let hx = block_hankel(xbar, 0, 1, columns)?.matrix;
    let hu = block_hankel(u, 0, l, columns)?.matrix;
    Ok(vstack(&[&hx, &hu]))
}

/// Rank of the state-input data matrix compared against the full-rank and
/// the deficient predictions. `nu` is measured from `xbar_0`.
pub fn check_state_input_rank(
    system: &LtiDisturbedSystem,
    xbar: &[DVector<f64>],
    u: &[DVector<f64>],
    l: usize,
    rel_tol: f64,
) -> Result<StateInputRank> {
    let (nx, nd, nu_dim) = (system.states(), system.disturbances(), system.inputs());
    let nbar = nx + nd;
    let first = xbar.first().ok_or(Error::EmptyMatrix)?;
    Error::check_dim("augmented state", nbar, first.len())?;
    let excitation = is_persistently_exciting(u, l + nbar, rel_tol);
    if !excitation.exciting {
        return Err(Error::NotPersistentlyExciting(format!(
            "input is not persistently exciting of order {}: {}",
            l + nbar,
            excitation.reason
        )));
    }
    let nu = if nd == 0 {
        0
    } else {
        let d0 = first.rows(nx, nd).into_owned();
        controllability_rank(&system.ad, &DMatrix::from_column_slice(nd, 1, d0.as_slice()), rel_tol)?
            .rank
    };
    let m = state_input_matrix(xbar, u, l)?;
    let rank = numerical_rank(&m, rel_tol)?;
    let full_rank = l * nu_dim + nbar;
    let predicted_rank = l * nu_dim + nx + nu;
    let verdict = if rank.rank == full_rank {
        RankVerdict::Full
    } else if rank.rank == predicted_rank {
        RankVerdict::DeficientAsPredicted
    } else {
        RankVerdict::Unexpected
    };
    Ok(StateInputRank {
        rank,
        full_rank,
        predicted_rank,
        nu,
        boundary: nd > 0 && nu == nd,
        verdict,
        excitation,
    })
}

fn stacked_hankels(parts: &[&[DVector<f64>]], l: usize) -> Result<DMatrix<f64>> {
    let len = parts[0].len();
    if l == 0 || len < l {
        return Err(Error::InsufficientData {
            what: "data samples for the depth-L Hankel",
            required: l.max(1),
            available: len,
        });
    }
    let columns = len - l + 1;
    let mats = parts
        .iter()
        .map(|p| block_hankel(p, 0, l, columns).map(|h| h.matrix))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&DMatrix<f64>> = mats.iter().collect();
    Ok(vstack(&refs))
}

/// Least-squares `g` with `[H_L(u); H_L(y)] g = [u_target; y_target]` and
/// its relative residual.
pub fn represent_trajectory(
    u_data: &[DVector<f64>],
    y_data: &[DVector<f64>],
    target_u: &[DVector<f64>],
    target_y: &[DVector<f64>],
    l: usize,
    rel_tol: f64,
) -> Result<(DVector<f64>, f64)> {
    if u_data.len() != y_data.len() {
        return Err(Error::Length(format!(
            "{} input samples and {} output samples",
            u_data.len(),
            y_data.len()
        )));
    }
    Error::check_dim("target input length", l, target_u.len())?;
    Error::check_dim("target output length", l, target_y.len())?;
    let m = stacked_hankels(&[u_data, y_data], l)?;
    let target = crate::hankel::stack_vectors(target_u.iter().chain(target_y));
    min_norm_solve(&m, &target, rel_tol)
}

/// Least-squares `g` with `[H_1(xbar); H_L(u)] g = [xbar0; u_target]`.
pub fn verify_state_representation(
    xbar_data: &[DVector<f64>],
    u_data: &[DVector<f64>],
    target_xbar0: &DVector<f64>,
    target_u: &[DVector<f64>],
    rel_tol: f64,
) -> Result<(DVector<f64>, f64)> {
    let l = target_u.len();
    let m = state_input_matrix(xbar_data, u_data, l)?;
    let target = crate::hankel::stack_vectors(std::iter::once(target_xbar0).chain(target_u));
    Error::check_dim("state representation target", m.nrows(), target.len())?;
    min_norm_solve(&m, &target, rel_tol)
}

// ---------------------------------------------------------------------------
// random instances

/// Shape of a random test instance. `nu` is the Krylov rank of the
/// disturbance generator pair (at most `nd`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceShape {
    pub nx: usize,
    pub nu: usize,
    pub ny: usize,
    pub nd: usize,
    pub krylov_rank: usize,
    /// `Ad = I` (constant disturbance); forces `krylov_rank = 1`.
    pub constant: bool,
}

/// A random system together with the initial disturbance of its experiment.
#[derive(Debug, Clone)]
pub struct Instance {
    pub system: LtiDisturbedSystem,
    pub d0: DVector<f64>,
    pub shape: InstanceShape,
}

fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

fn random_orthogonal(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    gaussian(rng, n, n).qr().q()
}

fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Orthogonal block-diagonal matrix whose eigenvalues are well separated, so
/// a generic vector is cyclic.
fn separated_rotation(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    let mut i = 0;
    if n % 2 == 1 {
        m[(0, 0)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        i = 1;
    }
    let pairs = (n - i) / 2;
    let width = (std::f64::consts::PI - 0.4) / pairs.max(1) as f64;
    let mut slot = 0;
    while i < n {
        let theta = 0.2 + width * (slot as f64 + rng.random_range(0.15..0.85));
        let (s, c) = theta.sin_cos();
        m[(i, i)] = c;
        m[(i, i + 1)] = -s;
        m[(i + 1, i)] = s;
        m[(i + 1, i + 1)] = c;
        i += 2;
        slot += 1;
    }
    m
}

/// Draw a random instance: stable controllable `(A, B)`, orthogonal `Ad`
/// and `d0` whose Krylov space has the requested dimension.
pub fn random_instance(rng: &mut impl Rng, shape: InstanceShape) -> Result<Instance> {
    let InstanceShape { nx, nu, ny, nd, .. } = shape;
    let krylov_rank = if shape.constant { nd.min(1) } else { shape.krylov_rank };
    if krylov_rank > nd || (nd > 0 && krylov_rank == 0) {
        return Err(Error::Config(format!(
            "Krylov rank {krylov_rank} impossible with {nd} disturbance states"
        )));
    }
    for _ in 0..100 {
        let mut a = gaussian(rng, nx, nx);
        let radius = spectral_radius(&a);
        if radius < 1e-6 {
            continue;
        }
        a *= rng.random_range(0.5..0.95) / radius;
        let b = gaussian(rng, nx, nu);
        let ctrb = controllability_rank(&a, &b, DEFAULT_REL_TOL)?;
        let smin = ctrb.singular_values.get(nx.saturating_sub(1)).copied().unwrap_or(0.0);
        if nx > 0 && (ctrb.rank < nx || smin / ctrb.singular_values[0] < 1e-6) {
            continue;
        }
        let (ad, d0) = if shape.constant {
            (DMatrix::identity(nd, nd), gaussian(rng, nd, 1).column(0).into_owned())
        } else {
            let t = random_orthogonal(rng, nd);
            let mut block = DMatrix::zeros(nd, nd);
            block
                .view_mut((0, 0), (krylov_rank, krylov_rank))
                .copy_from(&separated_rotation(rng, krylov_rank));
            let rest = nd - krylov_rank;
            block
                .view_mut((krylov_rank, krylov_rank), (rest, rest))
                .copy_from(&separated_rotation(rng, rest));
            let mut v = DVector::zeros(nd);
            for i in 0..krylov_rank {
                let s: f64 = StandardNormal.sample(rng);
                v[i] = s.signum() * (0.5 + s.abs());
            }
            (&t * block * t.transpose(), &t * v)
        };
        if nd > 0 {
            let rep = controllability_rank(&ad, &DMatrix::from_column_slice(nd, 1, d0.as_slice()), DEFAULT_REL_TOL)?;
            let smin = rep.singular_values[krylov_rank - 1] / rep.singular_values[0];
            if rep.rank != krylov_rank || smin < 1e-4 {
                continue;
            }
        }
        let system = LtiDisturbedSystem::new(
            a,
            b,
            gaussian(rng, ny, nx),
            gaussian(rng, ny, nu),
            gaussian(rng, nx, nd),
            ad,
            gaussian(rng, ny, nd),
        )?;
        return Ok(Instance {
            system,
            d0,
            shape: InstanceShape { krylov_rank, ..shape },
        });
    }
    Err(Error::Config("could not draw a well-conditioned instance".into()))
}

/// Experiment data for a depth-`l` check with `extra` columns beyond the
/// minimum needed for the excitation test.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub u: Vec<DVector<f64>>,
    pub xbar: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
}

pub fn run_instance(rng: &mut impl Rng, inst: &Instance, l: usize, extra: usize) -> Result<Experiment> {
    let sys = &inst.system;
    let nbar = sys.augmented_dim();
    let order = l + nbar;
    // N columns in the order-(L + nbar) excitation Hankel need N + order - 1 samples
    let n_cols = order * sys.inputs() + extra;
    let len = n_cols + order - 1;
    let u: Vec<DVector<f64>> = (0..len)
        .map(|_| gaussian(rng, sys.inputs(), 1).column(0).into_owned())
        .collect();
    let mut xbar0 = DVector::zeros(nbar);
    xbar0
        .rows_mut(0, sys.states())
        .copy_from(&gaussian(rng, sys.states(), 1).column(0));
    xbar0.rows_mut(sys.states(), sys.disturbances()).copy_from(&inst.d0);
    let (xbar, y) = sys.simulate(&xbar0, &u)?;
    Ok(Experiment { u, xbar, y })
}

/// Random initial augmented state whose disturbance part lies in the span
/// of the measured disturbance orbit.
pub fn orbit_state(rng: &mut impl Rng, inst: &Instance) -> Result<DVector<f64>> {
    let sys = &inst.system;
    let (nx, nd) = (sys.states(), sys.disturbances());
    let mut x = DVector::zeros(nx + nd);
    x.rows_mut(0, nx).copy_from(&gaussian(rng, nx, 1).column(0));
    if nd > 0 {
        let rep = controllability_rank(&sys.ad, &DMatrix::from_column_slice(nd, 1, inst.d0.as_slice()), DEFAULT_REL_TOL)?;
        let coeff = gaussian(rng, rep.rank, 1).column(0).into_owned();
        x.rows_mut(nx, nd).copy_from(&(&rep.basis * coeff));
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// suites

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub shape: InstanceShape,
    pub depth: usize,
    pub expected_rank: usize,
    pub measured_rank: usize,
    pub residual: Option<f64>,
    pub boundary: bool,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub rows: Vec<TrialRow>,
    pub seconds: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }
    pub fn pass_count(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }
    pub fn max_residual(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.residual).reduce(f64::max)
    }
}

fn draw_shape(rng: &mut impl Rng, min_nd: usize) -> (InstanceShape, usize) {
    let nd = rng.random_range(min_nd..=3);
    let shape = InstanceShape {
        nx: rng.random_range(2..=4),
        nu: rng.random_range(1..=2),
        ny: rng.random_range(1..=3),
        nd,
        krylov_rank: nd,
        constant: false,
    };
    (shape, rng.random_range(2..=4))
}

fn fresh_residual(
    rng: &mut impl Rng,
    inst: &Instance,
    exp: &Experiment,
    l: usize,
) -> Result<f64> {
    let xbar0 = orbit_state(rng, inst)?;
    let u: Vec<DVector<f64>> = (0..l)
        .map(|_| gaussian(rng, inst.system.inputs(), 1).column(0).into_owned())
        .collect();
    let (_, y) = inst.system.simulate(&xbar0, &u)?;
    let (_, res_io) = represent_trajectory(&exp.u, &exp.y, &u, &y, l, SOLVE_TOL)?;
    let (_, res_state) = verify_state_representation(&exp.xbar, &exp.u, &xbar0, &u, SOLVE_TOL)?;
    Ok(res_io.max(res_state))
}

/// Full row rank for controllable disturbance generators.
pub fn full_rank_suite(seed: u64, trials: usize, rel_tol: f64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    for _ in 0..trials {
        let (shape, l) = draw_shape(&mut rng, 1);
        let inst = random_instance(&mut rng, shape)?;
        let exp = run_instance(&mut rng, &inst, l, 10)?;
        let rep = check_state_input_rank(&inst.system, &exp.xbar, &exp.u, l, rel_tol)?;
        rows.push(TrialRow {
            shape: inst.shape,
            depth: l,
            expected_rank: rep.full_rank,
            measured_rank: rep.rank.rank,
            residual: None,
            boundary: rep.boundary,
            pass: rep.rank.rank == rep.full_rank && rep.verdict == RankVerdict::Full,
        });
    }
    Ok(SuiteResult {
        name: "full row rank",
        rows,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Exact deficiency `n_d - nu` and fresh-trajectory representability.
pub fn deficient_rank_suite(seed: u64, trials: usize, rel_tol: f64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    for _ in 0..trials {
        let (mut shape, l) = draw_shape(&mut rng, 2);
        shape.krylov_rank = rng.random_range(1..shape.nd);
        let inst = random_instance(&mut rng, shape)?;
        let exp = run_instance(&mut rng, &inst, l, 10)?;
        let rep = check_state_input_rank(&inst.system, &exp.xbar, &exp.u, l, rel_tol)?;
        let residual = fresh_residual(&mut rng, &inst, &exp, l)?;
        rows.push(TrialRow {
            shape: inst.shape,
            depth: l,
            expected_rank: rep.predicted_rank,
            measured_rank: rep.rank.rank,
            residual: Some(residual),
            boundary: rep.boundary,
            pass: rep.rank.rank == l * shape.nu + shape.nx + shape.krylov_rank
                && rep.verdict == RankVerdict::DeficientAsPredicted
                && residual <= TRAJECTORY_TOL,
        });
    }
    Ok(SuiteResult {
        name: "deficient rank",
        rows,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Constant disturbances: `nu = 1` and representability.
pub fn constant_disturbance_suite(seed: u64, trials: usize, rel_tol: f64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    for _ in 0..trials {
        let (mut shape, l) = draw_shape(&mut rng, 1);
        shape.constant = true;
        let inst = random_instance(&mut rng, shape)?;
        let exp = run_instance(&mut rng, &inst, l, 10)?;
        let rep = check_state_input_rank(&inst.system, &exp.xbar, &exp.u, l, rel_tol)?;
        let residual = fresh_residual(&mut rng, &inst, &exp, l)?;
        rows.push(TrialRow {
            shape: inst.shape,
            depth: l,
            expected_rank: l * shape.nu + shape.nx + 1,
            measured_rank: rep.rank.rank,
            residual: Some(residual),
            boundary: rep.boundary,
            pass: rep.nu == 1
                && rep.rank.rank == l * shape.nu + shape.nx + 1
                && residual <= TRAJECTORY_TOL,
        });
    }
    Ok(SuiteResult {
        name: "constant disturbance",
        rows,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// No disturbance: the classical full rank `L n_u + n_x`.
pub fn undisturbed_suite(seed: u64, trials: usize, rel_tol: f64) -> Result<SuiteResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(trials);
    for _ in 0..trials {
        let (mut shape, l) = draw_shape(&mut rng, 0);
        shape.nd = 0;
        shape.krylov_rank = 0;
        let inst = random_instance(&mut rng, shape)?;
        let exp = run_instance(&mut rng, &inst, l, 10)?;
        let rep = check_state_input_rank(&inst.system, &exp.xbar, &exp.u, l, rel_tol)?;
        let residual = fresh_residual(&mut rng, &inst, &exp, l)?;
        rows.push(TrialRow {
            shape: inst.shape,
            depth: l,
            expected_rank: l * shape.nu + shape.nx,
            measured_rank: rep.rank.rank,
            residual: Some(residual),
            boundary: false,
            pass: rep.rank.rank == l * shape.nu + shape.nx && residual <= TRAJECTORY_TOL,
        });
    }
    Ok(SuiteResult {
        name: "no disturbance",
        rows,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Deficiency of the lifted case-study plant with its constant lifted
/// disturbance, from a noiseless experiment with white input.
#[derive(Debug, Clone)]
pub struct LiftedDeficiency {
    pub report: StateInputRank,
    pub expected_deficiency: usize,
}

pub fn lifted_deficiency(
    lifted: &LiftedSystem,
    disturbance: &DVector<f64>,
    l: usize,
    seed: u64,
    rel_tol: f64,
) -> Result<LiftedDeficiency> {
    let system = LtiDisturbedSystem::from_lifted(lifted);
    Error::check_dim("lifted disturbance", system.disturbances(), disturbance.len())?;
    let inst = Instance {
        shape: InstanceShape {
            nx: system.states(),
            nu: system.inputs(),
            ny: system.outputs(),
            nd: system.disturbances(),
            krylov_rank: 1,
            constant: true,
        },
        d0: disturbance.clone(),
        system,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = run_instance(&mut rng, &inst, l, 20)?;
    let report = check_state_input_rank(&inst.system, &exp.xbar, &exp.u, l, rel_tol)?;
    Ok(LiftedDeficiency {
        report,
        expected_deficiency: inst.shape.nd - 1,
    })
}

/// All randomized suites with `trials` instances each.
pub fn run_all(seed: u64, trials: usize, rel_tol: f64) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        undisturbed_suite(seed, trials, rel_tol)?,
        full_rank_suite(seed.wrapping_add(1), trials, rel_tol)?,
        deficient_rank_suite(seed.wrapping_add(2), trials, rel_tol)?,
        constant_disturbance_suite(seed.wrapping_add(3), trials, rel_tol)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(v.len(), 1, v)
    }

    #[test]
    fn controllability_examples() {
        let rep = controllability_rank(&DMatrix::identity(2, 2), &col(&[1.0, 0.0]), 1e-8).unwrap();
        assert_eq!(rep.rank, 1);
        assert_eq!(rep.basis.ncols(), 1);
        assert!((rep.basis.column(0).norm() - 1.0).abs() < 1e-12);

        let shift = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let rep = controllability_rank(&shift, &col(&[0.0, 1.0]), 1e-8).unwrap();
        assert_eq!(rep.rank, 2);
        assert!(rep.is_controllable());

        assert!(controllability_rank(&DMatrix::identity(2, 2), &col(&[1.0, 0.0, 0.0]), 1e-8).is_err());
    }

    #[test]
    fn case_study_lifted_pair_is_controllable() {
        let lifted = crate::lifting::lift_system(&crate::plant::LptvPlant::case_study(), 0);
        let rep = controllability_rank(&lifted.a, &lifted.b, 1e-8).unwrap();
        assert_eq!(rep.rank, 3);
    }

    #[test]
    fn constant_scalar_disturbance_gives_full_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let shape = InstanceShape { nx: 2, nu: 1, ny: 2, nd: 1, krylov_rank: 1, constant: true };
        let inst = random_instance(&mut rng, shape).unwrap();
        let exp = run_instance(&mut rng, &inst, 3, 10).unwrap();
        let rep = check_state_input_rank(&inst.system, &exp.xbar, &exp.u, 3, 1e-8).unwrap();
        // SVD oracle on the assembled matrix
        let m = state_input_matrix(&exp.xbar, &exp.u, 3).unwrap();
        let sv = m.singular_values();
        let oracle = sv.iter().filter(|&&s| s > 1e-8 * sv.max()).count();
        assert_eq!(rep.rank.rank, oracle);
        assert_eq!(oracle, 3 + 2 + 1);
        assert_eq!(rep.verdict, RankVerdict::Full);
        assert!(rep.boundary);
    }

    #[test]
    fn constant_two_dim_disturbance_loses_one_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let shape = InstanceShape { nx: 2, nu: 1, ny: 2, nd: 2, krylov_rank: 1, constant: true };
        let inst = random_instance(&mut rng, shape).unwrap();
        let exp = run_instance(&mut rng, &inst, 2, 10).unwrap();
        let rep = check_state_input_rank(&inst.system, &exp.xbar, &exp.u, 2, 1e-8).unwrap();
        assert_eq!(rep.deficiency(), 1);
        assert_eq!(rep.verdict, RankVerdict::DeficientAsPredicted);
        assert!(!rep.boundary);
    }

    #[test]
    fn no_disturbance_is_classical() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let shape = InstanceShape { nx: 3, nu: 2, ny: 1, nd: 0, krylov_rank: 0, constant: false };
        let inst = random_instance(&mut rng, shape).unwrap();
        let exp = run_instance(&mut rng, &inst, 2, 10).unwrap();
        let rep = check_state_input_rank(&inst.system, &exp.xbar, &exp.u, 2, 1e-8).unwrap();
        assert_eq!(rep.rank.rank, 2 * 2 + 3);
    }

    #[test]
    fn short_input_fails_excitation() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let shape = InstanceShape { nx: 2, nu: 1, ny: 1, nd: 1, krylov_rank: 1, constant: true };
        let inst = random_instance(&mut rng, shape).unwrap();
        let exp = run_instance(&mut rng, &inst, 2, 10).unwrap();
        let err = check_state_input_rank(&inst.system, &exp.xbar[..5], &exp.u[..5], 2, 1e-8).unwrap_err();
        assert!(matches!(err, Error::NotPersistentlyExciting(_)));
    }

    #[test]
    fn representation_residuals() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let shape = InstanceShape { nx: 3, nu: 1, ny: 2, nd: 3, krylov_rank: 2, constant: false };
        let inst = random_instance(&mut rng, shape).unwrap();
        let l = 3;
        let exp = run_instance(&mut rng, &inst, l, 10).unwrap();

        // data column: exact with a unit coordinate vector available
        let (_, res) = represent_trajectory(&exp.u, &exp.y, &exp.u[4..4 + l], &exp.y[4..4 + l], l, 1e-8).unwrap();
        assert!(res < 1e-12);
        let (_, res) = verify_state_representation(&exp.xbar, &exp.u, &exp.xbar[4], &exp.u[4..4 + l], 1e-8).unwrap();
        assert!(res < 1e-12);

        // fresh trajectory in the orbit span
        let res = fresh_residual(&mut rng, &inst, &exp, l).unwrap();
        assert!(res <= TRAJECTORY_TOL, "{res}");

        // perturbed output sample
        let mut y = exp.y[7..7 + l].to_vec();
        y[1][0] += 0.1;
        let (_, res) = represent_trajectory(&exp.u, &exp.y, &exp.u[7..7 + l], &y, l, 1e-8).unwrap();
        assert!(res > NON_TRAJECTORY_TOL, "{res}");

        // disturbance component outside the orbit span
        let rep = controllability_rank(&inst.system.ad, &col(inst.d0.as_slice()), 1e-8).unwrap();
        let proj = DMatrix::identity(3, 3) - &rep.basis * rep.basis.transpose();
        let outside = proj * gaussian(&mut rng, 3, 1);
        let mut xbar0 = exp.xbar[2].clone();
        xbar0.rows_mut(3, 3).copy_from(&outside.column(0));
        let (_, res) = verify_state_representation(&exp.xbar, &exp.u, &xbar0, &exp.u[2..2 + l], 1e-8).unwrap();
        assert!(res > NON_TRAJECTORY_TOL, "{res}");
    }

    #[test]
    fn insufficient_representation_data() {
        let u = vec![DVector::from_element(1, 1.0); 2];
        let t = vec![DVector::from_element(1, 1.0); 3];
        assert!(matches!(
            represent_trajectory(&u, &u, &t, &t, 3, 1e-8),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn many_seeds_pass() {
        for seed in 0..10 {
            for suite in run_all(seed * 100, 50, DEFAULT_REL_TOL).unwrap() {
                let bad: Vec<_> = suite.rows.iter().filter(|r| !r.pass).collect();
                assert!(bad.is_empty(), "seed {seed} {}: {bad:?}", suite.name);
            }
        }
    }

    #[test]
    fn small_suites_pass() {
        for suite in run_all(5, 4, DEFAULT_REL_TOL).unwrap() {
            assert!(suite.passed(), "{}: {:?}", suite.name, suite.rows);
        }
    }

    #[test]
    fn augmented_matrices_have_block_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let shape = InstanceShape { nx: 2, nu: 1, ny: 1, nd: 2, krylov_rank: 2, constant: false };
        let inst = random_instance(&mut rng, shape).unwrap();
        let al = inst.system.augmented_state_matrix();
        assert_eq!(al.view((2, 0), (2, 2)).amax(), 0.0);
        assert_eq!(inst.system.augmented_input_matrix().rows(2, 2).amax(), 0.0);
        // orthogonal generator keeps the disturbance bounded
        let ad = &inst.system.ad;
        assert!((ad.transpose() * ad - DMatrix::identity(2, 2)).amax() < 1e-12);
    }
}
