//! Closed-loop data-driven multi-step output predictor.
//!
//! Data columns pair an instrument vector
//!
//! ```text
//! z_t = [u_{t-p} .. u_{t-1}; u_t; y_{t-p} .. y_{t-1}]
//! ```
//!
//! with the output `y_t`. Stacking the columns gives the instrument matrix
//! `Z` (past-input, current-input and past-output Hankel blocks) and the
//! one-step output row `Y`. A prediction `f` steps ahead chains `f` one-step
//! predictions `y_hat = Y Z' (Z Z')^+ z_bar`, where `z_bar` contains earlier
//! predictions once the past window reaches into the future. Because every
//! link is linear, the chain collapses to an affine map
//!
//! ```text
//! [y_hat_t; ..; y_hat_{t+f-1}] = Gamma [u_t; ..; u_{t+f-1}] + Lambda w_past
//! ```
//!
//! which is what the controller optimizes over. The data are kept as an
//! incrementally updated triangular factor of `[Z; Y]'`, so refitting after
//! each new sample costs a rotation sweep and one small SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hankel::{numerical_rank, RankReport, Signal};

/// Upper-triangular factor `R` of a growing tall matrix `M = Q R`, updated one
/// row at a time with Givens rotations.
#[derive(Debug, Clone)]
struct RowFactor {
    r: DMatrix<f64>,
    rows: usize,
}

impl RowFactor {
    fn new(dim: usize) -> Self {
        RowFactor {
            r: DMatrix::zeros(dim, dim),
            rows: 0,
        }
    }

    fn add_row(&mut self, row: &DVector<f64>) {
        let n = self.r.nrows();
        let mut w = row.clone();
        for i in 0..n {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            let rii = self.r[(i, i)];
            let h = rii.hypot(wi);
            let (c, s) = (rii / h, wi / h);
            self.r[(i, i)] = h;
            w[i] = 0.0;
            for j in (i + 1)..n {
                let a = self.r[(i, j)];
                let b = w[j];
                self.r[(i, j)] = c * a + s * b;
                w[j] = -s * a + c * b;
            }
        }
        self.rows += 1;
    }
}

/// Past inputs and outputs preceding the first predicted sample, oldest first.
#[derive(Debug, Clone, PartialEq)]
pub struct PastWindow {
    pub u: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
}

impl PastWindow {
    pub fn zeros(past: usize, input_dim: usize, output_dim: usize) -> Self {
        PastWindow {
            u: vec![DVector::zeros(input_dim); past],
            y: vec![DVector::zeros(output_dim); past],
        }
    }

    /// `[u_{t-p}; ..; u_{t-1}; y_{t-p}; ..; y_{t-1}]`.
    pub fn to_vector(&self) -> DVector<f64> {
        crate::hankel::stack_vectors(self.u.iter().chain(&self.y))
    }
}

/// Input/output record with the windows used to form predictor data.
#[derive(Debug, Clone)]
pub struct DataBuffer {
    input_dim: usize,
    output_dim: usize,
    past: usize,
    horizon: usize,
    u: Vec<DVector<f64>>,
    y: Vec<DVector<f64>>,
    segment_start: usize,
    /// Sample index `t` of every data column, in insertion order.
    column_times: Vec<usize>,
    window: Option<usize>,
    factor: RowFactor,
}

impl DataBuffer {
    pub fn new(input_dim: usize, output_dim: usize, past: usize, horizon: usize) -> Self {
        assert!(past >= 1 && horizon >= 1, "past and horizon must be positive");
        let dim = (past + 1) * input_dim + past * output_dim + output_dim;
        DataBuffer {
            input_dim,
            output_dim,
            past,
            horizon,
            u: Vec::new(),
            y: Vec::new(),
            segment_start: 0,
            column_times: Vec::new(),
            window: None,
            factor: RowFactor::new(dim),
        }
    }

    /// Use only the most recent `columns` data columns when fitting.
    pub fn with_window(mut self, columns: Option<usize>) -> Self {
        self.window = columns;
        self
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }
    pub fn past(&self) -> usize {
        self.past
    }
    pub fn horizon(&self) -> usize {
        self.horizon
    }
    pub fn len(&self) -> usize {
        self.u.len()
    }
    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Rows of the instrument matrix: `(p + 1) du + p dy`.
    pub fn instrument_rows(&self) -> usize {
        (self.past + 1) * self.input_dim + self.past * self.output_dim
    }

    /// Number of data columns that enter the fit.
    pub fn columns(&self) -> usize {
        match self.window {
            Some(w) => self.column_times.len().min(w),
            None => self.column_times.len(),
        }
    }

    /// Later samples form a separate experiment; no data column straddles
    /// the boundary.
    pub fn begin_segment(&mut self) {
        self.segment_start = self.u.len();
    }

    fn column(&self, t: usize) -> DVector<f64> {
        let p = self.past;
        crate::hankel::stack_vectors(
            self.u[t - p..=t]
                .iter()
                .chain(&self.y[t - p..t])
                .chain(std::iter::once(&self.y[t])),
        )
    }

    pub fn push(&mut self, u: DVector<f64>, y: DVector<f64>) -> Result<()> {
        Error::check_dim("buffered input", self.input_dim, u.len())?;
        Error::check_dim("buffered output", self.output_dim, y.len())?;
        self.u.push(u);
        self.y.push(y);
        let t = self.u.len() - 1;
        if t >= self.segment_start + self.past {
            self.column_times.push(t);
            match self.window {
                Some(w) if self.column_times.len() > w => self.refactor(),
                _ => {
                    let col = self.column(t);
                    self.factor.add_row(&col);
                }
            }
        }
        Ok(())
    }

    fn active_times(&self) -> &[usize] {
        let n = self.columns();
        &self.column_times[self.column_times.len() - n..]
    }

    fn refactor(&mut self) {
        let mut factor = RowFactor::new(self.factor.r.nrows());
        for &t in self.active_times() {
            factor.add_row(&self.column(t));
        }
        self.factor = factor;
    }

    /// The most recent `p` samples.
    pub fn past_window(&self) -> Result<PastWindow> {
        let p = self.past;
        if self.u.len() < p {
            return Err(Error::InsufficientData {
                what: "past window",
                required: p,
                available: self.u.len(),
            });
        }
        let n = self.u.len();
        Ok(PastWindow {
            u: self.u[n - p..].to_vec(),
            y: self.y[n - p..].to_vec(),
        })
    }

    /// Explicit instrument matrix `Z` over the active columns.
    pub fn build_instrument(&self) -> Result<DMatrix<f64>> {
        let times = self.active_times();
        if times.is_empty() {
            return Err(Error::InsufficientData {
                what: "instrument matrix",
                required: self.past + 1,
                available: self.u.len(),
            });
        }
        let rows = self.instrument_rows();
        let mut z = DMatrix::zeros(rows, times.len());
        for (j, &t) in times.iter().enumerate() {
            z.column_mut(j).copy_from(&self.column(t).rows(0, rows));
        }
        Ok(z)
    }

    /// Explicit one-step output row `Y` over the active columns.
    pub fn target_outputs(&self) -> Result<DMatrix<f64>> {
        let times = self.active_times();
        let mut y = DMatrix::zeros(self.output_dim, times.len());
        for (j, &t) in times.iter().enumerate() {
            y.column_mut(j).copy_from(&self.y[t]);
        }
        Ok(y)
    }
}

/// Fitted predictor: the one-step map and the equivalent affine
/// multi-step map.
#[derive(Debug, Clone)]
pub struct PredictorModel {
    pub input_dim: usize,
    pub output_dim: usize,
    pub past: usize,
    pub horizon: usize,
    /// `Y Z' (Z Z')^+`, `dy x nz`.
    pub one_step: DMatrix<f64>,
    /// Triangular factor with `Z Z' = R' R`; absent for hand-built models.
    pub gram_factor: Option<DMatrix<f64>>,
    /// Cross factor with `Z Y' = R' S`.
    pub cross_factor: Option<DMatrix<f64>>,
    /// `Gamma`, `f dy x f du`.
    pub future_gain: DMatrix<f64>,
    /// `Lambda`, `f dy x (p du + p dy)`.
    pub past_gain: DMatrix<f64>,
    pub instrument_rank: Option<RankReport>,
    pub columns: usize,
}

/// Fit the predictor to the buffer's active data.
pub fn fit_predictor(buffer: &DataBuffer, rel_tol: f64) -> Result<PredictorModel> {
    let nz = buffer.instrument_rows();
    let ku = (buffer.past + 1) * buffer.input_dim;
    let columns = buffer.columns();
    if columns == 0 {
        return Err(Error::InsufficientData {
            what: "predictor fit",
            required: buffer.past + 1,
            available: buffer.len(),
        });
    }
    let r = &buffer.factor.r;
    let r11 = r.view((0, 0), (nz, nz)).into_owned();
    let r12 = r.view((0, nz), (nz, buffer.output_dim)).into_owned();

    // the leading block of the factor belongs to the input rows alone
    let input_block = r11.view((0, 0), (ku, ku)).into_owned();
    let input_rank = numerical_rank(&input_block, rel_tol)?;
    if input_rank.rank < ku {
        return Err(Error::NotPersistentlyExciting(format!(
            "input rows of the instrument have rank {} of {ku} over {columns} columns",
            input_rank.rank
        )));
    }

    let svd = crate::linalg::svd(&r11)?;
    let rank = svd.rank(rel_tol);
    let theta_t = svd.solve_truncated(&r12, rank)?;
    let sv = svd.singular_values;
    let one_step = theta_t.transpose();
    let (future_gain, past_gain) = chain(
        &one_step,
        buffer.input_dim,
        buffer.output_dim,
        buffer.past,
        buffer.horizon,
    );
    Ok(PredictorModel {
        input_dim: buffer.input_dim,
        output_dim: buffer.output_dim,
        past: buffer.past,
        horizon: buffer.horizon,
        one_step,
        gram_factor: Some(r11),
        cross_factor: Some(r12),
        future_gain,
        past_gain,
        instrument_rank: Some(RankReport {
            rank,
            singular_values: sv,
            rel_tol,
        }),
        columns,
    })
}

/// Collapse `horizon` chained one-step predictions into `(Gamma, Lambda)`.
fn chain(
    theta: &DMatrix<f64>,
    du: usize,
    dy: usize,
    p: usize,
    f: usize,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let pu = p * du;
    let py = p * dy;
    let width = pu + py + f * du;
    let u_cur = pu;
    let y_off = pu + du;
    let mut rows: Vec<DMatrix<f64>> = Vec::with_capacity(f);
    for s in 0..f {
        let mut m = DMatrix::zeros(dy, width);
        // past and current input blocks: sample t + s - p + i
        for i in 0..=p {
            let theta_block = if i < p {
                theta.columns(i * du, du)
            } else {
                theta.columns(u_cur, du)
            };
            let idx = s + i;
            let col = if idx < p {
                idx * du
            } else {
                pu + py + (idx - p) * du
            };
            let mut target = m.columns_mut(col, du);
            target += theta_block;
        }
        for i in 0..p {
            let theta_block = theta.columns(y_off + i * dy, dy);
            let idx = s + i;
            if idx < p {
                let mut target = m.columns_mut(pu + idx * dy, dy);
                target += theta_block;
            } else {
                m += theta_block * &rows[idx - p];
            }
        }
        rows.push(m);
    }
    let mut future = DMatrix::zeros(f * dy, f * du);
    let mut past = DMatrix::zeros(f * dy, pu + py);
    for (s, m) in rows.iter().enumerate() {
        past.view_mut((s * dy, 0), (dy, pu + py))
            .copy_from(&m.columns(0, pu + py));
        future
            .view_mut((s * dy, 0), (dy, f * du))
            .copy_from(&m.columns(pu + py, f * du));
    }
    (future, past)
}

impl PredictorModel {
    /// Model defined directly by its affine map.
    pub fn from_affine(
        input_dim: usize,
        output_dim: usize,
        past: usize,
        horizon: usize,
        future_gain: DMatrix<f64>,
        past_gain: DMatrix<f64>,
    ) -> Result<Self> {
        Error::check_dim("future gain rows", horizon * output_dim, future_gain.nrows())?;
        Error::check_dim("future gain columns", horizon * input_dim, future_gain.ncols())?;
        Error::check_dim("past gain rows", horizon * output_dim, past_gain.nrows())?;
        Error::check_dim(
            "past gain columns",
            past * (input_dim + output_dim),
            past_gain.ncols(),
        )?;
        Ok(PredictorModel {
            input_dim,
            output_dim,
            past,
            horizon,
            one_step: DMatrix::zeros(output_dim, (past + 1) * input_dim + past * output_dim),
            gram_factor: None,
            cross_factor: None,
            future_gain,
            past_gain,
            instrument_rank: None,
            columns: 0,
        })
    }

    /// Same one-step map chained over a different horizon.
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if self.gram_factor.is_none() {
            return Err(Error::Config("model has no one-step map to re-chain".into()));
        }
        if horizon == 0 {
            return Err(Error::Config("horizon must be positive".into()));
        }
        let (future_gain, past_gain) = chain(
            &self.one_step,
            self.input_dim,
            self.output_dim,
            self.past,
            horizon,
        );
        Ok(PredictorModel {
            horizon,
            future_gain,
            past_gain,
            ..self.clone()
        })
    }

    fn check_inputs(&self, past: &PastWindow, future: &[DVector<f64>]) -> Result<()> {
        Error::check_dim("past inputs", self.past, past.u.len())?;
        Error::check_dim("past outputs", self.past, past.y.len())?;
        Error::check_dim("future inputs", self.horizon, future.len())?;
        for u in past.u.iter().chain(future) {
            Error::check_dim("input sample", self.input_dim, u.len())?;
        }
        for y in &past.y {
            Error::check_dim("output sample", self.output_dim, y.len())?;
        }
        Ok(())
    }

    /// `Lambda w_past`: the predicted outputs for zero future input.
    pub fn free_response(&self, past: &PastWindow) -> Result<DVector<f64>> {
        Error::check_dim("past window", self.past_gain.ncols(), past.to_vector().len())?;
        Ok(&self.past_gain * past.to_vector())
    }

    /// Stacked predictions `Gamma u_future + Lambda w_past`.
    pub fn predict_stacked(&self, past: &PastWindow, future: &[DVector<f64>]) -> Result<DVector<f64>> {
        self.check_inputs(past, future)?;
        let u = crate::hankel::stack_vectors(future);
        Ok(&self.future_gain * u + &self.past_gain * past.to_vector())
    }

    /// Predicted outputs, one vector per future step.
    pub fn predict(&self, past: &PastWindow, future: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let stacked = self.predict_stacked(past, future)?;
        Ok(stacked
            .as_slice()
            .chunks(self.output_dim)
            .map(DVector::from_column_slice)
            .collect())
    }

    /// The `z_bar` column for each future step, filled sequentially with
    /// measured data and earlier predictions.
    fn recursion_columns(
        &self,
        past: &PastWindow,
        future: &[DVector<f64>],
    ) -> Result<(Signal, Signal)> {
        self.check_inputs(past, future)?;
        let p = self.past;
        let mut u_seq: Vec<&DVector<f64>> = past.u.iter().chain(future).collect();
        u_seq.truncate(p + self.horizon);
        let mut y_seq: Vec<DVector<f64>> = past.y.clone();
        let mut columns = Vec::with_capacity(self.horizon);
        let mut predictions = Vec::with_capacity(self.horizon);
        for s in 0..self.horizon {
            let z = crate::hankel::stack_vectors(
                u_seq[s..=s + p].iter().copied().chain(y_seq[s..s + p].iter()),
            );
            let y_hat = &self.one_step * &z;
            columns.push(z);
            y_seq.push(y_hat.clone());
            predictions.push(y_hat);
        }
        Ok((columns, predictions))
    }

    /// Predictions by running the one-step recursion explicitly.
    pub fn predict_recursive(
        &self,
        past: &PastWindow,
        future: &[DVector<f64>],
    ) -> Result<Vec<DVector<f64>>> {
        Ok(self.recursion_columns(past, future)?.1)
    }

    /// Coefficient matrix `G = [g_1 .. g_f]` solving `Z Z' G = Z_bar`, and
    /// the predictions `Y Z' G` it produces.
    pub fn coefficients(
        &self,
        past: &PastWindow,
        future: &[DVector<f64>],
        rel_tol: f64,
    ) -> Result<(DMatrix<f64>, Vec<DVector<f64>>)> {
        let (Some(r), Some(s)) = (&self.gram_factor, &self.cross_factor) else {
            return Err(Error::Config("model has no data factor".into()));
        };
        let (cols, _) = self.recursion_columns(past, future)?;
        let gram = r.transpose() * r;
        let svd = crate::linalg::svd(&gram)?;
        let mut g = DMatrix::zeros(r.nrows(), self.horizon);
        let mut preds = Vec::with_capacity(self.horizon);
        for (j, z) in cols.iter().enumerate() {
            let gj = svd.solve_vector(z, rel_tol * rel_tol)?;
            // Y Z' g = S' R g
            preds.push(s.transpose() * (r * &gj));
            g.column_mut(j).copy_from(&gj);
        }
        Ok((g, preds))
    }
}
