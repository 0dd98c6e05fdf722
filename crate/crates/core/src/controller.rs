//! Receding-horizon control over the data-driven predictor.
//!
//! Each decision refits the predictor on the buffered data, then solves
//!
//! ```text
//! min  |y_hat - ref|_Q^2 + |u|_R^2 + rho * sum(s)
//! s.t. y_hat = Gamma u + Lambda w_past
//!      u_min <= u <= u_max
//!      y_min - s <= y_hat <= y_max + s,  s >= 0
//! ```
//!
//! as a dense convex QP. Input bounds are hard, output bounds soft.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::config::{ControllerSettings, Policy};
use crate::error::{Error, Result};
use crate::predictor::{fit_predictor, DataBuffer, PastWindow, PredictorModel};
use crate::qp::{self, QpOptions, QpProblem};

/// Weights and bounds for one block (one lifted sample, or one plain sample
/// for the baseline), repeated over the horizon.
#[derive(Debug, Clone)]
pub struct OcpConfig {
    pub past: usize,
    pub horizon: usize,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub u_min: DVector<f64>,
    pub u_max: DVector<f64>,
    pub y_min: DVector<f64>,
    pub y_max: DVector<f64>,
    pub slack_penalty: f64,
    /// Stacked output reference over the horizon; regulation to zero if unset.
    pub reference: Option<DVector<f64>>,
    pub qp: QpOptions,
}

fn per_channel(values: &[f64], channels: usize, fill: f64, what: &str) -> Result<Vec<f64>> {
    match values.len() {
        0 => Ok(vec![fill; channels]),
        1 => Ok(vec![values[0]; channels]),
        n if n == channels => Ok(values.to_vec()),
        n => Err(Error::Config(format!(
            "{what} has {n} entries for {channels} channels"
        ))),
    }
}

fn repeat(per_sample: &[f64], samples: usize) -> DVector<f64> {
    DVector::from_iterator(
        per_sample.len() * samples,
        (0..samples).flat_map(|_| per_sample.iter().copied()),
    )
}

impl OcpConfig {
    /// Block configuration covering `samples` consecutive plant samples with
    /// `inputs` and `outputs` channels each.
    pub fn from_settings(
        settings: &ControllerSettings,
        samples: usize,
        inputs: usize,
        outputs: usize,
        past: usize,
        horizon: usize,
    ) -> Result<Self> {
        let du = samples * inputs;
        let dy = samples * outputs;
        let u_min = per_channel(&settings.u_min, inputs, f64::NEG_INFINITY, "u_min")?;
        let u_max = per_channel(&settings.u_max, inputs, f64::INFINITY, "u_max")?;
        let y_min = per_channel(&settings.y_min, outputs, f64::NEG_INFINITY, "y_min")?;
        let y_max = per_channel(&settings.y_max, outputs, f64::INFINITY, "y_max")?;
        let cfg = OcpConfig {
            past,
            horizon,
            q: DMatrix::identity(dy, dy) * settings.q,
            r: DMatrix::identity(du, du) * settings.r,
            u_min: repeat(&u_min, samples),
            u_max: repeat(&u_max, samples),
            y_min: repeat(&y_min, samples),
            y_max: repeat(&y_max, samples),
            slack_penalty: settings
                .slack_penalty
                .unwrap_or(1e4 * settings.q.max(settings.r)),
            reference: None,
            qp: QpOptions {
                max_iterations: settings.max_qp_iterations,
                ..QpOptions::default()
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn input_dim(&self) -> usize {
        self.r.nrows()
    }
    pub fn output_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (du, dy) = (self.input_dim(), self.output_dim());
        if self.past == 0 || self.horizon == 0 {
            return Err(Error::Config("past window and horizon must be positive".into()));
        }
        Error::check_dim("Q columns", dy, self.q.ncols())?;
        Error::check_dim("R columns", du, self.r.ncols())?;
        Error::check_dim("u_min", du, self.u_min.len())?;
        Error::check_dim("u_max", du, self.u_max.len())?;
        Error::check_dim("y_min", dy, self.y_min.len())?;
        Error::check_dim("y_max", dy, self.y_max.len())?;
        if let Some(r) = &self.reference {
            Error::check_dim("reference", self.horizon * dy, r.len())?;
        }
        let asym = |m: &DMatrix<f64>| (m - m.transpose()).amax();
        let tol = |m: &DMatrix<f64>| 1e-10 * (1.0 + m.amax());
        if asym(&self.q) > tol(&self.q) || asym(&self.r) > tol(&self.r) {
            return Err(Error::Config("Q and R must be symmetric".into()));
        }
        let q_min = crate::linalg::min_symmetric_eigenvalue(&self.q)?;
        if q_min < -tol(&self.q) {
            return Err(Error::Config(format!(
                "Q must be positive semi-definite (smallest eigenvalue {q_min:e})"
            )));
        }
        let r_min = crate::linalg::min_symmetric_eigenvalue(&self.r)?;
        if r_min <= tol(&self.r) {
            return Err(Error::Config(format!(
                "R must be positive definite (smallest eigenvalue {r_min:e})"
            )));
        }
        let ordered = |lo: &DVector<f64>, hi: &DVector<f64>| {
            lo.iter().zip(hi.iter()).all(|(a, b)| a <= b && !a.is_nan() && !b.is_nan())
        };
        if !ordered(&self.u_min, &self.u_max) || !ordered(&self.y_min, &self.y_max) {
            return Err(Error::Config("bounds must satisfy min <= max".into()));
        }
        if !(self.slack_penalty > 0.0 && self.slack_penalty.is_finite()) {
            return Err(Error::Config("slack penalty must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Outcome of one optimization.
#[derive(Debug, Clone)]
pub struct ControlDecision {
    /// Planned inputs, one block per horizon step.
    pub inputs: Vec<DVector<f64>>,
    pub predicted: Vec<DVector<f64>>,
    /// Output-constraint relaxation, one entry per softened output.
    pub slacks: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Largest scaled KKT residual at the returned point.
    pub kkt: f64,
    /// Objective at every solver iterate.
    pub trace: Vec<f64>,
}

fn block_diag(block: &DMatrix<f64>, copies: usize) -> DMatrix<f64> {
    let (r, c) = block.shape();
    let mut m = DMatrix::zeros(r * copies, c * copies);
    for i in 0..copies {
        m.view_mut((i * r, i * c), (r, c)).copy_from(block);
    }
    m
}

/// Solve the receding-horizon problem for the given past window.
pub fn solve_ocp(
    model: &PredictorModel,
    past: &PastWindow,
    cfg: &OcpConfig,
) -> Result<ControlDecision> {
    cfg.validate()?;
    let (du, dy, f) = (cfg.input_dim(), cfg.output_dim(), cfg.horizon);
    Error::check_dim("predictor input dimension", du, model.input_dim)?;
    Error::check_dim("predictor output dimension", dy, model.output_dim)?;
    Error::check_dim("predictor horizon", f, model.horizon)?;
    Error::check_dim("predictor past window", cfg.past, model.past)?;
    let gamma = &model.future_gain;
    let free = model.free_response(past)?;
    let offset = match &cfg.reference {
        Some(r) => &free - r,
        None => free.clone(),
    };
    let qbar = block_diag(&cfg.q, f);
    let rbar = block_diag(&cfg.r, f);
    let nu = f * du;
    let y_min = repeat(cfg.y_min.as_slice(), f);
    let y_max = repeat(cfg.y_max.as_slice(), f);
    let u_min = repeat(cfg.u_min.as_slice(), f);
    let u_max = repeat(cfg.u_max.as_slice(), f);

    let soft: Vec<usize> = (0..f * dy)
        .filter(|&i| y_min[i].is_finite() || y_max[i].is_finite())
        .collect();
    let ns = soft.len();
    let n = nu + ns;

    let gq = gamma.transpose() * &qbar;
    let mut hessian = DMatrix::zeros(n, n);
    let huu = (&gq * gamma + &rbar) * 2.0;
    hessian.view_mut((0, 0), (nu, nu)).copy_from(&huu);
    let mut linear = DVector::zeros(n);
    linear.rows_mut(0, nu).copy_from(&(&gq * &offset * 2.0));
    linear.rows_mut(nu, ns).fill(cfg.slack_penalty);
    let constant = offset.dot(&(&qbar * &offset));

    let mut rows: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in 0..nu {
        if u_max[i].is_finite() {
            let mut a = DVector::zeros(n);
            a[i] = 1.0;
            rows.push((a, u_max[i]));
        }
        if u_min[i].is_finite() {
            let mut a = DVector::zeros(n);
            a[i] = -1.0;
            rows.push((a, -u_min[i]));
        }
    }
    for j in 0..ns {
        let mut a = DVector::zeros(n);
        a[nu + j] = -1.0;
        rows.push((a, 0.0));
    }
    for (j, &i) in soft.iter().enumerate() {
        let g = gamma.row(i);
        if y_max[i].is_finite() {
            let mut a = DVector::zeros(n);
            a.rows_mut(0, nu).copy_from(&g.transpose());
            a[nu + j] = -1.0;
            rows.push((a, y_max[i] - free[i]));
        }
        if y_min[i].is_finite() {
            let mut a = DVector::zeros(n);
            a.rows_mut(0, nu).copy_from(&(-g.transpose()));
            a[nu + j] = -1.0;
            rows.push((a, free[i] - y_min[i]));
        }
    }
    let mut constraints = DMatrix::zeros(rows.len(), n);
    let mut bounds = DVector::zeros(rows.len());
    for (k, (a, b)) in rows.iter().enumerate() {
        constraints.row_mut(k).copy_from(&a.transpose());
        bounds[k] = *b;
    }
    let problem = QpProblem {
        hessian,
        linear,
        constraints,
        bounds,
    };

    // feasible start: inputs clipped to the box, slacks covering violations
    let mut x0 = DVector::zeros(n);
    for i in 0..nu {
        x0[i] = 0.0f64.clamp(u_min[i], u_max[i]);
    }
    let y0 = gamma * x0.rows(0, nu) + &free;
    for (j, &i) in soft.iter().enumerate() {
        x0[nu + j] = (y0[i] - y_max[i]).max(y_min[i] - y0[i]).max(0.0);
    }

    let sol = qp::solve(&problem, &x0, &cfg.qp)?;
    let mut u = sol.x.rows(0, nu).into_owned();
    for i in 0..nu {
        u[i] = u[i].clamp(u_min[i], u_max[i]);
    }
    let y = gamma * &u + &free;
    let slacks = sol.x.rows(nu, ns).map(|s| s.max(0.0));
    Ok(ControlDecision {
        inputs: u
            .as_slice()
            .chunks(du)
            .map(DVector::from_column_slice)
            .collect(),
        predicted: y
            .as_slice()
            .chunks(dy)
            .map(DVector::from_column_slice)
            .collect(),
        slacks,
        objective: sol.objective + constant,
        iterations: sol.iterations,
        kkt: sol.kkt.max(),
        trace: sol.trace.iter().map(|v| v + constant).collect(),
    })
}

/// `|y|_Q^2 + |u|_R^2` for one period.
pub fn iteration_cost(
    y: &DVector<f64>,
    u: &DVector<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<f64> {
    Error::check_dim("cost output weight", y.len(), q.nrows())?;
    Error::check_dim("cost output weight columns", y.len(), q.ncols())?;
    Error::check_dim("cost input weight", u.len(), r.nrows())?;
    Error::check_dim("cost input weight columns", u.len(), r.ncols())?;
    Ok(y.dot(&(q * y)) + u.dot(&(r * u)))
}

/// The controlled plant as seen by a controller: apply one input sample,
/// read back the output sample.
pub trait PlantInterface {
    /// Time index of the next sample.
    fn time(&self) -> i64;
    fn apply(&mut self, u: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Result of one controller step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub time: i64,
    pub anchor: usize,
    pub applied: Vec<DVector<f64>>,
    pub decision: ControlDecision,
    /// Data columns behind the predictor.
    pub columns: usize,
}

fn buffer_for(settings: &ControllerSettings, du: usize, dy: usize, p: usize, f: usize, scale: usize) -> Result<DataBuffer> {
    let window = match (settings.retain_init_data, settings.window) {
        (true, _) => None,
        (false, Some(w)) => Some(w * scale),
        (false, None) => {
            return Err(Error::Config(
                "discarding initialization data needs a window length".into(),
            ))
        }
    };
    Ok(DataBuffer::new(du, dy, p, f).with_window(window))
}

/// Lifted controller: predicts and plans whole periods.
#[derive(Debug, Clone)]
pub struct DeePrc {
    period: usize,
    inputs: usize,
    outputs: usize,
    policy: Policy,
    start: i64,
    anchors: Vec<DataBuffer>,
    recent: VecDeque<(DVector<f64>, DVector<f64>)>,
    observed: usize,
    cfg: OcpConfig,
    rank_tol: f64,
}

impl DeePrc {
    /// Controller whose first observed sample has time index `start`;
    /// lifted samples are anchored at `start` modulo the period.
    pub fn new(
        settings: &ControllerSettings,
        period: usize,
        inputs: usize,
        outputs: usize,
        start: i64,
    ) -> Result<Self> {
        let cfg = OcpConfig::from_settings(
            settings,
            period,
            inputs,
            outputs,
            settings.past,
            settings.horizon,
        )?;
        let count = match settings.policy {
            Policy::FullPeriod => 1,
            Policy::FirstSample => period,
        };
        let buffer = buffer_for(
            settings,
            period * inputs,
            period * outputs,
            settings.past,
            settings.horizon,
            1,
        )?;
        Ok(DeePrc {
            period,
            inputs,
            outputs,
            policy: settings.policy,
            start,
            anchors: vec![buffer; count],
            recent: VecDeque::with_capacity(period),
            observed: 0,
            cfg,
            rank_tol: settings.rank_tol,
        })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }
    pub fn config(&self) -> &OcpConfig {
        &self.cfg
    }
    pub fn config_mut(&mut self) -> &mut OcpConfig {
        &mut self.cfg
    }
    pub fn anchor_buffers(&self) -> &[DataBuffer] {
        &self.anchors
    }

    /// Time index of the next sample to be observed.
    pub fn next_time(&self) -> i64 {
        self.start + self.observed as i64
    }

    fn phase(&self, k: i64) -> usize {
        (k - self.start).rem_euclid(self.period as i64) as usize
    }

    /// Record the next measured sample.
    pub fn observe(&mut self, u: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        Error::check_dim("observed input", self.inputs, u.len())?;
        Error::check_dim("observed output", self.outputs, y.len())?;
        if self.recent.len() == self.period {
            self.recent.pop_front();
        }
        self.recent.push_back((u.clone(), y.clone()));
        self.observed += 1;
        if self.recent.len() < self.period {
            return Ok(());
        }
        let first = self.next_time() - self.period as i64;
        let phase = self.phase(first);
        let slot = match self.policy {
            Policy::FullPeriod if phase != 0 => return Ok(()),
            Policy::FullPeriod => 0,
            Policy::FirstSample => phase,
        };
        let lu = crate::hankel::stack_vectors(self.recent.iter().map(|(u, _)| u));
        let ly = crate::hankel::stack_vectors(self.recent.iter().map(|(_, y)| y));
        self.anchors[slot].push(lu, ly)
    }

    fn slot(&self, k: i64) -> Result<usize> {
        let phase = self.phase(k);
        match self.policy {
            Policy::FullPeriod if phase != 0 => Err(Error::Config(format!(
                "full-period decisions happen at period boundaries; time {k} has phase {phase}"
            ))),
            Policy::FullPeriod => Ok(0),
            Policy::FirstSample => Ok(phase),
        }
    }

    /// Fit the predictor for the next decision and solve the OCP.
    pub fn plan(&self) -> Result<(ControlDecision, PredictorModel, usize)> {
        let slot = self.slot(self.next_time())?;
        let buffer = &self.anchors[slot];
        let model = fit_predictor(buffer, self.rank_tol)?;
        let past = buffer.past_window()?;
        let decision = solve_ocp(&model, &past, &self.cfg)?;
        Ok((decision, model, slot))
    }

    /// Decide, apply one period (full-period) or one sample (first-sample)
    /// of the first planned lifted input, and record the measurements.
    pub fn step(&mut self, plant: &mut impl PlantInterface) -> Result<StepOutcome> {
        let time = plant.time();
        if time != self.next_time() {
            return Err(Error::Config(format!(
                "plant is at time {time} but the controller expects {}",
                self.next_time()
            )));
        }
        let (decision, model, anchor) = self.plan()?;
        let count = match self.policy {
            Policy::FullPeriod => self.period,
            Policy::FirstSample => 1,
        };
        let first = &decision.inputs[0];
        let mut applied = Vec::with_capacity(count);
        for i in 0..count {
            let u = first.rows(i * self.inputs, self.inputs).into_owned();
            let y = plant.apply(&u)?;
            self.observe(&u, &y)?;
            applied.push(u);
        }
        Ok(StepOutcome {
            time,
            anchor,
            applied,
            decision,
            columns: model.columns,
        })
    }
}

/// Non-lifted baseline with windows of the same length in samples.
#[derive(Debug, Clone)]
pub struct ClDeePc {
    buffer: DataBuffer,
    cfg: OcpConfig,
    rank_tol: f64,
    start: i64,
}

impl ClDeePc {
    pub fn new(
        settings: &ControllerSettings,
        period: usize,
        inputs: usize,
        outputs: usize,
        start: i64,
    ) -> Result<Self> {
        let past = settings.past * period;
        let horizon = settings.horizon * period;
        let cfg = OcpConfig::from_settings(settings, 1, inputs, outputs, past, horizon)?;
        Ok(ClDeePc {
            buffer: buffer_for(settings, inputs, outputs, past, horizon, period)?,
            cfg,
            rank_tol: settings.rank_tol,
            start,
        })
    }

    pub fn config(&self) -> &OcpConfig {
        &self.cfg
    }
    pub fn config_mut(&mut self) -> &mut OcpConfig {
        &mut self.cfg
    }
    pub fn buffer(&self) -> &DataBuffer {
        &self.buffer
    }
    pub fn next_time(&self) -> i64 {
        self.start + self.buffer.len() as i64
    }

    pub fn observe(&mut self, u: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        self.buffer.push(u.clone(), y.clone())
    }

    pub fn plan(&self) -> Result<(ControlDecision, PredictorModel)> {
        let model = fit_predictor(&self.buffer, self.rank_tol)?;
        let past = self.buffer.past_window()?;
        let decision = solve_ocp(&model, &past, &self.cfg)?;
        Ok((decision, model))
    }

    /// Decide and apply the first planned sample.
    pub fn step(&mut self, plant: &mut impl PlantInterface) -> Result<StepOutcome> {
        let time = plant.time();
        if time != self.next_time() {
            return Err(Error::Config(format!(
                "plant is at time {time} but the controller expects {}",
                self.next_time()
            )));
        }
        let (decision, model) = self.plan()?;
        let u = decision.inputs[0].clone();
        let y = plant.apply(&u)?;
        self.observe(&u, &y)?;
        Ok(StepOutcome {
            time,
            anchor: 0,
            applied: vec![u],
            decision,
            columns: model.columns,
        })
    }
}

/// One lifted-controller step (see [`DeePrc::step`]).
pub fn deeprc_step(controller: &mut DeePrc, plant: &mut impl PlantInterface) -> Result<StepOutcome> {
    controller.step(plant)
}

/// One baseline step (see [`ClDeePc::step`]).
pub fn baseline_cldeepc_step(
    controller: &mut ClDeePc,
    plant: &mut impl PlantInterface,
) -> Result<StepOutcome> {
    controller.step(plant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{LptvPlant, TrajectoryLog};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn scalar(v: f64) -> DVector<f64> {
        DVector::from_element(1, v)
    }

    fn toy_config(u_min: f64) -> OcpConfig {
        OcpConfig {
            past: 1,
            horizon: 1,
            q: DMatrix::identity(1, 1),
            r: DMatrix::identity(1, 1),
            u_min: scalar(u_min),
            u_max: scalar(f64::INFINITY),
            y_min: scalar(f64::NEG_INFINITY),
            y_max: scalar(f64::INFINITY),
            slack_penalty: 1e4,
            reference: None,
            qp: QpOptions::default(),
        }
    }

    /// y_hat = u + y_past, evaluated with y_past = 1.
    fn toy_model() -> (PredictorModel, PastWindow) {
        let model = PredictorModel::from_affine(
            1,
            1,
            1,
            1,
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_row_slice(1, 2, &[0.0, 1.0]),
        )
        .unwrap();
        (model, PastWindow { u: vec![scalar(0.0)], y: vec![scalar(1.0)] })
    }

    #[test]
    fn toy_problem_unconstrained_and_clipped() {
        let (model, past) = toy_model();
        let d = solve_ocp(&model, &past, &toy_config(f64::NEG_INFINITY)).unwrap();
        assert!((d.inputs[0][0] + 0.5).abs() < 1e-12);
        assert!((d.objective - 0.5).abs() < 1e-12);
        assert!(d.kkt < 1e-8);

        let d = solve_ocp(&model, &past, &toy_config(0.0)).unwrap();
        assert_eq!(d.inputs[0][0], 0.0);
        assert!((d.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_window_gives_zero_input() {
        let (model, _) = toy_model();
        let past = PastWindow::zeros(1, 1, 1);
        let d = solve_ocp(&model, &past, &toy_config(-10.0)).unwrap();
        assert_eq!(d.inputs[0][0], 0.0);
        assert_eq!(d.objective, 0.0);
    }

    #[test]
    fn weights_are_checked() {
        let mut cfg = toy_config(0.0);
        cfg.r[(0, 0)] = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = toy_config(0.0);
        cfg.q[(0, 0)] = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = toy_config(0.0);
        cfg.u_max[0] = -1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn soft_outputs_relax_only_when_needed() {
        // y_hat = u + 1 with |u| <= 0.5 and y <= 1: feasible without slack
        let (model, past) = toy_model();
        let mut cfg = toy_config(-0.5);
        cfg.u_max[0] = 0.5;
        cfg.y_max[0] = 1.0;
        cfg.q[(0, 0)] = 0.0;
        let d = solve_ocp(&model, &past, &cfg).unwrap();
        assert!(d.slacks[0] <= 1e-8);
        // y <= 0 needs u <= -1, impossible: slack covers the gap
        cfg.y_max[0] = 0.0;
        let d = solve_ocp(&model, &past, &cfg).unwrap();
        assert_eq!(d.inputs[0][0], -0.5);
        assert!((d.slacks[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn iteration_cost_examples() {
        let q = DMatrix::identity(40, 40) * 100.0;
        let r = DMatrix::identity(20, 20);
        let y = DVector::from_element(40, 1.0);
        let u = DVector::zeros(20);
        assert_eq!(iteration_cost(&y, &u, &q, &r).unwrap(), 4000.0);
        assert_eq!(iteration_cost(&DVector::zeros(40), &u, &q, &r).unwrap(), 0.0);
        assert!(iteration_cost(&y, &u, &r, &r).is_err());
    }

    struct SimPlant<'a> {
        plant: &'a LptvPlant,
        log: TrajectoryLog,
    }

    impl PlantInterface for SimPlant<'_> {
        fn time(&self) -> i64 {
            self.log.next_time()
        }
        fn apply(&mut self, u: &DVector<f64>) -> Result<DVector<f64>> {
            let d = DVector::zeros(self.plant.disturbances());
            let e = DVector::zeros(self.plant.outputs());
            Ok(self.log.record(self.plant, u, &d, &e)?.clone())
        }
    }

    fn settings(policy: Policy) -> ControllerSettings {
        ControllerSettings {
            u_min: vec![-10.0],
            u_max: vec![10.0],
            y_min: vec![-20.0],
            y_max: vec![20.0],
            policy,
            ..ControllerSettings::default()
        }
    }

    fn excite(plant: &LptvPlant, periods: usize, seed: u64) -> SimPlant<'_> {
        let mut sim = SimPlant {
            plant,
            log: TrajectoryLog::new(0, DVector::zeros(plant.states())),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        for _ in 0..periods * plant.period() {
            let u = DVector::from_fn(plant.inputs(), |_, _| normal.sample(&mut rng));
            sim.apply(&u).unwrap();
        }
        sim
    }

    #[test]
    fn policies_apply_period_or_sample() {
        let plant = LptvPlant::case_study();
        let sim = excite(&plant, 80, 1);
        for (policy, count) in [(Policy::FullPeriod, 20), (Policy::FirstSample, 1)] {
            let mut sim = SimPlant { plant: &plant, log: sim.log.clone() };
            let mut ctrl = DeePrc::new(&settings(policy), 20, 1, 2, 0).unwrap();
            for (u, y) in sim.log.u.iter().zip(&sim.log.y) {
                ctrl.observe(u, y).unwrap();
            }
            for _ in 0..3 {
                let out = deeprc_step(&mut ctrl, &mut sim).unwrap();
                assert_eq!(out.applied.len(), count);
                assert!(out.applied.iter().all(|u| u[0].abs() <= 10.0));
            }
        }
    }

    #[test]
    fn baseline_windows_in_samples() {
        let ctrl = ClDeePc::new(&settings(Policy::FullPeriod), 20, 1, 2, 0).unwrap();
        assert_eq!(ctrl.config().past, 20);
        assert_eq!(ctrl.config().horizon, 40);
        assert_eq!(ctrl.buffer().instrument_rows(), 21 + 40);
    }

    #[test]
    fn autonomous_zero_trajectory_needs_no_input() {
        // data from an excited run, then the plant restarted at rest
        let plant = LptvPlant::case_study();
        let sim = excite(&plant, 60, 2);
        let mut ctrl = DeePrc::new(&settings(Policy::FullPeriod), 20, 1, 2, 0).unwrap();
        for (u, y) in sim.log.u.iter().zip(&sim.log.y) {
            ctrl.observe(u, y).unwrap();
        }
        let zero = DVector::zeros(1);
        let mut rest = SimPlant {
            plant: &plant,
            log: TrajectoryLog::new(sim.log.next_time(), DVector::zeros(3)),
        };
        // fill the past window with the rest trajectory
        for _ in 0..20 {
            let y = rest.apply(&zero).unwrap();
            ctrl.observe(&zero, &y).unwrap();
        }
        let out = ctrl.step(&mut rest).unwrap();
        assert!(out.applied.iter().all(|u| u[0].abs() < 1e-9), "{:?}", out.applied);
    }

    #[test]
    fn period_one_lifting_matches_baseline() {
        let a = DMatrix::from_row_slice(2, 2, &[0.6, 0.3, -0.2, 0.5]);
        let b = DMatrix::from_column_slice(2, 1, &[1.0, 0.5]);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 1.0]);
        let plant = LptvPlant::lti(
            a,
            b,
            c,
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 2),
            DMatrix::zeros(2, 1),
            DMatrix::zeros(2, 1),
        )
        .unwrap();
        let sim = excite(&plant, 200, 3);
        let mut s = settings(Policy::FullPeriod);
        s.past = 2;
        s.horizon = 3;
        s.u_min = vec![-0.3];
        s.u_max = vec![0.3];
        let mut lifted = DeePrc::new(&s, 1, 1, 2, 0).unwrap();
        let mut plain = ClDeePc::new(&s, 1, 1, 2, 0).unwrap();
        for (u, y) in sim.log.u.iter().zip(&sim.log.y) {
            lifted.observe(u, y).unwrap();
            plain.observe(u, y).unwrap();
        }
        let mut p1 = SimPlant { plant: &plant, log: sim.log.clone() };
        let mut p2 = SimPlant { plant: &plant, log: sim.log.clone() };
        for _ in 0..30 {
            let a = lifted.step(&mut p1).unwrap();
            let b = plain.step(&mut p2).unwrap();
            assert_eq!(a.applied, b.applied);
        }
        assert_eq!(p1.log.y, p2.log.y);
    }

    #[test]
    fn tail_of_plan_is_optimal_for_shorter_horizon() {
        let plant = LptvPlant::case_study();
        let sim = excite(&plant, 100, 4);
        let mut s = settings(Policy::FullPeriod);
        s.horizon = 3;
        let mut ctrl = DeePrc::new(&s, 20, 1, 2, 0).unwrap();
        for (u, y) in sim.log.u.iter().zip(&sim.log.y) {
            ctrl.observe(u, y).unwrap();
        }
        let (plan, model, _) = ctrl.plan().unwrap();
        // realize the first lifted input on the noiseless plant, keep the model frozen
        let mut run = SimPlant { plant: &plant, log: sim.log.clone() };
        let mut past = ctrl.anchor_buffers()[0].past_window().unwrap();
        let mut ys = Vec::new();
        for i in 0..20 {
            ys.push(run.apply(&plan.inputs[0].rows(i, 1).into_owned()).unwrap());
        }
        past.u = vec![plan.inputs[0].clone()];
        past.y = vec![crate::hankel::stack_vectors(&ys)];
        let shorter = model.with_horizon(2).unwrap();
        let mut cfg = ctrl.config().clone();
        cfg.horizon = 2;
        let next = solve_ocp(&shorter, &past, &cfg).unwrap();
        for j in 0..2 {
            let err = (&next.inputs[j] - &plan.inputs[j + 1]).amax();
            assert!(err <= 1e-6, "block {j}: {err:e}");
        }
    }

    #[test]
    fn solver_trace_is_monotone() {
        let plant = LptvPlant::case_study();
        let sim = excite(&plant, 80, 5);
        let mut s = settings(Policy::FullPeriod);
        s.u_min = vec![-0.05];
        s.u_max = vec![0.05];
        let mut ctrl = DeePrc::new(&s, 20, 1, 2, 0).unwrap();
        for (u, y) in sim.log.u.iter().zip(&sim.log.y) {
            ctrl.observe(u, y).unwrap();
        }
        let (d, _, _) = ctrl.plan().unwrap();
        assert!(d.iterations > 1);
        for w in d.trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0));
        }
        assert!(d.kkt < 1e-8);
    }
}
