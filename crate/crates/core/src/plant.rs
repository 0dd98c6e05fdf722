//! Periodic plant in innovation form and its structural matrices.
//!
//! The plant evolves as
//!
//! ```text
//! x[k+1] = A_k x[k] + B_k u[k] + F_k d[k] + K_k e[k]
//! y[k]   = C_k x[k] + D_k u[k] + G_k d[k] + e[k]
//! ```
//!
//! with every matrix family repeating after `period` samples. Families are
//! either affine in the scheduling parameter `mu(k) = cos(2 pi k / P)` or an
//! explicit table of `P` matrices. All periodic indexing reduces `k` with a
//! non-negative modulo first, so negative times are valid and periodicity is
//! bit-exact.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies one of the periodic matrix families of the plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    A,
    B,
    C,
    D,
    K,
    F,
    G,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::A,
        Family::B,
        Family::C,
        Family::D,
        Family::K,
        Family::F,
        Family::G,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::K => "K",
            Family::F => "F",
            Family::G => "G",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Exogenous channel entering the plant: the input-, disturbance- and
/// noise-driven Markov parameters differ only in which pair of matrices
/// they use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Input,
    Disturbance,
    Noise,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Input, Channel::Disturbance, Channel::Noise];
}

/// One periodic matrix family before it is expanded over the period.
#[derive(Debug, Clone, PartialEq)]
pub enum PeriodicMatrix {
    /// `M_k = base + mu(k) * varying`.
    Affine {
        base: DMatrix<f64>,
        varying: DMatrix<f64>,
    },
    /// One matrix per phase `k mod P`.
    Table(Vec<DMatrix<f64>>),
}

impl PeriodicMatrix {
    pub fn constant(m: DMatrix<f64>) -> Self {
        let (r, c) = m.shape();
        PeriodicMatrix::Affine {
            base: m,
            varying: DMatrix::zeros(r, c),
        }
    }

    fn shape(&self) -> Option<(usize, usize)> {
        match self {
            PeriodicMatrix::Affine { base, .. } => Some(base.shape()),
            PeriodicMatrix::Table(t) => t.first().map(|m| m.shape()),
        }
    }

    fn expand(&self, family: Family, period: usize) -> Result<Vec<DMatrix<f64>>> {
        match self {
            PeriodicMatrix::Affine { base, varying } => {
                if base.shape() != varying.shape() {
                    return Err(Error::Config(format!(
                        "family {family}: base is {:?} but varying part is {:?}",
                        base.shape(),
                        varying.shape()
                    )));
                }
                Ok((0..period)
                    .map(|phase| base + varying * scheduling(phase as i64, period))
                    .collect())
            }
            PeriodicMatrix::Table(t) => {
                if t.len() != period {
                    return Err(Error::Config(format!(
                        "family {family}: table has {} entries for period {period}",
                        t.len()
                    )));
                }
                let shape = t[0].shape();
                if t.iter().any(|m| m.shape() != shape) {
                    return Err(Error::Config(format!(
                        "family {family}: table entries have differing shapes"
                    )));
                }
                Ok(t.clone())
            }
        }
    }
}

/// All seven families of a plant.
#[derive(Debug, Clone)]
pub struct PlantFamilies {
    pub a: PeriodicMatrix,
    pub b: PeriodicMatrix,
    pub c: PeriodicMatrix,
    pub d: PeriodicMatrix,
    pub k: PeriodicMatrix,
    pub f: PeriodicMatrix,
    pub g: PeriodicMatrix,
}

impl PlantFamilies {
    fn get(&self, family: Family) -> &PeriodicMatrix {
        match family {
            Family::A => &self.a,
            Family::B => &self.b,
            Family::C => &self.c,
            Family::D => &self.d,
            Family::K => &self.k,
            Family::F => &self.f,
            Family::G => &self.g,
        }
    }
}

/// Non-negative residue of `k` modulo `period`.
pub fn phase(k: i64, period: usize) -> usize {
    k.rem_euclid(period as i64) as usize
}

/// Scheduling parameter `cos(2 pi k / P)`, evaluated on the reduced phase.
pub fn scheduling(k: i64, period: usize) -> f64 {
    (2.0 * PI * phase(k, period) as f64 / period as f64).cos()
}

/// A `P`-periodic linear plant in innovation form.
#[derive(Debug, Clone)]
pub struct LptvPlant {
    period: usize,
    n: usize,
    r: usize,
    l: usize,
    m: usize,
    // one expanded table per family, indexed by `Family::index`
    tables: Vec<Vec<DMatrix<f64>>>,
}

impl LptvPlant {
    pub fn new(period: usize, families: PlantFamilies) -> Result<Self> {
        if period == 0 {
            return Err(Error::Config("period must be positive".into()));
        }
        let shape = |f: Family| {
            families
                .get(f)
                .shape()
                .ok_or_else(|| Error::Config(format!("family {f} is empty")))
        };
        let (n, n2) = shape(Family::A)?;
        if n != n2 {
            return Err(Error::Config(format!("A must be square, got {n}x{n2}")));
        }
        let (_, r) = shape(Family::B)?;
        let (l, _) = shape(Family::C)?;
        let (_, m) = shape(Family::F)?;
        let expected = |f: Family| match f {
            Family::A => (n, n),
            Family::B => (n, r),
            Family::C => (l, n),
            Family::D => (l, r),
            Family::K => (n, l),
            Family::F => (n, m),
            Family::G => (l, m),
        };
        let mut tables = Vec::with_capacity(7);
        for f in Family::ALL {
            let got = shape(f)?;
            if got != expected(f) {
                return Err(Error::Config(format!(
                    "family {f} has shape {got:?}, expected {:?}",
                    expected(f)
                )));
            }
            tables.push(families.get(f).expand(f, period)?);
        }
        Ok(LptvPlant {
            period,
            n,
            r,
            l,
            m,
            tables,
        })
    }

    /// Time-invariant plant (period one).
    #[allow(clippy::too_many_arguments)]
    pub fn lti(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        k: DMatrix<f64>,
        f: DMatrix<f64>,
        g: DMatrix<f64>,
    ) -> Result<Self> {
        use PeriodicMatrix::Table;
        LptvPlant::new(
            1,
            PlantFamilies {
                a: Table(vec![a]),
                b: Table(vec![b]),
                c: Table(vec![c]),
                d: Table(vec![d]),
                k: Table(vec![k]),
                f: Table(vec![f]),
                g: Table(vec![g]),
            },
        )
    }

    /// The bundled twenty-periodic three-state benchmark plant with an input
    /// disturbance (`F_k = B_k`, `G_k = D_k`).
    pub fn case_study() -> Self {
        crate::config::PlantConfig::case_study()
            .build()
            .expect("bundled plant config is valid")
    }

    pub fn period(&self) -> usize {
        self.period
    }
    pub fn states(&self) -> usize {
        self.n
    }
    pub fn inputs(&self) -> usize {
        self.r
    }
    pub fn outputs(&self) -> usize {
        self.l
    }
    pub fn disturbances(&self) -> usize {
        self.m
    }

    /// Column dimension of the matrices driving `channel`.
    pub fn channel_dim(&self, channel: Channel) -> usize {
        match channel {
            Channel::Input => self.r,
            Channel::Disturbance => self.m,
            Channel::Noise => self.l,
        }
    }

    /// Borrow `M_k` for a family.
    pub fn matrix(&self, family: Family, k: i64) -> &DMatrix<f64> {
        &self.tables[family.index()][phase(k, self.period)]
    }

    /// `M_k` for a family, owned.
    pub fn matrix_at(&self, family: Family, k: i64) -> DMatrix<f64> {
        self.matrix(family, k).clone()
    }

    fn channel_matrices(&self, channel: Channel, k: i64) -> (&DMatrix<f64>, DMatrix<f64>) {
        match channel {
            Channel::Input => (self.matrix(Family::B, k), self.matrix_at(Family::D, k)),
            Channel::Disturbance => (self.matrix(Family::F, k), self.matrix_at(Family::G, k)),
            Channel::Noise => (self.matrix(Family::K, k), DMatrix::identity(self.l, self.l)),
        }
    }

    /// One step of the plant equations at time `k`.
    pub fn step(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        d: &DVector<f64>,
        e: &DVector<f64>,
        k: i64,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        Error::check_dim("state x", self.n, x.len())?;
        Error::check_dim("input u", self.r, u.len())?;
        Error::check_dim("disturbance d", self.m, d.len())?;
        Error::check_dim("noise e", self.l, e.len())?;
        let m = |f| self.matrix(f, k);
        let x_next = m(Family::A) * x + m(Family::B) * u + m(Family::F) * d + m(Family::K) * e;
        let y = m(Family::C) * x + m(Family::D) * u + m(Family::G) * d + e;
        Ok((x_next, y))
    }

    /// Iterate [`step`](Self::step) from `x0` at time `k0`.
    pub fn simulate(
        &self,
        x0: &DVector<f64>,
        k0: i64,
        inputs: &[DVector<f64>],
        disturbances: &[DVector<f64>],
        noise: &[DVector<f64>],
    ) -> Result<TrajectoryLog> {
        let t = inputs.len();
        if t == 0 || disturbances.len() != t || noise.len() != t {
            return Err(Error::Length(format!(
                "simulate needs equal non-empty sequences, got u={}, d={}, e={}",
                t,
                disturbances.len(),
                noise.len()
            )));
        }
        Error::check_dim("initial state", self.n, x0.len())?;
        let mut log = TrajectoryLog::new(k0, x0.clone());
        for i in 0..t {
            log.record(self, &inputs[i], &disturbances[i], &noise[i])?;
        }
        Ok(log)
    }

    /// State-transition product `A_{k2-1} ... A_{k1}`; identity when `k1 == k2`.
    pub fn monodromy(&self, k1: i64, k2: i64) -> Result<DMatrix<f64>> {
        check_window(k1, k2)?;
        let mut phi = DMatrix::identity(self.n, self.n);
        for k in k1..k2 {
            phi = self.matrix(Family::A, k) * phi;
        }
        Ok(phi)
    }

    /// Markov parameter from `channel` at time `k1` to the output at `k2`.
    pub fn markov(&self, channel: Channel, k1: i64, k2: i64) -> Result<DMatrix<f64>> {
        check_window(k1, k2)?;
        let (drive, feedthrough) = self.channel_matrices(channel, k1);
        if k1 == k2 {
            return Ok(feedthrough);
        }
        Ok(self.matrix(Family::C, k2) * self.monodromy(k1 + 1, k2)? * drive)
    }

    /// Block lower-triangular matrix of Markov parameters over `[k1, k2]`.
    pub fn toeplitz_markov(&self, channel: Channel, k1: i64, k2: i64) -> Result<DMatrix<f64>> {
        check_window(k1, k2)?;
        let w = (k2 - k1 + 1) as usize;
        let q = self.channel_dim(channel);
        let l = self.l;
        let mut t = DMatrix::zeros(l * w, q * w);
        for j in 0..w {
            let (drive, feedthrough) = self.channel_matrices(channel, k1 + j as i64);
            t.view_mut((j * l, j * q), (l, q)).copy_from(&feedthrough);
            // propagate the column impulse forward instead of recomputing monodromies
            let mut state = drive.clone();
            for i in (j + 1)..w {
                let k = k1 + i as i64;
                let block = self.matrix(Family::C, k) * &state;
                t.view_mut((i * l, j * q), (l, q)).copy_from(&block);
                state = self.matrix(Family::A, k) * state;
            }
        }
        Ok(t)
    }

    /// Reversed extended controllability matrix over `[k1, k2]`: block `j`
    /// maps the channel at `k1 + j` to the state at `k2 + 1`.
    pub fn reversed_ctrb(&self, channel: Channel, k1: i64, k2: i64) -> Result<DMatrix<f64>> {
        check_window(k1, k2)?;
        let w = (k2 - k1 + 1) as usize;
        let q = self.channel_dim(channel);
        let mut out = DMatrix::zeros(self.n, q * w);
        // sweep backwards accumulating A_{k2} ... A_{k+1}
        let mut phi = DMatrix::identity(self.n, self.n);
        for j in (0..w).rev() {
            let k = k1 + j as i64;
            let (drive, _) = self.channel_matrices(channel, k);
            out.view_mut((0, j * q), (self.n, q)).copy_from(&(&phi * drive));
            phi = &phi * self.matrix(Family::A, k);
        }
        Ok(out)
    }

    /// Extended observability matrix over `[k1, k2]`.
    pub fn extended_obsv(&self, k1: i64, k2: i64) -> Result<DMatrix<f64>> {
        check_window(k1, k2)?;
        let w = (k2 - k1 + 1) as usize;
        let l = self.l;
        let mut out = DMatrix::zeros(l * w, self.n);
        let mut phi = DMatrix::identity(self.n, self.n);
        for i in 0..w {
            let k = k1 + i as i64;
            out.view_mut((i * l, 0), (l, self.n))
                .copy_from(&(self.matrix(Family::C, k) * &phi));
            phi = self.matrix(Family::A, k) * phi;
        }
        Ok(out)
    }
}

fn check_window(k1: i64, k2: i64) -> Result<()> {
    if k2 < k1 {
        Err(Error::Window { k1, k2 })
    } else {
        Ok(())
    }
}

/// Time-aligned record of a plant run. Entry `i` of every sequence belongs
/// to time `k0 + i`; `next_state` is the state after the last recorded step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub k0: i64,
    pub x: Vec<DVector<f64>>,
    pub u: Vec<DVector<f64>>,
    pub d: Vec<DVector<f64>>,
    pub e: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub next_state: DVector<f64>,
}

impl TrajectoryLog {
    pub fn new(k0: i64, x0: DVector<f64>) -> Self {
        TrajectoryLog {
            k0,
            x: Vec::new(),
            u: Vec::new(),
            d: Vec::new(),
            e: Vec::new(),
            y: Vec::new(),
            next_state: x0,
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Time index one past the last recorded sample.
    pub fn next_time(&self) -> i64 {
        self.k0 + self.len() as i64
    }

    /// Advance the plant one step from `next_state` and append the sample.
    pub fn record(
        &mut self,
        plant: &LptvPlant,
        u: &DVector<f64>,
        d: &DVector<f64>,
        e: &DVector<f64>,
    ) -> Result<&DVector<f64>> {
        let k = self.next_time();
        let (x_next, y) = plant.step(&self.next_state, u, d, e, k)?;
        let x = std::mem::replace(&mut self.next_state, x_next);
        self.x.push(x);
        self.u.push(u.clone());
        self.d.push(d.clone());
        self.e.push(e.clone());
        self.y.push(y);
        Ok(self.y.last().expect("just pushed"))
    }

    /// Replay the stored exogenous signals from the first stored state and
    /// report the largest deviation from the stored states and outputs.
    pub fn replay_deviation(&self, plant: &LptvPlant) -> Result<f64> {
        let Some(x0) = self.x.first() else {
            return Ok(0.0);
        };
        let replay = plant.simulate(x0, self.k0, &self.u, &self.d, &self.e)?;
        let mut worst: f64 = 0.0;
        for (a, b) in replay.x.iter().zip(&self.x).chain(replay.y.iter().zip(&self.y)) {
            worst = worst.max((a - b).amax());
        }
        Ok(worst.max((&replay.next_state - &self.next_state).amax()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zeros(n: usize) -> DVector<f64> {
        DVector::zeros(n)
    }

    #[test]
    fn matrix_at_case_study_values() {
        let plant = LptvPlant::case_study();
        let a0 = plant.matrix_at(Family::A, 0);
        assert_eq!(a0[(0, 0)], 0.6);
        assert_eq!(a0, plant.matrix_at(Family::A, 20));
        assert_eq!(a0, plant.matrix_at(Family::A, -20));
        let b10 = plant.matrix_at(Family::B, 10);
        assert_relative_eq!(b10[(0, 0)], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn step_zero_and_noise_only() {
        let plant = LptvPlant::case_study();
        let (xn, y) = plant.step(&zeros(3), &zeros(1), &zeros(1), &zeros(2), 7).unwrap();
        assert_eq!(xn, zeros(3));
        assert_eq!(y, zeros(2));

        let e0 = DVector::from_vec(vec![0.3, -1.2]);
        let (xn, y) = plant.step(&zeros(3), &zeros(1), &zeros(1), &e0, 7).unwrap();
        assert_eq!(xn, plant.matrix(Family::K, 7) * &e0);
        assert_eq!(y, e0);
    }

    #[test]
    fn step_unit_state_extracts_columns() {
        let plant = LptvPlant::case_study();
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let (xn, y) = plant.step(&x, &zeros(1), &zeros(1), &zeros(2), 0).unwrap();
        assert_eq!(xn, plant.matrix(Family::A, 0).column(0).into_owned());
        assert_eq!(y, plant.matrix(Family::C, 0).column(0).into_owned());
    }

    #[test]
    fn step_reports_offending_vector() {
        let plant = LptvPlant::case_study();
        let err = plant
            .step(&zeros(3), &zeros(2), &zeros(1), &zeros(2), 0)
            .unwrap_err();
        assert!(err.to_string().contains("input u"), "{err}");
        let err = plant
            .step(&zeros(3), &zeros(1), &zeros(1), &zeros(3), 0)
            .unwrap_err();
        assert!(err.to_string().contains("noise e"), "{err}");
    }

    #[test]
    fn simulate_rejects_length_mismatch() {
        let plant = LptvPlant::case_study();
        let u = vec![zeros(1); 3];
        let d = vec![zeros(1); 2];
        let e = vec![zeros(2); 3];
        assert!(matches!(
            plant.simulate(&zeros(3), 0, &u, &d, &e),
            Err(Error::Length(_))
        ));
        assert!(plant.simulate(&zeros(3), 0, &[], &[], &[]).is_err());
    }

    #[test]
    fn simulate_single_step_and_zero() {
        let plant = LptvPlant::case_study();
        let u = vec![DVector::from_vec(vec![0.7])];
        let d = vec![DVector::from_vec(vec![-0.2])];
        let e = vec![DVector::from_vec(vec![0.1, 0.05])];
        let x0 = DVector::from_vec(vec![1.0, 2.0, -1.0]);
        let log = plant.simulate(&x0, 3, &u, &d, &e).unwrap();
        let (xn, y) = plant.step(&x0, &u[0], &d[0], &e[0], 3).unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.y[0], y);
        assert_eq!(log.next_state, xn);

        let z = plant
            .simulate(&zeros(3), 0, &vec![zeros(1); 40], &vec![zeros(1); 40], &vec![zeros(2); 40])
            .unwrap();
        assert!(z.y.iter().chain(&z.x).all(|v| v.amax() == 0.0));
    }

    #[test]
    fn monodromy_base_cases() {
        let plant = LptvPlant::case_study();
        assert_eq!(plant.monodromy(5, 5).unwrap(), DMatrix::identity(3, 3));
        assert_eq!(
            plant.monodromy(0, 2).unwrap(),
            plant.matrix(Family::A, 1) * plant.matrix(Family::A, 0)
        );
        assert!(matches!(plant.monodromy(3, 2), Err(Error::Window { .. })));
    }

    #[test]
    fn markov_feedthroughs() {
        let plant = LptvPlant::case_study();
        assert_eq!(
            plant.markov(Channel::Noise, 4, 4).unwrap(),
            DMatrix::identity(2, 2)
        );
        assert_eq!(
            plant.markov(Channel::Input, 4, 4).unwrap(),
            plant.matrix_at(Family::D, 4)
        );
        assert_eq!(
            plant.markov(Channel::Input, 4, 5).unwrap(),
            plant.matrix(Family::C, 5) * plant.matrix(Family::B, 4)
        );
        assert!(plant.markov(Channel::Input, 5, 4).is_err());
    }

    fn constant_plant() -> LptvPlant {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.5]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        let d = DMatrix::from_row_slice(1, 1, &[0.2]);
        let k = DMatrix::from_row_slice(2, 1, &[0.1, 0.0]);
        LptvPlant::lti(a, b.clone(), c, d.clone(), k, b, d).unwrap()
    }

    #[test]
    fn lti_collapse_of_structural_matrices() {
        let p = constant_plant();
        let a = p.matrix_at(Family::A, 0);
        let b = p.matrix_at(Family::B, 0);
        let c = p.matrix_at(Family::C, 0);
        assert_eq!(p.monodromy(3, 5).unwrap(), &a * &a);

        let ctrb = p.reversed_ctrb(Channel::Input, 0, 1).unwrap();
        let mut expected = DMatrix::zeros(2, 2);
        expected.column_mut(0).copy_from(&(&a * &b));
        expected.column_mut(1).copy_from(&b);
        assert_eq!(ctrb, expected);
        assert_eq!(p.reversed_ctrb(Channel::Input, 4, 4).unwrap(), b);

        let obsv = p.extended_obsv(0, 1).unwrap();
        assert_eq!(obsv.row(0), c.row(0));
        assert_eq!(obsv.row(1), (&c * &a).row(0));
        assert_eq!(p.extended_obsv(2, 2).unwrap(), c);
    }

    #[test]
    fn toeplitz_shape_and_causality() {
        let plant = LptvPlant::case_study();
        let t = plant.toeplitz_markov(Channel::Input, 3, 8).unwrap();
        assert_eq!(t.shape(), (12, 6));
        for i in 0..6 {
            for j in (i + 1)..6 {
                assert_eq!(t.view((2 * i, j), (2, 1)).amax(), 0.0);
            }
            for j in 0..=i {
                let expected = plant.markov(Channel::Input, 3 + j as i64, 3 + i as i64).unwrap();
                assert_relative_eq!(
                    t.view((2 * i, j), (2, 1)).into_owned(),
                    expected,
                    epsilon = 1e-13
                );
            }
        }
        let single = plant.toeplitz_markov(Channel::Disturbance, 2, 2).unwrap();
        assert_eq!(single, plant.matrix_at(Family::G, 2));
    }

    #[test]
    fn table_constructor_validates() {
        let m = DMatrix::<f64>::identity(2, 2);
        let bad = PlantFamilies {
            a: PeriodicMatrix::Table(vec![m.clone(); 2]),
            b: PeriodicMatrix::Table(vec![DMatrix::zeros(2, 1); 3]),
            c: PeriodicMatrix::Table(vec![DMatrix::zeros(1, 2); 2]),
            d: PeriodicMatrix::Table(vec![DMatrix::zeros(1, 1); 2]),
            k: PeriodicMatrix::Table(vec![DMatrix::zeros(2, 1); 2]),
            f: PeriodicMatrix::Table(vec![DMatrix::zeros(2, 1); 2]),
            g: PeriodicMatrix::Table(vec![DMatrix::zeros(1, 1); 2]),
        };
        assert!(LptvPlant::new(2, bad.clone()).is_err());
        let mut ok = bad;
        ok.b = PeriodicMatrix::Table(vec![DMatrix::zeros(2, 1); 2]);
        let plant = LptvPlant::new(2, ok).unwrap();
        assert_eq!(plant.period(), 2);
        assert_eq!(plant.matrix_at(Family::A, -3), m);
    }

    #[test]
    fn replay_reproduces_log() {
        let plant = LptvPlant::case_study();
        let t = 45;
        let u: Vec<_> = (0..t).map(|i| DVector::from_element(1, (i as f64 * 0.37).sin())).collect();
        let d: Vec<_> = (0..t).map(|i| DVector::from_element(1, (i as f64 * 0.11).cos())).collect();
        let e: Vec<_> = (0..t)
            .map(|i| DVector::from_vec(vec![0.01 * i as f64, -0.02]))
            .collect();
        let log = plant
            .simulate(&DVector::from_vec(vec![0.1, 0.2, 0.3]), -7, &u, &d, &e)
            .unwrap();
        assert_eq!(log.replay_deviation(&plant).unwrap(), 0.0);
    }
}
