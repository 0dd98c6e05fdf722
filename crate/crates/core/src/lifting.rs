//! Lifting a periodic plant to a time-invariant system over whole periods.
//!
//! With anchor `k0`, iteration `j` of the lifted system collects the `P`
//! samples `k0 + jP .. k0 + (j+1)P - 1` of every signal into one vector and
//! the lifted state is the plant state at the period boundary.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::plant::{Channel, LptvPlant};

/// Time-invariant representation of one period of the plant.
///
/// `g` is the disturbance feedthrough (lower-triangular Markov parameters
/// of the disturbance channel) and `h` the noise feedthrough.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedSystem {
    pub anchor: i64,
    pub period: usize,
    pub n: usize,
    pub r: usize,
    pub l: usize,
    pub m: usize,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

/// Lifted system whose state also carries the (constant) lifted disturbance.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedLiftedSystem {
    pub n: usize,
    pub disturbance_dim: usize,
    pub state: DMatrix<f64>,
    pub input: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub output: DMatrix<f64>,
    pub feedthrough: DMatrix<f64>,
    pub noise_feedthrough: DMatrix<f64>,
}

impl AugmentedLiftedSystem {
    pub fn dim(&self) -> usize {
        self.n + self.disturbance_dim
    }
}

/// Lifted signals and states produced by [`LiftedSystem::simulate`].
#[derive(Debug, Clone)]
pub struct LiftedRun {
    pub states: Vec<DVector<f64>>,
    pub outputs: Vec<DVector<f64>>,
    pub next_state: DVector<f64>,
}

pub fn lift_system(plant: &LptvPlant, k0: i64) -> LiftedSystem {
    let p = plant.period() as i64;
    let (first, last) = (k0, k0 + p - 1);
    let ok = "window is non-empty";
    LiftedSystem {
        anchor: k0,
        period: plant.period(),
        n: plant.states(),
        r: plant.inputs(),
        l: plant.outputs(),
        m: plant.disturbances(),
        a: plant.monodromy(k0, k0 + p).expect(ok),
        b: plant.reversed_ctrb(Channel::Input, first, last).expect(ok),
        f: plant.reversed_ctrb(Channel::Disturbance, first, last).expect(ok),
        k: plant.reversed_ctrb(Channel::Noise, first, last).expect(ok),
        c: plant.extended_obsv(first, last).expect(ok),
        d: plant.toeplitz_markov(Channel::Input, first, last).expect(ok),
        g: plant.toeplitz_markov(Channel::Disturbance, first, last).expect(ok),
        h: plant.toeplitz_markov(Channel::Noise, first, last).expect(ok),
    }
}

impl LiftedSystem {
    pub fn input_dim(&self) -> usize {
        self.r * self.period
    }
    pub fn output_dim(&self) -> usize {
        self.l * self.period
    }
    pub fn disturbance_dim(&self) -> usize {
        self.m * self.period
    }

    /// One lifted iteration.
    pub fn step(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        d: &DVector<f64>,
        e: &DVector<f64>,
    ) -> Result<(DVector<f64>, DVector<f64>)> {
        Error::check_dim("lifted state", self.n, x.len())?;
        Error::check_dim("lifted input", self.input_dim(), u.len())?;
        Error::check_dim("lifted disturbance", self.disturbance_dim(), d.len())?;
        Error::check_dim("lifted noise", self.output_dim(), e.len())?;
        let x_next = &self.a * x + &self.b * u + &self.f * d + &self.k * e;
        let y = &self.c * x + &self.d * u + &self.g * d + &self.h * e;
        Ok((x_next, y))
    }

    pub fn simulate(
        &self,
        x0: &DVector<f64>,
        u: &[DVector<f64>],
        d: &[DVector<f64>],
        e: &[DVector<f64>],
    ) -> Result<LiftedRun> {
        if u.len() != d.len() || u.len() != e.len() {
            return Err(Error::Length(format!(
                "lifted simulate: u={}, d={}, e={}",
                u.len(),
                d.len(),
                e.len()
            )));
        }
        let mut x = x0.clone();
        let mut states = Vec::with_capacity(u.len());
        let mut outputs = Vec::with_capacity(u.len());
        for j in 0..u.len() {
            let (xn, y) = self.step(&x, &u[j], &d[j], &e[j])?;
            states.push(std::mem::replace(&mut x, xn));
            outputs.push(y);
        }
        Ok(LiftedRun {
            states,
            outputs,
            next_state: x,
        })
    }
}

/// Append the constant lifted disturbance to the lifted state.
pub fn augment(lifted: &LiftedSystem) -> AugmentedLiftedSystem {
    let n = lifted.n;
    let md = lifted.disturbance_dim();
    let nu = lifted.input_dim();
    let ny = lifted.output_dim();
    let mut state = DMatrix::zeros(n + md, n + md);
    state.view_mut((0, 0), (n, n)).copy_from(&lifted.a);
    state.view_mut((0, n), (n, md)).copy_from(&lifted.f);
    state
        .view_mut((n, n), (md, md))
        .copy_from(&DMatrix::identity(md, md));
    let mut input = DMatrix::zeros(n + md, nu);
    input.view_mut((0, 0), (n, nu)).copy_from(&lifted.b);
    let mut noise = DMatrix::zeros(n + md, ny);
    noise.view_mut((0, 0), (n, ny)).copy_from(&lifted.k);
    let mut output = DMatrix::zeros(ny, n + md);
    output.view_mut((0, 0), (ny, n)).copy_from(&lifted.c);
    output.view_mut((0, n), (ny, md)).copy_from(&lifted.g);
    AugmentedLiftedSystem {
        n,
        disturbance_dim: md,
        state,
        input,
        noise,
        output,
        feedthrough: lifted.d.clone(),
        noise_feedthrough: lifted.h.clone(),
    }
}

/// Stack `period` consecutive samples per lifted vector.
pub fn lift_signal(samples: &[DVector<f64>], period: usize) -> Result<Vec<DVector<f64>>> {
    if period == 0 {
        return Err(Error::Config("period must be positive".into()));
    }
    if samples.is_empty() || !samples.len().is_multiple_of(period) {
        return Err(Error::Length(format!(
            "{} samples is not a positive multiple of the period {period}",
            samples.len()
        )));
    }
    Ok(samples
        .chunks(period)
        .map(crate::hankel::stack_vectors)
        .collect())
}

/// Split lifted vectors back into `period` samples each.
pub fn unlift_signal(lifted: &[DVector<f64>], period: usize) -> Result<Vec<DVector<f64>>> {
    if period == 0 {
        return Err(Error::Config("period must be positive".into()));
    }
    let mut out = Vec::with_capacity(lifted.len() * period);
    for v in lifted {
        if v.len() % period != 0 {
            return Err(Error::Length(format!(
                "lifted vector of length {} is not divisible by the period {period}",
                v.len()
            )));
        }
        let q = v.len() / period;
        if q == 0 {
            out.extend((0..period).map(|_| DVector::zeros(0)));
        } else {
            out.extend(v.as_slice().chunks(q).map(DVector::from_column_slice));
        }
    }
    Ok(out)
}

/// Largest deviation between sample-wise simulation followed by lifting and
/// direct iteration of the lifted system, for the given per-sample signals.
pub fn lifting_deviation(
    plant: &LptvPlant,
    x0: &DVector<f64>,
    k0: i64,
    u: &[DVector<f64>],
    d: &[DVector<f64>],
    e: &[DVector<f64>],
) -> Result<f64> {
    let p = plant.period();
    let log = plant.simulate(x0, k0, u, d, e)?;
    let lifted = lift_system(plant, k0);
    let run = lifted.simulate(
        x0,
        &lift_signal(u, p)?,
        &lift_signal(d, p)?,
        &lift_signal(e, p)?,
    )?;
    let y_lifted = lift_signal(&log.y, p)?;
    let mut worst: f64 = 0.0;
    for (a, b) in y_lifted.iter().zip(&run.outputs) {
        worst = worst.max((a - b).amax());
    }
    for (j, xj) in run.states.iter().enumerate() {
        worst = worst.max((xj - &log.x[j * p]).amax());
    }
    Ok(worst.max((&run.next_state - &log.next_state).amax()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::Family;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn period_one_lifting_is_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.4]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let c = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let d = DMatrix::from_row_slice(1, 1, &[0.3]);
        let k = DMatrix::from_row_slice(2, 1, &[0.1, 0.2]);
        let f = DMatrix::from_row_slice(2, 1, &[0.5, 0.5]);
        let g = DMatrix::from_row_slice(1, 1, &[0.7]);
        let plant =
            LptvPlant::lti(a.clone(), b.clone(), c.clone(), d.clone(), k.clone(), f.clone(), g.clone())
                .unwrap();
        let s = lift_system(&plant, 3);
        assert_eq!((s.a, s.b, s.c, s.d, s.k, s.f, s.g), (a, b, c, d, k, f, g));
        assert_eq!(s.h, DMatrix::identity(1, 1));
    }

    #[test]
    fn case_study_lifted_a_is_twenty_factor_product() {
        let plant = LptvPlant::case_study();
        let mut product = DMatrix::identity(3, 3);
        for k in 0..20 {
            product = plant.matrix(Family::A, k) * product;
        }
        let s = lift_system(&plant, 0);
        assert_relative_eq!(s.a, product, epsilon = 1e-14);
        assert_eq!(s, {
            let mut t = lift_system(&plant, 20);
            t.anchor = 0;
            t
        });
        assert_eq!(s.b.shape(), (3, 20));
        assert_eq!(s.d.shape(), (40, 20));
        // block lower-triangular feedthroughs
        for i in 0..20 {
            for j in (i + 1)..20 {
                assert_eq!(s.d.view((2 * i, j), (2, 1)).amax(), 0.0);
                assert_eq!(s.g.view((2 * i, j), (2, 1)).amax(), 0.0);
                assert_eq!(s.h.view((2 * i, 2 * j), (2, 2)).amax(), 0.0);
            }
        }
    }

    #[test]
    fn augmented_structure() {
        let plant = LptvPlant::case_study();
        let aug = augment(&lift_system(&plant, 0));
        assert_eq!(aug.dim(), 23);
        assert_eq!(aug.state.view((3, 0), (20, 3)).amax(), 0.0);
        assert_eq!(
            aug.state.view((3, 3), (20, 20)).into_owned(),
            DMatrix::identity(20, 20)
        );
        let block = aug.state.view((3, 3), (20, 20)).into_owned();
        for ev in block.complex_eigenvalues().iter() {
            assert_eq!(ev.re, 1.0);
            assert_eq!(ev.im, 0.0);
        }
    }

    #[test]
    fn augment_without_disturbance_channel() {
        let plant = LptvPlant::lti(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 0),
            DMatrix::zeros(1, 0),
        )
        .unwrap();
        let lifted = lift_system(&plant, 0);
        let aug = augment(&lifted);
        assert_eq!(aug.state, lifted.a);
        assert_eq!(aug.dim(), 1);
    }

    #[test]
    fn lift_signal_examples() {
        let s: Vec<_> = (1..=40).map(|v| DVector::from_element(1, v as f64)).collect();
        let lifted = lift_signal(&s, 20).unwrap();
        assert_eq!(lifted.len(), 2);
        assert_eq!(lifted[0], DVector::from_fn(20, |i, _| (i + 1) as f64));
        assert_eq!(lift_signal(&s, 1).unwrap(), s);
        assert!(lift_signal(&s[..39], 20).is_err());

        let single = vec![DVector::from_fn(20, |i, _| i as f64)];
        let samples = unlift_signal(&single, 20).unwrap();
        assert_eq!(samples.len(), 20);
        assert_eq!(samples[7], DVector::from_element(1, 7.0));
        assert!(unlift_signal(&[DVector::zeros(21)], 20).is_err());

        let y = vec![DVector::from_fn(40, |i, _| i as f64)];
        let outs = unlift_signal(&y, 20).unwrap();
        assert_eq!(outs.len(), 20);
        assert_eq!(outs[3], DVector::from_vec(vec![6.0, 7.0]));
    }

    #[test]
    fn periodic_disturbance_lifts_to_constant() {
        let d: Vec<_> = (0..100)
            .map(|k| DVector::from_element(1, crate::experiment::periodic_disturbance(k, 20, 1.0)))
            .collect();
        let lifted = lift_signal(&d, 20).unwrap();
        assert!(lifted.windows(2).all(|w| w[0] == w[1]));
    }

    proptest! {
        #[test]
        fn unlift_inverts_lift(
            v in proptest::collection::vec(-10.0f64..10.0, 1..8),
            periods in 1usize..5,
            period in 1usize..6,
        ) {
            let q = v.len();
            let samples: Vec<_> = (0..periods * period)
                .map(|i| DVector::from_fn(q, |r, _| v[r] * i as f64 + r as f64))
                .collect();
            let back = unlift_signal(&lift_signal(&samples, period).unwrap(), period).unwrap();
            prop_assert_eq!(back, samples);
        }
    }
}
