//! Predictive families and the finite-state urn.
//!
//! Three families share one interface:
//!
//! * [`PredictiveFamily::Mvps`]: `(θν + Σ_i R_{X_i}) / (θ + Σ_i R_{X_i}(X))`;
//! * [`PredictiveFamily::Sufficientness`]: `(1 − a_n) ν + (a_n / n) Σ_i R_{X_i}`
//!   for an arbitrary coefficient sequence in `(0, 1)`;
//! * [`PredictiveFamily::Iid`]: always `ν`.
//!
//! Histories are ordered sequences. Order-insensitivity of the predictive is
//! something [`crate::verify`] checks, not something assumed here.

use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::measure::{Kernel, Measure, StateSpace};
use crate::rng;
use crate::scalar::{Scalar, DEFAULT_TOL};

/// Parameters of an MVPS(θ, ν, R).
#[derive(Clone, Debug, PartialEq)]
pub struct MvpsSpec<S> {
    theta: S,
    nu: Measure<S>,
    kernel: Kernel<S>,
    balanced: bool,
}

impl<S: Scalar> MvpsSpec<S> {
    /// `ν` must be a strictly positive probability measure and `θ > 0`; `R`
    /// may be any finite kernel on the same space.
    pub fn new(theta: S, nu: Measure<S>, kernel: Kernel<S>) -> Result<Self> {
        if !(theta > S::zero()) {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive, got {theta}"
            )));
        }
        check_base_measure(&nu)?;
        if nu.space() != kernel.space() {
            return Err(Error::SpaceMismatch);
        }
        if (0..kernel.len()).any(|j| !(kernel.row_mass(j) > S::zero())) {
            return Err(Error::InvalidKernel(
                "every reinforcement row needs positive mass".into(),
            ));
        }
        let balanced = kernel.is_probability(DEFAULT_TOL);
        Ok(MvpsSpec {
            theta,
            nu,
            kernel,
            balanced,
        })
    }

    pub fn theta(&self) -> &S {
        &self.theta
    }

    pub fn nu(&self) -> &Measure<S> {
        &self.nu
    }

    pub fn kernel(&self) -> &Kernel<S> {
        &self.kernel
    }

    pub fn is_balanced(&self) -> bool {
        self.balanced
    }

    pub fn space(&self) -> &StateSpace {
        self.nu.space()
    }
}

fn check_base_measure<S: Scalar>(nu: &Measure<S>) -> Result<()> {
    if !nu.is_probability(DEFAULT_TOL) {
        return Err(Error::InvalidMeasure(format!(
            "base measure has mass {}, expected 1",
            nu.mass()
        )));
    }
    if !nu.is_strictly_positive() {
        return Err(Error::InvalidMeasure(
            "base measure must give every state positive mass".into(),
        ));
    }
    Ok(())
}

/// The mixing weights `a_1, a_2, …` of a sufficientness-form predictive.
#[derive(Clone)]
pub enum Coefficients<S> {
    /// `a_n = n / (n + θ)`.
    Mvps {
        theta: S,
    },
    /// `a_n = values[n − 1]`; histories longer than `values.len()` are rejected.
    List(Vec<S>),
    ClosedForm(Arc<dyn Fn(usize) -> S + Send + Sync>),
}

impl<S: Scalar> Coefficients<S> {
    pub fn closed_form(f: impl Fn(usize) -> S + Send + Sync + 'static) -> Self {
        Coefficients::ClosedForm(Arc::new(f))
    }

    pub fn horizon(&self) -> Option<usize> {
        match self {
            Coefficients::List(v) => Some(v.len()),
            _ => None,
        }
    }

    /// `a_n` for `n ≥ 1`, checked to lie strictly inside `(0, 1)`.
    pub fn get(&self, n: usize) -> Result<S> {
        if n == 0 {
            return Err(Error::out_of_range("coefficient index", 0, "n >= 1"));
        }
        let a = match self {
            Coefficients::Mvps { theta } => mvps_coefficients(theta, n)?,
            Coefficients::List(v) => v.get(n - 1).cloned().ok_or(Error::HorizonExceeded {
                len: n,
                horizon: v.len(),
            })?,
            Coefficients::ClosedForm(f) => f(n),
        };
        if !(a > S::zero() && a < S::one()) {
            return Err(Error::InvalidParameter(format!(
                "a_{n} = {a} is not in (0, 1)"
            )));
        }
        Ok(a)
    }

    pub fn map<T: Scalar>(&self, f: fn(&S) -> T) -> Coefficients<T> {
        match self {
            Coefficients::Mvps { theta } => Coefficients::Mvps { theta: f(theta) },
            Coefficients::List(v) => Coefficients::List(v.iter().map(f).collect()),
            Coefficients::ClosedForm(g) => {
                let g = Arc::clone(g);
                Coefficients::ClosedForm(Arc::new(move |n| f(&g(n))))
            }
        }
    }
}

impl<S: fmt::Debug> fmt::Debug for Coefficients<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Mvps { theta } => f.debug_struct("Mvps").field("theta", theta).finish(),
            Coefficients::List(v) => f.debug_tuple("List").field(v).finish(),
            Coefficients::ClosedForm(_) => f.write_str("ClosedForm(..)"),
        }
    }
}

/// `a_n = n / (n + θ)`.
pub fn mvps_coefficients<S: Scalar>(theta: &S, n: usize) -> Result<S> {
    if !(*theta > S::zero()) {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive, got {theta}"
        )));
    }
    if n == 0 {
        return Err(Error::out_of_range("n", 0, "n >= 1"));
    }
    let n = S::from_usize(n);
    Ok(n.clone() / (n + theta.clone()))
}

#[derive(Clone, Debug)]
pub enum PredictiveFamily<S> {
    Mvps(MvpsSpec<S>),
    Sufficientness {
        nu: Measure<S>,
        kernel: Kernel<S>,
        coefficients: Coefficients<S>,
    },
    Iid {
        nu: Measure<S>,
    },
}

impl<S: Scalar> PredictiveFamily<S> {
    pub fn mvps(theta: S, nu: Measure<S>, kernel: Kernel<S>) -> Result<Self> {
        MvpsSpec::new(theta, nu, kernel).map(PredictiveFamily::Mvps)
    }

    /// `R` must be a probability kernel; explicit coefficient lists must lie
    /// in `(0, 1)` (closed forms are checked when evaluated).
    pub fn sufficientness(
        nu: Measure<S>,
        kernel: Kernel<S>,
        coefficients: Coefficients<S>,
    ) -> Result<Self> {
        check_base_measure(&nu)?;
        if nu.space() != kernel.space() {
            return Err(Error::SpaceMismatch);
        }
        if !kernel.is_probability(DEFAULT_TOL) {
            return Err(Error::InvalidKernel(
                "sufficientness form needs a probability kernel".into(),
            ));
        }
        match &coefficients {
            Coefficients::List(v) => {
                for n in 1..=v.len() {
                    coefficients.get(n)?;
                }
            }
            Coefficients::Mvps { theta } => {
                mvps_coefficients(theta, 1)?;
            }
            Coefficients::ClosedForm(_) => {}
        }
        Ok(PredictiveFamily::Sufficientness {
            nu,
            kernel,
            coefficients,
        })
    }

    pub fn iid(nu: Measure<S>) -> Result<Self> {
        check_base_measure(&nu)?;
        Ok(PredictiveFamily::Iid { nu })
    }

    pub fn nu(&self) -> &Measure<S> {
        match self {
            PredictiveFamily::Mvps(spec) => spec.nu(),
            PredictiveFamily::Sufficientness { nu, .. } | PredictiveFamily::Iid { nu } => nu,
        }
    }

    pub fn space(&self) -> &StateSpace {
        self.nu().space()
    }

    pub fn kernel(&self) -> Option<&Kernel<S>> {
        match self {
            PredictiveFamily::Mvps(spec) => Some(spec.kernel()),
            PredictiveFamily::Sufficientness { kernel, .. } => Some(kernel),
            PredictiveFamily::Iid { .. } => None,
        }
    }

    /// Longest history for which a predictive can be evaluated.
    pub fn horizon(&self) -> Option<usize> {
        match self {
            PredictiveFamily::Sufficientness { coefficients, .. } => coefficients.horizon(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> PredictiveFamily<f64> {
        match self {
            PredictiveFamily::Mvps(spec) => PredictiveFamily::Mvps(MvpsSpec {
                theta: spec.theta.to_f64(),
                nu: spec.nu.to_f64(),
                kernel: spec.kernel.to_f64(),
                balanced: spec.balanced,
            }),
            PredictiveFamily::Sufficientness {
                nu,
                kernel,
                coefficients,
            } => PredictiveFamily::Sufficientness {
                nu: nu.to_f64(),
                kernel: kernel.to_f64(),
                coefficients: coefficients.map(Scalar::to_f64),
            },
            PredictiveFamily::Iid { nu } => PredictiveFamily::Iid { nu: nu.to_f64() },
        }
    }
}

/// A finite sequence of state indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trajectory {
    space: StateSpace,
    values: Vec<usize>,
}

impl Trajectory {
    pub fn new(space: StateSpace, values: Vec<usize>) -> Result<Self> {
        if let Some(&v) = values.iter().find(|&&v| v >= space.len()) {
            return Err(Error::out_of_range(
                "state index",
                v,
                format!("0..{}", space.len()),
            ));
        }
        Ok(Trajectory { space, values })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.values.iter().map(|&v| self.space.label(v))
    }
}

/// Running urn composition: the sum of observed reinforcement rows.
#[derive(Clone, Debug)]
pub(crate) struct UrnState<S> {
    observed: usize,
    reinforcement: Vec<S>,
    added_mass: S,
}

impl<S: Scalar> UrnState<S> {
    pub(crate) fn new(k: usize) -> Self {
        UrnState {
            observed: 0,
            reinforcement: vec![S::zero(); k],
            added_mass: S::zero(),
        }
    }

    pub(crate) fn observe(&mut self, family: &PredictiveFamily<S>, x: usize) {
        self.observed += 1;
        if let Some(kernel) = family.kernel() {
            for (acc, w) in self.reinforcement.iter_mut().zip(kernel.row(x)) {
                *acc = acc.clone() + w.clone();
            }
            self.added_mass = self.added_mass.clone() + kernel.row_mass(x);
        }
    }

    pub(crate) fn predictive(&self, family: &PredictiveFamily<S>) -> Result<Vec<S>> {
        let nu = family.nu().weights();
        if self.observed == 0 {
            if let Some(h) = family.horizon() {
                // a_1 must exist for the family to be usable at all
                if h == 0 {
                    return Err(Error::HorizonExceeded { len: 1, horizon: 0 });
                }
            }
            return Ok(nu.to_vec());
        }
        Ok(match family {
            PredictiveFamily::Iid { .. } => nu.to_vec(),
            PredictiveFamily::Mvps(spec) => {
                let denom = spec.theta.clone() + self.added_mass.clone();
                nu.iter()
                    .zip(&self.reinforcement)
                    .map(|(v, r)| (spec.theta.clone() * v.clone() + r.clone()) / denom.clone())
                    .collect()
            }
            PredictiveFamily::Sufficientness { coefficients, .. } => {
                let a = coefficients.get(self.observed)?;
                let b = S::one() - a.clone();
                let w = a / S::from_usize(self.observed);
                nu.iter()
                    .zip(&self.reinforcement)
                    .map(|(v, r)| b.clone() * v.clone() + w.clone() * r.clone())
                    .collect()
            }
        })
    }
}

fn check_space<S: Scalar>(family: &PredictiveFamily<S>, t: &Trajectory) -> Result<()> {
    if family.space() != t.space() {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

/// `P(X_{n+1} ∈ · | X_1..X_n = h)`.
pub fn predictive<S: Scalar>(
    family: &PredictiveFamily<S>,
    history: &Trajectory,
) -> Result<Measure<S>> {
    check_space(family, history)?;
    let mut urn = UrnState::new(family.space().len());
    for &x in history.values() {
        urn.observe(family, x);
    }
    Measure::new(family.space().clone(), urn.predictive(family)?)
}

/// Chain-rule product `Π_i P(X_{i+1} = t_{i+1} | t_1..t_i)`.
pub fn joint_probability<S: Scalar>(family: &PredictiveFamily<S>, t: &Trajectory) -> Result<S> {
    check_space(family, t)?;
    let mut urn = UrnState::new(family.space().len());
    let mut p = S::one();
    for &x in t.values() {
        let pred = urn.predictive(family)?;
        p = p * pred[x].clone();
        urn.observe(family, x);
    }
    Ok(p)
}

/// Inverse-CDF draw over the state ordering from one uniform in `[0, 1)`.
pub(crate) fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut cum = 0.0;
    let mut last_positive = 0;
    for (j, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = j;
        }
        cum += w;
        if target < cum {
            return j;
        }
    }
    last_positive
}

/// Draws `n` steps of the urn, one uniform per step, from `rng::stream(seed)`.
/// Exact families are sampled through their `f64` image.
pub fn sample<S: Scalar>(family: &PredictiveFamily<S>, n: usize, seed: u64) -> Result<Trajectory> {
    let fam = family.to_f64();
    if let Some(h) = fam.horizon() {
        if n > h + 1 {
            return Err(Error::HorizonExceeded {
                len: n - 1,
                horizon: h,
            });
        }
    }
    let mut rng = rng::stream(seed);
    let mut urn = UrnState::<f64>::new(fam.space().len());
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let pred = urn.predictive(&fam)?;
        let x = inverse_cdf(&pred, rng.random::<f64>());
        urn.observe(&fam, x);
        values.push(x);
    }
    Trajectory::new(family.space().clone(), values)
}

/// Rescales a constant-row-mass MVPS to the balanced MVPS(θ/c, ν, R/c) with
/// the same predictive rule.
pub fn rebalance<S: Scalar>(spec: &MvpsSpec<S>) -> Result<MvpsSpec<S>> {
    let c = spec
        .kernel
        .constant_row_mass(if S::EXACT { 0.0 } else { DEFAULT_TOL })
        .ok_or(Error::NotConstantMass)?;
    if c == S::one() {
        return Ok(spec.clone());
    }
    let inv = S::one() / c.clone();
    MvpsSpec::new(
        spec.theta.clone() / c,
        spec.nu.clone(),
        spec.kernel.scale(&inv),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::partition::{conditional_kernel, Partition};
    use crate::scalar::{q, Rational};

    fn space(k: usize) -> StateSpace {
        StateSpace::indexed(k).unwrap()
    }

    fn nu3() -> Measure<Rational> {
        Measure::probability(space(3), vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap()
    }

    fn two_block_mvps() -> PredictiveFamily<Rational> {
        let nu = nu3();
        let p = Partition::from_blocks(3, &[vec![0], vec![1, 2]]).unwrap();
        let r = conditional_kernel(&nu, &p).unwrap();
        PredictiveFamily::mvps(q(2, 1), nu, r).unwrap()
    }

    fn traj(k: usize, v: &[usize]) -> Trajectory {
        Trajectory::new(space(k), v.to_vec()).unwrap()
    }

    #[test]
    fn dirichlet_rule_worked_value() {
        let s = space(2);
        let f = PredictiveFamily::mvps(q(1, 1), Measure::uniform(s.clone()), Kernel::identity(s))
            .unwrap();
        let p = predictive(&f, &traj(2, &[0])).unwrap();
        assert_eq!(p.weights(), &[q(3, 4), q(1, 4)]);
    }

    #[test]
    fn partition_mvps_worked_values() {
        let f = two_block_mvps();
        let p = predictive(&f, &traj(3, &[1])).unwrap();
        assert_eq!(p.weights(), &[q(2, 15), q(13, 40), q(13, 24)]);
        assert_eq!(p.mass(), q(1, 1));
        assert_eq!(joint_probability(&f, &traj(3, &[1, 2])).unwrap(), q(13, 80));
        assert_eq!(joint_probability(&f, &traj(3, &[2, 1])).unwrap(), q(13, 80));
        assert_eq!(predictive(&f, &traj(3, &[])).unwrap(), nu3());
    }

    #[test]
    fn iid_joint_is_product() {
        let f = PredictiveFamily::iid(nu3()).unwrap();
        assert_eq!(joint_probability(&f, &traj(3, &[0, 0])).unwrap(), q(1, 25));
    }

    #[test]
    fn mvps_coefficient_values() {
        assert_eq!(mvps_coefficients(&q(3, 1), 1).unwrap(), q(1, 4));
        assert_eq!(mvps_coefficients(&q(3, 1), 5).unwrap(), q(5, 8));
        for n in 1..50 {
            assert!(mvps_coefficients(&q(1, 1000), n).unwrap() < q(1, 1));
        }
        assert!(mvps_coefficients(&q(0, 1), 1).is_err());
    }

    #[test]
    fn list_coefficients_have_a_horizon() {
        let s = space(2);
        let f = PredictiveFamily::sufficientness(
            Measure::uniform(s.clone()),
            Kernel::identity(s),
            Coefficients::List(vec![q(1, 2)]),
        )
        .unwrap();
        assert!(joint_probability(&f, &traj(2, &[0, 1])).is_ok());
        assert_eq!(
            joint_probability(&f, &traj(2, &[0, 1, 1])),
            Err(Error::HorizonExceeded { len: 2, horizon: 1 })
        );
        assert!(sample(&f, 2, 1).is_ok());
        assert!(matches!(
            sample(&f, 3, 1),
            Err(Error::HorizonExceeded { .. })
        ));
    }

    #[test]
    fn boundary_coefficients_are_rejected() {
        let s = space(2);
        for bad in [q(0, 1), q(1, 1)] {
            assert!(PredictiveFamily::sufficientness(
                Measure::uniform(s.clone()),
                Kernel::identity(s.clone()),
                Coefficients::List(vec![bad])
            )
            .is_err());
        }
    }

    #[test]
    fn constructors_enforce_positive_base_measure() {
        let s = space(2);
        let nu = Measure::probability(s.clone(), vec![q(1, 1), q(0, 1)]).unwrap();
        assert!(PredictiveFamily::mvps(q(1, 1), nu.clone(), Kernel::identity(s.clone())).is_err());
        assert!(PredictiveFamily::iid(nu).is_err());
        assert!(
            PredictiveFamily::mvps(q(0, 1), Measure::uniform(s.clone()), Kernel::identity(s))
                .is_err()
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = two_block_mvps();
        assert!(sample(&f, 0, 9).unwrap().is_empty());
        let a = sample(&f, 200, 42).unwrap();
        let b = sample(&f, 200, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample(&f, 200, 43).unwrap());
    }

    #[test]
    fn rebalance_examples() {
        let s = space(2);
        let nu = Measure::uniform(s.clone());
        let doubled = Kernel::identity(s.clone()).scale(&q(2, 1));
        let spec = MvpsSpec::new(q(4, 1), nu.clone(), doubled).unwrap();
        assert!(!spec.is_balanced());
        let rb = rebalance(&spec).unwrap();
        assert_eq!(rb.theta(), &q(2, 1));
        assert!(rb.is_balanced());
        assert_eq!(rb.kernel(), &Kernel::identity(s.clone()));

        let balanced = MvpsSpec::new(q(4, 1), nu.clone(), Kernel::identity(s.clone())).unwrap();
        assert_eq!(rebalance(&balanced).unwrap(), balanced);

        let uneven = Kernel::new(s, vec![vec![q(1, 1), q(0, 1)], vec![q(1, 1), q(1, 1)]]).unwrap();
        let spec = MvpsSpec::new(q(1, 1), nu, uneven).unwrap();
        assert_eq!(rebalance(&spec), Err(Error::NotConstantMass));
    }

    #[test]
    fn inverse_cdf_picks_by_cumulative_mass() {
        let w = [0.25, 0.0, 0.75];
        assert_eq!(inverse_cdf(&w, 0.0), 0);
        assert_eq!(inverse_cdf(&w, 0.2499), 0);
        assert_eq!(inverse_cdf(&w, 0.25), 2);
        assert_eq!(inverse_cdf(&w, 0.999_999), 2);
    }
}
