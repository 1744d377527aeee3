//! Finite measures and kernels on a labelled finite state space.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, DEFAULT_TOL};

/// Ordered, distinct state labels `x_1, …, x_k`. States are addressed by
/// index `0..k`; labels only matter for input and output.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StateSpace {
    labels: Arc<[String]>,
}

impl StateSpace {
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidSpace("at least one state is required".into()));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidSpace(format!("duplicate label {l:?}")));
            }
        }
        Ok(StateSpace {
            labels: labels.into(),
        })
    }

    /// `x1, x2, …, xk`.
    pub fn indexed(k: usize) -> Result<Self> {
        Self::new((1..=k).map(|j| format!("x{j}")))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, j: usize) -> &str {
        &self.labels[j]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

impl fmt::Debug for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.labels.iter()).finish()
    }
}

/// Nonnegative weights over a [`StateSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Measure<S> {
    space: StateSpace,
    weights: Vec<S>,
}

impl<S: Scalar> Measure<S> {
    pub fn new(space: StateSpace, weights: Vec<S>) -> Result<Self> {
        if weights.len() != space.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} weights for {} states",
                weights.len(),
                space.len()
            )));
        }
        if let Some(j) = weights.iter().position(|w| *w < S::zero()) {
            return Err(Error::InvalidMeasure(format!(
                "negative weight at {}",
                space.label(j)
            )));
        }
        Ok(Measure { space, weights })
    }

    /// A measure that must have unit mass (exactly, or within the default
    /// tolerance in float mode).
    pub fn probability(space: StateSpace, weights: Vec<S>) -> Result<Self> {
        let m = Self::new(space, weights)?;
        if !m.is_probability(DEFAULT_TOL) {
            return Err(Error::InvalidMeasure(format!(
                "total mass {} is not 1",
                m.mass()
            )));
        }
        Ok(m)
    }

    pub fn uniform(space: StateSpace) -> Self {
        let k = space.len();
        let w = S::one() / S::from_usize(k);
        Measure {
            space,
            weights: vec![w; k],
        }
    }

    pub fn dirac(space: StateSpace, j: usize) -> Self {
        let mut weights = vec![S::zero(); space.len()];
        weights[j] = S::one();
        Measure { space, weights }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> &S {
        &self.weights[j]
    }

    pub fn into_weights(self) -> Vec<S> {
        self.weights
    }

    pub fn mass(&self) -> S {
        sum(&self.weights)
    }

    /// `ν(D)` for a set of state indices.
    pub fn mass_of(&self, states: &[usize]) -> S {
        states
            .iter()
            .fold(S::zero(), |acc, &j| acc + self.weights[j].clone())
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        self.mass().approx_eq(&S::one(), tol)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.weights.iter().all(|w| *w > S::zero())
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.space == other.space
            && self
                .weights
                .iter()
                .zip(&other.weights)
                .all(|(a, b)| a.approx_eq(b, tol))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Measure<T> {
        Measure {
            space: self.space.clone(),
            weights: self.weights.iter().map(f).collect(),
        }
    }

    pub fn to_f64(&self) -> Measure<f64> {
        self.map(Scalar::to_f64)
    }
}

pub(crate) fn sum<S: Scalar>(xs: &[S]) -> S {
    xs.iter().fold(S::zero(), |acc, x| acc + x.clone())
}

/// One finite measure per state: row `j` is `R_{x_j}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel<S> {
    space: StateSpace,
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> Kernel<S> {
    /// A finite (not necessarily normalised) kernel.
    pub fn new(space: StateSpace, rows: Vec<Vec<S>>) -> Result<Self> {
        let k = space.len();
        if rows.len() != k {
            return Err(Error::InvalidKernel(format!(
                "{} rows for {k} states",
                rows.len()
            )));
        }
        for (j, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidKernel(format!(
                    "row {} has {} entries, expected {k}",
                    space.label(j),
                    row.len()
                )));
            }
            if row.iter().any(|w| *w < S::zero()) {
                return Err(Error::InvalidKernel(format!(
                    "row {} has a negative entry",
                    space.label(j)
                )));
            }
        }
        Ok(Kernel { space, rows })
    }

    /// A kernel whose every row has unit mass.
    pub fn probability(space: StateSpace, rows: Vec<Vec<S>>) -> Result<Self> {
        let kernel = Self::new(space, rows)?;
        if let Some(j) =
            (0..kernel.len()).find(|&j| !kernel.row_mass(j).approx_eq(&S::one(), DEFAULT_TOL))
        {
            return Err(Error::InvalidKernel(format!(
                "row {} has mass {}, expected 1",
                kernel.space.label(j),
                kernel.row_mass(j)
            )));
        }
        Ok(kernel)
    }

    /// Dirac kernel `R_x = δ_x`.
    pub fn identity(space: StateSpace) -> Self {
        let k = space.len();
        let rows = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| if i == j { S::one() } else { S::zero() })
                    .collect()
            })
            .collect();
        Kernel { space, rows }
    }

    /// Every row equal to `mu`.
    pub fn constant(mu: &Measure<S>) -> Self {
        Kernel {
            space: mu.space.clone(),
            rows: vec![mu.weights.clone(); mu.space.len()],
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, j: usize) -> &[S] {
        &self.rows[j]
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn row_measure(&self, j: usize) -> Measure<S> {
        Measure {
            space: self.space.clone(),
            weights: self.rows[j].clone(),
        }
    }

    pub fn row_mass(&self, j: usize) -> S {
        sum(&self.rows[j])
    }

    pub fn is_probability(&self, tol: f64) -> bool {
        (0..self.len()).all(|j| self.row_mass(j).approx_eq(&S::one(), tol))
    }

    /// The common row mass, if every row has the same total.
    pub fn constant_row_mass(&self, tol: f64) -> Option<S> {
        let c = self.row_mass(0);
        (1..self.len())
            .all(|j| self.row_mass(j).approx_eq(&c, tol))
            .then_some(c)
    }

    pub fn scale(&self, factor: &S) -> Self {
        Kernel {
            space: self.space.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|w| w.clone() * factor.clone()).collect())
                .collect(),
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.space == other.space
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.approx_eq(y, tol)))
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Kernel<T> {
        Kernel {
            space: self.space.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(&f).collect())
                .collect(),
        }
    }

    pub fn to_f64(&self) -> Kernel<f64> {
        self.map(Scalar::to_f64)
    }
}

/// `m / m(X)`.
pub fn normalize<S: Scalar>(m: &Measure<S>) -> Result<Measure<S>> {
    let mass = m.mass();
    if mass.is_zero() {
        return Err(Error::ZeroMass);
    }
    Ok(m.map(|w| w.clone() / mass.clone()))
}

/// `ν(· | D)` for a set `D` of state indices.
pub fn condition<S: Scalar>(nu: &Measure<S>, block: &[usize]) -> Result<Measure<S>> {
    let k = nu.space.len();
    if let Some(&j) = block.iter().find(|&&j| j >= k) {
        return Err(Error::out_of_range("state index", j, format!("0..{k}")));
    }
    let mass = nu.mass_of(block);
    if !(mass > S::zero()) {
        return Err(Error::ZeroMassBlock { block: 0 });
    }
    let mut weights = vec![S::zero(); k];
    for &j in block {
        weights[j] = nu.weights[j].clone() / mass.clone();
    }
    Ok(Measure {
        space: nu.space.clone(),
        weights,
    })
}

/// `(1 − a) p + a q`.
pub fn mix<S: Scalar>(a: &S, p: &Measure<S>, q: &Measure<S>) -> Result<Measure<S>> {
    if p.space != q.space {
        return Err(Error::SpaceMismatch);
    }
    if *a < S::zero() || *a > S::one() {
        return Err(Error::out_of_range("mixing weight", a, "[0, 1]"));
    }
    let b = S::one() - a.clone();
    Ok(Measure {
        space: p.space.clone(),
        weights: p
            .weights
            .iter()
            .zip(&q.weights)
            .map(|(x, y)| b.clone() * x.clone() + a.clone() * y.clone())
            .collect(),
    })
}

/// Left action `(μR)(z) = Σ_y μ(y) R_y(z)`.
pub fn kernel_apply<S: Scalar>(r: &Kernel<S>, mu: &Measure<S>) -> Result<Measure<S>> {
    if r.space != mu.space {
        return Err(Error::SpaceMismatch);
    }
    let k = mu.space.len();
    let mut out = vec![S::zero(); k];
    for (y, row) in r.rows.iter().enumerate() {
        let m = &mu.weights[y];
        if m.is_zero() {
            continue;
        }
        for (z, w) in row.iter().enumerate() {
            out[z] = out[z].clone() + m.clone() * w.clone();
        }
    }
    Ok(Measure {
        space: mu.space.clone(),
        weights: out,
    })
}

/// `½ Σ_j |p_j − q_j|`.
pub fn total_variation<S: Scalar>(p: &Measure<S>, q: &Measure<S>) -> Result<S> {
    if p.space != q.space {
        return Err(Error::SpaceMismatch);
    }
    Ok(total_variation_slices(&p.weights, &q.weights))
}

pub(crate) fn total_variation_slices<S: Scalar>(p: &[S], q: &[S]) -> S {
    let s = p
        .iter()
        .zip(q)
        .fold(S::zero(), |acc, (a, b)| acc + (a.clone() - b.clone()).abs());
    s / S::from_usize(2)
}
