//! Exact oracles for exchangeability and for the identities an exchangeable
//! sufficientness-form process must satisfy.
//!
//! All exhaustive checks enumerate every history up to the requested length
//! (guarded by `k^L ≤ 10^7`) and compare exact rationals. Exchangeability is
//! tested through adjacent transpositions only: they generate the symmetric
//! group, so invariance under all of them at each length is invariance under
//! every permutation. Reported counterexamples are the first in
//! (length, lexicographic history, position) order regardless of scheduling.

use std::collections::HashMap;

use crate::enumerate::{decode_history, encode, enumerate_levels};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::measure::{Kernel, Measure};
use crate::partition::Partition;
use crate::process::{mvps_coefficients, rebalance, PredictiveFamily};
use crate::scalar::{Scalar, DEFAULT_TOL};

/// A transposition that changes the joint probability.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample<S> {
    pub trajectory: Vec<usize>,
    /// The entries at `position` and `position + 1` are swapped.
    pub position: usize,
    pub probability: S,
    pub swapped_probability: S,
}

impl<S> Counterexample<S> {
    pub fn swapped_trajectory(&self) -> Vec<usize> {
        let mut t = self.trajectory.clone();
        t.swap(self.position, self.position + 1);
        t
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeabilityReport<S> {
    pub exchangeable: bool,
    pub max_length_checked: usize,
    pub counterexample: Option<Counterexample<S>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Mvps,
    NonExchangeable,
    /// Not expressible as `(1 − a_n)ν + a_n · avg R`, or exchangeable to the
    /// checked length while the coefficients stray from `n / (θ̂ + n)`.
    NotSufficientnessForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTrace<S> {
    pub n: usize,
    pub observed: S,
    pub forced: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CharacterizationResult<S> {
    pub verdict: Verdict,
    pub theta_hat: Option<S>,
    /// Every reinforcement row equals `ν`: the law is i.i.d.(ν) and is an MVPS
    /// for any `θ`, whatever the coefficients.
    pub degenerate_iid: bool,
    pub coefficient_trace: Vec<CoefficientTrace<S>>,
    pub counterexample: Option<Counterexample<S>>,
}

/// Two histories that a sufficientness postulate groups together but whose
/// predictive masses at `state` differ.
#[derive(Clone, Debug, PartialEq)]
pub struct SufficientnessCounterexample<S> {
    pub state: usize,
    pub first: Vec<usize>,
    pub first_mass: S,
    pub second: Vec<usize>,
    pub second_mass: S,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SufficientnessReport<S> {
    pub holds: bool,
    pub counterexample: Option<SufficientnessCounterexample<S>>,
}

impl<S> SufficientnessReport<S> {
    fn from_counterexample(c: Option<SufficientnessCounterexample<S>>) -> Self {
        SufficientnessReport {
            holds: c.is_none(),
            counterexample: c,
        }
    }
}

/// Comparison tolerance (ignored for exact scalars) and execution mode.
#[derive(Clone, Copy, Debug)]
pub struct Verifier {
    pub tol: f64,
    pub exec: Execution,
}

impl Default for Verifier {
    fn default() -> Self {
        Verifier {
            tol: DEFAULT_TOL,
            exec: Execution::default(),
        }
    }
}

fn block_counts(history: &[usize], p: &Partition) -> Vec<usize> {
    let mut counts = vec![0; p.num_blocks()];
    for &x in history {
        counts[p.block_of(x)] += 1;
    }
    counts
}

fn check_partition<S: Scalar>(f: &PredictiveFamily<S>, p: &Partition) -> Result<()> {
    if p.len() != f.space().len() {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

impl Verifier {
    pub fn sequential() -> Self {
        Verifier {
            exec: Execution::Sequential,
            ..Self::default()
        }
    }

    pub fn check_exchangeable<S: Scalar>(
        &self,
        f: &PredictiveFamily<S>,
        max_len: usize,
    ) -> Result<ExchangeabilityReport<S>> {
        let k = f.space().len();
        let tables = enumerate_levels(f, max_len, false, self.exec, |v| v.joint.clone())?;
        for (n, table) in tables.iter().enumerate().skip(2) {
            let found = exec::map_chunks(self.exec, table.len(), 256, |range| {
                for i in range {
                    let h = decode_history(i, k, n);
                    for pos in 0..n - 1 {
                        if h[pos] >= h[pos + 1] {
                            continue;
                        }
                        let mut swapped = h.clone();
                        swapped.swap(pos, pos + 1);
                        let other = &table[encode(&swapped, k)];
                        if !table[i].approx_eq(other, self.tol) {
                            return Some(Counterexample {
                                trajectory: h,
                                position: pos,
                                probability: table[i].clone(),
                                swapped_probability: other.clone(),
                            });
                        }
                    }
                }
                None
            })
            .into_iter()
            .flatten()
            .next();
            if found.is_some() {
                return Ok(ExchangeabilityReport {
                    exchangeable: false,
                    max_length_checked: max_len,
                    counterexample: found,
                });
            }
        }
        Ok(ExchangeabilityReport {
            exchangeable: true,
            max_length_checked: max_len,
            counterexample: None,
        })
    }

    pub fn characterize<S: Scalar>(
        &self,
        f: &PredictiveFamily<S>,
        max_len: usize,
    ) -> Result<CharacterizationResult<S>> {
        let trace_len = max_len.saturating_sub(1).max(1);
        let (observed, kernel): (Vec<S>, &Kernel<S>) = match f {
            PredictiveFamily::Iid { .. } => {
                return Err(Error::Unsupported(
                    "characterize needs an MVPS or sufficientness-form family".into(),
                ))
            }
            PredictiveFamily::Mvps(spec) => match rebalance(spec) {
                Ok(balanced) => (
                    (1..=trace_len)
                        .map(|n| mvps_coefficients(balanced.theta(), n))
                        .collect::<Result<_>>()?,
                    spec.kernel(),
                ),
                Err(Error::NotConstantMass) => {
                    return Ok(CharacterizationResult {
                        verdict: Verdict::NotSufficientnessForm,
                        theta_hat: None,
                        degenerate_iid: false,
                        coefficient_trace: Vec::new(),
                        counterexample: None,
                    })
                }
                Err(e) => return Err(e),
            },
            PredictiveFamily::Sufficientness {
                kernel,
                coefficients,
                ..
            } => {
                let upto = coefficients
                    .horizon()
                    .map_or(trace_len, |h| trace_len.min(h));
                (
                    (1..=upto)
                        .map(|n| coefficients.get(n))
                        .collect::<Result<_>>()?,
                    kernel,
                )
            }
        };
        let a1 = observed[0].clone();
        let theta_hat = S::one() / a1 - S::one();
        let coefficient_trace: Vec<CoefficientTrace<S>> = observed
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                let n = S::from_usize(i + 1);
                CoefficientTrace {
                    n: i + 1,
                    observed: a,
                    forced: n.clone() / (theta_hat.clone() + n),
                }
            })
            .collect();
        let nu = f.nu();
        let degenerate_iid = (0..kernel.len()).all(|j| {
            kernel
                .row(j)
                .iter()
                .zip(nu.weights())
                .all(|(a, b)| a.approx_eq(b, self.tol))
        });

        let report = self.check_exchangeable(f, max_len)?;
        if !report.exchangeable {
            return Ok(CharacterizationResult {
                verdict: Verdict::NonExchangeable,
                theta_hat: None,
                degenerate_iid,
                coefficient_trace,
                counterexample: report.counterexample,
            });
        }
        let forced = coefficient_trace
            .iter()
            .all(|t| t.observed.approx_eq(&t.forced, self.tol));
        Ok(CharacterizationResult {
            verdict: if forced || degenerate_iid {
                Verdict::Mvps
            } else {
                Verdict::NotSufficientnessForm
            },
            theta_hat: Some(theta_hat),
            degenerate_iid,
            coefficient_trace,
            counterexample: None,
        })
    }

    /// Johnson-type postulate on blocks: `P_n({x_j})` depends on the history
    /// only through `N_{n, m(j)}`, for every `n ≤ max_len`.
    pub fn check_johnson_sufficientness<S: Scalar>(
        &self,
        f: &PredictiveFamily<S>,
        p: &Partition,
        max_len: usize,
    ) -> Result<SufficientnessReport<S>> {
        check_partition(f, p)?;
        let k = f.space().len();
        let levels = enumerate_levels(f, max_len, true, self.exec, |v| {
            v.predictive.expect("leaf predictive requested").to_vec()
        })?;
        for (n, level) in levels.iter().enumerate() {
            let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
            for (i, pred) in level.iter().enumerate() {
                let h = decode_history(i, k, n);
                let counts = block_counts(&h, p);
                for (j, mass) in pred.iter().enumerate() {
                    let key = (j, counts[p.block_of(j)]);
                    match seen.get(&key) {
                        None => {
                            seen.insert(key, i);
                        }
                        Some(&first) => {
                            let first_mass = &level[first][j];
                            if !first_mass.approx_eq(mass, self.tol) {
                                return Ok(SufficientnessReport::from_counterexample(Some(
                                    SufficientnessCounterexample {
                                        state: j,
                                        first: decode_history(first, k, n),
                                        first_mass: first_mass.clone(),
                                        second: h,
                                        second_mass: mass.clone(),
                                    },
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(SufficientnessReport::from_counterexample(None))
    }

    /// Hill-type postulate: `P_n({x_j})` is a function of the single ratio
    /// `(w̄_{m(j)} + N_{n,m(j)}) / (w̄ + n)` across all `n ≤ max_len`.
    ///
    /// In float mode ratios are grouped into buckets of width `tol`, which can
    /// split equal ratios that straddle a bucket edge; the exact mode has no
    /// such caveat.
    pub fn check_hill_sufficientness<S: Scalar>(
        &self,
        f: &PredictiveFamily<S>,
        w: &[S],
        p: &Partition,
        max_len: usize,
    ) -> Result<SufficientnessReport<S>> {
        let ratios = HillRatios::new(f, w, p)?;
        let k = f.space().len();
        let levels = enumerate_levels(f, max_len, true, self.exec, |v| {
            v.predictive.expect("leaf predictive requested").to_vec()
        })?;
        let mut seen: HashMap<(usize, S::Key), (usize, usize)> = HashMap::new();
        for (n, level) in levels.iter().enumerate() {
            for (i, pred) in level.iter().enumerate() {
                let h = decode_history(i, k, n);
                let counts = block_counts(&h, p);
                for (j, mass) in pred.iter().enumerate() {
                    let l = p.block_of(j);
                    let key = (j, ratios.ratio(l, counts[l], n).key(self.tol));
                    match seen.get(&key) {
                        None => {
                            seen.insert(key, (n, i));
                        }
                        Some(&(fn_, fi)) => {
                            let first_mass = &levels[fn_][fi][j];
                            if !first_mass.approx_eq(mass, self.tol) {
                                return Ok(SufficientnessReport::from_counterexample(Some(
                                    SufficientnessCounterexample {
                                        state: j,
                                        first: decode_history(fi, k, fn_),
                                        first_mass: first_mass.clone(),
                                        second: h,
                                        second_mass: mass.clone(),
                                    },
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(SufficientnessReport::from_counterexample(None))
    }

    /// `max |P_n(D_l) − (w̄_l + N_{n,l}) / (w̄ + n)|` over all histories of
    /// length `≤ max_len` and all blocks; zero means the block-level map is
    /// the identity `g_l(p) = p`.
    pub fn hill_block_violation<S: Scalar>(
        &self,
        f: &PredictiveFamily<S>,
        w: &[S],
        p: &Partition,
        max_len: usize,
    ) -> Result<S> {
        let ratios = HillRatios::new(f, w, p)?;
        let levels = enumerate_levels(f, max_len, true, self.exec, |v| {
            let pred = v.predictive.expect("leaf predictive requested");
            let counts = block_counts(v.history, p);
            let n = v.history.len();
            (0..p.num_blocks()).fold(S::zero(), |worst, l| {
                let mass = p
                    .block(l)
                    .iter()
                    .fold(S::zero(), |acc, &j| acc + pred[j].clone());
                S::max_of(worst, (mass - ratios.ratio(l, counts[l], n)).abs())
            })
        })?;
        Ok(levels.into_iter().flatten().fold(S::zero(), S::max_of))
    }

    /// The common block-`l` predictive mass over all histories of length `n`
    /// with `n_l` observations in block `l`.
    pub fn extract_g<S: Scalar>(
        &self,
        f: &PredictiveFamily<S>,
        p: &Partition,
        block: usize,
        n: usize,
        n_l: usize,
    ) -> Result<S> {
        check_partition(f, p)?;
        if block >= p.num_blocks() {
            return Err(Error::out_of_range(
                "block",
                block,
                format!("0..{}", p.num_blocks()),
            ));
        }
        if n_l > n || (n_l < n && p.num_blocks() == 1) {
            return Err(Error::out_of_range(
                "n_l",
                n_l,
                "a block count attainable at this n",
            ));
        }
        let members = p.block(block);
        let levels = enumerate_levels(f, n, true, self.exec, |v| {
            if v.history.len() != n || block_counts(v.history, p)[block] != n_l {
                return None;
            }
            let pred = v.predictive.expect("leaf predictive requested");
            Some((
                v.history.to_vec(),
                members
                    .iter()
                    .fold(S::zero(), |acc, &j| acc + pred[j].clone()),
            ))
        })?;
        let mut group = levels
            .into_iter()
            .nth(n)
            .unwrap_or_default()
            .into_iter()
            .flatten();
        let (first_history, first) = group
            .next()
            .ok_or_else(|| Error::out_of_range("n_l", n_l, "a block count attainable at this n"))?;
        for (h, mass) in group {
            if !mass.approx_eq(&first, self.tol) {
                return Err(Error::NotSufficient(format!(
                    "block {block} mass {first} after {first_history:?} but {mass} after {h:?}"
                )));
            }
        }
        Ok(first)
    }

    /// Whether the joint law equals `Π_i ν(t_i)` for every trajectory of
    /// length `≤ max_len`.
    pub fn check_iid_degenerate<S: Scalar>(
        &self,
        f: &PredictiveFamily<S>,
        max_len: usize,
    ) -> Result<bool> {
        let nu = f.nu().weights();
        let levels = enumerate_levels(f, max_len, false, self.exec, |v| {
            let product = v
                .history
                .iter()
                .fold(S::one(), |acc, &x| acc * nu[x].clone());
            v.joint.approx_eq(&product, self.tol)
        })?;
        Ok(levels.into_iter().flatten().all(|ok| ok))
    }
}

struct HillRatios<S> {
    total: S,
    block_weight: Vec<S>,
}

impl<S: Scalar> HillRatios<S> {
    fn new(f: &PredictiveFamily<S>, w: &[S], p: &Partition) -> Result<Self> {
        check_partition(f, p)?;
        if w.len() != p.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} states",
                w.len(),
                p.len()
            )));
        }
        if w.iter().any(|x| !(*x > S::zero())) {
            return Err(Error::InvalidParameter(
                "Hill weights must be positive".into(),
            ));
        }
        let mut block_weight = vec![S::zero(); p.num_blocks()];
        for (j, x) in w.iter().enumerate() {
            let l = p.block_of(j);
            block_weight[l] = block_weight[l].clone() + x.clone();
        }
        Ok(HillRatios {
            total: crate::measure::sum(w),
            block_weight,
        })
    }

    fn ratio(&self, l: usize, count: usize, n: usize) -> S {
        (self.block_weight[l].clone() + S::from_usize(count))
            / (self.total.clone() + S::from_usize(n))
    }
}

/// `max_{x,y} |ν(x)R_x(y) − ν(y)R_y(x)|`.
pub fn check_detailed_balance<S: Scalar>(nu: &Measure<S>, r: &Kernel<S>) -> Result<S> {
    if nu.space() != r.space() {
        return Err(Error::SpaceMismatch);
    }
    let k = r.len();
    let mut worst = S::zero();
    for x in 0..k {
        for y in x + 1..k {
            let lhs = nu.weight(x).clone() * r.row(x)[y].clone();
            let rhs = nu.weight(y).clone() * r.row(y)[x].clone();
            worst = S::max_of(worst, (lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// `c* = (a_2 − 2a_1 + a_1 a_2) / (a_1 a_2)`.
pub fn cstar<S: Scalar>(a1: &S, a2: &S) -> Result<S> {
    for (name, a) in [("a1", a1), ("a2", a2)] {
        if !(*a > S::zero() && *a < S::one()) {
            return Err(Error::out_of_range(name, a, "(0, 1)"));
        }
    }
    let prod = a1.clone() * a2.clone();
    Ok((a2.clone() - S::from_usize(2) * a1.clone() + prod.clone()) / prod)
}

/// `max_{x: ν(x)>0, z} |Σ_y R_x(y) R_y(z) − ((1 − c) R_x(z) + c ν(z))|`.
pub fn check_kernel_identity<S: Scalar>(nu: &Measure<S>, r: &Kernel<S>, c: &S) -> Result<S> {
    if nu.space() != r.space() {
        return Err(Error::SpaceMismatch);
    }
    let k = r.len();
    let keep = S::one() - c.clone();
    let mut worst = S::zero();
    for x in (0..k).filter(|&x| *nu.weight(x) > S::zero()) {
        for z in 0..k {
            let two_step = (0..k).fold(S::zero(), |acc, y| {
                acc + r.row(x)[y].clone() * r.row(y)[z].clone()
            });
            let target = keep.clone() * r.row(x)[z].clone() + c.clone() * nu.weight(z).clone();
            worst = S::max_of(worst, (two_step - target).abs());
        }
    }
    Ok(worst)
}

/// Solution of the coefficient recursion `b_{n+1} = b_n + (1 − c)` with
/// `b_n = n / a_n`: `a_n = n / ((n − 1)(1 − c) + 1/a_1)`.
pub fn coefficient_solution<S: Scalar>(a1: &S, c: &S, n: usize) -> Result<S> {
    if !(*a1 > S::zero() && *a1 < S::one()) {
        return Err(Error::out_of_range("a1", a1, "(0, 1)"));
    }
    if n == 0 {
        return Err(Error::out_of_range("n", 0, "n >= 1"));
    }
    if *c == S::one() {
        return Err(Error::Degenerate(
            "c* = 1 gives a_n = n a_1, which leaves (0, 1)".into(),
        ));
    }
    let nn = S::from_usize(n);
    let denom = S::from_usize(n - 1) * (S::one() - c.clone()) + S::one() / a1.clone();
    if !(denom > S::zero()) {
        return Err(Error::Degenerate(format!(
            "nonpositive denominator at n = {n}"
        )));
    }
    Ok(nn / denom)
}

pub fn check_exchangeable<S: Scalar>(
    f: &PredictiveFamily<S>,
    max_len: usize,
) -> Result<ExchangeabilityReport<S>> {
    Verifier::default().check_exchangeable(f, max_len)
}

pub fn characterize<S: Scalar>(
    f: &PredictiveFamily<S>,
    max_len: usize,
) -> Result<CharacterizationResult<S>> {
    Verifier::default().characterize(f, max_len)
}

pub fn check_johnson_sufficientness<S: Scalar>(
    f: &PredictiveFamily<S>,
    p: &Partition,
    max_len: usize,
) -> Result<SufficientnessReport<S>> {
    Verifier::default().check_johnson_sufficientness(f, p, max_len)
}

pub fn check_hill_sufficientness<S: Scalar>(
    f: &PredictiveFamily<S>,
    w: &[S],
    p: &Partition,
    max_len: usize,
) -> Result<SufficientnessReport<S>> {
    Verifier::default().check_hill_sufficientness(f, w, p, max_len)
}

pub fn extract_g<S: Scalar>(
    f: &PredictiveFamily<S>,
    p: &Partition,
    block: usize,
    n: usize,
    n_l: usize,
) -> Result<S> {
    Verifier::default().extract_g(f, p, block, n, n_l)
}

pub fn check_iid_degenerate<S: Scalar>(f: &PredictiveFamily<S>, max_len: usize) -> Result<bool> {
    Verifier::default().check_iid_degenerate(f, max_len)
}
