//! Real-valued mixture model: a partition of the line into intervals
//! `D_1..D_m`, base mass `ν(D_l)` per interval and a within-interval law `P_l`.
//!
//! Two samplers produce the same law:
//!
//! * the urn: with probability `θ/(θ+i)` draw afresh from `ν`, otherwise
//!   re-draw from the interval of a uniformly chosen past observation;
//! * the hierarchy: draw interval weights `~ Dirichlet(θ ν(D_1), …, θ ν(D_m))`
//!   once, then sample i.i.d. from the weighted mixture of the `P_l`.
//!
//! Only interval masses of the directing random measure enter the mixture, so
//! the finite Dirichlet draw is exact; no stick-breaking truncation is needed.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::process::inverse_cdf;
use crate::rng::{self, StreamRng};
use crate::scalar::{Rational, Scalar};

pub const MAX_PREFIX_LEN: usize = 4;
pub const MAX_PREFIX_OUTCOMES: usize = 10_000;

/// Half-open interval `[lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "bad interval [{lo}, {hi})"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }
}

/// Inverse-CDF sampler for a piecewise-linear distribution function on one
/// interval. Knots are `(x, F(x))` with `x` strictly increasing from `lo` to
/// `hi` and `F` nondecreasing from 0 to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct BinSampler {
    interval: Interval,
    knots: Vec<(f64, f64)>,
}

impl BinSampler {
    pub fn uniform(interval: Interval) -> Self {
        BinSampler {
            interval,
            knots: vec![(interval.lo, 0.0), (interval.hi, 1.0)],
        }
    }

    pub fn piecewise_linear(interval: Interval, knots: Vec<(f64, f64)>) -> Result<Self> {
        let bad = |msg: &str| {
            Err(Error::InvalidParameter(format!(
                "piecewise-linear CDF: {msg}"
            )))
        };
        if knots.len() < 2 {
            return bad("need at least two knots");
        }
        let (first, last) = (knots[0], knots[knots.len() - 1]);
        if first.0 != interval.lo || last.0 != interval.hi {
            return bad("knots must start at lo and end at hi");
        }
        if first.1 != 0.0 || last.1 != 1.0 {
            return bad("CDF must run from 0 to 1");
        }
        if knots
            .windows(2)
            .any(|w| !(w[0].0 < w[1].0) || w[0].1 > w[1].1)
        {
            return bad("x must increase strictly and F must not decrease");
        }
        Ok(BinSampler { interval, knots })
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Maps one uniform `u ∈ [0, 1)` to a point of `[lo, hi)`.
    pub fn sample(&self, u: f64) -> f64 {
        let seg = self
            .knots
            .windows(2)
            .find(|w| u < w[1].1 && w[1].1 > w[0].1)
            .unwrap_or(&self.knots[self.knots.len() - 2..]);
        let ((x0, c0), (x1, c1)) = (seg[0], seg[1]);
        let t = if c1 > c0 {
            ((u - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let x = x0 + t * (x1 - x0);
        x.clamp(self.interval.lo, self.interval.hi.next_down())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    pub prob: Rational,
    pub sampler: BinSampler,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneralMixtureModel {
    theta: Rational,
    bins: Vec<Bin>,
    probs_f64: Vec<f64>,
}

impl GeneralMixtureModel {
    /// Bins must be ordered, pairwise disjoint, with strictly positive
    /// probabilities summing to exactly one.
    pub fn new(theta: Rational, bins: Vec<Bin>) -> Result<Self> {
        if !(theta > Rational::from_usize(0)) {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if bins.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one bin is required".into(),
            ));
        }
        if bins.iter().any(|b| !(b.prob > Rational::from_usize(0))) {
            return Err(Error::InvalidMeasure(
                "every bin needs positive probability".into(),
            ));
        }
        let total = bins
            .iter()
            .fold(Rational::from_usize(0), |acc, b| acc + b.prob.clone());
        if total != Rational::from_usize(1) {
            return Err(Error::InvalidMeasure(format!(
                "bin probabilities sum to {total}, expected 1"
            )));
        }
        if bins
            .windows(2)
            .any(|w| w[0].sampler.interval.hi > w[1].sampler.interval.lo)
        {
            return Err(Error::InvalidParameter(
                "bins must be ordered and disjoint".into(),
            ));
        }
        let probs_f64 = bins.iter().map(|b| b.prob.to_f64()).collect();
        Ok(GeneralMixtureModel {
            theta,
            bins,
            probs_f64,
        })
    }

    /// Keeps the `keep` most probable bins, renormalises, and returns the
    /// dropped probability mass alongside the model. Used to approximate
    /// models with countably many categories.
    pub fn truncated(theta: Rational, bins: Vec<Bin>, keep: usize) -> Result<(Self, Rational)> {
        if keep == 0 {
            return Err(Error::out_of_range("keep", 0, ">= 1"));
        }
        let mut order: Vec<usize> = (0..bins.len()).collect();
        order.sort_by(|&a, &b| bins[b].prob.cmp(&bins[a].prob).then(a.cmp(&b)));
        let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
        kept.sort_unstable();
        let total = bins
            .iter()
            .fold(Rational::from_usize(0), |acc, b| acc + b.prob.clone());
        let kept_mass = kept.iter().fold(Rational::from_usize(0), |acc, &i| {
            acc + bins[i].prob.clone()
        });
        let tail = total - kept_mass.clone();
        let bins = kept
            .into_iter()
            .map(|i| Bin {
                prob: bins[i].prob.clone() / kept_mass.clone(),
                sampler: bins[i].sampler.clone(),
            })
            .collect();
        Ok((Self::new(theta, bins)?, tail))
    }

    pub fn theta(&self) -> &Rational {
        &self.theta
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn bin_probs(&self) -> &[f64] {
        &self.probs_f64
    }

    /// Index of the bin containing `x`.
    pub fn block_of(&self, x: f64) -> Option<usize> {
        let i = self.bins.partition_point(|b| b.sampler.interval.hi <= x);
        (i < self.bins.len() && self.bins[i].sampler.interval.contains(x)).then_some(i)
    }

    fn draw_in(&self, bin: usize, rng: &mut StreamRng) -> f64 {
        let x = self.bins[bin].sampler.sample(rng.random::<f64>());
        assert!(
            self.bins[bin].sampler.interval.contains(x),
            "draw {x} escaped bin {bin}"
        );
        x
    }
}

/// Sampled values with their bin indices `Y_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealTrajectory {
    pub values: Vec<f64>,
    pub blocks: Vec<usize>,
}

impl RealTrajectory {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn urn_path(model: &GeneralMixtureModel, n: usize, rng: &mut StreamRng) -> RealTrajectory {
    let theta = model.theta.to_f64();
    let mut values = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(n);
    for i in 0..n {
        let fresh = rng.random::<f64>() < theta / (theta + i as f64);
        let bin = if fresh {
            inverse_cdf(&model.probs_f64, rng.random::<f64>())
        } else {
            blocks[rng.random_range(0..i)]
        };
        values.push(model.draw_in(bin, rng));
        blocks.push(bin);
    }
    RealTrajectory { values, blocks }
}

fn dirichlet_weights(model: &GeneralMixtureModel, rng: &mut StreamRng) -> Vec<f64> {
    let m = model.num_bins();
    if m == 1 {
        return vec![1.0];
    }
    let theta = model.theta.to_f64();
    let mut w: Vec<f64> = model
        .probs_f64
        .iter()
        .map(|p| {
            Gamma::new(theta * p, 1.0)
                .expect("positive gamma shape")
                .sample(rng)
        })
        .collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        // every gamma draw underflowed: all mass on one bin chosen by ν
        let bin = inverse_cdf(&model.probs_f64, rng.random::<f64>());
        w = (0..m).map(|l| if l == bin { 1.0 } else { 0.0 }).collect();
    }
    w
}

fn hierarchical_path(model: &GeneralMixtureModel, n: usize, rng: &mut StreamRng) -> RealTrajectory {
    let weights = dirichlet_weights(model, rng);
    let mut values = Vec::with_capacity(n);
    let mut blocks = Vec::with_capacity(n);
    for _ in 0..n {
        let bin = inverse_cdf(&weights, rng.random::<f64>());
        values.push(model.draw_in(bin, rng));
        blocks.push(bin);
    }
    RealTrajectory { values, blocks }
}

pub fn sample_urn(model: &GeneralMixtureModel, n: usize, seed: u64) -> RealTrajectory {
    urn_path(model, n, &mut rng::stream(seed))
}

pub fn sample_hierarchical(model: &GeneralMixtureModel, n: usize, seed: u64) -> RealTrajectory {
    hierarchical_path(model, n, &mut rng::stream(seed))
}

/// One draw of the interval weights `(P̃(D_1), …, P̃(D_m))`.
pub fn sample_block_weights(model: &GeneralMixtureModel, seed: u64) -> Vec<f64> {
    dirichlet_weights(model, &mut rng::stream(seed))
}

/// Probability of a bin sequence under the classical `m`-colour Pólya urn
/// with initial weights `θ ν(D_l)`.
pub fn exact_block_law(model: &GeneralMixtureModel, blocks: &[usize]) -> Result<Rational> {
    let m = model.num_bins();
    let mut counts = vec![0usize; m];
    let mut p = Rational::from_usize(1);
    for (i, &b) in blocks.iter().enumerate() {
        if b >= m {
            return Err(Error::out_of_range("bin index", b, format!("0..{m}")));
        }
        let num =
            model.theta.clone() * model.bins[b].prob.clone() + Rational::from_usize(counts[b]);
        p = p * num / (model.theta.clone() + Rational::from_usize(i));
        counts[b] += 1;
    }
    Ok(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawComparison {
    pub prefix_len: usize,
    pub reps: usize,
    /// All `m^d` bin sequences in lexicographic order.
    pub sequences: Vec<Vec<usize>>,
    pub exact: Vec<Rational>,
    pub urn: Vec<f64>,
    pub hierarchical: Vec<f64>,
    pub tv_urn: f64,
    pub tv_hierarchical: f64,
    /// `sqrt(m^d / reps)`.
    pub mc_bound: f64,
}

/// Estimates the law of the first `prefix_len` bin indices from `reps` runs
/// of each sampler (replicate `r` seeded with `seed + r`) and compares both
/// with [`exact_block_law`].
pub fn compare_laws(
    model: &GeneralMixtureModel,
    prefix_len: usize,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<LawComparison> {
    if prefix_len > MAX_PREFIX_LEN {
        return Err(Error::out_of_range(
            "prefix length",
            prefix_len,
            format!("<= {MAX_PREFIX_LEN}"),
        ));
    }
    if reps == 0 {
        return Err(Error::out_of_range("reps", 0, ">= 1"));
    }
    let m = model.num_bins();
    let outcomes = (m as u128)
        .checked_pow(prefix_len as u32)
        .filter(|&c| c <= MAX_PREFIX_OUTCOMES as u128)
        .ok_or_else(|| {
            Error::out_of_range(
                "m^d",
                format!("{m}^{prefix_len}"),
                format!("<= {MAX_PREFIX_OUTCOMES}"),
            )
        })? as usize;
    let index = |blocks: &[usize]| blocks.iter().fold(0usize, |acc, &b| acc * m + b);

    let partials = exec::map_chunks(exec, reps, 1024, |range| {
        let mut urn = vec![0u64; outcomes];
        let mut hier = vec![0u64; outcomes];
        for r in range {
            let mut rng = rng::stream(rng::replicate_seed(seed, r as u64));
            urn[index(&urn_path(model, prefix_len, &mut rng).blocks)] += 1;
            let mut rng = rng::stream(rng::replicate_seed(seed, r as u64));
            hier[index(&hierarchical_path(model, prefix_len, &mut rng).blocks)] += 1;
        }
        (urn, hier)
    });
    let mut urn_counts = vec![0u64; outcomes];
    let mut hier_counts = vec![0u64; outcomes];
    for (u, h) in partials {
        urn_counts.iter_mut().zip(u).for_each(|(a, b)| *a += b);
        hier_counts.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }

    let sequences: Vec<Vec<usize>> = (0..outcomes)
        .map(|i| crate::enumerate::decode_history(i, m, prefix_len))
        .collect();
    let exact = sequences
        .iter()
        .map(|s| exact_block_law(model, s))
        .collect::<Result<Vec<_>>>()?;
    let freq = |c: &[u64]| {
        c.iter()
            .map(|&x| x as f64 / reps as f64)
            .collect::<Vec<_>>()
    };
    let urn = freq(&urn_counts);
    let hierarchical = freq(&hier_counts);
    let exact_f: Vec<f64> = exact.iter().map(Scalar::to_f64).collect();
    let tv = |emp: &[f64]| {
        0.5 * emp
            .iter()
            .zip(&exact_f)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    };
    Ok(LawComparison {
        prefix_len,
        reps,
        tv_urn: tv(&urn),
        tv_hierarchical: tv(&hierarchical),
        mc_bound: (outcomes as f64 / reps as f64).sqrt(),
        sequences,
        exact,
        urn,
        hierarchical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    pub(crate) fn two_bin(theta: Rational) -> GeneralMixtureModel {
        GeneralMixtureModel::new(
            theta,
            vec![
                Bin {
                    prob: q(1, 2),
                    sampler: BinSampler::uniform(Interval::new(0.0, 1.0).unwrap()),
                },
                Bin {
                    prob: q(1, 2),
                    sampler: BinSampler::piecewise_linear(
                        Interval::new(1.0, 3.0).unwrap(),
                        vec![(1.0, 0.0), (2.0, 0.9), (3.0, 1.0)],
                    )
                    .unwrap(),
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn model_validation() {
        let i = Interval::new(0.0, 1.0).unwrap();
        let bin = |p| Bin {
            prob: p,
            sampler: BinSampler::uniform(i),
        };
        assert!(GeneralMixtureModel::new(q(1, 1), vec![bin(q(1, 2))]).is_err());
        assert!(GeneralMixtureModel::new(q(0, 1), vec![bin(q(1, 1))]).is_err());
        assert!(GeneralMixtureModel::new(q(1, 1), vec![bin(q(1, 2)), bin(q(1, 2))]).is_err());
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(BinSampler::piecewise_linear(i, vec![(0.0, 0.0), (0.5, 0.6), (1.0, 0.5)]).is_err());
        assert!(BinSampler::piecewise_linear(i, vec![(0.0, 0.0), (0.9, 1.0)]).is_err());
    }

    #[test]
    fn piecewise_sampler_inverts_the_cdf() {
        let s = BinSampler::piecewise_linear(
            Interval::new(1.0, 3.0).unwrap(),
            vec![(1.0, 0.0), (2.0, 0.9), (3.0, 1.0)],
        )
        .unwrap();
        assert_eq!(s.sample(0.0), 1.0);
        assert!((s.sample(0.45) - 1.5).abs() < 1e-12);
        assert!((s.sample(0.95) - 2.5).abs() < 1e-12);
        assert!(s.sample(1.0 - 1e-17) < 3.0);
    }

    #[test]
    fn exact_block_law_examples() {
        let m = two_bin(q(1, 1));
        assert_eq!(exact_block_law(&m, &[0, 0]).unwrap(), q(3, 8));
        assert_eq!(exact_block_law(&m, &[0, 1]).unwrap(), q(1, 8));
        assert_eq!(exact_block_law(&m, &[1, 0]).unwrap(), q(1, 8));
        assert_eq!(exact_block_law(&m, &[]).unwrap(), q(1, 1));
        assert!(exact_block_law(&m, &[2]).is_err());
    }

    #[test]
    fn samplers_respect_bins_and_seeds() {
        let m = two_bin(q(1, 1));
        assert!(sample_urn(&m, 0, 1).is_empty());
        assert!(sample_hierarchical(&m, 0, 1).is_empty());
        for t in [sample_urn(&m, 500, 3), sample_hierarchical(&m, 500, 3)] {
            for (x, b) in t.values.iter().zip(&t.blocks) {
                assert_eq!(m.block_of(*x), Some(*b));
            }
        }
        assert_eq!(sample_urn(&m, 100, 11), sample_urn(&m, 100, 11));
        assert_eq!(
            sample_hierarchical(&m, 100, 11),
            sample_hierarchical(&m, 100, 11)
        );
    }

    #[test]
    fn block_of_handles_gaps_and_edges() {
        let m = GeneralMixtureModel::new(
            q(1, 1),
            vec![
                Bin {
                    prob: q(1, 3),
                    sampler: BinSampler::uniform(Interval::new(0.0, 1.0).unwrap()),
                },
                Bin {
                    prob: q(2, 3),
                    sampler: BinSampler::uniform(Interval::new(2.0, 3.0).unwrap()),
                },
            ],
        )
        .unwrap();
        assert_eq!(m.block_of(0.0), Some(0));
        assert_eq!(m.block_of(1.0), None);
        assert_eq!(m.block_of(1.5), None);
        assert_eq!(m.block_of(2.0), Some(1));
        assert_eq!(m.block_of(3.0), None);
        assert_eq!(m.block_of(-0.1), None);
    }

    #[test]
    fn one_bin_model_is_degenerate() {
        let m = GeneralMixtureModel::new(
            q(3, 1),
            vec![Bin {
                prob: q(1, 1),
                sampler: BinSampler::uniform(Interval::new(-1.0, 1.0).unwrap()),
            }],
        )
        .unwrap();
        assert!(sample_hierarchical(&m, 50, 5)
            .blocks
            .iter()
            .all(|&b| b == 0));
        let c = compare_laws(&m, 3, 100, 1, Execution::Sequential).unwrap();
        assert_eq!(c.tv_urn, 0.0);
        assert_eq!(c.tv_hierarchical, 0.0);
    }

    #[test]
    fn truncation_reports_tail_mass() {
        let i = |a: f64| Interval::new(a, a + 1.0).unwrap();
        let bins = vec![
            Bin {
                prob: q(1, 2),
                sampler: BinSampler::uniform(i(0.0)),
            },
            Bin {
                prob: q(1, 8),
                sampler: BinSampler::uniform(i(1.0)),
            },
            Bin {
                prob: q(1, 4),
                sampler: BinSampler::uniform(i(2.0)),
            },
            Bin {
                prob: q(1, 8),
                sampler: BinSampler::uniform(i(3.0)),
            },
        ];
        let (m, tail) = GeneralMixtureModel::truncated(q(1, 1), bins, 2).unwrap();
        assert_eq!(tail, q(1, 4));
        assert_eq!(m.num_bins(), 2);
        assert_eq!(m.bins()[0].prob, q(2, 3));
        assert_eq!(m.bins()[1].prob, q(1, 3));
    }

    #[test]
    fn compare_laws_guards() {
        let m = two_bin(q(1, 1));
        assert!(compare_laws(&m, 5, 10, 0, Execution::Sequential).is_err());
        assert!(compare_laws(&m, 2, 0, 0, Execution::Sequential).is_err());
        let a = compare_laws(&m, 3, 2000, 4, Execution::Sequential).unwrap();
        let b = compare_laws(&m, 3, 2000, 4, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
