#![allow(dead_code)]

use mvps::partition::{conditional_kernel, Partition};
use mvps::scalar::{q, Rational};
use mvps::{Kernel, Measure, PredictiveFamily, StateSpace};

pub fn space(k: usize) -> StateSpace {
    StateSpace::indexed(k).unwrap()
}

/// ν = (1/5, 3/10, 1/2).
pub fn nu3() -> Measure<Rational> {
    Measure::probability(space(3), vec![q(1, 5), q(3, 10), q(1, 2)]).unwrap()
}

/// {{x1}, {x2, x3}}.
pub fn split3() -> Partition {
    Partition::from_blocks(3, &[vec![0], vec![1, 2]]).unwrap()
}

pub fn partition_mvps(
    theta: Rational,
    nu: &Measure<Rational>,
    p: &Partition,
) -> PredictiveFamily<Rational> {
    PredictiveFamily::mvps(theta, nu.clone(), conditional_kernel(nu, p).unwrap()).unwrap()
}

/// Rows (1/2, 1/2) and (0, 1): not a conditional kernel of the uniform ν.
pub fn skew_kernel() -> Kernel<Rational> {
    Kernel::probability(
        space(2),
        vec![vec![q(1, 2), q(1, 2)], vec![q(0, 1), q(1, 1)]],
    )
    .unwrap()
}

/// Strictly positive probability vectors on `k` states built from small integer weights.
pub fn positive_nu(weights: &[i64]) -> Measure<Rational> {
    let total: i64 = weights.iter().sum();
    Measure::probability(
        space(weights.len()),
        weights.iter().map(|&w| q(w, total)).collect(),
    )
    .unwrap()
}

/// Two equiprobable bins, `[0, 1)` uniform and `[1, 3)` piecewise linear.
pub fn two_bin(theta: Rational) -> mvps::general::GeneralMixtureModel {
    use mvps::general::*;
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

/// Three uniform bins with probabilities (1/6, 1/3, 1/2).
pub fn three_bin(theta: Rational) -> mvps::general::GeneralMixtureModel {
    use mvps::general::*;
    let bin = |lo: f64, p| Bin {
        prob: p,
        sampler: BinSampler::uniform(Interval::new(lo, lo + 1.0).unwrap()),
    };
    GeneralMixtureModel::new(
        theta,
        vec![bin(-1.0, q(1, 6)), bin(0.0, q(1, 3)), bin(2.5, q(1, 2))],
    )
    .unwrap()
}
