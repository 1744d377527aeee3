//! Set partitions `{D_1, …, D_m}` of a finite state space and the conditional
//! reinforcement kernels they induce.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::measure::{condition, Kernel, Measure};
use crate::scalar::Scalar;

pub const MAX_BELL_K: usize = 20;
pub const MAX_ENUMERATE_K: usize = 12;

/// A partition of `{0, …, k−1}` stored as its block map `j ↦ m(j)`.
///
/// Always canonical: blocks are numbered by first appearance, so two equal
/// partitions have identical `block_of` arrays.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    block_of: Vec<usize>,
    blocks: usize,
}

impl Partition {
    /// Builds a partition from any block labelling, renumbering it canonically.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPartition("empty state space".into()));
        }
        let mut seen: Vec<(usize, usize)> = Vec::new();
        let block_of = labels
            .iter()
            .map(|l| match seen.iter().find(|(raw, _)| raw == l) {
                Some(&(_, b)) => b,
                None => {
                    seen.push((*l, seen.len()));
                    seen.len() - 1
                }
            })
            .collect();
        Ok(Partition {
            block_of,
            blocks: seen.len(),
        })
    }

    /// Builds a partition from explicit blocks of state indices; the blocks
    /// must be nonempty, disjoint and cover `0..k`.
    pub fn from_blocks(k: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![usize::MAX; k];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::InvalidPartition(format!("block {b} is empty")));
            }
            for &j in block {
                if j >= k {
                    return Err(Error::InvalidPartition(format!(
                        "state {j} out of range 0..{k}"
                    )));
                }
                if labels[j] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("state {j} appears twice")));
                }
                labels[j] = b;
            }
        }
        if let Some(j) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::InvalidPartition(format!("state {j} is not covered")));
        }
        Self::from_labels(&labels)
    }

    /// One block holding every state.
    pub fn trivial(k: usize) -> Self {
        Partition {
            block_of: vec![0; k],
            blocks: 1,
        }
    }

    /// Every state in its own block.
    pub fn discrete(k: usize) -> Self {
        Partition {
            block_of: (0..k).collect(),
            blocks: k,
        }
    }

    pub fn len(&self) -> usize {
        self.block_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_of.is_empty()
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_of(&self, j: usize) -> usize {
        self.block_of[j]
    }

    pub fn block_map(&self) -> &[usize] {
        &self.block_of
    }

    pub fn block(&self, l: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.block_of[j] == l).collect()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.blocks];
        for (j, &b) in self.block_of.iter().enumerate() {
            out[b].push(j);
        }
        out
    }

    /// Whether every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.len() == coarser.len()
            && (0..self.len()).all(|i| {
                (0..self.len()).all(|j| {
                    self.block_of[i] != self.block_of[j]
                        || coarser.block_of[i] == coarser.block_of[j]
                })
            })
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let blocks: Vec<String> = self
            .blocks()
            .iter()
            .map(|b| {
                b.iter()
                    .map(|j| j.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect();
        write!(f, "{{{{{}}}}}", blocks.join("},{"))
    }
}

fn binomial(n: u64, r: u64) -> BigInt {
    (0..r).fold(BigInt::one(), |acc, i| {
        acc * BigInt::from(n - i) / BigInt::from(i + 1)
    })
}

/// `B_k = Σ_{j=0}^{k} (1/j!) Σ_{i=0}^{j} (−1)^{j−i} C(j,i) i^k`, i.e. the sum of
/// Stirling numbers of the second kind `S(k, j)`, evaluated in big integers.
pub fn bell_number(k: usize) -> Result<u64> {
    if !(1..=MAX_BELL_K).contains(&k) {
        return Err(Error::out_of_range("k", k, format!("[1, {MAX_BELL_K}]")));
    }
    let mut total = BigInt::zero();
    let mut factorial = BigInt::one();
    for j in 0..=k as u64 {
        if j > 0 {
            factorial *= BigInt::from(j);
        }
        let mut stirling = BigInt::zero();
        for i in 0..=j {
            let term = binomial(j, i) * num_traits::pow(BigInt::from(i), k);
            if (j - i) % 2 == 0 {
                stirling += term;
            } else {
                stirling -= term;
            }
        }
        debug_assert!((&stirling % &factorial).is_zero());
        total += stirling / &factorial;
    }
    total
        .to_u64()
        .ok_or_else(|| Error::out_of_range("B_k", k, "u64"))
}

/// Lazy lexicographic enumeration of restricted-growth strings, i.e. of
/// canonical partitions of `{0, …, k−1}`.
#[derive(Debug, Clone)]
pub struct Partitions {
    current: Option<Vec<usize>>,
    // prefix_max[i] = max(current[0..=i])
    prefix_max: Vec<usize>,
}

impl Partitions {
    pub fn new(k: usize) -> Self {
        Partitions {
            current: (k > 0).then(|| vec![0; k]),
            prefix_max: vec![0; k],
        }
    }
}

impl Iterator for Partitions {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        let cur = self.current.as_mut()?;
        let out = Partition {
            blocks: self.prefix_max.last().map_or(0, |m| m + 1),
            block_of: cur.clone(),
        };
        // advance: rightmost position that can still grow
        let k = cur.len();
        let mut i = k;
        let mut advanced = false;
        while i > 1 {
            i -= 1;
            if cur[i] <= self.prefix_max[i - 1] {
                cur[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(cur[i]);
                let top = self.prefix_max[i];
                cur[i + 1..].fill(0);
                self.prefix_max[i + 1..k].fill(top);
                advanced = true;
                break;
            }
        }
        if !advanced {
            self.current = None;
        }
        Some(out)
    }
}

/// All canonical partitions of `k` states in lexicographic order of their
/// block maps.
pub fn enumerate_partitions(k: usize) -> Result<Vec<Partition>> {
    if !(1..=MAX_ENUMERATE_K).contains(&k) {
        return Err(Error::out_of_range(
            "k",
            k,
            format!("[1, {MAX_ENUMERATE_K}]"),
        ));
    }
    Ok(Partitions::new(k).collect())
}

/// `R_x = Σ_l ν(· | D_l) 1_{D_l}(x)`.
pub fn conditional_kernel<S: Scalar>(nu: &Measure<S>, p: &Partition) -> Result<Kernel<S>> {
    let k = nu.space().len();
    if p.len() != k {
        return Err(Error::SpaceMismatch);
    }
    let block_rows = p
        .blocks()
        .iter()
        .enumerate()
        .map(|(l, block)| {
            condition(nu, block)
                .map(Measure::into_weights)
                .map_err(|e| match e {
                    Error::ZeroMassBlock { .. } => Error::ZeroMassBlock { block: l },
                    e => e,
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..k).map(|j| block_rows[p.block_of(j)].clone()).collect();
    Kernel::new(nu.space().clone(), rows)
}

/// Inverse of [`conditional_kernel`]: groups states with identical rows and
/// checks that the grouping reproduces `r`. Returns `None` when `r` is not a
/// conditional kernel of `ν`.
pub fn recover_partition<S: Scalar>(
    nu: &Measure<S>,
    r: &Kernel<S>,
    tol: f64,
) -> Result<Option<Partition>> {
    if nu.space() != r.space() {
        return Err(Error::SpaceMismatch);
    }
    if !nu.is_strictly_positive() {
        return Err(Error::InvalidMeasure(
            "base measure must be strictly positive".into(),
        ));
    }
    let k = r.len();
    let mut labels = vec![usize::MAX; k];
    let mut next = 0;
    for i in 0..k {
        if labels[i] != usize::MAX {
            continue;
        }
        labels[i] = next;
        for (j, label) in labels.iter_mut().enumerate().skip(i + 1) {
            if *label == usize::MAX
                && r.row(i)
                    .iter()
                    .zip(r.row(j))
                    .all(|(a, b)| a.approx_eq(b, tol))
            {
                *label = next;
            }
        }
        next += 1;
    }
    let candidate = Partition::from_labels(&labels)?;
    let rebuilt = conditional_kernel(nu, &candidate)?;
    Ok(rebuilt.approx_eq(r, tol).then_some(candidate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::StateSpace;
    use crate::scalar::{q, Rational};

    fn nu3() -> Measure<Rational> {
        Measure::probability(
            StateSpace::indexed(3).unwrap(),
            vec![q(1, 5), q(3, 10), q(1, 2)],
        )
        .unwrap()
    }

    #[test]
    fn bell_numbers_from_double_sum() {
        let expected = [1u64, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (i, &b) in expected.iter().enumerate() {
            assert_eq!(bell_number(i + 1).unwrap(), b);
        }
        assert_eq!(bell_number(20).unwrap(), 51_724_158_235_372);
        assert!(bell_number(0).is_err());
        assert!(bell_number(21).is_err());
    }

    #[test]
    fn enumeration_is_lexicographic_and_canonical() {
        let two = enumerate_partitions(2).unwrap();
        assert_eq!(
            two.iter()
                .map(|p| p.block_map().to_vec())
                .collect::<Vec<_>>(),
            vec![vec![0, 0], vec![0, 1]]
        );
        assert_eq!(
            enumerate_partitions(1).unwrap(),
            vec![Partition::trivial(1)]
        );
        let three: Vec<Vec<usize>> = enumerate_partitions(3)
            .unwrap()
            .iter()
            .map(|p| p.block_map().to_vec())
            .collect();
        assert_eq!(
            three,
            vec![
                vec![0, 0, 0],
                vec![0, 0, 1],
                vec![0, 1, 0],
                vec![0, 1, 1],
                vec![0, 1, 2]
            ]
        );
        for k in 1..=8 {
            let all = enumerate_partitions(k).unwrap();
            assert_eq!(all.len() as u64, bell_number(k).unwrap());
            assert!(all.windows(2).all(|w| w[0].block_map() < w[1].block_map()));
            for p in &all {
                assert_eq!(&Partition::from_labels(p.block_map()).unwrap(), p);
            }
        }
        assert!(enumerate_partitions(0).is_err());
        assert!(enumerate_partitions(13).is_err());
    }

    #[test]
    fn from_blocks_validates_and_canonicalises() {
        let p = Partition::from_blocks(3, &[vec![1, 2], vec![0]]).unwrap();
        assert_eq!(p.block_map(), &[0, 1, 1]);
        assert!(Partition::from_blocks(3, &[vec![1, 2]]).is_err());
        assert!(Partition::from_blocks(3, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(Partition::from_blocks(3, &[vec![0, 1, 2], vec![]]).is_err());
        assert_eq!(p.to_string(), "{{0},{1,2}}");
        assert!(Partition::discrete(3).refines(&p));
        assert!(!Partition::trivial(3).refines(&p));
    }

    #[test]
    fn conditional_kernel_examples() {
        let nu = nu3();
        let p = Partition::from_blocks(3, &[vec![0], vec![1, 2]]).unwrap();
        let r = conditional_kernel(&nu, &p).unwrap();
        assert_eq!(r.row(0), &[q(1, 1), q(0, 1), q(0, 1)]);
        assert_eq!(r.row(1), &[q(0, 1), q(3, 8), q(5, 8)]);
        assert_eq!(r.row(2), r.row(1));
        assert_eq!(
            conditional_kernel(&nu, &Partition::discrete(3)).unwrap(),
            Kernel::identity(nu.space().clone())
        );
        assert_eq!(
            conditional_kernel(&nu, &Partition::trivial(3)).unwrap(),
            Kernel::constant(&nu)
        );
        let degenerate = Measure::new(nu.space().clone(), vec![q(1, 1), q(0, 1), q(0, 1)]).unwrap();
        assert_eq!(
            conditional_kernel(&degenerate, &p),
            Err(Error::ZeroMassBlock { block: 1 })
        );
    }

    #[test]
    fn recover_partition_examples() {
        let nu = nu3();
        for p in enumerate_partitions(3).unwrap() {
            let r = conditional_kernel(&nu, &p).unwrap();
            assert_eq!(recover_partition(&nu, &r, 0.0).unwrap(), Some(p));
        }
        let s2 = StateSpace::indexed(2).unwrap();
        let half = Measure::uniform(s2.clone());
        let bad =
            Kernel::probability(s2, vec![vec![q(1, 2), q(1, 2)], vec![q(0, 1), q(1, 1)]]).unwrap();
        assert_eq!(recover_partition(&half, &bad, 0.0).unwrap(), None);
    }
}
