//! Exhaustive depth-first enumeration of all histories up to a given length.
//!
//! Every history of length `n ≤ max_len` is visited once with its chain-rule
//! joint probability and (when needed) its predictive distribution. Results
//! come back per length in lexicographic order of the history, independent of
//! how the prefix subtrees were scheduled.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::process::{PredictiveFamily, UrnState};
use crate::scalar::Scalar;

/// Largest number of histories of a single length an exhaustive check will visit.
pub const MAX_HISTORIES: u128 = 10_000_000;

/// Subtrees are split at the first depth with at least this many prefixes.
const MIN_TASKS: usize = 64;

pub(crate) fn guard(k: usize, len: usize) -> Result<()> {
    let count = (k as u128).checked_pow(len as u32);
    match count {
        Some(c) if c <= MAX_HISTORIES => Ok(()),
        _ => Err(Error::out_of_range(
            "k^L",
            format!("{k}^{len}"),
            format!("<= {MAX_HISTORIES}"),
        )),
    }
}

pub(crate) struct Visit<'a, S> {
    pub history: &'a [usize],
    pub joint: &'a S,
    pub predictive: Option<&'a [S]>,
}

struct Walk<'f, S, F> {
    family: &'f PredictiveFamily<S>,
    k: usize,
    max_len: usize,
    leaf_predictive: bool,
    visit: &'f F,
}

impl<S, T, F> Walk<'_, S, F>
where
    S: Scalar,
    F: Fn(Visit<'_, S>) -> T,
{
    fn needs_predictive(&self, depth: usize) -> bool {
        depth < self.max_len || self.leaf_predictive
    }

    fn dfs(
        &self,
        urn: &UrnState<S>,
        history: &mut Vec<usize>,
        joint: S,
        stop: usize,
        base: usize,
        out: &mut [Vec<T>],
    ) -> Result<()> {
        let depth = history.len();
        let pred = if self.needs_predictive(depth) {
            Some(urn.predictive(self.family)?)
        } else {
            None
        };
        out[depth - base].push((self.visit)(Visit {
            history,
            joint: &joint,
            predictive: pred.as_deref(),
        }));
        if depth == stop {
            return Ok(());
        }
        let pred = pred.expect("predictive is computed below max_len");
        for (x, px) in pred.iter().enumerate().take(self.k) {
            let mut child = urn.clone();
            child.observe(self.family, x);
            history.push(x);
            self.dfs(&child, history, joint.clone() * px.clone(), stop, base, out)?;
            history.pop();
        }
        Ok(())
    }

    fn replay(&self, prefix: &[usize]) -> Result<(UrnState<S>, S)> {
        let mut urn = UrnState::new(self.k);
        let mut joint = S::one();
        for &x in prefix {
            joint = joint * urn.predictive(self.family)?[x].clone();
            urn.observe(self.family, x);
        }
        Ok((urn, joint))
    }
}

fn decode(mut index: usize, k: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = index % k;
        index /= k;
    }
    out
}

/// Visits every history of length `0..=max_len`; `out[n]` lists the visits of
/// length `n` in lexicographic order. The predictive is supplied for every
/// history shorter than `max_len`, and at `max_len` too when `leaf_predictive`.
pub(crate) fn enumerate_levels<S, T, F>(
    family: &PredictiveFamily<S>,
    max_len: usize,
    leaf_predictive: bool,
    exec: Execution,
    visit: F,
) -> Result<Vec<Vec<T>>>
where
    S: Scalar,
    T: Send,
    F: Fn(Visit<'_, S>) -> T + Sync + Send,
{
    let k = family.space().len();
    guard(k, max_len)?;
    let walk = Walk {
        family,
        k,
        max_len,
        leaf_predictive,
        visit: &visit,
    };
    let mut split = 0;
    if exec.is_parallel() {
        while split < max_len && k.pow(split as u32) < MIN_TASKS {
            split += 1;
        }
    }

    let mut levels: Vec<Vec<T>> = (0..=max_len).map(|_| Vec::new()).collect();
    if split > 0 {
        let mut head: Vec<Vec<T>> = (0..split).map(|_| Vec::new()).collect();
        walk.dfs(
            &UrnState::new(k),
            &mut Vec::new(),
            S::one(),
            split - 1,
            0,
            &mut head,
        )?;
        for (n, level) in head.into_iter().enumerate() {
            levels[n] = level;
        }
    }

    let tasks = k.pow(split as u32);
    let subtrees = exec::map_range(exec, tasks, |t| -> Result<Vec<Vec<T>>> {
        let mut prefix = decode(t, k, split);
        let (urn, joint) = walk.replay(&prefix)?;
        let mut out: Vec<Vec<T>> = (split..=max_len).map(|_| Vec::new()).collect();
        walk.dfs(&urn, &mut prefix, joint, max_len, split, &mut out)?;
        Ok(out)
    });
    for subtree in subtrees {
        for (offset, part) in subtree?.into_iter().enumerate() {
            levels[split + offset].extend(part);
        }
    }
    Ok(levels)
}

/// Lexicographic index of a history in its level.
pub(crate) fn encode(history: &[usize], k: usize) -> usize {
    history.iter().fold(0, |acc, &x| acc * k + x)
}

pub(crate) fn decode_history(index: usize, k: usize, len: usize) -> Vec<usize> {
    decode(index, k, len)
}
