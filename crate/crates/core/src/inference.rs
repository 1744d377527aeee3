//! Maximum-likelihood recovery of `(θ, partition)` from one finite-state
//! trajectory, assuming the conditional-kernel MVPS family.
//!
//! Under `R = ν(· | D_{m(·)})` the mass at `x_j` after `i` observations is
//! `(ν_j / ν(D)) (θ ν(D) + N_{i,m(j)}) / (θ + i)`, so the log-likelihood
//! splits into a θ-free within-block term and a block-level Pólya term:
//!
//! ```text
//! Σ_j c_j ln(ν_j / ν(D_{m(j)}))
//!   + Σ_l Σ_{r < N_l} ln(θ ν(D_l) + r)
//!   − Σ_{i < n} ln(θ + i)
//! ```
//!
//! It depends on the data only through the per-state counts.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::measure::Measure;
use crate::partition::{enumerate_partitions, Partition};
use crate::process::Trajectory;

pub const MAX_FIT_K: usize = 8;
pub const GRID_POINTS: usize = 64;
pub const DEFAULT_BRACKET: (f64, f64) = (1e-3, 1e3);
/// Golden-section refinement stops at this relative bracket width.
pub const REL_WIDTH: f64 = 1e-6;
/// Grid spread below which the likelihood is reported flat in θ.
pub const FLAT_TOL: f64 = 1e-9;
/// Log-likelihoods closer than this are ties in model selection.
pub const TIE_TOL: f64 = 1e-9;

struct Stats {
    n: usize,
    within: f64,
    // (θ-multiplier ν(D_l), N_l) for every block with N_l > 0
    blocks: Vec<(f64, usize)>,
}

impl Stats {
    fn new(p: &Partition, nu: &Measure<f64>, t: &Trajectory) -> Result<Self> {
        let k = nu.space().len();
        if p.len() != k || t.space() != nu.space() {
            return Err(Error::SpaceMismatch);
        }
        if !nu.is_strictly_positive() {
            return Err(Error::InvalidMeasure(
                "base measure must be strictly positive".into(),
            ));
        }
        let mut state_counts = vec![0usize; k];
        for &x in t.values() {
            state_counts[x] += 1;
        }
        let mut block_mass = vec![0.0; p.num_blocks()];
        let mut block_counts = vec![0usize; p.num_blocks()];
        for j in 0..k {
            block_mass[p.block_of(j)] += nu.weight(j);
            block_counts[p.block_of(j)] += state_counts[j];
        }
        let within = (0..k)
            .filter(|&j| state_counts[j] > 0)
            .map(|j| state_counts[j] as f64 * (nu.weight(j) / block_mass[p.block_of(j)]).ln())
            .sum();
        Ok(Stats {
            n: t.len(),
            within,
            blocks: block_mass
                .into_iter()
                .zip(block_counts)
                .filter(|&(_, c)| c > 0)
                .collect(),
        })
    }

    fn log_likelihood(&self, theta: f64) -> f64 {
        let rising: f64 = self
            .blocks
            .iter()
            .map(|&(mass, count)| {
                (0..count)
                    .map(|r| (theta * mass + r as f64).ln())
                    .sum::<f64>()
            })
            .sum();
        let norm: f64 = (0..self.n).map(|i| (theta + i as f64).ln()).sum();
        self.within + rising - norm
    }
}

/// Log-probability of `t` under MVPS(θ, ν, ν(· | D_{m(·)})).
pub fn log_likelihood(theta: f64, p: &Partition, nu: &Measure<f64>, t: &Trajectory) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "theta must be positive, got {theta}"
        )));
    }
    Ok(Stats::new(p, nu, t)?.log_likelihood(theta))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ThetaStatus {
    Interior,
    LowerEdge,
    UpperEdge,
    /// θ is not identified; the reported θ is the bracket's geometric midpoint.
    Flat,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaEstimate {
    pub theta: f64,
    pub log_likelihood: f64,
    pub status: ThetaStatus,
}

fn check_bracket((lo, hi): (f64, f64)) -> Result<()> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bad theta bracket ({lo}, {hi})"
        )));
    }
    Ok(())
}

fn profile(stats: &Stats, (lo, hi): (f64, f64)) -> ThetaEstimate {
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (GRID_POINTS - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..GRID_POINTS)
        .map(|i| {
            let s = if i == GRID_POINTS - 1 {
                b
            } else {
                a + step * i as f64
            };
            (s, stats.log_likelihood(s.exp()))
        })
        .collect();
    let (best_i, &(_, best)) = grid
        .iter()
        .enumerate()
        .max_by(|x, y| x.1 .1.total_cmp(&y.1 .1).then(y.0.cmp(&x.0)))
        .expect("nonempty grid");
    let worst = grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    if best - worst <= FLAT_TOL {
        let theta = (a + 0.5 * (b - a)).exp();
        return ThetaEstimate {
            theta,
            log_likelihood: stats.log_likelihood(theta),
            status: ThetaStatus::Flat,
        };
    }

    // golden-section search in log θ around the best grid point
    let f = |s: f64| stats.log_likelihood(s.exp());
    let mut left = grid[best_i.saturating_sub(1)].0;
    let mut right = grid[(best_i + 1).min(GRID_POINTS - 1)].0;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = right - inv_phi * (right - left);
    let mut d = left + inv_phi * (right - left);
    let (mut fc, mut fd) = (f(c), f(d));
    while right - left > REL_WIDTH {
        if fc >= fd {
            right = d;
            d = c;
            fd = fc;
            c = right - inv_phi * (right - left);
            fc = f(c);
        } else {
            left = c;
            c = d;
            fc = fd;
            d = left + inv_phi * (right - left);
            fd = f(d);
        }
    }
    // compare the refined point with the bracket ends it may have run into
    let mut candidates = vec![(0.5 * (left + right), f(0.5 * (left + right)))];
    if best_i == 0 {
        candidates.push((a, grid[0].1));
    }
    if best_i == GRID_POINTS - 1 {
        candidates.push((b, grid[GRID_POINTS - 1].1));
    }
    let (s, ll) = candidates
        .into_iter()
        .max_by(|x, y| x.1.total_cmp(&y.1))
        .expect("nonempty");
    let status = if s - a <= REL_WIDTH {
        ThetaStatus::LowerEdge
    } else if b - s <= REL_WIDTH {
        ThetaStatus::UpperEdge
    } else {
        ThetaStatus::Interior
    };
    let theta = match status {
        ThetaStatus::LowerEdge => lo,
        ThetaStatus::UpperEdge => hi,
        _ => s.exp(),
    };
    ThetaEstimate {
        theta,
        log_likelihood: if status == ThetaStatus::Interior {
            ll
        } else {
            stats.log_likelihood(theta)
        },
        status,
    }
}

/// Grid scan over log θ followed by golden-section refinement; never fails on
/// flat or edge maxima, which are reported through [`ThetaStatus`].
pub fn profile_theta(
    p: &Partition,
    nu: &Measure<f64>,
    t: &Trajectory,
    bracket: (f64, f64),
) -> Result<ThetaEstimate> {
    check_bracket(bracket)?;
    if t.is_empty() {
        return Err(Error::out_of_range("trajectory length", 0, ">= 1"));
    }
    Ok(profile(&Stats::new(p, nu, t)?, bracket))
}

/// Like [`profile_theta`], but a maximum on the bracket edge is
/// [`Error::EdgeMaximum`] and a θ-free likelihood is [`Error::Flat`].
pub fn fit_theta(
    p: &Partition,
    nu: &Measure<f64>,
    t: &Trajectory,
    bracket: (f64, f64),
) -> Result<f64> {
    let est = profile_theta(p, nu, t, bracket)?;
    match est.status {
        ThetaStatus::Interior => Ok(est.theta),
        ThetaStatus::Flat => Err(Error::Flat),
        ThetaStatus::LowerEdge => Err(Error::EdgeMaximum {
            theta: est.theta,
            upper: false,
        }),
        ThetaStatus::UpperEdge => Err(Error::EdgeMaximum {
            theta: est.theta,
            upper: true,
        }),
    }
}

/// Add-one smoothed empirical frequencies `(c_j + 1) / (n + k)`. Always
/// strictly positive, but only an approximation of the true base measure.
pub fn estimate_nu(t: &Trajectory) -> Measure<f64> {
    let k = t.space().len();
    let mut counts = vec![1.0; k];
    for &x in t.values() {
        counts[x] += 1.0;
    }
    let total = (t.len() + k) as f64;
    Measure::new(
        t.space().clone(),
        counts.into_iter().map(|c| c / total).collect(),
    )
    .expect("smoothed counts are positive")
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionFit {
    pub partition: Partition,
    pub estimate: ThetaEstimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub partition: Partition,
    pub theta_hat: f64,
    pub status: ThetaStatus,
    pub log_likelihood: f64,
    pub nu: Measure<f64>,
    pub nu_estimated: bool,
    /// Every partition of the state space, best log-likelihood first.
    pub table: Vec<PartitionFit>,
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub bracket: (f64, f64),
    pub exec: Execution,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            bracket: DEFAULT_BRACKET,
            exec: Execution::default(),
        }
    }
}

/// Profiles θ for every partition and returns the maximiser. Log-likelihoods
/// within [`TIE_TOL`] of the best are ties, broken towards fewer blocks and
/// then the lexicographically smaller block map.
pub fn fit_model(
    t: &Trajectory,
    nu: Option<&Measure<f64>>,
    options: FitOptions,
) -> Result<FitResult> {
    check_bracket(options.bracket)?;
    let k = t.space().len();
    if k > MAX_FIT_K {
        return Err(Error::out_of_range("k", k, format!("<= {MAX_FIT_K}")));
    }
    if t.is_empty() {
        return Err(Error::out_of_range("trajectory length", 0, ">= 1"));
    }
    let (nu, nu_estimated) = match nu {
        Some(nu) => (nu.clone(), false),
        None => (estimate_nu(t), true),
    };
    let partitions = enumerate_partitions(k)?;
    let fits = exec::map_range(options.exec, partitions.len(), |i| {
        Stats::new(&partitions[i], &nu, t).map(|s| PartitionFit {
            partition: partitions[i].clone(),
            estimate: profile(&s, options.bracket),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let best = fits
        .iter()
        .map(|f| f.estimate.log_likelihood)
        .fold(f64::NEG_INFINITY, f64::max);
    let winner = fits
        .iter()
        .filter(|f| f.estimate.log_likelihood >= best - TIE_TOL)
        .min_by(|a, b| {
            a.partition
                .num_blocks()
                .cmp(&b.partition.num_blocks())
                .then_with(|| a.partition.block_map().cmp(b.partition.block_map()))
        })
        .expect("at least one partition")
        .clone();
    let mut table = fits;
    table.sort_by(|a, b| {
        b.estimate
            .log_likelihood
            .total_cmp(&a.estimate.log_likelihood)
            .then_with(|| a.partition.num_blocks().cmp(&b.partition.num_blocks()))
            .then_with(|| a.partition.block_map().cmp(b.partition.block_map()))
    });
    Ok(FitResult {
        partition: winner.partition,
        theta_hat: winner.estimate.theta,
        status: winner.estimate.status,
        log_likelihood: winner.estimate.log_likelihood,
        nu,
        nu_estimated,
        table,
    })
}
