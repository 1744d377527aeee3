//! Measure-valued Pólya urn sequences (MVPS) on finite and general state spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`] and [`measure`]: exact rational (or `f64`) measures and kernels
//!   on a labelled finite state space.
//! * [`partition`]: set partitions of the state space, Bell numbers and the
//!   conditional reinforcement kernels `R_x = ν(· | D_{m(x)})`.
//! * [`process`]: predictive families (MVPS, mixture-of-kernels form, i.i.d.),
//!   chain-rule joint laws and seeded sampling.
//! * [`verify`]: exhaustive exact checks of exchangeability, detailed balance,
//!   the two-step kernel identity and the sufficientness postulates.
//! * [`general`]: urn and hierarchical Dirichlet-mixture samplers on the real
//!   line, compared against the exact block law.
//! * [`inference`]: maximum-likelihood recovery of `(θ, partition)` from a
//!   finite-state trajectory.
//!
//! Exhaustive enumerations, Monte Carlo replicates and per-partition fits run
//! on rayon when the `parallel` feature is enabled (the default); see
//! [`Execution`].

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod general;
pub mod inference;
pub mod measure;
pub mod partition;
pub mod process;
pub mod rng;
pub mod scalar;
pub mod verify;

mod enumerate;

pub use error::{Error, Result};
pub use exec::Execution;
pub use measure::{Kernel, Measure, StateSpace};
pub use partition::Partition;
pub use process::{Coefficients, MvpsSpec, PredictiveFamily, Trajectory};
pub use scalar::{Rational, Scalar};
