//! Loopless variance-reduced gradient estimators for nonconvex finite sums.
//!
//! The crate implements the ZeroSARAH estimator (a SARAH recursion blended
//! with a SAGA-style gradient table, so no full gradient is ever required),
//! its federated variant D-ZeroSARAH, and the SARAH / distributed SARAH / GD
//! baselines. Everything here is `no_std` + `alloc`; file formats, the
//! experiment harness and the CLI live in the `vropt` crate.
//!
//! Module map:
//!
//! - [`point`], [`data`], [`model`]: vectors, sparse datasets, objective families.
//! - [`sampling`], [`schedule`], [`table`]: minibatch draws, parameter presets,
//!   the incrementally averaged gradient table.
//! - [`optim`]: sequential ZeroSARAH, SARAH and GD.
//! - [`dist`]: the in-process federation running D-ZeroSARAH and distributed SARAH.
//! - [`bounds`]: closed-form right-hand sides of the convergence guarantees.
//! - [`oracle`]: brute-force enumeration and finite-difference oracles.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bounds;
pub mod data;
pub mod dist;
pub mod error;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod point;
pub mod sampling;
pub mod schedule;
pub mod table;

pub use data::{Dataset, DatasetKind, DatasetMeta, SparseRow, SyntheticKind, SyntheticSpec};
pub use error::{Error, Result};
pub use model::{FiniteSum, LinearProblem, Objective, Problem, QuadraticTest};
pub use point::Point;
