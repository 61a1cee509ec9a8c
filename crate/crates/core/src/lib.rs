//! Simulation library for clustered linear contextual bandits with knapsack
//! constraints.
//!
//! The crate provides the full experimental stack: a synthetic environment
//! ([`env`]), subset sampling and classifier-Lasso clustering ([`cluster`]),
//! per-cluster ridge estimation with optimistic confidence bounds
//! ([`estimate`]), a multiplicative-weights resource learner ([`omd`]), a
//! bundled linear-program solver ([`lp`]), static-policy benchmarks
//! ([`benchmark`]), the online agent ([`agent`]), and a batch experiment
//! harness with a CLI ([`harness`]).

pub mod agent;
pub mod benchmark;
pub mod cluster;
pub mod env;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod lp;
pub mod omd;
pub mod seeding;

mod linalg;

pub use error::{Error, Result};
