//! Limit laws of empirical optimal solutions for standard-form linear
//! programs with random right-hand sides, with an optimal transport
//! instantiation.
//!
//! Indices are 0-based throughout.

#![allow(clippy::needless_range_loop)]

pub mod cones;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod lp;
pub mod ot;
pub mod tol;

pub use cones::{
    build_cones, cone_contains, limit_functional, optimal_value_limit, sample_limit, support_partition, ConeH,
    LimitLawSpec, LimitSamples, SupportPartition, TieBreak, Verdict,
};
pub use error::{Error, Result};
pub use lp::{
    check_assumptions, enumerate_ledger, make_lp, optimality_set, solve_min_index, AssumptionReport, BasicSolutionPair,
    Basis, BasisLedger, OptimalitySet, StandardLp,
};
pub use tol::Tolerances;
