//! Solvers for weakly convex optimization with weakly convex functional
//! constraints.
//!
//! The outer loop ([`ipc::run_ipc`]) solves a sequence of proximally shifted,
//! strongly convex subproblems with either the deterministic switching
//! subgradient method ([`switching`]) or a stochastic method with virtual
//! queues ([`stochastic`]). [`stationarity::measure`] checks how close a point
//! is to the solution of its own proximal subproblem.
//!
//! ```
//! use ipc_core::ipc::{run_ipc, IpcConfig};
//! use ipc_core::library::simple::build_simple_example;
//!
//! let p = build_simple_example();
//! let mut cfg = IpcConfig::new(0.1, 6.0);
//! cfg.t_override = Some(5);
//! cfg.k_override = Some(5_000);
//! let out = run_ipc(&p, &[0.0, 0.5], &cfg).unwrap();
//! assert!(p.objective_value(&out.trace.x_last) < -0.4);
//! ```

// `!(a > b)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod ipc;
pub mod library;
pub mod linalg;
pub mod problem;
pub mod prox;
pub mod report;
pub mod stationarity;
pub mod stochastic;
pub mod switching;

// Book chapters run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/proximal.md")]
    mod proximal {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/outer_loop.md")]
    mod outer_loop {}
    #[doc = include_str!("../../../book/src/stationarity.md")]
    mod stationarity {}
    #[doc = include_str!("../../../book/src/library.md")]
    mod library {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}

pub use error::{Error, Result};
pub use geometry::ConvexDomain;
pub use ipc::{run_ipc, IpcConfig, IpcOutcome, RunTrace};
pub use linalg::Vector;
pub use problem::{ConstrainedProblem, FunctionOracle, StochasticOracle};
pub use prox::ProxCenter;
pub use report::OracleReport;
