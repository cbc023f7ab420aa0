use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the solvers, problem builders and loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("proximal modulus rho_hat = {rho_hat} must exceed the weak-convexity modulus rho = {rho}")]
    Modulus { rho_hat: f64, rho: f64 },

    #[error("problem has no constraints; g is -inf and every point is feasible")]
    Unconstrained,

    #[error("starting point violates g(x0) = {g} > {tolerance}; run feasibility restoration first")]
    InfeasibleStart { g: f64, tolerance: f64 },

    #[error("candidate point is infeasible for the measurement subproblem: g(x) = {g} > {tolerance}")]
    InfeasibleCandidate { g: f64, tolerance: f64 },

    #[error("switching oracle stalled: no iterate satisfied the constraint tolerance in {iterations} steps")]
    SwitchingStalled { iterations: usize },

    #[error("theoretical iteration count exceeds 2^{cap_log2}; constants too large")]
    TheoreticalKOverflow { cap_log2: u32 },

    #[error("inconsistent bounds: f(x0) = {f_x0} lies below the lower bound f_lb = {f_lb}")]
    InconsistentBounds { f_x0: f64, f_lb: f64 },

    #[error("oracle {index} has no stochastic sampler")]
    MissingStochasticOracle { index: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
