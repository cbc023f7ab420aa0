//! Oracle outputs and work accounting shared by both subproblem solvers.

use crate::linalg::Vector;

/// Work done by a solver, in oracle calls.
///
/// A value and subgradient taken at the same point in the same call count
/// once. Evaluations made only to report results are not counted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Usage {
    /// Full evaluations of the objective.
    pub objective_evals: u64,
    /// Full evaluations of `g` (all constraints at one point).
    pub constraint_evals: u64,
    /// Stochastic draws per oracle, index 0 the objective.
    pub samples: Vec<u64>,
}

impl Usage {
    pub fn add(&mut self, other: &Usage) {
        self.objective_evals += other.objective_evals;
        self.constraint_evals += other.constraint_evals;
        if self.samples.len() < other.samples.len() {
            self.samples.resize(other.samples.len(), 0);
        }
        for (a, b) in self.samples.iter_mut().zip(&other.samples) {
            *a += b;
        }
    }

    /// Data passes given the dataset size of each oracle.
    pub fn data_passes(&self, dataset_sizes: &[usize]) -> f64 {
        count_data_passes(
            self.objective_evals,
            self.constraint_evals,
            dataset_sizes,
            &self.samples,
        )
    }
}

/// Data passes: a full evaluation of `f` or `g` costs 1, a stochastic
/// sample of oracle `i` costs `1 / dataset_sizes[i]`.
pub fn count_data_passes(
    n_objective_evals: u64,
    n_constraint_evals: u64,
    dataset_sizes: &[usize],
    stochastic_samples: &[u64],
) -> f64 {
    let full = (n_objective_evals + n_constraint_evals) as f64;
    let sampled: f64 = stochastic_samples
        .iter()
        .zip(dataset_sizes)
        .map(|(s, n)| *s as f64 / (*n).max(1) as f64)
        .sum();
    full + sampled
}

/// Queue magnitudes at the end of a stochastic run.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueSummary {
    pub final_queues: Vector,
    pub final_norm: f64,
    /// `max_k ||Q_k||` over the run.
    pub max_norm: f64,
    /// The penalty weight `V`.
    pub v: f64,
}

/// One step of the switching method, kept only when tracing is requested.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchRecord {
    pub k: usize,
    pub z: Vector,
    /// `G(z_k)`, absent when there are no constraints.
    pub g_value: Option<f64>,
    pub objective_step: bool,
}

/// Result of one subproblem solve.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub output: Vector,
    pub iterations: usize,
    /// `F(output)`.
    pub f_value: f64,
    /// `G(output) = max_i F_i(output)`, absent when `m = 0`.
    pub g_value: Option<f64>,
    /// A-posteriori upper bound on `F(output) - F(x_hat)` (switching only).
    pub f_gap_bound: Option<f64>,
    /// `F(output) - F(reference)` when a reference optimum was supplied.
    pub reference_gap: Option<f64>,
    /// Number of objective steps (switching only).
    pub accepted: Option<usize>,
    pub queue: Option<QueueSummary>,
    pub usage: Usage,
    pub trace: Option<Vec<SwitchRecord>>,
}
