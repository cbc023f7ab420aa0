//! Fairness-constrained classification:
//!
//! ```text
//! min  (1/|D|) sum_{(a,b) in D} phi_alpha(log(1 + exp(-b a^T x)))
//! s.t. c sum_{a in S} sigmoid(a^T x) - sum_{a in S_min} sigmoid(a^T x) <= 0
//!      ||x||_1 <= r
//! ```

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::library::data::{Dataset, Features};
use crate::library::finite_sum::{FiniteSum, Terms};
use crate::library::losses::{
    sigmoid, sigmoid_derivative, softplus, truncate, truncated_logistic_with_derivative, SIGMOID_CURVATURE,
};
use crate::linalg::Vector;
use crate::problem::ConstrainedProblem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FairnessSpec {
    pub alpha: f64,
    pub c: f64,
    pub l1_radius: f64,
}

impl Default for FairnessSpec {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            c: 0.2,
            l1_radius: 20.0,
        }
    }
}

/// Mean truncated logistic loss terms `phi_alpha(log(1 + exp(-b_j a_j^T x)))`.
#[derive(Debug, Clone)]
pub struct LogisticTerms {
    features: Features,
    labels: Vec<f64>,
    alpha: f64,
    // max |a_j^T x| over the l1 ball is r * max_i |a_ji|
    margin_radius: f64,
}

impl LogisticTerms {
    pub fn new(data: &Dataset, alpha: f64, l1_radius: f64) -> Result<Self> {
        let labels = data
            .labels
            .clone()
            .ok_or_else(|| Error::Config("training data needs labels".into()))?;
        Ok(Self {
            features: data.features.clone(),
            labels,
            alpha,
            margin_radius: l1_radius,
        })
    }
}

impl Terms for LogisticTerms {
    fn len(&self) -> usize {
        self.labels.len()
    }

    fn dim(&self) -> usize {
        self.features.n_cols()
    }

    fn term(&self, j: usize, x: &[f64], scale: f64, grad: Option<&mut [f64]>) -> f64 {
        let b = self.labels[j];
        let t = b * self.features.row_dot(j, x);
        let (v, dv) = truncated_logistic_with_derivative(t, self.alpha);
        if let Some(g) = grad {
            self.features.row_axpy(j, scale * b * dv, g);
        }
        v
    }

    fn grad_bound(&self, j: usize) -> f64 {
        self.features.row_norm_sq(j).sqrt()
    }

    // the margin's second derivative is at least -1/alpha
    fn curvature(&self, j: usize) -> f64 {
        self.features.row_norm_sq(j) / self.alpha
    }

    fn value_bound(&self, j: usize) -> f64 {
        truncate(softplus(self.margin_radius * self.features.row_max_abs(j)), self.alpha)
    }
}

/// Weighted sigmoid terms `w_j sigmoid(a_j^T x)`.
#[derive(Debug, Clone)]
pub struct SigmoidTerms {
    features: Features,
    weights: Vec<f64>,
}

impl SigmoidTerms {
    pub fn new(features: Features, weights: Vec<f64>) -> Self {
        assert_eq!(features.n_rows(), weights.len());
        Self { features, weights }
    }
}

impl Terms for SigmoidTerms {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn dim(&self) -> usize {
        self.features.n_cols()
    }

    fn term(&self, j: usize, x: &[f64], scale: f64, grad: Option<&mut [f64]>) -> f64 {
        let w = self.weights[j];
        if w == 0.0 {
            return 0.0;
        }
        let s = self.features.row_dot(j, x);
        if let Some(g) = grad {
            self.features.row_axpy(j, scale * w * sigmoid_derivative(s), g);
        }
        w * sigmoid(s)
    }

    fn grad_bound(&self, j: usize) -> f64 {
        self.weights[j].abs() * self.features.row_norm_sq(j).sqrt() / 4.0
    }

    fn curvature(&self, j: usize) -> f64 {
        self.weights[j].abs() * self.features.row_norm_sq(j) * SIGMOID_CURVATURE
    }

    fn value_bound(&self, j: usize) -> f64 {
        self.weights[j].abs()
    }
}

/// Builds the problem; `train` must carry labels and `unlabeled` a group
/// mask. Both may be the same dataset.
///
/// The weak-convexity modulus is the sum of per-term curvature bounds, a
/// conservative estimate that the tuned `rho_hat` of practice is far below.
pub fn build_fairness_problem(train: &Dataset, unlabeled: &Dataset, spec: FairnessSpec) -> Result<ConstrainedProblem> {
    if !(spec.alpha > 0.0) {
        return Err(Error::Config(format!("alpha must be positive, got {}", spec.alpha)));
    }
    if !(spec.c > 0.0 && spec.c < 1.0) {
        return Err(Error::Config(format!("c must lie in (0, 1), got {}", spec.c)));
    }
    if !(spec.l1_radius > 0.0) {
        return Err(Error::Config("l1 radius must be positive".into()));
    }
    let mask = unlabeled
        .group_mask
        .as_ref()
        .ok_or_else(|| Error::Config("the fairness constraint needs a minority group mask".into()))?;
    if train.dim() != unlabeled.dim() {
        return Err(Error::Dimension {
            expected: train.dim(),
            got: unlabeled.dim(),
        });
    }
    if train.is_empty() || unlabeled.is_empty() {
        return Err(Error::Config("datasets must be non-empty".into()));
    }
    let objective = FiniteSum::mean(LogisticTerms::new(train, spec.alpha, spec.l1_radius)?, 0.0);
    // c sum_S - sum_{S_min}: every point gets c, minority points also get -1
    let weights: Vec<f64> = mask.iter().map(|m| spec.c - if *m { 1.0 } else { 0.0 }).collect();
    let constraint = FiniteSum::new(SigmoidTerms::new(unlabeled.features.clone(), weights), 1.0, 0.0);
    ConstrainedProblem::builder("fairness", Arc::new(objective), ConvexDomain::l1_ball(spec.l1_radius))
        .constraint(Arc::new(constraint))
        .f_lb(0.0)
        .note("weak-convexity modulus is a conservative curvature-sum estimate, not a tight value")
        .build()
}

/// The all-ones vector projected onto the l1 ball.
pub fn fairness_start(dim: usize, spec: &FairnessSpec) -> Vector {
    ConvexDomain::l1_ball(spec.l1_radius).project(&vec![1.0; dim])
}
