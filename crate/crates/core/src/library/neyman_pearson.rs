//! Multi-class Neyman–Pearson classification with `K` linear scorers
//! `x = (x_1, ..., x_K)`:
//!
//! ```text
//! min  mean_{xi in class 1} sum_{l != 1} phi(x_1^T xi - x_l^T xi)
//! s.t. mean_{xi in class k} sum_{l != k} phi(x_k^T xi - x_l^T xi) <= r_k,  k = 2..K
//!      ||x_k||_2 <= lambda for every k
//! ```
//!
//! `phi` is the truncated logistic loss of the margin.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::library::data::{Dataset, Features};
use crate::library::finite_sum::{FiniteSum, Terms};
use crate::library::losses::{softplus, truncate, truncated_logistic_with_derivative};
use crate::problem::ConstrainedProblem;

#[derive(Debug, Clone, PartialEq)]
pub struct NeymanPearsonSpec {
    pub classes: usize,
    /// Loss caps `r_2..r_K`, one per constrained class.
    pub r: Vec<f64>,
    pub radius: f64,
    pub alpha: f64,
}

impl NeymanPearsonSpec {
    pub fn new(classes: usize, r: f64, radius: f64) -> Self {
        Self {
            classes,
            r: vec![r; classes.saturating_sub(1)],
            radius,
            alpha: 2.0,
        }
    }
}

/// Terms `sum_{l != k} phi((x_k - x_l)^T xi_j)` for the samples of class `k`.
#[derive(Debug, Clone)]
pub struct PairwiseMarginTerms {
    features: Features,
    class: usize,
    classes: usize,
    alpha: f64,
    radius: f64,
}

impl PairwiseMarginTerms {
    fn block(&self, l: usize) -> std::ops::Range<usize> {
        let d = self.features.n_cols();
        l * d..(l + 1) * d
    }
}

impl Terms for PairwiseMarginTerms {
    fn len(&self) -> usize {
        self.features.n_rows()
    }

    fn dim(&self) -> usize {
        self.features.n_cols() * self.classes
    }

    fn term(&self, j: usize, x: &[f64], scale: f64, mut grad: Option<&mut [f64]>) -> f64 {
        let k = self.class;
        let own = self.features.row_dot(j, &x[self.block(k)]);
        let mut total = 0.0;
        let mut own_coef = 0.0;
        for l in 0..self.classes {
            if l == k {
                continue;
            }
            let t = own - self.features.row_dot(j, &x[self.block(l)]);
            let (v, dv) = truncated_logistic_with_derivative(t, self.alpha);
            total += v;
            if let Some(g) = grad.as_deref_mut() {
                self.features.row_axpy(j, -scale * dv, &mut g[self.block(l)]);
                own_coef += dv;
            }
        }
        if let Some(g) = grad {
            let b = self.block(k);
            self.features.row_axpy(j, scale * own_coef, &mut g[b]);
        }
        total
    }

    // each margin has gradient of norm sqrt(2) ||xi|| and |phi'| <= 1
    fn grad_bound(&self, j: usize) -> f64 {
        (self.classes - 1) as f64 * (2.0 * self.features.row_norm_sq(j)).sqrt()
    }

    fn curvature(&self, j: usize) -> f64 {
        (self.classes - 1) as f64 * 2.0 * self.features.row_norm_sq(j) / self.alpha
    }

    // |margin| <= ||x_k - x_l|| ||xi|| <= 2 lambda ||xi||
    fn value_bound(&self, j: usize) -> f64 {
        let t = 2.0 * self.radius * self.features.row_norm_sq(j).sqrt();
        (self.classes - 1) as f64 * truncate(softplus(t), self.alpha)
    }
}

/// Builds the problem from one dataset per class (class 1 first).
pub fn build_neyman_pearson(class_data: &[Dataset], spec: &NeymanPearsonSpec) -> Result<ConstrainedProblem> {
    let k = spec.classes;
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {k}")));
    }
    if class_data.len() != k {
        return Err(Error::Config(format!("{} datasets for {k} classes", class_data.len())));
    }
    if spec.r.len() != k - 1 {
        return Err(Error::Config(format!("{} loss caps for {} constrained classes", spec.r.len(), k - 1)));
    }
    if spec.r.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Config("loss caps must be positive".into()));
    }
    if !(spec.radius > 0.0 && spec.alpha > 0.0) {
        return Err(Error::Config("radius and alpha must be positive".into()));
    }
    let d = class_data[0].dim();
    for data in class_data {
        if data.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: data.dim(),
            });
        }
        if data.is_empty() {
            return Err(Error::Config("every class needs samples".into()));
        }
    }
    let terms = |class: usize| PairwiseMarginTerms {
        features: class_data[class].features.clone(),
        class,
        classes: k,
        alpha: spec.alpha,
        radius: spec.radius,
    };
    let mut b = ConstrainedProblem::builder(
        "neyman_pearson",
        Arc::new(FiniteSum::mean(terms(0), 0.0)),
        ConvexDomain::l2_ball_product(d, spec.radius),
    )
    .f_lb(0.0);
    for class in 1..k {
        b = b.constraint(Arc::new(FiniteSum::mean(terms(class), -spec.r[class - 1])));
    }
    b.build()
}
