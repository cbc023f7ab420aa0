//! `h(x) = offset + weight * sum_j h_j(x)` over a dataset, with a
//! one-datum stochastic oracle.

use std::fmt;

use rand::{Rng, RngCore};

use crate::problem::{FunctionOracle, StochasticOracle};

/// The per-datum functions `h_j` of a finite sum.
pub trait Terms: Send + Sync + fmt::Debug {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn dim(&self) -> usize;

    /// Returns `h_j(x)` and, when `grad` is given, adds `scale * grad h_j(x)` to it.
    fn term(&self, j: usize, x: &[f64], scale: f64, grad: Option<&mut [f64]>) -> f64;

    /// Bound on `||grad h_j||` over the domain.
    fn grad_bound(&self, j: usize) -> f64;

    /// Weak-convexity modulus of `h_j`.
    fn curvature(&self, j: usize) -> f64;

    /// Bound on `|h_j|` over the domain.
    fn value_bound(&self, j: usize) -> f64;
}

#[derive(Debug, Clone)]
pub struct FiniteSum<T> {
    terms: T,
    weight: f64,
    offset: f64,
    rho: f64,
    bound: f64,
    sample_value_bound: f64,
    sample_grad_bound: f64,
}

impl<T: Terms> FiniteSum<T> {
    /// Constants are derived from the per-term bounds: the modulus and
    /// subgradient bound of the sum add up, the sampled ones scale the
    /// worst term by `weight * n`.
    pub fn new(terms: T, weight: f64, offset: f64) -> Self {
        assert!(weight > 0.0, "finite-sum weight must be positive");
        let n = terms.len();
        let scale = weight * n as f64;
        let (mut rho, mut bound, mut gmax, mut vmax) = (0.0, 0.0, 0.0f64, 0.0f64);
        for j in 0..n {
            rho += terms.curvature(j);
            bound += terms.grad_bound(j);
            gmax = gmax.max(terms.grad_bound(j));
            vmax = vmax.max(terms.value_bound(j));
        }
        Self {
            rho: weight * rho,
            bound: (weight * bound).max(f64::MIN_POSITIVE),
            sample_value_bound: offset.abs() + scale * vmax,
            sample_grad_bound: scale * gmax,
            terms,
            weight,
            offset,
        }
    }

    /// Mean `(1/n) sum_j h_j + offset`.
    pub fn mean(terms: T, offset: f64) -> Self {
        let n = terms.len().max(1);
        Self::new(terms, 1.0 / n as f64, offset)
    }

    pub fn with_weak_convexity(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn terms(&self) -> &T {
        &self.terms
    }

    fn eval(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> f64 {
        if let Some(g) = grad.as_deref_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut s = 0.0;
        for j in 0..self.terms.len() {
            s += self.terms.term(j, x, self.weight, grad.as_deref_mut());
        }
        self.offset + self.weight * s
    }
}

impl<T: Terms> FunctionOracle for FiniteSum<T> {
    fn dim(&self) -> usize {
        self.terms.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x, None)
    }

    fn value_and_subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.eval(x, Some(grad))
    }

    fn weak_convexity(&self) -> f64 {
        self.rho
    }

    fn subgradient_bound(&self) -> f64 {
        self.bound
    }

    fn data_size(&self) -> usize {
        self.terms.len()
    }

    fn stochastic(&self) -> Option<&dyn StochasticOracle> {
        Some(self)
    }
}

impl<T: Terms> StochasticOracle for FiniteSum<T> {
    fn sample(&self, x: &[f64], rng: &mut dyn RngCore, grad: &mut [f64]) -> f64 {
        let n = self.terms.len();
        let j = rng.random_range(0..n);
        let scale = self.weight * n as f64;
        grad.iter_mut().for_each(|v| *v = 0.0);
        self.offset + scale * self.terms.term(j, x, scale, Some(grad))
    }

    fn value_bound(&self) -> f64 {
        self.sample_value_bound
    }

    fn gradient_bound(&self) -> f64 {
        self.sample_grad_bound
    }
}
