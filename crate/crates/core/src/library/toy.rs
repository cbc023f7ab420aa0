//! A two-dimensional stochastic problem with a closed-form solution:
//!
//! ```text
//! min  E[ ||x - (1,1) - xi||^2 / 2 ]   s.t.  E[(e_1 + xi')^T x] <= 0,   ||x||_2 <= 2
//! ```
//!
//! with `xi, xi'` uniform on `[-s, s]^2`. The expectation problem is
//! `min ||x - (1,1)||^2 / 2 + s^2/3  s.t.  x_1 <= 0`, solved by `(0, 1)` with
//! multiplier 1.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::linalg::{dist_sq, dot, norm, Vector};
use crate::problem::{ConstrainedProblem, FunctionOracle, Slater, StochasticOracle};

pub const TOY_RADIUS: f64 = 2.0;
pub const TOY_TARGET: [f64; 2] = [1.0, 1.0];
pub const TOY_OPTIMUM: [f64; 2] = [0.0, 1.0];
pub const TOY_MULTIPLIER: f64 = 1.0;
pub const TOY_START: [f64; 2] = [1.0, 1.0];

fn uniform_noise(rng: &mut dyn RngCore, s: f64, out: &mut [f64]) {
    for o in out.iter_mut() {
        *o = if s > 0.0 { rng.random_range(-s..=s) } else { 0.0 };
    }
}

/// `E ||x - target - xi||^2 / 2` for `xi` uniform on `[-s, s]^d`.
#[derive(Debug, Clone)]
pub struct NoisyDistance {
    target: Vector,
    noise: f64,
    radius: f64,
}

impl NoisyDistance {
    pub fn new(target: Vector, noise: f64, radius: f64) -> Self {
        Self { target, noise, radius }
    }

    fn noise_norm_bound(&self) -> f64 {
        self.noise * (self.target.len() as f64).sqrt()
    }
}

impl FunctionOracle for NoisyDistance {
    fn dim(&self) -> usize {
        self.target.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dist_sq(x, &self.target) + self.target.len() as f64 * self.noise * self.noise / 6.0
    }

    fn value_and_subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        for ((g, xi), t) in grad.iter_mut().zip(x).zip(&self.target) {
            *g = xi - t;
        }
        self.value(x)
    }

    fn weak_convexity(&self) -> f64 {
        0.0
    }

    fn subgradient_bound(&self) -> f64 {
        self.radius + norm(&self.target)
    }

    fn stochastic(&self) -> Option<&dyn StochasticOracle> {
        Some(self)
    }
}

impl StochasticOracle for NoisyDistance {
    fn sample(&self, x: &[f64], rng: &mut dyn RngCore, grad: &mut [f64]) -> f64 {
        uniform_noise(rng, self.noise, grad);
        for ((g, xi), t) in grad.iter_mut().zip(x).zip(&self.target) {
            *g = xi - t - *g;
        }
        0.5 * dot(grad, grad)
    }

    fn value_bound(&self) -> f64 {
        let r = self.gradient_bound();
        0.5 * r * r
    }

    fn gradient_bound(&self) -> f64 {
        self.subgradient_bound() + self.noise_norm_bound()
    }
}

/// `E (a + xi)^T x + offset` for `xi` uniform on `[-s, s]^d`.
#[derive(Debug, Clone)]
pub struct NoisyLinear {
    a: Vector,
    offset: f64,
    noise: f64,
    radius: f64,
}

impl NoisyLinear {
    pub fn new(a: Vector, offset: f64, noise: f64, radius: f64) -> Self {
        Self {
            a,
            offset,
            noise,
            radius,
        }
    }
}

impl FunctionOracle for NoisyLinear {
    fn dim(&self) -> usize {
        self.a.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        dot(&self.a, x) + self.offset
    }

    fn value_and_subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.copy_from_slice(&self.a);
        self.value(x)
    }

    fn weak_convexity(&self) -> f64 {
        0.0
    }

    fn subgradient_bound(&self) -> f64 {
        norm(&self.a)
    }

    fn stochastic(&self) -> Option<&dyn StochasticOracle> {
        Some(self)
    }
}

impl StochasticOracle for NoisyLinear {
    fn sample(&self, x: &[f64], rng: &mut dyn RngCore, grad: &mut [f64]) -> f64 {
        uniform_noise(rng, self.noise, grad);
        for (g, a) in grad.iter_mut().zip(&self.a) {
            *g += a;
        }
        dot(grad, x) + self.offset
    }

    fn value_bound(&self) -> f64 {
        self.gradient_bound() * self.radius + self.offset.abs()
    }

    fn gradient_bound(&self) -> f64 {
        norm(&self.a) + self.noise * (self.a.len() as f64).sqrt()
    }
}

/// The toy with noise half-width `noise`. From any point of the ball,
/// `y = (-1, 0)` gives `g(y) + ||y - x||^2 / 18 <= -1/2`, so
/// `(sigma_eps, rho_eps) = (1/2, 1/9)`.
pub fn build_stochastic_toy(noise: f64) -> Result<ConstrainedProblem> {
    if !(noise >= 0.0) {
        return Err(Error::Config(format!("noise must be nonnegative, got {noise}")));
    }
    let f = NoisyDistance::new(TOY_TARGET.to_vec(), noise, TOY_RADIUS);
    let g = NoisyLinear::new(vec![1.0, 0.0], 0.0, noise, TOY_RADIUS);
    ConstrainedProblem::builder("stochastic_toy", Arc::new(f), ConvexDomain::l2_ball(TOY_RADIUS))
        .constraint(Arc::new(g))
        .f_lb(noise * noise / 3.0)
        .slater(Slater::new(0.5, 1.0 / 9.0)?)
        .build()
}

/// `(x^2 - 1)^2 + 0.1`, weakly convex with modulus 4 on `[0, 2]`.
#[derive(Debug, Clone, Copy)]
pub struct DoubleWell;

impl FunctionOracle for DoubleWell {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        (x[0] * x[0] - 1.0).powi(2) + 0.1
    }

    fn value_and_subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad[0] = 4.0 * x[0] * (x[0] * x[0] - 1.0);
        self.value(x)
    }

    fn weak_convexity(&self) -> f64 {
        4.0
    }

    fn subgradient_bound(&self) -> f64 {
        24.0
    }
}

/// `min x^2/2  s.t.  (x^2 - 1)^2 + 0.1 <= 0` on `[0, 2]`: infeasible, with
/// the constraint's minimum 0.1 at `x = 1`.
pub fn build_double_well() -> ConstrainedProblem {
    let f = crate::problem::Quadratic::diagonal(&[1.0], vec![0.0], 0.0)
        .with_subgradient_bound(2.0)
        .with_value_bound(2.0);
    ConstrainedProblem::builder("double_well", Arc::new(f), ConvexDomain::boxed(vec![0.0], vec![2.0]))
        .constraint(Arc::new(DoubleWell))
        .f_lb(0.0)
        .build()
        .expect("constants are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::validate_problem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_unbiased() {
        let p = build_stochastic_toy(0.5).unwrap();
        let x = [0.3, -0.7];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for i in 0..=1 {
            let o = p.oracle(i);
            let s = o.stochastic().unwrap();
            let n = 200_000;
            let mut mv = 0.0;
            let mut mg = [0.0; 2];
            let mut g = [0.0; 2];
            for _ in 0..n {
                mv += s.sample(&x, &mut rng, &mut g);
                mg[0] += g[0];
                mg[1] += g[1];
                assert!(norm(&g) <= s.gradient_bound());
            }
            let exact = o.subgradient(&x);
            assert!((mv / n as f64 - o.value(&x)).abs() < 5e-3);
            assert!((mg[0] / n as f64 - exact[0]).abs() < 5e-3);
            assert!((mg[1] / n as f64 - exact[1]).abs() < 5e-3);
        }
    }

    #[test]
    fn kkt_at_optimum() {
        let p = build_stochastic_toy(0.2).unwrap();
        let gf = p.objective().subgradient(&TOY_OPTIMUM);
        let gg = p.constraints()[0].subgradient(&TOY_OPTIMUM);
        for k in 0..2 {
            assert!((gf[k] + TOY_MULTIPLIER * gg[k]).abs() < 1e-15);
        }
        assert_eq!(p.constraint_value(&TOY_OPTIMUM), Some(0.0));
        assert!(validate_problem(&p, 2000, 3).passed());
    }
}
