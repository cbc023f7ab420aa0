//! The proximally shifted subproblem around a center `x_t`:
//! `F(x) = f(x) + (rho_hat/2)||x - x_t||^2`, `G(x) = g(x) + (rho_hat/2)||x - x_t||^2`.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::linalg::{dist_sq, Vector};
use crate::problem::ConstrainedProblem;

/// Center and modulus of a proximal subproblem.
///
/// `rho` is the weak-convexity modulus the subproblem is assumed to carry;
/// it defaults to the problem's declared value and only enters the strong
/// convexity constant `rho_hat - rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxCenter {
    pub center: Vector,
    pub rho_hat: f64,
    pub rho: f64,
}

impl ProxCenter {
    pub fn new(p: &ConstrainedProblem, center: Vector, rho_hat: f64) -> Result<Self> {
        Self::with_rho(p, center, rho_hat, p.rho())
    }

    /// Like [`new`](Self::new) but with a working modulus in place of the
    /// declared one.
    pub fn with_rho(p: &ConstrainedProblem, center: Vector, rho_hat: f64, rho: f64) -> Result<Self> {
        if center.len() != p.dim() {
            return Err(Error::Dimension {
                expected: p.dim(),
                got: center.len(),
            });
        }
        if !(rho_hat > rho) || !rho_hat.is_finite() {
            return Err(Error::Modulus { rho_hat, rho });
        }
        Ok(Self {
            center,
            rho_hat,
            rho,
        })
    }

    /// No shift at all (`rho_hat = 0`); used when the stochastic method runs
    /// directly on the original problem.
    pub fn unshifted(start: Vector) -> Self {
        Self {
            center: start,
            rho_hat: 0.0,
            rho: 0.0,
        }
    }

    /// Strong convexity constant `rho_hat - rho` of `F` and `G`.
    pub fn mu(&self) -> f64 {
        self.rho_hat - self.rho
    }

    /// `(rho_hat/2)||x - x_t||^2`
    pub fn shift(&self, x: &[f64]) -> f64 {
        0.5 * self.rho_hat * dist_sq(x, &self.center)
    }

    /// `grad += rho_hat (x - x_t)`
    pub fn add_shift_gradient(&self, x: &[f64], grad: &mut [f64]) {
        if self.rho_hat == 0.0 {
            return;
        }
        for ((g, xi), ci) in grad.iter_mut().zip(x).zip(&self.center) {
            *g += self.rho_hat * (xi - ci);
        }
    }
}

#[allow(non_snake_case)]
pub fn F_value(p: &ConstrainedProblem, c: &ProxCenter, x: &[f64]) -> f64 {
    p.objective_value(x) + c.shift(x)
}

/// `G(x)`; fails with [`Error::Unconstrained`] when `m = 0`.
#[allow(non_snake_case)]
pub fn G_value(p: &ConstrainedProblem, c: &ProxCenter, x: &[f64]) -> Result<f64> {
    Ok(p.eval_constraint_max(x)?.0 + c.shift(x))
}

#[allow(non_snake_case)]
pub fn F_subgrad(p: &ConstrainedProblem, c: &ProxCenter, x: &[f64]) -> Vector {
    let mut g = p.objective().subgradient(x);
    c.add_shift_gradient(x, &mut g);
    g
}

#[allow(non_snake_case)]
pub fn G_subgrad(p: &ConstrainedProblem, c: &ProxCenter, x: &[f64]) -> Result<Vector> {
    let mut g = p.subgrad_constraint_max(x)?;
    c.add_shift_gradient(x, &mut g);
    Ok(g)
}

/// Shifted value of oracle `i` (0 = objective) at `x`.
pub fn shifted_value(p: &ConstrainedProblem, c: &ProxCenter, i: usize, x: &[f64]) -> f64 {
    p.oracle(i).value(x) + c.shift(x)
}

/// One shifted stochastic draw for oracle `i` (0 = objective): writes
/// `zeta + rho_hat (x - x_t)` into `grad` and returns `theta + (rho_hat/2)||x - x_t||^2`.
pub fn shifted_stochastic_sample_into(
    p: &ConstrainedProblem,
    c: &ProxCenter,
    x: &[f64],
    i: usize,
    rng: &mut dyn RngCore,
    grad: &mut [f64],
) -> Result<f64> {
    let s = p
        .oracle(i)
        .stochastic()
        .ok_or(Error::MissingStochasticOracle { index: i })?;
    let theta = s.sample(x, rng, grad);
    c.add_shift_gradient(x, grad);
    Ok(theta + c.shift(x))
}

/// Allocating form of [`shifted_stochastic_sample_into`].
pub fn shifted_stochastic_sample(
    p: &ConstrainedProblem,
    c: &ProxCenter,
    x: &[f64],
    i: usize,
    rng: &mut dyn RngCore,
) -> Result<(f64, Vector)> {
    let mut grad = vec![0.0; p.dim()];
    let theta = shifted_stochastic_sample_into(p, c, x, i, rng, &mut grad)?;
    Ok((theta, grad))
}

/// Bounds `(M0~, M1~)` on the shifted stochastic values and gradients.
pub fn shifted_stochastic_bounds(p: &ConstrainedProblem, c: &ProxCenter) -> Result<(f64, f64)> {
    let m0 = p.stochastic_value_bound().ok_or(Error::MissingStochasticOracle { index: 1 })?;
    let m1 = p.stochastic_gradient_bound().ok_or(Error::MissingStochasticOracle { index: 0 })?;
    let d = p.diameter();
    let m = p.num_constraints() as f64;
    Ok((m0 + c.rho_hat * m.sqrt() * d * d / 2.0, m1 + c.rho_hat * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::library::simple::build_simple_example;
    use crate::linalg::norm;
    use crate::problem::{sample_domain_point, FunctionOracle, Quadratic, StochasticOracle};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn zero_shift_at_center() {
        let p = build_simple_example();
        let x = vec![0.3, -0.2];
        let c = ProxCenter::new(&p, x.clone(), 10.0).unwrap();
        assert_eq!(F_value(&p, &c, &x), p.objective_value(&x));
        assert_eq!(G_value(&p, &c, &x).unwrap(), p.constraint_value(&x).unwrap());
        assert_eq!(F_subgrad(&p, &c, &x), p.objective().subgradient(&x));
    }

    #[test]
    fn simple_example_shifted_values() {
        let p = build_simple_example();
        let c = ProxCenter::new(&p, vec![0.0, 0.5], 10.0).unwrap();
        assert_abs_diff_eq!(F_value(&p, &c, &[0.0, 1.0]), 0.75, epsilon = 1e-14);
        assert_abs_diff_eq!(G_value(&p, &c, &[0.0, 1.0]).unwrap(), -11.25, epsilon = 1e-14);
    }

    #[test]
    fn simple_example_shifted_subgradient() {
        let p = build_simple_example();
        let c = ProxCenter::new(&p, vec![0.0, 0.0], 10.0).unwrap();
        let g = F_subgrad(&p, &c, &[0.1, 0.2]);
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g[1], 1.8, epsilon = 1e-14);
    }

    #[test]
    fn quadratic_shift_doubles() {
        let q = Quadratic::diagonal(&[1.0, 1.0], vec![0.0, 0.0], 0.0).with_subgradient_bound(1.0);
        let p = ConstrainedProblem::builder("q", Arc::new(q), ConvexDomain::l2_ball(1.0))
            .build()
            .unwrap();
        let c = ProxCenter::new(&p, vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(F_subgrad(&p, &c, &[1.0, 0.0]), vec![2.0, 0.0]);
    }

    #[test]
    fn rejects_small_rho_hat() {
        let p = build_simple_example();
        assert!(matches!(
            ProxCenter::new(&p, vec![0.0, 0.0], 5.0),
            Err(Error::Modulus { .. })
        ));
    }

    #[derive(Debug)]
    struct Fixed;
    impl FunctionOracle for Fixed {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, _: &[f64]) -> f64 {
            0.5
        }
        fn value_and_subgradient(&self, _: &[f64], g: &mut [f64]) -> f64 {
            g.copy_from_slice(&[0.0, 1.0]);
            0.5
        }
        fn weak_convexity(&self) -> f64 {
            0.0
        }
        fn subgradient_bound(&self) -> f64 {
            1.0
        }
        fn stochastic(&self) -> Option<&dyn StochasticOracle> {
            Some(self)
        }
    }
    impl StochasticOracle for Fixed {
        fn sample(&self, x: &[f64], _: &mut dyn RngCore, g: &mut [f64]) -> f64 {
            self.value_and_subgradient(x, g)
        }
        fn value_bound(&self) -> f64 {
            0.5
        }
        fn gradient_bound(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn shifted_sample_arithmetic() {
        let p = ConstrainedProblem::builder("fixed", Arc::new(Fixed), ConvexDomain::l2_ball(5.0))
            .build()
            .unwrap();
        let c = ProxCenter::new(&p, vec![0.0, 0.0], 2.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (t, z) = shifted_stochastic_sample(&p, &c, &[1.0, 0.0], 0, &mut rng).unwrap();
        assert_eq!(t, 1.5);
        assert_eq!(z, vec![2.0, 1.0]);
        let (t0, z0) = shifted_stochastic_sample(&p, &c, &[0.0, 0.0], 0, &mut rng).unwrap();
        assert_eq!((t0, z0), (0.5, vec![0.0, 1.0]));
    }

    #[test]
    fn degenerate_sum_matches_shifted_value() {
        let p = build_simple_example();
        let c = ProxCenter::new(&p, vec![0.0, 0.5], 7.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = [0.2, -0.3];
        for i in 0..=1 {
            let (t, _) = shifted_stochastic_sample(&p, &c, &x, i, &mut rng).unwrap();
            assert_abs_diff_eq!(t, shifted_value(&p, &c, i, &x), epsilon = 1e-14);
        }
    }

    #[test]
    fn strong_convexity_and_bounds_on_samples() {
        let p = build_simple_example();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = ProxCenter::new(&p, vec![0.1, 0.3], 6.0).unwrap();
        let bound = p.lipschitz() + c.rho_hat * p.diameter();
        for _ in 0..2000 {
            let x = sample_domain_point(p.domain(), 2, &mut rng);
            let y = sample_domain_point(p.domain(), 2, &mut rng);
            let zf = F_subgrad(&p, &c, &y);
            let zg = G_subgrad(&p, &c, &y).unwrap();
            assert!(norm(&zf) <= bound && norm(&zg) <= bound);
            let d2 = dist_sq(&x, &y);
            let lin = |z: &[f64]| z[0] * (x[0] - y[0]) + z[1] * (x[1] - y[1]);
            let tol = 1e-10;
            assert!(F_value(&p, &c, &x) >= F_value(&p, &c, &y) + lin(&zf) + 0.5 * c.mu() * d2 - tol);
            assert!(
                G_value(&p, &c, &x).unwrap()
                    >= G_value(&p, &c, &y).unwrap() + lin(&zg) + 0.5 * c.mu() * d2 - tol
            );
            let sf = F_value(&p, &c, &x) - p.objective_value(&x);
            let sg = G_value(&p, &c, &x).unwrap() - p.constraint_value(&x).unwrap();
            assert_abs_diff_eq!(sf, c.shift(&x), epsilon = 1e-12);
            assert_abs_diff_eq!(sg, c.shift(&x), epsilon = 1e-12);
        }
    }
}
