//! The two-dimensional quadratic test problem
//! `min x^T A x / 2  s.t.  x^T B x / 2 - 10 <= 0,  ||x||_1 <= 1`
//! with `A = diag(10, -1)` and `B = diag(50, -5)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::problem::{ConstrainedProblem, Quadratic, Slater};

pub const A_DIAG: [f64; 2] = [10.0, -1.0];
pub const B_DIAG: [f64; 2] = [50.0, -5.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleExampleSpec {
    /// Slater radius `rho_eps`, in `(0, 1.25)`; `sigma_eps = 2.5 - 2 rho_eps`.
    pub rho_eps: f64,
}

impl Default for SimpleExampleSpec {
    fn default() -> Self {
        Self { rho_eps: 1.0 }
    }
}

/// The problem with `rho_eps = 1`, so `sigma_eps = 0.5`.
pub fn build_simple_example() -> ConstrainedProblem {
    build_simple_example_with(SimpleExampleSpec::default()).expect("default spec is valid")
}

pub fn build_simple_example_with(spec: SimpleExampleSpec) -> Result<ConstrainedProblem> {
    if !(spec.rho_eps > 0.0 && spec.rho_eps < 1.25) {
        return Err(Error::Config(format!(
            "rho_eps must lie in (0, 1.25), got {}",
            spec.rho_eps
        )));
    }
    // Over the l1 ball the extremes sit at the vertices (+-1, 0), (0, +-1):
    // ||Ax|| <= 10, ||Bx|| <= 50, f in [-0.5, 5], g in [-12.5, 15].
    let f = Quadratic::diagonal(&A_DIAG, vec![0.0; 2], 0.0)
        .with_subgradient_bound(10.0)
        .with_value_bound(5.0);
    let g = Quadratic::diagonal(&B_DIAG, vec![0.0; 2], -10.0)
        .with_subgradient_bound(50.0)
        .with_value_bound(15.0);
    ConstrainedProblem::builder("simple_example", Arc::new(f), ConvexDomain::l1_ball(1.0))
        .constraint(Arc::new(g))
        .f_lb(-0.5)
        .slater(Slater::new(2.5 - 2.0 * spec.rho_eps, spec.rho_eps)?)
        .build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::validate_problem;

    #[test]
    fn constants() {
        let p = build_simple_example();
        assert_eq!(p.rho(), 5.0);
        assert_eq!(p.lipschitz(), 50.0);
        assert_eq!(p.diameter(), 2.0);
        assert_eq!(p.slater().unwrap().sigma_eps, 0.5);
    }

    #[test]
    fn values_at_vertex() {
        let p = build_simple_example();
        assert_eq!(p.objective_value(&[0.0, 1.0]), -0.5);
        assert_eq!(p.eval_constraint_max(&[0.0, 1.0]).unwrap(), (-12.5, 0));
        assert_eq!(p.subgrad_constraint_max(&[0.1, 0.2]).unwrap(), vec![5.0, -1.0]);
    }

    #[test]
    fn grid_optimum() {
        let p = build_simple_example();
        let n = 1000;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        for i in -n..=n {
            for j in -n..=n {
                let x = [i as f64 / n as f64, j as f64 / n as f64];
                if x[0].abs() + x[1].abs() > 1.0 + 1e-12 {
                    continue;
                }
                if p.constraint_value(&x).unwrap() > 0.0 {
                    continue;
                }
                let f = p.objective_value(&x);
                if f < best.0 {
                    best = (f, x);
                }
            }
        }
        assert_eq!(best.0, -0.5);
        assert_eq!(best.1[0], 0.0);
        assert_eq!(best.1[1].abs(), 1.0);
    }

    #[test]
    fn validates_clean() {
        let r = validate_problem(&build_simple_example(), 10_000, 5);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn understated_objective_modulus_is_caught() {
        let f = Quadratic::diagonal(&A_DIAG, vec![0.0; 2], 0.0)
            .with_weak_convexity(0.0)
            .with_subgradient_bound(10.0);
        let g = Quadratic::diagonal(&B_DIAG, vec![0.0; 2], -10.0).with_subgradient_bound(50.0);
        let p = ConstrainedProblem::builder("bad", Arc::new(f), ConvexDomain::l1_ball(1.0))
            .constraint(Arc::new(g))
            .build()
            .unwrap();
        let r = validate_problem(&p, 10_000, 5);
        assert!(r.violations.iter().any(|v| matches!(
            v,
            crate::problem::Violation::WeakConvexity { oracle: 0, .. }
        )));
    }

    #[test]
    fn slater_certificate() {
        use rand::{Rng, SeedableRng};
        let p = build_simple_example();
        let s = p.slater().unwrap();
        let eps2 = 0.01;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let mut count = 0;
        while count < 1000 {
            let x: [f64; 2] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            if x[0].abs() + x[1].abs() > 1.0 || p.constraint_value(&x).unwrap() > eps2 {
                continue;
            }
            count += 1;
            // the point (0, 1) or (0, -1), whichever is on x's side
            let tilde = [0.0, if x[1] >= 0.0 { 1.0 } else { -1.0 }];
            let d2 = (tilde[0] - x[0]).powi(2) + (tilde[1] - x[1]).powi(2);
            let lhs = p.constraint_value(&tilde).unwrap() + 0.5 * (p.rho() + s.rho_eps) * d2;
            assert!(lhs <= -s.sigma_eps, "x = {x:?}, lhs = {lhs}");
        }
    }
}
