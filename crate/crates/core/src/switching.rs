//! Deterministic switching subgradient method for the proximal subproblem.
//!
//! From `z_0 = x_t`, step with `gamma_k = 2 / ((rho_hat - rho)(k + 2))` along
//! `F'` when `G(z_k) <= eps_hat^2` and along `G'` otherwise, projecting every
//! step. The output is the `(k + 1)`-weighted average of the objective-step
//! iterates.

use crate::error::{Error, Result};
use crate::linalg::{axpy, Vector};
use crate::problem::ConstrainedProblem;
use crate::prox::{ProxCenter, F_value, G_value};
use crate::report::{OracleReport, SwitchRecord, Usage};

#[derive(Debug, Clone, Default)]
pub struct SwitchingConfig {
    pub eps_hat: f64,
    /// Replaces the theoretical iteration count.
    pub k_override: Option<usize>,
    pub record_trace: bool,
    /// Known subproblem minimizer, for reporting the exact `F` gap.
    pub reference: Option<Vector>,
}

impl SwitchingConfig {
    pub fn new(eps_hat: f64) -> Self {
        Self {
            eps_hat,
            ..Default::default()
        }
    }

    pub fn with_iterations(mut self, k: usize) -> Self {
        self.k_override = Some(k);
        self
    }
}

/// `ceil(4 (M^2 + rho_hat D^2) / ((rho_hat - rho) eps_hat^2))`, at least 1.
pub fn switching_iteration_count(
    m: f64,
    rho_hat: f64,
    rho: f64,
    d: f64,
    eps_hat: f64,
) -> Result<usize> {
    if !(rho_hat > rho) {
        return Err(Error::Modulus { rho_hat, rho });
    }
    if !(eps_hat > 0.0) {
        return Err(Error::Config(format!("eps_hat must be positive, got {eps_hat}")));
    }
    let k = (4.0 * (m * m + rho_hat * d * d) / ((rho_hat - rho) * eps_hat * eps_hat)).ceil();
    if !k.is_finite() || k >= usize::MAX as f64 {
        return Err(Error::Config(format!("switching iteration count {k} is not representable")));
    }
    Ok((k as usize).max(1))
}

/// Runs the switching method on the subproblem centered at `c`.
pub fn run_switching(p: &ConstrainedProblem, c: &ProxCenter, cfg: &SwitchingConfig) -> Result<OracleReport> {
    let mu = c.mu();
    if !(mu > 0.0) {
        return Err(Error::Modulus {
            rho_hat: c.rho_hat,
            rho: c.rho,
        });
    }
    let k_total = match cfg.k_override {
        Some(0) => return Err(Error::Config("K override must be at least 1".into())),
        Some(k) => k,
        None => switching_iteration_count(p.lipschitz(), c.rho_hat, c.rho, p.diameter(), cfg.eps_hat)?,
    };
    let tol = cfg.eps_hat * cfg.eps_hat;
    let dim = p.dim();
    let m = p.num_constraints();
    let domain = p.domain();
    let objective = p.objective();
    let constraints = p.constraints();

    let mut z = c.center.clone();
    let mut grad = vec![0.0; dim];
    let mut acc = vec![0.0; dim];
    let mut w_accepted = 0.0;
    let mut accepted = 0usize;
    // sum of (k + 1) gamma_k over all steps, scaled by mu / 2
    let mut step_mass = 0.0;
    let mut usage = Usage::default();
    let mut trace = cfg.record_trace.then(Vec::new);

    for k in 0..k_total {
        let gamma = 2.0 / (mu * (k as f64 + 2.0));
        step_mass += (k as f64 + 1.0) / (k as f64 + 2.0);

        let mut g_record = None;
        let objective_step = if m == 0 {
            true
        } else {
            usage.constraint_evals += 1;
            let mut best = (f64::NEG_INFINITY, 0);
            for (i, ci) in constraints.iter().enumerate() {
                let v = ci.value(&z);
                if i == 0 || v > best.0 {
                    best = (v, i);
                }
            }
            let g = best.0 + c.shift(&z);
            g_record = Some(g);
            if g <= tol {
                true
            } else {
                constraints[best.1].value_and_subgradient(&z, &mut grad);
                false
            }
        };
        if objective_step {
            usage.objective_evals += 1;
            objective.value_and_subgradient(&z, &mut grad);
            let w = k as f64 + 1.0;
            axpy(w, &z, &mut acc);
            w_accepted += w;
            accepted += 1;
        }
        if let Some(t) = trace.as_mut() {
            t.push(SwitchRecord {
                k,
                z: z.clone(),
                g_value: g_record,
                objective_step,
            });
        }
        c.add_shift_gradient(&z, &mut grad);
        axpy(-gamma, &grad, &mut z);
        domain.project_in_place(&mut z);
    }

    if accepted == 0 {
        return Err(Error::SwitchingStalled { iterations: k_total });
    }
    let output: Vector = acc.iter().map(|v| v / w_accepted).collect();
    let output = domain.project(&output);

    // Weighted telescoping of the strongly convex subgradient inequality:
    //   sum_I (k+1)(F(z_k) - F*) + sum_J (k+1) eps_hat^2 <= L^2/mu * sum_k (k+1)/(k+2)
    // with L = M + rho_hat D bounding every shifted subgradient.
    let lip = p.lipschitz() + c.rho_hat * p.diameter();
    let w_total = k_total as f64 * (k_total as f64 + 1.0) / 2.0;
    let w_rejected = w_total - w_accepted;
    let f_gap_bound = (lip * lip / mu * step_mass - tol * w_rejected) / w_accepted;

    let f_value = F_value(p, c, &output);
    let g_value = if m > 0 { Some(G_value(p, c, &output)?) } else { None };
    let reference_gap = cfg.reference.as_ref().map(|r| f_value - F_value(p, c, r));

    Ok(OracleReport {
        output,
        iterations: k_total,
        f_value,
        g_value,
        f_gap_bound: Some(f_gap_bound),
        reference_gap,
        accepted: Some(accepted),
        queue: None,
        usage,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::library::simple::build_simple_example;
    use crate::linalg::{dist, norm};
    use crate::problem::Quadratic;
    use std::sync::Arc;

    #[test]
    fn iteration_count_formula() {
        assert_eq!(switching_iteration_count(1.0, 2.0, 1.0, 2.0, 0.1).unwrap(), 3600);
        let a = switching_iteration_count(3.0, 2.0, 0.5, 1.5, 0.02).unwrap();
        let b = switching_iteration_count(3.0, 2.0, 0.5, 1.5, 0.2).unwrap();
        assert!((a as f64 / 100.0).ceil() as usize >= b && b >= a / 100);
        assert_eq!(switching_iteration_count(0.0, 2.0, 1.0, 0.0, 0.1).unwrap(), 1);
        assert!(matches!(
            switching_iteration_count(1.0, 1.0, 1.0, 1.0, 0.1),
            Err(Error::Modulus { .. })
        ));
    }

    fn ball_quadratic(center: [f64; 2], radius: f64) -> ConstrainedProblem {
        // ||y - center||^2
        let q = Quadratic::diagonal(
            &[2.0, 2.0],
            vec![-2.0 * center[0], -2.0 * center[1]],
            center[0] * center[0] + center[1] * center[1],
        )
        .with_subgradient_bound(2.0 * (radius + norm(&center)));
        ConstrainedProblem::builder("q", Arc::new(q), ConvexDomain::l2_ball(radius))
            .build()
            .unwrap()
    }

    #[test]
    fn unconstrained_reaches_prox_point() {
        // ||y||^2 + ||y - c||^2 / 2 is minimized at c / 3
        let p = ball_quadratic([0.0, 0.0], 1.0);
        let c = ProxCenter::new(&p, vec![0.6, -0.5], 1.0).unwrap();
        let eps = 0.05;
        let r = run_switching(&p, &c, &SwitchingConfig::new(eps)).unwrap();
        assert!(dist(&r.output, &[0.2, -0.5 / 3.0]) <= eps, "{:?}", r.output);
        let c0 = ProxCenter::new(&p, vec![0.0, 0.0], 1.0).unwrap();
        let r0 = run_switching(&p, &c0, &SwitchingConfig::new(eps)).unwrap();
        assert!(norm(&r0.output) <= eps);
        assert_eq!(r.accepted, Some(r.iterations));
        assert_eq!(r.usage.constraint_evals, 0);
    }

    #[test]
    fn qcqp_line_instance() {
        // min ||y - (2,0)||^2 s.t. ||y||^2 <= 1, shifted around the origin
        // with rho_hat = 1
        let f = Quadratic::diagonal(&[2.0, 2.0], vec![-4.0, 0.0], 4.0).with_subgradient_bound(10.0);
        let g = Quadratic::diagonal(&[2.0, 2.0], vec![0.0, 0.0], -1.0).with_subgradient_bound(6.0);
        let p = ConstrainedProblem::builder("qcqp", Arc::new(f), ConvexDomain::l2_ball(3.0))
            .constraint(Arc::new(g))
            .build()
            .unwrap();
        let c = ProxCenter::new(&p, vec![0.0, 0.0], 1.0).unwrap();
        // shifted: minimize ||y-p||^2 + ||y||^2/2 s.t. 1.5||y||^2 <= 1; the
        // free minimizer (4/3, 0) is cut back to radius sqrt(2/3)
        let mut cfg = SwitchingConfig::new(0.05);
        cfg.reference = Some(vec![(2.0f64 / 3.0).sqrt(), 0.0]);
        let r = run_switching(&p, &c, &cfg).unwrap();
        assert!(r.reference_gap.unwrap() <= 0.0025, "{r:?}");
        assert!(r.g_value.unwrap() <= 0.0025);
        assert!(r.f_gap_bound.unwrap() >= r.reference_gap.unwrap());
    }

    #[test]
    fn simple_example_subproblem_matches_grid() {
        let p = build_simple_example();
        let c = ProxCenter::new(&p, vec![0.0, 0.5], 10.0).unwrap();
        let eps = 0.05;
        let r = run_switching(&p, &c, &SwitchingConfig::new(eps)).unwrap();
        let n = 1000;
        let mut best = (f64::INFINITY, vec![0.0, 0.0]);
        for i in -n..=n {
            for j in -n..=n {
                let x = vec![i as f64 / n as f64, j as f64 / n as f64];
                if x[0].abs() + x[1].abs() > 1.0 + 1e-12 {
                    continue;
                }
                if G_value(&p, &c, &x).unwrap() > eps * eps {
                    continue;
                }
                let v = F_value(&p, &c, &x);
                if v < best.0 {
                    best = (v, x);
                }
            }
        }
        assert!(dist(&r.output, &best.1) <= 2.0 * eps, "{:?} vs {:?}", r.output, best.1);
    }

    #[test]
    fn trace_iterates_in_domain_and_deterministic() {
        let p = build_simple_example();
        let c = ProxCenter::new(&p, vec![0.0, 0.5], 6.0).unwrap();
        let mut cfg = SwitchingConfig::new(0.1).with_iterations(2000);
        cfg.record_trace = true;
        let a = run_switching(&p, &c, &cfg).unwrap();
        let b = run_switching(&p, &c, &cfg).unwrap();
        assert_eq!(a.output, b.output);
        let t = a.trace.unwrap();
        assert_eq!(t.len(), 2000);
        assert!(t.iter().all(|r| p.domain().contains(&r.z, 1e-12)));
        assert!(t[0].objective_step);
        assert!(a.g_value.unwrap() <= 0.01);
    }

    #[test]
    fn stalls_from_infeasible_center() {
        let p = build_simple_example();
        let c = ProxCenter::new(&p, vec![1.0, 0.0], 10.0).unwrap();
        let cfg = SwitchingConfig::new(0.01).with_iterations(1);
        assert!(matches!(
            run_switching(&p, &c, &cfg),
            Err(Error::SwitchingStalled { iterations: 1 })
        ));
    }
}
