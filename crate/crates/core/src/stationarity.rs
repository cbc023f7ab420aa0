//! Near-stationarity measurement: solve the proximal subproblem at a candidate
//! point to high accuracy and report the distance to its solution.

use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::problem::ConstrainedProblem;
use crate::prox::ProxCenter;
use crate::report::OracleReport;
use crate::switching::{run_switching, switching_iteration_count, SwitchingConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct MeterConfig {
    pub rho_hat: f64,
    pub assumed_rho: Option<f64>,
    pub eps_meter: f64,
    pub budget_multiplier: f64,
    /// Replaces the theoretical base iteration count before the multiplier.
    pub k_base: Option<usize>,
}

impl MeterConfig {
    /// Meter accuracy `epsilon / 10` with a fourfold budget.
    pub fn for_epsilon(rho_hat: f64, epsilon: f64) -> Self {
        Self {
            rho_hat,
            assumed_rho: None,
            eps_meter: epsilon / 10.0,
            budget_multiplier: 4.0,
            k_base: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// `||x - x_hat_est||`.
    pub distance_estimate: f64,
    /// The accuracy `eps_meter` of the inner solve.
    pub subproblem_accuracy: f64,
    /// `eps_meter sqrt(2 / (rho_hat - rho))`, bounding `||x_hat_est - x_hat||`.
    pub slack_bound: f64,
    pub g_at_candidate: Option<f64>,
    pub lambda_estimate: Option<f64>,
    pub iterations: usize,
}

/// Measures how far `x` is from the solution of its own proximal subproblem.
pub fn measure(p: &ConstrainedProblem, x: &[f64], cfg: &MeterConfig) -> Result<StationarityReport> {
    if !(cfg.eps_meter > 0.0) {
        return Err(Error::Config("eps_meter must be positive".into()));
    }
    if !(cfg.budget_multiplier >= 1.0) {
        return Err(Error::Config("budget multiplier must be at least 1".into()));
    }
    let rho = cfg.assumed_rho.unwrap_or(p.rho());
    let tol = cfg.eps_meter * cfg.eps_meter;
    let g = p.constraint_value(x);
    if let Some(gv) = g {
        if gv > tol {
            return Err(Error::InfeasibleCandidate { g: gv, tolerance: tol });
        }
    }
    let c = ProxCenter::with_rho(p, x.to_vec(), cfg.rho_hat, rho)?;
    let base = match cfg.k_base {
        Some(k) => k,
        None => switching_iteration_count(p.lipschitz(), cfg.rho_hat, rho, p.diameter(), cfg.eps_meter)?,
    };
    let k = ((base as f64) * cfg.budget_multiplier).ceil() as usize;
    let report = run_switching(p, &c, &SwitchingConfig::new(cfg.eps_meter).with_iterations(k.max(1)))?;
    Ok(StationarityReport {
        distance_estimate: dist(x, &report.output),
        subproblem_accuracy: cfg.eps_meter,
        slack_bound: cfg.eps_meter * (2.0 / c.mu()).sqrt(),
        g_at_candidate: g,
        lambda_estimate: None,
        iterations: k,
    })
}

/// `||Q_K|| / V` from a stochastic oracle report.
pub fn lambda_estimate_from_queues(report: &OracleReport) -> Result<f64> {
    let q = report
        .queue
        .as_ref()
        .ok_or_else(|| Error::Config("report carries no queue state".into()))?;
    if q.final_queues.is_empty() {
        return Err(Error::Unconstrained);
    }
    Ok(q.final_norm / q.v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaEstimate {
    pub value: f64,
    pub bound: Option<f64>,
    /// Set when the estimate exceeds the analytic bound; informational only.
    pub exceeds_bound: bool,
}

pub fn check_lambda_estimate(report: &OracleReport, bound: Option<f64>) -> Result<LambdaEstimate> {
    let value = lambda_estimate_from_queues(report)?;
    Ok(LambdaEstimate {
        value,
        bound,
        exceeds_bound: bound.is_some_and(|b| value > b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConvexDomain;
    use crate::library::simple::build_simple_example;
    use crate::problem::Quadratic;
    use crate::report::{QueueSummary, Usage};
    use std::sync::Arc;

    #[test]
    fn vertex_is_stationary() {
        let p = build_simple_example();
        let cfg = MeterConfig {
            rho_hat: 10.0,
            assumed_rho: None,
            eps_meter: 0.02,
            budget_multiplier: 4.0,
            k_base: None,
        };
        let r = measure(&p, &[0.0, 1.0], &cfg).unwrap();
        assert!(r.distance_estimate <= r.slack_bound + 1e-3, "{r:?}");
    }

    #[test]
    fn off_axis_point_is_not_stationary() {
        // at x = (0.5, 0) the prox point is (0.25, 0)
        let p = build_simple_example();
        let cfg = MeterConfig {
            rho_hat: 10.0,
            assumed_rho: None,
            eps_meter: 0.01,
            budget_multiplier: 1.0,
            k_base: None,
        };
        let r = measure(&p, &[0.5, 0.0], &cfg).unwrap();
        assert!(r.distance_estimate > 0.1, "{r:?}");
        assert!((r.distance_estimate - 0.25).abs() <= r.slack_bound, "{r:?}");
    }

    #[test]
    fn prox_fixed_point() {
        let q = Quadratic::diagonal(&[2.0, 2.0], vec![-0.6, 0.4], 0.13).with_subgradient_bound(6.0);
        let p = ConstrainedProblem::builder("q", Arc::new(q), ConvexDomain::l2_ball(2.0))
            .build()
            .unwrap();
        let r = measure(&p, &[0.3, -0.2], &MeterConfig::for_epsilon(1.0, 0.1)).unwrap();
        assert!(r.distance_estimate < r.slack_bound);
    }

    #[test]
    fn infeasible_candidate() {
        let p = build_simple_example();
        assert!(matches!(
            measure(&p, &[1.0, 0.0], &MeterConfig::for_epsilon(10.0, 0.1)),
            Err(Error::InfeasibleCandidate { .. })
        ));
    }

    #[test]
    fn zero_queue_estimate() {
        let r = OracleReport {
            output: vec![0.0],
            iterations: 1,
            f_value: 0.0,
            g_value: Some(0.0),
            f_gap_bound: None,
            reference_gap: None,
            accepted: None,
            queue: Some(QueueSummary {
                final_queues: vec![0.0],
                final_norm: 0.0,
                max_norm: 0.0,
                v: 10.0,
            }),
            usage: Usage::default(),
            trace: None,
        };
        assert_eq!(lambda_estimate_from_queues(&r).unwrap(), 0.0);
        let chk = check_lambda_estimate(&r, Some(1.0)).unwrap();
        assert!(!chk.exceeds_bound);
    }
}
