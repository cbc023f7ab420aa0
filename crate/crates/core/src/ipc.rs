//! The inexact proximal outer loop: repeatedly solve the proximal subproblem
//! around the current iterate to accuracy `eps_hat^2` and return a randomly
//! chosen iterate.

use std::sync::Arc;
use std::time::Instant;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{all_finite, Vector};
use crate::problem::{ConstrainedProblem, ConstraintMax};
use crate::prox::ProxCenter;
use crate::report::{OracleReport, Usage};
use crate::stationarity::{measure, MeterConfig};
use crate::stochastic::run_stochastic;
use crate::switching::{run_switching, switching_iteration_count, SwitchingConfig};

/// `eps_hat = min{1, sqrt((rho_hat - rho)/4) ((M + rho_hat D)/sqrt(2 sigma (rho_hat - rho)) + 1)^(-1/2)} eps`
pub fn compute_eps_hat(epsilon: f64, m: f64, rho_hat: f64, rho: f64, d: f64, sigma_eps: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(rho_hat > rho) {
        return Err(Error::Modulus { rho_hat, rho });
    }
    if !(sigma_eps > 0.0) {
        return Err(Error::Config(format!("sigma_eps must be positive, got {sigma_eps}")));
    }
    let gap = rho_hat - rho;
    let inner = (m + rho_hat * d) / (2.0 * sigma_eps * gap).sqrt() + 1.0;
    Ok(((gap / 4.0).sqrt() / inner.sqrt()).min(1.0) * epsilon)
}

/// `ceil(4 (f(x0) - f_lb) / (eps^2 (rho_hat - rho)))`, at least 1.
pub fn required_t(f_x0: f64, f_lb: f64, epsilon: f64, rho_hat: f64, rho: f64) -> Result<usize> {
    if !(rho_hat > rho) {
        return Err(Error::Modulus { rho_hat, rho });
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if f_x0 < f_lb {
        return Err(Error::InconsistentBounds { f_x0, f_lb });
    }
    let t = (4.0 * (f_x0 - f_lb) / (epsilon * epsilon * (rho_hat - rho))).ceil();
    if !t.is_finite() || t >= usize::MAX as f64 {
        return Err(Error::Config(format!("outer iteration count {t} is not representable")));
    }
    Ok((t as usize).max(1))
}

/// Multiplier bound `(M + rho_hat D) / sqrt(2 sigma (rho_hat - rho))`.
pub fn lemma1_lambda_bound(m: f64, rho_hat: f64, d: f64, sigma_eps: f64, rho: f64) -> f64 {
    (m + rho_hat * d) / (2.0 * sigma_eps * (rho_hat - rho)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleKind {
    #[default]
    Switching,
    Stochastic,
}

/// Range of the random output index `R`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputIndexRange {
    /// `R` uniform on `{0, ..., T-1}`.
    #[default]
    Analysis,
    /// `R` uniform on `{0, ..., T}`.
    Printed,
}

#[derive(Debug, Clone)]
pub struct IpcConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub rho_hat: f64,
    /// Working weak-convexity modulus, replacing the problem's declared one.
    pub assumed_rho: Option<f64>,
    pub t_override: Option<usize>,
    pub eps_hat_override: Option<f64>,
    pub oracle: OracleKind,
    /// Inner iteration count; defaults to the theoretical count for the
    /// switching oracle and `1/eps_hat^2` for the stochastic one.
    pub k_override: Option<usize>,
    pub seed: u64,
    pub stationarity_every: Option<usize>,
    /// Meter accuracy for trace estimates; defaults to `epsilon / 10`.
    pub meter_eps: Option<f64>,
    pub meter_budget_multiplier: f64,
    pub output_range: OutputIndexRange,
}

impl IpcConfig {
    pub fn new(epsilon: f64, rho_hat: f64) -> Self {
        Self {
            epsilon,
            delta: 0.1,
            rho_hat,
            assumed_rho: None,
            t_override: None,
            eps_hat_override: None,
            oracle: OracleKind::Switching,
            k_override: None,
            seed: 0,
            stationarity_every: None,
            meter_eps: None,
            meter_budget_multiplier: 4.0,
            output_range: OutputIndexRange::Analysis,
        }
    }
}

/// Condensed per-call oracle report kept in the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSummary {
    pub iterations: usize,
    pub f_gap_bound: Option<f64>,
    /// `G` of the oracle output on its own subproblem.
    pub g_shifted: Option<f64>,
    pub queue_norm: Option<f64>,
}

impl From<&OracleReport> for OracleSummary {
    fn from(r: &OracleReport) -> Self {
        Self {
            iterations: r.iterations,
            f_gap_bound: r.f_gap_bound,
            g_shifted: r.g_value,
            queue_norm: r.queue.as_ref().map(|q| q.final_norm),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub t: usize,
    pub f_value: f64,
    pub g_value: Option<f64>,
    /// Cumulative data passes.
    pub data_passes: f64,
    pub wall_seconds: f64,
    /// The oracle call that produced `x_t` (absent for `t = 0`).
    pub oracle: Option<OracleSummary>,
    /// `||x_t - x_hat_t||` estimated by the meter.
    pub stationarity: Option<f64>,
    /// `f(x_{t-1}) + (1 + Lambda) eps_hat^2 - f(x_t)`, negative on violation.
    pub descent_slack: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunTrace {
    pub entries: Vec<TraceEntry>,
    pub eps_hat: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    /// Multiplier bound used in the descent check, when Slater constants are known.
    pub lambda_bound: Option<f64>,
    /// Steps `t` with `f(x_t) > f(x_{t-1}) + (1 + Lambda) eps_hat^2`.
    pub descent_violations: Vec<usize>,
    pub warnings: Vec<String>,
    pub r: usize,
    pub x_r: Vector,
    /// The last iterate `x_T`.
    pub x_last: Vector,
}

impl RunTrace {
    /// Mean of the squared stationarity estimates recorded along the trace.
    pub fn mean_squared_stationarity(&self) -> Option<f64> {
        let v: Vec<f64> = self.entries.iter().filter_map(|e| e.stationarity).collect();
        (!v.is_empty()).then(|| v.iter().map(|s| s * s).sum::<f64>() / v.len() as f64)
    }
}

#[derive(Debug, Clone)]
pub struct IpcOutcome {
    pub x_r: Vector,
    pub trace: RunTrace,
}

/// Runs the outer loop from `x0`, which must satisfy `g(x0) <= epsilon^2`.
pub fn run_ipc(p: &ConstrainedProblem, x0: &[f64], cfg: &IpcConfig) -> Result<IpcOutcome> {
    let start = Instant::now();
    let rho = cfg.assumed_rho.unwrap_or(p.rho());
    let rho_hat = cfg.rho_hat;
    if !(rho_hat > rho) {
        return Err(Error::Modulus { rho_hat, rho });
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    if !(cfg.delta > 0.0 && cfg.delta < 1.0) {
        return Err(Error::Config("delta must lie in (0, 1)".into()));
    }
    if x0.len() != p.dim() {
        return Err(Error::Dimension {
            expected: p.dim(),
            got: x0.len(),
        });
    }
    if !all_finite(x0) || !p.domain().contains(x0, 1e-9) {
        return Err(Error::Config("x0 must be a finite point of the domain".into()));
    }
    let eps2 = cfg.epsilon * cfg.epsilon;
    if let Some(g0) = p.constraint_value(x0) {
        if g0 > eps2 {
            return Err(Error::InfeasibleStart { g: g0, tolerance: eps2 });
        }
    }

    let mut warnings = Vec::new();
    let slater = p.slater();
    let eps_hat = match (cfg.eps_hat_override, slater) {
        (Some(e), _) if e > 0.0 => e,
        (Some(e), _) => return Err(Error::Config(format!("eps_hat must be positive, got {e}"))),
        (None, Some(s)) => compute_eps_hat(cfg.epsilon, p.lipschitz(), rho_hat, rho, p.diameter(), s.sigma_eps)?,
        (None, None) => {
            return Err(Error::Config(
                "eps_hat cannot be computed without Slater constants; supply an override".into(),
            ))
        }
    };
    if let Some(s) = slater {
        if rho_hat > rho + s.rho_eps {
            warnings.push(format!(
                "rho_hat = {rho_hat} lies outside (rho, rho + rho_eps] = ({rho}, {}]; the multiplier bound is not guaranteed",
                rho + s.rho_eps
            ));
        }
    }
    let lambda_bound = slater.map(|s| lemma1_lambda_bound(p.lipschitz(), rho_hat, p.diameter(), s.sigma_eps, rho));

    let f0 = p.objective_value(x0);
    let t_total = match cfg.t_override {
        Some(0) => return Err(Error::Config("T override must be at least 1".into())),
        Some(t) => t,
        None => {
            let f_lb = p
                .f_lb()
                .ok_or_else(|| Error::Config("T cannot be computed without f_lb; supply an override".into()))?;
            required_t(f0, f_lb, cfg.epsilon, rho_hat, rho)?
        }
    };
    let inner_k = match (cfg.k_override, cfg.oracle) {
        (Some(0), _) => return Err(Error::Config("K override must be at least 1".into())),
        (Some(k), _) => k,
        (None, OracleKind::Switching) => switching_iteration_count(p.lipschitz(), rho_hat, rho, p.diameter(), eps_hat)?,
        (None, OracleKind::Stochastic) => (1.0 / (eps_hat * eps_hat)).ceil() as usize,
    };
    if cfg.oracle == OracleKind::Stochastic && !p.has_stochastic_oracles() {
        return Err(Error::Config("stochastic oracle requested but the problem has no samplers".into()));
    }
    for w in &warnings {
        warn!("{}: {w}", p.name());
    }

    let meter = cfg.stationarity_every.map(|_| MeterConfig {
        rho_hat,
        assumed_rho: Some(rho),
        eps_meter: cfg.meter_eps.unwrap_or(cfg.epsilon / 10.0),
        budget_multiplier: cfg.meter_budget_multiplier,
        k_base: None,
    });
    let stationarity_at = |t: usize, x: &[f64], warnings: &mut Vec<String>| -> Option<f64> {
        let every = cfg.stationarity_every?;
        if every == 0 || !t.is_multiple_of(every) {
            return None;
        }
        match measure(p, x, meter.as_ref()?) {
            Ok(r) => Some(r.distance_estimate),
            Err(e) => {
                warnings.push(format!("stationarity at t = {t} skipped: {e}"));
                None
            }
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes = p.data_sizes();
    let mut usage = Usage {
        samples: vec![0; sizes.len()],
        ..Default::default()
    };
    let descent_allowance = lambda_bound.map(|l| (1.0 + l) * eps_hat * eps_hat);

    let mut iterates: Vec<Vector> = Vec::with_capacity(t_total + 1);
    let mut entries = Vec::with_capacity(t_total + 1);
    let mut descent_violations = Vec::new();
    let st0 = stationarity_at(0, x0, &mut warnings);
    entries.push(TraceEntry {
        t: 0,
        f_value: f0,
        g_value: p.constraint_value(x0),
        data_passes: 0.0,
        wall_seconds: start.elapsed().as_secs_f64(),
        oracle: None,
        stationarity: st0,
        descent_slack: None,
    });
    iterates.push(x0.to_vec());

    let switching_cfg = SwitchingConfig::new(eps_hat).with_iterations(inner_k);
    let mut f_prev = f0;
    for t in 0..t_total {
        let center = ProxCenter {
            center: iterates[t].clone(),
            rho_hat,
            rho,
        };
        let report = match cfg.oracle {
            OracleKind::Switching => run_switching(p, &center, &switching_cfg)?,
            OracleKind::Stochastic => run_stochastic(p, &center, inner_k, &mut rng)?,
        };
        usage.add(&report.usage);
        let x_next = report.output.clone();
        let f_next = p.objective_value(&x_next);
        let descent_slack = descent_allowance.map(|a| f_prev + a - f_next);
        if matches!(descent_slack, Some(s) if s < 0.0) {
            descent_violations.push(t + 1);
        }
        let stationarity = stationarity_at(t + 1, &x_next, &mut warnings);
        entries.push(TraceEntry {
            t: t + 1,
            f_value: f_next,
            g_value: p.constraint_value(&x_next),
            data_passes: usage.data_passes(&sizes),
            wall_seconds: start.elapsed().as_secs_f64(),
            oracle: Some(OracleSummary::from(&report)),
            stationarity,
            descent_slack,
        });
        f_prev = f_next;
        iterates.push(x_next);
    }

    let r = match cfg.output_range {
        OutputIndexRange::Analysis => rng.random_range(0..t_total),
        OutputIndexRange::Printed => rng.random_range(0..=t_total),
    };
    let x_r = iterates[r].clone();
    let x_last = iterates.pop().expect("at least one iterate");
    Ok(IpcOutcome {
        x_r: x_r.clone(),
        trace: RunTrace {
            entries,
            eps_hat,
            outer_iterations: t_total,
            inner_iterations: inner_k,
            lambda_bound,
            descent_violations,
            warnings,
            r,
            x_r,
            x_last,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestoreStatus {
    Feasible,
    StationaryInfeasible,
}

impl std::fmt::Display for RestoreStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Feasible => "feasible",
            Self::StationaryInfeasible => "stationary_infeasible",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Restoration {
    pub point: Vector,
    pub status: RestoreStatus,
    /// `g(point)`; `-inf` for an unconstrained problem.
    pub g_value: f64,
    pub oracle_calls: usize,
    pub usage: Usage,
}

#[derive(Debug, Clone, Default)]
pub struct RestoreOptions {
    /// Defaults to `2 rho` (or 1 when `rho = 0`).
    pub rho_hat: Option<f64>,
    pub k_override: Option<usize>,
}

/// Minimizes `g` over the domain with the outer loop until `g <= epsilon^2`
/// or `budget` oracle calls are spent.
pub fn feasibility_restore(p: &ConstrainedProblem, x_start: &[f64], epsilon: f64, budget: usize) -> Result<Restoration> {
    feasibility_restore_with(p, x_start, epsilon, budget, &RestoreOptions::default())
}

pub fn feasibility_restore_with(
    p: &ConstrainedProblem,
    x_start: &[f64],
    epsilon: f64,
    budget: usize,
    opts: &RestoreOptions,
) -> Result<Restoration> {
    if budget < 1 {
        return Err(Error::Config("restoration budget must be at least 1".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config("epsilon must be positive".into()));
    }
    let eps2 = epsilon * epsilon;
    let mut x = p.domain().project(x_start);
    let Some(g_start) = p.constraint_value(&x) else {
        return Ok(Restoration {
            point: x,
            status: RestoreStatus::Feasible,
            g_value: f64::NEG_INFINITY,
            oracle_calls: 0,
            usage: Usage::default(),
        });
    };
    if g_start <= eps2 {
        return Ok(Restoration {
            point: x,
            status: RestoreStatus::Feasible,
            g_value: g_start,
            oracle_calls: 0,
            usage: Usage::default(),
        });
    }

    let gmax = ConstraintMax::new(p.constraints().to_vec())?;
    let sub = ConstrainedProblem::builder(format!("{}/restore", p.name()), Arc::new(gmax), p.domain().clone())
        .rho(p.rho())
        .subgradient_bound(p.lipschitz())
        .build()?;
    let rho = sub.rho();
    let rho_hat = opts.rho_hat.unwrap_or(if rho > 0.0 { 2.0 * rho } else { 1.0 });
    if !(rho_hat > rho) {
        return Err(Error::Modulus { rho_hat, rho });
    }
    // No constraints, so the multiplier term drops out of the accuracy.
    let eps_hat = ((rho_hat - rho) / 4.0).sqrt().min(1.0) * epsilon;
    let mut cfg = SwitchingConfig::new(eps_hat);
    cfg.k_override = opts.k_override;

    let mut usage = Usage::default();
    let mut g = g_start;
    for call in 1..=budget {
        let c = ProxCenter {
            center: x,
            rho_hat,
            rho,
        };
        let report = run_switching(&sub, &c, &cfg)?;
        usage.add(&report.usage);
        x = report.output;
        g = sub.objective_value(&x);
        if g <= eps2 {
            return Ok(Restoration {
                point: x,
                status: RestoreStatus::Feasible,
                g_value: g,
                oracle_calls: call,
                usage,
            });
        }
    }
    Ok(Restoration {
        point: x,
        status: RestoreStatus::StationaryInfeasible,
        g_value: g,
        oracle_calls: budget,
        usage,
    })
}
