//! Stochastic subgradient method with one virtual queue per constraint.
//!
//! Each step draws shifted samples `(theta_i, zeta_i)` for `i = 0..=m`, takes
//! the projected step `z - (V zeta_0 + sum_i Q_i zeta_i) / (2 alpha)` and
//! updates `Q_i <- max(Q_i + theta_i + zeta_i^T (z_next - z), 0)`, with
//! `V = sqrt(K)` and `alpha = K`. The output is the plain average of
//! `z_0..z_{K-1}`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, Vector};
use crate::problem::ConstrainedProblem;
use crate::prox::{shifted_stochastic_sample_into, shifted_value, ProxCenter, F_value};
use crate::report::{OracleReport, QueueSummary, Usage};

/// Virtual queues and the fixed weights of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub q: Vector,
    pub v: f64,
    pub alpha: f64,
    pub k: usize,
}

impl QueueState {
    /// Zero queues with `V = sqrt(K)` and `alpha = K`.
    pub fn new(m: usize, k: usize) -> Self {
        Self {
            q: vec![0.0; m],
            v: (k as f64).sqrt(),
            alpha: k as f64,
            k,
        }
    }

    pub fn norm(&self) -> f64 {
        norm(&self.q)
    }
}

struct Workspace {
    grads: Vec<Vector>,
    thetas: Vector,
    dir: Vector,
}

impl Workspace {
    fn new(p: &ConstrainedProblem) -> Self {
        let m = p.num_constraints();
        Self {
            grads: vec![vec![0.0; p.dim()]; m + 1],
            thetas: vec![0.0; m + 1],
            dir: vec![0.0; p.dim()],
        }
    }
}

/// The projected step given already drawn samples; `z` and `q` are updated
/// in place and `dir` is scratch space.
#[allow(clippy::too_many_arguments)]
pub fn queue_step(
    p: &ConstrainedProblem,
    z: &mut [f64],
    q: &mut [f64],
    v: f64,
    alpha: f64,
    thetas: &[f64],
    grads: &[Vector],
    dir: &mut [f64],
) {
    dir.iter_mut().zip(&grads[0]).for_each(|(d, g)| *d = v * g);
    for (qi, gi) in q.iter().zip(&grads[1..]) {
        if *qi != 0.0 {
            axpy(*qi, gi, dir);
        }
    }
    for (d, zi) in dir.iter_mut().zip(z.iter()) {
        *d = zi - 0.5 / alpha * *d;
    }
    p.domain().project_in_place(dir);
    // z <- z_next, dir <- z_next - z_k
    for (d, zi) in dir.iter_mut().zip(z.iter_mut()) {
        let next = *d;
        *d = next - *zi;
        *zi = next;
    }
    for (i, qi) in q.iter_mut().enumerate() {
        *qi = (*qi + thetas[i + 1] + dot(&grads[i + 1], dir)).max(0.0);
    }
}

fn draw_all(
    p: &ConstrainedProblem,
    c: &ProxCenter,
    z: &[f64],
    ws: &mut Workspace,
    rng: &mut dyn RngCore,
    usage: &mut Usage,
) -> Result<()> {
    for i in 0..=p.num_constraints() {
        ws.thetas[i] = shifted_stochastic_sample_into(p, c, z, i, rng, &mut ws.grads[i])?;
        usage.samples[i] += 1;
    }
    Ok(())
}

/// One iteration from `(z_k, q)`.
pub fn stochastic_step(
    p: &ConstrainedProblem,
    c: &ProxCenter,
    z_k: &[f64],
    q: &QueueState,
    rng: &mut dyn RngCore,
) -> Result<(Vector, QueueState)> {
    let mut ws = Workspace::new(p);
    let mut usage = Usage {
        samples: vec![0; p.num_constraints() + 1],
        ..Default::default()
    };
    draw_all(p, c, z_k, &mut ws, rng, &mut usage)?;
    let mut z = z_k.to_vec();
    let mut next = q.clone();
    queue_step(p, &mut z, &mut next.q, q.v, q.alpha, &ws.thetas, &ws.grads, &mut ws.dir);
    Ok((z, next))
}

/// Runs `K` iterations from `c.center`. Use [`ProxCenter::unshifted`] to run
/// on the original problem.
pub fn run_stochastic(
    p: &ConstrainedProblem,
    c: &ProxCenter,
    k_total: usize,
    rng: &mut dyn RngCore,
) -> Result<OracleReport> {
    if k_total < 1 {
        return Err(Error::Config("stochastic oracle needs K >= 1".into()));
    }
    for i in 0..=p.num_constraints() {
        if p.oracle(i).stochastic().is_none() {
            return Err(Error::MissingStochasticOracle { index: i });
        }
    }
    let m = p.num_constraints();
    let mut state = QueueState::new(m, k_total);
    let mut ws = Workspace::new(p);
    let mut usage = Usage {
        samples: vec![0; m + 1],
        ..Default::default()
    };
    let mut z = c.center.clone();
    let mut acc = vec![0.0; p.dim()];
    let mut max_norm = 0.0f64;
    for _ in 0..k_total {
        axpy(1.0, &z, &mut acc);
        draw_all(p, c, &z, &mut ws, rng, &mut usage)?;
        queue_step(
            p,
            &mut z,
            &mut state.q,
            state.v,
            state.alpha,
            &ws.thetas,
            &ws.grads,
            &mut ws.dir,
        );
        max_norm = max_norm.max(state.norm());
    }
    let output: Vector = acc.iter().map(|v| v / k_total as f64).collect();
    let output = p.domain().project(&output);

    let f_value = F_value(p, c, &output);
    let g_value = (1..=m)
        .map(|i| shifted_value(p, c, i, &output))
        .reduce(f64::max);
    Ok(OracleReport {
        output,
        iterations: k_total,
        f_value,
        g_value,
        f_gap_bound: None,
        reference_gap: None,
        accepted: None,
        queue: Some(QueueSummary {
            final_norm: state.norm(),
            final_queues: state.q,
            max_norm,
            v: state.v,
        }),
        usage,
        trace: None,
    })
}

/// [`run_stochastic`] with a fresh generator seeded from `seed`.
pub fn run_stochastic_seeded(p: &ConstrainedProblem, c: &ProxCenter, k_total: usize, seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_stochastic(p, c, k_total, &mut rng)
}

/// Bound functions of the high-probability analysis, evaluated at fixed
/// constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundConstants {
    pub d: f64,
    pub m0_tilde: f64,
    pub m1_tilde: f64,
    pub m: usize,
    pub sigma_eps: f64,
    pub delta: f64,
}

impl BoundConstants {
    // M0~ + sqrt(m) M1~ D
    fn c(&self) -> f64 {
        self.m0_tilde + (self.m as f64).sqrt() * self.m1_tilde * self.d
    }

    pub fn lambda_tilde(&self) -> f64 {
        let c = self.c();
        let s = self.sigma_eps;
        8.0 * c * c / s * (1.0 + 32.0 * c * c / (s * s) * (s / (8.0 * c)).exp()).ln()
    }

    pub fn lambda(&self, k: f64) -> f64 {
        let c = self.c();
        let s = self.sigma_eps;
        let d = self.d;
        s / 2.0
            + c
            + 2.0 * d * d / s
            + (2.0 * self.m1_tilde * d + c * c) / s
            + self.lambda_tilde()
            + 8.0 * c * c / s * (2.0 * k / self.delta).ln()
    }

    pub fn b1(&self, k: f64) -> f64 {
        let c = self.c();
        let (d, m0, m1) = (self.d, self.m0_tilde, self.m1_tilde);
        (d * d + m1 * m1 / 4.0 + c * c / 2.0 + (1.0 / self.delta).ln().sqrt() * m0 * self.lambda(k)) / k.sqrt()
    }

    pub fn b2(&self, k: f64) -> f64 {
        let l = self.lambda(k);
        let m1 = self.m1_tilde;
        (l + m1 * m1 + l * (self.m as f64).sqrt() * m1 * m1 / 2.0) / k.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoreticalK {
    pub k: u64,
    pub b1: f64,
    pub b2: f64,
}

pub const THEORETICAL_K_CAP_LOG2: u32 = 60;

/// Smallest power of two `K <= 2^60` with `max(B1(K), B2(K)) <= eps_hat^2`.
pub fn theoretical_k(consts: &BoundConstants, eps_hat: f64) -> Result<TheoreticalK> {
    if !(consts.sigma_eps > 0.0) {
        return Err(Error::Config("sigma_eps must be positive".into()));
    }
    if !(eps_hat > 0.0) {
        return Err(Error::Config("eps_hat must be positive".into()));
    }
    if !(consts.delta > 0.0 && consts.delta < 1.0) {
        return Err(Error::Config("delta must lie in (0, 1)".into()));
    }
    let target = eps_hat * eps_hat;
    for j in 0..=THEORETICAL_K_CAP_LOG2 {
        let k = 1u64 << j;
        let kf = k as f64;
        let (b1, b2) = (consts.b1(kf), consts.b2(kf));
        if b1.max(b2) <= target {
            return Ok(TheoreticalK { k, b1, b2 });
        }
    }
    Err(Error::TheoreticalKOverflow {
        cap_log2: THEORETICAL_K_CAP_LOG2,
    })
}
