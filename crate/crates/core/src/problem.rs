//! The problem class: minimize `f_0(x)` subject to `g(x) = max_i f_i(x) <= 0`
//! over a compact convex domain, where every `f_i` is weakly convex.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::ConvexDomain;
use crate::linalg::{dist_sq, dot, norm, Vector};

/// Deterministic first-order oracle for one weakly convex function.
pub trait FunctionOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes a subgradient at `x` into `grad` (overwriting it) and returns the value.
    fn value_and_subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn subgradient(&self, x: &[f64]) -> Vector {
        let mut g = vec![0.0; self.dim()];
        self.value_and_subgradient(x, &mut g);
        g
    }

    /// Declared weak-convexity modulus.
    fn weak_convexity(&self) -> f64;

    /// Declared bound on subgradient norms over the domain.
    fn subgradient_bound(&self) -> f64;

    /// Number of data points one full evaluation touches.
    fn data_size(&self) -> usize {
        1
    }

    fn stochastic(&self) -> Option<&dyn StochasticOracle> {
        None
    }
}

/// Unbiased stochastic value/subgradient estimates with almost-sure bounds.
pub trait StochasticOracle: Send + Sync {
    /// Draws one sample at `x`: writes the gradient estimate into `grad`
    /// (overwriting it) and returns the value estimate.
    fn sample(&self, x: &[f64], rng: &mut dyn RngCore, grad: &mut [f64]) -> f64;

    /// Bound on `|theta|`.
    fn value_bound(&self) -> f64;

    /// Bound on `||zeta||` (`M1`).
    fn gradient_bound(&self) -> f64;
}

/// `x^T A x / 2 + b^T x + c` with a dense symmetric `A`.
///
/// Also acts as a degenerate single-datum finite sum, so its stochastic
/// oracle returns the exact value and gradient.
#[derive(Debug, Clone)]
pub struct Quadratic {
    dim: usize,
    matrix: Vec<f64>,
    linear: Vector,
    constant: f64,
    rho: f64,
    bound: f64,
    value_bound: f64,
}

impl Quadratic {
    /// `matrix` is row-major `dim x dim`. The weak-convexity modulus and
    /// bounds default to unusable values and must be declared.
    pub fn new(dim: usize, matrix: Vec<f64>, linear: Vector, constant: f64) -> Self {
        assert_eq!(matrix.len(), dim * dim, "matrix must be dim x dim");
        assert_eq!(linear.len(), dim, "linear term must have length dim");
        Self {
            dim,
            matrix,
            linear,
            constant,
            rho: 0.0,
            bound: f64::INFINITY,
            value_bound: f64::INFINITY,
        }
    }

    /// Diagonal quadratic; the weak-convexity modulus is read off the diagonal.
    pub fn diagonal(diag: &[f64], linear: Vector, constant: f64) -> Self {
        let dim = diag.len();
        let mut matrix = vec![0.0; dim * dim];
        for (i, d) in diag.iter().enumerate() {
            matrix[i * dim + i] = *d;
        }
        let rho = diag.iter().fold(0.0f64, |acc, d| acc.max(-d));
        Self::new(dim, matrix, linear, constant).with_weak_convexity(rho)
    }

    pub fn with_weak_convexity(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_subgradient_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    pub fn with_value_bound(mut self, bound: f64) -> Self {
        self.value_bound = bound;
        self
    }

    fn gradient_into(&self, x: &[f64], grad: &mut [f64]) {
        for (i, g) in grad.iter_mut().enumerate() {
            let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
            *g = dot(row, x) + self.linear[i];
        }
    }
}

impl FunctionOracle for Quadratic {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mut quad = 0.0;
        for i in 0..self.dim {
            let row = &self.matrix[i * self.dim..(i + 1) * self.dim];
            quad += x[i] * dot(row, x);
        }
        0.5 * quad + dot(&self.linear, x) + self.constant
    }

    fn value_and_subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.gradient_into(x, grad);
        // x^T A x / 2 + b^T x = x^T (A x + b) / 2 + b^T x / 2
        0.5 * (dot(x, grad) + dot(&self.linear, x)) + self.constant
    }

    fn weak_convexity(&self) -> f64 {
        self.rho
    }

    fn subgradient_bound(&self) -> f64 {
        self.bound
    }

    fn stochastic(&self) -> Option<&dyn StochasticOracle> {
        Some(self)
    }
}

impl StochasticOracle for Quadratic {
    fn sample(&self, x: &[f64], _rng: &mut dyn RngCore, grad: &mut [f64]) -> f64 {
        self.value_and_subgradient(x, grad)
    }

    fn value_bound(&self) -> f64 {
        self.value_bound
    }

    fn gradient_bound(&self) -> f64 {
        self.bound
    }
}

/// Uniform Slater constants `(sigma_eps, rho_eps)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slater {
    pub sigma_eps: f64,
    pub rho_eps: f64,
}

impl Slater {
    pub fn new(sigma_eps: f64, rho_eps: f64) -> Result<Self> {
        if !(sigma_eps > 0.0 && rho_eps > 0.0) {
            return Err(Error::Config(format!(
                "Slater constants must be positive, got sigma_eps = {sigma_eps}, rho_eps = {rho_eps}"
            )));
        }
        Ok(Self { sigma_eps, rho_eps })
    }
}

/// A weakly convex problem with functional constraints.
#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    name: String,
    dim: usize,
    objective: Arc<dyn FunctionOracle>,
    constraints: Vec<Arc<dyn FunctionOracle>>,
    domain: ConvexDomain,
    rho: f64,
    lipschitz: f64,
    diameter: f64,
    f_lb: Option<f64>,
    slater: Option<Slater>,
    notes: Vec<String>,
}

/// Builder for [`ConstrainedProblem`]; constants left unset are taken as the
/// maximum over the declared per-oracle values.
pub struct ProblemBuilder {
    name: String,
    objective: Arc<dyn FunctionOracle>,
    constraints: Vec<Arc<dyn FunctionOracle>>,
    domain: ConvexDomain,
    rho: Option<f64>,
    lipschitz: Option<f64>,
    f_lb: Option<f64>,
    slater: Option<Slater>,
    notes: Vec<String>,
}

impl ProblemBuilder {
    pub fn constraint(mut self, c: Arc<dyn FunctionOracle>) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn subgradient_bound(mut self, m: f64) -> Self {
        self.lipschitz = Some(m);
        self
    }

    pub fn f_lb(mut self, f_lb: f64) -> Self {
        self.f_lb = Some(f_lb);
        self
    }

    pub fn slater(mut self, s: Slater) -> Self {
        self.slater = Some(s);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    pub fn build(self) -> Result<ConstrainedProblem> {
        let dim = self.objective.dim();
        for c in &self.constraints {
            if c.dim() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    got: c.dim(),
                });
            }
        }
        let oracles = || std::iter::once(&self.objective).chain(&self.constraints);
        let declared_rho = oracles().map(|o| o.weak_convexity()).fold(0.0, f64::max);
        let declared_m = oracles().map(|o| o.subgradient_bound()).fold(0.0, f64::max);
        let rho = self.rho.unwrap_or(declared_rho);
        let lipschitz = self.lipschitz.unwrap_or(declared_m);
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::Config(format!("invalid weak-convexity modulus {rho}")));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::Config(format!("invalid subgradient bound {lipschitz}")));
        }
        let diameter = self.domain.diameter(dim);
        Ok(ConstrainedProblem {
            name: self.name,
            dim,
            objective: self.objective,
            constraints: self.constraints,
            domain: self.domain,
            rho,
            lipschitz,
            diameter,
            f_lb: self.f_lb,
            slater: self.slater,
            notes: self.notes,
        })
    }
}

impl ConstrainedProblem {
    pub fn builder(
        name: impl Into<String>,
        objective: Arc<dyn FunctionOracle>,
        domain: ConvexDomain,
    ) -> ProblemBuilder {
        ProblemBuilder {
            name: name.into(),
            objective,
            constraints: Vec::new(),
            domain,
            rho: None,
            lipschitz: None,
            f_lb: None,
            slater: None,
            notes: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn objective(&self) -> &Arc<dyn FunctionOracle> {
        &self.objective
    }

    pub fn constraints(&self) -> &[Arc<dyn FunctionOracle>] {
        &self.constraints
    }

    /// Number of constraints `m`.
    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn domain(&self) -> &ConvexDomain {
        &self.domain
    }

    /// Weak-convexity modulus `rho` shared by all `f_i`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Subgradient bound `M` shared by all `f_i`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Domain diameter `D`.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn f_lb(&self) -> Option<f64> {
        self.f_lb
    }

    pub fn slater(&self) -> Option<Slater> {
        self.slater
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    /// Oracle `i` with `0` the objective and `1..=m` the constraints.
    pub fn oracle(&self, i: usize) -> &Arc<dyn FunctionOracle> {
        if i == 0 {
            &self.objective
        } else {
            &self.constraints[i - 1]
        }
    }

    /// Dataset sizes of oracles `0..=m`.
    pub fn data_sizes(&self) -> Vec<usize> {
        (0..=self.num_constraints())
            .map(|i| self.oracle(i).data_size())
            .collect()
    }

    pub fn has_stochastic_oracles(&self) -> bool {
        (0..=self.num_constraints()).all(|i| self.oracle(i).stochastic().is_some())
    }

    /// `M0 = ||(b_1, ..., b_m)||` from the per-constraint value bounds.
    pub fn stochastic_value_bound(&self) -> Option<f64> {
        let mut s = 0.0;
        for c in &self.constraints {
            let b = c.stochastic()?.value_bound();
            s += b * b;
        }
        Some(s.sqrt())
    }

    /// `M1`, the largest stochastic gradient bound over all oracles.
    pub fn stochastic_gradient_bound(&self) -> Option<f64> {
        let mut m1 = 0.0f64;
        for i in 0..=self.num_constraints() {
            m1 = m1.max(self.oracle(i).stochastic()?.gradient_bound());
        }
        Some(m1)
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }

    /// `g(x) = max_i f_i(x)` and the smallest index attaining it.
    ///
    /// The index is a position in [`constraints`](Self::constraints), so the
    /// constraint `f_i` (numbered from 1) has index `i - 1`.
    pub fn eval_constraint_max(&self, x: &[f64]) -> Result<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in self.constraints.iter().enumerate() {
            let v = c.value(x);
            match best {
                Some((b, _)) if v <= b => {}
                _ => best = Some((v, i)),
            }
        }
        best.ok_or(Error::Unconstrained)
    }

    /// A subgradient of `g` at `x`: the subgradient of the active constraint.
    pub fn subgrad_constraint_max(&self, x: &[f64]) -> Result<Vector> {
        let (_, i) = self.eval_constraint_max(x)?;
        Ok(self.constraints[i].subgradient(x))
    }

    /// `g(x)`, or `None` when the problem has no constraints.
    pub fn constraint_value(&self, x: &[f64]) -> Option<f64> {
        self.eval_constraint_max(x).ok().map(|(v, _)| v)
    }

    /// The same problem with a different modulus or subgradient bound.
    pub fn with_constants(&self, rho: Option<f64>, lipschitz: Option<f64>) -> Self {
        let mut p = self.clone();
        if let Some(r) = rho {
            p.rho = r;
        }
        if let Some(m) = lipschitz {
            p.lipschitz = m;
        }
        p
    }

    pub fn with_slater(&self, slater: Slater) -> Self {
        let mut p = self.clone();
        p.slater = Some(slater);
        p
    }
}

/// `g = max_i f_i` packaged as a single oracle, used when `g` itself is
/// minimized.
#[derive(Debug, Clone)]
pub struct ConstraintMax {
    parts: Vec<Arc<dyn FunctionOracle>>,
}

impl ConstraintMax {
    pub fn new(parts: Vec<Arc<dyn FunctionOracle>>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Unconstrained);
        }
        Ok(Self { parts })
    }

    fn active(&self, x: &[f64]) -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, p) in self.parts.iter().enumerate() {
            let v = p.value(x);
            if i == 0 || v > best.0 {
                best = (v, i);
            }
        }
        best
    }
}

impl FunctionOracle for ConstraintMax {
    fn dim(&self) -> usize {
        self.parts[0].dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.active(x).0
    }

    fn value_and_subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let (v, i) = self.active(x);
        self.parts[i].value_and_subgradient(x, grad);
        v
    }

    fn weak_convexity(&self) -> f64 {
        self.parts.iter().map(|p| p.weak_convexity()).fold(0.0, f64::max)
    }

    fn subgradient_bound(&self) -> f64 {
        self.parts.iter().map(|p| p.subgradient_bound()).fold(0.0, f64::max)
    }

    fn data_size(&self) -> usize {
        self.parts.iter().map(|p| p.data_size()).max().unwrap_or(1)
    }
}

/// One sampled failure of a declared problem constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `||zeta|| > bound` at `point` for oracle `oracle`.
    SubgradientBound {
        oracle: usize,
        point: Vector,
        norm: f64,
        bound: f64,
    },
    /// The weak-convexity lower model failed on a sampled pair.
    WeakConvexity {
        oracle: usize,
        x: Vector,
        anchor: Vector,
        gap: f64,
    },
    /// Problem-level `rho` or `M` below a declared per-oracle value.
    ConstantBelowDeclared {
        constant: &'static str,
        problem_value: f64,
        oracle: usize,
        declared: f64,
    },
    StochasticValueBound {
        point: Vector,
        norm: f64,
        bound: f64,
    },
    StochasticGradientBound {
        oracle: usize,
        point: Vector,
        norm: f64,
        bound: f64,
    },
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Non-fatal remarks carried over from the problem definition.
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} samples, {} violations",
            self.samples,
            self.violations.len()
        )?;
        for v in self.violations.iter().take(20) {
            writeln!(f, "  violation: {v:?}")?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        Ok(())
    }
}

/// Draws a point of the domain: a projected box sample pulled towards a
/// second projected sample, so both interior and boundary points occur.
pub(crate) fn sample_domain_point(domain: &ConvexDomain, dim: usize, rng: &mut dyn RngCore) -> Vector {
    let draw = |rng: &mut dyn RngCore| -> Vector {
        match domain {
            ConvexDomain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                .collect(),
            ConvexDomain::L1Ball { radius }
            | ConvexDomain::L2Ball { radius }
            | ConvexDomain::L2BallProduct { radius, .. } => {
                let x: Vector = (0..dim)
                    .map(|_| radius * (2.0 * rng.random::<f64>() - 1.0))
                    .collect();
                domain.project(&x)
            }
        }
    };
    let a = draw(rng);
    let b = draw(rng);
    let t: f64 = rng.random();
    a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect()
}

/// Spot-checks the declared constants on `n_samples` sampled points.
///
/// Checks subgradient bounds, the weak-convexity inequality on sampled
/// pairs, and the stochastic bounds when samplers exist. Violations are
/// reported, never corrected.
pub fn validate_problem(p: &ConstrainedProblem, n_samples: usize, seed: u64) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ValidationReport {
        samples: n_samples,
        notes: p.notes().to_vec(),
        ..Default::default()
    };
    let m = p.num_constraints();

    for i in 0..=m {
        let o = p.oracle(i);
        if o.weak_convexity() > p.rho() {
            report.violations.push(Violation::ConstantBelowDeclared {
                constant: "rho",
                problem_value: p.rho(),
                oracle: i,
                declared: o.weak_convexity(),
            });
        }
        if o.subgradient_bound() > p.lipschitz() {
            report.violations.push(Violation::ConstantBelowDeclared {
                constant: "M",
                problem_value: p.lipschitz(),
                oracle: i,
                declared: o.subgradient_bound(),
            });
        }
    }

    let dim = p.dim();
    let mut gx = vec![0.0; dim];
    let mut gy = vec![0.0; dim];
    let mut thetas = vec![0.0; m];
    for _ in 0..n_samples {
        let x = sample_domain_point(p.domain(), dim, &mut rng);
        let y = sample_domain_point(p.domain(), dim, &mut rng);
        for i in 0..=m {
            let o = p.oracle(i);
            let fx = o.value_and_subgradient(&x, &mut gx);
            let fy = o.value_and_subgradient(&y, &mut gy);
            let bound = o.subgradient_bound();
            let nx = norm(&gx);
            if nx > bound * (1.0 + 1e-9) + 1e-12 {
                report.violations.push(Violation::SubgradientBound {
                    oracle: i,
                    point: x.clone(),
                    norm: nx,
                    bound,
                });
            }
            // f(x) >= f(y) + zeta_y^T (x - y) - rho/2 ||x - y||^2
            let lin: f64 = gy.iter().zip(x.iter().zip(&y)).map(|(g, (a, b))| g * (a - b)).sum();
            let gap = fx - fy - lin + 0.5 * o.weak_convexity() * dist_sq(&x, &y);
            let tol = 1e-9 * (1.0 + fx.abs() + fy.abs() + lin.abs());
            if gap < -tol {
                report.violations.push(Violation::WeakConvexity {
                    oracle: i,
                    x: x.clone(),
                    anchor: y.clone(),
                    gap,
                });
            }
            if let Some(s) = o.stochastic() {
                let theta = s.sample(&x, &mut rng, &mut gx);
                if i > 0 {
                    thetas[i - 1] = theta;
                }
                let nz = norm(&gx);
                if nz > s.gradient_bound() * (1.0 + 1e-9) + 1e-12 {
                    report.violations.push(Violation::StochasticGradientBound {
                        oracle: i,
                        point: x.clone(),
                        norm: nz,
                        bound: s.gradient_bound(),
                    });
                }
            }
        }
        if m > 0 {
            if let Some(m0) = p.stochastic_value_bound() {
                let nt = norm(&thetas);
                if nt > m0 * (1.0 + 1e-9) + 1e-12 {
                    report.violations.push(Violation::StochasticValueBound {
                        point: x.clone(),
                        norm: nt,
                        bound: m0,
                    });
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct Affine {
        coef: Vector,
        offset: f64,
    }

    impl FunctionOracle for Affine {
        fn dim(&self) -> usize {
            self.coef.len()
        }
        fn value(&self, x: &[f64]) -> f64 {
            dot(&self.coef, x) + self.offset
        }
        fn value_and_subgradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
            grad.copy_from_slice(&self.coef);
            self.value(x)
        }
        fn weak_convexity(&self) -> f64 {
            0.0
        }
        fn subgradient_bound(&self) -> f64 {
            norm(&self.coef).max(1e-12)
        }
    }

    fn affine(coef: &[f64], offset: f64) -> Arc<dyn FunctionOracle> {
        Arc::new(Affine {
            coef: coef.to_vec(),
            offset,
        })
    }

    fn two_constraint_problem(c1: Arc<dyn FunctionOracle>, c2: Arc<dyn FunctionOracle>) -> ConstrainedProblem {
        ConstrainedProblem::builder("t", affine(&[0.0, 1.0], 0.0), ConvexDomain::l2_ball(10.0))
            .constraint(c1)
            .constraint(c2)
            .build()
            .unwrap()
    }

    #[test]
    fn tie_picks_smallest_index() {
        let p = two_constraint_problem(affine(&[1.0, 0.0], 0.0), affine(&[1.0, 0.0], 0.0));
        assert_eq!(p.eval_constraint_max(&[3.0, 0.0]).unwrap(), (3.0, 0));
    }

    #[test]
    fn dominant_constraint_wins() {
        let p = two_constraint_problem(affine(&[0.0, 0.0], -1.0), affine(&[0.0, 0.0], 2.0));
        assert_eq!(p.eval_constraint_max(&[0.4, -0.2]).unwrap(), (2.0, 1));
    }

    #[test]
    fn tie_subgradient_from_lower_index() {
        let p = two_constraint_problem(affine(&[1.0, 0.0], 0.0), affine(&[1.0, 0.0], 0.0));
        let q = ConstrainedProblem::builder("t", affine(&[0.0, 1.0], 0.0), ConvexDomain::l2_ball(10.0))
            .constraint(affine(&[1.0, 2.0], 0.0))
            .constraint(affine(&[3.0, 0.0], -1.0))
            .build()
            .unwrap();
        // at x = (0.5, 0.25) both equal 1.0 and 0.5; choose a real tie instead
        assert_eq!(p.subgrad_constraint_max(&[1.0, 1.0]).unwrap(), vec![1.0, 0.0]);
        let x = [1.0, 0.5]; // f1 = 2, f2 = 2
        assert_eq!(q.eval_constraint_max(&x).unwrap(), (2.0, 0));
        assert_eq!(q.subgrad_constraint_max(&x).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn single_constraint_subgradient() {
        let p = ConstrainedProblem::builder("t", affine(&[0.0, 1.0], 0.0), ConvexDomain::l2_ball(1.0))
            .constraint(affine(&[2.0, -1.0], 0.5))
            .build()
            .unwrap();
        assert_eq!(p.subgrad_constraint_max(&[0.1, 0.1]).unwrap(), vec![2.0, -1.0]);
    }

    #[test]
    fn unconstrained_is_signalled() {
        let p = ConstrainedProblem::builder("t", affine(&[1.0], 0.0), ConvexDomain::l2_ball(1.0))
            .build()
            .unwrap();
        assert!(matches!(p.eval_constraint_max(&[0.0]), Err(Error::Unconstrained)));
        assert_eq!(p.constraint_value(&[0.0]), None);
    }

    #[test]
    fn convex_unconstrained_validates_clean() {
        let q = Quadratic::diagonal(&[1.0, 1.0], vec![0.0, 0.0], 0.0)
            .with_subgradient_bound(1.0)
            .with_value_bound(0.5);
        let p = ConstrainedProblem::builder("q", Arc::new(q), ConvexDomain::l2_ball(1.0))
            .build()
            .unwrap();
        let r = validate_problem(&p, 1000, 3);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn understated_bound_is_reported() {
        let q = Quadratic::diagonal(&[1.0, 1.0], vec![0.0, 0.0], 0.0).with_subgradient_bound(0.1);
        let p = ConstrainedProblem::builder("q", Arc::new(q), ConvexDomain::l2_ball(1.0))
            .build()
            .unwrap();
        let r = validate_problem(&p, 200, 3);
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SubgradientBound { .. })));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let err = ConstrainedProblem::builder("t", affine(&[0.0, 1.0], 0.0), ConvexDomain::l2_ball(1.0))
            .constraint(affine(&[1.0], 0.0))
            .build()
            .unwrap_err();
        assert!(matches!(err, Error::Dimension { expected: 2, got: 1 }));
    }

    #[test]
    fn sampled_points_lie_in_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for d in [
            ConvexDomain::l1_ball(1.0),
            ConvexDomain::l2_ball(2.0),
            ConvexDomain::boxed(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0]),
        ] {
            for _ in 0..500 {
                let x = sample_domain_point(&d, 3, &mut rng);
                assert!(d.contains(&x, 1e-12));
            }
        }
    }
}
