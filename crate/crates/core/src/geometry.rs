//! Euclidean projections onto the supported compact convex domains.
//!
//! Every projection returns a point that is already feasible unchanged, bit
//! for bit, so `project(project(x)) == project(x)` holds exactly.

use crate::linalg::{norm, norm1, Vector};

/// A compact convex set `X` together with its exact diameter.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexDomain {
    /// `{x : ||x||_1 <= radius}`
    L1Ball { radius: f64 },
    /// `{x : ||x||_2 <= radius}`
    L2Ball { radius: f64 },
    /// `{x : lower <= x <= upper}` componentwise.
    Box { lower: Vector, upper: Vector },
    /// Product of `||x_k||_2 <= radius` over consecutive blocks of length `block`.
    L2BallProduct { block: usize, radius: f64 },
}

impl ConvexDomain {
    pub fn l1_ball(radius: f64) -> Self {
        assert!(radius > 0.0 && radius.is_finite(), "radius must be positive");
        Self::L1Ball { radius }
    }

    pub fn l2_ball(radius: f64) -> Self {
        assert!(radius > 0.0 && radius.is_finite(), "radius must be positive");
        Self::L2Ball { radius }
    }

    pub fn boxed(lower: Vector, upper: Vector) -> Self {
        assert_eq!(lower.len(), upper.len(), "box bounds differ in length");
        assert!(
            lower.iter().zip(&upper).all(|(l, u)| l <= u),
            "box lower bound exceeds upper bound"
        );
        Self::Box { lower, upper }
    }

    pub fn l2_ball_product(block: usize, radius: f64) -> Self {
        assert!(block >= 1);
        assert!(radius > 0.0 && radius.is_finite(), "radius must be positive");
        Self::L2BallProduct { block, radius }
    }

    /// Exact diameter `max ||x - x'||` over the set, for points of dimension `dim`.
    ///
    /// Balls do not depend on `dim`; for the block product it fixes the
    /// number of blocks.
    pub fn diameter(&self, dim: usize) -> f64 {
        match self {
            Self::L1Ball { radius } | Self::L2Ball { radius } => 2.0 * radius,
            Self::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) * (u - l))
                .sum::<f64>()
                .sqrt(),
            Self::L2BallProduct { block, radius } => {
                let blocks = dim.div_ceil(*block);
                2.0 * radius * (blocks as f64).sqrt()
            }
        }
    }

    /// Whether `x` satisfies the defining inequalities up to `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Self::L1Ball { radius } => norm1(x) <= radius + tol,
            Self::L2Ball { radius } => norm(x) <= radius + tol,
            Self::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            Self::L2BallProduct { block, radius } => {
                x.chunks(*block).all(|b| norm(b) <= radius + tol)
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &[f64]) -> Vector {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }

    /// In-place Euclidean projection.
    pub fn project_in_place(&self, x: &mut [f64]) {
        debug_assert!(x.iter().all(|v| v.is_finite()), "projection of a non-finite point");
        match self {
            Self::L1Ball { radius } => project_l1_ball(x, *radius),
            Self::L2Ball { radius } => project_l2_ball(x, *radius),
            Self::Box { lower, upper } => {
                assert_eq!(x.len(), lower.len(), "box dimension mismatch");
                for (v, (l, u)) in x.iter_mut().zip(lower.iter().zip(upper)) {
                    *v = v.clamp(*l, *u);
                }
            }
            Self::L2BallProduct { block, radius } => {
                for b in x.chunks_mut(*block) {
                    project_l2_ball(b, *radius);
                }
            }
        }
    }
}

// Rounding slack on the feasibility test; keeps outputs of a projection
// recognised as feasible on re-projection.
fn ball_slack(radius: f64, dim: usize) -> f64 {
    8.0 * f64::EPSILON * radius.max(1.0) * dim.max(1) as f64
}

fn project_l2_ball(x: &mut [f64], radius: f64) {
    let n = norm(x);
    if n <= radius + ball_slack(radius, x.len()) {
        return;
    }
    let scale = radius / n;
    for v in x.iter_mut() {
        *v *= scale;
    }
}

/// Sort-and-threshold projection onto the l1 ball.
///
/// Sort magnitudes in decreasing order, find the largest prefix length `j`
/// with `u_j > (sum_{i<=j} u_i - r) / j`, then soft-threshold every
/// coordinate at that level.
fn project_l1_ball(x: &mut [f64], radius: f64) {
    let slack = ball_slack(radius, x.len());
    // A pass can overshoot by a few ulps; a repeat pass removes the excess.
    for _ in 0..4 {
        if norm1(x) <= radius + slack {
            return;
        }
        soft_threshold_l1(x, radius);
    }
}

fn soft_threshold_l1(x: &mut [f64], radius: f64) {
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));

    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in mags.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - radius) / (j + 1) as f64;
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    for v in x.iter_mut() {
        let shrunk = (v.abs() - theta).max(0.0);
        *v = shrunk.copysign(*v);
    }
}
