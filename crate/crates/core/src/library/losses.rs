//! Scalar losses: the truncated logistic loss and the sigmoid.

use crate::linalg::{dot, Vector};

/// `log(1 + exp(t))` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `exp(t) / (1 + exp(t))` without overflow.
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid'(t) = sigmoid(t)(1 - sigmoid(t))`
pub fn sigmoid_derivative(t: f64) -> f64 {
    let s = sigmoid(t);
    s * (1.0 - s)
}

/// Largest `|sigmoid''|`, attained at `t = ln(2 +- sqrt 3)`.
pub const SIGMOID_CURVATURE: f64 = 0.096_225_044_864_937_63; // 1 / (6 sqrt 3)

/// `phi_alpha(s) = alpha log(1 + s / alpha)`
pub fn truncate(s: f64, alpha: f64) -> f64 {
    alpha * (s / alpha).ln_1p()
}

/// Truncated logistic loss of a margin `t = b a^T x`:
/// `phi_alpha(log(1 + exp(-t)))`.
pub fn truncated_logistic_of_margin(t: f64, alpha: f64) -> f64 {
    truncate(softplus(-t), alpha)
}

/// Derivative in the margin: `-sigmoid(-t) / (1 + log(1 + exp(-t)) / alpha)`.
pub fn truncated_logistic_margin_derivative(t: f64, alpha: f64) -> f64 {
    -sigmoid(-t) / (1.0 + softplus(-t) / alpha)
}

/// Value and margin derivative in one pass.
pub fn truncated_logistic_with_derivative(t: f64, alpha: f64) -> (f64, f64) {
    let l = softplus(-t);
    (truncate(l, alpha), -sigmoid(-t) / (1.0 + l / alpha))
}

pub fn truncated_logistic_value(x: &[f64], a: &[f64], b: f64, alpha: f64) -> f64 {
    truncated_logistic_of_margin(b * dot(a, x), alpha)
}

/// `b a phi'(l) l'(t)` at `t = b a^T x`.
pub fn truncated_logistic_subgrad(x: &[f64], a: &[f64], b: f64, alpha: f64) -> Vector {
    let d = truncated_logistic_margin_derivative(b * dot(a, x), alpha);
    a.iter().map(|ai| b * d * ai).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn value_at_zero() {
        let v = truncated_logistic_value(&[0.0, 0.0], &[1.0, -2.0], 1.0, 2.0);
        let reference = 2.0 * (1.0 + std::f64::consts::LN_2 / 2.0).ln();
        assert!((v - reference).abs() < 1e-15);
        assert!((v - 0.595_126_569_575_172_4).abs() < 1e-15);
    }

    #[test]
    fn saturation() {
        let x = [1e4];
        assert!(truncated_logistic_value(&x, &[1.0], 1.0, 2.0) < 1e-300);
        assert!(truncated_logistic_subgrad(&x, &[1.0], 1.0, 2.0)[0].abs() < 1e-300);
        // the other side stays finite
        let v = truncated_logistic_value(&x, &[1.0], -1.0, 2.0);
        assert!(v.is_finite() && v > 0.0);
        assert!(truncated_logistic_subgrad(&x, &[1.0], -1.0, 2.0)[0].is_finite());
    }

    #[test]
    fn sigmoid_curvature_constant() {
        assert!((SIGMOID_CURVATURE - 1.0 / (6.0 * 3f64.sqrt())).abs() < 1e-16);
        let t = (2.0 + 3f64.sqrt()).ln();
        let s = sigmoid(t);
        assert!((s * (1.0 - s) * (1.0 - 2.0 * s)).abs() - SIGMOID_CURVATURE < 1e-15);
    }

    proptest! {
        #[test]
        fn margin_derivative_matches_difference(t in -30.0f64..30.0) {
            let h = 1e-6;
            let fd = (truncated_logistic_of_margin(t + h, 2.0) - truncated_logistic_of_margin(t - h, 2.0)) / (2.0 * h);
            let an = truncated_logistic_margin_derivative(t, 2.0);
            prop_assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3));
        }

        #[test]
        fn bounded_nonnegative_nonincreasing(t in -50.0f64..50.0, dt in 0.0f64..5.0) {
            let a = truncated_logistic_of_margin(t, 2.0);
            let b = truncated_logistic_of_margin(t + dt, 2.0);
            prop_assert!(a >= 0.0 && b <= a);
            // bounded on bounded margins: at most phi(log(1 + e^50))
            prop_assert!(a <= truncate(softplus(50.0), 2.0));
        }

        #[test]
        fn sigmoid_stable(t in -800.0f64..800.0) {
            let s = sigmoid(t);
            prop_assert!((0.0..=1.0).contains(&s));
            prop_assert!((s + sigmoid(-t) - 1.0).abs() < 1e-15);
        }
    }
}
