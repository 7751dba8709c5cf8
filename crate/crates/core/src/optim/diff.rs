//! Closed-form derivatives of the ball operations used by the probe losses.

use crate::geometry::{artanh, dot, norm_sq, EPS_BOUNDARY, EPS_DIV};

/// `d(x, y)` through the arcosh closed form, with the gradients of `d²`
/// with respect to both arguments.
pub fn sq_distance_with_grad(x: &[f64], y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let (alpha, beta, delta, gamma) = arcosh_terms(x, y);
    let d = gamma.acosh();
    // d / sqrt(γ² − 1) tends to 1 as the points coincide.
    let ratio = if gamma - 1.0 < 1e-12 {
        1.0
    } else {
        d / ((gamma - 1.0) * (gamma + 1.0)).sqrt()
    };
    let (gx, gy) = gamma_grads(x, y, alpha, beta, delta);
    let s = 2.0 * ratio;
    (
        d * d,
        gx.iter().map(|g| s * g).collect(),
        gy.iter().map(|g| s * g).collect(),
    )
}

/// `d(x, y)` and its gradients. The gradient is set to zero where the points
/// coincide, since the distance is not differentiable there.
pub fn distance_with_grad(x: &[f64], y: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
    let (alpha, beta, delta, gamma) = arcosh_terms(x, y);
    let d = gamma.acosh();
    if delta < 1e-30 {
        return (d, vec![0.0; x.len()], vec![0.0; y.len()]);
    }
    let inv = 1.0 / ((gamma - 1.0) * (gamma + 1.0)).sqrt();
    let (gx, gy) = gamma_grads(x, y, alpha, beta, delta);
    (
        d,
        gx.iter().map(|g| inv * g).collect(),
        gy.iter().map(|g| inv * g).collect(),
    )
}

fn arcosh_terms(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let alpha = (1.0 - norm_sq(x)).max(EPS_DIV);
    let beta = (1.0 - norm_sq(y)).max(EPS_DIV);
    let delta: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let gamma = 1.0 + 2.0 * delta / (alpha * beta);
    (alpha, beta, delta, gamma)
}

fn gamma_grads(x: &[f64], y: &[f64], alpha: f64, beta: f64, delta: f64) -> (Vec<f64>, Vec<f64>) {
    let c = 4.0 / (alpha * beta);
    let cx = 4.0 * delta / (alpha * alpha * beta);
    let cy = 4.0 * delta / (alpha * beta * beta);
    let gx = x.iter().zip(y).map(|(a, b)| c * (a - b) + cx * a).collect();
    let gy = x.iter().zip(y).map(|(a, b)| c * (b - a) + cy * b).collect();
    (gx, gy)
}

/// Backward pass of `y = A ⊗ x` for fixed `x`: given `u = A x` and the
/// upstream gradient `∂L/∂y`, returns `∂L/∂u`. The caller forms
/// `∂L/∂A = (∂L/∂u) xᵀ`.
pub fn mobius_scale_backward(u: &[f64], x_norm: f64, upstream: &[f64]) -> Vec<f64> {
    let t = norm_sq(u).sqrt();
    if x_norm < EPS_DIV {
        return vec![0.0; u.len()];
    }
    let r = x_norm.min(1.0 - EPS_BOUNDARY);
    let a = artanh(r) / x_norm;
    let at = a * t;
    let (g, gp_over_t) = if at < 1e-3 {
        let a3 = a * a * a;
        (
            a - a3 * t * t / 3.0,
            -2.0 * a3 / 3.0 + 8.0 * a3 * a * a * t * t / 15.0,
        )
    } else {
        let th = at.tanh();
        let sech2 = 1.0 - th * th;
        (th / t, (at * sech2 - th) / (t * t * t))
    };
    let ug = dot(u, upstream);
    u.iter()
        .zip(upstream)
        .map(|(ui, gi)| g * gi + gp_over_t * ug * ui)
        .collect()
}
