//! Adam for Euclidean matrices and Riemannian Adam for ball-valued
//! parameters, plus a central-difference gradient checker.
//!
//! The Riemannian variant keeps its moment buffers in ambient tangent
//! coordinates and carries them between steps without parallel transport.

pub mod diff;

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{conformal_factor, mobius_add_raw, norm_sq, PoincarePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimError {
    #[error("non-finite gradient in `{0}`")]
    NonFinite(String),
    #[error("gradient shape mismatch for `{0}`")]
    Shape(String),
    #[error("learning rate must be positive")]
    InvalidLearningRate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if !(self.lr > 0.0) {
            return Err(OptimError::InvalidLearningRate);
        }
        Ok(())
    }
}

/// Named trainable parameters: Euclidean matrices and lists of ball points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    pub euclidean: BTreeMap<String, Array2<f64>>,
    pub hyperbolic: BTreeMap<String, Vec<PoincarePoint>>,
}

/// Euclidean gradients with the same layout as a [`ParamSet`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamGrads {
    pub euclidean: BTreeMap<String, Array2<f64>>,
    pub hyperbolic: BTreeMap<String, Vec<Vec<f64>>>,
}

impl ParamGrads {
    pub fn zeros_like(params: &ParamSet) -> Self {
        Self {
            euclidean: params
                .euclidean
                .iter()
                .map(|(k, m)| (k.clone(), Array2::zeros(m.raw_dim())))
                .collect(),
            hyperbolic: params
                .hyperbolic
                .iter()
                .map(|(k, pts)| (k.clone(), pts.iter().map(|p| vec![0.0; p.dim()]).collect()))
                .collect(),
        }
    }

    /// In-place `self += scale * other`.
    pub fn add_scaled(&mut self, other: &ParamGrads, scale: f64) {
        for (k, g) in &other.euclidean {
            if let Some(acc) = self.euclidean.get_mut(k) {
                acc.scaled_add(scale, g);
            }
        }
        for (k, g) in &other.hyperbolic {
            if let Some(acc) = self.hyperbolic.get_mut(k) {
                for (a, b) in acc.iter_mut().zip(g) {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
                }
            }
        }
    }
}

/// Riemannian gradient on the ball: the Euclidean gradient scaled by the
/// inverse metric `(1 / λ_x)²`.
pub fn riemannian_grad(x: &PoincarePoint, euclid_grad: &[f64]) -> Result<Vec<f64>, crate::geometry::GeometryError> {
    if euclid_grad.len() != x.dim() {
        return Err(crate::geometry::GeometryError::DimensionMismatch {
            expected: x.dim(),
            actual: euclid_grad.len(),
        });
    }
    let s = ((1.0 - x.norm_sq()) / 2.0).powi(2);
    Ok(euclid_grad.iter().map(|g| g * s).collect())
}

/// Exponential map `exp_x(v) = x ⊕ tanh(λ_x ‖v‖ / 2) v / ‖v‖`.
pub fn exp_map(x: &PoincarePoint, v: &[f64]) -> PoincarePoint {
    let vn = norm_sq(v).sqrt();
    if vn == 0.0 {
        return x.clone();
    }
    let s = (conformal_factor(x) * vn / 2.0).tanh() / vn;
    let step: Vec<f64> = v.iter().map(|c| c * s).collect();
    PoincarePoint::projected(mobius_add_raw(x.coords(), &step))
}

/// First and second moment buffers plus the step counter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AdamState {
    pub step: u64,
    m_euclid: BTreeMap<String, Array2<f64>>,
    v_euclid: BTreeMap<String, Array2<f64>>,
    m_hyper: BTreeMap<String, Vec<Vec<f64>>>,
    v_hyper: BTreeMap<String, Vec<Vec<f64>>>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

fn check_finite<'a>(name: &str, mut vals: impl Iterator<Item = &'a f64>) -> Result<(), OptimError> {
    if vals.any(|v| !v.is_finite()) {
        return Err(OptimError::NonFinite(name.to_string()));
    }
    Ok(())
}

/// One Adam step: plain Adam on Euclidean entries, Riemannian Adam with an
/// exponential-map retraction on ball points. Parameters without a gradient
/// entry are left untouched.
pub fn adam_step(
    params: &ParamSet,
    grads: &ParamGrads,
    state: &mut AdamState,
    cfg: &OptimConfig,
) -> Result<ParamSet, OptimError> {
    cfg.validate()?;
    for (name, g) in &grads.euclidean {
        let p = params.euclidean.get(name).ok_or_else(|| OptimError::Shape(name.clone()))?;
        if p.raw_dim() != g.raw_dim() {
            return Err(OptimError::Shape(name.clone()));
        }
        check_finite(name, g.iter())?;
    }
    for (name, g) in &grads.hyperbolic {
        let p = params.hyperbolic.get(name).ok_or_else(|| OptimError::Shape(name.clone()))?;
        if p.len() != g.len() || p.iter().zip(g).any(|(a, b)| a.dim() != b.len()) {
            return Err(OptimError::Shape(name.clone()));
        }
        check_finite(name, g.iter().flatten())?;
    }

    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let mut out = params.clone();

    for (name, g) in &grads.euclidean {
        let m = state
            .m_euclid
            .entry(name.clone())
            .or_insert_with(|| Array2::zeros(g.raw_dim()));
        let v = state
            .v_euclid
            .entry(name.clone())
            .or_insert_with(|| Array2::zeros(g.raw_dim()));
        let p = out.euclidean.get_mut(name).expect("checked above");
        ndarray::Zip::from(p).and(m).and(v).and(g).for_each(|p, m, v, &g| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= cfg.lr * (*m / bc1) / ((*v / bc2).sqrt() + cfg.eps);
        });
    }

    for (name, g) in &grads.hyperbolic {
        let pts = out.hyperbolic.get_mut(name).expect("checked above");
        let m = state
            .m_hyper
            .entry(name.clone())
            .or_insert_with(|| g.iter().map(|r| vec![0.0; r.len()]).collect());
        let v = state
            .v_hyper
            .entry(name.clone())
            .or_insert_with(|| g.iter().map(|r| vec![0.0; r.len()]).collect());
        for (((x, gx), mx), vx) in pts.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            let rg = riemannian_grad(x, gx).expect("checked above");
            let mut dir = vec![0.0; rg.len()];
            for i in 0..rg.len() {
                mx[i] = cfg.beta1 * mx[i] + (1.0 - cfg.beta1) * rg[i];
                vx[i] = cfg.beta2 * vx[i] + (1.0 - cfg.beta2) * rg[i] * rg[i];
                dir[i] = -cfg.lr * (mx[i] / bc1) / ((vx[i] / bc2).sqrt() + cfg.eps);
            }
            *x = exp_map(x, &dir);
        }
    }
    Ok(out)
}

/// Per-parameter result of a finite-difference comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    pub worst: Option<String>,
    pub passed: bool,
}

pub const FD_STEP: f64 = 1e-5;

/// Compares the analytic gradient returned by `loss_fn` against two-sided
/// differences with step [`FD_STEP`]. Coordinates whose analytic gradient has
/// magnitude at most `1e-6` are skipped.
pub fn check_gradient<F>(loss_fn: F, params: &ParamSet, tol: f64) -> GradCheckReport
where
    F: Fn(&ParamSet) -> (f64, ParamGrads),
{
    let (_, analytic) = loss_fn(params);
    let mut max_rel_err: f64 = 0.0;
    let mut checked = 0;
    let mut worst = None;
    let mut record = |label: String, a: f64, n: f64| {
        if a.abs() <= 1e-6 {
            return;
        }
        checked += 1;
        let rel = (a - n).abs() / a.abs().max(n.abs());
        if rel > max_rel_err || rel.is_nan() {
            max_rel_err = if rel.is_nan() { f64::INFINITY } else { rel };
            worst = Some(format!("{label}: analytic {a:e}, numeric {n:e}"));
        }
    };

    for (name, g) in &analytic.euclidean {
        let base = &params.euclidean[name];
        for (idx, &a) in g.indexed_iter() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus.euclidean.get_mut(name).unwrap()[idx] = base[idx] + FD_STEP;
            minus.euclidean.get_mut(name).unwrap()[idx] = base[idx] - FD_STEP;
            let n = (loss_fn(&plus).0 - loss_fn(&minus).0) / (2.0 * FD_STEP);
            record(format!("{name}{idx:?}"), a, n);
        }
    }
    for (name, g) in &analytic.hyperbolic {
        for (pi, row) in g.iter().enumerate() {
            for (ci, &a) in row.iter().enumerate() {
                let shifted = |delta: f64| {
                    let mut p = params.clone();
                    let pt = &mut p.hyperbolic.get_mut(name).unwrap()[pi];
                    let mut c = pt.coords().to_vec();
                    c[ci] += delta;
                    *pt = PoincarePoint::projected(c);
                    p
                };
                let n = (loss_fn(&shifted(FD_STEP)).0 - loss_fn(&shifted(-FD_STEP)).0) / (2.0 * FD_STEP);
                record(format!("{name}[{pi}][{ci}]"), a, n);
            }
        }
    }
    GradCheckReport {
        max_rel_err,
        checked,
        worst,
        passed: max_rel_err < tol,
    }
}
