//! Poincaré ball operations at fixed curvature `c = 1`.
//!
//! Every constructor and operation that produces a [`PoincarePoint`] re-projects
//! its result to norm `<= 1 - eps_boundary`, so downstream `artanh` calls stay
//! finite.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Margin kept between every ball point and the unit sphere.
pub const EPS_BOUNDARY: f64 = 1e-5;
/// Guard used wherever a norm appears in a denominator.
pub const EPS_DIV: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("point has squared norm {norm_sq} which is outside the open unit ball")]
    OutsideBall { norm_sq: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("empty input")]
    Empty,
    #[error("weights must be non-negative with a positive sum")]
    InvalidWeights,
    #[error("dimension must be positive")]
    ZeroDimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallConfig {
    pub eps_boundary: f64,
    pub eps_div: f64,
}

impl Default for BallConfig {
    fn default() -> Self {
        Self {
            eps_boundary: EPS_BOUNDARY,
            eps_div: EPS_DIV,
        }
    }
}

impl BallConfig {
    pub fn max_norm(&self) -> f64 {
        1.0 - self.eps_boundary
    }
}

/// A point strictly inside the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PoincarePoint {
    coords: Vec<f64>,
}

impl TryFrom<Vec<f64>> for PoincarePoint {
    type Error = GeometryError;

    fn try_from(coords: Vec<f64>) -> Result<Self, Self::Error> {
        PoincarePoint::new(coords)
    }
}

impl From<PoincarePoint> for Vec<f64> {
    fn from(p: PoincarePoint) -> Self {
        p.coords
    }
}

impl PoincarePoint {
    /// Validates `coords` without modifying them. Points closer to the boundary
    /// than the configured margin are pulled back onto it.
    pub fn new(coords: Vec<f64>) -> Result<Self, GeometryError> {
        if coords.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let norm_sq = norm_sq(&coords);
        if norm_sq >= 1.0 {
            return Err(GeometryError::OutsideBall { norm_sq });
        }
        Ok(Self::projected(coords))
    }

    /// Radially rescales arbitrary finite coordinates into the ball.
    pub fn projected(mut coords: Vec<f64>) -> Self {
        project_in_place(&mut coords, EPS_BOUNDARY);
        Self { coords }
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        norm_sq(&self.coords).sqrt()
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.coords)
    }

    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    fn check_dim(&self, other: &Self) -> Result<(), GeometryError> {
        if self.dim() != other.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Rescales `v` to norm `1 - eps` when it reaches past that radius.
pub(crate) fn project_in_place(v: &mut [f64], eps: f64) {
    let max = 1.0 - eps;
    let n = norm_sq(v).sqrt();
    if n > max {
        let s = max / n;
        v.iter_mut().for_each(|c| *c *= s);
    }
}

pub(crate) fn artanh(x: f64) -> f64 {
    0.5 * ((1.0 + x) / (1.0 - x)).ln()
}

/// Möbius addition `x ⊕ y`.
pub fn mobius_add(x: &PoincarePoint, y: &PoincarePoint) -> Result<PoincarePoint, GeometryError> {
    x.check_dim(y)?;
    Ok(PoincarePoint::projected(mobius_add_raw(&x.coords, &y.coords)))
}

pub(crate) fn mobius_add_raw(x: &[f64], y: &[f64]) -> Vec<f64> {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let a = 1.0 + 2.0 * xy + y2;
    let b = 1.0 - x2;
    let den = (1.0 + 2.0 * xy + x2 * y2).max(EPS_DIV);
    x.iter()
        .zip(y)
        .map(|(xi, yi)| (a * xi + b * yi) / den)
        .collect()
}

/// Geodesic distance `2 artanh ‖(−x) ⊕ y‖`.
pub fn distance(x: &PoincarePoint, y: &PoincarePoint) -> Result<f64, GeometryError> {
    x.check_dim(y)?;
    Ok(distance_raw(&x.coords, &y.coords))
}

pub(crate) fn distance_raw(x: &[f64], y: &[f64]) -> f64 {
    let neg_x: Vec<f64> = x.iter().map(|c| -c).collect();
    let diff = mobius_add_raw(&neg_x, y);
    let r = norm_sq(&diff).sqrt().min(1.0 - EPS_BOUNDARY);
    2.0 * artanh(r)
}

/// Distance from the origin, `2 artanh ‖x‖`.
pub fn distance_to_origin(x: &PoincarePoint) -> f64 {
    2.0 * artanh(x.norm().min(1.0 - EPS_BOUNDARY))
}

/// Möbius matrix-vector product `A ⊗ x` for `A` of shape `p × m`.
pub fn mobius_matvec(a: &Array2<f64>, x: &PoincarePoint) -> Result<PoincarePoint, GeometryError> {
    if a.ncols() != x.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: a.ncols(),
            actual: x.dim(),
        });
    }
    let ax = a.dot(&ArrayView1::from(x.coords()));
    let out = mobius_scale(ax.as_slice().expect("contiguous"), x.norm());
    Ok(PoincarePoint::projected(out))
}

/// Maps `ax = A x` to `tanh(‖Ax‖/‖x‖ · artanh ‖x‖) · Ax/‖Ax‖`; zero in the
/// degenerate cases.
pub(crate) fn mobius_scale(ax: &[f64], x_norm: f64) -> Vec<f64> {
    let ax_norm = norm_sq(ax).sqrt();
    if x_norm < EPS_DIV || ax_norm < EPS_DIV {
        return vec![0.0; ax.len()];
    }
    let r = x_norm.min(1.0 - EPS_BOUNDARY);
    let s = (ax_norm / x_norm * artanh(r)).tanh() / ax_norm;
    ax.iter().map(|c| c * s).collect()
}

/// Conformal factor `λ_x = 2 / (1 − ‖x‖²)`.
pub fn conformal_factor(x: &PoincarePoint) -> f64 {
    2.0 / (1.0 - x.norm_sq())
}

/// Weighted Einstein midpoint: Klein coordinates averaged with Lorentz-factor
/// weights, mapped back to the ball.
pub fn gyromidpoint(points: &[PoincarePoint], weights: &[f64]) -> Result<PoincarePoint, GeometryError> {
    let first = points.first().ok_or(GeometryError::Empty)?;
    if weights.len() != points.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: points.len(),
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(GeometryError::InvalidWeights);
    }
    if points.len() == 1 {
        return Ok(first.clone());
    }
    let dim = first.dim();
    let mut num = vec![0.0; dim];
    let mut den = 0.0;
    for (p, &w) in points.iter().zip(weights) {
        first.check_dim(p)?;
        let p2 = p.norm_sq();
        let scale = 2.0 / (1.0 + p2);
        let k2 = p2 * scale * scale;
        let gamma = 1.0 / (1.0 - k2).max(EPS_DIV).sqrt();
        for (acc, c) in num.iter_mut().zip(p.coords()) {
            *acc += w * gamma * scale * c;
        }
        den += w * gamma;
    }
    let klein: Vec<f64> = num.iter().map(|c| c / den).collect();
    let k2 = norm_sq(&klein).min(1.0);
    let back = 1.0 / (1.0 + (1.0 - k2).sqrt());
    Ok(PoincarePoint::projected(klein.iter().map(|c| c * back).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn p(c: &[f64]) -> PoincarePoint {
        PoincarePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn mobius_add_identity_and_inverse() {
        let x = p(&[0.3, -0.2, 0.5]);
        let o = PoincarePoint::origin(3);
        let r = mobius_add(&x, &o).unwrap();
        assert_eq!(r.coords(), x.coords());
        let z = mobius_add(&x.neg(), &x).unwrap();
        assert!(z.coords().iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn mobius_add_collinear_matches_scalar_rule() {
        let r = mobius_add(&p(&[0.3, 0.0]), &p(&[0.4, 0.0])).unwrap();
        let scalar = (0.3 + 0.4) / (1.0 + 0.3 * 0.4);
        assert!((r.coords()[0] - scalar).abs() < 1e-15);
        assert!((r.coords()[0] - 0.625).abs() < 1e-12);
        assert_eq!(r.coords()[1], 0.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = mobius_add(&p(&[0.1]), &p(&[0.1, 0.2])).unwrap_err();
        assert_eq!(err, GeometryError::DimensionMismatch { expected: 1, actual: 2 });
        assert!(distance(&p(&[0.1]), &p(&[0.1, 0.2])).is_err());
    }

    #[test]
    fn distance_examples() {
        let y = p(&[0.2, 0.5]);
        let o = PoincarePoint::origin(2);
        assert!((distance(&o, &y).unwrap() - 2.0 * artanh(y.norm())).abs() < 1e-14);
        assert_eq!(distance(&y, &y).unwrap(), 0.0);
        let d = distance(&p(&[0.5, 0.0]), &p(&[-0.5, 0.0])).unwrap();
        assert!((d - 2.0 * artanh(0.8)).abs() < 1e-12);
        assert!((d - 2.197_224_577_336_219).abs() < 1e-9);
    }

    #[test]
    fn matvec_examples() {
        let x = p(&[0.3, 0.4]);
        let id = Array2::eye(2);
        let r = mobius_matvec(&id, &x).unwrap();
        for (a, b) in r.coords().iter().zip(x.coords()) {
            assert!((a - b).abs() < 1e-14);
        }
        let z = mobius_matvec(&arr2(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]), &PoincarePoint::origin(2)).unwrap();
        assert_eq!(z.coords(), &[0.0, 0.0, 0.0]);
        let r2 = mobius_matvec(&(2.0 * Array2::<f64>::eye(2)), &x).unwrap();
        assert!((r2.norm() - 0.8).abs() < 1e-12);
        assert!((r2.coords()[0] / r2.coords()[1] - 0.75).abs() < 1e-12);
        assert!(mobius_matvec(&Array2::eye(3), &x).is_err());
    }

    #[test]
    fn matvec_zero_image_is_origin() {
        let a = arr2(&[[1.0, -1.0]]);
        let r = mobius_matvec(&a, &p(&[0.2, 0.2])).unwrap();
        assert_eq!(r.coords(), &[0.0]);
    }

    #[test]
    fn conformal_factor_values() {
        assert_eq!(conformal_factor(&PoincarePoint::origin(4)), 2.0);
        let h = 0.5f64.sqrt();
        let x = PoincarePoint::new(vec![h, 0.0]).unwrap();
        assert!((conformal_factor(&x) - 4.0).abs() < 1e-12);
        let mut last = 0.0;
        for i in 0..99 {
            let v = conformal_factor(&p(&[i as f64 / 100.0]));
            assert!(v > last);
            last = v;
        }
    }

    #[test]
    fn midpoint_edge_cases() {
        let x = p(&[0.1, 0.6]);
        assert_eq!(gyromidpoint(&[x.clone()], &[1.0]).unwrap(), x);
        let m = gyromidpoint(&[x.clone(), x.neg()], &[1.0, 1.0]).unwrap();
        assert!(m.norm() < 1e-15);
        assert_eq!(gyromidpoint(&[], &[]), Err(GeometryError::Empty));
        assert_eq!(
            gyromidpoint(&[x.clone(), x.neg()], &[0.0, 0.0]),
            Err(GeometryError::InvalidWeights)
        );
        assert_eq!(gyromidpoint(&[x.clone()], &[-1.0]), Err(GeometryError::InvalidWeights));
    }

    /// Grid-searched Fréchet mean of two collinear points.
    #[test]
    fn midpoint_matches_grid_minimizer() {
        let a = p(&[0.4, 0.0]);
        let b = p(&[0.2, 0.0]);
        let m = gyromidpoint(&[a.clone(), b.clone()], &[1.0, 1.0]).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=200_000 {
            let t = 0.1 + 0.4 * i as f64 / 200_000.0;
            let q = p(&[t, 0.0]);
            let cost = distance(&q, &a).unwrap().powi(2) + distance(&q, &b).unwrap().powi(2);
            if cost < best.0 {
                best = (cost, t);
            }
        }
        assert!(m.coords()[1].abs() < 1e-15);
        assert!(m.coords()[0] > 0.2 && m.coords()[0] < 0.4);
        assert!((m.coords()[0] - best.1).abs() < 1e-5, "{} vs {}", m.coords()[0], best.1);
    }

    #[test]
    fn constructor_rejects_outside_points() {
        assert!(matches!(PoincarePoint::new(vec![1.0, 0.0]), Err(GeometryError::OutsideBall { .. })));
        assert_eq!(PoincarePoint::new(vec![f64::NAN]), Err(GeometryError::NonFinite));
        assert_eq!(PoincarePoint::new(vec![]), Err(GeometryError::ZeroDimension));
        let q = PoincarePoint::projected(vec![3.0, 4.0]);
        assert!((q.norm() - (1.0 - EPS_BOUNDARY)).abs() < 1e-12);
    }
}
