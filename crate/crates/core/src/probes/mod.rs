//! Semantic (label-prototype) and syntactic (tree-metric) hyperbolic probes.

mod train;
pub mod tree;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    distance_raw, distance_to_origin, mobius_scale, norm_sq, GeometryError, PoincarePoint, EPS_BOUNDARY,
};
use crate::optim::diff::{distance_with_grad, mobius_scale_backward, sq_distance_with_grad};
use crate::optim::{OptimError, ParamGrads, ParamSet};

pub use train::{train_semantic, train_syntax, SemanticTrainConfig, SyntaxTrainConfig, TrainLog};
pub use tree::{dpt_depth, dpt_distance, DepTree};

pub const PROJECTION: &str = "A";
pub const PROTOTYPES: &str = "prototypes";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("label {label} out of range for {k} prototypes")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("invalid dependency tree: {0}")]
    InvalidTree(String),
    #[error("need at least two prototypes, got {0}")]
    TooFewPrototypes(usize),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("example has {rows} embedding rows but {tokens} tokens")]
    RowMismatch { rows: usize, tokens: usize },
}

/// Label-aware probe: a projection into the ball and one prototype per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticProbe {
    /// `d_out × d_in`, applied as `A ⊗ x`.
    pub projection: Array2<f64>,
    pub prototypes: Vec<PoincarePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntaxProbe {
    pub projection: Array2<f64>,
}

/// One classified input with its dependency parse.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedExample {
    pub tokens: Vec<String>,
    /// `n × d_in`, one row per token.
    pub embeddings: Array2<f64>,
    pub seq_embedding: Vec<f64>,
    pub tree: DepTree,
    pub label: usize,
}

impl ParsedExample {
    pub fn new(
        tokens: Vec<String>,
        embeddings: Array2<f64>,
        seq_embedding: Vec<f64>,
        tree: DepTree,
        label: usize,
    ) -> Result<Self, ProbeError> {
        if embeddings.nrows() != tokens.len() {
            return Err(ProbeError::RowMismatch {
                rows: embeddings.nrows(),
                tokens: tokens.len(),
            });
        }
        if tree.len() != tokens.len() {
            return Err(ProbeError::RowMismatch {
                rows: tree.len(),
                tokens: tokens.len(),
            });
        }
        if seq_embedding.len() != embeddings.ncols() {
            return Err(GeometryError::DimensionMismatch {
                expected: embeddings.ncols(),
                actual: seq_embedding.len(),
            }
            .into());
        }
        Ok(Self {
            tokens,
            embeddings,
            seq_embedding,
            tree,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Divides every row (and the sequence vector) by one shared factor so
    /// that the largest norm is `1 - EPS_BOUNDARY`. No-op when all rows are
    /// already inside that radius.
    pub fn normalize_into_ball(&mut self) {
        let max_row = self
            .embeddings
            .rows()
            .into_iter()
            .map(|r| r.dot(&r).sqrt())
            .fold(norm_sq(&self.seq_embedding).sqrt(), f64::max);
        let limit = 1.0 - EPS_BOUNDARY;
        if max_row > limit {
            let s = limit / max_row;
            self.embeddings.mapv_inplace(|v| v * s);
            self.seq_embedding.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Rescales a raw vector to norm `<= 1 - EPS_BOUNDARY`.
pub fn clamp_to_ball(v: &[f64]) -> Vec<f64> {
    PoincarePoint::projected(v.to_vec()).into()
}

fn check_input(projection: &Array2<f64>, v: &[f64]) -> Result<(), ProbeError> {
    if v.len() != projection.ncols() {
        return Err(GeometryError::DimensionMismatch {
            expected: projection.ncols(),
            actual: v.len(),
        }
        .into());
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(GeometryError::NonFinite.into());
    }
    Ok(())
}

/// `(A x, ‖x‖, A ⊗ x)` for a clamped input `x`.
fn forward(projection: &Array2<f64>, x: &[f64]) -> (Vec<f64>, f64, Vec<f64>) {
    let u = projection.dot(&ArrayView1::from(x)).to_vec();
    let xn = norm_sq(x).sqrt();
    let y = PoincarePoint::projected(mobius_scale(&u, xn)).into();
    (u, xn, y)
}

fn project(projection: &Array2<f64>, v: &[f64]) -> Result<PoincarePoint, ProbeError> {
    check_input(projection, v)?;
    let x = clamp_to_ball(v);
    let (_, _, y) = forward(projection, &x);
    Ok(PoincarePoint::projected(y))
}

fn accumulate_outer(acc: &mut Array2<f64>, left: &[f64], right: &[f64], scale: f64) {
    for (i, l) in left.iter().enumerate() {
        if *l == 0.0 {
            continue;
        }
        let mut row = acc.row_mut(i);
        row.scaled_add(scale * l, &ArrayView1::from(right));
    }
}

impl SemanticProbe {
    pub fn new(projection: Array2<f64>, prototypes: Vec<PoincarePoint>) -> Result<Self, ProbeError> {
        if prototypes.len() < 2 {
            return Err(ProbeError::TooFewPrototypes(prototypes.len()));
        }
        for p in &prototypes {
            if p.dim() != projection.nrows() {
                return Err(GeometryError::DimensionMismatch {
                    expected: projection.nrows(),
                    actual: p.dim(),
                }
                .into());
            }
        }
        Ok(Self { projection, prototypes })
    }

    pub fn k(&self) -> usize {
        self.prototypes.len()
    }

    pub fn d_in(&self) -> usize {
        self.projection.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.projection.nrows()
    }

    /// `A_se ⊗ clamp(v)`.
    pub fn project(&self, v: &[f64]) -> Result<PoincarePoint, ProbeError> {
        project(&self.projection, v)
    }

    /// Softmax over negative distances to each prototype.
    pub fn prototype_distribution(&self, point: &PoincarePoint) -> Result<Vec<f64>, ProbeError> {
        let d = self
            .prototypes
            .iter()
            .map(|c| crate::geometry::distance(point, c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(softmax_neg(&d))
    }

    /// Index of the closest prototype.
    pub fn nearest_prototype(&self, v: &[f64]) -> Result<usize, ProbeError> {
        let p = self.project(v)?;
        let mut best = (f64::INFINITY, 0);
        for (k, c) in self.prototypes.iter().enumerate() {
            let d = crate::geometry::distance(&p, c)?;
            if d < best.0 {
                best = (d, k);
            }
        }
        Ok(best.1)
    }

    /// Mean negative log-probability of the true class.
    pub fn loss(&self, batch: &[(&[f64], usize)]) -> Result<f64, ProbeError> {
        Ok(self.loss_and_grad(batch)?.0)
    }

    pub fn loss_and_grad(&self, batch: &[(&[f64], usize)]) -> Result<(f64, ParamGrads), ProbeError> {
        if batch.is_empty() {
            return Err(ProbeError::EmptyDataset);
        }
        let k = self.k();
        let mut g_a = Array2::zeros(self.projection.raw_dim());
        let mut g_c = vec![vec![0.0; self.d_out()]; k];
        let mut total = 0.0;
        for (v, label) in batch {
            if *label >= k {
                return Err(ProbeError::LabelOutOfRange { label: *label, k });
            }
            check_input(&self.projection, v)?;
            let x = clamp_to_ball(v);
            let (u, xn, s) = forward(&self.projection, &x);
            let parts: Vec<_> = self.prototypes.iter().map(|c| distance_with_grad(&s, c.coords())).collect();
            let d: Vec<f64> = parts.iter().map(|p| p.0).collect();
            let probs = softmax_neg(&d);
            total += d[*label] + log_sum_exp_neg(&d);
            let mut g_s = vec![0.0; s.len()];
            for (kk, (_, gx, gy)) in parts.iter().enumerate() {
                let coef = if kk == *label { 1.0 } else { 0.0 } - probs[kk];
                g_s.iter_mut().zip(gx).for_each(|(a, b)| *a += coef * b);
                g_c[kk].iter_mut().zip(gy).for_each(|(a, b)| *a += coef * b);
            }
            let g_u = mobius_scale_backward(&u, xn, &g_s);
            accumulate_outer(&mut g_a, &g_u, &x, 1.0);
        }
        let m = batch.len() as f64;
        g_a.mapv_inplace(|v| v / m);
        g_c.iter_mut().flatten().for_each(|v| *v /= m);
        let mut grads = ParamGrads::default();
        grads.euclidean.insert(PROJECTION.into(), g_a);
        grads.hyperbolic.insert(PROTOTYPES.into(), g_c);
        Ok((total / m, grads))
    }

    pub fn to_params(&self) -> ParamSet {
        let mut p = ParamSet::default();
        p.euclidean.insert(PROJECTION.into(), self.projection.clone());
        p.hyperbolic.insert(PROTOTYPES.into(), self.prototypes.clone());
        p
    }

    pub fn from_params(params: &ParamSet) -> Result<Self, ProbeError> {
        let a = params
            .euclidean
            .get(PROJECTION)
            .ok_or_else(|| OptimError::Shape(PROJECTION.into()))?;
        let c = params
            .hyperbolic
            .get(PROTOTYPES)
            .ok_or_else(|| OptimError::Shape(PROTOTYPES.into()))?;
        Self::new(a.clone(), c.clone())
    }
}

fn log_sum_exp_neg(d: &[f64]) -> f64 {
    let m = d.iter().cloned().fold(f64::INFINITY, f64::min);
    -m + d.iter().map(|x| (-(x - m)).exp()).sum::<f64>().ln()
}

fn softmax_neg(d: &[f64]) -> Vec<f64> {
    let m = d.iter().cloned().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = d.iter().map(|x| (-(x - m)).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Free-function form of [`SemanticProbe::prototype_distribution`].
pub fn prototype_distribution(probe: &SemanticProbe, point: &PoincarePoint) -> Result<Vec<f64>, ProbeError> {
    probe.prototype_distribution(point)
}

pub fn project_semantic(probe: &SemanticProbe, v: &[f64]) -> Result<PoincarePoint, ProbeError> {
    probe.project(v)
}

pub fn semantic_loss(probe: &SemanticProbe, batch: &[(&[f64], usize)]) -> Result<f64, ProbeError> {
    probe.loss(batch)
}

/// Distance and depth deviations of one example.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SyntaxLoss {
    pub dis: f64,
    pub dep: f64,
    /// Set when `n < 2`, in which case `dis` is reported as zero.
    pub degenerate: bool,
}

impl SyntaxProbe {
    pub fn new(projection: Array2<f64>) -> Result<Self, ProbeError> {
        if projection.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite.into());
        }
        Ok(Self { projection })
    }

    pub fn project(&self, v: &[f64]) -> Result<PoincarePoint, ProbeError> {
        project(&self.projection, v)
    }

    pub fn loss(&self, ex: &ParsedExample) -> Result<SyntaxLoss, ProbeError> {
        let pts = self.project_rows(&ex.embeddings)?;
        let n = ex.len();
        let mut dis = 0.0;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let d = distance_raw(&pts[a], &pts[b]);
                    dis += (ex.tree.distance(a, b) as f64 - d * d).abs();
                }
            }
        }
        let mut dep = 0.0;
        for (j, p) in pts.iter().enumerate() {
            let d = distance_to_origin(&PoincarePoint::projected(p.clone()));
            dep += (ex.tree.depth(j) as f64 - d * d).abs();
        }
        let nf = n as f64;
        Ok(SyntaxLoss {
            dis: if n < 2 { 0.0 } else { dis / (nf * nf) },
            dep: dep / nf,
            degenerate: n < 2,
        })
    }

    /// Weighted objective `w_dis · L_dis + w_dep · L_dep` and its gradient.
    pub fn loss_and_grad(&self, ex: &ParsedExample, w_dis: f64, w_dep: f64) -> Result<(SyntaxLoss, ParamGrads), ProbeError> {
        let n = ex.len();
        let nf = n as f64;
        let mut fwd = Vec::with_capacity(n);
        for row in ex.embeddings.rows() {
            let v = row.to_vec();
            check_input(&self.projection, &v)?;
            let x = clamp_to_ball(&v);
            let (u, xn, y) = forward(&self.projection, &x);
            fwd.push((x, u, xn, y));
        }
        let dim = self.projection.nrows();
        let mut g_e = vec![vec![0.0; dim]; n];
        let mut dis = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let (d2, ga, gb) = sq_distance_with_grad(&fwd[a].3, &fwd[b].3);
                let diff = d2 - ex.tree.distance(a, b) as f64;
                dis += 2.0 * diff.abs();
                let coef = w_dis * 2.0 * diff.signum() / (nf * nf);
                g_e[a].iter_mut().zip(&ga).for_each(|(s, g)| *s += coef * g);
                g_e[b].iter_mut().zip(&gb).for_each(|(s, g)| *s += coef * g);
            }
        }
        let origin = vec![0.0; dim];
        let mut dep = 0.0;
        for (j, f) in fwd.iter().enumerate() {
            let (d2, gx, _) = sq_distance_with_grad(&f.3, &origin);
            let diff = d2 - ex.tree.depth(j) as f64;
            dep += diff.abs();
            let coef = w_dep * diff.signum() / nf;
            g_e[j].iter_mut().zip(&gx).for_each(|(s, g)| *s += coef * g);
        }
        let mut g_a = Array2::zeros(self.projection.raw_dim());
        for (f, ge) in fwd.iter().zip(&g_e) {
            let gu = mobius_scale_backward(&f.1, f.2, ge);
            accumulate_outer(&mut g_a, &gu, &f.0, 1.0);
        }
        let mut grads = ParamGrads::default();
        grads.euclidean.insert(PROJECTION.into(), g_a);
        let loss = SyntaxLoss {
            dis: if n < 2 { 0.0 } else { dis / (nf * nf) },
            dep: dep / nf,
            degenerate: n < 2,
        };
        Ok((loss, grads))
    }

    pub fn project_rows(&self, rows: &Array2<f64>) -> Result<Vec<Vec<f64>>, ProbeError> {
        rows.rows()
            .into_iter()
            .map(|r| self.project(&r.to_vec()).map(Vec::from))
            .collect()
    }

    pub fn to_params(&self) -> ParamSet {
        let mut p = ParamSet::default();
        p.euclidean.insert(PROJECTION.into(), self.projection.clone());
        p
    }

    pub fn from_params(params: &ParamSet) -> Result<Self, ProbeError> {
        let a = params
            .euclidean
            .get(PROJECTION)
            .ok_or_else(|| OptimError::Shape(PROJECTION.into()))?;
        Self::new(a.clone())
    }
}

pub fn syntax_loss(probe: &SyntaxProbe, ex: &ParsedExample) -> Result<SyntaxLoss, ProbeError> {
    probe.loss(ex)
}

/// Per-token hyperbolic coordinates of one example under both probes.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGeometry {
    pub semantic: Vec<PoincarePoint>,
    pub syntax: Vec<PoincarePoint>,
}

impl TokenGeometry {
    pub fn len(&self) -> usize {
        self.semantic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.semantic.is_empty()
    }

    /// `d_B(e_j^sy, 0)` for every token.
    pub fn syntax_depths(&self) -> Vec<f64> {
        self.syntax.iter().map(distance_to_origin).collect()
    }
}

/// Projects every token embedding row through both probes.
pub fn project_tokens(
    semantic: &SemanticProbe,
    syntax: &SyntaxProbe,
    embeddings: &Array2<f64>,
) -> Result<TokenGeometry, ProbeError> {
    let mut sem = Vec::with_capacity(embeddings.nrows());
    let mut syn = Vec::with_capacity(embeddings.nrows());
    for row in embeddings.rows() {
        let v = row.to_vec();
        sem.push(semantic.project(&v)?);
        syn.push(syntax.project(&v)?);
    }
    Ok(TokenGeometry {
        semantic: sem,
        syntax: syn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{distance, mobius_matvec};
    use crate::optim::check_gradient;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn rand_matrix(rng: &mut Xoshiro256PlusPlus, r: usize, c: usize, s: f64) -> Array2<f64> {
        Array2::from_shape_fn((r, c), |_| s * rng.sample::<f64, _>(StandardNormal))
    }

    fn rand_ball(rng: &mut Xoshiro256PlusPlus, dim: usize, radius: f64) -> Vec<f64> {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = norm_sq(&v).sqrt();
        let r = radius * rng.random::<f64>();
        v.iter().map(|x| x * r / n).collect()
    }

    fn probe(rng: &mut Xoshiro256PlusPlus, d_in: usize, d_out: usize, k: usize) -> SemanticProbe {
        let protos = (0..k)
            .map(|_| PoincarePoint::new(rand_ball(rng, d_out, 0.7)).unwrap())
            .collect();
        SemanticProbe::new(rand_matrix(rng, d_out, d_in, 0.5), protos).unwrap()
    }

    #[test]
    fn identity_projection_keeps_in_ball_vectors() {
        let p = SemanticProbe::new(
            Array2::eye(3),
            vec![PoincarePoint::origin(3), PoincarePoint::new(vec![0.5, 0.0, 0.0]).unwrap()],
        )
        .unwrap();
        let v = [0.1, -0.2, 0.3];
        let y = p.project(&v).unwrap();
        for (a, b) in y.coords().iter().zip(&v) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(p.project(&[0.0, 0.0, 0.0]).unwrap(), PoincarePoint::origin(3));
        assert!(p.project(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn projection_agrees_with_geometry_matvec() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let p = probe(&mut rng, 6, 4, 3);
        for _ in 0..20 {
            let v = rand_ball(&mut rng, 6, 0.99);
            let a = p.project(&v).unwrap();
            let b = mobius_matvec(&p.projection, &PoincarePoint::new(v).unwrap()).unwrap();
            for (x, y) in a.coords().iter().zip(b.coords()) {
                assert!((x - y).abs() < 1e-14);
            }
        }
        // Out-of-ball inputs are rescaled before projection.
        let big = [3.0, 0.0, 0.0, 4.0, 0.0, 0.0];
        let scaled = clamp_to_ball(&big);
        assert_eq!(p.project(&big).unwrap(), p.project(&scaled).unwrap());
    }

    #[test]
    fn distribution_examples() {
        let c1 = PoincarePoint::new(vec![0.5, 0.0]).unwrap();
        let c2 = PoincarePoint::new(vec![-0.5, 0.0]).unwrap();
        let p = SemanticProbe::new(Array2::eye(2), vec![c1.clone(), c2]).unwrap();
        let probs = p.prototype_distribution(&PoincarePoint::new(vec![0.0, 0.3]).unwrap()).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-15);
        // d1 = 0 and d2 = ln 3.
        let r = (3f64.ln() / 2.0).tanh();
        let c2 = PoincarePoint::new(vec![0.5, 0.0]).unwrap();
        let start = crate::geometry::mobius_add(&c2, &PoincarePoint::new(vec![0.0, r]).unwrap()).unwrap();
        let q = SemanticProbe::new(Array2::eye(2), vec![c2.clone(), start.clone()]).unwrap();
        assert!((distance(&c2, &start).unwrap() - 3f64.ln()).abs() < 1e-12);
        let probs = q.prototype_distribution(&c2).unwrap();
        assert!((probs[0] - 0.75).abs() < 1e-12 && (probs[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn distribution_is_shift_invariant_and_permutation_equivariant() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        let p = probe(&mut rng, 3, 3, 4);
        let x = PoincarePoint::new(rand_ball(&mut rng, 3, 0.8)).unwrap();
        let probs = p.prototype_distribution(&x).unwrap();
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d: Vec<f64> = p.prototypes.iter().map(|c| distance(&x, c).unwrap()).collect();
        let shifted: Vec<f64> = d.iter().map(|v| v + 7.5).collect();
        for (a, b) in softmax_neg(&shifted).iter().zip(&probs) {
            assert!((a - b).abs() < 1e-14);
        }
        let mut rev = p.clone();
        rev.prototypes.reverse();
        let rp = rev.prototype_distribution(&x).unwrap();
        for (a, b) in rp.iter().rev().zip(&probs) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn semantic_loss_edge_values() {
        let c = PoincarePoint::new(vec![0.2, 0.1]).unwrap();
        let same = SemanticProbe::new(Array2::eye(2), vec![c.clone(), c.clone(), c.clone()]).unwrap();
        let v = [0.3, -0.1];
        assert!((same.loss(&[(&v, 1)]).unwrap() - 3f64.ln()).abs() < 1e-12);
        assert_eq!(same.loss(&[(&v, 3)]), Err(ProbeError::LabelOutOfRange { label: 3, k: 3 }));
        // A far-away competitor drives the true-class probability to one.
        let far = SemanticProbe::new(
            Array2::eye(2),
            vec![c.clone(), PoincarePoint::projected(vec![-1.0, 0.0])],
        )
        .unwrap();
        let l = far.loss(&[(c.coords(), 0)]).unwrap();
        assert!(l >= 0.0 && l < 1e-4);
        assert!(SemanticProbe::new(Array2::eye(2), vec![c]).is_err());
    }

    #[test]
    fn semantic_gradient_check() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        let p = probe(&mut rng, 5, 4, 3);
        let data: Vec<(Vec<f64>, usize)> = (0..6).map(|i| (rand_ball(&mut rng, 5, 1.5), i % 3)).collect();
        let report = check_gradient(
            |ps| {
                let pr = SemanticProbe::from_params(ps).unwrap();
                let batch: Vec<(&[f64], usize)> = data.iter().map(|(v, l)| (v.as_slice(), *l)).collect();
                pr.loss_and_grad(&batch).unwrap()
            },
            &p.to_params(),
            1e-4,
        );
        assert!(report.passed, "{report:?}");
    }

    fn example(rng: &mut Xoshiro256PlusPlus, heads: Vec<usize>, d_in: usize) -> ParsedExample {
        let n = heads.len();
        let emb = Array2::from_shape_fn((n, d_in), |_| 0.3 * rng.sample::<f64, _>(StandardNormal));
        let mut ex = ParsedExample::new(
            (0..n).map(|i| format!("t{i}")).collect(),
            emb,
            vec![0.0; d_in],
            DepTree::from_heads(heads).unwrap(),
            0,
        )
        .unwrap();
        ex.normalize_into_ball();
        ex
    }

    #[test]
    fn syntax_gradient_check() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        let ex = example(&mut rng, vec![2, 0, 2, 3, 3], 6);
        let sp = SyntaxProbe::new(rand_matrix(&mut rng, 4, 6, 1.0)).unwrap();
        for (wd, wp) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
            let report = check_gradient(
                |ps| {
                    let pr = SyntaxProbe::from_params(ps).unwrap();
                    let (_, g) = pr.loss_and_grad(&ex, wd, wp).unwrap();
                    let l = pr.loss(&ex).unwrap();
                    (wd * l.dis + wp * l.dep, g)
                },
                &sp.to_params(),
                1e-4,
            );
            assert!(report.passed, "{report:?}");
        }
    }

    #[test]
    fn syntax_loss_matches_double_loop() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
        let ex = example(&mut rng, vec![0, 1, 1, 2, 4, 4], 5);
        let sp = SyntaxProbe::new(rand_matrix(&mut rng, 3, 5, 1.0)).unwrap();
        let l = sp.loss(&ex).unwrap();
        let (lg, _) = sp.loss_and_grad(&ex, 1.0, 1.0).unwrap();
        let pts: Vec<PoincarePoint> = ex
            .embeddings
            .rows()
            .into_iter()
            .map(|r| mobius_matvec(&sp.projection, &PoincarePoint::new(r.to_vec()).unwrap()).unwrap())
            .collect();
        let n = pts.len();
        let (mut dis, mut dep) = (0.0, 0.0);
        for a in 0..n {
            for b in 0..n {
                let d = distance(&pts[a], &pts[b]).unwrap();
                dis += (ex.tree.distance(a, b) as f64 - d * d).abs();
            }
            let d0 = distance(&pts[a], &PoincarePoint::origin(3)).unwrap();
            dep += (ex.tree.depth(a) as f64 - d0 * d0).abs();
        }
        let nf = n as f64;
        assert!((l.dis - dis / (nf * nf)).abs() < 1e-12);
        assert!((l.dep - dep / nf).abs() < 1e-12);
        assert!((lg.dis - l.dis).abs() < 1e-9 && (lg.dep - l.dep).abs() < 1e-9);
    }

    #[test]
    fn perfect_constructions_give_zero_loss() {
        // Two tokens: root at the origin, child at squared distance 1.
        let r = 0.5f64.tanh();
        let emb = Array2::from_shape_vec((2, 2), vec![0.0, 0.0, r, 0.0]).unwrap();
        let ex = ParsedExample::new(
            vec!["a".into(), "b".into()],
            emb,
            vec![0.0, 0.0],
            DepTree::from_heads(vec![0, 1]).unwrap(),
            0,
        )
        .unwrap();
        let sp = SyntaxProbe::new(Array2::eye(2)).unwrap();
        let l = sp.loss(&ex).unwrap();
        assert!(l.dis < 1e-12 && l.dep < 1e-12, "{l:?}");

        let one = ParsedExample::new(
            vec!["a".into()],
            Array2::zeros((1, 2)),
            vec![0.0, 0.0],
            DepTree::from_heads(vec![0]).unwrap(),
            0,
        )
        .unwrap();
        let l = sp.loss(&one).unwrap();
        assert!(l.degenerate && l.dis == 0.0 && l.dep == 0.0);
    }

    #[test]
    fn normalize_uses_one_shared_factor() {
        let emb = Array2::from_shape_vec((2, 2), vec![3.0, 4.0, 1.0, 0.0]).unwrap();
        let mut ex = ParsedExample::new(
            vec!["a".into(), "b".into()],
            emb,
            vec![0.0, 2.0],
            DepTree::from_heads(vec![0, 1]).unwrap(),
            0,
        )
        .unwrap();
        ex.normalize_into_ball();
        let s = (1.0 - EPS_BOUNDARY) / 5.0;
        assert!((ex.embeddings[[1, 0]] - s).abs() < 1e-15);
        assert!((ex.seq_embedding[1] - 2.0 * s).abs() < 1e-15);
    }
}
