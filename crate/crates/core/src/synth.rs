//! Seeded synthetic workloads: separable label clusters, tree-metric token
//! embeddings, a sentiment toy task with known token effects, and benchmark
//! instances.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::attribution::{Strategy, ToyOracle};
use crate::geometry::{PoincarePoint, EPS_BOUNDARY};
use crate::probes::{DepTree, ParsedExample, TokenGeometry};

pub(crate) fn gaussian(rng: &mut Xoshiro256PlusPlus, n: usize, std: f64) -> Vec<f64> {
    (0..n).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(rng: &mut Xoshiro256PlusPlus, n: usize) -> Vec<f64> {
    let v = gaussian(rng, n, 1.0);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Random orthogonal `d × d` matrix by Gram–Schmidt on Gaussian columns.
pub fn random_orthogonal(rng: &mut Xoshiro256PlusPlus, d: usize) -> Array2<f64> {
    let mut q = Array2::<f64>::zeros((d, d));
    for c in 0..d {
        let mut v = Array1::from(gaussian(rng, d, 1.0));
        for p in 0..c {
            let col = q.column(p).to_owned();
            let proj = col.dot(&v);
            v.scaled_add(-proj, &col);
        }
        let norm = v.dot(&v).sqrt();
        q.column_mut(c).assign(&(v / norm));
    }
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Norm of each class mean.
    pub radius: f64,
    /// Per-coordinate noise standard deviation.
    pub noise: f64,
}

impl Default for ClusterSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            per_class: 100,
            dim: 32,
            radius: 0.5,
            noise: 0.04,
        }
    }
}

/// Gaussian clusters around random directions, shuffled, every vector inside
/// the unit ball.
pub fn semantic_clusters(spec: &ClusterSpec, seed: u64) -> Vec<(Vec<f64>, usize)> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|_| unit(&mut rng, spec.dim).into_iter().map(|x| x * spec.radius).collect())
        .collect();
    let mut out = Vec::with_capacity(spec.classes * spec.per_class);
    for (label, mean) in means.iter().enumerate() {
        for _ in 0..spec.per_class {
            let v: Vec<f64> = mean
                .iter()
                .zip(gaussian(&mut rng, spec.dim, spec.noise))
                .map(|(m, e)| m + e)
                .collect();
            out.push((PoincarePoint::projected(v).into(), label));
        }
    }
    out.shuffle(&mut rng);
    out
}

/// Random recursive dependency tree: CoNLL heads, one root.
pub fn random_heads(rng: &mut Xoshiro256PlusPlus, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut heads = vec![0; n];
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        heads[order[k]] = parent + 1;
    }
    heads
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeMetricSpec {
    pub examples: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub signal_dim: usize,
    pub noise_dim: usize,
    /// Length of each edge's displacement.
    pub edge_len: f64,
    pub noise_std: f64,
    /// Largest token-vector norm after global rescaling.
    pub max_norm: f64,
}

impl Default for TreeMetricSpec {
    fn default() -> Self {
        Self {
            examples: 200,
            min_len: 5,
            max_len: 14,
            signal_dim: 16,
            noise_dim: 16,
            edge_len: 1.0,
            noise_std: 0.2,
            max_norm: 0.9,
        }
    }
}

/// Token vectors whose squared Euclidean distances follow the parse-tree
/// metric: each token is the sum of mutually orthogonal edge displacements
/// along its root path in a signal subspace, plus independent nuisance
/// coordinates,
/// rotated by one shared orthogonal map and scaled by one shared factor.
pub fn tree_metric_examples(spec: &TreeMetricSpec, seed: u64) -> Vec<ParsedExample> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let d = spec.signal_dim + spec.noise_dim;
    let mix = random_orthogonal(&mut rng, d);
    let mut raw = Vec::with_capacity(spec.examples);
    for _ in 0..spec.examples {
        let n = rng.random_range(spec.min_len..=spec.max_len);
        let heads = random_heads(&mut rng, n);
        let tree = DepTree::from_heads(heads.clone()).expect("generated heads form a tree");
        // Every non-root node gets its own orthogonal edge direction; the root
        // sits at the origin of the signal subspace.
        let frame = random_orthogonal(&mut rng, spec.signal_dim);
        let edge: Vec<Vec<f64>> = (0..n)
            .map(|j| match tree.parent(j) {
                None => vec![0.0; spec.signal_dim],
                Some(_) => frame.column(j % spec.signal_dim).iter().map(|x| x * spec.edge_len).collect(),
            })
            .collect();
        let mut rows = Array2::<f64>::zeros((n, d));
        for j in 0..n {
            let mut node = Some(j);
            while let Some(v) = node {
                for (c, e) in edge[v].iter().enumerate() {
                    rows[[j, c]] += e;
                }
                node = tree.parent(v);
            }
            for (c, e) in gaussian(&mut rng, spec.noise_dim, spec.noise_std).into_iter().enumerate() {
                rows[[j, spec.signal_dim + c]] = e;
            }
        }
        raw.push((heads, tree, rows.dot(&mix.t())));
    }
    let max = raw
        .iter()
        .flat_map(|(_, _, r)| r.rows().into_iter().map(|row| row.dot(&row).sqrt()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    let s = spec.max_norm / max;
    raw.into_iter()
        .enumerate()
        .map(|(i, (_, tree, rows))| {
            let rows = rows * s;
            let n = rows.nrows();
            let seq = rows.mean_axis(ndarray::Axis(0)).expect("non-empty").to_vec();
            ParsedExample::new(
                (0..n).map(|j| format!("w{i}_{j}")).collect(),
                rows,
                seq,
                tree,
                0,
            )
            .expect("consistent shapes")
        })
        .collect()
}

/// A sentiment-like toy task. Words carry a polarity; a classifier's logit is
/// the sum of present polarities plus a few pair bonuses; token geometry
/// places polar words near their class prototype with noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SentimentSpec {
    pub examples: usize,
    pub vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub dim: usize,
    /// Fraction of the vocabulary with strong polarity.
    pub polar_fraction: f64,
    /// Standard deviation of the positional noise in the semantic space.
    pub geometry_noise: f64,
    pub pair_bonuses: usize,
}

impl Default for SentimentSpec {
    fn default() -> Self {
        Self {
            examples: 200,
            vocab: 300,
            min_len: 8,
            max_len: 20,
            dim: 8,
            polar_fraction: 0.25,
            geometry_noise: 0.15,
            pair_bonuses: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SentimentExample {
    pub id: String,
    pub tokens: Vec<String>,
    pub heads: Vec<usize>,
    pub geometry: TokenGeometry,
    /// Probability of `predicted_label`.
    pub oracle: ToyOracle,
    pub predicted_label: usize,
}

#[derive(Debug, Clone)]
pub struct SentimentSet {
    pub prototypes: Vec<PoincarePoint>,
    pub examples: Vec<SentimentExample>,
}

pub fn sentiment_set(spec: &SentimentSpec, strategy: Strategy, seed: u64) -> SentimentSet {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let axis = unit(&mut rng, spec.dim);
    let polarity: Vec<f64> = (0..spec.vocab)
        .map(|_| {
            if rng.random::<f64>() < spec.polar_fraction {
                let m = rng.random_range(1.0..2.5);
                if rng.random::<bool>() {
                    m
                } else {
                    -m
                }
            } else {
                rng.random_range(-0.2..0.2)
            }
        })
        .collect();
    // Class 1 sits on +axis, class 0 on −axis.
    let proto = |sign: f64| PoincarePoint::projected(axis.iter().map(|a| sign * 0.6 * a).collect());
    let prototypes = vec![proto(-1.0), proto(1.0)];
    let examples = (0..spec.examples)
        .map(|i| {
            let n = rng.random_range(spec.min_len..=spec.max_len);
            let words: Vec<usize> = (0..n).map(|_| rng.random_range(0..spec.vocab)).collect();
            let mut interactions = Vec::new();
            for _ in 0..spec.pair_bonuses {
                let a = rng.random_range(0..n);
                let b = (a + rng.random_range(1..n)) % n;
                interactions.push((a.min(b), a.max(b), rng.random_range(-1.0..1.0)));
            }
            let weights: Vec<f64> = words.iter().map(|&w| polarity[w]).collect();
            let z = weights.iter().sum::<f64>() + interactions.iter().map(|t| t.2).sum::<f64>();
            let predicted_label = usize::from(z >= 0.0);
            let sign = if predicted_label == 1 { 1.0 } else { -1.0 };
            let oracle = ToyOracle::new(
                weights.iter().map(|w| sign * w).collect(),
                interactions.iter().map(|&(a, b, c)| (a, b, sign * c)).collect(),
                strategy,
            );
            let heads = random_heads(&mut rng, n);
            let tree = DepTree::from_heads(heads.clone()).expect("generated heads form a tree");
            let semantic = words
                .iter()
                .map(|&w| {
                    let t = (polarity[w] / 2.5).clamp(-1.0, 1.0) * 0.6;
                    let v: Vec<f64> = axis
                        .iter()
                        .zip(gaussian(&mut rng, spec.dim, spec.geometry_noise))
                        .map(|(a, e)| t * a + e)
                        .collect();
                    PoincarePoint::projected(v)
                })
                .collect();
            let syntax = (0..n)
                .map(|j| {
                    let r = (tree.depth(j) as f64 * 0.25).tanh() * (1.0 - EPS_BOUNDARY);
                    let dir = unit(&mut rng, spec.dim);
                    PoincarePoint::projected(dir.into_iter().map(|x| x * r).collect())
                })
                .collect();
            SentimentExample {
                id: format!("toy-{i:04}"),
                tokens: words.iter().map(|w| format!("v{w}")).collect(),
                heads,
                geometry: TokenGeometry { semantic, syntax },
                oracle,
                predicted_label,
            }
        })
        .collect();
    SentimentSet { prototypes, examples }
}

/// Token geometry and a toy oracle for an `n`-token timing run.
pub fn bench_instance(n: usize, dim: usize, seed: u64) -> (TokenGeometry, ToyOracle) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut pts = |r: f64| -> Vec<PoincarePoint> {
        (0..n)
            .map(|_| {
                let v: Vec<f64> = unit(&mut rng, dim).into_iter().map(|x| x * r).collect();
                PoincarePoint::projected(v)
            })
            .collect()
    };
    let semantic = pts(0.5);
    let syntax = pts(0.3);
    let weights = gaussian(&mut rng, n, 1.0 / (n as f64).sqrt());
    (
        TokenGeometry { semantic, syntax },
        ToyOracle::new(weights, Vec::new(), Strategy::Del),
    )
}
