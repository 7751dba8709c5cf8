//! Cluster weighting and the two agglomerative builders.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{HierarchyError, HierarchyTree, Merge};
use crate::attribution::{occlusion_from, FullCoalition, MaskOracle};
use crate::geometry::{distance, gyromidpoint, PoincarePoint};
use crate::probes::TokenGeometry;

/// How a cluster pair's contribution `φ̃(a ∨ b)` is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoalitionScore {
    /// Occlusion of the whole member union.
    #[default]
    Occlusion,
    /// Sum of the members' singleton occlusions.
    AdditiveSingletons,
    /// Contribution term switched off (`φ̃ = 0`).
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(default)]
    pub coalition: CoalitionScore,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.1,
            alpha2: 0.1,
            coalition: CoalitionScore::Occlusion,
        }
    }
}

impl EdgeConfig {
    pub fn new(alpha1: f64, alpha2: f64) -> Self {
        Self {
            alpha1,
            alpha2,
            coalition: CoalitionScore::Occlusion,
        }
    }

    pub fn validate(&self) -> Result<(), HierarchyError> {
        for (name, a) in [("alpha1", self.alpha1), ("alpha2", self.alpha2)] {
            if !(0.0..=1.0).contains(&a) {
                return Err(HierarchyError::InvalidMerge {
                    step: 0,
                    reason: format!("{name} = {a} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

/// An active cluster: its tokens, hyperbolic position, mean syntax depth and
/// coalition contribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub members: Vec<usize>,
    pub semantic: PoincarePoint,
    pub depth: f64,
    pub contribution: f64,
}

/// `−φ̃(a ∨ b) + α₁·d(a, b) + ½α₂·(depth_a + depth_b)` with `φ̃` the
/// occlusion of the member union.
pub fn edge_weight<O: MaskOracle + ?Sized>(
    a: &ClusterState,
    b: &ClusterState,
    oracle: &O,
    alpha1: f64,
    alpha2: f64,
) -> Result<f64, HierarchyError> {
    let mut union = a.members.clone();
    union.extend_from_slice(&b.members);
    if a.members.iter().any(|j| b.members.contains(j)) {
        return Err(HierarchyError::BadLeaves);
    }
    let full = oracle.full_probability()?;
    let phi = occlusion_from(oracle, full, &union, FullCoalition::UseEmptyMask)?;
    Ok(-phi + alpha1 * distance(&a.semantic, &b.semantic)? + 0.5 * alpha2 * (a.depth + b.depth))
}

/// Supplies leaf clusters, merged clusters and pair weights to a builder.
pub trait ClusterWeigher {
    type Cluster: Clone;

    fn n(&self) -> usize;

    fn leaf(&mut self, j: usize) -> Result<Self::Cluster, HierarchyError>;

    /// `members` is the sorted union of both clusters' tokens.
    fn merge(&mut self, a: &Self::Cluster, b: &Self::Cluster, members: &[usize]) -> Result<Self::Cluster, HierarchyError>;

    fn weight(&mut self, a: &Self::Cluster, b: &Self::Cluster, union: &[usize]) -> Result<f64, HierarchyError>;

    /// Singleton pair weights as a symmetric matrix with zero diagonal.
    fn leaf_weights(&mut self) -> Result<Array2<f64>, HierarchyError> {
        let n = self.n();
        let leaves = (0..n).map(|j| self.leaf(j)).collect::<Result<Vec<_>, _>>()?;
        let mut w = Array2::zeros((n, n));
        for i in 0..n {
            for j in i + 1..n {
                let e = self.weight(&leaves[i], &leaves[j], &[i, j])?;
                w[[i, j]] = e;
                w[[j, i]] = e;
            }
        }
        Ok(w)
    }
}

/// Weights from probe geometry and a classifier oracle.
pub struct ProbeWeigher<'a, O: ?Sized> {
    oracle: &'a O,
    full_probability: f64,
    semantic: &'a [PoincarePoint],
    depths: Vec<f64>,
    cfg: EdgeConfig,
}

impl<'a, O: MaskOracle + ?Sized> ProbeWeigher<'a, O> {
    pub fn new(geometry: &'a TokenGeometry, oracle: &'a O, cfg: EdgeConfig) -> Result<Self, HierarchyError> {
        cfg.validate()?;
        let n = oracle.n();
        for (what, len) in [("semantic positions", geometry.semantic.len()), ("syntax positions", geometry.syntax.len())] {
            if len != n {
                return Err(HierarchyError::LengthMismatch {
                    what,
                    expected: n,
                    actual: len,
                });
            }
        }
        Ok(Self {
            oracle,
            full_probability: oracle.full_probability()?,
            semantic: &geometry.semantic,
            depths: geometry.syntax_depths(),
            cfg,
        })
    }

    fn occlusion(&self, members: &[usize]) -> Result<f64, HierarchyError> {
        Ok(occlusion_from(
            self.oracle,
            self.full_probability,
            members,
            FullCoalition::UseEmptyMask,
        )?)
    }
}

impl<O: MaskOracle + ?Sized> ClusterWeigher for ProbeWeigher<'_, O> {
    type Cluster = ClusterState;

    fn n(&self) -> usize {
        self.oracle.n()
    }

    fn leaf(&mut self, j: usize) -> Result<ClusterState, HierarchyError> {
        let contribution = match self.cfg.coalition {
            CoalitionScore::Disabled => 0.0,
            _ => self.occlusion(&[j])?,
        };
        Ok(ClusterState {
            members: vec![j],
            semantic: self.semantic[j].clone(),
            depth: self.depths[j],
            contribution,
        })
    }

    fn merge(&mut self, a: &ClusterState, b: &ClusterState, members: &[usize]) -> Result<ClusterState, HierarchyError> {
        let points: Vec<PoincarePoint> = members.iter().map(|&j| self.semantic[j].clone()).collect();
        let semantic = gyromidpoint(&points, &vec![1.0; points.len()])?;
        let depth = members.iter().map(|&j| self.depths[j]).sum::<f64>() / members.len() as f64;
        let contribution = match self.cfg.coalition {
            CoalitionScore::Occlusion => self.occlusion(members)?,
            CoalitionScore::AdditiveSingletons => a.contribution + b.contribution,
            CoalitionScore::Disabled => 0.0,
        };
        Ok(ClusterState {
            members: members.to_vec(),
            semantic,
            depth,
            contribution,
        })
    }

    fn weight(&mut self, a: &ClusterState, b: &ClusterState, union: &[usize]) -> Result<f64, HierarchyError> {
        let phi = match self.cfg.coalition {
            CoalitionScore::Occlusion => self.occlusion(union)?,
            CoalitionScore::AdditiveSingletons => a.contribution + b.contribution,
            CoalitionScore::Disabled => 0.0,
        };
        let sem = if self.cfg.alpha1 == 0.0 {
            0.0
        } else {
            self.cfg.alpha1 * distance(&a.semantic, &b.semantic)?
        };
        Ok(-phi + sem + 0.5 * self.cfg.alpha2 * (a.depth + b.depth))
    }
}

/// A fixed leaf-pair matrix; cluster pairs take the mean of the cross-pair
/// weights.
pub struct StaticWeigher {
    weights: Array2<f64>,
}

impl StaticWeigher {
    pub fn new(weights: Array2<f64>) -> Result<Self, HierarchyError> {
        super::validate_weights(&weights, weights.nrows())?;
        Ok(Self { weights })
    }
}

impl ClusterWeigher for StaticWeigher {
    type Cluster = Vec<usize>;

    fn n(&self) -> usize {
        self.weights.nrows()
    }

    fn leaf(&mut self, j: usize) -> Result<Vec<usize>, HierarchyError> {
        Ok(vec![j])
    }

    fn merge(&mut self, _: &Vec<usize>, _: &Vec<usize>, members: &[usize]) -> Result<Vec<usize>, HierarchyError> {
        Ok(members.to_vec())
    }

    fn weight(&mut self, a: &Vec<usize>, b: &Vec<usize>, _: &[usize]) -> Result<f64, HierarchyError> {
        let mut s = 0.0;
        for &i in a {
            for &j in b {
                s += self.weights[[i, j]];
            }
        }
        Ok(s / (a.len() * b.len()) as f64)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub pushes: u64,
    pub pops: u64,
    pub stale_pops: u64,
    pub weight_evals: u64,
    /// `Σ log₂(heap size)` over all pushes and pops.
    pub log_weighted_ops: f64,
}

impl BuildStats {
    pub fn heap_ops(&self) -> u64 {
        self.pushes + self.pops
    }
}

#[derive(Debug, Clone)]
pub struct BuiltTree<C> {
    pub tree: HierarchyTree,
    /// Cluster for every node id, leaves first.
    pub clusters: Vec<C>,
    pub stats: BuildStats,
}

/// Heap ordering: weight, then the pair's smaller min-member id, then its
/// smaller max-member id, then its larger min-member id. Ascending.
#[derive(Debug, Clone, Copy)]
struct Key {
    weight: f64,
    min_lo: usize,
    max_lo: usize,
    min_hi: usize,
}

impl Key {
    fn new(weight: f64, a: &[usize], b: &[usize]) -> Self {
        let (min_a, max_a) = (a[0], a[a.len() - 1]);
        let (min_b, max_b) = (b[0], b[b.len() - 1]);
        Self {
            weight,
            min_lo: min_a.min(min_b),
            max_lo: max_a.min(max_b),
            min_hi: min_a.max(min_b),
        }
    }

    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.min_lo.cmp(&other.min_lo))
            .then(self.max_lo.cmp(&other.max_lo))
            .then(self.min_hi.cmp(&other.min_hi))
    }
}

struct Entry {
    key: Key,
    a: usize,
    b: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

fn union_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut u = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] < b[j] {
            u.push(a[i]);
            i += 1;
        } else {
            u.push(b[j]);
            j += 1;
        }
    }
    u.extend_from_slice(&a[i..]);
    u.extend_from_slice(&b[j..]);
    u
}

struct Forest<C> {
    n: usize,
    clusters: Vec<C>,
    members: Vec<Vec<usize>>,
    active: Vec<bool>,
    merges: Vec<Merge>,
}

impl<C: Clone> Forest<C> {
    fn new<W: ClusterWeigher<Cluster = C>>(w: &mut W) -> Result<Self, HierarchyError> {
        let n = w.n();
        if n < 2 {
            return Err(HierarchyError::TooFewTokens { n, min: 2 });
        }
        let clusters = (0..n).map(|j| w.leaf(j)).collect::<Result<Vec<_>, _>>()?;
        let mut active = vec![false; 2 * n - 1];
        active[..n].iter_mut().for_each(|x| *x = true);
        Ok(Self {
            n,
            clusters,
            members: (0..n).map(|j| vec![j]).collect(),
            active,
            merges: Vec::with_capacity(n - 1),
        })
    }

    fn weigh<W: ClusterWeigher<Cluster = C>>(&self, w: &mut W, a: usize, b: usize) -> Result<Key, HierarchyError> {
        let union = union_sorted(&self.members[a], &self.members[b]);
        let e = w.weight(&self.clusters[a], &self.clusters[b], &union)?;
        if !e.is_finite() {
            return Err(HierarchyError::NonFiniteWeight);
        }
        Ok(Key::new(e, &self.members[a], &self.members[b]))
    }

    fn merge<W: ClusterWeigher<Cluster = C>>(&mut self, w: &mut W, a: usize, b: usize, weight: f64) -> Result<usize, HierarchyError> {
        let (left, right) = if self.members[a][0] < self.members[b][0] { (a, b) } else { (b, a) };
        let union = union_sorted(&self.members[left], &self.members[right]);
        let c = w.merge(&self.clusters[left], &self.clusters[right], &union)?;
        let id = self.clusters.len();
        self.active[left] = false;
        self.active[right] = false;
        self.active[id] = true;
        self.clusters.push(c);
        self.members.push(union);
        self.merges.push(Merge {
            step: self.merges.len(),
            left,
            right,
            weight,
        });
        Ok(id)
    }

    fn finish(self, stats: BuildStats) -> Result<BuiltTree<C>, HierarchyError> {
        Ok(BuiltTree {
            tree: HierarchyTree::from_merges(self.n, self.merges)?,
            clusters: self.clusters,
            stats,
        })
    }
}

/// Priority-queue builder: every leaf pair is pushed once; the smallest
/// entry whose endpoints are both still active is merged, and the new
/// cluster's pairs with all active clusters are pushed. Stale entries are
/// discarded when popped.
pub fn build_with<W: ClusterWeigher>(w: &mut W) -> Result<BuiltTree<W::Cluster>, HierarchyError> {
    let mut f = Forest::new(w)?;
    let n = f.n;
    let mut stats = BuildStats::default();
    let mut heap = BinaryHeap::with_capacity(n * (n - 1));
    let push = |heap: &mut BinaryHeap<Reverse<Entry>>, stats: &mut BuildStats, e: Entry| {
        heap.push(Reverse(e));
        stats.pushes += 1;
        stats.log_weighted_ops += (heap.len() as f64).log2().max(1.0);
    };
    for a in 0..n {
        for b in a + 1..n {
            let key = f.weigh(w, a, b)?;
            stats.weight_evals += 1;
            push(&mut heap, &mut stats, Entry { key, a, b });
        }
    }
    while f.merges.len() < n - 1 {
        stats.log_weighted_ops += (heap.len() as f64).log2().max(1.0);
        let Reverse(top) = heap.pop().expect("active pairs remain while merges are pending");
        stats.pops += 1;
        if !(f.active[top.a] && f.active[top.b]) {
            stats.stale_pops += 1;
            continue;
        }
        let id = f.merge(w, top.a, top.b, top.key.weight)?;
        for other in 0..id {
            if f.active[other] {
                let key = f.weigh(w, other, id)?;
                stats.weight_evals += 1;
                push(&mut heap, &mut stats, Entry { key, a: other, b: id });
            }
        }
    }
    f.finish(stats)
}

/// Agglomerative baseline without a heap: every round re-weighs all active
/// pairs and merges the smallest under the same ordering.
pub fn greedy_with<W: ClusterWeigher>(w: &mut W) -> Result<BuiltTree<W::Cluster>, HierarchyError> {
    let mut f = Forest::new(w)?;
    let n = f.n;
    let mut stats = BuildStats::default();
    while f.merges.len() < n - 1 {
        let live: Vec<usize> = (0..f.clusters.len()).filter(|&i| f.active[i]).collect();
        let mut best: Option<(Key, usize, usize)> = None;
        for (x, &a) in live.iter().enumerate() {
            for &b in &live[x + 1..] {
                let key = f.weigh(w, a, b)?;
                stats.weight_evals += 1;
                if best.as_ref().is_none_or(|(k, _, _)| key.cmp(k) == Ordering::Less) {
                    best = Some((key, a, b));
                }
            }
        }
        let (key, a, b) = best.expect("at least two active clusters");
        f.merge(w, a, b, key.weight)?;
    }
    f.finish(stats)
}

pub fn build_pe_tree<O: MaskOracle + ?Sized>(
    geometry: &TokenGeometry,
    oracle: &O,
    cfg: &EdgeConfig,
) -> Result<BuiltTree<ClusterState>, HierarchyError> {
    build_with(&mut ProbeWeigher::new(geometry, oracle, *cfg)?)
}

pub fn build_greedy_baseline<O: MaskOracle + ?Sized>(
    geometry: &TokenGeometry,
    oracle: &O,
    cfg: &EdgeConfig,
) -> Result<BuiltTree<ClusterState>, HierarchyError> {
    greedy_with(&mut ProbeWeigher::new(geometry, oracle, *cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{Strategy, ToyOracle};
    use crate::hierarchy::{caterpillars, dasgupta_cost_pairs};
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn random_geometry(rng: &mut Xoshiro256PlusPlus, n: usize, dim: usize) -> TokenGeometry {
        let mut pt = || {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.4..0.4)).collect();
            PoincarePoint::new(v).unwrap()
        };
        let semantic = (0..n).map(|_| pt()).collect();
        let syntax = (0..n).map(|_| pt()).collect();
        TokenGeometry { semantic, syntax }
    }

    fn random_oracle(rng: &mut Xoshiro256PlusPlus, n: usize) -> ToyOracle {
        let w = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
        ToyOracle::new(w, vec![(0, 1, 0.5)], Strategy::Del)
    }

    fn sym(rng: &mut Xoshiro256PlusPlus, n: usize) -> Array2<f64> {
        let mut w = Array2::zeros((n, n));
        for i in 0..n {
            for j in i + 1..n {
                let e = rng.random_range(-1.0..1.0);
                w[[i, j]] = e;
                w[[j, i]] = e;
            }
        }
        w
    }

    #[test]
    fn two_tokens_single_merge() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        let g = random_geometry(&mut rng, 2, 3);
        let o = random_oracle(&mut rng, 2);
        let t = build_pe_tree(&g, &o, &EdgeConfig::default()).unwrap();
        assert_eq!(t.tree.merges().len(), 1);
        assert_eq!((t.tree.merges()[0].left, t.tree.merges()[0].right), (0, 1));
        let one = ToyOracle::new(vec![0.0], vec![], Strategy::Del);
        let g1 = random_geometry(&mut rng, 1, 3);
        assert!(matches!(
            build_pe_tree(&g1, &one, &EdgeConfig::default()),
            Err(HierarchyError::TooFewTokens { .. })
        ));
    }

    #[test]
    fn smallest_pair_merges_first() {
        let w = ndarray::array![[0.0, 0.1, 0.5], [0.1, 0.0, 0.9], [0.5, 0.9, 0.0]];
        let t = build_with(&mut StaticWeigher::new(w).unwrap()).unwrap();
        let m = &t.tree.merges()[0];
        assert_eq!((m.left, m.right, m.weight), (0, 1, 0.1));
    }

    #[test]
    fn ties_break_by_member_ids() {
        let w = Array2::from_elem((4, 4), 1.0);
        let t = build_with(&mut StaticWeigher::new(w.clone()).unwrap()).unwrap();
        assert_eq!(t.tree.canonical(), "(((0,1),2),3)");
        let g = greedy_with(&mut StaticWeigher::new(w).unwrap()).unwrap();
        assert_eq!(g.tree, t.tree);
    }

    #[test]
    fn singleton_weight_is_the_decomposition() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        let g = random_geometry(&mut rng, 5, 4);
        let o = random_oracle(&mut rng, 5);
        let cfg = EdgeConfig::new(0.3, 0.7);
        let mut pw = ProbeWeigher::new(&g, &o, cfg).unwrap();
        let w = pw.leaf_weights().unwrap();
        let depth = g.syntax_depths();
        let full = o.full_probability().unwrap();
        for i in 0..5 {
            for j in 0..5 {
                if i == j {
                    continue;
                }
                let rest = crate::attribution::Mask::without(5, &[i, j]);
                let phi = full - o.query(&rest).unwrap();
                let want = -phi + 0.3 * distance(&g.semantic[i], &g.semantic[j]).unwrap() + 0.35 * (depth[i] + depth[j]);
                assert!((w[[i, j]] - want).abs() < 1e-12);
                let a = pw.leaf(i).unwrap();
                let b = pw.leaf(j).unwrap();
                assert!((edge_weight(&a, &b, &o, 0.3, 0.7).unwrap() - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_alphas_give_negative_occlusion() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let g = random_geometry(&mut rng, 4, 2);
        let o = random_oracle(&mut rng, 4);
        let mut pw = ProbeWeigher::new(&g, &o, EdgeConfig::new(0.0, 0.0)).unwrap();
        let w = pw.leaf_weights().unwrap();
        let full = o.full_probability().unwrap();
        let phi = full - o.query(&crate::attribution::Mask::without(4, &[1, 3])).unwrap();
        assert_eq!(w[[1, 3]], -phi);
    }

    #[test]
    fn constant_oracle_ranks_by_distance() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        for _ in 0..10 {
            let g = random_geometry(&mut rng, 6, 3);
            let o = ToyOracle::new(vec![0.0; 6], vec![], Strategy::Pad);
            let w = ProbeWeigher::new(&g, &o, EdgeConfig::new(0.8, 0.0)).unwrap().leaf_weights().unwrap();
            let mut pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).collect();
            let mut by_w = pairs.clone();
            by_w.sort_by(|a, b| w[[a.0, a.1]].total_cmp(&w[[b.0, b.1]]));
            pairs.sort_by(|a, b| {
                distance(&g.semantic[a.0], &g.semantic[a.1])
                    .unwrap()
                    .total_cmp(&distance(&g.semantic[b.0], &g.semantic[b.1]).unwrap())
            });
            assert_eq!(by_w, pairs);
        }
    }

    #[test]
    fn merged_cluster_state() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let g = random_geometry(&mut rng, 5, 3);
        let o = random_oracle(&mut rng, 5);
        let t = build_pe_tree(&g, &o, &EdgeConfig::default()).unwrap();
        let depth = g.syntax_depths();
        for node in 5..9 {
            let c = &t.clusters[node];
            assert_eq!(c.members, t.tree.leaves_of(node));
            let mean = c.members.iter().map(|&j| depth[j]).sum::<f64>() / c.members.len() as f64;
            assert!((c.depth - mean).abs() < 1e-12);
            let pts: Vec<_> = c.members.iter().map(|&j| g.semantic[j].clone()).collect();
            assert_eq!(c.semantic, gyromidpoint(&pts, &vec![1.0; pts.len()]).unwrap());
        }
        // The root covers everything; under del its contribution is f(X) − v(∅).
        let root = &t.clusters[8];
        let want = o.full_probability().unwrap() - o.query(&crate::attribution::Mask::empty(5)).unwrap();
        assert!((root.contribution - want).abs() < 1e-15);
    }

    #[test]
    fn additive_switch_sums_singletons() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(6);
        let g = random_geometry(&mut rng, 5, 3);
        let o = random_oracle(&mut rng, 5);
        let cfg = EdgeConfig {
            coalition: CoalitionScore::AdditiveSingletons,
            ..EdgeConfig::new(0.0, 0.0)
        };
        let t = build_pe_tree(&g, &o, &cfg).unwrap();
        let singles: Vec<f64> = (0..5).map(|j| t.clusters[j].contribution).collect();
        for node in 5..9 {
            let c = &t.clusters[node];
            let s: f64 = c.members.iter().map(|&j| singles[j]).sum();
            assert!((c.contribution - s).abs() < 1e-12);
        }
    }

    #[test]
    fn greedy_matches_heap_builder() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
        for n in 2..12 {
            let g = random_geometry(&mut rng, n, 3);
            let o = random_oracle(&mut rng, n);
            let cfg = EdgeConfig::new(0.2, 0.4);
            let a = build_pe_tree(&g, &o, &cfg).unwrap();
            let b = build_greedy_baseline(&g, &o, &cfg).unwrap();
            assert_eq!(a.tree, b.tree);
            let w = sym(&mut rng, n);
            let a = build_with(&mut StaticWeigher::new(w.clone()).unwrap()).unwrap();
            let b = greedy_with(&mut StaticWeigher::new(w).unwrap()).unwrap();
            assert_eq!(a.tree, b.tree);
        }
    }

    #[test]
    fn greedy_evaluation_count_is_cubic() {
        let count = |n: usize| {
            let w = Array2::zeros((n, n));
            greedy_with(&mut StaticWeigher::new(w).unwrap()).unwrap().stats.weight_evals
        };
        // Σ_{m=2..n} C(m, 2) = C(n + 1, 3)
        assert_eq!(count(10), 165);
        assert!(count(64) as f64 * 7.0 <= count(128) as f64);
    }

    #[test]
    fn heap_counts() {
        let n = 20;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
        let w = sym(&mut rng, n);
        let t = build_with(&mut StaticWeigher::new(w).unwrap()).unwrap();
        // Initial pairs plus one push per active cluster after each merge.
        let after: u64 = (1..n as u64).map(|k| n as u64 - k - 1).sum();
        assert_eq!(t.stats.pushes, (n * (n - 1) / 2) as u64 + after);
        assert_eq!(t.stats.pops - t.stats.stale_pops, (n - 1) as u64);
        assert_eq!(t.stats.weight_evals, t.stats.pushes);
    }

    #[test]
    fn shifting_all_weights_preserves_order() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
        for _ in 0..20 {
            let w = sym(&mut rng, 7);
            let shifted = &w + 3.25;
            let a = build_with(&mut StaticWeigher::new(w).unwrap()).unwrap();
            let mut s = shifted.clone();
            for i in 0..7 {
                s[[i, i]] = 0.0;
            }
            let b = build_with(&mut StaticWeigher::new(s).unwrap()).unwrap();
            assert_eq!(a.tree.canonical(), b.tree.canonical());
        }
    }

    #[test]
    fn three_leaf_cost_of_built_tree() {
        // The builder joins the lightest pair first; the pairs cost charges
        // the first-joined pair 2 and the other two 3 each.
        let w = ndarray::array![[0.0, 0.1, 0.5], [0.1, 0.0, 0.9], [0.5, 0.9, 0.0]];
        let t = build_with(&mut StaticWeigher::new(w.clone()).unwrap()).unwrap();
        let c = dasgupta_cost_pairs(&t.tree, &w).unwrap();
        assert!((c - (0.2 + 1.5 + 2.7)).abs() < 1e-12);
        let all: Vec<f64> = caterpillars(3).unwrap().map(|t| dasgupta_cost_pairs(&t, &w).unwrap()).collect();
        let max = all.iter().cloned().fold(f64::MIN, f64::max);
        assert!((c - max).abs() < 1e-12);
    }
}
