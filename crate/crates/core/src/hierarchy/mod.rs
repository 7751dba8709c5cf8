//! Binary merge trees over tokens, their Dasgupta cost, and the builders that
//! produce them.

mod build;
mod enumerate;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attribution::AttributionError;
use crate::geometry::GeometryError;

pub use build::{
    build_greedy_baseline, build_pe_tree, build_with, edge_weight, BuildStats, BuiltTree, ClusterState,
    ClusterWeigher, CoalitionScore, EdgeConfig, ProbeWeigher, StaticWeigher, greedy_with,
};
pub use enumerate::{caterpillar, caterpillars, double_factorial, enumerate_trees, MAX_ENUMERATE_LEAVES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HierarchyError {
    #[error("need at least {min} tokens, got {n}")]
    TooFewTokens { n: usize, min: usize },
    #[error("tree enumeration supports at most {max} leaves, got {n}")]
    TooManyLeaves { n: usize, max: usize },
    #[error("invalid merge at step {step}: {reason}")]
    InvalidMerge { step: usize, reason: String },
    #[error("expected {expected} merges, got {actual}")]
    MergeCount { expected: usize, actual: usize },
    #[error("weight matrix is {rows}x{cols}, expected {n}x{n}")]
    WeightShape { rows: usize, cols: usize, n: usize },
    #[error("weight matrix is not symmetric at ({0}, {1})")]
    Asymmetric(usize, usize),
    #[error("non-finite weight")]
    NonFiniteWeight,
    #[error("leaves must be distinct and in range")]
    BadLeaves,
    #[error("{what} has length {actual}, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One merge: `left` and `right` are node ids, the new node is `n + step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub step: usize,
    pub left: usize,
    pub right: usize,
    pub weight: f64,
}

/// Full binary tree over leaves `0..n`. Node ids below `n` are leaves; merge
/// `s` creates node `n + s`, so the root is `2n − 2` and every ancestor has a
/// larger id than its descendants.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyTree {
    n: usize,
    merges: Vec<Merge>,
    parent: Vec<Option<usize>>,
    members: Vec<Vec<usize>>,
}

impl HierarchyTree {
    pub fn from_merges(n: usize, merges: Vec<Merge>) -> Result<Self, HierarchyError> {
        if n < 1 {
            return Err(HierarchyError::TooFewTokens { n, min: 1 });
        }
        if merges.len() != n - 1 {
            return Err(HierarchyError::MergeCount {
                expected: n - 1,
                actual: merges.len(),
            });
        }
        let total = 2 * n - 1;
        let mut parent = vec![None; total];
        let mut members: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
        for (s, m) in merges.iter().enumerate() {
            let bad = |reason: &str| HierarchyError::InvalidMerge {
                step: s,
                reason: reason.to_string(),
            };
            if m.step != s {
                return Err(bad("step numbers must be 0, 1, 2, ..."));
            }
            let id = n + s;
            if m.left >= id || m.right >= id {
                return Err(bad("child does not exist yet"));
            }
            if m.left == m.right {
                return Err(bad("node merged with itself"));
            }
            if parent[m.left].is_some() || parent[m.right].is_some() {
                return Err(bad("child already merged"));
            }
            if !m.weight.is_finite() {
                return Err(bad("non-finite weight"));
            }
            parent[m.left] = Some(id);
            parent[m.right] = Some(id);
            let mut u = members[m.left].clone();
            u.extend_from_slice(&members[m.right]);
            u.sort_unstable();
            members.push(u);
        }
        Ok(Self {
            n,
            merges,
            parent,
            members,
        })
    }

    /// Tree from child pairs with zero weights.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self, HierarchyError> {
        let merges = pairs
            .iter()
            .enumerate()
            .map(|(step, &(left, right))| Merge {
                step,
                left,
                right,
                weight: 0.0,
            })
            .collect();
        Self::from_merges(n, merges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn node_count(&self) -> usize {
        2 * self.n - 1
    }

    pub fn root(&self) -> usize {
        2 * self.n - 2
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        node < self.n
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        self.parent[node]
    }

    pub fn children(&self, node: usize) -> Option<(usize, usize)> {
        (node >= self.n).then(|| {
            let m = &self.merges[node - self.n];
            (m.left, m.right)
        })
    }

    /// Sorted leaves below `node`.
    pub fn leaves_of(&self, node: usize) -> &[usize] {
        &self.members[node]
    }

    /// Lowest common ancestor of two nodes.
    pub fn lca(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        // Ancestors always carry larger ids, so advance the smaller one.
        while a != b {
            if a < b {
                a = self.parent[a].expect("non-root node has a parent");
            } else {
                b = self.parent[b].expect("non-root node has a parent");
            }
        }
        a
    }

    /// `lca[i][j]` for every leaf pair, filled from the merge list.
    pub fn lca_matrix(&self) -> Vec<Vec<usize>> {
        let mut out = vec![vec![0; self.n]; self.n];
        for j in 0..self.n {
            out[j][j] = j;
        }
        for (s, m) in self.merges.iter().enumerate() {
            let id = self.n + s;
            for &i in &self.members[m.left] {
                for &j in &self.members[m.right] {
                    out[i][j] = id;
                    out[j][i] = id;
                }
            }
        }
        out
    }

    /// Canonical nested form, children ordered by smallest leaf, used to
    /// compare topologies.
    pub fn canonical(&self) -> String {
        fn go(t: &HierarchyTree, node: usize) -> String {
            match t.children(node) {
                None => node.to_string(),
                Some((l, r)) => {
                    let (l, r) = if t.members[l][0] < t.members[r][0] { (l, r) } else { (r, l) };
                    format!("({},{})", go(t, l), go(t, r))
                }
            }
        }
        go(self, self.root())
    }
}

/// Which pair in a leaf triple is joined below the triple's common ancestor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// `{j, j′ | u}`
    JJPrime,
    /// `{j, u | j′}`
    JU,
    /// `{j′, u | j}`
    JPrimeU,
}

pub fn topology_relation(tree: &HierarchyTree, j: usize, jp: usize, u: usize) -> Result<Topology, HierarchyError> {
    let n = tree.n();
    if j == jp || j == u || jp == u || j >= n || jp >= n || u >= n {
        return Err(HierarchyError::BadLeaves);
    }
    Ok(relation_from(tree.lca(j, jp), tree.lca(j, u), tree.lca(jp, u)))
}

fn relation_from(l_jjp: usize, l_ju: usize, l_jpu: usize) -> Topology {
    // Two of the three ancestors coincide; the odd one out is strictly lower
    // and therefore has the smallest id.
    if l_jjp < l_ju.min(l_jpu) {
        Topology::JJPrime
    } else if l_ju < l_jpu {
        Topology::JU
    } else {
        Topology::JPrimeU
    }
}

pub fn validate_weights(weights: &Array2<f64>, n: usize) -> Result<(), HierarchyError> {
    let (rows, cols) = weights.dim();
    if rows != n || cols != n {
        return Err(HierarchyError::WeightShape { rows, cols, n });
    }
    for i in 0..n {
        for j in 0..n {
            if !weights[[i, j]].is_finite() {
                return Err(HierarchyError::NonFiniteWeight);
            }
            if i < j && weights[[i, j]] != weights[[j, i]] {
                return Err(HierarchyError::Asymmetric(i, j));
            }
        }
    }
    Ok(())
}

/// `Σ_{j<j′} e_{jj′} · |leaves(T[j ∨ j′])|`.
pub fn dasgupta_cost_pairs(tree: &HierarchyTree, weights: &Array2<f64>) -> Result<f64, HierarchyError> {
    let n = tree.n();
    validate_weights(weights, n)?;
    let lca = tree.lca_matrix();
    let mut cost = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            cost += weights[[i, j]] * tree.leaves_of(lca[i][j]).len() as f64;
        }
    }
    Ok(cost)
}

/// Triple expansion:
/// `Σ_{j<j′<u} [e_{jj′} + e_{ju} + e_{j′u} − e_{jj′u}(T)] + 2 Σ_{j<j′} e_{jj′}`,
/// where `e_{jj′u}(T)` keeps the weight of the pair joined first.
pub fn dasgupta_cost_triples(tree: &HierarchyTree, weights: &Array2<f64>) -> Result<f64, HierarchyError> {
    let n = tree.n();
    if n < 3 {
        return Err(HierarchyError::TooFewTokens { n, min: 3 });
    }
    validate_weights(weights, n)?;
    let lca = tree.lca_matrix();
    let mut triples = 0.0;
    let mut pairs = 0.0;
    for j in 0..n {
        for jp in j + 1..n {
            pairs += weights[[j, jp]];
            for u in jp + 1..n {
                let (a, b, c) = (weights[[j, jp]], weights[[j, u]], weights[[jp, u]]);
                let kept = match relation_from(lca[j][jp], lca[j][u], lca[jp][u]) {
                    Topology::JJPrime => a,
                    Topology::JU => b,
                    Topology::JPrimeU => c,
                };
                triples += a + b + c - kept;
            }
        }
    }
    Ok(triples + 2.0 * pairs)
}
