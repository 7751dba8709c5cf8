//! Exhaustive tree families for brute-force checks.

use super::{HierarchyError, HierarchyTree, Merge};

pub const MAX_ENUMERATE_LEAVES: usize = 8;

#[derive(Debug, Clone)]
enum Shape {
    Leaf(usize),
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    /// Every tree obtained by grafting `leaf` onto one edge of `self`,
    /// including the edge above the root.
    fn insertions(&self, leaf: usize) -> Vec<Shape> {
        let mut out = vec![Shape::Node(Box::new(self.clone()), Box::new(Shape::Leaf(leaf)))];
        if let Shape::Node(l, r) = self {
            for nl in l.insertions(leaf) {
                out.push(Shape::Node(Box::new(nl), r.clone()));
            }
            for nr in r.insertions(leaf) {
                out.push(Shape::Node(l.clone(), Box::new(nr)));
            }
        }
        out
    }

    fn emit(&self, n: usize, merges: &mut Vec<Merge>) -> usize {
        match self {
            Shape::Leaf(j) => *j,
            Shape::Node(l, r) => {
                let left = l.emit(n, merges);
                let right = r.emit(n, merges);
                let step = merges.len();
                merges.push(Merge {
                    step,
                    left,
                    right,
                    weight: 0.0,
                });
                n + step
            }
        }
    }
}

pub fn double_factorial(k: usize) -> usize {
    (1..=k).rev().step_by(2).product()
}

/// All `(2n − 3)!!` full binary trees with leaves labelled `0..n`.
pub fn enumerate_trees(n: usize) -> Result<Vec<HierarchyTree>, HierarchyError> {
    if n > MAX_ENUMERATE_LEAVES {
        return Err(HierarchyError::TooManyLeaves {
            n,
            max: MAX_ENUMERATE_LEAVES,
        });
    }
    if n < 2 {
        return Err(HierarchyError::TooFewTokens { n, min: 2 });
    }
    let mut shapes = vec![Shape::Node(Box::new(Shape::Leaf(0)), Box::new(Shape::Leaf(1)))];
    for leaf in 2..n {
        shapes = shapes.iter().flat_map(|s| s.insertions(leaf)).collect();
    }
    shapes
        .iter()
        .map(|s| {
            let mut merges = Vec::with_capacity(n - 1);
            s.emit(n, &mut merges);
            HierarchyTree::from_merges(n, merges)
        })
        .collect()
}

/// The caterpillar that merges `order[0]` with `order[1]`, then adds
/// `order[2]`, `order[3]`, ... one at a time.
pub fn caterpillar(order: &[usize]) -> Result<HierarchyTree, HierarchyError> {
    let n = order.len();
    if n < 2 {
        return Err(HierarchyError::TooFewTokens { n, min: 2 });
    }
    let mut seen = vec![false; n];
    for &j in order {
        if j >= n || std::mem::replace(&mut seen[j], true) {
            return Err(HierarchyError::BadLeaves);
        }
    }
    let mut pairs = vec![(order[0], order[1])];
    for (k, &j) in order.iter().enumerate().skip(2) {
        pairs.push((n + k - 2, j));
    }
    HierarchyTree::from_pairs(n, &pairs)
}

/// One caterpillar per permutation of `0..n`, in lexicographic order.
pub fn caterpillars(n: usize) -> Result<impl Iterator<Item = HierarchyTree>, HierarchyError> {
    if n > MAX_ENUMERATE_LEAVES {
        return Err(HierarchyError::TooManyLeaves {
            n,
            max: MAX_ENUMERATE_LEAVES,
        });
    }
    if n < 2 {
        return Err(HierarchyError::TooFewTokens { n, min: 2 });
    }
    let mut next: Option<Vec<usize>> = Some((0..n).collect());
    Ok(std::iter::from_fn(move || {
        let cur = next.take()?;
        next = next_permutation(&cur);
        Some(caterpillar(&cur).expect("permutation is valid"))
    }))
}

fn next_permutation(p: &[usize]) -> Option<Vec<usize>> {
    let mut p = p.to_vec();
    let i = (0..p.len().saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1])?;
    let j = (i + 1..p.len()).rev().find(|&j| p[j] > p[i])?;
    p.swap(i, j);
    p[i + 1..].reverse();
    Some(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts_match_double_factorial() {
        assert_eq!(enumerate_trees(3).unwrap().len(), 3);
        assert_eq!(enumerate_trees(4).unwrap().len(), 15);
        assert_eq!(enumerate_trees(5).unwrap().len(), 105);
        for n in 2..=7 {
            let trees = enumerate_trees(n).unwrap();
            assert_eq!(trees.len(), double_factorial(2 * n - 3));
            let distinct: HashSet<String> = trees.iter().map(|t| t.canonical()).collect();
            assert_eq!(distinct.len(), trees.len());
        }
        assert!(matches!(enumerate_trees(9), Err(HierarchyError::TooManyLeaves { .. })));
    }

    #[test]
    fn caterpillar_family() {
        let all: Vec<_> = caterpillars(4).unwrap().collect();
        assert_eq!(all.len(), 24);
        // Swapping the first two leaves gives the same topology.
        let distinct: HashSet<String> = all.iter().map(|t| t.canonical()).collect();
        assert_eq!(distinct.len(), 12);
        assert_eq!(caterpillar(&[2, 0, 1]).unwrap().canonical(), "((0,2),1)");
        assert_eq!(caterpillar(&[0, 0, 1]), Err(HierarchyError::BadLeaves));
    }
}
