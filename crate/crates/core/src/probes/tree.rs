//! Dependency trees given as CoNLL-style head arrays.

use serde::{Deserialize, Serialize};

use super::ProbeError;

/// A validated single-rooted dependency tree over `n` tokens.
///
/// `heads[j]` is the 1-based index of the head of token `j`, or `0` for the
/// root. Tokens are addressed 0-based everywhere else.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct DepTree {
    heads: Vec<usize>,
    depth: Vec<usize>,
}

impl TryFrom<Vec<usize>> for DepTree {
    type Error = ProbeError;

    fn try_from(heads: Vec<usize>) -> Result<Self, Self::Error> {
        DepTree::from_heads(heads)
    }
}

impl From<DepTree> for Vec<usize> {
    fn from(t: DepTree) -> Self {
        t.heads
    }
}

impl DepTree {
    pub fn from_heads(heads: Vec<usize>) -> Result<Self, ProbeError> {
        let n = heads.len();
        if n == 0 {
            return Err(ProbeError::InvalidTree("empty tree".into()));
        }
        let roots = heads.iter().filter(|&&h| h == 0).count();
        if roots != 1 {
            return Err(ProbeError::InvalidTree(format!("expected exactly one root, found {roots}")));
        }
        for (j, &h) in heads.iter().enumerate() {
            if h > n {
                return Err(ProbeError::InvalidTree(format!("token {} has head {h} beyond {n}", j + 1)));
            }
            if h == j + 1 {
                return Err(ProbeError::InvalidTree(format!("token {} is its own head", j + 1)));
            }
        }
        let mut depth = vec![usize::MAX; n];
        for start in 0..n {
            let mut path = Vec::new();
            let mut cur = start;
            while depth[cur] == usize::MAX {
                if path.len() > n {
                    return Err(ProbeError::InvalidTree(format!("cycle through token {}", start + 1)));
                }
                path.push(cur);
                match heads[cur] {
                    0 => {
                        depth[cur] = 0;
                        path.pop();
                        break;
                    }
                    h => cur = h - 1,
                }
            }
            let mut d = depth[cur];
            for &node in path.iter().rev() {
                d += 1;
                depth[node] = d;
            }
        }
        Ok(Self { heads, depth })
    }

    pub fn len(&self) -> usize {
        self.heads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heads.is_empty()
    }

    pub fn heads(&self) -> &[usize] {
        &self.heads
    }

    pub fn parent(&self, j: usize) -> Option<usize> {
        self.heads[j].checked_sub(1)
    }

    pub fn root(&self) -> usize {
        self.heads.iter().position(|&h| h == 0).expect("validated")
    }

    /// Edges from token `j` to the root.
    pub fn depth(&self, j: usize) -> usize {
        self.depth[j]
    }

    /// Path length between tokens `a` and `b`.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b) = (a, b);
        let mut steps = 0;
        while self.depth[a] > self.depth[b] {
            a = self.heads[a] - 1;
            steps += 1;
        }
        while self.depth[b] > self.depth[a] {
            b = self.heads[b] - 1;
            steps += 1;
        }
        while a != b {
            a = self.heads[a] - 1;
            b = self.heads[b] - 1;
            steps += 2;
        }
        steps
    }
}

/// Free-function form of [`DepTree::distance`] over a raw head array.
pub fn dpt_distance(heads: &[usize], a: usize, b: usize) -> Result<usize, ProbeError> {
    let tree = DepTree::from_heads(heads.to_vec())?;
    check_index(&tree, a)?;
    check_index(&tree, b)?;
    Ok(tree.distance(a, b))
}

pub fn dpt_depth(heads: &[usize], j: usize) -> Result<usize, ProbeError> {
    let tree = DepTree::from_heads(heads.to_vec())?;
    check_index(&tree, j)?;
    Ok(tree.depth(j))
}

fn check_index(tree: &DepTree, j: usize) -> Result<(), ProbeError> {
    if j >= tree.len() {
        return Err(ProbeError::InvalidTree(format!("token index {j} out of range")));
    }
    Ok(())
}
