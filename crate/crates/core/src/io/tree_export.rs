//! Hierarchy trees as a JSON merge list and as Graphviz DOT.

use serde::{Deserialize, Serialize};

use crate::hierarchy::{HierarchyError, HierarchyTree, Merge};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeExport {
    pub step: usize,
    pub left: usize,
    pub right: usize,
    pub weight: f64,
    /// Sorted leaf indices of the new cluster.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeExport {
    pub example_id: String,
    pub alpha1: f64,
    pub alpha2: f64,
    pub merges: Vec<MergeExport>,
}

impl TreeExport {
    pub fn from_tree(example_id: &str, alpha1: f64, alpha2: f64, tree: &HierarchyTree) -> Self {
        let n = tree.n();
        let merges = tree
            .merges()
            .iter()
            .map(|m| MergeExport {
                step: m.step,
                left: m.left,
                right: m.right,
                weight: m.weight,
                members: tree.leaves_of(n + m.step).to_vec(),
            })
            .collect();
        Self {
            example_id: example_id.to_string(),
            alpha1,
            alpha2,
            merges,
        }
    }

    pub fn n(&self) -> usize {
        self.merges.len() + 1
    }

    /// Rebuilds the tree and checks every recorded member list against it.
    pub fn to_tree(&self) -> Result<HierarchyTree, HierarchyError> {
        let n = self.n();
        let merges = self
            .merges
            .iter()
            .map(|m| Merge {
                step: m.step,
                left: m.left,
                right: m.right,
                weight: m.weight,
            })
            .collect();
        let tree = HierarchyTree::from_merges(n, merges)?;
        for m in &self.merges {
            if tree.leaves_of(n + m.step) != m.members.as_slice() {
                return Err(HierarchyError::InvalidMerge {
                    step: m.step,
                    reason: format!("members {:?} do not match the merged children", m.members),
                });
            }
        }
        Ok(tree)
    }
}

pub fn export_json(exports: &[TreeExport]) -> String {
    let mut s = serde_json::to_string_pretty(exports).expect("tree exports serialize");
    s.push('\n');
    s
}

/// Parses and validates a JSON array of tree exports.
pub fn import_json(text: &str) -> Result<Vec<TreeExport>, String> {
    let exports: Vec<TreeExport> = serde_json::from_str(text).map_err(|e| format!("line {}: {e}", e.line()))?;
    for (i, e) in exports.iter().enumerate() {
        e.to_tree().map_err(|err| format!("tree {i} (`{}`): {err}", e.example_id))?;
    }
    Ok(exports)
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// One digraph with a `cluster_` subgraph per tree. Each node is labelled
/// with its member leaves; internal nodes also carry their merge weight.
/// Leaves show the token text when `tokens` is given.
pub fn export_dot(trees: &[(&TreeExport, Option<&[String]>)]) -> String {
    let mut s = String::from("digraph pe {\n  node [shape=box];\n");
    for (t, (export, tokens)) in trees.iter().enumerate() {
        let n = export.n();
        let id = |node: usize| quote(&format!("t{t}_{node}"));
        s.push_str(&format!("  subgraph cluster_{t} {{\n    label={};\n", quote(&export.example_id)));
        for j in 0..n {
            let tok = tokens.and_then(|ts| ts.get(j)).map(|w| format!(" {w}")).unwrap_or_default();
            s.push_str(&format!("    {} [label={}];\n", id(j), quote(&format!("{{{j}}}{tok}"))));
        }
        for m in &export.merges {
            let members: Vec<String> = m.members.iter().map(usize::to_string).collect();
            let label = format!("{{{}}}\nw={}", members.join(","), m.weight);
            let node = n + m.step;
            s.push_str(&format!("    {} [label={}];\n", id(node), quote(&label)));
            s.push_str(&format!("    {} -> {};\n", id(node), id(m.left)));
            s.push_str(&format!("    {} -> {};\n", id(node), id(m.right)));
        }
        s.push_str("  }\n");
    }
    s.push_str("}\n");
    s
}
