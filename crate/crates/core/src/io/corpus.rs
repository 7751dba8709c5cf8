//! A data directory tying the per-file formats together.
//!
//! ```text
//! DIR/dataset.jsonl          one DatasetRecord per line
//! DIR/embeddings/<id>.peemb  one embedding file per record
//! DIR/parses.conllu          optional; one block per record
//! DIR/toy_oracle.jsonl       optional; one toy oracle per record
//! DIR/cache/<id>.json        optional; one probability cache per record
//! ```

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{
    load_cache, load_dataset, load_embeddings, load_parses, load_toy_oracles, DatasetRecord, EmbeddingFile,
    FormatError, Position,
};
use crate::attribution::{CachedOracle, MaskOracle, ToyOracle};
use crate::probes::DepTree;

/// Largest allowed gap between a cache's full-mask entry and the dataset's
/// `predicted_prob`.
pub const FULL_PROB_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataLayout {
    pub root: PathBuf,
    /// `root/embeddings` unless overridden.
    pub embeddings: PathBuf,
}

impl DataLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        let root = root.into();
        let embeddings = root.join("embeddings");
        Self { root, embeddings }
    }

    pub fn with_embeddings(mut self, dir: impl Into<PathBuf>) -> Self {
        self.embeddings = dir.into();
        self
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.jsonl")
    }

    pub fn embedding(&self, id: &str) -> PathBuf {
        self.embeddings.join(format!("{id}.peemb"))
    }

    pub fn parses(&self) -> PathBuf {
        self.root.join("parses.conllu")
    }

    pub fn toy_oracles(&self) -> PathBuf {
        self.root.join("toy_oracle.jsonl")
    }

    pub fn cache(&self, id: &str) -> PathBuf {
        self.root.join("cache").join(format!("{id}.json"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusExample {
    pub record: DatasetRecord,
    pub embeddings: EmbeddingFile,
    pub tree: Option<DepTree>,
}

impl CorpusExample {
    pub fn n(&self) -> usize {
        self.record.tokens.len()
    }
}

/// Loads the dataset, every embedding file and, when present, the parses,
/// checking that all of them agree on ids and token counts.
pub fn load_corpus(layout: &DataLayout) -> Result<Vec<CorpusExample>, FormatError> {
    let ds_path = layout.dataset();
    let records = load_dataset(&ds_path)?;
    let parses_path = layout.parses();
    let trees = if parses_path.exists() {
        Some(align_parses(&parses_path, &records)?)
    } else {
        None
    };
    let mut d_in = None;
    let mut out = Vec::with_capacity(records.len());
    for (i, record) in records.into_iter().enumerate() {
        let path = layout.embedding(&record.id);
        let emb = load_embeddings(&path)?;
        if emb.n_tokens() != record.tokens.len() {
            return Err(FormatError::invalid(
                &path,
                Position::Byte(8),
                format!("n_tokens {} but record `{}` has {} tokens", emb.n_tokens(), record.id, record.tokens.len()),
            ));
        }
        match d_in {
            None => d_in = Some(emb.d_in()),
            Some(d) if d != emb.d_in() => {
                return Err(FormatError::invalid(
                    &path,
                    Position::Byte(12),
                    format!("d_in {} differs from {d} in earlier files", emb.d_in()),
                ))
            }
            Some(_) => {}
        }
        let tree = trees.as_ref().map(|t| t[i].clone());
        out.push(CorpusExample {
            record,
            embeddings: emb,
            tree,
        });
    }
    Ok(out)
}

/// Blocks with an `# id` comment are matched by id, otherwise by order.
fn align_parses(path: &Path, records: &[DatasetRecord]) -> Result<Vec<DepTree>, FormatError> {
    let entries = load_parses(path)?;
    if entries.len() != records.len() {
        return Err(FormatError::invalid(
            path,
            Position::File,
            format!("{} parses for {} dataset records", entries.len(), records.len()),
        ));
    }
    let by_id: HashMap<&str, &DepTree> = entries
        .iter()
        .filter_map(|e| e.id.as_deref().map(|id| (id, &e.tree)))
        .collect();
    let mut out = Vec::with_capacity(records.len());
    for (i, r) in records.iter().enumerate() {
        let tree = match entries[i].id {
            Some(_) => *by_id.get(r.id.as_str()).ok_or_else(|| {
                FormatError::invalid(path, Position::File, format!("no parse with id `{}`", r.id))
            })?,
            None => &entries[i].tree,
        };
        if tree.len() != r.tokens.len() {
            return Err(FormatError::invalid(
                path,
                Position::File,
                format!("parse for `{}` has {} tokens, record has {}", r.id, tree.len(), r.tokens.len()),
            ));
        }
        out.push(tree.clone());
    }
    Ok(out)
}

/// Toy oracles keyed by example id, checked against the token counts.
pub fn load_toy_for(layout: &DataLayout, records: &[DatasetRecord]) -> Result<Vec<ToyOracle>, FormatError> {
    let path = layout.toy_oracles();
    let mut by_id: HashMap<String, ToyOracle> = load_toy_oracles(&path)?
        .into_iter()
        .map(|r| (r.id, r.oracle))
        .collect();
    records
        .iter()
        .map(|r| {
            let o = by_id.remove(&r.id).ok_or_else(|| {
                FormatError::invalid(&path, Position::File, format!("no toy oracle for `{}`", r.id))
            })?;
            let bad = |m: String| FormatError::invalid(&path, Position::File, m);
            if o.n() != r.tokens.len() {
                return Err(bad(format!(
                    "toy oracle `{}` has {} weights for {} tokens",
                    r.id,
                    o.n(),
                    r.tokens.len()
                )));
            }
            let full = o.full_probability().map_err(|e| bad(e.to_string()))?;
            if (full - r.predicted_prob).abs() > FULL_PROB_TOLERANCE {
                return Err(bad(format!(
                    "toy oracle `{}` gives {full} on the full input, record says {}",
                    r.id, r.predicted_prob
                )));
            }
            Ok(o)
        })
        .collect()
}

/// Probability caches for every example, checked against the dataset.
pub fn load_caches_for(layout: &DataLayout, records: &[DatasetRecord]) -> Result<Vec<CachedOracle>, FormatError> {
    records
        .iter()
        .map(|r| {
            let path = layout.cache(&r.id);
            let c = load_cache(&path)?;
            let bad = |m: String| FormatError::invalid(&path, Position::File, m);
            if c.n() != r.tokens.len() {
                return Err(bad(format!("n_tokens {} but record has {} tokens", c.n(), r.tokens.len())));
            }
            if c.predicted_label() != r.predicted_label {
                return Err(bad(format!(
                    "predicted_label {} but record says {}",
                    c.predicted_label(),
                    r.predicted_label
                )));
            }
            let full = c.full_probability().map_err(|e| bad(e.to_string()))?;
            if (full - r.predicted_prob).abs() > FULL_PROB_TOLERANCE {
                return Err(bad(format!(
                    "full-mask probability {full} differs from predicted_prob {}",
                    r.predicted_prob
                )));
            }
            Ok(c)
        })
        .collect()
}
