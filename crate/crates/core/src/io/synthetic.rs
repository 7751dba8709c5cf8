//! Writes a complete data directory from the synthetic sentiment task.
//!
//! Raw token embeddings concatenate three blocks: the token's semantic
//! coordinates from the toy geometry, a tree-metric block built from
//! orthogonal edge displacements along the parse, and Gaussian nuisance
//! coordinates. The sequence embedding places the predicted class on the
//! sentiment axis.

use ndarray::Array2;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use super::{
    write_cache, write_dataset, write_embeddings, write_parses, write_toy_oracles, DataLayout, DatasetRecord,
    EmbeddingFile, FormatError, ParseEntry, Position, ProbCache, ToyOracleRecord,
};
use crate::attribution::{Mask, MaskOracle, Strategy, MAX_EXACT_PLAYERS};
use crate::probes::DepTree;
use crate::synth::{gaussian, random_orthogonal, sentiment_set, SentimentSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpusSpec {
    pub sentiment: SentimentSpec,
    pub strategy: Strategy,
    pub tree_dim: usize,
    pub noise_dim: usize,
    pub edge_len: f64,
    pub noise_std: f64,
    /// Also write a probability cache with every mask for each example.
    /// Requires `sentiment.max_len <= MAX_EXACT_PLAYERS`.
    pub with_cache: bool,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        Self {
            sentiment: SentimentSpec::default(),
            strategy: Strategy::Del,
            tree_dim: 16,
            noise_dim: 8,
            edge_len: 0.25,
            noise_std: 0.05,
            with_cache: false,
        }
    }
}

/// Returns the number of examples written.
pub fn write_synthetic_corpus(
    layout: &DataLayout,
    spec: &SyntheticCorpusSpec,
    seed: u64,
) -> Result<usize, FormatError> {
    let bad = |m: String| FormatError::invalid(&layout.root, Position::File, m);
    if spec.with_cache && spec.sentiment.max_len > MAX_EXACT_PLAYERS {
        return Err(bad(format!(
            "full caches need max_len <= {MAX_EXACT_PLAYERS}, got {}",
            spec.sentiment.max_len
        )));
    }
    if spec.sentiment.min_len < 2 || spec.sentiment.min_len > spec.sentiment.max_len {
        return Err(bad("lengths must satisfy 2 <= min_len <= max_len".into()));
    }
    let set = sentiment_set(&spec.sentiment, spec.strategy, seed);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed ^ 0x5EED);
    let axis: Vec<f64> = set.prototypes[1].coords().iter().map(|c| c / 0.6).collect();
    let sem_dim = spec.sentiment.dim;
    let d = sem_dim + spec.tree_dim + spec.noise_dim;
    let mut records = Vec::new();
    let mut parses = Vec::new();
    let mut toys = Vec::new();
    for ex in &set.examples {
        let n = ex.tokens.len();
        let tree = DepTree::from_heads(ex.heads.clone()).map_err(|e| bad(e.to_string()))?;
        let frame = random_orthogonal(&mut rng, spec.tree_dim);
        let mut rows = Array2::<f64>::zeros((n, d));
        for j in 0..n {
            for (c, v) in ex.geometry.semantic[j].coords().iter().enumerate() {
                rows[[j, c]] = *v;
            }
            let mut node = Some(j);
            while let Some(v) = node {
                if tree.parent(v).is_some() {
                    for c in 0..spec.tree_dim {
                        rows[[j, sem_dim + c]] += spec.edge_len * frame[[c, v % spec.tree_dim]];
                    }
                }
                node = tree.parent(v);
            }
            for (c, e) in gaussian(&mut rng, spec.noise_dim, spec.noise_std).into_iter().enumerate() {
                rows[[j, sem_dim + spec.tree_dim + c]] = e;
            }
        }
        let sign = if ex.predicted_label == 1 { 1.0 } else { -1.0 };
        let mut seq = vec![0.0; d];
        for (c, e) in gaussian(&mut rng, sem_dim, spec.noise_std).into_iter().enumerate() {
            seq[c] = sign * 0.5 * axis[c] + e;
        }
        let emb = EmbeddingFile::from_f64(&seq, &rows).map_err(bad)?;
        write_embeddings(&layout.embedding(&ex.id), &emb)?;
        let full = ex.oracle.full_probability().map_err(|e| bad(e.to_string()))?;
        records.push(DatasetRecord {
            id: ex.id.clone(),
            tokens: ex.tokens.clone(),
            label: ex.predicted_label,
            predicted_label: ex.predicted_label,
            predicted_prob: full,
        });
        parses.push(ParseEntry {
            id: Some(ex.id.clone()),
            tree,
        });
        toys.push(ToyOracleRecord {
            id: ex.id.clone(),
            oracle: ex.oracle.clone(),
        });
        if spec.with_cache {
            let masks = (0u64..1 << n).map(|b| Mask::from_present(n, (0..n).filter(move |j| b >> j & 1 == 1)));
            let cache = ProbCache::record(&ex.oracle, ex.predicted_label, masks).map_err(|e| bad(e.to_string()))?;
            write_cache(&layout.cache(&ex.id), &cache)?;
        }
    }
    write_dataset(&layout.dataset(), &records)?;
    write_parses(&layout.parses(), &parses)?;
    write_toy_oracles(&layout.toy_oracles(), &toys)?;
    Ok(records.len())
}
