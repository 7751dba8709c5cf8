//! Probability caches recorded from a real classifier.
//!
//! ```json
//! {"strategy": "del", "predicted_label": 1, "n_tokens": 3,
//!  "entries": {"07": 0.91, "00": 0.5, "03": 0.72}}
//! ```
//!
//! Keys are little-endian hex bitsets (see [`Mask::to_hex`]); values are the
//! probability of `predicted_label` on the masked input.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{json_error, read_text, write_atomic, FormatError, Position};
use crate::attribution::{CachedOracle, Mask, MaskOracle, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbCache {
    pub strategy: Strategy,
    pub predicted_label: usize,
    pub n_tokens: usize,
    /// Sorted by key so that serialisation is deterministic.
    pub entries: BTreeMap<String, f64>,
}

impl ProbCache {
    pub fn from_oracle(oracle: &CachedOracle) -> Self {
        Self {
            strategy: oracle.strategy(),
            predicted_label: oracle.predicted_label(),
            n_tokens: oracle.n(),
            entries: oracle.entries().iter().map(|(m, &p)| (m.to_hex(), p)).collect(),
        }
    }

    /// Records `oracle` on every mask in `masks` plus the full and empty
    /// masks.
    pub fn record<O: MaskOracle + ?Sized>(
        oracle: &O,
        predicted_label: usize,
        masks: impl IntoIterator<Item = Mask>,
    ) -> Result<Self, crate::attribution::AttributionError> {
        let n = oracle.n();
        let mut entries = BTreeMap::new();
        for m in [Mask::full(n), Mask::empty(n)].into_iter().chain(masks) {
            let p = oracle.query(&m)?;
            entries.insert(m.to_hex(), p);
        }
        Ok(Self {
            strategy: oracle.strategy(),
            predicted_label,
            n_tokens: n,
            entries,
        })
    }

    pub fn into_oracle(self, path: &Path) -> Result<CachedOracle, FormatError> {
        let bad = |m: String| FormatError::invalid(path, Position::File, m);
        let mut map = HashMap::with_capacity(self.entries.len());
        for (key, p) in &self.entries {
            let m = Mask::from_hex(self.n_tokens, key).map_err(|e| bad(format!("entry `{key}`: {e}")))?;
            if m.to_hex() != *key {
                return Err(bad(format!("entry `{key}` is not in canonical lowercase form")));
            }
            map.insert(m, *p);
        }
        CachedOracle::new(self.n_tokens, self.strategy, self.predicted_label, map).map_err(|e| bad(e.to_string()))
    }
}

pub fn load_cache(path: &Path) -> Result<CachedOracle, FormatError> {
    let text = read_text(path)?;
    let cache: ProbCache = serde_json::from_str(&text).map_err(|e| json_error(path, &e))?;
    if cache.n_tokens == 0 {
        return Err(FormatError::invalid(path, Position::File, "n_tokens is zero"));
    }
    cache.into_oracle(path)
}

pub fn write_cache(path: &Path, cache: &ProbCache) -> Result<(), FormatError> {
    let mut s = serde_json::to_string_pretty(cache).expect("cache serializes");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}
