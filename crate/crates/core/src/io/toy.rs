//! `toy_oracle.jsonl`: logistic stand-in classifiers, one per example.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{jsonl_error, read_text, valid_id, write_atomic, FormatError, Position};
use crate::attribution::ToyOracle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyOracleRecord {
    pub id: String,
    #[serde(flatten)]
    pub oracle: ToyOracle,
}

impl ToyOracleRecord {
    fn check(&self) -> Result<(), String> {
        if !valid_id(&self.id) {
            return Err(format!("invalid id `{}`", self.id));
        }
        let n = self.oracle.weights.len();
        if n == 0 {
            return Err("weights must be non-empty".into());
        }
        let finite = |v: f64| v.is_finite();
        if !self.oracle.weights.iter().copied().all(finite) || !finite(self.oracle.bias) {
            return Err("non-finite weight or bias".into());
        }
        for &(a, b, w) in &self.oracle.interactions {
            if a >= n || b >= n || a == b || !w.is_finite() {
                return Err(format!("bad interaction ({a}, {b}, {w}) for {n} tokens"));
            }
        }
        Ok(())
    }
}

pub fn parse_toy_oracles(path: &Path, text: &str) -> Result<Vec<ToyOracleRecord>, FormatError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ToyOracleRecord = serde_json::from_str(line).map_err(|e| jsonl_error(path, lineno, &e))?;
        rec.check()
            .map_err(|m| FormatError::invalid(path, Position::Line(lineno), m))?;
        if !seen.insert(rec.id.clone()) {
            return Err(FormatError::invalid(
                path,
                Position::Line(lineno),
                format!("duplicate id `{}`", rec.id),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_toy_oracles(path: &Path) -> Result<Vec<ToyOracleRecord>, FormatError> {
    parse_toy_oracles(path, &read_text(path)?)
}

pub fn write_toy_oracles(path: &Path, records: &[ToyOracleRecord]) -> Result<(), FormatError> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("toy oracle serializes"));
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}
