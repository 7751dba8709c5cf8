//! `dataset.jsonl`: one classified example per line.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{jsonl_error, read_text, valid_id, write_atomic, FormatError, Position};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub tokens: Vec<String>,
    pub label: usize,
    pub predicted_label: usize,
    /// Model probability of `predicted_label` on the full input.
    pub predicted_prob: f64,
}

impl DatasetRecord {
    fn check(&self) -> Result<(), String> {
        if !valid_id(&self.id) {
            return Err(format!("id `{}` must be non-empty and use only [A-Za-z0-9._-]", self.id));
        }
        if self.tokens.is_empty() {
            return Err("tokens must be non-empty".into());
        }
        if !(0.0..=1.0).contains(&self.predicted_prob) {
            return Err(format!("predicted_prob {} outside [0, 1]", self.predicted_prob));
        }
        Ok(())
    }
}

pub fn parse_dataset(path: &Path, text: &str) -> Result<Vec<DatasetRecord>, FormatError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(line).map_err(|e| jsonl_error(path, lineno, &e))?;
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
    if out.is_empty() {
        return Err(FormatError::invalid(path, Position::File, "no records"));
    }
    Ok(out)
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRecord>, FormatError> {
    parse_dataset(path, &read_text(path)?)
}

pub fn write_dataset(path: &Path, records: &[DatasetRecord]) -> Result<(), FormatError> {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str) -> DatasetRecord {
        DatasetRecord {
            id: id.into(),
            tokens: vec!["good".into(), "film".into()],
            label: 1,
            predicted_label: 1,
            predicted_prob: 0.875,
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.jsonl");
        let recs = vec![rec("a"), rec("b")];
        write_dataset(&p, &recs).unwrap();
        assert_eq!(load_dataset(&p).unwrap(), recs);
    }

    #[test]
    fn errors_name_the_line() {
        let p = Path::new("d.jsonl");
        let good = serde_json::to_string(&rec("a")).unwrap();
        let cases = [
            format!("{good}\n{{\"id\":"),
            format!("{good}\n{good}"),
            format!("{good}\n{}", good.replace("0.875", "1.5")),
            format!("{good}\n{}", good.replace("[\"good\",\"film\"]", "[]")),
            format!("{good}\n{}", good.replace("\"a\"", "\"../a\"")),
            format!("{good}\n{}", good.replace("}", ",\"extra\":1}")),
        ];
        for text in cases {
            let e = parse_dataset(p, &text).unwrap_err();
            assert_eq!(e.position(), Some(Position::Line(2)), "{e}");
        }
        assert!(parse_dataset(p, "\n\n").is_err());
    }
}
