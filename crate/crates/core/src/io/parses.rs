//! Dependency parses: a CoNLL-U subset.
//!
//! Each example is a block of tab-separated token lines ended by a blank
//! line. A line carries either two columns (`index`, `head`) or the full
//! ten CoNLL-U columns, from which only `ID` (1) and `HEAD` (7) are read.
//! Heads are 1-based with `0` marking the root. A `# id = …` comment names
//! the block; multiword (`3-4`) and empty (`5.1`) nodes are skipped.

use std::path::Path;

use super::{read_text, valid_id, write_atomic, FormatError, Position};
use crate::probes::DepTree;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseEntry {
    pub id: Option<String>,
    pub tree: DepTree,
}

struct Block {
    start: usize,
    id: Option<String>,
    heads: Vec<usize>,
}

pub fn parse_parses(path: &Path, text: &str) -> Result<Vec<ParseEntry>, FormatError> {
    let bad = |line: usize, m: String| FormatError::invalid(path, Position::Line(line), m);
    let mut out = Vec::new();
    let mut cur: Option<Block> = None;
    let finish = |b: Block, out: &mut Vec<ParseEntry>| -> Result<(), FormatError> {
        if b.heads.is_empty() {
            return Err(bad(b.start, "block has no tokens".into()));
        }
        let tree = DepTree::from_heads(b.heads).map_err(|e| bad(b.start, e.to_string()))?;
        out.push(ParseEntry { id: b.id, tree });
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if let Some(b) = cur.take() {
                finish(b, &mut out)?;
            }
            continue;
        }
        let block = cur.get_or_insert_with(|| Block {
            start: lineno,
            id: None,
            heads: Vec::new(),
        });
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(id) = comment.trim().strip_prefix("id =") {
                let id = id.trim();
                if !valid_id(id) {
                    return Err(bad(lineno, format!("invalid id `{id}`")));
                }
                if block.id.is_some() {
                    return Err(bad(lineno, "second id comment in one block".into()));
                }
                block.id = Some(id.to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let (idx, head) = match cols.len() {
            2 => (cols[0], cols[1]),
            10 => (cols[0], cols[6]),
            k => return Err(bad(lineno, format!("expected 2 or 10 tab-separated columns, found {k}"))),
        };
        if idx.contains('-') || idx.contains('.') {
            continue;
        }
        let idx: usize = idx
            .parse()
            .map_err(|_| bad(lineno, format!("token index `{idx}` is not an integer")))?;
        if idx != block.heads.len() + 1 {
            return Err(bad(
                lineno,
                format!("token index {idx} out of sequence, expected {}", block.heads.len() + 1),
            ));
        }
        let head: usize = head
            .parse()
            .map_err(|_| bad(lineno, format!("head `{head}` is not an integer")))?;
        block.heads.push(head);
    }
    if let Some(b) = cur.take() {
        finish(b, &mut out)?;
    }
    if out.is_empty() {
        return Err(FormatError::invalid(path, Position::File, "no parses"));
    }
    Ok(out)
}

pub fn load_parses(path: &Path) -> Result<Vec<ParseEntry>, FormatError> {
    parse_parses(path, &read_text(path)?)
}

/// Writes the two-column form.
pub fn write_parses(path: &Path, entries: &[ParseEntry]) -> Result<(), FormatError> {
    let mut s = String::new();
    for e in entries {
        if let Some(id) = &e.id {
            s.push_str(&format!("# id = {id}\n"));
        }
        for (j, h) in e.tree.heads().iter().enumerate() {
            s.push_str(&format!("{}\t{h}\n", j + 1));
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}
