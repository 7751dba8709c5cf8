//! `.peemb` binary embeddings.
//!
//! Layout, all little-endian:
//!
//! | offset | size | field                       |
//! |--------|------|-----------------------------|
//! | 0      | 6    | magic `PEEMB1`              |
//! | 6      | 2    | version (`u16`, currently 1)|
//! | 8      | 4    | `n_tokens` (`u32`)          |
//! | 12     | 4    | `d_in` (`u32`)              |
//! | 16     | …    | `(n_tokens + 1) · d_in` `f32`, row-major |
//!
//! Row 0 is the sequence embedding; rows `1..=n_tokens` are the tokens.

use std::path::Path;

use ndarray::Array2;

use super::{read_bytes, write_atomic, FormatError, Position};

pub const EMBEDDING_MAGIC: &[u8; 6] = b"PEEMB1";
pub const EMBEDDING_VERSION: u16 = 1;
const HEADER: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    n_tokens: usize,
    d_in: usize,
    data: Vec<f32>,
}

impl EmbeddingFile {
    /// `sequence` has `d_in` values; `tokens` is `n_tokens × d_in`.
    pub fn new(sequence: &[f32], tokens: &Array2<f32>) -> Result<Self, String> {
        let (n, d) = tokens.dim();
        if sequence.len() != d {
            return Err(format!("sequence has {} values, tokens have {d} columns", sequence.len()));
        }
        if n == 0 || d == 0 {
            return Err("need at least one token and one dimension".into());
        }
        let mut data = sequence.to_vec();
        data.extend(tokens.iter().copied());
        if data.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        Ok(Self { n_tokens: n, d_in: d, data })
    }

    /// Narrows `f64` inputs to `f32`.
    pub fn from_f64(sequence: &[f64], tokens: &Array2<f64>) -> Result<Self, String> {
        let seq: Vec<f32> = sequence.iter().map(|&v| v as f32).collect();
        Self::new(&seq, &tokens.mapv(|v| v as f32))
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn sequence(&self) -> Vec<f64> {
        self.data[..self.d_in].iter().map(|&v| v as f64).collect()
    }

    pub fn tokens(&self) -> Array2<f64> {
        Array2::from_shape_vec(
            (self.n_tokens, self.d_in),
            self.data[self.d_in..].iter().map(|&v| v as f64).collect(),
        )
        .expect("length checked at construction")
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER + 4 * self.data.len());
        out.extend_from_slice(EMBEDDING_MAGIC);
        out.extend_from_slice(&EMBEDDING_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_tokens as u32).to_le_bytes());
        out.extend_from_slice(&(self.d_in as u32).to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }
}

pub fn parse_embeddings(path: &Path, bytes: &[u8]) -> Result<EmbeddingFile, FormatError> {
    let bad = |at: usize, m: String| FormatError::invalid(path, Position::Byte(at as u64), m);
    if bytes.len() < HEADER {
        return Err(bad(
            bytes.len(),
            format!("truncated header: {} of {HEADER} bytes", bytes.len()),
        ));
    }
    if &bytes[..6] != EMBEDDING_MAGIC {
        return Err(bad(0, "bad magic, expected PEEMB1".into()));
    }
    let version = u16::from_le_bytes([bytes[6], bytes[7]]);
    if version != EMBEDDING_VERSION {
        return Err(bad(6, format!("unsupported version {version}")));
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let d = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
    if n == 0 {
        return Err(bad(8, "n_tokens is zero".into()));
    }
    if d == 0 {
        return Err(bad(12, "d_in is zero".into()));
    }
    let expected = (n as u128 + 1) * d as u128 * 4 + HEADER as u128;
    if (bytes.len() as u128) < expected {
        return Err(bad(
            bytes.len(),
            format!("truncated: {} bytes, header implies {expected}", bytes.len()),
        ));
    }
    if (bytes.len() as u128) > expected {
        return Err(bad(expected as usize, format!("{} trailing bytes", bytes.len() as u128 - expected)));
    }
    let mut data = Vec::with_capacity((n + 1) * d);
    for (i, chunk) in bytes[HEADER..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            return Err(bad(HEADER + 4 * i, "non-finite value".into()));
        }
        data.push(v);
    }
    Ok(EmbeddingFile { n_tokens: n, d_in: d, data })
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingFile, FormatError> {
    parse_embeddings(path, &read_bytes(path)?)
}

pub fn write_embeddings(path: &Path, file: &EmbeddingFile) -> Result<(), FormatError> {
    write_atomic(path, &file.to_bytes())
}
