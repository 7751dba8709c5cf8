use std::fmt;

use serde::{Deserialize, Serialize};

/// Token-presence bitset: bit `j` set means token `j` is kept.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    n: usize,
    words: Vec<u64>,
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mask({}, {})", self.n, self.to_hex())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaskError {
    #[error("invalid hex mask `{0}`")]
    BadHex(String),
    #[error("mask `{hex}` has {bytes} bytes, expected {expected} for {n} tokens")]
    Length { hex: String, bytes: usize, expected: usize, n: usize },
    #[error("mask `{0}` sets bits beyond the token count")]
    StrayBits(String),
}

impl Mask {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            words: vec![0; n.div_ceil(64)],
        }
    }

    pub fn full(n: usize) -> Self {
        let mut m = Self::empty(n);
        for j in 0..n {
            m.set(j, true);
        }
        m
    }

    pub fn from_present(n: usize, present: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(n);
        for j in present {
            m.set(j, true);
        }
        m
    }

    /// Full mask with the given tokens removed.
    pub fn without(n: usize, removed: &[usize]) -> Self {
        let mut m = Self::full(n);
        for &j in removed {
            m.set(j, false);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn contains(&self, j: usize) -> bool {
        j < self.n && self.words[j / 64] >> (j % 64) & 1 == 1
    }

    pub fn set(&mut self, j: usize, on: bool) {
        assert!(j < self.n, "token {j} out of range for mask of {}", self.n);
        let bit = 1u64 << (j % 64);
        if on {
            self.words[j / 64] |= bit;
        } else {
            self.words[j / 64] &= !bit;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.n
    }

    pub fn is_none_present(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn present(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    /// Lowercase hex of the little-endian byte string: byte `i` holds tokens
    /// `8i..8i+8`, token `8i` in its least significant bit.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self
            .words
            .iter()
            .flat_map(|w| w.to_le_bytes())
            .take(self.n.div_ceil(8))
            .collect();
        hex::encode(bytes)
    }

    pub fn from_hex(n: usize, s: &str) -> Result<Self, MaskError> {
        let bytes = hex::decode(s).map_err(|_| MaskError::BadHex(s.to_string()))?;
        let expected = n.div_ceil(8);
        if bytes.len() != expected {
            return Err(MaskError::Length {
                hex: s.to_string(),
                bytes: bytes.len(),
                expected,
                n,
            });
        }
        let mut m = Self::empty(n);
        for (i, b) in bytes.iter().enumerate() {
            for bit in 0..8 {
                if b >> bit & 1 == 1 {
                    let j = i * 8 + bit;
                    if j >= n {
                        return Err(MaskError::StrayBits(s.to_string()));
                    }
                    m.set(j, true);
                }
            }
        }
        Ok(m)
    }
}

/// How a removed token is presented to the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// The token is dropped and the input shortens.
    Del,
    /// The token is replaced by the pad token.
    Pad,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Del => "del",
            Strategy::Pad => "pad",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "del" => Ok(Strategy::Del),
            "pad" => Ok(Strategy::Pad),
            other => Err(format!("unknown strategy `{other}` (expected del or pad)")),
        }
    }
}
