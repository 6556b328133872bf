use serde::{Deserialize, Serialize};

use crate::hash::fnv1a64;

/// Either the zero vector or unit length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    /// Cosine similarity; 0 when either side is the zero vector.
    pub fn cosine(&self, other: &Embedding) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let dot: f64 = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        dot / (na * nb)
    }
}

/// Lowercased runs of alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Index and sign a token contributes: bit 0 of its FNV-1a hash picks the
/// sign (1 is positive), the remaining bits pick the slot.
pub fn token_slot(token: &str, dim: usize) -> (usize, f64) {
    let h = fnv1a64(token.as_bytes());
    let index = ((h >> 1) % dim as u64) as usize;
    let sign = if h & 1 == 1 { 1.0 } else { -1.0 };
    (index, sign)
}

/// Default hashing embedder: signed token counts, L2-normalized.
pub fn embed(text: &str, dim: usize) -> Embedding {
    assert!(dim >= 1, "embedding dimension must be positive");
    let mut values = vec![0.0f64; dim];
    for token in tokenize(text) {
        let (i, sign) = token_slot(&token, dim);
        values[i] += sign;
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in &mut values {
            *v /= norm;
        }
    }
    Embedding(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_zero_vector() {
        assert!(embed("", 64).is_zero());
        assert!(embed("  ,;!  ", 64).is_zero());
    }

    #[test]
    fn case_and_punctuation_insensitive() {
        assert_eq!(embed("A b", 64), embed("a B", 64));
        assert_eq!(embed("Hello, world!", 32), embed("hello world", 32));
    }

    #[test]
    fn connectnet_slot() {
        // FNV-1a 64("connectnet") = 0x052dbaea8672866c (independent Python
        // computation): even, so negative; (h >> 1) % 64 = 54.
        assert_eq!(fnv1a64(b"connectnet"), 0x052d_baea_8672_866c);
        assert_eq!(token_slot("connectnet", 64), (54, -1.0));
        let e = embed("ConnectNet", 64);
        assert_eq!(e.values()[54], -1.0);
        assert_eq!(e.values().iter().filter(|v| **v != 0.0).count(), 1);
    }

    #[test]
    fn cancelling_tokens_give_zero_vector() {
        // Find two tokens that land in the same slot with opposite signs.
        let dim = 2;
        let (ia, sa) = token_slot("alpha", dim);
        let partner = (0..1000)
            .map(|i| format!("w{i}"))
            .find(|w| token_slot(w, dim) == (ia, -sa))
            .unwrap();
        assert!(embed(&format!("alpha {partner}"), dim).is_zero());
    }

    #[test]
    fn cosine_with_zero_is_zero() {
        let a = embed("posts likes shares", 16);
        assert_eq!(a.cosine(&Embedding::zeros(16)), 0.0);
        assert!((a.cosine(&a) - 1.0).abs() < 1e-12);
    }
}
