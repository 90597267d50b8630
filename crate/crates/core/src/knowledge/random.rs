use std::collections::BTreeSet;

use sha2::{Digest, Sha256};

/// Seeded random relation: each vocabulary word maps to one vocabulary word.
///
/// The image of `w` is `vocab[h mod V]` where `h` is the first eight bytes
/// (little endian) of `SHA-256(seed as u64 LE || utf8(w))` and `vocab` is
/// the sorted vocabulary. Nothing is stored beyond the vocabulary.
#[derive(Clone, Debug)]
pub struct RandomRelation {
    seed: u64,
    vocab: Vec<String>,
}

impl RandomRelation {
    pub fn new(seed: u64, vocab: impl IntoIterator<Item = String>) -> Self {
        let vocab: BTreeSet<String> = vocab.into_iter().collect();
        RandomRelation { seed, vocab: vocab.into_iter().collect() }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocab
    }

    fn index(&self, word: &str) -> usize {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(word.as_bytes());
        let digest = h.finalize();
        let mut head = [0u8; 8];
        head.copy_from_slice(&digest[..8]);
        (u64::from_le_bytes(head) % self.vocab.len() as u64) as usize
    }

    /// Singleton image for vocabulary words, empty otherwise.
    pub fn apply(&self, word: &str) -> BTreeSet<String> {
        if self.vocab.binary_search_by(|w| w.as_str().cmp(word)).is_err() {
            return BTreeSet::new();
        }
        BTreeSet::from([self.vocab[self.index(word)].clone()])
    }

    /// Preimage of `word`.
    pub fn invert(&self, word: &str) -> BTreeSet<String> {
        self.vocab.iter().filter(|w| self.vocab[self.index(w)] == word).cloned().collect()
    }
}
