//! Deterministic fixtures shared by the benchmark targets.

use chronoshard::corpus::{DocId, Document, Term};
use chronoshard::Date;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Synthetic corpus spread over roughly `n / 4` days from 2015-01-01.
pub fn synthetic_docs(n: usize, vocab: u32, seed: u64) -> Vec<Document> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let len = rng.gen_range(20..=60);
            let words: Vec<String> = (0..len)
                .map(|_| format!("w{}", rng.gen_range(0..vocab)))
                .collect();
            Document {
                doc_id: i as DocId + 1,
                uri: format!("urn:bench:{i}"),
                modified_date: Date::from_days(9_131 + (i / 4) as u32).unwrap(),
                text: words.join(" "),
            }
        })
        .collect()
}

/// Two- to three-term queries over the same vocabulary.
pub fn synthetic_queries(n: usize, vocab: u32, seed: u64) -> Vec<Vec<Term>> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..rng.gen_range(2..=3))
                .map(|_| format!("w{}", rng.gen_range(0..vocab)))
                .collect()
        })
        .collect()
}
