//! Corpus-size estimation from term-frequency probes.
//!
//! A reference corpus with known document count supplies probe terms spread
//! evenly across its df-ranked vocabulary. An engine that reports document
//! frequencies can then be sized as the mean of df_engine / fraction_ref per
//! probe, and multiple engines combine with an overlap discount estimated
//! from sampled result sets.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::corpus::{DocId, Term};
use crate::error::{Error, Result};
use crate::index::Index;

pub const DEFAULT_PROBES: usize = 50;

/// Minimal interface a sizeable engine must answer.
pub trait Engine {
    /// Number of documents containing the term.
    fn df(&self, term: &str) -> u64;
    /// Up to k sampled result documents; stands in for top-k result pages.
    fn sample_top(&self, k: usize, seed: u64) -> Vec<DocId>;
    fn contains(&self, doc_id: DocId) -> bool;
}

impl Engine for Index {
    fn df(&self, term: &str) -> u64 {
        self.postings(term).map_or(0, |p| p.df())
    }

    fn sample_top(&self, k: usize, seed: u64) -> Vec<DocId> {
        let n = self.docs().len();
        let take = k.min(n);
        if take == 0 {
            return Vec::new();
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rand::seq::index::sample(&mut rng, n, take)
            .into_iter()
            .map(|i| self.docs()[i].doc_id)
            .collect()
    }

    fn contains(&self, doc_id: DocId) -> bool {
        self.doc_entry(doc_id).is_some()
    }
}

/// A probe term with its reference document frequency. Keeping df and N as
/// integers lets the estimator divide exactly when an engine equals the
/// reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Probe {
    pub term: Term,
    pub df: u64,
    pub n_ref: u64,
}

impl Probe {
    /// Fraction of reference documents containing the term.
    pub fn fraction(&self) -> f64 {
        self.df as f64 / self.n_ref as f64
    }
}

/// Picks `n` probe terms at evenly spaced positions of the df-ranked
/// vocabulary (ties broken by term), so probes span the frequency spectrum.
pub fn zipf_probes(reference: &Index, n: usize) -> Result<Vec<Probe>> {
    let vocab = reference.vocab_size();
    if reference.n_docs() == 0 || vocab == 0 {
        return Err(Error::Parameter("reference index is empty".into()));
    }
    if n == 0 {
        return Err(Error::Parameter("need at least one probe".into()));
    }
    if n > vocab {
        return Err(Error::Parameter(format!(
            "{n} probes exceed the vocabulary of {vocab} terms"
        )));
    }
    let mut ranked: Vec<(&Term, u64)> = reference
        .vocab()
        .map(|(term, postings)| (term, postings.df()))
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let n_ref = reference.n_docs();
    Ok((0..n)
        .map(|i| {
            // Rank positions at the midpoints of n equal vocabulary strata.
            let pos = ((i as f64 + 0.5) * vocab as f64 / n as f64) as usize;
            let (term, df) = ranked[pos.min(vocab - 1)];
            Probe {
                term: term.clone(),
                df,
                n_ref,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineEstimate {
    pub documents: f64,
    pub probes_used: usize,
    pub probes_excluded: usize,
}

/// Estimates an engine's document count as mean(df_engine(t) / fraction(t))
/// over the probes. Probes whose reference frequency is zero carry no
/// information and are excluded (counted in the report).
pub fn estimate_engine_size(engine: &dyn Engine, probes: &[Probe]) -> Result<EngineEstimate> {
    if probes.is_empty() {
        return Err(Error::Parameter("probe set is empty".into()));
    }
    let mut sum = 0.0;
    let mut used = 0usize;
    for probe in probes {
        if probe.df == 0 {
            continue;
        }
        sum += engine.df(&probe.term) as f64 * probe.n_ref as f64 / probe.df as f64;
        used += 1;
    }
    if used == 0 {
        return Err(Error::Estimation(
            "every probe had zero reference frequency".into(),
        ));
    }
    Ok(EngineEstimate {
        documents: sum / used as f64,
        probes_used: used,
        probes_excluded: probes.len() - used,
    })
}

/// Combines engine size estimates with an overlap discount: the first engine
/// counts fully; each later engine counts only its estimated unique fraction,
/// measured by how many of its sampled documents earlier engines also hold.
/// An empty sample gives no overlap evidence and counts the engine fully.
pub fn estimate_web_size(
    engines: &[&dyn Engine],
    probes: &[Probe],
    sample_k: usize,
    seed: u64,
) -> Result<f64> {
    if engines.is_empty() {
        return Err(Error::Parameter("no engines to combine".into()));
    }
    let sizes: Vec<f64> = engines
        .iter()
        .map(|e| estimate_engine_size(*e, probes).map(|r| r.documents))
        .collect::<Result<_>>()?;
    let mut total = sizes[0];
    for (i, engine) in engines.iter().enumerate().skip(1) {
        let sample = engine.sample_top(sample_k, seed.wrapping_add(i as u64));
        let uniqueness = if sample.is_empty() {
            1.0
        } else {
            let seen = sample
                .iter()
                .filter(|doc| engines[..i].iter().any(|e| e.contains(**doc)))
                .count();
            1.0 - seen as f64 / sample.len() as f64
        };
        total += sizes[i] * uniqueness;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::date::Date;
    use crate::simulate::{synthesize_corpus, SimConfig};
    use rand::Rng;

    fn doc(id: DocId, text: &str) -> Document {
        Document {
            doc_id: id,
            uri: format!("urn:doc:{id}"),
            modified_date: Date::parse("2010-06-01").unwrap(),
            text: text.to_string(),
        }
    }

    fn tiny_reference() -> Index {
        // dfs: a=5, b=3, c=1
        let docs = vec![
            doc(1, "a b c"),
            doc(2, "a b"),
            doc(3, "a b"),
            doc(4, "a"),
            doc(5, "a"),
        ];
        Index::build(&docs).unwrap()
    }

    fn synthetic_reference() -> (Vec<Document>, Index) {
        let cfg = SimConfig {
            horizon_days: 1500,
            docs_per_day: 2,
            vocab_size: 1200,
            doc_len_min: 100,
            doc_len_max: 150,
            ..SimConfig::default()
        };
        let corpus = synthesize_corpus(&cfg).unwrap();
        let index = Index::build(&corpus).unwrap();
        (corpus, index)
    }

    #[test]
    fn probes_span_the_vocabulary() {
        let reference = tiny_reference();
        let all = zipf_probes(&reference, 3).unwrap();
        assert_eq!(
            all.iter().map(|p| p.term.as_str()).collect::<Vec<_>>(),
            vec!["a", "b", "c"]
        );
        assert_eq!(all[0].df, 5);
        assert_eq!(all[0].fraction(), 1.0);
        // Fractions are non-increasing across the ranked probe set.
        assert!(all.windows(2).all(|w| w[0].df >= w[1].df));

        // A single probe lands on the median rank.
        let one = zipf_probes(&reference, 1).unwrap();
        assert_eq!(one[0].term, "b");

        assert!(zipf_probes(&reference, 0).is_err());
        assert!(zipf_probes(&reference, 4).is_err());
        let empty = Index::build(&[]).unwrap();
        assert!(zipf_probes(&empty, 1).is_err());
    }

    #[test]
    fn reference_engine_estimates_itself_exactly() {
        let (_, reference) = synthetic_reference();
        let probes = zipf_probes(&reference, DEFAULT_PROBES).unwrap();
        let est = estimate_engine_size(&reference, &probes).unwrap();
        assert_eq!(est.documents, reference.n_docs() as f64);
        assert_eq!(est.probes_used, DEFAULT_PROBES);
        assert_eq!(est.probes_excluded, 0);
    }

    #[test]
    fn empty_engine_estimates_zero() {
        let reference = tiny_reference();
        let probes = zipf_probes(&reference, 3).unwrap();
        let empty = Index::build(&[]).unwrap();
        let est = estimate_engine_size(&empty, &probes).unwrap();
        assert_eq!(est.documents, 0.0);
    }

    #[test]
    fn zero_fraction_probes_are_excluded() {
        let reference = tiny_reference();
        let mut probes = zipf_probes(&reference, 3).unwrap();
        probes.push(Probe {
            term: "unseen".into(),
            df: 0,
            n_ref: 5,
        });
        let est = estimate_engine_size(&reference, &probes).unwrap();
        assert_eq!(est.probes_excluded, 1);
        assert_eq!(est.documents, 5.0);

        let all_zero = vec![Probe {
            term: "unseen".into(),
            df: 0,
            n_ref: 5,
        }];
        assert!(matches!(
            estimate_engine_size(&reference, &all_zero),
            Err(Error::Estimation(_))
        ));
        assert!(estimate_engine_size(&reference, &[]).is_err());
    }

    #[test]
    fn uniform_sample_estimated_within_ten_percent() {
        let (corpus, reference) = synthetic_reference();
        let probes = zipf_probes(&reference, DEFAULT_PROBES).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let sampled: Vec<Document> = corpus
            .iter()
            .filter(|_| rng.gen::<f64>() < 0.5)
            .cloned()
            .collect();
        let engine = Index::build(&sampled).unwrap();
        let est = estimate_engine_size(&engine, &probes).unwrap();
        let truth = sampled.len() as f64;
        assert!(
            (est.documents - truth).abs() / truth < 0.10,
            "estimate {} vs true {truth}",
            est.documents
        );
    }

    #[test]
    fn identical_engines_collapse_to_one() {
        let (_, reference) = synthetic_reference();
        let probes = zipf_probes(&reference, DEFAULT_PROBES).unwrap();
        let single = estimate_engine_size(&reference, &probes).unwrap().documents;
        let total =
            estimate_web_size(&[&reference, &reference], &probes, 40, 7).unwrap();
        assert_eq!(total, single);
    }

    #[test]
    fn disjoint_engines_sum() {
        let (corpus, reference) = synthetic_reference();
        let probes = zipf_probes(&reference, DEFAULT_PROBES).unwrap();
        let half = corpus.len() / 2;
        let first = Index::build(&corpus[..half]).unwrap();
        let second = Index::build(&corpus[half..]).unwrap();
        let s1 = estimate_engine_size(&first, &probes).unwrap().documents;
        let s2 = estimate_engine_size(&second, &probes).unwrap().documents;
        let total = estimate_web_size(&[&first, &second], &probes, 40, 7).unwrap();
        assert_eq!(total, s1 + s2);
        assert!(estimate_web_size(&[], &probes, 40, 7).is_err());
    }

    #[test]
    fn planted_overlap_union_within_fifteen_percent() {
        let (corpus, reference) = synthetic_reference();
        let probes = zipf_probes(&reference, DEFAULT_PROBES).unwrap();
        let n = corpus.len();
        // First engine holds docs [0, 2n/3); second holds [n/3, n): a third
        // of the corpus is shared.
        let first = Index::build(&corpus[..2 * n / 3]).unwrap();
        let second = Index::build(&corpus[n / 3..]).unwrap();
        let union = n as f64;
        let total = estimate_web_size(&[&first, &second], &probes, 150, 7).unwrap();
        assert!(
            (total - union).abs() / union < 0.15,
            "union estimate {total} vs exact {union}"
        );
    }

    #[test]
    fn sample_top_is_deterministic_and_contained() {
        let reference = tiny_reference();
        let a = reference.sample_top(3, 5);
        let b = reference.sample_top(3, 5);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|d| reference.contains(*d)));
        assert_eq!(reference.sample_top(10, 5).len(), 5);
        let empty = Index::build(&[]).unwrap();
        assert!(empty.sample_top(4, 1).is_empty());
    }
}
