//! Term-only inverted index with impact-grouped postings and BM25 ranking.
//!
//! Postings for a term are grouped by raw term frequency, highest tf first,
//! with strictly increasing doc ids inside each group. Ranking is BM25 with
//! k1 = 0.9, b = 0.4 and the idf form `ln(1 + (N - df + 0.5) / (df + 0.5))`,
//! which is non-negative for every df <= N.
//!
//! Collection statistics are separable from the index so a search can be
//! scored under another authority's statistics. Per-document scores are
//! accumulated in query-term order, which keeps floating-point sums bitwise
//! identical between a monolithic search and a sharded search merged later.

pub mod codec;
mod format;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::corpus::{tokenize, DocId, Document, Term};
use crate::date::Date;
use crate::error::{Error, Result};

pub use codec::{decode_vbyte, delta_decode, delta_encode, encode_vbyte, VbyteReader};

pub const BM25_K1: f64 = 0.9;
pub const BM25_B: f64 = 0.4;

/// Per-document metadata kept alongside the dictionary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DocEntry {
    pub doc_id: DocId,
    pub len: u64,
    pub date: Date,
}

/// One tf-impact group: every doc id in `doc_ids` contains the term exactly
/// `tf` times. Ids are strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PostingsGroup {
    pub tf: u32,
    pub doc_ids: Vec<DocId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PostingsList {
    groups: Vec<PostingsGroup>,
}

impl PostingsList {
    /// Builds from (doc_id, tf) pairs with strictly increasing doc ids.
    pub fn from_run(pairs: &[(DocId, u32)]) -> Result<PostingsList> {
        let mut by_tf: BTreeMap<u32, Vec<DocId>> = BTreeMap::new();
        let mut last: Option<DocId> = None;
        for (i, &(doc_id, tf)) in pairs.iter().enumerate() {
            if tf == 0 {
                return Err(Error::Parameter(format!("zero tf for doc {doc_id}")));
            }
            if let Some(prev) = last {
                if doc_id <= prev {
                    return Err(Error::NotIncreasing { position: i });
                }
            }
            last = Some(doc_id);
            by_tf.entry(tf).or_default().push(doc_id);
        }
        let groups = by_tf
            .into_iter()
            .rev()
            .map(|(tf, doc_ids)| PostingsGroup { tf, doc_ids })
            .collect();
        Ok(PostingsList { groups })
    }

    pub(crate) fn from_groups(groups: Vec<PostingsGroup>) -> PostingsList {
        PostingsList { groups }
    }

    pub fn groups(&self) -> &[PostingsGroup] {
        &self.groups
    }

    pub fn df(&self) -> u64 {
        self.groups.iter().map(|g| g.doc_ids.len() as u64).sum()
    }

    /// Pairs in storage order: tf groups descending, ids ascending within.
    pub fn iter(&self) -> impl Iterator<Item = (DocId, u32)> + '_ {
        self.groups
            .iter()
            .flat_map(|g| g.doc_ids.iter().map(move |&d| (d, g.tf)))
    }

    /// Pairs re-sorted by doc id, for diffing against scan-based oracles.
    pub fn pairs_by_doc(&self) -> Vec<(DocId, u32)> {
        let mut v: Vec<(DocId, u32)> = self.iter().collect();
        v.sort_unstable_by_key(|&(d, _)| d);
        v
    }
}

/// A document reduced to sorted term counts, the unit the index builder
/// actually consumes. Incremental clients store these to rebuild without
/// keeping raw text around.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountedDoc {
    pub doc_id: DocId,
    pub date: Date,
    pub text_bytes: u64,
    /// Sorted by term, counts positive.
    pub counts: Vec<(Term, u32)>,
}

impl CountedDoc {
    pub fn from_document(doc: &Document) -> CountedDoc {
        let mut counts: BTreeMap<Term, u32> = BTreeMap::new();
        for tok in tokenize(&doc.text) {
            *counts.entry(tok).or_insert(0) += 1;
        }
        CountedDoc {
            doc_id: doc.doc_id,
            date: doc.modified_date,
            text_bytes: doc.text.len() as u64,
            counts: counts.into_iter().collect(),
        }
    }

    pub fn len(&self) -> u64 {
        self.counts.iter().map(|&(_, c)| c as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Statistics under which BM25 scores are computed. These can come from the
/// index itself or from an external authority (the datacentre, in the sharded
/// setting).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct CollectionStats {
    pub n_docs: u64,
    pub total_terms: u64,
    pub text_bytes: u64,
    df: HashMap<Term, u64>,
}

impl CollectionStats {
    pub fn df(&self, term: &str) -> u64 {
        self.df.get(term).copied().unwrap_or(0)
    }

    pub fn avg_doclen(&self) -> f64 {
        if self.n_docs == 0 {
            0.0
        } else {
            self.total_terms as f64 / self.n_docs as f64
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.df.len()
    }

    pub fn merge(&mut self, other: &CollectionStats) {
        self.n_docs += other.n_docs;
        self.total_terms += other.total_terms;
        self.text_bytes += other.text_bytes;
        for (term, df) in &other.df {
            *self.df.entry(term.clone()).or_insert(0) += df;
        }
    }

    /// Accounts one document in. Used by incremental clients.
    pub fn add_doc(&mut self, doc: &CountedDoc) {
        self.n_docs += 1;
        self.total_terms += doc.len();
        self.text_bytes += doc.text_bytes;
        for (term, _) in &doc.counts {
            *self.df.entry(term.clone()).or_insert(0) += 1;
        }
    }

    /// Reverses `add_doc`. Zero-df entries are dropped so that statistics
    /// rebuilt from scratch compare equal.
    pub fn remove_doc(&mut self, doc: &CountedDoc) {
        debug_assert!(self.n_docs > 0);
        self.n_docs -= 1;
        self.total_terms -= doc.len();
        self.text_bytes -= doc.text_bytes;
        for (term, _) in &doc.counts {
            if let Some(df) = self.df.get_mut(term.as_str()) {
                *df -= 1;
                if *df == 0 {
                    self.df.remove(term.as_str());
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Index {
    /// Sorted by doc_id.
    docs: Vec<DocEntry>,
    dictionary: BTreeMap<Term, PostingsList>,
    total_terms: u64,
    text_bytes: u64,
}

impl Index {
    pub fn build(docs: &[Document]) -> Result<Index> {
        Index::from_counted(docs.iter().map(CountedDoc::from_document))
    }

    /// Single constructor all build paths funnel through, so a fresh build and
    /// an incremental re-merge of the same documents produce identical bytes.
    pub fn from_counted<I: IntoIterator<Item = CountedDoc>>(docs: I) -> Result<Index> {
        let mut counted: Vec<CountedDoc> = docs.into_iter().collect();
        counted.sort_by_key(|d| d.doc_id);
        for pair in counted.windows(2) {
            if pair[0].doc_id == pair[1].doc_id {
                return Err(Error::DuplicateDocId(pair[0].doc_id));
            }
        }

        let mut entries = Vec::with_capacity(counted.len());
        let mut runs: BTreeMap<Term, Vec<(DocId, u32)>> = BTreeMap::new();
        let mut total_terms = 0u64;
        let mut text_bytes = 0u64;
        for doc in counted {
            let len = doc.len();
            total_terms += len;
            text_bytes += doc.text_bytes;
            entries.push(DocEntry {
                doc_id: doc.doc_id,
                len,
                date: doc.date,
            });
            for (term, count) in doc.counts {
                runs.entry(term).or_default().push((doc.doc_id, count));
            }
        }

        let mut dictionary = BTreeMap::new();
        for (term, run) in runs {
            dictionary.insert(term, PostingsList::from_run(&run)?);
        }
        Ok(Index {
            docs: entries,
            dictionary,
            total_terms,
            text_bytes,
        })
    }

    pub fn n_docs(&self) -> u64 {
        self.docs.len() as u64
    }

    pub fn total_terms(&self) -> u64 {
        self.total_terms
    }

    pub fn text_bytes(&self) -> u64 {
        self.text_bytes
    }

    pub fn docs(&self) -> &[DocEntry] {
        &self.docs
    }

    pub fn doc_entry(&self, doc_id: DocId) -> Option<&DocEntry> {
        self.docs
            .binary_search_by_key(&doc_id, |e| e.doc_id)
            .ok()
            .map(|i| &self.docs[i])
    }

    pub fn postings(&self, term: &str) -> Option<&PostingsList> {
        self.dictionary.get(term)
    }

    pub fn vocab(&self) -> impl Iterator<Item = (&Term, &PostingsList)> {
        self.dictionary.iter()
    }

    pub fn vocab_size(&self) -> usize {
        self.dictionary.len()
    }

    pub fn stats(&self) -> CollectionStats {
        CollectionStats {
            n_docs: self.n_docs(),
            total_terms: self.total_terms,
            text_bytes: self.text_bytes,
            df: self
                .dictionary
                .iter()
                .map(|(t, pl)| (t.clone(), pl.df()))
                .collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        format::write_index(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Index> {
        format::read_index(bytes)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn read_file(path: &Path) -> Result<Index> {
        Index::from_bytes(&std::fs::read(path)?)
    }
}

/// Persisted size over raw corpus text size. Undefined for text-free corpora.
pub fn index_ratio(index: &Index) -> Result<f64> {
    if index.text_bytes == 0 {
        return Err(Error::EmptyCorpus);
    }
    Ok(index.to_bytes().len() as f64 / index.text_bytes as f64)
}

/// One BM25 term-document contribution.
pub fn bm25_term_score(tf: u32, doclen: u64, df: u64, n_docs: u64, avg_doclen: f64) -> f64 {
    let idf = (1.0 + (n_docs as f64 - df as f64 + 0.5) / (df as f64 + 0.5)).ln();
    let tf = tf as f64;
    let norm = 1.0 - BM25_B + BM25_B * doclen as f64 / avg_doclen;
    idf * (tf * (BM25_K1 + 1.0)) / (tf + BM25_K1 * norm)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub doc_id: DocId,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct SearchResult {
    pub hits: Vec<Hit>,
}

impl SearchResult {
    pub fn doc_ids(&self) -> Vec<DocId> {
        self.hits.iter().map(|h| h.doc_id).collect()
    }
}

/// Sort order for ranked lists: score descending, doc id ascending on ties.
pub fn rank_order(a: &Hit, b: &Hit) -> std::cmp::Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.doc_id.cmp(&b.doc_id))
}

/// Top-k disjunctive BM25 search. `stats` overrides the index's own
/// statistics; pass `None` for standalone use. Terms unknown to the statistics
/// authority contribute nothing. Fewer than k matches return all matches.
pub fn search(index: &Index, query: &[Term], k: usize, stats: Option<&CollectionStats>) -> SearchResult {
    search_filtered(index, query, k, stats, |_| true)
}

/// `search` with a candidate filter. Excluded documents are dropped before
/// ranking, not after, so the top k is the true top k of the kept set.
pub fn search_filtered<F: Fn(&DocEntry) -> bool>(
    index: &Index,
    query: &[Term],
    k: usize,
    stats: Option<&CollectionStats>,
    keep: F,
) -> SearchResult {
    let own;
    let stats = match stats {
        Some(s) => s,
        None => {
            own = index.stats();
            &own
        }
    };
    let n = stats.n_docs;
    let avg = stats.avg_doclen();

    let mut acc: HashMap<DocId, f64> = HashMap::new();
    for term in query {
        let Some(pl) = index.postings(term) else { continue };
        let df = stats.df(term);
        if df == 0 {
            continue;
        }
        for group in pl.groups() {
            for &doc_id in &group.doc_ids {
                let Some(entry) = index.doc_entry(doc_id) else {
                    debug_assert!(false, "posting for doc {doc_id} missing from doc table");
                    continue;
                };
                if !keep(entry) {
                    continue;
                }
                *acc.entry(doc_id).or_insert(0.0) +=
                    bm25_term_score(group.tf, entry.len, df, n, avg);
            }
        }
    }

    let mut hits: Vec<Hit> = acc
        .into_iter()
        .map(|(doc_id, score)| Hit { doc_id, score })
        .collect();
    hits.sort_unstable_by(rank_order);
    hits.truncate(k);
    SearchResult { hits }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn doc(id: DocId, date: &str, text: &str) -> Document {
        Document {
            doc_id: id,
            uri: format!("urn:doc:{id}"),
            modified_date: Date::parse(date).unwrap(),
            text: text.to_string(),
        }
    }

    #[test]
    fn postings_grouped_by_tf_desc_ids_asc() {
        let docs = vec![
            doc(2, "2020-01-01", "x y"),
            doc(5, "2020-01-02", "x x x"),
            doc(9, "2020-01-03", "x z"),
        ];
        let idx = Index::build(&docs).unwrap();
        let pl = idx.postings("x").unwrap();
        let groups: Vec<(u32, Vec<DocId>)> = pl
            .groups()
            .iter()
            .map(|g| (g.tf, g.doc_ids.clone()))
            .collect();
        assert_eq!(groups, vec![(3, vec![5]), (1, vec![2, 9])]);
        assert_eq!(pl.df(), 3);
    }

    #[test]
    fn bm25_oracle_point() {
        // N = 2, df = 1, tf = 1, doclen = avg_doclen: the tf factor cancels
        // and the score is exactly ln 2.
        let docs = vec![
            doc(1, "2020-01-01", "alpha beta"),
            doc(2, "2020-01-02", "gamma delta"),
        ];
        let idx = Index::build(&docs).unwrap();
        let res = search(&idx, &["alpha".into()], 10, None);
        assert_eq!(res.doc_ids(), vec![1]);
        assert_relative_eq!(res.hits[0].score, 2f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn ties_break_toward_smaller_doc_id() {
        let docs = vec![
            doc(7, "2020-01-01", "same words here"),
            doc(3, "2020-01-02", "same words here"),
        ];
        let idx = Index::build(&docs).unwrap();
        let res = search(&idx, &["same".into(), "words".into()], 2, None);
        assert_eq!(res.doc_ids(), vec![3, 7]);
        assert_eq!(res.hits[0].score, res.hits[1].score);
    }

    #[test]
    fn k_larger_than_matches_returns_all() {
        let docs = vec![doc(1, "2020-01-01", "only hit")];
        let idx = Index::build(&docs).unwrap();
        let res = search(&idx, &["only".into()], 50, None);
        assert_eq!(res.hits.len(), 1);
        let res = search(&idx, &["only".into()], 0, None);
        assert!(res.hits.is_empty());
    }

    #[test]
    fn unknown_terms_contribute_zero() {
        let docs = vec![
            doc(1, "2020-01-01", "alpha beta"),
            doc(2, "2020-01-02", "alpha gamma"),
        ];
        let idx = Index::build(&docs).unwrap();
        let with = search(&idx, &["alpha".into(), "zzz".into()], 10, None);
        let without = search(&idx, &["alpha".into()], 10, None);
        assert_eq!(with, without);
    }

    #[test]
    fn stats_override_is_authoritative() {
        let visible = vec![doc(1, "2020-01-01", "alpha beta")];
        let idx = Index::build(&visible).unwrap();
        // Pretend a larger collection: same doc under N = 100, df = 7,
        // avg_doclen = 5.
        let wider = {
            let mut docs = vec![doc(1, "2020-01-01", "alpha beta")];
            for i in 2..=100u64 {
                let text = if i <= 7 { "alpha filler pad pad pad" } else { "filler pad pad pad pad" };
                docs.push(doc(i, "2020-01-01", text));
            }
            Index::build(&docs).unwrap()
        };
        let stats = wider.stats();
        assert_eq!(stats.df("alpha"), 7);
        let local = search(&idx, &["alpha".into()], 1, Some(&stats));
        let global = search(&wider, &["alpha".into()], 10, None);
        let in_global = global.hits.iter().find(|h| h.doc_id == 1).unwrap();
        assert_eq!(local.hits[0].score.to_bits(), in_global.score.to_bits());
    }

    #[test]
    fn filtered_topk_is_topk_of_kept_set() {
        let docs: Vec<Document> = (1..=20)
            .map(|i| {
                let tf = if i % 3 == 0 { "hot hot hot" } else { "hot cold" };
                doc(i, "2020-01-01", tf)
            })
            .collect();
        let idx = Index::build(&docs).unwrap();
        let keep_odd = |e: &DocEntry| e.doc_id % 2 == 1;
        let res = search_filtered(&idx, &["hot".into()], 5, None, keep_odd);
        assert!(res.hits.iter().all(|h| h.doc_id % 2 == 1));
        assert_eq!(res.hits.len(), 5);
    }

    #[test]
    fn empty_corpus_ratio_undefined() {
        let idx = Index::build(&[]).unwrap();
        assert!(matches!(index_ratio(&idx), Err(Error::EmptyCorpus)));
        let idx = Index::build(&[doc(1, "2020-01-01", "some real text")]).unwrap();
        let r = index_ratio(&idx).unwrap();
        assert!(r > 0.0);
    }

    #[test]
    fn rebuild_from_counted_matches_build() {
        let docs = vec![
            doc(4, "2021-05-01", "pack my box with five dozen jugs"),
            doc(2, "2021-04-01", "five boxing wizards jump"),
            doc(8, "2021-06-01", "jugs of liquid quartz"),
        ];
        let a = Index::build(&docs).unwrap();
        let counted: Vec<CountedDoc> = docs.iter().map(CountedDoc::from_document).collect();
        let b = Index::from_counted(counted).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_bytes(), b.to_bytes());
    }

    #[test]
    fn duplicate_doc_ids_rejected() {
        let docs = vec![doc(1, "2020-01-01", "a"), doc(1, "2020-01-02", "b")];
        assert!(matches!(Index::build(&docs), Err(Error::DuplicateDocId(1))));
    }

    proptest! {
        // Exhaustive-oracle equivalence on random corpora: score every doc by
        // direct term counting and compare the full ranking.
        #[test]
        fn search_matches_linear_scan(
            seed_docs in prop::collection::vec(
                (1u64..400, prop::collection::vec(0u32..12, 1..30)),
                1..25
            ),
            qterms in prop::collection::vec(0u32..12, 1..4)
        ) {
            let mut used = std::collections::HashSet::new();
            let docs: Vec<Document> = seed_docs
                .into_iter()
                .filter(|(id, _)| used.insert(*id))
                .map(|(id, words)| {
                    let text: Vec<String> = words.iter().map(|w| format!("w{w}")).collect();
                    doc(id, "2020-01-01", &text.join(" "))
                })
                .collect();
            let idx = Index::build(&docs).unwrap();
            let query: Vec<Term> = qterms.iter().map(|w| format!("w{w}")).collect();
            let got = search(&idx, &query, docs.len(), None);

            // Linear-scan oracle with its own counting.
            let n = docs.len() as u64;
            let total: u64 = docs.iter().map(|d| tokenize(&d.text).len() as u64).sum();
            let avg = total as f64 / n as f64;
            let mut expected: Vec<Hit> = docs
                .iter()
                .filter_map(|d| {
                    let toks = tokenize(&d.text);
                    let mut score = 0.0;
                    let mut any = false;
                    for q in &query {
                        let tf = toks.iter().filter(|t| *t == q).count() as u32;
                        if tf == 0 { continue; }
                        let df = docs
                            .iter()
                            .filter(|other| tokenize(&other.text).iter().any(|t| t == q))
                            .count() as u64;
                        score += bm25_term_score(tf, toks.len() as u64, df, n, avg);
                        any = true;
                    }
                    any.then_some(Hit { doc_id: d.doc_id, score })
                })
                .collect();
            expected.sort_by(rank_order);
            prop_assert_eq!(got.doc_ids(), expected.iter().map(|h| h.doc_id).collect::<Vec<_>>());
            for (g, e) in got.hits.iter().zip(&expected) {
                prop_assert!((g.score - e.score).abs() <= 1e-9 * e.score.abs().max(1.0));
            }
        }
    }
}
