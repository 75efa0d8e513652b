//! Binary index format, magic `CHS1`.
//!
//! All integers are varbyte. Layout:
//!
//! ```text
//! magic            b"CHS1"
//! n_docs, total_terms, text_bytes
//! doc table        per doc: doc_id gap (first absolute), len, date days
//! vocab_count
//! dictionary       per term, lexicographic: term_len, term bytes,
//!                  postings offset relative to the postings section
//! postings         per term: group_count, then per group:
//!                  tf, count, doc ids delta coded (first absolute)
//! ```
//!
//! Every section is written from ordered maps, so rebuilding the same logical
//! index always produces identical bytes. Reading is strict: wrong magic,
//! truncation, non-monotonic ids or tf groups, offset drift, postings that
//! point at unknown documents, and trailing bytes are all errors.

use std::collections::BTreeMap;

use super::codec::{delta_decode, delta_encode, encode_vbyte_into, VbyteReader};
use super::{DocEntry, Index, PostingsGroup, PostingsList};
use crate::date::Date;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CHS1";

pub fn write_index(index: &Index) -> Vec<u8> {
    let mut postings = Vec::new();
    let mut offsets = Vec::with_capacity(index.dictionary.len());
    for pl in index.dictionary.values() {
        offsets.push(postings.len() as u64);
        encode_vbyte_into(pl.groups().len() as u64, &mut postings);
        for group in pl.groups() {
            encode_vbyte_into(group.tf as u64, &mut postings);
            encode_vbyte_into(group.doc_ids.len() as u64, &mut postings);
            let gaps = delta_encode(&group.doc_ids).expect("group ids strictly increasing");
            for gap in gaps {
                encode_vbyte_into(gap, &mut postings);
            }
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    encode_vbyte_into(index.docs.len() as u64, &mut out);
    encode_vbyte_into(index.total_terms, &mut out);
    encode_vbyte_into(index.text_bytes, &mut out);
    let mut prev_id = 0u64;
    for (i, entry) in index.docs.iter().enumerate() {
        let gap = if i == 0 { entry.doc_id } else { entry.doc_id - prev_id };
        prev_id = entry.doc_id;
        encode_vbyte_into(gap, &mut out);
        encode_vbyte_into(entry.len, &mut out);
        encode_vbyte_into(entry.date.days() as u64, &mut out);
    }
    encode_vbyte_into(index.dictionary.len() as u64, &mut out);
    for (term, offset) in index.dictionary.keys().zip(offsets) {
        encode_vbyte_into(term.len() as u64, &mut out);
        out.extend_from_slice(term.as_bytes());
        encode_vbyte_into(offset, &mut out);
    }
    out.extend_from_slice(&postings);
    out
}

pub fn read_index(bytes: &[u8]) -> Result<Index> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::FileFormat("bad magic, expected CHS1".into()));
    }
    let mut r = VbyteReader::new(&bytes[MAGIC.len()..]);

    let n_docs = r.read()?;
    let total_terms = r.read()?;
    let text_bytes = r.read()?;

    let mut docs = Vec::with_capacity(n_docs as usize);
    let mut prev_id = 0u64;
    for i in 0..n_docs {
        let gap = r.read()?;
        if i > 0 && gap == 0 {
            return Err(Error::FileFormat("doc table ids not increasing".into()));
        }
        let doc_id = prev_id
            .checked_add(gap)
            .ok_or_else(|| Error::FileFormat("doc id overflow".into()))?;
        prev_id = doc_id;
        let len = r.read()?;
        let days = r.read()?;
        let date = Date::from_days(u32::try_from(days).map_err(|_| {
            Error::FileFormat(format!("doc {doc_id} date out of range"))
        })?)?;
        docs.push(DocEntry { doc_id, len, date });
    }

    let vocab_count = r.read()?;
    let mut terms: Vec<(String, u64)> = Vec::with_capacity(vocab_count as usize);
    for _ in 0..vocab_count {
        let term_len = r.read()? as usize;
        let raw = r.take(term_len)?;
        let term = std::str::from_utf8(raw)
            .map_err(|_| Error::FileFormat("dictionary term not UTF-8".into()))?
            .to_string();
        if let Some((prev, _)) = terms.last() {
            if term.as_bytes() <= prev.as_bytes() {
                return Err(Error::FileFormat("dictionary terms not sorted".into()));
            }
        }
        let offset = r.read()?;
        terms.push((term, offset));
    }

    let section_start = r.pos();
    let mut dictionary = BTreeMap::new();
    let mut postings_terms = 0u64;
    for (term, offset) in terms {
        if r.pos() - section_start != offset as usize {
            return Err(Error::FileFormat(format!(
                "postings offset drift for term {term:?}"
            )));
        }
        let group_count = r.read()?;
        let mut groups = Vec::with_capacity(group_count as usize);
        let mut prev_tf: Option<u32> = None;
        for _ in 0..group_count {
            let tf = u32::try_from(r.read()?)
                .map_err(|_| Error::FileFormat("tf out of range".into()))?;
            if tf == 0 || prev_tf.is_some_and(|p| tf >= p) {
                return Err(Error::FileFormat("tf groups not strictly decreasing".into()));
            }
            prev_tf = Some(tf);
            let count = r.read()? as usize;
            if count == 0 {
                return Err(Error::FileFormat("empty tf group".into()));
            }
            let mut gaps = Vec::with_capacity(count);
            for _ in 0..count {
                gaps.push(r.read()?);
            }
            let doc_ids = delta_decode(&gaps)
                .map_err(|_| Error::FileFormat("group ids not increasing".into()))?;
            for &id in &doc_ids {
                if docs.binary_search_by_key(&id, |e: &DocEntry| e.doc_id).is_err() {
                    return Err(Error::FileFormat(format!(
                        "posting references unknown doc {id}"
                    )));
                }
            }
            postings_terms += tf as u64 * doc_ids.len() as u64;
            groups.push(PostingsGroup { tf, doc_ids });
        }
        dictionary.insert(term, PostingsList::from_groups(groups));
    }

    if !r.is_empty() {
        return Err(Error::FileFormat("trailing bytes after postings".into()));
    }
    if postings_terms != total_terms {
        return Err(Error::FileFormat(format!(
            "postings hold {postings_terms} term occurrences, header says {total_terms}"
        )));
    }

    Ok(Index {
        docs,
        dictionary,
        total_terms,
        text_bytes,
    })
}
