//! Documents and JSONL corpus files.
//!
//! A corpus file holds one JSON object per line with exactly the fields
//! `doc_id`, `uri`, `modified_date`, `text`. Loading is strict: any malformed
//! line aborts with its line number, duplicate ids and out-of-window dates are
//! integrity errors.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::date::Date;
use crate::error::{Error, Result};

pub type DocId = u64;
pub type Term = String;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub doc_id: DocId,
    pub uri: String,
    pub modified_date: Date,
    pub text: String,
}

/// Splits into maximal alphanumeric runs, lowercased.
///
/// The text is lowercased before splitting: some case mappings emit combining
/// marks (which are not alphanumeric), and lowercasing first keeps the output
/// free of them, so every token is a non-empty run of lowercase-or-caseless
/// alphanumerics.
pub fn tokenize(text: &str) -> Vec<Term> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Raw record used during load so date problems can be classified after the
/// JSON layer instead of surfacing as opaque serde errors.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    doc_id: DocId,
    uri: String,
    modified_date: String,
    text: String,
}

pub fn load_corpus(path: &Path) -> Result<Vec<Document>> {
    parse_corpus(BufReader::new(File::open(path)?))
}

pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let raw: RawDocument = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let modified_date = match Date::parse(&raw.modified_date) {
            Ok(d) => d,
            Err(e @ Error::DateOutOfRange(_)) => return Err(e),
            Err(_) => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("malformed modified_date {:?}", raw.modified_date),
                })
            }
        };
        if !seen.insert(raw.doc_id) {
            return Err(Error::DuplicateDocId(raw.doc_id));
        }
        docs.push(Document {
            doc_id: raw.doc_id,
            uri: raw.uri,
            modified_date,
            text: raw.text,
        });
    }
    Ok(docs)
}

pub fn write_corpus(path: &Path, docs: &[Document]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for doc in docs {
        serde_json::to_writer(&mut w, doc)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_basic() {
        assert_eq!(tokenize("Hello, World"), vec!["hello", "world"]);
        assert_eq!(tokenize("IPv4 2021-03"), vec!["ipv4", "2021", "03"]);
    }

    #[test]
    fn tokenize_edges() {
        assert_eq!(tokenize(""), Vec::<Term>::new());
        assert_eq!(tokenize("  ,,--  "), Vec::<Term>::new());
        assert_eq!(tokenize("a"), vec!["a"]);
        // Unicode letters survive, punctuation splits.
        assert_eq!(tokenize("naïve re-entry"), vec!["naïve", "re", "entry"]);
    }

    #[test]
    fn tokenize_idempotent_on_own_output() {
        let toks = tokenize("Mixed CASE, 42 times; Ünïcode!");
        let rejoined = toks.join(" ");
        assert_eq!(tokenize(&rejoined), toks);
    }

    proptest! {
        #[test]
        fn tokens_are_lowercase_alnum_runs(text in ".{0,200}") {
            for tok in tokenize(&text) {
                prop_assert!(!tok.is_empty());
                prop_assert!(tok.chars().all(char::is_alphanumeric), "token {tok:?}");
                prop_assert_eq!(tok.to_lowercase(), tok.clone(), "token {:?} not lowercase", tok);
            }
        }

        #[test]
        fn corpus_roundtrip(n in 0usize..20) {
            let docs: Vec<Document> = (0..n)
                .map(|i| Document {
                    doc_id: i as DocId * 7 + 1,
                    uri: format!("https://example.org/{i}"),
                    modified_date: Date::from_days(1000 + i as u32 * 400).unwrap(),
                    text: format!("body text {i} with \"quotes\" and \\slashes\\"),
                })
                .collect();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("corpus.jsonl");
            write_corpus(&path, &docs).unwrap();
            let back = load_corpus(&path).unwrap();
            prop_assert_eq!(back, docs);
        }
    }

    #[test]
    fn written_lines_have_exact_field_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.jsonl");
        let doc = Document {
            doc_id: 9,
            uri: "u".into(),
            modified_date: Date::parse("2020-05-05").unwrap(),
            text: "t".into(),
        };
        write_corpus(&path, &[doc]).unwrap();
        let line = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            line,
            "{\"doc_id\":9,\"uri\":\"u\",\"modified_date\":\"2020-05-05\",\"text\":\"t\"}\n"
        );
    }

    #[test]
    fn load_reports_line_numbers() {
        let input = "{\"doc_id\":1,\"uri\":\"a\",\"modified_date\":\"2020-01-01\",\"text\":\"x\"}\nnot json\n";
        let err = parse_corpus(input.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn load_rejects_duplicates_and_bad_dates() {
        let dup = "{\"doc_id\":1,\"uri\":\"a\",\"modified_date\":\"2020-01-01\",\"text\":\"x\"}\n\
                   {\"doc_id\":1,\"uri\":\"b\",\"modified_date\":\"2020-01-02\",\"text\":\"y\"}\n";
        assert!(matches!(
            parse_corpus(dup.as_bytes()),
            Err(Error::DuplicateDocId(1))
        ));

        let out_of_range =
            "{\"doc_id\":1,\"uri\":\"a\",\"modified_date\":\"1980-01-01\",\"text\":\"x\"}\n";
        assert!(matches!(
            parse_corpus(out_of_range.as_bytes()),
            Err(Error::DateOutOfRange(_))
        ));

        let malformed =
            "{\"doc_id\":1,\"uri\":\"a\",\"modified_date\":\"Jan 1 2020\",\"text\":\"x\"}\n";
        assert!(matches!(
            parse_corpus(malformed.as_bytes()),
            Err(Error::Parse { line: 1, .. })
        ));
    }
}
