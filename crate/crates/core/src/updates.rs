//! Change archive and incremental client state.
//!
//! The archive is an append-only log of add/modify/delete changes with
//! gapless sequence numbers and non-decreasing dates. On disk it is magic
//! `CHL1` followed by length-prefixed, CRC-checked JSON records. A damaged
//! final record is treated as a torn write and truncated away; damage
//! anywhere else is corruption and refuses to load.
//!
//! `ClientState` is the client-side mirror: a merged base index plus a small
//! delta segment, re-merged into the base whenever the delta grows past a
//! configurable fraction of the base. Searching the pair under the same
//! statistics gives results identical to an index freshly built from the
//! current documents.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{DocId, Document, Term};
use crate::date::Date;
use crate::error::{Error, Result};
use crate::index::{rank_order, bm25_term_score, CollectionStats, CountedDoc, Hit, Index, SearchResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChangeKind {
    Add,
    Modify,
    Delete,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Change {
    pub seq: u64,
    pub kind: ChangeKind,
    pub date: Date,
    pub doc_id: DocId,
    /// New document version; present exactly for Add and Modify.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Document>,
}

impl Change {
    /// The byte form that is framed, checksummed, and counted for broadcast
    /// volume. Field order is fixed by the struct declaration.
    pub fn canonical_json(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("change serialization cannot fail")
    }

    fn validate_shape(&self) -> Result<()> {
        match (self.kind, &self.payload) {
            (ChangeKind::Delete, None) => Ok(()),
            (ChangeKind::Delete, Some(_)) => Err(Error::Parameter(format!(
                "delete change {} must not carry a payload",
                self.seq
            ))),
            (_, None) => Err(Error::Parameter(format!(
                "change {} requires a payload",
                self.seq
            ))),
            (_, Some(doc)) => {
                if doc.doc_id != self.doc_id {
                    return Err(Error::Parameter(format!(
                        "change {} doc_id {} does not match payload doc_id {}",
                        self.seq, self.doc_id, doc.doc_id
                    )));
                }
                if doc.modified_date != self.date {
                    return Err(Error::Parameter(format!(
                        "change {} date {} does not match payload date {}",
                        self.seq, self.date, doc.modified_date
                    )));
                }
                Ok(())
            }
        }
    }
}

const LOG_MAGIC: &[u8; 4] = b"CHL1";
/// Upper bound on one record's JSON, to keep corrupt length prefixes from
/// driving huge allocations.
const MAX_RECORD_BYTES: u32 = 16 << 20;

/// Append-only change log backed by a file.
#[derive(Debug)]
pub struct Archive {
    path: PathBuf,
    file: File,
    changes: Vec<Change>,
    sync_on_append: bool,
}

impl Archive {
    pub fn create(path: &Path) -> Result<Archive> {
        let mut file = OpenOptions::new()
            .create_new(true)
            .read(true)
            .write(true)
            .open(path)?;
        file.write_all(LOG_MAGIC)?;
        file.flush()?;
        Ok(Archive {
            path: path.to_path_buf(),
            file,
            changes: Vec::new(),
            sync_on_append: false,
        })
    }

    /// Opens an existing log, verifying every record. A short or
    /// checksum-failing record at the very end of the file is a torn final
    /// write: it is dropped and the file truncated to the last good record.
    /// The same damage followed by more bytes is corruption and errors.
    pub fn open(path: &Path) -> Result<Archive> {
        let mut file = OpenOptions::new().read(true).write(true).open(path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;
        if bytes.len() < LOG_MAGIC.len() || &bytes[..LOG_MAGIC.len()] != LOG_MAGIC {
            return Err(Error::FileFormat("bad magic, expected CHL1".into()));
        }

        let mut changes: Vec<Change> = Vec::new();
        let mut pos = LOG_MAGIC.len();
        let mut good_end = pos;
        while pos < bytes.len() {
            let next_seq = changes.len() as u64 + 1;
            match read_record(&bytes, pos) {
                Ok((change, end)) => {
                    if change.seq != next_seq {
                        return Err(Error::SequenceGap {
                            expected: next_seq,
                            got: change.seq,
                        });
                    }
                    change.validate_shape()?;
                    if let Some(prev) = changes.last() {
                        if change.date < prev.date {
                            return Err(Error::DateRegression {
                                date: change.date,
                                head: prev.date,
                            });
                        }
                    }
                    changes.push(change);
                    pos = end;
                    good_end = end;
                }
                Err(RecordError::Torn) => {
                    // Damage at the tail with nothing after it: torn write.
                    file.set_len(good_end as u64)?;
                    file.seek(SeekFrom::End(0))?;
                    break;
                }
                Err(RecordError::Corrupt) => {
                    return Err(Error::ChecksumMismatch { seq: next_seq });
                }
                Err(RecordError::Malformed(msg)) => {
                    return Err(Error::FileFormat(msg));
                }
            }
        }
        file.seek(SeekFrom::End(0))?;
        Ok(Archive {
            path: path.to_path_buf(),
            file,
            changes,
            sync_on_append: false,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn changes(&self) -> &[Change] {
        &self.changes
    }

    /// Sequence number of the newest record; 0 for an empty log.
    pub fn head_seq(&self) -> u64 {
        self.changes.len() as u64
    }

    pub fn head_date(&self) -> Option<Date> {
        self.changes.last().map(|c| c.date)
    }

    pub fn set_sync_on_append(&mut self, on: bool) {
        self.sync_on_append = on;
    }

    /// Appends one change. Dates must be non-decreasing; Add and Modify
    /// carry the new document version, Delete carries none.
    pub fn append(
        &mut self,
        kind: ChangeKind,
        date: Date,
        doc_id: DocId,
        payload: Option<Document>,
    ) -> Result<&Change> {
        if let Some(head) = self.head_date() {
            if date < head {
                return Err(Error::DateRegression { date, head });
            }
        }
        let change = Change {
            seq: self.head_seq() + 1,
            kind,
            date,
            doc_id,
            payload,
        };
        change.validate_shape()?;

        let json = change.canonical_json();
        let mut frame = Vec::with_capacity(json.len() + 8);
        frame.extend_from_slice(&(json.len() as u32).to_le_bytes());
        frame.extend_from_slice(&json);
        frame.extend_from_slice(&crc32c::crc32c(&json).to_le_bytes());
        self.file.write_all(&frame)?;
        self.file.flush()?;
        if self.sync_on_append {
            self.file.sync_data()?;
        }
        self.changes.push(change);
        Ok(self.changes.last().unwrap())
    }

    /// Records with `from_seq <= seq <= to_seq`.
    pub fn replay(&self, from_seq: u64, to_seq: u64) -> Result<&[Change]> {
        if from_seq == 0 || from_seq > to_seq || to_seq > self.head_seq() {
            return Err(Error::Range(format!(
                "replay range {from_seq}..={to_seq} outside 1..={}",
                self.head_seq()
            )));
        }
        Ok(&self.changes[(from_seq - 1) as usize..to_seq as usize])
    }
}

enum RecordError {
    /// Record runs past the end of the file or fails its CRC at the tail.
    Torn,
    /// CRC failure with more data after the record.
    Corrupt,
    Malformed(String),
}

fn read_record(bytes: &[u8], pos: usize) -> std::result::Result<(Change, usize), RecordError> {
    let remaining = &bytes[pos..];
    if remaining.len() < 4 {
        return Err(RecordError::Torn);
    }
    let len = u32::from_le_bytes(remaining[..4].try_into().unwrap());
    if len > MAX_RECORD_BYTES {
        return Err(RecordError::Malformed(format!(
            "record length {len} exceeds cap"
        )));
    }
    let len = len as usize;
    let Some(body_and_crc) = remaining.get(4..4 + len + 4) else {
        return Err(RecordError::Torn);
    };
    let body = &body_and_crc[..len];
    let crc = u32::from_le_bytes(body_and_crc[len..].try_into().unwrap());
    let end_of_record = pos + 4 + len + 4;
    if crc32c::crc32c(body) != crc {
        return if end_of_record >= bytes.len() {
            Err(RecordError::Torn)
        } else {
            Err(RecordError::Corrupt)
        };
    }
    let change: Change = serde_json::from_slice(body)
        .map_err(|e| RecordError::Malformed(format!("record JSON: {e}")))?;
    Ok((change, end_of_record))
}

/// Outcome of offering one broadcast record to a client.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReceiveOutcome {
    /// Applied immediately, possibly draining buffered successors too.
    Applied { records: u64 },
    /// Out of order; buffered until the gap fills.
    Buffered,
    /// Already applied; ignored.
    Duplicate,
}

/// Client-side index state: merged base plus delta segment.
pub struct ClientState {
    applied_seq: u64,
    snapshot_date: Date,
    base: Index,
    /// Base doc ids whose base version is superseded or deleted.
    dead: BTreeSet<DocId>,
    /// Current versions of docs added or modified since the base was merged.
    delta: BTreeMap<DocId, CountedDoc>,
    /// Every live document, the source of truth for re-merges.
    forward: BTreeMap<DocId, CountedDoc>,
    stats: CollectionStats,
    /// Re-merge when |delta| reaches this fraction of the base doc count.
    merge_threshold: f64,
    pending: BTreeMap<u64, Change>,
    stale: bool,
}

impl ClientState {
    pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.10;

    pub fn new_empty(snapshot_date: Date, merge_threshold: f64) -> Result<ClientState> {
        ClientState::from_corpus(&[], snapshot_date, 0, merge_threshold)
    }

    /// Initializes from the corpus state at `snapshot_date`, with `applied_seq`
    /// naming the last log record reflected in that state.
    pub fn from_corpus(
        docs: &[Document],
        snapshot_date: Date,
        applied_seq: u64,
        merge_threshold: f64,
    ) -> Result<ClientState> {
        if !(merge_threshold > 0.0 && merge_threshold <= 1.0) {
            return Err(Error::Parameter(format!(
                "merge threshold {merge_threshold} outside (0, 1]"
            )));
        }
        let forward: BTreeMap<DocId, CountedDoc> = docs
            .iter()
            .map(|d| (d.doc_id, CountedDoc::from_document(d)))
            .collect();
        if forward.len() != docs.len() {
            let mut seen = BTreeSet::new();
            for d in docs {
                if !seen.insert(d.doc_id) {
                    return Err(Error::DuplicateDocId(d.doc_id));
                }
            }
        }
        let base = Index::from_counted(forward.values().cloned())?;
        let stats = base.stats();
        Ok(ClientState {
            applied_seq,
            snapshot_date,
            base,
            dead: BTreeSet::new(),
            delta: BTreeMap::new(),
            forward,
            stats,
            merge_threshold,
            pending: BTreeMap::new(),
            stale: false,
        })
    }

    pub fn applied_seq(&self) -> u64 {
        self.applied_seq
    }

    pub fn snapshot_date(&self) -> Date {
        self.snapshot_date
    }

    pub fn is_stale(&self) -> bool {
        self.stale
    }

    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn n_live_docs(&self) -> u64 {
        self.forward.len() as u64
    }

    pub fn delta_docs(&self) -> u64 {
        self.delta.len() as u64
    }

    pub fn base_docs(&self) -> u64 {
        self.base.n_docs()
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// Applies the next in-sequence change.
    pub fn apply(&mut self, change: &Change) -> Result<()> {
        if change.seq != self.applied_seq + 1 {
            return Err(Error::SequenceGap {
                expected: self.applied_seq + 1,
                got: change.seq,
            });
        }
        change.validate_shape()?;
        match change.kind {
            ChangeKind::Add => {
                if self.forward.contains_key(&change.doc_id) {
                    return Err(Error::DuplicateDocId(change.doc_id));
                }
                let counted = CountedDoc::from_document(change.payload.as_ref().unwrap());
                self.stats.add_doc(&counted);
                self.delta.insert(change.doc_id, counted.clone());
                self.forward.insert(change.doc_id, counted);
            }
            ChangeKind::Modify => {
                let old = self.forward.get(&change.doc_id).ok_or(Error::UnknownDocId {
                    seq: change.seq,
                    doc_id: change.doc_id,
                })?;
                self.stats.remove_doc(old);
                let counted = CountedDoc::from_document(change.payload.as_ref().unwrap());
                self.stats.add_doc(&counted);
                self.delta.insert(change.doc_id, counted.clone());
                self.forward.insert(change.doc_id, counted);
                if self.base.doc_entry(change.doc_id).is_some() {
                    self.dead.insert(change.doc_id);
                }
            }
            ChangeKind::Delete => {
                let old = self.forward.remove(&change.doc_id).ok_or(Error::UnknownDocId {
                    seq: change.seq,
                    doc_id: change.doc_id,
                })?;
                self.stats.remove_doc(&old);
                self.delta.remove(&change.doc_id);
                if self.base.doc_entry(change.doc_id).is_some() {
                    self.dead.insert(change.doc_id);
                }
            }
        }
        self.applied_seq = change.seq;
        if change.date > self.snapshot_date {
            self.snapshot_date = change.date;
        }
        self.maybe_remerge()
    }

    pub fn apply_all(&mut self, changes: &[Change]) -> Result<()> {
        for c in changes {
            self.apply(c)?;
        }
        Ok(())
    }

    /// Offers one broadcast record, buffering it if it arrived out of order.
    pub fn receive(&mut self, change: &Change) -> Result<ReceiveOutcome> {
        if change.seq <= self.applied_seq {
            return Ok(ReceiveOutcome::Duplicate);
        }
        if change.seq > self.applied_seq + 1 {
            self.pending.insert(change.seq, change.clone());
            return Ok(ReceiveOutcome::Buffered);
        }
        self.apply(change)?;
        let mut applied = 1;
        while let Some(next) = self.pending.remove(&(self.applied_seq + 1)) {
            self.apply(&next)?;
            applied += 1;
        }
        // Anything still buffered below the applied head is a duplicate.
        self.pending = self.pending.split_off(&(self.applied_seq + 1));
        Ok(ReceiveOutcome::Applied { records: applied })
    }

    /// Replays every missing record from the archive (and the pending buffer)
    /// up to the archive head. Returns the number of records applied.
    pub fn catch_up(&mut self, archive: &Archive) -> Result<u64> {
        let mut applied = 0;
        while self.applied_seq < archive.head_seq() {
            let next_seq = self.applied_seq + 1;
            match self.pending.remove(&next_seq) {
                Some(change) => self.apply(&change)?,
                None => self.apply(&archive.replay(next_seq, next_seq)?[0])?,
            }
            applied += 1;
        }
        self.pending = self.pending.split_off(&(self.applied_seq + 1));
        self.stale = false;
        Ok(applied)
    }

    pub(crate) fn mark_stale(&mut self) {
        self.stale = true;
    }

    /// Rebuilds a fresh index over the live documents. This is exactly what a
    /// re-merge installs as the new base.
    pub fn rebuild_index(&self) -> Result<Index> {
        Index::from_counted(self.forward.values().cloned())
    }

    fn maybe_remerge(&mut self) -> Result<()> {
        let trigger = ((self.base.n_docs() as f64) * self.merge_threshold).ceil() as u64;
        if self.delta.len() as u64 >= trigger.max(1) {
            self.base = self.rebuild_index()?;
            self.delta.clear();
            self.dead.clear();
        }
        Ok(())
    }

    /// Searches base + delta as one collection. Scores match an index freshly
    /// built over the live documents bit for bit: each (term, doc)
    /// contribution comes from exactly one side, accumulated in query-term
    /// order.
    pub fn search(
        &self,
        query: &[Term],
        k: usize,
        stats_override: Option<&CollectionStats>,
    ) -> SearchResult {
        let stats = stats_override.unwrap_or(&self.stats);
        let n = stats.n_docs;
        let avg = stats.avg_doclen();

        let mut acc: std::collections::HashMap<DocId, f64> = std::collections::HashMap::new();
        for term in query {
            let df = stats.df(term);
            if df == 0 {
                continue;
            }
            if let Some(pl) = self.base.postings(term) {
                for (doc_id, tf) in pl.iter() {
                    if self.dead.contains(&doc_id) {
                        continue;
                    }
                    let entry = self.base.doc_entry(doc_id).expect("base doc entry");
                    *acc.entry(doc_id).or_insert(0.0) +=
                        bm25_term_score(tf, entry.len, df, n, avg);
                }
            }
            for (&doc_id, counted) in &self.delta {
                if let Ok(i) = counted
                    .counts
                    .binary_search_by(|(t, _)| t.as_str().cmp(term.as_str()))
                {
                    let tf = counted.counts[i].1;
                    *acc.entry(doc_id).or_insert(0.0) +=
                        bm25_term_score(tf, counted.len(), df, n, avg);
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
}

/// Per-record Bernoulli loss model for broadcast delivery.
#[derive(Clone, Copy, Debug)]
pub struct LossModel {
    pub loss_probability: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClientDelivery {
    pub delivered: u64,
    pub lost: u64,
    pub caught_up: u64,
    pub stale: bool,
    pub applied_seq: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BroadcastReport {
    pub head_seq: u64,
    pub per_client: Vec<ClientDelivery>,
}

/// One broadcast round: every record each client is missing is offered to it,
/// dropped independently with the loss probability. Clients left with gaps at
/// the end of the round catch up from the archive, or are flagged stale if the
/// archive is unavailable.
///
/// Deterministic per seed: clients are visited in slice order and records in
/// sequence order, one RNG draw per (client, record).
pub fn broadcast_round(
    archive: &Archive,
    clients: &mut [ClientState],
    loss: LossModel,
    archive_available: bool,
) -> Result<BroadcastReport> {
    use rand::{Rng, SeedableRng};
    if !(0.0..=1.0).contains(&loss.loss_probability) {
        return Err(Error::Parameter(format!(
            "loss probability {} outside [0, 1]",
            loss.loss_probability
        )));
    }
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(loss.seed);
    let head = archive.head_seq();
    let mut report = BroadcastReport {
        head_seq: head,
        per_client: Vec::with_capacity(clients.len()),
    };
    for client in clients.iter_mut() {
        let mut delivery = ClientDelivery::default();
        let from = client.applied_seq() + 1;
        for seq in from..=head {
            let lost = rng.gen::<f64>() < loss.loss_probability;
            if lost {
                delivery.lost += 1;
                continue;
            }
            delivery.delivered += 1;
            client.receive(&archive.replay(seq, seq)?[0])?;
        }
        if client.applied_seq() < head {
            if archive_available {
                delivery.caught_up = client.catch_up(archive)?;
            } else {
                client.mark_stale();
            }
        }
        delivery.stale = client.is_stale();
        delivery.applied_seq = client.applied_seq();
        report.per_client.push(delivery);
    }
    Ok(report)
}
