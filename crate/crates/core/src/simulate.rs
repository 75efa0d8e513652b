//! Seeded workload simulation comparing the three architectures.
//!
//! One seed fully determines a run. Corpus, fleet, and query generation draw
//! from three separate ChaCha streams of the same seed, so changing the mode
//! (or only the device lifetime) never perturbs the generated workload; modes
//! differ purely in how costs are accounted.
//!
//! Cost unit is postings scored: a query costs the sum of the postings-list
//! lengths of its terms over every index actually scored. Network cost is a
//! byte proxy: per query, the query terms (plus a small fixed envelope) go to
//! each contacted index and `12 * k` result bytes come back; broadcast mode
//! instead ships every serialized change to every client.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::{Document, Term};
use crate::date::Date;
use crate::error::{Error, Result};
use crate::index::CountedDoc;
use crate::updates::{Change, ChangeKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimMode {
    Centralized,
    DateSharded,
    Broadcast,
}

impl fmt::Display for SimMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SimMode::Centralized => "centralized",
            SimMode::DateSharded => "date-sharded",
            SimMode::Broadcast => "broadcast",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SnapshotPolicy {
    /// Age uniform on [0, device_lifetime): devices are replaced on a cycle,
    /// so a random observation instant sees a uniform age.
    UniformAge,
    /// Every client pinned to one snapshot date (epoch reproduces the fully
    /// centralized baseline bit for bit).
    FixedDate(Date),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub mode: SimMode,
    pub n_clients: u32,
    pub device_lifetime_days: u32,
    pub queries_per_client_per_month: u32,
    pub horizon_days: u32,
    pub docs_per_day: u32,
    pub vocab_size: u32,
    pub zipf_exponent: f64,
    pub doc_len_min: u32,
    pub doc_len_max: u32,
    pub k: usize,
    pub granularity_days: u32,
    pub start_date: Date,
    pub snapshot_policy: SnapshotPolicy,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            mode: SimMode::Centralized,
            n_clients: 10,
            device_lifetime_days: 548,
            queries_per_client_per_month: 10,
            horizon_days: 3650,
            docs_per_day: 3,
            vocab_size: 2000,
            zipf_exponent: 1.0,
            doc_len_min: 20,
            doc_len_max: 80,
            k: 10,
            granularity_days: 365,
            start_date: Date::from_days(9131).unwrap(), // 2015-01-01
            snapshot_policy: SnapshotPolicy::UniformAge,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        let positive: [(&str, u64); 7] = [
            ("n_clients", self.n_clients as u64),
            ("device_lifetime_days", self.device_lifetime_days as u64),
            ("queries_per_client_per_month", self.queries_per_client_per_month as u64),
            ("horizon_days", self.horizon_days as u64),
            ("docs_per_day", self.docs_per_day as u64),
            ("vocab_size", self.vocab_size as u64),
            ("granularity_days", self.granularity_days as u64),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be positive")));
            }
        }
        if self.k == 0 {
            return Err(Error::Parameter("k must be positive".into()));
        }
        if !(self.zipf_exponent > 0.0) {
            return Err(Error::Parameter("zipf_exponent must be positive".into()));
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            return Err(Error::Parameter("doc length range invalid".into()));
        }
        self.start_date
            .add_days(self.horizon_days)
            .map_err(|_| Error::Range("horizon extends past supported dates".into()))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimMetrics {
    pub mode: SimMode,
    pub seed: u64,
    pub n_clients: u32,
    pub horizon_days: u32,
    pub postings_scored_datacentre: u64,
    pub postings_scored_clients: u64,
    pub bytes_transferred: u64,
    pub broadcast_bytes: u64,
    /// `shards_touched[s]` = number of queries that touched exactly s shards.
    pub shards_touched: Vec<u64>,
    /// Postings scored per datacentre shard (date bucket).
    pub shard_load: Vec<(u32, u64)>,
    /// What the same workload costs a monolithic datacentre; denominator of
    /// the cost ratio in every mode.
    pub centralized_postings: u64,
    pub dc_cost_ratio: f64,
}

/// Uniform snapshot age on [0, lifetime) days; expected age lifetime/2.
pub fn sample_snapshot_age<R: Rng + ?Sized>(device_lifetime_days: f64, rng: &mut R) -> f64 {
    if device_lifetime_days <= 0.0 {
        return 0.0;
    }
    rng.gen::<f64>() * device_lifetime_days
}

// Stream ids within the seed; keeps corpus, fleet, and queries independent.
const STREAM_CORPUS: u64 = 0;
const STREAM_FLEET: u64 = 1;
const STREAM_QUERIES: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn term_for_rank(rank: u64) -> Term {
    format!("w{rank}")
}

/// Materializes the synthetic corpus for a config: `docs_per_day` documents
/// per day across the horizon, doc ids ascending with date, Zipf-distributed
/// vocabulary.
pub fn synthesize_corpus(config: &SimConfig) -> Result<Vec<Document>> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, STREAM_CORPUS);
    let zipf = Zipf::new(config.vocab_size as u64, config.zipf_exponent)
        .map_err(|e| Error::Parameter(format!("zipf: {e}")))?;
    let mut docs = Vec::with_capacity((config.horizon_days * config.docs_per_day) as usize);
    let mut doc_id = 0u64;
    for day in 0..config.horizon_days {
        let date = config.start_date.add_days(day)?;
        for _ in 0..config.docs_per_day {
            doc_id += 1;
            let len = rng.gen_range(config.doc_len_min..=config.doc_len_max);
            let tokens: Vec<Term> = (0..len)
                .map(|_| term_for_rank(zipf.sample(&mut rng) as u64))
                .collect();
            docs.push(Document {
                doc_id,
                uri: format!("sim:{doc_id}"),
                modified_date: date,
                text: tokens.join(" "),
            });
        }
    }
    Ok(docs)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClientWorkload {
    pub snapshot_date: Date,
    pub queries: Vec<Vec<Term>>,
}

/// Snapshot dates and query streams for every client. Queries per client:
/// `queries_per_client_per_month` over `horizon_days` at 12 months per 365
/// days, at least one.
pub fn synthesize_workloads(config: &SimConfig) -> Result<Vec<ClientWorkload>> {
    config.validate()?;
    let end = config.start_date.add_days(config.horizon_days)?;

    let mut fleet_rng = stream_rng(config.seed, STREAM_FLEET);
    let snapshots: Vec<Date> = (0..config.n_clients)
        .map(|_| match config.snapshot_policy {
            SnapshotPolicy::FixedDate(d) => d,
            SnapshotPolicy::UniformAge => {
                let age = sample_snapshot_age(config.device_lifetime_days as f64, &mut fleet_rng);
                let age_days = (age.floor() as u32).min(end.days());
                Date::from_days(end.days() - age_days).unwrap()
            }
        })
        .collect();

    let months = config.horizon_days as f64 * 12.0 / 365.0;
    let per_client =
        ((config.queries_per_client_per_month as f64 * months).round() as u64).max(1);

    let mut query_rng = stream_rng(config.seed, STREAM_QUERIES);
    let zipf = Zipf::new(config.vocab_size as u64, config.zipf_exponent)
        .map_err(|e| Error::Parameter(format!("zipf: {e}")))?;
    Ok(snapshots
        .into_iter()
        .map(|snapshot_date| {
            let queries = (0..per_client)
                .map(|_| {
                    let n_terms = query_rng.gen_range(1..=3);
                    (0..n_terms)
                        .map(|_| term_for_rank(zipf.sample(&mut query_rng) as u64))
                        .collect()
                })
                .collect();
            ClientWorkload {
                snapshot_date,
                queries,
            }
        })
        .collect())
}

/// Runs one simulation. Every mode sees the identical corpus and workload;
/// only the cost accounting differs.
pub fn run(config: &SimConfig) -> Result<SimMetrics> {
    let corpus = synthesize_corpus(config)?;
    let workloads = synthesize_workloads(config)?;
    let g = config.granularity_days as u64;

    // Per-term day-number lists, ascending because the corpus is generated in
    // date order. List length = document frequency within any date range.
    let mut term_days: HashMap<Term, Vec<u32>> = HashMap::new();
    let mut change_bytes_one_client = 0u64;
    for (i, doc) in corpus.iter().enumerate() {
        let counted = CountedDoc::from_document(doc);
        for (term, _) in &counted.counts {
            term_days
                .entry(term.clone())
                .or_default()
                .push(doc.modified_date.days());
        }
        let change = Change {
            seq: i as u64 + 1,
            kind: ChangeKind::Add,
            date: doc.modified_date,
            doc_id: doc.doc_id,
            payload: Some(doc.clone()),
        };
        change_bytes_one_client += change.canonical_json().len() as u64;
    }

    let first_bucket = config.start_date.days() as u64 / g;
    let last_day = config.start_date.days() as u64 + config.horizon_days as u64 - 1;
    let last_bucket = last_day / g;

    let mut metrics = SimMetrics {
        mode: config.mode,
        seed: config.seed,
        n_clients: config.n_clients,
        horizon_days: config.horizon_days,
        postings_scored_datacentre: 0,
        postings_scored_clients: 0,
        bytes_transferred: 0,
        broadcast_bytes: 0,
        shards_touched: Vec::new(),
        shard_load: Vec::new(),
        centralized_postings: 0,
        dc_cost_ratio: 0.0,
    };
    let mut shard_load: BTreeMap<u32, u64> = BTreeMap::new();
    let mut touch_hist: BTreeMap<usize, u64> = BTreeMap::new();

    let result_bytes = 12 * config.k as u64;
    for workload in &workloads {
        // Shards selected for this client: every bucket whose range ends
        // after the snapshot. They form a suffix [cut_bucket, last_bucket].
        let snap_days = workload.snapshot_date.days() as u64;
        let cut_bucket = (snap_days / g).max(first_bucket);
        let n_selected = if cut_bucket > last_bucket {
            0
        } else {
            (last_bucket - cut_bucket + 1) as usize
        };
        // Documents dated before the cut bucket's start stay client-side.
        let cut_day = (cut_bucket * g) as u32;

        for query in &workload.queries {
            let mut monolithic = 0u64;
            let mut dc_after_cut = 0u64;
            for term in query {
                let Some(days) = term_days.get(term) else { continue };
                monolithic += days.len() as u64;
                let below = days.partition_point(|&d| d < cut_day);
                dc_after_cut += (days.len() - below) as u64;
                if config.mode == SimMode::DateSharded {
                    for bucket in cut_bucket.max(first_bucket)..=last_bucket {
                        let lo = days.partition_point(|&d| (d as u64) < bucket * g);
                        let hi = days.partition_point(|&d| (d as u64) < (bucket + 1) * g);
                        if hi > lo {
                            *shard_load.entry(bucket as u32).or_insert(0) += (hi - lo) as u64;
                        }
                    }
                }
            }
            metrics.centralized_postings += monolithic;

            let query_bytes: u64 =
                query.iter().map(|t| t.len() as u64).sum::<u64>() + 16;
            match config.mode {
                SimMode::Centralized => {
                    metrics.postings_scored_datacentre += monolithic;
                    metrics.bytes_transferred += query_bytes + result_bytes;
                    *touch_hist.entry(1).or_insert(0) += 1;
                }
                SimMode::DateSharded => {
                    metrics.postings_scored_datacentre += dc_after_cut;
                    metrics.postings_scored_clients += monolithic - dc_after_cut;
                    metrics.bytes_transferred +=
                        query_bytes * (1 + n_selected as u64) + result_bytes;
                    *touch_hist.entry(n_selected).or_insert(0) += 1;
                }
                SimMode::Broadcast => {
                    metrics.postings_scored_clients += monolithic;
                    *touch_hist.entry(0).or_insert(0) += 1;
                }
            }
        }
    }

    if config.mode == SimMode::Broadcast {
        metrics.broadcast_bytes = change_bytes_one_client * config.n_clients as u64;
    }
    metrics.shard_load = shard_load.into_iter().collect();
    let max_touch = touch_hist.keys().max().copied().unwrap_or(0);
    metrics.shards_touched = (0..=max_touch)
        .map(|s| touch_hist.get(&s).copied().unwrap_or(0))
        .collect();
    metrics.dc_cost_ratio = if metrics.centralized_postings == 0 {
        match config.mode {
            SimMode::Centralized => 1.0,
            _ => 0.0,
        }
    } else {
        metrics.postings_scored_datacentre as f64 / metrics.centralized_postings as f64
    };
    Ok(metrics)
}

/// Runs several configs that must be identical apart from mode (same seed,
/// same workload) and reports them together.
pub fn compare(configs: &[SimConfig]) -> Result<Vec<SimMetrics>> {
    let Some(first) = configs.first() else {
        return Err(Error::Parameter("no configs to compare".into()));
    };
    for c in configs {
        if c.seed != first.seed {
            return Err(Error::Comparability(format!(
                "seeds differ ({} vs {})",
                first.seed, c.seed
            )));
        }
        let mut aligned = c.clone();
        aligned.mode = first.mode;
        if aligned != *first {
            return Err(Error::Comparability(
                "configs differ in more than mode".into(),
            ));
        }
    }
    configs.iter().map(run).collect()
}

pub fn metrics_csv(rows: &[SimMetrics]) -> String {
    let mut out = String::from(
        "mode,seed,n_clients,horizon_days,postings_dc,postings_client,bytes,broadcast_bytes,dc_cost_ratio\n",
    );
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            m.mode,
            m.seed,
            m.n_clients,
            m.horizon_days,
            m.postings_scored_datacentre,
            m.postings_scored_clients,
            m.bytes_transferred,
            m.broadcast_bytes,
            m.dc_cost_ratio,
        ));
    }
    out
}
