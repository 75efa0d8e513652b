//! Datacentre side: sharding, snapshot-aware routing, replica planning.
//!
//! Documents are distributed to shards by modification date: bucket
//! `floor(days_since_epoch / granularity_days)`. A client that announces a
//! snapshot date only causes the shards whose range ends after that date to be
//! searched; everything older is already on the client. Both sides score under
//! the datacentre's collection statistics, so the merged result equals a
//! monolithic search over the current corpus exactly.
//!
//! The exactness rests on scoring every current document exactly once. The
//! supersede set removes client documents that changed after the snapshot; in
//! addition, the client skips documents whose own date bucket is among the
//! selected shards, because the datacentre is about to score those same
//! versions. Documents in unselected buckets cannot have changed (a change
//! would have moved them to a newer bucket), so each current document is
//! scored on exactly one side.
//!
//! A random-sharding mode serves as the load-shedding baseline: uniform
//! assignment, every query touches all shards, and shedding drops a random
//! subset of them at a controlled recall cost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::corpus::{DocId, Document, Term};
use crate::date::{days_to_iso, Date};
use crate::error::{Error, Result};
use crate::index::{
    rank_order, search, search_filtered, CollectionStats, Hit, Index, SearchResult,
};
use crate::updates::{Change, ChangeKind};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ShardId(pub u32);

impl fmt::Display for ShardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for ShardId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShardId({})", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShardingMode {
    DateSharded,
    RandomSharded,
}

/// Date bucket for a document: `floor(days / granularity_days)`. Boundary
/// dates belong to the bucket they start.
pub fn assign_shard(doc: &Document, granularity_days: u32) -> ShardId {
    bucket_of(doc.modified_date, granularity_days)
}

pub fn bucket_of(date: Date, granularity_days: u32) -> ShardId {
    debug_assert!(granularity_days > 0);
    ShardId(date.days() / granularity_days)
}

pub struct Shard {
    pub index: Index,
    pub available: bool,
}

impl Shard {
    /// Doc ids whose current version lives in this shard.
    pub fn modified_docids(&self) -> BTreeSet<DocId> {
        self.index.docs().iter().map(|e| e.doc_id).collect()
    }
}

pub struct ShardTopology {
    mode: ShardingMode,
    granularity_days: u32,
    shards: BTreeMap<ShardId, Shard>,
}

impl ShardTopology {
    /// Partitions the current corpus into date buckets. Only non-empty
    /// buckets materialize as shards; their ranges still tile the timeline.
    pub fn build_date_sharded(docs: &[Document], granularity_days: u32) -> Result<ShardTopology> {
        if granularity_days == 0 {
            return Err(Error::Parameter("granularity_days must be positive".into()));
        }
        let mut buckets: BTreeMap<ShardId, Vec<&Document>> = BTreeMap::new();
        for doc in docs {
            buckets
                .entry(assign_shard(doc, granularity_days))
                .or_default()
                .push(doc);
        }
        let mut shards = BTreeMap::new();
        for (id, members) in buckets {
            let owned: Vec<Document> = members.into_iter().cloned().collect();
            shards.insert(
                id,
                Shard {
                    index: Index::build(&owned)?,
                    available: true,
                },
            );
        }
        Ok(ShardTopology {
            mode: ShardingMode::DateSharded,
            granularity_days,
            shards,
        })
    }

    /// Uniform random assignment over `n_shards`, deterministic per seed.
    /// All shards exist even when empty.
    pub fn build_random_sharded(
        docs: &[Document],
        n_shards: u32,
        seed: u64,
    ) -> Result<ShardTopology> {
        use rand::Rng;
        if n_shards == 0 {
            return Err(Error::Parameter("n_shards must be positive".into()));
        }
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
        let mut buckets: BTreeMap<ShardId, Vec<&Document>> =
            (0..n_shards).map(|i| (ShardId(i), Vec::new())).collect();
        // Docs are assigned in doc_id order so the layout is a pure function
        // of (corpus, n_shards, seed).
        let mut ordered: Vec<&Document> = docs.iter().collect();
        ordered.sort_by_key(|d| d.doc_id);
        for doc in ordered {
            let id = ShardId(rng.gen_range(0..n_shards));
            buckets.get_mut(&id).unwrap().push(doc);
        }
        let mut shards = BTreeMap::new();
        for (id, members) in buckets {
            let owned: Vec<Document> = members.into_iter().cloned().collect();
            shards.insert(
                id,
                Shard {
                    index: Index::build(&owned)?,
                    available: true,
                },
            );
        }
        Ok(ShardTopology {
            mode: ShardingMode::RandomSharded,
            granularity_days: 0,
            shards,
        })
    }

    pub fn mode(&self) -> ShardingMode {
        self.mode
    }

    pub fn granularity_days(&self) -> u32 {
        self.granularity_days
    }

    pub fn shard_ids(&self) -> Vec<ShardId> {
        self.shards.keys().copied().collect()
    }

    pub fn shards(&self) -> impl Iterator<Item = (ShardId, &Shard)> {
        self.shards.iter().map(|(&id, s)| (id, s))
    }

    pub fn shard(&self, id: ShardId) -> Option<&Shard> {
        self.shards.get(&id)
    }

    pub fn n_docs(&self) -> u64 {
        self.shards.values().map(|s| s.index.n_docs()).sum()
    }

    pub fn set_available(&mut self, id: ShardId, available: bool) -> Result<()> {
        let shard = self
            .shards
            .get_mut(&id)
            .ok_or(Error::ShardUnavailable(id.0))?;
        shard.available = available;
        Ok(())
    }

    /// Date range `[start, end)` covered by a shard, in days since epoch.
    /// Random shards have no date meaning and return `None`.
    pub fn range_days(&self, id: ShardId) -> Option<(u64, u64)> {
        match self.mode {
            ShardingMode::DateSharded => {
                let g = self.granularity_days as u64;
                Some((id.0 as u64 * g, (id.0 as u64 + 1) * g))
            }
            ShardingMode::RandomSharded => None,
        }
    }

    /// Routing plan for a query. Date mode selects the shards newer than the
    /// snapshot and keeps the client snapshot in play; random mode fans out
    /// to every shard and has no client side.
    pub fn plan(&self, terms: &[Term], snapshot_date: Date) -> Result<QueryPlan> {
        let (selected, include_local) = match self.mode {
            ShardingMode::DateSharded => (shards_after(snapshot_date, self)?, true),
            ShardingMode::RandomSharded => (self.shard_ids(), false),
        };
        Ok(QueryPlan {
            terms: terms.to_vec(),
            snapshot_date,
            selected,
            include_local,
            mode: self.mode,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryPlan {
    pub terms: Vec<Term>,
    pub snapshot_date: Date,
    /// Sorted, duplicate-free.
    pub selected: Vec<ShardId>,
    /// Whether the client-side snapshot index participates.
    pub include_local: bool,
    pub mode: ShardingMode,
}

/// Shards whose range end lies strictly after the snapshot date. The bucket
/// containing the snapshot itself is included: modifications later in that
/// bucket live there.
pub fn shards_after(snapshot_date: Date, topology: &ShardTopology) -> Result<Vec<ShardId>> {
    if topology.mode != ShardingMode::DateSharded {
        return Err(Error::UnsupportedMode {
            required: "date",
        });
    }
    let g = topology.granularity_days as u64;
    Ok(topology
        .shards
        .keys()
        .copied()
        .filter(|id| (id.0 as u64 + 1) * g > snapshot_date.days() as u64)
        .collect())
}

/// Collection statistics over the datacentre's shards, the authoritative
/// current state. A client may hand in its own statistics, but they do not
/// contribute: stale snapshots would skew df and N, so the datacentre's view
/// wins and is what both sides score under.
pub fn global_stats(
    topology: &ShardTopology,
    _client_stats: Option<&CollectionStats>,
) -> CollectionStats {
    let mut stats = CollectionStats::default();
    for shard in topology.shards.values() {
        stats.merge(&shard.index.stats());
    }
    stats
}

pub type SupersedeSet = BTreeSet<DocId>;

/// Doc ids whose client-side copy is stale: every doc with a Modify or
/// Delete (or an Add of a previously seen id, a re-add) dated strictly after
/// the snapshot.
pub fn supersede_since(snapshot_date: Date, change_log: &[Change]) -> SupersedeSet {
    let mut seen_before: BTreeSet<DocId> = BTreeSet::new();
    let mut superseded = SupersedeSet::new();
    for change in change_log {
        if change.date > snapshot_date {
            let supersedes = match change.kind {
                ChangeKind::Modify | ChangeKind::Delete => true,
                ChangeKind::Add => seen_before.contains(&change.doc_id),
            };
            if supersedes {
                superseded.insert(change.doc_id);
            }
        }
        seen_before.insert(change.doc_id);
    }
    superseded
}

/// Snapshot-and-delta query execution.
///
/// The client searches its snapshot under the datacentre's statistics,
/// skipping superseded docs and docs whose bucket is being searched remotely;
/// each selected shard is searched under the same statistics; the partials
/// merge to the global top k. Equal to a monolithic search of the current
/// corpus, including scores.
pub fn execute_query(
    query: &[Term],
    k: usize,
    client: (&Index, Date),
    topology: &ShardTopology,
    change_log: &[Change],
) -> Result<SearchResult> {
    let (client_index, snapshot_date) = client;
    let selected = shards_after(snapshot_date, topology)?;
    for &id in &selected {
        if !topology.shard(id).is_some_and(|s| s.available) {
            return Err(Error::ShardUnavailable(id.0));
        }
    }
    let stats = global_stats(topology, None);
    let superseded = supersede_since(snapshot_date, change_log);
    let selected_set: BTreeSet<ShardId> = selected.iter().copied().collect();
    let g = topology.granularity_days;

    let mut partials = Vec::with_capacity(selected.len() + 1);
    partials.push(search_filtered(client_index, query, k, Some(&stats), |entry| {
        !superseded.contains(&entry.doc_id) && !selected_set.contains(&bucket_of(entry.date, g))
    }));
    for &id in &selected {
        let shard = topology.shard(id).unwrap();
        partials.push(search(&shard.index, query, k, Some(&stats)));
    }
    merge(&partials, k)
}

/// Global top-k of partial results scored under identical statistics.
/// A doc id appearing in two partials means the disjointness or supersede
/// logic was violated upstream, and is an integrity error.
pub fn merge(partial_results: &[SearchResult], k: usize) -> Result<SearchResult> {
    let mut all: Vec<Hit> = Vec::new();
    let mut seen: BTreeSet<DocId> = BTreeSet::new();
    for partial in partial_results {
        for hit in &partial.hits {
            if !seen.insert(hit.doc_id) {
                return Err(Error::DuplicateInMerge(hit.doc_id));
            }
            all.push(*hit);
        }
    }
    all.sort_unstable_by(rank_order);
    all.truncate(k);
    Ok(SearchResult { hits: all })
}

/// Drops shards from a random-mode plan, keeping `ceil(keep_fraction * n)`
/// of them chosen uniformly with the seed. Date-mode plans cannot shed:
/// dropping a date shard silently breaks the equivalence contract.
pub fn shed_load(plan: &QueryPlan, keep_fraction: f64, seed: u64) -> Result<QueryPlan> {
    if plan.mode != ShardingMode::RandomSharded {
        return Err(Error::UnsupportedMode { required: "random" });
    }
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(Error::Parameter(format!(
            "keep_fraction {keep_fraction} outside (0, 1]"
        )));
    }
    let keep = (keep_fraction * plan.selected.len() as f64).ceil() as usize;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let mut kept: Vec<ShardId> = plan
        .selected
        .choose_multiple(&mut rng, keep)
        .copied()
        .collect();
    kept.sort_unstable();
    Ok(QueryPlan {
        terms: plan.terms.clone(),
        snapshot_date: plan.snapshot_date,
        selected: kept,
        include_local: plan.include_local,
        mode: plan.mode,
    })
}

/// Searches the shards named by a plan and merges. Random-mode partials may
/// overlap only if the same doc landed in two shards, which the builder
/// forbids, so merge integrity still holds.
pub fn execute_plan(
    plan: &QueryPlan,
    k: usize,
    topology: &ShardTopology,
    stats: &CollectionStats,
) -> Result<SearchResult> {
    let mut partials = Vec::with_capacity(plan.selected.len());
    for &id in &plan.selected {
        let shard = topology
            .shard(id)
            .filter(|s| s.available)
            .ok_or(Error::ShardUnavailable(id.0))?;
        partials.push(search(&shard.index, &plan.terms, k, Some(stats)));
    }
    merge(&partials, k)
}

/// Weighted snapshot-date distribution across the client fleet.
#[derive(Clone, Debug, PartialEq)]
pub struct FleetDistribution {
    entries: Vec<(Date, f64)>,
}

impl FleetDistribution {
    pub fn new(entries: Vec<(Date, f64)>) -> Result<FleetDistribution> {
        if entries.is_empty() {
            return Err(Error::Parameter("fleet distribution is empty".into()));
        }
        if entries.iter().any(|&(_, w)| w <= 0.0 || !w.is_finite()) {
            return Err(Error::Parameter("fleet weights must be positive".into()));
        }
        let sum: f64 = entries.iter().map(|&(_, w)| w).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "fleet weights sum to {sum}, expected 1"
            )));
        }
        Ok(FleetDistribution { entries })
    }

    /// Equal weight on each snapshot date.
    pub fn uniform(dates: &[Date]) -> Result<FleetDistribution> {
        if dates.is_empty() {
            return Err(Error::Parameter("fleet distribution is empty".into()));
        }
        let w = 1.0 / dates.len() as f64;
        // Build weights that sum to exactly 1 by assigning the residue to the
        // last entry.
        let mut entries: Vec<(Date, f64)> = dates.iter().map(|&d| (d, w)).collect();
        let partial: f64 = w * (dates.len() - 1) as f64;
        entries.last_mut().unwrap().1 = 1.0 - partial;
        FleetDistribution::new(entries)
    }

    pub fn entries(&self) -> &[(Date, f64)] {
        &self.entries
    }

    pub fn min_snapshot(&self) -> Date {
        self.entries.iter().map(|&(d, _)| d).min().unwrap()
    }
}

/// Expected query load per shard. `total_query_rate` is the aggregate rate
/// across the fleet (clients times per-client rate): a client with snapshot s
/// hits exactly the shards whose range ends after s, so
/// `load(shard) = rate * sum of weights of clients with snapshot < range_end`.
pub fn expected_shard_load(
    fleet: &FleetDistribution,
    topology: &ShardTopology,
    total_query_rate: f64,
) -> Result<BTreeMap<ShardId, f64>> {
    if topology.mode != ShardingMode::DateSharded {
        return Err(Error::UnsupportedMode { required: "date" });
    }
    let g = topology.granularity_days as u64;
    let mut loads = BTreeMap::new();
    for &id in topology.shards.keys() {
        let range_end = (id.0 as u64 + 1) * g;
        let hit_weight: f64 = fleet
            .entries
            .iter()
            .filter(|&&(snap, _)| (snap.days() as u64) < range_end)
            .map(|&(_, w)| w)
            .sum();
        // An empty sum is IEEE -0.0; keep zero loads plainly zero.
        let load = total_query_rate * hit_weight;
        loads.insert(id, if load == 0.0 { 0.0 } else { load });
    }
    Ok(loads)
}

/// Proportional replica allocation with largest-remainder rounding.
///
/// Every positive-load shard receives at least one replica; remainder ties
/// and donation ties both resolve toward the newer shard (it keeps the
/// extra). Zero-load shards receive zero.
pub fn plan_replicas(
    loads: &BTreeMap<ShardId, f64>,
    budget: u64,
) -> Result<BTreeMap<ShardId, u64>> {
    if loads.values().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(Error::Parameter("loads must be non-negative".into()));
    }
    let positive: Vec<(ShardId, f64)> = loads
        .iter()
        .filter(|&(_, &l)| l > 0.0)
        .map(|(&id, &l)| (id, l))
        .collect();
    let required = positive.len() as u64;
    if budget < required {
        return Err(Error::InfeasibleBudget { budget, required });
    }

    let mut allocation: BTreeMap<ShardId, u64> = loads.keys().map(|&id| (id, 0)).collect();
    if positive.is_empty() {
        return Ok(allocation);
    }
    let total: f64 = positive.iter().map(|&(_, l)| l).sum();
    let exact: Vec<(ShardId, f64)> = positive
        .iter()
        .map(|&(id, l)| (id, budget as f64 * l / total))
        .collect();

    let mut assigned = 0u64;
    for &(id, e) in &exact {
        let floor = e.floor() as u64;
        allocation.insert(id, floor);
        assigned += floor;
    }
    let mut by_remainder: Vec<(ShardId, f64)> = exact
        .iter()
        .map(|&(id, e)| (id, e - e.floor()))
        .collect();
    // Largest remainder first; on equal remainders the newer shard wins.
    by_remainder.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
    for &(id, _) in by_remainder.iter().take((budget - assigned) as usize) {
        *allocation.get_mut(&id).unwrap() += 1;
    }

    // Lift zero-allocation positive-load shards to one replica, taking from
    // the most over-allocated donor that can spare one.
    let exact_of: BTreeMap<ShardId, f64> = exact.iter().copied().collect();
    let deficits: Vec<ShardId> = exact.iter().map(|&(id, _)| id).collect();
    for id in deficits {
        if allocation[&id] > 0 {
            continue;
        }
        let donor = allocation
            .iter()
            .filter(|&(d, &a)| a >= 2 && exact_of.contains_key(d))
            .map(|(&d, &a)| (d, a as f64 - exact_of[&d]))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(d, _)| d)
            .ok_or(Error::InfeasibleBudget { budget, required })?;
        *allocation.get_mut(&donor).unwrap() -= 1;
        *allocation.get_mut(&id).unwrap() += 1;
    }
    debug_assert_eq!(allocation.values().sum::<u64>(), budget);
    Ok(allocation)
}

/// Shards with exactly zero expected load: no client snapshot predates their
/// range end, so a sliding retention window can drop them.
pub fn retire_shards(fleet: &FleetDistribution, topology: &ShardTopology) -> Result<Vec<ShardId>> {
    let loads = expected_shard_load(fleet, topology, 1.0)?;
    Ok(loads
        .into_iter()
        .filter(|&(_, load)| load == 0.0)
        .map(|(id, _)| id)
        .collect())
}

/// Serializable description of a topology on disk.
#[derive(Debug, Serialize, Deserialize)]
pub struct TopologyManifest {
    pub mode: ShardingMode,
    pub granularity_days: u32,
    pub shards: Vec<ShardManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ShardManifestEntry {
    pub shard_id: u32,
    /// Days since epoch; absent in random mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_start_days: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_end_days: Option<u64>,
    pub index_file: String,
}

/// Writes per-shard index files plus `manifest.json` into `dir`.
pub fn write_topology(topology: &ShardTopology, dir: &Path) -> Result<()> {
    let mut entries = Vec::new();
    for (id, shard) in topology.shards() {
        let file = format!("shard-{:05}.idx", id.0);
        shard.index.write_file(&dir.join(&file))?;
        let range = topology.range_days(id);
        entries.push(ShardManifestEntry {
            shard_id: id.0,
            range_start_days: range.map(|(s, _)| s),
            range_end_days: range.map(|(_, e)| e),
            index_file: file,
        });
    }
    let manifest = TopologyManifest {
        mode: topology.mode,
        granularity_days: topology.granularity_days,
        shards: entries,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_topology(dir: &Path) -> Result<ShardTopology> {
    let manifest: TopologyManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    if manifest.mode == ShardingMode::DateSharded && manifest.granularity_days == 0 {
        return Err(Error::FileFormat("date-sharded manifest without granularity".into()));
    }
    let mut shards = BTreeMap::new();
    for entry in &manifest.shards {
        let id = ShardId(entry.shard_id);
        if manifest.mode == ShardingMode::DateSharded {
            let g = manifest.granularity_days as u64;
            let expect = (id.0 as u64 * g, (id.0 as u64 + 1) * g);
            if entry.range_start_days != Some(expect.0) || entry.range_end_days != Some(expect.1) {
                return Err(Error::FileFormat(format!(
                    "shard {id} range does not match its bucket"
                )));
            }
        }
        let index = Index::read_file(&dir.join(&entry.index_file))?;
        if shards
            .insert(
                id,
                Shard {
                    index,
                    available: true,
                },
            )
            .is_some()
        {
            return Err(Error::FileFormat(format!("duplicate shard {id} in manifest")));
        }
    }
    Ok(ShardTopology {
        mode: manifest.mode,
        granularity_days: manifest.granularity_days,
        shards,
    })
}

/// Shard loads and replica counts as CSV
/// (shard_id, range_start, range_end, expected_load, replicas).
pub fn loads_csv(
    topology: &ShardTopology,
    loads: &BTreeMap<ShardId, f64>,
    replicas: Option<&BTreeMap<ShardId, u64>>,
) -> String {
    let mut out = String::from("shard_id,range_start,range_end,expected_load,replicas\n");
    for (&id, &load) in loads {
        let (start, end) = match topology.range_days(id) {
            Some((s, e)) => (
                days_to_iso(s as u32),
                days_to_iso(e as u32),
            ),
            None => (String::new(), String::new()),
        };
        let reps = replicas
            .and_then(|r| r.get(&id))
            .map(|r| r.to_string())
            .unwrap_or_default();
        out.push_str(&format!("{},{start},{end},{load},{reps}\n", id.0));
    }
    out
}
