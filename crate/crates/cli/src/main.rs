//! `chs`: command-line front end for the chronoshard library.
//!
//! Every subcommand reads only the paths named in its flags and writes only
//! to `--out` (or stdout). Randomized commands take `--seed`, default 0;
//! nothing draws from wall-clock entropy, so identical invocations over
//! identical inputs produce byte-identical outputs. An optional `--config`
//! JSON file may supply any long flag by name (e.g. `"granularity-days"`);
//! explicit flags win.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use chronoshard::corpus::{load_corpus, tokenize, DocId};
use chronoshard::datacentre::{
    expected_shard_load, plan_replicas, retire_shards, shards_after, FleetDistribution,
    ShardTopology,
};
use chronoshard::date::days_to_iso;
use chronoshard::index::{search, Index};
use chronoshard::projections::{
    broadcast_feasible, crossover_csv_row, curve_csv, estimate_engine_size, estimate_web_size,
    named_curve, sensitivity, zipf_probes, Engine, CROSSOVER_CSV_HEADER, DEFAULT_CROSSOVER_RANGE,
    DEFAULT_PROBES,
};
use chronoshard::simulate::{compare, metrics_csv, run, SimConfig, SimMode, SnapshotPolicy};
use chronoshard::updates::{broadcast_round, Archive, ChangeKind, ClientState, LossModel};
use chronoshard::Date;

/// Errors that are the caller's fault (missing or contradictory flags).
/// They exit 2 like clap's own usage errors; everything else exits 1.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "chs",
    version,
    about = "Date-sharded snapshot+delta search prototype and growth projections"
)]
struct Cli {
    /// JSON object supplying defaults for any long flag, by flag name
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build and query index files
    #[command(subcommand)]
    Index(IndexCmd),
    /// Inspect date-sharded topologies and route queries
    #[command(subcommand)]
    Shard(ShardCmd),
    /// Allocate replicas across shards for a client fleet
    #[command(subcommand)]
    Replicate(ReplicateCmd),
    /// Append to, replay, and broadcast a change log
    #[command(subcommand)]
    Log(LogCmd),
    /// Run seeded fleet cost simulations
    #[command(subcommand)]
    Simulate(SimulateCmd),
    /// Emit projection curves, crossover reports, and size estimates
    #[command(subcommand)]
    Project(ProjectCmd),
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Build an index file from a JSONL corpus
    Build(IndexBuildArgs),
    /// Run a BM25 query against an index file
    Search(IndexSearchArgs),
}

#[derive(Args)]
struct IndexBuildArgs {
    /// Corpus file, one JSON document per line
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Index file to write
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IndexSearchArgs {
    /// Index file to query
    #[arg(long)]
    index: Option<PathBuf>,
    /// Query text; tokenized like document text
    #[arg(long)]
    query: Option<String>,
    /// Results to return (default 10)
    #[arg(long)]
    k: Option<usize>,
    /// Write the result CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ShardCmd {
    /// List shards and mark the suffix a snapshot must query
    Plan(ShardPlanArgs),
    /// Print the routing plan for one query
    Route(ShardRouteArgs),
}

#[derive(Args)]
struct ShardPlanArgs {
    /// Corpus file defining the topology
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Days per date bucket (default 365)
    #[arg(long)]
    granularity_days: Option<u32>,
    /// Client snapshot date, YYYY-MM-DD
    #[arg(long)]
    snapshot_date: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ShardRouteArgs {
    /// Corpus file defining the topology
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Days per date bucket (default 365)
    #[arg(long)]
    granularity_days: Option<u32>,
    /// Client snapshot date, YYYY-MM-DD
    #[arg(long)]
    snapshot_date: Option<String>,
    /// Query text
    #[arg(long)]
    query: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReplicateCmd {
    /// Plan replica counts per shard under a budget
    Plan(ReplicatePlanArgs),
}

#[derive(Args)]
struct ReplicatePlanArgs {
    /// Corpus file defining the topology
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Days per date bucket (default 365)
    #[arg(long)]
    granularity_days: Option<u32>,
    /// Fleet CSV with header snapshot_date,weight; weights sum to 1
    #[arg(long)]
    fleet: Option<PathBuf>,
    /// Total replicas to place
    #[arg(long)]
    budget: Option<u64>,
    /// Fleet-wide queries per unit time (default 1)
    #[arg(long)]
    rate: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum LogCmd {
    /// Append one change record to a log (created if missing)
    Append(LogAppendArgs),
    /// Replay a log into a fresh client, optionally answering a query
    Replay(LogReplayArgs),
    /// Broadcast a log to simulated clients under message loss
    BroadcastSim(LogBroadcastArgs),
}

#[derive(Args)]
struct LogAppendArgs {
    /// Change log file
    #[arg(long)]
    log: Option<PathBuf>,
    /// add, modify, or delete
    #[arg(long)]
    kind: Option<String>,
    /// Change date, YYYY-MM-DD; must not precede the log head
    #[arg(long)]
    date: Option<String>,
    /// Document id the change applies to
    #[arg(long)]
    doc_id: Option<u64>,
    /// Corpus file supplying the payload document (add and modify)
    #[arg(long)]
    corpus: Option<PathBuf>,
}

#[derive(Args)]
struct LogReplayArgs {
    /// Change log file
    #[arg(long)]
    log: Option<PathBuf>,
    /// Query text; omitted, the command prints a replay summary
    #[arg(long)]
    query: Option<String>,
    /// Results to return (default 10)
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LogBroadcastArgs {
    /// Change log file
    #[arg(long)]
    log: Option<PathBuf>,
    /// Number of simulated clients (default 50)
    #[arg(long)]
    clients: Option<u32>,
    /// Per-record loss probability (default 0.3)
    #[arg(long)]
    loss: Option<f64>,
    /// Broadcast rounds (default 1)
    #[arg(long)]
    rounds: Option<u32>,
    /// RNG seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Simulate the archive being unreachable during catch-up
    #[arg(long)]
    archive_down: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SimulateCmd {
    /// Run one simulation and print its metrics
    Run(SimulateArgs),
    /// Run the same workload under several modes and print all metrics
    Compare(SimulateArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// RNG seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    /// centralized, date-sharded, or broadcast (simulate run only)
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated modes (simulate compare only; default all three)
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    n_clients: Option<u32>,
    /// Device replacement cycle in days (default 548)
    #[arg(long)]
    device_lifetime_days: Option<u32>,
    #[arg(long)]
    queries_per_client_per_month: Option<u32>,
    #[arg(long)]
    horizon_days: Option<u32>,
    #[arg(long)]
    docs_per_day: Option<u32>,
    #[arg(long)]
    vocab_size: Option<u32>,
    #[arg(long)]
    zipf_exponent: Option<f64>,
    #[arg(long)]
    doc_len_min: Option<u32>,
    #[arg(long)]
    doc_len_max: Option<u32>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    granularity_days: Option<u32>,
    /// First corpus day, YYYY-MM-DD
    #[arg(long)]
    start_date: Option<String>,
    /// Pin every client to this snapshot date instead of uniform ages
    #[arg(long)]
    snapshot_date: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ProjectCmd {
    /// Sample a named projection curve over a year range
    Curve(ProjectCurveArgs),
    /// First year a capacity curve meets a demand curve
    Crossover(ProjectCrossoverArgs),
    /// Crossovers with the demand curve scaled by one or more factors
    Sensitivity(ProjectCrossoverArgs),
    /// Capture-recapture corpus size estimation across engines
    EstimateSize(ProjectEstimateArgs),
    /// Whether one day of corpus changes fits one connection-day
    BroadcastFeasible(ProjectFeasibleArgs),
}

#[derive(Args)]
struct ProjectCurveArgs {
    /// Curve name; see `project curve --name help`
    #[arg(long)]
    name: Option<String>,
    /// First year sampled
    #[arg(long)]
    from: Option<f64>,
    /// Last year sampled (inclusive)
    #[arg(long)]
    to: Option<f64>,
    /// Sampling step in years (default 1)
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectCrossoverArgs {
    /// Capacity curve name (e.g. disk, sd, disk-anchored)
    #[arg(long)]
    capacity: Option<String>,
    /// Demand curve name (e.g. index@0.11, text-plus-index, web-full)
    #[arg(long)]
    demand: Option<String>,
    /// Demand scale factors, comma separated (sensitivity only; default 1)
    #[arg(long)]
    scale: Option<String>,
    /// Search range start year (default 2012)
    #[arg(long)]
    from: Option<f64>,
    /// Search range end year (default 2050)
    #[arg(long)]
    to: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectEstimateArgs {
    /// Reference corpus the probe terms are drawn from
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Comma-separated corpus files, one per engine (default: the reference)
    #[arg(long)]
    engines: Option<String>,
    /// Probe terms spread across the Zipf ranks (default 50)
    #[arg(long)]
    probes: Option<usize>,
    /// Top-k sample size for overlap measurement (default 200)
    #[arg(long)]
    sample_k: Option<usize>,
    /// RNG seed (default 0)
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjectFeasibleArgs {
    /// Year to evaluate
    #[arg(long)]
    year: Option<f64>,
    /// Modified bytes per created byte (default 1)
    #[arg(long)]
    modification_factor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Values from the optional `--config` JSON object. Getters fail on type
/// mismatches so a typo'd config does not silently fall back to defaults.
struct Settings(serde_json::Map<String, serde_json::Value>);

impl Settings {
    fn load(path: Option<&Path>) -> Result<Settings> {
        let Some(path) = path else {
            return Ok(Settings(serde_json::Map::new()));
        };
        let text = fs::read_to_string(path)
            .with_context(|| format!("{}: cannot read config", path.display()))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .with_context(|| format!("{}: not valid JSON", path.display()))?;
        match value {
            serde_json::Value::Object(map) => Ok(Settings(map)),
            _ => Err(usage(format!(
                "{}: config must be a JSON object of flag names to values",
                path.display()
            ))),
        }
    }

    fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key, "an unsigned integer", |v| v.as_u64())
    }

    fn u32(&self, key: &str) -> Result<Option<u32>> {
        match self.u64(key)? {
            None => Ok(None),
            Some(v) => Ok(Some(v.try_into().map_err(|_| {
                usage(format!("config key {key:?}: {v} does not fit in 32 bits"))
            })?)),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.u64(key)?.map(|v| v as usize))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key, "a number", |v| v.as_f64())
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        self.get(key, "a string", |v| v.as_str().map(str::to_string))
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.string(key)?.map(PathBuf::from))
    }

    fn get<T>(
        &self,
        key: &str,
        wanted: &str,
        extract: impl Fn(&serde_json::Value) -> Option<T>,
    ) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(v) => extract(v)
                .map(Some)
                .ok_or_else(|| usage(format!("config key {key:?}: expected {wanted}, got {v}"))),
        }
    }
}

fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("--{flag} is required (flag or config)")))
}

fn parse_date(text: &str, flag: &str) -> Result<Date> {
    Date::parse(text).map_err(|e| usage(format!("--{flag}: {e}")))
}

fn emit(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("{}: cannot write output", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let settings = match Settings::load(cli.config.as_deref()) {
        Ok(s) => s,
        Err(e) => return report(e),
    };
    match dispatch(cli.command, &settings) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e),
    }
}

fn report(e: anyhow::Error) -> ExitCode {
    if e.downcast_ref::<Usage>().is_some() {
        eprintln!("usage error: {e}");
        ExitCode::from(2)
    } else {
        eprintln!("error: {e:#}");
        ExitCode::from(1)
    }
}

fn dispatch(command: Command, s: &Settings) -> Result<()> {
    match command {
        Command::Index(IndexCmd::Build(a)) => index_build(a, s),
        Command::Index(IndexCmd::Search(a)) => index_search(a, s),
        Command::Shard(ShardCmd::Plan(a)) => shard_plan(a, s),
        Command::Shard(ShardCmd::Route(a)) => shard_route(a, s),
        Command::Replicate(ReplicateCmd::Plan(a)) => replicate_plan(a, s),
        Command::Log(LogCmd::Append(a)) => log_append(a, s),
        Command::Log(LogCmd::Replay(a)) => log_replay(a, s),
        Command::Log(LogCmd::BroadcastSim(a)) => log_broadcast(a, s),
        Command::Simulate(SimulateCmd::Run(a)) => simulate_run(a, s),
        Command::Simulate(SimulateCmd::Compare(a)) => simulate_compare(a, s),
        Command::Project(ProjectCmd::Curve(a)) => project_curve(a, s),
        Command::Project(ProjectCmd::Crossover(a)) => project_crossover(a, s, false),
        Command::Project(ProjectCmd::Sensitivity(a)) => project_crossover(a, s, true),
        Command::Project(ProjectCmd::EstimateSize(a)) => project_estimate(a, s),
        Command::Project(ProjectCmd::BroadcastFeasible(a)) => project_feasible(a, s),
    }
}

fn load_corpus_arg(path: &Path) -> Result<Vec<chronoshard::corpus::Document>> {
    load_corpus(path).with_context(|| path.display().to_string())
}

fn index_build(a: IndexBuildArgs, s: &Settings) -> Result<()> {
    let corpus = require(a.corpus.or(s.path("corpus")?), "corpus")?;
    let out = require(a.out.or(s.path("out")?), "out")?;
    let docs = load_corpus_arg(&corpus)?;
    let index = Index::build(&docs)?;
    index
        .write_file(&out)
        .with_context(|| out.display().to_string())?;
    let bytes = fs::metadata(&out)
        .with_context(|| out.display().to_string())?
        .len();
    println!("docs,vocab,bytes");
    println!("{},{},{}", index.n_docs(), index.vocab_size(), bytes);
    Ok(())
}

fn hits_csv(result: &chronoshard::index::SearchResult) -> String {
    let mut csv = String::from("rank,doc_id,score\n");
    for (rank, hit) in result.hits.iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", rank + 1, hit.doc_id, hit.score));
    }
    csv
}

fn index_search(a: IndexSearchArgs, s: &Settings) -> Result<()> {
    let path = require(a.index.or(s.path("index")?), "index")?;
    let query = require(a.query.or(s.string("query")?), "query")?;
    let k = a.k.or(s.usize("k")?).unwrap_or(10);
    let index = Index::read_file(&path).with_context(|| path.display().to_string())?;
    let result = search(&index, &tokenize(&query), k, None);
    emit(a.out.as_deref(), &hits_csv(&result))
}

fn shard_plan(a: ShardPlanArgs, s: &Settings) -> Result<()> {
    let corpus = require(a.corpus.or(s.path("corpus")?), "corpus")?;
    let granularity = a
        .granularity_days
        .or(s.u32("granularity-days")?)
        .unwrap_or(365);
    let snapshot = parse_date(
        &require(a.snapshot_date.or(s.string("snapshot-date")?), "snapshot-date")?,
        "snapshot-date",
    )?;
    let docs = load_corpus_arg(&corpus)?;
    let topology = ShardTopology::build_date_sharded(&docs, granularity)?;
    let selected: BTreeSet<_> = shards_after(snapshot, &topology)?.into_iter().collect();
    let mut csv = String::from("shard_id,range_start,range_end,docs,selected\n");
    for (id, shard) in topology.shards() {
        let (start, end) = topology.range_days(id).expect("date-sharded topology");
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            id.0,
            days_to_iso(start as u32),
            days_to_iso(end as u32 - 1),
            shard.index.n_docs(),
            selected.contains(&id)
        ));
    }
    emit(a.out.as_deref(), &csv)
}

fn shard_route(a: ShardRouteArgs, s: &Settings) -> Result<()> {
    let corpus = require(a.corpus.or(s.path("corpus")?), "corpus")?;
    let granularity = a
        .granularity_days
        .or(s.u32("granularity-days")?)
        .unwrap_or(365);
    let snapshot = parse_date(
        &require(a.snapshot_date.or(s.string("snapshot-date")?), "snapshot-date")?,
        "snapshot-date",
    )?;
    let query = require(a.query.or(s.string("query")?), "query")?;
    let docs = load_corpus_arg(&corpus)?;
    let topology = ShardTopology::build_date_sharded(&docs, granularity)?;
    let plan = topology.plan(&tokenize(&query), snapshot)?;
    let shard_list = plan
        .selected
        .iter()
        .map(|id| id.0.to_string())
        .collect::<Vec<_>>()
        .join(";");
    let csv = format!(
        "terms,snapshot_date,include_local,selected_shards\n{},{},{},{}\n",
        plan.terms.join(";"),
        plan.snapshot_date,
        plan.include_local,
        shard_list
    );
    emit(a.out.as_deref(), &csv)
}

fn parse_fleet(path: &Path) -> Result<FleetDistribution> {
    let text =
        fs::read_to_string(path).with_context(|| format!("{}: cannot read fleet", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == "snapshot_date,weight" => {}
        _ => {
            return Err(usage(format!(
                "{}: fleet file needs header snapshot_date,weight",
                path.display()
            )))
        }
    }
    let mut entries = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (date, weight) = line.split_once(',').ok_or_else(|| {
            usage(format!("{}: line {}: expected date,weight", path.display(), idx + 1))
        })?;
        let date = Date::parse(date.trim())
            .with_context(|| format!("{}: line {}", path.display(), idx + 1))?;
        let weight: f64 = weight.trim().parse().map_err(|_| {
            usage(format!("{}: line {}: bad weight {weight:?}", path.display(), idx + 1))
        })?;
        entries.push((date, weight));
    }
    Ok(FleetDistribution::new(entries)?)
}

fn replicate_plan(a: ReplicatePlanArgs, s: &Settings) -> Result<()> {
    let corpus = require(a.corpus.or(s.path("corpus")?), "corpus")?;
    let fleet_path = require(a.fleet.or(s.path("fleet")?), "fleet")?;
    let budget = require(a.budget.or(s.u64("budget")?), "budget")?;
    let granularity = a
        .granularity_days
        .or(s.u32("granularity-days")?)
        .unwrap_or(365);
    let rate = a.rate.or(s.f64("rate")?).unwrap_or(1.0);

    let docs = load_corpus_arg(&corpus)?;
    let topology = ShardTopology::build_date_sharded(&docs, granularity)?;
    let fleet = parse_fleet(&fleet_path)?;
    let loads = expected_shard_load(&fleet, &topology, rate)?;
    let allocation = plan_replicas(&loads, budget)?;
    let retired: BTreeSet<_> = retire_shards(&fleet, &topology)?.into_iter().collect();

    let mut csv = String::from("shard_id,load,replicas,retired\n");
    for (id, load) in &loads {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            id.0,
            load,
            allocation[id],
            retired.contains(id)
        ));
    }
    emit(a.out.as_deref(), &csv)
}

fn log_append(a: LogAppendArgs, s: &Settings) -> Result<()> {
    let log_path = require(a.log.or(s.path("log")?), "log")?;
    let kind = match require(a.kind.or(s.string("kind")?), "kind")?.as_str() {
        "add" => ChangeKind::Add,
        "modify" => ChangeKind::Modify,
        "delete" => ChangeKind::Delete,
        other => return Err(usage(format!("--kind must be add, modify or delete, got {other:?}"))),
    };
    let date = parse_date(&require(a.date.or(s.string("date")?), "date")?, "date")?;
    let doc_id: DocId = require(a.doc_id.or(s.u64("doc-id")?), "doc-id")?;

    let payload = match kind {
        ChangeKind::Delete => {
            if a.corpus.is_some() {
                return Err(usage("--corpus is meaningless for a delete"));
            }
            None
        }
        _ => {
            let corpus = require(a.corpus.or(s.path("corpus")?), "corpus")?;
            let docs = load_corpus_arg(&corpus)?;
            let mut doc = docs
                .into_iter()
                .find(|d| d.doc_id == doc_id)
                .ok_or_else(|| {
                    anyhow::anyhow!("{}: no document with doc_id {doc_id}", corpus.display())
                })?;
            // The log defines when the document changed; the payload's own
            // stamp is whatever the corpus file happened to carry.
            doc.modified_date = date;
            Some(doc)
        }
    };

    let mut archive = if log_path.exists() {
        Archive::open(&log_path).with_context(|| log_path.display().to_string())?
    } else {
        Archive::create(&log_path).with_context(|| log_path.display().to_string())?
    };
    let change = archive
        .append(kind, date, doc_id, payload)
        .with_context(|| log_path.display().to_string())?;
    println!("seq,kind,date,doc_id");
    println!(
        "{},{},{},{}",
        change.seq,
        match change.kind {
            ChangeKind::Add => "add",
            ChangeKind::Modify => "modify",
            ChangeKind::Delete => "delete",
        },
        change.date,
        change.doc_id
    );
    Ok(())
}

fn log_replay(a: LogReplayArgs, s: &Settings) -> Result<()> {
    let log_path = require(a.log.or(s.path("log")?), "log")?;
    let archive = Archive::open(&log_path).with_context(|| log_path.display().to_string())?;
    let mut client = ClientState::new_empty(Date::MIN, 0.10)?;
    client.catch_up(&archive)?;
    let csv = match a.query.or(s.string("query")?) {
        Some(query) => {
            let k = a.k.or(s.usize("k")?).unwrap_or(10);
            hits_csv(&client.search(&tokenize(&query), k, None))
        }
        None => format!(
            "head_seq,live_docs\n{},{}\n",
            client.applied_seq(),
            client.n_live_docs()
        ),
    };
    emit(a.out.as_deref(), &csv)
}

fn log_broadcast(a: LogBroadcastArgs, s: &Settings) -> Result<()> {
    let log_path = require(a.log.or(s.path("log")?), "log")?;
    let n_clients = a.clients.or(s.u32("clients")?).unwrap_or(50);
    let loss = a.loss.or(s.f64("loss")?).unwrap_or(0.3);
    let rounds = a.rounds.or(s.u32("rounds")?).unwrap_or(1);
    let seed = a.seed.or(s.u64("seed")?).unwrap_or(0);
    if n_clients == 0 {
        return Err(usage("--clients must be positive"));
    }

    let archive = Archive::open(&log_path).with_context(|| log_path.display().to_string())?;
    let mut clients: Vec<ClientState> = (0..n_clients)
        .map(|_| ClientState::new_empty(Date::MIN, 0.10))
        .collect::<chronoshard::Result<_>>()?;

    let mut csv = String::from("round,delivered,lost,caught_up,stale_clients,clients_at_head,head_seq\n");
    for round in 0..rounds {
        let report = broadcast_round(
            &archive,
            &mut clients,
            LossModel {
                loss_probability: loss,
                seed: seed.wrapping_add(round as u64),
            },
            !a.archive_down,
        )?;
        let (mut delivered, mut lost, mut caught_up, mut stale, mut at_head) = (0, 0, 0, 0u32, 0u32);
        for d in &report.per_client {
            delivered += d.delivered;
            lost += d.lost;
            caught_up += d.caught_up;
            stale += d.stale as u32;
            at_head += (d.applied_seq == report.head_seq) as u32;
        }
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            round + 1,
            delivered,
            lost,
            caught_up,
            stale,
            at_head,
            report.head_seq
        ));
    }
    emit(a.out.as_deref(), &csv)
}

fn parse_mode(text: &str) -> Result<SimMode> {
    match text {
        "centralized" => Ok(SimMode::Centralized),
        "date-sharded" => Ok(SimMode::DateSharded),
        "broadcast" => Ok(SimMode::Broadcast),
        other => Err(usage(format!(
            "--mode must be centralized, date-sharded or broadcast, got {other:?}"
        ))),
    }
}

fn sim_config(a: &SimulateArgs, s: &Settings) -> Result<SimConfig> {
    let defaults = SimConfig::default();
    let snapshot_policy = match a.snapshot_date.clone().or(s.string("snapshot-date")?) {
        Some(text) => SnapshotPolicy::FixedDate(parse_date(&text, "snapshot-date")?),
        None => SnapshotPolicy::UniformAge,
    };
    let start_date = match a.start_date.clone().or(s.string("start-date")?) {
        Some(text) => parse_date(&text, "start-date")?,
        None => defaults.start_date,
    };
    Ok(SimConfig {
        seed: a.seed.or(s.u64("seed")?).unwrap_or(0),
        mode: defaults.mode,
        n_clients: a.n_clients.or(s.u32("n-clients")?).unwrap_or(defaults.n_clients),
        device_lifetime_days: a
            .device_lifetime_days
            .or(s.u32("device-lifetime-days")?)
            .unwrap_or(defaults.device_lifetime_days),
        queries_per_client_per_month: a
            .queries_per_client_per_month
            .or(s.u32("queries-per-client-per-month")?)
            .unwrap_or(defaults.queries_per_client_per_month),
        horizon_days: a
            .horizon_days
            .or(s.u32("horizon-days")?)
            .unwrap_or(defaults.horizon_days),
        docs_per_day: a
            .docs_per_day
            .or(s.u32("docs-per-day")?)
            .unwrap_or(defaults.docs_per_day),
        vocab_size: a.vocab_size.or(s.u32("vocab-size")?).unwrap_or(defaults.vocab_size),
        zipf_exponent: a
            .zipf_exponent
            .or(s.f64("zipf-exponent")?)
            .unwrap_or(defaults.zipf_exponent),
        doc_len_min: a
            .doc_len_min
            .or(s.u32("doc-len-min")?)
            .unwrap_or(defaults.doc_len_min),
        doc_len_max: a
            .doc_len_max
            .or(s.u32("doc-len-max")?)
            .unwrap_or(defaults.doc_len_max),
        k: a.k.or(s.usize("k")?).unwrap_or(defaults.k),
        granularity_days: a
            .granularity_days
            .or(s.u32("granularity-days")?)
            .unwrap_or(defaults.granularity_days),
        start_date,
        snapshot_policy,
    })
}

fn simulate_run(a: SimulateArgs, s: &Settings) -> Result<()> {
    if a.modes.is_some() {
        return Err(usage("--modes belongs to simulate compare; use --mode"));
    }
    let mode = parse_mode(&require(a.mode.clone().or(s.string("mode")?), "mode")?)?;
    let config = SimConfig {
        mode,
        ..sim_config(&a, s)?
    };
    let metrics = run(&config)?;
    emit(a.out.as_deref(), &metrics_csv(&[metrics]))
}

fn simulate_compare(a: SimulateArgs, s: &Settings) -> Result<()> {
    if a.mode.is_some() {
        return Err(usage("--mode belongs to simulate run; use --modes"));
    }
    let modes_text = a
        .modes
        .clone()
        .or(s.string("modes")?)
        .unwrap_or_else(|| "centralized,date-sharded,broadcast".to_string());
    let base = sim_config(&a, s)?;
    let configs: Vec<SimConfig> = modes_text
        .split(',')
        .map(|m| {
            Ok(SimConfig {
                mode: parse_mode(m.trim())?,
                ..base.clone()
            })
        })
        .collect::<Result<_>>()?;
    let metrics = compare(&configs)?;
    emit(a.out.as_deref(), &metrics_csv(&metrics))
}

fn project_curve(a: ProjectCurveArgs, s: &Settings) -> Result<()> {
    let name = require(a.name.or(s.string("name")?), "name")?;
    let curve = named_curve(&name)?;
    let from = require(a.from.or(s.f64("from")?), "from")?;
    let to = require(a.to.or(s.f64("to")?), "to")?;
    let step = a.step.or(s.f64("step")?).unwrap_or(1.0);
    emit(a.out.as_deref(), &curve_csv(&curve, from, to, step)?)
}

fn project_crossover(a: ProjectCrossoverArgs, s: &Settings, scaled: bool) -> Result<()> {
    let capacity_name = require(a.capacity.or(s.string("capacity")?), "capacity")?;
    let demand_name = require(a.demand.or(s.string("demand")?), "demand")?;
    let scales: Vec<f64> = match (scaled, a.scale.or(s.string("scale")?)) {
        (false, Some(_)) => {
            return Err(usage("--scale belongs to project sensitivity"));
        }
        (false, None) => vec![1.0],
        (true, text) => text
            .unwrap_or_else(|| "1".to_string())
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| usage(format!("--scale: bad factor {t:?}")))
            })
            .collect::<Result<_>>()?,
    };
    let from = a.from.or(s.f64("from")?).unwrap_or(DEFAULT_CROSSOVER_RANGE.0);
    let to = a.to.or(s.f64("to")?).unwrap_or(DEFAULT_CROSSOVER_RANGE.1);

    let capacity = named_curve(&capacity_name)?.model;
    let demand = named_curve(&demand_name)?.model;
    let mut csv = String::from(CROSSOVER_CSV_HEADER);
    for scale in scales {
        let report = sensitivity(scale, &capacity, &demand, (from, to))?;
        csv.push_str(&crossover_csv_row(&capacity_name, &demand_name, &report));
    }
    emit(a.out.as_deref(), &csv)
}

fn project_estimate(a: ProjectEstimateArgs, s: &Settings) -> Result<()> {
    let corpus = require(a.corpus.or(s.path("corpus")?), "corpus")?;
    let probes_n = a.probes.or(s.usize("probes")?).unwrap_or(DEFAULT_PROBES);
    let sample_k = a.sample_k.or(s.usize("sample-k")?).unwrap_or(200);
    let seed = a.seed.or(s.u64("seed")?).unwrap_or(0);

    let reference = Index::build(&load_corpus_arg(&corpus)?)?;
    let probes = zipf_probes(&reference, probes_n)?;

    let engine_paths: Vec<PathBuf> = match a.engines.or(s.string("engines")?) {
        Some(list) => list.split(',').map(|p| PathBuf::from(p.trim())).collect(),
        None => vec![corpus.clone()],
    };
    let mut indexes = Vec::with_capacity(engine_paths.len());
    for path in &engine_paths {
        indexes.push(Index::build(&load_corpus_arg(path)?)?);
    }

    let mut csv = String::from("engine,documents,probes_used,probes_excluded\n");
    for (path, index) in engine_paths.iter().zip(&indexes) {
        let est = estimate_engine_size(index, &probes)?;
        csv.push_str(&format!(
            "{},{},{},{}\n",
            path.display(),
            est.documents,
            est.probes_used,
            est.probes_excluded
        ));
    }
    let engines: Vec<&dyn Engine> = indexes.iter().map(|i| i as &dyn Engine).collect();
    let union = estimate_web_size(&engines, &probes, sample_k, seed)?;
    csv.push_str(&format!("union,{union},,\n"));
    emit(a.out.as_deref(), &csv)
}

fn project_feasible(a: ProjectFeasibleArgs, s: &Settings) -> Result<()> {
    let year = require(a.year.or(s.f64("year")?), "year")?;
    let factor = a
        .modification_factor
        .or(s.f64("modification-factor")?)
        .unwrap_or(1.0);
    let f = broadcast_feasible(year, factor)?;
    let csv = format!(
        "year,modification_factor,daily_change_bytes,ieee_daily_capacity,nielsen_daily_capacity,feasible_ieee,feasible_nielsen\n{},{},{},{},{},{},{}\n",
        f.year,
        f.modification_factor,
        f.daily_change_bytes,
        f.ieee_daily_capacity,
        f.nielsen_daily_capacity,
        f.feasible_ieee,
        f.feasible_nielsen
    );
    emit(a.out.as_deref(), &csv)
}
