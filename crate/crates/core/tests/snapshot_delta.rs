//! End-to-end checks across module boundaries: snapshot-plus-delta queries
//! against the monolithic baseline, shard retirement, and persistence of the
//! whole pipeline through files.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use chronoshard::corpus::{DocId, Document, Term};
use chronoshard::datacentre::{
    execute_query, load_topology, retire_shards, shards_after, write_topology,
    FleetDistribution, ShardTopology,
};
use chronoshard::index::{search, Index};
use chronoshard::updates::{Archive, ChangeKind};
use chronoshard::Date;

fn doc(id: DocId, date: Date, text: &str) -> Document {
    Document {
        doc_id: id,
        uri: format!("urn:doc:{id}"),
        modified_date: date,
        text: text.to_string(),
    }
}

struct Scenario {
    log_dir: tempfile::TempDir,
    archive: Archive,
    /// Corpus captured at each requested cut day, oldest first.
    snapshots: Vec<(Date, Vec<Document>)>,
    current: Vec<Document>,
}

/// Random corpus evolving over ~5 years with snapshots at the given days.
fn build_scenario(seed: u64, snapshot_days: &[u32]) -> Scenario {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let log_dir = tempfile::tempdir().unwrap();
    let mut archive = Archive::create(&log_dir.path().join("log.chl")).unwrap();

    let mut state: BTreeMap<DocId, Document> = BTreeMap::new();
    let mut next_id = 1u64;
    let mut day = 9_000u32;
    let mut cuts = snapshot_days.to_vec();
    cuts.sort_unstable();
    let mut snapshots = Vec::new();

    while day < 9_000 + 1_800 {
        while let Some(&cut) = cuts.first() {
            if day > cut {
                snapshots.push((
                    Date::from_days(cut).unwrap(),
                    state.values().cloned().collect(),
                ));
                cuts.remove(0);
            } else {
                break;
            }
        }
        let date = Date::from_days(day).unwrap();
        let live: Vec<DocId> = state.keys().copied().collect();
        let roll: f64 = rng.gen();
        if live.is_empty() || roll < 0.5 {
            let id = next_id;
            next_id += 1;
            let text = format!("alpha w{} w{}", rng.gen_range(0..13), rng.gen_range(0..5));
            archive
                .append(ChangeKind::Add, date, id, Some(doc(id, date, &text)))
                .unwrap();
            state.insert(id, doc(id, date, &text));
        } else if roll < 0.8 {
            let id = live[rng.gen_range(0..live.len())];
            let text = format!("beta w{} w{}", rng.gen_range(0..13), rng.gen_range(0..7));
            archive
                .append(ChangeKind::Modify, date, id, Some(doc(id, date, &text)))
                .unwrap();
            state.insert(id, doc(id, date, &text));
        } else {
            let id = live[rng.gen_range(0..live.len())];
            archive.append(ChangeKind::Delete, date, id, None).unwrap();
            state.remove(&id);
        }
        day += rng.gen_range(1..10);
    }
    for &cut in &cuts {
        snapshots.push((
            Date::from_days(cut).unwrap(),
            state.values().cloned().collect(),
        ));
    }
    Scenario {
        log_dir,
        archive,
        snapshots,
        current: state.values().cloned().collect(),
    }
}

fn queries(rng: &mut ChaCha20Rng, n: usize) -> Vec<Vec<Term>> {
    let pool = [
        "alpha", "beta", "w0", "w1", "w2", "w3", "w4", "w5", "w7", "w9", "w12", "missing",
    ];
    (0..n)
        .map(|_| {
            (0..rng.gen_range(1..4))
                .map(|_| pool[rng.gen_range(0..pool.len())].to_string())
                .collect()
        })
        .collect()
}

#[test]
fn retirement_never_changes_any_fleet_result() {
    for seed in 0..5 {
        let scenario = build_scenario(
            100 + seed,
            &[9_700, 9_900, 10_200, 10_500],
        );
        let mut topo = ShardTopology::build_date_sharded(&scenario.current, 90).unwrap();
        let mono = Index::build(&scenario.current).unwrap();

        let dates: Vec<Date> = scenario.snapshots.iter().map(|&(d, _)| d).collect();
        let fleet = FleetDistribution::uniform(&dates).unwrap();
        let clients: Vec<(Index, Date)> = scenario
            .snapshots
            .iter()
            .map(|(d, docs)| (Index::build(docs).unwrap(), *d))
            .collect();

        let mut rng = ChaCha20Rng::seed_from_u64(7_000 + seed);
        let query_set = queries(&mut rng, 60);

        let run_all = |topo: &ShardTopology| -> Vec<Vec<(Vec<DocId>, Vec<u64>)>> {
            clients
                .iter()
                .map(|(idx, snap)| {
                    query_set
                        .iter()
                        .map(|q| {
                            let r = execute_query(
                                q,
                                10,
                                (idx, *snap),
                                topo,
                                scenario.archive.changes(),
                            )
                            .unwrap();
                            let bits = r.hits.iter().map(|h| h.score.to_bits()).collect();
                            (r.doc_ids(), bits)
                        })
                        .collect()
                })
                .collect()
        };

        let before = run_all(&topo);

        // Every client agrees with a from-scratch monolithic index.
        for (client_results, _) in before.iter().zip(&clients) {
            for (q, (ids, bits)) in query_set.iter().zip(client_results) {
                let want = search(&mono, q, 10, None);
                assert_eq!(*ids, want.doc_ids(), "seed {seed} query {q:?}");
                let want_bits: Vec<u64> = want.hits.iter().map(|h| h.score.to_bits()).collect();
                assert_eq!(*bits, want_bits, "seed {seed} query {q:?}");
            }
        }

        // Retire everything older than the oldest fleet snapshot, then
        // re-run the full suite: nothing may change.
        let retired = retire_shards(&fleet, &topo).unwrap();
        let kept = shards_after(fleet.min_snapshot(), &topo).unwrap();
        assert_eq!(
            retired.len() + kept.len(),
            topo.shard_ids().len(),
            "retired and kept shards partition the topology"
        );
        for id in &retired {
            topo.set_available(*id, false).unwrap();
        }
        let after = run_all(&topo);
        assert_eq!(before, after, "seed {seed}: retirement changed results");
    }
}

#[test]
fn pipeline_survives_disk_round_trip() {
    let scenario = build_scenario(42, &[10_000]);
    let topo = ShardTopology::build_date_sharded(&scenario.current, 120).unwrap();
    let (snap_date, snap_docs) = &scenario.snapshots[0];
    let client = Index::build(snap_docs).unwrap();

    let dir = tempfile::tempdir().unwrap();
    write_topology(&topo, dir.path()).unwrap();
    let topo2 = load_topology(dir.path()).unwrap();

    let client_path = dir.path().join("client.idx");
    client.write_file(&client_path).unwrap();
    let client2 = Index::read_file(&client_path).unwrap();
    assert_eq!(client.to_bytes(), client2.to_bytes());

    let archive2 = Archive::open(scenario.archive.path()).unwrap();
    assert_eq!(
        scenario.archive.head_seq(),
        archive2.head_seq(),
        "reopened archive sees every appended change"
    );

    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for q in queries(&mut rng, 40) {
        let live = execute_query(
            &q,
            8,
            (&client, *snap_date),
            &topo,
            scenario.archive.changes(),
        )
        .unwrap();
        let reloaded = execute_query(
            &q,
            8,
            (&client2, *snap_date),
            &topo2,
            archive2.changes(),
        )
        .unwrap();
        assert_eq!(live.doc_ids(), reloaded.doc_ids());
        let a: Vec<u64> = live.hits.iter().map(|h| h.score.to_bits()).collect();
        let b: Vec<u64> = reloaded.hits.iter().map(|h| h.score.to_bits()).collect();
        assert_eq!(a, b);
    }
    drop(scenario.log_dir);
}
