mod common;

use std::collections::{BTreeSet, HashMap};

use chrono::{Duration, FixedOffset, NaiveDate, TimeZone, Utc};
use proptest::prelude::*;
use tdcomm::ingest::{apply_stoplist, bin_by_day, PostRecord, Stoplist};
use tdcomm::mapeq::{codelength, optimize, visit_rates, FlowGraph, OptimizeConfig};
use tdcomm::synth::nmi;
use tdcomm::tdnet::{build_network, validate_block_structure, BuildOptions, EdgeMode};

type RawPost = (u8, u8, u32, Vec<u8>);

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 5, 1).unwrap()
}

fn to_records(raw: &[RawPost]) -> Vec<PostRecord> {
    let day0 = Utc.from_utc_datetime(&start().and_hms_opt(0, 0, 0).unwrap());
    raw.iter()
        .map(|(u, d, s, tags)| {
            let t = day0 + Duration::days(i64::from(*d)) + Duration::seconds(i64::from(*s));
            PostRecord::new(format!("u{u}"), t, tags.iter().map(|x| format!("t{x}"))).unwrap()
        })
        .collect()
}

fn posts() -> impl Strategy<Value = Vec<RawPost>> {
    prop::collection::vec(
        (
            0u8..8,
            0u8..6,
            0u32..86_400,
            prop::collection::vec(0u8..6, 1..4),
        ),
        0..40,
    )
}

fn days_of(records: Vec<PostRecord>) -> Vec<Vec<PostRecord>> {
    let end = start() + chrono::Days::new(4);
    bin_by_day(records, start(), end, FixedOffset::east_opt(0).unwrap())
        .unwrap()
        .days
}

fn edge_set(days: &[Vec<PostRecord>], mode: EdgeMode) -> Vec<(String, u32, String, u32, u32)> {
    let g = build_network(
        days,
        BuildOptions {
            mode,
            clique_cap: None,
        },
    );
    g.edges()
        .iter()
        .map(|e| {
            let (a, b) = (g.node(e.u as usize), g.node(e.v as usize));
            (a.user.clone(), a.day, b.user.clone(), b.day, e.weight)
        })
        .collect()
}

fn tags_of(days: &[Vec<PostRecord>], user: &str, day: u32) -> BTreeSet<String> {
    days[day as usize]
        .iter()
        .filter(|r| r.user == user)
        .flat_map(|r| r.hashtags.iter().cloned())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stoplist_is_idempotent(raw in posts(), stop in prop::collection::btree_set(0u8..6, 0..4)) {
        let list = Stoplist {
            query_keywords: BTreeSet::new(),
            generic: stop.iter().map(|x| format!("t{x}")).collect(),
        };
        let once = apply_stoplist(to_records(&raw), &list);
        let twice = apply_stoplist(once.records.clone(), &list);
        prop_assert_eq!(&twice.records, &once.records);
        prop_assert_eq!(twice.dropped, 0);
        prop_assert_eq!(once.records.len() + once.dropped, raw.len());
    }

    #[test]
    fn binning_partitions_records(raw in posts()) {
        let end = start() + chrono::Days::new(3);
        let b = bin_by_day(to_records(&raw), start(), end, FixedOffset::east_opt(7200).unwrap()).unwrap();
        prop_assert_eq!(b.n_records() + b.discarded, raw.len());
        for (d, day) in b.days.iter().enumerate() {
            for r in day {
                prop_assert_eq!(b.binning.day_of(&r.time), Some(d as u32));
            }
        }
    }

    #[test]
    fn record_order_does_not_matter(raw in posts(), seed in any::<u64>()) {
        let records = to_records(&raw);
        let mut shuffled = records.clone();
        use rand::{seq::SliceRandom, SeedableRng};
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let a = build_network(&days_of(records), BuildOptions::default());
        let b = build_network(&days_of(shuffled), BuildOptions::default());
        prop_assert_eq!(a.nodes(), b.nodes());
        prop_assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn built_networks_are_block_tridiagonal(raw in posts()) {
        let g = build_network(&days_of(to_records(&raw)), BuildOptions::default());
        prop_assert!(validate_block_structure(&g).is_ok());
    }

    #[test]
    fn weighted_edges_count_shared_hashtags(raw in posts()) {
        let days = days_of(to_records(&raw));
        let binary = edge_set(&days, EdgeMode::Binary);
        let weighted = edge_set(&days, EdgeMode::Weighted);
        prop_assert_eq!(binary.len(), weighted.len());
        for (b, w) in binary.iter().zip(&weighted) {
            prop_assert_eq!((&b.0, b.1, &b.2, b.3), (&w.0, w.1, &w.2, w.3));
            prop_assert_eq!(b.4, 1);
            let shared = tags_of(&days, &w.0, w.1).intersection(&tags_of(&days, &w.2, w.3)).count();
            prop_assert_eq!(w.4 as usize, shared);
            prop_assert!(shared >= 1);
        }
    }

    #[test]
    fn codelength_is_scale_invariant(
        (n, edges) in (2usize..9).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n as u32, 0..n as u32, 1u32..5), 1..20))),
        labels_seed in prop::collection::vec(0u32..4, 9),
        scale in 0.01f64..100.0,
    ) {
        let edges: Vec<_> = edges.into_iter().filter(|(u, v, _)| u != v).map(|(u, v, w)| (u, v, f64::from(w))).collect();
        prop_assume!(!edges.is_empty());
        let g = FlowGraph::from_edges(n, edges).unwrap();
        let labels = &labels_seed[..n];
        let a = codelength(&g, labels).unwrap().total;
        let b = codelength(&g.scaled(scale), labels).unwrap().total;
        prop_assert!((a - b).abs() < 1e-9);

        let flow = visit_rates(&g).unwrap();
        let sum: f64 = flow.visit_rate.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        let one = codelength(&g, &vec![0; n]).unwrap().total;
        prop_assert!((one - flow.entropy()).abs() < 1e-12);
    }

    #[test]
    fn nmi_is_symmetric_and_label_invariant(
        pair in prop::collection::vec((0u32..4, 0u32..4), 1..30),
        shift in 1u32..100,
    ) {
        let a: Vec<u32> = pair.iter().map(|p| p.0).collect();
        let b: Vec<u32> = pair.iter().map(|p| p.1).collect();
        let ab = nmi(&a, &b).unwrap();
        prop_assert!((ab - nmi(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab));
        let relabeled: Vec<u32> = a.iter().map(|x| (x * 7 + shift) % 1000).collect();
        prop_assert_eq!(nmi(&a, &relabeled).unwrap(), 1.0);
    }
}

#[test]
fn clique_edge_count() {
    for k in 1..=12usize {
        let day0 = Utc.from_utc_datetime(&start().and_hms_opt(12, 0, 0).unwrap());
        let records: Vec<PostRecord> = (0..k)
            .map(|i| PostRecord::new(format!("u{i}"), day0, ["shared"]).unwrap())
            .collect();
        let g = build_network(&[records], BuildOptions::default());
        assert_eq!(g.n_edges(), k * (k - 1) / 2);
    }
}

#[test]
fn optimize_is_deterministic() {
    for (n, edges) in common::small_graph_suite(21, 10, 12) {
        let g = FlowGraph::from_edges(n, edges.iter().map(|&(u, v, w)| (u as u32, v as u32, w)))
            .unwrap();
        let cfg = OptimizeConfig {
            seed: 9,
            ..Default::default()
        };
        let a = optimize(&g, &cfg).unwrap();
        let b = optimize(&g, &cfg).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn planted_users_map_to_their_nodes() {
    let spec = tdcomm::synth::PlantedSpec {
        n_days: 3,
        ..Default::default()
    };
    let p = tdcomm::synth::generate_planted(&spec).unwrap();
    let truth: HashMap<(String, u32), u32> = p.truth_map();
    let end = spec.start + chrono::Days::new(2);
    let days = bin_by_day(
        p.records,
        spec.start,
        end,
        FixedOffset::east_opt(0).unwrap(),
    )
    .unwrap()
    .days;
    let g = build_network(&days, BuildOptions::default());
    assert_eq!(g.n_nodes(), truth.len());
    for x in g.nodes() {
        assert!(truth.contains_key(&(x.user.clone(), x.day)));
    }
}
