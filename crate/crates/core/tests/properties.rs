mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use graphmap::alphabet::{encode_seq, Base};
use graphmap::bitalign::{
    align_single, align_with_k, generate_bitvectors, BitWord, PatternBitmasks, WindowConfig,
};
use graphmap::graphref::{parse_gfa, topo_sort, GenomeGraph};
use graphmap::index::{
    build_index, find_minimizers, FrequencyThreshold, Location, MinimizerIndex, MinimizerParams,
    ScoreMode, StrandMode,
};
use graphmap::minseed::{compute_region, extract_subgraph, seed_bases, SeedRegion, Subgraph};
use graphmap::oracle::{
    dag_edit_distance, naive_minimizers, replay_on_subgraph, s2s_edit_distance,
};
use graphmap::sim::{self, VariationParams};
use rand::seq::SliceRandom;
use rand::Rng;

fn bases(len: impl Into<proptest::collection::SizeRange>) -> impl Strategy<Value = Vec<Base>> {
    proptest::collection::vec((0u8..4).prop_map(Base::from_code), len)
}

fn score_mode() -> impl Strategy<Value = ScoreMode> {
    prop_oneof![Just(ScoreMode::Hash), Just(ScoreMode::Lex)]
}

fn strand_mode() -> impl Strategy<Value = StrandMode> {
    prop_oneof![Just(StrandMode::Forward), Just(StrandMode::Canonical)]
}

/// A small random DAG with node IDs shuffled out of topological order.
fn shuffled_dag(seed: u64) -> (GenomeGraph, Vec<u32>) {
    let mut rng = sim::rng(seed);
    let n = rng.gen_range(1..40);
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(&mut rng);
    let seqs: Vec<Vec<Base>> = (0..n)
        .map(|_| {
            let len = rng.gen_range(1..6);
            sim::random_bases(&mut rng, len)
        })
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for _ in 0..rng.gen_range(0..3) {
            if u + 1 < n {
                let v = rng.gen_range(u + 1..n);
                edges.push((perm[u], perm[v]));
            }
        }
    }
    let mut shuffled = vec![Vec::new(); n];
    for (i, s) in seqs.into_iter().enumerate() {
        shuffled[perm[i] as usize] = s;
    }
    (GenomeGraph::from_parts(&shuffled, &edges).unwrap(), perm)
}

fn small_graph(seed: u64, len: usize) -> GenomeGraph {
    let params = VariationParams {
        spacing: 12,
        max_indel: 4,
        ..Default::default()
    };
    sim::variation_graph(&mut sim::rng(seed), len, &params)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn topo_sort_orders_and_preserves(seed in any::<u64>()) {
        let (g, _) = shuffled_dag(seed);
        let sorted = topo_sort(&g).unwrap();
        prop_assert!(sorted.graph.is_topologically_sorted());
        sorted.graph.validate().unwrap();
        prop_assert_eq!(sorted.graph.edge_count(), g.edge_count());
        for old in 0..g.node_count() as u32 {
            prop_assert_eq!(sorted.graph.node_seq(sorted.new_id[old as usize]), g.node_seq(old));
        }
        for (u, v) in g.edges() {
            let (nu, nv) = (sorted.new_id[u as usize], sorted.new_id[v as usize]);
            prop_assert!(sorted.graph.successors(nu).contains(&nv));
        }
        // sorting is idempotent
        let again = topo_sort(&sorted.graph).unwrap();
        prop_assert_eq!(&again.graph, &sorted.graph);
    }

    #[test]
    fn graph_serialization_round_trips(seed in any::<u64>(), len in 1usize..500) {
        let g = small_graph(seed, len);
        let bytes = g.to_bytes();
        prop_assert_eq!(bytes.len(), g.serialized_len());
        prop_assert_eq!(GenomeGraph::from_bytes(&bytes).unwrap(), g.clone());
        let mut gfa = Vec::new();
        sim::write_gfa(&g, &mut gfa).unwrap();
        prop_assert_eq!(parse_gfa(&gfa[..]).unwrap(), g);
    }

    #[test]
    fn linear_positions_are_a_bijection(seed in any::<u64>(), len in 1usize..300) {
        let g = small_graph(seed, len);
        let mut next = 0u64;
        for id in 0..g.node_count() as u32 {
            for off in 0..g.node_len(id) as u32 {
                let p = g.linear_pos_of(id, off).unwrap();
                prop_assert_eq!(p.linear_pos, next);
                let back = g.offset_of_linear(next).unwrap();
                prop_assert_eq!((back.node_id, back.offset), (id, off));
                next += 1;
            }
        }
        prop_assert_eq!(next as usize, g.char_count());
        prop_assert!(g.offset_of_linear(next).is_err());
    }

    #[test]
    fn minimizers_match_naive(
        seq in bases(0..200),
        w in 1usize..=16,
        k in 1usize..=20,
        score in score_mode(),
        strand in strand_mode(),
    ) {
        let params = MinimizerParams::new(w, k).with_score(score).with_strand(strand);
        prop_assert_eq!(find_minimizers(&seq, &params).unwrap(), naive_minimizers(&seq, &params).unwrap());
    }

    #[test]
    fn shared_substring_shares_a_minimizer(
        left_a in bases(0..30),
        left_b in bases(0..30),
        shared in bases(24..60),
        right_a in bases(0..30),
        right_b in bases(0..30),
        w in 1usize..=10,
        score in score_mode(),
    ) {
        let k = 15;
        prop_assume!(shared.len() >= w + k - 1);
        let params = MinimizerParams::new(w, k).with_score(score);
        let a: Vec<Base> = [left_a, shared.clone(), right_a].concat();
        let b: Vec<Base> = [left_b, shared, right_b].concat();
        let ha: BTreeSet<u64> = find_minimizers(&a, &params).unwrap().iter().map(|m| m.hash).collect();
        let hb: BTreeSet<u64> = find_minimizers(&b, &params).unwrap().iter().map(|m| m.hash).collect();
        prop_assert!(ha.intersection(&hb).next().is_some());
    }

    #[test]
    fn index_is_complete_and_consistent(seed in any::<u64>(), len in 20usize..800, bits in 0u32..10) {
        let g = small_graph(seed, len);
        let params = MinimizerParams::new(5, 7);
        let index = build_index(&g, params, bits).unwrap();
        // every node minimizer is found at its location
        let mut expected = 0;
        for id in 0..g.node_count() as u32 {
            for m in find_minimizers(&g.node_seq(id), &params).unwrap() {
                expected += 1;
                let hit = index.lookup(m.hash);
                prop_assert_eq!(hit.count as usize, hit.locations.len());
                let loc = Location { node_id: id, offset: m.start };
                prop_assert!(hit.locations.contains(&loc));
            }
        }
        prop_assert_eq!(index.locations().len(), expected);
        // table structure
        let stats = index.stats();
        prop_assert_eq!(index.buckets().len(), 1usize << bits);
        let in_buckets: u64 = index.buckets().iter().map(|b| b.count as u64).sum();
        prop_assert_eq!(in_buckets, stats.distinct_minimizers);
        for w in index.minimizers().windows(2) {
            prop_assert!(w[0].hash < w[1].hash || (w[0].hash & ((1 << bits) - 1)) < (w[1].hash & ((1 << bits) - 1)));
        }
        for m in index.minimizers() {
            let locs = index.locations_of(m);
            prop_assert!(locs.windows(2).all(|p| p[0] < p[1]));
        }
        let bytes = index.to_bytes();
        prop_assert_eq!(bytes.len(), index.serialized_len());
        prop_assert_eq!(MinimizerIndex::from_bytes(&bytes).unwrap(), index);
    }

    #[test]
    fn regions_cover_exact_reads_on_chains(seed in any::<u64>(), len in 30usize..200) {
        let mut rng = sim::rng(seed);
        let text = sim::random_bases(&mut rng, 600);
        let g = GenomeGraph::from_parts(std::slice::from_ref(&text), &[]).unwrap();
        let index = build_index(&g, MinimizerParams::new(5, 11), 8).unwrap();
        let start = rng.gen_range(0..=600 - len);
        let read = &text[start..start + len];
        let (hits, _) = seed_bases(read, &index, &g, FrequencyThreshold::UNLIMITED).unwrap();
        let true_span = SeedRegion { x: start as u64, y: (start + len - 1) as u64 };
        let mut covered = false;
        for h in &hits {
            let r = compute_region(h, len, 0.1, 600);
            prop_assert!(r.x <= r.y && r.y < 600);
            covered |= r.contains(&true_span);
        }
        prop_assert!(covered, "no region covers the true span");
    }

    #[test]
    fn subgraph_hops_follow_the_graph(seed in any::<u64>(), x in 0u64..300, span in 1u64..200, hop in 1usize..16) {
        let g = small_graph(seed, 400);
        let total = g.char_count() as u64;
        let x = x.min(total - 1);
        let y = (x + span).min(total - 1);
        let sub = extract_subgraph(&g, SeedRegion { x, y }, hop).unwrap();
        prop_assert_eq!(sub.len() as u64, y - x + 1);
        let mut dropped = 0;
        for i in 0..sub.len() {
            let p = sub.positions()[i];
            let lin = x + i as u64;
            prop_assert_eq!(p.base, g.base_at(lin as usize));
            let mut expect = BTreeSet::new();
            if (p.offset as usize) + 1 < g.node_len(p.node_id) {
                if lin < y {
                    expect.insert(i as u32 + 1);
                }
            } else {
                for &v in g.successors(p.node_id) {
                    let t = g.linear_pos_of(v, 0).unwrap().linear_pos;
                    if t > y {
                        continue;
                    }
                    if (t - lin) as usize <= hop {
                        expect.insert((t - x) as u32);
                    } else {
                        dropped += 1;
                    }
                }
            }
            let got: BTreeSet<u32> = sub.successors(i).iter().copied().collect();
            prop_assert_eq!(got, expect);
        }
        prop_assert_eq!(sub.dropped_hops(), dropped);
        // hop-bit matrix agrees with the successor lists
        let bits = sub.hop_bits();
        for i in 0..sub.len() {
            for d in 1..=bits.width() {
                prop_assert_eq!(bits.get(i, d), sub.successors(i).contains(&((i + d) as u32)));
            }
        }
    }

    #[test]
    fn kernel_matches_dag_oracle(seed in any::<u64>(), k in 0usize..=8) {
        let mut rng = sim::rng(seed);
        let sub = common::small_dag(&mut rng, 32);
        let read = common::read_for(&mut rng, &sub, 32);
        let oracle = dag_edit_distance(&sub, &read);
        replay_on_subgraph(&sub, &read, &oracle.positions, &oracle.cigar, oracle.distance).unwrap();
        let got = align_single::<u64>(&read, &sub, k).unwrap();
        prop_assert_eq!(got.as_ref().map(|g| g.0.distance), (oracle.distance <= k).then_some(oracle.distance));
        if let Some((hit, tb)) = got {
            let cigar = tb.ops.iter().copied().collect();
            replay_on_subgraph(&sub, &read, &tb.positions, &cigar, hit.distance).unwrap();
            prop_assert_eq!(tb.positions.first().copied(), hit.start);
        }
        // the wide word gives the same answers
        let wide = align_single::<u128>(&read, &sub, k).unwrap();
        prop_assert_eq!(wide.map(|g| g.0), align_single::<u64>(&read, &sub, k).unwrap().map(|g| g.0));
    }

    #[test]
    fn chain_oracles_agree(text in bases(0..40), pattern in bases(0..20)) {
        let expect = s2s_edit_distance(&text, &pattern);
        if !text.is_empty() {
            let sub = Subgraph::chain(&text).unwrap();
            prop_assert_eq!(dag_edit_distance(&sub, &pattern).distance, expect);
        }
    }

    #[test]
    fn windowed_alignments_are_sound(seed in any::<u64>(), wide in any::<bool>()) {
        let mut rng = sim::rng(seed);
        let n = rng.gen_range(20..400);
        let sub = sim::random_subgraph(&mut rng, n, 6, 0.9);
        let len = rng.gen_range(1..300);
        let walk = common::walk(&mut rng, &sub, len);
        let read = sim::plant_edits(&mut rng, &walk, walk.len() / 15);
        let cfg = if wide { WindowConfig::default() } else { WindowConfig::for_width(64).unwrap() };
        let k = rng.gen_range(0..10);
        let Some(res) = align_with_k(&read, &sub, k, &cfg).unwrap() else {
            return Ok(());
        };
        replay_on_subgraph(&sub, &read, &res.positions, &res.cigar, res.edit_distance).unwrap();
        prop_assert_eq!(res.windows.len(), graphmap::bitalign::window_count(read.len(), cfg.width(), cfg.overlap()));
        let committed: usize = res.windows.iter().map(|w| w.committed_distance).sum();
        prop_assert_eq!(committed, res.edit_distance);
        // a windowed alignment is a real alignment, so never beats the optimum
        prop_assert!(res.edit_distance >= dag_edit_distance(&sub, &read).distance);
        if read.len() <= cfg.width() {
            let (hit, _) = align_single::<u128>(&read, &sub, k).unwrap().unwrap();
            prop_assert_eq!(res.edit_distance, hit.distance);
        }
    }

    #[test]
    fn all_ones_successor_is_neutral(seed in any::<u64>(), k in 0usize..6) {
        let mut rng = sim::rng(seed);
        let sub = common::small_dag(&mut rng, 32);
        let read = common::read_for(&mut rng, &sub, 32);
        let masks = PatternBitmasks::<u64>::new(&read).unwrap();
        let store = generate_bitvectors(&sub, &masks, k);
        let ones = <u64 as BitWord>::ONES;
        for i in 0..sub.len() {
            let pm = masks.mask(sub.base(i));
            // the terms an all-ones successor would contribute
            let r0 = store.get(i, 0);
            prop_assert_eq!(r0 & (ones.shl(1) | pm), r0);
            for d in 1..=k {
                let rd = store.get(i, d);
                prop_assert_eq!(rd & ones & ones.shl(1) & (ones.shl(1) | pm), rd);
            }
            if sub.successors(i).is_empty() {
                prop_assert_eq!(r0, ones.shl(1) | pm);
            }
        }
    }

    #[test]
    fn masks_have_one_zero_per_position(read in bases(1..=128)) {
        let masks = PatternBitmasks::<u128>::new(&read).unwrap();
        for p in 0..read.len() {
            let zeros = Base::ALL.iter().filter(|&&b| !masks.mask(b).bit(read.len() - 1 - p)).count();
            prop_assert_eq!(zeros, 1);
            prop_assert!(masks.matches(p, read[p]));
        }
    }
}

#[test]
fn bubble_alignment_goes_through_g() {
    let g = GenomeGraph::from_parts(
        &[
            encode_seq(b"A").unwrap(),
            encode_seq(b"C").unwrap(),
            encode_seq(b"G").unwrap(),
            encode_seq(b"T").unwrap(),
        ],
        &[(0, 1), (0, 2), (1, 3), (2, 3)],
    )
    .unwrap();
    let sub = extract_subgraph(&g, SeedRegion { x: 0, y: 3 }, 12).unwrap();
    let read = encode_seq(b"AGT").unwrap();
    let (hit, tb) = align_single::<u128>(&read, &sub, 0).unwrap().unwrap();
    assert_eq!(hit.distance, 0);
    assert_eq!(tb.positions, vec![0, 2, 3]);
    assert_eq!(sub.positions()[2].node_id, 2);
}
