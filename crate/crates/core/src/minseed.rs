//! Read seeding and candidate-subgraph extraction.
//!
//! A read's minimizers are looked up in the index; minimizers that occur
//! more often than the frequency threshold are dropped, the rest yield seed
//! hits. Each hit is projected onto the linear reference coordinate and
//! padded by the edit budget to give a [`SeedRegion`], and the characters of
//! that region are linearized into a [`Subgraph`] with per-position hop sets.

use std::fmt;

use thiserror::Error;

use crate::alphabet::{encode_seq, Base, InvalidBase};
use crate::graphref::{GenomeGraph, GraphError};
use crate::index::{find_minimizers, FrequencyThreshold, IndexError, Minimizer, MinimizerIndex};

pub const DEFAULT_HOP_LIMIT: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum SeedError {
    #[error("read: {0}")]
    Alphabet(#[from] InvalidBase),
    #[error("seed region is empty")]
    EmptyRegion,
    #[error("invalid subgraph: {0}")]
    InvalidSubgraph(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Index(#[from] IndexError),
}

/// A read minimizer matched at one graph location. `ref_start`/`ref_end`
/// are the linear positions of the seed occurrence (`c` and `d`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedHit {
    pub minimizer: Minimizer,
    pub node_id: u32,
    pub offset: u32,
    pub ref_start: u64,
    pub ref_end: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SeedStats {
    pub minimizers: usize,
    pub filtered: usize,
    pub seeds: usize,
}

/// Inclusive linear interval `[x, y]` of the reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeedRegion {
    pub x: u64,
    pub y: u64,
}

impl SeedRegion {
    pub fn len(&self) -> u64 {
        self.y - self.x + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, other: &SeedRegion) -> bool {
        self.x <= other.x && other.y <= self.y
    }
}

/// Seed an ASCII read. See [`seed_bases`].
pub fn seed_read(
    read: &[u8],
    index: &MinimizerIndex,
    graph: &GenomeGraph,
    threshold: FrequencyThreshold,
) -> Result<(Vec<SeedHit>, SeedStats), SeedError> {
    let bases = encode_seq(read)?;
    seed_bases(&bases, index, graph, threshold)
}

/// Hits for every read minimizer whose occurrence count passes
/// `threshold`, ordered by read position then location.
pub fn seed_bases(
    read: &[Base],
    index: &MinimizerIndex,
    graph: &GenomeGraph,
    threshold: FrequencyThreshold,
) -> Result<(Vec<SeedHit>, SeedStats), SeedError> {
    let minimizers = find_minimizers(read, index.params())?;
    let mut stats = SeedStats {
        minimizers: minimizers.len(),
        ..Default::default()
    };
    let mut hits = Vec::new();
    for m in minimizers {
        let found = index.lookup(m.hash);
        if found.count == 0 {
            continue;
        }
        if !threshold.keeps(found.count) {
            stats.filtered += 1;
            continue;
        }
        for loc in found.locations {
            let pos = graph.linear_pos_of(loc.node_id, loc.offset)?;
            hits.push(SeedHit {
                minimizer: m,
                node_id: loc.node_id,
                offset: loc.offset,
                ref_start: pos.linear_pos,
                ref_end: pos.linear_pos + m.k as u64 - 1,
            });
        }
    }
    stats.seeds = hits.len();
    Ok((hits, stats))
}

/// Project the read around a seed and pad both sides by `ceil(E*m)`:
///
/// `x = max(0, c - a - e)`, `y = min(L - 1, d + (m - 1 - b) + e)`.
pub fn compute_region(hit: &SeedHit, read_len: usize, error_rate: f64, ref_len: u64) -> SeedRegion {
    debug_assert!(ref_len > 0);
    let pad = crate::edit_budget(error_rate, read_len) as i64;
    let (a, b) = (hit.minimizer.start as i64, hit.minimizer.end as i64);
    let (c, d) = (hit.ref_start as i64, hit.ref_end as i64);
    let m = read_len as i64;
    let x = (c - a - pad).max(0);
    let y = (d + (m - 1 - b) + pad).min(ref_len as i64 - 1);
    SeedRegion {
        x: x as u64,
        y: y.max(x) as u64,
    }
}

/// One linearized character of a subgraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubgraphPos {
    pub base: Base,
    pub node_id: u32,
    pub offset: u32,
}

/// Linearized characters of a region plus, per position, the successor
/// positions reachable in one step (all strictly greater than the source).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subgraph {
    start: u64,
    positions: Vec<SubgraphPos>,
    succ_start: Vec<u32>,
    succ: Vec<u32>,
    hop_limit: usize,
    dropped_hops: usize,
}

impl Subgraph {
    /// Assemble a subgraph from explicit hop sets. `start` is the linear
    /// reference position of the first character.
    pub fn new(
        start: u64,
        positions: Vec<SubgraphPos>,
        successors: Vec<Vec<u32>>,
        hop_limit: usize,
    ) -> Result<Self, SeedError> {
        let bad = |m: String| Err(SeedError::InvalidSubgraph(m));
        if positions.is_empty() {
            return Err(SeedError::EmptyRegion);
        }
        if successors.len() != positions.len() {
            return bad("one hop set per position required".into());
        }
        let mut succ_start = Vec::with_capacity(positions.len() + 1);
        let mut succ = Vec::new();
        for (i, set) in successors.into_iter().enumerate() {
            succ_start.push(succ.len() as u32);
            let mut set = set;
            set.sort_unstable();
            set.dedup();
            for &j in &set {
                if j as usize <= i || j as usize >= positions.len() {
                    return bad(format!("hop {i} -> {j} is not forward within the subgraph"));
                }
                if j as usize - i > hop_limit {
                    return bad(format!("hop {i} -> {j} exceeds hop limit {hop_limit}"));
                }
            }
            let here = positions[i];
            if let Some(next) = positions.get(i + 1) {
                if next.node_id == here.node_id
                    && next.offset == here.offset + 1
                    && set != [i as u32 + 1]
                {
                    return bad(format!(
                        "position {i} inside a node must hop only to {}",
                        i + 1
                    ));
                }
            }
            succ.extend(set);
        }
        succ_start.push(succ.len() as u32);
        Ok(Subgraph {
            start,
            positions,
            succ_start,
            succ,
            hop_limit,
            dropped_hops: 0,
        })
    }

    /// A chain where every position's only successor is the next one.
    pub fn chain(bases: &[Base]) -> Result<Self, SeedError> {
        let positions = bases
            .iter()
            .enumerate()
            .map(|(i, &base)| SubgraphPos {
                base,
                node_id: 0,
                offset: i as u32,
            })
            .collect();
        let succ = (0..bases.len())
            .map(|i| {
                if i + 1 < bases.len() {
                    vec![i as u32 + 1]
                } else {
                    vec![]
                }
            })
            .collect();
        Subgraph::new(0, positions, succ, 1)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Linear reference position of local position 0.
    pub fn start(&self) -> u64 {
        self.start
    }

    pub fn hop_limit(&self) -> usize {
        self.hop_limit
    }

    pub fn dropped_hops(&self) -> usize {
        self.dropped_hops
    }

    pub fn positions(&self) -> &[SubgraphPos] {
        &self.positions
    }

    #[inline]
    pub fn base(&self, i: usize) -> Base {
        self.positions[i].base
    }

    #[inline]
    pub fn successors(&self, i: usize) -> &[u32] {
        &self.succ[self.succ_start[i] as usize..self.succ_start[i + 1] as usize]
    }

    pub fn bases(&self) -> Vec<Base> {
        self.positions.iter().map(|p| p.base).collect()
    }

    /// Largest hop distance present.
    pub fn max_hop(&self) -> usize {
        (0..self.len())
            .flat_map(|i| self.successors(i).iter().map(move |&j| j as usize - i))
            .max()
            .unwrap_or(1)
    }

    /// Adjacency matrix restricted to the hop limit: entry `(i, h)` is set
    /// when position `i` hops to `i + h + 1`.
    pub fn hop_bits(&self) -> HopBits {
        let width = self.hop_limit;
        let mut bits = vec![false; self.len() * width];
        for i in 0..self.len() {
            for &j in self.successors(i) {
                bits[i * width + (j as usize - i - 1)] = true;
            }
        }
        HopBits { width, bits }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopBits {
    width: usize,
    bits: Vec<bool>,
}

impl HopBits {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.bits.len().checked_div(self.width).unwrap_or(0)
    }

    /// Does position `i` hop forward by `distance` (1-based)?
    pub fn get(&self, i: usize, distance: usize) -> bool {
        distance >= 1 && distance <= self.width && self.bits[i * self.width + distance - 1]
    }
}

impl fmt::Display for HopBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.bits.chunks(self.width.max(1)) {
            let line: String = row.iter().map(|&b| if b { '1' } else { '.' }).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

/// Linearize the characters in `region` and attach hop sets: `p -> p+1`
/// inside a node, and last-char -> first-char for every graph edge whose
/// endpoints both fall inside the region, provided the hop spans at most
/// `hop_limit` positions. Longer hops are dropped and counted.
pub fn extract_subgraph(
    graph: &GenomeGraph,
    region: SeedRegion,
    hop_limit: usize,
) -> Result<Subgraph, SeedError> {
    let total = graph.char_count() as u64;
    if region.x > region.y || region.x >= total {
        return Err(SeedError::EmptyRegion);
    }
    let (x, y) = (region.x, region.y.min(total - 1));
    let n = (y - x + 1) as usize;
    let mut positions = Vec::with_capacity(n);
    let mut successors: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut dropped = 0;

    let mut node_id = graph.offset_of_linear(x)?.node_id;
    while (node_id as usize) < graph.node_count() {
        let rec = *graph.node(node_id);
        if rec.char_start > y {
            break;
        }
        let node_end = rec.char_start + rec.seq_len - 1;
        let lo = rec.char_start.max(x);
        let hi = node_end.min(y);
        for lp in lo..=hi {
            let local = (lp - x) as usize;
            positions.push(SubgraphPos {
                base: graph.base_at(lp as usize),
                node_id,
                offset: (lp - rec.char_start) as u32,
            });
            if lp < node_end {
                if lp < y {
                    successors[local].push(local as u32 + 1);
                }
                continue;
            }
            for &v in graph.successors(node_id) {
                let target = graph.node(v).char_start;
                if v <= node_id {
                    return Err(GraphError::NotSorted {
                        from: node_id,
                        to: v,
                    }
                    .into());
                }
                if target > y {
                    continue;
                }
                if (target - lp) as usize > hop_limit {
                    dropped += 1;
                } else {
                    successors[local].push((target - x) as u32);
                }
            }
        }
        node_id += 1;
    }
    let mut sub = Subgraph::new(x, positions, successors, hop_limit.max(1))?;
    sub.dropped_hops = dropped;
    Ok(sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::encode_seq;
    use crate::index::{build_index, MinimizerParams, ScoreMode};

    fn graph(seqs: &[&str], edges: &[(u32, u32)]) -> GenomeGraph {
        let seqs: Vec<_> = seqs
            .iter()
            .map(|s| encode_seq(s.as_bytes()).unwrap())
            .collect();
        GenomeGraph::from_parts(&seqs, edges).unwrap()
    }

    fn hit(a: u32, b: u32, c: u64, d: u64) -> SeedHit {
        SeedHit {
            minimizer: Minimizer {
                hash: 0,
                k: b - a + 1,
                start: a,
                end: b,
            },
            node_id: 0,
            offset: 0,
            ref_start: c,
            ref_end: d,
        }
    }

    #[test]
    fn region_formula() {
        let r = compute_region(&hit(5, 9, 100, 104), 20, 0.1, 1_000);
        assert_eq!(r, SeedRegion { x: 93, y: 116 });
        let r = compute_region(&hit(0, 4, 0, 4), 10, 0.0, 1_000);
        assert_eq!(r, SeedRegion { x: 0, y: 4 + 9 - 4 });
    }

    #[test]
    fn region_clamps() {
        let r = compute_region(&hit(5, 9, 3, 7), 20, 0.1, 12);
        assert_eq!(r, SeedRegion { x: 0, y: 11 });
    }

    #[test]
    fn region_monotone_in_error_rate() {
        let h = hit(7, 21, 500, 514);
        let mut prev = compute_region(&h, 150, 0.0, 10_000);
        for step in 1..40 {
            let r = compute_region(&h, 150, step as f64 * 0.02, 10_000);
            assert!(r.contains(&prev));
            prev = r;
        }
    }

    #[test]
    fn chain_inside_one_node() {
        let g = graph(&["ACGTACGTAC"], &[]);
        let sub = extract_subgraph(&g, SeedRegion { x: 2, y: 6 }, 12).unwrap();
        assert_eq!(sub.len(), 5);
        for i in 0..4 {
            assert_eq!(sub.successors(i), &[i as u32 + 1]);
        }
        assert!(sub.successors(4).is_empty());
        assert_eq!(sub.positions()[0].offset, 2);
        assert_eq!(sub.start(), 2);
    }

    #[test]
    fn bubble_hops() {
        // 0:AC -> {1:G, 2:TT} -> 3:CA
        let g = graph(&["AC", "G", "TT", "CA"], &[(0, 1), (0, 2), (1, 3), (2, 3)]);
        let sub = extract_subgraph(&g, SeedRegion { x: 0, y: 6 }, 12).unwrap();
        // linear: A0 C1 | G2 | T3 T4 | C5 A6
        assert_eq!(sub.successors(0), &[1]);
        assert_eq!(sub.successors(1), &[2, 3]);
        assert_eq!(sub.successors(2), &[5]);
        assert_eq!(sub.successors(3), &[4]);
        assert_eq!(sub.successors(4), &[5]);
        assert_eq!(sub.successors(5), &[6]);
        assert_eq!(sub.dropped_hops(), 0);
        let hb = sub.hop_bits();
        assert!(hb.get(1, 1) && hb.get(1, 2) && hb.get(2, 3));
        assert!(!hb.get(2, 1));
    }

    #[test]
    fn long_hop_dropped() {
        let g = graph(&["A", "CCCCC", "G"], &[(0, 1), (0, 2), (1, 2)]);
        let sub = extract_subgraph(&g, SeedRegion { x: 0, y: 6 }, 3).unwrap();
        // A0 -> G6 spans 6 > 3
        assert_eq!(sub.successors(0), &[1]);
        assert_eq!(sub.dropped_hops(), 1);
        let full = extract_subgraph(&g, SeedRegion { x: 0, y: 6 }, 6).unwrap();
        assert_eq!(full.successors(0), &[1, 6]);
    }

    #[test]
    fn empty_region_rejected() {
        let g = graph(&["ACGT"], &[]);
        assert_eq!(
            extract_subgraph(&g, SeedRegion { x: 9, y: 12 }, 12),
            Err(SeedError::EmptyRegion)
        );
    }

    #[test]
    fn seeding_self_read() {
        let seq = "ACGTTGCATGCATCGATCGGATCGATTAGC";
        let g = graph(&[seq], &[]);
        let idx = build_index(&g, MinimizerParams::new(4, 7), 6).unwrap();
        let t = idx.compute_threshold(0.0002).unwrap();
        let (hits, stats) = seed_read(seq.as_bytes(), &idx, &g, t).unwrap();
        assert!(!hits.is_empty());
        assert_eq!(stats.seeds, hits.len());
        for h in &hits {
            assert_eq!(h.ref_start, h.minimizer.start as u64);
            assert_eq!(h.ref_end - h.ref_start + 1, 7);
        }
        assert!(matches!(
            seed_read(b"ACGTNACGT", &idx, &g, t),
            Err(SeedError::Alphabet(_))
        ));
        let (hits, _) = seed_read(b"ACG", &idx, &g, t).unwrap();
        assert!(hits.is_empty());
    }

    #[test]
    fn frequent_minimizers_filtered() {
        let g = graph(
            &["ACGTT", "ACGTT", "ACGTT", "GGCCA"],
            &[(0, 1), (1, 2), (2, 3)],
        );
        let p = MinimizerParams::new(1, 5).with_score(ScoreMode::Lex);
        let idx = build_index(&g, p, 4).unwrap();
        let (hits, stats) = seed_read(
            b"ACGTT",
            &idx,
            &g,
            FrequencyThreshold { max_occurrences: 2 },
        )
        .unwrap();
        assert!(hits.is_empty());
        assert_eq!(stats.filtered, 1);
        let (hits, _) = seed_read(b"ACGTT", &idx, &g, FrequencyThreshold::UNLIMITED).unwrap();
        assert_eq!(hits.len(), 3);
    }
}
