//! Seeded generators for test data: random sequences, small random
//! subgraphs, variation graphs built from a backbone plus bubbles, reads
//! sampled along graph paths, and planted edits.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::alphabet::Base;
use crate::graphref::{GenomeGraph, GlobalOffset};
use crate::minseed::{Subgraph, SubgraphPos};

pub use rand::SeedableRng;

/// Environment variable that fixes generator seeds.
pub const SEED_ENV: &str = "GRAPHMAP_SEED";

pub type SimRng = ChaCha8Rng;

/// Seed from `GRAPHMAP_SEED`, falling back to `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(default)
}

pub fn rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_base<R: Rng>(rng: &mut R) -> Base {
    Base::ALL[rng.gen_range(0..4)]
}

pub fn random_bases<R: Rng>(rng: &mut R, len: usize) -> Vec<Base> {
    (0..len).map(|_| random_base(rng)).collect()
}

fn other_base<R: Rng>(rng: &mut R, b: Base) -> Base {
    let alts: Vec<Base> = Base::ALL.into_iter().filter(|&x| x != b).collect();
    *alts.choose(rng).unwrap()
}

/// A subgraph of `n` characters. Each position links to its neighbour with
/// probability `p_next` and to up to two further positions within
/// `max_hop`.
pub fn random_subgraph<R: Rng>(rng: &mut R, n: usize, max_hop: usize, p_next: f64) -> Subgraph {
    let max_hop = max_hop.max(1);
    let positions: Vec<SubgraphPos> = (0..n)
        .map(|i| SubgraphPos {
            base: random_base(rng),
            node_id: i as u32,
            offset: 0,
        })
        .collect();
    let mut succ = vec![Vec::new(); n];
    for (i, s) in succ.iter_mut().enumerate() {
        if i + 1 >= n {
            continue;
        }
        if rng.gen_bool(p_next) {
            s.push(i as u32 + 1);
        }
        let far = (i + max_hop).min(n - 1);
        for _ in 0..rng.gen_range(0..=2) {
            if far > i + 1 {
                s.push(rng.gen_range(i + 2..=far) as u32);
            }
        }
        s.sort_unstable();
        s.dedup();
    }
    Subgraph::new(0, positions, succ, max_hop).expect("generated subgraph is valid")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VariationParams {
    /// Mean backbone distance between variant sites.
    pub spacing: usize,
    pub snp_fraction: f64,
    pub insertion_fraction: f64,
    /// Longest insertion or deletion.
    pub max_indel: usize,
}

impl Default for VariationParams {
    fn default() -> Self {
        VariationParams {
            spacing: 50,
            snp_fraction: 0.6,
            insertion_fraction: 0.2,
            max_indel: 6,
        }
    }
}

/// A backbone of `len` random bases with SNP, insertion and deletion
/// bubbles. Node ids are topologically ordered.
pub fn variation_graph<R: Rng>(rng: &mut R, len: usize, params: &VariationParams) -> GenomeGraph {
    let backbone = random_bases(rng, len);
    let mut seqs: Vec<Vec<Base>> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    // nodes whose out-edges should go to the next created node
    let mut open: Vec<u32> = Vec::new();
    let push = |seqs: &mut Vec<Vec<Base>>, seq: Vec<Base>| -> u32 {
        seqs.push(seq);
        seqs.len() as u32 - 1
    };

    let mut pos = 0;
    while pos < len {
        let gap = rng.gen_range(params.spacing / 2 + 1..=params.spacing * 3 / 2 + 1);
        let seg_end = (pos + gap).min(len);
        let id = push(&mut seqs, backbone[pos..seg_end].to_vec());
        edges.extend(open.drain(..).map(|u| (u, id)));
        pos = seg_end;
        if pos >= len {
            break;
        }
        let roll: f64 = rng.gen();
        if roll < params.snp_fraction {
            let r = push(&mut seqs, vec![backbone[pos]]);
            let a = push(&mut seqs, vec![other_base(rng, backbone[pos])]);
            edges.extend([(id, r), (id, a)]);
            open.extend([r, a]);
            pos += 1;
        } else if roll < params.snp_fraction + params.insertion_fraction {
            let ins_len = rng.gen_range(1..=params.max_indel.max(1));
            let ins = random_bases(rng, ins_len);
            let a = push(&mut seqs, ins);
            edges.push((id, a));
            open.extend([id, a]);
        } else {
            let del = rng.gen_range(1..=params.max_indel.max(1)).min(len - pos);
            let r = push(&mut seqs, backbone[pos..pos + del].to_vec());
            edges.push((id, r));
            open.extend([id, r]);
            pos += del;
        }
    }
    if !open.is_empty() {
        let id = push(&mut seqs, random_bases(rng, 1));
        edges.extend(open.drain(..).map(|u| (u, id)));
    }
    GenomeGraph::from_parts(&seqs, &edges).expect("generated graph is valid")
}

/// A read copied from a walk through the graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledRead {
    pub bases: Vec<Base>,
    pub path: Vec<GlobalOffset>,
}

impl SampledRead {
    pub fn start(&self) -> GlobalOffset {
        self.path[0]
    }
}

/// Walk `len` characters from a random start, choosing random successors
/// at node ends. Returns `None` if no walk of that length was found in a
/// bounded number of attempts.
pub fn sample_read<R: Rng>(rng: &mut R, graph: &GenomeGraph, len: usize) -> Option<SampledRead> {
    let total = graph.char_count();
    if total == 0 || len == 0 {
        return None;
    }
    'attempt: for _ in 0..1000 {
        let start = graph
            .offset_of_linear(rng.gen_range(0..total) as u64)
            .ok()?;
        let (mut node, mut offset) = (start.node_id, start.offset);
        let mut path = Vec::with_capacity(len);
        loop {
            let rec = graph.node(node);
            path.push(GlobalOffset {
                node_id: node,
                offset,
                linear_pos: rec.char_start + offset as u64,
            });
            if path.len() == len {
                break;
            }
            if (offset as u64) + 1 < rec.seq_len {
                offset += 1;
            } else {
                let succ = graph.successors(node);
                let Some(&next) = succ.choose(rng) else {
                    continue 'attempt;
                };
                node = next;
                offset = 0;
            }
        }
        let bases = path
            .iter()
            .map(|p| graph.base_at(p.linear_pos as usize))
            .collect();
        return Some(SampledRead { bases, path });
    }
    None
}

/// Apply exactly `edits` unit edits (substitution, insertion or deletion)
/// at distinct read positions. The result's edit distance to the input is
/// at most `edits`.
pub fn plant_edits<R: Rng>(rng: &mut R, read: &[Base], edits: usize) -> Vec<Base> {
    let mut sites: Vec<usize> = (0..read.len()).collect();
    sites.shuffle(rng);
    sites.truncate(edits);
    sites.sort_unstable();
    let mut out = Vec::with_capacity(read.len() + edits);
    let mut next = sites.into_iter().peekable();
    for (i, &b) in read.iter().enumerate() {
        if next.peek() == Some(&i) {
            next.next();
            match rng.gen_range(0..3) {
                0 => out.push(other_base(rng, b)),
                1 => {
                    out.push(random_base(rng));
                    out.push(b);
                }
                _ => {}
            }
        } else {
            out.push(b);
        }
    }
    out
}

/// Write `graph` as GFA v1 with segments named by 1-based node id.
pub fn write_gfa<W: Write>(graph: &GenomeGraph, mut out: W) -> io::Result<()> {
    writeln!(out, "H\tVN:Z:1.0")?;
    for id in 0..graph.node_count() as u32 {
        let seq: String = graph
            .node_seq(id)
            .iter()
            .map(|b| b.to_ascii() as char)
            .collect();
        writeln!(out, "S\t{}\t{}", id + 1, seq)?;
    }
    for (u, v) in graph.edges() {
        writeln!(out, "L\t{}\t+\t{}\t+\t0M", u + 1, v + 1)?;
    }
    Ok(())
}
