//! Brute-force references for verification. Deliberately plain dynamic
//! programming without bit tricks so they stay independent of the kernel.

use std::collections::BTreeMap;

use crate::alphabet::{reverse_complement, Base};
use crate::bitalign::{Cigar, CigarOp};
use crate::graphref::{GenomeGraph, GlobalOffset};
use crate::index::{pack_kmer, IndexError, Minimizer, MinimizerParams};
use crate::minseed::Subgraph;

/// Optimal alignment found by [`dag_edit_distance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagAlignment {
    pub distance: usize,
    pub cigar: Cigar,
    /// Subgraph positions consumed by `M`, `X` and `D`.
    pub positions: Vec<usize>,
}

/// Full DP table: `dist[i][j]` for every subgraph position `i` and pattern
/// prefix length `j`, plus the virtual start row (nothing consumed yet).
#[derive(Clone, Debug)]
pub struct DpMatrix {
    pub n: usize,
    pub m: usize,
    pub start_row: Vec<usize>,
    pub dist: Vec<Vec<usize>>,
}

fn predecessors(sub: &Subgraph) -> Vec<Vec<usize>> {
    let mut preds = vec![Vec::new(); sub.len()];
    for i in 0..sub.len() {
        for &j in sub.successors(i) {
            preds[j as usize].push(i);
        }
    }
    preds
}

/// `dist[i][j]`: cheapest alignment of `pattern[..j]` to a walk whose last
/// consumed character is `i`. Walks may begin anywhere.
pub fn dag_matrix(sub: &Subgraph, pattern: &[Base]) -> DpMatrix {
    let (n, m) = (sub.len(), pattern.len());
    let preds = predecessors(sub);
    let start_row: Vec<usize> = (0..=m).collect();
    let mut dist = vec![vec![usize::MAX; m + 1]; n];
    for i in 0..n {
        for j in 0..=m {
            let mut best = usize::MAX;
            let from_start = std::iter::once(&start_row);
            let rows = from_start.chain(preds[i].iter().map(|&p| &dist[p]));
            let rows: Vec<&Vec<usize>> = rows.collect();
            for row in &rows {
                best = best.min(row[j] + 1);
                if j > 0 {
                    let delta = usize::from(pattern[j - 1] != sub.base(i));
                    best = best.min(row[j - 1] + delta);
                }
            }
            if j > 0 {
                best = best.min(dist[i][j - 1] + 1);
            }
            dist[i][j] = best;
        }
    }
    DpMatrix {
        n,
        m,
        start_row,
        dist,
    }
}

/// Semi-global over the subgraph, global over the pattern.
pub fn dag_edit_distance(sub: &Subgraph, pattern: &[Base]) -> DagAlignment {
    let mat = dag_matrix(sub, pattern);
    let m = pattern.len();
    let preds = predecessors(sub);

    // None = virtual start row
    let mut best: (usize, Option<usize>) = (m, None);
    for i in 0..mat.n {
        if mat.dist[i][m] < best.0 {
            best = (mat.dist[i][m], Some(i));
        }
    }
    let row = |r: Option<usize>| -> &Vec<usize> {
        match r {
            Some(i) => &mat.dist[i],
            None => &mat.start_row,
        }
    };

    let mut ops = Vec::new();
    let mut positions = Vec::new();
    let (mut cur, mut j) = (best.1, m);
    while let Some(i) = cur {
        let here = mat.dist[i][j];
        let froms: Vec<Option<usize>> = preds[i].iter().map(|&p| Some(p)).chain([None]).collect();
        let same = j > 0 && pattern[j - 1] == sub.base(i);
        if j > 0 {
            if let Some(&p) = froms
                .iter()
                .find(|&&p| row(p)[j - 1] + usize::from(!same) == here)
            {
                ops.push(if same {
                    CigarOp::Match
                } else {
                    CigarOp::Mismatch
                });
                positions.push(i);
                cur = p;
                j -= 1;
                continue;
            }
        }
        if let Some(&p) = froms.iter().find(|&&p| row(p)[j] + 1 == here) {
            ops.push(CigarOp::Del);
            positions.push(i);
            cur = p;
            continue;
        }
        assert!(
            j > 0 && mat.dist[i][j - 1] + 1 == here,
            "dp table inconsistent"
        );
        ops.push(CigarOp::Ins);
        j -= 1;
    }
    ops.extend(std::iter::repeat_n(CigarOp::Ins, j));
    ops.reverse();
    positions.reverse();
    DagAlignment {
        distance: best.0,
        cigar: ops.into_iter().collect(),
        positions,
    }
}

/// Edit distance of `pattern` against its best-matching substring of
/// `text` (free leading and trailing text).
pub fn s2s_edit_distance(text: &[Base], pattern: &[Base]) -> usize {
    let m = pattern.len();
    let mut prev: Vec<usize> = (0..=m).collect();
    let mut best = prev[m];
    for &t in text {
        let mut cur = vec![0; m + 1];
        for j in 1..=m {
            let sub = prev[j - 1] + usize::from(pattern[j - 1] != t);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        best = best.min(cur[m]);
        prev = cur;
    }
    best
}

/// Global Levenshtein distance.
pub fn levenshtein(a: &[Base], b: &[Base]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(x != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Nested-loop minimizers: every window of `w` k-mers (or the single
/// partial window of a short sequence) picks its minimum, rightmost on ties.
pub fn naive_minimizers(
    seq: &[Base],
    params: &MinimizerParams,
) -> Result<Vec<Minimizer>, IndexError> {
    params.validate()?;
    let (w, k) = (params.w, params.k);
    if seq.len() < k {
        return Ok(Vec::new());
    }
    let kmers = seq.len() - k + 1;
    let score = |p: usize| {
        let kmer = &seq[p..p + k];
        params.score_of(pack_kmer(kmer), pack_kmer(&reverse_complement(kmer)))
    };
    let mut picked = BTreeMap::new();
    let windows = if kmers >= w { kmers - w + 1 } else { 1 };
    for s in 0..windows {
        let mut best: Option<(u64, usize)> = None;
        for p in s..(s + w).min(kmers) {
            let sc = score(p);
            if best.is_none_or(|(b, _)| sc <= b) {
                best = Some((sc, p));
            }
        }
        let (sc, p) = best.unwrap();
        picked.insert(p, sc);
    }
    Ok(picked
        .into_iter()
        .map(|(p, sc)| Minimizer {
            hash: sc,
            k: k as u32,
            start: p as u32,
            end: (p + k - 1) as u32,
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplayError {
    Length { expected: usize, actual: usize },
    Mismatch { read_pos: usize },
    FalseMismatch { read_pos: usize },
    EditCount { expected: usize, actual: usize },
    Hop { from: usize, to: usize },
    Path(String),
}

impl std::fmt::Display for ReplayError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplayError::Length { expected, actual } => {
                write!(f, "length mismatch: expected {expected}, got {actual}")
            }
            ReplayError::Mismatch { read_pos } => {
                write!(f, "M op at read position {read_pos} covers different bases")
            }
            ReplayError::FalseMismatch { read_pos } => {
                write!(f, "X op at read position {read_pos} covers equal bases")
            }
            ReplayError::EditCount { expected, actual } => {
                write!(
                    f,
                    "edit count {actual} differs from reported distance {expected}"
                )
            }
            ReplayError::Hop { from, to } => write!(f, "no hop from {from} to {to}"),
            ReplayError::Path(msg) => write!(f, "bad path: {msg}"),
        }
    }
}

impl std::error::Error for ReplayError {}

/// Replay `cigar` over `graph_bases` (the consumed characters in order),
/// checking it rebuilds `read` with exactly `distance` edits.
pub fn replay_bases(
    read: &[Base],
    graph_bases: &[Base],
    cigar: &Cigar,
    distance: usize,
) -> Result<(), ReplayError> {
    if cigar.read_len() != read.len() {
        return Err(ReplayError::Length {
            expected: read.len(),
            actual: cigar.read_len(),
        });
    }
    if cigar.graph_len() != graph_bases.len() {
        return Err(ReplayError::Length {
            expected: graph_bases.len(),
            actual: cigar.graph_len(),
        });
    }
    let (mut r, mut g) = (0, 0);
    let mut rebuilt = Vec::with_capacity(read.len());
    for op in cigar.ops() {
        match op {
            CigarOp::Match => {
                if read[r] != graph_bases[g] {
                    return Err(ReplayError::Mismatch { read_pos: r });
                }
                rebuilt.push(graph_bases[g]);
            }
            CigarOp::Mismatch => {
                if read[r] == graph_bases[g] {
                    return Err(ReplayError::FalseMismatch { read_pos: r });
                }
                rebuilt.push(read[r]);
            }
            CigarOp::Ins => rebuilt.push(read[r]),
            CigarOp::Del => {}
        }
        r += usize::from(op.consumes_read());
        g += usize::from(op.consumes_graph());
    }
    debug_assert_eq!(rebuilt, read);
    if cigar.edit_count() != distance {
        return Err(ReplayError::EditCount {
            expected: distance,
            actual: cigar.edit_count(),
        });
    }
    Ok(())
}

/// Replay against subgraph positions; consecutive positions must be
/// connected by a hop.
pub fn replay_on_subgraph(
    sub: &Subgraph,
    read: &[Base],
    positions: &[usize],
    cigar: &Cigar,
    distance: usize,
) -> Result<(), ReplayError> {
    for pair in positions.windows(2) {
        if !sub.successors(pair[0]).contains(&(pair[1] as u32)) {
            return Err(ReplayError::Hop {
                from: pair[0],
                to: pair[1],
            });
        }
    }
    if let Some(&bad) = positions.iter().find(|&&p| p >= sub.len()) {
        return Err(ReplayError::Path(format!(
            "position {bad} outside subgraph"
        )));
    }
    let bases: Vec<Base> = positions.iter().map(|&p| sub.base(p)).collect();
    replay_bases(read, &bases, cigar, distance)
}

/// Replay against the full graph; consecutive path entries must be
/// adjacent in a node or joined by an edge.
pub fn replay_on_graph(
    graph: &GenomeGraph,
    read: &[Base],
    path: &[GlobalOffset],
    cigar: &Cigar,
    distance: usize,
) -> Result<(), ReplayError> {
    for p in path {
        let expect = graph
            .linear_pos_of(p.node_id, p.offset)
            .map_err(|e| ReplayError::Path(e.to_string()))?;
        if expect.linear_pos != p.linear_pos {
            return Err(ReplayError::Path(format!(
                "{}:{} has linear position {}, not {}",
                p.node_id, p.offset, expect.linear_pos, p.linear_pos
            )));
        }
    }
    for pair in path.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let same_node = a.node_id == b.node_id && a.offset + 1 == b.offset;
        let edge = a.offset as usize + 1 == graph.node_len(a.node_id)
            && b.offset == 0
            && graph.successors(a.node_id).contains(&b.node_id);
        if !same_node && !edge {
            return Err(ReplayError::Path(format!(
                "{}:{} -> {}:{} is not a graph step",
                a.node_id, a.offset, b.node_id, b.offset
            )));
        }
    }
    let bases: Vec<Base> = path
        .iter()
        .map(|p| graph.base_at(p.linear_pos as usize))
        .collect();
    replay_bases(read, &bases, cigar, distance)
}
