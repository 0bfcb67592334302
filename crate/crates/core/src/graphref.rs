//! Graph-based reference: node, character and edge tables.
//!
//! A [`GenomeGraph`] is a DAG whose nodes carry nucleotide sequences. It is
//! stored as three flat tables:
//!
//! * the node table, one 32-byte [`NodeRecord`] per node, indexed by node ID;
//! * the character table, every node sequence concatenated in node-ID order
//!   and packed at 2 bits per base;
//! * the edge table, the destination node IDs of all out-edges grouped by
//!   source node, 4 bytes each.
//!
//! Because the character table is laid out in node order, a character's
//! linear position is `char_start + offset` of its node. After [`topo_sort`]
//! every edge `u -> v` satisfies `u < v`, so linear order is a topological
//! order of characters.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::io::BufRead;

use thiserror::Error;

use crate::alphabet::{Base, InvalidBase};

pub const GRAPH_MAGIC: [u8; 4] = *b"SGGR";
pub const GRAPH_VERSION: u32 = 1;
pub const GRAPH_HEADER_BYTES: usize = 32;
pub const NODE_RECORD_BYTES: usize = 32;
pub const EDGE_ENTRY_BYTES: usize = 4;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: segment {segment}: {source}")]
    Alphabet {
        line: usize,
        segment: String,
        source: InvalidBase,
    },
    #[error("line {line}: link references unknown segment {name:?}")]
    UnknownSegment { line: usize, name: String },
    #[error("line {line}: unsupported GFA feature: {feature}")]
    Unsupported { line: usize, feature: String },
    #[error("graph contains a cycle through node {node}")]
    Cycle { node: u32 },
    #[error("graph is not topologically sorted (edge {from} -> {to})")]
    NotSorted { from: u32, to: u32 },
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("corrupt graph buffer: {0}")]
    Format(String),
    #[error("position out of range: {0}")]
    Bounds(String),
}

/// One node-table entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct NodeRecord {
    pub seq_len: u64,
    pub char_start: u64,
    pub out_edge_count: u64,
    pub edge_start: u64,
}

/// 2-bit packed base sequence; base `i` lives at bits `2*(i%4)` of byte `i/4`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PackedSeq {
    bytes: Vec<u8>,
    len: usize,
}

impl PackedSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(chars: usize) -> Self {
        PackedSeq {
            bytes: Vec::with_capacity(chars.div_ceil(4)),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, base: Base) {
        let shift = 2 * (self.len % 4);
        if shift == 0 {
            self.bytes.push(0);
        }
        *self.bytes.last_mut().unwrap() |= base.code() << shift;
        self.len += 1;
    }

    #[inline]
    pub fn get(&self, i: usize) -> Base {
        debug_assert!(i < self.len);
        Base::from_code(self.bytes[i / 4] >> (2 * (i % 4)))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Inverse of [`PackedSeq::as_bytes`]. Padding bits must be zero.
    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Option<Self> {
        if bytes.len() != len.div_ceil(4) {
            return None;
        }
        if !len.is_multiple_of(4) {
            let used = 2 * (len % 4);
            if bytes[bytes.len() - 1] >> used != 0 {
                return None;
            }
        }
        Some(PackedSeq { bytes, len })
    }

    pub fn iter(&self) -> impl Iterator<Item = Base> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

/// `(node_id, offset)` together with its linear character position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalOffset {
    pub node_id: u32,
    pub offset: u32,
    pub linear_pos: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct GenomeGraph {
    nodes: Vec<NodeRecord>,
    chars: PackedSeq,
    edges: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct GraphStats {
    pub nodes: u64,
    pub edges: u64,
    pub chars: u64,
}

impl GenomeGraph {
    /// Build a graph from node sequences and `(from, to)` edges. Duplicate
    /// edges collapse; out-edges are stored in ascending destination order.
    pub fn from_parts(seqs: &[Vec<Base>], edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let n = seqs.len();
        let mut out: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::Invalid(format!(
                    "edge {u} -> {v} references a node outside 0..{n}"
                )));
            }
            out[u as usize].insert(v);
        }
        let total: usize = seqs.iter().map(Vec::len).sum();
        let mut chars = PackedSeq::with_capacity(total);
        let mut nodes = Vec::with_capacity(n);
        let mut edge_table = Vec::new();
        for (id, seq) in seqs.iter().enumerate() {
            if seq.is_empty() {
                return Err(GraphError::Invalid(format!(
                    "node {id} has an empty sequence"
                )));
            }
            nodes.push(NodeRecord {
                seq_len: seq.len() as u64,
                char_start: chars.len() as u64,
                out_edge_count: out[id].len() as u64,
                edge_start: edge_table.len() as u64,
            });
            seq.iter().for_each(|&b| chars.push(b));
            edge_table.extend(out[id].iter().copied());
        }
        Ok(GenomeGraph {
            nodes,
            chars,
            edges: edge_table,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn char_count(&self) -> usize {
        self.chars.len()
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            nodes: self.nodes.len() as u64,
            edges: self.edges.len() as u64,
            chars: self.chars.len() as u64,
        }
    }

    pub fn nodes(&self) -> &[NodeRecord] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> &NodeRecord {
        &self.nodes[id as usize]
    }

    pub fn node_len(&self, id: u32) -> usize {
        self.nodes[id as usize].seq_len as usize
    }

    pub fn chars(&self) -> &PackedSeq {
        &self.chars
    }

    pub fn edge_table(&self) -> &[u32] {
        &self.edges
    }

    pub fn successors(&self, id: u32) -> &[u32] {
        let rec = &self.nodes[id as usize];
        &self.edges[rec.edge_start as usize..(rec.edge_start + rec.out_edge_count) as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.nodes.len() as u32)
            .flat_map(move |u| self.successors(u).iter().map(move |&v| (u, v)))
    }

    #[inline]
    pub fn base_at(&self, linear_pos: usize) -> Base {
        self.chars.get(linear_pos)
    }

    pub fn node_seq(&self, id: u32) -> Vec<Base> {
        let rec = &self.nodes[id as usize];
        let start = rec.char_start as usize;
        (start..start + rec.seq_len as usize)
            .map(|i| self.chars.get(i))
            .collect()
    }

    pub fn is_topologically_sorted(&self) -> bool {
        self.edges().all(|(u, v)| u < v)
    }

    pub fn ensure_sorted(&self) -> Result<(), GraphError> {
        match self.edges().find(|&(u, v)| u >= v) {
            Some((from, to)) => Err(GraphError::NotSorted { from, to }),
            None => Ok(()),
        }
    }

    /// Map `(node_id, offset)` to its linear character position.
    pub fn linear_pos_of(&self, node_id: u32, offset: u32) -> Result<GlobalOffset, GraphError> {
        let rec = self
            .nodes
            .get(node_id as usize)
            .ok_or_else(|| GraphError::Bounds(format!("node {node_id} >= {}", self.nodes.len())))?;
        if offset as u64 >= rec.seq_len {
            return Err(GraphError::Bounds(format!(
                "offset {offset} outside node {node_id} of length {}",
                rec.seq_len
            )));
        }
        Ok(GlobalOffset {
            node_id,
            offset,
            linear_pos: rec.char_start + offset as u64,
        })
    }

    /// Inverse of [`GenomeGraph::linear_pos_of`].
    pub fn offset_of_linear(&self, linear_pos: u64) -> Result<GlobalOffset, GraphError> {
        if linear_pos >= self.chars.len() as u64 {
            return Err(GraphError::Bounds(format!(
                "linear position {linear_pos} >= {}",
                self.chars.len()
            )));
        }
        // last node whose char_start <= linear_pos
        let idx = self.nodes.partition_point(|r| r.char_start <= linear_pos) - 1;
        Ok(GlobalOffset {
            node_id: idx as u32,
            offset: (linear_pos - self.nodes[idx].char_start) as u32,
            linear_pos,
        })
    }

    /// Check the structural invariants of the three tables.
    pub fn validate(&self) -> Result<(), GraphError> {
        let mut next_char = 0u64;
        let mut next_edge = 0u64;
        for (id, rec) in self.nodes.iter().enumerate() {
            if rec.seq_len == 0 {
                return Err(GraphError::Invalid(format!("node {id} has length 0")));
            }
            if rec.char_start != next_char {
                return Err(GraphError::Invalid(format!(
                    "node {id} char_start {} != expected {next_char}",
                    rec.char_start
                )));
            }
            if rec.edge_start != next_edge {
                return Err(GraphError::Invalid(format!(
                    "node {id} edge_start {} != expected {next_edge}",
                    rec.edge_start
                )));
            }
            next_char += rec.seq_len;
            next_edge += rec.out_edge_count;
        }
        if next_char != self.chars.len() as u64 {
            return Err(GraphError::Invalid(format!(
                "node lengths sum to {next_char} but character table holds {}",
                self.chars.len()
            )));
        }
        if next_edge != self.edges.len() as u64 {
            return Err(GraphError::Invalid(format!(
                "out-edge counts sum to {next_edge} but edge table holds {}",
                self.edges.len()
            )));
        }
        if let Some(&bad) = self.edges.iter().find(|&&v| v as usize >= self.nodes.len()) {
            return Err(GraphError::Invalid(format!(
                "edge destination {bad} is not a node"
            )));
        }
        Ok(())
    }

    pub fn serialized_len(&self) -> usize {
        graph_file_bytes(self.stats()) as usize
    }

    /// Serialize as header + node table + edge table + character table.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.extend_from_slice(&GRAPH_MAGIC);
        out.extend_from_slice(&GRAPH_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.nodes.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.edges.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.chars.len() as u64).to_le_bytes());
        for rec in &self.nodes {
            out.extend_from_slice(&rec.seq_len.to_le_bytes());
            out.extend_from_slice(&rec.char_start.to_le_bytes());
            out.extend_from_slice(&rec.out_edge_count.to_le_bytes());
            out.extend_from_slice(&rec.edge_start.to_le_bytes());
        }
        for &v in &self.edges {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(self.chars.as_bytes());
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, GraphError> {
        let fmt = |m: &str| GraphError::Format(m.to_string());
        if buf.len() < GRAPH_HEADER_BYTES {
            return Err(fmt("buffer shorter than header"));
        }
        if buf[0..4] != GRAPH_MAGIC {
            return Err(fmt("bad magic"));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != GRAPH_VERSION {
            return Err(GraphError::Format(format!("unsupported version {version}")));
        }
        let read_u64 = |at: usize| u64::from_le_bytes(buf[at..at + 8].try_into().unwrap());
        let stats = GraphStats {
            nodes: read_u64(8),
            edges: read_u64(16),
            chars: read_u64(24),
        };
        let expected =
            graph_file_bytes_checked(stats).ok_or_else(|| fmt("table sizes overflow"))?;
        if buf.len() as u128 != expected {
            return Err(GraphError::Format(format!(
                "buffer is {} bytes, header implies {expected}",
                buf.len()
            )));
        }
        let (n, e, c) = (
            stats.nodes as usize,
            stats.edges as usize,
            stats.chars as usize,
        );
        let mut at = GRAPH_HEADER_BYTES;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            nodes.push(NodeRecord {
                seq_len: read_u64(at),
                char_start: read_u64(at + 8),
                out_edge_count: read_u64(at + 16),
                edge_start: read_u64(at + 24),
            });
            at += NODE_RECORD_BYTES;
        }
        let edges = buf[at..at + e * EDGE_ENTRY_BYTES]
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        at += e * EDGE_ENTRY_BYTES;
        let chars = PackedSeq::from_bytes(buf[at..].to_vec(), c)
            .ok_or_else(|| fmt("non-zero padding in character table"))?;
        let graph = GenomeGraph {
            nodes,
            chars,
            edges,
        };
        graph
            .validate()
            .map_err(|e| GraphError::Format(e.to_string()))?;
        Ok(graph)
    }
}

/// Serialized size of a graph with the given table lengths.
pub fn graph_file_bytes(stats: GraphStats) -> u64 {
    GRAPH_HEADER_BYTES as u64
        + stats.nodes * NODE_RECORD_BYTES as u64
        + stats.edges * EDGE_ENTRY_BYTES as u64
        + stats.chars.div_ceil(4)
}

fn graph_file_bytes_checked(stats: GraphStats) -> Option<u128> {
    Some(
        GRAPH_HEADER_BYTES as u128
            + (stats.nodes as u128).checked_mul(NODE_RECORD_BYTES as u128)?
            + (stats.edges as u128).checked_mul(EDGE_ENTRY_BYTES as u128)?
            + (stats.chars as u128).div_ceil(4),
    )
}

/// A graph parsed from GFA together with the original segment names, in
/// node-ID order.
#[derive(Clone, Debug)]
pub struct NamedGraph {
    pub graph: GenomeGraph,
    pub names: Vec<String>,
}

/// Parse GFA v1 segments and links. Node IDs follow segment order.
pub fn parse_gfa<R: BufRead>(reader: R) -> Result<GenomeGraph, GraphError> {
    parse_gfa_named(reader).map(|g| g.graph)
}

pub fn parse_gfa_named<R: BufRead>(reader: R) -> Result<NamedGraph, GraphError> {
    let mut names: Vec<String> = Vec::new();
    let mut ids: HashMap<String, u32> = HashMap::new();
    let mut seqs: Vec<Vec<Base>> = Vec::new();
    let mut links: Vec<(usize, String, String)> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| GraphError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        match fields[0] {
            "S" => {
                if fields.len() < 3 {
                    return Err(GraphError::Parse {
                        line: line_no,
                        message: "S record needs a name and a sequence".into(),
                    });
                }
                let name = fields[1];
                if fields[2] == "*" {
                    return Err(GraphError::Unsupported {
                        line: line_no,
                        feature: format!("segment {name} without inline sequence"),
                    });
                }
                let seq = crate::alphabet::encode_seq(fields[2].as_bytes()).map_err(|source| {
                    GraphError::Alphabet {
                        line: line_no,
                        segment: name.to_string(),
                        source,
                    }
                })?;
                if seq.is_empty() {
                    return Err(GraphError::Parse {
                        line: line_no,
                        message: format!("segment {name} has an empty sequence"),
                    });
                }
                if ids.insert(name.to_string(), seqs.len() as u32).is_some() {
                    return Err(GraphError::Parse {
                        line: line_no,
                        message: format!("duplicate segment {name}"),
                    });
                }
                names.push(name.to_string());
                seqs.push(seq);
            }
            "L" => {
                if fields.len() < 6 {
                    return Err(GraphError::Parse {
                        line: line_no,
                        message: "L record needs from, orientation, to, orientation, overlap"
                            .into(),
                    });
                }
                for orient in [fields[2], fields[4]] {
                    match orient {
                        "+" => {}
                        "-" => {
                            return Err(GraphError::Unsupported {
                                line: line_no,
                                feature: "reverse-strand link".into(),
                            })
                        }
                        other => {
                            return Err(GraphError::Parse {
                                line: line_no,
                                message: format!("bad orientation {other:?}"),
                            })
                        }
                    }
                }
                if fields[5] != "0M" && fields[5] != "*" {
                    return Err(GraphError::Unsupported {
                        line: line_no,
                        feature: format!("link overlap {}", fields[5]),
                    });
                }
                links.push((line_no, fields[1].to_string(), fields[3].to_string()));
            }
            "H" | "P" | "W" | "C" | "E" | "G" | "O" | "U" => {}
            other => {
                return Err(GraphError::Parse {
                    line: line_no,
                    message: format!("unknown record type {other:?}"),
                })
            }
        }
    }

    let mut edges = Vec::with_capacity(links.len());
    for (line, from, to) in links {
        let lookup = |name: &String| {
            ids.get(name)
                .copied()
                .ok_or_else(|| GraphError::UnknownSegment {
                    line,
                    name: name.clone(),
                })
        };
        edges.push((lookup(&from)?, lookup(&to)?));
    }
    let graph = GenomeGraph::from_parts(&seqs, &edges)?;
    Ok(NamedGraph { graph, names })
}

/// Result of [`topo_sort`]: the re-packed graph and, for every old node ID,
/// its new ID.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SortedGraph {
    pub graph: GenomeGraph,
    pub new_id: Vec<u32>,
}

/// Kahn's algorithm, always emitting the smallest ready node ID so that an
/// already-sorted graph maps to itself.
pub fn topo_sort(graph: &GenomeGraph) -> Result<SortedGraph, GraphError> {
    let n = graph.node_count();
    let mut indeg = vec![0u32; n];
    for (_, v) in graph.edges() {
        indeg[v as usize] += 1;
    }
    let mut ready: BinaryHeap<Reverse<u32>> = (0..n as u32)
        .filter(|&u| indeg[u as usize] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(u)) = ready.pop() {
        order.push(u);
        for &v in graph.successors(u) {
            indeg[v as usize] -= 1;
            if indeg[v as usize] == 0 {
                ready.push(Reverse(v));
            }
        }
    }
    if order.len() < n {
        return Err(GraphError::Cycle {
            node: node_on_cycle(graph, &indeg),
        });
    }

    let mut new_id = vec![0u32; n];
    for (new, &old) in order.iter().enumerate() {
        new_id[old as usize] = new as u32;
    }
    let seqs: Vec<Vec<Base>> = order.iter().map(|&old| graph.node_seq(old)).collect();
    let edges: Vec<(u32, u32)> = graph
        .edges()
        .map(|(u, v)| (new_id[u as usize], new_id[v as usize]))
        .collect();
    Ok(SortedGraph {
        graph: GenomeGraph::from_parts(&seqs, &edges)?,
        new_id,
    })
}

// Every node left with positive in-degree after Kahn has a predecessor that
// is also left over; walking predecessors n times must land on a cycle.
fn node_on_cycle(graph: &GenomeGraph, indeg: &[u32]) -> u32 {
    let n = graph.node_count();
    let mut pred = vec![u32::MAX; n];
    for (u, v) in graph.edges() {
        if indeg[u as usize] > 0 && indeg[v as usize] > 0 {
            pred[v as usize] = u;
        }
    }
    let mut cur = (0..n).find(|&u| indeg[u] > 0).unwrap() as u32;
    for _ in 0..n {
        cur = pred[cur as usize];
    }
    cur
}
