//! Bit-parallel read-to-subgraph alignment.
//!
//! [`align`] splits a read into overlapping windows, runs the bitvector
//! kernel on each one and stitches the committed parts of every window's
//! transcript together. [`map_read`] runs the whole seed-and-align flow
//! for one read against an indexed graph.

mod cigar;
mod kernel;
mod word;

use std::collections::BTreeSet;
use std::ops::Range;

use thiserror::Error;

use crate::alphabet::Base;
use crate::graphref::{GenomeGraph, GlobalOffset};
use crate::index::{FrequencyThreshold, MinimizerIndex};
use crate::minseed::{
    compute_region, extract_subgraph, seed_bases, SeedError, SeedRegion, SeedStats, Subgraph,
    DEFAULT_HOP_LIMIT,
};

pub use cigar::{Cigar, CigarOp, ParseCigarError};
pub use kernel::{
    extract_distance, extract_distance_from, gen_pattern_bitmasks, generate_bitvectors,
    generate_bitvectors_in, traceback, AlignStart, PatternBitmasks, RBitvectorStore, Traceback,
};
pub use word::BitWord;

/// Widest window the kernel supports.
pub const MAX_WINDOW: usize = 128;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlignError {
    #[error("pattern of length {len} does not fit a {width}-bit vector")]
    PatternTooLong { len: usize, width: usize },
    #[error("window config: {0}")]
    Config(String),
    #[error(
        "traceback found no move at position {position:?} (distance {distance}, {remaining} pattern chars left)"
    )]
    Inconsistent {
        position: Option<usize>,
        distance: usize,
        remaining: usize,
    },
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    Align(#[from] AlignError),
}

/// Window width `W`, overlap `O` and an optional fixed per-window edit
/// threshold. Without one the threshold is `ceil(E * W)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowConfig {
    width: usize,
    overlap: usize,
    k_window: Option<usize>,
}

impl WindowConfig {
    pub fn new(width: usize, overlap: usize) -> Result<Self, AlignError> {
        if width == 0 || width > MAX_WINDOW {
            return Err(AlignError::Config(format!(
                "window width {width} outside 1..={MAX_WINDOW}"
            )));
        }
        if overlap >= width {
            return Err(AlignError::Config(format!(
                "overlap {overlap} must be smaller than width {width}"
            )));
        }
        Ok(WindowConfig {
            width,
            overlap,
            k_window: None,
        })
    }

    /// Width with its customary overlap: 48 for 128, 24 for 64, else 3/8 W.
    pub fn for_width(width: usize) -> Result<Self, AlignError> {
        let overlap = match width {
            128 => 48,
            64 => 24,
            w => w * 3 / 8,
        };
        Self::new(width, overlap)
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k_window = Some(k);
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    pub fn advance(&self) -> usize {
        self.width - self.overlap
    }

    pub fn k_window(&self) -> Option<usize> {
        self.k_window
    }

    /// Per-window edit threshold at error rate `rate`.
    pub fn threshold(&self, rate: f64) -> usize {
        self.k_window
            .unwrap_or_else(|| crate::edit_budget(rate, self.width))
    }
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            width: 128,
            overlap: 48,
            k_window: None,
        }
    }
}

/// Number of windows for a read of `read_len` characters:
/// `1 + ceil(max(0, read_len - width) / (width - overlap))`.
pub fn window_count(read_len: usize, width: usize, overlap: usize) -> usize {
    assert!(overlap < width, "overlap must be smaller than width");
    let rest = read_len.saturating_sub(width);
    1 + rest.div_ceil(width - overlap)
}

/// What one window did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowInfo {
    /// Read interval handed to the kernel.
    pub read_range: Range<usize>,
    /// Read characters committed by this window (a prefix of `read_range`).
    pub committed: Range<usize>,
    /// Subgraph positions the kernel processed.
    pub text_range: Range<usize>,
    /// Best distance of the whole window.
    pub window_distance: usize,
    /// Edits in the committed part.
    pub committed_distance: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentResult {
    pub edit_distance: usize,
    pub cigar: Cigar,
    /// Graph characters consumed by `M`, `X` and `D`, in order.
    pub path: Vec<GlobalOffset>,
    /// The same characters as subgraph positions.
    pub positions: Vec<usize>,
    pub windows: Vec<WindowInfo>,
}

impl AlignmentResult {
    /// Linear reference span `[first, last]` of the consumed characters.
    pub fn ref_span(&self) -> Option<(u64, u64)> {
        Some((self.path.first()?.linear_pos, self.path.last()?.linear_pos))
    }

    /// Distinct nodes along the path, in order.
    pub fn node_walk(&self) -> Vec<u32> {
        let mut out: Vec<u32> = Vec::new();
        for p in &self.path {
            if out.last() != Some(&p.node_id) {
                out.push(p.node_id);
            }
        }
        out
    }
}

/// Align `read` to `sub` with the per-window threshold derived from
/// `error_rate`. `Ok(None)` means some window found no alignment.
pub fn align(
    read: &[Base],
    sub: &Subgraph,
    error_rate: f64,
    cfg: &WindowConfig,
) -> Result<Option<AlignmentResult>, AlignError> {
    align_with_k(read, sub, cfg.threshold(error_rate), cfg)
}

/// [`align`] with an explicit per-window threshold `k`.
pub fn align_with_k(
    read: &[Base],
    sub: &Subgraph,
    k: usize,
    cfg: &WindowConfig,
) -> Result<Option<AlignmentResult>, AlignError> {
    if cfg.width <= 64 {
        align_windows::<u64>(read, sub, k, cfg)
    } else {
        align_windows::<u128>(read, sub, k, cfg)
    }
}

/// Single-window alignment of a pattern of at most `W::BITS` characters
/// against the whole subgraph.
pub fn align_single<W: BitWord>(
    pattern: &[Base],
    sub: &Subgraph,
    k: usize,
) -> Result<Option<(AlignStart, Traceback)>, AlignError> {
    let masks = PatternBitmasks::<W>::new(pattern)?;
    let store = generate_bitvectors(sub, &masks, k);
    let Some(hit) = extract_distance(&store, pattern.len()) else {
        return Ok(None);
    };
    let tb = traceback(&store, sub, &masks, hit)?;
    Ok(Some((hit, tb)))
}

/// Last position reachable from `from` (each counted as the first step)
/// within `steps` consumed characters, plus one.
fn reach_end(sub: &Subgraph, from: &[usize], steps: usize) -> usize {
    let Some(&first) = from.first() else {
        return 0;
    };
    let n = sub.len();
    let mut dist = vec![usize::MAX; n - first];
    for &c in from {
        dist[c - first] = 1;
    }
    let mut last = first;
    for i in first..n {
        let di = dist[i - first];
        if di > steps {
            continue;
        }
        last = i;
        for &j in sub.successors(i) {
            let slot = &mut dist[j as usize - first];
            *slot = (*slot).min(di + 1);
        }
    }
    last + 1
}

fn align_windows<W: BitWord>(
    read: &[Base],
    sub: &Subgraph,
    k: usize,
    cfg: &WindowConfig,
) -> Result<Option<AlignmentResult>, AlignError> {
    let m = read.len();
    let advance = cfg.advance();
    let mut ops = Vec::with_capacity(m + k);
    let mut positions = Vec::with_capacity(m + k);
    let mut windows = Vec::new();
    let mut total = 0;
    // last committed graph position; None while nothing is committed
    let mut anchor: Option<usize> = None;
    let mut pstart = 0;

    loop {
        let pend = m.min(pstart + cfg.width);
        let last = pend == m;
        let pattern = &read[pstart..pend];
        let masks = PatternBitmasks::<W>::new(pattern)?;

        let (text_range, hit, store) = match anchor {
            None => {
                let store = generate_bitvectors(sub, &masks, k);
                let hit = extract_distance(&store, pattern.len());
                (0..sub.len(), hit, store)
            }
            Some(e) => {
                let cands: Vec<usize> = sub.successors(e).iter().map(|&j| j as usize).collect();
                let lo = e + 1;
                let hi = reach_end(sub, &cands, pattern.len() + k).max(lo);
                let store = generate_bitvectors_in(sub, lo..hi, &masks, k);
                let hit = extract_distance_from(&store, pattern.len(), &cands);
                (lo..hi, hit, store)
            }
        };
        let Some(hit) = hit else {
            return Ok(None);
        };
        let tb = traceback(&store, sub, &masks, hit)?;

        // how many ops to keep: through the one consuming the advance-th char
        let keep = if last {
            tb.ops.len()
        } else {
            let mut consumed = 0;
            let mut cut = tb.ops.len();
            for (n, op) in tb.ops.iter().enumerate() {
                if op.consumes_read() {
                    consumed += 1;
                    if consumed == advance {
                        cut = n + 1;
                        break;
                    }
                }
            }
            cut
        };
        let kept = &tb.ops[..keep];
        let graph_kept = kept.iter().filter(|op| op.consumes_graph()).count();
        let edits = kept.iter().filter(|op| op.is_edit()).count();
        let read_kept = kept.iter().filter(|op| op.consumes_read()).count();
        ops.extend_from_slice(kept);
        positions.extend_from_slice(&tb.positions[..graph_kept]);
        if let Some(&p) = positions.last() {
            anchor = Some(p);
        }
        total += edits;
        windows.push(WindowInfo {
            read_range: pstart..pend,
            committed: pstart..pstart + read_kept,
            text_range,
            window_distance: hit.distance,
            committed_distance: edits,
        });
        if last {
            break;
        }
        pstart += advance;
    }

    let path = positions
        .iter()
        .map(|&i| {
            let p = sub.positions()[i];
            GlobalOffset {
                node_id: p.node_id,
                offset: p.offset,
                linear_pos: sub.start() + i as u64,
            }
        })
        .collect();
    Ok(Some(AlignmentResult {
        edit_distance: total,
        cigar: ops.into_iter().collect(),
        path,
        positions,
        windows,
    }))
}

/// Everything [`map_read`] needs besides the read and the data structures.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapParams {
    pub error_rate: f64,
    pub hop_limit: usize,
    pub window: WindowConfig,
    pub threshold: FrequencyThreshold,
}

impl Default for MapParams {
    fn default() -> Self {
        MapParams {
            error_rate: 0.1,
            hop_limit: DEFAULT_HOP_LIMIT,
            window: WindowConfig::default(),
            threshold: FrequencyThreshold::UNLIMITED,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MapStats {
    pub seeding: SeedStats,
    pub regions: usize,
    pub aligned_regions: usize,
    pub dropped_hops: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mapping {
    pub region: SeedRegion,
    pub alignment: AlignmentResult,
}

impl Mapping {
    fn rank(&self) -> (usize, u64) {
        let start = self
            .alignment
            .path
            .first()
            .map_or(self.region.x, |p| p.linear_pos);
        (self.alignment.edit_distance, start)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MappedRead {
    pub best: Option<Mapping>,
    pub stats: MapStats,
}

/// Seed `read`, align it to every distinct candidate region and keep the
/// lowest-distance result (ties: smallest reference start).
pub fn map_read(
    read: &[Base],
    graph: &GenomeGraph,
    index: &MinimizerIndex,
    params: &MapParams,
) -> Result<MappedRead, MapError> {
    let (hits, seeding) = seed_bases(read, index, graph, params.threshold)?;
    let mut stats = MapStats {
        seeding,
        ..Default::default()
    };
    let ref_len = graph.char_count() as u64;
    let regions: BTreeSet<SeedRegion> = hits
        .iter()
        .map(|h| compute_region(h, read.len(), params.error_rate, ref_len))
        .collect();
    stats.regions = regions.len();

    let mut best: Option<Mapping> = None;
    for region in regions {
        let sub = extract_subgraph(graph, region, params.hop_limit)?;
        stats.dropped_hops += sub.dropped_hops();
        let Some(alignment) = align(read, &sub, params.error_rate, &params.window)? else {
            continue;
        };
        stats.aligned_regions += 1;
        let cand = Mapping { region, alignment };
        if best.as_ref().is_none_or(|b| cand.rank() < b.rank()) {
            best = Some(cand);
        }
    }
    Ok(MappedRead { best, stats })
}
