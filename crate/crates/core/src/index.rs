//! `(w,k)`-minimizer extraction and the three-level hash-table index.
//!
//! Level one is an array of `2^B` buckets addressed by the low `B` bits of a
//! minimizer hash. Each bucket points at a hash-sorted run of minimizer
//! entries (level two), and each minimizer entry points at a run of seed
//! locations `(node_id, offset)` (level three), sorted within the run.
//!
//! On disk a bucket entry is 4 bytes, a minimizer entry 12 bytes and a
//! location entry 8 bytes. Run lengths are not stored; they are recovered
//! from the start of the following entry.

use std::collections::VecDeque;

use thiserror::Error;

use crate::alphabet::Base;
use crate::graphref::GenomeGraph;

pub const INDEX_MAGIC: [u8; 4] = *b"SGMI";
pub const INDEX_VERSION: u32 = 1;
pub const INDEX_HEADER_BYTES: usize = 40;
pub const BUCKET_ENTRY_BYTES: usize = 4;
pub const MINIMIZER_ENTRY_BYTES: usize = 12;
pub const LOCATION_ENTRY_BYTES: usize = 8;
pub const MAX_K: usize = 31;
pub const MAX_BUCKET_BITS: u32 = 28;

pub const DEFAULT_W: usize = 10;
pub const DEFAULT_K: usize = 15;
pub const DEFAULT_BUCKET_BITS: u32 = 24;
pub const DEFAULT_FREQ_FRACTION: f64 = 0.0002;

#[derive(Debug, Error, PartialEq)]
pub enum IndexError {
    #[error("k = {0} is unsupported (1 <= k <= 31)")]
    UnsupportedK(usize),
    #[error("window size w must be at least 1")]
    ZeroWindow,
    #[error("bucket_bits = {0} exceeds {MAX_BUCKET_BITS}")]
    BucketBits(u32),
    #[error("index is empty")]
    EmptyIndex,
    #[error("frequency fraction {0} outside [0, 1]")]
    Fraction(f64),
    #[error("index too large: {0}")]
    TooLarge(String),
    #[error("corrupt index buffer: {0}")]
    Format(String),
}

/// How k-mers are ordered when choosing a window minimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ScoreMode {
    /// Invertible integer mix of the packed k-mer.
    #[default]
    Hash,
    /// The packed k-mer itself, i.e. lexicographic order.
    Lex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StrandMode {
    #[default]
    Forward,
    /// Score each k-mer by the smaller of its own and its reverse
    /// complement's score.
    Canonical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinimizerParams {
    pub w: usize,
    pub k: usize,
    pub score: ScoreMode,
    pub strand: StrandMode,
}

impl MinimizerParams {
    pub fn new(w: usize, k: usize) -> Self {
        MinimizerParams {
            w,
            k,
            score: ScoreMode::Hash,
            strand: StrandMode::Forward,
        }
    }

    pub fn with_score(mut self, score: ScoreMode) -> Self {
        self.score = score;
        self
    }

    pub fn with_strand(mut self, strand: StrandMode) -> Self {
        self.strand = strand;
        self
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        if self.k == 0 || self.k > MAX_K {
            return Err(IndexError::UnsupportedK(self.k));
        }
        if self.w == 0 {
            return Err(IndexError::ZeroWindow);
        }
        Ok(())
    }

    /// Score of the k-mer whose forward packing is `fwd` and reverse
    /// complement packing is `rc`.
    #[inline]
    pub fn score_of(&self, fwd: u64, rc: u64) -> u64 {
        let score = |x: u64| match self.score {
            ScoreMode::Hash => mix64(x, kmer_mask(self.k)),
            ScoreMode::Lex => x,
        };
        match self.strand {
            StrandMode::Forward => score(fwd),
            StrandMode::Canonical => score(fwd).min(score(rc)),
        }
    }
}

impl Default for MinimizerParams {
    fn default() -> Self {
        MinimizerParams::new(DEFAULT_W, DEFAULT_K)
    }
}

/// One minimizer occurrence in a source sequence; `end = start + k - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Minimizer {
    pub hash: u64,
    pub k: u32,
    pub start: u32,
    pub end: u32,
}

#[inline]
pub fn kmer_mask(k: usize) -> u64 {
    (1u64 << (2 * k)) - 1
}

/// Pack `kmer` at 2 bits per base, first base in the most significant pair.
pub fn pack_kmer(kmer: &[Base]) -> u64 {
    kmer.iter()
        .fold(0u64, |acc, b| (acc << 2) | b.code() as u64)
}

// Thomas Wang's 64-bit integer mix restricted to `mask`; each step is a
// bijection on the masked domain.
#[inline]
fn mix64(key: u64, mask: u64) -> u64 {
    let mut key = (!key).wrapping_add(key << 21) & mask;
    key ^= key >> 24;
    key = key.wrapping_add(key << 3).wrapping_add(key << 8) & mask;
    key ^= key >> 14;
    key = key.wrapping_add(key << 2).wrapping_add(key << 4) & mask;
    key ^= key >> 28;
    key = key.wrapping_add(key << 31) & mask;
    key
}

/// Hash a packed k-mer. Invertible on the `2k`-bit domain.
pub fn hash_kmer(packed: u64, k: usize) -> Result<u64, IndexError> {
    if k == 0 || k > MAX_K {
        return Err(IndexError::UnsupportedK(k));
    }
    Ok(mix64(packed & kmer_mask(k), kmer_mask(k)))
}

/// Window minimizers of `seq` in position order, each occurrence once.
///
/// Each window of `w` consecutive k-mers contributes its minimum-scoring
/// k-mer, the rightmost one on ties. A sequence with fewer than `w` k-mers
/// forms a single partial window. Runs in O(len) with a monotone queue.
pub fn find_minimizers(
    seq: &[Base],
    params: &MinimizerParams,
) -> Result<Vec<Minimizer>, IndexError> {
    params.validate()?;
    let (w, k) = (params.w, params.k);
    let mut out = Vec::new();
    if seq.len() < k {
        return Ok(out);
    }
    let kmers = seq.len() - k + 1;
    let mask = kmer_mask(k);
    let rc_shift = 2 * (k - 1);
    let mut fwd = 0u64;
    let mut rc = 0u64;
    // (score, k-mer start), scores increasing from front to back
    let mut queue: VecDeque<(u64, usize)> = VecDeque::with_capacity(w + 1);
    let mut last: Option<usize> = None;
    let mut emit = |score: u64, pos: usize, out: &mut Vec<Minimizer>| {
        if last != Some(pos) {
            last = Some(pos);
            out.push(Minimizer {
                hash: score,
                k: k as u32,
                start: pos as u32,
                end: (pos + k - 1) as u32,
            });
        }
    };

    for (i, &base) in seq.iter().enumerate() {
        let c = base.code() as u64;
        fwd = ((fwd << 2) | c) & mask;
        rc = (rc >> 2) | ((3 - c) << rc_shift);
        if i + 1 < k {
            continue;
        }
        let pos = i + 1 - k;
        let score = params.score_of(fwd, rc);
        while queue.back().is_some_and(|&(s, _)| s >= score) {
            queue.pop_back();
        }
        queue.push_back((score, pos));
        if queue.front().is_some_and(|&(_, p)| p + w <= pos) {
            queue.pop_front();
        }
        if pos + 1 >= w {
            let (s, p) = *queue.front().unwrap();
            emit(s, p, &mut out);
        }
    }
    if kmers < w {
        let (s, p) = *queue.front().unwrap();
        emit(s, p, &mut out);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Bucket {
    pub start: u32,
    pub count: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MinimizerEntry {
    pub hash: u64,
    pub loc_start: u32,
    pub loc_count: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Location {
    pub node_id: u32,
    pub offset: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lookup<'a> {
    pub count: u32,
    pub locations: &'a [Location],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrequencyThreshold {
    pub max_occurrences: u32,
}

impl FrequencyThreshold {
    pub const UNLIMITED: FrequencyThreshold = FrequencyThreshold {
        max_occurrences: u32::MAX,
    };

    #[inline]
    pub fn keeps(&self, count: u32) -> bool {
        count <= self.max_occurrences
    }
}

/// Build statistics: table lengths plus the maxima that drive sizing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct IndexStats {
    pub bucket_bits: u32,
    pub distinct_minimizers: u64,
    pub total_locations: u64,
    pub max_minimizers_per_bucket: u64,
    pub max_locations_per_minimizer: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinimizerIndex {
    params: MinimizerParams,
    bucket_bits: u32,
    buckets: Vec<Bucket>,
    minimizers: Vec<MinimizerEntry>,
    locations: Vec<Location>,
}

/// Build the index over every node sequence of `graph`. K-mers never span
/// an edge.
pub fn build_index(
    graph: &GenomeGraph,
    params: MinimizerParams,
    bucket_bits: u32,
) -> Result<MinimizerIndex, IndexError> {
    params.validate()?;
    if bucket_bits > MAX_BUCKET_BITS {
        return Err(IndexError::BucketBits(bucket_bits));
    }
    let mut entries: Vec<(u64, Location)> = Vec::new();
    for node_id in 0..graph.node_count() as u32 {
        let seq = graph.node_seq(node_id);
        for m in find_minimizers(&seq, &params)? {
            entries.push((
                m.hash,
                Location {
                    node_id,
                    offset: m.start,
                },
            ));
        }
    }
    MinimizerIndex::from_entries(params, bucket_bits, entries)
}

impl MinimizerIndex {
    fn from_entries(
        params: MinimizerParams,
        bucket_bits: u32,
        mut entries: Vec<(u64, Location)>,
    ) -> Result<Self, IndexError> {
        let bucket_mask = (1u64 << bucket_bits) - 1;
        entries.sort_unstable_by_key(|&(h, loc)| (h & bucket_mask, h, loc));
        entries.dedup();
        if entries.len() > u32::MAX as usize {
            return Err(IndexError::TooLarge(format!("{} locations", entries.len())));
        }

        let mut buckets = vec![Bucket::default(); 1usize << bucket_bits];
        let mut minimizers: Vec<MinimizerEntry> = Vec::new();
        let mut locations = Vec::with_capacity(entries.len());
        for (hash, loc) in entries {
            match minimizers.last_mut() {
                Some(last) if last.hash == hash => last.loc_count += 1,
                _ => {
                    let b = &mut buckets[(hash & bucket_mask) as usize];
                    if b.count == 0 {
                        b.start = minimizers.len() as u32;
                    }
                    b.count += 1;
                    minimizers.push(MinimizerEntry {
                        hash,
                        loc_start: locations.len() as u32,
                        loc_count: 1,
                    });
                }
            }
            locations.push(loc);
        }
        // empty buckets point at the next occupied run so starts stay monotone
        let mut next = minimizers.len() as u32;
        for b in buckets.iter_mut().rev() {
            if b.count == 0 {
                b.start = next;
            } else {
                next = b.start;
            }
        }
        Ok(MinimizerIndex {
            params,
            bucket_bits,
            buckets,
            minimizers,
            locations,
        })
    }

    pub fn params(&self) -> &MinimizerParams {
        &self.params
    }

    pub fn bucket_bits(&self) -> u32 {
        self.bucket_bits
    }

    pub fn buckets(&self) -> &[Bucket] {
        &self.buckets
    }

    pub fn minimizers(&self) -> &[MinimizerEntry] {
        &self.minimizers
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn is_empty(&self) -> bool {
        self.minimizers.is_empty()
    }

    pub fn locations_of(&self, entry: &MinimizerEntry) -> &[Location] {
        let s = entry.loc_start as usize;
        &self.locations[s..s + entry.loc_count as usize]
    }

    /// Bucket by low bits, then binary search within the bucket.
    pub fn lookup(&self, hash: u64) -> Lookup<'_> {
        let bucket = self.buckets[(hash & ((1u64 << self.bucket_bits) - 1)) as usize];
        let run = &self.minimizers[bucket.start as usize..(bucket.start + bucket.count) as usize];
        match run.binary_search_by_key(&hash, |m| m.hash) {
            Ok(i) => Lookup {
                count: run[i].loc_count,
                locations: self.locations_of(&run[i]),
            },
            Err(_) => Lookup {
                count: 0,
                locations: &[],
            },
        }
    }

    pub fn stats(&self) -> IndexStats {
        IndexStats {
            bucket_bits: self.bucket_bits,
            distinct_minimizers: self.minimizers.len() as u64,
            total_locations: self.locations.len() as u64,
            max_minimizers_per_bucket: self
                .buckets
                .iter()
                .map(|b| b.count as u64)
                .max()
                .unwrap_or(0),
            max_locations_per_minimizer: self
                .minimizers
                .iter()
                .map(|m| m.loc_count as u64)
                .max()
                .unwrap_or(0),
        }
    }

    /// Smallest count `c` such that minimizers occurring more than `c` times
    /// make up at most `fraction` of the distinct minimizers.
    pub fn compute_threshold(&self, fraction: f64) -> Result<FrequencyThreshold, IndexError> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(IndexError::Fraction(fraction));
        }
        if self.minimizers.is_empty() {
            return Err(IndexError::EmptyIndex);
        }
        let n = self.minimizers.len();
        let allowed = ((fraction * n as f64) * (1.0 + 1e-12)).floor() as usize;
        let mut counts: Vec<u32> = self.minimizers.iter().map(|m| m.loc_count).collect();
        counts.sort_unstable_by(|a, b| b.cmp(a));
        let c = if allowed >= n {
            1
        } else {
            counts[allowed].max(1)
        };
        Ok(FrequencyThreshold { max_occurrences: c })
    }

    pub fn serialized_len(&self) -> usize {
        index_file_bytes(&self.stats()) as usize
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        let flags = (self.params.score == ScoreMode::Lex) as u32
            | (((self.params.strand == StrandMode::Canonical) as u32) << 1);
        out.extend_from_slice(&INDEX_MAGIC);
        out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.params.w as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.k as u32).to_le_bytes());
        out.extend_from_slice(&self.bucket_bits.to_le_bytes());
        out.extend_from_slice(&flags.to_le_bytes());
        out.extend_from_slice(&(self.minimizers.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.locations.len() as u64).to_le_bytes());
        for b in &self.buckets {
            out.extend_from_slice(&b.start.to_le_bytes());
        }
        for m in &self.minimizers {
            out.extend_from_slice(&m.hash.to_le_bytes());
            out.extend_from_slice(&m.loc_start.to_le_bytes());
        }
        for l in &self.locations {
            out.extend_from_slice(&l.node_id.to_le_bytes());
            out.extend_from_slice(&l.offset.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self, IndexError> {
        let fmt = |m: String| IndexError::Format(m);
        if buf.len() < INDEX_HEADER_BYTES {
            return Err(fmt("buffer shorter than header".into()));
        }
        if buf[0..4] != INDEX_MAGIC {
            return Err(fmt("bad magic".into()));
        }
        let u32_at = |at: usize| u32::from_le_bytes(buf[at..at + 4].try_into().unwrap());
        let u64_at = |at: usize| u64::from_le_bytes(buf[at..at + 8].try_into().unwrap());
        if u32_at(4) != INDEX_VERSION {
            return Err(fmt(format!("unsupported version {}", u32_at(4))));
        }
        let flags = u32_at(20);
        if flags > 3 {
            return Err(fmt(format!("unknown flags {flags:#x}")));
        }
        let params = MinimizerParams {
            w: u32_at(8) as usize,
            k: u32_at(12) as usize,
            score: if flags & 1 != 0 {
                ScoreMode::Lex
            } else {
                ScoreMode::Hash
            },
            strand: if flags & 2 != 0 {
                StrandMode::Canonical
            } else {
                StrandMode::Forward
            },
        };
        params.validate().map_err(|e| fmt(e.to_string()))?;
        let bucket_bits = u32_at(16);
        if bucket_bits > MAX_BUCKET_BITS {
            return Err(fmt(format!("bucket_bits {bucket_bits}")));
        }
        let (n_min, n_loc) = (u64_at(24), u64_at(32));
        if n_min > u32::MAX as u64 || n_loc > u32::MAX as u64 {
            return Err(fmt("table lengths exceed 32-bit addressing".into()));
        }
        let stats = IndexStats {
            bucket_bits,
            distinct_minimizers: n_min,
            total_locations: n_loc,
            ..Default::default()
        };
        let expected = index_file_bytes(&stats);
        if buf.len() as u64 != expected {
            return Err(fmt(format!(
                "buffer is {} bytes, header implies {expected}",
                buf.len()
            )));
        }
        let (n_min, n_loc) = (n_min as usize, n_loc as usize);
        let n_buckets = 1usize << bucket_bits;
        let mut at = INDEX_HEADER_BYTES;

        let starts: Vec<u32> = (0..n_buckets).map(|i| u32_at(at + 4 * i)).collect();
        at += n_buckets * BUCKET_ENTRY_BYTES;
        let mut buckets = Vec::with_capacity(n_buckets);
        for i in 0..n_buckets {
            let end = starts.get(i + 1).copied().unwrap_or(n_min as u32);
            if starts[i] > end || end as usize > n_min {
                return Err(fmt(format!("bucket {i} start {} out of order", starts[i])));
            }
            buckets.push(Bucket {
                start: starts[i],
                count: end - starts[i],
            });
        }
        if n_buckets > 0 && starts[0] != 0 {
            return Err(fmt("first bucket does not start at 0".into()));
        }

        let raw: Vec<(u64, u32)> = (0..n_min)
            .map(|i| {
                let p = at + MINIMIZER_ENTRY_BYTES * i;
                (u64_at(p), u32_at(p + 8))
            })
            .collect();
        at += n_min * MINIMIZER_ENTRY_BYTES;
        let mut minimizers = Vec::with_capacity(n_min);
        for (i, &(hash, loc_start)) in raw.iter().enumerate() {
            let end = raw.get(i + 1).map(|r| r.1).unwrap_or(n_loc as u32);
            if loc_start >= end || end as usize > n_loc {
                return Err(fmt(format!(
                    "minimizer {i} has an empty or inverted location run"
                )));
            }
            minimizers.push(MinimizerEntry {
                hash,
                loc_start,
                loc_count: end - loc_start,
            });
        }
        if n_min > 0 && raw[0].1 != 0 {
            return Err(fmt("first minimizer does not start at location 0".into()));
        }
        if n_min == 0 && n_loc != 0 {
            return Err(fmt("locations without minimizers".into()));
        }

        let locations: Vec<Location> = (0..n_loc)
            .map(|i| {
                let p = at + LOCATION_ENTRY_BYTES * i;
                Location {
                    node_id: u32_at(p),
                    offset: u32_at(p + 4),
                }
            })
            .collect();

        let mask = (1u64 << bucket_bits) - 1;
        for (bi, b) in buckets.iter().enumerate() {
            let run = &minimizers[b.start as usize..(b.start + b.count) as usize];
            if run.iter().any(|m| (m.hash & mask) as usize != bi) {
                return Err(fmt(format!("minimizer filed under wrong bucket {bi}")));
            }
            if run.windows(2).any(|p| p[0].hash >= p[1].hash) {
                return Err(fmt(format!("bucket {bi} not sorted by hash")));
            }
        }
        for m in &minimizers {
            let s = m.loc_start as usize;
            let run = &locations[s..s + m.loc_count as usize];
            if run.windows(2).any(|p| p[0] >= p[1]) {
                return Err(fmt(format!("locations of {:#x} not sorted", m.hash)));
            }
        }

        Ok(MinimizerIndex {
            params,
            bucket_bits,
            buckets,
            minimizers,
            locations,
        })
    }
}

/// Serialized index size for the given table lengths.
pub fn index_file_bytes(stats: &IndexStats) -> u64 {
    INDEX_HEADER_BYTES as u64
        + (1u64 << stats.bucket_bits) * BUCKET_ENTRY_BYTES as u64
        + stats.distinct_minimizers * MINIMIZER_ENTRY_BYTES as u64
        + stats.total_locations * LOCATION_ENTRY_BYTES as u64
}
