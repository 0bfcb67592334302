//! Bitvector generation, distance extraction and traceback for one window.
//!
//! Conventions:
//!
//! * Pattern position `p` is tracked at bit `m - 1 - p`; bit `s - 1` of a
//!   status vector refers to the pattern suffix of length `s`.
//! * A 0 bit means "viable". Bit `s - 1` of `R[i][d]` is 0 iff the last `s`
//!   pattern characters align with at most `d` edits to a walk that starts
//!   at position `i` (the walk may end anywhere).
//! * Text positions are processed from last to first so every successor's
//!   vectors exist before they are needed.
//! * Any successor outside the processed range, and the implicit end of
//!   text, behaves like a position whose `R[d]` is `ONES << d`. For `d = 0`
//!   that is the all-ones vector; a real successor always dominates it.

use std::ops::Range;

use crate::alphabet::Base;
use crate::bitalign::cigar::CigarOp;
use crate::bitalign::word::BitWord;
use crate::bitalign::AlignError;
use crate::minseed::Subgraph;

/// One bitmask per base; bit `m - 1 - p` of `mask(b)` is 0 iff
/// `pattern[p] == b`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternBitmasks<W: BitWord> {
    len: usize,
    masks: [W; 4],
}

impl<W: BitWord> PatternBitmasks<W> {
    pub fn new(pattern: &[Base]) -> Result<Self, AlignError> {
        if pattern.len() > W::BITS {
            return Err(AlignError::PatternTooLong {
                len: pattern.len(),
                width: W::BITS,
            });
        }
        let m = pattern.len();
        let mut masks = [W::ONES; 4];
        for (p, &b) in pattern.iter().enumerate() {
            let slot = &mut masks[b.code() as usize];
            *slot = slot.clear_bit(m - 1 - p);
        }
        Ok(PatternBitmasks { len: m, masks })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline(always)]
    pub fn mask(&self, base: Base) -> W {
        self.masks[base.code() as usize]
    }

    /// Does pattern position `p` equal `base`?
    #[inline]
    pub fn matches(&self, p: usize, base: Base) -> bool {
        !self.mask(base).bit(self.len - 1 - p)
    }
}

pub fn gen_pattern_bitmasks<W: BitWord>(
    pattern: &[Base],
) -> Result<PatternBitmasks<W>, AlignError> {
    PatternBitmasks::new(pattern)
}

/// `R[d]` for every processed position and every `d` in `0..=k`; nothing
/// else is kept.
#[derive(Clone, Debug)]
pub struct RBitvectorStore<W: BitWord> {
    range: Range<usize>,
    k: usize,
    vectors: Vec<W>,
}

impl<W: BitWord> RBitvectorStore<W> {
    pub fn range(&self) -> Range<usize> {
        self.range.clone()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Stored vectors per position: always `k + 1`.
    pub fn vectors_per_position(&self) -> usize {
        self.k + 1
    }

    pub fn stored_vectors(&self) -> usize {
        self.vectors.len()
    }

    pub fn stored_bytes(&self) -> usize {
        self.vectors.len() * W::BITS / 8
    }

    #[inline]
    pub fn contains(&self, pos: usize) -> bool {
        self.range.contains(&pos)
    }

    /// `R[d]` at subgraph position `pos` (must lie in the range).
    #[inline(always)]
    pub fn get(&self, pos: usize, d: usize) -> W {
        self.vectors[(pos - self.range.start) * (self.k + 1) + d]
    }

    /// `R[d]` at `pos`, or the past-the-end vector when `pos` is outside.
    #[inline(always)]
    pub fn get_or_end(&self, pos: Option<usize>, d: usize) -> W {
        match pos {
            Some(p) if self.contains(p) => self.get(p, d),
            _ => end_vector(d),
        }
    }
}

#[inline(always)]
fn end_vector<W: BitWord>(d: usize) -> W {
    W::ONES.shl(d)
}

/// Generate the store for the whole subgraph.
pub fn generate_bitvectors<W: BitWord>(
    sub: &Subgraph,
    masks: &PatternBitmasks<W>,
    k: usize,
) -> RBitvectorStore<W> {
    generate_bitvectors_in(sub, 0..sub.len(), masks, k)
}

/// Generate the store for `range`; hops leaving the range are ignored.
pub fn generate_bitvectors_in<W: BitWord>(
    sub: &Subgraph,
    range: Range<usize>,
    masks: &PatternBitmasks<W>,
    k: usize,
) -> RBitvectorStore<W> {
    let width = k + 1;
    let n = range.len();
    let mut vectors = vec![W::ONES; n * width];
    let lo = range.start;
    for i in range.clone().rev() {
        let cur_pm = masks.mask(sub.base(i));
        let succ: Vec<usize> = sub
            .successors(i)
            .iter()
            .map(|&j| j as usize)
            .take_while(|&j| j < range.end)
            .collect();
        let row = (i - lo) * width;

        let mut r0 = end_vector::<W>(0).shl(1) | cur_pm;
        for &j in &succ {
            r0 = r0 & (vectors[(j - lo) * width].shl(1) | cur_pm);
        }
        vectors[row] = r0;

        for d in 1..=k {
            let ins = vectors[row + d - 1].shl(1);
            let (ep, ec) = (end_vector::<W>(d - 1), end_vector::<W>(d));
            let mut rd = ins & ep & ep.shl(1) & (ec.shl(1) | cur_pm);
            for &j in &succ {
                let prev = vectors[(j - lo) * width + d - 1];
                let same = vectors[(j - lo) * width + d];
                let del = prev;
                let sub_ = prev.shl(1);
                let mat = same.shl(1) | cur_pm;
                rd = rd & del & sub_ & mat;
            }
            vectors[row + d] = rd;
        }
    }
    RBitvectorStore { range, k, vectors }
}

/// Where an alignment begins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignStart {
    pub distance: usize,
    /// First subgraph position of the walk; `None` when the alignment
    /// consumes no graph character.
    pub start: Option<usize>,
}

/// Minimal `d` with an accepting bit anywhere in the store, and the
/// smallest position that accepts at that `d`.
pub fn extract_distance<W: BitWord>(
    store: &RBitvectorStore<W>,
    pattern_len: usize,
) -> Option<AlignStart> {
    if pattern_len == 0 {
        return Some(AlignStart {
            distance: 0,
            start: None,
        });
    }
    let accept = pattern_len - 1;
    (0..=store.k).find_map(|d| {
        store
            .range()
            .find(|&i| !store.get(i, d).bit(accept))
            .map(|i| AlignStart {
                distance: d,
                start: Some(i),
            })
    })
}

/// Like [`extract_distance`] but only alignments whose first graph
/// character is one of `candidates` (ascending), or that consume no graph
/// character at all, are admissible.
pub fn extract_distance_from<W: BitWord>(
    store: &RBitvectorStore<W>,
    pattern_len: usize,
    candidates: &[usize],
) -> Option<AlignStart> {
    if pattern_len == 0 {
        return Some(AlignStart {
            distance: 0,
            start: None,
        });
    }
    let accept = pattern_len - 1;
    (0..=store.k).find_map(|d| {
        candidates
            .iter()
            .copied()
            .filter(|&i| store.contains(i))
            .find(|&i| !store.get(i, d).bit(accept))
            .map(|i| AlignStart {
                distance: d,
                start: Some(i),
            })
            .or_else(|| {
                (!end_vector::<W>(d).bit(accept)).then_some(AlignStart {
                    distance: d,
                    start: None,
                })
            })
    })
}

/// Edit transcript of one window: ops in read order plus the subgraph
/// position consumed by every `M`, `X` and `D`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Traceback {
    pub ops: Vec<CigarOp>,
    pub positions: Vec<usize>,
}

/// Walk forward from `start`, re-deriving at each step which of the match,
/// substitution, deletion or insertion terms explains the stored bit.
/// Ties prefer M, then X, then D, then I; among successors the smallest
/// position wins, and leaving the graph comes last.
pub fn traceback<W: BitWord>(
    store: &RBitvectorStore<W>,
    sub: &Subgraph,
    masks: &PatternBitmasks<W>,
    start: AlignStart,
) -> Result<Traceback, AlignError> {
    let m = masks.len();
    let mut out = Traceback::default();
    let mut pos = start.start;
    let mut d = start.distance;
    let mut s = m;
    // viable(v, s) := pattern suffix of length s is viable in v; s = 0 always is
    let viable = |v: W, s: usize| s == 0 || !v.bit(s - 1);
    let inconsistent = |pos: Option<usize>, d: usize, s: usize| AlignError::Inconsistent {
        position: pos,
        distance: d,
        remaining: s,
    };

    while s > 0 {
        let Some(i) = pos.filter(|&p| store.contains(p)) else {
            // past the end of the processed text: only insertions remain
            if d >= 1 && viable(end_vector::<W>(d - 1), s - 1) {
                out.ops.push(CigarOp::Ins);
                d -= 1;
                s -= 1;
                continue;
            }
            return Err(inconsistent(pos, d, s));
        };
        let p = m - s;
        let is_match = masks.matches(p, sub.base(i));
        let nexts = sub
            .successors(i)
            .iter()
            .map(|&j| Some(j as usize))
            .filter(|j| store.contains(j.unwrap()))
            .chain(std::iter::once(None));

        if is_match {
            if let Some(j) = nexts
                .clone()
                .find(|&j| viable(store.get_or_end(j, d), s - 1))
            {
                out.ops.push(CigarOp::Match);
                out.positions.push(i);
                pos = j;
                s -= 1;
                continue;
            }
        }
        if d >= 1 {
            if !is_match {
                if let Some(j) = nexts
                    .clone()
                    .find(|&j| viable(store.get_or_end(j, d - 1), s - 1))
                {
                    out.ops.push(CigarOp::Mismatch);
                    out.positions.push(i);
                    pos = j;
                    s -= 1;
                    d -= 1;
                    continue;
                }
            }
            if let Some(j) = nexts
                .clone()
                .find(|&j| viable(store.get_or_end(j, d - 1), s))
            {
                out.ops.push(CigarOp::Del);
                out.positions.push(i);
                pos = j;
                d -= 1;
                continue;
            }
            if viable(store.get(i, d - 1), s - 1) {
                out.ops.push(CigarOp::Ins);
                d -= 1;
                s -= 1;
                continue;
            }
        }
        return Err(inconsistent(pos, d, s));
    }
    let edits = out.ops.iter().filter(|op| op.is_edit()).count();
    if edits != start.distance {
        return Err(AlignError::Inconsistent {
            position: pos,
            distance: d,
            remaining: 0,
        });
    }
    Ok(out)
}
