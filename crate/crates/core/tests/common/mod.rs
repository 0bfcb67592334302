#![allow(dead_code)]

use graphmap::alphabet::Base;
use graphmap::minseed::Subgraph;
use graphmap::sim::{self, SimRng};
use rand::Rng;

/// Characters along a random walk through `sub`, at most `len` long.
pub fn walk(rng: &mut SimRng, sub: &Subgraph, len: usize) -> Vec<Base> {
    let mut out = Vec::new();
    if sub.is_empty() {
        return out;
    }
    let mut i = rng.gen_range(0..sub.len());
    loop {
        out.push(sub.base(i));
        let succ = sub.successors(i);
        if out.len() >= len || succ.is_empty() {
            return out;
        }
        i = succ[rng.gen_range(0..succ.len())] as usize;
    }
}

/// A read for `sub`: either unrelated random bases or a walk with a few
/// planted edits.
pub fn read_for(rng: &mut SimRng, sub: &Subgraph, max_len: usize) -> Vec<Base> {
    let len = rng.gen_range(1..=max_len);
    if rng.gen_bool(0.25) {
        return sim::random_bases(rng, len);
    }
    let base = walk(rng, sub, len);
    let edits = rng.gen_range(0..=4.min(base.len()));
    sim::plant_edits(rng, &base, edits)
}

/// Random small DAG subgraph with `1..=max_n` characters.
pub fn small_dag(rng: &mut SimRng, max_n: usize) -> Subgraph {
    let n = rng.gen_range(1..=max_n);
    let hop = rng.gen_range(1..=6);
    let p_next = rng.gen_range(0.5..1.0);
    sim::random_subgraph(rng, n, hop, p_next)
}
