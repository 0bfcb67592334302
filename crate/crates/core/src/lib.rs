//! Minimizer-based seeding and bitvector-based alignment of reads against
//! topologically sorted genome graphs.
//!
//! The pipeline mirrors a seed-and-align read mapper:
//!
//! 1. [`graphref`] ingests a GFA graph, sorts it and stores it as packed
//!    node / character / edge tables.
//! 2. [`index`] extracts `(w,k)`-minimizers from node sequences and builds a
//!    three-level bucket / minimizer / location hash table.
//! 3. [`minseed`] seeds a read against the index, projects candidate regions
//!    and linearizes the surrounding subgraph together with its hop sets.
//! 4. [`bitalign`] aligns the read to each subgraph with a bit-parallel
//!    edit-distance kernel, using overlapping windows for long reads.
//!
//! [`oracle`] holds brute-force references used for verification and
//! [`perfmodel`] is an analytical cycle and storage model of the hardware
//! design these algorithms target.

pub mod alphabet;
pub mod bitalign;
pub mod graphref;
pub mod index;
pub mod minseed;
pub mod oracle;
pub mod perfmodel;
pub mod sim;

pub use alphabet::Base;
pub use bitalign::{AlignmentResult, Cigar, CigarOp, WindowConfig};
pub use graphref::GenomeGraph;
pub use index::{MinimizerIndex, ScoreMode, StrandMode};
pub use minseed::{SeedRegion, Subgraph};

/// Number of edits tolerated for `len` characters at error rate `rate`,
/// i.e. `ceil(rate * len)`.
///
/// A small epsilon absorbs representation error, so `0.1 * 30` yields 3.
pub fn edit_budget(rate: f64, len: usize) -> usize {
    let raw = rate * len as f64 - 1e-9;
    if raw <= 0.0 {
        0
    } else {
        raw.ceil() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::edit_budget;

    #[test]
    fn edit_budget_rounds_up_without_float_noise() {
        assert_eq!(edit_budget(0.1, 20), 2);
        assert_eq!(edit_budget(0.1, 30), 3);
        assert_eq!(edit_budget(0.1, 31), 4);
        assert_eq!(edit_budget(0.0, 1000), 0);
        assert_eq!(edit_budget(0.1, 128), 13);
        assert_eq!(edit_budget(0.05, 100), 5);
    }
}
