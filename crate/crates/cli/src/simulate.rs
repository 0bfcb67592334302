use std::io::Write;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, Subcommand};
use rand::Rng;

use graphmap::alphabet::decode_seq;
use graphmap::sim::{self, VariationParams};

use crate::{load_graph, open_output, CliResult, Failure, FailureExt};

#[derive(Args)]
pub struct SimulateArgs {
    /// Generator seed; falls back to GRAPHMAP_SEED, then 1.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    what: What,
}

#[derive(Subcommand)]
enum What {
    /// A random backbone with SNP and indel bubbles, written as GFA.
    Graph {
        #[arg(long, default_value_t = 100_000)]
        length: usize,
        /// Mean distance between variant sites.
        #[arg(long, default_value_t = 50)]
        spacing: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Reads sampled along random graph walks. Read names carry the true
    /// start as `node:offset` and the number of planted edits.
    Reads {
        graph: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 100)]
        min_len: usize,
        #[arg(long, default_value_t = 1000)]
        max_len: usize,
        /// Fraction of bases to edit; the count is rounded up.
        #[arg(long, default_value_t = 0.0)]
        error_rate: f64,
        /// Write FASTQ instead of FASTA.
        #[arg(long)]
        fastq: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

pub fn run(args: &SimulateArgs) -> CliResult<()> {
    let seed = args.seed.unwrap_or_else(|| sim::seed_from_env(1));
    let mut rng = sim::rng(seed);
    match &args.what {
        What::Graph {
            length,
            spacing,
            out,
        } => {
            if *length == 0 || *spacing == 0 {
                return Err(Failure::Config(anyhow!(
                    "length and spacing must be positive"
                )));
            }
            let params = VariationParams {
                spacing: *spacing,
                ..Default::default()
            };
            let graph = sim::variation_graph(&mut rng, *length, &params);
            let mut w = open_output(out.as_deref())?;
            sim::write_gfa(&graph, &mut w).io(|| "writing GFA".into())?;
            w.flush().io(|| "writing GFA".into())
        }
        What::Reads {
            graph,
            count,
            min_len,
            max_len,
            error_rate,
            fastq,
            out,
        } => {
            if *min_len == 0 || min_len > max_len || !(0.0..1.0).contains(error_rate) {
                return Err(Failure::Config(anyhow!(
                    "need 0 < min-len <= max-len and 0 <= error-rate < 1"
                )));
            }
            let graph = load_graph(graph)?;
            let mut w = open_output(out.as_deref())?;
            for i in 0..*count {
                let len = rng.gen_range(*min_len..=*max_len);
                let read = sim::sample_read(&mut rng, &graph, len)
                    .ok_or_else(|| Failure::Config(anyhow!("graph has no walk of length {len}")))?;
                let edits = graphmap::edit_budget(*error_rate, len);
                let bases = sim::plant_edits(&mut rng, &read.bases, edits);
                let s = read.start();
                let name = format!("read{i}_{}:{}_{edits}", s.node_id, s.offset);
                let seq = decode_seq(&bases);
                let res = if *fastq {
                    writeln!(w, "@{name}\n{seq}\n+\n{}", "I".repeat(seq.len()))
                } else {
                    writeln!(w, ">{name}\n{seq}")
                };
                res.io(|| "writing reads".into())?;
            }
            w.flush().io(|| "writing reads".into())
        }
    }
}
