use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use anyhow::anyhow;
use clap::Args;
use needletail::errors::ParseErrorKind;
use needletail::parse_fastx_reader;
use rayon::prelude::*;

use graphmap::alphabet::encode_seq;
use graphmap::bitalign::{map_read, MapParams, MappedRead, WindowConfig};
use graphmap::graphref::GenomeGraph;
use graphmap::index::{FrequencyThreshold, IndexError, MinimizerIndex, DEFAULT_FREQ_FRACTION};
use graphmap::minseed::DEFAULT_HOP_LIMIT;
use graphmap::oracle::replay_on_graph;

use crate::{
    default_overlap, load_graph, load_index, open_input, open_output, CliResult, Failure,
    FailureExt,
};

const BATCH: usize = 4096;

#[derive(Args)]
pub struct MapArgs {
    /// Packed graph from `build-graph`.
    graph: PathBuf,
    /// Index from `build-index`.
    index: PathBuf,
    /// FASTA or FASTQ reads, plain or gzip.
    reads: PathBuf,
    /// Output file; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Error rate used for region padding and the per-window threshold.
    #[arg(short = 'E', long = "error-rate", default_value_t = 0.1)]
    error_rate: f64,
    #[arg(long, default_value_t = DEFAULT_HOP_LIMIT)]
    hop_limit: usize,
    #[arg(long, default_value_t = 128)]
    window: usize,
    /// Defaults to 48 for a 128 window and 24 for a 64 window.
    #[arg(long)]
    overlap: Option<usize>,
    /// Fixed per-window edit threshold instead of ceil(E * window).
    #[arg(long)]
    window_k: Option<usize>,
    /// Fraction of distinct minimizers allowed above the occurrence cutoff.
    #[arg(long, default_value_t = DEFAULT_FREQ_FRACTION)]
    freq_fraction: f64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Replay every mapped CIGAR along its path and fail on any mismatch.
    #[arg(long)]
    verify: bool,
    /// Append an approximate GAF-style node path column.
    #[arg(long)]
    gaf_like: bool,
}

struct Record {
    id: String,
    seq: Vec<u8>,
}

enum Outcome {
    Skipped,
    Done(MappedRead),
}

struct Line {
    text: String,
    verify_error: Option<String>,
}

fn params(args: &MapArgs, index: &MinimizerIndex) -> CliResult<MapParams> {
    if !(0.0..1.0).contains(&args.error_rate) {
        return Err(Failure::Config(anyhow!(
            "error rate {} outside [0, 1)",
            args.error_rate
        )));
    }
    let overlap = args.overlap.unwrap_or_else(|| default_overlap(args.window));
    let mut window = WindowConfig::new(args.window, overlap).config(|| "window settings".into())?;
    if let Some(k) = args.window_k {
        window = window.with_k(k);
    }
    let threshold = match index.compute_threshold(args.freq_fraction) {
        Ok(t) => t,
        Err(IndexError::EmptyIndex) => FrequencyThreshold::UNLIMITED,
        Err(e) => return Err(Failure::Config(anyhow!(e).context("frequency threshold"))),
    };
    Ok(MapParams {
        error_rate: args.error_rate,
        hop_limit: args.hop_limit,
        window,
        threshold,
    })
}

fn map_one(
    rec: &Record,
    graph: &GenomeGraph,
    index: &MinimizerIndex,
    params: &MapParams,
) -> anyhow::Result<Outcome> {
    let bases = match encode_seq(&rec.seq) {
        Ok(b) => b,
        Err(_) => return Ok(Outcome::Skipped),
    };
    Ok(Outcome::Done(map_read(&bases, graph, index, params)?))
}

fn format_line(rec: &Record, outcome: &Outcome, graph: &GenomeGraph, args: &MapArgs) -> Line {
    let mut text = String::new();
    let mut verify_error = None;
    match outcome {
        Outcome::Skipped => {
            text.push_str(&format!("{}\tskipped\t*\t*\t*\t*\t0\t0", rec.id));
            if args.gaf_like {
                text.push_str("\t*");
            }
        }
        Outcome::Done(m) => {
            let seeds = m.stats.seeding.seeds;
            match &m.best {
                None => {
                    let _ = write!(text, "{}\tunmapped\t*\t*\t*\t*\t{seeds}\t0", rec.id);
                    if args.gaf_like {
                        text.push_str("\t*");
                    }
                }
                Some(best) => {
                    let a = &best.alignment;
                    let start = a
                        .path
                        .first()
                        .map_or("*".to_string(), |p| format!("{}:{}", p.node_id, p.offset));
                    let _ = write!(
                        text,
                        "{}\tmapped\t{start}\t{}-{}\t{}\t{}\t{seeds}\t{}",
                        rec.id,
                        best.region.x,
                        best.region.y,
                        a.edit_distance,
                        a.cigar,
                        a.windows.len()
                    );
                    if args.gaf_like {
                        let walk: String = a.node_walk().iter().map(|n| format!(">{n}")).collect();
                        text.push('\t');
                        text.push_str(if walk.is_empty() { "*" } else { &walk });
                    }
                    if args.verify {
                        let bases = encode_seq(&rec.seq).expect("mapped reads are valid");
                        if let Err(e) =
                            replay_on_graph(graph, &bases, &a.path, &a.cigar, a.edit_distance)
                        {
                            verify_error = Some(format!("{}: {e}", rec.id));
                        }
                    }
                }
            }
        }
    }
    text.push('\n');
    Line { text, verify_error }
}

fn read_records(args: &MapArgs) -> CliResult<Vec<Record>> {
    let input = open_input(&args.reads)?;
    let mut reader = match parse_fastx_reader(input) {
        Ok(r) => r,
        Err(e) if e.kind == ParseErrorKind::EmptyFile => return Ok(Vec::new()),
        Err(e) => {
            return Err(Failure::Parse(
                anyhow!(e).context(format!("reading {}", args.reads.display())),
            ))
        }
    };
    let mut out = Vec::new();
    while let Some(rec) = reader.next() {
        let rec = rec.parse(|| format!("reading {}", args.reads.display()))?;
        let id = String::from_utf8_lossy(rec.id());
        let id = id.split_whitespace().next().unwrap_or("").to_string();
        out.push(Record {
            id,
            seq: rec.seq().into_owned(),
        });
    }
    Ok(out)
}

pub fn run(args: &MapArgs) -> CliResult<()> {
    let graph = load_graph(&args.graph)?;
    let index = load_index(&args.index)?;
    let params = params(args, &index)?;
    let records = read_records(args)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .config(|| "thread pool".into())?;

    let mut out = open_output(args.out.as_deref())?;
    let mut failures = Vec::new();
    for batch in records.chunks(BATCH) {
        let lines: Vec<anyhow::Result<Line>> = pool.install(|| {
            batch
                .par_iter()
                .map(|rec| {
                    let outcome = map_one(rec, &graph, &index, &params)?;
                    Ok(format_line(rec, &outcome, &graph, args))
                })
                .collect()
        });
        for line in lines {
            let line = line.map_err(|e| Failure::Io(e.context("mapping")))?;
            out.write_all(line.text.as_bytes())
                .io(|| "writing output".into())?;
            failures.extend(line.verify_error);
        }
    }
    out.flush().io(|| "writing output".into())?;
    if !failures.is_empty() {
        return Err(Failure::Verify(anyhow!(
            "{} mapped records failed replay; first: {}",
            failures.len(),
            failures[0]
        )));
    }
    if args.verify {
        eprintln!("verified {} records", records.len());
    }
    Ok(())
}
