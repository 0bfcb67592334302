mod map;
mod simulate;

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flate2::read::MultiGzDecoder;

use graphmap::graphref::{parse_gfa, topo_sort, GenomeGraph};
use graphmap::index::{
    build_index, MinimizerIndex, MinimizerParams, ScoreMode, StrandMode, DEFAULT_BUCKET_BITS,
    DEFAULT_K, DEFAULT_W,
};
use graphmap::perfmodel::{perf_report, speedup, AcceleratorConfig, CycleCalibration};

/// Failure classes, each with its own exit status.
#[derive(Debug)]
pub enum Failure {
    Io(anyhow::Error),
    Config(anyhow::Error),
    Parse(anyhow::Error),
    Verify(anyhow::Error),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Parse(_) => 3,
            Failure::Verify(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Io(e) | Failure::Config(e) | Failure::Parse(e) | Failure::Verify(e) => e,
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub trait FailureExt<T> {
    fn io(self, what: impl FnOnce() -> String) -> CliResult<T>;
    fn parse(self, what: impl FnOnce() -> String) -> CliResult<T>;
    fn config(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> FailureExt<T> for Result<T, E> {
    fn io(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| Failure::Io(e.into().context(what())))
    }
    fn parse(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| Failure::Parse(e.into().context(what())))
    }
    fn config(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| Failure::Config(e.into().context(what())))
    }
}

#[derive(Parser)]
#[command(name = "graphmap", version, about = "Map reads to a genome graph")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a GFA v1 graph, sort it and write the packed `.gg` form.
    BuildGraph(BuildGraphArgs),
    /// Build the minimizer index of a `.gg` graph.
    BuildIndex(BuildIndexArgs),
    /// Map FASTA/FASTQ reads and print one TSV line per read.
    Map(map::MapArgs),
    /// Print the accelerator cycle and storage model.
    PerfReport(PerfArgs),
    /// Generate a random graph or reads sampled from one.
    Simulate(simulate::SimulateArgs),
}

#[derive(Args)]
struct BuildGraphArgs {
    /// GFA v1 input, plain or gzip.
    gfa: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScoreArg {
    Hash,
    Lex,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum StrandArg {
    Fwd,
    Canonical,
}

#[derive(Args)]
struct BuildIndexArgs {
    graph: PathBuf,
    #[arg(short, long)]
    out: PathBuf,
    /// Minimizer window, in k-mers.
    #[arg(short = 'w', default_value_t = DEFAULT_W)]
    w: usize,
    #[arg(short = 'k', default_value_t = DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_BUCKET_BITS)]
    bucket_bits: u32,
    #[arg(long, value_enum, default_value = "hash")]
    score: ScoreArg,
    #[arg(long, value_enum, default_value = "fwd")]
    strand: StrandArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Text,
    Kv,
}

#[derive(Args)]
struct PerfArgs {
    #[arg(long, default_value_t = 10_000)]
    read_len: u64,
    #[arg(long, default_value_t = 128)]
    window: usize,
    /// Defaults to 48 for a 128 window and 24 for a 64 window.
    #[arg(long)]
    overlap: Option<usize>,
    #[arg(long, default_value_t = 64)]
    pe_count: u64,
    /// Defaults to the window width rounded up to 64 or 128.
    #[arg(long)]
    bits_per_pe: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    clock_ghz: f64,
    #[arg(long, default_value_t = 12)]
    hop_limit: u64,
    /// Also report the 64-bit W=64 configuration and the cycle ratio.
    #[arg(long)]
    compare: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
}

pub fn default_overlap(width: usize) -> usize {
    match width {
        128 => 48,
        64 => 24,
        w => w * 3 / 8,
    }
}

/// Open a file, transparently decompressing gzip.
pub fn open_input(path: &Path) -> CliResult<Box<dyn BufRead + Send>> {
    let mut file = File::open(path).io(|| format!("opening {}", path.display()))?;
    let mut magic = [0u8; 2];
    let n = file
        .read(&mut magic)
        .io(|| format!("reading {}", path.display()))?;
    let file = File::open(path).io(|| format!("opening {}", path.display()))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).io(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

pub fn load_graph(path: &Path) -> CliResult<GenomeGraph> {
    let bytes = fs::read(path).io(|| format!("reading {}", path.display()))?;
    GenomeGraph::from_bytes(&bytes).parse(|| format!("loading graph {}", path.display()))
}

pub fn load_index(path: &Path) -> CliResult<MinimizerIndex> {
    let bytes = fs::read(path).io(|| format!("reading {}", path.display()))?;
    MinimizerIndex::from_bytes(&bytes).parse(|| format!("loading index {}", path.display()))
}

fn build_graph(args: &BuildGraphArgs) -> CliResult<()> {
    let reader = open_input(&args.gfa)?;
    let parsed = parse_gfa(reader).parse(|| format!("parsing {}", args.gfa.display()))?;
    let sorted = parsed.is_topologically_sorted();
    let graph = if sorted {
        parsed
    } else {
        topo_sort(&parsed)
            .parse(|| format!("sorting {}", args.gfa.display()))?
            .graph
    };
    let bytes = graph.to_bytes();
    fs::write(&args.out, &bytes).io(|| format!("writing {}", args.out.display()))?;
    let s = graph.stats();
    println!(
        "nodes={} edges={} chars={} bytes={} resorted={}",
        s.nodes,
        s.edges,
        s.chars,
        bytes.len(),
        !sorted
    );
    Ok(())
}

fn build_index_cmd(args: &BuildIndexArgs) -> CliResult<()> {
    let graph = load_graph(&args.graph)?;
    let params = MinimizerParams::new(args.w, args.k)
        .with_score(match args.score {
            ScoreArg::Hash => ScoreMode::Hash,
            ScoreArg::Lex => ScoreMode::Lex,
        })
        .with_strand(match args.strand {
            StrandArg::Fwd => StrandMode::Forward,
            StrandArg::Canonical => StrandMode::Canonical,
        });
    params.validate().config(|| "minimizer parameters".into())?;
    let index = build_index(&graph, params, args.bucket_bits).config(|| "building index".into())?;
    let bytes = index.to_bytes();
    fs::write(&args.out, &bytes).io(|| format!("writing {}", args.out.display()))?;
    let s = index.stats();
    println!(
        "distinct_minimizers={} total_locations={} max_minimizers_per_bucket={} max_locations_per_minimizer={} buckets={} bytes={}",
        s.distinct_minimizers,
        s.total_locations,
        s.max_minimizers_per_bucket,
        s.max_locations_per_minimizer,
        1u64 << s.bucket_bits,
        bytes.len()
    );
    Ok(())
}

fn perf_cmd(args: &PerfArgs) -> CliResult<()> {
    let overlap = args.overlap.unwrap_or_else(|| default_overlap(args.window));
    let bits = args
        .bits_per_pe
        .unwrap_or(if args.window <= 64 { 64 } else { 128 });
    let cfg = AcceleratorConfig {
        pe_count: args.pe_count,
        bits_per_pe: bits,
        clock_ghz: args.clock_ghz,
        window: args.window,
        overlap,
        hop_limit: args.hop_limit,
        ..AcceleratorConfig::default()
    };
    let calib = CycleCalibration::default();
    let report = perf_report(args.read_len, &cfg, &calib).config(|| "accelerator config".into())?;
    let mut out = open_output(None)?;
    let emit = |r: &graphmap::perfmodel::PerfReport, out: &mut dyn Write| -> io::Result<()> {
        match args.format {
            ReportFormat::Text => write!(out, "{r}"),
            ReportFormat::Kv => write!(out, "{}", r.to_key_values()),
        }
    };
    emit(&report, &mut out).io(|| "writing report".into())?;
    if args.compare {
        let narrow = AcceleratorConfig {
            pe_count: args.pe_count,
            clock_ghz: args.clock_ghz,
            ..AcceleratorConfig::narrow()
        };
        let base =
            perf_report(args.read_len, &narrow, &calib).config(|| "baseline config".into())?;
        let ratio = speedup(args.read_len, &narrow, &cfg, &calib).config(|| "speedup".into())?;
        let res = (|| -> io::Result<()> {
            match args.format {
                ReportFormat::Text => writeln!(out, "\nbaseline:")?,
                ReportFormat::Kv => {}
            }
            match args.format {
                ReportFormat::Text => {
                    write!(out, "{base}")?;
                    writeln!(
                        out,
                        "\ncycle ratio baseline/config: {ratio:.4} ({:.0}% faster)",
                        (ratio - 1.0) * 100.0
                    )
                }
                ReportFormat::Kv => {
                    for line in base.to_key_values().lines() {
                        writeln!(out, "baseline.{line}")?;
                    }
                    writeln!(out, "cycle_ratio={ratio:.4}")
                }
            }
        })();
        res.io(|| "writing report".into())?;
    }
    out.flush().io(|| "writing report".into())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::BuildGraph(a) => build_graph(&a),
        Command::BuildIndex(a) => build_index_cmd(&a),
        Command::Map(a) => map::run(&a),
        Command::PerfReport(a) => perf_cmd(&a),
        Command::Simulate(a) => simulate::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.exit_code())
        }
    }
}
