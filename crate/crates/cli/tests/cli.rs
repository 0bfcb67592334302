use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flate2::write::GzEncoder;
use flate2::Compression;
use tempfile::TempDir;

fn graphmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphmap"))
        .args(args)
        .env_remove("GRAPHMAP_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = graphmap(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn field<'a>(line: &'a str, key: &str) -> &'a str {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {line}"))
}

struct Fixture {
    dir: TempDir,
    gfa: PathBuf,
    gg: PathBuf,
    idx: PathBuf,
    fa: PathBuf,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    /// A simulated graph with a small index and exact reads sampled from it.
    fn simulated(len: usize, reads: usize) -> Fixture {
        let dir = TempDir::new().unwrap();
        let at = |n: &str| dir.path().join(n);
        let (gfa, gg, idx, fa) = (at("g.gfa"), at("g.gg"), at("g.idx"), at("r.fa"));
        ok(&[
            "simulate",
            "--seed",
            "11",
            "graph",
            "--length",
            &len.to_string(),
            "-o",
            s(&gfa),
        ]);
        ok(&["build-graph", s(&gfa), "-o", s(&gg)]);
        ok(&["build-index", s(&gg), "-o", s(&idx), "--bucket-bits", "12"]);
        ok(&[
            "simulate",
            "--seed",
            "12",
            "reads",
            s(&gg),
            "--count",
            &reads.to_string(),
            "--min-len",
            "150",
            "--max-len",
            "600",
            "-o",
            s(&fa),
        ]);
        Fixture {
            dir,
            gfa,
            gg,
            idx,
            fa,
        }
    }
}

const SMALL_GFA: &str = "H\tVN:Z:1.0\nS\t1\tACGTACGTAC\nS\t2\tG\nS\t3\tT\nS\t4\tACGTTTGACA\nL\t1\t+\t2\t+\t0M\nL\t1\t+\t3\t+\t0M\nL\t2\t+\t4\t+\t0M\nL\t3\t+\t4\t+\t0M\n";

#[test]
fn build_graph_reports_counts_and_size() {
    let dir = TempDir::new().unwrap();
    let gfa = dir.path().join("g.gfa");
    let gg = dir.path().join("g.gg");
    fs::write(&gfa, SMALL_GFA).unwrap();
    let line = ok(&["build-graph", s(&gfa), "-o", s(&gg)]);
    assert_eq!(field(&line, "nodes"), "4");
    assert_eq!(field(&line, "edges"), "4");
    assert_eq!(field(&line, "chars"), "22");
    let size = fs::metadata(&gg).unwrap().len();
    assert_eq!(field(&line, "bytes"), size.to_string());
    assert_eq!(size, 32 + 4 * 32 + 4 * 4 + 6);
}

#[test]
fn build_graph_reads_gzip() {
    let dir = TempDir::new().unwrap();
    let gz = dir.path().join("g.gfa.gz");
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(SMALL_GFA.as_bytes()).unwrap();
    fs::write(&gz, enc.finish().unwrap()).unwrap();
    let line = ok(&["build-graph", s(&gz), "-o", s(&dir.path().join("g.gg"))]);
    assert_eq!(field(&line, "nodes"), "4");
}

#[test]
fn unsorted_gfa_is_resorted() {
    let dir = TempDir::new().unwrap();
    let gfa = dir.path().join("g.gfa");
    fs::write(&gfa, "S\tb\tCC\nS\ta\tAA\nL\ta\t+\tb\t+\t0M\n").unwrap();
    let line = ok(&["build-graph", s(&gfa), "-o", s(&dir.path().join("g.gg"))]);
    assert_eq!(field(&line, "resorted"), "true");
}

#[test]
fn cyclic_or_malformed_gfa_is_a_parse_failure() {
    let dir = TempDir::new().unwrap();
    let gg = dir.path().join("g.gg");
    for (name, text) in [
        (
            "cycle.gfa",
            "S\t1\tA\nS\t2\tC\nL\t1\t+\t2\t+\t0M\nL\t2\t+\t1\t+\t0M\n",
        ),
        ("bad_base.gfa", "S\t1\tAXG\n"),
        ("dangling.gfa", "S\t1\tA\nL\t1\t+\t9\t+\t0M\n"),
    ] {
        let gfa = dir.path().join(name);
        fs::write(&gfa, text).unwrap();
        let out = graphmap(&["build-graph", s(&gfa), "-o", s(&gg)]);
        assert_eq!(out.status.code(), Some(3), "{name}");
    }
    let out = graphmap(&[
        "build-graph",
        s(&dir.path().join("missing.gfa")),
        "-o",
        s(&gg),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn index_file_matches_footprint_and_rebuilds_identically() {
    let f = Fixture::simulated(5_000, 1);
    let (gg, a, b) = (f.gg.clone(), f.path("a.idx"), f.path("b.idx"));
    let line = ok(&["build-index", s(&gg), "-o", s(&a), "--bucket-bits", "10"]);
    ok(&["build-index", s(&gg), "-o", s(&b), "--bucket-bits", "10"]);
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let minimizers: u64 = field(&line, "distinct_minimizers").parse().unwrap();
    let locations: u64 = field(&line, "total_locations").parse().unwrap();
    assert_eq!(
        bytes.len() as u64,
        40 + 4 * (1 << 10) + 12 * minimizers + 8 * locations
    );
    assert_eq!(field(&line, "bytes"), bytes.len().to_string());
}

#[test]
fn window_one_selects_every_kmer() {
    let f = Fixture::simulated(2_000, 1);
    let line = ok(&[
        "build-index",
        s(&f.gg),
        "-o",
        s(&f.path("w1.idx")),
        "-w",
        "1",
        "-k",
        "15",
    ]);
    // K-mers stay inside nodes, so every node contributes len - k + 1.
    let expected: usize = fs::read_to_string(&f.gfa)
        .unwrap()
        .lines()
        .filter_map(|l| l.strip_prefix("S\t"))
        .map(|l| l.split('\t').nth(1).unwrap().len().saturating_sub(14))
        .sum();
    assert_eq!(field(&line, "total_locations"), expected.to_string());
}

#[test]
fn invalid_settings_are_config_failures() {
    let f = Fixture::simulated(2_000, 2);
    let (gg, idx, fa, x) = (f.gg.clone(), f.idx.clone(), f.fa.clone(), f.path("x.idx"));
    let cases: [&[&str]; 4] = [
        &[
            "map",
            s(&gg),
            s(&idx),
            s(&fa),
            "--window",
            "64",
            "--overlap",
            "64",
        ],
        &["map", s(&gg), s(&idx), s(&fa), "--window", "200"],
        &["map", s(&gg), s(&idx), s(&fa), "-E", "1.5"],
        &["build-index", s(&gg), "-o", s(&x), "-k", "40"],
    ];
    for args in cases {
        assert_eq!(graphmap(args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(graphmap(&["map"]).status.code(), Some(2));
    assert_eq!(
        graphmap(&["map", s(&idx), s(&idx), s(&fa)]).status.code(),
        Some(3)
    );
}

fn records(tsv: &str) -> Vec<Vec<&str>> {
    tsv.lines().map(|l| l.split('\t').collect()).collect()
}

#[test]
fn simulated_exact_reads_map_to_their_origin() {
    let f = Fixture::simulated(20_000, 100);
    let tsv = ok(&["map", s(&f.gg), s(&f.idx), s(&f.fa), "--verify"]);
    let recs = records(&tsv);
    assert_eq!(recs.len(), 100);
    let exact = recs
        .iter()
        .filter(|r| r[1] == "mapped" && r[4] == "0")
        .count();
    assert!(exact >= 99, "only {exact}/100 mapped with distance 0");
    for r in &recs {
        assert_eq!(r.len(), 8);
    }
}

#[test]
fn noisy_fastq_reads_map_and_verify() {
    let f = Fixture::simulated(20_000, 1);
    let fq = f.path("r.fq");
    ok(&[
        "simulate",
        "--seed",
        "5",
        "reads",
        s(&f.gg),
        "--count",
        "60",
        "--min-len",
        "300",
        "--max-len",
        "800",
        "--error-rate",
        "0.03",
        "--fastq",
        "-o",
        s(&fq),
    ]);
    let tsv = ok(&["map", s(&f.gg), s(&f.idx), s(&fq), "--verify", "--gaf-like"]);
    let recs = records(&tsv);
    assert_eq!(recs.len(), 60);
    let mapped: Vec<_> = recs.iter().filter(|r| r[1] == "mapped").collect();
    assert!(mapped.len() >= 57, "{} mapped", mapped.len());
    for r in mapped {
        assert_eq!(r.len(), 9);
        assert!(r[8].starts_with('>'));
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let f = Fixture::simulated(10_000, 80);
    let base = ["map", s(&f.gg), s(&f.idx), s(&f.fa)];
    let one = ok(&[&base[..], &["--threads", "1"]].concat());
    let many = ok(&[&base[..], &["--threads", "4"]].concat());
    assert_eq!(one, many);
}

#[test]
fn empty_and_gzipped_read_files() {
    let f = Fixture::simulated(5_000, 10);
    let (gg, idx) = (f.gg.clone(), f.idx.clone());
    let empty = f.path("empty.fa");
    fs::write(&empty, "").unwrap();
    assert_eq!(ok(&["map", s(&gg), s(&idx), s(&empty)]), "");

    let fa = fs::read(f.fa.clone()).unwrap();
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&fa).unwrap();
    let gz = f.path("r.fa.gz");
    fs::write(&gz, enc.finish().unwrap()).unwrap();
    assert_eq!(
        ok(&["map", s(&gg), s(&idx), s(&gz)]),
        ok(&["map", s(&gg), s(&idx), s(&f.fa)])
    );
}

#[test]
fn reads_with_ambiguous_bases_are_skipped() {
    let f = Fixture::simulated(5_000, 1);
    let fa = f.path("n.fa");
    fs::write(
        &fa,
        ">withN some description\nACGTNACGTACGTACGTACGT\n>short\nACG\n",
    )
    .unwrap();
    let tsv = ok(&["map", s(&f.gg), s(&f.idx), s(&fa)]);
    let recs = records(&tsv);
    assert_eq!(recs[0][0], "withN");
    assert_eq!(recs[0][1], "skipped");
    assert_eq!(recs[1][0], "short");
    assert_eq!(recs[1][1], "unmapped");
}

#[test]
fn perf_report_cycle_counts() {
    let kv = ok(&["perf-report", "--compare", "--format", "kv"]);
    let get = |key: &str| {
        kv.lines()
            .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .unwrap_or_else(|| panic!("no {key} in\n{kv}"))
            .to_string()
    };
    assert_eq!(get("windows"), "125");
    assert_eq!(get("total_cycles"), "34000");
    assert_eq!(get("baseline.windows"), "250");
    assert_eq!(get("baseline.total_cycles"), "42250");
    let ratio: f64 = get("cycle_ratio").parse().unwrap();
    assert!((ratio - 1.24).abs() < 0.01, "{ratio}");

    let text = ok(&["perf-report", "--read-len", "176"]);
    assert!(text.contains("windows: 2\n"), "{text}");
    assert_eq!(
        graphmap(&["perf-report", "--window", "96", "--overlap", "96"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulation_is_seeded() {
    let dir = TempDir::new().unwrap();
    let run = |seed: &str, name: &str| {
        let p = dir.path().join(name);
        ok(&[
            "simulate",
            "--seed",
            seed,
            "graph",
            "--length",
            "3000",
            "-o",
            s(&p),
        ]);
        fs::read(p).unwrap()
    };
    assert_eq!(run("3", "a.gfa"), run("3", "b.gfa"));
    assert_ne!(run("3", "a.gfa"), run("4", "c.gfa"));
}
