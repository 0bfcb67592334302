//! Analytical cycle and storage model of the seeding/alignment accelerator.
//!
//! Per-window cycle counts are calibration constants, not derived from a
//! microarchitectural model. Everything else is closed-form arithmetic.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::graphref::{graph_file_bytes, GraphStats};
use crate::index::{index_file_bytes, IndexStats};

pub const KIB: u64 = 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PerfError {
    #[error("window width {width} must exceed overlap {overlap}")]
    Window { width: usize, overlap: usize },
    #[error("no cycle calibration for window width {0}")]
    MissingCalibration(usize),
    #[error("invalid accelerator config: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcceleratorConfig {
    pub pe_count: u64,
    pub bits_per_pe: u64,
    pub clock_ghz: f64,
    pub window: usize,
    pub overlap: usize,
    pub hop_limit: u64,
    pub hop_queue_depth: u64,
    pub accelerators_per_stack: u64,
    pub stacks: u64,
}

impl Default for AcceleratorConfig {
    fn default() -> Self {
        AcceleratorConfig {
            pe_count: 64,
            bits_per_pe: 128,
            clock_ghz: 1.0,
            window: 128,
            overlap: 48,
            hop_limit: 12,
            hop_queue_depth: 12,
            accelerators_per_stack: 8,
            stacks: 4,
        }
    }
}

impl AcceleratorConfig {
    /// The 64-bit, W=64 / O=24 configuration used for comparison with a
    /// sequence-to-sequence design.
    pub fn narrow() -> Self {
        AcceleratorConfig {
            bits_per_pe: 64,
            window: 64,
            overlap: 24,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PerfError> {
        let positive = [
            ("pe_count", self.pe_count),
            ("bits_per_pe", self.bits_per_pe),
            ("window", self.window as u64),
            ("hop_limit", self.hop_limit),
            ("hop_queue_depth", self.hop_queue_depth),
            ("accelerators_per_stack", self.accelerators_per_stack),
            ("stacks", self.stacks),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(PerfError::Config(format!("{name} must be positive")));
        }
        if self.clock_ghz.is_nan() || self.clock_ghz <= 0.0 {
            return Err(PerfError::Config("clock_ghz must be positive".into()));
        }
        if !self.bits_per_pe.is_multiple_of(8) {
            return Err(PerfError::Config(
                "bits_per_pe must be a multiple of 8".into(),
            ));
        }
        if self.window as u64 > self.bits_per_pe {
            return Err(PerfError::Config(format!(
                "window {} exceeds bitvector width {}",
                self.window, self.bits_per_pe
            )));
        }
        if self.overlap >= self.window {
            return Err(PerfError::Window {
                width: self.window,
                overlap: self.overlap,
            });
        }
        Ok(())
    }

    pub fn accelerators(&self) -> u64 {
        self.accelerators_per_stack * self.stacks
    }
}

/// Cycles per window execution, keyed by window width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleCalibration {
    pub cycles_per_window: BTreeMap<usize, u64>,
}

impl Default for CycleCalibration {
    fn default() -> Self {
        CycleCalibration {
            cycles_per_window: BTreeMap::from([(64, 169), (128, 272)]),
        }
    }
}

impl CycleCalibration {
    pub fn get(&self, width: usize) -> Result<u64, PerfError> {
        self.cycles_per_window
            .get(&width)
            .copied()
            .ok_or(PerfError::MissingCalibration(width))
    }
}

/// `1 + ceil(max(0, read_len - width) / (width - overlap))`.
pub fn window_count(read_len: u64, width: usize, overlap: usize) -> Result<u64, PerfError> {
    if width <= overlap {
        return Err(PerfError::Window { width, overlap });
    }
    let advance = (width - overlap) as u64;
    Ok(1 + read_len.saturating_sub(width as u64).div_ceil(advance))
}

pub fn total_cycles(
    read_len: u64,
    cfg: &AcceleratorConfig,
    calib: &CycleCalibration,
) -> Result<u64, PerfError> {
    Ok(window_count(read_len, cfg.window, cfg.overlap)? * calib.get(cfg.window)?)
}

/// One scratchpad or register file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BufferSize {
    pub name: &'static str,
    /// Bytes per instance (per PE for per-PE buffers).
    pub each: u64,
    pub instances: u64,
    /// Raw demand behind a provisioned size, when one is known.
    pub demand: Option<u64>,
}

impl BufferSize {
    pub fn total(&self) -> u64 {
        self.each * self.instances
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScratchpadReport {
    pub read: BufferSize,
    pub minimizer: BufferSize,
    pub seed: BufferSize,
    pub input: BufferSize,
    pub bitvector: BufferSize,
    pub hop_queue: BufferSize,
    /// Bytes written to each PE's bitvector scratchpad and hop queue per cycle.
    pub pe_write_bytes_per_cycle: u64,
}

impl ScratchpadReport {
    pub fn buffers(&self) -> [&BufferSize; 6] {
        [
            &self.read,
            &self.minimizer,
            &self.seed,
            &self.input,
            &self.bitvector,
            &self.hop_queue,
        ]
    }
}

// Seeding-side buffers are double-buffered and sized for the largest
// inputs seen: two 10 kbp reads at 2 bits per base, two reads of up to 2050
// minimizers at 10 B each, and two minimizers of up to 242 locations at 8 B.
const READ_SCRATCHPAD: u64 = 6 * KIB;
const READ_DEMAND: u64 = 2 * 10_000 * 2 / 8;
const MINIMIZER_SCRATCHPAD: u64 = 40 * KIB;
const MINIMIZER_DEMAND: u64 = 2 * 2050 * 10;
const SEED_SCRATCHPAD: u64 = 4 * KIB;
const SEED_DEMAND: u64 = 2 * 242 * 8;
const INPUT_SCRATCHPAD: u64 = 24 * KIB;

/// Buffer sizing for `cfg`. Per-PE bitvector storage holds `bits_per_pe`
/// vectors of `bits_per_pe` bits; each hop queue holds `hop_queue_depth`
/// vectors.
pub fn scratchpad_report(cfg: &AcceleratorConfig) -> ScratchpadReport {
    let vector_bytes = cfg.bits_per_pe / 8;
    let single = |name, each, demand| BufferSize {
        name,
        each,
        instances: 1,
        demand,
    };
    ScratchpadReport {
        read: single("read", READ_SCRATCHPAD, Some(READ_DEMAND)),
        minimizer: single("minimizer", MINIMIZER_SCRATCHPAD, Some(MINIMIZER_DEMAND)),
        seed: single("seed", SEED_SCRATCHPAD, Some(SEED_DEMAND)),
        input: single("input", INPUT_SCRATCHPAD, None),
        bitvector: BufferSize {
            name: "bitvector",
            each: cfg.bits_per_pe * vector_bytes,
            instances: cfg.pe_count,
            demand: None,
        },
        hop_queue: BufferSize {
            name: "hop_queue",
            each: cfg.hop_queue_depth * vector_bytes,
            instances: cfg.pe_count,
            demand: None,
        },
        pe_write_bytes_per_cycle: vector_bytes,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FootprintReport {
    pub graph_bytes: u64,
    pub index_bytes: u64,
}

impl FootprintReport {
    pub fn total(&self) -> u64 {
        self.graph_bytes + self.index_bytes
    }
}

/// Serialized sizes, headers included, of a graph and an index with the
/// given statistics.
pub fn footprint_report(graph: GraphStats, index: &IndexStats) -> FootprintReport {
    FootprintReport {
        graph_bytes: graph_file_bytes(graph),
        index_bytes: index_file_bytes(index),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PerfReport {
    pub read_len: u64,
    pub config: AcceleratorConfig,
    pub windows: u64,
    pub cycles_per_window: u64,
    pub total_cycles: u64,
    pub time_us: f64,
    /// `clock / total_cycles * accelerators`; not validated against hardware.
    pub reads_per_sec_estimate: f64,
    pub scratchpads: ScratchpadReport,
}

pub fn perf_report(
    read_len: u64,
    cfg: &AcceleratorConfig,
    calib: &CycleCalibration,
) -> Result<PerfReport, PerfError> {
    cfg.validate()?;
    let windows = window_count(read_len, cfg.window, cfg.overlap)?;
    let cycles_per_window = calib.get(cfg.window)?;
    let total = windows * cycles_per_window;
    let hz = cfg.clock_ghz * 1e9;
    Ok(PerfReport {
        read_len,
        config: *cfg,
        windows,
        cycles_per_window,
        total_cycles: total,
        time_us: total as f64 / hz * 1e6,
        reads_per_sec_estimate: hz / total as f64 * cfg.accelerators() as f64,
        scratchpads: scratchpad_report(cfg),
    })
}

fn kib(bytes: u64) -> String {
    if bytes.is_multiple_of(KIB) {
        format!("{} KB", bytes / KIB)
    } else {
        format!("{bytes} B")
    }
}

impl PerfReport {
    /// Flat `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("read_len", self.read_len.to_string());
        kv("pe_count", c.pe_count.to_string());
        kv("bits_per_pe", c.bits_per_pe.to_string());
        kv("clock_ghz", c.clock_ghz.to_string());
        kv("window", c.window.to_string());
        kv("overlap", c.overlap.to_string());
        kv("hop_limit", c.hop_limit.to_string());
        kv("hop_queue_depth", c.hop_queue_depth.to_string());
        kv("accelerators", c.accelerators().to_string());
        kv("windows", self.windows.to_string());
        kv("cycles_per_window", self.cycles_per_window.to_string());
        kv("total_cycles", self.total_cycles.to_string());
        kv("time_us", format!("{:.3}", self.time_us));
        kv(
            "reads_per_sec_estimate_unvalidated",
            format!("{:.1}", self.reads_per_sec_estimate),
        );
        for b in self.scratchpads.buffers() {
            kv(
                &format!("scratchpad.{}.each_bytes", b.name),
                b.each.to_string(),
            );
            kv(
                &format!("scratchpad.{}.total_bytes", b.name),
                b.total().to_string(),
            );
        }
        kv(
            "pe_write_bytes_per_cycle",
            self.scratchpads.pe_write_bytes_per_cycle.to_string(),
        );
        s
    }
}

impl fmt::Display for PerfReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.config;
        writeln!(
            f,
            "config: {} PEs x {} bits, {} GHz, W={} O={}, hop limit {}, {} accelerators",
            c.pe_count,
            c.bits_per_pe,
            c.clock_ghz,
            c.window,
            c.overlap,
            c.hop_limit,
            c.accelerators()
        )?;
        writeln!(f, "read length: {} bp", self.read_len)?;
        writeln!(f, "windows: {}", self.windows)?;
        writeln!(f, "cycles per window: {}", self.cycles_per_window)?;
        writeln!(
            f,
            "total cycles: {} ({:.1} k), {:.3} us",
            self.total_cycles,
            self.total_cycles as f64 / 1000.0,
            self.time_us
        )?;
        writeln!(
            f,
            "reads/sec estimate (not validated): {:.1}",
            self.reads_per_sec_estimate
        )?;
        writeln!(f, "scratchpads:")?;
        for b in self.scratchpads.buffers() {
            write!(f, "  {:<10} {:>8}", b.name, kib(b.each))?;
            if b.instances > 1 {
                write!(f, " x {} = {}", b.instances, kib(b.total()))?;
            }
            if let Some(d) = b.demand {
                write!(f, " (demand {d} B)")?;
            }
            writeln!(f)?;
        }
        writeln!(
            f,
            "  per-PE write: {} B/cycle",
            self.scratchpads.pe_write_bytes_per_cycle
        )
    }
}

/// Cycle ratio of two configurations on the same read.
pub fn speedup(
    read_len: u64,
    slow: &AcceleratorConfig,
    fast: &AcceleratorConfig,
    calib: &CycleCalibration,
) -> Result<f64, PerfError> {
    Ok(total_cycles(read_len, slow, calib)? as f64 / total_cycles(read_len, fast, calib)? as f64)
}
