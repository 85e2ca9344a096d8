//! Block-partitioned, multi-threaded scan over a prime range, with
//! crash-safe checkpointing and deterministic results.
//!
//! The range `[from, to]` is cut into fixed-size blocks. Worker threads
//! claim blocks through an atomic counter and scan every prime in their
//! block independently; a merger collapses finished blocks back into
//! range order. Because each block's result is a pure function of the
//! configuration, the assembled output is byte-for-byte identical across
//! worker counts and across interrupted-and-resumed runs -- only wall
//! time may differ.
//!
//! Checkpointing writes two files next to each other: the checkpoint
//! line itself (config digest, last completed block, first hit above 5)
//! and a `.records` JSONL sidecar holding one line per completed block
//! with that block's full per-prime records. The sidecar is appended
//! before the checkpoint line is atomically replaced, so a crash at any
//! point leaves a resumable pair: over-run or torn sidecar lines past
//! the checkpointed prefix are discarded on resume.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write as _};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{rs_filter, trudgian_filter, DEFAULT_CUBIC_CAP};
use crate::modmath::{primes_in_range, Modulus};
use crate::scan::{scan_prime, ScanBuffer, ScanMode};

/// Default block width for [`SearchConfig`].
pub const DEFAULT_BLOCK_SIZE: u64 = 1 << 16;

/// Screen verdicts attached to a scanned prime (annotation only; no
/// prime is ever skipped based on them).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterAnnotation {
    /// Rokowska-Schnitzel screen verdict.
    pub rs: bool,
    /// Trudgian screen verdict; absent when the screen gives no verdict
    /// (divisors of 1957) or its root search was capped.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trudgian: Option<bool>,
}

/// Per-prime scan outcome as stored in reports and checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub p: u64,
    pub socialist: bool,
    /// `[k1, k2, residue]` of the earliest collision, absent for hits.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub collision: Option<[u64; 3]>,
    /// Factorial terms evaluated before the scan stopped.
    pub steps: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub filters: Option<FilterAnnotation>,
}

/// Step statistics for all scanned primes sharing a decimal magnitude.
///
/// Median and the 90th percentile use the nearest-rank convention on the
/// sorted step counts (lower median; rank `ceil(0.9 n)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    /// Bucket holds primes with `10^decade <= p < 10^(decade+1)`.
    pub decade: u32,
    pub count: u64,
    pub min_steps: u64,
    pub max_steps: u64,
    pub mean_steps: f64,
    pub median_steps: u64,
    pub p90_steps: u64,
}

/// Aggregated outcome of a search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummary {
    pub from: u64,
    pub to: u64,
    pub primes_scanned: u64,
    /// Socialist primes found, ascending (5 included when in range).
    pub socialist: Vec<u64>,
    pub buckets: Vec<BucketStats>,
    pub blocks_done: u64,
    pub total_blocks: u64,
    /// False when `stop_after_blocks` halted the run early.
    pub complete: bool,
}

/// Everything a finished (or stopped) run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub summary: SearchSummary,
    /// One record per scanned prime, ascending by `p`.
    pub records: Vec<ScanRecord>,
}

/// Search parameters. Only `from`, `to`, `block_size`, `mode` and
/// `filters` shape the results (and enter the checkpoint digest);
/// everything else affects scheduling and persistence.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub from: u64,
    pub to: u64,
    pub block_size: u64,
    pub mode: ScanMode,
    /// Attach screen annotations to each record (primes above 5).
    pub filters: bool,
    /// Worker threads; 0 means the `SOCPRIMES_WORKERS` environment
    /// variable, falling back to available parallelism.
    pub workers: usize,
    /// Checkpoint file; its `.records` sidecar lives alongside.
    pub checkpoint: Option<PathBuf>,
    /// Test hook: stop after completing this many new blocks.
    pub stop_after_blocks: Option<u64>,
}

impl SearchConfig {
    pub fn new(from: u64, to: u64) -> SearchConfig {
        SearchConfig {
            from,
            to,
            block_size: DEFAULT_BLOCK_SIZE,
            mode: ScanMode::EarlyExit,
            filters: false,
            workers: 0,
            checkpoint: None,
            stop_after_blocks: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.from < 5 {
            return fail(format!("from = {} but scans start at 5", self.from));
        }
        if self.to < self.from {
            return fail(format!("empty range [{}, {}]", self.from, self.to));
        }
        if self.to >= 1 << 63 {
            return fail(format!("to = {} exceeds the modulus domain", self.to));
        }
        if self.block_size == 0 {
            return fail("block_size must be at least 1".into());
        }
        Ok(())
    }

    /// Number of blocks covering `[from, to]`.
    pub fn total_blocks(&self) -> u64 {
        let span = (self.to - self.from) as u128 + 1;
        span.div_ceil(self.block_size as u128) as u64
    }

    /// Inclusive bounds of one block.
    pub fn block_bounds(&self, block: u64) -> (u64, u64) {
        let lo = self.from as u128 + block as u128 * self.block_size as u128;
        let hi = (lo + self.block_size as u128 - 1).min(self.to as u128);
        (lo as u64, hi as u64)
    }

    /// FNV-1a digest of the result-shaping fields, used to tie a
    /// checkpoint to the configuration that produced it.
    pub fn digest(&self) -> u64 {
        let mut h = 0xcbf29ce484222325u64;
        let mut eat = |v: u64| {
            for byte in v.to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.from);
        eat(self.to);
        eat(self.block_size);
        eat(match self.mode {
            ScanMode::EarlyExit => 0,
            ScanMode::Full => 1,
        });
        eat(self.filters as u64);
        h
    }

    /// Resolve the worker-thread count.
    pub fn effective_workers(&self) -> usize {
        if self.workers > 0 {
            return self.workers;
        }
        if let Ok(value) = std::env::var("SOCPRIMES_WORKERS") {
            if let Ok(n) = value.parse::<usize>() {
                if n > 0 {
                    return n;
                }
            }
        }
        thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

/// State stored in the one-line checkpoint file:
/// `"{digest:016x} {last_block} {first_socialist_above_5 | -}"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint {
    pub digest: u64,
    pub last_block: u64,
    pub first_socialist: Option<u64>,
}

impl Checkpoint {
    pub fn render(&self) -> String {
        let hit = match self.first_socialist {
            Some(p) => p.to_string(),
            None => "-".to_string(),
        };
        format!("{:016x} {} {}\n", self.digest, self.last_block, hit)
    }

    pub fn parse(text: &str) -> Option<Checkpoint> {
        let mut parts = text.split_whitespace();
        let digest = u64::from_str_radix(parts.next()?, 16).ok()?;
        let last_block = parts.next()?.parse().ok()?;
        let first_socialist = match parts.next()? {
            "-" => None,
            n => Some(n.parse().ok()?),
        };
        if parts.next().is_some() {
            return None;
        }
        Some(Checkpoint {
            digest,
            last_block,
            first_socialist,
        })
    }

    /// Read a checkpoint; `Ok(None)` when the file does not exist.
    pub fn load(path: &Path) -> Result<Option<Checkpoint>> {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        match Checkpoint::parse(&text) {
            Some(ck) => Ok(Some(ck)),
            None => Err(Error::CheckpointCorrupt {
                path: path.to_path_buf(),
                reason: "unparseable checkpoint line".into(),
            }),
        }
    }

    pub fn store(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// The JSONL records sidecar accompanying a checkpoint.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    let mut name = checkpoint
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".records");
    checkpoint.with_file_name(name)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct SidecarLineRef<'a> {
    block: u64,
    records: &'a [ScanRecord],
}

#[derive(Deserialize)]
struct SidecarLine {
    block: u64,
    records: Vec<ScanRecord>,
}

/// Read blocks `0..=last_block` from a sidecar, ignoring over-run lines
/// past the checkpointed prefix and a torn final line (both are normal
/// crash artifacts); anything else inconsistent is corruption.
fn read_sidecar(path: &Path, last_block: u64) -> Result<Vec<Vec<ScanRecord>>> {
    let corrupt = |reason: String| Error::CheckpointCorrupt {
        path: path.to_path_buf(),
        reason,
    };
    let file = match fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(corrupt("records sidecar missing".into()))
        }
        Err(e) => return Err(Error::io(path, e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;

    let mut blocks: Vec<Option<Vec<ScanRecord>>> = Vec::new();
    blocks.resize_with((last_block + 1) as usize, || None);
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<SidecarLine>(line) {
            Ok(sl) => {
                if sl.block > last_block {
                    continue;
                }
                let slot = &mut blocks[sl.block as usize];
                if slot.is_some() {
                    return Err(corrupt(format!("duplicate sidecar block {}", sl.block)));
                }
                *slot = Some(sl.records);
            }
            Err(e) if i + 1 == lines.len() => {
                // Torn tail from a crash mid-append; the checkpoint line
                // never covered it.
                let _ = e;
            }
            Err(e) => return Err(corrupt(format!("sidecar line {}: {e}", i + 1))),
        }
    }
    blocks
        .into_iter()
        .enumerate()
        .map(|(b, slot)| slot.ok_or_else(|| corrupt(format!("sidecar is missing block {b}"))))
        .collect()
}

fn rewrite_sidecar(path: &Path, blocks: &[Vec<ScanRecord>]) -> Result<()> {
    let mut out = String::new();
    for (block, records) in blocks.iter().enumerate() {
        let line = serde_json::to_string(&SidecarLineRef {
            block: block as u64,
            records,
        })
        .expect("records serialize");
        out.push_str(&line);
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Scan every prime in one block. Pure in the configuration, so blocks
/// can be computed on any worker in any order.
fn scan_block(cfg: &SearchConfig, block: u64, buf: &mut ScanBuffer) -> Result<Vec<ScanRecord>> {
    let (lo, hi) = cfg.block_bounds(block);
    let mut out = Vec::new();
    for p in primes_in_range(lo, hi) {
        let pm = Modulus::new(p)?;
        let mut res = scan_prime(pm, cfg.mode, buf)?;
        if res.socialist && p > 5 {
            // A hit would be extraordinary; confirm with a full scan
            // before letting it into the results.
            res = scan_prime(pm, ScanMode::Full, buf)?;
        }
        let filters = if cfg.filters && p > 5 {
            let report = match trudgian_filter(pm, DEFAULT_CUBIC_CAP) {
                Ok(report) => report,
                Err(Error::CapExceeded { .. }) => rs_filter(pm)?,
                Err(e) => return Err(e),
            };
            Some(FilterAnnotation {
                rs: report.rs_pass,
                trudgian: report.trudgian_pass,
            })
        } else {
            None
        };
        out.push(ScanRecord {
            p,
            socialist: res.socialist,
            collision: res.first_collision.map(|c| [c.k1, c.k2, c.residue]),
            steps: res.steps,
            filters,
        });
    }
    Ok(out)
}

/// Compute the summary for a set of records.
pub fn summarize(
    cfg: &SearchConfig,
    records: &[ScanRecord],
    blocks_done: u64,
) -> SearchSummary {
    let socialist: Vec<u64> = records.iter().filter(|r| r.socialist).map(|r| r.p).collect();
    let mut by_decade: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for r in records {
        by_decade.entry(r.p.ilog10()).or_default().push(r.steps);
    }
    let buckets = by_decade
        .into_iter()
        .map(|(decade, mut steps)| {
            steps.sort_unstable();
            let n = steps.len();
            BucketStats {
                decade,
                count: n as u64,
                min_steps: steps[0],
                max_steps: steps[n - 1],
                mean_steps: steps.iter().sum::<u64>() as f64 / n as f64,
                median_steps: steps[(n - 1) / 2],
                p90_steps: steps[(9 * n + 9) / 10 - 1],
            }
        })
        .collect();
    let total_blocks = cfg.total_blocks();
    SearchSummary {
        from: cfg.from,
        to: cfg.to,
        primes_scanned: records.len() as u64,
        socialist,
        buckets,
        blocks_done,
        total_blocks,
        complete: blocks_done == total_blocks,
    }
}

struct Persist {
    checkpoint_path: PathBuf,
    sidecar: fs::File,
    sidecar_file: PathBuf,
    digest: u64,
    first_socialist: Option<u64>,
}

impl Persist {
    fn append_block(&mut self, block: u64, records: &[ScanRecord]) -> Result<()> {
        for r in records {
            if r.socialist && r.p > 5 && self.first_socialist.is_none() {
                self.first_socialist = Some(r.p);
            }
        }
        let line =
            serde_json::to_string(&SidecarLineRef { block, records }).expect("records serialize");
        writeln!(self.sidecar, "{line}").map_err(|e| Error::io(&self.sidecar_file, e))?;
        self.sidecar
            .flush()
            .map_err(|e| Error::io(&self.sidecar_file, e))?;
        Checkpoint {
            digest: self.digest,
            last_block: block,
            first_socialist: self.first_socialist,
        }
        .store(&self.checkpoint_path)
    }
}

/// Run a search to completion (or to the `stop_after_blocks` hook).
///
/// When the configured checkpoint file already exists, the run resumes
/// behind it: the digest must match, completed blocks are replayed from
/// the sidecar instead of rescanned, and the final outcome is identical
/// to an uninterrupted run.
pub fn run_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    cfg.validate()?;
    let digest = cfg.digest();
    let total_blocks = cfg.total_blocks();

    // Resume state.
    let mut done_records: Vec<ScanRecord> = Vec::new();
    let mut start_block = 0u64;
    let mut first_socialist: Option<u64> = None;
    let mut persist: Option<Persist> = None;

    if let Some(ckpt_path) = &cfg.checkpoint {
        let sidecar_file = sidecar_path(ckpt_path);
        if let Some(ck) = Checkpoint::load(ckpt_path)? {
            if ck.digest != digest {
                return Err(Error::CheckpointMismatch {
                    expected: format!("{digest:016x}"),
                    found: format!("{:016x}", ck.digest),
                });
            }
            if ck.last_block >= total_blocks {
                return Err(Error::CheckpointCorrupt {
                    path: ckpt_path.clone(),
                    reason: format!(
                        "checkpoint block {} out of range ({} blocks total)",
                        ck.last_block, total_blocks
                    ),
                });
            }
            let blocks = read_sidecar(&sidecar_file, ck.last_block)?;
            rewrite_sidecar(&sidecar_file, &blocks)?;
            for records in blocks {
                done_records.extend(records);
            }
            start_block = ck.last_block + 1;
            first_socialist = done_records
                .iter()
                .find(|r| r.socialist && r.p > 5)
                .map(|r| r.p);
            debug_assert_eq!(first_socialist, ck.first_socialist);
        } else {
            // Fresh run: start the sidecar empty.
            write_atomic(&sidecar_file, b"")?;
        }
        let sidecar = fs::OpenOptions::new()
            .append(true)
            .open(&sidecar_file)
            .map_err(|e| Error::io(&sidecar_file, e))?;
        persist = Some(Persist {
            checkpoint_path: ckpt_path.clone(),
            sidecar,
            sidecar_file,
            digest,
            first_socialist,
        });
    }

    let limit = match cfg.stop_after_blocks {
        Some(n) => total_blocks.min(start_block.saturating_add(n)),
        None => total_blocks,
    };

    let next = AtomicU64::new(start_block);
    let workers = cfg.effective_workers();
    let new_records = thread::scope(|s| -> Result<Vec<ScanRecord>> {
        let (tx, rx) = mpsc::channel::<(u64, Result<Vec<ScanRecord>>)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            s.spawn(move || {
                let mut buf = ScanBuffer::new();
                loop {
                    let block = next.fetch_add(1, Ordering::Relaxed);
                    if block >= limit {
                        break;
                    }
                    let out = scan_block(cfg, block, &mut buf);
                    if tx.send((block, out)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);

        let mut collected = Vec::new();
        let mut pending: BTreeMap<u64, Vec<ScanRecord>> = BTreeMap::new();
        let mut next_emit = start_block;
        for (block, result) in rx {
            pending.insert(block, result?);
            while let Some(records) = pending.remove(&next_emit) {
                if let Some(p) = persist.as_mut() {
                    p.append_block(next_emit, &records)?;
                }
                collected.extend(records);
                next_emit += 1;
            }
        }
        debug_assert!(pending.is_empty());
        Ok(collected)
    })?;

    let mut records = done_records;
    records.extend(new_records);
    let summary = summarize(cfg, &records, limit);
    Ok(SearchOutcome { summary, records })
}

/// Like [`run_search`], but requires an existing checkpoint to pick up.
pub fn resume_search(cfg: &SearchConfig) -> Result<SearchOutcome> {
    let Some(ckpt_path) = &cfg.checkpoint else {
        return Err(Error::InvalidConfig(
            "resume requested without a checkpoint path".into(),
        ));
    };
    if Checkpoint::load(ckpt_path)?.is_none() {
        return Err(Error::CheckpointMissing(ckpt_path.clone()));
    }
    run_search(cfg)
}
