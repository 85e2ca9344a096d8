//! Deterministic report rendering.
//!
//! Reports are a pure function of the search outcome: same range, same
//! bytes, regardless of worker count or resume history. JSON is a single
//! compact line; CSV carries one row per record plus a trailing `#`
//! comment holding the summary as JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::search::{write_atomic, BucketStats, ScanRecord, SearchSummary};

/// On-disk report encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

/// Wrapper keeping the JSON stats object extensible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportStats {
    pub buckets: Vec<BucketStats>,
}

/// The complete JSON report document (field order is the wire order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub range: [u64; 2],
    pub primes_scanned: u64,
    pub socialist_found: Vec<u64>,
    pub stats: ReportStats,
    pub complete: bool,
    pub records: Vec<ScanRecord>,
}

/// The summary half of a report (everything but the records); also the
/// payload of the CSV trailer comment.
#[derive(Serialize)]
struct SummaryLine<'a> {
    range: [u64; 2],
    primes_scanned: u64,
    socialist_found: &'a [u64],
    stats: StatsRef<'a>,
    complete: bool,
}

#[derive(Serialize)]
struct StatsRef<'a> {
    buckets: &'a [BucketStats],
}

fn filtered<'a>(
    records: &'a [ScanRecord],
    anomalies_only: bool,
) -> impl Iterator<Item = &'a ScanRecord> {
    records.iter().filter(move |r| !anomalies_only || r.socialist)
}

/// Render the one-line JSON report (newline-terminated).
///
/// `anomalies_only` keeps only records of socialist primes; the summary
/// and statistics always cover every scanned prime.
pub fn render_json(summary: &SearchSummary, records: &[ScanRecord], anomalies_only: bool) -> String {
    let doc = ReportDoc {
        range: [summary.from, summary.to],
        primes_scanned: summary.primes_scanned,
        socialist_found: summary.socialist.clone(),
        stats: ReportStats {
            buckets: summary.buckets.clone(),
        },
        complete: summary.complete,
        records: filtered(records, anomalies_only).copied().collect(),
    };
    let mut out = serde_json::to_string(&doc).expect("report serializes");
    out.push('\n');
    out
}

/// Render the CSV report: a header, one row per record, and a final
/// `# {...}` comment carrying the summary as JSON. Screen columns appear
/// only when some record carries annotations; absent cells stay empty.
pub fn render_csv(summary: &SearchSummary, records: &[ScanRecord], anomalies_only: bool) -> String {
    let rows: Vec<&ScanRecord> = filtered(records, anomalies_only).collect();
    let with_filters = rows.iter().any(|r| r.filters.is_some());

    let mut out = String::new();
    out.push_str("p,socialist,k1,k2,residue,steps");
    if with_filters {
        out.push_str(",rs_pass,trudgian_pass");
    }
    out.push('\n');

    for r in rows {
        let [k1, k2, residue] = match r.collision {
            Some([a, b, c]) => [a.to_string(), b.to_string(), c.to_string()],
            None => [String::new(), String::new(), String::new()],
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            r.p, r.socialist, k1, k2, residue, r.steps
        ));
        if with_filters {
            match r.filters {
                Some(f) => {
                    let trudgian = f
                        .trudgian
                        .map(|t| t.to_string())
                        .unwrap_or_default();
                    out.push_str(&format!(",{},{}", f.rs, trudgian));
                }
                None => out.push_str(",,"),
            }
        }
        out.push('\n');
    }

    let line = SummaryLine {
        range: [summary.from, summary.to],
        primes_scanned: summary.primes_scanned,
        socialist_found: &summary.socialist,
        stats: StatsRef {
            buckets: &summary.buckets,
        },
        complete: summary.complete,
    };
    out.push_str("# ");
    out.push_str(&serde_json::to_string(&line).expect("summary serializes"));
    out.push('\n');
    out
}

/// Render in the chosen format.
pub fn render(
    format: ReportFormat,
    summary: &SearchSummary,
    records: &[ScanRecord],
    anomalies_only: bool,
) -> String {
    match format {
        ReportFormat::Json => render_json(summary, records, anomalies_only),
        ReportFormat::Csv => render_csv(summary, records, anomalies_only),
    }
}

/// Render and write atomically (temp file + rename).
pub fn write_report(
    path: &Path,
    format: ReportFormat,
    summary: &SearchSummary,
    records: &[ScanRecord],
    anomalies_only: bool,
) -> Result<()> {
    write_atomic(path, render(format, summary, records, anomalies_only).as_bytes())
}
