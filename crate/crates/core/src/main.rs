//! Command-line driver for the factorial-residue toolkit.
//!
//! Subcommands: `search` (range scan with checkpoints and reports),
//! `inspect` (single-prime detail), `pairings` (alternating-sign pairing
//! tables and their exhaustive enumeration), `filters` (quadratic-residue
//! screens), `verify` (re-check the structural identities on a range).
//!
//! All output is ASCII and deterministic for a fixed command line; the
//! only exception is the final `# wall_ms` line of `search`, which is
//! marked as a comment precisely so tooling can ignore it.
//!
//! Exit codes: 0 success, 1 usage/runtime error or failed verification,
//! 2 when a search finds a socialist prime above 5.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use socialist_primes::filters;
use socialist_primes::modmath::{mul_mod, simple_primes_up_to, Modulus};
use socialist_primes::pairing::{
    self, build_natural_system, derive_secondary, enumerate_systems, render_table,
    product_inequality_check, PairingSystem, ProductRelation, SystemStatus,
};
use socialist_primes::report::{self, ReportFormat};
use socialist_primes::scan::{self, ScanMode};
use socialist_primes::search::{self, SearchConfig};
use socialist_primes::{Error, Result};

#[derive(Parser)]
#[command(
    name = "socprimes",
    version,
    about = "Search and verification toolkit for primes with pairwise distinct factorial residues"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan a prime range for pairwise-distinct factorial residues.
    Search(SearchArgs),
    /// Examine one prime in detail.
    Inspect(InspectArgs),
    /// Build, scratch, or exhaustively enumerate pairing tables.
    Pairings(PairingsArgs),
    /// Evaluate the quadratic-residue screens for one prime.
    Filters(FiltersArgs),
    /// Re-verify the structural identities over a prime range.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum ModeArg {
    /// Stop each prime at its first collision.
    EarlyExit,
    /// Walk all of 2!..(p-1)! and report distinct counts.
    Full,
}

impl From<ModeArg> for ScanMode {
    fn from(m: ModeArg) -> ScanMode {
        match m {
            ModeArg::EarlyExit => ScanMode::EarlyExit,
            ModeArg::Full => ScanMode::Full,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Json => ReportFormat::Json,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args)]
struct SearchArgs {
    /// Lower end of the range (inclusive).
    #[arg(long, default_value_t = 7)]
    from: u64,
    /// Upper end of the range (inclusive).
    #[arg(long)]
    to: u64,
    /// Range values per work block.
    #[arg(long, default_value_t = search::DEFAULT_BLOCK_SIZE)]
    block_size: u64,
    /// How far to scan each prime.
    #[arg(long, value_enum, default_value_t = ModeArg::EarlyExit)]
    mode: ModeArg,
    /// Annotate each record with the quadratic-residue screens.
    #[arg(long)]
    filters: bool,
    /// Worker threads (0 = SOCPRIMES_WORKERS, else available parallelism).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Checkpoint file for crash-safe incremental runs.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Require an existing checkpoint and pick up behind it.
    #[arg(long, requires = "checkpoint")]
    resume: bool,
    /// Write the final report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Report encoding.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    /// Keep only socialist-prime records in the report.
    #[arg(long)]
    anomalies_only: bool,
    /// Stop after completing this many new blocks (testing hook).
    #[arg(long, hide = true)]
    stop_after_blocks: Option<u64>,
}

#[derive(Args)]
struct InspectArgs {
    /// The prime to examine.
    #[arg(long)]
    p: u64,
}

#[derive(Args)]
#[group(id = "which", required = true, multiple = false)]
struct PairingsMode {
    /// Print the greedy table (smallest unused value first).
    #[arg(long)]
    natural: bool,
    /// Print the greedy table with conflict rows scratched out.
    #[arg(long)]
    secondary: bool,
    /// Exhaustively enumerate consistent systems.
    #[arg(long)]
    enumerate: bool,
}

#[derive(Args)]
struct PairingsArgs {
    /// The prime (must be 1 mod 4).
    #[arg(long)]
    p: u64,
    #[command(flatten)]
    which: PairingsMode,
    /// Cap on solutions printed when enumerating (counting continues).
    #[arg(long, default_value_t = 8)]
    max_solutions: usize,
    /// Abort enumeration after this many milliseconds.
    #[arg(long)]
    timeout_ms: Option<u64>,
    /// Largest p for the exact factorial product comparison.
    #[arg(long, default_value_t = pairing::DEFAULT_PRODUCT_CAP)]
    product_cap: u64,
}

#[derive(Args)]
struct FiltersArgs {
    /// The prime to screen (must exceed 5).
    #[arg(long)]
    p: u64,
    /// Cap on p for the cubic root search.
    #[arg(long, default_value_t = filters::DEFAULT_CUBIC_CAP)]
    cap: u64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check all applicable primes up to this bound (at least 5).
    #[arg(long, default_value_t = 1000)]
    limit: u64,
    /// Separate bound for the exact factorial product family.
    #[arg(long, default_value_t = pairing::DEFAULT_PRODUCT_CAP)]
    product_limit: u64,
}

fn main() {
    // Die quietly when the output pipe closes (`socprimes ... | head`)
    // instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Search(args) => cmd_search(args),
        Cmd::Inspect(args) => cmd_inspect(args),
        Cmd::Pairings(args) => cmd_pairings(args),
        Cmd::Filters(args) => cmd_filters(args),
        Cmd::Verify(args) => cmd_verify(args),
    }
}

fn join_or_none(values: &[u64]) -> String {
    if values.is_empty() {
        "none".to_string()
    } else {
        values
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    }
}

fn cmd_search(args: SearchArgs) -> Result<i32> {
    let start = Instant::now();
    let cfg = SearchConfig {
        from: args.from,
        to: args.to,
        block_size: args.block_size,
        mode: args.mode.into(),
        filters: args.filters,
        workers: args.workers,
        checkpoint: args.checkpoint.clone(),
        stop_after_blocks: args.stop_after_blocks,
    };
    let outcome = if args.resume {
        search::resume_search(&cfg)?
    } else {
        search::run_search(&cfg)?
    };
    let s = &outcome.summary;
    println!("range {} {}", s.from, s.to);
    println!("primes_scanned {}", s.primes_scanned);
    println!("socialist {}", join_or_none(&s.socialist));
    for b in &s.buckets {
        println!(
            "bucket decade={} count={} min={} max={} mean={} median={} p90={}",
            b.decade, b.count, b.min_steps, b.max_steps, b.mean_steps, b.median_steps, b.p90_steps
        );
    }
    println!(
        "blocks {}/{} complete={}",
        s.blocks_done, s.total_blocks, s.complete
    );
    if let Some(path) = &args.report {
        if s.complete {
            report::write_report(
                path,
                args.format.into(),
                s,
                &outcome.records,
                args.anomalies_only,
            )?;
            println!("report {}", path.display());
        } else {
            eprintln!("run incomplete; report not written");
        }
    }
    println!("# wall_ms {}", start.elapsed().as_millis());
    Ok(if s.socialist.iter().any(|&p| p > 5) {
        2
    } else {
        0
    })
}

fn cmd_inspect(args: InspectArgs) -> Result<i32> {
    let p = Modulus::new(args.p)?;
    let res = scan::scan_once(p, ScanMode::Full)?;
    println!("p {}", res.p);
    println!("socialist {}", res.socialist);
    match res.first_collision {
        Some(c) => println!(
            "first_collision k1={} k2={} residue={}",
            c.k1, c.k2, c.residue
        ),
        None => println!("first_collision none"),
    }
    println!("steps {}", res.steps);
    println!("distinct {}", res.distinct_count.unwrap_or(0));
    match res.missing_residue {
        Some(r) => println!("missing_residue {r}"),
        None => println!("missing_residue none"),
    }
    // The residue -((p-1)/2)! mod p, which is the unique missing value
    // whenever the residues really are distinct.
    println!("missing_candidate {}", scan::missing_residue(p)?);
    let wilson = scan::wilson_chain_check(p);
    println!("wilson_ok {} checked={}", wilson.ok(), wilson.checked);
    match args.p % 4 {
        3 => {
            let c = scan::half_factorial_collision(p)?;
            println!(
                "half_factorial_collision k1={} k2={} residue={}",
                c.k1, c.k2, c.residue
            );
        }
        1 => {
            let tag = pairing::tag_equality(p)?;
            println!("tag i={} partner={} k={}", tag.i, tag.partner, tag.k);
        }
        _ => {}
    }
    println!("left_factorial {}", scan::left_factorial_mod(args.p, p)?);
    Ok(0)
}

fn print_system(sys: &PairingSystem) {
    print!("{}", render_table(sys));
    println!(
        "status {}",
        match sys.status {
            SystemStatus::Consistent => "consistent",
            SystemStatus::Broken => "broken",
        }
    );
}

fn print_defects(sys: &PairingSystem) {
    let conflicts: Vec<u64> = sys
        .rows
        .iter()
        .filter(|r| r.conflict)
        .map(|r| r.index)
        .collect();
    println!("conflicts {}", join_or_none(&conflicts));
    println!("duplicates {}", join_or_none(&sys.duplicates));
    println!("missing {}", join_or_none(&sys.missing));
}

fn print_exponents_and_product(sys: &PairingSystem, cap: u64) -> Result<()> {
    let counts = pairing::exponent_counts(sys);
    let fmt_counts = |m: &std::collections::BTreeMap<u64, u64>| {
        if m.is_empty() {
            "none".to_string()
        } else {
            m.iter()
                .map(|(j, n)| format!("{j}:{n}"))
                .collect::<Vec<_>>()
                .join(" ")
        }
    };
    println!("exponents_plus {}", fmt_counts(&counts.plus));
    println!("exponents_minus {}", fmt_counts(&counts.minus));
    match product_inequality_check(sys, cap) {
        Ok(check) => {
            println!("product_lhs {}", check.lhs);
            println!("product_rhs {}", check.rhs);
            println!(
                "product_relation {}",
                match check.relation {
                    ProductRelation::Equal => "equal",
                    ProductRelation::StrictlyGreater => "strictly_greater",
                }
            );
            println!("sign_residue_ok {}", check.sign_residue_ok);
        }
        Err(Error::CapExceeded { cap, .. }) => {
            println!("product skipped (p exceeds cap {cap})");
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn cmd_pairings(args: PairingsArgs) -> Result<i32> {
    let p = Modulus::new(args.p)?;
    println!("p {}", args.p);
    if args.which.natural {
        println!("table natural");
        let sys = build_natural_system(p)?;
        print_system(&sys);
        print_defects(&sys);
    } else if args.which.secondary {
        println!("table secondary");
        let sys = derive_secondary(&build_natural_system(p)?);
        print_system(&sys);
        println!("scratched {}", join_or_none(&sys.scratched));
        println!("missing {}", join_or_none(&sys.missing));
        print_exponents_and_product(&sys, args.product_cap)?;
    } else {
        let timeout = args.timeout_ms.map(Duration::from_millis);
        let res = enumerate_systems(p, args.max_solutions, timeout)?;
        println!("enumerate solutions={}", res.solution_count);
        println!("complete {}", res.complete);
        println!("nodes {}", res.nodes_visited);
        let expected: u64 = if args.p == 5 { 1 } else { 0 };
        println!("expectation {expected}");
        let verdict = if res.solution_count > expected {
            "DISCREPANCY"
        } else if res.complete && res.solution_count == expected {
            "AGREEMENT"
        } else {
            "INCONCLUSIVE"
        };
        println!("verdict {verdict}");
        for (i, sys) in res.solutions.iter().enumerate() {
            println!("system {}", i + 1);
            print!("{}", render_table(sys));
        }
    }
    Ok(0)
}

fn cmd_filters(args: FiltersArgs) -> Result<i32> {
    let p = Modulus::new(args.p)?;
    let rep = match filters::trudgian_filter(p, args.cap) {
        Ok(rep) => rep,
        Err(Error::CapExceeded { .. }) => filters::rs_filter(p)?,
        Err(e) => return Err(e),
    };
    println!("p {}", rep.p);
    println!("mod8 {}", rep.mod8_class);
    println!("rs_mod8_is_5 {}", rep.rs_components.mod8_is_5);
    println!("rs_legendre5_is_minus1 {}", rep.rs_components.legendre5_is_minus1);
    println!(
        "rs_legendre_neg23_is_plus1 {}",
        rep.rs_components.legendre_neg23_is_plus1
    );
    println!("rs_pass {}", rep.rs_pass);
    println!("trudgian_evaluated {}", rep.trudgian_evaluated);
    if let Some(sym) = rep.legendre_1957 {
        println!("legendre_1957 {sym}");
    }
    if let Some(roots) = &rep.cubic_roots {
        if roots.is_empty() {
            println!("cubic_roots -");
        } else {
            println!("cubic_roots {}", join_or_none(roots));
        }
    }
    if rep.trudgian_evaluated {
        match rep.trudgian_pass {
            Some(v) => println!("trudgian_pass {v}"),
            None => println!("trudgian_pass none"),
        }
    }
    Ok(0)
}

/// `k! mod p` by direct multiplication -- the independent cross-check
/// used by the verification families.
fn fact_mod(k: u64, p: Modulus) -> u64 {
    (2..=k).fold(1u64, |acc, i| mul_mod(acc, i, p))
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    if args.limit < 5 {
        return Err(Error::InvalidConfig(format!(
            "--limit must be at least 5, got {}",
            args.limit
        )));
    }
    let primes = simple_primes_up_to(args.limit);
    let mut all_ok = true;
    let mut family = |name: &str, checked: u64, failure: Option<String>| {
        match failure {
            None => println!("PASS {name} checked={checked}"),
            Some(detail) => {
                all_ok = false;
                println!("FAIL {name} checked={checked} {detail}");
            }
        }
    };

    // Wilson chain: (i-1)!(p-i)! alternates between +-1 all the way up.
    {
        let mut checked = 0u64;
        let mut failure = None;
        for &p in primes.iter().filter(|&&p| p >= 3) {
            let chain = scan::wilson_chain_check(Modulus::new(p)?);
            checked += 1;
            if !chain.ok() {
                failure = Some(format!("p={p} violations={:?}", chain.violations));
                break;
            }
        }
        family("wilson_chain", checked, failure);
    }

    // Forced half-factorial collision for p = 3 (mod 4).
    {
        let mut checked = 0u64;
        let mut failure = None;
        for &p in primes.iter().filter(|&&p| p % 4 == 3 && p >= 7) {
            let pm = Modulus::new(p)?;
            let c = scan::half_factorial_collision(pm)?;
            checked += 1;
            let f1 = fact_mod(c.k1, pm);
            let f2 = fact_mod(c.k2, pm);
            if !(c.k1 < c.k2 && c.k2 < p && f1 == f2 && f1 == c.residue) {
                failure = Some(format!("p={p} claimed {c:?} but {f1} vs {f2}"));
                break;
            }
        }
        family("half_factorial_collision", checked, failure);
    }

    // Unique square root of -1 and its exact +1 pair for p = 1 (mod 4).
    {
        let mut checked = 0u64;
        let mut failure = None;
        for &p in primes.iter().filter(|&&p| p % 4 == 1 && p >= 5) {
            let pm = Modulus::new(p)?;
            let tag = pairing::tag_equality(pm)?;
            checked += 1;
            let roots: Vec<u64> = (2..=pm.half())
                .filter(|&i| mul_mod(i, i, pm) == p - 1)
                .collect();
            let exact = tag.i as u128 * tag.partner as u128 == tag.k as u128 * p as u128 + 1;
            if roots != vec![tag.i] || tag.partner != p - tag.i || !exact {
                failure = Some(format!("p={p} tag {tag:?} roots {roots:?}"));
                break;
            }
        }
        family("tag_pair", checked, failure);
    }

    // Greedy table shape and exact row decompositions for p = 1 (mod 4).
    {
        let mut checked = 0u64;
        let mut failure = None;
        'outer: for &p in primes.iter().filter(|&&p| p % 4 == 1 && p >= 5) {
            let pm = Modulus::new(p)?;
            let sys = build_natural_system(pm)?;
            checked += 1;
            if sys.rows.len() as u64 != pm.half()
                || (sys.rows[0].alpha, sys.rows[0].beta) != (1, p - 1)
            {
                failure = Some(format!("p={p} malformed table shape"));
                break;
            }
            for row in &sys.rows {
                let d = row.decomposition.unwrap();
                let product = row.alpha as u128 * row.beta as u128;
                if mul_mod(row.alpha, row.beta, pm) != row.sign.unit(pm)
                    || product != d.value(pm) as u128
                {
                    failure = Some(format!("p={p} row {} identity broken", row.index));
                    break 'outer;
                }
            }
        }
        family("natural_rows", checked, failure);
    }

    // Exact factorial product comparison on the scratched table.
    {
        let cap = args.limit.min(args.product_limit);
        let mut checked = 0u64;
        let mut failure = None;
        for &p in primes.iter().filter(|&&p| p % 4 == 1 && p >= 5 && p <= cap) {
            let pm = Modulus::new(p)?;
            let sec = derive_secondary(&build_natural_system(pm)?);
            let check = product_inequality_check(&sec, args.product_limit)?;
            checked += 1;
            let want = if sec.scratched.is_empty() {
                ProductRelation::Equal
            } else {
                ProductRelation::StrictlyGreater
            };
            if check.relation != want || !check.sign_residue_ok {
                failure = Some(format!("p={p} relation {:?}", check.relation));
                break;
            }
        }
        family("factorial_product", checked, failure);
    }

    Ok(if all_ok { 0 } else { 1 })
}
