//! Release gate for the whole crate: each shipped guarantee is checked
//! at its stated tolerance and reported on its own verdict line
//! (`ACCEPTANCE nn PASS/FAIL`). Run with `--nocapture` to watch them.
//!
//! The long sweep to 10^7 is `#[ignore]`d; include it with
//! `cargo test --test acceptance -- --include-ignored`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use socialist_primes::filters::rs_filter;
use socialist_primes::modmath::{mul_mod, primes_in_range, Modulus};
use socialist_primes::pairing::enumerate::{
    canonical_pairs, enumerate_by_structure, enumerate_systems, SignedPair,
};
use socialist_primes::pairing::{
    build_natural_system, derive_secondary, product_inequality_check, render_table, tag_equality,
    PairingSystem, ProductRelation, Sign, SystemStatus,
};
use socialist_primes::scan::{
    half_factorial_collision, missing_residue, scan_once, wilson_chain_check, ScanMode,
};
use socialist_primes::search::{run_search, SearchConfig};

fn m(p: u64) -> Modulus {
    Modulus::new(p).unwrap()
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_socprimes")
}

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(bin()).args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("stdout utf-8"),
        String::from_utf8(out.stderr).expect("stderr utf-8"),
    )
}

fn strip_wall(stdout: &str) -> String {
    let mut out = String::new();
    for line in stdout.lines() {
        if !line.starts_with("# wall_ms") {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

/// Pull `key=value` or `key value` tokens out of CLI output.
fn field<'a>(stdout: &'a str, key: &str) -> &'a str {
    for line in stdout.lines() {
        if let Some(rest) = line.strip_prefix(key) {
            if let Some(v) = rest.strip_prefix(['=', ' ']) {
                return v.trim();
            }
        }
    }
    panic!("no `{key}` line in output:\n{stdout}");
}

struct Gate {
    failures: Vec<&'static str>,
}

impl Gate {
    fn check(&mut self, id: u32, name: &'static str, budget: Duration, f: impl FnOnce()) {
        let start = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= budget;
        let verdict = if ok && in_budget { "PASS" } else { "FAIL" };
        println!("ACCEPTANCE {id:02} {verdict} ({:.2}s): {name}", elapsed.as_secs_f64());
        if !ok || !in_budget {
            if ok {
                println!("    over time budget of {budget:?}");
            }
            self.failures.push(name);
        }
    }
}

#[test]
fn acceptance_gate() {
    let mut g = Gate { failures: Vec::new() };
    let sec = Duration::from_secs;

    g.check(1, "five_point_check", sec(1), || {
        let (code, stdout, _) = run_cli(&["search", "--from", "5", "--to", "5"]);
        assert_eq!(code, 0);
        assert_eq!(field(&stdout, "socialist"), "5");
        assert_eq!(field(&stdout, "primes_scanned"), "1");

        // 2!..4! mod 5 hit 2, 1, 4 — all distinct — and skip 3.
        let p = m(5);
        let mut fact = 1;
        let mut residues = Vec::new();
        for k in 2..=4 {
            fact = mul_mod(fact, k, p);
            residues.push(fact);
        }
        assert_eq!(residues, [2, 1, 4]);
        assert_eq!(missing_residue(p).unwrap(), 3);

        let scan = scan_once(p, ScanMode::Full).unwrap();
        assert!(scan.socialist);
        assert_eq!(scan.distinct_count, Some(3));
        assert_eq!(scan.missing_residue, Some(3));
    });

    g.check(2, "sweep_to_one_million_finds_nothing", sec(120), || {
        let outcome = run_search(&SearchConfig::new(7, 1_000_000)).unwrap();
        assert!(outcome.summary.complete);
        assert_eq!(outcome.summary.primes_scanned, 78_495);
        assert!(outcome.summary.socialist.is_empty(), "unexpected hits: {:?}", outcome.summary.socialist);
    });

    g.check(3, "residue_screen_has_no_survivors", sec(1), || {
        let mut screened = 0u32;
        for p in primes_in_range(7, 1000) {
            let report = rs_filter(m(p)).unwrap();
            if report.rs_pass {
                screened += 1;
                let scan = scan_once(m(p), ScanMode::Full).unwrap();
                assert!(!scan.socialist, "screen survivor at p={p}");
            }
        }
        assert!(screened > 0, "screen passed nothing; check is vacuous");
    });

    g.check(4, "wilson_chain_holds_to_ten_thousand", sec(30), || {
        // p = 2 is immediate: 0! * 1! = 1 = -1 (mod 2).
        for p in primes_in_range(3, 10_000) {
            let chain = wilson_chain_check(m(p));
            assert!(chain.ok(), "violations at p={p}: {:?}", chain.violations);
            assert_eq!(chain.checked, (p + 1) / 2);
        }
    });

    g.check(5, "three_mod_four_shortcut_matches_scan", sec(30), || {
        for p in primes_in_range(7, 10_000) {
            if p % 4 != 3 {
                continue;
            }
            let c = half_factorial_collision(m(p)).unwrap();
            assert!(2 <= c.k1 && c.k1 < c.k2 && c.k2 <= p - 1);
            // Recompute both factorials from scratch, as the full scan does.
            let (mut fact, mut at_k1, mut at_k2) = (1u64, 0u64, 0u64);
            for k in 2..=c.k2 {
                fact = mul_mod(fact, k, m(p));
                if k == c.k1 {
                    at_k1 = fact;
                }
                if k == c.k2 {
                    at_k2 = fact;
                }
            }
            assert_eq!(at_k1, c.residue, "p={p}");
            assert_eq!(at_k2, c.residue, "p={p}");
            assert!(!scan_once(m(p), ScanMode::Full).unwrap().socialist);
        }
    });

    g.check(6, "thirteen_tables_match_goldens", sec(30), || {
        let p = m(13);
        let natural = build_natural_system(p).unwrap();
        let want = [(1, 12, Sign::Minus, 12), (2, 7, Sign::Plus, 14), (3, 4, Sign::Minus, 12), (5, 8, Sign::Plus, 40)];
        for (row, &(alpha, beta, sign, dec)) in natural.rows.iter().zip(&want) {
            assert_eq!((row.alpha, row.beta, row.sign), (alpha, beta, sign));
            assert_eq!(row.decomposition.unwrap().value(p), dec);
        }
        let golden = include_str!("golden/p13_natural.txt");
        let rendered = render_table(&natural);
        assert!(
            rendered.lines().take(5).eq(golden.lines().take(5)),
            "header or rows 1-4 drifted from the golden table"
        );

        // The published reference table ends (6,2), (10,4); its defect
        // sets are fixed by the definitional checker.
        let reference =
            PairingSystem::from_rows(p, &[(1, 12), (2, 7), (3, 4), (5, 8), (6, 2), (10, 4)]).unwrap();
        assert_eq!(reference.status, SystemStatus::Broken);
        assert_eq!(reference.duplicates, vec![2, 4]);
        assert_eq!(reference.missing, vec![9, 11]);

        // Row 5 onward the builder and the reference diverge (the
        // published rule for broken rows is unstated), so rows 5-6 are
        // compared at the defect-multiset level only.
        for (a, b) in natural.rows.iter().zip(&reference.rows).take(4) {
            assert_eq!((a.alpha, a.beta), (b.alpha, b.beta));
        }
        assert_eq!(natural.duplicates.len(), reference.duplicates.len());
        assert_eq!(natural.missing.len(), reference.missing.len());
        assert_eq!(derive_secondary(&natural).scratched, vec![5, 6]);
        assert_eq!(derive_secondary(&reference).scratched, vec![5, 6]);

        let (code, stdout, _) = run_cli(&["pairings", "--p", "13", "--natural"]);
        assert_eq!(code, 0);
        assert!(stdout.contains(golden));
        let (code, stdout, _) = run_cli(&["pairings", "--p", "13", "--secondary"]);
        assert_eq!(code, 0);
        assert!(stdout.contains("scratched 5 6"));
    });

    g.check(7, "product_identities_exact", sec(30), || {
        let five = build_natural_system(m(5)).unwrap();
        let check5 = product_inequality_check(&five, 257).unwrap();
        assert_eq!(check5.relation, ProductRelation::Equal);
        assert_eq!(check5.lhs, BigUint::from(24u32));
        assert_eq!(check5.rhs, BigUint::from(24u32));
        assert!(check5.sign_residue_ok);

        let secondary = derive_secondary(&build_natural_system(m(13)).unwrap());
        let check13 = product_inequality_check(&secondary, 257).unwrap();
        assert_eq!(check13.relation, ProductRelation::StrictlyGreater);
        assert_eq!(check13.lhs, BigUint::from(479_001_600u64)); // 12!
        assert_eq!(check13.rhs, BigUint::from(80_640u64)); // 14 * 40 * 12 * 12
        // The gap is exactly the product of the missing factors.
        assert_eq!(check13.rhs.clone() * BigUint::from(6u32 * 9 * 10 * 11), check13.lhs);
        assert!(check13.sign_residue_ok);
    });

    g.check(8, "tag_pair_unique_and_exact", sec(10), || {
        for p in primes_in_range(5, 10_000) {
            if p % 4 != 1 {
                continue;
            }
            let t = tag_equality(m(p)).unwrap();
            assert!(2 <= t.i && t.i <= (p - 1) / 2);
            assert_eq!(mul_mod(t.i, t.i, m(p)), p - 1, "i^2 != -1 at p={p}");
            assert_eq!(t.partner, p - t.i);
            assert_eq!(t.i as u128 * t.partner as u128, t.k as u128 * p as u128 + 1);
            let hits = (2..=(p - 1) / 2).filter(|&j| mul_mod(j, j, m(p)) == p - 1).count();
            assert_eq!(hits, 1, "tag index not unique at p={p}");
            if p == 5 {
                assert_eq!((t.i, t.k), (2, 1));
            }
            if p == 13 {
                assert_eq!((t.i, t.k), (5, 3));
            }
        }
    });

    g.check(9, "enumeration_oracles_agree", sec(300), || {
        let five = enumerate_systems(m(5), 8, None).unwrap();
        assert!(five.complete);
        assert_eq!(five.solution_count, 1);
        assert_eq!(
            canonical_pairs(&five.solutions[0]),
            vec![
                SignedPair { lo: 1, hi: 4, sign: Sign::Minus },
                SignedPair { lo: 2, hi: 3, sign: Sign::Plus },
            ]
        );

        for p in [13u64, 17, 29] {
            let a = enumerate_systems(m(p), 64, None).unwrap();
            let b = enumerate_by_structure(m(p)).unwrap();
            assert!(a.complete);
            assert_eq!(a.solution_count, b.solution_count, "enumerators disagree at p={p}");
            assert_eq!(a.solutions.len() as u64, a.solution_count);

            let mut left: Vec<Vec<SignedPair>> = a.solutions.iter().map(canonical_pairs).collect();
            let mut right = b.solutions.clone();
            left.sort();
            right.sort();
            assert_eq!(left, right, "solution sets differ at p={p}");

            for sys in &a.solutions {
                // Re-validate through the definitional checker.
                let rows: Vec<(u64, u64)> = sys.rows.iter().map(|r| (r.alpha, r.beta)).collect();
                let rebuilt = PairingSystem::from_rows(m(p), &rows).unwrap();
                assert_eq!(rebuilt.status, SystemStatus::Consistent);
                assert!(rebuilt.duplicates.is_empty() && rebuilt.missing.is_empty());
            }

            // The tool must call agreement/discrepancy from the observed
            // count; this test derives the expected verdict the same way
            // rather than presupposing what the count is.
            let (code, stdout, _) = run_cli(&["pairings", "--p", &p.to_string(), "--enumerate"]);
            assert_eq!(code, 0);
            let shown: u64 = field(&stdout, "enumerate solutions").parse().unwrap();
            assert_eq!(shown, a.solution_count);
            assert_eq!(field(&stdout, "complete"), "true");
            let expected_verdict = if shown > 0 { "DISCREPANCY" } else { "AGREEMENT" };
            assert_eq!(field(&stdout, "verdict"), expected_verdict);
        }
    });

    g.check(10, "interrupt_resume_and_workers_deterministic", sec(120), || {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        let c = dir.path().join("c.json");
        let ckpt = dir.path().join("run.ckpt");
        let base = ["search", "--from", "7", "--to", "100007", "--block-size", "4096"];

        let mut args: Vec<&str> = base.to_vec();
        args.extend(["--workers", "2", "--report", a.to_str().unwrap()]);
        let (code, out_a, _) = run_cli(&args);
        assert_eq!(code, 0);

        // Interrupt at block 9 of 25, then resume to the end.
        let mut args: Vec<&str> = base.to_vec();
        args.extend([
            "--checkpoint", ckpt.to_str().unwrap(),
            "--stop-after-blocks", "9",
            "--report", b.to_str().unwrap(),
        ]);
        let (code, stdout, _) = run_cli(&args);
        assert_eq!(code, 0);
        assert!(stdout.contains("complete=false"));
        let mut args: Vec<&str> = base.to_vec();
        args.extend([
            "--checkpoint", ckpt.to_str().unwrap(),
            "--resume",
            "--report", b.to_str().unwrap(),
        ]);
        let (code, _, _) = run_cli(&args);
        assert_eq!(code, 0);

        let mut args: Vec<&str> = base.to_vec();
        args.extend(["--workers", "6", "--report", c.to_str().unwrap()]);
        let (code, out_c, _) = run_cli(&args);
        assert_eq!(code, 0);

        let bytes_a = std::fs::read(&a).unwrap();
        assert_eq!(bytes_a, std::fs::read(&b).unwrap(), "resumed report differs");
        assert_eq!(bytes_a, std::fs::read(&c).unwrap(), "worker count changed the report");
        // The report-path echo differs by tempfile name; everything else
        // must match byte for byte.
        let scrub = |s: &str| -> String {
            strip_wall(s)
                .lines()
                .filter(|l| !l.starts_with("report "))
                .map(|l| format!("{l}\n"))
                .collect()
        };
        assert_eq!(scrub(&out_a), scrub(&out_c));
    });

    g.check(11, "collision_steps_track_sqrt_p", sec(120), || {
        let outcome = run_search(&SearchConfig::new(100_000, 1_000_000)).unwrap();
        assert!(outcome.summary.complete);
        assert!(!outcome.summary.buckets.is_empty());
        for bucket in &outcome.summary.buckets {
            let (mut p_min, mut p_max) = (u64::MAX, 0u64);
            for r in &outcome.records {
                if r.p.ilog10() == bucket.decade {
                    p_min = p_min.min(r.p);
                    p_max = p_max.max(r.p);
                }
            }
            let median = bucket.median_steps as f64;
            let lo = 0.5 * (p_min as f64).sqrt();
            let hi = 5.0 * (p_max as f64).sqrt();
            assert!(
                lo <= median && median <= hi,
                "decade {}: median {median} outside [{lo:.1}, {hi:.1}]",
                bucket.decade
            );
        }
    });

    assert!(
        g.failures.is_empty(),
        "acceptance failures: {}",
        g.failures.join(", ")
    );
}

/// Stretch sweep: an order of magnitude past the required range.
#[test]
#[ignore = "stretch sweep (~25 s); run with --include-ignored"]
fn stretch_sweep_to_ten_million() {
    let start = Instant::now();
    let outcome = run_search(&SearchConfig::new(7, 10_000_000)).unwrap();
    assert!(outcome.summary.complete);
    assert_eq!(outcome.summary.primes_scanned, 664_576);
    assert!(outcome.summary.socialist.is_empty());
    assert!(start.elapsed() <= Duration::from_secs(900));
    println!("ACCEPTANCE 02-stretch PASS ({:.2}s): sweep_to_ten_million", start.elapsed().as_secs_f64());
}
