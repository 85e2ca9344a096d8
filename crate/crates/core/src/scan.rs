//! Factorial residue scans.
//!
//! The core loop walks `f <- f * k (mod p)` from `f = 2!` and records each
//! residue in an occupancy bitmap. A bit that is already set is the first
//! collision; by the birthday heuristic that happens after roughly
//! `sqrt(pi/2 * p)` steps, which is what makes scanning ranges of millions
//! of primes cheap. The bitmap is allocated once per worker and reset by
//! clearing only the bits touched by the previous scan, so the per-prime
//! cost stays proportional to the steps taken, not to `p`.
//!
//! Alongside the scan proper, this module carries the exact identities
//! that force collisions for whole classes of primes: the alternating
//! Wilson chain `(-1)^(i-1) * (i-1)! * (p-i)! = -1 (mod p)` and, for
//! `p = 3 (mod 4)`, the half-factorial square `[((p-1)/2)!]^2 = 1 (mod p)`
//! whose sign pins a concrete colliding pair.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modmath::{mul_mod, Modulus};

/// How far a scan should run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    /// Stop at the first collision.
    EarlyExit,
    /// Scan all of `2!..(p-1)!`, reporting distinct counts and (when the
    /// residues are distinct) the unique missing residue.
    Full,
}

/// A pair of factorial indices `k1 < k2` with `k1! = k2! (mod p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub k1: u64,
    pub k2: u64,
    /// The shared residue `k1! mod p`.
    pub residue: u64,
}

/// Outcome of scanning one prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanResult {
    pub p: u64,
    /// True when the residues of `2!..(p-1)!` are pairwise distinct.
    pub socialist: bool,
    /// Earliest collision in `k2` order, if any.
    pub first_collision: Option<Collision>,
    /// Number of factorial terms evaluated (`k2 - 1` on early exit,
    /// `p - 2` on a full scan).
    pub steps: u64,
    /// Full mode only: number of distinct residues seen.
    pub distinct_count: Option<u64>,
    /// Full mode only: the unique nonzero residue never attained, present
    /// exactly when the scan found all residues distinct.
    pub missing_residue: Option<u64>,
}

/// Reusable occupancy bitmap with touched-list reset.
///
/// `mark` returns whether the bit was newly set. Reset cost is bounded by
/// the number of bits touched since the last reset (or one `memset` when
/// that would be slower), so a worker can reuse one buffer across every
/// prime in its block.
#[derive(Debug, Default)]
pub struct ScanBuffer {
    words: Vec<u64>,
    touched: Vec<u64>,
}

impl ScanBuffer {
    pub fn new() -> Self {
        ScanBuffer::default()
    }

    /// Pre-size for residues below `max_p`.
    pub fn with_capacity(max_p: u64) -> Self {
        let mut buf = ScanBuffer::default();
        buf.ensure(max_p);
        buf
    }

    fn ensure(&mut self, p: u64) {
        let words = (p as usize).div_ceil(64);
        if self.words.len() < words {
            self.words.resize(words, 0);
        }
    }

    #[inline]
    fn mark(&mut self, r: u64) -> bool {
        let word = (r >> 6) as usize;
        let bit = 1u64 << (r & 63);
        if self.words[word] & bit != 0 {
            return false;
        }
        self.words[word] |= bit;
        self.touched.push(r);
        true
    }

    #[inline]
    fn is_set(&self, r: u64) -> bool {
        self.words[(r >> 6) as usize] & (1u64 << (r & 63)) != 0
    }

    fn reset(&mut self) {
        if self.touched.len() >= self.words.len() {
            self.words.fill(0);
        } else {
            for &r in &self.touched {
                self.words[(r >> 6) as usize] &= !(1u64 << (r & 63));
            }
        }
        self.touched.clear();
    }
}

/// Scan the factorial residues of one prime `p >= 5`.
///
/// The buffer is reset at entry, so any dirty state from a previous scan
/// is harmless; reusing one buffer across calls is the intended pattern.
pub fn scan_prime(p: Modulus, mode: ScanMode, buf: &mut ScanBuffer) -> Result<ScanResult> {
    let pv = p.get();
    if pv < 5 {
        return Err(Error::PrimeTooSmall { p: pv, min: 5 });
    }
    buf.ensure(pv);
    buf.reset();

    // f = 2! to start; p >= 5 keeps it already reduced.
    let mut f = 2u64;
    buf.mark(2);
    let mut steps = 1u64;
    let mut first: Option<Collision> = None;

    for k in 3..pv {
        f = mul_mod(f, k, p);
        steps += 1;
        if !buf.mark(f) && first.is_none() {
            first = Some(Collision {
                k1: first_index_of(p, f),
                k2: k,
                residue: f,
            });
            if mode == ScanMode::EarlyExit {
                break;
            }
        }
    }

    let (distinct_count, missing_residue) = match mode {
        ScanMode::EarlyExit => (None, None),
        ScanMode::Full => {
            let distinct = buf.touched.len() as u64;
            // Exactly one unattained nonzero residue is possible only when
            // all p - 2 terms were distinct.
            let missing = if distinct == pv - 2 {
                Some(find_single_unset(buf, pv))
            } else {
                None
            };
            (Some(distinct), missing)
        }
    };

    Ok(ScanResult {
        p: pv,
        socialist: first.is_none(),
        first_collision: first,
        steps,
        distinct_count,
        missing_residue,
    })
}

/// One-shot scan with a private buffer.
pub fn scan_once(p: Modulus, mode: ScanMode) -> Result<ScanResult> {
    scan_prime(p, mode, &mut ScanBuffer::new())
}

/// Smallest `k >= 2` with `k! = target (mod p)`; the collision replay.
fn first_index_of(p: Modulus, target: u64) -> u64 {
    let mut f = 2u64;
    let mut k = 2u64;
    while f != target {
        k += 1;
        f = mul_mod(f, k, p);
    }
    k
}

/// The single residue in `[1, p-1]` not marked in the buffer.
fn find_single_unset(buf: &ScanBuffer, p: u64) -> u64 {
    for r in 1..p {
        if !buf.is_set(r) {
            return r;
        }
    }
    unreachable!("caller guarantees exactly one unset residue below p")
}

/// Result of checking the alternating Wilson chain for one prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WilsonChain {
    pub p: u64,
    /// Number of identities checked: `(p+1)/2`.
    pub checked: u64,
    /// Indices `i` where `(-1)^(i-1) * (i-1)! * (p-i)! != -1 (mod p)`.
    pub violations: Vec<u64>,
}

impl WilsonChain {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verify `(-1)^(i-1) * (i-1)! * (p-i)! = -1 (mod p)` for `i = 1..(p+1)/2`.
///
/// Both factorial residues come out of a single forward pass: the lower
/// half is tabulated, then the pass keeps extending `k!` upward while `i`
/// walks down as `p - k`.
pub fn wilson_chain_check(p: Modulus) -> WilsonChain {
    let pv = p.get();
    let h = p.half();

    let mut lower = Vec::with_capacity(h as usize + 1);
    lower.push(1u64); // 0!
    let mut f = 1u64;
    for k in 1..=h {
        f = mul_mod(f, k, p);
        lower.push(f);
    }

    let mut violations = Vec::new();
    let mut g = lower[h as usize]; // ((p-1)/2)!
    for k in h..pv {
        if k > h {
            g = mul_mod(g, k, p);
        }
        let i = pv - k; // runs (p+1)/2 down to 1
        let product = mul_mod(lower[(i - 1) as usize], g, p);
        let expected = if i % 2 == 0 { 1 } else { pv - 1 };
        if product != expected {
            violations.push(i);
        }
    }
    violations.sort_unstable();

    WilsonChain {
        p: pv,
        checked: (pv + 1) / 2,
        violations,
    }
}

/// The collision forced by the half-factorial square when `p = 3 (mod 4)`.
///
/// For such `p`, `h = ((p-1)/2)!` squares to 1, so `h = +-1 (mod p)`:
/// `h = 1` collides with `(p-2)! = 1` and `h = -1` with `(p-1)! = -1`
/// (both by Wilson). Returns the concrete pair, residue included.
pub fn half_factorial_collision(p: Modulus) -> Result<Collision> {
    let pv = p.get();
    if pv % 4 != 3 {
        return Err(Error::ResidueClass {
            p: pv,
            needed: "3 (mod 4)",
        });
    }
    if pv < 7 {
        return Err(Error::PrimeTooSmall { p: pv, min: 7 });
    }
    let h = p.half();
    let mut f = 1u64;
    for k in 2..=h {
        f = mul_mod(f, k, p);
    }
    debug_assert_eq!(mul_mod(f, f, p), 1);
    let (k2, residue) = if f == 1 { (pv - 2, 1) } else { (pv - 1, pv - 1) };
    Ok(Collision {
        k1: h,
        k2,
        residue,
    })
}

/// The one residue a socialist prime would have to miss:
/// `r = -((p-1)/2)! mod p`.
pub fn missing_residue(p: Modulus) -> Result<u64> {
    let pv = p.get();
    if pv < 5 {
        return Err(Error::PrimeTooSmall { p: pv, min: 5 });
    }
    let h = p.half();
    let mut f = 1u64;
    for k in 2..=h {
        f = mul_mod(f, k, p);
    }
    Ok(pv - f)
}

/// Left factorial `!n = 0! + 1! + ... + (n-1)!` reduced mod `p`, for `n <= p`.
pub fn left_factorial_mod(n: u64, p: Modulus) -> Result<u64> {
    if n > p.get() {
        return Err(Error::ArgOutOfRange {
            what: "left factorial index",
            value: n,
            limit: p.get(),
        });
    }
    let mut sum = 0u64;
    let mut f = 1u64; // 0!
    for k in 0..n {
        if k > 0 {
            f = mul_mod(f, k, p);
        }
        sum = (sum + f) % p.get();
    }
    Ok(sum)
}
