//! Modular arithmetic over odd prime moduli.
//!
//! Everything downstream (residue scans, quadratic screens, pairing
//! systems) funnels through a handful of operations defined here, so they
//! are kept branch-light and overflow-safe: products widen through `u128`,
//! and primality is settled by a deterministic Miller-Rabin witness set
//! that is exact for every 64-bit input.

use crate::error::{Error, Result};

/// An odd prime modulus `p` with `3 <= p < 2^63`, validated at construction.
///
/// The upper bound keeps sums like `(p - 1) + (p - 1)` inside `u64` and
/// lets reduced values round-trip through `i64`, so the hot loops never
/// need checked arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Modulus(u64);

impl Modulus {
    /// Validates that `p` is an odd prime in `[3, 2^63)`.
    pub fn new(p: u64) -> Result<Self> {
        if p == 2 || p >= (1 << 63) {
            return Err(Error::ModulusRange(p));
        }
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(Modulus(p))
    }

    /// The prime itself.
    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// `(p - 1) / 2`, the half-factorial index.
    #[inline]
    pub fn half(self) -> u64 {
        (self.0 - 1) / 2
    }
}

impl std::fmt::Display for Modulus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// `a * b mod p` through a widening 128-bit product.
#[inline]
pub fn mul_mod(a: u64, b: u64, p: Modulus) -> u64 {
    mul_mod_raw(a, b, p.0)
}

#[inline]
pub(crate) fn mul_mod_raw(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// `a^e mod p` by binary exponentiation.
pub fn pow_mod(a: u64, e: u64, p: Modulus) -> u64 {
    pow_mod_raw(a, e, p.0)
}

pub(crate) fn pow_mod_raw(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_raw(acc, a, m);
        }
        a = mul_mod_raw(a, a, m);
        e >>= 1;
    }
    acc
}

/// Legendre symbol `(a/p)` in `{-1, 0, +1}`, by Euler's criterion.
///
/// `a` may be negative or larger than `p`; it is reduced into `[0, p)`
/// first, so `legendre(-23, p)` asks whether `p - (23 mod p)` is a
/// quadratic residue.
pub fn legendre(a: i64, p: Modulus) -> i32 {
    let r = (a as i128).rem_euclid(p.0 as i128) as u64;
    if r == 0 {
        return 0;
    }
    if pow_mod_raw(r, (p.0 - 1) / 2, p.0) == 1 {
        1
    } else {
        -1
    }
}

/// Multiplicative inverse of `a` modulo the prime `p`, via Fermat.
pub fn inv_mod(a: u64, p: Modulus) -> Result<u64> {
    let r = a % p.0;
    if r == 0 {
        return Err(Error::ZeroInverse(p.0));
    }
    Ok(pow_mod_raw(r, p.0 - 2, p.0))
}

/// The canonical square root of `-1` modulo `p`, for `p = 1 (mod 4)`.
///
/// Computed as `a^((p-1)/4)` for the smallest quadratic non-residue `a`
/// (scanned upward from 2), then canonicalized to the representative in
/// `[2, (p-1)/2]`; the other root is `p - i`.
pub fn sqrt_minus_one(p: Modulus) -> Result<u64> {
    if p.0 % 4 != 1 {
        return Err(Error::ResidueClass {
            p: p.0,
            needed: "1 (mod 4)",
        });
    }
    let mut a = 2u64;
    while legendre(a as i64, p) != -1 {
        a += 1;
    }
    let i = pow_mod_raw(a, (p.0 - 1) / 4, p.0);
    let i = i.min(p.0 - i);
    debug_assert_eq!(mul_mod_raw(i, i, p.0), p.0 - 1);
    Ok(i)
}

/// Witness set making Miller-Rabin deterministic for all `n < 2^64`.
const MR_WITNESSES: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];

/// Deterministic primality test for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for q in SMALL {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for w in MR_WITNESSES {
        let a = w % n;
        if a == 0 {
            continue;
        }
        let mut x = pow_mod_raw(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_raw(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// All primes `<= n` by a plain sieve of Eratosthenes.
///
/// Used for the base primes of segmented sieving; small enough ranges
/// also make it a convenient independent oracle in tests.
pub fn simple_primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut primes = Vec::new();
    for q in 2..=n {
        if composite[q] {
            continue;
        }
        primes.push(q as u64);
        let mut k = match q.checked_mul(q) {
            Some(k) if k <= n => k,
            _ => continue,
        };
        while k <= n {
            composite[k] = true;
            k += q;
        }
    }
    primes
}

/// Primes in `[lo, hi]`, given base primes covering `sqrt(hi)`.
pub(crate) fn sieve_segment(lo: u64, hi: u64, base: &[u64]) -> Vec<u64> {
    if hi < 2 || hi < lo {
        return Vec::new();
    }
    let span = (hi - lo + 1) as usize;
    let mut composite = vec![false; span];
    for &q in base {
        if q.saturating_mul(q) > hi {
            break;
        }
        // First multiple of q in range, but never q itself.
        let start = (q * q).max(lo.div_ceil(q) * q);
        let mut k = start;
        while k <= hi {
            composite[(k - lo) as usize] = true;
            k += q;
        }
    }
    let mut out = Vec::new();
    for (idx, &c) in composite.iter().enumerate() {
        let n = lo + idx as u64;
        if !c && n >= 2 {
            out.push(n);
        }
    }
    out
}

/// Default segment width for [`primes_in_range`].
pub const DEFAULT_SEGMENT_WIDTH: u64 = 1 << 20;

/// Ascending stream of primes in `[lo, hi]`, produced by a segmented
/// sieve so memory tracks the segment width rather than the range.
pub fn primes_in_range(lo: u64, hi: u64) -> PrimeRange {
    PrimeRange::with_segment_width(lo, hi, DEFAULT_SEGMENT_WIDTH)
}

/// Iterator behind [`primes_in_range`].
pub struct PrimeRange {
    base: Vec<u64>,
    next_lo: u64,
    hi: u64,
    width: u64,
    buf: std::vec::IntoIter<u64>,
    done: bool,
}

impl PrimeRange {
    /// Same as [`primes_in_range`] with an explicit segment width.
    pub fn with_segment_width(lo: u64, hi: u64, width: u64) -> Self {
        PrimeRange {
            base: if hi >= 4 {
                simple_primes_up_to(hi.isqrt())
            } else {
                Vec::new()
            },
            next_lo: lo,
            hi,
            width: width.max(2),
            buf: Vec::new().into_iter(),
            done: hi < lo,
        }
    }
}

impl Iterator for PrimeRange {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        loop {
            if let Some(p) = self.buf.next() {
                return Some(p);
            }
            if self.done {
                return None;
            }
            let seg_hi = self.hi.min(self.next_lo.saturating_add(self.width - 1));
            self.buf = sieve_segment(self.next_lo, seg_hi, &self.base).into_iter();
            if seg_hi == self.hi {
                self.done = true;
            } else {
                self.next_lo = seg_hi + 1;
            }
        }
    }
}
