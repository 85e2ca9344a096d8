//! Quadratic-residue screens for socialist-prime candidates.
//!
//! Two classical necessary conditions narrow the search:
//!
//! * the Rokowska-Schnitzel conditions: `p = 5 (mod 8)`, `(5/p) = -1`
//!   and `(-23/p) = +1`;
//! * Trudgian's screen: either `(1957/p) = +1`, or `(1957/p) = -1` and
//!   `(4y + 25 / p) = -1` for every root `y` of `y(y+4)(y+6) = 1 (mod p)`.
//!
//! Neither screen is sufficient (13 passes both and still fails the
//! residue scan); they only say where a socialist prime could hide. Since
//! `1957 = 19 * 103`, the two primes dividing it get no Trudgian verdict.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modmath::{legendre, mul_mod, Modulus};

/// Default brute-force cap for [`cubic_roots`].
pub const DEFAULT_CUBIC_CAP: u64 = 10_000_000;

/// The three Rokowska-Schnitzel conditions, individually.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RsComponents {
    pub mod8_is_5: bool,
    pub legendre5_is_minus1: bool,
    pub legendre_neg23_is_plus1: bool,
}

/// Screen verdicts for one prime.
///
/// `rs_*` fields are always populated; the Trudgian fields only when the
/// report came from [`trudgian_filter`] (`trudgian_evaluated` says which).
/// `trudgian_pass` stays absent for the divisors of 1957, where the
/// screen's genericity assumption fails and no verdict exists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub p: u64,
    pub mod8_class: u64,
    pub rs_pass: bool,
    pub rs_components: RsComponents,
    pub trudgian_evaluated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub legendre_1957: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cubic_roots: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trudgian_pass: Option<bool>,
}

/// Rokowska-Schnitzel screen for a prime `p > 5`.
pub fn rs_filter(p: Modulus) -> Result<FilterReport> {
    let pv = p.get();
    if pv <= 5 {
        return Err(Error::PrimeTooSmall { p: pv, min: 7 });
    }
    let components = RsComponents {
        mod8_is_5: pv % 8 == 5,
        legendre5_is_minus1: legendre(5, p) == -1,
        legendre_neg23_is_plus1: legendre(-23, p) == 1,
    };
    Ok(FilterReport {
        p: pv,
        mod8_class: pv % 8,
        rs_pass: components.mod8_is_5
            && components.legendre5_is_minus1
            && components.legendre_neg23_is_plus1,
        rs_components: components,
        trudgian_evaluated: false,
        legendre_1957: None,
        cubic_roots: None,
        trudgian_pass: None,
    })
}

/// Roots of `y(y+4)(y+6) = 1 (mod p)` in ascending order.
///
/// Brute force over `[0, p)`, refused beyond `cap` to keep runtime
/// predictable; a cubic has at most three roots.
pub fn cubic_roots(p: Modulus, cap: u64) -> Result<Vec<u64>> {
    let pv = p.get();
    if pv > cap {
        return Err(Error::CapExceeded {
            what: "cubic root search",
            p: pv,
            cap,
        });
    }
    let mut roots = Vec::new();
    for y in 0..pv {
        let a = mul_mod(y, (y + 4) % pv, p);
        if mul_mod(a, (y + 6) % pv, p) == 1 {
            roots.push(y);
        }
    }
    debug_assert!(roots.len() <= 3);
    Ok(roots)
}

/// Trudgian's screen for a prime `p > 5`, on top of the RS report.
///
/// `cap` bounds the brute-force root search used on the `(1957/p) = -1`
/// branch; the `+1` branch never needs the roots.
pub fn trudgian_filter(p: Modulus, cap: u64) -> Result<FilterReport> {
    let mut report = rs_filter(p)?;
    report.trudgian_evaluated = true;
    let l = legendre(1957, p);
    report.legendre_1957 = Some(l);
    match l {
        0 => {
            // p divides 1957: no verdict.
        }
        1 => {
            report.trudgian_pass = Some(true);
        }
        _ => {
            let roots = cubic_roots(p, cap)?;
            let pv = p.get();
            let pass = roots.iter().all(|&y| {
                // 4y + 25 reduced mod p before the symbol; the symbol only
                // depends on the residue class.
                let t = (mul_mod(4 % pv, y, p) + 25 % pv) % pv;
                legendre(t as i64, p) == -1
            });
            report.cubic_roots = Some(roots);
            report.trudgian_pass = Some(pass);
        }
    }
    Ok(report)
}
