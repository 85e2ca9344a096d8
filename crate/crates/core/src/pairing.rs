//! Alternating-sign pairing systems on `{1, ..., p-1}`.
//!
//! For `p = 1 (mod 4)`, try to split `{1, ..., p-1}` into `(p-1)/2` pairs
//! `(alpha_i, beta_i)` indexed from 1 whose products alternate in sign:
//!
//! ```text
//!     alpha_i * beta_i = (-1)^i (mod p),      i = 1, ..., (p-1)/2,
//! ```
//!
//! with row 1 fixed at `(1, p-1)`. Each row then factors exactly over the
//! integers as `alpha_i * beta_i = j*p + 1` (even rows) or `j*p - 1` (odd
//! rows). When the pairs cover every value exactly once (a *consistent*
//! system), multiplying all rows ties `(p-1)!` to an exact product of
//! `j*p +- 1` terms. The greedy "natural" scheme below usually collides:
//! a chosen value's forced partner may already be spoken for. Such rows
//! are recorded as conflicts (a *broken* system), and scratching them
//! yields a *secondary* system whose product identity degrades to a strict
//! inequality.
//!
//! [`enumerate`] searches exhaustively for consistent systems; tooling on
//! top reports how the count squares with the expectation that `p = 5` is
//! the only prime admitting one.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};
use crate::modmath::{inv_mod, mul_mod, sqrt_minus_one, Modulus};

pub mod enumerate;

pub use enumerate::{
    enumerate_systems, enumerate_by_structure, Enumeration, SignedPair, StructureEnumeration,
};

/// Sign of a row product: `+1` or `-1` modulo `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// The sign `(-1)^i` of row `i`.
    #[inline]
    pub fn of_index(i: u64) -> Sign {
        if i % 2 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    /// The unit this sign names in `Z/p`: `1` or `p - 1`.
    #[inline]
    pub fn unit(self, p: Modulus) -> u64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => p.get() - 1,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// Exact integer factorization of a row product: `alpha * beta = j*p + 1`
/// for `+` rows, `j*p - 1` for `-` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decomposition {
    pub j: u64,
    pub sign: Sign,
}

impl Decomposition {
    /// The integer `j*p + 1` or `j*p - 1` itself.
    pub fn value(self, p: Modulus) -> u64 {
        match self.sign {
            Sign::Plus => self.j * p.get() + 1,
            Sign::Minus => self.j * p.get() - 1,
        }
    }
}

/// One row of a pairing system.
///
/// `conflict` marks rows whose values were already consumed by earlier
/// rows; scratched placeholder rows in a secondary system carry
/// `alpha = beta = 1` and no decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairRow {
    pub index: u64,
    pub alpha: u64,
    pub beta: u64,
    pub sign: Sign,
    pub decomposition: Option<Decomposition>,
    pub conflict: bool,
}

/// Whether a system is a disjoint cover of `{1, ..., p-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemStatus {
    Consistent,
    Broken,
}

/// A full pairing table for one prime.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingSystem {
    pub p: Modulus,
    pub rows: Vec<PairRow>,
    pub status: SystemStatus,
    /// Values appearing more than once across all rows, ascending.
    pub duplicates: Vec<u64>,
    /// Values of `[1, p-1]` appearing in no row, ascending.
    pub missing: Vec<u64>,
    /// Indices of rows scratched out by [`derive_secondary`], ascending.
    pub scratched: Vec<u64>,
}

impl PairingSystem {
    /// Rows not scratched out.
    pub fn active_rows(&self) -> impl Iterator<Item = &PairRow> {
        self.rows
            .iter()
            .filter(|r| !self.scratched.contains(&r.index))
    }

    /// Build a system from explicit `(alpha, beta)` rows.
    ///
    /// Validates the shape (exactly `(p-1)/2` rows, row 1 equal to
    /// `(1, p-1)`, values in `[1, p-1]`) and the sign congruence of every
    /// row; conflicts, duplicates, missing values and the overall status
    /// are then computed, which makes this the definitional checker for
    /// systems produced elsewhere.
    pub fn from_rows(p: Modulus, rows: &[(u64, u64)]) -> Result<PairingSystem> {
        let pv = p.get();
        let h = p.half();
        if rows.len() as u64 != h {
            return Err(Error::InvalidSystem(format!(
                "expected {h} rows for p = {pv}, got {}",
                rows.len()
            )));
        }
        if rows[0] != (1, pv - 1) {
            return Err(Error::InvalidSystem(format!(
                "row 1 must be (1, {}), got {:?}",
                pv - 1,
                rows[0]
            )));
        }
        let mut seen = vec![false; pv as usize];
        let mut out = Vec::with_capacity(rows.len());
        for (idx0, &(alpha, beta)) in rows.iter().enumerate() {
            let index = idx0 as u64 + 1;
            let sign = Sign::of_index(index);
            if !(1..pv).contains(&alpha) || !(1..pv).contains(&beta) {
                return Err(Error::InvalidSystem(format!(
                    "row {index}: values ({alpha}, {beta}) outside [1, {}]",
                    pv - 1
                )));
            }
            if mul_mod(alpha, beta, p) != sign.unit(p) {
                return Err(Error::InvalidSystem(format!(
                    "row {index}: {alpha} * {beta} is not {}1 (mod {pv})",
                    sign.symbol()
                )));
            }
            let conflict = seen[alpha as usize] || seen[beta as usize];
            seen[alpha as usize] = true;
            seen[beta as usize] = true;
            out.push(PairRow {
                index,
                alpha,
                beta,
                sign,
                decomposition: Some(decompose(alpha, beta, sign, p)),
                conflict,
            });
        }
        Ok(finish_system(p, out))
    }
}

/// Exact `j` with `alpha * beta = j*p +- 1`; the congruence must already
/// hold for the given sign.
fn decompose(alpha: u64, beta: u64, sign: Sign, p: Modulus) -> Decomposition {
    let prod = alpha as u128 * beta as u128;
    let adjusted = match sign {
        Sign::Plus => prod - 1,
        Sign::Minus => prod + 1,
    };
    debug_assert_eq!(adjusted % p.get() as u128, 0);
    Decomposition {
        j: (adjusted / p.get() as u128) as u64,
        sign,
    }
}

/// Compute duplicates/missing/status for freshly built rows.
fn finish_system(p: Modulus, rows: Vec<PairRow>) -> PairingSystem {
    let pv = p.get();
    let mut count = vec![0u32; pv as usize];
    for r in &rows {
        count[r.alpha as usize] += 1;
        count[r.beta as usize] += 1;
    }
    let duplicates: Vec<u64> = (1..pv).filter(|&v| count[v as usize] > 1).collect();
    let missing: Vec<u64> = (1..pv).filter(|&v| count[v as usize] == 0).collect();
    let status = if duplicates.is_empty() && missing.is_empty() {
        SystemStatus::Consistent
    } else {
        SystemStatus::Broken
    };
    debug_assert_eq!(
        status == SystemStatus::Broken,
        rows.iter().any(|r| r.conflict)
    );
    PairingSystem {
        p,
        rows,
        status,
        duplicates,
        missing,
        scratched: Vec::new(),
    }
}

/// Build the natural (greedy) pairing system for `p = 1 (mod 4)`, `p >= 5`.
///
/// Row 1 is `(1, p-1)`. For each later row, `alpha` is the smallest value
/// not yet used as any alpha or beta, and `beta` is the forced partner
/// `inv(alpha)` (even rows) or `p - inv(alpha)` (odd rows). When the
/// forced partner is already consumed the row is recorded with
/// `conflict = true` and only `alpha` is consumed; the scheme still
/// advances, so the table always has `(p-1)/2` rows.
pub fn build_natural_system(p: Modulus) -> Result<PairingSystem> {
    let pv = p.get();
    if pv % 4 != 1 {
        return Err(Error::ResidueClass {
            p: pv,
            needed: "1 (mod 4)",
        });
    }
    if pv < 5 {
        return Err(Error::PrimeTooSmall { p: pv, min: 5 });
    }
    let h = p.half();
    let mut used = vec![false; pv as usize];
    let mut rows = Vec::with_capacity(h as usize);

    used[1] = true;
    used[(pv - 1) as usize] = true;
    rows.push(PairRow {
        index: 1,
        alpha: 1,
        beta: pv - 1,
        sign: Sign::Minus,
        decomposition: Some(decompose(1, pv - 1, Sign::Minus, p)),
        conflict: false,
    });

    let mut cursor = 2u64;
    for index in 2..=h {
        while used[cursor as usize] {
            cursor += 1;
        }
        let alpha = cursor;
        used[alpha as usize] = true;

        let sign = Sign::of_index(index);
        let inv = inv_mod(alpha, p).expect("alpha is nonzero");
        let beta = match sign {
            Sign::Plus => inv,
            Sign::Minus => pv - inv,
        };
        let conflict = used[beta as usize];
        if !conflict {
            used[beta as usize] = true;
        }
        debug_assert_eq!(mul_mod(alpha, beta, p), sign.unit(p));
        rows.push(PairRow {
            index,
            alpha,
            beta,
            sign,
            decomposition: Some(decompose(alpha, beta, sign, p)),
            conflict,
        });
    }
    Ok(finish_system(p, rows))
}

/// Scratch out broken rows, yielding the secondary system.
///
/// Every row in conflict (or whose values duplicate an earlier kept row)
/// is replaced by the placeholder `(1, 1)` with no decomposition; all
/// other rows are copied verbatim and `scratched` records the replaced
/// indices. Applying it twice changes nothing.
pub fn derive_secondary(system: &PairingSystem) -> PairingSystem {
    let pv = system.p.get();
    let mut seen = vec![false; pv as usize];
    let mut rows = Vec::with_capacity(system.rows.len());
    let mut scratched = Vec::new();

    for row in &system.rows {
        if system.scratched.contains(&row.index) {
            rows.push(*row);
            scratched.push(row.index);
            continue;
        }
        if row.conflict || seen[row.alpha as usize] || seen[row.beta as usize] {
            rows.push(PairRow {
                index: row.index,
                alpha: 1,
                beta: 1,
                sign: row.sign,
                decomposition: None,
                conflict: false,
            });
            scratched.push(row.index);
            continue;
        }
        seen[row.alpha as usize] = true;
        seen[row.beta as usize] = true;
        rows.push(*row);
    }

    let duplicates = Vec::new(); // kept rows are disjoint by construction
    let missing: Vec<u64> = (1..pv).filter(|&v| !seen[v as usize]).collect();
    let status = if scratched.is_empty() && missing.is_empty() {
        SystemStatus::Consistent
    } else {
        SystemStatus::Broken
    };
    PairingSystem {
        p: system.p,
        rows,
        status,
        duplicates,
        missing,
        scratched,
    }
}

/// Render a system as a fixed-width text table.
///
/// Columns are `i`, `alpha`, `beta` and the exact row products split by
/// sign (`jp-1` for odd rows, `jp+1` for even rows); scratched rows show
/// `N/A` in their sign's column. Cells are right-aligned, columns joined
/// by two spaces, trailing blanks trimmed.
pub fn render_table(system: &PairingSystem) -> String {
    const HEADERS: [&str; 5] = ["i", "alpha", "beta", "jp-1", "jp+1"];
    let cells: Vec<[String; 5]> = system
        .rows
        .iter()
        .map(|row| {
            let scratched = system.scratched.contains(&row.index);
            let (minus_cell, plus_cell) = match (row.decomposition, row.sign) {
                (Some(d), Sign::Minus) => (d.value(system.p).to_string(), String::new()),
                (Some(d), Sign::Plus) => (String::new(), d.value(system.p).to_string()),
                (None, Sign::Minus) if scratched => ("N/A".into(), String::new()),
                (None, Sign::Plus) if scratched => (String::new(), "N/A".into()),
                (None, _) => (String::new(), String::new()),
            };
            [
                row.index.to_string(),
                row.alpha.to_string(),
                row.beta.to_string(),
                minus_cell,
                plus_cell,
            ]
        })
        .collect();

    let mut width = HEADERS.map(str::len);
    for row in &cells {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }

    let mut out = String::new();
    let mut push_line = |row: [&str; 5]| {
        let line = row
            .iter()
            .zip(width)
            .map(|(cell, w)| format!("{cell:>w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_line(HEADERS);
    for row in &cells {
        push_line([&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    out
}

/// Multiplicities of each `j` among the exact row products, split by sign.
///
/// `plus[j]` counts even rows with `alpha*beta = j*p + 1`; `minus[j]`
/// counts odd rows with `alpha*beta = j*p - 1`. Scratched rows contribute
/// nothing. Meaningful for consistent or secondary systems, where the
/// active rows are disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentCounts {
    pub plus: BTreeMap<u64, u64>,
    pub minus: BTreeMap<u64, u64>,
}

impl ExponentCounts {
    /// Total number of active rows counted.
    pub fn total(&self) -> u64 {
        self.plus.values().sum::<u64>() + self.minus.values().sum::<u64>()
    }
}

pub fn exponent_counts(system: &PairingSystem) -> ExponentCounts {
    let mut plus = BTreeMap::new();
    let mut minus = BTreeMap::new();
    for row in system.active_rows() {
        if let Some(d) = row.decomposition {
            match d.sign {
                Sign::Plus => *plus.entry(d.j).or_insert(0) += 1,
                Sign::Minus => *minus.entry(d.j).or_insert(0) += 1,
            }
        }
    }
    ExponentCounts { plus, minus }
}

/// Default cap on `p` for [`product_inequality_check`]; `(p-1)!` is held
/// exactly, so the cap only bounds runtime, not correctness.
pub const DEFAULT_PRODUCT_CAP: u64 = 257;

/// How the exact factorial compares to the product of active rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductRelation {
    Equal,
    StrictlyGreater,
}

/// Exact big-integer comparison of `(p-1)!` against the row products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductCheck {
    pub lhs: BigUint,
    pub rhs: BigUint,
    pub relation: ProductRelation,
    /// Whether `rhs mod p` equals the product of the active row signs, as
    /// it must, since each `j*p +- 1` term is `+-1 (mod p)`.
    pub sign_residue_ok: bool,
}

/// Compare `(p-1)!` with the product of all active row values `j*p +- 1`.
///
/// Requires a system whose active rows are pairwise disjoint (consistent,
/// or secondary after scratching): a consistent system covers all of
/// `{1, ..., p-1}` and forces equality, while every scratched row leaves
/// values out of the right side and forces a strict inequality.
pub fn product_inequality_check(system: &PairingSystem, cap: u64) -> Result<ProductCheck> {
    let p = system.p;
    let pv = p.get();
    if pv > cap {
        return Err(Error::CapExceeded {
            what: "exact factorial product check",
            p: pv,
            cap,
        });
    }
    if system.active_rows().any(|r| r.conflict) {
        return Err(Error::InvalidSystem(
            "system has unscratched conflict rows; derive the secondary system first".into(),
        ));
    }

    let mut lhs = BigUint::one();
    for k in 2..pv {
        lhs *= k;
    }
    let mut rhs = BigUint::one();
    let mut sign_product = 1u64;
    for row in system.active_rows() {
        rhs *= BigUint::from(row.alpha) * BigUint::from(row.beta);
        sign_product = mul_mod(sign_product, row.sign.unit(p), p);
    }

    let relation = match lhs.cmp(&rhs) {
        std::cmp::Ordering::Equal => ProductRelation::Equal,
        std::cmp::Ordering::Greater => ProductRelation::StrictlyGreater,
        std::cmp::Ordering::Less => {
            return Err(Error::InvalidSystem(
                "active row products exceed (p-1)!; the rows cannot be disjoint".into(),
            ))
        }
    };
    let rhs_mod_p: u64 = (&rhs % pv).try_into().expect("reduced below p");
    Ok(ProductCheck {
        lhs,
        rhs,
        relation,
        sign_residue_ok: rhs_mod_p == sign_product,
    })
}

/// The forced `+1` pair built from the square root of `-1`.
///
/// For `p = 1 (mod 4)` there is exactly one `i` in `[2, (p-1)/2]` with
/// `i^2 = -1 (mod p)`; its partner is `p - i` and the pair's product
/// factors exactly as `i * (p - i) = k*p + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TagEquality {
    pub i: u64,
    pub partner: u64,
    pub k: u64,
}

pub fn tag_equality(p: Modulus) -> Result<TagEquality> {
    let i = sqrt_minus_one(p)?;
    let pv = p.get();
    let prod = i as u128 * (pv - i) as u128;
    debug_assert_eq!((prod - 1) % pv as u128, 0);
    let k = ((prod - 1) / pv as u128) as u64;
    Ok(TagEquality {
        i,
        partner: pv - i,
        k,
    })
}

/// The complementary row `(p - alpha, p - beta)`, which keeps the sign:
/// `(p-a)(p-b) = a*b (mod p)`. Its decomposition is recomputed exactly.
pub fn complement(row: &PairRow, p: Modulus) -> Result<PairRow> {
    let pv = p.get();
    if !(1..pv).contains(&row.alpha)
        || !(1..pv).contains(&row.beta)
        || mul_mod(row.alpha, row.beta, p) != row.sign.unit(p)
    {
        return Err(Error::InvalidSystem(format!(
            "row {} does not satisfy its sign congruence",
            row.index
        )));
    }
    let alpha = pv - row.alpha;
    let beta = pv - row.beta;
    Ok(PairRow {
        index: row.index,
        alpha,
        beta,
        sign: row.sign,
        decomposition: Some(decompose(alpha, beta, row.sign, p)),
        conflict: false,
    })
}

/// One row of the factorial-residue analogue of a pairing table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FactRow {
    pub left: u64,
    pub right: u64,
    pub sign: Sign,
}

/// The pairing shape instantiated with factorial residues.
///
/// The Wilson chain pairs `(i-1)!` with `(p-i)!` at sign `(-1)^i`; rows
/// here run `i = 3, ..., (p-1)/2`, plus the two boundary rows
/// `((p-1)!, (p-2)!)` at `-1` and `(r, ((p-1)/2)!)` at `+1`, where `r` is
/// the would-be missing residue. Together the entries list the residues
/// of `2!, ..., (p-1)!` and `r` -- so duplicate entries here are exactly
/// collisions of the factorial scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorialSystem {
    pub p: Modulus,
    pub rows: Vec<FactRow>,
    /// The missing-residue candidate `r = -((p-1)/2)! mod p`.
    pub missing_residue: u64,
    /// Entry values occurring more than once, ascending.
    pub duplicate_values: Vec<u64>,
    /// True when all `p - 1` entries are pairwise distinct.
    pub distinct: bool,
}

/// Build the factorial instantiation for `p = 1 (mod 4)`, `p >= 13`.
pub fn build_factorial_system(p: Modulus) -> Result<FactorialSystem> {
    let pv = p.get();
    if pv % 4 != 1 {
        return Err(Error::ResidueClass {
            p: pv,
            needed: "1 (mod 4)",
        });
    }
    if pv < 13 {
        return Err(Error::PrimeTooSmall { p: pv, min: 13 });
    }
    let h = p.half();

    let mut fact = Vec::with_capacity(pv as usize);
    fact.push(1u64); // 0!
    let mut f = 1u64;
    for k in 1..pv {
        f = mul_mod(f, k, p);
        fact.push(f);
    }

    let mut rows = Vec::with_capacity(h as usize);
    for i in 3..=h {
        rows.push(FactRow {
            left: fact[(i - 1) as usize],
            right: fact[(pv - i) as usize],
            sign: Sign::of_index(i),
        });
    }
    rows.push(FactRow {
        left: fact[(pv - 1) as usize],
        right: fact[(pv - 2) as usize],
        sign: Sign::Minus,
    });
    let r = pv - fact[h as usize];
    rows.push(FactRow {
        left: r,
        right: fact[h as usize],
        sign: Sign::Plus,
    });
    debug_assert!(rows
        .iter()
        .all(|row| mul_mod(row.left, row.right, p) == row.sign.unit(p)));
    debug_assert_eq!(rows.len() as u64, h);

    let mut entries: Vec<u64> = rows.iter().flat_map(|r| [r.left, r.right]).collect();
    entries.sort_unstable();
    let mut duplicate_values: Vec<u64> = entries
        .windows(2)
        .filter(|w| w[0] == w[1])
        .map(|w| w[0])
        .collect();
    duplicate_values.dedup();

    Ok(FactorialSystem {
        p,
        rows,
        missing_residue: r,
        duplicate_values: duplicate_values.clone(),
        distinct: duplicate_values.is_empty(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modmath::simple_primes_up_to;
    use crate::scan::{scan_once, ScanMode};

    fn m(p: u64) -> Modulus {
        Modulus::new(p).unwrap()
    }

    fn row(
        index: u64,
        alpha: u64,
        beta: u64,
        j: u64,
        conflict: bool,
    ) -> PairRow {
        let sign = Sign::of_index(index);
        PairRow {
            index,
            alpha,
            beta,
            sign,
            decomposition: Some(Decomposition { j, sign }),
            conflict,
        }
    }

    #[test]
    fn natural_system_p5_is_consistent() {
        let sys = build_natural_system(m(5)).unwrap();
        assert_eq!(sys.rows, vec![row(1, 1, 4, 1, false), row(2, 2, 3, 1, false)]);
        assert_eq!(sys.status, SystemStatus::Consistent);
        assert!(sys.duplicates.is_empty());
        assert!(sys.missing.is_empty());
    }

    #[test]
    fn natural_system_p13_rows_and_defects() {
        let sys = build_natural_system(m(13)).unwrap();
        assert_eq!(
            sys.rows,
            vec![
                row(1, 1, 12, 1, false),  // 12 = 1*13 - 1
                row(2, 2, 7, 1, false),   // 14 = 1*13 + 1
                row(3, 3, 4, 1, false),   // 12 = 1*13 - 1
                row(4, 5, 8, 3, false),   // 40 = 3*13 + 1
                row(5, 6, 2, 1, true),    // beta 2 already used
                row(6, 9, 3, 2, true),    // beta 3 already used
            ]
        );
        assert_eq!(sys.status, SystemStatus::Broken);
        assert_eq!(sys.duplicates, vec![2, 3]);
        assert_eq!(sys.missing, vec![10, 11]);
        assert_eq!(sys.duplicates.len(), sys.missing.len());
    }

    #[test]
    fn natural_system_p17_spot_values() {
        let sys = build_natural_system(m(17)).unwrap();
        assert_eq!(sys.rows[5], row(6, 6, 3, 1, true)); // 18 = 1*17 + 1
        assert_eq!(sys.rows[6], row(7, 7, 12, 5, false)); // 84 = 5*17 - 1
        assert_eq!(sys.duplicates, vec![3]);
        assert_eq!(sys.missing, vec![14]);
    }

    #[test]
    fn natural_system_rejects_wrong_class() {
        assert!(matches!(
            build_natural_system(m(7)),
            Err(Error::ResidueClass { p: 7, .. })
        ));
    }

    #[test]
    fn natural_rows_satisfy_exact_identities() {
        for p in simple_primes_up_to(2_000) {
            if p % 4 != 1 {
                continue;
            }
            let pm = m(p);
            let sys = build_natural_system(pm).unwrap();
            assert_eq!(sys.rows.len() as u64, pm.half());
            assert_eq!(sys.rows[0].alpha, 1);
            assert_eq!(sys.rows[0].beta, p - 1);
            for r in &sys.rows {
                assert_eq!(mul_mod(r.alpha, r.beta, pm), r.sign.unit(pm), "p={p}");
                let d = r.decomposition.unwrap();
                assert_eq!(
                    r.alpha as u128 * r.beta as u128,
                    d.value(pm) as u128,
                    "p={p} row={}",
                    r.index
                );
                assert!(d.j >= 1 && d.j < p);
            }
            // Each missing value is balanced by an extra use of some
            // duplicated value (a value can be forced as beta more than
            // once, so this is a sum, not a size equality).
            let mut count = vec![0u64; p as usize];
            for r in &sys.rows {
                count[r.alpha as usize] += 1;
                count[r.beta as usize] += 1;
            }
            let excess: u64 = count.iter().map(|&c| c.saturating_sub(1)).sum();
            assert_eq!(excess as usize, sys.missing.len(), "p={p}");
            assert_eq!(
                sys.status == SystemStatus::Broken,
                !sys.duplicates.is_empty()
            );
        }
    }

    /// The broken demonstration table for p = 13 with the alternate final
    /// row (10, 4); its defects differ from the greedy table's.
    fn reference_broken_p13() -> PairingSystem {
        PairingSystem::from_rows(m(13), &[(1, 12), (2, 7), (3, 4), (5, 8), (6, 2), (10, 4)])
            .unwrap()
    }

    #[test]
    fn explicit_p13_broken_table_defects() {
        let sys = reference_broken_p13();
        assert_eq!(sys.status, SystemStatus::Broken);
        assert!(!sys.rows[3].conflict);
        assert!(sys.rows[4].conflict);
        assert!(sys.rows[5].conflict);
        assert_eq!(sys.duplicates, vec![2, 4]);
        assert_eq!(sys.missing, vec![9, 11]);
        let values: Vec<u64> = sys
            .rows
            .iter()
            .map(|r| r.decomposition.unwrap().value(sys.p))
            .collect();
        assert_eq!(values, vec![12, 14, 12, 40, 12, 40]);
    }

    #[test]
    fn from_rows_rejects_malformed_tables() {
        // Wrong row count.
        assert!(matches!(
            PairingSystem::from_rows(m(13), &[(1, 12)]),
            Err(Error::InvalidSystem(_))
        ));
        // Row 1 not (1, p-1).
        assert!(matches!(
            PairingSystem::from_rows(m(5), &[(2, 3), (1, 4)]),
            Err(Error::InvalidSystem(_))
        ));
        // Sign congruence violated: row 2 needs a product of +1, but
        // 2 * 5 = 10 (mod 13).
        assert!(matches!(
            PairingSystem::from_rows(m(13), &[(1, 12), (2, 5), (3, 4), (5, 8), (6, 2), (10, 4)]),
            Err(Error::InvalidSystem(_))
        ));
        // Out-of-range value.
        assert!(matches!(
            PairingSystem::from_rows(m(5), &[(1, 4), (2, 8)]),
            Err(Error::InvalidSystem(_))
        ));
    }

    #[test]
    fn secondary_scratches_conflict_rows() {
        let natural = build_natural_system(m(13)).unwrap();
        let secondary = derive_secondary(&natural);
        assert_eq!(secondary.scratched, vec![5, 6]);
        assert_eq!(secondary.rows[..4], natural.rows[..4]);
        for idx in [4usize, 5] {
            let r = secondary.rows[idx];
            assert_eq!((r.alpha, r.beta), (1, 1));
            assert_eq!(r.decomposition, None);
        }
        assert!(secondary.duplicates.is_empty());
        assert_eq!(secondary.missing, vec![6, 9, 10, 11]);
        assert_eq!(secondary.status, SystemStatus::Broken);

        // Idempotent.
        assert_eq!(derive_secondary(&secondary), secondary);

        // Same scratch set from the reference table.
        let reference = derive_secondary(&reference_broken_p13());
        assert_eq!(reference.scratched, vec![5, 6]);
        assert_eq!(reference.missing, vec![6, 9, 10, 11]);
    }

    #[test]
    fn secondary_of_consistent_system_is_identity() {
        let sys = build_natural_system(m(5)).unwrap();
        let secondary = derive_secondary(&sys);
        assert_eq!(secondary, sys);
        assert_eq!(secondary.status, SystemStatus::Consistent);
    }

    #[test]
    fn render_matches_frozen_tables() {
        let natural = build_natural_system(m(13)).unwrap();
        assert_eq!(
            render_table(&natural),
            include_str!("../tests/golden/p13_natural.txt")
        );
        let secondary = derive_secondary(&natural);
        assert_eq!(
            render_table(&secondary),
            include_str!("../tests/golden/p13_secondary.txt")
        );
    }

    #[test]
    fn exponent_counts_known_values() {
        let p5 = build_natural_system(m(5)).unwrap();
        let c5 = exponent_counts(&p5);
        assert_eq!(c5.plus, BTreeMap::from([(1, 1)]));
        assert_eq!(c5.minus, BTreeMap::from([(1, 1)]));
        assert_eq!(c5.total(), 2);

        let p13 = derive_secondary(&build_natural_system(m(13)).unwrap());
        let c13 = exponent_counts(&p13);
        assert_eq!(c13.plus, BTreeMap::from([(1, 1), (3, 1)]));
        assert_eq!(c13.minus, BTreeMap::from([(1, 2)]));
        assert_eq!(c13.total(), 4);
    }

    #[test]
    fn exponent_totals_count_active_rows() {
        for p in simple_primes_up_to(500) {
            if p % 4 != 1 {
                continue;
            }
            let sec = derive_secondary(&build_natural_system(m(p)).unwrap());
            let counts = exponent_counts(&sec);
            assert_eq!(
                counts.total() as usize,
                sec.rows.len() - sec.scratched.len(),
                "p={p}"
            );
        }
    }

    #[test]
    fn product_check_equal_for_p5() {
        let sys = build_natural_system(m(5)).unwrap();
        let check = product_inequality_check(&sys, DEFAULT_PRODUCT_CAP).unwrap();
        assert_eq!(check.lhs, BigUint::from(24u32));
        assert_eq!(check.rhs, BigUint::from(24u32)); // 6 * 4
        assert_eq!(check.relation, ProductRelation::Equal);
        assert!(check.sign_residue_ok);
    }

    #[test]
    fn product_check_strict_for_broken_p13() {
        let sec = derive_secondary(&build_natural_system(m(13)).unwrap());
        let check = product_inequality_check(&sec, DEFAULT_PRODUCT_CAP).unwrap();
        assert_eq!(check.lhs, BigUint::from(479001600u64)); // 12!
        assert_eq!(check.rhs, BigUint::from(80640u64)); // 12 * 14 * 12 * 40
        assert_eq!(check.relation, ProductRelation::StrictlyGreater);
        assert!(check.sign_residue_ok);
        // The gap is exactly the product of the uncovered values.
        assert_eq!(
            check.lhs,
            check.rhs * (6u64 * 9 * 10 * 11)
        );
    }

    #[test]
    fn product_check_equal_for_a_consistent_p13_system() {
        // A disjoint cover of {1..12} with alternating signs does exist
        // for 13; equality of the exact products is forced.
        let sys = PairingSystem::from_rows(
            m(13),
            &[(1, 12), (2, 7), (3, 4), (5, 8), (9, 10), (6, 11)],
        )
        .unwrap();
        assert_eq!(sys.status, SystemStatus::Consistent);
        let check = product_inequality_check(&sys, DEFAULT_PRODUCT_CAP).unwrap();
        assert_eq!(check.relation, ProductRelation::Equal);
        assert!(check.sign_residue_ok);
    }

    #[test]
    fn product_check_refuses_raw_broken_tables_and_honors_cap() {
        let broken = build_natural_system(m(13)).unwrap();
        assert!(matches!(
            product_inequality_check(&broken, DEFAULT_PRODUCT_CAP),
            Err(Error::InvalidSystem(_))
        ));
        let big = build_natural_system(m(269)).unwrap();
        assert!(matches!(
            product_inequality_check(&derive_secondary(&big), 257),
            Err(Error::CapExceeded { p: 269, cap: 257, .. })
        ));
    }

    #[test]
    fn secondary_product_relation_tracks_scratching() {
        for p in simple_primes_up_to(257) {
            if p % 4 != 1 || p < 5 {
                continue;
            }
            let sec = derive_secondary(&build_natural_system(m(p)).unwrap());
            let check = product_inequality_check(&sec, DEFAULT_PRODUCT_CAP).unwrap();
            let expect = if sec.scratched.is_empty() {
                ProductRelation::Equal
            } else {
                ProductRelation::StrictlyGreater
            };
            assert_eq!(check.relation, expect, "p={p}");
            assert!(check.sign_residue_ok, "p={p}");
        }
    }

    #[test]
    fn tag_equality_known_values() {
        assert_eq!(
            tag_equality(m(5)).unwrap(),
            TagEquality {
                i: 2,
                partner: 3,
                k: 1
            }
        );
        assert_eq!(
            tag_equality(m(13)).unwrap(),
            TagEquality {
                i: 5,
                partner: 8,
                k: 3
            }
        );
        assert!(tag_equality(m(7)).is_err());
    }

    #[test]
    fn tag_equality_unique_and_exact() {
        for p in simple_primes_up_to(2_000) {
            if p % 4 != 1 {
                continue;
            }
            let pm = m(p);
            let tag = tag_equality(pm).unwrap();
            // Exhaustive uniqueness of i in [2, (p-1)/2] with i^2 = -1.
            let all: Vec<u64> = (2..=pm.half())
                .filter(|&i| mul_mod(i, i, pm) == p - 1)
                .collect();
            assert_eq!(all, vec![tag.i], "p={p}");
            assert_eq!(tag.partner, p - tag.i);
            assert_eq!(
                tag.i as u128 * tag.partner as u128,
                tag.k as u128 * p as u128 + 1,
                "p={p}"
            );
        }
    }

    #[test]
    fn complement_is_a_sign_preserving_involution() {
        for p in [13u64, 29, 37] {
            let pm = m(p);
            let sys = build_natural_system(pm).unwrap();
            for r in &sys.rows {
                let c = complement(r, pm).unwrap();
                assert_eq!(c.sign, r.sign);
                assert_eq!(mul_mod(c.alpha, c.beta, pm), c.sign.unit(pm));
                let back = complement(&c, pm).unwrap();
                assert_eq!((back.alpha, back.beta), (r.alpha, r.beta));
            }
        }
        let first = build_natural_system(m(13)).unwrap().rows[0];
        let c = complement(&first, m(13)).unwrap();
        assert_eq!((c.alpha, c.beta), (12, 1));
        assert_eq!(c.decomposition, Some(Decomposition { j: 1, sign: Sign::Minus }));
    }

    #[test]
    fn complement_rejects_placeholder_rows() {
        let sec = derive_secondary(&build_natural_system(m(13)).unwrap());
        let scratched_row = sec.rows[4];
        assert!(complement(&scratched_row, m(13)).is_err());
    }

    #[test]
    fn factorial_system_p13_exact_rows() {
        let fs = build_factorial_system(m(13)).unwrap();
        assert_eq!(
            fs.rows,
            vec![
                FactRow { left: 2, right: 6, sign: Sign::Minus },  // 2! and 10!
                FactRow { left: 6, right: 11, sign: Sign::Plus },  // 3! and 9!
                FactRow { left: 11, right: 7, sign: Sign::Minus }, // 4! and 8!
                FactRow { left: 3, right: 9, sign: Sign::Plus },   // 5! and 7!
                FactRow { left: 12, right: 1, sign: Sign::Minus }, // 12! and 11!
                FactRow { left: 8, right: 5, sign: Sign::Plus },   // r and 6!
            ]
        );
        assert_eq!(fs.missing_residue, 8);
        assert_eq!(fs.duplicate_values, vec![6, 11]);
        assert!(!fs.distinct);
    }

    #[test]
    fn factorial_system_matches_scan_verdict() {
        for p in simple_primes_up_to(1_000) {
            if p % 4 != 1 || p < 13 {
                continue;
            }
            let pm = m(p);
            let fs = build_factorial_system(pm).unwrap();
            assert_eq!(fs.rows.len() as u64, pm.half(), "p={p}");
            for r in &fs.rows {
                assert_eq!(mul_mod(r.left, r.right, pm), r.sign.unit(pm), "p={p}");
            }
            assert_eq!(fs.missing_residue, crate::scan::missing_residue(pm).unwrap());
            // Non-distinct entries exactly when the scan finds a collision.
            let scan = scan_once(pm, ScanMode::Full).unwrap();
            assert_eq!(fs.distinct, scan.socialist, "p={p}");
        }
    }

    #[test]
    fn factorial_system_rejects_bad_inputs() {
        assert!(matches!(
            build_factorial_system(m(11)),
            Err(Error::ResidueClass { p: 11, .. })
        ));
        assert!(matches!(
            build_factorial_system(m(5)),
            Err(Error::PrimeTooSmall { p: 5, min: 13 })
        ));
    }
}
