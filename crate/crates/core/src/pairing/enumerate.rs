//! Exhaustive enumeration of consistent alternating-sign pairing systems.
//!
//! Two independent strategies answer the same question -- how many ways
//! can `{1, ..., p-1}` be split into `(p-1)/4` pairs multiplying to `+1`
//! and `(p-1)/4` pairs multiplying to `-1 (mod p)`?
//!
//! * [`enumerate_systems`]: direct backtracking. Each unpaired value `x`
//!   has at most two viable partners, `inv(x)` (a `+` pair) and
//!   `p - inv(x)` (a `-` pair); branch on both, pruning on the per-sign
//!   quota.
//! * [`enumerate_by_structure`]: graph decomposition. The union of the
//!   two candidate matchings splits into alternating paths and even
//!   cycles; paths admit at most one perfect matching and cycles exactly
//!   two, so solutions are products of a handful of binary choices
//!   filtered by the sign quota.
//!
//! The strategies share no search code, so agreement of their solution
//! sets is a meaningful cross-check. A consistent set of pairs converts
//! to a [`PairingSystem`] by sorting each sign class and interleaving:
//! `-` pairs at odd row indices, `+` pairs at even, which always puts
//! `(1, p-1)` first.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::modmath::{inv_mod, Modulus};
use crate::pairing::{PairingSystem, Sign};

/// An unordered pair with its product sign, in canonical `lo < hi` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedPair {
    pub lo: u64,
    pub hi: u64,
    pub sign: Sign,
}

impl SignedPair {
    fn new(a: u64, b: u64, sign: Sign) -> SignedPair {
        SignedPair {
            lo: a.min(b),
            hi: a.max(b),
            sign,
        }
    }
}

/// Result of the direct backtracking enumeration.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub p: u64,
    /// Total number of consistent systems found.
    pub solution_count: u64,
    /// Up to `max_solutions` of them, as full systems, in canonical order.
    pub solutions: Vec<PairingSystem>,
    /// False when the deadline cut the search short; counts are then
    /// lower bounds.
    pub complete: bool,
    /// Search-tree nodes expanded (a determinism-friendly cost measure).
    pub nodes_visited: u64,
}

/// Result of the structural (path/cycle) enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureEnumeration {
    pub p: u64,
    pub solution_count: u64,
    /// Every solution, each a sorted pair list (canonical form).
    pub solutions: Vec<Vec<SignedPair>>,
}

fn check_class(p: Modulus) -> Result<()> {
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
    Ok(())
}

/// The canonical sorted pair list of a consistent system.
pub fn canonical_pairs(system: &PairingSystem) -> Vec<SignedPair> {
    let mut pairs: Vec<SignedPair> = system
        .active_rows()
        .map(|r| SignedPair::new(r.alpha, r.beta, r.sign))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Convert a full set of disjoint signed pairs into a system: each sign
/// class sorted ascending, `-` pairs taking rows 1, 3, ... and `+` pairs
/// rows 2, 4, ....
fn system_from_pairs(p: Modulus, pairs: &[SignedPair]) -> Result<PairingSystem> {
    let mut minus: Vec<SignedPair> = pairs.iter().copied().filter(|q| q.sign == Sign::Minus).collect();
    let mut plus: Vec<SignedPair> = pairs.iter().copied().filter(|q| q.sign == Sign::Plus).collect();
    minus.sort_unstable();
    plus.sort_unstable();
    if minus.len() != plus.len() {
        return Err(Error::InvalidSystem(format!(
            "sign classes unbalanced: {} minus vs {} plus",
            minus.len(),
            plus.len()
        )));
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for (m, q) in minus.iter().zip(&plus) {
        rows.push((m.lo, m.hi));
        rows.push((q.lo, q.hi));
    }
    PairingSystem::from_rows(p, &rows)
}

struct Backtracker {
    p: u64,
    inv: Vec<u64>,
    partner: Vec<u64>, // 0 = unpaired
    chosen: Vec<SignedPair>,
    quota: u64,
    plus: u64,
    minus: u64,
    count: u64,
    stored: Vec<Vec<SignedPair>>,
    max_solutions: usize,
    nodes: u64,
    deadline: Option<Instant>,
    timed_out: bool,
}

impl Backtracker {
    /// Returns false when the deadline fired and the search must unwind.
    fn search(&mut self, hint: u64) -> bool {
        self.nodes += 1;
        if let Some(deadline) = self.deadline {
            if Instant::now() >= deadline {
                self.timed_out = true;
                return false;
            }
        }

        let mut x = hint;
        while x < self.p && self.partner[x as usize] != 0 {
            x += 1;
        }
        if x == self.p {
            self.count += 1;
            if self.stored.len() < self.max_solutions {
                let mut sol = self.chosen.clone();
                sol.sort_unstable();
                self.stored.push(sol);
            }
            return true;
        }

        let inv = self.inv[x as usize];
        // +1 pair: (x, inv(x)); -1 pair: (x, p - inv(x)).
        let candidates = [(inv, Sign::Plus), (self.p - inv, Sign::Minus)];
        for (y, sign) in candidates {
            if y == x || self.partner[y as usize] != 0 {
                continue;
            }
            match sign {
                Sign::Plus if self.plus == self.quota => continue,
                Sign::Minus if self.minus == self.quota => continue,
                _ => {}
            }
            self.partner[x as usize] = y;
            self.partner[y as usize] = x;
            match sign {
                Sign::Plus => self.plus += 1,
                Sign::Minus => self.minus += 1,
            }
            self.chosen.push(SignedPair::new(x, y, sign));
            let keep_going = self.search(x + 1);
            self.chosen.pop();
            match sign {
                Sign::Plus => self.plus -= 1,
                Sign::Minus => self.minus -= 1,
            }
            self.partner[x as usize] = 0;
            self.partner[y as usize] = 0;
            if !keep_going {
                return false;
            }
        }
        true
    }
}

/// Exhaustively enumerate consistent systems by backtracking.
///
/// `max_solutions` caps how many solutions are materialized as
/// [`PairingSystem`]s; counting always continues past the cap. A
/// `timeout` (measured from entry) aborts the search, which is then
/// flagged incomplete. Solutions come out in canonical sorted order.
pub fn enumerate_systems(
    p: Modulus,
    max_solutions: usize,
    timeout: Option<Duration>,
) -> Result<Enumeration> {
    check_class(p)?;
    let pv = p.get();
    let mut inv = vec![0u64; pv as usize];
    for x in 1..pv {
        inv[x as usize] = inv_mod(x, p)?;
    }
    let mut bt = Backtracker {
        p: pv,
        inv,
        partner: vec![0; pv as usize],
        chosen: Vec::with_capacity(p.half() as usize),
        quota: (pv - 1) / 4,
        plus: 0,
        minus: 0,
        count: 0,
        stored: Vec::new(),
        max_solutions,
        nodes: 0,
        deadline: timeout.map(|t| Instant::now() + t),
        timed_out: false,
    };
    bt.search(1);

    bt.stored.sort_unstable();
    let solutions = bt
        .stored
        .iter()
        .map(|pairs| system_from_pairs(p, pairs))
        .collect::<Result<Vec<_>>>()?;
    Ok(Enumeration {
        p: pv,
        solution_count: bt.count,
        solutions,
        complete: !bt.timed_out,
        nodes_visited: bt.nodes,
    })
}

/// Edges available at one vertex: the `+` partner and the `-` partner.
#[derive(Clone, Copy)]
struct Neighbors {
    plus: Option<u64>,
    minus: Option<u64>,
}

impl Neighbors {
    fn degree(&self) -> usize {
        self.plus.is_some() as usize + self.minus.is_some() as usize
    }

    fn partner(&self, sign: Sign) -> Option<u64> {
        match sign {
            Sign::Plus => self.plus,
            Sign::Minus => self.minus,
        }
    }
}

/// A connected component of the candidate-pair graph, reduced to the
/// matchings it admits with their per-sign pair counts.
struct Component {
    options: Vec<(Vec<SignedPair>, u64, u64)>, // (pairs, plus_count, minus_count)
}

/// Enumerate consistent systems by decomposing the candidate-pair graph.
///
/// Vertices are `1, ..., p-1`; each vertex `x` offers the edge
/// `{x, inv(x)}` (sign `+`, absent when `inv(x) = x`) and the edge
/// `{x, p - inv(x)}` (sign `-`, absent when self-paired). Components of
/// this graph are alternating paths and even cycles. Every perfect
/// matching of the graph picks, in each path, the unique alternate-edge
/// cover (none exists for even-length paths) and, in each cycle, one of
/// the two alternate-edge covers. Solutions are the component choices
/// whose sign counts hit `(p-1)/4` each.
pub fn enumerate_by_structure(p: Modulus) -> Result<StructureEnumeration> {
    check_class(p)?;
    let pv = p.get();

    let mut nbrs = vec![
        Neighbors {
            plus: None,
            minus: None
        };
        pv as usize
    ];
    for x in 1..pv {
        let inv = inv_mod(x, p)?;
        nbrs[x as usize] = Neighbors {
            plus: (inv != x).then_some(inv),
            minus: (pv - inv != x).then_some(pv - inv),
        };
    }

    let mut visited = vec![false; pv as usize];
    let mut components: Vec<Component> = Vec::new();

    // Paths first: start from each degree-1 vertex.
    for start in 1..pv {
        if visited[start as usize] || nbrs[start as usize].degree() != 1 {
            continue;
        }
        let mut edges: Vec<SignedPair> = Vec::new();
        let mut cur = start;
        let mut incoming: Option<Sign> = None;
        loop {
            visited[cur as usize] = true;
            let nb = nbrs[cur as usize];
            let next_sign = match incoming {
                None => {
                    if nb.plus.is_some() {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                }
                Some(Sign::Plus) if nb.minus.is_some() => Sign::Minus,
                Some(Sign::Minus) if nb.plus.is_some() => Sign::Plus,
                Some(_) => break, // far endpoint reached
            };
            let next = nb.partner(next_sign).expect("edge present by choice");
            edges.push(SignedPair::new(cur, next, next_sign));
            incoming = Some(next_sign);
            cur = next;
        }
        components.push(Component {
            options: path_matchings(&edges),
        });
    }

    // Remaining unvisited vertices (if any) lie on cycles.
    for start in 1..pv {
        if visited[start as usize] {
            continue;
        }
        debug_assert_eq!(nbrs[start as usize].degree(), 2);
        let mut edges: Vec<SignedPair> = Vec::new();
        let mut cur = start;
        let mut sign = Sign::Plus; // deterministic first step
        loop {
            visited[cur as usize] = true;
            let next = nbrs[cur as usize].partner(sign).expect("cycle vertex");
            edges.push(SignedPair::new(cur, next, sign));
            cur = next;
            sign = match sign {
                Sign::Plus => Sign::Minus,
                Sign::Minus => Sign::Plus,
            };
            if cur == start {
                break;
            }
        }
        debug_assert_eq!(edges.len() % 2, 0);
        components.push(Component {
            options: cycle_matchings(&edges),
        });
    }

    // Product the component choices under the sign quotas.
    let quota = (pv - 1) / 4;
    let mut solutions: Vec<Vec<SignedPair>> = Vec::new();
    let mut current: Vec<SignedPair> = Vec::new();
    combine(
        &components,
        0,
        0,
        0,
        quota,
        &mut current,
        &mut solutions,
    );
    for sol in &mut solutions {
        sol.sort_unstable();
    }
    solutions.sort_unstable();
    Ok(StructureEnumeration {
        p: pv,
        solution_count: solutions.len() as u64,
        solutions,
    })
}

/// Matchings of a path given its edges in walk order: none when the edge
/// count is even, otherwise exactly the odd-position cover
/// `e_0, e_2, ...`.
fn path_matchings(edges: &[SignedPair]) -> Vec<(Vec<SignedPair>, u64, u64)> {
    if edges.len() % 2 == 0 {
        return Vec::new();
    }
    let picked: Vec<SignedPair> = edges.iter().copied().step_by(2).collect();
    let (plus, minus) = sign_counts(&picked);
    vec![(picked, plus, minus)]
}

/// The two alternate-edge covers of an even cycle.
fn cycle_matchings(edges: &[SignedPair]) -> Vec<(Vec<SignedPair>, u64, u64)> {
    let evens: Vec<SignedPair> = edges.iter().copied().step_by(2).collect();
    let odds: Vec<SignedPair> = edges.iter().copied().skip(1).step_by(2).collect();
    let (ep, em) = sign_counts(&evens);
    let (op, om) = sign_counts(&odds);
    vec![(evens, ep, em), (odds, op, om)]
}

fn sign_counts(pairs: &[SignedPair]) -> (u64, u64) {
    let plus = pairs.iter().filter(|q| q.sign == Sign::Plus).count() as u64;
    (plus, pairs.len() as u64 - plus)
}

fn combine(
    components: &[Component],
    idx: usize,
    plus: u64,
    minus: u64,
    quota: u64,
    current: &mut Vec<SignedPair>,
    out: &mut Vec<Vec<SignedPair>>,
) {
    if plus > quota || minus > quota {
        return;
    }
    if idx == components.len() {
        if plus == quota && minus == quota {
            out.push(current.clone());
        }
        return;
    }
    for (pairs, p_cnt, m_cnt) in &components[idx].options {
        let before = current.len();
        current.extend_from_slice(pairs);
        combine(components, idx + 1, plus + p_cnt, minus + m_cnt, quota, current, out);
        current.truncate(before);
    }
}
