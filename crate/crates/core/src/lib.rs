//! Distinct-factorial-residue ("socialist") prime search and verification.
//!
//! For an odd prime `p`, consider the residues of `2!, 3!, ..., (p-1)!`
//! modulo `p`. Call `p` *socialist* when those `p - 2` residues are
//! pairwise distinct. Only `p = 5` is known to qualify, and several
//! congruence identities force collisions for whole residue classes of
//! primes; this crate implements the machinery to search for candidates
//! and to verify the identities involved:
//!
//! * [`modmath`] - modular arithmetic, primality, prime streams;
//! * [`scan`] - factorial residue scans with early exit on the first
//!   collision, plus the Wilson-chain and half-factorial identities;
//! * [`filters`] - quadratic-residue screens every socialist prime must
//!   pass;
//! * [`pairing`] - alternating-sign pairing systems on `{1, ..., p-1}`,
//!   their exact product identities, and exhaustive enumeration of
//!   consistent systems;
//! * [`search`] - block-parallel range searches with checkpoint/resume;
//! * [`report`] - JSON/CSV report emission.

pub mod error;
pub mod filters;
pub mod modmath;
pub mod pairing;
pub mod report;
pub mod scan;
pub mod search;

pub use error::{Error, Result};
pub use modmath::Modulus;
