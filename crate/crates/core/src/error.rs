//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value that had to be prime was not.
    #[error("{0} is not prime")]
    NotPrime(u64),

    /// Modulus outside the supported domain (odd primes in `[3, 2^63)`).
    #[error("modulus {0} must be an odd prime in [3, 2^63)")]
    ModulusRange(u64),

    /// The operation needs a larger prime than it was given.
    #[error("p = {p} is too small here (need p >= {min})")]
    PrimeTooSmall { p: u64, min: u64 },

    /// The operation is only defined for primes in another residue class.
    #[error("p = {p} is in the wrong residue class (need p = {needed})")]
    ResidueClass { p: u64, needed: &'static str },

    /// Tried to invert 0.
    #[error("0 has no inverse modulo {0}")]
    ZeroInverse(u64),

    /// A non-modulus argument violated its documented range.
    #[error("{what} = {value} out of range (limit {limit})")]
    ArgOutOfRange {
        what: &'static str,
        value: u64,
        limit: u64,
    },

    /// An exhaustive computation was asked to run past its configured cap.
    #[error("{what}: p = {p} exceeds the cap {cap}")]
    CapExceeded {
        what: &'static str,
        p: u64,
        cap: u64,
    },

    /// A pairing system handed to an operation does not satisfy the
    /// operation's structural preconditions.
    #[error("invalid pairing system: {0}")]
    InvalidSystem(String),

    /// A search configuration that cannot be run.
    #[error("invalid search config: {0}")]
    InvalidConfig(String),

    /// A checkpoint written under a different configuration.
    #[error("checkpoint config digest {found} does not match current config {expected}")]
    CheckpointMismatch { expected: String, found: String },

    /// A checkpoint (or its records sidecar) that cannot be parsed back.
    #[error("corrupt checkpoint state at {path}: {reason}")]
    CheckpointCorrupt { path: PathBuf, reason: String },

    /// Asked to resume, but there is nothing to resume from.
    #[error("no checkpoint found at {0}")]
    CheckpointMissing(PathBuf),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Attach a path to a raw `std::io::Error`.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
