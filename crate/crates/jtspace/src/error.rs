//! Crate-wide error type.
//!
//! The CLI maps variants onto its exit-code contract: input errors are exit 2,
//! dual-norm non-convergence is exit 3.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Malformed or invariant-violating input; the message names a witness
    /// where one exists (an overlapping segment pair, an off-branch key, ...).
    #[error("input error: {0}")]
    Input(String),

    /// The cutting-plane iteration hit its cap before closing the gap.  Both
    /// bounds are still valid.
    #[error(
        "dual norm did not converge in {iterations} iterations: value in [{lower}, {upper}]"
    )]
    NonConvergence {
        lower: f64,
        upper: f64,
        iterations: usize,
    },

    /// Enumeration refused because the family count is out of desk range.
    #[error("refusing enumeration at depth {depth}: about {estimate} partitions")]
    EnumerationTooLarge { depth: u32, estimate: u128 },

    /// The greedy interval construction has no feasible block at index `k`.
    #[error("no feasible block F_{k}: {detail}")]
    InfeasibleBlock { k: usize, detail: String },
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
