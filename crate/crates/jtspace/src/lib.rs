//! Exact computation on finite truncations of the James space `J` and the
//! James tree space `JT`.
//!
//! The dyadic tree is addressed by heap-style keys: the node at level `n`,
//! index `i` has key `2^n + i`, the children of key `k` are `2k` and `2k + 1`.
//! A *segment* is a contiguous ancestor-descendant chain, and the `JT` norm of
//! a finitely supported vector is the supremum of the Euclidean length of its
//! segment-sum vectors over all families of pairwise disjoint segments.  The
//! `J` norm is the same construction on `ℕ` with intervals in place of
//! segments.
//!
//! Everything here is exact: coefficients are arbitrary-precision rationals,
//! norms are returned as exact squares together with a norming partition that
//! certifies the value, and the quantitative inequalities relating `J`, `JT`
//! and `ℓ₂` are checked in squared form where no rounding can occur.  The one
//! numerical component is the dual-norm solver for `JT*`, a cutting-plane
//! iteration that brackets the value between certified bounds and re-verifies
//! its witness with the exact primal engine.
//!
//! Entry points:
//! - [`tree`]: node arithmetic, segments, branches, partition enumeration.
//! - [`james`]: the `J` norm with interval-partition certificates.
//! - [`jt`]: the `JT` norm with segment-partition certificates, restriction
//!   projections and branch isometries.
//! - [`dual`]: segment functionals and the `JT*` dual norm.
//! - [`verify`]: property suites for the quantitative lemmas (lower/upper
//!   `ℓ₂`-estimates, block-basis equivalences, disjoint-family cardinality
//!   bounds, projection constructions).
//! - [`oracle`]: independent brute-force references the fast engines are
//!   tested against.
//! - [`gen`]: seeded, reproducible instance generators.

pub mod dual;
pub mod error;
pub mod gen;
pub mod james;
pub mod jt;
pub mod oracle;
pub mod rational;
mod simplex;
pub mod suites;
pub mod tree;
pub mod verify;

pub use error::{Error, Result};
pub use rational::Rational;
