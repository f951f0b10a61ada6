//! Turns a reduction-to-concepts plus an online learner into a betting
//! strategy on characteristic sequences.
//!
//! - [`seqcore`]: bit strings in canonical order and language oracles.
//! - [`gale`]: s-gales over exact rationals.
//! - [`learn`]: Winnow and the union learner.
//! - [`compile`]: the learner-to-gale compiler, weak and strong.
//! - [`reductions`]: set-valued and bounded-query Turing reductions recast as
//!   concept reductions.

pub mod compile;
pub mod gale;
pub mod learn;
pub mod rational;
pub mod reductions;
pub mod rng;
pub mod seqcore;

pub use num_bigint::BigInt;
pub use num_rational::BigRational;
