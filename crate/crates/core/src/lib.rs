//! Exact expected runtimes and radius-control policies for RLS_k.
//!
//! RLS_k keeps one bit string and, in every iteration, flips exactly `k`
//! uniformly chosen bits; the offspring replaces the parent when it is not
//! worse (or, under strict selection, strictly better). The crate computes,
//! for LeadingOnes and for the lexicographic pair (LeadingOnes, OneMax):
//!
//! - closed-form transition probabilities between (LO, OM) states
//!   ([`state`]),
//! - optimal or fixed-point radius policies and the expected remaining
//!   runtime of every state ([`solvers`], [`policy`]),
//! - a seeded simulator of the algorithm itself ([`simulator`]),
//! - brute-force ground truth for all of the above ([`oracle`]).
//!
//! The crate is `no_std` (with `alloc`); enable the `std` feature to get
//! `std::error::Error` impls through the standard library.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod combinatorics;
pub mod error;
pub mod oracle;
pub mod policy;
pub mod runtime;
pub mod simulator;
pub mod solvers;
pub mod state;

pub use error::CoreError;
pub use policy::{Policy, Portfolio, PortfolioLabel};
pub use runtime::{ExtReal, RuntimeTable, TotalConvention};
pub use state::{BitString, FitnessKind, SelectionRule, Setting, StateLoOm, StateSpace};

pub type Result<T, E = CoreError> = core::result::Result<T, E>;
