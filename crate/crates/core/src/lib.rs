//! Core of a genetic-programming symbolic-regression engine with a learned,
//! semantics-aware grafting operator.
//!
//! Subtrees sampled from the population are expanded one level inside a
//! semantic graph, a graph attention network scores the expansions, and the
//! best candidates are queued in a library from which the grafting operator
//! implants subprograms into parents.
//!
//! The crate is `no_std` (with `alloc`) when built without the default `std`
//! feature; file formats, the command line and experiment orchestration live
//! in the companion `neon` crate.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod data;
pub mod evolution;
pub mod expr;
pub mod featurize;
pub mod gat;
pub mod neon_ops;
pub mod semgraph;
pub mod taskgen;

pub use data::{DataMatrix, SrTask};
pub use expr::{Dsl, Expr, ExprError, Op, Terminal};
