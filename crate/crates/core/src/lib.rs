//! Chemistry-inspired average consensus on balanced directed graphs.
//!
//! The crate is `no_std` (with `alloc`) and carries the algorithmic parts:
//!
//! * [`chem`]: species, mass-action reactions and the deterministic
//!   next-reaction engine with an indexed priority queue.
//! * [`topology`]: balanced digraph generators, Laplacians and algebraic
//!   connectivity.
//! * [`crn`]: stoichiometric analysis, complexes, weak reversibility,
//!   deficiency and the deficiency-zero verdict.
//! * [`protocol`]: the per-node consensus chemistries (basic and full),
//!   scenario events and the lossy channel.
//! * [`gossip`]: randomized and broadcast gossip baselines.
//! * [`ode`]: mean-field oracles (RK4, matrix exponential, steady state).
//! * [`metrics`]: NMSE, deviation and convergence times.
//!
//! IO, file formats and the command line live in the `chemcons` crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod chem;
pub mod crn;
pub mod gossip;
pub mod linalg;
pub mod metrics;
pub mod ode;
pub mod protocol;
pub mod queue;
pub mod topology;

pub use chem::{Engine, Reaction, SpeciesId, SpeciesKind};
pub use metrics::TrajectorySample;
pub use topology::NetworkGraph;
