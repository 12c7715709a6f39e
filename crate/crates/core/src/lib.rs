//! Finite resistance networks and discrete gasket experiments.
//!
//! The crate is organised in four layers:
//!
//! * [`network`]: exact calculus on finite electrical networks (energies,
//!   effective resistances, traces, harmonic extensions, gluing laws and the
//!   recovery of conductances from a resistance metric).
//! * [`gasket`]: critical site percolation on the triangular lattice, cluster
//!   extraction, dead-end pruning and the Poisson cable-graph approximation.
//! * [`diffusion`]: the measure-symmetric jump process on a network, hitting
//!   probabilities, traces of trajectories and heat-kernel return probabilities.
//! * [`exponents`]: closed-form scaling exponents and their empirical
//!   estimators (volume growth, annulus resistance, spectral dimension).
//!
//! [`verify`] bundles the invariant checks of all layers into a single
//! randomized suite, and [`rng`] holds the counter-based seeding scheme used
//! everywhere randomness appears.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusion;
pub mod error;
pub mod exponents;
pub mod fixtures;
pub mod gasket;
pub mod network;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use network::{Network, NetworkBuilder, PotentialFunction, ResistanceMatrix, Tolerances, VertexId};
