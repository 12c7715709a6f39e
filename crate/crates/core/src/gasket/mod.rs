//! Discrete gasket proxies: critical site percolation on the triangular
//! lattice and the Poisson cable-graph approximation built on its clusters.
//!
//! Sites use axial coordinates `(q, r)` on an `L × L` rhombus with free
//! boundary. Counting measure on cluster sites stands in for the gasket
//! measure and chemical (graph) distance for the intrinsic metric.

mod cable;
mod cluster;
mod lattice;
mod prune;
mod snapshot;
mod volume;

pub use cable::{cable_approximation, verify_cable, CableAudit, CableNetwork, CableParams, EdgeMode};
pub use cluster::{extract_clusters, BfsScratch, ClusterGraph};
pub use lattice::{
    crossing_probability, hex_distance, sample_percolation, Axial, LatticeConfig, NEIGHBORS, P_CRITICAL,
};
pub use prune::{dead_end_prune, root_block, PruneResult};
pub use snapshot::{read_cable, read_snapshot, write_cable, write_snapshot, ClusterSnapshot};
pub use volume::{ball_size_full_lattice, chemical_ball, volume_profile, BallMetric, VolumeProfile};
