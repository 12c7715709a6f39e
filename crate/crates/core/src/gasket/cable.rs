//! Poisson cable-graph approximation of a cluster at scale `eps`.

use std::collections::BTreeMap;

use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::cluster::{BfsScratch, ClusterGraph};
use super::lattice::Axial;
use super::prune::dead_end_prune;
use crate::error::{Error, Result};
use crate::network::{Network, NetworkBuilder, VertexId};
use crate::rng::{stream_rng, streams};

/// Edge resistance convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeMode {
    /// resistance = chemical length of the cable
    Length,
    /// resistance = 1 for every cable
    Unit,
}

impl EdgeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EdgeMode::Length => "length",
            EdgeMode::Unit => "unit",
        }
    }

    pub fn parse(s: &str) -> Result<EdgeMode> {
        match s {
            "length" => Ok(EdgeMode::Length),
            "unit" => Ok(EdgeMode::Unit),
            _ => Err(Error::arg(format!("unknown edge mode {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CableParams {
    /// Cable scale in lattice steps.
    pub eps: f64,
    pub c0: f64,
    pub a0: f64,
    /// Target dimension in the intensity exponent.
    pub d: f64,
    /// Prefactor `A` in the per-site intensity `A · eps^(−d−c0)`.
    pub intensity_scale: f64,
    pub edge_mode: EdgeMode,
}

impl Default for CableParams {
    fn default() -> Self {
        CableParams { eps: 4.0, c0: 0.05, a0: 0.25, d: 91.0 / 48.0, intensity_scale: 1.0, edge_mode: EdgeMode::Length }
    }
}

impl CableParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 2.0) || !self.eps.is_finite() {
            return Err(Error::arg(format!("eps must be >= 2 lattice steps, got {}", self.eps)));
        }
        if !(self.d > 0.0) {
            return Err(Error::arg(format!("dimension d must be > 0, got {}", self.d)));
        }
        if !(self.c0 >= 0.0) || !(self.a0 >= 0.0) {
            return Err(Error::arg("c0 and a0 must be >= 0"));
        }
        if !(self.intensity_scale >= 0.0) || !self.intensity_scale.is_finite() {
            return Err(Error::arg("intensity scale must be finite and >= 0"));
        }
        Ok(())
    }

    /// Expected number of Poisson points per cluster site.
    pub fn intensity(&self) -> f64 {
        self.intensity_scale * self.eps.powf(-self.d - self.c0)
    }

    /// Dead-end scale in lattice steps for a cluster of chemical diameter `diam`:
    /// `(eps/diam)^a0` measured in units of the diameter.
    pub fn prune_scale(&self, diam: f64) -> f64 {
        if diam <= 0.0 {
            return 0.0;
        }
        (self.eps / diam).powf(self.a0) * diam
    }
}

/// Cable network on a cluster. Vertex labels are cluster site indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CableNetwork {
    pub network: Network,
    pub coords: BTreeMap<VertexId, Axial>,
    pub params: CableParams,
    /// Total Poisson count (points landing on one site share a vertex).
    pub n_points: u64,
    /// Dead-end scale actually used, in lattice steps.
    pub prune_scale: f64,
    /// Sites cut away as dead ends.
    pub removed: Vec<Axial>,
}

impl CableNetwork {
    pub fn is_empty(&self) -> bool {
        self.network.is_empty()
    }

    pub fn coord(&self, v: VertexId) -> Option<Axial> {
        self.coords.get(&v).copied()
    }
}

/// Builds the cable network of `cluster` at scale `params.eps`.
///
/// Dead ends below the prune scale are removed, every kept site receives a
/// Poisson(`intensity`) number of points, occupied sites become vertices, and
/// two vertices are joined when their chemical distance is below `eps`, with
/// resistance equal to that distance (or 1 in [`EdgeMode::Unit`]). An empty
/// sample yields a network with no vertices.
pub fn cable_approximation(cluster: &ClusterGraph, params: &CableParams, seed: u64) -> Result<CableNetwork> {
    params.validate()?;
    let diam = cluster.diameter_lower_bound() as f64;
    let prune_scale = params.prune_scale(diam);
    let pr = dead_end_prune(cluster, prune_scale)?;
    let lambda = params.intensity();

    let mut rng = stream_rng(seed, 0, streams::CABLE_VERTICES);
    let mut n_points = 0u64;
    let mut chosen = Vec::new();
    if lambda > 0.0 {
        let pois = Poisson::new(lambda).map_err(|e| Error::arg(format!("intensity {lambda}: {e}")))?;
        for &i in &pr.kept {
            let k = pois.sample(&mut rng) as u64;
            if k > 0 {
                n_points += k;
                chosen.push(i);
            }
        }
    }

    let mut is_vertex = vec![false; cluster.len()];
    let mut b = NetworkBuilder::default();
    let mut coords = BTreeMap::new();
    for &i in &chosen {
        is_vertex[i] = true;
        b.add_vertex(VertexId(i as u64));
        coords.insert(VertexId(i as u64), cluster.site(i));
    }
    let reach = reach_depth(params.eps);
    let mut scratch = BfsScratch::default();
    for &i in &chosen {
        cluster.bfs_local(i, reach, Some(&pr.is_kept), &mut scratch, |j, d| {
            if j > i && is_vertex[j] {
                let res = match params.edge_mode {
                    EdgeMode::Length => d as f64,
                    EdgeMode::Unit => 1.0,
                };
                b.push_edge_unchecked(VertexId(i as u64), VertexId(j as u64), 1.0 / res);
            }
        });
    }
    let removed = pr.removed.iter().map(|&i| cluster.site(i)).collect();
    Ok(CableNetwork { network: b.build(), coords, params: *params, n_points, prune_scale, removed })
}

/// Largest integer distance strictly below `eps`.
fn reach_depth(eps: f64) -> u32 {
    (eps.ceil() - 1.0).max(0.0) as u32
}

/// Outcome of the exhaustive post-hoc check of a cable network against its cluster.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CableAudit {
    pub pairs_checked: usize,
    /// vertex pairs with chemical distance < eps but no edge
    pub missing_edges: usize,
    /// edges whose resistance is below the chemical distance
    pub short_edges: usize,
    /// edges joining vertices at chemical distance >= eps
    pub long_edges: usize,
    /// vertices that are not sites of the cluster, or sit on pruned sites
    pub misplaced_vertices: usize,
}

impl CableAudit {
    pub fn ok(&self) -> bool {
        self.missing_edges == 0 && self.short_edges == 0 && self.long_edges == 0 && self.misplaced_vertices == 0
    }
}

/// Recomputes every cable from scratch on the unpruned cluster.
pub fn verify_cable(cluster: &ClusterGraph, cable: &CableNetwork) -> CableAudit {
    let net = &cable.network;
    let mut audit =
        CableAudit { pairs_checked: 0, missing_edges: 0, short_edges: 0, long_edges: 0, misplaced_vertices: 0 };
    let removed: std::collections::HashSet<Axial> = cable.removed.iter().copied().collect();
    let mut site_of = Vec::with_capacity(net.len());
    for &v in net.ids() {
        let site = cable.coord(v).and_then(|a| cluster.index_of(a));
        match site {
            Some(i) if !removed.contains(&cluster.site(i)) => site_of.push(Some(i)),
            _ => {
                audit.misplaced_vertices += 1;
                site_of.push(None);
            }
        }
    }
    let mut vertex_at = vec![usize::MAX; cluster.len()];
    for (k, s) in site_of.iter().enumerate() {
        if let Some(i) = s {
            vertex_at[*i] = k;
        }
    }
    let reach = reach_depth(cable.params.eps);
    let mut scratch = BfsScratch::default();
    for (k, s) in site_of.iter().enumerate() {
        let Some(i) = *s else { continue };
        let mut near = BTreeMap::new();
        cluster.bfs_local(i, reach, None, &mut scratch, |j, d| {
            if vertex_at[j] != usize::MAX && vertex_at[j] != k {
                near.insert(vertex_at[j], d);
            }
        });
        for (&other, &d) in &near {
            if other > k {
                audit.pairs_checked += 1;
                let w = net.conductance_idx(k, other);
                if w == 0.0 {
                    audit.missing_edges += 1;
                } else if cable.params.edge_mode == EdgeMode::Length && 1.0 / w < d as f64 - 1e-9 {
                    audit.short_edges += 1;
                }
            }
        }
        for &(other, _) in net.neighbors(k) {
            if other > k && !near.contains_key(&other) {
                audit.long_edges += 1;
            }
        }
    }
    audit
}
