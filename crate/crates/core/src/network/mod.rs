//! Finite electrical networks.
//!
//! A [`Network`] is a finite vertex set with symmetric, non-negative
//! conductances. Vertices carry opaque 64-bit labels; every map in this module
//! is keyed by label so that gluing two networks never renumbers the shared
//! vertices. Networks are immutable once built: every operation returns a new
//! value.

mod calculus;
pub mod io;
mod laws;
mod solve;

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use calculus::{
    dirichlet_energy, effective_resistance, harmonic_extension, resistance_matrix, trace_network, trace_network_report,
    weights_from_resistance, weights_from_resistance_report,
};
pub use laws::{
    contract_pair, contract_set, contraction_bound, glue_at_cut_point, glue_overlapping, parallel_law_bound, separates,
    series_decompose, ContractionCheck, ParallelLawBound,
};

/// Resistance reported between vertices in different connected components.
pub const INFINITE_RESISTANCE: f64 = f64::INFINITY;

/// Opaque vertex label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub u64);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for VertexId {
    fn from(v: u64) -> Self {
        VertexId(v)
    }
}

/// Numerical tolerances for solves and identity checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative residual target of the iterative solver.
    pub solve_tol: f64,
    /// Absolute tolerance for identity checks and conductance clamping.
    pub assert_tol: f64,
    /// Largest free-vertex count solved with a dense Cholesky factorisation;
    /// larger systems use preconditioned conjugate gradients.
    pub dense_limit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { solve_tol: 1e-10, assert_tol: 1e-9, dense_limit: 4096 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        if !(self.solve_tol > 0.0) || !(self.assert_tol > 0.0) {
            return Err(Error::arg("tolerances must be positive"));
        }
        Ok(())
    }
}

/// Finite weighted graph. Only strictly positive conductances are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    // neighbour lists sorted by neighbour index
    adj: Vec<Vec<(usize, f64)>>,
}

impl Network {
    pub fn builder() -> NetworkBuilder {
        NetworkBuilder::default()
    }

    /// Builds a network from a vertex list and `(u, v, w)` triples. Repeated
    /// pairs have their conductances added.
    pub fn from_edges<I, E>(vertices: I, edges: E) -> Result<Network>
    where
        I: IntoIterator<Item = u64>,
        E: IntoIterator<Item = (u64, u64, f64)>,
    {
        let mut b = NetworkBuilder::default();
        for v in vertices {
            b.add_vertex(VertexId(v));
        }
        for (u, v, w) in edges {
            b.add_conductance(VertexId(u), VertexId(v), w)?;
        }
        Ok(b.build())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> VertexId {
        self.ids[i]
    }

    pub fn index_of(&self, v: VertexId) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub(crate) fn require(&self, v: VertexId) -> Result<usize> {
        self.index_of(v).ok_or(Error::UnknownVertex(v))
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index.contains_key(&v)
    }

    /// Neighbours of vertex index `i` with their conductances.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Conductance `w(u, v)`; zero for non-adjacent or unknown vertices.
    pub fn conductance(&self, u: VertexId, v: VertexId) -> f64 {
        match (self.index_of(u), self.index_of(v)) {
            (Some(i), Some(j)) => self.conductance_idx(i, j),
            _ => 0.0,
        }
    }

    pub(crate) fn conductance_idx(&self, i: usize, j: usize) -> f64 {
        match self.adj[i].binary_search_by_key(&j, |&(k, _)| k) {
            Ok(pos) => self.adj[i][pos].1,
            Err(_) => 0.0,
        }
    }

    /// `λ(x) = Σ_z w(x, z)`, the total conductance at vertex index `i`.
    pub fn total_conductance(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges as `(u, v, w)` with `u` before `v` in vertex order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(move |(i, nb)| {
            nb.iter().filter(move |&&(j, _)| j > i).map(move |&(j, w)| (self.ids[i], self.ids[j], w))
        })
    }

    /// Component label per vertex index; labels are dense and ordered by the
    /// smallest vertex index of each component.
    pub fn component_labels(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.len()];
        let mut next = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.len() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        queue.push_back(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn n_components(&self) -> usize {
        self.component_labels().iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn is_connected(&self) -> bool {
        self.len() <= 1 || self.n_components() == 1
    }

    /// Vertex indices reachable from `start`, in BFS order.
    pub(crate) fn reachable_from(&self, start: usize, blocked: &[bool]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        if blocked.get(start).copied().unwrap_or(false) {
            return seen;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adj[u] {
                if !seen[v] && !blocked.get(v).copied().unwrap_or(false) {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    pub fn connected(&self, u: VertexId, v: VertexId) -> Result<bool> {
        let (i, j) = (self.require(u)?, self.require(v)?);
        Ok(self.reachable_from(i, &[])[j])
    }

    /// Subnetwork induced on `keep` (conductances among kept vertices only).
    pub fn induced(&self, keep: &[VertexId]) -> Result<Network> {
        let mut b = NetworkBuilder::default();
        let mut mask = vec![false; self.len()];
        for &v in keep {
            mask[self.require(v)?] = true;
            b.add_vertex(v);
        }
        for (i, nb) in self.adj.iter().enumerate() {
            if !mask[i] {
                continue;
            }
            for &(j, w) in nb {
                if j > i && mask[j] {
                    b.push_edge_unchecked(self.ids[i], self.ids[j], w);
                }
            }
        }
        Ok(b.build())
    }

    /// Same vertices, conductance of `(u, v)` replaced by `w` (zero removes the edge).
    pub fn with_conductance(&self, u: VertexId, v: VertexId, w: f64) -> Result<Network> {
        let (i, j) = (self.require(u)?, self.require(v)?);
        let mut b = self.to_builder();
        b.set_conductance_idx(i, j, w)?;
        Ok(b.build())
    }

    /// All conductances multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Network> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::arg("scale factor must be positive and finite"));
        }
        let mut net = self.clone();
        for nb in &mut net.adj {
            for e in nb.iter_mut() {
                e.1 *= factor;
            }
        }
        Ok(net)
    }

    pub fn to_builder(&self) -> NetworkBuilder {
        let mut b = NetworkBuilder::default();
        for &id in &self.ids {
            b.add_vertex(id);
        }
        for (u, v, w) in self.edges() {
            b.push_edge_unchecked(u, v, w);
        }
        b
    }
}

/// Incremental constructor for [`Network`].
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    weights: BTreeMap<(usize, usize), f64>,
}

impl NetworkBuilder {
    /// Adds `v` if absent and returns its index.
    pub fn add_vertex(&mut self, v: VertexId) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(v);
        self.index.insert(v, i);
        i
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index.contains_key(&v)
    }

    fn check_weight(w: f64) -> Result<()> {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::arg(format!("conductance must be finite and >= 0, got {w}")));
        }
        Ok(())
    }

    /// Adds `w` to the conductance between `u` and `v` (vertices are created
    /// as needed).
    pub fn add_conductance(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<&mut Self> {
        Self::check_weight(w)?;
        if u == v {
            return Err(Error::arg(format!("self-loop at vertex {u}")));
        }
        let (i, j) = (self.add_vertex(u), self.add_vertex(v));
        *self.weights.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        Ok(self)
    }

    pub fn set_conductance(&mut self, u: VertexId, v: VertexId, w: f64) -> Result<&mut Self> {
        let (i, j) = (self.add_vertex(u), self.add_vertex(v));
        self.set_conductance_idx(i, j, w)?;
        Ok(self)
    }

    fn set_conductance_idx(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        Self::check_weight(w)?;
        if i == j {
            return Err(Error::arg(format!("self-loop at vertex {}", self.ids[i])));
        }
        self.weights.insert((i.min(j), i.max(j)), w);
        Ok(())
    }

    pub(crate) fn push_edge_unchecked(&mut self, u: VertexId, v: VertexId, w: f64) {
        let (i, j) = (self.add_vertex(u), self.add_vertex(v));
        *self.weights.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
    }

    pub fn build(self) -> Network {
        let mut adj = vec![Vec::new(); self.ids.len()];
        for (&(i, j), &w) in &self.weights {
            if w > 0.0 {
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
        for nb in &mut adj {
            nb.sort_by_key(|&(k, _)| k);
        }
        Network { ids: self.ids, index: self.index, adj }
    }
}

/// Real-valued function on (a subset of) the vertices of a network.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PotentialFunction {
    values: BTreeMap<VertexId, f64>,
}

impl PotentialFunction {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (u64, f64)>>(pairs: I) -> Self {
        PotentialFunction { values: pairs.into_iter().map(|(k, v)| (VertexId(k), v)).collect() }
    }

    pub fn constant(net: &Network, c: f64) -> Self {
        PotentialFunction { values: net.ids().iter().map(|&v| (v, c)).collect() }
    }

    pub fn get(&self, v: VertexId) -> Option<f64> {
        self.values.get(&v).copied()
    }

    pub fn set(&mut self, v: VertexId, value: f64) {
        self.values.insert(v, value);
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.values.iter().map(|(&k, &v)| (k, v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values in the vertex order of `net`.
    pub(crate) fn dense(&self, net: &Network) -> Result<Vec<f64>> {
        net.ids().iter().map(|&v| self.get(v).ok_or(Error::DomainMismatch(v))).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        PotentialFunction { values: self.values.iter().map(|(&k, &v)| (k, f(v))).collect() }
    }
}

/// All-pairs effective resistance on a finite vertex list.
#[derive(Clone, Debug, PartialEq)]
pub struct ResistanceMatrix {
    ids: Vec<VertexId>,
    r: nalgebra::DMatrix<f64>,
}

impl ResistanceMatrix {
    /// Wraps a symmetric, zero-diagonal matrix. Only the shape and the
    /// symmetry/diagonal/sign invariants are checked here; whether the matrix
    /// is a resistance metric is decided by [`weights_from_resistance`].
    pub fn new(ids: Vec<VertexId>, r: nalgebra::DMatrix<f64>) -> Result<Self> {
        let n = ids.len();
        if r.nrows() != n || r.ncols() != n {
            return Err(Error::arg("resistance matrix shape does not match vertex list"));
        }
        let mut seen = std::collections::HashSet::new();
        for &v in &ids {
            if !seen.insert(v) {
                return Err(Error::arg(format!("duplicate vertex {v}")));
            }
        }
        for i in 0..n {
            if r[(i, i)] != 0.0 {
                return Err(Error::arg("resistance matrix must have a zero diagonal"));
            }
            for j in 0..i {
                if r[(i, j)] != r[(j, i)] {
                    return Err(Error::arg("resistance matrix must be symmetric"));
                }
                if !(r[(i, j)] > 0.0) {
                    return Err(Error::arg("off-diagonal resistances must be positive"));
                }
            }
        }
        Ok(ResistanceMatrix { ids, r })
    }

    pub(crate) fn new_unchecked(ids: Vec<VertexId>, r: nalgebra::DMatrix<f64>) -> Self {
        ResistanceMatrix { ids, r }
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn matrix(&self) -> &nalgebra::DMatrix<f64> {
        &self.r
    }

    pub fn get(&self, u: VertexId, v: VertexId) -> Option<f64> {
        let i = self.ids.iter().position(|&x| x == u)?;
        let j = self.ids.iter().position(|&x| x == v)?;
        Some(self.r[(i, j)])
    }

    /// Largest violation of `R(x,z) <= R(x,y) + R(y,z)` (zero if none).
    pub fn triangle_violation(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let excess = self.r[(i, k)] - self.r[(i, j)] - self.r[(j, k)];
                    if excess.is_finite() {
                        worst = worst.max(excess);
                    }
                }
            }
        }
        worst
    }

    /// Largest asymmetry `|R(x,y) - R(y,x)|` plus largest absolute diagonal.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            worst = worst.max(self.r[(i, i)].abs());
            for j in 0..i {
                worst = worst.max((self.r[(i, j)] - self.r[(j, i)]).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_accumulates_and_symmetrises() {
        let net = Network::from_edges([1, 2, 3], [(1, 2, 1.0), (2, 1, 0.5), (2, 3, 2.0)]).unwrap();
        assert_eq!(net.conductance(VertexId(1), VertexId(2)), 1.5);
        assert_eq!(net.conductance(VertexId(2), VertexId(1)), 1.5);
        assert_eq!(net.conductance(VertexId(1), VertexId(3)), 0.0);
        assert_eq!(net.conductance(VertexId(1), VertexId(1)), 0.0);
        assert_eq!(net.n_edges(), 2);
        assert!(net.is_connected());
    }

    #[test]
    fn builder_rejects_bad_weights() {
        let mut b = Network::builder();
        assert!(b.add_conductance(VertexId(1), VertexId(2), -1.0).is_err());
        assert!(b.add_conductance(VertexId(1), VertexId(2), f64::INFINITY).is_err());
        assert!(b.add_conductance(VertexId(1), VertexId(1), 1.0).is_err());
    }

    #[test]
    fn components_of_disjoint_edges() {
        let net = Network::from_edges([1, 2, 3, 4, 5], [(1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        assert_eq!(net.n_components(), 3);
        assert!(!net.is_connected());
        assert!(!net.connected(VertexId(1), VertexId(3)).unwrap());
    }

    #[test]
    fn resistance_matrix_validation() {
        let ids = vec![VertexId(1), VertexId(2)];
        let ok = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(ResistanceMatrix::new(ids.clone(), ok).is_ok());
        let asym = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(ResistanceMatrix::new(ids.clone(), asym).is_err());
        let diag = nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 0.0]);
        assert!(ResistanceMatrix::new(ids, diag).is_err());
    }
}
