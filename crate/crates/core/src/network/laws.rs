use std::collections::{BTreeSet, HashSet};

use super::calculus::{effective_resistance, resistance_matrix};
use super::{Network, NetworkBuilder, Tolerances, VertexId};
use crate::error::{Error, Result};

fn vertex_set(net: &Network) -> BTreeSet<VertexId> {
    net.ids().iter().copied().collect()
}

fn union_builder(net1: &Network, net2: &Network) -> NetworkBuilder {
    let mut b = NetworkBuilder::default();
    for &v in net1.ids().iter().chain(net2.ids()) {
        b.add_vertex(v);
    }
    for (u, v, w) in net1.edges().chain(net2.edges()) {
        b.push_edge_unchecked(u, v, w);
    }
    b
}

/// Glues two networks whose vertex sets meet exactly in `z`.
///
/// `z` becomes a cut vertex, so resistances across it add in series.
pub fn glue_at_cut_point(net1: &Network, net2: &Network, z: VertexId) -> Result<Network> {
    let common: Vec<VertexId> = vertex_set(net1).intersection(&vertex_set(net2)).copied().collect();
    if common != [z] {
        return Err(Error::arg(format!("networks must share exactly the vertex {z}, they share {common:?}")));
    }
    Ok(union_builder(net1, net2).build())
}

/// Glues two networks along a finite shared vertex set.
///
/// Conductances between two shared vertices add; all other conductances are
/// inherited from the side that defines them; pairs split across the two
/// sides get none. Consequently the energy of any function is the sum of the
/// energies of its two restrictions.
pub fn glue_overlapping(net1: &Network, net2: &Network, shared: &[VertexId]) -> Result<Network> {
    let want: BTreeSet<VertexId> = shared.iter().copied().collect();
    if want.is_empty() {
        return Err(Error::arg("shared vertex set must be nonempty"));
    }
    let common: BTreeSet<VertexId> = vertex_set(net1).intersection(&vertex_set(net2)).copied().collect();
    if common != want {
        return Err(Error::arg(format!("vertex-set intersection {common:?} differs from shared set {want:?}")));
    }
    Ok(union_builder(net1, net2).build())
}

/// Merges every vertex of `set` into a single vertex labelled `label`.
///
/// `label` may be one of the merged vertices or a fresh label. Conductances
/// inside `set` disappear; parallel conductances created by the merge add.
pub fn contract_set(net: &Network, set: &[VertexId], label: VertexId) -> Result<Network> {
    let mut merged = HashSet::new();
    for &v in set {
        net.require(v)?;
        merged.insert(v);
    }
    if net.contains(label) && !merged.contains(&label) {
        return Err(Error::arg(format!("label {label} already names an unmerged vertex")));
    }
    let map = |v: VertexId| if merged.contains(&v) { label } else { v };
    let mut b = NetworkBuilder::default();
    for &v in net.ids() {
        b.add_vertex(map(v));
    }
    for (u, v, w) in net.edges() {
        let (mu, mv) = (map(u), map(v));
        if mu != mv {
            b.push_edge_unchecked(mu, mv, w);
        }
    }
    Ok(b.build())
}

/// Identifies `x0` and `y0` (infinite conductance between them). The merged
/// vertex keeps the label `x0`.
pub fn contract_pair(net: &Network, x0: VertexId, y0: VertexId) -> Result<Network> {
    if x0 == y0 {
        return Err(Error::arg("cannot contract a vertex with itself"));
    }
    contract_set(net, &[x0, y0], x0)
}

/// Outcome of checking `R(x,y) ≤ R'(x,y) + 1/w(x0,y0)` over all pairs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContractionCheck {
    /// `max_{x,y} R(x,y) − R'(x,y) − 1/w(x0,y0)`; negative or zero when the bound holds.
    pub worst_excess: f64,
    pub pairs: usize,
    pub holds: bool,
}

/// Checks the contraction inequality on every pair of vertices of `net`.
pub fn contraction_bound(net: &Network, x0: VertexId, y0: VertexId, tol: &Tolerances) -> Result<ContractionCheck> {
    let contracted = contract_pair(net, x0, y0)?;
    let w = net.conductance(x0, y0);
    let slack = if w > 0.0 { 1.0 / w } else { f64::INFINITY };
    let ids = net.ids().to_vec();
    let full = resistance_matrix(net, &ids, tol)?;
    let merged_ids = contracted.ids().to_vec();
    let reduced = resistance_matrix(&contracted, &merged_ids, tol)?;
    let map = |v: VertexId| if v == y0 { x0 } else { v };
    let mut worst = f64::NEG_INFINITY;
    let mut pairs = 0;
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[..i] {
            let r = full.matrix()[(i, ids.iter().position(|&q| q == b).unwrap())];
            let r_merged = reduced.get(map(a), map(b)).unwrap_or(0.0);
            let excess =
                if slack.is_infinite() || r_merged.is_infinite() { f64::NEG_INFINITY } else { r - r_merged - slack };
            worst = worst.max(excess);
            pairs += 1;
        }
    }
    Ok(ContractionCheck { worst_excess: worst, pairs, holds: worst <= tol.assert_tol })
}

/// Does removing `set` disconnect `x` from `y` in the positive-conductance graph?
pub fn separates(net: &Network, x: VertexId, y: VertexId, set: &[VertexId]) -> Result<bool> {
    let (i, j) = (net.require(x)?, net.require(y)?);
    let mut blocked = vec![false; net.len()];
    for &z in set {
        blocked[net.require(z)?] = true;
    }
    if blocked[i] || blocked[j] {
        return Ok(false);
    }
    Ok(!net.reachable_from(i, &blocked)[j])
}

/// Both sides of the generalized parallel law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParallelLawBound {
    /// `R(x,y)⁻¹` on the whole network.
    pub lhs: f64,
    /// `Σ_i R_{K_x}(x, z_i)⁻¹` on the part `K_x` not strictly separated from `x`.
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates `R(x,y)⁻¹ ≤ Σ_i R_{K_x}(x,z_i)⁻¹` for a separating set `{z_i}`.
pub fn parallel_law_bound(
    net: &Network,
    x: VertexId,
    y: VertexId,
    separators: &[VertexId],
    tol: &Tolerances,
) -> Result<ParallelLawBound> {
    if separators.is_empty() {
        return Err(Error::Precondition("separator set is empty".into()));
    }
    if separators.contains(&x) || separators.contains(&y) {
        return Err(Error::Precondition("x and y must not be separators".into()));
    }
    if !separates(net, x, y, separators)? {
        return Err(Error::Precondition(format!("{separators:?} does not separate {x} from {y}")));
    }
    let i = net.require(x)?;
    let mut blocked = vec![false; net.len()];
    for &z in separators {
        blocked[net.require(z)?] = true;
    }
    let side = net.reachable_from(i, &blocked);
    let keep: Vec<VertexId> = (0..net.len()).filter(|&k| side[k] || blocked[k]).map(|k| net.id(k)).collect();
    let k_x = net.induced(&keep)?;

    let inv = |r: f64| if r.is_infinite() { 0.0 } else { 1.0 / r };
    let lhs = inv(effective_resistance(net, x, y, tol)?);
    let mut rhs = 0.0;
    for &z in separators {
        rhs += inv(effective_resistance(&k_x, x, z, tol)?);
    }
    Ok(ParallelLawBound { lhs, rhs, holds: lhs <= rhs + tol.assert_tol })
}

/// Series law at a cut vertex.
///
/// Returns `false` when `z` does not separate `x` from `y` (or `x` and `y` are
/// not connected at all). When it does, checks `R(x,y) = R(x,z) + R(z,y)` and
/// returns `true`, or an error if the identity fails numerically.
pub fn series_decompose(net: &Network, x: VertexId, z: VertexId, y: VertexId, tol: &Tolerances) -> Result<bool> {
    if z == x || z == y || x == y {
        return Ok(false);
    }
    if !net.connected(x, y)? || !separates(net, x, y, &[z])? {
        return Ok(false);
    }
    let lhs = effective_resistance(net, x, y, tol)?;
    let rhs = effective_resistance(net, x, z, tol)? + effective_resistance(net, z, y, tol)?;
    if (lhs - rhs).abs() > tol.assert_tol * rhs.max(1.0) {
        return Err(Error::IdentityViolated(format!("series law: R(x,y) = {lhs} but R(x,z)+R(z,y) = {rhs}")));
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: u64) -> VertexId {
        VertexId(x)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn k3(a: u64, b: u64, c: u64) -> Network {
        Network::from_edges([a, b, c], [(a, b, 1.0), (b, c, 1.0), (a, c, 1.0)]).unwrap()
    }

    #[test]
    fn cut_point_examples() {
        let left = Network::from_edges([0, 9], [(0, 9, 1.0)]).unwrap();
        let right = Network::from_edges([9, 1], [(9, 1, 1.0)]).unwrap();
        let g = glue_at_cut_point(&left, &right, v(9)).unwrap();
        assert!((effective_resistance(&g, v(0), v(1), &tol()).unwrap() - 2.0).abs() < 1e-12);

        let g = glue_at_cut_point(&k3(0, 1, 9), &k3(9, 2, 3), v(9)).unwrap();
        assert!((effective_resistance(&g, v(0), v(3), &tol()).unwrap() - 4.0 / 3.0).abs() < 1e-12);

        let lone = Network::from_edges([9], []).unwrap();
        let g = glue_at_cut_point(&k3(0, 1, 9), &lone, v(9)).unwrap();
        assert_eq!(g, k3(0, 1, 9));

        assert!(glue_at_cut_point(&k3(0, 1, 9), &k3(0, 9, 5), v(9)).is_err());
    }

    #[test]
    fn overlapping_examples() {
        let e = Network::from_edges([0, 1], [(0, 1, 1.0)]).unwrap();
        let g = glue_overlapping(&e, &e, &[v(0), v(1)]).unwrap();
        assert_eq!(g.conductance(v(0), v(1)), 2.0);

        let p = Network::from_edges([0, 2, 1], [(0, 2, 1.0), (2, 1, 1.0)]).unwrap();
        let g = glue_overlapping(&e, &p, &[v(0), v(1)]).unwrap();
        let t = super::super::trace_network(&g, &[v(0), v(1)], &tol()).unwrap();
        assert!((t.conductance(v(0), v(1)) - 1.5).abs() < 1e-12);

        let left = Network::from_edges([0, 9], [(0, 9, 1.0)]).unwrap();
        let right = Network::from_edges([9, 1], [(9, 1, 1.0)]).unwrap();
        assert_eq!(glue_overlapping(&left, &right, &[v(9)]).unwrap(), glue_at_cut_point(&left, &right, v(9)).unwrap());
        assert!(glue_overlapping(&e, &p, &[v(0)]).is_err());
    }

    #[test]
    fn contraction_example() {
        let path = Network::from_edges([0, 1, 2], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let c = contract_pair(&path, v(1), v(2)).unwrap();
        assert_eq!(c.len(), 2);
        assert!((effective_resistance(&c, v(0), v(1), &tol()).unwrap() - 1.0).abs() < 1e-12);
        let check = contraction_bound(&path, v(1), v(2), &tol()).unwrap();
        assert!(check.holds);
        // R(a,c) = 2 = 1 + 1 is tight
        assert!(check.worst_excess.abs() < 1e-12);
        assert!(contract_pair(&path, v(1), v(1)).is_err());
    }

    #[test]
    fn contraction_of_merged_pair_is_identity() {
        let path = Network::from_edges([0, 1, 2], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let once = contract_pair(&path, v(1), v(2)).unwrap();
        let twice = contract_set(&once, &[v(1)], v(1)).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn parallel_law_examples() {
        let path = Network::from_edges([0, 9, 1], [(0, 9, 1.0), (9, 1, 1.0)]).unwrap();
        let b = parallel_law_bound(&path, v(0), v(1), &[v(9)], &tol()).unwrap();
        assert!((b.lhs - 0.5).abs() < 1e-12 && (b.rhs - 1.0).abs() < 1e-12 && b.holds);

        let theta =
            Network::from_edges([0, 1, 10, 11], [(0, 10, 1.0), (10, 1, 1.0), (0, 11, 1.0), (11, 1, 1.0)]).unwrap();
        let b = parallel_law_bound(&theta, v(0), v(1), &[v(10), v(11)], &tol()).unwrap();
        assert!((b.lhs - 1.0).abs() < 1e-12 && (b.rhs - 2.0).abs() < 1e-12 && b.holds);

        assert!(matches!(parallel_law_bound(&theta, v(0), v(1), &[v(10)], &tol()), Err(Error::Precondition(_))));
    }

    #[test]
    fn series_examples() {
        let path = Network::from_edges([0, 1, 2], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert!(series_decompose(&path, v(0), v(1), v(2), &tol()).unwrap());
        assert!(!series_decompose(&k3(0, 1, 2), v(0), v(1), v(2), &tol()).unwrap());
        let g = glue_at_cut_point(&k3(0, 1, 9), &k3(9, 2, 3), v(9)).unwrap();
        assert!(series_decompose(&g, v(0), v(9), v(3), &tol()).unwrap());
    }
}
