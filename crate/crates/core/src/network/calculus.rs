use std::collections::{HashSet, VecDeque};

use log::debug;
use nalgebra::DMatrix;

use super::solve::FreeSystem;
use super::{Network, NetworkBuilder, PotentialFunction, ResistanceMatrix, Tolerances, VertexId, INFINITE_RESISTANCE};
use crate::error::{Error, Result};

/// `½ Σ_{x,y} w(x,y) (f(x) − f(y))²`.
pub fn dirichlet_energy(net: &Network, f: &PotentialFunction) -> Result<f64> {
    let values = f.dense(net)?;
    Ok(energy_dense(net, &values))
}

pub(crate) fn energy_dense(net: &Network, f: &[f64]) -> f64 {
    let mut e = 0.0;
    for i in 0..net.len() {
        for &(j, w) in net.neighbors(i) {
            if j > i {
                let d = f[i] - f[j];
                e += w * d * d;
            }
        }
    }
    e
}

/// Effective resistance between `x` and `y`.
///
/// Grounds `y`, injects a unit current at `x` and reads off the potential at
/// `x`. Returns `0` for `x == y` and [`INFINITE_RESISTANCE`] when the two
/// vertices lie in different components.
pub fn effective_resistance(net: &Network, x: VertexId, y: VertexId, tol: &Tolerances) -> Result<f64> {
    let (i, j) = (net.require(x)?, net.require(y)?);
    if i == j {
        return Ok(0.0);
    }
    let comp = net.reachable_from(j, &[]);
    if !comp[i] {
        return Ok(INFINITE_RESISTANCE);
    }
    let free: Vec<usize> = (0..net.len()).filter(|&k| comp[k] && k != j).collect();
    let sys = FreeSystem::new(net, free, tol)?;
    let mut rhs = vec![0.0; sys.len()];
    rhs[sys.slot[i]] = 1.0;
    let v = sys.solve(&rhs)?;
    Ok(v[sys.slot[i]])
}

fn distinct_indices(net: &Network, subset: &[VertexId]) -> Result<Vec<usize>> {
    let mut seen = HashSet::new();
    subset
        .iter()
        .map(|&v| {
            if !seen.insert(v) {
                return Err(Error::arg(format!("vertex {v} listed twice")));
            }
            net.require(v)
        })
        .collect()
}

/// Effective resistances among `subset`.
///
/// One grounded factorisation per connected component; pairs in different
/// components get [`INFINITE_RESISTANCE`].
pub fn resistance_matrix(net: &Network, subset: &[VertexId], tol: &Tolerances) -> Result<ResistanceMatrix> {
    let idx = distinct_indices(net, subset)?;
    let n = idx.len();
    let labels = net.component_labels();
    let mut r = DMatrix::<f64>::from_element(n, n, INFINITE_RESISTANCE);
    for k in 0..n {
        r[(k, k)] = 0.0;
    }
    let mut done = vec![false; n];
    for a in 0..n {
        if done[a] {
            continue;
        }
        let comp_label = labels[idx[a]];
        let members: Vec<usize> = (a..n).filter(|&k| labels[idx[k]] == comp_label).collect();
        for &k in &members {
            done[k] = true;
        }
        if members.len() == 1 {
            continue;
        }
        let ground = idx[members[0]];
        let free: Vec<usize> = (0..net.len()).filter(|&v| labels[v] == comp_label && v != ground).collect();
        let sys = FreeSystem::new(net, free, tol)?;
        // Green function columns G(·, m) for the non-ground members
        let mut green = Vec::with_capacity(members.len() - 1);
        for &m in &members[1..] {
            let mut rhs = vec![0.0; sys.len()];
            rhs[sys.slot[idx[m]]] = 1.0;
            green.push(sys.solve(&rhs)?);
        }
        let g = |p: usize, q: usize| -> f64 {
            // p, q are positions in members[1..]
            let col = &green[q];
            col[sys.slot[idx[members[p + 1]]]]
        };
        for p in 0..members.len() - 1 {
            let gpp = g(p, p);
            let (ka, kb) = (members[0], members[p + 1]);
            r[(ka, kb)] = gpp;
            r[(kb, ka)] = gpp;
            for q in 0..p {
                let gqq = g(q, q);
                let gpq = 0.5 * (g(p, q) + g(q, p));
                let val = gpp + gqq - 2.0 * gpq;
                let (ka, kb) = (members[p + 1], members[q + 1]);
                r[(ka, kb)] = val;
                r[(kb, ka)] = val;
            }
        }
    }
    Ok(ResistanceMatrix::new_unchecked(subset.to_vec(), r))
}

/// Trace (Schur complement) of `net` onto `b`; see [`trace_network_report`].
pub fn trace_network(net: &Network, b: &[VertexId], tol: &Tolerances) -> Result<Network> {
    Ok(trace_network_report(net, b, tol)?.0)
}

/// Trace of `net` onto `b` together with the number of slightly negative
/// conductances that were clamped to zero.
///
/// Only components of `net` that meet `b` take part. The result has exactly
/// the vertices of `b`, and its effective resistances agree with those of
/// `net` on `b`.
pub fn trace_network_report(net: &Network, b: &[VertexId], tol: &Tolerances) -> Result<(Network, usize)> {
    if b.is_empty() {
        return Err(Error::arg("trace onto an empty set"));
    }
    let bidx = distinct_indices(net, b)?;
    let labels = net.component_labels();
    let mut in_b = vec![false; net.len()];
    let mut comp_used = vec![false; net.len()];
    for &i in &bidx {
        in_b[i] = true;
        comp_used[labels[i]] = true;
    }
    let free: Vec<usize> = (0..net.len()).filter(|&v| comp_used[labels[v]] && !in_b[v]).collect();

    let mut builder = NetworkBuilder::default();
    for &v in b {
        builder.add_vertex(v);
    }
    if free.is_empty() {
        for (k, &i) in bidx.iter().enumerate() {
            for &(j, w) in net.neighbors(i) {
                if in_b[j] && j > i {
                    builder.push_edge_unchecked(b[k], net.id(j), w);
                }
            }
        }
        return Ok((builder.build(), 0));
    }

    let sys = FreeSystem::new(net, free, tol)?;
    let nb = bidx.len();
    let mut pos_in_b = vec![usize::MAX; net.len()];
    for (k, &i) in bidx.iter().enumerate() {
        pos_in_b[i] = k;
    }
    // u_b = L_FF^{-1} w(·, b): harmonic measure of b seen from the free vertices
    let mut harmonic: Vec<Option<Vec<f64>>> = vec![None; nb];
    for (k, &i) in bidx.iter().enumerate() {
        let mut rhs = vec![0.0; sys.len()];
        let mut any = false;
        for &(j, w) in net.neighbors(i) {
            if sys.slot[j] != usize::MAX {
                rhs[sys.slot[j]] += w;
                any = true;
            }
        }
        if any {
            harmonic[k] = Some(sys.solve(&rhs)?);
        }
    }
    let mut w_trace = DMatrix::<f64>::zeros(nb, nb);
    for (ka, &ia) in bidx.iter().enumerate() {
        for &(j, w) in net.neighbors(ia) {
            if in_b[j] {
                w_trace[(ka, pos_in_b[j])] += w;
            } else if sys.slot[j] != usize::MAX {
                for (kb, col) in harmonic.iter().enumerate() {
                    if let Some(col) = col {
                        w_trace[(ka, kb)] += w * col[sys.slot[j]];
                    }
                }
            }
        }
    }
    let mut clamped = 0;
    for ka in 0..nb {
        for kb in 0..ka {
            if labels[bidx[ka]] != labels[bidx[kb]] {
                continue;
            }
            let mut w = 0.5 * (w_trace[(ka, kb)] + w_trace[(kb, ka)]);
            if w < 0.0 {
                if w < -tol.assert_tol {
                    return Err(Error::IdentityViolated(format!(
                        "trace produced conductance {w:e} between {} and {}",
                        b[ka], b[kb]
                    )));
                }
                clamped += 1;
                w = 0.0;
            }
            if w > 0.0 {
                builder.push_edge_unchecked(b[ka], b[kb], w);
            }
        }
    }
    if clamped > 0 {
        debug!("trace_network: clamped {clamped} slightly negative conductances");
    }
    Ok((builder.build(), clamped))
}

/// Energy-minimising extension of boundary data `g` on `b` to all vertices.
///
/// Every vertex outside `b` must be connected to `b`; otherwise the error
/// names the first offending vertex.
pub fn harmonic_extension(
    net: &Network,
    b: &[VertexId],
    g: &PotentialFunction,
    tol: &Tolerances,
) -> Result<PotentialFunction> {
    if b.is_empty() {
        return Err(Error::arg("harmonic extension needs a nonempty boundary"));
    }
    let bidx = distinct_indices(net, b)?;
    let mut in_b = vec![false; net.len()];
    let mut boundary_value = vec![0.0; net.len()];
    let mut queue = VecDeque::new();
    let mut reached = vec![false; net.len()];
    for (&v, &i) in b.iter().zip(&bidx) {
        in_b[i] = true;
        boundary_value[i] = g.get(v).ok_or(Error::DomainMismatch(v))?;
        reached[i] = true;
        queue.push_back(i);
    }
    while let Some(u) = queue.pop_front() {
        for &(v, _) in net.neighbors(u) {
            if !reached[v] {
                reached[v] = true;
                queue.push_back(v);
            }
        }
    }
    if let Some(bad) = (0..net.len()).find(|&i| !reached[i]) {
        return Err(Error::Disconnected(net.id(bad)));
    }
    let free: Vec<usize> = (0..net.len()).filter(|&i| !in_b[i]).collect();
    let mut out = PotentialFunction::new();
    for (&v, &i) in b.iter().zip(&bidx) {
        out.set(v, boundary_value[i]);
    }
    if free.is_empty() {
        return Ok(out);
    }
    let sys = FreeSystem::new(net, free, tol)?;
    let mut rhs = vec![0.0; sys.len()];
    for (k, &i) in sys.free.iter().enumerate() {
        for &(j, w) in net.neighbors(i) {
            if in_b[j] {
                rhs[k] += w * boundary_value[j];
            }
        }
    }
    let u = sys.solve(&rhs)?;
    for (k, &i) in sys.free.iter().enumerate() {
        out.set(net.id(i), u[k]);
    }
    Ok(out)
}

/// Conductances whose effective resistance is `rm`; see
/// [`weights_from_resistance_report`].
pub fn weights_from_resistance(rm: &ResistanceMatrix, tol: &Tolerances) -> Result<Network> {
    Ok(weights_from_resistance_report(rm, tol)?.0)
}

/// Recovers the unique conductances realising the resistance metric `rm`.
///
/// With base vertex `z₀ = rm.ids()[0]`, the Gromov-product matrix
/// `G(x,y) = (R(x,z₀) + R(y,z₀) − R(x,y)) / 2` on the remaining vertices is
/// the Green function of the Laplacian grounded at `z₀`; its inverse is the
/// grounded Laplacian, from which `w(x,y) = −L(x,y)` and
/// `w(x,z₀) = Σ_y L(x,y)`.
///
/// Recovered conductances in `[−assert_tol, assert_tol]` are set to zero
/// (negative ones are counted in the returned clamp count); anything below
/// `−assert_tol` means `rm` is not a resistance metric.
pub fn weights_from_resistance_report(rm: &ResistanceMatrix, tol: &Tolerances) -> Result<(Network, usize)> {
    let n = rm.len();
    if n == 0 {
        return Err(Error::arg("empty resistance matrix"));
    }
    let r = rm.matrix();
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg("resistance matrix has infinite entries"));
    }
    let ids = rm.ids();
    let mut builder = NetworkBuilder::default();
    for &v in ids {
        builder.add_vertex(v);
    }
    if n == 1 {
        return Ok((builder.build(), 0));
    }
    let m = n - 1;
    let green = DMatrix::<f64>::from_fn(m, m, |i, j| 0.5 * (r[(i + 1, 0)] + r[(j + 1, 0)] - r[(i + 1, j + 1)]));
    let lap = match green.clone().cholesky() {
        Some(ch) => ch.inverse(),
        None => green.try_inverse().ok_or_else(|| Error::Singular("Gromov-product matrix is singular".into()))?,
    };
    let mut w = DMatrix::<f64>::zeros(n, n);
    for i in 0..m {
        let row_sum: f64 = (0..m).map(|j| lap[(i, j)]).sum();
        w[(i + 1, 0)] = row_sum;
        w[(0, i + 1)] = row_sum;
        for j in 0..i {
            let val = -0.5 * (lap[(i, j)] + lap[(j, i)]);
            w[(i + 1, j + 1)] = val;
            w[(j + 1, i + 1)] = val;
        }
    }
    let mut clamped = 0;
    for i in 0..n {
        for j in 0..i {
            let val = w[(i, j)];
            if !val.is_finite() {
                return Err(Error::Singular("non-finite recovered conductance".into()));
            }
            if val < -tol.assert_tol {
                return Err(Error::NotResistanceMetric { u: ids[j], v: ids[i], w: val });
            }
            if val < 0.0 {
                clamped += 1;
            }
            if val > tol.assert_tol {
                builder.push_edge_unchecked(ids[j], ids[i], val);
            }
        }
    }
    if clamped > 0 {
        debug!("weights_from_resistance: clamped {clamped} slightly negative conductances");
    }
    Ok((builder.build(), clamped))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn k3() -> Network {
        Network::from_edges([0, 1, 2], [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap()
    }

    fn path3(w_ab: f64, w_bc: f64) -> Network {
        Network::from_edges([0, 1, 2], [(0, 1, w_ab), (1, 2, w_bc)]).unwrap()
    }

    fn v(x: u64) -> VertexId {
        VertexId(x)
    }

    #[test]
    fn energy_examples() {
        let net = k3();
        let c = PotentialFunction::constant(&net, 5.0);
        assert_eq!(dirichlet_energy(&net, &c).unwrap(), 0.0);
        let single = Network::from_edges([0, 1], [(0, 1, 3.0)]).unwrap();
        let f = PotentialFunction::from_pairs([(0, 0.0), (1, 1.0)]);
        assert_eq!(dirichlet_energy(&single, &f).unwrap(), 3.0);
        // edges (0,1): 1, (1,2): 0, (0,2): 1
        let f = PotentialFunction::from_pairs([(0, 0.0), (1, 1.0), (2, 1.0)]);
        assert_eq!(dirichlet_energy(&net, &f).unwrap(), 2.0);
    }

    #[test]
    fn energy_missing_value_is_domain_error() {
        let f = PotentialFunction::from_pairs([(0, 0.0), (1, 1.0)]);
        assert!(matches!(dirichlet_energy(&k3(), &f), Err(Error::DomainMismatch(VertexId(2)))));
    }

    #[test]
    fn resistance_examples() {
        let single = Network::from_edges([0, 1], [(0, 1, 4.0)]).unwrap();
        assert!((effective_resistance(&single, v(0), v(1), &tol()).unwrap() - 0.25).abs() < 1e-12);
        assert!((effective_resistance(&path3(1.0, 1.0), v(0), v(2), &tol()).unwrap() - 2.0).abs() < 1e-12);
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            let r = effective_resistance(&k3(), v(a), v(b), &tol()).unwrap();
            assert!((r - 2.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(effective_resistance(&k3(), v(1), v(1), &tol()).unwrap(), 0.0);
    }

    #[test]
    fn disconnected_pair_is_infinite() {
        let net = Network::from_edges([0, 1, 2, 3], [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(effective_resistance(&net, v(0), v(3), &tol()).unwrap(), INFINITE_RESISTANCE);
        let rm = resistance_matrix(&net, &[v(0), v(1), v(2)], &tol()).unwrap();
        assert_eq!(rm.get(v(0), v(2)), Some(INFINITE_RESISTANCE));
        assert!((rm.get(v(0), v(1)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matrix_examples() {
        let rm = resistance_matrix(&k3(), &[v(0), v(1), v(2)], &tol()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 2.0 / 3.0 };
                assert!((rm.matrix()[(i, j)] - expect).abs() < 1e-12);
            }
        }
        let two = Network::from_edges([0, 1], [(0, 1, 2.0)]).unwrap();
        let rm = resistance_matrix(&two, &[v(0), v(1)], &tol()).unwrap();
        assert_eq!(rm.matrix()[(0, 0)], 0.0);
        assert!((rm.matrix()[(0, 1)] - 0.5).abs() < 1e-12);
        let star = Network::from_edges([0, 1, 2, 3], [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)]).unwrap();
        let rm = resistance_matrix(&star, &[v(1), v(2), v(3)], &tol()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert!((rm.matrix()[(i, j)] - 2.0).abs() < 1e-12);
                }
            }
        }
        assert!(resistance_matrix(&star, &[v(1), v(1)], &tol()).is_err());
    }

    #[test]
    fn trace_examples() {
        let t = trace_network(&path3(1.0, 1.0), &[v(0), v(2)], &tol()).unwrap();
        assert_eq!(t.len(), 2);
        assert!((t.conductance(v(0), v(2)) - 0.5).abs() < 1e-12);
        let full = trace_network(&k3(), &[v(0), v(1), v(2)], &tol()).unwrap();
        for (a, b, w) in k3().edges() {
            assert_eq!(full.conductance(a, b), w);
        }
        let t = trace_network(&k3(), &[v(0), v(1)], &tol()).unwrap();
        assert!((t.conductance(v(0), v(1)) - 1.5).abs() < 1e-12);
        assert!(trace_network(&k3(), &[], &tol()).is_err());
    }

    #[test]
    fn trace_ignores_components_missing_b() {
        let net = Network::from_edges([0, 1, 2, 3, 4], [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)]).unwrap();
        let t = trace_network(&net, &[v(0), v(2)], &tol()).unwrap();
        assert!((t.conductance(v(0), v(2)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn harmonic_examples() {
        let b = [v(0), v(2)];
        let g = PotentialFunction::from_pairs([(0, 0.0), (2, 1.0)]);
        let f = harmonic_extension(&path3(1.0, 1.0), &b, &g, &tol()).unwrap();
        assert!((f.get(v(1)).unwrap() - 0.5).abs() < 1e-12);
        let f = harmonic_extension(&path3(2.0, 1.0), &b, &g, &tol()).unwrap();
        assert!((f.get(v(1)).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        let g = PotentialFunction::from_pairs([(0, 7.0), (2, 7.0)]);
        let f = harmonic_extension(&path3(2.0, 1.0), &b, &g, &tol()).unwrap();
        for (_, val) in f.iter() {
            assert!((val - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_disconnected_vertex_is_named() {
        let net = Network::from_edges([0, 1, 2, 9], [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let g = PotentialFunction::from_pairs([(0, 0.0), (2, 1.0)]);
        let err = harmonic_extension(&net, &[v(0), v(2)], &g, &tol()).unwrap_err();
        assert!(matches!(err, Error::Disconnected(VertexId(9))));
    }

    fn rm_from(ids: &[u64], rows: &[f64]) -> ResistanceMatrix {
        let n = ids.len();
        ResistanceMatrix::new(ids.iter().map(|&x| VertexId(x)).collect(), DMatrix::from_row_slice(n, n, rows)).unwrap()
    }

    #[test]
    fn weights_examples() {
        let net = weights_from_resistance(&rm_from(&[0, 1], &[0.0, 5.0, 5.0, 0.0]), &tol()).unwrap();
        assert!((net.conductance(v(0), v(1)) - 0.2).abs() < 1e-12);

        let t = 2.0 / 3.0;
        let net = weights_from_resistance(&rm_from(&[0, 1, 2], &[0.0, t, t, t, 0.0, t, t, t, 0.0]), &tol()).unwrap();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            assert!((net.conductance(v(a), v(b)) - 1.0).abs() < 1e-12);
        }

        let net = weights_from_resistance(&rm_from(&[0, 1, 2], &[0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0]), &tol())
            .unwrap();
        assert!((net.conductance(v(0), v(1)) - 1.0).abs() < 1e-12);
        assert!((net.conductance(v(1), v(2)) - 1.0).abs() < 1e-12);
        assert_eq!(net.conductance(v(0), v(2)), 0.0);
    }

    #[test]
    fn non_metric_is_rejected() {
        // R(a,c) = 3 > R(a,b) + R(b,c) violates the triangle inequality
        let rm = rm_from(&[0, 1, 2], &[0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0]);
        assert!(matches!(weights_from_resistance(&rm, &tol()), Err(Error::NotResistanceMetric { .. })));
    }
}
