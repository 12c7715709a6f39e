//! Hitting probabilities and commute times.

use rayon::prelude::*;
use serde::Serialize;

use super::{JumpChain, SpeedMeasure};
use crate::error::{Error, Result};
use crate::network::{effective_resistance, harmonic_extension, Network, PotentialFunction, Tolerances, VertexId};
use crate::rng::{stream_rng, streams};
use crate::stats::mean_stderr;

/// "Does the walk from `start` reach `target_a` before `target_b`?"
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HittingQuery {
    pub start: VertexId,
    pub target_a: Vec<VertexId>,
    pub target_b: Vec<VertexId>,
}

impl HittingQuery {
    pub fn new(start: VertexId, target_a: Vec<VertexId>, target_b: Vec<VertexId>) -> Result<Self> {
        let q = HittingQuery { start, target_a, target_b };
        q.check()?;
        Ok(q)
    }

    fn check(&self) -> Result<()> {
        if self.target_a.is_empty() || self.target_b.is_empty() {
            return Err(Error::arg("hitting targets must be nonempty"));
        }
        if let Some(v) = self.target_a.iter().find(|v| self.target_b.contains(v)) {
            return Err(Error::arg(format!("vertex {v} is in both targets")));
        }
        Ok(())
    }

    /// +1 for A, −1 for B, 0 otherwise (indexed like `net`).
    fn marks(&self, net: &Network) -> Result<Vec<i8>> {
        self.check()?;
        let mut m = vec![0i8; net.len()];
        for &v in &self.target_a {
            m[net.require(v)?] = 1;
        }
        for &v in &self.target_b {
            m[net.require(v)?] = -1;
        }
        Ok(m)
    }
}

/// Component of `start`, failing when it contains no target.
fn reachable_targets(net: &Network, q: &HittingQuery, marks: &[i8]) -> Result<Vec<bool>> {
    let s = net.require(q.start)?;
    let comp = net.reachable_from(s, &[]);
    if !(0..net.len()).any(|i| comp[i] && marks[i] != 0) {
        return Err(Error::Disconnected(q.start));
    }
    Ok(comp)
}

/// `P_start[hit A before B]`, the harmonic extension of `1_A` on `A ∪ B`.
pub fn hitting_probability_solve(net: &Network, q: &HittingQuery, tol: &Tolerances) -> Result<f64> {
    let marks = q.marks(net)?;
    let s = net.require(q.start)?;
    if marks[s] != 0 {
        return Ok(if marks[s] > 0 { 1.0 } else { 0.0 });
    }
    let comp = reachable_targets(net, q, &marks)?;
    let keep: Vec<VertexId> = (0..net.len()).filter(|&i| comp[i]).map(|i| net.id(i)).collect();
    let sub = net.induced(&keep)?;
    let bidx: Vec<usize> = (0..net.len()).filter(|&i| comp[i] && marks[i] != 0).collect();
    let boundary: Vec<VertexId> = bidx.iter().map(|&i| net.id(i)).collect();
    let g = PotentialFunction::from_pairs(bidx.iter().map(|&i| (net.id(i).0, if marks[i] > 0 { 1.0 } else { 0.0 })));
    let h = harmonic_extension(&sub, &boundary, &g, tol)?;
    let p = h.get(q.start).ok_or(Error::UnknownVertex(q.start))?;
    Ok(p.clamp(0.0, 1.0))
}

/// Monte Carlo estimate of the same probability with its binomial standard
/// error. Only the jump chain matters here, so `mu` is checked but does not
/// influence the result. Sample `k` uses replica `k` of the hitting stream.
pub fn hitting_probability_mc(
    net: &Network,
    mu: &SpeedMeasure,
    q: &HittingQuery,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_samples == 0 {
        return Err(Error::arg("n_samples must be >= 1"));
    }
    let marks = q.marks(net)?;
    reachable_targets(net, q, &marks)?;
    let chain = JumpChain::new(net, mu)?;
    let s = net.require(q.start)?;
    let cap = step_cap(net);
    let hits: Result<Vec<bool>> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u32, streams::HITTING);
            let mut x = s;
            for _ in 0..cap {
                if marks[x] != 0 {
                    return Ok(marks[x] > 0);
                }
                x = chain.step(x, &mut rng);
            }
            Err(Error::NoConvergence { iterations: cap, residual: f64::NAN })
        })
        .collect();
    let n = n_samples as f64;
    let p = hits?.into_iter().filter(|&h| h).count() as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}

fn step_cap(net: &Network) -> usize {
    let n = net.len().max(2);
    (1000 * n * n).clamp(1_000_000, 1_000_000_000)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CommuteCheck {
    pub mean: f64,
    pub stderr: f64,
    /// `R(x,y) · μ(component)`
    pub expected: f64,
    pub holds: bool,
}

/// Monte Carlo commute time `E_x σ_y + E_y σ_x` against `R(x,y)·Σμ`, the sum
/// taken over the component of `x`. With `μ = μ₀` this is the classical
/// commute-time identity.
pub fn commute_time_check(
    net: &Network,
    mu: &SpeedMeasure,
    x: VertexId,
    y: VertexId,
    n_samples: usize,
    seed: u64,
) -> Result<CommuteCheck> {
    if x == y {
        return Err(Error::arg("commute time needs two distinct vertices"));
    }
    if n_samples < 2 {
        return Err(Error::arg("n_samples must be >= 2"));
    }
    let (ix, iy) = (net.require(x)?, net.require(y)?);
    let comp = net.reachable_from(ix, &[]);
    if !comp[iy] {
        return Err(Error::Disconnected(y));
    }
    let r = effective_resistance(net, x, y, &Tolerances::default())?;
    let mass: f64 = (0..net.len()).filter(|&i| comp[i]).map(|i| mu.values()[i]).sum();
    let chain = JumpChain::new(net, mu)?;
    let cap = step_cap(net);
    let passage = |from: usize, to: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Result<f64> {
        let mut z = from;
        let mut t = 0.0;
        for _ in 0..cap {
            if z == to {
                return Ok(t);
            }
            t += chain.hold(z, rng);
            z = chain.step(z, rng);
        }
        Err(Error::NoConvergence { iterations: cap, residual: f64::NAN })
    };
    let samples: Result<Vec<f64>> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u32, streams::COMMUTE);
            Ok(passage(ix, iy, &mut rng)? + passage(iy, ix, &mut rng)?)
        })
        .collect();
    let (mean, stderr) = mean_stderr(&samples?);
    let expected = r * mass;
    Ok(CommuteCheck { mean, stderr, expected, holds: (mean - expected).abs() <= 4.0 * stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{glue_at_cut_point, series_decompose};

    fn v(i: u64) -> VertexId {
        VertexId(i)
    }

    fn path(w01: f64, w12: f64) -> Network {
        Network::from_edges(0..3, [(0, 1, w01), (1, 2, w12)]).unwrap()
    }

    fn q(s: u64, a: &[u64], b: &[u64]) -> HittingQuery {
        HittingQuery::new(v(s), a.iter().map(|&i| v(i)).collect(), b.iter().map(|&i| v(i)).collect()).unwrap()
    }

    #[test]
    fn symmetric_and_weighted_paths() {
        let tol = Tolerances::default();
        let p = hitting_probability_solve(&path(1.0, 1.0), &q(1, &[0], &[2]), &tol).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let p = hitting_probability_solve(&path(2.0, 1.0), &q(1, &[0], &[2]), &tol).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_agrees() {
        let net = path(1.0, 1.0);
        let mu = SpeedMeasure::counting(&net);
        let (p, se) = hitting_probability_mc(&net, &mu, &q(1, &[0], &[2]), 10_000, 1).unwrap();
        assert!((p - 0.5).abs() < 4.0 * se);
        let net = path(2.0, 1.0);
        let (p, se) = hitting_probability_mc(&net, &mu, &q(1, &[0], &[2]), 10_000, 2).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 4.0 * se, "{p} ± {se}");
        let edge = Network::from_edges([0, 1, 2], [(0, 1, 1.0)]).unwrap();
        let mu = SpeedMeasure::counting(&edge);
        // B is unreachable, so A is hit surely
        let (p, se) = hitting_probability_mc(&edge, &mu, &q(0, &[1], &[2]), 100, 3).unwrap();
        assert_eq!((p, se), (1.0, 0.0));
    }

    #[test]
    fn glued_triangles_chain_identity() {
        let tol = Tolerances::default();
        let k3a = Network::from_edges([1, 2, 0], [(1, 2, 1.0), (2, 0, 1.0), (1, 0, 1.0)]).unwrap();
        let k3b = Network::from_edges([0, 3, 4], [(0, 3, 1.0), (3, 4, 1.0), (0, 4, 1.0)]).unwrap();
        let net = glue_at_cut_point(&k3a, &k3b, v(0)).unwrap();
        let p = hitting_probability_solve(&net, &q(0, &[1], &[3]), &tol).unwrap();
        let r_zy = effective_resistance(&net, v(0), v(3), &tol).unwrap();
        let r_xy = effective_resistance(&net, v(1), v(3), &tol).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((p - r_zy / r_xy).abs() < 1e-12);
        assert!(series_decompose(&net, v(1), v(0), v(3), &tol).unwrap());
    }

    #[test]
    fn disconnected_and_malformed_queries() {
        let net = Network::from_edges(0..4, [(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let tol = Tolerances::default();
        assert!(matches!(hitting_probability_solve(&net, &q(0, &[2], &[3]), &tol), Err(Error::Disconnected(_))));
        assert!(HittingQuery::new(v(0), vec![v(1)], vec![v(1)]).is_err());
        assert!(HittingQuery::new(v(0), vec![], vec![v(1)]).is_err());
        assert_eq!(hitting_probability_solve(&net, &q(2, &[2], &[3]), &tol).unwrap(), 1.0);
    }

    #[test]
    fn commute_time_examples() {
        let edge = Network::from_edges([0, 1], [(0, 1, 1.0)]).unwrap();
        let p3 = path(1.0, 1.0);
        let k3 = Network::from_edges(0..3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        for (net, x, y, want) in [(&edge, 0, 1, 2.0), (&p3, 0, 2, 8.0), (&k3, 0, 1, 4.0)] {
            let mu = SpeedMeasure::degree(net).unwrap();
            let c = commute_time_check(net, &mu, v(x), v(y), 4000, 11).unwrap();
            assert!((c.expected - want).abs() < 1e-9);
            assert!(c.holds, "{c:?}");
        }
    }
}
