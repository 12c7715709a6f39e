//! Randomized test networks drawn from the fixture stream.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::network::{resistance_matrix, Network, NetworkBuilder, ResistanceMatrix, Tolerances, VertexId};
use crate::rng::{stream_rng, streams};

/// Generator of random connected networks; case `k` of a suite uses replica `k`.
pub struct FixtureGen {
    rng: ChaCha8Rng,
}

impl FixtureGen {
    pub fn new(seed: u64, case: u32) -> Self {
        FixtureGen { rng: stream_rng(seed, case, streams::FIXTURES) }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Log-uniform conductance in `[0.1, 10]`.
    pub fn conductance(&mut self) -> f64 {
        10f64.powf(self.rng.random_range(-1.0..=1.0))
    }

    pub fn size(&mut self, lo: usize, hi: usize) -> usize {
        self.rng.random_range(lo..=hi)
    }

    /// Random spanning tree on `labels` plus each further pair with probability `extra`.
    pub fn connected_on(&mut self, labels: &[VertexId], extra: f64) -> Network {
        let mut b = NetworkBuilder::default();
        let mut order = labels.to_vec();
        order.shuffle(&mut self.rng);
        for &v in &order {
            b.add_vertex(v);
        }
        for k in 1..order.len() {
            let parent = order[self.rng.random_range(0..k)];
            let w = self.conductance();
            b.push_edge_unchecked(order[k], parent, w);
        }
        for i in 0..order.len() {
            for j in 0..i {
                if self.rng.random_bool(extra) {
                    let w = self.conductance();
                    b.push_edge_unchecked(order[i], order[j], w);
                }
            }
        }
        b.build()
    }

    /// Connected network on labels `0..n`.
    pub fn connected(&mut self, n: usize, extra: f64) -> Network {
        let labels: Vec<VertexId> = (0..n as u64).map(VertexId).collect();
        self.connected_on(&labels, extra)
    }

    /// `k` distinct vertices of `net` in random order.
    pub fn subset(&mut self, net: &Network, k: usize) -> Vec<VertexId> {
        let mut ids = net.ids().to_vec();
        ids.shuffle(&mut self.rng);
        ids.truncate(k);
        ids
    }

    /// A symmetric matrix that breaks the triangle inequality, so it is not
    /// the resistance metric of any network. Needs `n >= 3`.
    pub fn nonmetric(&mut self, n: usize, tol: &Tolerances) -> Result<ResistanceMatrix> {
        let net = self.connected(n.max(3), 0.3);
        let ids = net.ids().to_vec();
        let rm = resistance_matrix(&net, &ids, tol)?;
        let mut r = rm.matrix().clone();
        let (a, b, c) = (0, 1, 2);
        let inflated = (r[(a, c)] + r[(c, b)]) * self.rng.random_range(1.5..3.0);
        r[(a, b)] = inflated;
        r[(b, a)] = inflated;
        ResistanceMatrix::new(ids, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_connected_and_reproducible() {
        for k in 0..50 {
            let mut g = FixtureGen::new(1, k);
            let n = g.size(1, 10);
            let net = g.connected(n, 0.3);
            assert_eq!(net.len(), n);
            assert!(net.is_connected());
            let mut h = FixtureGen::new(1, k);
            h.size(1, 10);
            assert_eq!(h.connected(n, 0.3), net);
        }
    }

    #[test]
    fn nonmetric_breaks_triangle() {
        let tol = Tolerances::default();
        let rm = FixtureGen::new(3, 0).nonmetric(5, &tol).unwrap();
        assert!(rm.triangle_violation() > 0.1);
    }
}
