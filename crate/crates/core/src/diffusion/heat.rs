//! Heat kernel `p(t,x,y) = P_x[X_t = y] / μ(y)`.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{JumpChain, SpeedMeasure};
use crate::error::{Error, Result};
use crate::network::{Network, VertexId};
use crate::rng::{stream_rng, streams};

/// Largest network handled by the eigendecomposition under [`HeatMethod::Auto`].
pub const EIGEN_LIMIT: usize = 2000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatMethod {
    /// eigendecomposition up to [`EIGEN_LIMIT`] vertices, Monte Carlo beyond
    Auto,
    Eigen,
    /// Poisson-weighted powers of the uniformised jump chain
    Uniformization,
    MonteCarlo {
        replicas: usize,
        seed: u64,
    },
}

/// Spectral representation of the heat kernel.
///
/// With `A = M^{-1/2} L M^{-1/2} = U Λ Uᵀ` the kernel is
/// `p(t,x,y) = [U e^{−tΛ} Uᵀ]_{xy} / sqrt(μ(x) μ(y))`.
#[derive(Clone, Debug)]
pub struct HeatKernel {
    ids: Vec<VertexId>,
    eigenvalues: Vec<f64>,
    vectors: DMatrix<f64>,
    sqrt_mu: Vec<f64>,
}

impl HeatKernel {
    pub fn new(net: &Network, mu: &SpeedMeasure) -> Result<HeatKernel> {
        mu.check(net)?;
        let n = net.len();
        let sqrt_mu: Vec<f64> = mu.values().iter().map(|m| m.sqrt()).collect();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = net.total_conductance(i) / mu.values()[i];
            for &(j, w) in net.neighbors(i) {
                a[(i, j)] = -w / (sqrt_mu[i] * sqrt_mu[j]);
            }
        }
        let eig = SymmetricEigen::new(a);
        Ok(HeatKernel {
            ids: net.ids().to_vec(),
            eigenvalues: eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect(),
            vectors: eig.eigenvectors,
            sqrt_mu,
        })
    }

    fn index(&self, v: VertexId) -> Result<usize> {
        self.ids.iter().position(|&u| u == v).ok_or(Error::UnknownVertex(v))
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    fn p_idx(&self, t: f64, i: usize, j: usize) -> f64 {
        let s: f64 = (0..self.eigenvalues.len())
            .map(|k| (-t * self.eigenvalues[k]).exp() * self.vectors[(i, k)] * self.vectors[(j, k)])
            .sum();
        s / (self.sqrt_mu[i] * self.sqrt_mu[j])
    }

    pub fn p(&self, t: f64, x: VertexId, y: VertexId) -> Result<f64> {
        Ok(self.p_idx(t, self.index(x)?, self.index(y)?))
    }

    /// `p(t,·,·)` as a matrix in network order.
    pub fn kernel(&self, t: f64) -> DMatrix<f64> {
        let n = self.ids.len();
        let decay = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            self.eigenvalues.iter().map(|&l| (-t * l).exp()),
        ));
        let mut k = &self.vectors * decay * self.vectors.transpose();
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] /= self.sqrt_mu[i] * self.sqrt_mu[j];
            }
        }
        k
    }
}

/// Transition matrix `P_t = exp(tQ)` of the generator `Q = −M⁻¹L`, computed
/// by a dense matrix exponential (independent of [`HeatKernel`]).
pub fn transition_matrix(net: &Network, mu: &SpeedMeasure, t: f64) -> Result<DMatrix<f64>> {
    mu.check(net)?;
    let n = net.len();
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let m = mu.values()[i];
        q[(i, i)] = -net.total_conductance(i) / m * t;
        for &(j, w) in net.neighbors(i) {
            q[(i, j)] = w / m * t;
        }
    }
    Ok(q.exp())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::arg("times must be finite and >= 0"));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("times must be strictly increasing"));
    }
    Ok(())
}

/// `p(t,x,x)` for each `t`, using [`HeatMethod::Auto`].
pub fn return_probability(net: &Network, mu: &SpeedMeasure, x: VertexId, times: &[f64]) -> Result<Vec<f64>> {
    return_probability_with(net, mu, x, times, HeatMethod::Auto)
}

pub fn return_probability_with(
    net: &Network,
    mu: &SpeedMeasure,
    x: VertexId,
    times: &[f64],
    method: HeatMethod,
) -> Result<Vec<f64>> {
    check_times(times)?;
    mu.check(net)?;
    let i = net.require(x)?;
    let method = match method {
        HeatMethod::Auto if net.len() <= EIGEN_LIMIT => HeatMethod::Eigen,
        HeatMethod::Auto => HeatMethod::MonteCarlo { replicas: 10_000, seed: 0 },
        m => m,
    };
    match method {
        HeatMethod::Eigen => {
            let hk = HeatKernel::new(net, mu)?;
            Ok(times.iter().map(|&t| hk.p_idx(t, i, i)).collect())
        }
        HeatMethod::Uniformization => uniformized(net, mu, i, times),
        HeatMethod::MonteCarlo { replicas, seed } => monte_carlo(net, mu, i, times, replicas, seed),
        HeatMethod::Auto => unreachable!("resolved above"),
    }
}

/// Mass below this is dropped from the propagated distribution.
const NEGLIGIBLE: f64 = 1e-40;

fn uniformized(net: &Network, mu: &SpeedMeasure, x: usize, times: &[f64]) -> Result<Vec<f64>> {
    let n = net.len();
    let m = mu.values();
    let rate: Vec<f64> = (0..n).map(|i| net.total_conductance(i) / m[i]).collect();
    let lam = rate.iter().cloned().fold(0.0, f64::max);
    if lam == 0.0 {
        return Ok(vec![1.0 / m[x]; times.len()]);
    }
    let t_max = times.last().copied().unwrap_or(0.0);
    let mean_max = lam * t_max;
    let k_max = (mean_max + 10.0 * mean_max.sqrt() + 40.0).ceil() as usize;

    // q[k] = P_x[Y_k = x] for the uniformised chain Y
    let mut q = Vec::with_capacity(k_max + 1);
    let mut cur = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut active = vec![x];
    let mut in_active = vec![false; n];
    in_active[x] = true;
    cur[x] = 1.0;
    q.push(1.0);
    for _ in 0..k_max {
        let mut grown = Vec::new();
        for &z in &active {
            let v = cur[z];
            next[z] += v * (1.0 - rate[z] / lam);
            for &(y, w) in net.neighbors(z) {
                next[y] += v * w / (m[z] * lam);
                if !in_active[y] {
                    in_active[y] = true;
                    grown.push(y);
                }
            }
        }
        active.extend(grown);
        for &z in &active {
            cur[z] = next[z];
            next[z] = 0.0;
        }
        active.retain(|&z| {
            let keep = cur[z] > NEGLIGIBLE;
            if !keep {
                cur[z] = 0.0;
                in_active[z] = false;
            }
            keep
        });
        q.push(cur[x]);
    }

    Ok(times
        .iter()
        .map(|&t| {
            let mean = lam * t;
            if mean == 0.0 {
                return q[0] / m[x];
            }
            // Poisson(mean) weights by recursion in log space
            let mut lw = -mean;
            let mut s = lw.exp() * q[0];
            for (k, &qk) in q.iter().enumerate().skip(1) {
                lw += mean.ln() - (k as f64).ln();
                s += lw.exp() * qk;
            }
            s / m[x]
        })
        .collect())
}

fn monte_carlo(
    net: &Network,
    mu: &SpeedMeasure,
    x: usize,
    times: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if replicas == 0 {
        return Err(Error::arg("Monte Carlo needs at least one replica"));
    }
    let chain = JumpChain::new(net, mu)?;
    let t_max = times.last().copied().unwrap_or(0.0);
    let hits = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u32, streams::HEAT_MC);
            let mut h = vec![0u64; times.len()];
            if net.neighbors(x).is_empty() {
                h.iter_mut().for_each(|c| *c = 1);
                return h;
            }
            let mut k = 0;
            chain.run(x, t_max + 1.0, &mut rng, |z, a, b| {
                while k < times.len() && times[k] < b {
                    if times[k] >= a && z == x {
                        h[k] += 1;
                    }
                    k += 1;
                }
            });
            h
        })
        .reduce(|| vec![0u64; times.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let m = mu.values()[x];
    Ok(hits.into_iter().map(|c| c as f64 / replicas as f64 / m).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u64) -> VertexId {
        VertexId(i)
    }

    fn edge() -> Network {
        Network::from_edges([0, 1], [(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn two_vertex_closed_form() {
        let net = edge();
        let mu = SpeedMeasure::counting(&net);
        let ts = [0.0f64, 0.1, 0.5, 1.0, 3.0];
        let want: Vec<f64> = ts.iter().map(|t| (1.0 + (-2.0 * t).exp()) / 2.0).collect();
        for m in [HeatMethod::Eigen, HeatMethod::Uniformization] {
            let got = return_probability_with(&net, &mu, v(0), &ts, m).unwrap();
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{m:?}: {g} vs {w}");
            }
        }
        let mc = return_probability_with(&net, &mu, v(0), &ts, HeatMethod::MonteCarlo { replicas: 20_000, seed: 1 })
            .unwrap();
        for (g, w) in mc.iter().zip(&want) {
            let se = (w * (1.0 - w) / 20_000.0).sqrt().max(1e-9);
            assert!((g - w).abs() < 4.0 * se, "{g} vs {w}");
        }
    }

    #[test]
    fn short_and_long_time_limits() {
        let net = Network::from_edges(0..4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 0.5)]).unwrap();
        let mu = SpeedMeasure::from_values(&net, &[(v(0), 2.0), (v(1), 1.0), (v(2), 0.5), (v(3), 1.5)]).unwrap();
        let p = return_probability(&net, &mu, v(0), &[1e-9, 200.0]).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-8);
        assert!((p[1] - 1.0 / 5.0).abs() < 1e-9);
    }

    #[test]
    fn eigen_and_expm_agree() {
        let net =
            Network::from_edges(0..5, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 0.3), (4, 0, 1.0), (1, 3, 0.7)])
                .unwrap();
        let mu = SpeedMeasure::from_fn(&net, |v| 1.0 + v.0 as f64 * 0.5).unwrap();
        let hk = HeatKernel::new(&net, &mu).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let pt = transition_matrix(&net, &mu, t).unwrap();
            let k = hk.kernel(t);
            for i in 0..5 {
                for j in 0..5 {
                    assert!((pt[(i, j)] - k[(i, j)] * mu.values()[j]).abs() < 1e-10);
                }
            }
        }
        let u = return_probability_with(&net, &mu, v(2), &[0.5, 2.0, 7.0], HeatMethod::Uniformization).unwrap();
        let e = return_probability_with(&net, &mu, v(2), &[0.5, 2.0, 7.0], HeatMethod::Eigen).unwrap();
        for (a, b) in u.iter().zip(&e) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_times() {
        let net = edge();
        let mu = SpeedMeasure::counting(&net);
        assert!(return_probability(&net, &mu, v(0), &[1.0, 0.5]).is_err());
        assert!(return_probability(&net, &mu, v(0), &[-1.0]).is_err());
    }
}
