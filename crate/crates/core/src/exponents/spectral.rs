//! Spectral dimension from on-diagonal heat-kernel decay.

use log::warn;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_power_law, ExponentFit};
use crate::diffusion::{return_probability_with, HeatKernel, HeatMethod, MuRule, EIGEN_LIMIT};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::rng::{stream_rng, streams};

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|k| (la + (lb - la) * k as f64 / (n - 1) as f64).exp()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub mu: MuRule,
    pub t_min: f64,
    pub t_max: f64,
    pub n_times: usize,
    /// start vertices per network
    pub n_starts: usize,
    pub method: HeatMethod,
    /// fits with a lower r² are flagged unreliable
    pub min_r_squared: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            mu: MuRule::Count,
            t_min: 10.0,
            t_max: 1000.0,
            n_times: 12,
            n_starts: 4,
            method: HeatMethod::Auto,
            min_r_squared: 0.9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEstimate {
    /// fit of the mean return probability against `t`
    pub fit: ExponentFit,
    /// `−2 · slope`
    pub d_s: f64,
    pub reliable: bool,
    pub warnings: Vec<String>,
}

impl SpectralEstimate {
    /// `(2d/(d+α), |d̂_s − 2d/(d+α)|)`.
    pub fn consistency(&self, d: f64, alpha: f64) -> (f64, f64) {
        let pred = 2.0 * d / (d + alpha);
        (pred, (self.d_s - pred).abs())
    }
}

fn return_curve(
    net: &Network,
    cfg: &SpectralConfig,
    times: &[f64],
    net_idx: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mu = cfg.mu.build(net)?;
    let mut rng = stream_rng(seed, net_idx as u32, streams::CENTERS);
    let take = cfg.n_starts.min(net.len());
    let mut starts: Vec<usize> = sample(&mut rng, net.len(), take).into_vec();
    starts.sort_unstable();
    let eigen = matches!(cfg.method, HeatMethod::Eigen) || (cfg.method == HeatMethod::Auto && net.len() <= EIGEN_LIMIT);
    if eigen {
        let hk = HeatKernel::new(net, &mu)?;
        return starts.iter().map(|&i| times.iter().map(|&t| hk.p(t, net.id(i), net.id(i))).collect()).collect();
    }
    starts.par_iter().map(|&i| return_probability_with(net, &mu, net.id(i), times, cfg.method)).collect()
}

/// Fits `log p̄(t) = c − (d_s/2) log t`, where `p̄` averages `p(t,x,x)` over
/// random start vertices of every network.
pub fn estimate_spectral_dimension(nets: &[&Network], cfg: &SpectralConfig, seed: u64) -> Result<SpectralEstimate> {
    if !(cfg.t_min > 0.0 && cfg.t_max >= 10.0 * cfg.t_min) {
        return Err(Error::arg("the time range must span at least one decade"));
    }
    if cfg.n_times < 3 || cfg.n_starts == 0 {
        return Err(Error::arg("need >= 3 times and >= 1 start vertex"));
    }
    if nets.is_empty() || nets.iter().any(|n| n.is_empty()) {
        return Err(Error::arg("need at least one non-empty network"));
    }
    let times = log_spaced(cfg.t_min, cfg.t_max, cfg.n_times);
    let mut sum = vec![0.0; times.len()];
    let mut count = 0usize;
    for (k, net) in nets.iter().enumerate() {
        for curve in return_curve(net, cfg, &times, k, seed)? {
            for (s, p) in sum.iter_mut().zip(curve) {
                *s += p;
            }
            count += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let fit = fit_power_law("spectral", &times, &mean)?;
    let mut warnings = Vec::new();
    let reliable = fit.r_squared >= cfg.min_r_squared;
    if !reliable {
        let msg = format!("return-probability fit has r² = {:.3}; no power-law regime", fit.r_squared);
        warn!("{msg}");
        warnings.push(msg);
    }
    Ok(SpectralEstimate { d_s: -2.0 * fit.slope, fit, reliable, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: u64) -> Network {
        Network::from_edges(0..n, (0..n).map(|i| (i, (i + 1) % n, 1.0))).unwrap()
    }

    #[test]
    fn log_grid() {
        let g = log_spaced(1.0, 1000.0, 4);
        for (a, b) in g.iter().zip([1.0, 10.0, 100.0, 1000.0]) {
            assert!((a - b).abs() < 1e-9 * b);
        }
    }

    #[test]
    fn ring_is_one_dimensional() {
        let net = ring(400);
        let cfg = SpectralConfig { t_min: 5.0, t_max: 500.0, n_starts: 3, ..SpectralConfig::default() };
        let est = estimate_spectral_dimension(&[&net], &cfg, 1).unwrap();
        assert!((0.85..=1.15).contains(&est.d_s), "{est:?}");
        assert!(est.reliable);
        let cfg = SpectralConfig { method: HeatMethod::Uniformization, ..cfg };
        let u = estimate_spectral_dimension(&[&net], &cfg, 1).unwrap();
        assert!((u.d_s - est.d_s).abs() < 1e-6);
    }

    #[test]
    fn complete_graph_has_no_power_law() {
        let n = 30u64;
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0)));
        let net = Network::from_edges(0..n, edges).unwrap();
        let cfg = SpectralConfig { t_min: 0.01, t_max: 10.0, ..SpectralConfig::default() };
        let est = estimate_spectral_dimension(&[&net], &cfg, 1).unwrap();
        assert!(!est.reliable || est.d_s.abs() < 0.2, "{est:?}");
    }

    #[test]
    fn rejects_short_range() {
        let net = ring(10);
        let cfg = SpectralConfig { t_min: 1.0, t_max: 5.0, ..SpectralConfig::default() };
        assert!(estimate_spectral_dimension(&[&net], &cfg, 1).is_err());
    }
}
