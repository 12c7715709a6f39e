//! Annulus resistances and the resistance exponent.

use std::sync::Arc;

use log::warn;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_power_law, theory_constants, ExponentFit, TheoryConstants};
use crate::error::{Error, Result};
use crate::gasket::{cable_approximation, hex_distance, Axial, CableNetwork, CableParams, ClusterGraph};
use crate::network::{effective_resistance, Network, NetworkBuilder, Tolerances, VertexId, INFINITE_RESISTANCE};
use crate::rng::{replica_seed, stream_rng, streams};
use crate::stats::median;

/// Distance used to cut the annulus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShellMetric {
    /// chemical distance in the cluster
    #[default]
    Chemical,
    /// distance on the full lattice
    Lattice,
}

impl ShellMetric {
    pub fn parse(s: &str) -> Result<ShellMetric> {
        match s {
            "chemical" => Ok(ShellMetric::Chemical),
            "lattice" => Ok(ShellMetric::Lattice),
            _ => Err(Error::arg(format!("unknown shell metric {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnulusOutcome {
    Resistance(f64),
    /// no cable joins the two shells
    Disconnected,
    /// one of the shells holds no cable vertex
    NoData,
}

impl AnnulusOutcome {
    /// Resistance with [`INFINITE_RESISTANCE`] for disconnected shells; `None` without data.
    pub fn value(&self) -> Option<f64> {
        match *self {
            AnnulusOutcome::Resistance(r) => Some(r),
            AnnulusOutcome::Disconnected => Some(INFINITE_RESISTANCE),
            AnnulusOutcome::NoData => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            AnnulusOutcome::Resistance(_) => "ok",
            AnnulusOutcome::Disconnected => "disconnected",
            AnnulusOutcome::NoData => "no_data",
        }
    }
}

const INNER: VertexId = VertexId(u64::MAX - 1);
const OUTER: VertexId = VertexId(u64::MAX);

/// Resistance between the glued inner set `{d ≤ r_in}` and the glued outer
/// set `{d ≥ r_out}`, where `dist[i]` is the distance of network vertex `i`
/// from the center (`u32::MAX` for "far").
fn annulus_core(net: &Network, dist: &[u32], r_in: u32, r_out: u32, tol: &Tolerances) -> Result<AnnulusOutcome> {
    let role = |i: usize| {
        if dist[i] <= r_in {
            0u8
        } else if dist[i] >= r_out {
            2
        } else {
            1
        }
    };
    let (mut has_in, mut has_out) = (false, false);
    let mut b = NetworkBuilder::default();
    b.add_vertex(INNER);
    b.add_vertex(OUTER);
    for i in 0..net.len() {
        match role(i) {
            0 => has_in = true,
            2 => {
                has_out = true;
                continue;
            }
            _ => {}
        }
        let label = |j: usize| match role(j) {
            0 => INNER,
            2 => OUTER,
            _ => net.id(j),
        };
        let li = label(i);
        for &(j, w) in net.neighbors(i) {
            // inner/middle pairs are met twice; keep one of them
            if role(j) != 2 && j < i {
                continue;
            }
            let lj = label(j);
            if li != lj {
                b.push_edge_unchecked(li, lj, w);
            }
        }
    }
    if !(has_in && has_out) {
        return Ok(AnnulusOutcome::NoData);
    }
    let local = b.build();
    let r = effective_resistance(&local, INNER, OUTER, tol)?;
    Ok(if r == INFINITE_RESISTANCE { AnnulusOutcome::Disconnected } else { AnnulusOutcome::Resistance(r) })
}

/// Maps cable vertices to cluster sites.
fn vertex_sites(cable: &CableNetwork, cluster: &ClusterGraph) -> Result<Vec<usize>> {
    cable
        .network
        .ids()
        .iter()
        .map(|&v| {
            cable
                .coord(v)
                .and_then(|a| cluster.index_of(a))
                .ok_or_else(|| Error::arg(format!("cable vertex {v} does not sit on the cluster")))
        })
        .collect()
}

fn distances(
    cable: &CableNetwork,
    cluster: &ClusterGraph,
    sites: &[usize],
    center: Axial,
    r_out: u32,
    metric: ShellMetric,
) -> Result<Vec<u32>> {
    match metric {
        ShellMetric::Lattice => Ok(sites.iter().map(|&s| hex_distance(cluster.site(s), center)).collect()),
        ShellMetric::Chemical => {
            let c = cluster
                .index_of(center)
                .ok_or_else(|| Error::arg(format!("center {center:?} is not a cluster site")))?;
            let d = cluster.bfs(c, Some(r_out));
            let _ = cable;
            Ok(sites.iter().map(|&s| d[s]).collect())
        }
    }
}

/// Effective resistance across the annulus `r_in < d(center, ·) < r_out`
/// after gluing each boundary shell into one node.
pub fn annulus_resistance(
    cable: &CableNetwork,
    cluster: &ClusterGraph,
    center: Axial,
    r_in: u32,
    r_out: u32,
    metric: ShellMetric,
    tol: &Tolerances,
) -> Result<AnnulusOutcome> {
    if r_in >= r_out {
        return Err(Error::arg(format!("need r_in < r_out, got {r_in} >= {r_out}")));
    }
    let sites = vertex_sites(cable, cluster)?;
    let dist = distances(cable, cluster, &sites, center, r_out, metric)?;
    annulus_core(&cable.network, &dist, r_in, r_out, tol)
}

/// Cable scale as a function of the annulus scale `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsRule {
    Fixed(f64),
    /// `eps = max(2, c·δ)`
    Proportional(f64),
}

impl EpsRule {
    pub fn eps(&self, delta: u32) -> f64 {
        match *self {
            EpsRule::Fixed(e) => e,
            EpsRule::Proportional(c) => (c * delta as f64).max(2.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaConfig {
    /// inner radii δ; the outer radius is 2δ
    pub scales: Vec<u32>,
    pub centers_per_cluster: usize,
    pub metric: ShellMetric,
    pub eps_rule: EpsRule,
    /// template for the cable networks (its `eps` is replaced by the rule)
    pub cable: CableParams,
    /// scales with fewer usable annuli are dropped
    pub min_valid: usize,
    /// keep centers `2δ` away from the cluster's bounding box
    pub boundary_margin: bool,
    pub kappa_prime: f64,
    /// band for the exponent of the dyadic median ratios
    pub ratio_band: (f64, f64),
    /// slack band for the confidence interval of α̂
    pub slack_band: (f64, f64),
    pub tol: Tolerances,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        AlphaConfig {
            scales: vec![8, 16, 32, 64],
            centers_per_cluster: 10,
            metric: ShellMetric::Chemical,
            eps_rule: EpsRule::Fixed(2.0),
            cable: CableParams::default(),
            min_valid: 10,
            boundary_margin: true,
            kappa_prime: 6.0,
            ratio_band: RATIO_BAND,
            slack_band: ALPHA_SLACK_BAND,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSample {
    pub cluster: usize,
    pub scale: u32,
    pub center: Axial,
    pub outcome: AnnulusOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaEstimate {
    pub fit: ExponentFit,
    pub samples: Vec<AnnulusSample>,
    /// `(δ, m(2δ)/m(δ))` for consecutive dyadic scales
    pub ratios: Vec<(u32, f64)>,
    pub ratios_in_band: bool,
    /// does `α̂ ± 2·stderr` meet `[d_double, d_sle]`?
    pub meets_bracket: bool,
    /// does `α̂ ± 2·stderr` meet the configured slack band?
    pub meets_slack_band: bool,
    pub theory: TheoryConstants,
    pub warnings: Vec<String>,
}

/// Sample median of annulus resistances at one scale (infinite values allowed).
pub fn median_normalizer(samples: &[f64]) -> Result<f64> {
    if samples.len() < 10 {
        return Err(Error::arg(format!("median normalizer needs >= 10 samples, got {}", samples.len())));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::arg("NaN resistance sample"));
    }
    Ok(median(samples).unwrap_or(f64::NAN))
}

/// `m(2δ)/m(δ)` wherever both `δ` and `2δ` are present.
pub fn dyadic_ratios(scales: &[f64], medians: &[f64]) -> Vec<(u32, f64)> {
    let mut out = Vec::new();
    for (i, &s) in scales.iter().enumerate() {
        if let Some(j) = scales.iter().position(|&t| t == 2.0 * s) {
            out.push((s as u32, medians[j] / medians[i]));
        }
    }
    out
}

/// Loose band around `[2^d_double, 2^d_sle]` for the dyadic median ratios.
pub const RATIO_BAND: (f64, f64) = (0.5, 1.6);
/// Slack band for the confidence interval of α̂.
pub const ALPHA_SLACK_BAND: (f64, f64) = (0.4, 1.7);

fn eligible_centers(cluster: &ClusterGraph, margin: Option<u32>) -> Vec<usize> {
    let (q0, r0, q1, r1) = cluster.bbox();
    let ok = |s: Axial| match margin {
        None => true,
        Some(m) => {
            let m = m as i32;
            s.q - q0 >= m && q1 - s.q >= m && s.r - r0 >= m && r1 - s.r >= m
        }
    };
    (0..cluster.len()).filter(|&i| ok(cluster.site(i))).collect()
}

/// Builds one cable per (cluster, distinct eps) and estimates α from the
/// median annulus resistance per scale.
pub fn estimate_alpha(clusters: &[ClusterGraph], cfg: &AlphaConfig, seed: u64) -> Result<AlphaEstimate> {
    let table = alpha_cables(clusters, cfg, seed)?;
    estimate_alpha_with_cables(clusters, &table, cfg, seed)
}

/// Cable table for [`estimate_alpha_with_cables`]: `table[c][k]` serves
/// cluster `c` at scale `cfg.scales[k]`, shared between scales with equal eps.
pub fn alpha_cables(clusters: &[ClusterGraph], cfg: &AlphaConfig, seed: u64) -> Result<Vec<Vec<Arc<CableNetwork>>>> {
    let mut eps_values: Vec<f64> = cfg.scales.iter().map(|&s| cfg.eps_rule.eps(s)).collect();
    eps_values.sort_by(f64::total_cmp);
    eps_values.dedup();
    let built: Result<Vec<Vec<Arc<CableNetwork>>>> = clusters
        .par_iter()
        .enumerate()
        .map(|(c, g)| {
            eps_values
                .iter()
                .map(|&eps| {
                    let params = CableParams { eps, ..cfg.cable };
                    Ok(Arc::new(cable_approximation(g, &params, replica_seed(seed, c as u32))?))
                })
                .collect()
        })
        .collect();
    let built = built?;
    let table: Vec<Vec<Arc<CableNetwork>>> = built
        .into_iter()
        .map(|per_eps| {
            cfg.scales
                .iter()
                .map(|&s| {
                    let k = eps_values.iter().position(|&e| e == cfg.eps_rule.eps(s)).unwrap_or(0);
                    Arc::clone(&per_eps[k])
                })
                .collect()
        })
        .collect();
    Ok(table)
}

/// As [`estimate_alpha`] with prebuilt cables: `cables[c][k]` serves cluster
/// `c` at scale `cfg.scales[k]`.
pub fn estimate_alpha_with_cables(
    clusters: &[ClusterGraph],
    cables: &[Vec<Arc<CableNetwork>>],
    cfg: &AlphaConfig,
    seed: u64,
) -> Result<AlphaEstimate> {
    let theory = theory_constants(cfg.kappa_prime)?;
    if cfg.scales.len() < 3 {
        return Err(Error::arg("α needs at least three scales"));
    }
    let samples = sample_annuli(clusters, cables, cfg, seed)?;
    summarize(samples, cfg, theory)
}

/// Annulus resistances `R(B(x,δ), B(x,2δ)ᶜ)` at random centers for every
/// cluster and scale, without any fitting.
pub fn sample_annuli(
    clusters: &[ClusterGraph],
    cables: &[Vec<Arc<CableNetwork>>],
    cfg: &AlphaConfig,
    seed: u64,
) -> Result<Vec<AnnulusSample>> {
    if cfg.scales.contains(&0) {
        return Err(Error::arg("scales must be positive"));
    }
    if cables.len() != clusters.len() || cables.iter().any(|row| row.len() != cfg.scales.len()) {
        return Err(Error::arg("cable table does not match clusters × scales"));
    }
    let mut tasks = Vec::new();
    let mut site_maps = Vec::with_capacity(clusters.len());
    for (c, g) in clusters.iter().enumerate() {
        site_maps.push(cables[c].iter().map(|cab| vertex_sites(cab, g).map(Arc::new)).collect::<Result<Vec<_>>>()?);
        for (k, &delta) in cfg.scales.iter().enumerate() {
            let eligible = eligible_centers(g, cfg.boundary_margin.then_some(2 * delta));
            let mut rng = stream_rng(seed, ((c as u32) << 8) | k as u32, streams::CENTERS);
            let take = cfg.centers_per_cluster.min(eligible.len());
            let mut picks: Vec<usize> =
                sample(&mut rng, eligible.len(), take).into_iter().map(|i| eligible[i]).collect();
            picks.sort_unstable();
            tasks.extend(picks.into_iter().map(|p| (c, k, p)));
        }
    }
    let samples: Result<Vec<AnnulusSample>> = tasks
        .par_iter()
        .map(|&(c, k, p)| {
            let g = &clusters[c];
            let cable = &cables[c][k];
            let delta = cfg.scales[k];
            let center = g.site(p);
            let dist = distances(cable, g, &site_maps[c][k], center, 2 * delta, cfg.metric)?;
            let outcome = annulus_core(&cable.network, &dist, delta, 2 * delta, &cfg.tol)?;
            Ok(AnnulusSample { cluster: c, scale: delta, center, outcome })
        })
        .collect();
    samples
}

fn summarize(samples: Vec<AnnulusSample>, cfg: &AlphaConfig, theory: TheoryConstants) -> Result<AlphaEstimate> {
    let mut warnings = Vec::new();
    let mut scales = Vec::new();
    let mut medians = Vec::new();
    for &delta in &cfg.scales {
        let vals: Vec<f64> = samples.iter().filter(|s| s.scale == delta).filter_map(|s| s.outcome.value()).collect();
        if vals.len() < cfg.min_valid.max(1) {
            let msg = format!("scale {delta}: only {} usable annuli (need {}), dropped", vals.len(), cfg.min_valid);
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let m = median(&vals).unwrap_or(f64::NAN);
        if !(m.is_finite() && m > 0.0) {
            let msg = format!("scale {delta}: median resistance {m} is not usable, dropped");
            warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        scales.push(delta as f64);
        medians.push(m);
    }
    let fit = fit_power_law("alpha", &scales, &medians)?;
    let (lo, hi) = fit.interval(2.0);
    let ratios = dyadic_ratios(&scales, &medians);
    let (b0, b1) = (2f64.powf(cfg.ratio_band.0), 2f64.powf(cfg.ratio_band.1));
    let ratios_in_band = !ratios.is_empty() && ratios.iter().all(|&(_, r)| r >= b0 && r <= b1);
    Ok(AlphaEstimate {
        meets_bracket: theory.bracket_meets(lo, hi),
        meets_slack_band: lo <= cfg.slack_band.1 && hi >= cfg.slack_band.0,
        fit,
        samples,
        ratios,
        ratios_in_band,
        theory,
        warnings,
    })
}
