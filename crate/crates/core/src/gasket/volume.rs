//! Ball volumes on a cluster.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::cluster::ClusterGraph;
use super::lattice::{hex_distance, Axial};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};
use crate::stats::quantile;

/// Which distance defines the ball `B(x, r)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BallMetric {
    /// graph distance inside the cluster
    #[default]
    Chemical,
    /// distance on the full lattice; counts cluster sites in a lattice hexagon
    Lattice,
}

impl BallMetric {
    pub fn parse(s: &str) -> Result<BallMetric> {
        match s {
            "chemical" => Ok(BallMetric::Chemical),
            "lattice" => Ok(BallMetric::Lattice),
            _ => Err(Error::arg(format!("unknown ball metric {s:?}"))),
        }
    }
}

/// Number of triangular-lattice sites within graph distance `r` of a site.
pub fn ball_size_full_lattice(r: u64) -> u64 {
    1 + 3 * r * (r + 1)
}

/// Sites at chemical distance at most `r` from `x`.
pub fn chemical_ball(cluster: &ClusterGraph, x: Axial, r: u32) -> Result<Vec<Axial>> {
    let i = cluster.index_of(x).ok_or_else(|| Error::arg(format!("site {x:?} is not in the cluster")))?;
    let d = cluster.bfs(i, Some(r));
    Ok((0..cluster.len()).filter(|&j| d[j] <= r).map(|j| cluster.site(j)).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeProfile {
    pub radii: Vec<u32>,
    pub centers: Vec<Axial>,
    /// `counts[c][k]` = |B(centers[c], radii[k])|
    pub counts: Vec<Vec<u64>>,
    pub metric: BallMetric,
}

impl VolumeProfile {
    /// Per-radius quantile of the counts over centers.
    pub fn quantile(&self, q: f64) -> Vec<f64> {
        (0..self.radii.len())
            .map(|k| {
                let col: Vec<f64> = self.counts.iter().map(|c| c[k] as f64).collect();
                quantile(&col, q).unwrap_or(f64::NAN)
            })
            .collect()
    }

    pub fn median(&self) -> Vec<f64> {
        self.quantile(0.5)
    }
}

/// Ball counts around `n_centers` sites drawn without replacement.
///
/// Only sites at least `margin` lattice steps inside the cluster's bounding
/// box are eligible as centers (all sites when none qualifies).
pub fn volume_profile(
    cluster: &ClusterGraph,
    radii: &[u32],
    n_centers: usize,
    seed: u64,
    metric: BallMetric,
    margin: u32,
) -> Result<VolumeProfile> {
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("radii must be strictly increasing"));
    }
    if cluster.is_empty() {
        return Err(Error::arg("empty cluster"));
    }
    let (q0, r0, q1, r1) = cluster.bbox();
    let m = margin as i32;
    let inside = |s: Axial| s.q - q0 >= m && q1 - s.q >= m && s.r - r0 >= m && r1 - s.r >= m;
    let mut eligible: Vec<usize> = (0..cluster.len()).filter(|&i| inside(cluster.site(i))).collect();
    if eligible.is_empty() {
        eligible = (0..cluster.len()).collect();
    }
    let mut rng = stream_rng(seed, 0, streams::CENTERS);
    let take = n_centers.min(eligible.len());
    let mut picks: Vec<usize> = sample(&mut rng, eligible.len(), take).into_iter().map(|k| eligible[k]).collect();
    picks.sort_unstable();
    let rmax = radii.last().copied().unwrap_or(0);

    let member = match metric {
        BallMetric::Lattice => {
            let w = (q1 - q0 + 1) as usize;
            let mut bits = vec![false; w * (r1 - r0 + 1) as usize];
            for s in cluster.sites() {
                bits[(s.r - r0) as usize * w + (s.q - q0) as usize] = true;
            }
            Some((bits, w))
        }
        BallMetric::Chemical => None,
    };

    let mut counts = Vec::with_capacity(picks.len());
    for &c in &picks {
        let mut hist = vec![0u64; rmax as usize + 1];
        match &member {
            None => {
                for d in cluster.bfs(c, Some(rmax)) {
                    if d <= rmax {
                        hist[d as usize] += 1;
                    }
                }
            }
            Some((bits, w)) => {
                let x = cluster.site(c);
                let rm = rmax as i32;
                for dr in -rm..=rm {
                    for dq in (-rm).max(-dr - rm)..=rm.min(-dr + rm) {
                        let s = Axial::new(x.q + dq, x.r + dr);
                        if s.q < q0 || s.q > q1 || s.r < r0 || s.r > r1 {
                            continue;
                        }
                        if bits[(s.r - r0) as usize * w + (s.q - q0) as usize] {
                            hist[hex_distance(s, x) as usize] += 1;
                        }
                    }
                }
            }
        }
        let mut acc = 0;
        let cum: Vec<u64> = hist
            .iter()
            .map(|h| {
                acc += h;
                acc
            })
            .collect();
        counts.push(radii.iter().map(|&r| cum[r as usize]).collect());
    }
    Ok(VolumeProfile {
        radii: radii.to_vec(),
        centers: picks.iter().map(|&i| cluster.site(i)).collect(),
        counts,
        metric,
    })
}
