use std::collections::VecDeque;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{replica_seed, stream_rng, streams};

/// Critical probability of site percolation on the triangular lattice.
pub const P_CRITICAL: f64 = 0.5;

/// Axial lattice coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Axial {
    pub q: i32,
    pub r: i32,
}

impl Axial {
    pub const fn new(q: i32, r: i32) -> Self {
        Axial { q, r }
    }
}

/// The six triangular-lattice neighbour offsets in axial coordinates.
pub const NEIGHBORS: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

/// Graph distance on the full triangular lattice.
pub fn hex_distance(a: Axial, b: Axial) -> u32 {
    let dq = a.q - b.q;
    let dr = a.r - b.r;
    ((dq.abs() + dr.abs() + (dq + dr).abs()) / 2) as u32
}

/// One percolation configuration on the `side × side` rhombus.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeConfig {
    pub side: usize,
    pub p: f64,
    pub seed: u64,
    /// Row-major open bitmap, index `r * side + q`.
    pub open: Vec<bool>,
}

impl LatticeConfig {
    /// Configuration with an explicit bitmap (used for hand-built fixtures).
    pub fn from_open(side: usize, open: Vec<bool>) -> Result<Self> {
        if open.len() != side * side {
            return Err(Error::arg(format!("bitmap length {} != {}²", open.len(), side)));
        }
        Ok(LatticeConfig { side, p: f64::NAN, seed: 0, open })
    }

    /// Configuration whose open sites are exactly `sites`.
    pub fn from_sites(side: usize, sites: &[Axial]) -> Result<Self> {
        let mut open = vec![false; side * side];
        for s in sites {
            let i = Self::index_in(side, *s).ok_or_else(|| Error::arg(format!("site {s:?} outside lattice")))?;
            open[i] = true;
        }
        Self::from_open(side, open)
    }

    fn index_in(side: usize, s: Axial) -> Option<usize> {
        let l = side as i32;
        (s.q >= 0 && s.r >= 0 && s.q < l && s.r < l).then(|| s.r as usize * side + s.q as usize)
    }

    pub fn index(&self, s: Axial) -> Option<usize> {
        Self::index_in(self.side, s)
    }

    pub fn site(&self, i: usize) -> Axial {
        Axial::new((i % self.side) as i32, (i / self.side) as i32)
    }

    pub fn is_open(&self, s: Axial) -> bool {
        self.index(s).is_some_and(|i| self.open[i])
    }

    pub fn n_open(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// Is there an open path from the column `q = 0` to the column `q = side − 1`?
    pub fn crosses_left_right(&self) -> bool {
        let l = self.side;
        let mut seen = vec![false; l * l];
        let mut queue = VecDeque::new();
        for r in 0..l {
            let i = r * l;
            if self.open[i] {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            let s = self.site(i);
            if s.q as usize == l - 1 {
                return true;
            }
            for (dq, dr) in NEIGHBORS {
                if let Some(j) = self.index(Axial::new(s.q + dq, s.r + dr)) {
                    if self.open[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        false
    }
}

/// Samples i.i.d. site percolation with parameter `p`; deterministic in `seed`.
pub fn sample_percolation(side: usize, p: f64, seed: u64) -> Result<LatticeConfig> {
    if side < 2 {
        return Err(Error::arg(format!("lattice side must be >= 2, got {side}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("p must lie in [0, 1], got {p}")));
    }
    let mut rng = stream_rng(seed, 0, streams::PERCOLATION);
    let open = (0..side * side).map(|_| rng.random::<f64>() < p).collect();
    Ok(LatticeConfig { side, p, seed, open })
}

/// Monte Carlo estimate of the left-right crossing probability of the rhombus,
/// with its binomial standard error. Replica `k` uses `replica_seed(seed, k)`.
pub fn crossing_probability(side: usize, p: f64, n_samples: usize, seed: u64) -> Result<(f64, f64)> {
    if n_samples == 0 {
        return Err(Error::arg("n_samples must be >= 1"));
    }
    let hits: Result<Vec<bool>> = (0..n_samples)
        .into_par_iter()
        .map(|k| Ok(sample_percolation(side, p, replica_seed(seed, k as u32))?.crosses_left_right()))
        .collect();
    let count = hits?.into_iter().filter(|&h| h).count();
    let n = n_samples as f64;
    let p_hat = count as f64 / n;
    Ok((p_hat, (p_hat * (1.0 - p_hat) / n).sqrt()))
}
