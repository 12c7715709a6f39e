//! The μ-symmetric jump process on a network.
//!
//! At `x` the process waits an exponential time of rate `μ₀(x)/μ(x)`, where
//! `μ₀(x) = Σ_y w(x,y)`, then jumps to `y` with probability `w(x,y)/μ₀(x)`.
//! It is reversible with respect to the speed measure `μ`.

mod heat;
mod hitting;

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Network, VertexId};
use crate::rng::{stream_rng, streams};

pub use heat::{return_probability, return_probability_with, transition_matrix, HeatKernel, HeatMethod, EIGEN_LIMIT};
pub use hitting::{commute_time_check, hitting_probability_mc, hitting_probability_solve, CommuteCheck, HittingQuery};

/// Most jumps a stored [`Trajectory`] may hold.
pub const MAX_STORED_JUMPS: usize = 10_000_000;

/// Speed measure, one positive mass per network vertex (in network order).
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedMeasure {
    mu: Vec<f64>,
}

/// Named choices of speed measure.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuRule {
    /// one unit of mass per vertex
    #[default]
    Count,
    /// `μ = μ₀`, the constant-speed walk
    Degree,
}

impl MuRule {
    pub fn parse(s: &str) -> Result<MuRule> {
        match s {
            "count" => Ok(MuRule::Count),
            "degree" => Ok(MuRule::Degree),
            _ => Err(Error::arg(format!("unknown speed measure {s:?} (count|degree)"))),
        }
    }

    pub fn build(self, net: &Network) -> Result<SpeedMeasure> {
        match self {
            MuRule::Count => Ok(SpeedMeasure::counting(net)),
            MuRule::Degree => SpeedMeasure::degree(net),
        }
    }
}

impl SpeedMeasure {
    pub fn counting(net: &Network) -> SpeedMeasure {
        SpeedMeasure { mu: vec![1.0; net.len()] }
    }

    /// `μ = μ₀`; fails on isolated vertices.
    pub fn degree(net: &Network) -> Result<SpeedMeasure> {
        let mu: Vec<f64> = (0..net.len()).map(|i| net.total_conductance(i)).collect();
        if let Some(i) = mu.iter().position(|&m| !(m > 0.0)) {
            return Err(Error::arg(format!("vertex {} is isolated; μ₀ vanishes there", net.id(i))));
        }
        Ok(SpeedMeasure { mu })
    }

    pub fn from_fn(net: &Network, f: impl Fn(VertexId) -> f64) -> Result<SpeedMeasure> {
        let mu: Vec<f64> = net.ids().iter().map(|&v| f(v)).collect();
        if let Some(i) = mu.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(Error::arg(format!(
                "speed measure must be positive and finite, got {} at {}",
                mu[i],
                net.id(i)
            )));
        }
        Ok(SpeedMeasure { mu })
    }

    pub fn from_values(net: &Network, values: &[(VertexId, f64)]) -> Result<SpeedMeasure> {
        let map: std::collections::HashMap<VertexId, f64> = values.iter().copied().collect();
        for v in map.keys() {
            net.require(*v)?;
        }
        Self::from_fn(net, |v| map.get(&v).copied().unwrap_or(f64::NAN))
    }

    pub(crate) fn check(&self, net: &Network) -> Result<()> {
        if self.mu.len() != net.len() {
            return Err(Error::arg("speed measure does not match the network"));
        }
        Ok(())
    }

    pub fn get(&self, net: &Network, v: VertexId) -> Option<f64> {
        net.index_of(v).and_then(|i| self.mu.get(i).copied())
    }

    pub fn values(&self) -> &[f64] {
        &self.mu
    }

    pub fn total(&self) -> f64 {
        self.mu.iter().sum()
    }
}

/// A stored path of the jump process: `states[k]` is occupied on
/// `[times[k], times[k+1])`, the last one until `t_end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<VertexId>,
    pub t_end: f64,
    pub seed: u64,
}

impl Trajectory {
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn n_jumps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    /// Time spent at each distinct state.
    pub fn occupation(&self) -> std::collections::BTreeMap<VertexId, f64> {
        let mut occ = std::collections::BTreeMap::new();
        for k in 0..self.states.len() {
            let end = self.times.get(k + 1).copied().unwrap_or(self.t_end);
            *occ.entry(self.states[k]).or_insert(0.0) += end - self.times[k];
        }
        occ
    }
}

/// Per-vertex jump tables shared by all simulators.
pub(crate) struct JumpChain {
    /// holding rate `μ₀/μ`
    pub rate: Vec<f64>,
    /// cumulative jump probabilities and targets
    pub cum: Vec<Vec<(f64, usize)>>,
}

impl JumpChain {
    pub fn new(net: &Network, mu: &SpeedMeasure) -> Result<JumpChain> {
        mu.check(net)?;
        let mut rate = Vec::with_capacity(net.len());
        let mut cum = Vec::with_capacity(net.len());
        for i in 0..net.len() {
            let total = net.total_conductance(i);
            rate.push(total / mu.mu[i]);
            let mut acc = 0.0;
            let row: Vec<(f64, usize)> = net
                .neighbors(i)
                .iter()
                .map(|&(j, w)| {
                    acc += w / total;
                    (acc, j)
                })
                .collect();
            cum.push(row);
        }
        Ok(JumpChain { rate, cum })
    }

    pub fn step(&self, x: usize, rng: &mut ChaCha8Rng) -> usize {
        let row = &self.cum[x];
        let u: f64 = rng.random();
        let k = row.partition_point(|&(c, _)| c <= u);
        row[k.min(row.len() - 1)].1
    }

    pub fn hold(&self, x: usize, rng: &mut ChaCha8Rng) -> f64 {
        let e: f64 = rng.sample(Exp1);
        e / self.rate[x]
    }

    /// Runs the process from `x0` up to time `t_max`, calling
    /// `visit(state, t_enter, t_leave)` for each sojourn (the last one is cut at `t_max`).
    pub fn run(&self, x0: usize, t_max: f64, rng: &mut ChaCha8Rng, mut visit: impl FnMut(usize, f64, f64)) {
        let mut x = x0;
        let mut t = 0.0;
        loop {
            let next = t + self.hold(x, rng);
            if next >= t_max {
                visit(x, t, t_max);
                return;
            }
            visit(x, t, next);
            t = next;
            x = self.step(x, rng);
        }
    }
}

fn start_index(net: &Network, x0: VertexId) -> Result<usize> {
    let i = net.require(x0)?;
    if net.neighbors(i).is_empty() {
        return Err(Error::Precondition(format!("start vertex {x0} is isolated; the walk cannot move")));
    }
    Ok(i)
}

/// Exact continuous-time simulation up to `t_max`. Fails if the path would
/// exceed [`MAX_STORED_JUMPS`]; use [`occupation_times`] for longer runs.
pub fn simulate_walk(net: &Network, mu: &SpeedMeasure, x0: VertexId, t_max: f64, seed: u64) -> Result<Trajectory> {
    simulate_walk_replica(net, mu, x0, t_max, seed, 0)
}

/// As [`simulate_walk`], drawing from the replica's own random stream.
pub fn simulate_walk_replica(
    net: &Network,
    mu: &SpeedMeasure,
    x0: VertexId,
    t_max: f64,
    seed: u64,
    replica: u32,
) -> Result<Trajectory> {
    if !(t_max > 0.0) {
        return Err(Error::arg("t_max must be > 0"));
    }
    let i0 = start_index(net, x0)?;
    let chain = JumpChain::new(net, mu)?;
    let mut rng = stream_rng(seed, replica, streams::WALK);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut overflow = false;
    chain.run(i0, t_max, &mut rng, |x, t, _| {
        if times.len() <= MAX_STORED_JUMPS {
            times.push(t);
            states.push(net.id(x));
        } else {
            overflow = true;
        }
    });
    if overflow {
        return Err(Error::Precondition(format!(
            "walk exceeds {MAX_STORED_JUMPS} jumps; stream occupation statistics instead"
        )));
    }
    Ok(Trajectory { times, states, t_end: t_max, seed })
}

/// Time spent at each vertex (network order) by one run of length `t_max`,
/// without storing the path.
pub fn occupation_times(
    net: &Network,
    mu: &SpeedMeasure,
    x0: VertexId,
    t_max: f64,
    seed: u64,
    replica: u32,
) -> Result<Vec<f64>> {
    if !(t_max > 0.0) {
        return Err(Error::arg("t_max must be > 0"));
    }
    let i0 = start_index(net, x0)?;
    let chain = JumpChain::new(net, mu)?;
    let mut rng = stream_rng(seed, replica, streams::WALK);
    let mut occ = vec![0.0; net.len()];
    chain.run(i0, t_max, &mut rng, |x, a, b| occ[x] += b - a);
    Ok(occ)
}

/// The path watched only while it is in `b`: time outside `b` is cut out and
/// consecutive visits to the same state are merged.
pub fn trace_walk(traj: &Trajectory, b: &[VertexId]) -> Result<Trajectory> {
    if b.is_empty() {
        return Err(Error::arg("trace set must be nonempty"));
    }
    let set: HashSet<VertexId> = b.iter().copied().collect();
    let mut times = Vec::new();
    let mut states: Vec<VertexId> = Vec::new();
    // excised time so far; subtracting it keeps times exact when nothing is cut
    let mut cut = 0.0;
    for k in 0..traj.states.len() {
        let start = traj.times[k];
        let end = traj.times.get(k + 1).copied().unwrap_or(traj.t_end);
        let s = traj.states[k];
        if !set.contains(&s) {
            cut += end - start;
            continue;
        }
        if states.last() != Some(&s) {
            times.push(if states.is_empty() { 0.0 } else { start - cut });
            states.push(s);
        }
    }
    let t_end = if states.is_empty() { 0.0 } else { traj.t_end - cut };
    Ok(Trajectory { times, states, t_end, seed: traj.seed })
}
