use gasket_core::diffusion::{occupation_times, return_probability_with, simulate_walk_replica};
use gasket_core::network::io::read_network_with_tail;
use gasket_core::VertexId;
use rayon::prelude::*;

use super::{csv_bytes, num, read_with};
use crate::config::{parse_heat_method, Config};
use crate::error::{CliError, CliResult};
use crate::manifest::Output;

pub fn run(cfg: &Config) -> CliResult<()> {
    let w = &cfg.walk;
    w.validate()?;
    let path = w.network.as_deref().expect("validated");
    let (net, _) = read_with(path, read_network_with_tail)?;
    if net.is_empty() {
        return Err(CliError::config(format!("{} has no vertices", path.display())));
    }
    let start = w.start.map(VertexId).unwrap_or(net.ids()[0]);
    if !net.contains(start) {
        return Err(CliError::config(format!("start vertex {start} is not in {}", path.display())));
    }
    let mu = w.mu.build(&net)?;
    let seed = cfg.seed();
    let method = parse_heat_method(&w.method, w.mc_replicas, seed)?;
    let mut out = Output::start("walk", cfg)?;

    let stored = w.trajectories.min(w.replicas);
    let paths: gasket_core::Result<Vec<_>> =
        (0..stored).into_par_iter().map(|r| simulate_walk_replica(&net, &mu, start, w.tmax, seed, r)).collect();
    for (r, traj) in paths?.into_iter().enumerate() {
        let rows = traj.times.iter().zip(&traj.states).map(|(t, v)| vec![num(*t), v.to_string()]);
        out.write(&format!("trajectory_r{r}.csv"), &csv_bytes(&["t", "vertex"], rows))?;
    }

    let occ: gasket_core::Result<Vec<Vec<f64>>> =
        (0..w.replicas).into_par_iter().map(|r| occupation_times(&net, &mu, start, w.tmax, seed, r)).collect();
    let mut total = vec![0.0; net.len()];
    for o in occ? {
        for (acc, x) in total.iter_mut().zip(o) {
            *acc += x;
        }
    }
    let time = w.tmax * w.replicas as f64;
    let mass = mu.total();
    let rows = net
        .ids()
        .iter()
        .enumerate()
        .map(|(i, v)| vec![v.to_string(), num(total[i]), num(total[i] / time), num(mu.values()[i] / mass)]);
    out.write("occupation.csv", &csv_bytes(&["vertex", "time", "fraction", "mu_fraction"], rows))?;

    if !w.times.is_empty() {
        let p = return_probability_with(&net, &mu, start, &w.times, method)?;
        let rows = w.times.iter().zip(p).map(|(t, p)| vec![num(*t), num(p)]);
        out.write("return.csv", &csv_bytes(&["t", "p"], rows))?;
    }
    out.finish()?;
    Ok(())
}
