use gasket_core::gasket::{cable_approximation, write_cable, write_snapshot, ClusterSnapshot};
use rayon::prelude::*;

use super::{csv_bytes, largest_cluster, lattice_seed};
use crate::config::Config;
use crate::error::CliResult;
use crate::manifest::Output;

pub fn run(cfg: &Config) -> CliResult<()> {
    let g = &cfg.generate;
    g.validate()?;
    let cable_params = if g.cable { Some(g.cable_params()?) } else { None };
    let mut out = Output::start("generate", cfg)?;

    let jobs: Vec<(usize, u32)> = g.sizes.iter().flat_map(|&l| (0..g.replicas).map(move |r| (l, r))).collect();
    let results: CliResult<Vec<_>> = jobs
        .par_iter()
        .map(|&(side, r)| {
            let seed = lattice_seed(cfg.seed(), side, r);
            let (largest, n_open, crosses) = largest_cluster(side, g.p, seed)?;
            let sites = largest.as_ref().map(|c| c.sites().to_vec()).unwrap_or_default();
            let mut snap = Vec::new();
            write_snapshot(&ClusterSnapshot { side, p: g.p, seed, sites }, &mut snap)?;
            let cable = match (&cable_params, &largest) {
                (Some(params), Some(cluster)) => {
                    let mut buf = Vec::new();
                    write_cable(&cable_approximation(cluster, params, seed)?, &mut buf)?;
                    Some(buf)
                }
                _ => None,
            };
            let n_sites = largest.map_or(0, |c| c.len());
            Ok((side, r, seed, snap, cable, n_sites, n_open, crosses))
        })
        .collect();

    let mut rows = Vec::new();
    for (side, r, seed, snap, cable, n_sites, n_open, crosses) in results? {
        let stem = format!("L{side}_r{r}");
        out.record_seed(&stem, seed);
        out.write(&format!("snapshots/{stem}.cluster"), &snap)?;
        if let Some(buf) = cable {
            out.write(&format!("cables/{stem}.net"), &buf)?;
        }
        rows.push(vec![
            side.to_string(),
            r.to_string(),
            seed.to_string(),
            n_sites.to_string(),
            n_open.to_string(),
            crosses.to_string(),
        ]);
    }
    out.write("clusters.csv", &csv_bytes(&["size", "replica", "seed", "largest", "open", "crosses"], rows))?;
    out.finish()?;
    Ok(())
}
