use std::collections::HashMap;
use std::path::{Path, PathBuf};

use gasket_core::exponents::{alpha_cables, sample_annuli, AlphaConfig, AnnulusOutcome, EpsRule};
use gasket_core::gasket::{read_snapshot, ClusterGraph};
use gasket_core::network::io::read_network_with_tail;
use gasket_core::network::resistance_matrix;
use gasket_core::rng::replica_seed;
use gasket_core::VertexId;

use super::{csv_bytes, num, read_with};
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::manifest::Output;

pub fn run(cfg: &Config) -> CliResult<()> {
    let rs = &cfg.resist;
    rs.validate()?;
    match &rs.network {
        Some(path) => pairwise(cfg, path),
        None => annuli(cfg),
    }
}

fn pairwise(cfg: &Config, path: &Path) -> CliResult<()> {
    let tol = cfg.tolerances()?;
    let (net, _) = read_with(path, read_network_with_tail)?;
    let pairs: Vec<(VertexId, VertexId)> = if cfg.resist.pairs.is_empty() {
        let ids = net.ids();
        (0..ids.len()).flat_map(|i| (i + 1..ids.len()).map(move |j| (ids[i], ids[j]))).collect()
    } else {
        cfg.resist.pairs.iter().map(|&[x, y]| (VertexId(x), VertexId(y))).collect()
    };
    let mut subset: Vec<VertexId> = Vec::new();
    let mut slot = HashMap::new();
    for &(x, y) in &pairs {
        for v in [x, y] {
            if !net.contains(v) {
                return Err(CliError::config(format!("vertex {v} is not in {}", path.display())));
            }
            slot.entry(v).or_insert_with(|| {
                subset.push(v);
                subset.len() - 1
            });
        }
    }
    let mut out = Output::start("resist", cfg)?;
    let rm = resistance_matrix(&net, &subset, &tol)?;
    let rows = pairs.iter().map(|&(x, y)| vec![x.to_string(), y.to_string(), num(rm.matrix()[(slot[&x], slot[&y])])]);
    out.write("resistance.csv", &csv_bytes(&["x", "y", "resistance"], rows))?;
    out.finish()?;
    Ok(())
}

/// Snapshot files named directly or found as `*.cluster` in a directory, in order.
fn snapshot_paths(entries: &[PathBuf]) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for e in entries {
        if e.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(e)
                .map_err(|err| CliError::io(e, err))?
                .filter_map(|d| d.ok().map(|d| d.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "cluster"))
                .collect();
            found.sort();
            if found.is_empty() {
                return Err(CliError::io(e, "no *.cluster snapshots in directory"));
            }
            out.extend(found);
        } else if e.is_file() {
            out.push(e.clone());
        } else {
            return Err(CliError::io(e, "snapshot not found"));
        }
    }
    Ok(out)
}

fn annuli(cfg: &Config) -> CliResult<()> {
    let rs = &cfg.resist;
    let paths = snapshot_paths(&rs.snapshots)?;
    let mut clusters = Vec::with_capacity(paths.len());
    for p in &paths {
        let snap = read_with(p, read_snapshot)?;
        clusters.push(ClusterGraph::from_sites(&snap.sites).map_err(|e| CliError::io(p, e))?);
    }
    let params = rs.cable_params()?;
    let acfg = AlphaConfig {
        scales: rs.scales.clone(),
        centers_per_cluster: rs.centers,
        metric: rs.metric,
        eps_rule: EpsRule::Fixed(params.eps),
        cable: params,
        boundary_margin: rs.boundary_margin,
        tol: cfg.tolerances()?,
        ..AlphaConfig::default()
    };
    let mut out = Output::start("resist", cfg)?;
    for (c, p) in paths.iter().enumerate() {
        out.record_seed(p.display().to_string(), replica_seed(cfg.seed(), c as u32));
    }
    let cables = alpha_cables(&clusters, &acfg, cfg.seed())?;
    let samples = sample_annuli(&clusters, &cables, &acfg, cfg.seed())?;
    for (c, p) in paths.iter().enumerate() {
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| c.to_string());
        let rows = samples.iter().filter(|s| s.cluster == c).map(|s| {
            let r = match s.outcome {
                AnnulusOutcome::Resistance(r) => num(r),
                AnnulusOutcome::Disconnected => "inf".into(),
                AnnulusOutcome::NoData => String::new(),
            };
            vec![s.scale.to_string(), s.center.q.to_string(), s.center.r.to_string(), r, s.outcome.status().into()]
        });
        out.write(
            &format!("annuli_{stem}.csv"),
            &csv_bytes(&["scale", "center_q", "center_r", "resistance", "status"], rows),
        )?;
    }
    out.finish()?;
    Ok(())
}
