use std::collections::BTreeMap;

use gasket_core::exponents::{
    alpha_cables, estimate_alpha_with_cables, estimate_spectral_dimension, fit_dimension, theory_constants,
    AlphaConfig, AlphaEstimate, AnnulusOutcome, ExponentFit, SpectralConfig, SpectralEstimate, TheoryConstants,
};
use gasket_core::gasket::{volume_profile, ClusterGraph};
use gasket_core::rng::replica_seed;
use gasket_core::Network;
use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use super::{csv_bytes, json_bytes, largest_cluster, lattice_seed, num};
use crate::config::{parse_heat_method, Config, ExponentsSection};
use crate::error::{CliError, CliResult};
use crate::manifest::Output;

pub const RESULTS_FILE: &str = "results.json";

#[derive(Serialize)]
struct FitRecord {
    name: String,
    slope: f64,
    stderr: f64,
    r2: f64,
    intercept: f64,
    scales: Vec<f64>,
    values: Vec<f64>,
}

impl FitRecord {
    fn new(name: String, f: &ExponentFit) -> Self {
        FitRecord {
            name,
            slope: f.slope,
            stderr: f.stderr,
            r2: f.r_squared,
            intercept: f.intercept,
            scales: f.scales.clone(),
            values: f.values.clone(),
        }
    }
}

#[derive(Serialize)]
struct DimensionReport {
    estimate: f64,
    stderr: f64,
    band: [f64; 2],
    distance_to_d_cle: f64,
}

#[derive(Serialize)]
struct RatioRecord {
    scale: u32,
    ratio: f64,
}

#[derive(Serialize)]
struct AlphaReport {
    estimate: f64,
    stderr: f64,
    /// α̂ ± 2·stderr
    interval: [f64; 2],
    bracket: [f64; 2],
    slack_band: [f64; 2],
    ratios: Vec<RatioRecord>,
    /// `[2^lo, 2^hi]`
    ratio_band: [f64; 2],
    samples: usize,
    resolved: usize,
    disconnected: usize,
    no_data: usize,
}

#[derive(Serialize)]
struct SpectralReport {
    d_s: f64,
    r2: f64,
    reliable: bool,
    predicted: f64,
    gap: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct Report {
    size: usize,
    clusters: usize,
    dimension: Option<DimensionReport>,
    alpha: Option<AlphaReport>,
    spectral: Option<SpectralReport>,
    warnings: Vec<String>,
}

#[derive(Serialize)]
struct Results {
    constants: TheoryConstants,
    fits: Vec<FitRecord>,
    flags: BTreeMap<String, bool>,
    report: Report,
}

/// Everything measured at one lattice size.
struct SizeRun {
    size: usize,
    clusters: Vec<ClusterGraph>,
    dimension: Option<ExponentFit>,
    alpha: Option<AlphaEstimate>,
    spectral: Option<SpectralEstimate>,
    warnings: Vec<String>,
}

fn note(warnings: &mut Vec<String>, msg: String) {
    warn!("{msg}");
    warnings.push(msg);
}

fn alpha_config(e: &ExponentsSection, cfg: &Config) -> CliResult<AlphaConfig> {
    Ok(AlphaConfig {
        scales: e.scales.clone(),
        centers_per_cluster: e.centers,
        metric: e.shell_metric,
        eps_rule: e.eps_rule()?,
        cable: e.cable_params(),
        min_valid: e.min_valid,
        boundary_margin: e.boundary_margin,
        kappa_prime: e.kappa,
        ratio_band: (e.ratio_band[0], e.ratio_band[1]),
        slack_band: (e.alpha_band[0], e.alpha_band[1]),
        tol: cfg.tolerances()?,
    })
}

fn run_size(cfg: &Config, out: &mut Output, size: usize, headline: bool) -> CliResult<SizeRun> {
    let e = &cfg.exponents;
    let mut warnings = Vec::new();
    let seeds: Vec<u64> = (0..e.replicas).map(|r| lattice_seed(cfg.seed(), size, r)).collect();
    for (r, &s) in seeds.iter().enumerate() {
        out.record_seed(format!("L{size}_r{r}"), s);
    }
    let sampled: CliResult<Vec<_>> = seeds.par_iter().map(|&s| largest_cluster(size, e.p, s)).collect();
    let (clusters, cluster_seeds): (Vec<ClusterGraph>, Vec<u64>) = sampled?
        .into_iter()
        .zip(&seeds)
        .filter_map(|((c, _, _), &s)| c.filter(|c| c.len() > 1).map(|c| (c, s)))
        .unzip();
    if clusters.len() < seeds.len() {
        note(&mut warnings, format!("L={size}: {} replicas have no cluster", seeds.len() - clusters.len()));
    }
    if clusters.is_empty() {
        return Err(CliError::Compute(gasket_core::Error::Precondition(format!("L={size}: no clusters to measure"))));
    }

    let rmax = *e.radii.last().expect("validated");
    let profiles: gasket_core::Result<Vec<_>> = clusters
        .par_iter()
        .zip(&cluster_seeds)
        .map(|(c, &s)| volume_profile(c, &e.radii, e.volume_centers, s, e.volume_metric, rmax))
        .collect();
    let dimension = match fit_dimension(&profiles?, e.radii[0], rmax) {
        Ok(f) => Some(f),
        Err(err) => {
            note(&mut warnings, format!("L={size}: no dimension fit: {err}"));
            None
        }
    };

    let acfg = alpha_config(e, cfg)?;
    let alpha_seed = replica_seed(cfg.seed(), size as u32);
    let cables = alpha_cables(&clusters, &acfg, alpha_seed)?;
    let alpha = match estimate_alpha_with_cables(&clusters, &cables, &acfg, alpha_seed) {
        Ok(a) => {
            warnings.extend(a.warnings.iter().map(|w| format!("L={size}: {w}")));
            Some(a)
        }
        Err(err) => {
            note(&mut warnings, format!("L={size}: no resistance-exponent fit: {err}"));
            None
        }
    };

    let spectral = if headline && e.spectral {
        let scfg = SpectralConfig {
            mu: e.mu,
            t_min: e.t_min,
            t_max: e.t_max,
            n_times: e.n_times,
            n_starts: e.spectral_starts,
            method: parse_heat_method(&e.method, 10_000, cfg.seed())?,
            min_r_squared: e.min_r_squared,
        };
        let nets: Vec<&Network> =
            cables.iter().map(|row| &row[0].network).filter(|n| !n.is_empty()).take(e.spectral_nets).collect();
        match estimate_spectral_dimension(&nets, &scfg, alpha_seed) {
            Ok(s) => {
                warnings.extend(s.warnings.iter().cloned());
                Some(s)
            }
            Err(err) => {
                note(&mut warnings, format!("L={size}: no spectral fit: {err}"));
                None
            }
        }
    } else {
        None
    };
    Ok(SizeRun { size, clusters, dimension, alpha, spectral, warnings })
}

fn fit_csv(f: &ExponentFit) -> Vec<u8> {
    csv_bytes(&["scale", "value"], f.scales.iter().zip(&f.values).map(|(s, v)| vec![num(*s), num(*v)]))
}

pub fn run(cfg: &Config) -> CliResult<()> {
    let e = &cfg.exponents;
    e.validate()?;
    let constants = theory_constants(e.kappa)?;
    let mut out = Output::start("exponents", cfg)?;
    let headline_size = *e.sizes.iter().max().expect("validated");

    let mut fits = Vec::new();
    let mut headline = None;
    for &size in &e.sizes {
        let is_headline = size == headline_size && headline.is_none();
        let run = match run_size(cfg, &mut out, size, is_headline) {
            Ok(r) => r,
            Err(err) if !is_headline => {
                warn!("L={size}: {err}");
                continue;
            }
            Err(err) => return Err(err),
        };
        if let Some(f) = &run.dimension {
            let name = format!("dimension_L{size}");
            out.write(&format!("fit_{name}.csv"), &fit_csv(f))?;
            fits.push(FitRecord::new(name, f));
        }
        if let Some(a) = &run.alpha {
            let name = format!("alpha_L{size}");
            out.write(&format!("fit_{name}.csv"), &fit_csv(&a.fit))?;
            fits.push(FitRecord::new(name, &a.fit));
            let rows = a.samples.iter().map(|s| {
                let r = match s.outcome {
                    AnnulusOutcome::Resistance(r) => num(r),
                    AnnulusOutcome::Disconnected => "inf".into(),
                    AnnulusOutcome::NoData => String::new(),
                };
                vec![
                    s.cluster.to_string(),
                    s.scale.to_string(),
                    s.center.q.to_string(),
                    s.center.r.to_string(),
                    r,
                    s.outcome.status().into(),
                ]
            });
            out.write(
                &format!("annuli_L{size}.csv"),
                &csv_bytes(&["cluster", "scale", "center_q", "center_r", "resistance", "status"], rows),
            )?;
        }
        if let Some(s) = &run.spectral {
            let name = format!("return_probability_L{size}");
            out.write(&format!("fit_{name}.csv"), &fit_csv(&s.fit))?;
            fits.push(FitRecord::new(name, &s.fit));
        }
        if is_headline {
            headline = Some(run);
        }
    }
    let run = headline.expect("headline size ran");

    let mut flags = BTreeMap::new();
    let dimension = run.dimension.as_ref().map(|f| DimensionReport {
        estimate: f.slope,
        stderr: f.stderr,
        band: e.dimension_band,
        distance_to_d_cle: (f.slope - constants.d_cle).abs(),
    });
    flags.insert(
        "dimension_in_band".into(),
        dimension.as_ref().is_some_and(|d| d.estimate >= e.dimension_band[0] && d.estimate <= e.dimension_band[1]),
    );
    let alpha = run.alpha.as_ref().map(|a| {
        let (lo, hi) = a.fit.interval(2.0);
        let count = |status: &str| a.samples.iter().filter(|s| s.outcome.status() == status).count();
        AlphaReport {
            estimate: a.fit.slope,
            stderr: a.fit.stderr,
            interval: [lo, hi],
            bracket: [constants.d_double, constants.d_sle],
            slack_band: e.alpha_band,
            ratios: a.ratios.iter().map(|&(scale, ratio)| RatioRecord { scale, ratio }).collect(),
            ratio_band: [2f64.powf(e.ratio_band[0]), 2f64.powf(e.ratio_band[1])],
            samples: a.samples.len(),
            resolved: count("ok"),
            disconnected: count("disconnected"),
            no_data: count("no_data"),
        }
    });
    flags.insert("alpha_meets_slack_band".into(), run.alpha.as_ref().is_some_and(|a| a.meets_slack_band));
    flags.insert("alpha_meets_bracket".into(), run.alpha.as_ref().is_some_and(|a| a.meets_bracket));
    flags.insert("ratios_in_band".into(), run.alpha.as_ref().is_some_and(|a| a.ratios_in_band));
    let spectral = match (&run.spectral, &run.dimension, &run.alpha) {
        (Some(s), Some(d), Some(a)) => {
            let (predicted, gap) = s.consistency(d.slope, a.fit.slope);
            Some(SpectralReport {
                d_s: s.d_s,
                r2: s.fit.r_squared,
                reliable: s.reliable,
                predicted,
                gap,
                tolerance: e.spectral_tolerance,
            })
        }
        _ => None,
    };
    if e.spectral {
        flags.insert("spectral_reliable".into(), run.spectral.as_ref().is_some_and(|s| s.reliable));
        flags.insert("spectral_consistent".into(), spectral.as_ref().is_some_and(|s| s.gap <= s.tolerance));
    }

    let results = Results {
        constants,
        fits,
        flags,
        report: Report {
            size: run.size,
            clusters: run.clusters.len(),
            dimension,
            alpha,
            spectral,
            warnings: run.warnings,
        },
    };
    print_summary(&results);
    out.write(RESULTS_FILE, &json_bytes(&results))?;
    out.finish()?;
    Ok(())
}

fn print_summary(r: &Results) {
    let rep = &r.report;
    println!("L={} clusters={}", rep.size, rep.clusters);
    if let Some(d) = &rep.dimension {
        println!(
            "dimension {:.4} ± {:.4} (d_cle {:.4}, distance {:.4})",
            d.estimate, d.stderr, r.constants.d_cle, d.distance_to_d_cle
        );
    }
    if let Some(a) = &rep.alpha {
        println!("alpha     {:.4} ± {:.4} interval [{:.4}, {:.4}]", a.estimate, a.stderr, a.interval[0], a.interval[1]);
    }
    if let Some(s) = &rep.spectral {
        println!("d_s       {:.4} predicted {:.4} gap {:.4}", s.d_s, s.predicted, s.gap);
    }
    for (k, v) in &r.flags {
        println!("{k} = {v}");
    }
}
