//! TOML experiment configuration: global keys plus one table per subcommand.

use std::path::{Path, PathBuf};

use gasket_core::diffusion::{HeatMethod, MuRule};
use gasket_core::exponents::{EpsRule, ShellMetric};
use gasket_core::gasket::{BallMetric, CableParams, EdgeMode};
use gasket_core::Tolerances;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub solve_tol: Option<f64>,
    pub assert_tol: Option<f64>,
    pub dense_limit: Option<usize>,
    #[serde(default)]
    pub generate: GenerateSection,
    #[serde(default)]
    pub resist: ResistSection,
    #[serde(default)]
    pub walk: WalkSection,
    #[serde(default)]
    pub exponents: ExponentsSection,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub sizes: Vec<usize>,
    pub p: f64,
    pub replicas: u32,
    /// also write the cable network of every snapshot
    pub cable: bool,
    pub eps: f64,
    pub c0: f64,
    pub a0: f64,
    pub intensity_scale: f64,
    pub edge_mode: EdgeMode,
}

impl Default for GenerateSection {
    fn default() -> Self {
        GenerateSection {
            sizes: vec![64],
            p: 0.5,
            replicas: 1,
            cable: false,
            eps: 2.0,
            c0: 0.05,
            a0: 0.25,
            intensity_scale: 64.0,
            edge_mode: EdgeMode::Length,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResistSection {
    /// network file for pairwise resistances
    pub network: Option<PathBuf>,
    /// vertex pairs; all pairs when empty
    pub pairs: Vec<[u64; 2]>,
    /// cluster snapshots (files or directories of `*.cluster`) for annulus resistances
    pub snapshots: Vec<PathBuf>,
    pub scales: Vec<u32>,
    pub centers: usize,
    pub metric: ShellMetric,
    pub boundary_margin: bool,
    pub eps: f64,
    pub c0: f64,
    pub a0: f64,
    pub intensity_scale: f64,
    pub edge_mode: EdgeMode,
}

impl Default for ResistSection {
    fn default() -> Self {
        ResistSection {
            network: None,
            pairs: Vec::new(),
            snapshots: Vec::new(),
            scales: vec![8, 16, 32, 64],
            centers: 10,
            metric: ShellMetric::Chemical,
            boundary_margin: true,
            eps: 2.0,
            c0: 0.05,
            a0: 0.25,
            intensity_scale: 64.0,
            edge_mode: EdgeMode::Length,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WalkSection {
    pub network: Option<PathBuf>,
    /// start vertex; the first vertex of the file when absent
    pub start: Option<u64>,
    pub mu: MuRule,
    pub tmax: f64,
    pub replicas: u32,
    /// number of replicas whose full path is written
    pub trajectories: u32,
    /// time grid for `p(t, start, start)`; skipped when empty
    pub times: Vec<f64>,
    /// auto | eigen | uniformization | monte_carlo
    pub method: String,
    pub mc_replicas: usize,
}

impl Default for WalkSection {
    fn default() -> Self {
        WalkSection {
            network: None,
            start: None,
            mu: MuRule::Count,
            tmax: 100.0,
            replicas: 1,
            trajectories: 1,
            times: Vec::new(),
            method: "auto".into(),
            mc_replicas: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExponentsSection {
    pub kappa: f64,
    pub sizes: Vec<usize>,
    /// largest clusters per lattice size
    pub replicas: u32,
    pub p: f64,
    pub volume_metric: BallMetric,
    pub radii: Vec<u32>,
    pub volume_centers: usize,
    pub scales: Vec<u32>,
    pub centers: usize,
    pub shell_metric: ShellMetric,
    pub boundary_margin: bool,
    pub min_valid: usize,
    /// fixed | proportional
    pub eps_rule: String,
    pub eps: f64,
    /// eps = eps_factor · δ under the proportional rule
    pub eps_factor: f64,
    pub c0: f64,
    pub a0: f64,
    pub intensity_scale: f64,
    pub edge_mode: EdgeMode,
    pub spectral: bool,
    pub spectral_nets: usize,
    pub spectral_starts: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub n_times: usize,
    pub mu: MuRule,
    pub method: String,
    pub min_r_squared: f64,
    pub dimension_band: [f64; 2],
    pub alpha_band: [f64; 2],
    pub ratio_band: [f64; 2],
    pub spectral_tolerance: f64,
}

impl Default for ExponentsSection {
    fn default() -> Self {
        ExponentsSection {
            kappa: 6.0,
            sizes: vec![512],
            replicas: 20,
            p: 0.5,
            volume_metric: BallMetric::Lattice,
            radii: vec![8, 11, 16, 23, 32, 45, 64],
            volume_centers: 50,
            scales: vec![8, 16, 32, 64],
            centers: 10,
            shell_metric: ShellMetric::Chemical,
            boundary_margin: true,
            min_valid: 10,
            eps_rule: "fixed".into(),
            eps: 2.0,
            eps_factor: 0.125,
            c0: 0.05,
            a0: 0.25,
            intensity_scale: 64.0,
            edge_mode: EdgeMode::Length,
            spectral: true,
            spectral_nets: 4,
            spectral_starts: 4,
            t_min: 10.0,
            t_max: 1000.0,
            n_times: 12,
            mu: MuRule::Count,
            method: "uniformization".into(),
            min_r_squared: 0.9,
            dimension_band: [1.75, 2.0],
            alpha_band: [0.4, 1.7],
            ratio_band: [0.5, 1.6],
            spectral_tolerance: 0.15,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// multiplies every case count
    pub case_scale: f64,
    pub inject_nonmetric: bool,
}

impl Default for VerifySection {
    fn default() -> Self {
        VerifySection { case_scale: 1.0, inject_nonmetric: false }
    }
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("{}: {}", path.display(), e.message())))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn tolerances(&self) -> CliResult<Tolerances> {
        let d = Tolerances::default();
        let t = Tolerances {
            solve_tol: self.solve_tol.unwrap_or(d.solve_tol),
            assert_tol: self.assert_tol.unwrap_or(d.assert_tol),
            dense_limit: self.dense_limit.unwrap_or(d.dense_limit),
        };
        t.validate()?;
        Ok(t)
    }
}

fn check(ok: bool, msg: impl Into<String>) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(msg))
    }
}

fn check_p(p: f64) -> CliResult<()> {
    check((0.0..=1.0).contains(&p), format!("p must lie in [0, 1], got {p}"))
}

fn check_band(name: &str, b: [f64; 2]) -> CliResult<()> {
    check(b[0].is_finite() && b[1].is_finite() && b[0] <= b[1], format!("{name} must be an ordered pair, got {b:?}"))
}

fn check_scales(name: &str, s: &[u32]) -> CliResult<()> {
    check(!s.is_empty() && s.iter().all(|&x| x > 0), format!("{name} must be a non-empty list of positive integers"))?;
    check(s.windows(2).all(|w| w[0] < w[1]), format!("{name} must be strictly increasing"))
}

fn cable_params(eps: f64, c0: f64, a0: f64, intensity_scale: f64, edge_mode: EdgeMode) -> CliResult<CableParams> {
    let p = CableParams { eps, c0, a0, intensity_scale, edge_mode, ..CableParams::default() };
    p.validate()?;
    Ok(p)
}

pub fn parse_heat_method(s: &str, mc_replicas: usize, seed: u64) -> CliResult<HeatMethod> {
    match s {
        "auto" => Ok(HeatMethod::Auto),
        "eigen" => Ok(HeatMethod::Eigen),
        "uniformization" => Ok(HeatMethod::Uniformization),
        "monte_carlo" => Ok(HeatMethod::MonteCarlo { replicas: mc_replicas, seed }),
        _ => Err(CliError::config(format!("unknown heat method {s:?} (auto|eigen|uniformization|monte_carlo)"))),
    }
}

impl GenerateSection {
    pub fn validate(&self) -> CliResult<()> {
        check(!self.sizes.is_empty() && self.sizes.iter().all(|&l| l > 0), "generate.sizes must be positive")?;
        check(self.replicas > 0, "generate.replicas must be >= 1")?;
        check_p(self.p)?;
        if self.cable {
            self.cable_params()?;
        }
        Ok(())
    }

    pub fn cable_params(&self) -> CliResult<CableParams> {
        cable_params(self.eps, self.c0, self.a0, self.intensity_scale, self.edge_mode)
    }
}

impl ResistSection {
    pub fn validate(&self) -> CliResult<()> {
        match (&self.network, self.snapshots.is_empty()) {
            (Some(_), false) => Err(CliError::config("resist: give either `network` or `snapshots`, not both")),
            (None, true) => Err(CliError::config("resist: nothing to do (set `network` or `snapshots`)")),
            (Some(_), true) => Ok(()),
            (None, false) => {
                check_scales("resist.scales", &self.scales)?;
                check(self.centers > 0, "resist.centers must be >= 1")?;
                self.cable_params().map(|_| ())
            }
        }
    }

    pub fn cable_params(&self) -> CliResult<CableParams> {
        cable_params(self.eps, self.c0, self.a0, self.intensity_scale, self.edge_mode)
    }
}

impl WalkSection {
    pub fn validate(&self) -> CliResult<()> {
        check(self.network.is_some(), "walk.network is required")?;
        check(self.replicas > 0, "walk.replicas must be >= 1")?;
        check(self.tmax > 0.0 && self.tmax.is_finite(), "walk.tmax must be positive")?;
        check(self.times.iter().all(|&t| t >= 0.0 && t.is_finite()), "walk.times must be finite and >= 0")?;
        check(self.mc_replicas > 0, "walk.mc_replicas must be >= 1")?;
        parse_heat_method(&self.method, self.mc_replicas, 0).map(|_| ())
    }
}

impl ExponentsSection {
    pub fn validate(&self) -> CliResult<()> {
        check(self.kappa > 4.0 && self.kappa < 8.0, format!("exponents.kappa must lie in (4, 8), got {}", self.kappa))?;
        check(!self.sizes.is_empty() && self.sizes.iter().all(|&l| l > 0), "exponents.sizes must be positive")?;
        check(self.replicas > 0, "exponents.replicas must be >= 1")?;
        check_p(self.p)?;
        check_scales("exponents.radii", &self.radii)?;
        check(self.radii.len() >= 3, "exponents.radii needs at least three radii")?;
        check_scales("exponents.scales", &self.scales)?;
        check(self.scales.len() >= 3, "exponents.scales needs at least three scales")?;
        check(self.volume_centers > 0 && self.centers > 0, "center counts must be >= 1")?;
        self.eps_rule()?;
        for &s in &self.scales {
            cable_params(self.eps_rule()?.eps(s), self.c0, self.a0, self.intensity_scale, self.edge_mode)?;
        }
        if self.spectral {
            check(self.spectral_nets > 0 && self.spectral_starts > 0, "spectral net and start counts must be >= 1")?;
            check(self.t_min > 0.0 && self.t_max >= 10.0 * self.t_min, "exponents.t_max must be >= 10 · t_min > 0")?;
            check(self.n_times >= 3, "exponents.n_times must be >= 3")?;
            parse_heat_method(&self.method, 10_000, 0)?;
        }
        check_band("exponents.dimension_band", self.dimension_band)?;
        check_band("exponents.alpha_band", self.alpha_band)?;
        check_band("exponents.ratio_band", self.ratio_band)?;
        check(self.spectral_tolerance >= 0.0, "exponents.spectral_tolerance must be >= 0")
    }

    pub fn eps_rule(&self) -> CliResult<EpsRule> {
        match self.eps_rule.as_str() {
            "fixed" => Ok(EpsRule::Fixed(self.eps)),
            "proportional" => Ok(EpsRule::Proportional(self.eps_factor)),
            s => Err(CliError::config(format!("unknown eps_rule {s:?} (fixed|proportional)"))),
        }
    }

    pub fn cable_params(&self) -> CableParams {
        CableParams {
            eps: self.eps,
            c0: self.c0,
            a0: self.a0,
            intensity_scale: self.intensity_scale,
            edge_mode: self.edge_mode,
            ..CableParams::default()
        }
    }
}

impl VerifySection {
    pub fn validate(&self) -> CliResult<()> {
        check(self.case_scale > 0.0 && self.case_scale.is_finite(), "verify.case_scale must be positive")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Config>("sed = 3").is_err());
        assert!(toml::from_str::<Config>("[walk]\nreplica = 3").is_err());
        assert!(toml::from_str::<Config>("[bogus]").is_err());
    }

    #[test]
    fn sections_default_when_absent() {
        let c: Config = toml::from_str("seed = 9\n[generate]\nsizes = [8]\np = 1.0").unwrap();
        assert_eq!(c.seed(), 9);
        assert_eq!(c.generate.sizes, vec![8]);
        assert_eq!(c.walk, WalkSection::default());
        c.generate.validate().unwrap();
    }

    #[test]
    fn ranges_checked() {
        let mut w = WalkSection { network: Some("x".into()), ..WalkSection::default() };
        w.validate().unwrap();
        w.replicas = 0;
        assert!(w.validate().is_err());
        let g = GenerateSection { p: 1.5, ..GenerateSection::default() };
        assert!(g.validate().is_err());
        let e = ExponentsSection { scales: vec![8, 8, 16], ..ExponentsSection::default() };
        assert!(e.validate().is_err());
        ExponentsSection::default().validate().unwrap();
    }
}
