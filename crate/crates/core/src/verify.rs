//! Randomized invariant suite over all layers.
//!
//! Every check draws its fixtures from the fixture stream of one seed and
//! reports the number of cases, the number of failures and the worst
//! deviation seen. A case whose computation errors counts as a failure.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{
    commute_time_check, hitting_probability_mc, hitting_probability_solve, transition_matrix, HeatKernel, HittingQuery,
    SpeedMeasure,
};
use crate::error::{Error, Result};
use crate::fixtures::FixtureGen;
use crate::gasket::{
    cable_approximation, dead_end_prune, extract_clusters, sample_percolation, verify_cable, CableParams,
};
use crate::network::{
    contraction_bound, dirichlet_energy, effective_resistance, glue_at_cut_point, glue_overlapping, parallel_law_bound,
    resistance_matrix, trace_network, weights_from_resistance, Network, PotentialFunction, Tolerances, VertexId,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// largest deviation over all cases (`inf` when a case errored)
    pub worst_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// first failure, if any
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub invariants: Vec<InvariantResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// multiplies every case count (at least one case per check)
    pub case_scale: f64,
    /// replace the first round-trip fixture by a non-metric matrix
    pub inject_nonmetric: bool,
    pub tol: Tolerances,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, case_scale: 1.0, inject_nonmetric: false, tol: Tolerances::default() }
    }
}

/// Folds per-case deviations, in case order.
fn collect(name: &str, tolerance: f64, outcomes: Vec<Result<f64>>) -> InvariantResult {
    let mut r = InvariantResult {
        name: name.to_string(),
        cases: outcomes.len(),
        failures: 0,
        worst_deviation: 0.0,
        tolerance,
        passed: true,
        detail: None,
    };
    for (k, o) in outcomes.into_iter().enumerate() {
        let msg = match o {
            Ok(d) if d <= tolerance => {
                r.worst_deviation = r.worst_deviation.max(d);
                continue;
            }
            Ok(d) => {
                r.worst_deviation = if d.is_nan() { f64::INFINITY } else { r.worst_deviation.max(d) };
                format!("case {k}: deviation {d:e} exceeds {tolerance:e}")
            }
            Err(e) => {
                r.worst_deviation = f64::INFINITY;
                format!("case {k}: {e}")
            }
        };
        r.failures += 1;
        r.detail.get_or_insert(msg);
    }
    r.passed = r.failures == 0;
    r
}

fn run_cases(cases: usize, f: impl Fn(u32) -> Result<f64> + Sync + Send) -> Vec<Result<f64>> {
    (0..cases as u32).into_par_iter().map(f).collect()
}

fn v(i: u64) -> VertexId {
    VertexId(i)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// K3 resistance, series law on random paths, trace of a unit path onto its ends.
pub fn check_exact_examples(tol: &Tolerances) -> InvariantResult {
    let k3 = || -> Result<f64> {
        let net = Network::from_edges(0..3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])?;
        Ok((effective_resistance(&net, v(0), v(1), tol)? - 2.0 / 3.0).abs())
    };
    let series = |k: u32| -> Result<f64> {
        let mut g = FixtureGen::new(0, k);
        let n = g.size(2, 12);
        let w: Vec<f64> = (0..n - 1).map(|_| g.conductance()).collect();
        let net = Network::from_edges(0..n as u64, (0..n - 1).map(|i| (i as u64, i as u64 + 1, w[i])))?;
        let want: f64 = w.iter().map(|x| 1.0 / x).sum();
        Ok(rel(effective_resistance(&net, v(0), v(n as u64 - 1), tol)?, want))
    };
    let trace = || -> Result<f64> {
        let net = Network::from_edges(0..3, [(0, 1, 1.0), (1, 2, 1.0)])?;
        let t = trace_network(&net, &[v(0), v(2)], tol)?;
        Ok((t.conductance(v(0), v(2)) - 0.5).abs())
    };
    let mut out = vec![k3(), trace()];
    out.extend((0..20).map(series));
    collect("exact_examples", 1e-10, out)
}

/// `w → R → w` on random connected networks with at most 8 vertices.
pub fn check_round_trip(seed: u64, cases: usize, inject_nonmetric: bool, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed, k);
        if inject_nonmetric && k == 0 {
            let rm = g.nonmetric(5, tol)?;
            return match weights_from_resistance(&rm, tol) {
                Err(e) => Err(Error::IdentityViolated(format!("injected non-metric matrix: {e}"))),
                Ok(_) => Err(Error::IdentityViolated("injected non-metric matrix was accepted".into())),
            };
        }
        let n = g.size(2, 8);
        let net = g.connected(n, 0.4);
        let ids = net.ids().to_vec();
        let rm = resistance_matrix(&net, &ids, tol)?;
        let back = weights_from_resistance(&rm, tol)?;
        let mut worst: f64 = 0.0;
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[..i] {
                worst = worst.max((net.conductance(a, b) - back.conductance(a, b)).abs());
            }
        }
        Ok(worst)
    });
    collect("round_trip_w_r_w", 1e-8, out)
}

/// Effective resistance is symmetric and satisfies the triangle inequality.
pub fn check_resistance_metric(seed: u64, cases: usize, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x6d65_7472, k);
        let n = g.size(2, 12);
        let net = g.connected(n, 0.3);
        let rm = resistance_matrix(&net, net.ids(), tol)?;
        Ok(rm.triangle_violation().max(rm.symmetry_defect()))
    });
    collect("resistance_is_metric", 1e-9, out)
}

/// Matrices breaking the triangle inequality are rejected by the inverse problem.
pub fn check_nonmetric_rejected(seed: u64, cases: usize, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x6e6f_6e6d, k);
        let n = g.size(3, 8);
        let rm = g.nonmetric(n, tol)?;
        Ok(if weights_from_resistance(&rm, tol).is_err() { 0.0 } else { 1.0 })
    });
    collect("nonmetric_rejected", 0.0, out)
}

/// Two random networks on `0..n1` and `n1-1..n1-1+n2`, meeting in `n1-1`.
fn two_sided(g: &mut FixtureGen, extra: f64) -> (Network, Network, u64, u64) {
    let n1 = g.size(2, 6) as u64;
    let n2 = g.size(2, 6) as u64;
    let a: Vec<VertexId> = (0..n1).map(v).collect();
    let b: Vec<VertexId> = (n1 - 1..n1 - 1 + n2).map(v).collect();
    (g.connected_on(&a, extra), g.connected_on(&b, extra), n1, n2)
}

/// `R(x,y) = R(x,z) + R(z,y)` when `z` is a cut point.
pub fn check_cut_point(seed: u64, cases: usize, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x6375_7470, k);
        let (a, b, n1, n2) = two_sided(&mut g, 0.4);
        let z = v(n1 - 1);
        let net = glue_at_cut_point(&a, &b, z)?;
        let x = v(g.rng().random_range(0..n1 - 1));
        let y = v(g.rng().random_range(n1..n1 - 1 + n2));
        let lhs = effective_resistance(&net, x, y, tol)?;
        let rhs = effective_resistance(&net, x, z, tol)? + effective_resistance(&net, z, y, tol)?;
        Ok(rel(lhs, rhs))
    });
    collect("cut_point_additivity", 1e-9, out)
}

/// Conductances of a network glued along a shared set follow the case table
/// (add on shared pairs, inherit elsewhere, none across), and energies add.
pub fn check_gluing(seed: u64, cases: usize, tol: &Tolerances) -> InvariantResult {
    let _ = tol;
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x676c_7565, k);
        let n1 = g.size(2, 6) as u64;
        let n2 = g.size(2, 6) as u64;
        let shared = g.size(1, n1.min(n2) as usize) as u64;
        let a: Vec<VertexId> = (0..n1).map(v).collect();
        let b: Vec<VertexId> = (n1 - shared..n1 - shared + n2).map(v).collect();
        let na = g.connected_on(&a, 0.5);
        let nb = g.connected_on(&b, 0.5);
        let shared_ids: Vec<VertexId> = (n1 - shared..n1).map(v).collect();
        let glued = glue_overlapping(&na, &nb, &shared_ids)?;
        let all: Vec<VertexId> = glued.ids().to_vec();
        let mut worst: f64 = 0.0;
        for (i, &p) in all.iter().enumerate() {
            for &q in &all[..i] {
                let want = na.conductance(p, q) + nb.conductance(p, q);
                worst = worst.max((glued.conductance(p, q) - want).abs());
            }
        }
        let f = PotentialFunction::from_pairs(all.iter().map(|u| (u.0, g.rng().random_range(-1.0..1.0))));
        let restrict =
            |net: &Network| PotentialFunction::from_pairs(net.ids().iter().map(|u| (u.0, f.get(*u).unwrap_or(0.0))));
        let e = dirichlet_energy(&glued, &f)?;
        let e1 = dirichlet_energy(&na, &restrict(&na))?;
        let e2 = dirichlet_energy(&nb, &restrict(&nb))?;
        Ok(worst.max(rel(e, e1 + e2)))
    });
    collect("gluing_case_table", 1e-9, out)
}

/// `R ≤ R' + 1/w(x0,y0)` after contracting an edge.
pub fn check_contraction(seed: u64, cases: usize, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x636f_6e74, k);
        let n = g.size(3, 8);
        let net = g.connected(n, 0.3);
        let edges: Vec<(VertexId, VertexId, f64)> = net.edges().collect();
        let (x0, y0, _) = edges[g.rng().random_range(0..edges.len())];
        let c = contraction_bound(&net, x0, y0, tol)?;
        Ok(c.worst_excess.max(0.0))
    });
    collect("contraction_inequality", 1e-9, out)
}

/// `R(x,y)⁻¹ ≤ Σ_i R_{K_x}(x,z_i)⁻¹` for a separating set `{z_i}`.
pub fn check_parallel_law(seed: u64, cases: usize, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x7061_726c, k);
        let m = g.size(1, 3) as u64;
        let na = g.size(1, 4) as u64;
        let nb = g.size(1, 4) as u64;
        // x side: 0..na, separators: 100..100+m, y side: 200..200+nb
        let seps: Vec<VertexId> = (100..100 + m).map(v).collect();
        let a: Vec<VertexId> = (0..na).map(v).chain(seps.iter().copied()).collect();
        let b: Vec<VertexId> = (200..200 + nb).map(v).chain(seps.iter().copied()).collect();
        let net = glue_overlapping(&g.connected_on(&a, 0.4), &g.connected_on(&b, 0.4), &seps)?;
        let bound = parallel_law_bound(&net, v(0), v(200), &seps, tol)?;
        Ok((bound.lhs - bound.rhs).max(0.0))
    });
    collect("parallel_law", 1e-9, out)
}

/// Resistances on the trace network agree with those of the full network.
pub fn check_trace(seed: u64, cases: usize, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x7472_6163, k);
        let n = g.size(3, 10);
        let net = g.connected(n, 0.3);
        let m = g.size(2, n);
        let b = g.subset(&net, m);
        let t = trace_network(&net, &b, tol)?;
        let mut worst: f64 = 0.0;
        for (i, &p) in b.iter().enumerate() {
            for &q in &b[..i] {
                worst = worst.max(rel(effective_resistance(&t, p, q, tol)?, effective_resistance(&net, p, q, tol)?));
            }
        }
        Ok(worst)
    });
    collect("trace_consistency", 1e-9, out)
}

/// Monte Carlo hitting probabilities against the harmonic solve, in units of
/// the binomial standard error.
pub fn check_hitting(seed: u64, cases: usize, samples: usize, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x6869_7474, k);
        let n = g.size(3, 8);
        let net = g.connected(n, 0.3);
        let ids = g.subset(&net, n);
        let split = g.size(2, n - 1);
        let q = HittingQuery::new(ids[0], ids[1..split].to_vec(), ids[split..].to_vec())?;
        let p = hitting_probability_solve(&net, &q, tol)?;
        let mu = SpeedMeasure::counting(&net);
        let (p_mc, _) = hitting_probability_mc(&net, &mu, &q, samples, seed.wrapping_add(k as u64))?;
        let se = (p * (1.0 - p) / samples as f64).sqrt().max(1.0 / samples as f64);
        Ok((p_mc - p).abs() / se)
    });
    collect("hitting_monte_carlo", 4.0, out)
}

/// `P_z[hit x before y] = R(z,y)/R(x,y)` when `z` separates `x` from `y`.
pub fn check_cut_vertex_hitting(seed: u64, cases: usize, tol: &Tolerances) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x6375_7468, k);
        let (a, b, n1, n2) = two_sided(&mut g, 0.4);
        let z = v(n1 - 1);
        let net = glue_at_cut_point(&a, &b, z)?;
        let x = v(g.rng().random_range(0..n1 - 1));
        let y = v(g.rng().random_range(n1..n1 - 1 + n2));
        let p = hitting_probability_solve(&net, &HittingQuery::new(z, vec![x], vec![y])?, tol)?;
        let want = effective_resistance(&net, z, y, tol)? / effective_resistance(&net, x, y, tol)?;
        Ok((p - want).abs())
    });
    collect("cut_vertex_hitting", 1e-9, out)
}

/// Mean commute time against `R(x,y)·μ(V)`, in standard errors.
pub fn check_commute(seed: u64, cases: usize, samples: usize) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x636f_6d6d, k);
        let n = g.size(2, 6);
        let net = g.connected(n, 0.3);
        let weights: Vec<f64> = (0..n).map(|_| g.rng().random_range(0.5..2.0)).collect();
        let mu = SpeedMeasure::from_fn(&net, |u| weights[u.0 as usize])?;
        let pair = g.subset(&net, 2);
        let c = commute_time_check(&net, &mu, pair[0], pair[1], samples, seed.wrapping_add(k as u64))?;
        Ok((c.mean - c.expected).abs() / c.stderr.max(f64::MIN_POSITIVE))
    });
    collect("commute_time", 4.0, out)
}

/// `μ(x) P_t(x,y) = μ(y) P_t(y,x)`, and the spectral kernel matches the
/// matrix exponential.
pub fn check_detailed_balance(seed: u64, cases: usize) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x6865_6174, k);
        let n = g.size(2, 6);
        let net = g.connected(n, 0.4);
        let weights: Vec<f64> = (0..n).map(|_| g.rng().random_range(0.5..2.0)).collect();
        let mu = SpeedMeasure::from_fn(&net, |u| weights[u.0 as usize])?;
        let t = g.rng().random_range(0.05..3.0);
        let p = HeatKernel::new(&net, &mu)?.kernel(t);
        let tm = transition_matrix(&net, &mu, t)?;
        let m = mu.values();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((m[i] * tm[(i, j)] - m[j] * tm[(j, i)]).abs());
                worst = worst.max((p[(i, j)] - p[(j, i)]).abs());
                worst = worst.max((p[(i, j)] * m[j] - tm[(i, j)]).abs());
            }
        }
        Ok(worst)
    });
    collect("heat_detailed_balance", 1e-9, out)
}

/// Cable audit on small critical clusters: edges exactly between vertices
/// closer than `eps`, vertices only on kept sites.
pub fn check_cable(seed: u64, cases: usize) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x6361_626c, k);
        let side = g.size(24, 48);
        let eps = g.rng().random_range(2.0..5.0);
        let cfg = sample_percolation(side, 0.5, seed.wrapping_add(k as u64))?;
        let cluster = extract_clusters(&cfg).into_iter().next().ok_or_else(|| Error::arg("no open site"))?;
        let params = CableParams { eps, intensity_scale: 16.0, ..CableParams::default() };
        let cable = cable_approximation(&cluster, &params, seed)?;
        let audit = verify_cable(&cluster, &cable);
        Ok((audit.missing_edges + audit.short_edges + audit.long_edges + audit.misplaced_vertices) as f64)
    });
    collect("cable_audit", 0.0, out)
}

/// Pruning at a larger scale keeps a subset of what a smaller scale keeps.
pub fn check_prune_monotone(seed: u64, cases: usize) -> InvariantResult {
    let out = run_cases(cases, |k| {
        let mut g = FixtureGen::new(seed ^ 0x7072_756e, k);
        let side = g.size(16, 40);
        let cfg = sample_percolation(side, 0.5, seed.wrapping_add(k as u64))?;
        let cluster = extract_clusters(&cfg).into_iter().next().ok_or_else(|| Error::arg("no open site"))?;
        let s1 = g.rng().random_range(0.0..20.0);
        let s2 = s1 + g.rng().random_range(0.0..20.0);
        let (a, b) = (dead_end_prune(&cluster, s1)?, dead_end_prune(&cluster, s2)?);
        Ok((0..cluster.len()).filter(|&i| b.is_kept[i] && !a.is_kept[i]).count() as f64)
    });
    collect("prune_monotone", 0.0, out)
}

/// Runs every check.
pub fn run_suite(opts: &VerifyOptions) -> VerifyReport {
    let n = |base: usize| ((base as f64 * opts.case_scale).round() as usize).max(1);
    let (s, tol) = (opts.seed, &opts.tol);
    let invariants = vec![
        check_exact_examples(tol),
        check_round_trip(s, n(500), opts.inject_nonmetric, tol),
        check_resistance_metric(s, n(200), tol),
        check_nonmetric_rejected(s, n(100), tol),
        check_cut_point(s, n(200), tol),
        check_gluing(s, n(200), tol),
        check_contraction(s, n(200), tol),
        check_parallel_law(s, n(200), tol),
        check_trace(s, n(100), tol),
        check_hitting(s, n(50), 4000, tol),
        check_cut_vertex_hitting(s, n(100), tol),
        check_commute(s, n(20), 4000),
        check_detailed_balance(s, n(100)),
        check_cable(s, n(10)),
        check_prune_monotone(s, n(20)),
    ];
    VerifyReport { seed: s, passed: invariants.iter().all(|r| r.passed), invariants }
}
