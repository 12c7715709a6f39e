//! End-to-end acceptance run: one line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use gasket_core::gasket::crossing_probability;
use gasket_core::network::{effective_resistance, trace_network};
use gasket_core::verify::{
    check_commute, check_contraction, check_cut_point, check_cut_vertex_hitting, check_detailed_balance, check_gluing,
    check_hitting, check_nonmetric_rejected, check_parallel_law, check_round_trip, check_trace, InvariantResult,
};
use gasket_core::{Network, Tolerances, VertexId};
use serde_json::Value;
use tempfile::TempDir;

const SEED: u64 = 20_240_601;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t0 = Instant::now();
    let mut o = f();
    let dt = t0.elapsed();
    o.detail = format!("{} [{:.1} s, limit {} s]", o.detail, dt.as_secs_f64(), limit.as_secs());
    o.passed &= dt <= limit;
    o
}

fn summarize(results: &[InvariantResult]) -> Outcome {
    let passed = results.iter().all(|r| r.passed);
    let parts: Vec<String> = results
        .iter()
        .map(|r| format!("{} {}/{} worst {:.1e}", r.name, r.cases - r.failures, r.cases, r.worst_deviation))
        .collect();
    outcome(passed, parts.join("; "))
}

fn gasket(cwd: &Path, args: &[&str]) -> bool {
    let o = Command::new(env!("CARGO_BIN_EXE_gasket")).current_dir(cwd).args(args).output().expect("binary runs");
    if !o.status.success() {
        eprintln!("gasket {args:?} failed: {}", String::from_utf8_lossy(&o.stderr));
    }
    o.status.success()
}

fn exact_calculus() -> Outcome {
    let tol = Tolerances::default();
    let k3 = Network::from_edges(0..3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
    let r_k3 = effective_resistance(&k3, VertexId(0), VertexId(1), &tol).unwrap();
    // series: resistances 1, 2, ..., 6 along a path
    let path = Network::from_edges(0..7, (0..6u64).map(|i| (i, i + 1, 1.0 / (i + 1) as f64))).unwrap();
    let r_path = effective_resistance(&path, VertexId(0), VertexId(6), &tol).unwrap();
    let p3 = Network::from_edges(0..3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
    let w = trace_network(&p3, &[VertexId(0), VertexId(2)], &tol).unwrap().conductance(VertexId(0), VertexId(2));
    let errs = [(r_k3 - 2.0 / 3.0).abs(), (r_path - 21.0).abs(), (w - 0.5).abs()];
    outcome(errs.iter().all(|&e| e <= 1e-10), format!("K3 {r_k3:.12}, series {r_path:.12} (21), trace w {w:.12}"))
}

fn crossing() -> Outcome {
    let mut passed = true;
    let mut parts = Vec::new();
    for side in [32, 64] {
        let (p, se) = crossing_probability(side, 0.5, 2000, SEED + side as u64).unwrap();
        let z = (p - 0.5).abs() / se;
        passed &= z <= 4.0;
        parts.push(format!("L={side}: {p:.4} ± {se:.4} ({z:.2}σ)"));
    }
    outcome(passed, parts.join(", "))
}

fn flag(results: &Value, name: &str) -> bool {
    results["flags"][name].as_bool().unwrap_or(false)
}

fn exponent_criteria(dir: &Path, elapsed: Duration) -> [Outcome; 4] {
    let r: Value = match fs::read(dir.join("results.json")) {
        Ok(bytes) => serde_json::from_slice(&bytes).expect("results parse"),
        Err(_) => {
            let fail = || outcome(false, "exponents run produced no results");
            return [fail(), fail(), fail(), fail()];
        }
    };
    let rep = &r["report"];
    let secs = elapsed.as_secs_f64();
    let within = |limit: u64| secs <= limit as f64;
    let d = &rep["dimension"];
    let a = &rep["alpha"];
    let s = &rep["spectral"];
    let f = |v: &Value| v.as_f64().unwrap_or(f64::NAN);
    let c8 = outcome(
        flag(&r, "dimension_in_band") && within(600),
        format!(
            "d̂ = {:.4} ± {:.4} in [1.75, 2.0]; |d̂ − d_cle| = {:.4} [{secs:.0} s, limit 600 s]",
            f(&d["estimate"]),
            f(&d["stderr"]),
            f(&d["distance_to_d_cle"])
        ),
    );
    let c9 = outcome(
        flag(&r, "alpha_meets_slack_band") && within(1200),
        format!(
            "α̂ = {:.4} ± {:.4}, interval [{:.4}, {:.4}] meets [0.4, 1.7]; meets [0.75, 4/3]: {}",
            f(&a["estimate"]),
            f(&a["stderr"]),
            f(&a["interval"][0]),
            f(&a["interval"][1]),
            flag(&r, "alpha_meets_bracket")
        ),
    );
    let ratios: Vec<String> = a["ratios"]
        .as_array()
        .map(|v| v.iter().map(|x| format!("{}: {:.3}", x["scale"], f(&x["ratio"]))).collect())
        .unwrap_or_default();
    let c10 =
        outcome(flag(&r, "ratios_in_band"), format!("m(2δ)/m(δ) = {{{}}} within [1.414, 3.031]", ratios.join(", ")));
    let c11 = outcome(
        flag(&r, "spectral_consistent") && within(900),
        format!(
            "d̂_s = {:.4} (r² {:.4}), 2d̂/(d̂+α̂) = {:.4}, gap {:.4} ≤ 0.15",
            f(&s["d_s"]),
            f(&s["r2"]),
            f(&s["predicted"]),
            f(&s["gap"])
        ),
    );
    [c8, c9, c10, c11]
}

/// Every file below `dir` except the manifest, keyed by relative path.
fn primary_outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != "manifest.json") {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism(work: &Path) -> Outcome {
    fs::write(work.join("k3.net"), "NET v1 3 3\n0\n1\n2\n0 1 1\n1 2 1\n0 2 1\n").unwrap();
    fs::write(
        work.join("small.toml"),
        "seed = 11\n[exponents]\nsizes = [128]\nreplicas = 3\nradii = [4, 8, 16]\nscales = [4, 8, 16]\n\
         min_valid = 5\nspectral_nets = 1\nspectral_starts = 2\nt_max = 100\nn_times = 5\n",
    )
    .unwrap();
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("generate", vec!["--seed", "11", "generate", "--size", "128", "--replicas", "2", "--cable"]),
        ("resist-net", vec!["resist", "--network", "k3.net"]),
        ("resist-annuli", vec!["--seed", "11", "resist", "--snapshots", "gen1/snapshots", "--scales", "4,8,16"]),
        (
            "walk",
            vec!["--seed", "11", "walk", "--network", "k3.net", "--tmax", "50", "--replicas", "3", "--times", "0,1,5"],
        ),
        ("exponents", vec!["--config", "small.toml", "exponents"]),
        ("verify", vec!["--seed", "11", "verify", "--case-scale", "0.1"]),
    ];
    let mut checked = 0;
    for (name, args) in &runs {
        let mut outputs = Vec::new();
        for k in 1..=2 {
            let dir = match *name {
                "generate" => format!("gen{k}"),
                _ => format!("{name}{k}"),
            };
            let full: Vec<&str> = args.iter().copied().chain(["--output-dir", dir.as_str()]).collect();
            if !gasket(work, &full) {
                return outcome(false, format!("{name} failed"));
            }
            outputs.push(primary_outputs(&work.join(&dir)));
        }
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            return outcome(false, format!("{name}: outputs differ between identical runs"));
        }
        checked += outputs[0].len();
    }
    outcome(true, format!("{} commands, {checked} files byte-identical across reruns", runs.len()))
}

fn main() {
    let tol = Tolerances::default();
    let work = TempDir::new().unwrap();
    let mut lines: Vec<(u32, Outcome)> = Vec::new();

    lines.push((1, timed(Duration::from_secs(10), exact_calculus)));
    lines.push((
        2,
        timed(Duration::from_secs(10), || {
            summarize(&[check_round_trip(SEED, 500, false, &tol), check_nonmetric_rejected(SEED, 100, &tol)])
        }),
    ));
    lines.push((
        3,
        timed(Duration::from_secs(30), || {
            summarize(&[
                check_cut_point(SEED, 200, &tol),
                check_gluing(SEED, 200, &tol),
                check_contraction(SEED, 200, &tol),
                check_parallel_law(SEED, 200, &tol),
            ])
        }),
    ));
    lines.push((4, timed(Duration::from_secs(30), || summarize(&[check_trace(SEED, 100, &tol)]))));
    lines.push((
        5,
        timed(Duration::from_secs(120), || {
            summarize(&[
                check_hitting(SEED, 50, 4000, &tol),
                check_cut_vertex_hitting(SEED, 100, &tol),
                check_commute(SEED, 20, 4000),
            ])
        }),
    ));
    lines.push((6, timed(Duration::from_secs(10), || summarize(&[check_detailed_balance(SEED, 100)]))));
    lines.push((7, timed(Duration::from_secs(120), crossing)));

    let t0 = Instant::now();
    gasket(work.path(), &["--seed", &SEED.to_string(), "exponents", "--output-dir", "exponents"]);
    let [c8, c9, c10, c11] = exponent_criteria(&work.path().join("exponents"), t0.elapsed());
    lines.extend([(8, c8), (9, c9), (10, c10), (11, c11)]);

    lines.push((12, determinism(work.path())));

    let mut failed = 0;
    for (k, o) in &lines {
        println!("criterion {k:>2}: {} {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("acceptance: {} of {} criteria pass", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
