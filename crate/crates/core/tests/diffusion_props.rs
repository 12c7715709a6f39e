use std::collections::HashMap;

use gasket_core::diffusion::{
    hitting_probability_mc, hitting_probability_solve, simulate_walk_replica, trace_walk, HeatKernel, HittingQuery,
    SpeedMeasure,
};
use gasket_core::fixtures::FixtureGen;
use gasket_core::network::{effective_resistance, glue_at_cut_point, trace_network};
use gasket_core::{Network, Tolerances, VertexId};
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn arb_fixture(lo: usize, hi: usize) -> impl Strategy<Value = (Network, Vec<f64>)> {
    (any::<u64>(), lo..=hi).prop_flat_map(|(seed, n)| {
        let net = FixtureGen::new(seed, 0).connected(n, 0.4);
        (Just(net), proptest::collection::vec(0.2f64..5.0, n))
    })
}

fn measure(net: &Network, m: &[f64]) -> SpeedMeasure {
    SpeedMeasure::from_fn(net, |v| m[net.index_of(v).unwrap()]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heat_kernel_is_reversible((net, m) in arb_fixture(2, 6)) {
        let hk = HeatKernel::new(&net, &measure(&net, &m)).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let p = hk.kernel(t);
            for x in 0..net.len() {
                for y in 0..net.len() {
                    // transition probabilities P_t(x,y) = p(t,x,y) μ(y)
                    let fwd = m[x] * p[(x, y)] * m[y];
                    let bwd = m[y] * p[(y, x)] * m[x];
                    prop_assert!((fwd - bwd).abs() <= 1e-9);
                }
                let row: f64 = (0..net.len()).map(|y| p[(x, y)] * m[y]).sum();
                prop_assert!((row - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn return_probability_decreases_convexly((net, m) in arb_fixture(2, 8)) {
        let hk = HeatKernel::new(&net, &measure(&net, &m)).unwrap();
        let ts: Vec<f64> = (0..60).map(|k| 0.05 * k as f64).collect();
        for &x in net.ids() {
            let p: Vec<f64> = ts.iter().map(|&t| hk.p(t, x, x).unwrap()).collect();
            for w in p.windows(3) {
                prop_assert!(w[1] <= w[0] + 1e-12);
                prop_assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-12);
            }
        }
    }

    #[test]
    fn cut_vertex_hitting_identity(s1 in any::<u64>(), s2 in any::<u64>(), n1 in 2u64..6, n2 in 2u64..6) {
        // left part on 0..n1, right part on n1-1..n1-1+n2, glued at z = n1-1
        let left: Vec<VertexId> = (0..n1).map(VertexId).collect();
        let right: Vec<VertexId> = (n1 - 1..n1 - 1 + n2).map(VertexId).collect();
        let a = FixtureGen::new(s1, 0).connected_on(&left, 0.5);
        let b = FixtureGen::new(s2, 0).connected_on(&right, 0.5);
        let z = VertexId(n1 - 1);
        let net = glue_at_cut_point(&a, &b, z).unwrap();
        let (x, y) = (VertexId(0), VertexId(n1 + n2 - 2));
        let p = hitting_probability_solve(&net, &HittingQuery::new(z, vec![x], vec![y]).unwrap(), &tol()).unwrap();
        let want = effective_resistance(&net, z, y, &tol()).unwrap() / effective_resistance(&net, x, y, &tol()).unwrap();
        prop_assert!((p - want).abs() <= 1e-9);
    }
}

#[test]
fn hitting_monte_carlo_matches_solve() {
    for k in 0..10 {
        let mut g = FixtureGen::new(77, k);
        let n = g.size(3, 7);
        let net = g.connected(n, 0.3);
        let ids = g.subset(&net, n);
        let q = HittingQuery::new(ids[0], vec![ids[1]], ids[2..].to_vec()).unwrap();
        let p = hitting_probability_solve(&net, &q, &tol()).unwrap();
        let samples = 5000;
        let (p_mc, _) = hitting_probability_mc(&net, &SpeedMeasure::counting(&net), &q, samples, k as u64).unwrap();
        let se = (p * (1.0 - p) / samples as f64).sqrt().max(1.0 / samples as f64);
        assert!((p_mc - p).abs() <= 4.0 * se, "case {k}: {p_mc} vs {p}");
    }
}

/// Traced walks jump like the walk on the trace network and hold for the
/// same mean time.
#[test]
fn traced_walk_matches_trace_network() {
    for k in 0..4 {
        let mut g = FixtureGen::new(5, k);
        let n = g.size(4, 7);
        let net = g.connected(n, 0.4);
        let b = g.subset(&net, 3);
        let mu = SpeedMeasure::counting(&net);
        let tr = trace_network(&net, &b, &tol()).unwrap();

        let mut jumps: HashMap<(VertexId, VertexId), u64> = HashMap::new();
        let mut hold: HashMap<VertexId, (f64, u64)> = HashMap::new();
        for r in 0..200 {
            let walk = simulate_walk_replica(&net, &mu, b[0], 400.0, 9, r).unwrap();
            let t = trace_walk(&walk, &b).unwrap();
            for i in 0..t.n_jumps() {
                *jumps.entry((t.states[i], t.states[i + 1])).or_default() += 1;
                let e = hold.entry(t.states[i]).or_default();
                e.0 += t.times[i + 1] - t.times[i];
                e.1 += 1;
            }
        }
        for &x in &b {
            let total_w = tr.total_conductance(tr.index_of(x).unwrap());
            let out: u64 = b.iter().map(|&y| jumps.get(&(x, y)).copied().unwrap_or(0)).sum();
            assert!(out > 500, "too few jumps from {x}");
            // chi-square of the jump law against w_B(x,·)/w_B(x)
            let mut chi2 = 0.0;
            let mut cells = 0;
            for &y in b.iter().filter(|&&y| y != x) {
                let expect = out as f64 * tr.conductance(x, y) / total_w;
                if expect > 0.0 {
                    let o = jumps.get(&(x, y)).copied().unwrap_or(0) as f64;
                    chi2 += (o - expect).powi(2) / expect;
                    cells += 1;
                }
            }
            let df = (cells - 1).max(1) as f64;
            assert!((chi2 - df) / (2.0 * df).sqrt() <= 4.0, "case {k} vertex {x}: chi2 {chi2} on {df} dof");
            // exponential holding times with mean μ(x)/w_B(x)
            let (sum, cnt) = hold[&x];
            let mean = 1.0 / total_w;
            let se = mean / (cnt as f64).sqrt();
            assert!(
                (sum / cnt as f64 - mean).abs() <= 4.0 * se,
                "case {k} vertex {x}: hold {} vs {mean}",
                sum / cnt as f64
            );
        }
    }
}
