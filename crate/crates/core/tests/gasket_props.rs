use std::collections::HashSet;

use gasket_core::gasket::{
    cable_approximation, dead_end_prune, extract_clusters, root_block, sample_percolation, Axial, CableParams,
    ClusterGraph, EdgeMode, NEIGHBORS,
};
use proptest::prelude::*;

/// Connected site set grown from the origin by attaching random neighbours.
fn arb_cluster(max_sites: usize) -> impl Strategy<Value = ClusterGraph> {
    proptest::collection::vec((any::<prop::sample::Index>(), 0..6usize), 0..max_sites).prop_map(|steps| {
        let mut sites = vec![Axial::new(0, 0)];
        let mut seen: HashSet<Axial> = sites.iter().copied().collect();
        for (pick, dir) in steps {
            let base = sites[pick.index(sites.len())];
            let (dq, dr) = NEIGHBORS[dir];
            let s = Axial::new(base.q + dq, base.r + dr);
            if seen.insert(s) {
                sites.push(s);
            }
        }
        ClusterGraph::from_sites(&sites).unwrap()
    })
}

/// All-pairs chemical distances by Floyd–Warshall on the site set `keep`.
fn floyd_warshall(g: &ClusterGraph, keep: &[bool]) -> Vec<Vec<u32>> {
    let n = g.len();
    let inf = u32::MAX / 2;
    let mut d = vec![vec![inf; n]; n];
    let sites: HashSet<Axial> = (0..n).filter(|&i| keep[i]).map(|i| g.site(i)).collect();
    for i in 0..n {
        if !keep[i] {
            continue;
        }
        d[i][i] = 0;
        let s = g.site(i);
        for (dq, dr) in NEIGHBORS {
            let t = Axial::new(s.q + dq, s.r + dr);
            if sites.contains(&t) {
                d[i][g.index_of(t).unwrap()] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Removed set under the rule: a component `K` of `cluster − c` that avoids
/// the root block (apart from `c`) is removed when `diam(K ∪ {c}) ≤ s`.
fn prune_oracle(g: &ClusterGraph, s: u32) -> Vec<bool> {
    let n = g.len();
    let root: HashSet<usize> = root_block(g).into_iter().collect();
    let mut removed = vec![false; n];
    let all = vec![true; n];
    let full = floyd_warshall(g, &all);
    for c in 0..n {
        let mut seen = vec![false; n];
        seen[c] = true;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            // component of `start` in cluster − c
            let mut comp = vec![start];
            seen[start] = true;
            let mut k = 0;
            while k < comp.len() {
                let u = comp[k];
                k += 1;
                for v in 0..n {
                    if !seen[v] && full[u][v] == 1 {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            if comp.iter().any(|v| root.contains(v)) {
                continue;
            }
            let mut keep = vec![false; n];
            keep[c] = true;
            for &v in &comp {
                keep[v] = true;
            }
            let d = floyd_warshall(g, &keep);
            let diam = (0..n)
                .filter(|&i| keep[i])
                .flat_map(|i| (0..n).filter(|&j| keep[j]).map(move |j| (i, j)))
                .map(|(i, j)| d[i][j])
                .max()
                .unwrap_or(0);
            if diam <= s {
                for &v in &comp {
                    removed[v] = true;
                }
            }
        }
    }
    removed
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bfs_matches_floyd_warshall(g in arb_cluster(100)) {
        let d = floyd_warshall(&g, &vec![true; g.len()]);
        for i in 0..g.len() {
            let b = g.bfs(i, None);
            for j in 0..g.len() {
                prop_assert_eq!(b[j], d[i][j]);
                prop_assert!(d[i][j] <= d[i][0] + d[0][j]);
            }
        }
    }

    #[test]
    fn prune_matches_brute_force(g in arb_cluster(12), s in 0u32..8) {
        let got = dead_end_prune(&g, s as f64).unwrap();
        let want = prune_oracle(&g, s);
        for (i, &removed) in want.iter().enumerate() {
            prop_assert_eq!(!got.is_kept[i], removed, "site {:?}", g.site(i));
        }
    }

    #[test]
    fn prune_is_monotone(g in arb_cluster(60), s in 0.0f64..15.0, extra in 0.0f64..15.0) {
        let small = dead_end_prune(&g, s).unwrap();
        let large = dead_end_prune(&g, s + extra).unwrap();
        for i in 0..g.len() {
            prop_assert!(small.is_kept[i] || !large.is_kept[i]);
        }
    }

    #[test]
    fn cable_edges_dominate_chemical_distance(g in arb_cluster(60), eps in 2.0f64..6.0, seed in any::<u64>()) {
        let params = CableParams { eps, intensity_scale: 20.0, a0: 4.0, ..CableParams::default() };
        let cable = cable_approximation(&g, &params, seed).unwrap();
        let d = floyd_warshall(&g, &vec![true; g.len()]);
        for (u, v, w) in cable.network.edges() {
            let (i, j) = (u.0 as usize, v.0 as usize);
            prop_assert!(1.0 / w >= d[i][j] as f64 - 1e-12);
        }
        prop_assert_eq!(cable_approximation(&g, &params, seed).unwrap(), cable);
    }
}

#[test]
fn clusters_partition_and_repeat() {
    for seed in 0..5 {
        let cfg = sample_percolation(48, 0.5, seed).unwrap();
        let cl = extract_clusters(&cfg);
        let mut all: Vec<Axial> = cl.iter().flat_map(|c| c.sites().to_vec()).collect();
        let total = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), total);
        assert_eq!(total, cfg.n_open());
        assert_eq!(extract_clusters(&sample_percolation(48, 0.5, seed).unwrap()), cl);
    }
}

#[test]
fn unpruned_length_edges_equal_chemical_distance() {
    // without pruning every cable follows a global geodesic inside the 2eps balls
    let cfg = sample_percolation(40, 0.5, 2).unwrap();
    let g = &extract_clusters(&cfg)[0];
    let params = CableParams {
        eps: 4.0,
        intensity_scale: 30.0,
        a0: 50.0,
        edge_mode: EdgeMode::Length,
        ..CableParams::default()
    };
    let cable = cable_approximation(g, &params, 9).unwrap();
    assert!(cable.removed.is_empty());
    for (u, v, w) in cable.network.edges() {
        let d = g.bfs(u.0 as usize, None)[v.0 as usize];
        assert_eq!(1.0 / w, d as f64);
    }
}

#[test]
fn vertex_intensity_matches_poisson_mean() {
    let cfg = sample_percolation(40, 0.5, 11).unwrap();
    let g = &extract_clusters(&cfg)[0];
    let params = CableParams { eps: 3.0, intensity_scale: 2.0, ..CableParams::default() };
    let kept = dead_end_prune(g, params.prune_scale(g.diameter_lower_bound() as f64)).unwrap().kept.len() as f64;
    let seeds = 200;
    let mean =
        (0..seeds).map(|s| cable_approximation(g, &params, s).unwrap().n_points as f64).sum::<f64>() / seeds as f64;
    let expected = params.intensity() * kept;
    let sigma = (expected / seeds as f64).sqrt();
    assert!((mean - expected).abs() <= 4.0 * sigma, "mean {mean}, expected {expected} ± {sigma}");
}
