use std::collections::{HashMap, VecDeque};

use super::lattice::{Axial, LatticeConfig, NEIGHBORS};
use crate::error::{Error, Result};

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] { (ra, rb) } else { (rb, ra) };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
    }
}

/// One connected cluster of open sites with its 6-neighbour adjacency.
///
/// Sites are indexed `0..len()` in row-major lattice order.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterGraph {
    sites: Vec<Axial>,
    index: HashMap<Axial, u32>,
    offsets: Vec<u32>,
    nbrs: Vec<u32>,
    /// `(q_min, r_min, q_max, r_max)`
    bbox: (i32, i32, i32, i32),
}

/// Reusable BFS buffers, so repeated local searches on a large cluster cost
/// only the size of the explored region.
#[derive(Clone, Debug, Default)]
pub struct BfsScratch {
    dist: Vec<u32>,
    touched: Vec<u32>,
    queue: VecDeque<u32>,
}

impl ClusterGraph {
    /// Builds a cluster from a site list; the sites must form one connected set.
    pub fn from_sites(sites: &[Axial]) -> Result<ClusterGraph> {
        if sites.is_empty() {
            return Err(Error::arg("a cluster needs at least one site"));
        }
        let mut sorted = sites.to_vec();
        sorted.sort_by_key(|s| (s.r, s.q));
        sorted.dedup();
        let g = Self::build(sorted);
        let d = g.bfs(0, None);
        if d.contains(&u32::MAX) {
            return Err(Error::arg("sites do not form a connected cluster"));
        }
        Ok(g)
    }

    fn build(sites: Vec<Axial>) -> ClusterGraph {
        let index: HashMap<Axial, u32> = sites.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
        let mut offsets = Vec::with_capacity(sites.len() + 1);
        let mut nbrs = Vec::with_capacity(sites.len() * 4);
        offsets.push(0);
        let mut bbox = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
        for s in &sites {
            for (dq, dr) in NEIGHBORS {
                if let Some(&j) = index.get(&Axial::new(s.q + dq, s.r + dr)) {
                    nbrs.push(j);
                }
            }
            offsets.push(nbrs.len() as u32);
            bbox = (bbox.0.min(s.q), bbox.1.min(s.r), bbox.2.max(s.q), bbox.3.max(s.r));
        }
        ClusterGraph { sites, index, offsets, nbrs, bbox }
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Axial] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Axial {
        self.sites[i]
    }

    pub fn index_of(&self, s: Axial) -> Option<usize> {
        self.index.get(&s).map(|&i| i as usize)
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.nbrs[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn n_edges(&self) -> usize {
        self.nbrs.len() / 2
    }

    /// `(q_min, r_min, q_max, r_max)`.
    pub fn bbox(&self) -> (i32, i32, i32, i32) {
        self.bbox
    }

    /// BFS distances from site index `from`, optionally truncated at
    /// `max_depth`; unreached sites get `u32::MAX`.
    pub fn bfs(&self, from: usize, max_depth: Option<u32>) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        dist[from] = 0;
        let mut queue = VecDeque::from([from as u32]);
        let limit = max_depth.unwrap_or(u32::MAX);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            if du >= limit {
                continue;
            }
            for &v in self.neighbors(u as usize) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Local BFS up to `max_depth`, calling `visit(site, dist)` for every
    /// reached site (including `from` at distance 0). Only sites with
    /// `allowed[site]` are entered when a mask is given.
    pub fn bfs_local(
        &self,
        from: usize,
        max_depth: u32,
        allowed: Option<&[bool]>,
        scratch: &mut BfsScratch,
        mut visit: impl FnMut(usize, u32),
    ) {
        if scratch.dist.len() != self.len() {
            scratch.dist = vec![u32::MAX; self.len()];
            scratch.touched.clear();
        }
        for &t in &scratch.touched {
            scratch.dist[t as usize] = u32::MAX;
        }
        scratch.touched.clear();
        scratch.queue.clear();
        scratch.dist[from] = 0;
        scratch.touched.push(from as u32);
        scratch.queue.push_back(from as u32);
        while let Some(u) = scratch.queue.pop_front() {
            let du = scratch.dist[u as usize];
            visit(u as usize, du);
            if du >= max_depth {
                continue;
            }
            for &v in self.neighbors(u as usize) {
                if scratch.dist[v as usize] == u32::MAX && allowed.is_none_or(|m| m[v as usize]) {
                    scratch.dist[v as usize] = du + 1;
                    scratch.touched.push(v);
                    scratch.queue.push_back(v);
                }
            }
        }
    }

    /// Chemical distance between two sites (`None` if either is not in the cluster).
    pub fn chem_dist(&self, a: Axial, b: Axial) -> Option<u32> {
        let (i, j) = (self.index_of(a)?, self.index_of(b)?);
        Some(self.bfs(i, None)[j])
    }

    /// Double-sweep lower bound on the chemical diameter (exact on trees).
    pub fn diameter_lower_bound(&self) -> u32 {
        if self.is_empty() {
            return 0;
        }
        let d0 = self.bfs(0, None);
        let far = (0..self.len()).max_by_key(|&i| (d0[i], std::cmp::Reverse(i))).unwrap_or(0);
        let d1 = self.bfs(far, None);
        d1.into_iter().max().unwrap_or(0)
    }
}

/// Connected components of the open sites, largest first (ties broken by the
/// smallest row-major site index).
pub fn extract_clusters(cfg: &LatticeConfig) -> Vec<ClusterGraph> {
    let n = cfg.side * cfg.side;
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        if !cfg.open[i] {
            continue;
        }
        let s = cfg.site(i);
        // forward neighbours suffice for union-find
        for (dq, dr) in [(1, 0), (0, 1), (-1, 1)] {
            if let Some(j) = cfg.index(Axial::new(s.q + dq, s.r + dr)) {
                if cfg.open[j] {
                    uf.union(i as u32, j as u32);
                }
            }
        }
    }
    let mut groups: HashMap<u32, Vec<Axial>> = HashMap::new();
    let mut order = Vec::new();
    for i in 0..n {
        if cfg.open[i] {
            let root = uf.find(i as u32);
            let g = groups.entry(root).or_insert_with(|| {
                order.push(root);
                Vec::new()
            });
            g.push(cfg.site(i));
        }
    }
    // `order` lists roots by first (smallest) site index
    let mut clusters: Vec<(usize, usize, Vec<Axial>)> = order
        .into_iter()
        .enumerate()
        .map(|(rank, root)| {
            let sites = groups.remove(&root).unwrap_or_default();
            (sites.len(), rank, sites)
        })
        .collect();
    clusters.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    clusters.into_iter().map(|(_, _, sites)| ClusterGraph::build(sites)).collect()
}
