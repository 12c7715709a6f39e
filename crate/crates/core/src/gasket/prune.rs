//! Removal of small dead ends: pieces of a cluster that hang off a single cut
//! vertex and are short in chemical distance.
//!
//! The block-cut tree is rooted at the block nearest the cluster's centroid.
//! Walking down from the root, the component below a cut vertex `c` is dropped
//! as soon as the diameter of `component ∪ {c}` is at most `s`; otherwise the
//! walk descends into it. A dropped component contains everything it would
//! have dropped further down, so the removed set grows monotonically with `s`.

use std::collections::VecDeque;

use super::cluster::ClusterGraph;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct PruneResult {
    /// Site indices (into the cluster) that survive, ascending.
    pub kept: Vec<usize>,
    /// Site indices that were cut away, ascending.
    pub removed: Vec<usize>,
    /// `is_kept[i]` for every cluster site.
    pub is_kept: Vec<bool>,
    pub scale: f64,
}

struct Blocks {
    blocks: Vec<Vec<u32>>,
    /// blocks containing each vertex
    of_vertex: Vec<Vec<u32>>,
}

impl Blocks {
    fn is_cut(&self, v: usize) -> bool {
        self.of_vertex[v].len() > 1
    }
}

/// Biconnected components (Tarjan, iterative). Bridges are two-site blocks.
fn biconnected_blocks(g: &ClusterGraph) -> Blocks {
    let n = g.len();
    let mut disc = vec![u32::MAX; n];
    let mut low = vec![0u32; n];
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let mut vstack: Vec<u32> = Vec::new();
    let mut call: Vec<(u32, u32, usize)> = Vec::new();
    let mut t = 0u32;
    for root in 0..n {
        if disc[root] != u32::MAX {
            continue;
        }
        disc[root] = t;
        low[root] = t;
        t += 1;
        vstack.push(root as u32);
        call.push((root as u32, u32::MAX, 0));
        while let Some(&(v, parent, pos)) = call.last() {
            let nb = g.neighbors(v as usize);
            if pos < nb.len() {
                call.last_mut().unwrap().2 += 1;
                let w = nb[pos];
                if disc[w as usize] == u32::MAX {
                    disc[w as usize] = t;
                    low[w as usize] = t;
                    t += 1;
                    vstack.push(w);
                    call.push((w, v, 0));
                } else if w != parent {
                    low[v as usize] = low[v as usize].min(disc[w as usize]);
                }
            } else {
                call.pop();
                if let Some(&(p, _, _)) = call.last() {
                    low[p as usize] = low[p as usize].min(low[v as usize]);
                    if low[v as usize] >= disc[p as usize] {
                        let mut b = Vec::new();
                        while let Some(x) = vstack.pop() {
                            b.push(x);
                            if x == v {
                                break;
                            }
                        }
                        b.push(p);
                        blocks.push(b);
                    }
                }
            }
        }
        vstack.clear();
    }
    let mut of_vertex = vec![Vec::new(); n];
    for (k, b) in blocks.iter().enumerate() {
        for &v in b {
            of_vertex[v as usize].push(k as u32);
        }
    }
    Blocks { blocks, of_vertex }
}

/// Site nearest the centroid (planar embedding of the axial coordinates).
fn central_site(g: &ClusterGraph) -> usize {
    let planar = |i: usize| {
        let s = g.site(i);
        (s.q as f64 + 0.5 * s.r as f64, s.r as f64 * 3f64.sqrt() / 2.0)
    };
    let n = g.len() as f64;
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..g.len() {
        let (x, y) = planar(i);
        cx += x / n;
        cy += y / n;
    }
    (0..g.len())
        .min_by(|&a, &b| {
            let da = (planar(a).0 - cx).powi(2) + (planar(a).1 - cy).powi(2);
            let db = (planar(b).0 - cx).powi(2) + (planar(b).1 - cy).powi(2);
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .unwrap_or(0)
}

fn choose_root(g: &ClusterGraph, bl: &Blocks) -> Option<usize> {
    if bl.blocks.is_empty() {
        return None;
    }
    let c = central_site(g);
    // a cut vertex at the centre: take its largest block
    bl.of_vertex[c]
        .iter()
        .map(|&k| k as usize)
        .max_by(|&a, &b| bl.blocks[a].len().cmp(&bl.blocks[b].len()).then(b.cmp(&a)))
}

/// Sites of the block the pruning tree is rooted at (the whole cluster when it
/// is a single site).
pub fn root_block(cluster: &ClusterGraph) -> Vec<usize> {
    let bl = biconnected_blocks(cluster);
    match choose_root(cluster, &bl) {
        Some(k) => {
            let mut v: Vec<usize> = bl.blocks[k].iter().map(|&x| x as usize).collect();
            v.sort_unstable();
            v
        }
        None => (0..cluster.len()).collect(),
    }
}

/// Is the chemical diameter of the (connected) vertex set `member ∪ {c}` at most `s`?
///
/// A depth-limited search from `c` settles most cases; the rest go through
/// eccentricity bounding (lower/upper eccentricity bounds refined by BFS from
/// the vertex with the largest upper bound).
fn diameter_at_most(g: &ClusterGraph, c: usize, member: impl Fn(usize) -> bool, s: u32, pos: &mut [u32]) -> bool {
    let mut comp = vec![c as u32];
    pos[c] = 0;
    let mut dist = vec![0u32];
    let mut head = 0;
    while head < comp.len() {
        let u = comp[head] as usize;
        let du = dist[head];
        head += 1;
        for &w in g.neighbors(u) {
            let w = w as usize;
            if pos[w] == u32::MAX && member(w) {
                if du + 1 > s {
                    for &x in &comp {
                        pos[x as usize] = u32::MAX;
                    }
                    return false;
                }
                pos[w] = comp.len() as u32;
                comp.push(w as u32);
                dist.push(du + 1);
            }
        }
    }
    let ecc_c = *dist.last().unwrap_or(&0);
    let verdict = if 2 * ecc_c <= s {
        true
    } else {
        let m = comp.len();
        let mut offs = Vec::with_capacity(m + 1);
        let mut adj = Vec::new();
        offs.push(0);
        for &u in &comp {
            adj.extend(
                g.neighbors(u as usize).iter().filter(|&&w| pos[w as usize] != u32::MAX).map(|&w| pos[w as usize]),
            );
            offs.push(adj.len());
        }
        let bfs = |src: usize, d: &mut Vec<u32>| {
            d.clear();
            d.resize(m, u32::MAX);
            d[src] = 0;
            let mut q = VecDeque::from([src]);
            let mut far = 0;
            while let Some(u) = q.pop_front() {
                far = d[u];
                for &w in &adj[offs[u]..offs[u + 1]] {
                    if d[w as usize] == u32::MAX {
                        d[w as usize] = d[u] + 1;
                        q.push_back(w as usize);
                    }
                }
            }
            far
        };
        let mut lo = vec![0u32; m];
        let mut hi = vec![u32::MAX; m];
        let mut d = Vec::new();
        let mut src = 0usize;
        let mut ecc = ecc_c;
        d.extend_from_slice(&dist);
        let mut pick_high = true;
        loop {
            for v in 0..m {
                lo[v] = lo[v].max(d[v]).max(ecc.saturating_sub(d[v]));
                hi[v] = hi[v].min(ecc + d[v]);
            }
            lo[src] = ecc;
            hi[src] = ecc;
            if lo.iter().any(|&l| l > s) {
                break false;
            }
            let open: Vec<usize> = (0..m).filter(|&v| hi[v] > s && lo[v] != hi[v]).collect();
            if open.is_empty() {
                break true;
            }
            src = if pick_high {
                *open.iter().max_by_key(|&&v| (hi[v], std::cmp::Reverse(v))).unwrap()
            } else {
                *open.iter().min_by_key(|&&v| (lo[v], v)).unwrap()
            };
            pick_high = !pick_high;
            ecc = bfs(src, &mut d);
        }
    };
    for &x in &comp {
        pos[x as usize] = u32::MAX;
    }
    verdict
}

/// Removes every dead end of chemical diameter at most `s` (see module docs).
pub fn dead_end_prune(cluster: &ClusterGraph, s: f64) -> Result<PruneResult> {
    if !(s >= 0.0) {
        return Err(Error::Precondition(format!("prune scale must be >= 0, got {s}")));
    }
    let n = cluster.len();
    let mut is_kept = vec![true; n];
    let bl = biconnected_blocks(cluster);
    if let Some(root) = choose_root(cluster, &bl) {
        let s_int = s.floor().min(u32::MAX as f64 / 4.0) as u32;
        let nb = bl.blocks.len();
        // preorder of the block tree; a cut vertex belongs to the block it was reached from
        let mut parent_cut = vec![u32::MAX; nb];
        let mut tin = vec![0u32; nb];
        let mut tout = vec![0u32; nb];
        let mut owner = vec![u32::MAX; n];
        let mut by_tin = Vec::with_capacity(nb);
        let mut stack: Vec<(usize, bool)> = vec![(root, false)];
        let mut children: Vec<Vec<(u32, u32)>> = vec![Vec::new(); nb];
        while let Some((b, done)) = stack.pop() {
            if done {
                tout[b] = by_tin.len() as u32;
                continue;
            }
            tin[b] = by_tin.len() as u32;
            by_tin.push(b);
            stack.push((b, true));
            for &v in &bl.blocks[b] {
                if v == parent_cut[b] {
                    continue;
                }
                owner[v as usize] = b as u32;
                if !bl.is_cut(v as usize) {
                    continue;
                }
                for &child in bl.of_vertex[v as usize].iter().rev() {
                    if child as usize != b {
                        parent_cut[child as usize] = v;
                        children[b].push((v, child));
                        stack.push((child as usize, false));
                    }
                }
            }
        }
        let mut pos = vec![u32::MAX; n];
        let mut queue = VecDeque::from([root]);
        while let Some(b) = queue.pop_front() {
            for &(c, child) in &children[b] {
                let child = child as usize;
                let (lo, hi) = (tin[child], tout[child]);
                let member = |x: usize| {
                    let t = tin[owner[x] as usize];
                    t >= lo && t < hi
                };
                if diameter_at_most(cluster, c as usize, member, s_int, &mut pos) {
                    for &blk in &by_tin[lo as usize..hi as usize] {
                        for &v in &bl.blocks[blk] {
                            is_kept[v as usize] = false;
                        }
                    }
                    is_kept[c as usize] = true;
                } else {
                    queue.push_back(child);
                }
            }
        }
    }
    let kept = (0..n).filter(|&i| is_kept[i]).collect();
    let removed = (0..n).filter(|&i| !is_kept[i]).collect();
    Ok(PruneResult { kept, removed, is_kept, scale: s })
}
