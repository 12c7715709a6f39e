//! On-disk formats for clusters and cable networks.
//!
//! ```text
//! CLUSTER v1 <L> <p> <seed> <n_sites>
//! <q> <r>                          (n_sites lines)
//! ```
//!
//! A cable network is written in the `NET v1` format followed by
//!
//! ```text
//! # cable <eps> <c0> <a0> <d> <intensity_scale> <edge_mode> <n_points> <prune_scale>
//! # coords
//! <label> <q> <r>                  (one line per vertex)
//! # removed
//! <q> <r>                          (one line per pruned site)
//! ```

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::cable::{CableNetwork, CableParams, EdgeMode};
use super::lattice::Axial;
use crate::error::{Error, Result};
use crate::network::io::{fmt_f64, read_network_with_tail, write_network};
use crate::network::VertexId;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSnapshot {
    pub side: usize,
    pub p: f64,
    pub seed: u64,
    pub sites: Vec<Axial>,
}

pub fn write_snapshot<W: Write>(snap: &ClusterSnapshot, out: &mut W) -> Result<()> {
    writeln!(out, "CLUSTER v1 {} {} {} {}", snap.side, fmt_f64(snap.p), snap.seed, snap.sites.len())?;
    for s in &snap.sites {
        writeln!(out, "{} {}", s.q, s.r)?;
    }
    Ok(())
}

fn parse_pair(line: &str, lineno: usize) -> Result<(i64, i64)> {
    let mut it = line.split_whitespace();
    let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
        return Err(Error::parse(lineno, format!("expected two integers, got {line:?}")));
    };
    let a = a.parse().map_err(|_| Error::parse(lineno, format!("bad integer {a:?}")))?;
    let b = b.parse().map_err(|_| Error::parse(lineno, format!("bad integer {b:?}")))?;
    Ok((a, b))
}

fn axial(q: i64, r: i64, lineno: usize) -> Result<Axial> {
    let q = i32::try_from(q).map_err(|_| Error::parse(lineno, "coordinate out of range"))?;
    let r = i32::try_from(r).map_err(|_| Error::parse(lineno, "coordinate out of range"))?;
    Ok(Axial::new(q, r))
}

pub fn read_snapshot<R: BufRead>(input: R) -> Result<ClusterSnapshot> {
    let mut lines = input.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "missing CLUSTER header"))??;
    let f: Vec<&str> = header.split_whitespace().collect();
    if f.len() != 6 || f[0] != "CLUSTER" || f[1] != "v1" {
        return Err(Error::parse(1, format!("bad header {header:?}")));
    }
    let side: usize = f[2].parse().map_err(|_| Error::parse(1, "bad lattice side"))?;
    let p: f64 = f[3].parse().map_err(|_| Error::parse(1, "bad p"))?;
    let seed: u64 = f[4].parse().map_err(|_| Error::parse(1, "bad seed"))?;
    let n: usize = f[5].parse().map_err(|_| Error::parse(1, "bad site count"))?;
    let mut sites = Vec::with_capacity(n);
    for k in 0..n {
        let lineno = k + 2;
        let l = lines.next().ok_or_else(|| Error::parse(lineno, "truncated site list"))??;
        let (q, r) = parse_pair(&l, lineno)?;
        sites.push(axial(q, r, lineno)?);
    }
    for (k, l) in lines.enumerate() {
        if !l?.trim().is_empty() {
            return Err(Error::parse(n + 2 + k, "trailing content after site list"));
        }
    }
    Ok(ClusterSnapshot { side, p, seed, sites })
}

pub fn write_cable<W: Write>(cable: &CableNetwork, out: &mut W) -> Result<()> {
    write_network(&cable.network, out)?;
    let p = &cable.params;
    writeln!(
        out,
        "# cable {} {} {} {} {} {} {} {}",
        fmt_f64(p.eps),
        fmt_f64(p.c0),
        fmt_f64(p.a0),
        fmt_f64(p.d),
        fmt_f64(p.intensity_scale),
        p.edge_mode.as_str(),
        cable.n_points,
        fmt_f64(cable.prune_scale)
    )?;
    writeln!(out, "# coords")?;
    for (v, s) in &cable.coords {
        writeln!(out, "{v} {} {}", s.q, s.r)?;
    }
    writeln!(out, "# removed")?;
    for s in &cable.removed {
        writeln!(out, "{} {}", s.q, s.r)?;
    }
    Ok(())
}

pub fn read_cable<R: BufRead>(input: R) -> Result<CableNetwork> {
    let (network, tail) = read_network_with_tail(input)?;
    let mut it = tail.iter().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |k: usize, msg: &str| Error::parse(k + 1, format!("cable appendix: {msg}"));
    let (k, head) = it.next().ok_or_else(|| bad(0, "missing `# cable` line"))?;
    let f: Vec<&str> = head.split_whitespace().collect();
    if f.len() != 10 || f[0] != "#" || f[1] != "cable" {
        return Err(bad(k, "malformed `# cable` line"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(k, "bad number"));
    let params = CableParams {
        eps: num(f[2])?,
        c0: num(f[3])?,
        a0: num(f[4])?,
        d: num(f[5])?,
        intensity_scale: num(f[6])?,
        edge_mode: EdgeMode::parse(f[7])?,
    };
    let n_points: u64 = f[8].parse().map_err(|_| bad(k, "bad point count"))?;
    let prune_scale = num(f[9])?;
    match it.next() {
        Some((_, l)) if l.trim() == "# coords" => {}
        other => return Err(bad(other.map_or(0, |o| o.0), "expected `# coords`")),
    }
    let mut coords = BTreeMap::new();
    let mut removed = Vec::new();
    let mut in_removed = false;
    for (k, l) in it {
        if l.trim() == "# removed" {
            in_removed = true;
            continue;
        }
        let f: Vec<&str> = l.split_whitespace().collect();
        if in_removed {
            let (q, r) = parse_pair(l, k + 1)?;
            removed.push(axial(q, r, k + 1)?);
            continue;
        }
        if f.len() != 3 {
            return Err(bad(k, "expected `label q r`"));
        }
        let v: u64 = f[0].parse().map_err(|_| bad(k, "bad label"))?;
        let q: i64 = f[1].parse().map_err(|_| bad(k, "bad q"))?;
        let r: i64 = f[2].parse().map_err(|_| bad(k, "bad r"))?;
        if !network.contains(VertexId(v)) {
            return Err(bad(k, "coordinate for unknown vertex"));
        }
        coords.insert(VertexId(v), axial(q, r, k + 1)?);
    }
    if coords.len() != network.len() {
        return Err(Error::parse(0, "cable appendix: every vertex needs coordinates"));
    }
    Ok(CableNetwork { network, coords, params, n_points, prune_scale, removed })
}
