//! Line-oriented text format for networks.
//!
//! ```text
//! NET v1 <n_vertices> <n_edges>
//! <label>            (n_vertices lines)
//! <u> <v> <w>        (n_edges lines, w with 17 significant digits)
//! ```
//!
//! Anything after the edge block is returned to the caller untouched, which is
//! how cable networks append their `# coords` section.

use std::io::{BufRead, Write};

use super::{Network, NetworkBuilder, VertexId};
use crate::error::{Error, Result};

/// Formats a float with 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_network<W: Write>(net: &Network, out: &mut W) -> Result<()> {
    writeln!(out, "NET v1 {} {}", net.len(), net.n_edges())?;
    for v in net.ids() {
        writeln!(out, "{v}")?;
    }
    for (u, v, w) in net.edges() {
        writeln!(out, "{u} {v} {}", fmt_f64(w))?;
    }
    Ok(())
}

pub fn network_to_string(net: &Network) -> String {
    let mut buf = Vec::new();
    write_network(net, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

/// Parses a network and returns it with the remaining (unparsed) lines.
pub fn read_network_with_tail<R: BufRead>(input: R) -> Result<(Network, Vec<String>)> {
    let mut lines = input.lines().enumerate();
    let (lineno, header) = loop {
        match lines.next() {
            Some((i, l)) => {
                let l = l?;
                if !l.trim().is_empty() {
                    break (i + 1, l);
                }
            }
            None => return Err(Error::parse(0, "missing NET header")),
        }
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 4 || parts[0] != "NET" || parts[1] != "v1" {
        return Err(Error::parse(lineno, format!("bad header {header:?}")));
    }
    let n: usize = parts[2].parse().map_err(|_| Error::parse(lineno, "bad vertex count"))?;
    let m: usize = parts[3].parse().map_err(|_| Error::parse(lineno, "bad edge count"))?;
    let mut b = NetworkBuilder::default();
    for _ in 0..n {
        let (i, l) = lines.next().ok_or_else(|| Error::parse(0, "truncated vertex list"))?;
        let l = l?;
        let v: u64 = l.trim().parse().map_err(|_| Error::parse(i + 1, format!("bad vertex label {l:?}")))?;
        let id = VertexId(v);
        if b.contains(id) {
            return Err(Error::parse(i + 1, format!("duplicate vertex {v}")));
        }
        b.add_vertex(id);
    }
    for _ in 0..m {
        let (i, l) = lines.next().ok_or_else(|| Error::parse(0, "truncated edge list"))?;
        let l = l?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::parse(i + 1, format!("expected `u v w`, got {l:?}")));
        }
        let u: u64 = f[0].parse().map_err(|_| Error::parse(i + 1, "bad edge endpoint"))?;
        let v: u64 = f[1].parse().map_err(|_| Error::parse(i + 1, "bad edge endpoint"))?;
        let w: f64 = f[2].parse().map_err(|_| Error::parse(i + 1, "bad conductance"))?;
        if !b.contains(VertexId(u)) || !b.contains(VertexId(v)) {
            return Err(Error::parse(i + 1, "edge endpoint not in vertex list"));
        }
        b.add_conductance(VertexId(u), VertexId(v), w).map_err(|e| Error::parse(i + 1, e.to_string()))?;
    }
    let tail = lines.map(|(_, l)| l).collect::<std::io::Result<Vec<_>>>()?;
    Ok((b.build(), tail))
}

pub fn read_network<R: BufRead>(input: R) -> Result<Network> {
    Ok(read_network_with_tail(input)?.0)
}

pub fn parse_network(text: &str) -> Result<Network> {
    read_network(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_round_trip() {
        let net =
            Network::from_edges([10, 3, 7], [(10, 3, 0.1), (3, 7, 1.0 / 3.0), (10, 7, std::f64::consts::PI * 1e-7)])
                .unwrap();
        let text = network_to_string(&net);
        assert!(text.starts_with("NET v1 3 3\n"));
        let back = parse_network(&text).unwrap();
        assert_eq!(back, net);
        for (u, v, w) in net.edges() {
            assert_eq!(back.conductance(u, v).to_bits(), w.to_bits());
        }
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_network("NET v2 1 0\n1\n").is_err());
        assert!(parse_network("NET v1 2 1\n1\n2\n1 3 1.0\n").is_err());
        assert!(parse_network("NET v1 2 1\n1\n2\n1 2 -1.0\n").is_err());
        assert!(parse_network("NET v1 2 0\n1\n").is_err());
    }

    #[test]
    fn tail_is_preserved() {
        let (net, tail) = read_network_with_tail("NET v1 1 0\n5\n# coords\n5 1 2\n".as_bytes()).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(tail, vec!["# coords".to_string(), "5 1 2".to_string()]);
    }
}
