pub mod exponents;
pub mod generate;
pub mod resist;
pub mod verify;
pub mod walk;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use gasket_core::gasket::{extract_clusters, sample_percolation, ClusterGraph};
use gasket_core::rng::replica_seed;

use crate::error::{CliError, CliResult};

/// Seed of lattice replica `r` at side `side`; shared by every command so
/// that `generate` and `exponents` see the same clusters.
pub fn lattice_seed(seed: u64, side: usize, r: u32) -> u64 {
    replica_seed(replica_seed(seed, side as u32), r)
}

/// Largest open cluster of one lattice replica, with the number of open sites
/// and whether the sample crosses left to right.
pub fn largest_cluster(side: usize, p: f64, seed: u64) -> CliResult<(Option<ClusterGraph>, usize, bool)> {
    let cfg = sample_percolation(side, p, seed)?;
    let largest = extract_clusters(&cfg).into_iter().next();
    Ok((largest, cfg.n_open(), cfg.crosses_left_right()))
}

/// Shortest round-tripping decimal form; infinities as `inf`.
pub fn num(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{x:?}")
    }
}

/// CSV bytes with a header row and LF line endings.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

/// Reads a file with a core parser, tagging failures with the path.
pub fn read_with<T>(path: &Path, parse: impl FnOnce(BufReader<File>) -> gasket_core::Result<T>) -> CliResult<T> {
    parse(open(path)?).map_err(|e| CliError::io(path, e))
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("json serializes");
    v.push(b'\n');
    v
}
