use std::path::Path;

use gasket_core::verify::{run_suite, VerifyOptions};

use super::json_bytes;
use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::manifest::{check_manifest, Output};

pub const REPORT_FILE: &str = "verify_report.json";

pub fn run(cfg: &Config) -> CliResult<()> {
    let v = &cfg.verify;
    v.validate()?;
    let opts = VerifyOptions {
        seed: cfg.seed(),
        case_scale: v.case_scale,
        inject_nonmetric: v.inject_nonmetric,
        tol: cfg.tolerances()?,
    };
    let mut out = Output::start("verify", cfg)?;
    let report = run_suite(&opts);
    for inv in &report.invariants {
        let status = if inv.passed { "pass" } else { "FAIL" };
        println!(
            "{status} {:<24} cases {:>5}  failures {:>3}  worst {:.3e} (tol {:.1e})",
            inv.name, inv.cases, inv.failures, inv.worst_deviation, inv.tolerance
        );
        if let Some(d) = &inv.detail {
            println!("     {d}");
        }
    }
    out.write(REPORT_FILE, &json_bytes(&report))?;
    out.finish()?;
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.invariants.iter().filter(|i| !i.passed).map(|i| i.name.as_str()).collect();
        Err(CliError::Verify(failed.join(", ")))
    }
}

/// Tamper check of a previous run's outputs.
pub fn run_manifest(path: &Path) -> CliResult<()> {
    let bad = check_manifest(path)?;
    if bad.is_empty() {
        println!("manifest ok: {}", path.display());
        return Ok(());
    }
    for m in &bad {
        println!("mismatch {}: {}", m.path, m.problem);
    }
    Err(CliError::Verify(format!("{} file(s) do not match {}", bad.len(), path.display())))
}
