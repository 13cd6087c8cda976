//! Scenario runners behind the `flowposterior` CLI. Each runner is a pure
//! function of its configuration and base seed; [`run_scenario`] writes the CSV
//! outputs and a manifest into an output directory.

pub mod config;
pub mod io;
pub mod ns2d;
pub mod outlier;
pub mod pl;
pub mod validate;

pub use config::{ExperimentConfig, LogNormalPrior, Ns2dConfig, OutlierConfig, PlConfig, RbpfVariant, Scenario};
pub use ns2d::{run_ns2d_uq, MemberSummary, Ns2dResult};
pub use outlier::{run_filters, run_nig_rbpf_1d, run_viability_baselines, FilterExperiment, Method, MethodScore};
pub use pl::{run_pl_vs_sis, PlVsSisResult};
pub use validate::run_validation;

use crate::error::Result;
use crate::spectral2d::write_snapshot_csv;
use io::*;
use std::path::Path;

/// Median of a non-empty slice (mean of the middle pair for even lengths).
pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    /// Names of failed validation checks (empty for other scenarios).
    pub failed_checks: Vec<String>,
}

/// Run `scenario` and write its outputs plus `manifest.toml` into `out`.
pub fn run_scenario(scenario: Scenario, cfg: &ExperimentConfig, seed: u64, out: &Path) -> Result<RunReport> {
    std::fs::create_dir_all(out)?;
    let mut outputs: Vec<String> = Vec::new();
    let mut failed_checks = Vec::new();
    let mut put = |name: &str| outputs.push(name.to_string());
    match scenario {
        Scenario::PlVsSis => {
            let r = run_pl_vs_sis(cfg, seed)?;
            write_rows(&out.join("ess.csv"), ESS_HEADER, &r.rows())?;
            put("ess.csv");
        }
        Scenario::Ns2dUq => {
            let r = run_ns2d_uq(&cfg.ns2d, seed)?;
            write_rows(&out.join("energy.csv"), ENERGY_HEADER, &r.energy)?;
            write_snapshot_csv(&out.join("field_mean.csv"), &r.mean_field)?;
            write_snapshot_csv(&out.join("field_std.csv"), &r.std_field)?;
            write_snapshot_csv(&out.join("field_sample.csv"), &r.sample_field)?;
            for f in ["energy.csv", "field_mean.csv", "field_std.csv", "field_sample.csv"] {
                put(f);
            }
        }
        Scenario::NigRbpf1d | Scenario::Viability => {
            let r = if scenario == Scenario::NigRbpf1d {
                run_nig_rbpf_1d(cfg, seed)?
            } else {
                run_viability_baselines(cfg, seed)?
            };
            write_rows(&out.join("filter.csv"), FILTER_HEADER, &r.filter_rows())?;
            write_rows(&out.join("summary.csv"), SUMMARY_HEADER, &r.summary)?;
            write_rows(&out.join("tau.csv"), TAU_HEADER, &r.tau_rows())?;
            for f in ["filter.csv", "summary.csv", "tau.csv"] {
                put(f);
            }
        }
        Scenario::Validate => {
            let rows = run_validation(&cfg.validate, seed)?;
            failed_checks = rows.iter().filter(|r| !r.pass).map(|r| r.check.clone()).collect();
            write_rows(&out.join("validation.csv"), VALIDATION_HEADER, &rows)?;
            put("validation.csv");
        }
    }
    write_manifest(out, scenario, seed, cfg, &outputs)?;
    outputs.push("manifest.toml".into());
    Ok(RunReport { outputs, failed_checks })
}

#[cfg(test)]
mod tests;
