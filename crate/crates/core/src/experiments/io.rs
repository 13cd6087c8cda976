//! CSV rows and the run manifest. Field names are the CSV headers.

use super::config::{ExperimentConfig, Scenario};
use crate::error::{Error, Result};
use serde::Serialize;
use std::path::Path;

pub const FILTER_HEADER: &str = "t,truth,estimate,lo90,hi90,method,seed";
pub const ESS_HEADER: &str = "t,ess_pl,ess_sis,mu_mean,beta_mean,mu_sd,beta_sd,seed";
pub const ENERGY_HEADER: &str = "t,e_mean,e_lo90,e_hi90,seed";
pub const SUMMARY_HEADER: &str = "method,rmse,coverage90,crps,seed_count";
pub const TAU_HEADER: &str = "t,tau_mean,seed";
pub const VALIDATION_HEADER: &str = "check,value,threshold,pass";

/// A number that is written as `NA` when absent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Na(pub Option<f64>);

impl Serialize for Na {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) => s.serialize_f64(v),
            None => s.serialize_str("NA"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterRow {
    pub t: usize,
    pub truth: f64,
    pub estimate: f64,
    pub lo90: Na,
    pub hi90: Na,
    pub method: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EssRow {
    pub t: usize,
    pub ess_pl: f64,
    pub ess_sis: f64,
    pub mu_mean: f64,
    pub beta_mean: f64,
    pub mu_sd: f64,
    pub beta_sd: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyRow {
    pub t: f64,
    pub e_mean: f64,
    pub e_lo90: f64,
    pub e_hi90: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub rmse: f64,
    pub coverage90: Na,
    pub crps: f64,
    pub seed_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauRow {
    pub t: usize,
    pub tau_mean: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationRow {
    pub check: String,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

/// Write rows with the header taken from the field names. An empty table still
/// gets its header.
pub fn write_rows<T: Serialize>(path: &Path, header: &str, rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_path(path)?;
    if rows.is_empty() {
        w.write_record(header.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Compare the first line of a CSV file against an expected header.
pub fn check_header(path: &Path, header: &str) -> Result<()> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path)?;
    let mut rec = csv::StringRecord::new();
    if !r.read_record(&mut rec)? {
        return Err(Error::Domain(format!("{} is empty", path.display())));
    }
    let found: Vec<&str> = rec.iter().collect();
    let want: Vec<&str> = header.split(',').collect();
    if found != want {
        return Err(Error::Domain(format!(
            "{}: header {:?}, expected {:?}",
            path.display(),
            found,
            want
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub scenario: &'a str,
    pub seed: u64,
    pub version: &'a str,
    pub outputs: Vec<String>,
    pub config: &'a ExperimentConfig,
}

pub fn write_manifest(dir: &Path, scenario: Scenario, seed: u64, cfg: &ExperimentConfig, outputs: &[String]) -> Result<()> {
    let m = Manifest {
        scenario: scenario.name(),
        seed,
        version: env!("CARGO_PKG_VERSION"),
        outputs: outputs.to_vec(),
        config: cfg,
    };
    let text = toml::to_string(&m).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    std::fs::write(dir.join("manifest.toml"), text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_follow_field_names() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let row = FilterRow {
            t: 1,
            truth: 0.5,
            estimate: 0.25,
            lo90: Na(None),
            hi90: Na(Some(1.0)),
            method: "4dvar".into(),
            seed: 7,
        };
        write_rows(&p, FILTER_HEADER, &[row]).unwrap();
        check_header(&p, FILTER_HEADER).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "1,0.5,0.25,NA,1.0,4dvar,7");

        let cases: Vec<(&str, Box<dyn Fn(&Path)>)> = vec![
            (ESS_HEADER, Box::new(|p| write_rows(p, ESS_HEADER, &[EssRow { t: 1, ess_pl: 1.0, ess_sis: 1.0, mu_mean: 0.0, beta_mean: 0.0, mu_sd: 1.0, beta_sd: 1.0, seed: 0 }]).unwrap())),
            (ENERGY_HEADER, Box::new(|p| write_rows(p, ENERGY_HEADER, &[EnergyRow { t: 0.0, e_mean: 1.0, e_lo90: 0.5, e_hi90: 2.0, seed: 0 }]).unwrap())),
            (SUMMARY_HEADER, Box::new(|p| write_rows(p, SUMMARY_HEADER, &[SummaryRow { method: "kf".into(), rmse: 1.0, coverage90: Na(Some(0.9)), crps: 0.5, seed_count: 20 }]).unwrap())),
            (TAU_HEADER, Box::new(|p| write_rows(p, TAU_HEADER, &[TauRow { t: 1, tau_mean: 1.0, seed: 0 }]).unwrap())),
            (VALIDATION_HEADER, Box::new(|p| write_rows(p, VALIDATION_HEADER, &[ValidationRow { check: "x".into(), value: 0.0, threshold: "< 1".into(), pass: true }]).unwrap())),
        ];
        for (h, write) in cases {
            write(&p);
            check_header(&p, h).unwrap();
        }
    }

    #[test]
    fn empty_tables_keep_header_and_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_rows::<TauRow>(&p, TAU_HEADER, &[]).unwrap();
        check_header(&p, TAU_HEADER).unwrap();
        let err = check_header(&p, ENERGY_HEADER).unwrap_err().to_string();
        assert!(err.contains("tau_mean"), "{err}");
    }

    #[test]
    fn manifest_embeds_resolved_config() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::default();
        write_manifest(dir.path(), Scenario::NigRbpf1d, 11, &cfg, &["summary.csv".into()]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
        let v: toml::Value = toml::from_str(&text).unwrap();
        assert_eq!(v["scenario"].as_str(), Some("nig-rbpf-1d"));
        assert_eq!(v["seed"].as_integer(), Some(11));
        let back: ExperimentConfig = v["config"].clone().try_into().unwrap();
        assert_eq!(back, cfg);
    }
}
