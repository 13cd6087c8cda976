use crate::error::{Error, Result};
use crate::ssm::OutlierModelConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
pub enum Scenario {
    #[value(name = "pl-vs-sis")]
    #[serde(rename = "pl-vs-sis")]
    PlVsSis,
    #[value(name = "ns2d-uq")]
    #[serde(rename = "ns2d-uq")]
    Ns2dUq,
    #[value(name = "nig-rbpf-1d")]
    #[serde(rename = "nig-rbpf-1d")]
    NigRbpf1d,
    #[value(name = "viability")]
    #[serde(rename = "viability")]
    Viability,
    #[value(name = "validate")]
    #[serde(rename = "validate")]
    Validate,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::PlVsSis => "pl-vs-sis",
            Scenario::Ns2dUq => "ns2d-uq",
            Scenario::NigRbpf1d => "nig-rbpf-1d",
            Scenario::Viability => "viability",
            Scenario::Validate => "validate",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        <Scenario as clap::ValueEnum>::from_str(s, false).map_err(|_| Error::Config(format!("unknown scenario '{s}'")))
    }
}

/// Full run configuration. Every key has a default; unknown keys are errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Seeds `seed .. seed + n_seeds` are run for the multi-seed scenarios.
    pub n_seeds: usize,
    pub pl: PlConfig,
    pub ns2d: Ns2dConfig,
    pub outlier: OutlierConfig,
    pub viability: ViabilityConfig,
    pub validate: ValidateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_seeds: 20,
            pl: PlConfig::default(),
            ns2d: Ns2dConfig::default(),
            outlier: OutlierConfig::default(),
            viability: ViabilityConfig::default(),
            validate: ValidateConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlConfig {
    pub n_particles: usize,
    pub steps: usize,
    /// True `(mu, beta)` of the residual stream.
    pub theta_true: [f64; 2],
    pub prior_mean: [f64; 2],
    /// Diagonal of the prior covariance.
    pub prior_var: [f64; 2],
    /// Fixed mixing law `IG(delta/gamma, delta^2)`.
    pub gamma: f64,
    pub delta: f64,
}

impl Default for PlConfig {
    fn default() -> Self {
        Self {
            n_particles: 1000,
            steps: 500,
            theta_true: [0.5, -0.3],
            prior_mean: [0.0, 0.0],
            prior_var: [1.0, 1.0],
            gamma: 1.0,
            delta: 1.0,
        }
    }
}

/// Log-normal prior given by its median and coefficient of variation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogNormalPrior {
    pub median: f64,
    pub cv: f64,
}

impl LogNormalPrior {
    /// `(mu, sigma)` of the underlying normal; `sigma^2 = ln(1 + cv^2)`.
    pub fn log_params(&self) -> (f64, f64) {
        (self.median.ln(), (1.0 + self.cv * self.cv).ln().sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Ns2dConfig {
    pub n: usize,
    pub t_final: f64,
    pub dt: f64,
    pub members: usize,
    /// Consecutive members sharing one forcing draw.
    pub members_per_forcing: usize,
    pub nu: LogNormalPrior,
    pub forcing: LogNormalPrior,
    pub forcing_band: [usize; 2],
    /// Initial field: random vorticity peaked at this wavenumber.
    pub k_peak: f64,
    pub enstrophy0: f64,
    /// Energy is recorded every this many steps.
    pub energy_every: usize,
    pub dealias: bool,
}

impl Default for Ns2dConfig {
    fn default() -> Self {
        Self {
            n: 128,
            t_final: 2.0,
            dt: 5e-3,
            members: 64,
            members_per_forcing: 2,
            nu: LogNormalPrior { median: 1e-3, cv: 0.2 },
            forcing: LogNormalPrior { median: 0.1, cv: 0.2 },
            forcing_band: [3, 4],
            k_peak: 4.0,
            enstrophy0: 1.0,
            energy_every: 10,
            dealias: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RbpfVariant {
    /// Prior scale proposal, Kalman belief per particle.
    #[serde(rename = "a-rb")]
    ARb,
    /// Prior scale proposal on raw states.
    #[serde(rename = "a")]
    A,
    /// Conditional scale proposal on raw states.
    #[serde(rename = "b")]
    B,
}

impl RbpfVariant {
    pub fn label(&self) -> &'static str {
        match self {
            RbpfVariant::ARb => "rbpf",
            RbpfVariant::A => "rbpf_a",
            RbpfVariant::B => "rbpf_b",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutlierConfig {
    pub generator: OutlierModelConfig,
    pub steps: usize,
    pub n_particles: usize,
    /// Filter-side mixing law `IG(nig_delta/nig_gamma, nig_delta^2)` on `tau`.
    pub nig_gamma: f64,
    pub nig_delta: f64,
    pub variant: RbpfVariant,
    /// Also run variant B alongside the main variant.
    pub include_b: bool,
    /// Draws per step for CRPS of particle mixtures.
    pub crps_samples: usize,
}

impl Default for OutlierConfig {
    fn default() -> Self {
        Self {
            generator: OutlierModelConfig::default(),
            steps: 200,
            n_particles: 1000,
            nig_gamma: 1.0,
            nig_delta: 1.0,
            variant: RbpfVariant::ARb,
            include_b: false,
            crps_samples: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViabilityConfig {
    pub enkf_members: usize,
    pub fourdvar_window: usize,
}

impl Default for ViabilityConfig {
    fn default() -> Self {
        Self {
            enkf_members: 500,
            fourdvar_window: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidateConfig {
    pub lamb_oseen_n: Vec<usize>,
    pub heat_paths: usize,
    pub nig_draws: usize,
    pub enkf_members: usize,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            lamb_oseen_n: vec![64, 128, 256],
            heat_paths: 2000,
            nig_draws: 1_000_000,
            enkf_members: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
                Self::from_toml(&text)
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_seeds == 0 {
            return bad("n_seeds must be >= 1");
        }
        let p = &self.pl;
        if p.n_particles == 0 || p.steps == 0 || !(p.gamma > 0.0) || !(p.delta > 0.0) {
            return bad("pl: need n_particles, steps >= 1 and gamma, delta > 0");
        }
        if !p.prior_var.iter().all(|v| *v > 0.0) {
            return bad("pl.prior_var must be positive");
        }
        let n = &self.ns2d;
        if n.members < 2 || n.members_per_forcing == 0 || n.n < 8 || !(n.dt > 0.0) || !(n.t_final > 0.0) {
            return bad("ns2d: need members >= 2, members_per_forcing >= 1, n >= 8, dt, t_final > 0");
        }
        for (name, pr) in [("nu", n.nu), ("forcing", n.forcing)] {
            if !(pr.median > 0.0) || !(pr.cv >= 0.0) {
                return Err(Error::Config(format!("ns2d.{name}: need median > 0 and cv >= 0")));
            }
        }
        if n.forcing_band[0] > n.forcing_band[1] || n.energy_every == 0 || !(n.k_peak > 0.0) || !(n.enstrophy0 >= 0.0) {
            return bad("ns2d: invalid forcing band, energy_every, k_peak or enstrophy0");
        }
        let o = &self.outlier;
        let g = &o.generator;
        if o.steps == 0 || o.n_particles == 0 || o.crps_samples < 2 || !(o.nig_gamma > 0.0) || !(o.nig_delta > 0.0) {
            return bad("outlier: need steps, n_particles >= 1, crps_samples >= 2, nig_gamma, nig_delta > 0");
        }
        if !(g.ar.abs() < 1.0) || !(g.q > 0.0) || !(g.r > 0.0) || !(0.0..=1.0).contains(&g.p_out) || !(g.m_out > 0.0) {
            return bad("outlier.generator: need |ar| < 1, q, r, m_out > 0, p_out in [0, 1]");
        }
        if self.viability.enkf_members < 2 || self.viability.fourdvar_window == 0 {
            return bad("viability: need enkf_members >= 2 and fourdvar_window >= 1");
        }
        let v = &self.validate;
        if v.lamb_oseen_n.is_empty() || v.heat_paths == 0 || v.nig_draws < 2 || v.enkf_members < 2 {
            return bad("validate: empty grid list or too few samples");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_through_toml() {
        let d = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&d.to_toml()).unwrap(), d);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), d);
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = ExperimentConfig::from_toml("n_seeds = 3\n[outlier.generator]\np_out = 0.0\n[ns2d]\nn = 32\n").unwrap();
        assert_eq!(c.n_seeds, 3);
        assert_eq!(c.outlier.generator.p_out, 0.0);
        assert_eq!(c.outlier.generator.m_out, 8.0);
        assert_eq!(c.ns2d.n, 32);
        assert_eq!(c.ns2d.members, 64);
        let v = ExperimentConfig::from_toml("[outlier]\nvariant = \"b\"\n").unwrap();
        assert_eq!(v.outlier.variant, RbpfVariant::B);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_config_errors() {
        for text in [
            "bogus = 1",
            "[pl]\nparticles = 5",
            "[outlier]\nvariant = \"c\"",
            "n_seeds = 0",
            "[ns2d]\nmembers = 1",
            "[outlier.generator]\nar = 1.5",
            "[ns2d.nu]\nmedian = 1e-3",
        ] {
            assert!(matches!(ExperimentConfig::from_toml(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn scenario_names() {
        for s in ["pl-vs-sis", "ns2d-uq", "nig-rbpf-1d", "viability", "validate"] {
            assert_eq!(s.parse::<Scenario>().unwrap().name(), s);
        }
        assert!(matches!("fig5".parse::<Scenario>(), Err(Error::Config(_))));
    }

    #[test]
    fn lognormal_parameters() {
        let (m, s) = LogNormalPrior { median: 2.0, cv: 0.2 }.log_params();
        assert!((m - 2.0f64.ln()).abs() < 1e-15);
        // mean^2 (exp(s^2) - 1) / mean^2 = cv^2
        assert!(((s * s).exp_m1() - 0.04).abs() < 1e-14);
        assert_eq!(LogNormalPrior { median: 1.0, cv: 0.0 }.log_params().1, 0.0);
    }
}
