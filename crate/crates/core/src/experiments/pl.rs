//! Particle learning against a fixed-parameter SIS baseline on one NIG
//! residual stream per seed.

use super::config::ExperimentConfig;
use super::io::EssRow;
use crate::error::Result;
use crate::particle_learning::{
    pl_init, pl_step, pl_theta_interval, pl_theta_summary, simulate_residuals, sis_baseline_step, sis_init,
    TailParams, ThetaPrior,
};
use crate::stochastics::RngStream;
use nalgebra::{Matrix2, Vector2};

#[derive(Clone, Debug)]
pub struct PlSeedResult {
    pub seed: u64,
    pub rows: Vec<EssRow>,
    /// Final 90% bands of `mu` and `beta`.
    pub final_bands: [(f64, f64); 2],
    /// Whether each final band contains the true value.
    pub covered: [bool; 2],
}

#[derive(Clone, Debug)]
pub struct PlVsSisResult {
    pub n_particles: usize,
    pub seeds: Vec<PlSeedResult>,
}

impl PlVsSisResult {
    pub fn rows(&self) -> Vec<EssRow> {
        self.seeds.iter().flat_map(|s| s.rows.iter().cloned()).collect()
    }

    /// Median over seeds of `(ess_pl, ess_sis)` at each step.
    pub fn median_ess(&self) -> Vec<(f64, f64)> {
        let t = self.seeds[0].rows.len();
        (0..t)
            .map(|k| {
                let pl: Vec<f64> = self.seeds.iter().map(|s| s.rows[k].ess_pl).collect();
                let sis: Vec<f64> = self.seeds.iter().map(|s| s.rows[k].ess_sis).collect();
                (super::median(&pl), super::median(&sis))
            })
            .collect()
    }

    /// Fraction of seeds whose final band for component `k` (0 = `mu`,
    /// 1 = `beta`) covers the true value.
    pub fn coverage_fraction(&self, k: usize) -> f64 {
        let hit = self.seeds.iter().filter(|s| s.covered[k]).count();
        hit as f64 / self.seeds.len() as f64
    }
}

/// Seed `s` draws its residuals from `RngStream::new(s, 0)`, the PL cloud from
/// stream 1 and the SIS cloud from stream 2.
pub fn run_pl_vs_sis(cfg: &ExperimentConfig, seed0: u64) -> Result<PlVsSisResult> {
    let p = &cfg.pl;
    let truth = Vector2::new(p.theta_true[0], p.theta_true[1]);
    let tail = TailParams {
        gamma: p.gamma,
        delta: p.delta,
    };
    let prior = ThetaPrior::new(
        Vector2::new(p.prior_mean[0], p.prior_mean[1]),
        Matrix2::new(p.prior_var[0], 0.0, 0.0, p.prior_var[1]),
    )?;
    let mut seeds = Vec::with_capacity(cfg.n_seeds);
    for s in 0..cfg.n_seeds as u64 {
        let seed = seed0 + s;
        let data = simulate_residuals(&truth, &tail, p.steps, &mut RngStream::new(seed, 0))?;
        let mut rng_pl = RngStream::new(seed, 1);
        let mut pl = pl_init(p.n_particles, &prior, &tail, &mut rng_pl)?;
        let mut sis = sis_init(p.n_particles, &prior, &mut RngStream::new(seed, 2))?;
        let mut rows = Vec::with_capacity(p.steps);
        for (k, &r) in data.iter().enumerate() {
            pl = pl_step(&pl, r, &prior, &tail, &mut rng_pl)?;
            sis = sis_baseline_step(&sis, r, &tail)?;
            let post = pl_theta_summary(&pl, &prior)?;
            rows.push(EssRow {
                t: k + 1,
                ess_pl: pl.ess_before_resample,
                ess_sis: sis.ess_before_resample,
                mu_mean: post.mean[0],
                beta_mean: post.mean[1],
                mu_sd: post.cov[(0, 0)].max(0.0).sqrt(),
                beta_sd: post.cov[(1, 1)].max(0.0).sqrt(),
                seed,
            });
        }
        let bands = [
            pl_theta_interval(&pl, &prior, 0, 0.9)?,
            pl_theta_interval(&pl, &prior, 1, 0.9)?,
        ];
        let covered = [0, 1].map(|i| bands[i].0 <= truth[i] && truth[i] <= bands[i].1);
        log::info!("seed {seed}: final bands {bands:?}");
        seeds.push(PlSeedResult {
            seed,
            rows,
            final_bands: bands,
            covered,
        });
    }
    Ok(PlVsSisResult {
        n_particles: p.n_particles,
        seeds,
    })
}
