use super::{gaussian_logpdf, normalize_log_weights, systematic_resample, ParticleCloud};
use crate::error::{Error, Result};
use crate::ssm::{ObsNoise, StateSpaceModel};
use crate::stochastics::{nig_scaled_logpdf, RngStream};
use nalgebra::DVector;
use rand::{Rng, RngCore};
use rayon::prelude::*;

/// `ln p(y | x)` under the model's observation noise. Contaminated noise is
/// treated as its nominal Gaussian.
pub(crate) fn obs_loglik(m: &StateSpaceModel, y: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
    let e = y - m.observe(x);
    match m.obs_noise() {
        ObsNoise::Gaussian(r) | ObsNoise::Contaminated { r, .. } => gaussian_logpdf(&e, r),
        ObsNoise::Nig { params, r } => {
            if e.len() != 1 {
                return Err(Error::Domain("NIG marginal likelihood is implemented for scalar observations".into()));
            }
            Ok(nig_scaled_logpdf(e[0], params, r[(0, 0)]))
        }
    }
}

/// Reweight by `log_lik`, normalize, and resample systematically when the ESS
/// falls below `threshold * N`. Consumes one uniform only when resampling.
pub(crate) fn reweight_and_resample<P: Clone>(
    mut cloud: ParticleCloud<P>,
    log_lik: &[f64],
    threshold: f64,
    rng: &mut RngStream,
) -> Result<ParticleCloud<P>> {
    let log_w: Vec<f64> = cloud
        .weights
        .iter()
        .zip(log_lik)
        .map(|(w, l)| w.ln() + l)
        .collect();
    let max_ll = log_lik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    cloud.weights = normalize_log_weights(&log_w, max_ll)?;
    let n = cloud.len();
    cloud.ess_before_resample = cloud.ess();
    cloud.resampled = false;
    if cloud.ess_before_resample < threshold * n as f64 {
        let idx = systematic_resample(&cloud.weights, rng.gen::<f64>());
        cloud.particles = idx.iter().map(|&i| cloud.particles[i].clone()).collect();
        if let Some(s) = &cloud.scales {
            cloud.scales = Some(idx.iter().map(|&i| s[i]).collect());
        }
        cloud.weights = vec![1.0 / n as f64; n];
        cloud.resampled = true;
    }
    Ok(cloud)
}

/// Bootstrap particle filter: propagate through the stochastic dynamics, weight
/// by `p(y | x)`, resample on the ESS trigger.
///
/// Draw order: one key for propagation (particle `i` uses `RngStream::new(key, i)`),
/// then one uniform if resampling.
pub fn bootstrap_pf_step(
    c: &ParticleCloud<DVector<f64>>,
    m: &StateSpaceModel,
    y: Option<&DVector<f64>>,
    threshold: f64,
    rng: &mut RngStream,
) -> Result<ParticleCloud<DVector<f64>>> {
    let key = rng.next_u64();
    let particles: Vec<DVector<f64>> = c
        .particles
        .par_iter()
        .enumerate()
        .map(|(i, x)| m.propagate(x, &mut RngStream::new(key, i as u64)))
        .collect();
    let mut next = ParticleCloud {
        particles,
        ..c.clone()
    };
    let Some(y) = y else {
        next.ess_before_resample = next.ess();
        next.resampled = false;
        return Ok(next);
    };
    let log_lik = next
        .particles
        .par_iter()
        .map(|x| obs_loglik(m, y, x))
        .collect::<Result<Vec<f64>>>()?;
    reweight_and_resample(next, &log_lik, threshold, rng)
}
