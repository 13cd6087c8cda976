//! Particle filters augmented with a latent observation scale `tau`:
//! `y | x, tau ~ N(H x + mu + beta tau, tau R)`, `tau ~ IG(delta/gamma, delta^2)`.

use super::kalman::{kalman_predict, kalman_update};
use super::pf::reweight_and_resample;
use super::{GaussianBelief, ParticleCloud};
use crate::error::{Error, Result};
use crate::ssm::{ObsNoise, StateSpaceModel};
use crate::stochastics::{
    nig_scaled_logpdf, normal_logpdf, posterior_scale, sample_gig, sample_scale_prior, NigParams, RngStream,
};
use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rayon::prelude::*;

fn nig_noise(m: &StateSpaceModel) -> Result<(&NigParams, &DMatrix<f64>)> {
    match m.obs_noise() {
        ObsNoise::Nig { params, r } => Ok((params, r)),
        _ => Err(Error::Domain("scale-augmented filters require NIG observation noise".into())),
    }
}

/// Variant A on raw states: propagate, draw `tau` from its prior, weight by the
/// conditional Gaussian likelihood.
///
/// Draw order: one key; particle `i` uses `RngStream::new(key, i)` for its
/// process noise and then its scale; one uniform if resampling.
pub fn rbpf_nig_step_a(
    c: &ParticleCloud<DVector<f64>>,
    m: &StateSpaceModel,
    y: Option<&DVector<f64>>,
    threshold: f64,
    rng: &mut RngStream,
) -> Result<ParticleCloud<DVector<f64>>> {
    let (p, r) = nig_noise(m)?;
    let key = rng.next_u64();
    let out: Vec<(DVector<f64>, f64, f64)> = c
        .particles
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let mut ri = RngStream::new(key, i as u64);
            let x = m.propagate(x, &mut ri);
            let Some(y) = y else {
                return (x, f64::NAN, 0.0);
            };
            let tau = sample_scale_prior(p, &mut ri);
            let hx = m.observe(&x);
            let ll = (0..y.len())
                .map(|k| normal_logpdf(y[k], hx[k] + p.mu() + p.beta() * tau, tau * r[(k, k)]))
                .sum();
            (x, tau, ll)
        })
        .collect();
    finish(c, out, y.is_some(), threshold, rng)
}

/// Variant A, Rao-Blackwellized: each particle carries the Kalman belief of the
/// state given its own scale path. The weight is the predictive density
/// `N(y; H m + mu + beta tau, H P H^T + tau R)`.
pub fn rbpf_nig_step_a_rb(
    c: &ParticleCloud<GaussianBelief>,
    m: &StateSpaceModel,
    y: Option<&DVector<f64>>,
    threshold: f64,
    rng: &mut RngStream,
) -> Result<ParticleCloud<GaussianBelief>> {
    let (p, r) = nig_noise(m)?;
    let h = m.h_matrix();
    let key = rng.next_u64();
    let out = c
        .particles
        .par_iter()
        .enumerate()
        .map(|(i, b)| -> Result<(GaussianBelief, f64, f64)> {
            let pred = kalman_predict(b, m)?;
            let Some(y) = y else {
                return Ok((pred, f64::NAN, 0.0));
            };
            let tau = sample_scale_prior(p, &mut RngStream::new(key, i as u64));
            let shift = DVector::from_element(y.len(), p.mu() + p.beta() * tau);
            let upd = kalman_update(&pred, &h, &(r * tau), y, &shift)?;
            Ok((upd.belief, tau, upd.log_likelihood))
        })
        .collect::<Result<Vec<_>>>()?;
    finish(c, out, y.is_some(), threshold, rng)
}

/// Variant B on raw states, scalar observations: draw `tau` from its GIG
/// conditional given the particle's innovation and weight by the NIG marginal.
pub fn rbpf_nig_step_b(
    c: &ParticleCloud<DVector<f64>>,
    m: &StateSpaceModel,
    y: Option<&DVector<f64>>,
    threshold: f64,
    rng: &mut RngStream,
) -> Result<ParticleCloud<DVector<f64>>> {
    let (p, r) = nig_noise(m)?;
    if m.dim_obs() != 1 {
        return Err(Error::Domain("variant B is implemented for scalar observations".into()));
    }
    let r = r[(0, 0)];
    let key = rng.next_u64();
    let out = c
        .particles
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<(DVector<f64>, f64, f64)> {
            let mut ri = RngStream::new(key, i as u64);
            let x = m.propagate(x, &mut ri);
            let Some(y) = y else {
                return Ok((x, f64::NAN, 0.0));
            };
            let e = y[0] - m.observe(&x)[0];
            let tau = sample_gig(&posterior_scale(e, p, r)?, &mut ri)?;
            Ok((x, tau, nig_scaled_logpdf(e, p, r)))
        })
        .collect::<Result<Vec<_>>>()?;
    finish(c, out, y.is_some(), threshold, rng)
}

fn finish<P: Clone>(
    c: &ParticleCloud<P>,
    out: Vec<(P, f64, f64)>,
    observed: bool,
    threshold: f64,
    rng: &mut RngStream,
) -> Result<ParticleCloud<P>> {
    let mut particles = Vec::with_capacity(out.len());
    let mut scales = Vec::with_capacity(out.len());
    let mut ll = Vec::with_capacity(out.len());
    for (x, t, l) in out {
        particles.push(x);
        scales.push(t);
        ll.push(l);
    }
    let mut next = ParticleCloud {
        particles,
        weights: c.weights.clone(),
        scales: c.scales.clone(),
        ess_before_resample: c.ess(),
        resampled: false,
    };
    if !observed {
        next.ess_before_resample = next.ess();
        return Ok(next);
    }
    next.scales = Some(scales);
    reweight_and_resample(next, &ll, threshold, rng)
}
