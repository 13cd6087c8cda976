//! Normal inverse Gaussian (NIG) and generalized inverse Gaussian (GIG) machinery.
//!
//! Conventions used throughout the crate:
//! - `NIG(alpha, beta, mu, delta)` is the law of `mu + beta*tau + sqrt(tau)*Z` with
//!   `tau ~ IG(delta/gamma, delta^2)` (mean/shape form) and `gamma = sqrt(alpha^2 - beta^2)`.
//! - `GIG(lambda, chi, psi)` has density proportional to
//!   `tau^(lambda-1) * exp(-(chi/tau + psi*tau)/2)` on `tau > 0`.
//!
//! For an observation `x | tau ~ N(mu + beta*tau, tau*r)` the latent scale posterior is
//! `GIG(-1, delta^2 + (x-mu)^2/r, gamma^2 + beta^2/r)`; see [`posterior_scale`].

pub mod bessel;
mod rng;

pub use bessel::{bessel_k1, ln_bessel_k1};
pub use rng::RngStream;

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::PI;

/// Validated NIG parameters; `gamma` is always derived from `(alpha, beta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NigParams {
    alpha: f64,
    beta: f64,
    mu: f64,
    delta: f64,
    gamma: f64,
}

impl NigParams {
    pub fn new(alpha: f64, beta: f64, mu: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("NIG delta must be > 0, got {delta}")));
        }
        if !(alpha > beta.abs()) || !alpha.is_finite() || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "NIG requires alpha > |beta|, got alpha = {alpha}, beta = {beta}"
            )));
        }
        let gamma = ((alpha - beta) * (alpha + beta)).sqrt();
        Ok(Self {
            alpha,
            beta,
            mu,
            delta,
            gamma,
        })
    }

    /// Parameters whose mixing law is `IG(delta/gamma, delta^2)` for the given
    /// `(gamma, delta)`, i.e. `alpha = sqrt(gamma^2 + beta^2)`.
    pub fn from_mixing(gamma: f64, beta: f64, mu: f64, delta: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Domain(format!("NIG gamma must be > 0, got {gamma}")));
        }
        Self::new((gamma * gamma + beta * beta).sqrt(), beta, mu, delta)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Mean of the inverse-Gaussian mixing law.
    pub fn scale_mean(&self) -> f64 {
        self.delta / self.gamma
    }

    /// Shape of the inverse-Gaussian mixing law.
    pub fn scale_shape(&self) -> f64 {
        self.delta * self.delta
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GigParams {
    pub lam: f64,
    pub chi: f64,
    pub psi: f64,
}

impl GigParams {
    pub fn new(lam: f64, chi: f64, psi: f64) -> Result<Self> {
        if !(chi > 0.0) || !(psi > 0.0) || !chi.is_finite() || !psi.is_finite() {
            return Err(Error::Domain(format!(
                "GIG requires chi > 0 and psi > 0, got chi = {chi}, psi = {psi}"
            )));
        }
        Ok(Self { lam, chi, psi })
    }

    /// Unnormalized log density at `tau`.
    pub fn ln_kernel(&self, tau: f64) -> f64 {
        (self.lam - 1.0) * tau.ln() - 0.5 * (self.chi / tau + self.psi * tau)
    }
}

/// Inverse Gaussian draw by transformation with one rejection step
/// (Michael, Schucany & Haas): one normal and one uniform per draw.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> Result<f64> {
    if !(mean > 0.0) || !(shape > 0.0) || !mean.is_finite() || !shape.is_finite() {
        return Err(Error::Domain(format!(
            "inverse Gaussian requires mean > 0 and shape > 0, got mean = {mean}, shape = {shape}"
        )));
    }
    Ok(inverse_gaussian_unchecked(mean, shape, rng))
}

fn inverse_gaussian_unchecked<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> f64 {
    let v: f64 = rng.sample(StandardNormal);
    let y = mean * v * v;
    // smaller root of the quadratic, written without cancellation:
    // mean + mean/(2 shape) (y - sqrt(4 shape y + y^2)) = mean * 4 shape y / (y + s)^2
    let s = (y * y + 4.0 * shape * y).sqrt();
    let x = if y > 0.0 {
        mean * 4.0 * shape * y / ((y + s) * (y + s))
    } else {
        mean
    };
    let u: f64 = rng.gen();
    if u * (mean + x) <= mean {
        x
    } else {
        mean * mean / x
    }
}

/// Draw from `GIG(-1/2, chi, psi)`, which is exactly `IG(sqrt(chi/psi), chi)`.
pub fn sample_gig_half<R: Rng + ?Sized>(g: &GigParams, rng: &mut R) -> Result<f64> {
    if g.lam != -0.5 {
        return Err(Error::UnsupportedIndex(g.lam));
    }
    let g = GigParams::new(g.lam, g.chi, g.psi)?;
    sample_inverse_gaussian((g.chi / g.psi).sqrt(), g.chi, rng)
}

/// Draw from `GIG(lambda, chi, psi)` for `lambda = -1/2` or `|lambda| >= 1`.
///
/// The `|lambda| >= 1` branch is the ratio-of-uniforms method with mode shift
/// (Dagpunar 1989, Lehner 1989) on the standardized density
/// `y^(lambda-1) exp(-omega (y + 1/y)/2)`, `omega = sqrt(chi psi)`, whose
/// rejection constant is bounded for `lambda >= 1`. Negative indices use
/// `1/GIG(lambda, chi, psi) = GIG(-lambda, psi, chi)`.
pub fn sample_gig<R: Rng + ?Sized>(g: &GigParams, rng: &mut R) -> Result<f64> {
    if g.lam == -0.5 {
        return sample_gig_half(g, rng);
    }
    if !(g.lam.abs() >= 1.0) {
        return Err(Error::UnsupportedIndex(g.lam));
    }
    let g = GigParams::new(g.lam, g.chi, g.psi)?;
    let lam = g.lam.abs();
    let omega = (g.chi * g.psi).sqrt();
    let scale = (g.chi / g.psi).sqrt();
    let y = if lam > 1.0 || omega > 1.0 {
        rou_shift_standard(lam, omega, rng)
    } else {
        rou_noshift_standard(lam, omega, rng)
    };
    Ok(if g.lam < 0.0 { scale / y } else { scale * y })
}

/// Ratio-of-uniforms without mode shift; bounded rejection constant for
/// `lam <= 1`, `omega <= 1`, where the shifted box degenerates.
fn rou_noshift_standard<R: Rng + ?Sized>(lam: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lam - 1.0);
    let s = 0.25 * omega;
    let xm = ((lam - 1.0) + ((lam - 1.0) * (lam - 1.0) + omega * omega).sqrt()) / omega;
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);
    let ym = ((lam + 1.0) + ((lam + 1.0) * (lam + 1.0) + omega * omega).sqrt()) / omega;
    let um = (0.5 * (lam + 1.0) * ym.ln() - s * (ym + 1.0 / ym) - nc).exp();
    loop {
        let u = um * rng.gen::<f64>();
        let v: f64 = rng.gen();
        let x = u / v;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

fn rou_shift_standard<R: Rng + ?Sized>(lam: f64, omega: f64, rng: &mut R) -> f64 {
    let t = 0.5 * (lam - 1.0);
    let s = 0.25 * omega;
    let xm = ((lam - 1.0) + ((lam - 1.0) * (lam - 1.0) + omega * omega).sqrt()) / omega;
    let nc = t * xm.ln() - s * (xm + 1.0 / xm);

    // extrema of (x - xm) sqrt(f(x)) solve x^3 + a x^2 + b x + c = 0
    let a = -(2.0 * (lam + 1.0) / omega + xm);
    let b = 2.0 * (lam - 1.0) * xm / omega - 1.0;
    let c = xm;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let phi = (-q / (2.0 * (-(p * p * p) / 27.0).sqrt())).clamp(-1.0, 1.0).acos();
    let fak = 2.0 * (-p / 3.0).sqrt();
    let y1 = fak * (phi / 3.0).cos() - a / 3.0;
    let y2 = fak * (phi / 3.0 + 4.0 / 3.0 * PI).cos() - a / 3.0;
    let uplus = (y1 - xm) * (t * y1.ln() - s * (y1 + 1.0 / y1) - nc).exp();
    let uminus = (y2 - xm) * (t * y2.ln() - s * (y2 + 1.0 / y2) - nc).exp();

    loop {
        let u = uminus + rng.gen::<f64>() * (uplus - uminus);
        let v: f64 = rng.gen();
        let x = u / v + xm;
        if x > 0.0 && v.ln() <= t * x.ln() - s * (x + 1.0 / x) - nc {
            return x;
        }
    }
}

/// Log density of `NIG(alpha, beta, mu, delta)`, finite for every finite `x`.
pub fn nig_logpdf(x: f64, p: &NigParams) -> f64 {
    let dx = x - p.mu;
    let q = p.delta.hypot(dx);
    (p.alpha * p.delta / PI).ln() + p.delta * p.gamma + p.beta * dx + ln_bessel_k1(p.alpha * q)
        - q.ln()
}

/// Log density of `x` when `x | tau ~ N(mu + beta tau, tau r)` and `tau ~ IG(delta/gamma, delta^2)`.
///
/// Rescaling by `sqrt(r)` maps this onto an ordinary NIG with
/// `beta' = beta/sqrt(r)`, `mu' = mu/sqrt(r)`, the same mixing law, hence
/// `alpha' = sqrt(gamma^2 + beta^2/r)`.
pub fn nig_scaled_logpdf(x: f64, p: &NigParams, r: f64) -> f64 {
    debug_assert!(r > 0.0);
    let sr = r.sqrt();
    let beta = p.beta / sr;
    let alpha = (p.gamma * p.gamma + beta * beta).sqrt();
    let scaled = NigParams {
        alpha,
        beta,
        mu: p.mu / sr,
        delta: p.delta,
        gamma: p.gamma,
    };
    nig_logpdf(x / sr, &scaled) - sr.ln()
}

/// `(E[X], Var[X])` in closed form.
pub fn nig_mean_var(p: &NigParams) -> (f64, f64) {
    let mean = p.mu + p.delta * p.beta / p.gamma;
    let var = p.delta * p.alpha * p.alpha / p.gamma.powi(3);
    (mean, var)
}

/// Mixture draw: `tau ~ IG(delta/gamma, delta^2)`, then `mu + beta tau + sqrt(tau) Z`.
pub fn nig_sample<R: Rng + ?Sized>(p: &NigParams, rng: &mut R) -> f64 {
    let tau = sample_scale_prior(p, rng);
    let z: f64 = rng.sample(StandardNormal);
    p.mu + p.beta * tau + tau.sqrt() * z
}

/// Draw a latent scale from its inverse-Gaussian prior.
pub fn sample_scale_prior<R: Rng + ?Sized>(p: &NigParams, rng: &mut R) -> f64 {
    inverse_gaussian_unchecked(p.scale_mean(), p.scale_shape(), rng)
}

/// Conditional law of the latent scale given a residual `x` under
/// `x | tau ~ N(mu + beta tau, tau r)`.
///
/// Returns `GIG(-1, delta^2 + (x-mu)^2/r, gamma^2 + beta^2/r)`; with `r = 1`
/// this is `chi = delta^2 + (x-mu)^2`, `psi = alpha^2`.
pub fn posterior_scale(residual: f64, p: &NigParams, r: f64) -> Result<GigParams> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("observation scale must be > 0, got {r}")));
    }
    let dx = residual - p.mu;
    GigParams::new(
        -1.0,
        p.delta * p.delta + dx * dx / r,
        p.gamma * p.gamma + p.beta * p.beta / r,
    )
}

/// Conditional law of one scale shared by `m` independent components,
/// `x_i | tau ~ N(mu + beta tau, tau r_i)`: `GIG(-(m+1)/2, chi, psi)`.
pub fn posterior_scale_shared(residuals: &[f64], p: &NigParams, r: &[f64]) -> Result<GigParams> {
    if residuals.len() != r.len() || residuals.is_empty() {
        return Err(Error::Domain("residual and scale vectors must match and be non-empty".into()));
    }
    let mut chi = p.delta * p.delta;
    let mut psi = p.gamma * p.gamma;
    for (&x, &ri) in residuals.iter().zip(r) {
        if !(ri > 0.0) {
            return Err(Error::Domain(format!("observation scale must be > 0, got {ri}")));
        }
        let dx = x - p.mu;
        chi += dx * dx / ri;
        psi += p.beta * p.beta / ri;
    }
    GigParams::new(-0.5 * (residuals.len() as f64 + 1.0), chi, psi)
}

/// Gaussian log density `ln N(x; mean, var)`.
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * PI * var).ln() + d * d / var)
}
