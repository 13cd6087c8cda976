//! Filters over [`StateSpaceModel`](crate::ssm::StateSpaceModel)s.
//!
//! Every `*_step` function advances one model step (forecast) and then, when an
//! observation is given, assimilates it. Randomized filters draw one `u64` key
//! per stochastic phase from the caller's stream and give particle or member
//! `j` its own stream `RngStream::new(key, j)`, so results do not depend on
//! thread scheduling.

mod enkf;
mod fourdvar;
mod kalman;
mod pf;
mod rbpf;

pub use enkf::{enkf_step, gaspari_cohn, sm_enkf_step, taper_matrix, InflationSpec, LocalizationSpec, ScaleSource};
pub use fourdvar::{windowed_4dvar, FourDVarEstimate, SlidingFourDVar};
pub use kalman::{kalman_predict, kalman_step, kalman_update, KalmanUpdate};
pub use pf::bootstrap_pf_step;
pub use rbpf::{rbpf_nig_step_a, rbpf_nig_step_a_rb, rbpf_nig_step_b};

use crate::error::{Error, Result};
use crate::metrics::weighted_quantile;
use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

pub const DEFAULT_RESAMPLE_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianBelief {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianBelief {
    /// Validates shape and symmetry (to `1e-12` relative); eigenvalues below
    /// `-1e-10` relative are rejected, smaller negative ones are clamped to zero.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.shape() != (n, n) {
            return Err(Error::Domain(format!("covariance {:?} does not match mean length {n}", cov.shape())));
        }
        let scale = cov.amax().max(1e-300);
        if (&cov - cov.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Domain("covariance is not symmetric".into()));
        }
        let eig = cov.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        if min < -1e-10 * scale {
            return Err(Error::Domain(format!("covariance has eigenvalue {min}")));
        }
        let cov = if min < 0.0 {
            let d = eig.eigenvalues.map(|l| l.max(0.0));
            &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
        } else {
            cov
        };
        Ok(Self { mean, cov })
    }

    pub fn scalar(mean: f64, var: f64) -> Result<Self> {
        Self::new(DVector::from_element(1, mean), DMatrix::from_element(1, 1, var))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Central credible interval of component `i` at level `level`.
    pub fn interval(&self, i: usize, level: f64) -> (f64, f64) {
        let sd = self.cov[(i, i)].max(0.0).sqrt();
        let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(0.5 + 0.5 * level);
        (self.mean[i] - z * sd, self.mean[i] + z * sd)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble {
    /// One column per member.
    pub members: DMatrix<f64>,
}

impl Ensemble {
    pub fn new(members: DMatrix<f64>) -> Result<Self> {
        if members.ncols() < 2 {
            return Err(Error::Domain(format!("ensemble needs >= 2 members, got {}", members.ncols())));
        }
        Ok(Self { members })
    }

    /// `n_members` draws from a Gaussian belief.
    pub fn sample<R: rand::Rng + ?Sized>(b: &GaussianBelief, n_members: usize, rng: &mut R) -> Result<Self> {
        let root = crate::ssm::psd_sqrt(&b.cov);
        let members = DMatrix::from_fn(b.dim(), n_members, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let mut members = &root * members;
        for mut c in members.column_iter_mut() {
            c += &b.mean;
        }
        Self::new(members)
    }

    pub fn size(&self) -> usize {
        self.members.ncols()
    }

    pub fn mean(&self) -> DVector<f64> {
        self.members.column_mean()
    }

    pub fn anomalies(&self) -> DMatrix<f64> {
        let mean = self.mean();
        let mut a = self.members.clone();
        for mut c in a.column_iter_mut() {
            c -= &mean;
        }
        a
    }

    /// Sample covariance with the `N - 1` divisor.
    pub fn cov(&self) -> DMatrix<f64> {
        let a = self.anomalies();
        &a * a.transpose() / (self.size() as f64 - 1.0)
    }

    /// Weighted-free empirical credible interval of component `i`.
    pub fn interval(&self, i: usize, level: f64) -> (f64, f64) {
        let xs: Vec<f64> = self.members.row(i).iter().copied().collect();
        let w = vec![1.0 / xs.len() as f64; xs.len()];
        let lo = 0.5 - 0.5 * level;
        (weighted_quantile(&xs, &w, lo), weighted_quantile(&xs, &w, 1.0 - lo))
    }
}

/// Weighted particles. `P` is a raw state (`DVector<f64>`) or, for
/// Rao-Blackwellized filters, a per-particle [`GaussianBelief`].
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleCloud<P> {
    pub particles: Vec<P>,
    pub weights: Vec<f64>,
    /// Latent scale carried by each particle, when the filter samples one.
    pub scales: Option<Vec<f64>>,
    /// ESS of the incremental-weighted cloud before any resampling in the last step.
    pub ess_before_resample: f64,
    pub resampled: bool,
}

impl<P: Clone> ParticleCloud<P> {
    pub fn uniform(particles: Vec<P>) -> Result<Self> {
        let n = particles.len();
        if n == 0 {
            return Err(Error::Domain("particle cloud must be non-empty".into()));
        }
        Ok(Self {
            particles,
            weights: vec![1.0 / n as f64; n],
            scales: None,
            ess_before_resample: n as f64,
            resampled: false,
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn ess(&self) -> f64 {
        ess(&self.weights)
    }
}

impl ParticleCloud<DVector<f64>> {
    /// `n` i.i.d. draws from a Gaussian belief with uniform weights.
    pub fn sample<R: rand::Rng + ?Sized>(b: &GaussianBelief, n: usize, rng: &mut R) -> Result<Self> {
        let root = crate::ssm::psd_sqrt(&b.cov);
        let particles = (0..n)
            .map(|_| &b.mean + &root * DVector::from_fn(b.dim(), |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal)))
            .collect();
        Self::uniform(particles)
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.particles[0].len());
        for (p, &w) in self.particles.iter().zip(&self.weights) {
            m.axpy(w, p, 1.0);
        }
        m
    }

    /// Weighted empirical quantile interval of component `i`.
    pub fn interval(&self, i: usize, level: f64) -> (f64, f64) {
        let xs: Vec<f64> = self.particles.iter().map(|p| p[i]).collect();
        let lo = 0.5 - 0.5 * level;
        (weighted_quantile(&xs, &self.weights, lo), weighted_quantile(&xs, &self.weights, 1.0 - lo))
    }
}

impl ParticleCloud<GaussianBelief> {
    pub fn mean(&self) -> DVector<f64> {
        let mut m = DVector::zeros(self.particles[0].dim());
        for (p, &w) in self.particles.iter().zip(&self.weights) {
            m.axpy(w, &p.mean, 1.0);
        }
        m
    }

    /// Quantile interval of component `i` under the Gaussian mixture.
    pub fn interval(&self, i: usize, level: f64) -> (f64, f64) {
        let comps: Vec<(f64, f64, f64)> = self
            .particles
            .iter()
            .zip(&self.weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(p, &w)| (w, p.mean[i], p.cov[(i, i)].max(0.0).sqrt()))
            .collect();
        let lo = 0.5 - 0.5 * level;
        (mixture_quantile(&comps, lo), mixture_quantile(&comps, 1.0 - lo))
    }
}

/// Quantile of `sum_i w_i N(m_i, s_i^2)` by bisection on the mixture CDF.
pub fn mixture_quantile(comps: &[(f64, f64, f64)], q: f64) -> f64 {
    let z = Normal::new(0.0, 1.0).unwrap();
    let cdf = |x: f64| -> f64 {
        comps
            .iter()
            .map(|&(w, m, s)| {
                if s > 0.0 {
                    w * z.cdf((x - m) / s)
                } else if x >= m {
                    w
                } else {
                    0.0
                }
            })
            .sum()
    };
    let zq = z.inverse_cdf(q.clamp(1e-12, 1.0 - 1e-12)).abs() + 1.0;
    let mut lo = comps.iter().map(|&(_, m, s)| m - zq * s).fold(f64::INFINITY, f64::min) - 1e-12;
    let mut hi = comps.iter().map(|&(_, m, s)| m + zq * s).fold(f64::NEG_INFINITY, f64::max) + 1e-12;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Effective sample size `1 / sum w_i^2` of normalized weights.
pub fn ess(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Systematic resampling: particle `i` is chosen for every offset
/// `(u0 + j)/N` falling in its cumulative-weight interval.
pub fn systematic_resample(weights: &[f64], u0: f64) -> Vec<usize> {
    let n = weights.len();
    let mut out = Vec::with_capacity(n);
    let mut cum = weights[0];
    let mut i = 0;
    for j in 0..n {
        let u = (u0 + j as f64) / n as f64;
        while cum <= u && i + 1 < n {
            i += 1;
            cum += weights[i];
        }
        out.push(i);
    }
    out
}

/// Normalize log weights in place into linear weights.
///
/// Fails with [`Error::DegenerateWeights`] when the largest log weight is below
/// the log of the smallest positive normal double, i.e. when every linear
/// weight would underflow to zero.
pub(crate) fn normalize_log_weights(log_w: &[f64], max_log_lik: f64) -> Result<Vec<f64>> {
    let max = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max >= f64::MIN_POSITIVE.ln()) {
        return Err(Error::DegenerateWeights {
            n_particles: log_w.len(),
            max_log_weight: max,
            max_log_likelihood: max_log_lik,
        });
    }
    let w: Vec<f64> = log_w.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

/// Gaussian log density `ln N(e; 0, S)` from a Cholesky factor of `S`.
pub(crate) fn gaussian_logpdf(e: &DVector<f64>, s: &DMatrix<f64>) -> Result<f64> {
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance is not positive definite".into()))?;
    let sol = chol.solve(e);
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    Ok(-0.5 * (e.dot(&sol) + logdet + e.len() as f64 * (2.0 * std::f64::consts::PI).ln()))
}
