//! Online learning of the NIG location and skew `theta = (mu, beta)` from a
//! stream of residuals `r_t | tau_t, theta ~ N(mu + beta tau_t, tau_t)`,
//! `tau_t ~ IG(delta/gamma, delta^2)`, with the tail parameters held fixed.
//!
//! Particle learning carries conjugate sufficient statistics per particle and
//! selects ancestors with the one-step predictive density before propagating.
//! The SIS baseline reweights fixed prior draws of `theta` and never rejuvenates.

use crate::error::{Error, Result};
use crate::filters::{ess, normalize_log_weights, systematic_resample, GaussianBelief, ParticleCloud};
use crate::stochastics::{nig_logpdf, posterior_scale, sample_gig, NigParams, RngStream};
use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SufficientStats {
    pub s_inv_tau: f64,
    pub s_count: f64,
    pub s_tau: f64,
    pub s_r_over_tau: f64,
    pub s_r: f64,
}

impl SufficientStats {
    pub fn update(&self, tau: f64, r: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::Domain(format!("scale must be > 0, got {tau}")));
        }
        Ok(Self {
            s_inv_tau: self.s_inv_tau + 1.0 / tau,
            s_count: self.s_count + 1.0,
            s_tau: self.s_tau + tau,
            s_r_over_tau: self.s_r_over_tau + r / tau,
            s_r: self.s_r + r,
        })
    }

    /// Statistics of the concatenated data.
    pub fn merge(&self, o: &Self) -> Self {
        Self {
            s_inv_tau: self.s_inv_tau + o.s_inv_tau,
            s_count: self.s_count + o.s_count,
            s_tau: self.s_tau + o.s_tau,
            s_r_over_tau: self.s_r_over_tau + o.s_r_over_tau,
            s_r: self.s_r + o.s_r,
        }
    }

    /// Precision increment `A_t` for the design `x_t = (1, tau_t)` with weight `1/tau_t`.
    pub fn a_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.s_inv_tau, self.s_count, self.s_count, self.s_tau)
    }

    pub fn b_vector(&self) -> Vector2<f64> {
        Vector2::new(self.s_r_over_tau, self.s_r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaPrior {
    m0: Vector2<f64>,
    v0: Matrix2<f64>,
    v0_inv: Matrix2<f64>,
}

impl ThetaPrior {
    pub fn new(m0: Vector2<f64>, v0: Matrix2<f64>) -> Result<Self> {
        if (v0 - v0.transpose()).amax() > 1e-12 * v0.amax() {
            return Err(Error::Domain("prior covariance must be symmetric".into()));
        }
        let v0_inv = v0
            .cholesky()
            .ok_or_else(|| Error::Domain("prior covariance must be positive definite".into()))?
            .inverse();
        Ok(Self { m0, v0, v0_inv })
    }

    /// `N(0, I)`.
    pub fn standard() -> Self {
        Self::new(Vector2::zeros(), Matrix2::identity()).unwrap()
    }

    pub fn mean(&self) -> Vector2<f64> {
        self.m0
    }

    pub fn cov(&self) -> Matrix2<f64> {
        self.v0
    }
}

/// `V_t^{-1} = V_0^{-1} + A_t`, `m_t = V_t (V_0^{-1} m_0 + b_t)`.
pub fn theta_posterior(s: &SufficientStats, prior: &ThetaPrior) -> Result<(Vector2<f64>, Matrix2<f64>)> {
    let prec = prior.v0_inv + s.a_matrix();
    let chol = prec
        .cholesky()
        .ok_or_else(|| Error::Numerical("theta posterior precision is not positive definite".into()))?;
    let mean = chol.solve(&(prior.v0_inv * prior.m0 + s.b_vector()));
    let cov = chol.inverse();
    Ok((mean, 0.5 * (cov + cov.transpose())))
}

/// Fixed tail parameters of the mixing law `IG(delta/gamma, delta^2)`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailParams {
    pub gamma: f64,
    pub delta: f64,
}

impl TailParams {
    pub fn nig(&self, theta: &Vector2<f64>) -> Result<NigParams> {
        NigParams::from_mixing(self.gamma, theta[1], theta[0], self.delta)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlParticle {
    /// Scale drawn at the last update (the prior mean before any data).
    pub tau: f64,
    pub stats: SufficientStats,
    /// Draw from `N(m_t, V_t)` given `stats`.
    pub theta: Vector2<f64>,
}

fn draw_theta<R: Rng + ?Sized>(mean: &Vector2<f64>, cov: &Matrix2<f64>, rng: &mut R) -> Vector2<f64> {
    let l = cov.cholesky().map(|c| c.l()).unwrap_or_else(|| {
        // Numerically singular: fall back to the diagonal.
        Matrix2::from_diagonal(&cov.diagonal().map(|v| v.max(0.0).sqrt()))
    });
    let z = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    mean + l * z
}

/// `n` particles with empty statistics and `theta` drawn from the prior.
pub fn pl_init<R: Rng + ?Sized>(n: usize, prior: &ThetaPrior, tail: &TailParams, rng: &mut R) -> Result<ParticleCloud<PlParticle>> {
    let tau = tail.delta / tail.gamma;
    let particles = (0..n)
        .map(|_| PlParticle {
            tau,
            stats: SufficientStats::default(),
            theta: draw_theta(&prior.m0, &prior.v0, rng),
        })
        .collect();
    ParticleCloud::uniform(particles)
}

/// One resample-propagate step on residual `r`.
///
/// 1. weight particle `i` by the NIG predictive density `p(r | theta_i)`;
/// 2. select ancestors by systematic resampling (one uniform);
/// 3. for each offspring `j` (stream `RngStream::new(key, j)`, one key): draw
///    `tau ~ GIG(-1, ..)` given `r` and the ancestor's `theta`, update the
///    statistics, and redraw `theta` from its conjugate posterior.
///
/// Weights are uniform afterwards; `ess_before_resample` holds the ESS of the
/// predictive weights.
pub fn pl_step(
    c: &ParticleCloud<PlParticle>,
    r: f64,
    prior: &ThetaPrior,
    tail: &TailParams,
    rng: &mut RngStream,
) -> Result<ParticleCloud<PlParticle>> {
    let log_pred = c
        .particles
        .par_iter()
        .map(|p| Ok(nig_logpdf(r, &tail.nig(&p.theta)?)))
        .collect::<Result<Vec<f64>>>()?;
    let log_w: Vec<f64> = c.weights.iter().zip(&log_pred).map(|(w, l)| w.ln() + l).collect();
    let max_ll = log_pred.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w = normalize_log_weights(&log_w, max_ll)?;
    let pred_ess = ess(&w);
    let idx = systematic_resample(&w, rng.gen::<f64>());
    let key = rng.next_u64();
    let particles = idx
        .par_iter()
        .enumerate()
        .map(|(j, &i)| -> Result<PlParticle> {
            let mut rj = RngStream::new(key, j as u64);
            let parent = &c.particles[i];
            let tau = sample_gig(&posterior_scale(r, &tail.nig(&parent.theta)?, 1.0)?, &mut rj)?;
            let stats = parent.stats.update(tau, r)?;
            let (m, v) = theta_posterior(&stats, prior)?;
            Ok(PlParticle {
                tau,
                stats,
                theta: draw_theta(&m, &v, &mut rj),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = particles.len();
    Ok(ParticleCloud {
        particles,
        weights: vec![1.0 / n as f64; n],
        scales: None,
        ess_before_resample: pred_ess,
        resampled: true,
    })
}

/// Rao-Blackwellized posterior of `theta`: the equal-weight mixture of the
/// particles' conjugate posteriors, summarized by its mean and covariance.
pub fn pl_theta_summary(c: &ParticleCloud<PlParticle>, prior: &ThetaPrior) -> Result<GaussianBelief> {
    let comps = pl_theta_components(c, prior)?;
    let mut mean = Vector2::zeros();
    for ((m, _), w) in comps.iter().zip(&c.weights) {
        mean += *w * m;
    }
    let mut cov = Matrix2::zeros();
    for ((m, v), w) in comps.iter().zip(&c.weights) {
        let d = m - mean;
        cov += *w * (v + d * d.transpose());
    }
    GaussianBelief::new(
        DVector::from_column_slice(mean.as_slice()),
        DMatrix::from_column_slice(2, 2, (0.5 * (cov + cov.transpose())).as_slice()),
    )
}

/// Per-particle conjugate posteriors `(m_i, V_i)`.
pub fn pl_theta_components(c: &ParticleCloud<PlParticle>, prior: &ThetaPrior) -> Result<Vec<(Vector2<f64>, Matrix2<f64>)>> {
    c.particles.iter().map(|p| theta_posterior(&p.stats, prior)).collect()
}

/// Central interval of component `k` (0 = `mu`, 1 = `beta`) under the mixture.
pub fn pl_theta_interval(c: &ParticleCloud<PlParticle>, prior: &ThetaPrior, k: usize, level: f64) -> Result<(f64, f64)> {
    let comps: Vec<(f64, f64, f64)> = pl_theta_components(c, prior)?
        .iter()
        .zip(&c.weights)
        .map(|((m, v), &w)| (w, m[k], v[(k, k)].max(0.0).sqrt()))
        .collect();
    let lo = 0.5 - 0.5 * level;
    Ok((
        crate::filters::mixture_quantile(&comps, lo),
        crate::filters::mixture_quantile(&comps, 1.0 - lo),
    ))
}

/// `n` fixed prior draws of `theta` with uniform weights.
pub fn sis_init<R: Rng + ?Sized>(n: usize, prior: &ThetaPrior, rng: &mut R) -> Result<ParticleCloud<Vector2<f64>>> {
    ParticleCloud::uniform((0..n).map(|_| draw_theta(&prior.m0, &prior.v0, rng)).collect())
}

/// Multiply weights by `p(r | theta_i)` in log space and renormalize. Never
/// resamples. `ess_before_resample` is the ESS after reweighting.
pub fn sis_baseline_step(c: &ParticleCloud<Vector2<f64>>, r: f64, tail: &TailParams) -> Result<ParticleCloud<Vector2<f64>>> {
    let ll = c
        .particles
        .par_iter()
        .map(|t| Ok(nig_logpdf(r, &tail.nig(t)?)))
        .collect::<Result<Vec<f64>>>()?;
    let log_w: Vec<f64> = c.weights.iter().zip(&ll).map(|(w, l)| w.ln() + l).collect();
    let max_ll = ll.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights = normalize_log_weights(&log_w, max_ll)?;
    let e = ess(&weights);
    Ok(ParticleCloud {
        particles: c.particles.clone(),
        weights,
        scales: None,
        ess_before_resample: e,
        resampled: false,
    })
}

/// Weighted mean and per-component standard deviation of the SIS particles.
pub fn sis_theta_summary(c: &ParticleCloud<Vector2<f64>>) -> (Vector2<f64>, Vector2<f64>) {
    let mut m = Vector2::zeros();
    for (t, w) in c.particles.iter().zip(&c.weights) {
        m += *w * t;
    }
    let mut v = Vector2::zeros();
    for (t, w) in c.particles.iter().zip(&c.weights) {
        let d = t - m;
        v += *w * d.component_mul(&d);
    }
    (m, v.map(f64::sqrt))
}

/// Draw a residual stream from the model with parameters `theta`.
pub fn simulate_residuals(theta: &Vector2<f64>, tail: &TailParams, t: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let p = tail.nig(theta)?;
    Ok((0..t).map(|_| crate::stochastics::nig_sample(&p, rng)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::rbpf_nig_step_b;
    use crate::ssm::{Dynamics, ObsNoise, ObsOperator, ProcessNoise, StateSpaceModel};
    use crate::testutil::{mean, median, variance};
    use proptest::prelude::*;
    use rand::Rng;

    const TAIL: TailParams = TailParams { gamma: 1.0, delta: 1.0 };

    #[test]
    fn update_stats_example() {
        let s = SufficientStats::default().update(2.0, 4.0).unwrap();
        assert_eq!(
            s,
            SufficientStats {
                s_inv_tau: 0.5,
                s_count: 1.0,
                s_tau: 2.0,
                s_r_over_tau: 2.0,
                s_r: 4.0
            }
        );
        assert!(SufficientStats::default().update(0.0, 1.0).is_err());
    }

    #[test]
    fn unit_scales_give_regression_sums() {
        let rs = [0.3, -1.2, 2.5];
        let s = rs.iter().fold(SufficientStats::default(), |s, &r| s.update(1.0, r).unwrap());
        let sum: f64 = rs.iter().sum();
        assert_eq!((s.s_inv_tau, s.s_count, s.s_tau), (3.0, 3.0, 3.0));
        assert!((s.s_r_over_tau - sum).abs() < 1e-15 && (s.s_r - sum).abs() < 1e-15);
    }

    fn close(a: &SufficientStats, b: &SufficientStats) -> bool {
        let d = [
            a.s_inv_tau - b.s_inv_tau,
            a.s_count - b.s_count,
            a.s_tau - b.s_tau,
            a.s_r_over_tau - b.s_r_over_tau,
            a.s_r - b.s_r,
        ];
        d.iter().all(|x| x.abs() < 1e-9)
    }

    proptest! {
        #[test]
        fn stats_are_order_invariant_and_mergeable(
            data in prop::collection::vec((0.01f64..20.0, -5.0f64..5.0), 1..40),
            split in 0usize..40,
        ) {
            let fold = |d: &[(f64, f64)]| d.iter().fold(SufficientStats::default(), |s, &(t, r)| s.update(t, r).unwrap());
            let fwd = fold(&data);
            let mut rev = data.clone();
            rev.reverse();
            prop_assert!(close(&fwd, &fold(&rev)));
            let k = split.min(data.len());
            prop_assert!(close(&fwd, &fold(&data[..k]).merge(&fold(&data[k..]))));
            prop_assert_eq!(fwd.s_count, data.len() as f64);
            prop_assert!(fwd.s_tau > 0.0 && fwd.s_inv_tau > 0.0);
        }
    }

    #[test]
    fn zero_updates_return_prior() {
        let prior = ThetaPrior::new(Vector2::new(0.2, -0.1), Matrix2::new(2.0, 0.3, 0.3, 1.0)).unwrap();
        let (m, v) = theta_posterior(&SufficientStats::default(), &prior).unwrap();
        assert!((m - prior.mean()).amax() < 1e-14);
        assert!((v - prior.cov()).amax() < 1e-14);
        assert!(ThetaPrior::new(Vector2::zeros(), Matrix2::new(1.0, 2.0, 2.0, 1.0)).is_err());
    }

    #[test]
    fn posterior_matches_recursive_least_squares() {
        // Oracle: observation-by-observation Kalman updates of a Gaussian on theta.
        let mut rng = RngStream::new(3, 0);
        let prior = ThetaPrior::new(Vector2::new(0.1, 0.4), Matrix2::new(1.5, -0.2, -0.2, 0.8)).unwrap();
        let mut stats = SufficientStats::default();
        let (mut m, mut v) = (prior.mean(), prior.cov());
        for _ in 0..50 {
            let tau: f64 = 0.1 + 3.0 * rng.gen::<f64>();
            let r: f64 = 0.5 - 0.3 * tau + tau.sqrt() * rng.sample::<f64, _>(StandardNormal);
            stats = stats.update(tau, r).unwrap();
            let x = Vector2::new(1.0, tau);
            let s = (x.transpose() * v * x)[0] + tau;
            let k = v * x / s;
            m += k * (r - x.dot(&m));
            v -= k * x.transpose() * v;
        }
        let (pm, pv) = theta_posterior(&stats, &prior).unwrap();
        assert!((pm - m).amax() < 1e-10, "{pm} vs {m}");
        assert!((pv - v).amax() < 1e-10);
    }

    #[test]
    fn collinear_unit_scales_identify_only_the_sum() {
        let rs: Vec<f64> = (0..200).map(|i| ((i * 37) % 11) as f64 * 0.1 - 0.3).collect();
        let s = rs.iter().fold(SufficientStats::default(), |s, &r| s.update(1.0, r).unwrap());
        let rbar = mean(&rs);
        // A diffuse prior on mu with beta pinned at zero recovers the sample mean.
        let pinned = ThetaPrior::new(Vector2::zeros(), Matrix2::new(1e8, 0.0, 0.0, 1e-10)).unwrap();
        let (m, _) = theta_posterior(&s, &pinned).unwrap();
        assert!((m[0] - rbar).abs() < 1e-6 && m[1].abs() < 1e-8);
        // With an isotropic diffuse prior only mu + beta is determined.
        let flat = ThetaPrior::new(Vector2::zeros(), Matrix2::identity() * 1e6).unwrap();
        let (m, v) = theta_posterior(&s, &flat).unwrap();
        assert!((m[0] + m[1] - rbar).abs() < 1e-6);
        assert!(v[(0, 0)] > 1e5, "the difference direction keeps prior variance");
    }

    #[test]
    fn pl_keeps_uniform_weights_and_reports_degeneracy() {
        let prior = ThetaPrior::standard();
        let mut rng = RngStream::new(1, 0);
        let mut c = pl_init(200, &prior, &TAIL, &mut rng).unwrap();
        for (k, r) in [0.3, -0.5, 1.2].into_iter().enumerate() {
            c = pl_step(&c, r, &prior, &TAIL, &mut rng).unwrap();
            assert!(c.weights.iter().all(|&w| (w - 1.0 / 200.0).abs() < 1e-15));
            assert!(c.particles.iter().all(|p| p.tau > 0.0 && p.stats.s_count == (k + 1) as f64));
        }
        assert!(matches!(pl_step(&c, 1e250, &prior, &TAIL, &mut rng), Err(Error::DegenerateWeights { .. })));
    }

    #[test]
    fn pl_scale_draws_match_rbpf_b_when_theta_is_known() {
        // Point-mass prior at theta0; state pinned at zero and observed directly.
        let theta0 = Vector2::new(0.4, -0.2);
        let prior = ThetaPrior::new(theta0, Matrix2::identity() * 1e-14).unwrap();
        let mut rng = RngStream::new(8, 0);
        let c = pl_init(20_000, &prior, &TAIL, &mut rng).unwrap();
        let r = 2.3;
        let pl = pl_step(&c, r, &prior, &TAIL, &mut rng).unwrap();
        let m = StateSpaceModel::new(
            1.0,
            Dynamics::Linear(DMatrix::from_element(1, 1, -1.0)),
            ProcessNoise::Zero,
            ObsOperator::Dense(DMatrix::identity(1, 1)),
            ObsNoise::Nig {
                params: TAIL.nig(&theta0).unwrap(),
                r: DMatrix::identity(1, 1),
            },
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let cb = ParticleCloud::uniform(vec![DVector::zeros(1); 20_000]).unwrap();
        let b = rbpf_nig_step_b(&cb, &m, Some(&DVector::from_element(1, r)), 0.0, &mut rng).unwrap();
        let ta: Vec<f64> = pl.particles.iter().map(|p| p.tau).collect();
        let tb = b.scales.unwrap();
        let se = (variance(&ta) / ta.len() as f64 + variance(&tb) / tb.len() as f64).sqrt();
        assert!((mean(&ta) - mean(&tb)).abs() < 3.0 * se, "{} vs {}", mean(&ta), mean(&tb));
    }

    #[test]
    fn sis_examples() {
        let prior = ThetaPrior::standard();
        let same = ParticleCloud::uniform(vec![Vector2::new(0.1, 0.2); 10]).unwrap();
        let s = sis_baseline_step(&same, 0.7, &TAIL).unwrap();
        assert!(s.weights.iter().all(|&w| (w - 0.1).abs() < 1e-15));
        let mut rng = RngStream::new(2, 0);
        let c = sis_init(5, &prior, &mut rng).unwrap();
        let s = sis_baseline_step(&c, 0.7, &TAIL).unwrap();
        let lik: Vec<f64> = c.particles.iter().map(|t| nig_logpdf(0.7, &TAIL.nig(t).unwrap()).exp()).collect();
        let tot: f64 = lik.iter().sum();
        for (w, l) in s.weights.iter().zip(&lik) {
            assert!((w - l / tot).abs() < 1e-13);
        }
        assert_eq!(s.particles, c.particles);
    }

    #[test]
    fn pl_holds_ess_and_concentrates_while_sis_collapses() {
        let truth = Vector2::new(0.5, -0.3);
        let prior = ThetaPrior::standard();
        let n = 400;
        let mut pl_ess = vec![Vec::new(); 200];
        let mut sis_ess = vec![Vec::new(); 200];
        for seed in 0..5 {
            let rs = simulate_residuals(&truth, &TAIL, 200, &mut RngStream::new(seed, 0)).unwrap();
            let mut rng = RngStream::new(seed, 1);
            let mut pl = pl_init(n, &prior, &TAIL, &mut rng).unwrap();
            let mut sis = sis_init(n, &prior, &mut rng).unwrap();
            let mut sd = Vec::new();
            for (t, &r) in rs.iter().enumerate() {
                pl = pl_step(&pl, r, &prior, &TAIL, &mut rng).unwrap();
                sis = sis_baseline_step(&sis, r, &TAIL).unwrap();
                pl_ess[t].push(pl.ess_before_resample);
                sis_ess[t].push(sis.ess_before_resample);
                if t == 19 || t == 199 {
                    sd.push(pl_theta_summary(&pl, &prior).unwrap().cov.diagonal().map(f64::sqrt));
                }
            }
            assert!(sd[1][0] < sd[0][0] && sd[1][1] < sd[0][1], "seed {seed}");
        }
        for t in 0..200 {
            assert!(median(&pl_ess[t]) >= median(&sis_ess[t]), "t = {t}");
        }
        assert!(median(&sis_ess[199]) < 0.05 * n as f64);
    }
}
