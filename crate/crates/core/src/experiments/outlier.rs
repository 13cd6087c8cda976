//! Scalar outlier experiments: Kalman filter against the scale-augmented RBPF,
//! and the four-way comparison with forecast-only, 4DVar and EnKF baselines.

use super::config::{ExperimentConfig, OutlierConfig, RbpfVariant};
use super::io::{FilterRow, Na, SummaryRow, TauRow};
use super::median;
use crate::error::Result;
use crate::filters::{
    enkf_step, kalman_step, rbpf_nig_step_a, rbpf_nig_step_a_rb, rbpf_nig_step_b, Ensemble, GaussianBelief,
    ParticleCloud, SlidingFourDVar, DEFAULT_RESAMPLE_THRESHOLD,
};
use crate::metrics::{coverage, crps_ensemble, crps_gaussian, rmse, IntervalRecord};
use crate::ssm::{make_outlier_1d_model, simulate, ObsNoise, StateSpaceModel, Trajectory};
use crate::stochastics::{NigParams, RngStream};
use nalgebra::DMatrix;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::StandardNormal;

/// Per-step output of one method on one seed, for steps `1..=T`.
#[derive(Clone, Debug)]
pub struct MethodTrace {
    pub method: String,
    pub estimate: Vec<f64>,
    /// 90% intervals; `None` for point estimators.
    pub interval: Option<Vec<(f64, f64)>>,
    pub crps: Vec<f64>,
    /// Posterior mean of the observation scale, for scale-sampling filters.
    pub tau_mean: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub truth: Vec<f64>,
    pub traces: Vec<MethodTrace>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MethodScore {
    pub method: String,
    pub seed: u64,
    pub rmse: f64,
    pub coverage: Option<f64>,
    pub crps: f64,
}

#[derive(Clone, Debug)]
pub struct FilterExperiment {
    pub runs: Vec<SeedRun>,
    pub scores: Vec<MethodScore>,
    pub summary: Vec<SummaryRow>,
}

impl FilterExperiment {
    pub fn filter_rows(&self) -> Vec<FilterRow> {
        let mut rows = Vec::new();
        for run in &self.runs {
            for tr in &run.traces {
                for (k, (&truth, &est)) in run.truth.iter().zip(&tr.estimate).enumerate() {
                    let (lo, hi) = match &tr.interval {
                        Some(iv) => (Na(Some(iv[k].0)), Na(Some(iv[k].1))),
                        None => (Na(None), Na(None)),
                    };
                    rows.push(FilterRow {
                        t: k + 1,
                        truth,
                        estimate: est,
                        lo90: lo,
                        hi90: hi,
                        method: tr.method.clone(),
                        seed: run.seed,
                    });
                }
            }
        }
        rows
    }

    /// Scale posterior means of the first scale-sampling method.
    pub fn tau_rows(&self) -> Vec<TauRow> {
        let mut rows = Vec::new();
        for run in &self.runs {
            if let Some(taus) = run.traces.iter().find_map(|t| t.tau_mean.as_ref()) {
                rows.extend(taus.iter().enumerate().map(|(k, &tau_mean)| TauRow {
                    t: k + 1,
                    tau_mean,
                    seed: run.seed,
                }));
            }
        }
        rows
    }

    pub fn summary_for(&self, method: &str) -> Option<&SummaryRow> {
        self.summary.iter().find(|s| s.method == method)
    }
}

/// Methods run by [`run_filters`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Kalman,
    Rbpf(RbpfVariant),
    Forecast,
    FourDVar,
    Enkf,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Kalman => "kf",
            Method::Rbpf(v) => v.label(),
            Method::Forecast => "forecast",
            Method::FourDVar => "4dvar",
            Method::Enkf => "enkf",
        }
    }
}

/// Filter-side models: Gaussian with the nominal `R = r^2`, and NIG with the
/// same base covariance and the configured mixing law.
pub fn filter_models(o: &OutlierConfig) -> Result<(StateSpaceModel, StateSpaceModel, StateSpaceModel)> {
    let gen = make_outlier_1d_model(&o.generator)?;
    let r = DMatrix::from_element(1, 1, o.generator.r * o.generator.r);
    let gauss = gen.with_obs_noise(ObsNoise::Gaussian(r.clone()))?;
    let params = NigParams::from_mixing(o.nig_gamma, 0.0, 0.0, o.nig_delta)?;
    let nig = gen.with_obs_noise(ObsNoise::Nig { params, r })?;
    Ok((gen, gauss, nig))
}

fn prior(m: &StateSpaceModel) -> Result<GaussianBelief> {
    GaussianBelief::new(m.x0_mean().clone(), m.x0_cov().clone())
}

/// Draw `n` values from a weighted Gaussian mixture.
fn mixture_draws(comps: &[(f64, f64, f64)], n: usize, rng: &mut RngStream) -> Result<Vec<f64>> {
    let idx = WeightedIndex::new(comps.iter().map(|c| c.0))
        .map_err(|e| crate::error::Error::Numerical(format!("mixture weights: {e}")))?;
    Ok((0..n)
        .map(|_| {
            let (_, m, s) = comps[idx.sample(rng)];
            m + s * rng.sample::<f64, _>(StandardNormal)
        })
        .collect())
}

fn run_method(
    method: Method,
    cfg: &ExperimentConfig,
    traj: &Trajectory,
    gauss: &StateSpaceModel,
    nig: &StateSpaceModel,
    rng: &mut RngStream,
) -> Result<MethodTrace> {
    let o = &cfg.outlier;
    let steps = traj.states.len() - 1;
    let truth = |k: usize| traj.states[k][0];
    let mut estimate = Vec::with_capacity(steps);
    let mut interval = Vec::with_capacity(steps);
    let mut crps = Vec::with_capacity(steps);
    let mut taus = Vec::with_capacity(steps);
    let b0 = prior(gauss)?;
    match method {
        Method::Kalman => {
            let mut b = b0;
            for k in 1..=steps {
                b = kalman_step(&b, gauss, traj.observation_at(k))?;
                let (m, sd) = (b.mean[0], b.cov[(0, 0)].max(0.0).sqrt());
                estimate.push(m);
                interval.push(b.interval(0, 0.9));
                crps.push(crps_gaussian(m, sd, truth(k)));
            }
        }
        Method::Rbpf(RbpfVariant::ARb) => {
            let mut c = ParticleCloud::uniform(vec![b0; o.n_particles])?;
            for k in 1..=steps {
                c = rbpf_nig_step_a_rb(&c, nig, traj.observation_at(k), DEFAULT_RESAMPLE_THRESHOLD, rng)?;
                estimate.push(c.mean()[0]);
                interval.push(c.interval(0, 0.9));
                let comps: Vec<(f64, f64, f64)> = c
                    .particles
                    .iter()
                    .zip(&c.weights)
                    .map(|(p, &w)| (w, p.mean[0], p.cov[(0, 0)].max(0.0).sqrt()))
                    .collect();
                crps.push(crps_ensemble(&mixture_draws(&comps, o.crps_samples, rng)?, truth(k)));
                taus.push(scale_mean(&c.weights, c.scales.as_deref()));
            }
        }
        Method::Rbpf(v) => {
            let mut c = ParticleCloud::sample(&b0, o.n_particles, rng)?;
            for k in 1..=steps {
                let y = traj.observation_at(k);
                c = match v {
                    RbpfVariant::B => rbpf_nig_step_b(&c, nig, y, DEFAULT_RESAMPLE_THRESHOLD, rng)?,
                    _ => rbpf_nig_step_a(&c, nig, y, DEFAULT_RESAMPLE_THRESHOLD, rng)?,
                };
                estimate.push(c.mean()[0]);
                interval.push(c.interval(0, 0.9));
                let comps: Vec<(f64, f64, f64)> =
                    c.particles.iter().zip(&c.weights).map(|(p, &w)| (w, p[0], 0.0)).collect();
                crps.push(crps_ensemble(&mixture_draws(&comps, o.crps_samples, rng)?, truth(k)));
                taus.push(scale_mean(&c.weights, c.scales.as_deref()));
            }
        }
        Method::Enkf => {
            let mut e = Ensemble::sample(&b0, cfg.viability.enkf_members, rng)?;
            for k in 1..=steps {
                e = enkf_step(&e, gauss, traj.observation_at(k), None, None, rng)?;
                estimate.push(e.mean()[0]);
                interval.push(e.interval(0, 0.9));
                let xs: Vec<f64> = e.members.row(0).iter().copied().collect();
                crps.push(crps_ensemble(&xs, truth(k)));
            }
        }
        Method::Forecast => {
            let mut x = b0.mean;
            for k in 1..=steps {
                x = gauss.advance_mean(&x);
                estimate.push(x[0]);
                crps.push((x[0] - truth(k)).abs());
            }
        }
        Method::FourDVar => {
            let mut s = SlidingFourDVar::new(&b0, cfg.viability.fourdvar_window)?;
            for k in 1..=steps + 1 {
                let est = if k <= steps {
                    s.push(gauss, traj.observation_at(k).cloned())?
                } else {
                    s.flush(gauss)?
                };
                if let Some(est) = est {
                    estimate.extend(est.states[1..].iter().map(|b| b.mean[0]));
                }
            }
            crps.extend(estimate.iter().enumerate().map(|(i, e)| (e - truth(i + 1)).abs()));
        }
    }
    let point = matches!(method, Method::Forecast | Method::FourDVar);
    Ok(MethodTrace {
        method: method.label().to_string(),
        estimate,
        interval: (!point).then_some(interval),
        crps,
        tau_mean: (!taus.is_empty()).then_some(taus),
    })
}

fn scale_mean(w: &[f64], scales: Option<&[f64]>) -> f64 {
    match scales {
        Some(s) => w.iter().zip(s).map(|(w, s)| w * s).sum(),
        None => f64::NAN,
    }
}

/// Run `methods` on one simulated trajectory per seed `seed0 .. seed0 + n_seeds`.
///
/// The trajectory for seed `s` is drawn from `RngStream::new(s, 0)`; method `i`
/// (in the order given) uses `RngStream::new(s, i + 1)`.
pub fn run_filters(cfg: &ExperimentConfig, seed0: u64, methods: &[Method]) -> Result<FilterExperiment> {
    let o = &cfg.outlier;
    let (gen, gauss, nig) = filter_models(o)?;
    let mut runs = Vec::with_capacity(cfg.n_seeds);
    let mut scores = Vec::new();
    for s in 0..cfg.n_seeds as u64 {
        let seed = seed0 + s;
        let traj = simulate(&gen, o.steps, 1, &mut RngStream::new(seed, 0))?;
        let truth: Vec<f64> = traj.states[1..].iter().map(|x| x[0]).collect();
        let mut traces = Vec::with_capacity(methods.len());
        for (i, &m) in methods.iter().enumerate() {
            let tr = run_method(m, cfg, &traj, &gauss, &nig, &mut RngStream::new(seed, i as u64 + 1))?;
            let cov = match &tr.interval {
                Some(iv) => {
                    let recs = iv
                        .iter()
                        .zip(&truth)
                        .map(|(&(lo, hi), &t)| IntervalRecord::new(lo, hi, t))
                        .collect::<Result<Vec<_>>>()?;
                    Some(coverage(&recs))
                }
                None => None,
            };
            scores.push(MethodScore {
                method: tr.method.clone(),
                seed,
                rmse: rmse(&tr.estimate, &truth)?,
                coverage: cov,
                crps: tr.crps.iter().sum::<f64>() / tr.crps.len() as f64,
            });
            traces.push(tr);
        }
        log::info!("seed {seed} done");
        runs.push(SeedRun { seed, truth, traces });
    }
    let summary = methods
        .iter()
        .map(|m| {
            let of: Vec<&MethodScore> = scores.iter().filter(|s| s.method == m.label()).collect();
            let pick = |f: &dyn Fn(&MethodScore) -> f64| median(&of.iter().map(|s| f(s)).collect::<Vec<_>>());
            SummaryRow {
                method: m.label().to_string(),
                rmse: pick(&|s| s.rmse),
                coverage90: Na(of[0].coverage.is_some().then(|| pick(&|s| s.coverage.unwrap()))),
                crps: pick(&|s| s.crps),
                seed_count: of.len(),
            }
        })
        .collect();
    Ok(FilterExperiment { runs, scores, summary })
}

/// Kalman filter against the configured RBPF variant (and variant B when
/// `include_b` is set).
pub fn run_nig_rbpf_1d(cfg: &ExperimentConfig, seed0: u64) -> Result<FilterExperiment> {
    let mut methods = vec![Method::Kalman, Method::Rbpf(cfg.outlier.variant)];
    if cfg.outlier.include_b && cfg.outlier.variant != RbpfVariant::B {
        methods.push(Method::Rbpf(RbpfVariant::B));
    }
    run_filters(cfg, seed0, &methods)
}

/// Forecast-only, sliding-window 4DVar, EnKF and the RBPF on the outlier
/// scenario, with the Kalman filter as reference.
pub fn run_viability_baselines(cfg: &ExperimentConfig, seed0: u64) -> Result<FilterExperiment> {
    run_filters(
        cfg,
        seed0,
        &[
            Method::Forecast,
            Method::FourDVar,
            Method::Enkf,
            Method::Rbpf(cfg.outlier.variant),
            Method::Kalman,
        ],
    )
}
