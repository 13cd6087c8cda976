//! State-space models `x_{k+1} = x_k + dt F(x_k) + sqrt(dt) G xi_k`, `y_k = H x_k + eta_k`.

use crate::error::{Error, Result};
use crate::stochastics::{sample_scale_prior, NigParams, RngStream};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

pub type DriftFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;

#[derive(Clone)]
pub enum Dynamics {
    /// `F(x) = A x`, so one step is `x + dt A x`.
    Linear(DMatrix<f64>),
    Nonlinear(DriftFn),
}

impl fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dynamics::Linear(a) => f.debug_tuple("Linear").field(a).finish(),
            Dynamics::Nonlinear(_) => f.write_str("Nonlinear(..)"),
        }
    }
}

/// Square root `G` of the process-noise covariance rate.
#[derive(Clone, Debug)]
pub enum ProcessNoise {
    Zero,
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

#[derive(Clone, Debug)]
pub enum ObsOperator {
    Dense(DMatrix<f64>),
    /// Observe the listed state components.
    Subsample(Vec<usize>),
}

#[derive(Clone, Debug)]
pub enum ObsNoise {
    Gaussian(DMatrix<f64>),
    /// `eta | tau ~ N((mu + beta tau) 1, tau R)` with one scale per observation time.
    /// `R` must be diagonal.
    Nig { params: NigParams, r: DMatrix<f64> },
    /// With probability `p_out` the covariance is `m_out^2 R`; generator only.
    Contaminated { r: DMatrix<f64>, p_out: f64, m_out: f64 },
}

impl ObsNoise {
    /// Base covariance `R`.
    pub fn base_cov(&self) -> &DMatrix<f64> {
        match self {
            ObsNoise::Gaussian(r) | ObsNoise::Nig { r, .. } | ObsNoise::Contaminated { r, .. } => r,
        }
    }
}

#[derive(Clone, Debug)]
pub struct StateSpaceModel {
    dim_state: usize,
    dim_obs: usize,
    dt: f64,
    dynamics: Dynamics,
    process_noise: ProcessNoise,
    obs_operator: ObsOperator,
    obs_noise: ObsNoise,
    x0_mean: DVector<f64>,
    x0_cov: DMatrix<f64>,
    obs_chol: DMatrix<f64>,
    x0_sqrt: DMatrix<f64>,
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    let scale = m.amax().max(1e-300);
    (m - m.transpose()).amax() <= 1e-12 * scale
}

/// Symmetric square root of a PSD matrix, clamping tiny negative eigenvalues.
pub(crate) fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

impl StateSpaceModel {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        dt: f64,
        dynamics: Dynamics,
        process_noise: ProcessNoise,
        obs_operator: ObsOperator,
        obs_noise: ObsNoise,
        x0_mean: DVector<f64>,
        x0_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let n = x0_mean.len();
        let bad = |msg: String| Err(Error::Domain(msg));
        if n == 0 || !(dt > 0.0) {
            return bad(format!("need dim_state >= 1 and dt > 0 (got {n}, {dt})"));
        }
        if x0_cov.shape() != (n, n) || !is_symmetric(&x0_cov) {
            return bad("initial covariance must be symmetric dim_state x dim_state".into());
        }
        if let Dynamics::Linear(a) = &dynamics {
            if a.shape() != (n, n) {
                return bad(format!("drift matrix is {:?}, expected ({n}, {n})", a.shape()));
            }
        }
        match &process_noise {
            ProcessNoise::Diagonal(g) if g.len() != n => return bad("diagonal process noise length differs from dim_state".into()),
            ProcessNoise::Dense(g) if g.nrows() != n => return bad("process noise G must have dim_state rows".into()),
            _ => {}
        }
        let dim_obs = match &obs_operator {
            ObsOperator::Dense(h) => {
                if h.ncols() != n || h.nrows() == 0 {
                    return bad(format!("H is {:?}, expected (m, {n})", h.shape()));
                }
                h.nrows()
            }
            ObsOperator::Subsample(idx) => {
                if idx.is_empty() || idx.iter().any(|&i| i >= n) {
                    return bad("subsample indices must be non-empty and < dim_state".into());
                }
                idx.len()
            }
        };
        let r = obs_noise.base_cov();
        if r.shape() != (dim_obs, dim_obs) || !is_symmetric(r) {
            return bad("observation covariance must be symmetric dim_obs x dim_obs".into());
        }
        let obs_chol = match r.clone().cholesky() {
            Some(c) => c.l(),
            None => return bad("observation covariance must be positive definite".into()),
        };
        match &obs_noise {
            ObsNoise::Nig { r, .. } => {
                if (r - DMatrix::from_diagonal(&r.diagonal())).amax() > 0.0 {
                    return bad("NIG observation noise requires a diagonal R".into());
                }
            }
            ObsNoise::Contaminated { p_out, m_out, .. } => {
                if !(0.0..=1.0).contains(p_out) || !(*m_out > 0.0) {
                    return bad("contamination needs p_out in [0, 1] and m_out > 0".into());
                }
            }
            ObsNoise::Gaussian(_) => {}
        }
        let x0_sqrt = psd_sqrt(&x0_cov);
        Ok(Self {
            dim_state: n,
            dim_obs,
            dt,
            dynamics,
            process_noise,
            obs_operator,
            obs_noise,
            x0_mean,
            x0_cov,
            obs_chol,
            x0_sqrt,
        })
    }

    pub fn dim_state(&self) -> usize {
        self.dim_state
    }

    pub fn dim_obs(&self) -> usize {
        self.dim_obs
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn obs_noise(&self) -> &ObsNoise {
        &self.obs_noise
    }

    pub fn obs_operator(&self) -> &ObsOperator {
        &self.obs_operator
    }

    pub fn x0_mean(&self) -> &DVector<f64> {
        &self.x0_mean
    }

    pub fn x0_cov(&self) -> &DMatrix<f64> {
        &self.x0_cov
    }

    /// Same model with different observation noise (e.g. a filter's nominal assumption).
    pub fn with_obs_noise(&self, obs_noise: ObsNoise) -> Result<Self> {
        Self::new(
            self.dt,
            self.dynamics.clone(),
            self.process_noise.clone(),
            self.obs_operator.clone(),
            obs_noise,
            self.x0_mean.clone(),
            self.x0_cov.clone(),
        )
    }

    /// `M = I + dt A` for linear dynamics.
    pub fn transition(&self) -> Option<DMatrix<f64>> {
        match &self.dynamics {
            Dynamics::Linear(a) => Some(DMatrix::identity(self.dim_state, self.dim_state) + a * self.dt),
            Dynamics::Nonlinear(_) => None,
        }
    }

    /// Transition matrix, or a numerical error for nonlinear dynamics.
    pub fn require_transition(&self) -> Result<DMatrix<f64>> {
        self.transition()
            .ok_or_else(|| Error::Numerical("this filter requires linear dynamics".into()))
    }

    /// Per-step process covariance `Q = dt G G^T`.
    pub fn process_cov(&self) -> DMatrix<f64> {
        let n = self.dim_state;
        match &self.process_noise {
            ProcessNoise::Zero => DMatrix::zeros(n, n),
            ProcessNoise::Diagonal(g) => DMatrix::from_diagonal(&g.map(|v| v * v * self.dt)),
            ProcessNoise::Dense(g) => g * g.transpose() * self.dt,
        }
    }

    pub fn h_matrix(&self) -> DMatrix<f64> {
        match &self.obs_operator {
            ObsOperator::Dense(h) => h.clone(),
            ObsOperator::Subsample(idx) => {
                let mut h = DMatrix::zeros(idx.len(), self.dim_state);
                for (row, &i) in idx.iter().enumerate() {
                    h[(row, i)] = 1.0;
                }
                h
            }
        }
    }

    pub fn observe(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.obs_operator {
            ObsOperator::Dense(h) => h * x,
            ObsOperator::Subsample(idx) => DVector::from_iterator(idx.len(), idx.iter().map(|&i| x[i])),
        }
    }

    /// Deterministic part `x + dt F(x)`.
    pub fn advance_mean(&self, x: &DVector<f64>) -> DVector<f64> {
        match &self.dynamics {
            Dynamics::Linear(a) => x + a * x * self.dt,
            Dynamics::Nonlinear(f) => x + f(x) * self.dt,
        }
    }

    /// One stochastic step. Draws one normal per noise column, in order.
    pub fn propagate<R: Rng + ?Sized>(&self, x: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let mut next = self.advance_mean(x);
        let sdt = self.dt.sqrt();
        match &self.process_noise {
            ProcessNoise::Zero => {}
            ProcessNoise::Diagonal(g) => {
                for i in 0..self.dim_state {
                    let z: f64 = rng.sample(StandardNormal);
                    next[i] += sdt * g[i] * z;
                }
            }
            ProcessNoise::Dense(g) => {
                let xi = DVector::from_fn(g.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
                next += g * xi * sdt;
            }
        }
        next
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim_state, |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.x0_mean + &self.x0_sqrt * z
    }

    /// `(eta, tau)`: an observation-noise draw and the scale used, if any.
    pub fn sample_obs_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> (DVector<f64>, Option<f64>) {
        let z = DVector::from_fn(self.dim_obs, |_, _| rng.sample::<f64, _>(StandardNormal));
        let base = &self.obs_chol * z;
        match &self.obs_noise {
            ObsNoise::Gaussian(_) => (base, None),
            ObsNoise::Nig { params, .. } => {
                let tau = sample_scale_prior(params, rng);
                let shift = params.mu() + params.beta() * tau;
                (base * tau.sqrt() + DVector::from_element(self.dim_obs, shift), Some(tau))
            }
            ObsNoise::Contaminated { p_out, m_out, .. } => {
                let out = rng.gen::<f64>() < *p_out;
                let scale = if out { *m_out } else { 1.0 };
                (base * scale, Some(scale * scale))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `states[k]` is the state at `times[k]`, `k = 0..=n_steps`.
    pub states: Vec<DVector<f64>>,
    /// `(k, y_k)` sorted by step index.
    pub observations: Vec<(usize, DVector<f64>)>,
    /// Scale behind each observation (NIG `tau`, or the contamination variance factor).
    pub true_scales: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn observation_at(&self, k: usize) -> Option<&DVector<f64>> {
        self.observations
            .binary_search_by_key(&k, |(i, _)| *i)
            .ok()
            .map(|i| &self.observations[i].1)
    }

    /// Rows `t,x0..,y0..,tau`; observation and scale cells are empty between observations.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.states.first().map_or(0, |s| s.len());
        let m = self.observations.first().map_or(0, |(_, y)| y.len());
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend((0..n).map(|i| format!("x{i}")));
        header.extend((0..m).map(|i| format!("y{i}")));
        header.push("tau".into());
        w.write_record(&header)?;
        let mut obs = self.observations.iter().enumerate().peekable();
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let mut row = vec![t.to_string()];
            row.extend(x.iter().map(|v| v.to_string()));
            match obs.peek() {
                Some((j, (i, y))) if *i == k => {
                    row.extend(y.iter().map(|v| v.to_string()));
                    row.push(self.true_scales.as_ref().map_or(String::new(), |s| s[*j].to_string()));
                    obs.next();
                }
                _ => row.extend(std::iter::repeat(String::new()).take(m + 1)),
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulate `n_steps` steps from a draw of the initial law, observing every
/// `obs_every` steps (`k = obs_every, 2 obs_every, ...`).
///
/// Draw order: initial state, then per step the process noise followed, at
/// observation steps, by the observation noise.
pub fn simulate(m: &StateSpaceModel, n_steps: usize, obs_every: usize, rng: &mut RngStream) -> Result<Trajectory> {
    if obs_every == 0 {
        return Err(Error::Domain("obs_every must be >= 1".into()));
    }
    let mut x = m.sample_initial(rng);
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let mut observations = Vec::new();
    let mut scales = Vec::new();
    for k in 1..=n_steps {
        x = m.propagate(&x, rng);
        times.push(k as f64 * m.dt);
        states.push(x.clone());
        if k % obs_every == 0 {
            let (eta, tau) = m.sample_obs_noise(rng);
            observations.push((k, m.observe(&x) + eta));
            if let Some(t) = tau {
                scales.push(t);
            }
        }
    }
    let true_scales = (!scales.is_empty()).then_some(scales);
    Ok(Trajectory {
        times,
        states,
        observations,
        true_scales,
    })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutlierModelConfig {
    /// AR(1) coefficient `phi` in `x_{k+1} = phi x_k + q xi`.
    pub ar: f64,
    /// Process-noise standard deviation per step.
    pub q: f64,
    /// Nominal observation-noise standard deviation.
    pub r: f64,
    pub p_out: f64,
    pub m_out: f64,
}

impl Default for OutlierModelConfig {
    fn default() -> Self {
        Self {
            ar: 0.95,
            q: 0.05,
            r: 0.05,
            p_out: 0.1,
            m_out: 8.0,
        }
    }
}

/// Scalar AR(1) with contaminated-Gaussian observations, started from the
/// stationary law.
pub fn make_outlier_1d_model(cfg: &OutlierModelConfig) -> Result<StateSpaceModel> {
    if !(cfg.ar.abs() < 1.0) || !(cfg.q > 0.0) || !(cfg.r > 0.0) {
        return Err(Error::Domain("outlier model needs |ar| < 1, q > 0, r > 0".into()));
    }
    let stationary = cfg.q * cfg.q / (1.0 - cfg.ar * cfg.ar);
    StateSpaceModel::new(
        1.0,
        Dynamics::Linear(DMatrix::from_element(1, 1, cfg.ar - 1.0)),
        ProcessNoise::Diagonal(DVector::from_element(1, cfg.q)),
        ObsOperator::Dense(DMatrix::identity(1, 1)),
        ObsNoise::Contaminated {
            r: DMatrix::from_element(1, 1, cfg.r * cfg.r),
            p_out: cfg.p_out,
            m_out: cfg.m_out,
        },
        DVector::zeros(1),
        DMatrix::from_element(1, 1, stationary),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{mean, variance};
    use statrs::distribution::{ContinuousCDF, Normal};

    fn scalar(a: f64, g: f64, dt: f64, noise: ObsNoise) -> StateSpaceModel {
        StateSpaceModel::new(
            dt,
            Dynamics::Linear(DMatrix::from_element(1, 1, a)),
            if g == 0.0 {
                ProcessNoise::Zero
            } else {
                ProcessNoise::Diagonal(DVector::from_element(1, g))
            },
            ObsOperator::Dense(DMatrix::identity(1, 1)),
            noise,
            DVector::from_element(1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    fn gauss(r: f64) -> ObsNoise {
        ObsNoise::Gaussian(DMatrix::from_element(1, 1, r))
    }

    #[test]
    fn construction_checks_dimensions() {
        let r = DMatrix::identity(2, 2);
        let ok = StateSpaceModel::new(
            0.1,
            Dynamics::Linear(DMatrix::zeros(3, 3)),
            ProcessNoise::Dense(DMatrix::zeros(3, 1)),
            ObsOperator::Subsample(vec![0, 2]),
            ObsNoise::Gaussian(r.clone()),
            DVector::zeros(3),
            DMatrix::zeros(3, 3),
        );
        assert_eq!(ok.unwrap().dim_obs(), 2);
        let bad_h = StateSpaceModel::new(
            0.1,
            Dynamics::Linear(DMatrix::zeros(3, 3)),
            ProcessNoise::Zero,
            ObsOperator::Dense(DMatrix::zeros(2, 4)),
            ObsNoise::Gaussian(r.clone()),
            DVector::zeros(3),
            DMatrix::zeros(3, 3),
        );
        assert!(bad_h.is_err());
        let bad_idx = StateSpaceModel::new(
            0.1,
            Dynamics::Linear(DMatrix::zeros(3, 3)),
            ProcessNoise::Zero,
            ObsOperator::Subsample(vec![0, 3]),
            ObsNoise::Gaussian(r),
            DVector::zeros(3),
            DMatrix::zeros(3, 3),
        );
        assert!(bad_idx.is_err());
        let not_pd = StateSpaceModel::new(
            0.1,
            Dynamics::Linear(DMatrix::zeros(1, 1)),
            ProcessNoise::Zero,
            ObsOperator::Subsample(vec![0]),
            ObsNoise::Gaussian(DMatrix::zeros(1, 1)),
            DVector::zeros(1),
            DMatrix::zeros(1, 1),
        );
        assert!(not_pd.is_err());
        let nig_dense = StateSpaceModel::new(
            0.1,
            Dynamics::Linear(DMatrix::zeros(2, 2)),
            ProcessNoise::Zero,
            ObsOperator::Subsample(vec![0, 1]),
            ObsNoise::Nig {
                params: NigParams::new(2.0, 0.0, 0.0, 1.0).unwrap(),
                r: DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]),
            },
            DVector::zeros(2),
            DMatrix::zeros(2, 2),
        );
        assert!(nig_dense.is_err());
    }

    #[test]
    fn noiseless_linear_trajectory_is_exact() {
        let m = scalar(-0.3, 0.0, 0.1, gauss(1.0));
        let traj = simulate(&m, 50, 5, &mut RngStream::new(1, 0)).unwrap();
        let mut x = 1.0;
        for (k, s) in traj.states.iter().enumerate() {
            assert_eq!(s[0], x, "step {k}");
            x += -0.3 * x * 0.1;
        }
        assert_eq!(traj.observations.len(), 10);
        assert_eq!(traj.observations[0].0, 5);
        assert!(traj.true_scales.is_none());
    }

    #[test]
    fn increment_variance_is_dt_g_squared() {
        let (g, dt) = (0.7, 0.02);
        let m = scalar(0.0, g, dt, gauss(1.0));
        let traj = simulate(&m, 100_000, 1000, &mut RngStream::new(2, 0)).unwrap();
        let inc: Vec<f64> = traj.states.windows(2).map(|w| w[1][0] - w[0][0]).collect();
        let v = variance(&inc);
        let want = dt * g * g;
        // SE of a Gaussian sample variance: sqrt(2/(n-1)) sigma^2
        let se = (2.0 / (inc.len() as f64 - 1.0)).sqrt() * want;
        assert!((v - want).abs() < 3.0 * se, "{v} vs {want}");
    }

    #[test]
    fn nig_noise_has_excess_kurtosis() {
        let m = scalar(
            0.0,
            0.0,
            1.0,
            ObsNoise::Nig {
                params: NigParams::new(1.0, 0.0, 0.0, 1.0).unwrap(),
                r: DMatrix::from_element(1, 1, 1.0),
            },
        );
        let traj = simulate(&m, 100_000, 1, &mut RngStream::new(3, 0)).unwrap();
        let res: Vec<f64> = traj.observations.iter().map(|(k, y)| y[0] - traj.states[*k][0]).collect();
        let mu = mean(&res);
        let m2 = res.iter().map(|r| (r - mu).powi(2)).sum::<f64>() / res.len() as f64;
        let m4 = res.iter().map(|r| (r - mu).powi(4)).sum::<f64>() / res.len() as f64;
        let kurt = m4 / (m2 * m2);
        // Gaussian null: kurtosis 3 with SE sqrt(24/n) ~ 0.015; NIG(1, 0, 0, 1) has 6
        assert!(kurt > 3.0 + 5.0 * (24.0 / res.len() as f64).sqrt(), "{kurt}");
        assert_eq!(traj.true_scales.as_ref().unwrap().len(), 100_000);
    }

    #[test]
    fn outlier_model_without_outliers_is_gaussian() {
        let cfg = OutlierModelConfig {
            p_out: 0.0,
            ..Default::default()
        };
        let m = make_outlier_1d_model(&cfg).unwrap();
        let traj = simulate(&m, 2000, 1, &mut RngStream::new(4, 0)).unwrap();
        assert!(traj.true_scales.unwrap().iter().all(|&s| s == 1.0));
    }

    #[test]
    fn outlier_fraction_matches_contamination() {
        let cfg = OutlierModelConfig {
            p_out: 0.1,
            m_out: 10.0,
            ..Default::default()
        };
        let m = make_outlier_1d_model(&cfg).unwrap();
        let traj = simulate(&m, 10_000, 1, &mut RngStream::new(5, 0)).unwrap();
        let exceed = traj
            .observations
            .iter()
            .filter(|(k, y)| (y[0] - traj.states[*k][0]).abs() > 3.0 * cfg.r)
            .count() as f64
            / 10_000.0;
        let z = Normal::new(0.0, 1.0).unwrap();
        let tail = |c: f64| 2.0 * (1.0 - z.cdf(c));
        let p = 0.9 * tail(3.0) + 0.1 * tail(0.3);
        let se = (p * (1.0 - p) / 10_000.0).sqrt();
        assert!((exceed - p).abs() < 3.0 * se, "{exceed} vs {p}");
    }

    #[test]
    fn simulation_is_reproducible() {
        let m = make_outlier_1d_model(&OutlierModelConfig::default()).unwrap();
        let a = simulate(&m, 300, 1, &mut RngStream::new(9, 1)).unwrap();
        let b = simulate(&m, 300, 1, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&m, 300, 1, &mut RngStream::new(9, 2)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subsample_and_dense_operators_agree() {
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let m = StateSpaceModel::new(
            1.0,
            Dynamics::Linear(DMatrix::zeros(3, 3)),
            ProcessNoise::Zero,
            ObsOperator::Subsample(vec![2, 0]),
            ObsNoise::Gaussian(DMatrix::identity(2, 2)),
            DVector::zeros(3),
            DMatrix::zeros(3, 3),
        )
        .unwrap();
        assert_eq!(m.observe(&x), m.h_matrix() * &x);
        assert_eq!(m.observe(&x), DVector::from_vec(vec![3.0, 1.0]));
    }

    #[test]
    fn trajectory_csv_layout() {
        let m = make_outlier_1d_model(&OutlierModelConfig::default()).unwrap();
        let traj = simulate(&m, 4, 2, &mut RngStream::new(1, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        traj.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x0,y0,tau");
        assert_eq!(lines.len(), 6);
        assert!(lines[2].ends_with(",,"));
        assert!(!lines[3].ends_with(','));
    }
}
