use super::Ensemble;
use crate::error::{Error, Result};
use crate::ssm::{ObsNoise, StateSpaceModel};
use crate::stochastics::{posterior_scale_shared, sample_gig, sample_scale_prior, RngStream};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Schur-product localization with the Gaspari-Cohn taper of half-width `radius`
/// (support `2 radius`). `coords[i]` is the position of state component `i`;
/// with `period` set, every coordinate wraps with that period.
#[derive(Clone, Debug)]
pub struct LocalizationSpec {
    pub radius: f64,
    pub coords: Vec<Vec<f64>>,
    pub period: Option<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct InflationSpec {
    lambda_inf: f64,
}

impl InflationSpec {
    pub fn new(lambda_inf: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&lambda_inf) {
            return Err(Error::Domain(format!("inflation must lie in [1, 2], got {lambda_inf}")));
        }
        Ok(Self { lambda_inf })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_inf
    }
}

/// Gaspari-Cohn fifth-order piecewise rational correlation, `c` the half-width.
pub fn gaspari_cohn(d: f64, c: f64) -> f64 {
    let r = d.abs() / c;
    if r <= 1.0 {
        ((((-0.25 * r + 0.5) * r + 0.625) * r - 5.0 / 3.0) * r * r) + 1.0
    } else if r < 2.0 {
        (((((r / 12.0 - 0.5) * r + 0.625) * r + 5.0 / 3.0) * r - 5.0) * r) + 4.0 - 2.0 / (3.0 * r)
    } else {
        0.0
    }
}

pub fn taper_matrix(loc: &LocalizationSpec) -> DMatrix<f64> {
    let n = loc.coords.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = loc.coords[i]
            .iter()
            .zip(&loc.coords[j])
            .map(|(a, b)| {
                let mut d = (a - b).abs();
                if let Some(p) = loc.period {
                    d = d.rem_euclid(p);
                    d = d.min(p - d);
                }
                d * d
            })
            .sum();
        gaspari_cohn(d2.sqrt(), loc.radius)
    })
}

/// Where the SM-EnKF takes its observation scale from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScaleSource {
    /// Draw from the GIG conditional given the ensemble-mean innovation.
    Conditional,
    /// Draw from the inverse-Gaussian prior.
    Prior,
    /// Use this value; consumes no randomness.
    Fixed(f64),
}

fn forecast(e: &Ensemble, m: &StateSpaceModel, inf: Option<&InflationSpec>, rng: &mut RngStream) -> Result<Ensemble> {
    if e.members.nrows() != m.dim_state() {
        return Err(Error::Domain("ensemble dimension does not match model".into()));
    }
    let key = rng.next_u64();
    let cols: Vec<DVector<f64>> = (0..e.size())
        .into_par_iter()
        .map(|j| {
            let mut r = RngStream::new(key, j as u64);
            m.propagate(&e.members.column(j).into_owned(), &mut r)
        })
        .collect();
    let mut out = Ensemble::new(DMatrix::from_columns(&cols))?;
    if let Some(inf) = inf {
        let mean = out.mean();
        for mut c in out.members.column_iter_mut() {
            let a = (&c - &mean) * inf.lambda();
            c.copy_from(&(&mean + a));
        }
    }
    Ok(out)
}

/// Perturbed-observation analysis with covariance `tau R` and mean shift `shift`.
/// Member `j` perturbs with `RngStream::new(key, j)` for one fresh key.
fn analysis(
    f: &Ensemble,
    m: &StateSpaceModel,
    y: &DVector<f64>,
    tau: f64,
    shift: &DVector<f64>,
    loc: Option<&LocalizationSpec>,
    rng: &mut RngStream,
) -> Result<Ensemble> {
    let h = m.h_matrix();
    let r = m.obs_noise().base_cov();
    let mut p = f.cov();
    if let Some(loc) = loc {
        if loc.coords.len() != m.dim_state() {
            return Err(Error::Domain("localization coordinates do not match the state".into()));
        }
        p.component_mul_assign(&taper_matrix(loc));
    }
    let ph = &p * h.transpose();
    let s = &h * &ph + r * tau;
    let chol = s
        .cholesky()
        .ok_or_else(|| Error::Numerical("singular EnKF innovation covariance".into()))?;
    let k = chol.solve(&ph.transpose()).transpose();
    let r_chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("observation covariance is not positive definite".into()))?
        .l();
    let sqrt_tau = tau.sqrt();
    let key = rng.next_u64();
    let cols: Vec<DVector<f64>> = (0..f.size())
        .into_par_iter()
        .map(|j| {
            let mut rj = RngStream::new(key, j as u64);
            let z = DVector::from_fn(m.dim_obs(), |_, _| rj.sample::<f64, _>(StandardNormal));
            let eta = &r_chol * z * sqrt_tau;
            let x = f.members.column(j);
            let innov = y + eta - &h * x - shift;
            x + &k * innov
        })
        .collect();
    Ensemble::new(DMatrix::from_columns(&cols))
}

/// Stochastic EnKF step: forecast, inflate, then (with `y`) a perturbed-observation
/// analysis under the base covariance `R`.
///
/// Draw order: one key for the forecast, then one key for the perturbations.
pub fn enkf_step(
    e: &Ensemble,
    m: &StateSpaceModel,
    y: Option<&DVector<f64>>,
    loc: Option<&LocalizationSpec>,
    inf: Option<&InflationSpec>,
    rng: &mut RngStream,
) -> Result<Ensemble> {
    let f = forecast(e, m, inf, rng)?;
    match y {
        None => Ok(f),
        Some(y) => analysis(&f, m, y, 1.0, &DVector::zeros(m.dim_obs()), loc, rng),
    }
}

/// Scale-mixture EnKF: one global scale `tau` per analysis, then the EnKF
/// analysis with `tau R` and shift `mu + beta tau`. Returns the scale used.
///
/// Draw order: forecast key, the scale draw (not for `Fixed`), perturbation key,
/// so a fixed unit scale with `mu = beta = 0` reproduces [`enkf_step`] exactly.
pub fn sm_enkf_step(
    e: &Ensemble,
    m: &StateSpaceModel,
    y: Option<&DVector<f64>>,
    loc: Option<&LocalizationSpec>,
    inf: Option<&InflationSpec>,
    source: ScaleSource,
    rng: &mut RngStream,
) -> Result<(Ensemble, Option<f64>)> {
    let ObsNoise::Nig { params, r } = m.obs_noise() else {
        return Err(Error::Domain("SM-EnKF requires NIG observation noise".into()));
    };
    let f = forecast(e, m, inf, rng)?;
    let Some(y) = y else {
        return Ok((f, None));
    };
    let tau = match source {
        ScaleSource::Fixed(t) if t > 0.0 => t,
        ScaleSource::Fixed(t) => return Err(Error::Domain(format!("fixed scale must be > 0, got {t}"))),
        ScaleSource::Prior => sample_scale_prior(params, rng),
        ScaleSource::Conditional => {
            let innov = y - m.observe(&f.mean());
            let rdiag: Vec<f64> = r.diagonal().iter().copied().collect();
            let residuals: Vec<f64> = innov.iter().copied().collect();
            sample_gig(&posterior_scale_shared(&residuals, params, &rdiag)?, rng)?
        }
    };
    let shift = DVector::from_element(m.dim_obs(), params.mu() + params.beta() * tau);
    Ok((analysis(&f, m, y, tau, &shift, loc, rng)?, Some(tau)))
}
