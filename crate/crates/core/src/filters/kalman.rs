use super::{gaussian_logpdf, GaussianBelief};
use crate::error::{Error, Result};
use crate::ssm::StateSpaceModel;
use nalgebra::{DMatrix, DVector};

/// `N(M m, M P M^T + Q)`.
pub fn kalman_predict(b: &GaussianBelief, m: &StateSpaceModel) -> Result<GaussianBelief> {
    let mm = m.require_transition()?;
    let cov = &mm * &b.cov * mm.transpose() + m.process_cov();
    let cov = 0.5 * (&cov + cov.transpose());
    Ok(GaussianBelief {
        mean: &mm * &b.mean,
        cov,
    })
}

#[derive(Clone, Debug)]
pub struct KalmanUpdate {
    pub belief: GaussianBelief,
    /// `ln N(y; H m + shift, H P H^T + R)` under the prior belief.
    pub log_likelihood: f64,
}

/// Conditioning on `y = H x + shift + eta`, `eta ~ N(0, R)`, with the Joseph-form
/// covariance update.
pub fn kalman_update(
    b: &GaussianBelief,
    h: &DMatrix<f64>,
    r: &DMatrix<f64>,
    y: &DVector<f64>,
    shift: &DVector<f64>,
) -> Result<KalmanUpdate> {
    let e = y - h * &b.mean - shift;
    let ph = &b.cov * h.transpose();
    let s = h * &ph + r;
    let s = 0.5 * (&s + s.transpose());
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("singular innovation covariance".into()))?;
    let k = chol.solve(&ph.transpose()).transpose();
    let n = b.dim();
    let ikh = DMatrix::identity(n, n) - &k * h;
    let cov = &ikh * &b.cov * ikh.transpose() + &k * r * k.transpose();
    let cov = 0.5 * (&cov + cov.transpose());
    Ok(KalmanUpdate {
        log_likelihood: gaussian_logpdf(&e, &s)?,
        belief: GaussianBelief {
            mean: &b.mean + &k * e,
            cov,
        },
    })
}

/// Predict, then update with `y` under the model's base observation covariance.
pub fn kalman_step(b: &GaussianBelief, m: &StateSpaceModel, y: Option<&DVector<f64>>) -> Result<GaussianBelief> {
    let pred = kalman_predict(b, m)?;
    match y {
        None => Ok(pred),
        Some(y) => {
            let shift = DVector::zeros(m.dim_obs());
            Ok(kalman_update(&pred, &m.h_matrix(), m.obs_noise().base_cov(), y, &shift)?.belief)
        }
    }
}
