use super::GaussianBelief;
use crate::error::{Error, Result};
use crate::ssm::StateSpaceModel;
use nalgebra::{DMatrix, DVector};
use std::ops::AddAssign;

/// Solution of one assimilation window over steps `0..=L`.
#[derive(Clone, Debug)]
pub struct FourDVarEstimate {
    /// MAP state and marginal posterior covariance at each step of the window.
    pub states: Vec<GaussianBelief>,
    /// Cost at the minimizer (without the `1/2` factor).
    pub cost: f64,
}

impl FourDVarEstimate {
    pub fn last(&self) -> &GaussianBelief {
        self.states.last().expect("window is never empty")
    }
}

fn spd_inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    a.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// Linear-Gaussian 4DVar over one window.
///
/// The background belief constrains `x_0`; `obs[k-1]` observes `x_k` for
/// `k = 1..=L`. When the model has process noise the window is solved in weak
/// constraint form over all `x_0..x_L`; without it the trajectory is tied to
/// `x_0` by the dynamics. Both are solved exactly through the normal equations,
/// so the window-end MAP and covariance equal the Kalman filter's.
pub fn windowed_4dvar(
    m: &StateSpaceModel,
    background: &GaussianBelief,
    obs: &[Option<DVector<f64>>],
) -> Result<FourDVarEstimate> {
    let n = m.dim_state();
    if background.dim() != n {
        return Err(Error::Domain("background dimension does not match model".into()));
    }
    let mm = m.require_transition()?;
    let h = m.h_matrix();
    let r_inv = spd_inverse(m.obs_noise().base_cov(), "observation covariance")?;
    let b_inv = spd_inverse(&background.cov, "background covariance")?;
    let q = m.process_cov();
    let l = obs.len();

    if q.amax() == 0.0 {
        // Strong constraint: x_k = M^k x_0.
        let mut info = b_inv.clone();
        let mut rhs = &b_inv * &background.mean;
        let mut prop = vec![DMatrix::identity(n, n)];
        for y in obs {
            let mk = &mm * prop.last().unwrap();
            if let Some(y) = y {
                let g = &h * &mk;
                info += g.transpose() * &r_inv * &g;
                rhs += g.transpose() * &r_inv * y;
            }
            prop.push(mk);
        }
        let chol = info
            .cholesky()
            .ok_or_else(|| Error::Numerical("4DVar Hessian is not positive definite".into()))?;
        let x0 = chol.solve(&rhs);
        let a_inv = chol.inverse();
        let states = prop
            .iter()
            .map(|mk| {
                let cov = mk * &a_inv * mk.transpose();
                GaussianBelief {
                    mean: mk * &x0,
                    cov: 0.5 * (&cov + cov.transpose()),
                }
            })
            .collect::<Vec<_>>();
        let cost = window_cost(&states, background, &b_inv, &h, &r_inv, obs, None, &mm);
        return Ok(FourDVarEstimate { states, cost });
    }

    // Weak constraint: unknowns (x_0, .., x_L) stacked.
    let q_inv = spd_inverse(&q, "process-noise covariance")?;
    let dim = n * (l + 1);
    let mut info = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    info.view_mut((0, 0), (n, n)).add_assign(&b_inv);
    rhs.rows_mut(0, n).add_assign(&(&b_inv * &background.mean));
    let mtq = mm.transpose() * &q_inv;
    let mtqm = &mtq * &mm;
    for k in 1..=l {
        let (a, b) = ((k - 1) * n, k * n);
        // (x_k - M x_{k-1})^T Q^-1 (x_k - M x_{k-1})
        info.view_mut((a, a), (n, n)).add_assign(&mtqm);
        info.view_mut((b, b), (n, n)).add_assign(&q_inv);
        info.view_mut((a, b), (n, n)).add_assign(&(-&mtq));
        info.view_mut((b, a), (n, n)).add_assign(&(-mtq.transpose()));
        if let Some(y) = &obs[k - 1] {
            let ht = h.transpose() * &r_inv;
            info.view_mut((b, b), (n, n)).add_assign(&(&ht * &h));
            rhs.rows_mut(b, n).add_assign(&(&ht * y));
        }
    }
    let chol = info
        .cholesky()
        .ok_or_else(|| Error::Numerical("4DVar Hessian is not positive definite".into()))?;
    let x = chol.solve(&rhs);
    let cov = chol.inverse();
    let states = (0..=l)
        .map(|k| {
            let c = cov.view((k * n, k * n), (n, n)).into_owned();
            GaussianBelief {
                mean: x.rows(k * n, n).into_owned(),
                cov: 0.5 * (&c + c.transpose()),
            }
        })
        .collect::<Vec<_>>();
    let cost = window_cost(&states, background, &b_inv, &h, &r_inv, obs, Some(&q_inv), &mm);
    Ok(FourDVarEstimate { states, cost })
}

#[allow(clippy::too_many_arguments)]
fn window_cost(
    states: &[GaussianBelief],
    bg: &GaussianBelief,
    b_inv: &DMatrix<f64>,
    h: &DMatrix<f64>,
    r_inv: &DMatrix<f64>,
    obs: &[Option<DVector<f64>>],
    q_inv: Option<&DMatrix<f64>>,
    mm: &DMatrix<f64>,
) -> f64 {
    let d = &states[0].mean - &bg.mean;
    let mut j = d.dot(&(b_inv * &d));
    for (k, y) in obs.iter().enumerate() {
        let x = &states[k + 1].mean;
        if let Some(y) = y {
            let e = y - h * x;
            j += e.dot(&(r_inv * &e));
        }
        if let Some(qi) = q_inv {
            let w = x - mm * &states[k].mean;
            j += w.dot(&(qi * &w));
        }
    }
    j
}

/// Consecutive non-overlapping windows of `window` steps. The background
/// covariance stays fixed; the background mean of each window is the previous
/// window's MAP at its last step.
#[derive(Clone, Debug)]
pub struct SlidingFourDVar {
    b_cov: DMatrix<f64>,
    mean: DVector<f64>,
    window: usize,
    pending: Vec<Option<DVector<f64>>>,
}

impl SlidingFourDVar {
    pub fn new(background: &GaussianBelief, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::Domain("4DVar window must be >= 1 step".into()));
        }
        Ok(Self {
            b_cov: background.cov.clone(),
            mean: background.mean.clone(),
            window,
            pending: Vec::with_capacity(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Record the next step's observation. When a window fills, solve it and
    /// return the estimate for its steps `0..=window`.
    pub fn push(&mut self, m: &StateSpaceModel, y: Option<DVector<f64>>) -> Result<Option<FourDVarEstimate>> {
        self.pending.push(y);
        if self.pending.len() < self.window {
            return Ok(None);
        }
        let bg = GaussianBelief {
            mean: self.mean.clone(),
            cov: self.b_cov.clone(),
        };
        let est = windowed_4dvar(m, &bg, &self.pending)?;
        self.mean = est.last().mean.clone();
        self.pending.clear();
        Ok(Some(est))
    }

    /// Solve the partially filled final window, if any.
    pub fn flush(&mut self, m: &StateSpaceModel) -> Result<Option<FourDVarEstimate>> {
        if self.pending.is_empty() {
            return Ok(None);
        }
        let bg = GaussianBelief {
            mean: self.mean.clone(),
            cov: self.b_cov.clone(),
        };
        let est = windowed_4dvar(m, &bg, &self.pending)?;
        self.mean = est.last().mean.clone();
        self.pending.clear();
        Ok(Some(est))
    }
}
