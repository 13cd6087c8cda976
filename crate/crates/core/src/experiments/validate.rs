//! Oracle checks for the solvers and the distribution layer, collected into a
//! pass/fail table.

use super::config::ValidateConfig;
use super::io::ValidationRow;
use crate::error::Result;
use crate::filters::{enkf_step, kalman_step, Ensemble, GaussianBelief};
use crate::mc_pde::{heat_mc_solve, McConfig};
use crate::spectral2d::{lamb_oseen_rel_error, Grid2d, SolverParams, Spectral2d};
use crate::ssm::{Dynamics, ObsNoise, ObsOperator, ProcessNoise, StateSpaceModel};
use crate::stochastics::{nig_logpdf, nig_mean_var, nig_sample, NigParams, RngStream};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::{PI, TAU};

/// Relative L2 error at `t = 0.75` of the spectral solution started from the
/// analytic vortex (`Gamma = 1`, `nu = 0.01`) at `t = 0.25` with `dt = 1e-3`.
pub fn lamb_oseen_error(n: usize) -> Result<f64> {
    let (gamma, nu, t0, t1, dt) = (1.0, 0.01, 0.25, 0.75, 1e-3);
    let s = Spectral2d::new(Grid2d::periodic(n)?);
    let ctr = (PI, PI);
    let mut w = s.lamb_oseen(gamma, nu, t0, ctr)?;
    let p = SolverParams::unforced(nu, dt);
    let mut rng = RngStream::new(0, 0);
    for _ in 0..((t1 - t0) / dt).round() as usize {
        w = s.step(&w, &p, &mut rng)?;
    }
    Ok(lamb_oseen_rel_error(s.grid(), &s.inverse(&w), gamma, nu, t1, ctr))
}

fn blob(x: f64, y: f64) -> f64 {
    (-(x * x + y * y) / (2.0 * 0.5)).exp()
}

fn blob_exact(nu: f64, t: f64, x: f64, y: f64) -> f64 {
    let v = 0.5 + 2.0 * nu * t;
    0.5 / v * (-(x * x + y * y) / (2.0 * v)).exp()
}

/// `sqrt(RMSE(N) / RMSE(4N))` of the heat-kernel Monte Carlo solution of a
/// Gaussian blob, pooled over 20 seeds and 16 query points. Ideal: `sqrt 2`.
pub fn heat_mc_doubling_factor(n_paths: usize, seed: u64) -> Result<f64> {
    let (nu, t) = (0.1, 1.0);
    let q: Vec<(f64, f64)> = (0..16)
        .map(|i| {
            let th = i as f64 * TAU / 16.0;
            let r = 1.5 * (0.2 + 0.8 * (i % 4) as f64 / 3.0);
            (r * th.cos(), r * th.sin())
        })
        .collect();
    let rmse = |paths: usize| -> Result<f64> {
        let mut sq = 0.0;
        for s in 0..20 {
            let cfg = McConfig {
                n_paths: paths,
                dt: 1e-2,
                nu,
                rng_seed: seed.wrapping_mul(1000).wrapping_add(s),
            };
            for (e, &(x, y)) in heat_mc_solve(&blob, t, &q, &cfg)?.iter().zip(&q) {
                sq += (e.value - blob_exact(nu, t, x, y)).powi(2);
            }
        }
        Ok((sq / (20 * q.len()) as f64).sqrt())
    };
    Ok((rmse(n_paths)? / rmse(4 * n_paths)?).sqrt())
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of the NIG density over `mu +- 60 / (alpha - |beta|)`.
pub fn nig_total_mass(p: &NigParams) -> f64 {
    let half = 60.0 / (p.alpha() - p.beta().abs()) + 20.0 * p.delta();
    let f = |x: f64| nig_logpdf(x, p).exp();
    // Split at the location so the peak is a panel boundary.
    let mut total = 0.0;
    for (a, b) in [(p.mu() - half, p.mu()), (p.mu(), p.mu() + half)] {
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson(&f, a, b, fa, fm, fb, whole, 1e-13, 50);
    }
    total
}

/// Sample mean and variance of `draws` NIG variates as z-scores against the
/// closed-form moments.
pub fn nig_moment_zscores(p: &NigParams, draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = RngStream::new(seed, 0);
    let xs: Vec<f64> = (0..draws).map(|_| nig_sample(p, &mut rng)).collect();
    let n = draws as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let c2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let c4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    let (m, v) = nig_mean_var(p);
    let var = c2 * n / (n - 1.0);
    ((mean - m) / (c2 / n).sqrt(), (var - v) / ((c4 - c2 * c2) / n).sqrt())
}

/// Relative differences `(mean, variance)` between one EnKF analysis and the
/// Kalman analysis on a scalar AR(1) model.
pub fn enkf_kalman_gap(members: usize, seed: u64) -> Result<(f64, f64)> {
    let m = StateSpaceModel::new(
        1.0,
        Dynamics::Linear(DMatrix::from_element(1, 1, -0.1)),
        ProcessNoise::Diagonal(DVector::from_element(1, 0.3)),
        ObsOperator::Dense(DMatrix::identity(1, 1)),
        ObsNoise::Gaussian(DMatrix::from_element(1, 1, 0.4)),
        DVector::from_element(1, 1.0),
        DMatrix::from_element(1, 1, 0.5),
    )?;
    let b = GaussianBelief::new(m.x0_mean().clone(), m.x0_cov().clone())?;
    let y = DVector::from_element(1, 1.6);
    let mut rng = RngStream::new(seed, 0);
    let e = Ensemble::sample(&b, members, &mut rng)?;
    let a = enkf_step(&e, &m, Some(&y), None, None, &mut rng)?;
    let k = kalman_step(&b, &m, Some(&y))?;
    Ok((
        (a.mean()[0] - k.mean[0]).abs() / k.mean[0].abs(),
        (a.cov()[(0, 0)] - k.cov[(0, 0)]).abs() / k.cov[(0, 0)],
    ))
}

fn row(check: impl Into<String>, value: f64, threshold: &str, pass: bool) -> ValidationRow {
    ValidationRow {
        check: check.into(),
        value,
        threshold: threshold.into(),
        pass,
    }
}

pub fn run_validation(cfg: &ValidateConfig, seed: u64) -> Result<Vec<ValidationRow>> {
    let mut rows = Vec::new();

    let mut errs = Vec::new();
    for &n in &cfg.lamb_oseen_n {
        let e = lamb_oseen_error(n)?;
        log::info!("Lamb-Oseen n = {n}: {e:.6e}");
        let (th, pass) = if n >= 128 { ("< 1e-3", e < 1e-3) } else { ("finite", e.is_finite()) };
        rows.push(row(format!("lamb_oseen_error_n{n}"), e, th, pass));
        errs.push(e);
    }
    for (i, w) in errs.windows(2).enumerate() {
        let (a, b) = (cfg.lamb_oseen_n[i], cfg.lamb_oseen_n[i + 1]);
        rows.push(row(format!("lamb_oseen_ratio_n{b}_over_n{a}"), w[1] / w[0], "< 1", w[1] < w[0]));
    }

    let f = heat_mc_doubling_factor(cfg.heat_paths, seed)?;
    rows.push(row("heat_mc_doubling_factor", f, "in [1.3, 1.7]", (1.3..=1.7).contains(&f)));

    let p = NigParams::new(2.0, 0.5, 0.3, 1.2)?;
    let mass = nig_total_mass(&p);
    rows.push(row("nig_total_mass", mass, "|1 - x| < 1e-6", (mass - 1.0).abs() < 1e-6));
    let (zm, zv) = nig_moment_zscores(&p, cfg.nig_draws, seed);
    rows.push(row("nig_mean_zscore", zm, "|x| < 3", zm.abs() < 3.0));
    rows.push(row("nig_variance_zscore", zv, "|x| < 3", zv.abs() < 3.0));

    let (dm, dv) = enkf_kalman_gap(cfg.enkf_members, seed)?;
    rows.push(row("enkf_kf_rel_mean_gap", dm, "< 0.03", dm < 0.03));
    rows.push(row("enkf_kf_rel_var_gap", dv, "< 0.03", dv < 0.03));
    Ok(rows)
}
