//! Monte Carlo solvers for linear parabolic problems on the plane.
//!
//! Pure diffusion uses the heat-kernel representation directly: the solution at
//! `x` is `E[w0(x + sqrt(2 nu t) Z)]`. With a drift, the backward characteristic
//! `dX = -u(X, t - s) ds + sqrt(2 nu) dW`, `X_0 = x`, is integrated forward in `s`
//! to `s = t` by Euler-Maruyama and `w0(X_t)` is averaged.
//!
//! Query point `q` draws from `RngStream::new(rng_seed, q)`, so results do not
//! depend on how the points are scheduled across threads.

use crate::error::{Error, Result};
use crate::stochastics::RngStream;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub nu: f64,
    pub rng_seed: u64,
}

impl McConfig {
    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 || !(self.dt > 0.0) || !(self.nu >= 0.0) {
            return Err(Error::Domain(format!(
                "Monte Carlo config needs n_paths >= 1, dt > 0, nu >= 0 (got {}, {}, {})",
                self.n_paths, self.dt, self.nu
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Mean and standard error, accumulated relative to the first sample so a
/// constant integrand returns that constant exactly with zero error.
struct Accumulator {
    shift: Option<f64>,
    sum: f64,
    sum_sq: f64,
    count: usize,
}

impl Accumulator {
    fn new() -> Self {
        Self {
            shift: None,
            sum: 0.0,
            sum_sq: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, v: f64) {
        let shift = *self.shift.get_or_insert(v);
        let d = v - shift;
        self.sum += d;
        self.sum_sq += d * d;
        self.count += 1;
    }

    fn finish(self) -> McEstimate {
        let n = self.count as f64;
        let shift = self.shift.unwrap_or(0.0);
        let mean_d = self.sum / n;
        let var = if self.count > 1 {
            ((self.sum_sq - n * mean_d * mean_d) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            value: shift + mean_d,
            std_error: (var / n).sqrt(),
        }
    }
}

/// Heat equation `w_t = nu lap w` by exact one-shot Gaussian sampling.
pub fn heat_mc_solve<F>(w0: &F, t: f64, query: &[(f64, f64)], cfg: &McConfig) -> Result<Vec<McEstimate>>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("heat_mc_solve needs t > 0, got {t}")));
    }
    let sd = (2.0 * cfg.nu * t).sqrt();
    Ok(query
        .par_iter()
        .enumerate()
        .map(|(q, &(x, y))| {
            let mut rng = RngStream::new(cfg.rng_seed, q as u64);
            let mut acc = Accumulator::new();
            for _ in 0..cfg.n_paths {
                let zx: f64 = rng.sample(StandardNormal);
                let zy: f64 = rng.sample(StandardNormal);
                acc.push(w0(x + sd * zx, y + sd * zy));
            }
            acc.finish()
        })
        .collect())
}

/// Advection-diffusion `w_t + u . grad w = nu lap w` along stochastic
/// characteristics. `drift(x, y, s)` is the velocity at physical time `s`.
pub fn advect_diffuse_mc<F, U>(
    w0: &F,
    drift: &U,
    t: f64,
    query: &[(f64, f64)],
    cfg: &McConfig,
) -> Result<Vec<McEstimate>>
where
    F: Fn(f64, f64) -> f64 + Sync,
    U: Fn(f64, f64, f64) -> (f64, f64) + Sync,
{
    cfg.validate()?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("advect_diffuse_mc needs t > 0, got {t}")));
    }
    let steps = (t / cfg.dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let kick = (2.0 * cfg.nu * h).sqrt();
    Ok(query
        .par_iter()
        .enumerate()
        .map(|(q, &(x0, y0))| {
            let mut rng = RngStream::new(cfg.rng_seed, q as u64);
            let mut acc = Accumulator::new();
            for _ in 0..cfg.n_paths {
                let (mut x, mut y) = (x0, y0);
                for k in 0..steps {
                    let (u, v) = drift(x, y, t - k as f64 * h);
                    x -= u * h;
                    y -= v * h;
                    if kick > 0.0 {
                        let zx: f64 = rng.sample(StandardNormal);
                        let zy: f64 = rng.sample(StandardNormal);
                        x += kick * zx;
                        y += kick * zy;
                    }
                }
                acc.push(w0(x, y));
            }
            acc.finish()
        })
        .collect())
}
