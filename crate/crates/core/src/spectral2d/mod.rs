//! Pseudo-spectral solver for the 2D vorticity equation on the periodic torus.
//!
//! # Normalization
//!
//! A physical field `w` sampled on the `n x n` grid `x_i = i L/n`, `y_j = j L/n` has
//! coefficients `w_hat(k) = n^-2 sum_{i,j} w(x_i, y_j) exp(-i k.x)`, so that
//! `w(x) = sum_k w_hat(k) exp(i k.x)` and Parseval reads `mean(w^2) = sum_k |w_hat(k)|^2`.
//! Physical wavenumbers are `k = (2 pi / L) * (integer index)`. All diagnostics are
//! domain averages under this convention: `energy = 1/2 sum |u_hat|^2 + |v_hat|^2`,
//! `enstrophy = 1/2 sum |w_hat|^2`.
//!
//! # Storage
//!
//! Row-major `n x n`: physical value `(x_i, y_j)` lives at `j * n + i`, and the
//! coefficient with integer wavenumber `(kx, ky)` at `iy * n + ix` with
//! `ix = kx mod n`, `iy = ky mod n`. The unpaired Nyquist row and column
//! (`kx = -n/2` or `ky = -n/2`) are always zero.

mod field;
mod lamb_oseen;
mod snapshot;

pub use field::{Grid2d, SpectralField2d};
pub use lamb_oseen::{lamb_oseen_azimuthal_velocity, lamb_oseen_physical, lamb_oseen_rel_error};
pub use snapshot::{read_snapshot_csv, write_snapshot_csv, Snapshot};

use crate::error::{Error, Result};
use crate::stochastics::RngStream;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// How the advection term is evaluated in [`Spectral2d::step`].
#[derive(Clone, Debug, Default)]
pub enum Advection {
    /// `-(u . grad) w` with `u` recovered from `w` itself.
    #[default]
    Nonlinear,
    /// No advection: linear diffusion with forcing and noise only.
    Off,
    /// `-(u . grad) w` with a steady prescribed velocity (physical-space arrays).
    Prescribed(Arc<PrescribedDrift>),
}

#[derive(Clone, Debug)]
pub struct PrescribedDrift {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SolverParams {
    pub nu: f64,
    pub dt: f64,
    pub forcing_amplitude: f64,
    /// Integer wavenumber annulus `[k_lo, k_hi]` for forcing and noise.
    pub forcing_band: (usize, usize),
    pub noise_amplitude: f64,
    pub dealias: bool,
    pub advection: Advection,
}

impl SolverParams {
    /// Unforced, noise-free, dealiased nonlinear dynamics.
    pub fn unforced(nu: f64, dt: f64) -> Self {
        Self {
            nu,
            dt,
            forcing_amplitude: 0.0,
            forcing_band: (0, 0),
            noise_amplitude: 0.0,
            dealias: true,
            advection: Advection::Nonlinear,
        }
    }

    pub fn validate(&self, grid: &Grid2d) -> Result<()> {
        if !(self.nu >= 0.0) || !(self.dt > 0.0) {
            return Err(Error::Domain(format!(
                "solver requires nu >= 0 and dt > 0, got nu = {}, dt = {}",
                self.nu, self.dt
            )));
        }
        if !(self.forcing_amplitude >= 0.0) || !(self.noise_amplitude >= 0.0) {
            return Err(Error::Domain("forcing and noise amplitudes must be >= 0".into()));
        }
        let (lo, hi) = self.forcing_band;
        if (self.forcing_amplitude > 0.0 || self.noise_amplitude > 0.0) && !(lo <= hi && hi <= grid.k_max()) {
            return Err(Error::Domain(format!(
                "forcing band [{lo}, {hi}] must satisfy k_lo <= k_hi <= k_max = {}",
                grid.k_max()
            )));
        }
        if let Advection::Prescribed(d) = &self.advection {
            let len = grid.n() * grid.n();
            if d.u.len() != len || d.v.len() != len {
                return Err(Error::Domain("prescribed drift does not match the grid".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowDiagnostics {
    pub energy: f64,
    pub enstrophy: f64,
}

/// Solver context: FFT plans and wavenumber tables for one grid.
///
/// Every method is a pure function of its arguments; a context can be shared
/// across threads.
#[derive(Clone)]
pub struct Spectral2d {
    grid: Grid2d,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kx: Vec<f64>,
    ky: Vec<f64>,
    k2: Vec<f64>,
    keep: Vec<bool>,
    dealias_keep: Vec<bool>,
}

impl std::fmt::Debug for Spectral2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral2d").field("grid", &self.grid).finish()
    }
}

impl Spectral2d {
    pub fn new(grid: Grid2d) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scale = grid.wavenumber_scale();
        let cutoff = n as f64 / 3.0;
        let mut kx = vec![0.0; n * n];
        let mut ky = vec![0.0; n * n];
        let mut k2 = vec![0.0; n * n];
        let mut keep = vec![false; n * n];
        let mut dealias_keep = vec![false; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let idx = iy * n + ix;
                let (ikx, iky) = (grid.wavenumber(ix), grid.wavenumber(iy));
                kx[idx] = scale * ikx as f64;
                ky[idx] = scale * iky as f64;
                k2[idx] = kx[idx] * kx[idx] + ky[idx] * ky[idx];
                keep[idx] = grid.in_truncation(ikx, iky);
                dealias_keep[idx] = keep[idx] && (ikx.abs() as f64) <= cutoff && (iky.abs() as f64) <= cutoff;
            }
        }
        Self {
            grid,
            fwd,
            inv,
            kx,
            ky,
            k2,
            keep,
            dealias_keep,
        }
    }

    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }

    /// Physical wavenumber components and squared magnitude at storage index `idx`.
    pub fn wavevector(&self, idx: usize) -> (f64, f64, f64) {
        (self.kx[idx], self.ky[idx], self.k2[idx])
    }

    fn fft2(&self, buf: &mut [Complex64], forward: bool) {
        let n = self.grid.n();
        let plan = if forward { &self.fwd } else { &self.inv };
        plan.process(buf);
        transpose(buf, n);
        plan.process(buf);
        transpose(buf, n);
    }

    /// Transform physical samples to a truncated, exactly Hermitian spectral field.
    pub fn forward(&self, values: &[f64]) -> Result<SpectralField2d> {
        let n = self.grid.n();
        if values.len() != n * n {
            return Err(Error::InvalidField(format!(
                "expected {} physical values, got {}",
                n * n,
                values.len()
            )));
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, true);
        let norm = 1.0 / (n * n) as f64;
        for (c, &keep) in buf.iter_mut().zip(&self.keep) {
            *c = if keep { *c * norm } else { Complex64::new(0.0, 0.0) };
        }
        let mut field = SpectralField2d::from_coeffs_unchecked(self.grid, buf);
        field.symmetrize();
        Ok(field)
    }

    /// Physical values on the grid (row-major, `y` slowest).
    pub fn inverse(&self, w: &SpectralField2d) -> Vec<f64> {
        let mut buf = w.coeffs().to_vec();
        self.fft2(&mut buf, false);
        buf.iter().map(|c| c.re).collect()
    }

    fn check_field(&self, w: &SpectralField2d) -> Result<()> {
        if w.grid() != &self.grid {
            return Err(Error::InvalidField("field grid does not match solver grid".into()));
        }
        w.check_hermitian(1e-12)
    }

    /// Velocity from vorticity through the stream function `-lap psi = w`:
    /// `u_hat = i ky w_hat / |k|^2`, `v_hat = -i kx w_hat / |k|^2`, zero at `k = 0`.
    pub fn velocity_from_vorticity(&self, w: &SpectralField2d) -> Result<(SpectralField2d, SpectralField2d)> {
        self.check_field(w)?;
        Ok(self.velocity_unchecked(w))
    }

    fn velocity_unchecked(&self, w: &SpectralField2d) -> (SpectralField2d, SpectralField2d) {
        let len = w.coeffs().len();
        let mut u = vec![Complex64::new(0.0, 0.0); len];
        let mut v = vec![Complex64::new(0.0, 0.0); len];
        for idx in 0..len {
            let k2 = self.k2[idx];
            if k2 == 0.0 {
                continue;
            }
            let c = w.coeffs()[idx] / k2;
            u[idx] = Complex64::new(0.0, self.ky[idx]) * c;
            v[idx] = Complex64::new(0.0, -self.kx[idx]) * c;
        }
        (
            SpectralField2d::from_coeffs_unchecked(self.grid, u),
            SpectralField2d::from_coeffs_unchecked(self.grid, v),
        )
    }

    /// Spectral coefficients of `-(u . grad) w`, products formed in physical space.
    pub fn nonlinear_term(&self, w: &SpectralField2d, dealias: bool) -> Result<SpectralField2d> {
        self.check_field(w)?;
        let (u_hat, v_hat) = self.velocity_unchecked(w);
        let u = self.inverse(&u_hat);
        let v = self.inverse(&v_hat);
        Ok(self.advect_with(w, &u, &v, dealias))
    }

    fn advect_with(&self, w: &SpectralField2d, u: &[f64], v: &[f64], dealias: bool) -> SpectralField2d {
        let len = w.coeffs().len();
        let mut wx = vec![Complex64::new(0.0, 0.0); len];
        let mut wy = vec![Complex64::new(0.0, 0.0); len];
        for idx in 0..len {
            let c = w.coeffs()[idx];
            wx[idx] = Complex64::new(0.0, self.kx[idx]) * c;
            wy[idx] = Complex64::new(0.0, self.ky[idx]) * c;
        }
        self.fft2(&mut wx, false);
        self.fft2(&mut wy, false);
        let mut prod: Vec<Complex64> = (0..len)
            .map(|i| Complex64::new(-(u[i] * wx[i].re + v[i] * wy[i].re), 0.0))
            .collect();
        self.fft2(&mut prod, true);
        let n = self.grid.n();
        let norm = 1.0 / (n * n) as f64;
        let mask = if dealias { &self.dealias_keep } else { &self.keep };
        for (c, &keep) in prod.iter_mut().zip(mask) {
            *c = if keep { *c * norm } else { Complex64::new(0.0, 0.0) };
        }
        prod[0] = Complex64::new(0.0, 0.0);
        let mut out = SpectralField2d::from_coeffs_unchecked(self.grid, prod);
        out.symmetrize();
        out
    }

    /// Deterministic forcing: `A/2` on every axis-aligned mode of the band,
    /// i.e. `A * sum_k (cos(k x) + cos(k y))` over band wavenumbers.
    pub fn forcing(&self, p: &SolverParams) -> SpectralField2d {
        let n = self.grid.n();
        let mut c = vec![Complex64::new(0.0, 0.0); n * n];
        if p.forcing_amplitude > 0.0 {
            let (lo, hi) = p.forcing_band;
            for (idx, coeff) in c.iter_mut().enumerate() {
                let (ikx, iky) = (self.grid.wavenumber(idx % n), self.grid.wavenumber(idx / n));
                let kabs = ikx.unsigned_abs().max(iky.unsigned_abs()) as usize;
                let on_axis = ikx == 0 || iky == 0;
                if on_axis && kabs >= lo.max(1) && kabs <= hi && self.keep[idx] {
                    *coeff = Complex64::new(0.5 * p.forcing_amplitude, 0.0);
                }
            }
        }
        SpectralField2d::from_coeffs_unchecked(self.grid, c)
    }

    fn in_band(&self, idx: usize, band: (usize, usize)) -> bool {
        let n = self.grid.n();
        let (ikx, iky) = (self.grid.wavenumber(idx % n), self.grid.wavenumber(idx / n));
        let r2 = (ikx * ikx + iky * iky) as f64;
        let (lo, hi) = band;
        self.keep[idx] && r2 > 0.0 && r2 >= (lo * lo) as f64 && r2 <= (hi * hi) as f64
    }

    /// One semi-implicit step:
    /// `w+ = [w + dt N + dt f + sqrt(dt) sigma xi] / (1 + nu |k|^2 dt)`.
    ///
    /// Noise draws: for each conjugate pair on the band, in storage order of the
    /// representative with `ky > 0` or `ky = 0, kx > 0`, one complex normal with
    /// unit variance (real and imaginary parts each `N(0, 1/2)`).
    pub fn step(&self, w: &SpectralField2d, p: &SolverParams, rng: &mut RngStream) -> Result<SpectralField2d> {
        self.check_field(w)?;
        p.validate(&self.grid)?;
        let adv = match &p.advection {
            Advection::Nonlinear => {
                let (u_hat, v_hat) = self.velocity_unchecked(w);
                Some(self.advect_with(w, &self.inverse(&u_hat), &self.inverse(&v_hat), p.dealias))
            }
            Advection::Off => None,
            Advection::Prescribed(d) => Some(self.advect_with(w, &d.u, &d.v, p.dealias)),
        };
        let forcing = (p.forcing_amplitude > 0.0).then(|| self.forcing(p));
        let n = self.grid.n();
        let len = n * n;
        let mut out = w.coeffs().to_vec();
        if let Some(a) = &adv {
            for (o, c) in out.iter_mut().zip(a.coeffs()) {
                *o += p.dt * c;
            }
        }
        if let Some(f) = &forcing {
            for (o, c) in out.iter_mut().zip(f.coeffs()) {
                *o += p.dt * c;
            }
        }
        if p.noise_amplitude > 0.0 {
            let amp = p.noise_amplitude * p.dt.sqrt() * std::f64::consts::FRAC_1_SQRT_2;
            for idx in 0..len {
                if !self.in_band(idx, p.forcing_band) || !is_representative(&self.grid, idx) {
                    continue;
                }
                let a: f64 = rng.sample(StandardNormal);
                let b: f64 = rng.sample(StandardNormal);
                let xi = Complex64::new(a, b) * amp;
                out[idx] += xi;
                out[conjugate_index(n, idx)] += xi.conj();
            }
        }
        for idx in 0..len {
            out[idx] = if self.keep[idx] {
                out[idx] / (1.0 + p.nu * self.k2[idx] * p.dt)
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
        out[0] = Complex64::new(0.0, 0.0);
        let mut field = SpectralField2d::from_coeffs_unchecked(self.grid, out);
        field.symmetrize();
        Ok(field)
    }

    /// Domain-averaged kinetic energy and enstrophy (see module docs).
    pub fn diagnostics(&self, w: &SpectralField2d) -> Result<FlowDiagnostics> {
        self.check_field(w)?;
        let mut energy = 0.0;
        let mut enstrophy = 0.0;
        for (idx, c) in w.coeffs().iter().enumerate() {
            let m2 = c.norm_sqr();
            enstrophy += m2;
            if self.k2[idx] > 0.0 {
                energy += m2 / self.k2[idx];
            }
        }
        Ok(FlowDiagnostics {
            energy: 0.5 * energy,
            enstrophy: 0.5 * enstrophy,
        })
    }

    /// Periodized Lamb-Oseen vortex at time `t` (nine images, mean removed).
    ///
    /// Logs a warning when the core `sqrt(4 nu t)` is under-resolved or
    /// comparable to the domain.
    pub fn lamb_oseen(&self, gamma: f64, nu: f64, t: f64, center: (f64, f64)) -> Result<SpectralField2d> {
        if !(t > 0.0) || !(nu > 0.0) {
            return Err(Error::Domain(format!(
                "Lamb-Oseen requires t > 0 and nu > 0, got t = {t}, nu = {nu}"
            )));
        }
        let core = (4.0 * nu * t).sqrt();
        if core < self.grid.dx() || core > 0.1 * self.grid.length() {
            log::warn!(
                "Lamb-Oseen core {core:.4} outside the resolved range [{:.4}, {:.4}]",
                self.grid.dx(),
                0.1 * self.grid.length()
            );
        }
        let n = self.grid.n();
        let dx = self.grid.dx();
        let mut values = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                values[j * n + i] =
                    lamb_oseen_physical(gamma, nu, t, center, (i as f64 * dx, j as f64 * dx), self.grid.length());
            }
        }
        let mut field = self.forward(&values)?;
        field.coeffs_mut()[0] = Complex64::new(0.0, 0.0);
        Ok(field)
    }

    /// Random smooth vorticity with a Gaussian-shell spectrum peaked at `k_peak`,
    /// scaled to the requested enstrophy.
    pub fn random_vorticity(&self, k_peak: f64, enstrophy: f64, rng: &mut RngStream) -> SpectralField2d {
        let n = self.grid.n();
        let mut c = vec![Complex64::new(0.0, 0.0); n * n];
        for idx in 0..n * n {
            if !self.keep[idx] || !is_representative(&self.grid, idx) {
                continue;
            }
            let k = (self.grid.wavenumber(idx % n).pow(2) as f64 + self.grid.wavenumber(idx / n).pow(2) as f64).sqrt();
            let amp = k * (-(k / k_peak).powi(2)).exp();
            let phase: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let z = Complex64::from_polar(amp, phase);
            c[idx] = z;
            c[conjugate_index(n, idx)] = z.conj();
        }
        let mut field = SpectralField2d::from_coeffs_unchecked(self.grid, c);
        let z: f64 = 0.5 * field.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>();
        if z > 0.0 {
            let s = (enstrophy / z).sqrt();
            field.coeffs_mut().iter_mut().for_each(|c| *c *= s);
        }
        field
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            buf.swap(r * n + c, c * n + r);
        }
    }
}

pub(crate) fn conjugate_index(n: usize, idx: usize) -> usize {
    let (ix, iy) = (idx % n, idx / n);
    ((n - iy) % n) * n + (n - ix) % n
}

/// Canonical member of a conjugate pair: `ky > 0`, or `ky = 0` and `kx > 0`.
fn is_representative(grid: &Grid2d, idx: usize) -> bool {
    let n = grid.n();
    let (kx, ky) = (grid.wavenumber(idx % n), grid.wavenumber(idx / n));
    ky > 0 || (ky == 0 && kx > 0)
}
