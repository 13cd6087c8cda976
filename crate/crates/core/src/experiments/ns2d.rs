//! Prior uncertainty propagation through the 2D vorticity solver: each member
//! draws a viscosity and a forcing amplitude and is integrated from a shared
//! initial field without observations.

use super::config::{LogNormalPrior, Ns2dConfig};
use super::io::EnergyRow;
use crate::error::Result;
use crate::metrics::weighted_quantile;
use crate::spectral2d::{Advection, Grid2d, Snapshot, SolverParams, Spectral2d};
use crate::stochastics::RngStream;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct MemberSummary {
    pub index: usize,
    /// Members sharing a forcing draw share the group.
    pub group: usize,
    pub nu: f64,
    pub forcing: f64,
    pub terminal_energy: f64,
    pub terminal_enstrophy: f64,
}

#[derive(Clone, Debug)]
pub struct Ns2dResult {
    pub energy: Vec<EnergyRow>,
    pub mean_field: Snapshot,
    pub std_field: Snapshot,
    /// Terminal field of member 0.
    pub sample_field: Snapshot,
    pub members: Vec<MemberSummary>,
}

impl Ns2dResult {
    /// Time-averaged width of the 90% energy band.
    pub fn mean_band_width(&self) -> f64 {
        self.energy.iter().map(|r| r.e_hi90 - r.e_lo90).sum::<f64>() / self.energy.len() as f64
    }
}

fn draw(prior: &LogNormalPrior, rng: &mut RngStream) -> f64 {
    let (m, s) = prior.log_params();
    let z: f64 = rng.sample(StandardNormal);
    (m + s * z).exp()
}

/// Incremental mean: exact when all values are equal.
fn running_mean(xs: &[f64]) -> f64 {
    xs.iter().enumerate().fold(0.0, |m, (i, &x)| m + (x - m) / (i + 1) as f64)
}

struct MemberRun {
    energies: Vec<f64>,
    field: Vec<f64>,
    energy: f64,
    enstrophy: f64,
}

/// Draws: the initial field from `RngStream::new(seed, 0)`, one forcing
/// amplitude per group from stream 1, one viscosity per member from stream 2.
pub fn run_ns2d_uq(cfg: &Ns2dConfig, seed: u64) -> Result<Ns2dResult> {
    let grid = Grid2d::periodic(cfg.n)?;
    let solver = Spectral2d::new(grid);
    let w0 = solver.random_vorticity(cfg.k_peak, cfg.enstrophy0, &mut RngStream::new(seed, 0));
    let n_groups = cfg.members.div_ceil(cfg.members_per_forcing);
    let mut rf = RngStream::new(seed, 1);
    let forcings: Vec<f64> = (0..n_groups).map(|_| draw(&cfg.forcing, &mut rf)).collect();
    let mut rn = RngStream::new(seed, 2);
    let nus: Vec<f64> = (0..cfg.members).map(|_| draw(&cfg.nu, &mut rn)).collect();

    let n_steps = (cfg.t_final / cfg.dt).round().max(1.0) as usize;
    let record: Vec<usize> = (0..=n_steps)
        .filter(|k| k % cfg.energy_every == 0 || *k == n_steps)
        .collect();

    let runs = (0..cfg.members)
        .into_par_iter()
        .map(|i| -> Result<MemberRun> {
            let p = SolverParams {
                nu: nus[i],
                dt: cfg.dt,
                forcing_amplitude: forcings[i / cfg.members_per_forcing],
                forcing_band: (cfg.forcing_band[0], cfg.forcing_band[1]),
                noise_amplitude: 0.0,
                dealias: cfg.dealias,
                advection: Advection::Nonlinear,
            };
            // No noise is drawn; the stream is required by the stepper only.
            let mut rng = RngStream::new(seed, 3 + i as u64);
            let mut w = w0.clone();
            let mut energies = Vec::with_capacity(record.len());
            for k in 0..=n_steps {
                if k > 0 {
                    w = solver.step(&w, &p, &mut rng)?;
                }
                if record.binary_search(&k).is_ok() {
                    energies.push(solver.diagnostics(&w)?.energy);
                }
            }
            let d = solver.diagnostics(&w)?;
            Ok(MemberRun {
                energies,
                field: solver.inverse(&w),
                energy: d.energy,
                enstrophy: d.enstrophy,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let weights = vec![1.0; cfg.members];
    let energy = record
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let e: Vec<f64> = runs.iter().map(|r| r.energies[j]).collect();
            EnergyRow {
                t: k as f64 * cfg.dt,
                e_mean: running_mean(&e),
                e_lo90: weighted_quantile(&e, &weights, 0.05),
                e_hi90: weighted_quantile(&e, &weights, 0.95),
                seed,
            }
        })
        .collect();

    // Welford, so identical members give a standard deviation of exactly zero.
    let npts = cfg.n * cfg.n;
    let mut mean = vec![0.0; npts];
    let mut m2 = vec![0.0; npts];
    for (c, r) in runs.iter().enumerate() {
        for ((m, s), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(&r.field) {
            let d = x - *m;
            *m += d / (c + 1) as f64;
            *s += d * (x - *m);
        }
    }
    let std: Vec<f64> = m2.iter().map(|s| (s / (cfg.members - 1) as f64).sqrt()).collect();
    let t_end = n_steps as f64 * cfg.dt;
    let snap = |values: Vec<f64>| Snapshot {
        n: cfg.n,
        length: grid.length(),
        time: t_end,
        values,
    };
    let members = runs
        .iter()
        .enumerate()
        .map(|(i, r)| MemberSummary {
            index: i,
            group: i / cfg.members_per_forcing,
            nu: nus[i],
            forcing: forcings[i / cfg.members_per_forcing],
            terminal_energy: r.energy,
            terminal_enstrophy: r.enstrophy,
        })
        .collect();
    Ok(Ns2dResult {
        energy,
        mean_field: snap(mean),
        std_field: snap(std),
        sample_field: snap(runs[0].field.clone()),
        members,
    })
}
