use super::Grid2d;
use std::f64::consts::PI;

/// Lamb-Oseen vorticity at `point`, summed over the 3x3 block of periodic images.
/// No mean correction.
pub fn lamb_oseen_physical(gamma: f64, nu: f64, t: f64, center: (f64, f64), point: (f64, f64), length: f64) -> f64 {
    let s = 4.0 * nu * t;
    let peak = gamma / (PI * s);
    let mut acc = 0.0;
    for a in -1..=1 {
        for b in -1..=1 {
            let dx = point.0 - center.0 + a as f64 * length;
            let dy = point.1 - center.1 + b as f64 * length;
            acc += (-(dx * dx + dy * dy) / s).exp();
        }
    }
    peak * acc
}

/// Free-space azimuthal velocity `Gamma/(2 pi r) (1 - exp(-r^2 / 4 nu t))`.
pub fn lamb_oseen_azimuthal_velocity(gamma: f64, nu: f64, t: f64, r: f64) -> f64 {
    gamma / (2.0 * PI * r) * (-(-r * r / (4.0 * nu * t)).exp_m1())
}

/// Relative grid L2 error of physical `values` (row-major, `n x n` on `[0, length)^2`)
/// against the periodized vortex with the mean `gamma / length^2` removed,
/// matching the solver's zero-mean convention.
pub fn lamb_oseen_rel_error(grid: &Grid2d, values: &[f64], gamma: f64, nu: f64, t: f64, center: (f64, f64)) -> f64 {
    let (n, l, dx) = (grid.n(), grid.length(), grid.dx());
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let a = lamb_oseen_physical(gamma, nu, t, center, (i as f64 * dx, j as f64 * dx), l) - gamma / (l * l);
            num += (values[j * n + i] - a).powi(2);
            den += a * a;
        }
    }
    (num / den).sqrt()
}
