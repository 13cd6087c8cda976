use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid2d {
    n: usize,
    length: f64,
    k_max: usize,
}

impl Grid2d {
    pub fn new(n: usize, length: f64, k_max: usize) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Domain(format!("grid size must be a power of two >= 8, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::Domain(format!("domain length must be positive, got {length}")));
        }
        if k_max > n / 2 {
            return Err(Error::Domain(format!("k_max = {k_max} exceeds n/2 = {}", n / 2)));
        }
        Ok(Self { n, length, k_max })
    }

    /// `2 pi` periodic grid keeping every representable mode.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, std::f64::consts::TAU, n / 2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn wavenumber_scale(&self) -> f64 {
        std::f64::consts::TAU / self.length
    }

    /// Signed integer wavenumber of storage index `i` (`n/2` maps to `-n/2`).
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of a signed integer wavenumber.
    pub fn index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Inside the disc `|k| <= k_max` and not on the unpaired Nyquist line.
    pub fn in_truncation(&self, kx: i64, ky: i64) -> bool {
        let nyq = -(self.n as i64) / 2;
        let r = self.k_max as i64;
        kx != nyq && ky != nyq && kx * kx + ky * ky <= r * r
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField2d {
    grid: Grid2d,
    coeffs: Vec<Complex64>,
}

impl SpectralField2d {
    pub fn zeros(grid: Grid2d) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n * grid.n],
        }
    }

    /// Validated constructor: Hermitian to `1e-12` relative and zero outside the truncation.
    pub fn from_coeffs(grid: Grid2d, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n * grid.n {
            return Err(Error::InvalidField(format!(
                "expected {} coefficients, got {}",
                grid.n * grid.n,
                coeffs.len()
            )));
        }
        let field = Self { grid, coeffs };
        field.check_hermitian(1e-12)?;
        let n = grid.n;
        for (idx, c) in field.coeffs.iter().enumerate() {
            let (kx, ky) = (grid.wavenumber(idx % n), grid.wavenumber(idx / n));
            if !grid.in_truncation(kx, ky) && *c != Complex64::new(0.0, 0.0) {
                return Err(Error::InvalidField(format!("nonzero coefficient at ({kx}, {ky}) outside truncation")));
            }
        }
        Ok(field)
    }

    pub(crate) fn from_coeffs_unchecked(grid: Grid2d, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.n * grid.n);
        Self { grid, coeffs }
    }

    pub fn grid(&self) -> &Grid2d {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, kx: i64, ky: i64) -> Complex64 {
        self.coeffs[self.grid.index(ky) * self.grid.n + self.grid.index(kx)]
    }

    /// Set mode `k` and its conjugate partner `-k`.
    pub fn set_mode(&mut self, kx: i64, ky: i64, value: Complex64) -> Result<()> {
        if !self.grid.in_truncation(kx, ky) {
            return Err(Error::InvalidField(format!("mode ({kx}, {ky}) outside truncation")));
        }
        let n = self.grid.n;
        let a = self.grid.index(ky) * n + self.grid.index(kx);
        let b = self.grid.index(-ky) * n + self.grid.index(-kx);
        if a == b {
            self.coeffs[a] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[a] = value;
            self.coeffs[b] = value.conj();
        }
        Ok(())
    }

    pub fn check_hermitian(&self, rel_tol: f64) -> Result<()> {
        let n = self.grid.n;
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let partner = self.coeffs[super::conjugate_index(n, idx)];
            if (c - partner.conj()).norm() > rel_tol * scale || !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::InvalidField(format!(
                    "Hermitian symmetry violated at mode ({}, {})",
                    self.grid.wavenumber(idx % n),
                    self.grid.wavenumber(idx / n)
                )));
            }
        }
        Ok(())
    }

    /// Replace each conjugate pair by its Hermitian average.
    pub(crate) fn symmetrize(&mut self) {
        let n = self.grid.n;
        for idx in 0..self.coeffs.len() {
            let j = super::conjugate_index(n, idx);
            if j < idx {
                continue;
            }
            if j == idx {
                self.coeffs[idx].im = 0.0;
            } else {
                let avg = 0.5 * (self.coeffs[idx] + self.coeffs[j].conj());
                self.coeffs[idx] = avg;
                self.coeffs[j] = avg.conj();
            }
        }
    }

    /// Sum of `|c|^2`, equal to the domain mean of the squared physical field.
    pub fn mean_square(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `||self - other|| / ||other||` in `L2` (by Parseval, on coefficients).
    pub fn rel_l2_error(&self, reference: &SpectralField2d) -> f64 {
        let diff: f64 = self
            .coeffs
            .iter()
            .zip(&reference.coeffs)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (diff / reference.mean_square()).sqrt()
    }

    /// Value of the trigonometric interpolant at an arbitrary point.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let n = self.grid.n;
        let s = self.grid.wavenumber_scale();
        let mut acc = 0.0;
        for (idx, c) in self.coeffs.iter().enumerate() {
            if c.re == 0.0 && c.im == 0.0 {
                continue;
            }
            let kx = s * self.grid.wavenumber(idx % n) as f64;
            let ky = s * self.grid.wavenumber(idx / n) as f64;
            let phase = kx * x + ky * y;
            acc += c.re * phase.cos() - c.im * phase.sin();
        }
        acc
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &SpectralField2d, factor: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * factor;
        }
    }
}
