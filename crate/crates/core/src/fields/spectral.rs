use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use super::{Grid, ScalarField};
use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unnormalised N-D FFT of a row-major buffer over the grid's active axes.
pub fn fft_inplace(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    debug_assert_eq!(data.len(), grid.len());
    let direction = if inverse { FftDirection::Inverse } else { FftDirection::Forward };
    for axis in 0..grid.dim() {
        let n = grid.n()[axis];
        let stride = grid.stride(axis);
        let fft = PLANNER.with(|p| p.borrow_mut().plan_fft(n, direction));
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let outer = grid.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (j, l) in line.iter_mut().enumerate() {
                    *l = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, l) in line.iter().enumerate() {
                    data[base + j * stride] = *l;
                }
            }
        }
    }
}

/// Signed integer mode number for storage index `j` on an axis with `n` cells.
pub(crate) fn mode_number(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Derivative wavenumbers `2*pi*m/L` for one axis, in storage order.
///
/// The Nyquist mode `m = n/2` has no conjugate partner, so its wavenumber is
/// set to zero: odd derivatives of real fields stay real and every spectral
/// operator (gradient, divergence, curl, Laplacian, Helmholtz projector) is
/// built from the same symbol.
pub fn wavenumbers(grid: &Grid, axis: usize) -> Vec<f64> {
    let n = grid.n()[axis];
    let scale = 2.0 * PI / grid.length()[axis];
    (0..n)
        .map(|j| if j == n / 2 { 0.0 } else { scale * mode_number(j, n) as f64 })
        .collect()
}

/// Complex Fourier coefficients of a field, normalised so that the
/// coefficient at the zero wavevector is the spatial mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coefficients
    }

    /// Coefficient at the integer wavevector `m` (negative entries wrap).
    pub fn coefficient(&self, m: &[i64]) -> Complex64 {
        let mut idx = [0usize; 3];
        for a in 0..self.grid.dim() {
            let n = self.grid.n()[a] as i64;
            idx[a] = m[a].rem_euclid(n) as usize;
        }
        self.coefficients[self.grid.flat(idx)]
    }

    /// Largest deviation from Hermitian symmetry `c(-m) = conj(c(m))`.
    pub fn hermitian_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst: f64 = 0.0;
        for k in 0..g.len() {
            let idx = g.unflat(k);
            let mut mirror = [0usize; 3];
            for a in 0..g.dim() {
                let n = g.n()[a];
                mirror[a] = (n - idx[a]) % n;
            }
            let c = self.coefficients[k];
            let cm = self.coefficients[g.flat(mirror)];
            worst = worst.max((c - cm.conj()).norm());
        }
        worst
    }
}

/// Forward transform; divides by the cell count.
pub fn transform_forward(field: &ScalarField) -> Result<SpectralField> {
    field.ensure_finite("transform input")?;
    Ok(SpectralField { grid: *field.grid(), coefficients: forward_raw(field) })
}

/// Inverse transform; returns the real part.
pub fn transform_inverse(spec: &SpectralField) -> Result<ScalarField> {
    if spec.coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
        return Err(Error::NonFinite("spectral coefficients"));
    }
    Ok(inverse_raw(&spec.grid, spec.coefficients.clone()))
}

pub(crate) fn forward_raw(field: &ScalarField) -> Vec<Complex64> {
    let grid = field.grid();
    let mut data: Vec<Complex64> = field.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_inplace(grid, &mut data, false);
    let inv_n = 1.0 / grid.len() as f64;
    for c in &mut data {
        *c *= inv_n;
    }
    data
}

pub(crate) fn inverse_raw(grid: &Grid, mut data: Vec<Complex64>) -> ScalarField {
    fft_inplace(grid, &mut data, true);
    let values = data.into_iter().map(|c| c.re).collect();
    ScalarField::from_values(*grid, values).expect("length preserved by FFT")
}

/// Per-axis wavenumber tables for the grid.
pub(crate) struct Wavenumbers {
    k: Vec<Vec<f64>>,
    grid: Grid,
}

impl Wavenumbers {
    pub(crate) fn new(grid: &Grid) -> Self {
        Wavenumbers { k: (0..grid.dim()).map(|a| wavenumbers(grid, a)).collect(), grid: *grid }
    }

    /// Wavevector at flat index `k` (inactive axes zero).
    pub(crate) fn at(&self, k: usize) -> [f64; 3] {
        let idx = self.grid.unflat(k);
        let mut out = [0.0; 3];
        for (a, ka) in self.k.iter().enumerate() {
            out[a] = ka[idx[a]];
        }
        out
    }
}

/// Truncate all modes with `|m_a| >= n_a / 3` on any axis (2/3 rule).
pub fn dealias_two_thirds(field: &ScalarField) -> ScalarField {
    let grid = *field.grid();
    let mut spec = forward_raw(field);
    apply_two_thirds_mask(&grid, &mut spec);
    inverse_raw(&grid, spec)
}

pub(crate) fn apply_two_thirds_mask(grid: &Grid, spec: &mut [Complex64]) {
    for (k, c) in spec.iter_mut().enumerate() {
        let idx = grid.unflat(k);
        let keep = (0..grid.dim()).all(|a| {
            let n = grid.n()[a];
            let m = mode_number(idx[a], n).unsigned_abs() as usize;
            3 * m < n
        });
        if !keep {
            *c = Complex64::new(0.0, 0.0);
        }
    }
}

/// Translate a band-limited field by `shift`: returns `f(x - shift)`.
pub fn spectral_shift(field: &ScalarField, shift: &[f64]) -> ScalarField {
    let grid = *field.grid();
    let wn = Wavenumbers::new(&grid);
    let mut spec = forward_raw(field);
    for (k, c) in spec.iter_mut().enumerate() {
        let kv = wn.at(k);
        let phase: f64 = (0..grid.dim()).map(|a| kv[a] * shift[a]).sum();
        *c *= Complex64::from_polar(1.0, -phase);
    }
    inverse_raw(&grid, spec)
}
