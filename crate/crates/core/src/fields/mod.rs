//! Periodic grids, field storage, differential operators and the AFLD file format.

mod grid;
pub mod interp;
pub mod io;
mod ops;
pub mod random;
mod spectral;

pub use grid::Grid;
pub use ops::{apply_diff_op, curl, div, grad, laplacian, DiffKind, DiffMethod, FieldRef, FieldValue};
pub(crate) use spectral::{apply_two_thirds_mask, forward_raw, inverse_raw, Wavenumbers};
pub use spectral::{
    dealias_two_thirds, fft_inplace, spectral_shift, transform_forward, transform_inverse,
    wavenumbers, SpectralField,
};

use crate::error::{Error, Result};

/// One real value per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: Grid, v: f64) -> Self {
        ScalarField { grid, values: vec![v; grid.len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::contract(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    /// Evaluate `f` at every cell center.
    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let values = grid.centers().map(&mut f).collect();
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &ScalarField) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn mul(&self, other: &ScalarField) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Integral over the periodic box (midpoint rule).
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Root-mean-square value, i.e. the L2 norm normalised by the box volume.
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn dot(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }
}

/// `dim` scalar components on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<ScalarField>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField { grid, components: vec![ScalarField::zeros(grid); grid.dim()] }
    }

    pub fn constant(grid: Grid, v: &[f64]) -> Result<Self> {
        if v.len() != grid.dim() {
            return Err(Error::contract(format!(
                "constant vector has {} components on a {}D grid",
                v.len(),
                grid.dim()
            )));
        }
        Ok(VectorField {
            grid,
            components: v.iter().map(|&c| ScalarField::constant(grid, c)).collect(),
        })
    }

    pub fn from_components(components: Vec<ScalarField>) -> Result<Self> {
        let grid = match components.first() {
            Some(c) => *c.grid(),
            None => return Err(Error::contract("vector field needs components")),
        };
        if components.len() != grid.dim() {
            return Err(Error::contract(format!(
                "{} components on a {}D grid",
                components.len(),
                grid.dim()
            )));
        }
        if components.iter().any(|c| *c.grid() != grid) {
            return Err(Error::GridMismatch("vector components on different grids".into()));
        }
        Ok(VectorField { grid, components })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut([f64; 3]) -> [f64; 3]) -> Self {
        let d = grid.dim();
        let mut comps: Vec<Vec<f64>> = vec![Vec::with_capacity(grid.len()); d];
        for x in grid.centers() {
            let v = f(x);
            for (a, c) in comps.iter_mut().enumerate() {
                c.push(v[a]);
            }
        }
        VectorField {
            grid,
            components: comps.into_iter().map(|values| ScalarField { grid, values }).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.components[a]
    }

    pub fn component_mut(&mut self, a: usize) -> &mut ScalarField {
        &mut self.components[a]
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn into_components(self) -> Vec<ScalarField> {
        self.components
    }

    /// Vector value at flat cell index `k` (unused slots zero).
    pub fn at(&self, k: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        for (a, c) in self.components.iter().enumerate() {
            v[a] = c.values[k];
        }
        v
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(ScalarField::is_finite)
    }

    pub fn ensure_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn map_components(&self, f: impl Fn(&ScalarField) -> ScalarField) -> Self {
        VectorField { grid: self.grid, components: self.components.iter().map(f).collect() }
    }

    pub fn zip_components(
        &self,
        other: &VectorField,
        f: impl Fn(&ScalarField, &ScalarField) -> ScalarField,
    ) -> Self {
        VectorField {
            grid: self.grid,
            components: self.components.iter().zip(&other.components).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_components(|c| c.scale(s))
    }

    pub fn add(&self, other: &VectorField) -> Self {
        self.zip_components(other, ScalarField::add)
    }

    pub fn sub(&self, other: &VectorField) -> Self {
        self.zip_components(other, ScalarField::sub)
    }

    pub fn axpy(&mut self, s: f64, other: &VectorField) {
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            a.axpy(s, b);
        }
    }

    /// Pointwise Euclidean norm.
    pub fn magnitude(&self) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for c in &self.components {
            for (o, v) in out.values.iter_mut().zip(&c.values) {
                *o += v * v;
            }
        }
        out.map(f64::sqrt)
    }

    /// Maximum pointwise Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        self.magnitude().max_abs()
    }

    /// Largest absolute component value.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().map(ScalarField::max_abs).fold(0.0, f64::max)
    }

    /// Pointwise dot product with another vector field.
    pub fn dot_field(&self, other: &VectorField) -> ScalarField {
        let mut out = ScalarField::zeros(self.grid);
        for (a, b) in self.components.iter().zip(&other.components) {
            for ((o, x), y) in out.values.iter_mut().zip(&a.values).zip(&b.values) {
                *o += x * y;
            }
        }
        out
    }

    /// Grid sum of the pointwise dot product.
    pub fn dot(&self, other: &VectorField) -> f64 {
        self.components.iter().zip(&other.components).map(|(a, b)| a.dot(b)).sum()
    }

    /// RMS of the pointwise magnitude.
    pub fn rms(&self) -> f64 {
        (self.dot(self) / self.grid.len() as f64).sqrt()
    }

    pub fn mean(&self) -> Vec<f64> {
        self.components.iter().map(ScalarField::mean).collect()
    }
}

pub(crate) fn ensure_same_grid(a: &Grid, b: &Grid, what: &str) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch(what.to_string()))
    }
}
