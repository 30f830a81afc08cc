//! Tensor-product cubic interpolation on periodic cell-centered grids with a
//! monotonicity limiter.
//!
//! Along each axis the four-point Lagrange cubic through `f[i-1..=i+2]` is
//! written as the linear interpolant between `f[i]` and `f[i+1]` plus a
//! curvature correction built from the second differences
//! `d1 = f[i-1] - 2f[i] + f[i+1]` and `d2 = f[i] - 2f[i+1] + f[i+2]`.
//! The cubic is kept unchanged only when `d1`, `d2` and the two outer second
//! differences centered on `i-1` and `i+2` all share one strict sign, which
//! marks a resolved smooth extremum. Four points alone cannot tell a two-cell
//! trough from a parabola; the outer pair can. Otherwise the result is clamped
//! to `[min(f[i], f[i+1]), max(f[i], f[i+1])]`, so steps, kinks and constants
//! never produce new extrema. The host cell is `floor` of the continuous index,
//! so a point exactly on a cell face belongs to the lower-index cell.

use super::{Grid, ScalarField, VectorField};

/// Points per axis read by the limited cubic.
const WIDTH: usize = 6;

/// Plain Lagrange cubic through `f[1..=4]` at offset `s` past `f[2]`.
#[inline]
pub fn cubic(f: [f64; WIDTH], s: f64) -> f64 {
    let d1 = f[1] - 2.0 * f[2] + f[3];
    let d2 = f[2] - 2.0 * f[3] + f[4];
    f[2] + s * (f[3] - f[2]) - s * (1.0 - s) / 6.0 * ((2.0 - s) * d1 + (1.0 + s) * d2)
}

/// Limited cubic through `f[1..=4]` at fractional offset `s` in `[0, 1)` past
/// `f[2]`; `f[0]` and `f[5]` only feed the smoothness test.
#[inline]
pub fn cubic_limited(f: [f64; WIDTH], s: f64) -> f64 {
    let d0 = f[0] - 2.0 * f[1] + f[2];
    let d1 = f[1] - 2.0 * f[2] + f[3];
    let d2 = f[2] - 2.0 * f[3] + f[4];
    let d3 = f[3] - 2.0 * f[4] + f[5];
    let v = cubic(f, s);
    let smooth = (d0 > 0.0 && d1 > 0.0 && d2 > 0.0 && d3 > 0.0) || (d0 < 0.0 && d1 < 0.0 && d2 < 0.0 && d3 < 0.0);
    if smooth {
        v
    } else {
        let (lo, hi) = if f[2] <= f[3] { (f[2], f[3]) } else { (f[3], f[2]) };
        v.clamp(lo, hi)
    }
}

/// Precomputed stencil for one interpolation point, reusable across fields.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    dim: usize,
    idx: [[usize; WIDTH]; 3],
    s: [f64; 3],
}

impl Stencil {
    pub fn new(grid: &Grid, x: [f64; 3]) -> Self {
        let mut idx = [[0usize; WIDTH]; 3];
        let mut s = [0.0; 3];
        for a in 0..grid.dim() {
            let n = grid.n()[a] as i64;
            let xi = x[a] / grid.spacing(a) - 0.5;
            let base = xi.floor();
            s[a] = xi - base;
            let b = base as i64;
            for (o, slot) in idx[a].iter_mut().enumerate() {
                *slot = (b - 2 + o as i64).rem_euclid(n) as usize;
            }
        }
        Stencil { dim: grid.dim(), idx, s }
    }

    /// Limited interpolation; never creates new extrema at steps.
    pub fn eval(&self, grid: &Grid, values: &[f64]) -> f64 {
        self.eval_with(grid, values, cubic_limited)
    }

    /// Unlimited interpolation; exactly linear in `values`.
    pub fn eval_linear(&self, grid: &Grid, values: &[f64]) -> f64 {
        self.eval_with(grid, values, cubic)
    }

    #[inline]
    fn eval_with(&self, grid: &Grid, values: &[f64], interp: fn([f64; WIDTH], f64) -> f64) -> f64 {
        let stride = [grid.stride(0), grid.stride(1), grid.stride(2)];
        if self.dim == 2 {
            let mut rows = [0.0; WIDTH];
            for (r, row) in rows.iter_mut().enumerate() {
                let base = self.idx[0][r] * stride[0];
                let mut f = [0.0; WIDTH];
                for (c, v) in f.iter_mut().enumerate() {
                    *v = values[base + self.idx[1][c] * stride[1]];
                }
                *row = interp(f, self.s[1]);
            }
            interp(rows, self.s[0])
        } else {
            let mut planes = [0.0; WIDTH];
            for (p, plane) in planes.iter_mut().enumerate() {
                let base0 = self.idx[0][p] * stride[0];
                let mut rows = [0.0; WIDTH];
                for (r, row) in rows.iter_mut().enumerate() {
                    let base = base0 + self.idx[1][r] * stride[1];
                    let mut f = [0.0; WIDTH];
                    for (c, v) in f.iter_mut().enumerate() {
                        *v = values[base + self.idx[2][c]];
                    }
                    *row = interp(f, self.s[2]);
                }
                *plane = interp(rows, self.s[1]);
            }
            interp(planes, self.s[0])
        }
    }
}

pub fn interpolate(field: &ScalarField, x: [f64; 3]) -> f64 {
    Stencil::new(field.grid(), x).eval(field.grid(), field.values())
}

pub fn interpolate_vector(field: &VectorField, x: [f64; 3]) -> [f64; 3] {
    let st = Stencil::new(field.grid(), x);
    let mut out = [0.0; 3];
    for (a, c) in field.components().iter().enumerate() {
        out[a] = st.eval(field.grid(), c.values());
    }
    out
}
