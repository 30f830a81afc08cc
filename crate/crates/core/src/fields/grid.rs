use crate::error::{Error, Result};

/// Uniform periodic Cartesian grid in two or three dimensions.
///
/// Values live at cell centers `x_i = (j + 1/2) * spacing[i]`, stored row-major
/// with axis 0 varying slowest. Unused trailing axes of a 2D grid carry
/// `n = 1` and are never iterated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 3],
    length: [f64; 3],
}

impl Grid {
    pub fn new(n: &[usize], length: &[f64]) -> Result<Self> {
        let dim = n.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::contract(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if length.len() != dim {
            return Err(Error::contract(format!(
                "grid has {dim} cell counts but {} lengths",
                length.len()
            )));
        }
        let mut nn = [1usize; 3];
        let mut ll = [1.0f64; 3];
        for a in 0..dim {
            if n[a] < 4 || !n[a].is_multiple_of(2) {
                return Err(Error::contract(format!(
                    "cell count along axis {a} must be even and >= 4, got {}",
                    n[a]
                )));
            }
            if !(length[a].is_finite() && length[a] > 0.0) {
                return Err(Error::contract(format!(
                    "length along axis {a} must be positive, got {}",
                    length[a]
                )));
            }
            nn[a] = n[a];
            ll[a] = length[a];
        }
        Ok(Grid { dim, n: nn, length: ll })
    }

    /// Square/cubic grid with `n` cells and extent `length` on every axis.
    pub fn uniform(dim: usize, n: usize, length: f64) -> Result<Self> {
        Grid::new(&vec![n; dim], &vec![length; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> &[usize] {
        &self.n[..self.dim]
    }

    pub fn length(&self) -> &[f64] {
        &self.length[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.length[axis] / self.n[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.length().iter().product()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.n[axis + 1..].iter().product()
    }

    pub fn flat(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.n[1] + idx[1]) * self.n[2] + idx[2]
    }

    pub fn unflat(&self, mut k: usize) -> [usize; 3] {
        let i2 = k % self.n[2];
        k /= self.n[2];
        let i1 = k % self.n[1];
        [k / self.n[1], i1, i2]
    }

    /// Cell-center coordinate of multi-index `idx`.
    pub fn center(&self, idx: [usize; 3]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = (idx[a] as f64 + 0.5) * self.spacing(a);
        }
        x
    }

    /// Cell centers in storage order.
    pub fn centers(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |k| self.center(self.unflat(k)))
    }

    /// Wrap a position into `[0, length)` on every active axis.
    pub fn wrap(&self, mut x: [f64; 3]) -> [f64; 3] {
        for a in 0..self.dim {
            let l = self.length[a];
            x[a] = x[a].rem_euclid(l);
            if x[a] >= l {
                x[a] = 0.0;
            }
        }
        x
    }

    /// Shortest periodic displacement `b - a`.
    pub fn periodic_delta(&self, a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
        let mut d = [0.0; 3];
        for ax in 0..self.dim {
            let l = self.length[ax];
            let mut v = (b[ax] - a[ax]).rem_euclid(l);
            if v > 0.5 * l {
                v -= l;
            }
            d[ax] = v;
        }
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_and_small_counts() {
        assert!(Grid::new(&[5, 8], &[1.0, 1.0]).is_err());
        assert!(Grid::new(&[2, 8], &[1.0, 1.0]).is_err());
        assert!(Grid::new(&[8], &[1.0]).is_err());
        assert!(Grid::new(&[8, 8], &[1.0, -1.0]).is_err());
        assert!(Grid::new(&[8, 8, 8], &[1.0, 1.0, 1.0]).is_ok());
    }

    #[test]
    fn spacing_is_exact_quotient() {
        let g = Grid::new(&[8, 12], &[3.0, 7.0]).unwrap();
        assert_eq!(g.spacing(0), 3.0 / 8.0);
        assert_eq!(g.spacing(1), 7.0 / 12.0);
        assert_eq!(g.len(), 96);
    }

    #[test]
    fn flat_roundtrip() {
        let g = Grid::new(&[4, 6, 8], &[1.0, 1.0, 1.0]).unwrap();
        for k in 0..g.len() {
            assert_eq!(g.flat(g.unflat(k)), k);
        }
        assert_eq!(g.stride(0), 48);
        assert_eq!(g.stride(2), 1);
    }

    #[test]
    fn wrap_is_periodic() {
        let g = Grid::uniform(2, 8, 2.0).unwrap();
        let w = g.wrap([-0.5, 4.25, 0.0]);
        assert!((w[0] - 1.5).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
    }
}
