use num_complex::Complex64;

use super::spectral::{forward_raw, inverse_raw, Wavenumbers};
use super::{Grid, ScalarField, VectorField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffKind {
    Grad,
    Div,
    Curl,
    Laplacian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMethod {
    Spectral,
    Central2,
    Central4,
}

/// Borrowed scalar-or-vector operand.
#[derive(Debug, Clone, Copy)]
pub enum FieldRef<'a> {
    Scalar(&'a ScalarField),
    Vector(&'a VectorField),
}

/// Result of a differential operator: rank depends on the operator and the
/// dimension (the 2D curl is a scalar).
#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Scalar(ScalarField),
    Vector(VectorField),
}

impl FieldValue {
    pub fn max_abs(&self) -> f64 {
        match self {
            FieldValue::Scalar(s) => s.max_abs(),
            FieldValue::Vector(v) => v.max_abs(),
        }
    }

    pub fn rms(&self) -> f64 {
        match self {
            FieldValue::Scalar(s) => s.rms(),
            FieldValue::Vector(v) => v.rms(),
        }
    }

    pub fn into_scalar(self) -> Option<ScalarField> {
        match self {
            FieldValue::Scalar(s) => Some(s),
            FieldValue::Vector(_) => None,
        }
    }

    pub fn into_vector(self) -> Option<VectorField> {
        match self {
            FieldValue::Vector(v) => Some(v),
            FieldValue::Scalar(_) => None,
        }
    }
}

pub fn apply_diff_op(kind: DiffKind, field: FieldRef<'_>, method: DiffMethod) -> Result<FieldValue> {
    match (kind, field) {
        (DiffKind::Grad, FieldRef::Scalar(f)) => grad(f, method).map(FieldValue::Vector),
        (DiffKind::Div, FieldRef::Vector(v)) => div(v, method).map(FieldValue::Scalar),
        (DiffKind::Curl, FieldRef::Vector(v)) => curl(v, method),
        (DiffKind::Laplacian, FieldRef::Scalar(f)) => laplacian(f, method).map(FieldValue::Scalar),
        (DiffKind::Laplacian, FieldRef::Vector(v)) => {
            let comps = v.components().iter().map(|c| laplacian(c, method)).collect::<Result<Vec<_>>>()?;
            VectorField::from_components(comps).map(FieldValue::Vector)
        }
        (kind, FieldRef::Scalar(_)) => Err(Error::contract(format!("{kind:?} needs a vector field"))),
        (kind, FieldRef::Vector(_)) => Err(Error::contract(format!("{kind:?} needs a scalar field"))),
    }
}

pub fn grad(f: &ScalarField, method: DiffMethod) -> Result<VectorField> {
    f.ensure_finite("gradient input")?;
    let grid = *f.grid();
    let comps = match method {
        DiffMethod::Spectral => {
            let spec = forward_raw(f);
            let wn = Wavenumbers::new(&grid);
            (0..grid.dim()).map(|a| inverse_raw(&grid, partial_spec(&spec, &wn, a))).collect()
        }
        _ => (0..grid.dim()).map(|a| fd_first(f, a, method)).collect(),
    };
    VectorField::from_components(comps)
}

pub fn div(v: &VectorField, method: DiffMethod) -> Result<ScalarField> {
    v.ensure_finite("divergence input")?;
    let grid = *v.grid();
    match method {
        DiffMethod::Spectral => {
            let wn = Wavenumbers::new(&grid);
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
            for (a, c) in v.components().iter().enumerate() {
                let spec = forward_raw(c);
                for (k, (o, s)) in acc.iter_mut().zip(&spec).enumerate() {
                    *o += Complex64::new(0.0, wn.at(k)[a]) * s;
                }
            }
            Ok(inverse_raw(&grid, acc))
        }
        _ => {
            let mut out = ScalarField::zeros(grid);
            for (a, c) in v.components().iter().enumerate() {
                out.axpy(1.0, &fd_first(c, a, method));
            }
            Ok(out)
        }
    }
}

/// Curl: scalar `d_x v_y - d_y v_x` in 2D, vector in 3D.
pub fn curl(v: &VectorField, method: DiffMethod) -> Result<FieldValue> {
    v.ensure_finite("curl input")?;
    let grid = *v.grid();
    let d = |comp: usize, axis: usize| -> ScalarField {
        match method {
            DiffMethod::Spectral => {
                let wn = Wavenumbers::new(&grid);
                inverse_raw(&grid, partial_spec(&forward_raw(v.component(comp)), &wn, axis))
            }
            _ => fd_first(v.component(comp), axis, method),
        }
    };
    if grid.dim() == 2 {
        Ok(FieldValue::Scalar(d(1, 0).sub(&d(0, 1))))
    } else {
        let comps = vec![d(2, 1).sub(&d(1, 2)), d(0, 2).sub(&d(2, 0)), d(1, 0).sub(&d(0, 1))];
        VectorField::from_components(comps).map(FieldValue::Vector)
    }
}

pub fn laplacian(f: &ScalarField, method: DiffMethod) -> Result<ScalarField> {
    f.ensure_finite("laplacian input")?;
    let grid = *f.grid();
    match method {
        DiffMethod::Spectral => {
            let wn = Wavenumbers::new(&grid);
            let mut spec = forward_raw(f);
            for (k, c) in spec.iter_mut().enumerate() {
                let kv = wn.at(k);
                *c *= -(kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]);
            }
            Ok(inverse_raw(&grid, spec))
        }
        _ => {
            let mut out = ScalarField::zeros(grid);
            for a in 0..grid.dim() {
                out.axpy(1.0, &fd_second(f, a, method));
            }
            Ok(out)
        }
    }
}

pub(crate) fn partial_spec(spec: &[Complex64], wn: &Wavenumbers, axis: usize) -> Vec<Complex64> {
    spec.iter()
        .enumerate()
        .map(|(k, c)| Complex64::new(0.0, wn.at(k)[axis]) * c)
        .collect()
}

fn shifted(grid: &Grid, k: usize, axis: usize, offset: isize) -> usize {
    let mut idx = grid.unflat(k);
    let n = grid.n()[axis] as isize;
    idx[axis] = (idx[axis] as isize + offset).rem_euclid(n) as usize;
    grid.flat(idx)
}

fn fd_first(f: &ScalarField, axis: usize, method: DiffMethod) -> ScalarField {
    let grid = *f.grid();
    let h = grid.spacing(axis);
    let v = f.values();
    let at = |k: usize, o: isize| v[shifted(&grid, k, axis, o)];
    let values = (0..grid.len())
        .map(|k| match method {
            DiffMethod::Central2 => (at(k, 1) - at(k, -1)) / (2.0 * h),
            _ => (-at(k, 2) + 8.0 * at(k, 1) - 8.0 * at(k, -1) + at(k, -2)) / (12.0 * h),
        })
        .collect();
    ScalarField::from_values(grid, values).expect("same grid")
}

fn fd_second(f: &ScalarField, axis: usize, method: DiffMethod) -> ScalarField {
    let grid = *f.grid();
    let h2 = grid.spacing(axis).powi(2);
    let v = f.values();
    let at = |k: usize, o: isize| v[shifted(&grid, k, axis, o)];
    let values = (0..grid.len())
        .map(|k| match method {
            DiffMethod::Central2 => (at(k, 1) - 2.0 * v[k] + at(k, -1)) / h2,
            _ => {
                (-at(k, 2) + 16.0 * at(k, 1) - 30.0 * v[k] + 16.0 * at(k, -1) - at(k, -2))
                    / (12.0 * h2)
            }
        })
        .collect();
    ScalarField::from_values(grid, values).expect("same grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random::band_limited_vector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn gradient_of_constant_vanishes() {
        let g = Grid::uniform(2, 16, 3.0).unwrap();
        for m in [DiffMethod::Spectral, DiffMethod::Central2, DiffMethod::Central4] {
            let gr = grad(&ScalarField::constant(g, 3.0), m).unwrap();
            assert!(gr.max_abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_gradient_of_sine() {
        let l = 3.0;
        let g = Grid::uniform(2, 32, l).unwrap();
        let f = ScalarField::from_fn(g, |x| (2.0 * PI * x[0] / l).sin());
        let gr = grad(&f, DiffMethod::Spectral).unwrap();
        let exact = ScalarField::from_fn(g, |x| 2.0 * PI / l * (2.0 * PI * x[0] / l).cos());
        assert!(gr.component(0).sub(&exact).max_abs() < 1e-10);
        assert!(gr.component(1).max_abs() < 1e-10);
    }

    #[test]
    fn rank_mismatch_is_rejected() {
        let g = Grid::uniform(2, 8, 1.0).unwrap();
        let s = ScalarField::zeros(g);
        let v = VectorField::zeros(g);
        assert!(apply_diff_op(DiffKind::Curl, FieldRef::Scalar(&s), DiffMethod::Spectral).is_err());
        assert!(apply_diff_op(DiffKind::Grad, FieldRef::Vector(&v), DiffMethod::Spectral).is_err());
        assert!(apply_diff_op(DiffKind::Div, FieldRef::Scalar(&s), DiffMethod::Central2).is_err());
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let g = Grid::uniform(2, 8, 1.0).unwrap();
        let mut s = ScalarField::zeros(g);
        s.values_mut()[3] = f64::NAN;
        assert!(matches!(grad(&s, DiffMethod::Spectral), Err(Error::NonFinite(_))));
    }

    #[test]
    fn spectral_identities_on_random_fields() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for g in [Grid::uniform(2, 32, 2.0).unwrap(), Grid::new(&[16, 12, 8], &[1.0, 1.5, 2.0]).unwrap()] {
            let v = band_limited_vector(&g, 4, &mut rng);
            let phi = v.component(0).clone();
            let c = curl(&v, DiffMethod::Spectral).unwrap();
            if let FieldValue::Vector(cv) = &c {
                let dc = div(cv, DiffMethod::Spectral).unwrap();
                assert!(dc.max_abs() < 1e-12 * (1.0 + cv.max_abs()));
            }
            let cg = curl(&grad(&phi, DiffMethod::Spectral).unwrap(), DiffMethod::Spectral).unwrap();
            assert!(cg.max_abs() < 1e-12 * (1.0 + phi.max_abs()));
            let lap = laplacian(&phi, DiffMethod::Spectral).unwrap();
            let dg = div(&grad(&phi, DiffMethod::Spectral).unwrap(), DiffMethod::Spectral).unwrap();
            assert!(lap.sub(&dg).max_abs() < 1e-12 * (1.0 + lap.max_abs()));
        }
    }

    #[test]
    fn curl_is_scalar_in_2d_vector_in_3d() {
        let g2 = Grid::uniform(2, 8, 1.0).unwrap();
        let g3 = Grid::uniform(3, 8, 1.0).unwrap();
        assert!(matches!(curl(&VectorField::zeros(g2), DiffMethod::Spectral).unwrap(), FieldValue::Scalar(_)));
        assert!(matches!(curl(&VectorField::zeros(g3), DiffMethod::Spectral).unwrap(), FieldValue::Vector(_)));
    }

    #[test]
    fn finite_difference_orders() {
        // refinement oracle: error ratios at n and 2n against the analytic derivative
        let l = 2.0 * PI;
        let err = |n: usize, m: DiffMethod| {
            let g = Grid::uniform(2, n, l).unwrap();
            let f = ScalarField::from_fn(g, |x| (x[0] + 0.3).sin() * (2.0 * x[1]).cos());
            let exact = ScalarField::from_fn(g, |x| (x[0] + 0.3).cos() * (2.0 * x[1]).cos());
            let lap_exact = ScalarField::from_fn(g, |x| -5.0 * (x[0] + 0.3).sin() * (2.0 * x[1]).cos());
            let d = grad(&f, m).unwrap();
            let l2 = laplacian(&f, m).unwrap();
            (d.component(0).sub(&exact).max_abs(), l2.sub(&lap_exact).max_abs())
        };
        for (m, p) in [(DiffMethod::Central2, 2.0), (DiffMethod::Central4, 4.0)] {
            let (a1, b1) = err(32, m);
            let (a2, b2) = err(64, m);
            assert!((a1 / a2).log2() > p - 0.2, "{m:?} gradient order {}", (a1 / a2).log2());
            assert!((b1 / b2).log2() > p - 0.2, "{m:?} laplacian order {}", (b1 / b2).log2());
        }
    }

    #[test]
    fn central4_divergence_converges_to_spectral() {
        // curl-free + divergence-free sum; the difference to spectral must shrink as h^4
        let l = 2.0 * PI;
        let diff = |n: usize| {
            let g = Grid::uniform(2, n, l).unwrap();
            let v = VectorField::from_fn(g, |x| {
                let (a, b) = (x[0], x[1]);
                [
                    a.cos() * b.sin() + (a + 2.0 * b).sin(),
                    -a.sin() * b.cos() + 2.0 * (a + 2.0 * b).sin() + (2.0 * b).cos(),
                    0.0,
                ]
            });
            let s = div(&v, DiffMethod::Spectral).unwrap();
            let c = div(&v, DiffMethod::Central4).unwrap();
            s.sub(&c).max_abs()
        };
        let (e1, e2) = (diff(32), diff(64));
        assert!((e1 / e2).log2() > 3.8, "order {}", (e1 / e2).log2());
    }
}
