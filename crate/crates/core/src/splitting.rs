//! Acoustic/vortical splitting of velocity fluctuations.
//!
//! On a periodic grid the Helmholtz decomposition is exact in Fourier space:
//! the acoustic part is `B(a) u_hat` with `B = a a^T / |a|^2` and the vortical
//! part is the remainder. Modes with a zero derivative wavevector (the mean
//! and the Nyquist modes) are assigned to the vortical part, so the acoustic
//! part is mean-free and its potential is well defined.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::baseflow::BaseFlow;
use crate::error::{Error, Result};
use crate::fields::io::write_vector;
use crate::fields::{
    curl, div, forward_raw, grad, inverse_raw, laplacian, DiffMethod, FieldValue, ScalarField,
    VectorField, Wavenumbers,
};
use crate::perturbation::{shear_vectors, CENTRAL_COURANT_LIMIT};

#[derive(Debug, Clone, PartialEq)]
pub struct SplitVelocity {
    pub u_a: VectorField,
    pub u_v: VectorField,
    /// Potential with `u_a = grad phi`, zero mean.
    pub phi: ScalarField,
}

/// Sup norms backing the splitting guarantees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCertificates {
    /// max |curl u_a|
    pub curl_ua: f64,
    /// max |div u_v|
    pub div_uv: f64,
    /// max |u_a + u_v - u|
    pub recombination: f64,
    pub ua_norm: f64,
    pub uv_norm: f64,
}

impl SplitCertificates {
    /// `curl_ua / (|u_a| + tiny)`, comparable against a relative tolerance.
    pub fn curl_relative(&self) -> f64 {
        self.curl_ua / self.ua_norm.max(f64::MIN_POSITIVE)
    }

    pub fn div_relative(&self) -> f64 {
        self.div_uv / self.uv_norm.max(f64::MIN_POSITIVE)
    }

    /// Both differential certificates hold with relative tolerance `rel`
    /// plus absolute floor `abs`.
    pub fn holds(&self, rel: f64, abs: f64) -> bool {
        self.curl_ua < rel * self.ua_norm + abs && self.div_uv < rel * self.uv_norm + abs
    }
}

impl SplitVelocity {
    pub fn certificates(&self, input: &VectorField) -> SplitCertificates {
        let curl_ua = match curl(&self.u_a, DiffMethod::Spectral).expect("finite split") {
            FieldValue::Scalar(s) => s.max_abs(),
            FieldValue::Vector(v) => v.max_abs(),
        };
        let div_uv = div(&self.u_v, DiffMethod::Spectral).expect("finite split").max_abs();
        let recombination = self.u_a.add(&self.u_v).sub(input).max_abs();
        SplitCertificates {
            curl_ua,
            div_uv,
            recombination,
            ua_norm: self.u_a.max_abs(),
            uv_norm: self.u_v.max_abs(),
        }
    }
}

/// Spectral Helmholtz projection of `u_prime`.
pub fn helmholtz_split(u_prime: &VectorField) -> Result<SplitVelocity> {
    u_prime.ensure_finite("velocity fluctuation")?;
    let grid = *u_prime.grid();
    let d = grid.dim();
    let wn = Wavenumbers::new(&grid);
    let spec: Vec<Vec<Complex64>> = u_prime.components().iter().map(forward_raw).collect();
    let mut ua: Vec<Vec<Complex64>> = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; d];
    let mut phi = vec![Complex64::new(0.0, 0.0); grid.len()];
    for k in 0..grid.len() {
        let a = wn.at(k);
        let a2: f64 = a[..d].iter().map(|v| v * v).sum();
        if a2 == 0.0 {
            continue;
        }
        let adot: Complex64 = (0..d).map(|j| spec[j][k] * a[j]).sum();
        for j in 0..d {
            ua[j][k] = adot * (a[j] / a2);
        }
        // u_a = i a phi
        phi[k] = Complex64::new(0.0, -1.0) * adot / a2;
    }
    let u_a = VectorField::from_components(ua.into_iter().map(|c| inverse_raw(&grid, c)).collect())?;
    let u_v = u_prime.sub(&u_a);
    Ok(SplitVelocity { u_a, u_v, phi: inverse_raw(&grid, phi) })
}

/// Curl-free field with divergence `theta`: `u_hat = -i a theta_hat / |a|^2`,
/// zero mode set to 0.
pub fn curl_free_from_divergence(theta: &ScalarField) -> Result<VectorField> {
    theta.ensure_finite("divergence")?;
    let grid = *theta.grid();
    let d = grid.dim();
    let wn = Wavenumbers::new(&grid);
    let spec = forward_raw(theta);
    let mut out = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; d];
    for (k, th) in spec.iter().enumerate() {
        let a = wn.at(k);
        let a2: f64 = a[..d].iter().map(|v| v * v).sum();
        if a2 == 0.0 {
            continue;
        }
        for j in 0..d {
            out[j][k] = Complex64::new(0.0, -a[j] / a2) * th;
        }
    }
    VectorField::from_components(out.into_iter().map(|c| inverse_raw(&grid, c)).collect())
}

/// Right-hand side of the convected wave system
/// `d_t p = -u_bar.grad p - rho_bar c^2 theta`,
/// `d_t theta = -u_bar.grad theta - (lap p + s) / rho_bar`.
pub(crate) fn wave_rhs(
    p: &ScalarField,
    theta: &ScalarField,
    u_bar: &VectorField,
    source: Option<&ScalarField>,
    rho_bar: f64,
    c: f64,
) -> Result<(ScalarField, ScalarField)> {
    let gp = grad(p, DiffMethod::Spectral)?;
    let gt = grad(theta, DiffMethod::Spectral)?;
    let mut dp = u_bar.dot_field(&gp).scale(-1.0);
    dp.axpy(-rho_bar * c * c, theta);
    let mut dtheta = u_bar.dot_field(&gt).scale(-1.0);
    let mut forcing = laplacian(p, DiffMethod::Spectral)?;
    if let Some(s) = source {
        forcing.axpy(1.0, s);
    }
    dtheta.axpy(-1.0 / rho_bar, &forcing);
    Ok((dp, dtheta))
}

pub(crate) fn check_wave_courant(bf: &BaseFlow, t: f64, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    let courant = crate::perturbation::courant_number(bf, t, dt);
    if courant > CENTRAL_COURANT_LIMIT * (1.0 + 1e-12) {
        return Err(Error::Cfl { courant, limit: CENTRAL_COURANT_LIMIT });
    }
    Ok(())
}

/// RK4 step of the wave system with a source that may depend on the stage time.
pub(crate) fn wave_step<F>(
    p: &ScalarField,
    theta: &ScalarField,
    bf: &BaseFlow,
    t: f64,
    dt: f64,
    mut source: F,
) -> Result<(ScalarField, ScalarField)>
where
    F: FnMut(f64) -> Result<Option<ScalarField>>,
{
    check_wave_courant(bf, t, dt)?;
    p.ensure_finite("acoustic pressure")?;
    theta.ensure_finite("acoustic divergence")?;
    let (rho, c) = (bf.rho_bar(), bf.c());
    let mut eval = |tt: f64, pp: &ScalarField, th: &ScalarField| -> Result<(ScalarField, ScalarField)> {
        let s = source(tt)?;
        wave_rhs(pp, th, &bf.u_bar_at(tt), s.as_ref(), rho, c)
    };
    let stage = |base: &ScalarField, k: &ScalarField, w: f64| base.zip_map(k, |a, b| a + w * b);
    let (kp1, kt1) = eval(t, p, theta)?;
    let (kp2, kt2) = eval(t + 0.5 * dt, &stage(p, &kp1, 0.5 * dt), &stage(theta, &kt1, 0.5 * dt))?;
    let (kp3, kt3) = eval(t + 0.5 * dt, &stage(p, &kp2, 0.5 * dt), &stage(theta, &kt2, 0.5 * dt))?;
    let (kp4, kt4) = eval(t + dt, &stage(p, &kp3, dt), &stage(theta, &kt3, dt))?;
    let combine = |x: &ScalarField, k1: &ScalarField, k2: &ScalarField, k3: &ScalarField, k4: &ScalarField| {
        let mut out = x.clone();
        let v = out.values_mut();
        for (i, o) in v.iter_mut().enumerate() {
            *o += dt / 6.0
                * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i]);
        }
        out
    };
    let p_next = combine(p, &kp1, &kp2, &kp3, &kp4);
    let t_next = combine(theta, &kt1, &kt2, &kt3, &kt4);
    p_next.ensure_finite("acoustic pressure")?;
    t_next.ensure_finite("acoustic divergence")?;
    Ok((p_next, t_next))
}

/// Advance the closed acoustic subsystem
/// `D(p' / (rho_bar c^2))/Dt = -div u_a`, `D(div u_a)/Dt = -lap p' / rho_bar`
/// by one RK4 step, `D/Dt = d_t + u_bar.grad`.
pub fn acoustic_subsystem_step(
    p_prime: &ScalarField,
    div_ua: &ScalarField,
    bf: &BaseFlow,
    t: f64,
    dt: f64,
) -> Result<(ScalarField, ScalarField)> {
    wave_step(p_prime, div_ua, bf, t, dt, |_| Ok(None))
}

/// Residual of the vortical constraint
/// `curl(d_t u_v + d_i(u_bar_i u_v)) + curl(d_i(u_bar_i u_a)) = 0`.
///
/// `u_v_series` and `u_a_series` are samples spaced `dt` apart starting at
/// `t`. With two samples the residual is centered at `t + dt / 2`; with three
/// or more it is centered on the middle sample using its two neighbours.
/// Returns a scalar in 2D and a vector in 3D.
pub fn vortical_constraint_residual(
    u_v_series: &[VectorField],
    u_a_series: &[VectorField],
    bf: &BaseFlow,
    t: f64,
    dt: f64,
) -> Result<FieldValue> {
    let n = u_v_series.len();
    if n < 2 || u_a_series.len() != n {
        return Err(Error::InsufficientSamples(format!(
            "need at least 2 matching samples of u_v and u_a, got {} and {}",
            n,
            u_a_series.len()
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    let (dudt, uv, ua, tc) = if n == 2 {
        (
            u_v_series[1].sub(&u_v_series[0]).scale(1.0 / dt),
            u_v_series[0].add(&u_v_series[1]).scale(0.5),
            u_a_series[0].add(&u_a_series[1]).scale(0.5),
            t + 0.5 * dt,
        )
    } else {
        let m = n / 2;
        (
            u_v_series[m + 1].sub(&u_v_series[m - 1]).scale(0.5 / dt),
            u_v_series[m].clone(),
            u_a_series[m].clone(),
            t + m as f64 * dt,
        )
    };
    let u_bar = bf.u_bar_at(tc);
    let total = uv.add(&ua);
    let d = total.dim();
    let mut comps = Vec::with_capacity(d);
    for j in 0..d {
        let flux = VectorField::from_components((0..d).map(|i| u_bar.component(i).mul(total.component(j))).collect())?;
        comps.push(dudt.component(j).add(&div(&flux, DiffMethod::Spectral)?));
    }
    curl(&VectorField::from_components(comps)?, DiffMethod::Spectral)
}

/// Spatial eigenstructure of the fluctuation system at one wavevector in
/// `(p', u')` variables, with the Laplace frequency slot set to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorSet {
    pub alpha: Vec<f64>,
    /// `a a^T / |a|^2`
    pub b: DMatrix<f64>,
    /// `I - B`
    pub c: DMatrix<f64>,
    /// Columns: the two acoustic modes `(1, +/- a / (|a| c rho_bar))`, then
    /// the `d - 1` shear modes.
    pub r: DMatrix<f64>,
    /// `diag(-|a| c, |a| c, 0, ..)`
    pub lambda: DVector<f64>,
    pub r_inv: DMatrix<f64>,
    pub i_a: DMatrix<f64>,
    pub i_v: DMatrix<f64>,
    /// `u_bar . a`, a common shift of every eigenvalue; it leaves the projectors unchanged.
    pub doppler: f64,
}

impl ProjectorSet {
    /// `R I_a R^-1`
    pub fn acoustic(&self) -> DMatrix<f64> {
        &self.r * &self.i_a * &self.r_inv
    }

    /// `R I_v R^-1`
    pub fn vortical(&self) -> DMatrix<f64> {
        &self.r * &self.i_v * &self.r_inv
    }

    /// `diag(1, B)` and `diag(0, C)` with the pressure slot in front.
    pub fn expected(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let d = self.b.nrows();
        let mut a = DMatrix::zeros(d + 1, d + 1);
        let mut v = DMatrix::zeros(d + 1, d + 1);
        a[(0, 0)] = 1.0;
        a.view_mut((1, 1), (d, d)).copy_from(&self.b);
        v.view_mut((1, 1), (d, d)).copy_from(&self.c);
        (a, v)
    }

    /// max deviation of the two projectors from `diag(1, B)` and `diag(0, C)`.
    pub fn defect(&self) -> f64 {
        let (ea, ev) = self.expected();
        (self.acoustic() - ea).amax().max((self.vortical() - ev).amax())
    }
}

pub fn spectral_projectors(alpha: &[f64], u_bar: &[f64], rho_bar: f64, c: f64) -> Result<ProjectorSet> {
    let d = alpha.len();
    if !(d == 2 || d == 3) || u_bar.len() != d {
        return Err(Error::contract("alpha and u_bar must both have 2 or 3 components"));
    }
    let norm = alpha.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::contract("projectors are undefined at the zero wavevector"));
    }
    if !(rho_bar > 0.0 && c > 0.0) {
        return Err(Error::contract("need rho_bar > 0 and c > 0"));
    }
    let nu: Vec<f64> = alpha.iter().map(|v| v / norm).collect();
    let nu_v = DVector::from_column_slice(&nu);
    let b = &nu_v * nu_v.transpose();
    let cm = DMatrix::identity(d, d) - &b;
    let m = d + 1;
    let mut r = DMatrix::zeros(m, m);
    for (col, sign) in [(0usize, 1.0), (1, -1.0)] {
        r[(0, col)] = 1.0;
        for j in 0..d {
            r[(j + 1, col)] = sign * nu[j] / (c * rho_bar);
        }
    }
    for (s, w) in shear_vectors(&nu).iter().enumerate() {
        for j in 0..d {
            r[(j + 1, s + 2)] = w[j];
        }
    }
    let mut lambda = DVector::zeros(m);
    lambda[0] = -norm * c;
    lambda[1] = norm * c;
    let r_inv = r.clone().try_inverse().ok_or_else(|| Error::contract("singular eigenvector matrix"))?;
    let mut i_a = DMatrix::zeros(m, m);
    i_a[(0, 0)] = 1.0;
    i_a[(1, 1)] = 1.0;
    let i_v = DMatrix::identity(m, m) - &i_a;
    let doppler = u_bar.iter().zip(alpha).map(|(u, a)| u * a).sum();
    Ok(ProjectorSet { alpha: alpha.to_vec(), b, c: cm, r, lambda, r_inv, i_a, i_v, doppler })
}

/// Write `<stem>.ua` and `<stem>.uv` AFLD vector files into `dir`.
pub fn write_split(dir: impl AsRef<Path>, stem: &str, split: &SplitVelocity) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_vector(dir.join(format!("{stem}.ua")), &split.u_a)?;
    write_vector(dir.join(format!("{stem}.uv")), &split.u_v)?;
    Ok(())
}
