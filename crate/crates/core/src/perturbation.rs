//! First-order fluctuation dynamics about a base flow.
//!
//! The conserved variables are `U = (p' / (rho_bar c^2), rho_bar u')` and
//! obey the linear hyperbolic system `d_t U + d_i (A_i U) = 0` with
//!
//! ```text
//! A_i = u_bar_i I + (1 / rho_bar) e_1 e_{i+1}^T + rho_bar c^2 e_{i+1} e_1^T.
//! ```
//!
//! Two spatial discretizations are provided. `Central` differentiates the
//! fluxes `A_i U` spectrally and is non-dissipative; `Upwind` splits each
//! face flux into characteristic parts and is first-order and dissipative.
//! Both are advanced with the classical four-stage Runge-Kutta method.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::baseflow::BaseFlow;
use crate::config::parse_key_values;
use crate::error::{Error, Result};
use crate::fields::io::{read_scalar_on, read_vector, write_scalar, write_vector};
use crate::fields::{div, DiffMethod, Grid, ScalarField, VectorField};
use crate::scenarios::FlowProvider;

/// Courant limit `dt (max|u_bar| + c) / h` of the upwind discretization.
pub const UPWIND_COURANT_LIMIT: f64 = 0.5;
/// Courant limit of the central (spectral) discretization.
pub const CENTRAL_COURANT_LIMIT: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxMode {
    #[default]
    Upwind,
    Central,
}

impl FluxMode {
    pub fn courant_limit(self) -> f64 {
        match self {
            FluxMode::Upwind => UPWIND_COURANT_LIMIT,
            FluxMode::Central => CENTRAL_COURANT_LIMIT,
        }
    }
}

impl fmt::Display for FluxMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FluxMode::Upwind => "upwind",
            FluxMode::Central => "central",
        })
    }
}

impl FromStr for FluxMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "upwind" => Ok(FluxMode::Upwind),
            "central" | "spectral" => Ok(FluxMode::Central),
            other => Err(format!("unknown flux mode `{other}` (expected upwind or central)")),
        }
    }
}

/// Conserved perturbation variables on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationState {
    pub t: f64,
    u1: ScalarField,
    umom: VectorField,
    rho_bar: f64,
    c: f64,
}

impl PerturbationState {
    pub fn new(t: f64, u1: ScalarField, umom: VectorField, rho_bar: f64, c: f64) -> Result<Self> {
        if !(rho_bar > 0.0 && rho_bar.is_finite() && c > 0.0 && c.is_finite()) {
            return Err(Error::contract(format!("need rho_bar > 0 and c > 0, got {rho_bar} and {c}")));
        }
        crate::fields::ensure_same_grid(u1.grid(), umom.grid(), "state components on different grids")?;
        u1.ensure_finite("perturbation state")?;
        umom.ensure_finite("perturbation state")?;
        Ok(PerturbationState { t, u1, umom, rho_bar, c })
    }

    /// State from primitive fluctuations `p'` and `u'`.
    pub fn from_primitive(t: f64, p_prime: &ScalarField, u_prime: &VectorField, rho_bar: f64, c: f64) -> Result<Self> {
        let u1 = p_prime.scale(1.0 / (rho_bar * c * c));
        PerturbationState::new(t, u1, u_prime.scale(rho_bar), rho_bar, c)
    }

    pub fn zeros(grid: &Grid, rho_bar: f64, c: f64) -> Result<Self> {
        PerturbationState::new(0.0, ScalarField::zeros(*grid), VectorField::zeros(*grid), rho_bar, c)
    }

    pub fn grid(&self) -> &Grid {
        self.u1.grid()
    }

    pub fn u1(&self) -> &ScalarField {
        &self.u1
    }

    pub fn umom(&self) -> &VectorField {
        &self.umom
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn p_prime(&self) -> ScalarField {
        self.u1.scale(self.rho_bar * self.c * self.c)
    }

    /// `rho' = p' / c^2`.
    pub fn rho_prime(&self) -> ScalarField {
        self.u1.scale(self.rho_bar)
    }

    pub fn u_prime(&self) -> VectorField {
        self.umom.scale(1.0 / self.rho_bar)
    }

    /// `a * self + b * other`, keeping this state's time.
    pub fn combine(&self, a: f64, other: &PerturbationState, b: f64) -> PerturbationState {
        let u1 = self.u1.zip_map(&other.u1, |x, y| a * x + b * y);
        let umom = self.umom.zip_components(&other.umom, |p, q| p.zip_map(q, |x, y| a * x + b * y));
        PerturbationState { t: self.t, u1, umom, rho_bar: self.rho_bar, c: self.c }
    }

    pub fn max_abs(&self) -> f64 {
        self.u1.max_abs().max(self.umom.max_abs())
    }
}

fn check_nu(nu: &[f64]) -> Result<()> {
    if !(nu.len() == 2 || nu.len() == 3) {
        return Err(Error::contract(format!("direction must have 2 or 3 components, got {}", nu.len())));
    }
    let norm = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::contract(format!("direction must be a unit vector, |nu| = {norm}")));
    }
    Ok(())
}

/// `A(nu) = A_i nu_i` for base velocity `u_bar`.
pub fn coefficient_matrix(u_bar: &[f64], rho_bar: f64, c: f64, nu: &[f64]) -> Result<DMatrix<f64>> {
    check_nu(nu)?;
    if u_bar.len() != nu.len() {
        return Err(Error::contract("u_bar and nu must have the same dimension"));
    }
    if !(rho_bar > 0.0 && c > 0.0) {
        return Err(Error::contract("need rho_bar > 0 and c > 0"));
    }
    let d = nu.len();
    let un: f64 = u_bar.iter().zip(nu).map(|(u, n)| u * n).sum();
    let mut a = DMatrix::identity(d + 1, d + 1) * un;
    for j in 0..d {
        a[(0, j + 1)] = nu[j] / rho_bar;
        a[(j + 1, 0)] = rho_bar * c * c * nu[j];
    }
    Ok(a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    /// Right eigenvectors as columns, ordered like `lambda`.
    pub r: DMatrix<f64>,
    /// Eigenvalues in ascending order.
    pub lambda: DVector<f64>,
    pub r_inv: DMatrix<f64>,
}

impl Eigensystem {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.r * DMatrix::from_diagonal(&self.lambda) * &self.r_inv
    }

    /// `R max(L, 0) R^-1` and `R min(L, 0) R^-1`.
    pub fn split(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let plus = self.lambda.map(|l| l.max(0.0));
        let minus = self.lambda.map(|l| l.min(0.0));
        (
            &self.r * DMatrix::from_diagonal(&plus) * &self.r_inv,
            &self.r * DMatrix::from_diagonal(&minus) * &self.r_inv,
        )
    }
}

/// Parameters `(u_bar . nu, nu, rho_bar, c)` read back from a matrix of the
/// form produced by [`coefficient_matrix`].
fn structure_of(a: &DMatrix<f64>) -> Result<(f64, Vec<f64>, f64, f64)> {
    let m = a.nrows();
    if a.ncols() != m || !(m == 3 || m == 4) {
        return Err(Error::contract(format!("A(nu) must be 3x3 or 4x4, got {}x{}", a.nrows(), a.ncols())));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("coefficient matrix"));
    }
    let d = m - 1;
    let un = a[(0, 0)];
    let top: Vec<f64> = (1..m).map(|j| a[(0, j)]).collect();
    let left: Vec<f64> = (1..m).map(|j| a[(j, 0)]).collect();
    let inv_rho = top.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rho_c2 = left.iter().map(|v| v * v).sum::<f64>().sqrt();
    if inv_rho == 0.0 || rho_c2 == 0.0 {
        return Err(Error::contract("direction undefined: coupling entries of A(nu) vanish"));
    }
    let rho_bar = 1.0 / inv_rho;
    let c = (rho_c2 * inv_rho).sqrt();
    let nu: Vec<f64> = top.iter().map(|v| v * rho_bar).collect();
    let rebuilt = coefficient_matrix(&vec![0.0; d], rho_bar, c, &normalized(&nu))?
        + DMatrix::identity(m, m) * un;
    let scale = a.amax().max(1.0);
    if (&rebuilt - a).amax() > 1e-10 * scale {
        return Err(Error::contract("matrix does not have the structure of A(nu)"));
    }
    Ok((un, normalized(&nu), rho_bar, c))
}

fn normalized(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Shear directions orthogonal to `nu`: `nu_p e_k - nu_k e_p` for every
/// `k != p`, pivoting on the largest component `p` of `nu`.
pub(crate) fn shear_vectors(nu: &[f64]) -> Vec<Vec<f64>> {
    let d = nu.len();
    let p = (0..d).fold(0, |best, k| if nu[k].abs() > nu[best].abs() { k } else { best });
    (0..d)
        .filter(|&k| k != p)
        .map(|k| {
            let mut w = vec![0.0; d];
            w[k] = nu[p];
            w[p] = -nu[k];
            w
        })
        .collect()
}

/// Analytic eigensystem of `A(nu)`: acoustic speeds `u_bar.nu -/+ c` with
/// eigenvectors `(1, -/+ rho_bar c nu)`, and `d - 1` shear modes `(0, w)`,
/// `w . nu = 0`, moving at `u_bar.nu`.
pub fn eigendecompose(a: &DMatrix<f64>) -> Result<Eigensystem> {
    let (un, nu, rho_bar, c) = structure_of(a)?;
    let d = nu.len();
    let m = d + 1;
    let mut r = DMatrix::zeros(m, m);
    let mut lambda = DVector::zeros(m);
    let acoustic = |col: usize, sign: f64, r: &mut DMatrix<f64>| {
        r[(0, col)] = 1.0;
        for j in 0..d {
            r[(j + 1, col)] = sign * rho_bar * c * nu[j];
        }
    };
    acoustic(0, -1.0, &mut r);
    lambda[0] = un - c;
    for (s, w) in shear_vectors(&nu).iter().enumerate() {
        for j in 0..d {
            r[(j + 1, s + 1)] = w[j];
        }
        lambda[s + 1] = un;
    }
    acoustic(m - 1, 1.0, &mut r);
    lambda[m - 1] = un + c;
    let r_inv = r.clone().try_inverse().ok_or_else(|| Error::contract("singular eigenvector matrix"))?;
    Ok(Eigensystem { r, lambda, r_inv })
}

/// `Ma / Re` of the provider, zero when either is zero or `Re` is infinite.
pub fn residual_ma_re(provider: &FlowProvider) -> f64 {
    let (ma, re) = (provider.mach(), provider.reynolds());
    if ma == 0.0 || re.is_infinite() {
        0.0
    } else {
        ma / re
    }
}

fn check_compatible(state: &PerturbationState, bf: &BaseFlow) -> Result<()> {
    crate::fields::ensure_same_grid(state.grid(), bf.grid(), "state and base flow on different grids")?;
    let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    if !rel(state.rho_bar, bf.rho_bar()) || !rel(state.c, bf.c()) {
        return Err(Error::contract(format!(
            "state constants (rho_bar {}, c {}) differ from base flow ({}, {})",
            state.rho_bar,
            state.c,
            bf.rho_bar(),
            bf.c()
        )));
    }
    Ok(())
}

/// `dt (max|u_bar| + c) / min spacing` over the step `[t, t + dt]`.
pub fn courant_number(bf: &BaseFlow, t: f64, dt: f64) -> f64 {
    let umax = [t, t + 0.5 * dt, t + dt]
        .iter()
        .map(|&s| bf.u_bar_at(s).max_norm())
        .fold(0.0, f64::max);
    dt * (umax + bf.c()) / bf.grid().min_spacing()
}

/// Right-hand side `-d_i (A_i U)` at time `t`.
pub fn rhs(state: &PerturbationState, bf: &BaseFlow, t: f64, mode: FluxMode) -> Result<PerturbationState> {
    let u_bar = bf.u_bar_at(t);
    match mode {
        FluxMode::Central => central_rhs(state, &u_bar),
        FluxMode::Upwind => upwind_rhs(state, &u_bar),
    }
}

fn central_rhs(state: &PerturbationState, u_bar: &VectorField) -> Result<PerturbationState> {
    let d = state.grid().dim();
    let (rho, c) = (state.rho_bar, state.c);
    // row 1: u_bar_i U1 + M_i / rho
    let flux0: Vec<ScalarField> = (0..d)
        .map(|i| {
            let mut f = u_bar.component(i).mul(&state.u1);
            f.axpy(1.0 / rho, state.umom.component(i));
            f
        })
        .collect();
    let d_u1 = div(&VectorField::from_components(flux0)?, DiffMethod::Spectral)?.scale(-1.0);
    let mut d_mom = Vec::with_capacity(d);
    for j in 0..d {
        let flux: Vec<ScalarField> = (0..d)
            .map(|i| {
                let mut f = u_bar.component(i).mul(state.umom.component(j));
                if i == j {
                    f.axpy(rho * c * c, &state.u1);
                }
                f
            })
            .collect();
        d_mom.push(div(&VectorField::from_components(flux)?, DiffMethod::Spectral)?.scale(-1.0));
    }
    Ok(PerturbationState { t: state.t, u1: d_u1, umom: VectorField::from_components(d_mom)?, rho_bar: rho, c })
}

fn upwind_rhs(state: &PerturbationState, u_bar: &VectorField) -> Result<PerturbationState> {
    let grid = *state.grid();
    let d = grid.dim();
    let m = d + 1;
    let (rho, c) = (state.rho_bar, state.c);
    let n = grid.len();
    let comp = |r: usize, k: usize| if r == 0 { state.u1.values()[k] } else { state.umom.component(r - 1).values()[k] };
    let mut out = vec![vec![0.0; n]; m];
    let mut cache: Option<(f64, DMatrix<f64>, DMatrix<f64>)> = None;
    for axis in 0..d {
        let h = grid.spacing(axis);
        let mut nu = vec![0.0; d];
        nu[axis] = 1.0;
        let ub = u_bar.component(axis).values();
        for k in 0..n {
            let mut idx = grid.unflat(k);
            idx[axis] = (idx[axis] + 1) % grid.n()[axis];
            let kr = grid.flat(idx);
            // only the normal velocity enters A(e_axis)
            let un = 0.5 * (ub[k] + ub[kr]);
            let (ap, am) = match &cache {
                Some((v, ap, am)) if *v == un => (ap.clone(), am.clone()),
                _ => {
                    let mut u_face = vec![0.0; d];
                    u_face[axis] = un;
                    let (ap, am) = eigendecompose(&coefficient_matrix(&u_face, rho, c, &nu)?)?.split();
                    cache = Some((un, ap.clone(), am.clone()));
                    (ap, am)
                }
            };
            for r in 0..m {
                let mut f = 0.0;
                for s in 0..m {
                    f += ap[(r, s)] * comp(s, k) + am[(r, s)] * comp(s, kr);
                }
                // face flux leaves cell k and enters cell kr
                out[r][k] -= f / h;
                out[r][kr] += f / h;
            }
        }
    }
    let mut rows = out.into_iter();
    let u1 = ScalarField::from_values(grid, rows.next().expect("row"))?;
    let umom = VectorField::from_components(rows.map(|v| ScalarField::from_values(grid, v)).collect::<Result<_>>()?)?;
    Ok(PerturbationState { t: state.t, u1, umom, rho_bar: rho, c })
}

/// One classical RK4 step of `d_t U = -d_i (A_i U)` from `state.t` to `state.t + dt`.
pub fn step(state: &PerturbationState, bf: &BaseFlow, dt: f64, mode: FluxMode) -> Result<PerturbationState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    check_compatible(state, bf)?;
    state.u1.ensure_finite("perturbation state")?;
    state.umom.ensure_finite("perturbation state")?;
    let t = state.t;
    let courant = courant_number(bf, t, dt);
    let limit = mode.courant_limit();
    if courant > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { courant, limit });
    }
    let k1 = rhs(state, bf, t, mode)?;
    let k2 = rhs(&state.combine(1.0, &k1, 0.5 * dt), bf, t + 0.5 * dt, mode)?;
    let k3 = rhs(&state.combine(1.0, &k2, 0.5 * dt), bf, t + 0.5 * dt, mode)?;
    let k4 = rhs(&state.combine(1.0, &k3, dt), bf, t + dt, mode)?;
    let incr = k1.combine(1.0, &k2, 2.0).combine(1.0, &k3, 2.0).combine(1.0, &k4, 1.0);
    let mut next = state.combine(1.0, &incr, dt / 6.0);
    next.t = t + dt;
    next.u1.ensure_finite("perturbation state")?;
    next.umom.ensure_finite("perturbation state")?;
    Ok(next)
}

/// Take `steps` steps and return the trajectory including the initial state.
pub fn evolve(
    state: &PerturbationState,
    bf: &BaseFlow,
    dt: f64,
    steps: usize,
    mode: FluxMode,
) -> Result<Vec<PerturbationState>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(state.clone());
    for _ in 0..steps {
        let next = step(out.last().expect("non-empty"), bf, dt, mode)?;
        out.push(next);
    }
    Ok(out)
}

/// Write `<stem>.u1.afld`, `<stem>.umom.afld` and `<stem>.meta` into `dir`.
pub fn write_checkpoint(dir: impl AsRef<Path>, stem: &str, state: &PerturbationState, mode: FluxMode) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_scalar(dir.join(format!("{stem}.u1.afld")), &state.u1)?;
    write_vector(dir.join(format!("{stem}.umom.afld")), &state.umom)?;
    let meta = format!("t = {}\nrho_bar = {}\nc = {}\nflux_mode = {}\n", state.t, state.rho_bar, state.c, mode);
    fs::write(dir.join(format!("{stem}.meta")), meta)?;
    Ok(())
}

pub fn read_checkpoint(dir: impl AsRef<Path>, stem: &str) -> Result<(PerturbationState, FluxMode)> {
    let dir = dir.as_ref();
    let meta_path = dir.join(format!("{stem}.meta"));
    let kv = parse_key_values(&fs::read_to_string(&meta_path)?, &meta_path)?;
    let get = |k: &str| -> Result<&str> {
        kv.iter()
            .find(|(key, _, _)| key == k)
            .map(|(_, v, _)| v.as_str())
            .ok_or_else(|| Error::Parse { path: meta_path.clone(), message: format!("missing key {k}") })
    };
    let num = |k: &str| -> Result<f64> {
        get(k)?.parse().map_err(|_| Error::Parse { path: meta_path.clone(), message: format!("bad value for {k}") })
    };
    let mode = get("flux_mode")?
        .parse::<FluxMode>()
        .map_err(|message| Error::Parse { path: meta_path.clone(), message })?;
    let umom = read_vector(dir.join(format!("{stem}.umom.afld")))?;
    let u1 = read_scalar_on(dir.join(format!("{stem}.u1.afld")), umom.grid())?;
    Ok((PerturbationState::new(num("t")?, u1, umom, num("rho_bar")?, num("c")?)?, mode))
}
