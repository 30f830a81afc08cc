//! Energy, intensity and scale-separation diagnostics.
//!
//! With `V = (rho_bar^2 c^2 U_1, U_mom) = (rho_bar p', rho_bar u')` the
//! symmetrizer `A0 = diag(1 / (rho_bar^2 c^2), 1, .., 1)` and
//! `A_i = u_bar_i A0 + (1 / rho_bar)(e_1 e_{i+1}^T + e_{i+1} e_1^T)` give the
//! energy `eta = V^T A0 V / 2 = (p'^2 / c^2 + rho_bar^2 |u'|^2) / 2` and its
//! flux `q_i = V^T A_i V / 2 = eta u_bar_i + rho_bar p' u'_i`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::baseflow::BaseFlow;
use crate::error::{Error, Result};
use crate::fields::{div, DiffMethod, ScalarField, VectorField};
use crate::perturbation::PerturbationState;
use crate::scenarios::FlowProvider;
use crate::splitting::helmholtz_split;

/// Symmetrizer matrices; `A_i` are built per cell on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetrizerSet {
    pub a_hat_0: DMatrix<f64>,
    pub u_bar: VectorField,
    pub rho_bar: f64,
    pub c: f64,
}

impl SymmetrizerSet {
    pub fn new(u_bar: VectorField, rho_bar: f64, c: f64) -> Self {
        let d = u_bar.dim();
        let mut a0 = DMatrix::identity(d + 1, d + 1);
        a0[(0, 0)] = 1.0 / (rho_bar * rho_bar * c * c);
        SymmetrizerSet { a_hat_0: a0, u_bar, rho_bar, c }
    }

    /// `A_i` at flat cell index `cell`.
    pub fn a_hat(&self, axis: usize, cell: usize) -> DMatrix<f64> {
        let mut a = &self.a_hat_0 * self.u_bar.component(axis).values()[cell];
        a[(0, axis + 1)] += 1.0 / self.rho_bar;
        a[(axis + 1, 0)] += 1.0 / self.rho_bar;
        a
    }

    /// Largest asymmetry over `A0` and every `A_i` at every cell.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst = (&self.a_hat_0 - self.a_hat_0.transpose()).amax();
        for axis in 0..self.u_bar.dim() {
            for cell in 0..self.u_bar.grid().len() {
                let a = self.a_hat(axis, cell);
                worst = worst.max((&a - a.transpose()).amax());
            }
        }
        worst
    }

    /// Smallest eigenvalue of `A0`.
    pub fn a0_min_eigenvalue(&self) -> f64 {
        self.a_hat_0.clone().symmetric_eigenvalues().min()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Symmetrized {
    pub v1: ScalarField,
    pub v_mom: VectorField,
    pub set: SymmetrizerSet,
}

impl Symmetrized {
    pub fn vector_at(&self, cell: usize) -> DVector<f64> {
        let d = self.v_mom.dim();
        DVector::from_fn(d + 1, |r, _| {
            if r == 0 {
                self.v1.values()[cell]
            } else {
                self.v_mom.component(r - 1).values()[cell]
            }
        })
    }
}

pub fn symmetrize(state: &PerturbationState, bf: &BaseFlow) -> Symmetrized {
    let (rho, c) = (state.rho_bar(), state.c());
    Symmetrized {
        v1: state.u1().scale(rho * rho * c * c),
        v_mom: state.umom().clone(),
        set: SymmetrizerSet::new(bf.u_bar_at(state.t), rho, c),
    }
}

/// `eta = (p'^2 / c^2 + rho_bar^2 |u'|^2) / 2`
pub fn energy_density(state: &PerturbationState) -> ScalarField {
    let c2 = state.c() * state.c();
    let p = state.p_prime();
    let mut eta = p.mul(&p).scale(0.5 / c2);
    for m in state.umom().components() {
        eta.axpy(0.5, &m.mul(m));
    }
    eta
}

/// `q_i = eta u_bar_i + rho_bar p' u'_i` with `u_bar` at the state's time.
pub fn energy_flux(state: &PerturbationState, bf: &BaseFlow) -> VectorField {
    let eta = energy_density(state);
    let u_bar = bf.u_bar_at(state.t);
    let p = state.p_prime();
    let comps = (0..u_bar.dim())
        .map(|i| {
            let mut q = eta.mul(u_bar.component(i));
            q.axpy(1.0, &p.mul(state.umom().component(i)));
            q
        })
        .collect();
    VectorField::from_components(comps).expect("components share the grid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    pub total_eta: Vec<f64>,
    pub total_acoustic: Vec<f64>,
    pub total_vortical: Vec<f64>,
    /// `(E(t) - E(t0)) / E(t0)`, zero when `E(t0) = 0`
    pub drift: Vec<f64>,
}

impl EnergyReport {
    pub fn max_abs_drift(&self) -> f64 {
        self.drift.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// max over times of `|eta - (acoustic + vortical)| / eta`.
    pub fn max_identity_defect(&self) -> f64 {
        self.total_eta
            .iter()
            .zip(self.total_acoustic.iter().zip(&self.total_vortical))
            .map(|(&e, (&a, &v))| if e == 0.0 { (a + v).abs() } else { (e - (a + v)).abs() / e })
            .fold(0.0, f64::max)
    }

    /// Whether total energy never increases from one entry to the next,
    /// allowing a relative roundoff slack.
    pub fn is_non_increasing(&self, slack: f64) -> bool {
        self.total_eta.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,total_eta,total_acoustic,total_vortical,drift\n");
        for k in 0..self.times.len() {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                self.times[k], self.total_eta[k], self.total_acoustic[k], self.total_vortical[k], self.drift[k]
            );
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Total, acoustic and vortical energy along a trajectory.
pub fn conservation_drift(trajectory: &[PerturbationState]) -> Result<EnergyReport> {
    let mut rep = EnergyReport {
        times: Vec::new(),
        total_eta: Vec::new(),
        total_acoustic: Vec::new(),
        total_vortical: Vec::new(),
        drift: Vec::new(),
    };
    for s in trajectory {
        let vol = s.grid().cell_volume();
        let rho2 = s.rho_bar() * s.rho_bar();
        let eta = energy_density(s).integral();
        let split = helmholtz_split(&s.u_prime())?;
        let p = s.p_prime();
        let pressure = 0.5 * p.dot(&p) * vol / (s.c() * s.c());
        let acoustic = pressure + 0.5 * rho2 * split.u_a.dot(&split.u_a) * vol;
        let vortical = 0.5 * rho2 * split.u_v.dot(&split.u_v) * vol;
        rep.times.push(s.t);
        rep.total_eta.push(eta);
        rep.total_acoustic.push(acoustic);
        rep.total_vortical.push(vortical);
    }
    let e0 = rep.total_eta.first().copied().unwrap_or(0.0);
    rep.drift = rep.total_eta.iter().map(|&e| if e0 == 0.0 { 0.0 } else { (e - e0) / e0 }).collect();
    Ok(rep)
}

/// `d_t eta + div q` at the middle of three states spaced `dt` apart,
/// with a centered time difference.
pub fn energy_balance_residual(
    prev: &PerturbationState,
    mid: &PerturbationState,
    next: &PerturbationState,
    bf: &BaseFlow,
    dt: f64,
) -> Result<ScalarField> {
    let mut r = energy_density(next).sub(&energy_density(prev)).scale(0.5 / dt);
    r.axpy(1.0, &div(&energy_flux(mid, bf), DiffMethod::Spectral)?);
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntensityField {
    pub i: VectorField,
    /// Length of the averaging window in time.
    pub window: f64,
    /// max |div I|
    pub div_norm: f64,
}

/// Arithmetic average of `E u_bar + p' u'` over the first `window` stored
/// states, `E = (p'^2 / (rho_bar c^2) + rho_bar |u'|^2) / 2`. With equally
/// spaced states this is the periodic trapezoid rule over `window` steps.
pub fn intensity(trajectory: &[PerturbationState], bf: &BaseFlow, window: usize) -> Result<IntensityField> {
    if window == 0 {
        return Err(Error::contract("intensity window must contain at least one step"));
    }
    if trajectory.len() < window + 1 {
        return Err(Error::InsufficientSamples(format!(
            "window of {window} steps exceeds trajectory of {} steps",
            trajectory.len().saturating_sub(1)
        )));
    }
    let grid = *trajectory[0].grid();
    let mut acc = VectorField::zeros(grid);
    for s in &trajectory[..window] {
        let (rho, c) = (s.rho_bar(), s.c());
        let p = s.p_prime();
        let u = s.u_prime();
        let mut e = p.mul(&p).scale(0.5 / (rho * c * c));
        for comp in u.components() {
            e.axpy(0.5 * rho, &comp.mul(comp));
        }
        let u_bar = bf.u_bar_at(s.t);
        for a in 0..grid.dim() {
            let mut term = e.mul(u_bar.component(a));
            term.axpy(1.0, &p.mul(u.component(a)));
            acc.component_mut(a).axpy(1.0 / window as f64, &term);
        }
    }
    let div_norm = div(&acc, DiffMethod::Spectral)?.max_abs();
    Ok(IntensityField { i: acc, window: trajectory[window].t - trajectory[0].t, div_norm })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleReport {
    /// max |rho - rho_bar| / rho_bar
    pub density_ratio: f64,
    /// max |u'| / max |u_bar|; infinite when `u_bar = 0` but `u' != 0`
    pub velocity_ratio: f64,
    /// max |p - p_bar| / p_bar
    pub pressure_ratio: f64,
    /// max |u'| / c
    pub fluctuation_mach: f64,
}

pub fn scale_separation(provider: &FlowProvider, bf: &BaseFlow, t: f64) -> Result<ScaleReport> {
    let snap = provider.sample(bf.grid(), t)?;
    let u_prime = snap.u.sub(&bf.u_bar_at(t));
    let up = u_prime.max_norm();
    let ub = bf.u_bar_at(t).max_norm();
    let velocity_ratio = if up == 0.0 {
        0.0
    } else if ub == 0.0 {
        f64::INFINITY
    } else {
        up / ub
    };
    Ok(ScaleReport {
        density_ratio: snap.rho.map(|r| r - bf.rho_bar()).max_abs() / bf.rho_bar(),
        velocity_ratio,
        pressure_ratio: snap.p.map(|p| p - bf.p_bar()).max_abs() / bf.p_bar(),
        fluctuation_mach: up / bf.c(),
    })
}
