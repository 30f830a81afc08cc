//! Sound sources and the convective wave equation.
//!
//! The convective wave equation `(1/c^2) (D/Dt)^2 p' - lap p' = s` with
//! `D/Dt = d_t + u_bar.grad` is integrated as the first-order system
//!
//! ```text
//! D p' / Dt = -rho_bar c^2 theta
//! D theta / Dt = -(lap p' + s) / rho_bar
//! ```
//!
//! where `theta` plays the role of `div u_a`. Sources are double divergences
//! of quadratic velocity products, evaluated spectrally with the 2/3 rule
//! applied to the factors and to the product.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::baseflow::BaseFlow;
use crate::error::{Error, Result};
use crate::fields::{apply_two_thirds_mask, div, forward_raw, inverse_raw, DiffMethod, ScalarField, VectorField, Wavenumbers};
use crate::perturbation::{step, FluxMode, PerturbationState};
use crate::scenarios::{FlowProvider, FlowSnapshot};
use crate::splitting::wave_step;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// `d_i d_j (rho u_i u_j)` of the full flow
    Lighthill,
    /// `d_i d_j (rho_bar u'_i u'_j)` of the fluctuation
    TrueSource,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Lighthill => "lighthill",
            SourceKind::TrueSource => "true_source",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceField {
    pub kind: SourceKind,
    pub s: ScalarField,
    pub t: f64,
}

fn dealiased_spectrum(f: &ScalarField) -> Vec<Complex64> {
    let mut spec = forward_raw(f);
    apply_two_thirds_mask(f.grid(), &mut spec);
    spec
}

fn dealiased(f: &ScalarField) -> ScalarField {
    inverse_raw(f.grid(), dealiased_spectrum(f))
}

/// `d_i d_j (w u_i u_j)`, with `w` a density field or `None` for 1.
fn double_divergence(weight: Option<&ScalarField>, scale: f64, u: &VectorField) -> Result<ScalarField> {
    u.ensure_finite("source velocity")?;
    let grid = *u.grid();
    let d = grid.dim();
    let uf: Vec<ScalarField> = u.components().iter().map(dealiased).collect();
    let wf = match weight {
        Some(w) => {
            w.ensure_finite("source density")?;
            Some(dealiased(w))
        }
        None => None,
    };
    let wn = Wavenumbers::new(&grid);
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
    for i in 0..d {
        for j in i..d {
            let mut prod = uf[i].mul(&uf[j]);
            if let Some(w) = &wf {
                prod = prod.mul(w);
            }
            let spec = dealiased_spectrum(&prod);
            let mult = if i == j { 1.0 } else { 2.0 };
            for (k, (a, s)) in acc.iter_mut().zip(&spec).enumerate() {
                let kv = wn.at(k);
                *a -= s * (mult * kv[i] * kv[j]);
            }
        }
    }
    Ok(inverse_raw(&grid, acc).scale(scale))
}

/// Lighthill's source `d_i d_j (rho u_i u_j)` of a flow snapshot.
pub fn lighthill_source(snapshot: &FlowSnapshot) -> Result<SourceField> {
    let s = double_divergence(Some(&snapshot.rho), 1.0, &snapshot.u)?;
    Ok(SourceField { kind: SourceKind::Lighthill, s, t: snapshot.t })
}

/// The fluctuation source `d_i d_j (rho_bar u'_i u'_j)`.
pub fn true_source(u_prime: &VectorField, rho_bar: f64, t: f64) -> Result<SourceField> {
    let s = double_divergence(None, rho_bar, u_prime)?;
    Ok(SourceField { kind: SourceKind::TrueSource, s, t })
}

/// Time-indexed sources, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SourceSeries {
    samples: Vec<SourceField>,
}

impl SourceSeries {
    /// No source at all.
    pub fn none() -> Self {
        SourceSeries { samples: Vec::new() }
    }

    pub fn new(samples: Vec<SourceField>) -> Result<Self> {
        if let Some(pos) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::NonMonotoneTimes(pos + 1));
        }
        Ok(SourceSeries { samples })
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[SourceField] {
        &self.samples
    }

    fn covers(&self, t0: f64, t1: f64) -> Result<()> {
        if self.samples.is_empty() {
            return Ok(());
        }
        let lo = self.samples[0].t;
        let hi = self.samples[self.samples.len() - 1].t;
        let slack = 1e-12 * t1.abs().max(1.0);
        if t0 < lo - slack || t1 > hi + slack {
            return Err(Error::OutsideWindow { t: if t0 < lo - slack { t0 } else { t1 }, lo, hi });
        }
        Ok(())
    }

    /// Source at `t`, `None` for an empty series.
    pub fn at(&self, t: f64) -> Option<ScalarField> {
        let n = self.samples.len();
        if n == 0 {
            return None;
        }
        if n == 1 || t <= self.samples[0].t {
            return Some(self.samples[0].s.clone());
        }
        if t >= self.samples[n - 1].t {
            return Some(self.samples[n - 1].s.clone());
        }
        let j = self.samples.partition_point(|s| s.t <= t) - 1;
        let (a, b) = (&self.samples[j], &self.samples[j + 1]);
        if t == a.t {
            return Some(a.s.clone());
        }
        let w = (t - a.t) / (b.t - a.t);
        Some(a.s.zip_map(&b.s, |x, y| (1.0 - w) * x + w * y))
    }
}

/// `p'` at every time level of a wave solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveTrajectory {
    pub times: Vec<f64>,
    pub p: Vec<ScalarField>,
}

/// Number of equal steps of size at most `dt` covering `span`.
pub(crate) fn step_count(span: f64, dt: f64) -> Result<(usize, f64)> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidStep(dt));
    }
    if !(span.is_finite() && span >= 0.0) {
        return Err(Error::contract(format!("time span must be non-negative, got {span}")));
    }
    if span == 0.0 {
        return Ok((0, dt));
    }
    let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, span / n as f64))
}

/// Integrate the convective wave equation over `[0, t_end]` from `p' = p0`
/// and `D p'/Dt = p0_rate`, with steps of at most `dt`.
pub fn solve_convective_wave(
    p0: &ScalarField,
    p0_rate: &ScalarField,
    bf: &BaseFlow,
    source: &SourceSeries,
    t_end: f64,
    dt: f64,
) -> Result<WaveTrajectory> {
    let (n, h) = step_count(t_end, dt)?;
    source.covers(0.0, t_end)?;
    crate::fields::ensure_same_grid(p0.grid(), bf.grid(), "initial pressure and base flow on different grids")?;
    crate::fields::ensure_same_grid(p0_rate.grid(), bf.grid(), "initial rate and base flow on different grids")?;
    let theta0 = p0_rate.scale(-1.0 / (bf.rho_bar() * bf.c() * bf.c()));
    let mut times = vec![0.0];
    let mut ps = vec![p0.clone()];
    let (mut p, mut theta) = (p0.clone(), theta0);
    for k in 0..n {
        let t = k as f64 * h;
        let (pn, tn) = wave_step(&p, &theta, bf, t, h, |tt| Ok(source.at(tt)))?;
        p = pn;
        theta = tn;
        times.push((k + 1) as f64 * h);
        ps.push(p.clone());
    }
    Ok(WaveTrajectory { times, p: ps })
}

/// Forcing of the rest-medium (Lighthill operator) run in [`compare_sources`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LighthillForcing {
    /// Same fluctuation source as the convective run; the runs then differ
    /// only in their propagation operator.
    #[default]
    TrueSource,
    /// Lighthill's quadrupole `d_i d_j (rho u_i u_j)` of the full flow.
    FlowQuadrupole,
}

impl fmt::Display for LighthillForcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LighthillForcing::TrueSource => "true_source",
            LighthillForcing::FlowQuadrupole => "flow_quadrupole",
        })
    }
}

impl FromStr for LighthillForcing {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "true_source" => Ok(LighthillForcing::TrueSource),
            "flow_quadrupole" => Ok(LighthillForcing::FlowQuadrupole),
            other => Err(format!("unknown source forcing `{other}` (expected true_source or flow_quadrupole)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceComparisonRow {
    pub t: f64,
    /// `theorem1` names the run of the full first-order system.
    pub l2_true_vs_theorem1: f64,
    pub l2_lighthill_vs_theorem1: f64,
    pub l2_true_vs_lighthill: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceComparison {
    pub rows: Vec<SourceComparisonRow>,
    pub first_order: Vec<ScalarField>,
    pub convective: WaveTrajectory,
    pub lighthill: WaveTrajectory,
}

impl SourceComparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,l2_true_vs_theorem1,l2_lighthill_vs_theorem1,l2_true_vs_lighthill\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{:e}\n",
                r.t, r.l2_true_vs_theorem1, r.l2_lighthill_vs_theorem1, r.l2_true_vs_lighthill
            ));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn last(&self) -> &SourceComparisonRow {
        self.rows.last().expect("comparison has the initial row")
    }
}

/// First-order fluctuations `(p - p_bar, u - u_bar(t))` of a snapshot.
pub fn fluctuations(snap: &FlowSnapshot, bf: &BaseFlow) -> (ScalarField, VectorField) {
    (snap.p.map(|v| v - bf.p_bar()), snap.u.sub(&bf.u_bar_at(snap.t)))
}

/// Evolve the scenario's fluctuations three ways over `[0, t_end]`: the
/// full first-order system (central fluxes), the convective wave equation
/// driven by the true source, and the rest-medium operator (`u_bar` forced
/// to zero) with the chosen forcing. All three start from the same `p'` and
/// `D p'/Dt = -rho_bar c^2 div u'`.
pub fn compare_sources(
    provider: &FlowProvider,
    bf: &BaseFlow,
    t_end: f64,
    dt: f64,
    forcing: LighthillForcing,
) -> Result<SourceComparison> {
    let grid = *bf.grid();
    let (n, h) = step_count(t_end, dt)?;
    let (rho, c) = (bf.rho_bar(), bf.c());
    provider.check_time(0.0)?;
    provider.check_time(t_end)?;

    let snap0 = provider.sample(&grid, 0.0)?;
    let (p0, u0) = fluctuations(&snap0, bf);
    let rate0 = div(&u0, DiffMethod::Spectral)?.scale(-rho * c * c);

    // sources at every step and half step so RK4 stages hit samples exactly
    let mut true_samples = Vec::with_capacity(2 * n + 1);
    let mut quad_samples = Vec::new();
    for k in 0..=2 * n {
        let t = k as f64 * 0.5 * h;
        let snap = provider.sample(&grid, t)?;
        let (_, up) = fluctuations(&snap, bf);
        true_samples.push(true_source(&up, rho, t)?);
        if forcing == LighthillForcing::FlowQuadrupole {
            quad_samples.push(lighthill_source(&snap)?);
        }
    }
    let true_series = SourceSeries::new(true_samples)?;
    let convective = solve_convective_wave(&p0, &rate0, bf, &true_series, t_end, h)?;
    let rest = BaseFlow::uniform(&grid, &vec![0.0; grid.dim()], bf.p_bar(), c)?;
    let lighthill = match forcing {
        LighthillForcing::TrueSource => solve_convective_wave(&p0, &rate0, &rest, &true_series, t_end, h)?,
        LighthillForcing::FlowQuadrupole => {
            solve_convective_wave(&p0, &rate0, &rest, &SourceSeries::new(quad_samples)?, t_end, h)?
        }
    };

    let mut state = PerturbationState::from_primitive(0.0, &p0, &u0, rho, c)?;
    let mut first_order = vec![state.p_prime()];
    for _ in 0..n {
        state = step(&state, bf, h, FluxMode::Central)?;
        first_order.push(state.p_prime());
    }

    let rows = (0..=n)
        .map(|k| SourceComparisonRow {
            t: convective.times[k],
            l2_true_vs_theorem1: convective.p[k].sub(&first_order[k]).rms(),
            l2_lighthill_vs_theorem1: lighthill.p[k].sub(&first_order[k]).rms(),
            l2_true_vs_lighthill: convective.p[k].sub(&lighthill.p[k]).rms(),
        })
        .collect();
    Ok(SourceComparison { rows, first_order, convective, lighthill })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random::band_limited_vector;
    use crate::fields::Grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn zero_velocity_gives_zero_sources() {
        let g = Grid::uniform(2, 16, 1.0).unwrap();
        let z = VectorField::zeros(g);
        assert_eq!(true_source(&z, 1.0, 0.0).unwrap().s.max_abs(), 0.0);
        let snap = FlowProvider::uniform(&[0.0, 0.0], 1.0, 1.0).unwrap().sample(&g, 0.0).unwrap();
        assert_eq!(lighthill_source(&snap).unwrap().s.max_abs(), 0.0);
    }

    #[test]
    fn analytic_double_divergence() {
        let g = Grid::uniform(2, 32, 2.0 * PI).unwrap();
        let u = VectorField::from_fn(g, |x| [x[0].sin(), 0.0, 0.0]);
        let want = ScalarField::from_fn(g, |x| 2.0 * (2.0 * x[0]).cos());
        assert!(true_source(&u, 1.0, 0.0).unwrap().s.sub(&want).max_abs() < 1e-10);
        let snap = FlowSnapshot { t: 0.0, rho: ScalarField::constant(g, 1.0), u, p: ScalarField::constant(g, 1.0), c: 1.0 };
        assert!(lighthill_source(&snap).unwrap().s.sub(&want).max_abs() < 1e-10);
    }

    #[test]
    fn sources_are_mean_free_and_even() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = Grid::uniform(2, 32, 1.0).unwrap();
        let u = band_limited_vector(&g, 6, &mut rng);
        let s = true_source(&u, 1.3, 0.0).unwrap().s;
        assert!(s.mean().abs() < 1e-12);
        assert!(s.sub(&true_source(&u.scale(-1.0), 1.3, 0.0).unwrap().s).max_abs() < 1e-10);
    }

    #[test]
    fn series_interpolation_and_coverage() {
        let g = Grid::uniform(2, 8, 1.0).unwrap();
        let f = |t: f64, v: f64| SourceField { kind: SourceKind::TrueSource, s: ScalarField::constant(g, v), t };
        let series = SourceSeries::new(vec![f(0.0, 1.0), f(1.0, 3.0)]).unwrap();
        assert_eq!(series.at(0.5).unwrap().values()[0], 2.0);
        assert!(series.covers(0.0, 1.0).is_ok());
        assert!(matches!(series.covers(0.0, 2.0), Err(Error::OutsideWindow { .. })));
        assert!(SourceSeries::new(vec![f(1.0, 0.0), f(0.0, 0.0)]).is_err());
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::uniform(2, 16, 1.0).unwrap();
        let bf = BaseFlow::uniform(&g, &[0.3, 0.0], 1.0, 1.0).unwrap();
        let z = ScalarField::zeros(g);
        let tr = solve_convective_wave(&z, &z, &bf, &SourceSeries::none(), 0.1, 0.01).unwrap();
        assert_eq!(tr.p.len(), 11);
        assert!(tr.p.iter().all(|p| p.max_abs() == 0.0));
    }

    #[test]
    fn uniform_flow_without_fluctuation_compares_to_zero() {
        let g = Grid::uniform(2, 16, 1.0).unwrap();
        let p = FlowProvider::uniform(&[0.3, 0.0], 1.0, 1.0).unwrap();
        let bf = BaseFlow::uniform(&g, &[0.3, 0.0], 1.0, 1.0).unwrap();
        let cmp = compare_sources(&p, &bf, 0.1, 0.01, LighthillForcing::TrueSource).unwrap();
        assert!(cmp.rows.iter().all(|r| r.l2_true_vs_lighthill == 0.0 && r.l2_true_vs_theorem1 == 0.0));
        assert!(cmp.to_csv().starts_with("t,l2_true_vs_theorem1,l2_lighthill_vs_theorem1,l2_true_vs_lighthill\n"));
    }
}
