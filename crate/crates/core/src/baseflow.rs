//! Pathline-averaged base flow.
//!
//! The average of a flow quantity `f` along the pathline through `(t, x)` is
//! obtained in two sweeps over the averaging window `[t0, t0 + tau]`:
//!
//! 1. forward accumulation `dg/dt + u.grad g = f / tau`, `g(t0) = 0`, which
//!    leaves the pathline average at the pathline's end point in `g(t0 + tau)`;
//! 2. the end-value problem `df/dt + u.grad f = 0` with `f(t0 + tau) = g`,
//!    solved backward in time, which carries that average back along the
//!    same pathline to every earlier time.
//!
//! Both sweeps are semi-Lagrangian: one RK4 characteristic per cell and step,
//! monotone-limited cubic interpolation at the foot of the characteristic and
//! trapezoidal quadrature of the source along it.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::interp::{interpolate_vector, Stencil};
use crate::fields::io::{read_vector_on, write_vector};
use crate::fields::{div, grad, DiffMethod, Grid, ScalarField, VectorField};
use crate::scenarios::{FlowProvider, FlowSnapshot};

/// Largest admissible `dt * max|u| / min spacing` for the semi-Lagrangian sweeps.
pub const SEMI_LAGRANGIAN_COURANT_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Pathline {
    pub seed: [f64; 3],
    /// `(t, x(t))`, positions wrapped into the periodic box.
    pub samples: Vec<(f64, [f64; 3])>,
}

impl Pathline {
    pub fn end(&self) -> [f64; 3] {
        self.samples.last().expect("pathline has samples").1
    }
}

/// Velocity grids on demand; steady providers are sampled once.
struct VelocitySource<'a> {
    provider: &'a FlowProvider,
    grid: Grid,
    steady: Option<VectorField>,
}

impl<'a> VelocitySource<'a> {
    fn new(provider: &'a FlowProvider, grid: &Grid) -> Self {
        VelocitySource { provider, grid: *grid, steady: None }
    }

    fn at(&mut self, t: f64) -> Result<VectorField> {
        if self.provider.is_steady() {
            if self.steady.is_none() {
                let (lo, _) = self.provider.window();
                self.steady = Some(self.checked(lo)?);
            }
            return Ok(self.steady.clone().expect("cached"));
        }
        self.checked(t)
    }

    fn checked(&self, t: f64) -> Result<VectorField> {
        let u = self.provider.sample(&self.grid, t)?.u;
        u.ensure_finite("flow velocity")?;
        Ok(u)
    }
}

fn add_scaled(x: [f64; 3], s: f64, v: [f64; 3]) -> [f64; 3] {
    [x[0] + s * v[0], x[1] + s * v[1], x[2] + s * v[2]]
}

/// One RK4 step of `dx/dt = u` from `x` over signed step `h`; the three
/// velocity grids are at the start, middle and end of the step.
fn rk4_step(x: [f64; 3], h: f64, u_start: &VectorField, u_mid: &VectorField, u_end: &VectorField) -> [f64; 3] {
    let k1 = interpolate_vector(u_start, x);
    let k2 = interpolate_vector(u_mid, add_scaled(x, 0.5 * h, k1));
    let k3 = interpolate_vector(u_mid, add_scaled(x, 0.5 * h, k2));
    let k4 = interpolate_vector(u_end, add_scaled(x, h, k3));
    let mut out = x;
    for a in 0..3 {
        out[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
    }
    out
}

fn uniform_levels(t_start: f64, t_end: f64, dt: f64) -> Vec<f64> {
    let span = t_end - t_start;
    let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut levels: Vec<f64> = (0..steps).map(|k| t_start + span * k as f64 / steps as f64).collect();
    levels.push(t_end);
    levels
}

fn check_dt(dt: f64) -> Result<()> {
    if dt.is_finite() && dt > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidStep(dt))
    }
}

fn check_courant(grid: &Grid, h: f64, velocities: &[&VectorField]) -> Result<()> {
    let umax = velocities.iter().map(|u| u.max_norm()).fold(0.0, f64::max);
    let courant = h.abs() * umax / grid.min_spacing();
    if courant > SEMI_LAGRANGIAN_COURANT_LIMIT {
        return Err(Error::Cfl { courant, limit: SEMI_LAGRANGIAN_COURANT_LIMIT });
    }
    Ok(())
}

/// Integrate `dx/dt = u(t, x)` from each seed over `[t0, t1]` with RK4 and
/// cubic interpolation of the sampled velocity.
pub fn integrate_pathlines(
    provider: &FlowProvider,
    grid: &Grid,
    seeds: &[[f64; 3]],
    t0: f64,
    t1: f64,
    dt: f64,
) -> Result<Vec<Pathline>> {
    check_dt(dt)?;
    if t1 < t0 {
        return Err(Error::contract(format!("pathline interval [{t0}, {t1}] is reversed")));
    }
    provider.check_time(t0)?;
    provider.check_time(t1)?;
    let mut src = VelocitySource::new(provider, grid);
    let mut pos: Vec<[f64; 3]> = seeds.iter().map(|&s| grid.wrap(s)).collect();
    let mut lines: Vec<Pathline> =
        seeds.iter().zip(&pos).map(|(&seed, &x)| Pathline { seed, samples: vec![(t0, x)] }).collect();
    if t1 == t0 {
        return Ok(lines);
    }
    let levels = uniform_levels(t0, t1, dt);
    let mut u_start = src.at(levels[0])?;
    for w in levels.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let h = tb - ta;
        let u_mid = src.at(0.5 * (ta + tb))?;
        let u_end = src.at(tb)?;
        for (x, line) in pos.iter_mut().zip(lines.iter_mut()) {
            let next = rk4_step(*x, h, &u_start, &u_mid, &u_end);
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("pathline position"));
            }
            *x = grid.wrap(next);
            line.samples.push((tb, *x));
        }
        u_start = u_end;
    }
    Ok(lines)
}

/// Quantity averaged along pathlines, read off a flow snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowQuantity {
    Pressure,
    Velocity(usize),
}

impl FlowQuantity {
    pub fn extract(&self, snap: &FlowSnapshot) -> ScalarField {
        match *self {
            FlowQuantity::Pressure => snap.p.clone(),
            FlowQuantity::Velocity(i) => snap.u.component(i).clone(),
        }
    }
}

/// Foot points of the characteristics arriving at (`reverse = false`) or
/// leaving from (`reverse = true`) every cell center over one step.
fn characteristic_feet(grid: &Grid, h: f64, first: &VectorField, mid: &VectorField, last: &VectorField) -> Vec<Stencil> {
    grid.centers()
        .map(|x| Stencil::new(grid, rk4_step(x, h, first, mid, last)))
        .collect()
}

/// Solve `dg/dt + u.grad g = f / tau` with `g(t0) = 0` for several source
/// quantities at once and return `g(t0 + tau)`.
///
/// `source(snapshot)` must return one field per accumulated quantity; it is
/// evaluated at every time level. The averaging window starts at the
/// provider's window start `t0`. Departure values use the unlimited cubic,
/// so `g` is exactly linear in the source; only the backward sweep limits.
pub fn accumulate_forward_with<F>(
    provider: &FlowProvider,
    grid: &Grid,
    tau: f64,
    dt: f64,
    mut source: F,
) -> Result<Vec<ScalarField>>
where
    F: FnMut(&FlowSnapshot) -> Result<Vec<ScalarField>>,
{
    check_dt(dt)?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::contract(format!("averaging horizon must be positive, got {tau}")));
    }
    let (t0, _) = provider.window();
    provider.check_time(t0 + tau)?;
    let levels = uniform_levels(t0, t0 + tau, dt);
    let mut src = VelocitySource::new(provider, grid);

    let snap0 = provider.sample(grid, t0)?;
    let mut f_prev = source(&snap0)?;
    let mut g: Vec<ScalarField> = f_prev.iter().map(|_| ScalarField::zeros(*grid)).collect();
    let mut u_prev = snap0.u;
    u_prev.ensure_finite("flow velocity")?;
    for w in levels.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let h = tb - ta;
        let u_mid = src.at(0.5 * (ta + tb))?;
        let snap_b = provider.sample(grid, tb)?;
        snap_b.u.ensure_finite("flow velocity")?;
        check_courant(grid, h, &[&u_prev, &u_mid, &snap_b.u])?;
        // departure points: backward from tb to ta
        let feet = characteristic_feet(grid, -h, &snap_b.u, &u_mid, &u_prev);
        let f_next = source(&snap_b)?;
        let weight = 0.5 * h / tau;
        for ((gq, fa), fb) in g.iter_mut().zip(&f_prev).zip(&f_next) {
            let values = feet
                .iter()
                .zip(fb.values())
                .map(|(st, &fb)| st.eval_linear(grid, gq.values()) + weight * (fb + st.eval_linear(grid, fa.values())))
                .collect();
            *gq = ScalarField::from_values(*grid, values)?;
        }
        f_prev = f_next;
        u_prev = snap_b.u;
    }
    Ok(g)
}

/// Single-quantity forward accumulation.
pub fn accumulate_forward(
    provider: &FlowProvider,
    grid: &Grid,
    quantity: FlowQuantity,
    tau: f64,
    dt: f64,
) -> Result<ScalarField> {
    let mut out = accumulate_forward_with(provider, grid, tau, dt, |s| Ok(vec![quantity.extract(s)]))?;
    Ok(out.remove(0))
}

/// Solve the end-value problem `df/dt + u.grad f = 0`, `f(t0 + tau) = end`,
/// backward in time for several fields at once. Returns, for every entry of
/// `sample_times`, the transported fields in the order of `end_values`.
pub fn transport_backward_many(
    end_values: &[ScalarField],
    provider: &FlowProvider,
    tau: f64,
    dt: f64,
    sample_times: &[f64],
) -> Result<Vec<Vec<ScalarField>>> {
    check_dt(dt)?;
    let grid = match end_values.first() {
        Some(f) => *f.grid(),
        None => return Ok(vec![Vec::new(); sample_times.len()]),
    };
    for f in end_values {
        crate::fields::ensure_same_grid(f.grid(), &grid, "end values on different grids")?;
        f.ensure_finite("end values")?;
    }
    let (t0, _) = provider.window();
    let t_end = t0 + tau;
    provider.check_time(t_end)?;
    for &ts in sample_times {
        if !(ts >= t0 && ts <= t_end) {
            return Err(Error::OutsideWindow { t: ts, lo: t0, hi: t_end });
        }
    }
    let mut levels = uniform_levels(t0, t_end, dt);
    levels.extend_from_slice(sample_times);
    levels.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    levels.dedup();

    let mut src = VelocitySource::new(provider, &grid);
    let mut results: Vec<Option<Vec<ScalarField>>> = vec![None; sample_times.len()];
    let record = |t: f64, fields: &Vec<ScalarField>, results: &mut Vec<Option<Vec<ScalarField>>>| {
        for (slot, &ts) in results.iter_mut().zip(sample_times) {
            if ts == t {
                *slot = Some(fields.clone());
            }
        }
    };
    let mut current: Vec<ScalarField> = end_values.to_vec();
    record(t_end, &current, &mut results);
    let mut u_b = src.at(t_end)?;
    for w in levels.windows(2).rev() {
        let (ta, tb) = (w[0], w[1]);
        let h = tb - ta;
        let u_mid = src.at(0.5 * (ta + tb))?;
        let u_a = src.at(ta)?;
        check_courant(&grid, h, &[&u_a, &u_mid, &u_b])?;
        // arrival points: forward from ta to tb
        let feet = characteristic_feet(&grid, h, &u_a, &u_mid, &u_b);
        for f in current.iter_mut() {
            let values = feet.iter().map(|st| st.eval(&grid, f.values())).collect();
            *f = ScalarField::from_values(grid, values)?;
        }
        record(ta, &current, &mut results);
        u_b = u_a;
    }
    Ok(results.into_iter().map(|r| r.expect("every sample time is a level")).collect())
}

/// Single-field form of [`transport_backward_many`].
pub fn transport_backward(
    end_values: &ScalarField,
    provider: &FlowProvider,
    tau: f64,
    dt: f64,
    sample_times: &[f64],
) -> Result<Vec<ScalarField>> {
    let out = transport_backward_many(std::slice::from_ref(end_values), provider, tau, dt, sample_times)?;
    Ok(out.into_iter().map(|mut v| v.remove(0)).collect())
}

/// Pathline-averaged velocity at sample times plus the constant mean
/// pressure and density.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseFlow {
    grid: Grid,
    t0: f64,
    tau: f64,
    times: Vec<f64>,
    u_bar: Vec<VectorField>,
    p_bar: f64,
    rho_bar: f64,
    c: f64,
    p_spread: f64,
}

impl BaseFlow {
    /// Base flow from sampled velocities; `rho_bar = p_bar / c^2`.
    pub fn from_samples(
        times: Vec<f64>,
        u_bar: Vec<VectorField>,
        p_bar: f64,
        c: f64,
        t0: f64,
        tau: f64,
    ) -> Result<Self> {
        if times.is_empty() || times.len() != u_bar.len() {
            return Err(Error::contract("base flow needs one velocity field per sample time"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::NonMonotoneTimes(
                times.windows(2).position(|w| w[1] <= w[0]).unwrap_or(0) + 1,
            ));
        }
        if !(c > 0.0 && p_bar > 0.0) {
            return Err(Error::contract(format!("need c > 0 and p_bar > 0, got c = {c}, p_bar = {p_bar}")));
        }
        let grid = *u_bar[0].grid();
        for u in &u_bar {
            crate::fields::ensure_same_grid(u.grid(), &grid, "base flow samples on different grids")?;
            u.ensure_finite("base flow velocity")?;
        }
        Ok(BaseFlow { grid, t0, tau, times, u_bar, p_bar, rho_bar: p_bar / (c * c), c, p_spread: 0.0 })
    }

    /// Spatially and temporally constant base flow `u_bar = u0`.
    pub fn uniform(grid: &Grid, u0: &[f64], p_bar: f64, c: f64) -> Result<Self> {
        let u = VectorField::constant(*grid, u0)?;
        BaseFlow::from_samples(vec![0.0], vec![u], p_bar, c, 0.0, f64::INFINITY)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[VectorField] {
        &self.u_bar
    }

    pub fn p_bar(&self) -> f64 {
        self.p_bar
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Largest deviation of the pathline-averaged pressure from `p_bar`.
    pub fn p_spread(&self) -> f64 {
        self.p_spread
    }

    /// `u_bar(t)`, piecewise linear between samples and held constant
    /// outside the sampled range.
    pub fn u_bar_at(&self, t: f64) -> VectorField {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return self.u_bar[0].clone();
        }
        if t >= self.times[n - 1] {
            return self.u_bar[n - 1].clone();
        }
        let j = self.times.iter().position(|&s| s > t).expect("inside range") - 1;
        let w = (t - self.times[j]) / (self.times[j + 1] - self.times[j]);
        self.u_bar[j].zip_components(&self.u_bar[j + 1], |a, b| a.zip_map(b, |p, q| (1.0 - w) * p + w * q))
    }

    /// The constant vector if `u_bar` is uniform in space and time.
    pub fn uniform_velocity(&self) -> Option<[f64; 3]> {
        let first = self.u_bar[0].at(0);
        for u in &self.u_bar {
            for (a, c) in u.components().iter().enumerate() {
                if c.values().iter().any(|&v| v != first[a]) {
                    return None;
                }
            }
        }
        Some(first)
    }

    pub fn max_speed(&self) -> f64 {
        self.u_bar.iter().map(VectorField::max_norm).fold(0.0, f64::max)
    }
}

/// Pathline-averaged base flow of `provider` over `[t0, t0 + tau]`, where
/// `t0` is the start of the provider's window.
pub fn compute_base_flow(
    provider: &FlowProvider,
    grid: &Grid,
    tau: f64,
    dt: f64,
    sample_times: &[f64],
) -> Result<BaseFlow> {
    if sample_times.is_empty() {
        return Err(Error::contract("base flow needs at least one sample time"));
    }
    let d = grid.dim();
    let mut quantities = vec![FlowQuantity::Pressure];
    quantities.extend((0..d).map(FlowQuantity::Velocity));
    let ends = accumulate_forward_with(provider, grid, tau, dt, |s| {
        Ok(quantities.iter().map(|q| q.extract(s)).collect())
    })?;
    let per_time = transport_backward_many(&ends, provider, tau, dt, sample_times)?;

    let mut order: Vec<usize> = (0..sample_times.len()).collect();
    order.sort_by(|&a, &b| sample_times[a].partial_cmp(&sample_times[b]).expect("finite"));
    order.dedup_by(|a, b| sample_times[*a] == sample_times[*b]);

    let p_bar = order.iter().map(|&i| per_time[i][0].mean()).sum::<f64>() / order.len() as f64;
    let p_spread = order
        .iter()
        .map(|&i| per_time[i][0].map(|v| v - p_bar).max_abs())
        .fold(0.0, f64::max);
    let times: Vec<f64> = order.iter().map(|&i| sample_times[i]).collect();
    let u_bar = order
        .iter()
        .map(|&i| VectorField::from_components(per_time[i][1..].to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let (t0, _) = provider.window();
    let mut bf = BaseFlow::from_samples(times, u_bar, p_bar, provider.c(), t0, tau)?;
    bf.p_spread = p_spread;
    Ok(bf)
}

/// Residuals of the base-flow properties; magnitudes only, never pass/fail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseFlowReport {
    /// max |div u_bar|
    pub max_divergence: f64,
    /// max |d_t u_bar + u_bar.grad u_bar|
    pub max_material_derivative: f64,
    /// max |d_t u_bar + u.grad u_bar|, the transport equation the averages obey
    pub max_transport_residual: f64,
    /// max |d_i u_bar_j d_j u_bar_i|
    pub max_gradient_contraction: f64,
    /// |rho_bar - p_bar / c^2|
    pub density_consistency: f64,
    /// max |pathline-averaged p - p_bar|
    pub pressure_spread: f64,
}

fn advect(velocity: &VectorField, grads: &[VectorField]) -> Vec<ScalarField> {
    grads.iter().map(|g| velocity.dot_field(g)).collect()
}

pub fn check_base_flow_properties(bf: &BaseFlow, provider: &FlowProvider) -> BaseFlowReport {
    let grid = bf.grid;
    let d = grid.dim();
    let grads = |u: &VectorField| -> Vec<VectorField> {
        (0..d).map(|j| grad(u.component(j), DiffMethod::Spectral).expect("finite base flow")).collect()
    };
    let mut rep = BaseFlowReport {
        max_divergence: 0.0,
        max_material_derivative: 0.0,
        max_transport_residual: 0.0,
        max_gradient_contraction: 0.0,
        density_consistency: (bf.rho_bar - bf.p_bar / (bf.c * bf.c)).abs(),
        pressure_spread: bf.p_spread,
    };
    for u in &bf.u_bar {
        rep.max_divergence = rep.max_divergence.max(div(u, DiffMethod::Spectral).expect("finite").max_abs());
        let g = grads(u);
        let mut contraction = ScalarField::zeros(grid);
        for i in 0..d {
            for j in 0..d {
                contraction.axpy(1.0, &g[j].component(i).mul(g[i].component(j)));
            }
        }
        rep.max_gradient_contraction = rep.max_gradient_contraction.max(contraction.max_abs());
    }
    // time derivative at midpoints between consecutive samples
    let mut pairs: Vec<(f64, Vec<ScalarField>, VectorField)> = Vec::new();
    if bf.times.len() == 1 {
        pairs.push((bf.times[0], (0..d).map(|_| ScalarField::zeros(grid)).collect(), bf.u_bar[0].clone()));
    } else {
        for k in 0..bf.times.len() - 1 {
            let dt = bf.times[k + 1] - bf.times[k];
            let dudt = (0..d)
                .map(|j| bf.u_bar[k + 1].component(j).sub(bf.u_bar[k].component(j)).scale(1.0 / dt))
                .collect();
            let mid = bf.u_bar[k].add(&bf.u_bar[k + 1]).scale(0.5);
            pairs.push((0.5 * (bf.times[k] + bf.times[k + 1]), dudt, mid));
        }
    }
    for (t, dudt, mid) in pairs {
        let g = grads(&mid);
        let material = advect(&mid, &g);
        for j in 0..d {
            rep.max_material_derivative =
                rep.max_material_derivative.max(dudt[j].add(&material[j]).max_abs());
        }
        if let Ok(snap) = provider.sample(&grid, t) {
            let transport = advect(&snap.u, &g);
            for j in 0..d {
                rep.max_transport_residual =
                    rep.max_transport_residual.max(dudt[j].add(&transport[j]).max_abs());
            }
        }
    }
    rep
}

/// Write `u_bar` samples as AFLD files, a `time path` manifest and a
/// `key = value` constants file into `dir`.
pub fn write_base_flow(dir: impl AsRef<Path>, bf: &BaseFlow) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for (k, (t, u)) in bf.times.iter().zip(&bf.u_bar).enumerate() {
        let name = format!("ubar_{k:04}.afld");
        write_vector(dir.join(&name), u)?;
        manifest.push_str(&format!("{t} {name}\n"));
    }
    fs::write(dir.join("manifest.txt"), manifest)?;
    let constants = format!(
        "p_bar = {}\nrho_bar = {}\nc = {}\nt0 = {}\ntau = {}\np_spread = {}\n",
        bf.p_bar, bf.rho_bar, bf.c, bf.t0, bf.tau, bf.p_spread
    );
    fs::write(dir.join("constants.txt"), constants)?;
    Ok(())
}

pub fn read_base_flow(dir: impl AsRef<Path>, grid: &Grid) -> Result<BaseFlow> {
    let dir = dir.as_ref();
    let consts_path = dir.join("constants.txt");
    let kv = crate::config::parse_key_values(&fs::read_to_string(&consts_path)?, &consts_path)?;
    let get = |k: &str| -> Result<f64> {
        let v = kv
            .iter()
            .find(|(key, _, _)| key == k)
            .ok_or_else(|| Error::Parse { path: consts_path.clone(), message: format!("missing key {k}") })?;
        v.1.parse().map_err(|_| Error::Parse { path: consts_path.clone(), message: format!("bad value for {k}") })
    };
    let manifest_path = dir.join("manifest.txt");
    let mut times = Vec::new();
    let mut u_bar = Vec::new();
    for (lineno, line) in fs::read_to_string(&manifest_path)?.lines().enumerate() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.is_empty() {
            continue;
        }
        let bad = || Error::Parse { path: manifest_path.clone(), message: format!("line {}", lineno + 1) };
        if parts.len() != 2 {
            return Err(bad());
        }
        times.push(parts[0].parse::<f64>().map_err(|_| bad())?);
        u_bar.push(read_vector_on(dir.join(parts[1]), grid)?);
    }
    let mut bf = BaseFlow::from_samples(times, u_bar, get("p_bar")?, get("c")?, get("t0")?, get("tau")?)?;
    bf.rho_bar = get("rho_bar")?;
    bf.p_spread = get("p_spread")?;
    Ok(bf)
}
