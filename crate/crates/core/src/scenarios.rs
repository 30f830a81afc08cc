//! Analytic unsteady flows and ingested snapshot series.
//!
//! Every provider answers "what are (rho, u, p) on this grid at time t"
//! deterministically; the speed of sound is a constant per provider. The
//! analytic kinds use `rho0 = p0 / c^2` as their reference density.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fields::io::{read_scalar, read_vector, write_scalar, write_vector};
use crate::fields::{Grid, ScalarField, VectorField};

/// Flow state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSnapshot {
    pub t: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub p: ScalarField,
    pub c: f64,
}

impl FlowSnapshot {
    pub fn grid(&self) -> &Grid {
        self.p.grid()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowKind {
    /// `u = u0 + (P / (rho0 c)) n cos(k.x - w t + phase)`, `p = p0 + P cos(..)`,
    /// with `k = 2 pi m / L`, `n = k / |k|` and `w = u0.k + c |k|`.
    /// Zero amplitude gives a uniform flow.
    UniformPlusPlaneWave { u0: Vec<f64>, p0: f64, amplitude: f64, mode: Vec<i64>, phase: f64 },
    /// Steady Taylor-Green cell with one period per box side.
    TaylorGreen { amplitude: f64, p0: f64 },
    /// Rigid rotation about the box center, smoothly cut off between
    /// 0.6 and 0.8 times the half-width of the box.
    SolidRotation { omega: f64, p0: f64 },
    /// `u = u0 + A sin(2 pi t / period) e`, spatially uniform.
    OscillatingUniform { u0: Vec<f64>, amplitude: f64, direction: Vec<f64>, period: f64, p0: f64 },
    /// Stored snapshots, linearly interpolated in time.
    SnapshotSeries { snapshots: Vec<FlowSnapshot> },
}

/// Inner and outer cutoff radii of the rotation scenario as fractions of the half-width.
pub const ROTATION_CUTOFF_INNER: f64 = 0.6;
pub const ROTATION_CUTOFF_OUTER: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowProvider {
    kind: FlowKind,
    c: f64,
    mach: f64,
    reynolds: f64,
}

impl FlowProvider {
    pub fn new(kind: FlowKind, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::contract(format!("speed of sound must be positive, got {c}")));
        }
        match &kind {
            FlowKind::UniformPlusPlaneWave { mode, u0, .. } => {
                if mode.len() != u0.len() {
                    return Err(Error::contract("plane wave mode and u0 must have the same length"));
                }
                if mode.iter().all(|&m| m == 0) {
                    return Err(Error::contract("plane wave mode must be non-zero"));
                }
            }
            FlowKind::OscillatingUniform { u0, direction, period, .. } => {
                if u0.len() != direction.len() {
                    return Err(Error::contract("oscillation direction and u0 must have the same length"));
                }
                if *period <= 0.0 {
                    return Err(Error::contract("oscillation period must be positive"));
                }
            }
            FlowKind::SnapshotSeries { snapshots } => {
                if snapshots.len() < 2 {
                    return Err(Error::TooFewSnapshots(snapshots.len()));
                }
            }
            _ => {}
        }
        Ok(FlowProvider { kind, c, mach: 0.0, reynolds: f64::INFINITY })
    }

    pub fn uniform(u0: &[f64], p0: f64, c: f64) -> Result<Self> {
        let mut mode = vec![0; u0.len()];
        mode[0] = 1;
        FlowProvider::new(
            FlowKind::UniformPlusPlaneWave { u0: u0.to_vec(), p0, amplitude: 0.0, mode, phase: 0.0 },
            c,
        )
    }

    pub fn plane_wave(u0: &[f64], p0: f64, c: f64, amplitude: f64, mode: &[i64], phase: f64) -> Result<Self> {
        FlowProvider::new(
            FlowKind::UniformPlusPlaneWave { u0: u0.to_vec(), p0, amplitude, mode: mode.to_vec(), phase },
            c,
        )
    }

    pub fn with_similarity(mut self, mach: f64, reynolds: f64) -> Self {
        self.mach = mach;
        self.reynolds = reynolds;
        self
    }

    pub fn kind(&self) -> &FlowKind {
        &self.kind
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn mach(&self) -> f64 {
        self.mach
    }

    pub fn reynolds(&self) -> f64 {
        self.reynolds
    }

    /// Reference pressure `p0` of analytic kinds; mean pressure of the first snapshot otherwise.
    pub fn reference_pressure(&self) -> f64 {
        match &self.kind {
            FlowKind::UniformPlusPlaneWave { p0, .. }
            | FlowKind::TaylorGreen { p0, .. }
            | FlowKind::SolidRotation { p0, .. }
            | FlowKind::OscillatingUniform { p0, .. } => *p0,
            FlowKind::SnapshotSeries { snapshots } => snapshots[0].p.mean(),
        }
    }

    /// Closed time interval on which the provider can be sampled.
    pub fn window(&self) -> (f64, f64) {
        match &self.kind {
            FlowKind::SnapshotSeries { snapshots } => {
                (snapshots[0].t, snapshots[snapshots.len() - 1].t)
            }
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn is_steady(&self) -> bool {
        match &self.kind {
            FlowKind::TaylorGreen { .. } | FlowKind::SolidRotation { .. } => true,
            FlowKind::UniformPlusPlaneWave { amplitude, .. } => *amplitude == 0.0,
            FlowKind::OscillatingUniform { amplitude, .. } => *amplitude == 0.0,
            FlowKind::SnapshotSeries { .. } => false,
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.window();
        if t.is_finite() && t >= lo && t <= hi {
            Ok(())
        } else {
            Err(Error::OutsideWindow { t, lo, hi })
        }
    }

    /// Fields at cell centers of `grid` at time `t`.
    pub fn sample(&self, grid: &Grid, t: f64) -> Result<FlowSnapshot> {
        self.check_time(t)?;
        let c = self.c;
        let p0 = self.reference_pressure();
        let rho0 = p0 / (c * c);
        let d = grid.dim();
        let snap = match &self.kind {
            FlowKind::UniformPlusPlaneWave { u0, amplitude, mode, phase, .. } => {
                check_len(u0.len(), d, "u0")?;
                let wave = PlaneWave::new(grid, u0, c, mode);
                let a = *amplitude;
                let ph = *phase;
                let p = ScalarField::from_fn(*grid, |x| p0 + a * wave.cos(x, t, ph));
                let rho = ScalarField::from_fn(*grid, |x| rho0 + a * wave.cos(x, t, ph) / (c * c));
                let ua = a / (rho0 * c);
                let u = VectorField::from_fn(*grid, |x| {
                    let s = ua * wave.cos(x, t, ph);
                    let mut v = [0.0; 3];
                    for i in 0..d {
                        v[i] = u0[i] + s * wave.n[i];
                    }
                    v
                });
                FlowSnapshot { t, rho, u, p, c }
            }
            FlowKind::TaylorGreen { amplitude, .. } => {
                let a = *amplitude;
                let kx = 2.0 * PI / grid.length()[0];
                let ky = 2.0 * PI / grid.length()[1];
                let u = VectorField::from_fn(*grid, |x| {
                    [
                        a * (kx * x[0]).sin() * (ky * x[1]).cos(),
                        -a * (kx / ky) * (kx * x[0]).cos() * (ky * x[1]).sin(),
                        0.0,
                    ]
                });
                let p = ScalarField::from_fn(*grid, |x| {
                    p0 + rho0 * a * a / 4.0
                        * ((2.0 * kx * x[0]).cos() + (kx / ky).powi(2) * (2.0 * ky * x[1]).cos())
                });
                FlowSnapshot { t, rho: ScalarField::constant(*grid, rho0), u, p, c }
            }
            FlowKind::SolidRotation { omega, .. } => {
                let rot = Rotation::new(grid, *omega);
                let u = VectorField::from_fn(*grid, |x| rot.velocity(x));
                let p = ScalarField::from_fn(*grid, |x| p0 + rho0 * rot.pressure_rise(x));
                FlowSnapshot { t, rho: ScalarField::constant(*grid, rho0), u, p, c }
            }
            FlowKind::OscillatingUniform { u0, amplitude, direction, period, .. } => {
                check_len(u0.len(), d, "u0")?;
                let s = amplitude * (2.0 * PI * t / period).sin();
                let v: Vec<f64> = (0..d).map(|i| u0[i] + s * direction[i]).collect();
                FlowSnapshot {
                    t,
                    rho: ScalarField::constant(*grid, rho0),
                    u: VectorField::constant(*grid, &v)?,
                    p: ScalarField::constant(*grid, p0),
                    c,
                }
            }
            FlowKind::SnapshotSeries { snapshots } => {
                if *snapshots[0].grid() != *grid {
                    return Err(Error::GridMismatch(
                        "snapshot series sampled on a grid other than its own".into(),
                    ));
                }
                interpolate_series(snapshots, t)
            }
        };
        Ok(snap)
    }
}

/// Free-function form of [`FlowProvider::sample`].
pub fn sample_flow(provider: &FlowProvider, grid: &Grid, t: f64) -> Result<FlowSnapshot> {
    provider.sample(grid, t)
}

fn check_len(found: usize, dim: usize, what: &str) -> Result<()> {
    if found == dim {
        Ok(())
    } else {
        Err(Error::contract(format!("{what} has {found} components on a {dim}D grid")))
    }
}

/// Geometry of the plane-wave scenario on a given box.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWave {
    pub k: [f64; 3],
    pub n: [f64; 3],
    pub omega: f64,
}

impl PlaneWave {
    pub fn new(grid: &Grid, u0: &[f64], c: f64, mode: &[i64]) -> Self {
        let mut k = [0.0; 3];
        for a in 0..grid.dim() {
            k[a] = 2.0 * PI * mode[a] as f64 / grid.length()[a];
        }
        let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
        let n = [k[0] / kn, k[1] / kn, k[2] / kn];
        let uk: f64 = (0..grid.dim()).map(|a| u0[a] * k[a]).sum();
        PlaneWave { k, n, omega: uk + c * kn }
    }

    pub fn wavenumber(&self) -> f64 {
        (self.k[0] * self.k[0] + self.k[1] * self.k[1] + self.k[2] * self.k[2]).sqrt()
    }

    pub fn cos(&self, x: [f64; 3], t: f64, phase: f64) -> f64 {
        (self.k[0] * x[0] + self.k[1] * x[1] + self.k[2] * x[2] - self.omega * t + phase).cos()
    }
}

struct Rotation {
    center: [f64; 2],
    omega: f64,
    r_in: f64,
    r_out: f64,
}

impl Rotation {
    fn new(grid: &Grid, omega: f64) -> Self {
        let half = 0.5 * grid.length()[0].min(grid.length()[1]);
        Rotation {
            center: [0.5 * grid.length()[0], 0.5 * grid.length()[1]],
            omega,
            r_in: ROTATION_CUTOFF_INNER * half,
            r_out: ROTATION_CUTOFF_OUTER * half,
        }
    }

    /// Quintic smoothstep, C2 at both ends.
    fn weight(&self, r: f64) -> f64 {
        if r <= self.r_in {
            1.0
        } else if r >= self.r_out {
            0.0
        } else {
            let s = (r - self.r_in) / (self.r_out - self.r_in);
            1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
        }
    }

    fn velocity(&self, x: [f64; 3]) -> [f64; 3] {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let w = self.weight((dx * dx + dy * dy).sqrt()) * self.omega;
        [-w * dy, w * dx, 0.0]
    }

    /// `int_0^r omega^2 w(s)^2 s ds`, the pressure rise per unit density.
    fn pressure_rise(&self, x: [f64; 3]) -> f64 {
        let dx = x[0] - self.center[0];
        let dy = x[1] - self.center[1];
        let r = (dx * dx + dy * dy).sqrt();
        let o2 = self.omega * self.omega;
        let inner = 0.5 * o2 * r.min(self.r_in).powi(2);
        if r <= self.r_in {
            return inner;
        }
        // integrand is a degree-11 polynomial: six-point Gauss-Legendre is exact
        const NODES: [f64; 3] = [0.238_619_186_083_197, 0.661_209_386_466_265, 0.932_469_514_203_152];
        const WEIGHTS: [f64; 3] = [0.467_913_934_572_691, 0.360_761_573_048_139, 0.171_324_492_379_170];
        let (a, b) = (self.r_in, r.min(self.r_out));
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut sum = 0.0;
        for (xi, wi) in NODES.iter().zip(WEIGHTS) {
            for s in [mid - half * xi, mid + half * xi] {
                sum += wi * self.weight(s).powi(2) * s;
            }
        }
        inner + o2 * half * sum
    }
}

fn interpolate_series(snapshots: &[FlowSnapshot], t: f64) -> FlowSnapshot {
    let j = match snapshots.iter().position(|s| s.t >= t) {
        Some(0) => 0,
        Some(j) => j - 1,
        None => snapshots.len() - 2,
    }
    .min(snapshots.len() - 2);
    let (a, b) = (&snapshots[j], &snapshots[j + 1]);
    if t == a.t {
        return FlowSnapshot { t, ..a.clone() };
    }
    if t == b.t {
        return FlowSnapshot { t, ..b.clone() };
    }
    let w = (t - a.t) / (b.t - a.t);
    let lerp = |x: &ScalarField, y: &ScalarField| x.zip_map(y, |p, q| (1.0 - w) * p + w * q);
    FlowSnapshot {
        t,
        rho: lerp(&a.rho, &b.rho),
        u: a.u.zip_components(&b.u, lerp),
        p: lerp(&a.p, &b.p),
        c: a.c,
    }
}

/// One manifest line: time and the three field files of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotEntry {
    pub t: f64,
    pub rho: PathBuf,
    pub u: PathBuf,
    pub p: PathBuf,
}

/// Parse a `time path_rho path_u path_p` manifest. Relative paths resolve
/// against the manifest's directory; `#` starts a comment.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<SnapshotEntry>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = |m: String| Error::Parse { path: path.to_path_buf(), message: format!("line {}: {m}", lineno + 1) };
        if parts.len() != 4 {
            return Err(bad(format!("expected 4 columns, found {}", parts.len())));
        }
        let t: f64 = parts[0].parse().map_err(|_| bad(format!("bad time {:?}", parts[0])))?;
        entries.push(SnapshotEntry {
            t,
            rho: base.join(parts[1]),
            u: base.join(parts[2]),
            p: base.join(parts[3]),
        });
    }
    Ok(entries)
}

/// Build a snapshot-series provider from field files.
pub fn ingest_snapshots(entries: &[SnapshotEntry], c: f64) -> Result<FlowProvider> {
    if entries.len() < 2 {
        return Err(Error::TooFewSnapshots(entries.len()));
    }
    let mut snapshots: Vec<FlowSnapshot> = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        if !e.t.is_finite() {
            return Err(Error::NonFinite("snapshot time"));
        }
        if let Some(prev) = snapshots.last() {
            if e.t <= prev.t {
                return Err(Error::NonMonotoneTimes(i));
            }
        }
        let rho = read_scalar(&e.rho)?;
        let u = read_vector(&e.u)?;
        let p = read_scalar(&e.p)?;
        let grid = *rho.grid();
        if *u.grid() != grid || *p.grid() != grid {
            return Err(Error::GridMismatch(format!("fields of snapshot {i} live on different grids")));
        }
        if let Some(first) = snapshots.first() {
            if *first.grid() != grid {
                return Err(Error::GridMismatch(format!("snapshot {i} differs from snapshot 0")));
            }
        }
        if rho.values().iter().any(|&r| !(r > 0.0)) {
            return Err(Error::contract(format!("snapshot {i} has non-positive density")));
        }
        rho.ensure_finite("snapshot density")?;
        u.ensure_finite("snapshot velocity")?;
        p.ensure_finite("snapshot pressure")?;
        snapshots.push(FlowSnapshot { t: e.t, rho, u, p, c });
    }
    FlowProvider::new(FlowKind::SnapshotSeries { snapshots }, c)
}

pub fn ingest_manifest(path: impl AsRef<Path>, c: f64) -> Result<FlowProvider> {
    ingest_snapshots(&read_manifest(path)?, c)
}

/// Write snapshots as AFLD files plus a manifest; returns the manifest path.
pub fn write_snapshot_series(dir: impl AsRef<Path>, snapshots: &[FlowSnapshot]) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    for (i, s) in snapshots.iter().enumerate() {
        let names = [format!("rho_{i:04}.afld"), format!("u_{i:04}.afld"), format!("p_{i:04}.afld")];
        write_scalar(dir.join(&names[0]), &s.rho)?;
        write_vector(dir.join(&names[1]), &s.u)?;
        write_scalar(dir.join(&names[2]), &s.p)?;
        manifest.push_str(&format!("{} {} {} {}\n", s.t, names[0], names[1], names[2]));
    }
    let path = dir.join("manifest.txt");
    fs::write(&path, manifest)?;
    Ok(path)
}
