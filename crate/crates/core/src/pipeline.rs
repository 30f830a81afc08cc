//! Configuration-driven run: scenario, base flow, perturbation evolution,
//! splitting, source comparison and diagnostics, written to one directory.
//!
//! Everything written is a function of the configuration alone. Random
//! initial fluctuations come from a ChaCha8 stream seeded with `seed`; the
//! pressure field is drawn first, then the velocity components in axis
//! order, each as a band-limited Fourier sum.
//!
//! Run directory layout:
//!
//! ```text
//! config.echo      every key, absolute paths; loading it reproduces the run
//! summary.txt      key = value scalars
//! energy.csv       total, acoustic and vortical energy per step
//! splitting.csv    Helmholtz certificates per step
//! sources.csv      source-comparison norms (when enabled)
//! baseflow/        sampled u_bar fields and constants
//! fields/          initial and final states, final split, intensity
//! ```

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::acoustics::{compare_sources, fluctuations, step_count, SourceComparison};
use crate::baseflow::{check_base_flow_properties, compute_base_flow, write_base_flow, BaseFlow, BaseFlowReport};
use crate::config::{RunConfig, ScenarioKind};
use crate::diagnostics::{conservation_drift, intensity, scale_separation, EnergyReport};
use crate::error::{Error, Result};
use crate::fields::io::{write_scalar, write_vector};
use crate::fields::random::{band_limited_scalar, band_limited_vector};
use crate::fields::{Grid, VectorField};
use crate::perturbation::{courant_number, residual_ma_re, step, write_checkpoint, FluxMode, PerturbationState};
use crate::scenarios::{ingest_manifest, FlowKind, FlowProvider};
use crate::splitting::{helmholtz_split, write_split};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Scenario,
    BaseFlow,
    Perturbation,
    Splitting,
    Sources,
    Diagnostics,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Scenario => "scenario",
            Stage::BaseFlow => "baseflow",
            Stage::Perturbation => "perturbation",
            Stage::Splitting => "splitting",
            Stage::Sources => "sources",
            Stage::Diagnostics => "diagnostics",
            Stage::Output => "output",
        })
    }
}

/// A pipeline failure tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("stage {stage}: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T, E: Into<Error>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|e| StageError { stage, source: e.into() })
    }
}

pub fn build_grid(cfg: &RunConfig) -> Result<Grid> {
    Grid::new(&cfg.n, &cfg.length)
}

pub fn build_provider(cfg: &RunConfig) -> Result<FlowProvider> {
    let kind = match cfg.scenario {
        ScenarioKind::Uniform => {
            return Ok(FlowProvider::uniform(&cfg.u0, cfg.p0, cfg.c)?.with_similarity(cfg.mach, cfg.reynolds));
        }
        ScenarioKind::PlaneWave => FlowKind::UniformPlusPlaneWave {
            u0: cfg.u0.clone(),
            p0: cfg.p0,
            amplitude: cfg.amplitude,
            mode: cfg.mode.clone(),
            phase: cfg.phase,
        },
        ScenarioKind::TaylorGreen => FlowKind::TaylorGreen { amplitude: cfg.amplitude, p0: cfg.p0 },
        ScenarioKind::SolidRotation => FlowKind::SolidRotation { omega: cfg.omega, p0: cfg.p0 },
        ScenarioKind::OscillatingUniform => FlowKind::OscillatingUniform {
            u0: cfg.u0.clone(),
            amplitude: cfg.amplitude,
            direction: cfg.direction.clone(),
            period: cfg.period,
            p0: cfg.p0,
        },
        ScenarioKind::SnapshotSeries => {
            let manifest = cfg.manifest.as_ref().ok_or_else(|| Error::contract("snapshot_series needs a manifest"))?;
            return Ok(ingest_manifest(manifest, cfg.c)?.with_similarity(cfg.mach, cfg.reynolds));
        }
    };
    Ok(FlowProvider::new(kind, cfg.c)?.with_similarity(cfg.mach, cfg.reynolds))
}

/// Averaging horizon: the configured value, else the whole snapshot window,
/// else the simulated span.
pub fn resolve_tau(cfg: &RunConfig, provider: &FlowProvider) -> f64 {
    if let Some(t) = cfg.tau {
        return t;
    }
    let (lo, hi) = provider.window();
    if hi.is_finite() {
        hi - lo
    } else {
        cfg.t_end
    }
}

fn resolve_sample_times(cfg: &RunConfig, t0: f64, tau: f64) -> Vec<f64> {
    cfg.sample_times.clone().unwrap_or_else(|| vec![t0, t0 + 0.5 * tau, t0 + tau])
}

/// The configuration with `output_dir` and `manifest` made absolute.
pub fn absolute_config(cfg: &RunConfig) -> Result<RunConfig> {
    let mut out = cfg.clone();
    out.output_dir = std::path::absolute(&cfg.output_dir)?;
    if let Some(m) = &cfg.manifest {
        out.manifest = Some(std::path::absolute(m)?);
    }
    Ok(out)
}

fn check_grid_matches(provider: &FlowProvider, grid: &Grid) -> Result<()> {
    if let FlowKind::SnapshotSeries { snapshots } = provider.kind() {
        if snapshots[0].grid() != grid {
            return Err(Error::GridMismatch(format!(
                "snapshots live on n = {:?}, length = {:?}; the config asks for n = {:?}, length = {:?}",
                snapshots[0].grid().n(),
                snapshots[0].grid().length(),
                grid.n(),
                grid.length()
            )));
        }
    }
    Ok(())
}

struct Prepared {
    cfg: RunConfig,
    grid: Grid,
    provider: FlowProvider,
    bf: BaseFlow,
    report: BaseFlowReport,
}

fn prepare(cfg: &RunConfig) -> std::result::Result<Prepared, StageError> {
    let cfg = absolute_config(cfg).at(Stage::Output)?;
    let grid = build_grid(&cfg).at(Stage::Scenario)?;
    let provider = build_provider(&cfg).at(Stage::Scenario)?;
    check_grid_matches(&provider, &grid).at(Stage::Scenario)?;
    let t0 = provider.window().0;
    provider.check_time(t0 + cfg.t_end).at(Stage::Scenario)?;
    let tau = resolve_tau(&cfg, &provider);
    let sample_times = resolve_sample_times(&cfg, t0, tau);
    let bf = compute_base_flow(&provider, &grid, tau, cfg.baseflow_dt.unwrap_or(cfg.dt), &sample_times)
        .at(Stage::BaseFlow)?;
    let report = check_base_flow_properties(&bf, &provider);
    Ok(Prepared { cfg, grid, provider, bf, report })
}

fn start_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.echo"), cfg.to_text())?;
    Ok(dir)
}

fn scenario_u0(cfg: &RunConfig) -> Option<&[f64]> {
    match cfg.scenario {
        ScenarioKind::Uniform | ScenarioKind::PlaneWave | ScenarioKind::OscillatingUniform => Some(&cfg.u0),
        _ => None,
    }
}

fn write_base_flow_summary(out: &mut String, p: &Prepared) {
    let r = &p.report;
    let _ = writeln!(out, "tau = {:e}", p.bf.tau());
    let _ = writeln!(out, "base_flow_samples = {}", p.bf.times().len());
    let _ = writeln!(out, "p_bar = {:e}", p.bf.p_bar());
    let _ = writeln!(out, "rho_bar = {:e}", p.bf.rho_bar());
    let _ = writeln!(out, "u_bar_max = {:e}", p.bf.max_speed());
    if let Some(u0) = scenario_u0(&p.cfg) {
        let dev = p
            .bf
            .samples()
            .iter()
            .map(|u| (0..u.dim()).map(|a| u.component(a).map(|v| v - u0[a]).max_abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        let _ = writeln!(out, "u_bar_minus_u0_max = {dev:e}");
    }
    let _ = writeln!(out, "residual_divergence = {:e}", r.max_divergence);
    let _ = writeln!(out, "residual_material_derivative = {:e}", r.max_material_derivative);
    let _ = writeln!(out, "residual_transport = {:e}", r.max_transport_residual);
    let _ = writeln!(out, "residual_gradient_contraction = {:e}", r.max_gradient_contraction);
    let _ = writeln!(out, "residual_density_consistency = {:e}", r.density_consistency);
    let _ = writeln!(out, "residual_pressure_spread = {:e}", r.pressure_spread);
}

/// Compute only the base flow: writes `config.echo`, `baseflow/` and
/// `baseflow.txt` with the property residuals.
pub fn run_base_flow(cfg: &RunConfig) -> std::result::Result<PathBuf, StageError> {
    let p = prepare(cfg)?;
    let dir = start_dir(&p.cfg).at(Stage::Output)?;
    write_base_flow(dir.join("baseflow"), &p.bf).at(Stage::Output)?;
    let mut out = String::new();
    let _ = writeln!(out, "scenario = {}", p.cfg.scenario);
    write_base_flow_summary(&mut out, &p);
    fs::write(dir.join("baseflow.txt"), out).at(Stage::Output)?;
    Ok(dir)
}

/// Max of `|p'/(u'.n) - rho0 c|` for a plane-wave scenario at `t`, with
/// `rho0 = p0/c^2`; where `u'.n` is tiny the cross-multiplied form is used.
pub fn impedance_defect(provider: &FlowProvider, grid: &Grid, t: f64) -> Result<Option<f64>> {
    let FlowKind::UniformPlusPlaneWave { u0, p0, amplitude, mode, .. } = provider.kind() else {
        return Ok(None);
    };
    if *amplitude == 0.0 {
        return Ok(None);
    }
    let c = provider.c();
    let rho = p0 / (c * c);
    let k: Vec<f64> = (0..grid.dim()).map(|a| mode[a] as f64 / grid.length()[a]).collect();
    let kn = k.iter().map(|v| v * v).sum::<f64>().sqrt();
    let s = provider.sample(grid, t)?;
    let mut worst = 0.0f64;
    for cell in 0..grid.len() {
        let pp = s.p.values()[cell] - p0;
        let un: f64 = (0..grid.dim()).map(|a| (s.u.component(a).values()[cell] - u0[a]) * k[a] / kn).sum();
        if un.abs() > 1e-3 * amplitude / (rho * c) {
            worst = worst.max((pp / un - rho * c).abs());
        } else {
            worst = worst.max((pp - rho * c * un).abs() / amplitude);
        }
    }
    Ok(Some(worst))
}

fn initial_state(p: &Prepared) -> Result<PerturbationState> {
    let t0 = p.provider.window().0;
    let snap = p.provider.sample(&p.grid, t0)?;
    let (mut pp, mut up) = fluctuations(&snap, &p.bf);
    if p.cfg.random_amplitude > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(p.cfg.seed);
        let (rho, c) = (p.bf.rho_bar(), p.bf.c());
        let noise_p = band_limited_scalar(&p.grid, p.cfg.random_kmax, &mut rng);
        let noise_u = band_limited_vector(&p.grid, p.cfg.random_kmax, &mut rng);
        pp.axpy(p.cfg.random_amplitude * rho * c, &noise_p);
        up.axpy(p.cfg.random_amplitude, &noise_u);
    }
    PerturbationState::from_primitive(t0, &pp, &up, p.bf.rho_bar(), p.bf.c())
}

fn splitting_csv(traj: &[PerturbationState]) -> Result<(String, f64, f64, f64)> {
    let mut out = String::from("t,curl_ua_rel,div_uv_rel,recombination,ua_rms,uv_rms\n");
    let (mut curl, mut dv, mut rec) = (0.0f64, 0.0f64, 0.0f64);
    for s in traj {
        let u = s.u_prime();
        let split = helmholtz_split(&u)?;
        let cert = split.certificates(&u);
        curl = curl.max(cert.curl_relative());
        dv = dv.max(cert.div_relative());
        rec = rec.max(cert.recombination);
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e}",
            s.t,
            cert.curl_relative(),
            cert.div_relative(),
            cert.recombination,
            split.u_a.rms(),
            split.u_v.rms()
        );
    }
    Ok((out, curl, dv, rec))
}

/// Outcome of a full run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub steps: usize,
    pub energy: EnergyReport,
    pub sources: Option<SourceComparison>,
}

/// Execute the whole pipeline and return the run directory.
pub fn run(cfg: &RunConfig) -> std::result::Result<RunSummary, StageError> {
    let p = prepare(cfg)?;
    let dir = start_dir(&p.cfg).at(Stage::Output)?;
    let fields_dir = dir.join("fields");
    fs::create_dir_all(&fields_dir).at(Stage::Output)?;
    write_base_flow(dir.join("baseflow"), &p.bf).at(Stage::Output)?;

    // perturbation
    let (steps, h) = step_count(p.cfg.t_end, p.cfg.dt).at(Stage::Perturbation)?;
    let s0 = initial_state(&p).at(Stage::Perturbation)?;
    write_scalar(fields_dir.join("initial.p.afld"), &s0.p_prime()).at(Stage::Output)?;
    write_vector(fields_dir.join("initial.u.afld"), &s0.u_prime()).at(Stage::Output)?;
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(s0);
    let mut max_courant = 0.0f64;
    for _ in 0..steps {
        let last = traj.last().expect("non-empty");
        max_courant = max_courant.max(courant_number(&p.bf, last.t, h));
        let next = step(last, &p.bf, h, p.cfg.flux_mode).at(Stage::Perturbation)?;
        traj.push(next);
    }
    let last = traj.last().expect("non-empty");
    write_checkpoint(&fields_dir, "final", last, p.cfg.flux_mode).at(Stage::Output)?;

    // splitting
    let (split_csv, curl, dv, rec) = splitting_csv(&traj).at(Stage::Splitting)?;
    fs::write(dir.join("splitting.csv"), split_csv).at(Stage::Output)?;
    let final_split = helmholtz_split(&last.u_prime()).at(Stage::Splitting)?;
    write_split(&fields_dir, "final", &final_split).at(Stage::Output)?;

    // energy and intensity
    let energy = conservation_drift(&traj).at(Stage::Diagnostics)?;
    energy.write_csv(dir.join("energy.csv")).at(Stage::Output)?;
    let window = p.cfg.intensity_window.unwrap_or(steps);
    if window > steps {
        return Err(StageError {
            stage: Stage::Diagnostics,
            source: Error::contract(format!("intensity window of {window} steps exceeds the {steps} steps run")),
        });
    }
    let intensity_field = intensity(&traj, &p.bf, window).at(Stage::Diagnostics)?;
    write_vector(fields_dir.join("intensity.afld"), &intensity_field.i).at(Stage::Output)?;
    let scales = scale_separation(&p.provider, &p.bf, p.provider.window().0).at(Stage::Diagnostics)?;
    let impedance = impedance_defect(&p.provider, &p.grid, p.provider.window().0).at(Stage::Diagnostics)?;

    // sources
    let t0 = p.provider.window().0;
    let sources = if p.cfg.compare_sources && t0 == 0.0 {
        // the wave solvers use the tighter central limit
        let limit = FluxMode::Central.courant_limit();
        let dt_wave = h.min(limit * p.grid.min_spacing() / (p.bf.max_speed() + p.bf.c()) * (1.0 - 1e-9));
        let cmp = compare_sources(&p.provider, &p.bf, p.cfg.t_end, dt_wave, p.cfg.source_forcing).at(Stage::Sources)?;
        cmp.write_csv(dir.join("sources.csv")).at(Stage::Output)?;
        Some(cmp)
    } else {
        None
    };

    // summary
    let mut out = String::new();
    let _ = writeln!(out, "scenario = {}", p.cfg.scenario);
    let _ = writeln!(out, "grid = {}", p.grid.n().iter().map(|v| v.to_string()).collect::<Vec<_>>().join("x"));
    let _ = writeln!(out, "mach = {:e}", p.provider.mach());
    let _ = writeln!(out, "reynolds = {:e}", p.provider.reynolds());
    let _ = writeln!(out, "neglected_terms_ma_re = {:e}", residual_ma_re(&p.provider));
    write_base_flow_summary(&mut out, &p);
    let _ = writeln!(out, "flux_mode = {}", p.cfg.flux_mode);
    let _ = writeln!(out, "steps = {steps}");
    let _ = writeln!(out, "dt = {h:e}");
    let _ = writeln!(out, "max_courant = {max_courant:e}");
    let _ = writeln!(out, "energy_initial = {:e}", energy.total_eta[0]);
    let _ = writeln!(out, "energy_final = {:e}", energy.total_eta[energy.total_eta.len() - 1]);
    let _ = writeln!(out, "energy_drift_max = {:e}", energy.max_abs_drift());
    let _ = writeln!(out, "energy_identity_defect_max = {:e}", energy.max_identity_defect());
    let _ = writeln!(out, "split_curl_ua_rel_max = {curl:e}");
    let _ = writeln!(out, "split_div_uv_rel_max = {dv:e}");
    let _ = writeln!(out, "split_recombination_max = {rec:e}");
    match &sources {
        Some(cmp) => {
            let r = cmp.last();
            let _ = writeln!(out, "source_forcing = {}", p.cfg.source_forcing);
            let _ = writeln!(out, "source_l2_true_vs_theorem1 = {:e}", r.l2_true_vs_theorem1);
            let _ = writeln!(out, "source_l2_lighthill_vs_theorem1 = {:e}", r.l2_lighthill_vs_theorem1);
            let _ = writeln!(out, "source_l2_true_vs_lighthill = {:e}", r.l2_true_vs_lighthill);
        }
        None if p.cfg.compare_sources => {
            let _ = writeln!(out, "source_comparison = skipped, window starts at {t0:e}");
        }
        None => {
            let _ = writeln!(out, "source_comparison = off");
        }
    }
    if let Some(d) = impedance {
        let _ = writeln!(out, "impedance_defect = {d:e}");
    }
    let _ = writeln!(out, "intensity_window = {:e}", intensity_field.window);
    let _ = writeln!(out, "intensity_div_norm = {:e}", intensity_field.div_norm);
    let _ = writeln!(out, "intensity_max = {:e}", intensity_field.i.max_norm());
    let _ = writeln!(out, "scale_density_ratio = {:e}", scales.density_ratio);
    let _ = writeln!(out, "scale_velocity_ratio = {:e}", scales.velocity_ratio);
    let _ = writeln!(out, "scale_pressure_ratio = {:e}", scales.pressure_ratio);
    let _ = writeln!(out, "scale_fluctuation_mach = {:e}", scales.fluctuation_mach);
    fs::write(dir.join("summary.txt"), out).at(Stage::Output)?;

    Ok(RunSummary { dir, steps, energy, sources })
}

/// Split a stored vector field and write `<stem>.ua` and `<stem>.uv` next to
/// it, or into `out_dir` when given.
pub fn split_file(path: &Path, out_dir: Option<&Path>) -> Result<(PathBuf, crate::splitting::SplitCertificates)> {
    let u: VectorField = crate::fields::io::read_vector(path)?;
    let split = helmholtz_split(&u)?;
    let cert = split.certificates(&u);
    let dir = match (out_dir, path.parent()) {
        (Some(d), _) => d.to_path_buf(),
        (None, Some(p)) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("field").to_string();
    write_split(&dir, &stem, &split)?;
    Ok((dir.join(stem), cert))
}
