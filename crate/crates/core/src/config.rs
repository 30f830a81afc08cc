//! Flat `key = value` run configuration.
//!
//! Parsing is strict: unknown keys, duplicate keys and malformed values are
//! errors, and unknown keys come with the closest known key as a suggestion.
//! [`RunConfig::to_text`] writes every key, so a parsed echo reproduces the
//! configuration exactly.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::acoustics::LighthillForcing;
use crate::error::{Error, Result};
use crate::perturbation::FluxMode;

/// Split `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Returns `(key, value, line number)` in file order and rejects duplicates.
pub fn parse_key_values(text: &str, path: &Path) -> Result<Vec<(String, String, usize)>> {
    let mut out: Vec<(String, String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            message: format!("line {lineno}: expected `key = value`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::Parse { path: path.to_path_buf(), message: format!("line {lineno}: empty key") });
        }
        if let Some((_, _, first)) = out.iter().find(|(key, _, _)| key == k) {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                message: format!("line {lineno}: key `{k}` already set on line {first}"),
            });
        }
        out.push((k.to_string(), v.to_string(), lineno));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Uniform,
    PlaneWave,
    TaylorGreen,
    SolidRotation,
    OscillatingUniform,
    SnapshotSeries,
}

impl ScenarioKind {
    const ALL: [(ScenarioKind, &'static str); 6] = [
        (ScenarioKind::Uniform, "uniform"),
        (ScenarioKind::PlaneWave, "plane_wave"),
        (ScenarioKind::TaylorGreen, "taylor_green"),
        (ScenarioKind::SolidRotation, "solid_rotation"),
        (ScenarioKind::OscillatingUniform, "oscillating_uniform"),
        (ScenarioKind::SnapshotSeries, "snapshot_series"),
    ];

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(k, _)| *k == self).expect("listed").1
    }

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(_, n)| *n == s).map(|(k, _)| *k)
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub dim: usize,
    pub n: Vec<usize>,
    pub length: Vec<f64>,
    pub c: f64,
    pub p0: f64,
    pub u0: Vec<f64>,
    /// plane wave pressure amplitude, Taylor-Green velocity amplitude or
    /// oscillation amplitude, depending on the scenario
    pub amplitude: f64,
    pub mode: Vec<i64>,
    pub phase: f64,
    pub omega: f64,
    pub period: f64,
    pub direction: Vec<f64>,
    /// snapshot manifest, relative paths resolve against the config file
    pub manifest: Option<PathBuf>,
    pub mach: f64,
    pub reynolds: f64,
    /// averaging horizon; `None` means the provider's window, or `t_end`
    /// for analytic scenarios
    pub tau: Option<f64>,
    pub dt: f64,
    /// semi-Lagrangian step of the base-flow sweeps; `None` uses `dt`
    pub baseflow_dt: Option<f64>,
    pub t_end: f64,
    pub flux_mode: FluxMode,
    pub output_dir: PathBuf,
    /// `None` uses `0` and `tau`
    pub sample_times: Option<Vec<f64>>,
    pub seed: u64,
    /// amplitude of a seeded band-limited fluctuation added to the initial state
    pub random_amplitude: f64,
    pub random_kmax: i64,
    pub compare_sources: bool,
    pub source_forcing: LighthillForcing,
    /// intensity averaging window in steps; `None` uses every step
    pub intensity_window: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioKind::PlaneWave,
            dim: 2,
            n: vec![64, 64],
            length: vec![1.0, 1.0],
            c: 1.0,
            p0: 1.0,
            u0: vec![0.0, 0.0],
            amplitude: 1e-3,
            mode: vec![1, 0],
            phase: 0.0,
            omega: 2.0 * std::f64::consts::PI,
            period: 1.0,
            direction: vec![1.0, 0.0],
            manifest: None,
            mach: 0.0,
            reynolds: f64::INFINITY,
            tau: None,
            dt: 0.004,
            baseflow_dt: None,
            t_end: 0.5,
            flux_mode: FluxMode::Upwind,
            output_dir: PathBuf::from("run"),
            sample_times: None,
            seed: 1,
            random_amplitude: 0.0,
            random_kmax: 4,
            compare_sources: true,
            source_forcing: LighthillForcing::TrueSource,
            intensity_window: None,
        }
    }
}

pub const KEYS: [&str; 29] = [
    "scenario",
    "dim",
    "n",
    "length",
    "c",
    "p0",
    "u0",
    "amplitude",
    "mode",
    "phase",
    "omega",
    "period",
    "direction",
    "manifest",
    "mach",
    "reynolds",
    "tau",
    "dt",
    "baseflow_dt",
    "t_end",
    "flux_mode",
    "output_dir",
    "sample_times",
    "seed",
    "random_amplitude",
    "random_kmax",
    "compare_sources",
    "intensity_window",
    "source_forcing",
];

/// One problem found in a configuration, tied to the key it concerns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: `{}`: {}", self.key, self.message),
            None => write!(f, "`{}`: {}", self.key, self.message),
        }
    }
}

fn nearest_key(unknown: &str) -> Option<&'static str> {
    KEYS.iter()
        .map(|k| (*k, strsim::normalized_damerau_levenshtein(unknown, k)))
        .filter(|(_, s)| *s >= 0.5)
        .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite similarity"))
        .map(|(k, _)| k)
}

fn fmt_list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Option<Vec<T>> {
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| !v.is_nan())
}

impl RunConfig {
    /// Lossless text form listing every key.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".to_string());
        let mut lines = vec![
            format!("scenario = {}", self.scenario),
            format!("dim = {}", self.dim),
            format!("n = {}", fmt_list(&self.n)),
            format!("length = {}", fmt_list(&self.length)),
            format!("c = {}", self.c),
            format!("p0 = {}", self.p0),
            format!("u0 = {}", fmt_list(&self.u0)),
            format!("amplitude = {}", self.amplitude),
            format!("mode = {}", fmt_list(&self.mode)),
            format!("phase = {}", self.phase),
            format!("omega = {}", self.omega),
            format!("period = {}", self.period),
            format!("direction = {}", fmt_list(&self.direction)),
            format!("manifest = {}", opt(self.manifest.as_ref().map(|p| p.display().to_string()))),
            format!("mach = {}", self.mach),
            format!("reynolds = {}", self.reynolds),
            format!("tau = {}", opt(self.tau.map(|v| v.to_string()))),
            format!("dt = {}", self.dt),
            format!("baseflow_dt = {}", opt(self.baseflow_dt.map(|v| v.to_string()))),
            format!("t_end = {}", self.t_end),
            format!("flux_mode = {}", self.flux_mode),
            format!("output_dir = {}", self.output_dir.display()),
            format!("sample_times = {}", opt(self.sample_times.as_ref().map(|v| fmt_list(v)))),
            format!("seed = {}", self.seed),
            format!("random_amplitude = {}", self.random_amplitude),
            format!("random_kmax = {}", self.random_kmax),
            format!("compare_sources = {}", self.compare_sources),
            format!("source_forcing = {}", self.source_forcing),
            format!("intensity_window = {}", opt(self.intensity_window.map(|v| v.to_string()))),
        ];
        lines.push(String::new());
        lines.join("\n")
    }

    /// Parse and validate; every problem found is reported.
    pub fn parse(text: &str) -> std::result::Result<RunConfig, Vec<ConfigIssue>> {
        let kv = parse_key_values(text, Path::new("<config>")).map_err(|e| {
            vec![ConfigIssue { key: "<syntax>".into(), line: None, message: e.to_string() }]
        })?;
        let mut cfg = RunConfig::default();
        let mut issues = Vec::new();
        let mut explicit_n = false;
        let mut explicit_length = false;
        for (key, value, line) in &kv {
            let mut bad = |msg: String| issues.push(ConfigIssue { key: key.clone(), line: Some(*line), message: msg });
            let auto = value == "auto";
            match key.as_str() {
                "scenario" => match ScenarioKind::parse(value) {
                    Some(s) => cfg.scenario = s,
                    None => bad(format!(
                        "unknown scenario `{value}` (expected one of {})",
                        ScenarioKind::ALL.iter().map(|(_, n)| *n).collect::<Vec<_>>().join(", ")
                    )),
                },
                "dim" => match value.parse() {
                    Ok(d) => cfg.dim = d,
                    Err(_) => bad(format!("expected an integer, got `{value}`")),
                },
                "n" => match parse_list::<usize>(value) {
                    Some(v) => {
                        cfg.n = v;
                        explicit_n = true;
                    }
                    None => bad(format!("expected a comma-separated list of cell counts, got `{value}`")),
                },
                "length" => match parse_list::<f64>(value) {
                    Some(v) => {
                        cfg.length = v;
                        explicit_length = true;
                    }
                    None => bad(format!("expected a comma-separated list of lengths, got `{value}`")),
                },
                "u0" | "direction" => match parse_list::<f64>(value) {
                    Some(v) if key == "u0" => cfg.u0 = v,
                    Some(v) => cfg.direction = v,
                    None => bad(format!("expected a comma-separated list of numbers, got `{value}`")),
                },
                "mode" => match parse_list::<i64>(value) {
                    Some(v) => cfg.mode = v,
                    None => bad(format!("expected a comma-separated list of integers, got `{value}`")),
                },
                "c" | "p0" | "amplitude" | "phase" | "omega" | "period" | "mach" | "reynolds" | "dt" | "t_end"
                | "random_amplitude" => match parse_f64(value) {
                    Some(v) => {
                        let slot = match key.as_str() {
                            "c" => &mut cfg.c,
                            "p0" => &mut cfg.p0,
                            "amplitude" => &mut cfg.amplitude,
                            "phase" => &mut cfg.phase,
                            "omega" => &mut cfg.omega,
                            "period" => &mut cfg.period,
                            "mach" => &mut cfg.mach,
                            "reynolds" => &mut cfg.reynolds,
                            "dt" => &mut cfg.dt,
                            "t_end" => &mut cfg.t_end,
                            _ => &mut cfg.random_amplitude,
                        };
                        *slot = v;
                    }
                    None => bad(format!("expected a number, got `{value}`")),
                },
                "tau" | "baseflow_dt" => {
                    let parsed = if auto { Some(None) } else { parse_f64(value).map(Some) };
                    match parsed {
                        Some(v) if key == "tau" => cfg.tau = v,
                        Some(v) => cfg.baseflow_dt = v,
                        None => bad(format!("expected a number or `auto`, got `{value}`")),
                    }
                }
                "manifest" => cfg.manifest = if auto { None } else { Some(PathBuf::from(value)) },
                "flux_mode" => match value.parse::<FluxMode>() {
                    Ok(m) => cfg.flux_mode = m,
                    Err(e) => bad(e),
                },
                "source_forcing" => match value.parse::<LighthillForcing>() {
                    Ok(f) => cfg.source_forcing = f,
                    Err(e) => bad(e),
                },
                "output_dir" => {
                    if value.is_empty() {
                        bad("must not be empty".into());
                    } else {
                        cfg.output_dir = PathBuf::from(value);
                    }
                }
                "sample_times" => {
                    if auto {
                        cfg.sample_times = None;
                    } else {
                        match parse_list::<f64>(value) {
                            Some(v) => cfg.sample_times = Some(v),
                            None => bad(format!("expected a comma-separated list of times or `auto`, got `{value}`")),
                        }
                    }
                }
                "seed" => match value.parse() {
                    Ok(s) => cfg.seed = s,
                    Err(_) => bad(format!("expected a non-negative integer, got `{value}`")),
                },
                "random_kmax" => match value.parse() {
                    Ok(k) => cfg.random_kmax = k,
                    Err(_) => bad(format!("expected an integer, got `{value}`")),
                },
                "compare_sources" => match value.as_str() {
                    "true" => cfg.compare_sources = true,
                    "false" => cfg.compare_sources = false,
                    _ => bad(format!("expected true or false, got `{value}`")),
                },
                "intensity_window" => {
                    if auto {
                        cfg.intensity_window = None;
                    } else {
                        match value.parse() {
                            Ok(w) => cfg.intensity_window = Some(w),
                            Err(_) => bad(format!("expected a step count or `auto`, got `{value}`")),
                        }
                    }
                }
                other => {
                    let hint = nearest_key(other).map(|k| format!("; did you mean `{k}`?")).unwrap_or_default();
                    bad(format!("unknown key{hint}"));
                }
            }
        }
        // a single n or length applies to every axis
        if !explicit_n || cfg.n.len() == 1 {
            cfg.n = vec![cfg.n[0]; cfg.dim];
        }
        if !explicit_length || cfg.length.len() == 1 {
            cfg.length = vec![cfg.length[0]; cfg.dim];
        }
        let line_of = |k: &str| kv.iter().find(|(key, _, _)| key == k).map(|(_, _, l)| *l);
        for mut issue in cfg.validate() {
            if issue.line.is_none() {
                issue.line = line_of(&issue.key);
            }
            if !issues.iter().any(|i: &ConfigIssue| i.key == issue.key) {
                issues.push(issue);
            }
        }
        issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        if issues.is_empty() {
            Ok(cfg)
        } else {
            Err(issues)
        }
    }

    /// Parse a file; relative `manifest` and `output_dir` paths resolve
    /// against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> std::result::Result<RunConfig, Vec<ConfigIssue>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            vec![ConfigIssue { key: "<file>".into(), line: None, message: format!("cannot read {}: {e}", path.display()) }]
        })?;
        let mut cfg = RunConfig::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(m) = &cfg.manifest {
            if m.is_relative() {
                cfg.manifest = Some(base.join(m));
            }
        }
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    /// Invariant checks; returns every violation.
    pub fn validate(&self) -> Vec<ConfigIssue> {
        let mut issues = Vec::new();
        let mut bad = |key: &str, message: String| issues.push(ConfigIssue { key: key.into(), line: None, message });
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(self.dim == 2 || self.dim == 3) {
            bad("dim", format!("must be 2 or 3, got {}", self.dim));
        }
        if self.n.len() != self.dim || self.n.iter().any(|&n| n < 4 || n % 2 != 0) {
            bad("n", format!("need {} even cell counts >= 4, got {}", self.dim, fmt_list(&self.n)));
        }
        if self.length.len() != self.dim || !self.length.iter().all(|&l| positive(l)) {
            bad("length", format!("need {} positive lengths, got {}", self.dim, fmt_list(&self.length)));
        }
        if !positive(self.c) {
            bad("c", format!("must be positive, got {}", self.c));
        }
        if !positive(self.p0) {
            bad("p0", format!("must be positive, got {}", self.p0));
        }
        if !positive(self.dt) {
            bad("dt", format!("must be positive, got {}", self.dt));
        }
        if !positive(self.t_end) {
            bad("t_end", format!("must be positive, got {}", self.t_end));
        }
        if let Some(t) = self.tau {
            if !positive(t) {
                bad("tau", format!("must be positive, got {t}"));
            }
        }
        if let Some(b) = self.baseflow_dt {
            if !positive(b) {
                bad("baseflow_dt", format!("must be positive, got {b}"));
            }
        }
        if !(self.mach.is_finite() && self.mach >= 0.0) {
            bad("mach", format!("must be non-negative, got {}", self.mach));
        }
        if !(self.reynolds > 0.0) {
            bad("reynolds", format!("must be positive, got {}", self.reynolds));
        }
        if !(self.random_amplitude.is_finite() && self.random_amplitude >= 0.0) {
            bad("random_amplitude", format!("must be non-negative, got {}", self.random_amplitude));
        }
        if self.random_kmax < 1 {
            bad("random_kmax", format!("must be at least 1, got {}", self.random_kmax));
        }
        if let Some(times) = &self.sample_times {
            if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                bad("sample_times", "must be non-negative finite times".into());
            }
        }
        if self.intensity_window == Some(0) {
            bad("intensity_window", "must be at least 1 step".into());
        }
        if self.output_dir.is_file() {
            bad("output_dir", format!("{} exists and is a file", self.output_dir.display()));
        }
        let needs_u0 = matches!(
            self.scenario,
            ScenarioKind::Uniform | ScenarioKind::PlaneWave | ScenarioKind::OscillatingUniform
        );
        if needs_u0 && self.u0.len() != self.dim {
            bad("u0", format!("need {} components, got {}", self.dim, self.u0.len()));
        }
        match self.scenario {
            ScenarioKind::PlaneWave => {
                if self.mode.len() != self.dim || self.mode.iter().all(|&m| m == 0) {
                    bad("mode", format!("need a non-zero mode with {} components", self.dim));
                }
                if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
                    bad("amplitude", format!("must be non-negative, got {}", self.amplitude));
                }
            }
            ScenarioKind::TaylorGreen if self.dim != 2 => {
                bad("scenario", "taylor_green is two-dimensional".into());
            }
            ScenarioKind::SolidRotation => {
                if self.dim != 2 {
                    bad("scenario", "solid_rotation is two-dimensional".into());
                }
                if !self.omega.is_finite() {
                    bad("omega", format!("must be finite, got {}", self.omega));
                }
            }
            ScenarioKind::OscillatingUniform => {
                if !positive(self.period) {
                    bad("period", format!("must be positive, got {}", self.period));
                }
                if self.direction.len() != self.dim {
                    bad("direction", format!("need {} components", self.dim));
                }
            }
            ScenarioKind::SnapshotSeries if self.manifest.is_none() => {
                bad("manifest", "snapshot_series needs a manifest path".into());
            }
            _ => {}
        }
        issues
    }
}
