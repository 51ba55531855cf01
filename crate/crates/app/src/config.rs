//! JSON simulation configuration.

use std::path::{Path, PathBuf};

use arrestflow_core::kernels::{compatibility_routes, KernelSpec, TabulatedKernel};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
}

fn origin() -> [f64; 2] {
    [0.0, 0.0]
}

fn default_smoothing() -> f64 {
    32.0
}

/// Initial interface shapes. Built-in shapes are traversed clockwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    Circle {
        radius: f64,
        #[serde(default = "origin")]
        center: [f64; 2],
    },
    Ellipse {
        a: f64,
        b: f64,
        #[serde(default = "origin")]
        center: [f64; 2],
        /// Parameter offset of the first node.
        #[serde(default)]
        phase: f64,
    },
    /// Polar `r(s) = scale (1 - neck cos 2s)`.
    Peanut {
        scale: f64,
        neck: f64,
        #[serde(default = "origin")]
        center: [f64; 2],
    },
    /// Thick circular arc with rounded ends whose tips face each other
    /// across a gap, smoothed by a Gaussian Fourier filter.
    Horseshoe {
        radius: f64,
        half_width: f64,
        gap: f64,
        #[serde(default = "origin")]
        center: [f64; 2],
        /// Filter wavenumber; `0` disables smoothing.
        #[serde(default = "default_smoothing")]
        smoothing: f64,
    },
    /// CSV file with header `x,y`.
    PointsFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterfaceConfig {
    pub initial: ShapeConfig,
    /// Growth rate; negative values grow a clockwise interface.
    pub c: f64,
    /// CSV file with header `x,f` giving an external forcing profile over `[-π, π)`.
    #[serde(default)]
    pub f_ext: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelConfig {
    Gaussian { alpha: f64, beta: f64 },
    Zero,
    /// CSV file with header `s,g,gdot`.
    Tabulated { file: PathBuf },
}

fn default_safety() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(rename = "M")]
    pub m: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    /// Time between snapshots; defaults to a tenth of the horizon.
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    #[serde(default)]
    pub terminate_on_self_intersection: bool,
}

impl SolverConfig {
    pub fn snapshot_interval(&self) -> f64 {
        self.snapshot_every.unwrap_or(self.t_end / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DistortionChoice {
    #[default]
    Pseudo,
    Mobius,
    Kl,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default)]
    pub distortion_kernel: DistortionChoice,
    #[serde(default)]
    pub track_gromov: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub interfaces: Vec<InterfaceConfig>,
    pub kernels: Vec<Vec<KernelConfig>>,
    pub solver: SolverConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub seed: u64,
}

impl SystemConfig {
    /// Pretty JSON with every default written out.
    pub fn normalized_dump(&self) -> String {
        let mut full = self.clone();
        full.solver.snapshot_every = Some(self.solver.snapshot_interval());
        let mut s = serde_json::to_string_pretty(&full).expect("config serializes");
        s.push('\n');
        s
    }

    /// Resolves relative file paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for iface in &mut self.interfaces {
            if let ShapeConfig::PointsFile { path } = &mut iface.initial {
                fix(path);
            }
            if let Some(p) = &mut iface.f_ext {
                fix(p);
            }
        }
        for row in &mut self.kernels {
            for k in row {
                if let KernelConfig::Tabulated { file } = k {
                    fix(file);
                }
            }
        }
    }
}

fn parse_error(e: serde_json::Error) -> ConfigError {
    ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses and validates a configuration without touching the filesystem.
pub fn parse_config(text: &str) -> Result<SystemConfig, ConfigError> {
    let config: SystemConfig = serde_json::from_str(text).map_err(parse_error)?;
    let problems = validate(&config);
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Validation(problems))
    }
}

/// Reads a config file, resolving relative paths against its directory.
pub fn load_config(path: &Path) -> Result<SystemConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut config: SystemConfig = serde_json::from_str(&text).map_err(parse_error)?;
    config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    let problems = validate(&config);
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Validation(problems))
    }
}

pub fn parse_kernel_fragment(text: &str) -> Result<KernelConfig, ConfigError> {
    serde_json::from_str(text).map_err(parse_error)
}

/// Reads a `s,g,gdot` table.
pub fn read_kernel_table(path: &Path) -> Result<TabulatedKernel, ConfigError> {
    let rows = read_csv_columns(path, &["s", "g", "gdot"])?;
    TabulatedKernel::new(rows.into_iter().map(|r| (r[0], r[1], r[2])).collect()).map_err(|e| {
        ConfigError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    })
}

/// Reads numeric CSV columns in the given header order.
pub fn read_csv_columns(path: &Path, header: &[&str]) -> Result<Vec<Vec<f64>>, ConfigError> {
    let err = |message: String| ConfigError::File {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let found: Vec<String> = reader
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(err(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            found.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let row = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| err(format!("row {}: {e}", n + 2)))?;
        rows.push(row);
    }
    Ok(rows)
}

/// Builds and classifies a kernel.
pub fn build_kernel(config: &KernelConfig) -> Result<KernelSpec, String> {
    match config {
        KernelConfig::Gaussian { alpha, beta } => {
            KernelSpec::gaussian(*alpha, *beta).map_err(|e| e.to_string())
        }
        KernelConfig::Zero => Ok(KernelSpec::zero()),
        KernelConfig::Tabulated { file } => {
            let table = read_kernel_table(file).map_err(|e| e.to_string())?;
            KernelSpec::tabulated(table).map_err(|e| e.to_string())
        }
    }
}

fn positive(name: &str, v: f64, out: &mut Vec<String>) {
    if !(v > 0.0 && v.is_finite()) {
        out.push(format!("{name} must be positive and finite, got {v}"));
    }
}

fn validate_shape(i: usize, shape: &ShapeConfig, out: &mut Vec<String>) {
    let p = |f: &str| format!("interfaces[{i}].initial.{f}");
    match shape {
        ShapeConfig::Circle { radius, .. } => positive(&p("radius"), *radius, out),
        ShapeConfig::Ellipse { a, b, phase, .. } => {
            positive(&p("a"), *a, out);
            positive(&p("b"), *b, out);
            if !phase.is_finite() {
                out.push(format!("{} must be finite", p("phase")));
            }
        }
        ShapeConfig::Peanut { scale, neck, .. } => {
            positive(&p("scale"), *scale, out);
            if !(*neck > 0.0 && *neck < 1.0) {
                out.push(format!("{} must lie in (0, 1), got {neck}", p("neck")));
            }
        }
        ShapeConfig::Horseshoe {
            radius,
            half_width,
            gap,
            smoothing,
            ..
        } => {
            positive(&p("radius"), *radius, out);
            positive(&p("half_width"), *half_width, out);
            positive(&p("gap"), *gap, out);
            if half_width >= radius {
                out.push(format!("{} must be smaller than the radius", p("half_width")));
            } else if 2.0 * half_width + gap >= 2.0 * radius {
                out.push(format!("{} is too wide for the radius", p("gap")));
            }
            if !(*smoothing >= 0.0) {
                out.push(format!("{} must be non-negative", p("smoothing")));
            }
        }
        ShapeConfig::PointsFile { .. } => {}
    }
}

/// Lists every violated invariant; empty means valid.
pub fn validate(config: &SystemConfig) -> Vec<String> {
    let mut out = Vec::new();
    let n = config.interfaces.len();
    if n == 0 {
        out.push("at least one interface is required".into());
    }
    for (i, iface) in config.interfaces.iter().enumerate() {
        validate_shape(i, &iface.initial, &mut out);
        if !iface.c.is_finite() {
            out.push(format!("interfaces[{i}].c must be finite"));
        }
    }
    let s = &config.solver;
    if !(s.m >= 16 && s.m.is_power_of_two()) {
        out.push(format!("solver.M must be a power of two and at least 16, got {}", s.m));
    }
    positive("solver.dt", s.dt, &mut out);
    positive("solver.t_end", s.t_end, &mut out);
    if !(s.safety > 0.0 && s.safety <= 1.0) {
        out.push(format!("solver.safety must lie in (0, 1], got {}", s.safety));
    }
    if let Some(every) = s.snapshot_every {
        positive("solver.snapshot_every", every, &mut out);
    }
    if config.kernels.len() != n || config.kernels.iter().any(|row| row.len() != n) {
        out.push("kernel matrix shape".into());
        return out;
    }
    for (i, row) in config.kernels.iter().enumerate() {
        for (j, k) in row.iter().enumerate() {
            match build_kernel(k) {
                Ok(spec) => {
                    if compatibility_routes(spec.flags(), i == j).is_empty() {
                        out.push(format!(
                            "kernels[{i}][{j}]: flags {} admit no compatibility route for a {} pair",
                            spec.flags(),
                            if i == j { "self" } else { "cross" }
                        ));
                    }
                }
                Err(e) => out.push(format!("kernels[{i}][{j}]: {e}")),
            }
        }
    }
    out
}
