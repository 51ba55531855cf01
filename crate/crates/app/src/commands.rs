//! Implementations behind the CLI subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use arrestflow_core::diagnostics::{
    k_distortion, realizing_pair_residuals, realizing_separation_bound, self_intersections,
    DistortionKernel,
};
use arrestflow_core::geometry::{
    bending_energy, gromov_distortion, resample_constant_speed, Curve, Vec2,
};
use arrestflow_core::kernels::{compatibility_routes, KernelSpec};
use arrestflow_core::solver::{run, Event, EventKind, NullObserver, TangentAngleState};
use serde::Serialize;

use crate::config::{build_kernel, parse_kernel_fragment, read_csv_columns, SystemConfig};
use crate::output::{SimulationWriter, TimeseriesRow};
use crate::scenario::{build_state, build_system, solver_settings};

#[derive(Debug, Clone)]
pub struct SimulationSummary {
    pub events: Vec<Event>,
    pub steps: usize,
    pub rows: Vec<TimeseriesRow>,
    pub snapshots: Vec<PathBuf>,
    pub final_state: TangentAngleState,
}

impl SimulationSummary {
    pub fn completed(&self) -> bool {
        self.events.last().map(|e| e.kind) == Some(EventKind::Completed)
    }

    /// `0` on completion, `1` on any other terminal event.
    pub fn exit_code(&self) -> i32 {
        if self.completed() {
            0
        } else {
            1
        }
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }
}

/// Runs a configuration and writes its outputs into `out`.
pub fn simulate(config: &SystemConfig, out: &Path) -> anyhow::Result<SimulationSummary> {
    let state = build_state(config)?;
    let system = build_system(config)?;
    let settings = solver_settings(&config.solver);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("config.json"), config.normalized_dump())?;
    let mut writer = SimulationWriter::create(
        out,
        config.diagnostics.clone(),
        config.solver.snapshot_interval(),
    )?;
    let outcome = run(state, &system, &settings, &mut writer);
    let (rows, snapshots) = writer.finish()?;
    Ok(SimulationSummary {
        events: outcome.events,
        steps: outcome.steps,
        rows,
        snapshots,
        final_state: outcome.state,
    })
}

pub fn read_curve_csv(path: &Path) -> anyhow::Result<Curve> {
    let rows = read_csv_columns(path, &["x", "y"])?;
    Ok(Curve::new(rows.iter().map(|r| Vec2::new(r[0], r[1])).collect())?)
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossingReport {
    pub segments: [usize; 2],
    pub point: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub tangent_x: f64,
    pub tangent_y: f64,
    pub r_ok: bool,
    pub hessian: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub z: f64,
    pub r: f64,
    pub orientation: i8,
    pub residuals: Option<ResidualReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BendingReport {
    pub kappa22: f64,
    pub ell_kappa: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosisReport {
    pub kernel: String,
    pub points: usize,
    pub embedded: bool,
    pub self_intersections: Vec<CrossingReport>,
    pub delta_k: Option<f64>,
    pub realizing_pairs: Vec<PairReport>,
    pub separation_bound: Option<SeparationReport>,
    pub delta_inf: Option<f64>,
    pub bending_energy: Option<BendingReport>,
    /// Why fields are missing.
    pub unavailable: Vec<String>,
}

/// Distortion, realizing pairs, bending energy and crossings of a curve.
pub fn diagnose_curve(curve: &Curve, kernel: DistortionKernel) -> DiagnosisReport {
    let crossings = self_intersections(curve);
    let mut report = DiagnosisReport {
        kernel: kernel.name().into(),
        points: curve.m(),
        embedded: crossings.is_empty(),
        self_intersections: crossings
            .iter()
            .map(|c| CrossingReport {
                segments: [c.seg_a, c.seg_b],
                point: [c.point.x, c.point.y],
            })
            .collect(),
        delta_k: None,
        realizing_pairs: Vec::new(),
        separation_bound: None,
        delta_inf: None,
        bending_energy: None,
        unavailable: Vec::new(),
    };
    let uniform = match resample_constant_speed(curve) {
        Ok(c) => c,
        Err(e) => {
            report.unavailable.push(format!("reparametrization failed: {e}"));
            return report;
        }
    };
    match bending_energy(&uniform) {
        Ok(b) => {
            report.bending_energy = Some(BendingReport {
                kappa22: b.kappa22,
                ell_kappa: b.ell_kappa,
                n: b.n,
            })
        }
        Err(e) => report.unavailable.push(format!("bending energy: {e}")),
    }
    if !report.embedded {
        report
            .unavailable
            .push("curve is not embedded; distortion is infinite".into());
        return report;
    }
    match gromov_distortion(&uniform) {
        Ok(d) => report.delta_inf = Some(d),
        Err(e) => report.unavailable.push(format!("gromov distortion: {e}")),
    }
    match k_distortion(&uniform, kernel) {
        Ok(dist) => {
            report.delta_k = Some(dist.value);
            report.realizing_pairs = dist
                .pairs
                .iter()
                .map(|p| PairReport {
                    i: p.i,
                    j: p.j,
                    x: p.x,
                    z: p.z,
                    r: p.r,
                    orientation: p.orientation,
                    residuals: realizing_pair_residuals(&uniform, p, kernel)
                        .ok()
                        .map(|r| ResidualReport {
                            tangent_x: r.tangent_x,
                            tangent_y: r.tangent_y,
                            r_ok: r.r_ok,
                            hessian: r.hessian,
                        }),
                })
                .collect();
            if kernel == DistortionKernel::Pseudo {
                match realizing_separation_bound(&uniform, &dist) {
                    Ok(b) => {
                        report.separation_bound = Some(SeparationReport {
                            lhs: b.lhs,
                            rhs: b.rhs,
                            satisfied: b.satisfied,
                        })
                    }
                    Err(e) => report.unavailable.push(format!("separation bound: {e}")),
                }
            }
        }
        Err(e) => report.unavailable.push(format!("distortion: {e}")),
    }
    report
}

/// Diagnoses a snapshot file and writes the JSON report to `out`.
pub fn diagnose(snapshot: &Path, kernel: &str, out: &Path) -> anyhow::Result<DiagnosisReport> {
    let kernel = DistortionKernel::from_name(kernel)
        .with_context(|| format!("unknown distortion kernel `{kernel}`"))?;
    let curve = read_curve_csv(snapshot)?;
    let report = diagnose_curve(&curve, kernel);
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    std::fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(report)
}

/// Human-readable classification of a kernel fragment.
pub fn kernel_report(kernel: &KernelSpec) -> String {
    let fmt = |v: Option<f64>| v.map_or("inf".to_string(), |v| format!("{v:.10e}"));
    let flags = kernel.flags();
    let mut s = String::new();
    let _ = writeln!(s, "family: {}", kernel.family_name());
    let _ = writeln!(s, "flags: {flags}");
    let _ = writeln!(s, "c0*: {}", fmt(kernel.c0star()));
    let _ = writeln!(s, "c1*: {}", fmt(kernel.c1star()));
    for (label, self_pair) in [("self pair", true), ("cross pair", false)] {
        let routes = compatibility_routes(flags, self_pair);
        if routes.is_empty() {
            let _ = writeln!(s, "{label}: no compatible route");
        } else {
            for r in routes {
                let _ = writeln!(s, "{label}: route {}", r.label());
            }
        }
    }
    if !flags.h1 {
        let _ = writeln!(
            s,
            "warning: H1 fails; the kernel needs embedded self-interaction or separated interfaces"
        );
    }
    s
}

pub fn validate_kernel(fragment: &Path) -> anyhow::Result<(KernelSpec, String)> {
    let text = std::fs::read_to_string(fragment)
        .with_context(|| format!("reading {}", fragment.display()))?;
    let mut config = parse_kernel_fragment(&text)?;
    if let crate::config::KernelConfig::Tabulated { file } = &mut config {
        if file.is_relative() {
            *file = fragment.parent().unwrap_or(Path::new(".")).join(&*file);
        }
    }
    let spec = build_kernel(&config).map_err(anyhow::Error::msg)?;
    let report = kernel_report(&spec);
    Ok((spec, report))
}

/// Errors below this are reported as the round-off floor.
pub const CONVERGENCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub dts: Vec<f64>,
    /// `‖θ_k - θ_{k+1}‖∞` between successive halvings of `dt`.
    pub temporal_errors: Vec<f64>,
    /// Ratios of successive temporal errors, `None` at the floor.
    pub temporal_ratios: Vec<Option<f64>>,
    /// `‖θ_M - θ_2M‖∞` on the shared nodes at the finest `dt`.
    pub spatial_error: f64,
}

impl ConvergenceTable {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "level,dt,error,ratio");
        for (k, dt) in self.dts.iter().enumerate() {
            let e = self
                .temporal_errors
                .get(k)
                .map_or("-".into(), |e| format!("{e:.6e}"));
            let r = match (k.checked_sub(1), self.temporal_errors.get(k)) {
                (Some(p), Some(_)) => match self.temporal_ratios.get(p) {
                    Some(Some(r)) => format!("{r:.4}"),
                    Some(None) => "floor".into(),
                    None => "-".into(),
                },
                _ => "-".into(),
            };
            let _ = writeln!(s, "{k},{dt:e},{e},{r}");
        }
        let _ = writeln!(s, "spatial (M vs 2M): {:.6e}", self.spatial_error);
        s
    }
}

fn final_eta(config: &SystemConfig) -> anyhow::Result<Vec<Vec<f64>>> {
    let state = build_state(config)?;
    let system = build_system(config)?;
    let outcome = run(state, &system, &solver_settings(&config.solver), &mut NullObserver);
    if !outcome.completed() {
        let e = outcome.terminal().map(|e| e.detail.clone()).unwrap_or_default();
        anyhow::bail!("run did not complete: {e}");
    }
    Ok(outcome
        .state
        .interfaces
        .iter()
        .map(|s| s.eta.values().to_vec())
        .collect())
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>], stride: usize) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y.iter().step_by(stride)).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Self-convergence in `dt` over `levels` halvings and in `M` against `2M`.
pub fn convergence(config: &SystemConfig, levels: usize) -> anyhow::Result<ConvergenceTable> {
    anyhow::ensure!(levels >= 3, "at least three levels are needed for a ratio");
    let mut dts = Vec::new();
    let mut fields = Vec::new();
    for k in 0..levels {
        let mut c = config.clone();
        c.solver.dt = config.solver.dt / 2f64.powi(k as i32);
        dts.push(c.solver.dt);
        fields.push(final_eta(&c)?);
    }
    let temporal_errors: Vec<f64> = fields.windows(2).map(|w| max_diff(&w[0], &w[1], 1)).collect();
    let temporal_ratios = temporal_errors
        .windows(2)
        .map(|w| {
            if w[1] < CONVERGENCE_FLOOR {
                None
            } else {
                Some(w[0] / w[1])
            }
        })
        .collect();
    let mut fine = config.clone();
    fine.solver.m *= 2;
    fine.solver.dt = *dts.last().expect("levels >= 3");
    let spatial_error = max_diff(fields.last().expect("levels >= 3"), &final_eta(&fine)?, 2);
    Ok(ConvergenceTable {
        dts,
        temporal_errors,
        temporal_ratios,
        spatial_error,
    })
}
