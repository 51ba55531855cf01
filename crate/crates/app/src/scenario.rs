//! Initial curves, systems and the built-in scenarios.

use std::f64::consts::PI;
use std::path::Path;

use arrestflow_core::geometry::{Curve, Vec2};
use arrestflow_core::nonlocal::InteractionSystem;
use arrestflow_core::solver::{SolverSettings, TangentAngleState};
use arrestflow_core::spectral::{self, Complex64, PeriodicField};

use crate::config::{
    build_kernel, read_csv_columns, DiagnosticsConfig, InterfaceConfig, KernelConfig, ShapeConfig,
    SolverConfig, SystemConfig,
};

/// Samples a shape on `m` nodes, clockwise for the built-ins.
pub fn build_curve(shape: &ShapeConfig, m: usize) -> anyhow::Result<Curve> {
    let at = |c: [f64; 2]| Vec2::new(c[0], c[1]);
    let curve = match shape {
        ShapeConfig::Circle { radius, center } => {
            Curve::from_fn(m, |x| at(*center) + Vec2::new(x.cos(), -x.sin()) * *radius)?
        }
        ShapeConfig::Ellipse { a, b, center, phase } => Curve::from_fn(m, |x| {
            let s = x + phase;
            at(*center) + Vec2::new(a * s.cos(), -b * s.sin())
        })?,
        ShapeConfig::Peanut { scale, neck, center } => Curve::from_fn(m, |x| {
            let r = scale * (1.0 - neck * (2.0 * x).cos());
            at(*center) + Vec2::new(x.cos(), -x.sin()) * r
        })?,
        ShapeConfig::Horseshoe {
            radius,
            half_width,
            gap,
            center,
            smoothing,
        } => {
            let raw = horseshoe(m, *radius, *half_width, *gap)?;
            let smoothed = if *smoothing > 0.0 {
                gaussian_filter(&raw, *smoothing)?
            } else {
                raw
            };
            smoothed.translate(at(*center))
        }
        ShapeConfig::PointsFile { path } => {
            let rows = read_csv_columns(path, &["x", "y"])?;
            if rows.len() != m {
                anyhow::bail!("{}: {} points but M = {m}", path.display(), rows.len());
            }
            Curve::new(rows.iter().map(|r| Vec2::new(r[0], r[1])).collect())?
        }
    };
    Ok(curve)
}

/// Thick arc of centerline radius `rc` and half-width `w` with semicircular
/// ends, opening to the right, sampled by arc length and traversed clockwise.
fn horseshoe(m: usize, rc: f64, w: f64, gap: f64) -> anyhow::Result<Curve> {
    let phi0 = ((2.0 * w + gap) / (2.0 * rc)).asin();
    let span = 2.0 * PI - 2.0 * phi0;
    let lens = [(rc + w) * span, PI * w, (rc - w) * span, PI * w];
    let total: f64 = lens.iter().sum();
    let polar = |r: f64, a: f64| Vec2::new(r * a.cos(), r * a.sin());
    let end = 2.0 * PI - phi0;
    let points = (0..m)
        .map(|j| {
            let mut u = total * j as f64 / m as f64;
            if u < lens[0] {
                return polar(rc + w, phi0 + u / (rc + w));
            }
            u -= lens[0];
            if u < lens[1] {
                return polar(rc, end) + polar(w, end + u / w);
            }
            u -= lens[1];
            if u < lens[2] {
                return polar(rc - w, end - u / (rc - w));
            }
            u -= lens[2];
            polar(rc, phi0) + polar(w, phi0 + PI + u / w)
        })
        .collect();
    Ok(Curve::new(points)?.reversed())
}

/// Multiplies the coordinate spectra by `exp(-(k/kc)²)`.
fn gaussian_filter(curve: &Curve, kc: f64) -> anyhow::Result<Curve> {
    let m = curve.m();
    let filter = |f: PeriodicField| {
        f.apply_multiplier(|idx| {
            let k = spectral::wavenumber(m, idx) as f64;
            Complex64::new((-(k / kc).powi(2)).exp(), 0.0)
        })
    };
    Ok(Curve::from_fields(&filter(curve.x_field()), &filter(curve.y_field()))?)
}

/// Periodic linear interpolation of an `x,f` profile onto the grid.
pub fn read_external_forcing(path: &Path, m: usize) -> anyhow::Result<PeriodicField> {
    let rows = read_csv_columns(path, &["x", "f"])?;
    if rows.is_empty() {
        anyhow::bail!("{}: empty forcing table", path.display());
    }
    let xs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs[0] < -PI || xs[xs.len() - 1] >= PI {
        anyhow::bail!("{}: x must increase within [-pi, pi)", path.display());
    }
    let fs: Vec<f64> = rows.iter().map(|r| r[1]).collect();
    let n = xs.len();
    let values = spectral::nodes(m)
        .into_iter()
        .map(|x| {
            // bracketing pair, wrapping past the ends
            let k = xs.partition_point(|&v| v <= x);
            let (x0, f0, x1, f1) = if k == 0 {
                (xs[n - 1] - 2.0 * PI, fs[n - 1], xs[0], fs[0])
            } else if k == n {
                (xs[n - 1], fs[n - 1], xs[0] + 2.0 * PI, fs[0])
            } else {
                (xs[k - 1], fs[k - 1], xs[k], fs[k])
            };
            if x1 == x0 {
                f0
            } else {
                f0 + (f1 - f0) * (x - x0) / (x1 - x0)
            }
        })
        .collect();
    Ok(PeriodicField::new(values)?)
}

pub fn build_system(config: &SystemConfig) -> anyhow::Result<InteractionSystem> {
    let kernels = config
        .kernels
        .iter()
        .map(|row| row.iter().map(build_kernel).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(anyhow::Error::msg)?;
    let mut system =
        InteractionSystem::new(kernels, config.interfaces.iter().map(|i| i.c).collect())?;
    for (i, iface) in config.interfaces.iter().enumerate() {
        if let Some(path) = &iface.f_ext {
            system.external[i] = Some(read_external_forcing(path, config.solver.m)?);
        }
    }
    Ok(system)
}

pub fn build_curves(config: &SystemConfig) -> anyhow::Result<Vec<Curve>> {
    config
        .interfaces
        .iter()
        .map(|i| build_curve(&i.initial, config.solver.m))
        .collect()
}

pub fn build_state(config: &SystemConfig) -> anyhow::Result<TangentAngleState> {
    Ok(TangentAngleState::from_curves(&build_curves(config)?)?)
}

pub fn solver_settings(solver: &SolverConfig) -> SolverSettings {
    SolverSettings {
        dt: solver.dt,
        t_end: solver.t_end,
        safety: solver.safety,
        check_self_intersection: true,
        terminate_on_self_intersection: solver.terminate_on_self_intersection,
    }
}

fn single(initial: ShapeConfig, c: f64, kernel: KernelConfig, solver: SolverConfig) -> SystemConfig {
    SystemConfig {
        interfaces: vec![InterfaceConfig {
            initial,
            c,
            f_ext: None,
        }],
        kernels: vec![vec![kernel]],
        solver,
        diagnostics: DiagnosticsConfig::default(),
        seed: 0,
    }
}

/// Unit circle under pure curve shortening up to `t_end`.
pub fn circle_csf(m: usize, dt: f64, t_end: f64) -> SystemConfig {
    single(
        ShapeConfig::Circle {
            radius: 1.0,
            center: [0.0, 0.0],
        },
        0.0,
        KernelConfig::Zero,
        SolverConfig {
            m,
            dt,
            t_end,
            safety: 0.5,
            snapshot_every: None,
            terminate_on_self_intersection: false,
        },
    )
}

/// 2:1 ellipse under pure curve shortening.
pub fn ellipse_csf(m: usize, dt: f64, t_end: f64) -> SystemConfig {
    single(
        ShapeConfig::Ellipse {
            a: 2.0,
            b: 1.0,
            center: [0.0, 0.0],
            phase: 0.0,
        },
        0.0,
        KernelConfig::Zero,
        SolverConfig {
            m,
            dt,
            t_end,
            safety: 0.5,
            snapshot_every: None,
            terminate_on_self_intersection: false,
        },
    )
}

fn figure_shape() -> ShapeConfig {
    ShapeConfig::Horseshoe {
        radius: 2.2,
        half_width: 1.2,
        gap: 0.2,
        center: [0.0, 0.0],
        smoothing: 32.0,
    }
}

fn figure_solver() -> SolverConfig {
    SolverConfig {
        m: 512,
        dt: 2e-4,
        t_end: 1.0,
        safety: 0.5,
        snapshot_every: Some(0.05),
        terminate_on_self_intersection: false,
    }
}

/// Growth and curvature only; the horseshoe tips collide.
pub fn figure3() -> SystemConfig {
    single(figure_shape(), -1.5, KernelConfig::Zero, figure_solver())
}

/// The same interface with a gaussian self-repulsion in the arrest regime.
pub fn figure4() -> SystemConfig {
    single(
        figure_shape(),
        -1.5,
        KernelConfig::Gaussian {
            alpha: 0.05,
            beta: 1.0,
        },
        figure_solver(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use arrestflow_core::diagnostics::self_intersections;

    #[test]
    fn builtins_are_clockwise() {
        for shape in [
            ShapeConfig::Circle {
                radius: 1.0,
                center: [0.0, 0.0],
            },
            ShapeConfig::Ellipse {
                a: 2.0,
                b: 1.0,
                center: [1.0, 0.0],
                phase: 0.3,
            },
            ShapeConfig::Peanut {
                scale: 1.0,
                neck: 0.6,
                center: [0.0, 0.0],
            },
            figure_shape(),
        ] {
            let c = build_curve(&shape, 256).unwrap();
            assert!(c.signed_area() < 0.0, "{shape:?}");
            assert!(self_intersections(&c).is_empty(), "{shape:?}");
        }
    }

    #[test]
    fn horseshoe_area_and_gap() {
        let c = build_curve(
            &ShapeConfig::Horseshoe {
                radius: 2.2,
                half_width: 1.2,
                gap: 0.2,
                center: [0.0, 0.0],
                smoothing: 0.0,
            },
            2048,
        )
        .unwrap();
        // annular sector plus one full disc from the two caps
        let phi0 = (2.6_f64 / 4.4).asin();
        let area = (2.0 * PI - 2.0 * phi0) / 2.0 * (3.4_f64.powi(2) - 1.0) + PI * 1.44;
        assert!((c.signed_area().abs() - area).abs() < 1e-4 * area);
        let upper: Vec<Vec2> = c.points().iter().copied().filter(|p| p.y > 0.0 && p.x > 0.0).collect();
        let lower: Vec<Vec2> = c.points().iter().copied().filter(|p| p.y < 0.0 && p.x > 0.0).collect();
        let gap = upper
            .iter()
            .flat_map(|p| lower.iter().map(move |q| (*p - *q).norm()))
            .fold(f64::INFINITY, f64::min);
        assert!((gap - 0.2).abs() < 5e-3, "gap {gap}");
    }

    #[test]
    fn forcing_interpolation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "x,f\n-3.141592653589793,0\n0,1\n").unwrap();
        let f = read_external_forcing(&path, 16).unwrap();
        assert_eq!(f.values()[0], 0.0);
        assert_eq!(f.values()[8], 1.0);
        assert!((f.values()[4] - 0.5).abs() < 1e-15);
        assert!((f.values()[12] - 0.5).abs() < 1e-15);
    }
}
