//! Nonlocal normal forcing between interfaces.
//!
//! For interface `i` the forcing on the constant-speed grid is
//!
//! ```text
//! F_i(x) = σ_i ( c_i + Σ_j σ_j ∫ g_ij(½|ψ_i(x) - ψ_j(y)|²) dy + F_ext_i(x) )
//! ```
//!
//! with the `y` integral taken by the periodic rectangle rule.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::diagnostics::self_intersections;
use crate::error::NonlocalError;
use crate::geometry::{Curve, Vec2};
use crate::kernels::KernelSpec;
use crate::special::bessel_i0;
use crate::spectral::{self, PeriodicField};

/// A reconstructed interface: constant-speed samples, speed and unit tangent.
#[derive(Debug, Clone)]
pub struct Interface {
    pub curve: Curve,
    pub sigma: f64,
    pub tangent: Vec<Vec2>,
}

impl Interface {
    /// Builds an interface from a constant-speed curve, taking `σ = ℓ/2π`
    /// and the tangent from the spectral velocity.
    pub fn from_curve(curve: Curve) -> Self {
        let tangent = curve
            .velocity()
            .iter()
            .map(|v| *v * (1.0 / v.norm()))
            .collect();
        let sigma = curve.sigma();
        Self {
            curve,
            sigma,
            tangent,
        }
    }

    pub fn m(&self) -> usize {
        self.curve.m()
    }

    pub fn length(&self) -> f64 {
        2.0 * PI * self.sigma
    }
}

/// Kernel matrix, growth rates and external forcings of a system.
#[derive(Debug, Clone)]
pub struct InteractionSystem {
    pub kernels: Vec<Vec<KernelSpec>>,
    pub growth: Vec<f64>,
    /// External normal forcing per interface, sampled on the grid.
    pub external: Vec<Option<PeriodicField>>,
}

impl InteractionSystem {
    pub fn new(kernels: Vec<Vec<KernelSpec>>, growth: Vec<f64>) -> Result<Self, NonlocalError> {
        let m = growth.len();
        if m == 0 {
            return Err(NonlocalError::Inconsistent("no interfaces".into()));
        }
        if kernels.len() != m || kernels.iter().any(|row| row.len() != m) {
            return Err(NonlocalError::Inconsistent("kernel matrix shape".into()));
        }
        Ok(Self {
            kernels,
            growth,
            external: vec![None; m],
        })
    }

    /// Single interface with one self-kernel.
    pub fn single(kernel: KernelSpec, growth: f64) -> Self {
        Self {
            kernels: vec![vec![kernel]],
            growth: vec![growth],
            external: vec![None],
        }
    }

    pub fn len(&self) -> usize {
        self.growth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.growth.is_empty()
    }

    fn row_is_zero(&self, i: usize) -> bool {
        self.kernels[i].iter().all(KernelSpec::is_zero)
    }
}

/// Smallest node-to-node distance between two curves.
pub fn min_distance(a: &Curve, b: &Curve) -> f64 {
    let q = b.points();
    a.points()
        .par_iter()
        .map(|&p| q.iter().map(|&r| (p - r).norm()).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min)
}

/// Enforces the geometric preconditions for kernels without H1.
pub fn check_proximity(
    interfaces: &[Interface],
    system: &InteractionSystem,
) -> Result<(), NonlocalError> {
    for i in 0..interfaces.len() {
        for j in 0..interfaces.len() {
            let k = &system.kernels[i][j];
            if k.flags().h1 || k.is_zero() {
                continue;
            }
            if i == j {
                if !self_intersections(&interfaces[i].curve).is_empty() {
                    return Err(NonlocalError::SelfProximity { i });
                }
            } else {
                let distance = min_distance(&interfaces[i].curve, &interfaces[j].curve);
                let threshold = 10.0 * interfaces[j].length() / interfaces[j].m() as f64;
                if !(distance > threshold) {
                    return Err(NonlocalError::ProximityViolation {
                        i,
                        j,
                        distance,
                        threshold,
                    });
                }
            }
        }
    }
    Ok(())
}

fn check_shapes(interfaces: &[Interface], system: &InteractionSystem) -> Result<usize, NonlocalError> {
    if interfaces.len() != system.len() {
        return Err(NonlocalError::Inconsistent(format!(
            "{} interfaces but system of size {}",
            interfaces.len(),
            system.len()
        )));
    }
    let m = interfaces[0].m();
    if interfaces.iter().any(|s| s.m() != m) {
        return Err(NonlocalError::Inconsistent("grid sizes differ".into()));
    }
    Ok(m)
}

/// Raw sums `Σ_j σ_j ∫ g_ij dy` and their `x` derivatives at every node.
fn raw_sums(interfaces: &[Interface], system: &InteractionSystem, i: usize) -> (Vec<f64>, Vec<f64>) {
    let m = interfaces[i].m();
    if system.row_is_zero(i) {
        return (vec![0.0; m], vec![0.0; m]);
    }
    let h = spectral::spacing(m);
    let target = &interfaces[i];
    let pairs: Vec<(f64, f64)> = (0..m)
        .into_par_iter()
        .map(|l| {
            let p = target.curve.points()[l];
            let tau = target.tangent[l];
            let mut f = 0.0;
            let mut df = 0.0;
            for (j, source) in interfaces.iter().enumerate() {
                let kernel = &system.kernels[i][j];
                if kernel.is_zero() {
                    continue;
                }
                let mut fj = 0.0;
                let mut dfj = 0.0;
                for &q in source.curve.points() {
                    let d = p - q;
                    let s = 0.5 * d.norm_sq();
                    let (g, gdot) = eval_pair(kernel, s);
                    fj += g;
                    dfj += gdot * d.dot(tau);
                }
                f += source.sigma * h * fj;
                df += source.sigma * h * dfj;
            }
            (f, target.sigma * df)
        })
        .collect();
    pairs.into_iter().unzip()
}

#[inline]
fn eval_pair(kernel: &KernelSpec, s: f64) -> (f64, f64) {
    use crate::kernels::KernelFamily;
    match kernel.family() {
        KernelFamily::Gaussian { alpha, beta } => {
            let inv = 1.0 / (2.0 * alpha * alpha);
            let g = beta / ((2.0 * PI).sqrt() * alpha) * (-s * inv).exp();
            (g, -g * inv)
        }
        _ => (kernel.eval(s), kernel.deriv(s)),
    }
}

/// Raw interaction integral `Σ_j σ_j ∫ g_ij(½|ψ_i - ψ_j|²) dy`, without the
/// growth rate, external forcing or the `σ_i` prefactor.
pub fn raw_force(
    interfaces: &[Interface],
    system: &InteractionSystem,
    i: usize,
) -> Result<PeriodicField, NonlocalError> {
    check_shapes(interfaces, system)?;
    Ok(PeriodicField::new(raw_sums(interfaces, system, i).0)?)
}

/// Forcing `F_i` and its derivative `Ḟ_i` in one pass.
pub fn force_and_derivative(
    interfaces: &[Interface],
    system: &InteractionSystem,
    i: usize,
) -> Result<(PeriodicField, PeriodicField), NonlocalError> {
    check_shapes(interfaces, system)?;
    let (raw, draw) = raw_sums(interfaces, system, i);
    let sigma = interfaces[i].sigma;
    let c = system.growth[i];
    let (ext, dext) = match &system.external[i] {
        Some(e) => (e.values().to_vec(), e.derivative(1).into_values()),
        None => (vec![0.0; raw.len()], vec![0.0; raw.len()]),
    };
    let f = raw
        .iter()
        .zip(&ext)
        .map(|(&r, &e)| sigma * (c + r + e))
        .collect();
    let df = draw
        .iter()
        .zip(&dext)
        .map(|(&r, &e)| sigma * (r + e))
        .collect();
    Ok((PeriodicField::new(f)?, PeriodicField::new(df)?))
}

/// `F_i(x_l)` on the grid.
pub fn force(
    interfaces: &[Interface],
    system: &InteractionSystem,
    i: usize,
) -> Result<PeriodicField, NonlocalError> {
    Ok(force_and_derivative(interfaces, system, i)?.0)
}

/// `Ḟ_i(x_l)` by the chain rule `ġ⟨ψ_i - ψ_j, ψ̇_i⟩` under the integral.
pub fn force_derivative(
    interfaces: &[Interface],
    system: &InteractionSystem,
    i: usize,
) -> Result<PeriodicField, NonlocalError> {
    Ok(force_and_derivative(interfaces, system, i)?.1)
}

/// Bound `2π N λ c*₀` on the raw force of an `(N, λ)`-regular immersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelBound {
    pub bound: f64,
    pub max_force: f64,
    pub satisfied: bool,
}

pub fn velbound_check(raw: &PeriodicField, n: u64, lambda: f64, c0star: f64) -> VelBound {
    let bound = 2.0 * PI * n as f64 * lambda * c0star;
    let max_force = raw.max_abs();
    VelBound {
        bound,
        max_force,
        satisfied: max_force <= bound * (1.0 + 1e-9),
    }
}

/// `m √λ I₀(λ) e^{-λ}` with `λ = σ²/m²`: the averaged self-force of the
/// `m`-covered circle of speed `σ` under `g(s) = e^{-s}`. The grid integral
/// returned by [`raw_force`] equals `2π` times this value.
pub fn circle_force_oracle(m: u32, sigma: f64) -> f64 {
    let lambda = sigma * sigma / (m as f64 * m as f64);
    m as f64 * lambda.sqrt() * bessel_i0(lambda) * (-lambda).exp()
}
