//! Sampled closed planar curves and their intrinsic quantities.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use rayon::prelude::*;

use crate::error::GeometryError;
use crate::spectral::{self, check_grid, node, Interpolant, PeriodicField};

/// Relative floor on the parametrization speed.
pub const IMMERSION_TOLERANCE: f64 = 1e-10;
/// Largest admissible `|⨍ τ|` when rebuilding a curve from its angle.
pub const CLOSURE_TOLERANCE: f64 = 1e-6;
/// Distinct nodes closer than this are treated as coincident.
pub const COINCIDENCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// `(a, b)^⊥ = (b, -a)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// A closed curve sampled at the nodes `x_j = -π + 2πj/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<Vec2>,
}

impl Curve {
    pub fn new(points: Vec<Vec2>) -> Result<Self, GeometryError> {
        check_grid(points.len())?;
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite { index });
        }
        Ok(Self { points })
    }

    /// Samples a parametrization `x ↦ γ(x)` on the grid.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> Vec2) -> Result<Self, GeometryError> {
        Self::new((0..m).map(|j| f(node(m, j))).collect())
    }

    pub fn from_fields(x: &PeriodicField, y: &PeriodicField) -> Result<Self, GeometryError> {
        if x.len() != y.len() {
            return Err(GeometryError::InvalidArgument(
                "coordinate fields differ in length".into(),
            ));
        }
        Self::new(
            x.values()
                .iter()
                .zip(y.values())
                .map(|(&a, &b)| Vec2::new(a, b))
                .collect(),
        )
    }

    pub fn m(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn x_field(&self) -> PeriodicField {
        PeriodicField::from_values_unchecked(self.points.iter().map(|p| p.x).collect())
    }

    pub fn y_field(&self) -> PeriodicField {
        PeriodicField::from_values_unchecked(self.points.iter().map(|p| p.y).collect())
    }

    /// Spectral velocity `dγ/dx` at the nodes.
    pub fn velocity(&self) -> Vec<Vec2> {
        let dx = self.x_field().derivative(1);
        let dy = self.y_field().derivative(1);
        dx.values()
            .iter()
            .zip(dy.values())
            .map(|(&a, &b)| Vec2::new(a, b))
            .collect()
    }

    pub fn speed(&self) -> PeriodicField {
        PeriodicField::from_values_unchecked(self.velocity().iter().map(|v| v.norm()).collect())
    }

    /// `ℓ = ∫ |γ̇| dx`.
    pub fn length(&self) -> f64 {
        2.0 * PI * self.speed().mean()
    }

    /// `σ = ℓ / 2π`, the speed of the constant-speed parametrization.
    pub fn sigma(&self) -> f64 {
        self.length() / (2.0 * PI)
    }

    /// Mean of the samples, the parametric centroid.
    pub fn centroid(&self) -> Vec2 {
        let s = self.points.iter().fold(Vec2::ZERO, |acc, &p| acc + p);
        s * (1.0 / self.m() as f64)
    }

    /// Shoelace area of the polygon; positive for counterclockwise traversal.
    pub fn signed_area(&self) -> f64 {
        let m = self.m();
        0.5 * (0..m)
            .map(|j| self.points[j].cross(self.points[(j + 1) % m]))
            .sum::<f64>()
    }

    pub fn translate(&self, shift: Vec2) -> Self {
        Self {
            points: self.points.iter().map(|&p| p + shift).collect(),
        }
    }

    pub fn rotate(&self, angle: f64) -> Self {
        Self {
            points: self.points.iter().map(|&p| p.rotate(angle)).collect(),
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            points: self.points.iter().map(|&p| p * factor).collect(),
        }
    }

    /// Cyclic relabeling: node `j` of the result is node `j + shift` here.
    pub fn rotate_grid(&self, shift: usize) -> Self {
        let m = self.m();
        Self {
            points: (0..m).map(|j| self.points[(j + shift) % m]).collect(),
        }
    }

    /// Same image traversed in the opposite direction, keeping node 0.
    pub fn reversed(&self) -> Self {
        let m = self.m();
        Self {
            points: (0..m).map(|j| self.points[(m - j) % m]).collect(),
        }
    }

    fn check_immersion(&self) -> Result<PeriodicField, GeometryError> {
        let speed = self.speed();
        let (min, max) = speed
            .values()
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(min >= IMMERSION_TOLERANCE * max) || max == 0.0 {
            return Err(GeometryError::DegenerateSpeed { min, max });
        }
        Ok(speed)
    }

    /// Arc length from node 0 to every node.
    pub fn arc_length_at_nodes(&self) -> Vec<f64> {
        let speed = self.speed();
        let m = self.m();
        let mu = speed.mean();
        let prim = speed.zero_dirichlet_primitive();
        (0..m)
            .map(|j| mu * (node(m, j) + PI) + prim.values()[j])
            .collect()
    }
}

/// Reparametrizes a curve to constant speed, keeping node 0 in place.
pub fn resample_constant_speed(curve: &Curve) -> Result<Curve, GeometryError> {
    let speed = curve.check_immersion()?;
    let m = curve.m();
    let h = spectral::spacing(m);
    let total = 2.0 * PI * speed.mean();
    let speed_i = Interpolant::new(&speed);
    let xi = Interpolant::new(&curve.x_field());
    let yi = Interpolant::new(&curve.y_field());

    let cumulative = curve.arc_length_at_nodes();
    let arc = |x: f64| speed_i.eval_integral(x);

    let params: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|j| {
            if j == 0 {
                return -PI;
            }
            let target = total * j as f64 / m as f64;
            // Bracket from the node arc lengths, then safeguarded Newton.
            let k = cumulative.partition_point(|&s| s <= target).max(1) - 1;
            let (s_lo, s_hi) = (
                cumulative[k],
                if k + 1 < m { cumulative[k + 1] } else { total },
            );
            let mut lo = node(m, k) - h;
            let mut hi = node(m, k) + 2.0 * h;
            let frac = if s_hi > s_lo { (target - s_lo) / (s_hi - s_lo) } else { 0.5 };
            let mut x = node(m, k) + frac * h;
            for _ in 0..60 {
                let r = arc(x) - target;
                if r.abs() <= 1e-15 * total {
                    break;
                }
                if r > 0.0 {
                    hi = x;
                } else {
                    lo = x;
                }
                let d = speed_i.eval(x);
                let mut next = x - r / d;
                if !(d > 0.0) || !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (next - x).abs() <= 1e-16 * (1.0 + x.abs()) {
                    x = next;
                    break;
                }
                x = next;
            }
            x
        })
        .collect();

    let points = params
        .par_iter()
        .map(|&x| Vec2::new(xi.eval(x), yi.eval(x)))
        .collect();
    Curve::new(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BendingEnergy {
    /// Total squared curvature `∫ κ² ds`.
    pub kappa22: f64,
    /// Curvature length scale `1 / κ²₂`.
    pub ell_kappa: f64,
    /// Subarc count `⌈ℓ / ℓ_κ⌉`.
    pub n: u64,
}

/// Total squared curvature of a closed curve.
///
/// Evaluated as `∫ κ² |γ̇| dx`, which equals `(2π/ℓ)³ ∫ |ψ̈|² dx` on a
/// constant-speed curve and does not depend on the parametrization.
pub fn bending_energy(curve: &Curve) -> Result<BendingEnergy, GeometryError> {
    let speed = curve.check_immersion()?;
    let d1x = curve.x_field().derivative(1);
    let d1y = curve.y_field().derivative(1);
    let d2x = curve.x_field().derivative(2);
    let d2y = curve.y_field().derivative(2);
    let m = curve.m();
    let integrand: Vec<f64> = (0..m)
        .map(|j| {
            let v = Vec2::new(d1x.values()[j], d1y.values()[j]);
            let a = Vec2::new(d2x.values()[j], d2y.values()[j]);
            let s = speed.values()[j];
            let kappa = v.cross(a) / (s * s * s);
            kappa * kappa * s
        })
        .collect();
    let kappa22 = spectral::spacing(m) * integrand.iter().sum::<f64>();
    let length = 2.0 * PI * speed.mean();
    Ok(BendingEnergy {
        kappa22,
        ell_kappa: 1.0 / kappa22,
        n: (length * kappa22).ceil() as u64,
    })
}

/// Discrete Gromov distortion: max over node pairs of arc distance over chord.
pub fn gromov_distortion(curve: &Curve) -> Result<f64, GeometryError> {
    curve.check_immersion()?;
    let m = curve.m();
    let arc = curve.arc_length_at_nodes();
    let length = curve.length();
    let pts = curve.points();
    let per_row: Vec<Result<f64, GeometryError>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0_f64;
            for j in (i + 1)..m {
                let chord = (pts[i] - pts[j]).norm();
                if chord < COINCIDENCE_TOLERANCE {
                    return Err(GeometryError::CoincidentPoints { i, j, distance: chord });
                }
                let d = (arc[j] - arc[i]).abs();
                let intrinsic = d.min(length - d);
                best = best.max(intrinsic / chord);
            }
            Ok(best)
        })
        .collect();
    let mut best = 0.0_f64;
    for r in per_row {
        best = best.max(r?);
    }
    Ok(best)
}

/// Tangent angle `θ(x) = η(x) + k (x + π)` with `η` periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleField {
    pub eta: PeriodicField,
    pub winding: i64,
}

impl AngleField {
    pub fn m(&self) -> usize {
        self.eta.len()
    }

    /// θ at the nodes, including the linear part.
    pub fn theta(&self) -> Vec<f64> {
        let m = self.m();
        let k = self.winding as f64;
        self.eta
            .values()
            .iter()
            .enumerate()
            .map(|(j, &e)| e + k * (node(m, j) + PI))
            .collect()
    }

    /// `θ̇ = η̇ + k`, the curvature of the unit-speed shape.
    pub fn theta_dot(&self) -> PeriodicField {
        self.eta.derivative(1).shift(self.winding as f64)
    }

    /// Unit tangent `τ = (-sin θ, cos θ)`.
    pub fn tangent(&self) -> Vec<Vec2> {
        self.theta()
            .iter()
            .map(|&t| {
                let (s, c) = t.sin_cos();
                Vec2::new(-s, c)
            })
            .collect()
    }

    /// Normal `n = (cos θ, sin θ) = τ^⊥`.
    pub fn normal(&self) -> Vec<Vec2> {
        self.theta()
            .iter()
            .map(|&t| {
                let (s, c) = t.sin_cos();
                Vec2::new(c, s)
            })
            .collect()
    }

    /// `⨍ τ`, zero exactly when the angle describes a closed curve.
    pub fn mean_tangent(&self) -> Vec2 {
        let tau = self.tangent();
        let s = tau.iter().fold(Vec2::ZERO, |acc, &t| acc + t);
        s * (1.0 / tau.len() as f64)
    }
}

/// `|⨍ τ|` for an angle field.
pub fn closure_defect(angle: &AngleField) -> f64 {
    angle.mean_tangent().norm()
}

/// Lifts the spectral tangent of a curve to a continuous angle.
pub fn tangent_angle_lift(curve: &Curve) -> Result<AngleField, GeometryError> {
    curve.check_immersion()?;
    let m = curve.m();
    let raw: Vec<f64> = curve
        .velocity()
        .iter()
        .map(|v| {
            let a = (-v.x).atan2(v.y);
            if a >= PI {
                -PI
            } else {
                a
            }
        })
        .collect();
    let principal = |d: f64| {
        let mut r = d.rem_euclid(2.0 * PI);
        if r >= PI {
            r -= 2.0 * PI;
        }
        r
    };
    let mut theta = Vec::with_capacity(m);
    theta.push(raw[0]);
    for j in 1..m {
        let prev = theta[j - 1];
        theta.push(prev + principal(raw[j] - raw[j - 1]));
    }
    let closing = theta[m - 1] + principal(raw[0] - raw[m - 1]) - theta[0];
    let winding = (closing / (2.0 * PI)).round() as i64;
    let k = winding as f64;
    let eta = (0..m).map(|j| theta[j] - k * (node(m, j) + PI)).collect();
    Ok(AngleField {
        eta: PeriodicField::from_values_unchecked(eta),
        winding,
    })
}

/// Rebuilds `ψ = c + ε^{-1/2} P_c τ` from a tangent angle.
pub fn reconstruct_curve(
    angle: &AngleField,
    epsilon: f64,
    centroid: Vec2,
) -> Result<Curve, GeometryError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(GeometryError::InvalidArgument(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let tau = angle.tangent();
    let defect = closure_defect(angle);
    if !(defect < CLOSURE_TOLERANCE) {
        return Err(GeometryError::OpenCurve { defect });
    }
    let sigma = epsilon.sqrt().recip();
    let tx = PeriodicField::from_values_unchecked(tau.iter().map(|t| t.x).collect());
    let ty = PeriodicField::from_values_unchecked(tau.iter().map(|t| t.y).collect());
    let px = tx.periodic_primitive();
    let py = ty.periodic_primitive();
    Curve::new(
        px.values()
            .iter()
            .zip(py.values())
            .map(|(&a, &b)| centroid + Vec2::new(a, b) * sigma)
            .collect(),
    )
}

/// Symmetric Hausdorff distance between the node sets of two curves.
pub fn hausdorff_distance(a: &Curve, b: &Curve) -> f64 {
    let one_sided = |p: &[Vec2], q: &[Vec2]| {
        p.par_iter()
            .map(|&u| q.iter().map(|&v| (u - v).norm()).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    one_sided(a.points(), b.points()).max(one_sided(b.points(), a.points()))
}
