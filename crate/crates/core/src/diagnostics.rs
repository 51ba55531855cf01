//! Embeddedness diagnostics: kernel distortions and their realizing pairs,
//! the calculus residuals at those pairs, self-intersections and the
//! arrested-front bounds.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::DiagnosticError;
use crate::geometry::{Curve, Vec2};
use crate::special::erf;
use crate::spectral;

/// Built-in distortion kernels `K(u, v) = g(v, u/v)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistortionKernel {
    /// `g(ℓ, r) = 1/r`, so `K = v/u`.
    Pseudo,
    /// `g(ℓ, r) = (1/r - 1)/ℓ`, so `K = 1/u - 1/v`.
    Mobius,
    /// `g(ℓ, r) = -log(r)/ℓ`, so `K = log(v/u)/v`.
    Kl,
}

impl DistortionKernel {
    pub fn name(&self) -> &'static str {
        match self {
            DistortionKernel::Pseudo => "pseudo",
            DistortionKernel::Mobius => "mobius",
            DistortionKernel::Kl => "kl",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "pseudo" => Some(DistortionKernel::Pseudo),
            "mobius" => Some(DistortionKernel::Mobius),
            "kl" => Some(DistortionKernel::Kl),
            _ => None,
        }
    }

    pub fn g(&self, ell: f64, r: f64) -> f64 {
        match self {
            DistortionKernel::Pseudo => 1.0 / r,
            DistortionKernel::Mobius => (1.0 / r - 1.0) / ell,
            DistortionKernel::Kl => -r.ln() / ell,
        }
    }

    /// `(∂_ℓ g, ∂_r g)`.
    pub fn partials(&self, ell: f64, r: f64) -> (f64, f64) {
        match self {
            DistortionKernel::Pseudo => (0.0, -1.0 / (r * r)),
            DistortionKernel::Mobius => (-(1.0 / r - 1.0) / (ell * ell), -1.0 / (ell * r * r)),
            DistortionKernel::Kl => (r.ln() / (ell * ell), -1.0 / (ell * r)),
        }
    }

    /// `K(u, v)`.
    pub fn k(&self, u: f64, v: f64) -> f64 {
        self.g(v, u / v)
    }

    /// `(K_u, K_v)`.
    pub fn k_partials(&self, u: f64, v: f64) -> (f64, f64) {
        let r = u / v;
        let (gl, gr) = self.partials(v, r);
        (gr / v, gl - gr * u / (v * v))
    }

    /// `lim_{ℓ→0} g(ℓ, 1 + αℓ)`.
    pub fn q0(&self, alpha: f64) -> f64 {
        match self {
            DistortionKernel::Pseudo => 1.0,
            DistortionKernel::Mobius | DistortionKernel::Kl => -alpha,
        }
    }

    /// `lim_{ℓ→0} ∂_ℓ g(ℓ, 1 + αℓ)`.
    pub fn q1(&self, alpha: f64) -> f64 {
        match self {
            DistortionKernel::Pseudo => -alpha,
            DistortionKernel::Mobius => alpha * alpha,
            DistortionKernel::Kl => 0.5 * alpha * alpha,
        }
    }
}

/// Relative tolerance for membership in the realizing set.
pub const REALIZING_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizingPair {
    /// Node index of `x`.
    pub i: usize,
    /// Node index of `y = x + z`.
    pub j: usize,
    pub x: f64,
    /// Parameter separation in `(0, π]`.
    pub z: f64,
    /// `u / v`.
    pub r: f64,
    /// `-1` for an interior chord, `+1` for an exterior one.
    pub orientation: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    pub kernel: DistortionKernel,
    pub value: f64,
    pub off_diagonal: f64,
    pub diagonal: f64,
    pub pairs: Vec<RealizingPair>,
    /// Smallest `|z|` among the realizing pairs, if any were found off the diagonal.
    pub min_separation: Option<f64>,
}

/// Unit-speed shape `φ = (ψ - c)/σ` and its spectral curvature.
struct Shape {
    points: Vec<Vec2>,
    curvature: Vec<f64>,
}

fn unit_shape(curve: &Curve) -> Shape {
    let sigma = curve.sigma();
    let c = curve.centroid();
    let points: Vec<Vec2> = curve.points().iter().map(|&p| (p - c) * (1.0 / sigma)).collect();
    let d1x = curve.x_field().derivative(1);
    let d1y = curve.y_field().derivative(1);
    let d2x = curve.x_field().derivative(2);
    let d2y = curve.y_field().derivative(2);
    let curvature = (0..curve.m())
        .map(|j| {
            let v = Vec2::new(d1x.values()[j], d1y.values()[j]);
            let a = Vec2::new(d2x.values()[j], d2y.values()[j]);
            sigma * v.cross(a) / v.norm().powi(3)
        })
        .collect();
    Shape { points, curvature }
}

/// Off-diagonal pairs need `|z| ≥ 4π/M`, two grid cells.
const DIAGONAL_CELLS: usize = 2;

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn chord_orientation(points: &[Vec2], i: usize, j: usize) -> i8 {
    let mid = (points[i] + points[j]) * 0.5;
    if point_in_polygon(mid, points) {
        -1
    } else {
        1
    }
}

/// Discrete `Δ_K` over node pairs with the diagonal limit below two cells.
pub fn k_distortion(
    curve: &Curve,
    kernel: DistortionKernel,
) -> Result<DistortionReport, DiagnosticError> {
    let m = curve.m();
    let h = spectral::spacing(m);
    let shape = unit_shape(curve);
    let pts = &shape.points;
    let dup_tol = 1e-10 * 2.0 * PI;
    let skip = DIAGONAL_CELLS;
    let half = m / 2;

    // Per row i: pairs (i, i + d) for d in [skip, M/2]. Antipodal chords
    // appear from both ends, as (x, π) and (x + π, π).
    let rows: Vec<Result<Vec<(usize, f64)>, DiagnosticError>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::with_capacity(half);
            for d in 1..=half {
                let j = (i + d) % m;
                let u = (pts[i] - pts[j]).norm_sq();
                if u.sqrt() < dup_tol {
                    return Err(DiagnosticError::NotEmbedded { i, j });
                }
                if d < skip {
                    continue;
                }
                let z = d as f64 * h;
                let v = 2.0 * (1.0 - z.cos());
                row.push((d, kernel.k(u, v)));
            }
            Ok(row)
        })
        .collect();
    let mut table = Vec::with_capacity(m);
    for r in rows {
        table.push(r?);
    }
    let off_diagonal = table
        .iter()
        .flat_map(|row| row.iter().map(|&(_, k)| k))
        .fold(f64::NEG_INFINITY, f64::max);
    let diagonal = shape
        .curvature
        .iter()
        .map(|&k| kernel.q0((1.0 - k * k) / 12.0))
        .fold(f64::NEG_INFINITY, f64::max);
    let value = off_diagonal.max(diagonal);
    let tol = REALIZING_TOLERANCE * value.abs().max(1.0);
    let mut pairs = Vec::new();
    for (i, row) in table.iter().enumerate() {
        for &(d, k) in row {
            if k >= value - tol {
                let j = (i + d) % m;
                let z = d as f64 * h;
                let u = (pts[i] - pts[j]).norm_sq();
                let v = 2.0 * (1.0 - z.cos());
                pairs.push(RealizingPair {
                    i,
                    j,
                    x: spectral::node(m, i),
                    z,
                    r: u / v,
                    orientation: chord_orientation(pts, i, j),
                });
            }
        }
    }
    let min_separation = pairs.iter().map(|p| p.z).reduce(f64::min);
    Ok(DistortionReport {
        kernel,
        value,
        off_diagonal,
        diagonal,
        pairs,
        min_separation,
    })
}

/// Pseudo-distortion `Δ²`, the pseudo-kernel value of [`k_distortion`].
pub fn pseudo_distortion(curve: &Curve) -> Result<f64, DiagnosticError> {
    Ok(k_distortion(curve, DistortionKernel::Pseudo)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairResiduals {
    /// `|⟨v, τ(x)⟩ + (K_v/K_u) sin z/√u|`.
    pub tangent_x: f64,
    /// Same at `y`.
    pub tangent_y: f64,
    pub r: f64,
    pub r_ok: bool,
    /// Positive part of `f_xx + f_yy + √((f_xx - f_yy)² + 4 f_xy²)`.
    pub hessian: f64,
}

/// Residuals of the first- and second-order conditions at a realizing pair.
pub fn realizing_pair_residuals(
    curve: &Curve,
    pair: &RealizingPair,
    kernel: DistortionKernel,
) -> Result<PairResiduals, DiagnosticError> {
    let m = curve.m();
    let h = spectral::spacing(m);
    let z_cut = 4.0 * PI / m as f64;
    if pair.z.abs() < z_cut * (1.0 - 1e-12) {
        return Err(DiagnosticError::DiagonalPair { z: pair.z });
    }
    let shape = unit_shape(curve);
    let pts = &shape.points;
    let tangent: Vec<Vec2> = curve
        .velocity()
        .iter()
        .map(|v| *v * (1.0 / v.norm()))
        .collect();
    let (i, j) = (pair.i, pair.j);
    let z = pair.z;
    let chord = pts[j] - pts[i];
    let u = chord.norm_sq();
    let v = 2.0 * (1.0 - z.cos());
    let dir = chord * (1.0 / u.sqrt());
    let (ku, kv) = kernel.k_partials(u, v);
    let rhs = (kv / ku) * z.sin() / u.sqrt();
    let tangent_x = (dir.dot(tangent[i]) + rhs).abs();
    let tangent_y = (dir.dot(tangent[j]) + rhs).abs();
    let r = u / v;

    let f = |a: isize, b: isize| {
        let ia = (i as isize + a).rem_euclid(m as isize) as usize;
        let jb = (j as isize + b).rem_euclid(m as isize) as usize;
        let zz = z + (b - a) as f64 * h;
        let uu = (pts[jb] - pts[ia]).norm_sq();
        let vv = 2.0 * (1.0 - zz.cos());
        kernel.k(uu, vv)
    };
    let f0 = f(0, 0);
    let fxx = (f(1, 0) - 2.0 * f0 + f(-1, 0)) / (h * h);
    let fyy = (f(0, 1) - 2.0 * f0 + f(0, -1)) / (h * h);
    let fxy = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4.0 * h * h);
    let hessian = (fxx + fyy + ((fxx - fyy).powi(2) + 4.0 * fxy * fxy).sqrt()).max(0.0);
    Ok(PairResiduals {
        tangent_x,
        tangent_y,
        r,
        r_ok: r <= 1.0 + 1e-6,
        hessian,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationBound {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Checks `min |z| ≥ (1 - 1/Δ)/(2 μ_a)` with `μ_a = ⨍ κ_φ²`.
pub fn realizing_separation_bound(
    curve: &Curve,
    report: &DistortionReport,
) -> Result<SeparationBound, DiagnosticError> {
    if report.kernel != DistortionKernel::Pseudo {
        return Err(DiagnosticError::DiagnosticUnavailable(
            "separation bound needs the pseudo kernel".into(),
        ));
    }
    if report.value <= 1.0 + 1e-9 {
        return Err(DiagnosticError::DiagnosticUnavailable(
            "pseudo-distortion is at its circular minimum".into(),
        ));
    }
    let lhs = report.min_separation.ok_or_else(|| {
        DiagnosticError::DiagnosticUnavailable("no off-diagonal realizing pair".into())
    })?;
    let shape = unit_shape(curve);
    let mu_a = shape.curvature.iter().map(|k| k * k).sum::<f64>() / curve.m() as f64;
    let rhs = (1.0 - 1.0 / report.value) / (2.0 * mu_a);
    let grid_tol = 2.0 * PI / curve.m() as f64;
    Ok(SeparationBound {
        lhs,
        rhs,
        satisfied: lhs >= rhs * (1.0 - grid_tol),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Segment `a` joins nodes `seg_a` and `seg_a + 1`.
    pub seg_a: usize,
    pub seg_b: usize,
    pub point: Vec2,
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b - a).cross(c - a)
}

fn proper_crossing(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> Option<Vec2> {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        let t = d1 / (d1 - d2);
        Some(p1 + (p2 - p1) * t)
    } else {
        None
    }
}

/// Strict crossings between non-adjacent segments of the closed polyline.
pub fn self_intersections(curve: &Curve) -> Vec<Crossing> {
    let pts = curve.points();
    let m = pts.len();
    let seg = |k: usize| (pts[k], pts[(k + 1) % m]);
    let boxes: Vec<(Vec2, Vec2)> = (0..m)
        .map(|k| {
            let (a, b) = seg(k);
            (
                Vec2::new(a.x.min(b.x), a.y.min(b.y)),
                Vec2::new(a.x.max(b.x), a.y.max(b.y)),
            )
        })
        .collect();
    let rows: Vec<Vec<Crossing>> = (0..m)
        .into_par_iter()
        .map(|a| {
            let mut out = Vec::new();
            let (p1, p2) = seg(a);
            let (lo, hi) = boxes[a];
            for b in (a + 2)..m {
                if a == 0 && b == m - 1 {
                    continue;
                }
                let (blo, bhi) = boxes[b];
                if bhi.x < lo.x || blo.x > hi.x || bhi.y < lo.y || blo.y > hi.y {
                    continue;
                }
                let (q1, q2) = seg(b);
                if let Some(point) = proper_crossing(p1, p2, q1, q2) {
                    out.push(Crossing {
                        seg_a: a,
                        seg_b: b,
                        point,
                    });
                }
            }
            out
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Lower bound `2β[erf(σ(d+z)/(2√2α)) - ½ erf(σd/(√2α))]` on the repulsive
/// gaussian self-force across a chord of unit-shape length `d`.
pub fn arrest_bound(d: f64, z: f64, sigma: f64, alpha: f64, beta: f64) -> f64 {
    let s2 = 2.0_f64.sqrt();
    2.0 * beta * (erf(sigma * (d + z) / (2.0 * s2 * alpha)) - 0.5 * erf(sigma * d / (s2 * alpha)))
}

/// True in the arrested-front regime `c < 0`, `β < |c| < 2β`.
pub fn arrest_regime_check(c: f64, beta: f64) -> bool {
    c < 0.0 && beta < c.abs() && c.abs() < 2.0 * beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn circle(m: usize) -> Curve {
        Curve::from_fn(m, |x| Vec2::new(x.cos(), x.sin())).unwrap()
    }

    #[test]
    fn diagonal_limits() {
        for k in [DistortionKernel::Pseudo, DistortionKernel::Mobius, DistortionKernel::Kl] {
            for &alpha in &[-0.3, 0.0, 0.2] {
                let ell = 1e-6;
                let q = k.g(ell, 1.0 + alpha * ell);
                assert_abs_diff_eq!(q, k.q0(alpha), epsilon = 1e-6);
                let ell2 = 2e-6;
                let dq = (k.g(ell2, 1.0 + alpha * ell2) - q) / (ell2 - ell);
                assert_abs_diff_eq!(dq, k.q1(alpha), epsilon = 1e-3);
            }
        }
    }

    #[test]
    fn circle_distortions() {
        let c = circle(128);
        let p = k_distortion(&c, DistortionKernel::Pseudo).unwrap();
        assert_abs_diff_eq!(p.value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.diagonal, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.off_diagonal, 1.0, epsilon = 1e-12);
        let mb = k_distortion(&c, DistortionKernel::Mobius).unwrap();
        assert_abs_diff_eq!(mb.value, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn figure_eight_crossing() {
        let c = Curve::from_fn(64, |x| Vec2::new((x + 0.03).sin(), (2.0 * x + 0.06).sin() * 0.5))
            .unwrap();
        assert_eq!(self_intersections(&c).len(), 1);
        assert!(self_intersections(&circle(64)).is_empty());
    }

    #[test]
    fn arrest_examples() {
        let v = arrest_bound(0.1, 1.0, 1.0, 0.1, 1.0);
        assert_abs_diff_eq!(v, 1.317_310_431_904_664, epsilon = 1e-13);
        let z = 0.4_f64;
        assert_abs_diff_eq!(
            arrest_bound(0.0, z, 1.3, 0.2, 0.7),
            1.4 * erf(1.3 * z / (2.0 * 2.0_f64.sqrt() * 0.2)),
            epsilon = 1e-15
        );
        assert!(arrest_bound(0.1, 1.0, 1.0, 1e12, 1.0) < 1e-10);
        assert!(arrest_regime_check(-1.5, 1.0));
        assert!(!arrest_regime_check(-0.5, 1.0));
        assert!(!arrest_regime_check(1.5, 1.0));
    }

    #[test]
    fn point_in_polygon_square() {
        let sq = [
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        assert!(point_in_polygon(Vec2::new(0.5, 0.5), &sq));
        assert!(!point_in_polygon(Vec2::new(1.5, 0.5), &sq));
    }
}
