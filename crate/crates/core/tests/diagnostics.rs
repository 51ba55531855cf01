use std::f64::consts::PI;

use arrestflow_core::diagnostics::{
    k_distortion, point_in_polygon, pseudo_distortion, realizing_pair_residuals,
    realizing_separation_bound, self_intersections, DistortionKernel,
};
use arrestflow_core::geometry::{gromov_distortion, resample_constant_speed, Curve, Vec2};
use proptest::prelude::*;

const KERNELS: [DistortionKernel; 3] =
    [DistortionKernel::Pseudo, DistortionKernel::Mobius, DistortionKernel::Kl];

fn uniform(m: usize, f: impl Fn(f64) -> Vec2) -> Curve {
    resample_constant_speed(&Curve::from_fn(m, f).unwrap()).unwrap()
}

fn ellipse(m: usize, a: f64) -> Curve {
    uniform(m, |x| Vec2::new(a * x.cos(), -x.sin()))
}

fn peanut(m: usize, neck: f64) -> Curve {
    uniform(m, |x| {
        let r = 1.0 - neck * (2.0 * x).cos();
        Vec2::new(r * x.cos(), -r * x.sin())
    })
}

/// Star-shaped perturbation of the unit circle with at least one visible mode.
fn star() -> impl Strategy<Value = Curve> {
    (
        0.02..0.1f64,
        2..6usize,
        prop::collection::vec((-0.04..0.04f64, 0.0..2.0 * PI), 0..3),
    )
        .prop_map(|(lead, k, rest)| {
            uniform(256, move |x| {
                let mut r = 1.0 + lead * (k as f64 * x).cos();
                for (n, (a, phi)) in rest.iter().enumerate() {
                    r += a * ((n + 2) as f64 * x + phi).cos();
                }
                Vec2::new(r * x.cos(), -r * x.sin())
            })
        })
}

/// Winding number of a closed polygon around `p`, by summed angle increments.
fn winding_number(p: Vec2, poly: &[Vec2]) -> i64 {
    let n = poly.len();
    let total: f64 = (0..n)
        .map(|k| {
            let a = poly[k] - p;
            let b = poly[(k + 1) % n] - p;
            a.cross(b).atan2(a.dot(b))
        })
        .sum();
    (total / (2.0 * PI)).round() as i64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn circle_is_the_unique_minimizer(c in star()) {
        for kernel in KERNELS {
            let report = k_distortion(&c, kernel).unwrap();
            prop_assert!(report.value > kernel.q0(0.0) + 1e-6, "{kernel:?}: {}", report.value);
        }
    }

    #[test]
    fn pseudo_distortion_brackets_gromov(c in star()) {
        let delta = pseudo_distortion(&c).unwrap().sqrt();
        let gromov = gromov_distortion(&c).unwrap();
        let tol = 1e-3;
        prop_assert!(delta <= gromov * (1.0 + tol));
        prop_assert!(gromov <= PI / 2.0 * delta * (1.0 + tol));
    }

    #[test]
    fn realizing_pairs_satisfy_distortion_conditions(c in star()) {
        let report = k_distortion(&c, DistortionKernel::Pseudo).unwrap();
        for pair in report.pairs.iter().filter(|p| p.z >= 4.0 * PI / 256.0) {
            let res = realizing_pair_residuals(&c, pair, DistortionKernel::Pseudo).unwrap();
            prop_assert!(res.r_ok, "r = {}", res.r);
            prop_assert!(pair.r <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn distortion_ignores_labels_and_rigid_motions(
        c in star(),
        shift in 0..256usize,
        angle in 0.0..2.0 * PI,
        factor in 0.2..5.0f64,
    ) {
        for kernel in KERNELS {
            let base = k_distortion(&c, kernel).unwrap().value;
            let tol = 1e-10 * base.abs().max(1.0);
            let relabelled = k_distortion(&c.rotate_grid(shift), kernel).unwrap().value;
            prop_assert!((relabelled - base).abs() < tol);
            let reversed = k_distortion(&c.reversed(), kernel).unwrap().value;
            prop_assert!((reversed - base).abs() < tol);
            let moved = c.rotate(angle).translate(Vec2::new(1.0, 2.0)).scale(factor);
            let value = k_distortion(&moved, kernel).unwrap().value;
            prop_assert!((value - base).abs() < tol);
        }
    }
}

#[test]
fn orientation_agrees_with_winding_number() {
    let c = peanut(256, 0.5);
    let pts = c.points();
    let mut checked = 0;
    for k in 0..100 {
        let i = (37 * k) % 256;
        let j = (i + 3 + (11 * k) % 250) % 256;
        let mid = (pts[i] + pts[j]) * 0.5;
        let winding = winding_number(mid, pts);
        // skip midpoints sitting on the boundary
        let boundary = pts.iter().map(|p| (*p - mid).norm()).fold(f64::INFINITY, f64::min);
        if boundary < 1e-9 {
            continue;
        }
        assert_eq!(point_in_polygon(mid, pts), winding != 0, "chord {i}-{j}");
        checked += 1;
    }
    assert!(checked > 90);
}

#[test]
fn neck_chords_are_interior() {
    let c = peanut(256, 0.5);
    let report = k_distortion(&c, DistortionKernel::Pseudo).unwrap();
    assert!(!report.pairs.is_empty());
    for p in &report.pairs {
        assert_eq!(p.orientation, -1);
        let mid = (c.points()[p.i] + c.points()[p.j]) * 0.5;
        assert_ne!(winding_number(mid, c.points()), 0);
    }
}

/// `max (2 - 2cos z) / |φ(x) - φ(y)|²` over all node pairs of the unit shape.
fn brute_force_pseudo(c: &Curve) -> f64 {
    let sigma = c.length() / (2.0 * PI);
    let m = c.m();
    let pts = c.points();
    let mut best = 0.0_f64;
    for i in 0..m {
        for j in (i + 2)..m {
            let d = (j - i).min(m + i - j);
            if d < 2 {
                continue;
            }
            let z = 2.0 * PI * d as f64 / m as f64;
            let u = ((pts[i] - pts[j]) * (1.0 / sigma)).norm_sq();
            best = best.max(2.0 * (1.0 - z.cos()) / u);
        }
    }
    best
}

#[test]
fn ellipse_distortion_matches_dense_brute_force() {
    let coarse = pseudo_distortion(&ellipse(512, 2.0)).unwrap();
    let dense = brute_force_pseudo(&ellipse(2048, 2.0));
    assert!((coarse - dense).abs() < 1e-8 * dense, "{coarse} vs {dense}");
    let m256 = pseudo_distortion(&ellipse(256, 2.0)).unwrap();
    assert!(m256 > PI / 2.0 && m256 < 3.0);
}

#[test]
fn flatter_ellipses_are_more_distorted() {
    let two = pseudo_distortion(&ellipse(256, 2.0)).unwrap();
    let four = pseudo_distortion(&ellipse(256, 4.0)).unwrap();
    assert!(four > two && two > 1.0);
}

#[test]
fn ellipse_realizing_pairs_are_symmetric() {
    let c = ellipse(256, 2.0);
    let report = k_distortion(&c, DistortionKernel::Pseudo).unwrap();
    assert!(report.pairs.len() >= 2);
    for p in &report.pairs {
        assert!((p.z - PI).abs() < 1e-12);
        // endpoints on the minor axis
        assert!(c.points()[p.i].x.abs() < 1e-9);
    }
}

#[test]
fn separation_bound_is_resolution_stable() {
    let mut lhs = Vec::new();
    for m in [512, 1024] {
        let c = ellipse(m, 4.0);
        let report = k_distortion(&c, DistortionKernel::Pseudo).unwrap();
        let bound = realizing_separation_bound(&c, &report).unwrap();
        assert!(bound.satisfied, "M = {m}: {bound:?}");
        lhs.push(bound.lhs);
    }
    assert!((lhs[0] - lhs[1]).abs() <= 2.0 * PI / 512.0);
}

#[test]
fn narrow_neck_is_not_a_crossing() {
    // polar peanut with neck width 0.01, sampled in angle
    let c = Curve::from_fn(64, |x| {
        let r = 1.0 - 0.995 * (2.0 * x).cos();
        Vec2::new(r * x.cos(), -r * x.sin())
    })
    .unwrap();
    assert!(((c.points()[0] - c.points()[32]).norm() - 0.01).abs() < 1e-12);
    assert!(self_intersections(&c).is_empty());
}
