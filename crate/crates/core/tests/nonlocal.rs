use std::f64::consts::PI;

use arrestflow_core::geometry::{
    bending_energy, gromov_distortion, resample_constant_speed, Curve, Vec2,
};
use arrestflow_core::kernels::KernelSpec;
use arrestflow_core::nonlocal::{
    circle_force_oracle, force_and_derivative, raw_force, velbound_check, Interface,
    InteractionSystem,
};
use arrestflow_core::spectral::nodes;
use proptest::prelude::*;

fn uniform(m: usize, f: impl Fn(f64) -> Vec2) -> Interface {
    let c = Curve::from_fn(m, f).unwrap();
    Interface::from_curve(resample_constant_speed(&c).unwrap())
}

fn ellipse(m: usize) -> Interface {
    uniform(m, |x| Vec2::new(2.0 * x.cos(), -x.sin()))
}

/// `g(s) = e^{-s}` as a gaussian.
fn unit_exponential() -> KernelSpec {
    KernelSpec::gaussian(0.5_f64.sqrt(), PI.sqrt()).unwrap()
}

/// `I₀(z) = (1/2π) ∫ e^{z cos t} dt` by the periodic rectangle rule.
fn bessel_i0_quadrature(z: f64) -> f64 {
    let n = 256;
    (0..n).map(|k| (z * (2.0 * PI * k as f64 / n as f64).cos()).exp()).sum::<f64>() / n as f64
}

fn max_rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[test]
fn multiply_covered_circles_match_bessel_formula() {
    let k = unit_exponential();
    for (m, rho) in [(1_u32, 1.0), (2, 0.5), (3, 0.8), (5, 1.3)] {
        let iface = Interface::from_curve(
            Curve::from_fn(256, |x| Vec2::new(rho * (m as f64 * x).cos(), rho * (m as f64 * x).sin()))
                .unwrap(),
        );
        let sigma = m as f64 * rho;
        assert!((iface.sigma - sigma).abs() < 1e-12);
        let raw = raw_force(&[iface], &InteractionSystem::single(k.clone(), 0.0), 0).unwrap();
        let lambda = rho * rho;
        let oracle = 2.0 * PI * sigma * (-lambda).exp() * bessel_i0_quadrature(lambda);
        assert!((2.0 * PI * circle_force_oracle(m, sigma) - oracle).abs() < 1e-13 * oracle);
        for &v in raw.values() {
            assert!((v - oracle).abs() < 1e-12 * oracle, "m = {m}: {v} vs {oracle}");
        }
    }
}

#[test]
fn circle_force_has_zero_derivative() {
    let iface = uniform(128, |x| Vec2::new(1.5 * x.cos(), -1.5 * x.sin()));
    let sys = InteractionSystem::single(KernelSpec::gaussian(0.4, 2.0).unwrap(), -1.0);
    let (f, df) = force_and_derivative(&[iface], &sys, 0).unwrap();
    assert!(df.max_abs() < 1e-10);
    let mean = f.mean();
    assert!(f.values().iter().all(|v| (v - mean).abs() < 1e-10));
}

#[test]
fn ellipse_derivative_matches_spectral_derivative() {
    let sys = InteractionSystem::single(KernelSpec::gaussian(0.5, 1.0).unwrap(), -1.0);
    let (f, df) = force_and_derivative(&[ellipse(512)], &sys, 0).unwrap();
    let spectral = f.derivative(1);
    let err = df
        .values()
        .iter()
        .zip(spectral.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-6, "{err}");
    assert!(df.max_abs() > 1e-2);
}

#[test]
fn force_converges_under_refinement() {
    let sys = InteractionSystem::single(KernelSpec::gaussian(0.3, 1.0).unwrap(), -0.5);
    let (coarse, _) = force_and_derivative(&[ellipse(256)], &sys, 0).unwrap();
    let (fine, _) = force_and_derivative(&[ellipse(512)], &sys, 0).unwrap();
    let every_other: Vec<f64> = fine.values().iter().step_by(2).copied().collect();
    assert!(max_rel_diff(coarse.values(), &every_other) < 1e-9);
}

fn pair_system() -> InteractionSystem {
    InteractionSystem::new(
        vec![
            vec![KernelSpec::gaussian(0.2, 1.0).unwrap(), KernelSpec::gaussian(0.5, 0.7).unwrap()],
            vec![KernelSpec::gaussian(0.4, 1.3).unwrap(), KernelSpec::gaussian(0.3, 0.2).unwrap()],
        ],
        vec![-1.0, 0.5],
    )
    .unwrap()
}

fn pair(m: usize) -> [Interface; 2] {
    [
        uniform(m, |x| Vec2::new(-2.0 + 1.5 * x.cos(), -x.sin())),
        uniform(m, |x| {
            let r = 1.0 + 0.2 * (3.0 * x).cos();
            Vec2::new(1.2 + r * x.cos(), 0.3 - r * x.sin())
        }),
    ]
}

#[test]
fn relabelling_interfaces_swaps_forces() {
    let sys = pair_system();
    let [a, b] = pair(128);
    let swapped = InteractionSystem::new(
        vec![
            vec![sys.kernels[1][1].clone(), sys.kernels[1][0].clone()],
            vec![sys.kernels[0][1].clone(), sys.kernels[0][0].clone()],
        ],
        vec![sys.growth[1], sys.growth[0]],
    )
    .unwrap();
    let ab = [a.clone(), b.clone()];
    let ba = [b, a];
    for i in 0..2 {
        let (f, df) = force_and_derivative(&ab, &sys, i).unwrap();
        let (g, dg) = force_and_derivative(&ba, &swapped, 1 - i).unwrap();
        assert!(max_rel_diff(g.values(), f.values()) < 1e-13);
        assert!(max_rel_diff(dg.values(), df.values()) < 1e-13);
    }
}

fn moved(iface: &Interface, angle: f64, shift: Vec2) -> Interface {
    Interface::from_curve(iface.curve.rotate(angle).translate(shift))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn forces_are_rigid_motion_invariant(angle in 0.0..2.0 * PI, dx in -3.0..3.0f64, dy in -3.0..3.0f64) {
        let sys = pair_system();
        let [a, b] = pair(64);
        let shift = Vec2::new(dx, dy);
        let base = [a.clone(), b.clone()];
        let other = [moved(&a, angle, shift), moved(&b, angle, shift)];
        for i in 0..2 {
            let (f, df) = force_and_derivative(&base, &sys, i).unwrap();
            let (g, dg) = force_and_derivative(&other, &sys, i).unwrap();
            prop_assert!(max_rel_diff(g.values(), f.values()) < 1e-10);
            prop_assert!(max_rel_diff(dg.values(), df.values()) < 1e-9);
        }
    }
}

#[test]
fn unit_circle_velbound_example() {
    let iface = uniform(256, |x| Vec2::new(x.cos(), -x.sin()));
    let k = KernelSpec::gaussian(1.0, 1.0).unwrap();
    let raw = raw_force(&[iface], &InteractionSystem::single(k.clone(), 0.0), 0).unwrap();
    let v = velbound_check(&raw, 1, PI / 2.0, k.c0star().unwrap());
    assert!((v.bound - PI * PI / 2.0).abs() < 1e-14);
    assert!(v.satisfied);
}

#[test]
fn ellipse_satisfies_velbound_with_bending_partition() {
    let iface = ellipse(512);
    let n = bending_energy(&iface.curve).unwrap().n;
    for alpha in [0.05, 0.5, 2.0] {
        let k = KernelSpec::gaussian(alpha, 1.0).unwrap();
        let raw = raw_force(&[iface.clone()], &InteractionSystem::single(k.clone(), 0.0), 0).unwrap();
        let v = velbound_check(&raw, n, 3.0, k.c0star().unwrap());
        assert!(v.satisfied, "alpha {alpha}: {v:?}");
        let gromov = gromov_distortion(&iface.curve).unwrap();
        assert!(velbound_check(&raw, 1, gromov, k.c0star().unwrap()).satisfied);
    }
}

#[test]
fn grid_nodes_are_shared() {
    // the refinement test relies on the coarse grid being every other fine node
    let coarse = nodes(8);
    let fine = nodes(16);
    for (j, x) in coarse.iter().enumerate() {
        assert_eq!(*x, fine[2 * j]);
    }
}
