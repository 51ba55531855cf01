use std::f64::consts::PI;

use arrestflow_core::geometry::{Curve, Vec2};
use arrestflow_core::kernels::KernelSpec;
use arrestflow_core::nonlocal::InteractionSystem;
use arrestflow_core::solver::{
    fourier_update, phi_function, run, step, state_closure_defect, EventKind, NullObserver,
    SolverSettings, TangentAngleState,
};
use arrestflow_core::spectral::{self, Complex64};

fn circle(m: usize, r: f64) -> Curve {
    Curve::from_fn(m, |x| Vec2::new(r * x.cos(), -r * x.sin())).unwrap()
}

fn ellipse(m: usize) -> Curve {
    Curve::from_fn(m, |x| Vec2::new(2.0 * x.cos(), -x.sin())).unwrap()
}

fn march(
    mut state: TangentAngleState,
    system: &InteractionSystem,
    dt: f64,
    steps: usize,
) -> TangentAngleState {
    for _ in 0..steps {
        state = step(&state, system, dt, 0.5).unwrap().0;
    }
    state
}

fn radial_error(curve: &Curve, center: Vec2, r: f64) -> f64 {
    curve
        .points()
        .iter()
        .map(|p| ((*p - center).norm() - r).abs())
        .fold(0.0, f64::max)
}

#[test]
fn shrinking_circle_follows_exact_radius() {
    let sys = InteractionSystem::single(KernelSpec::zero(), 0.0);
    let state = TangentAngleState::from_curves(&[circle(64, 1.0)]).unwrap();
    let end = march(state, &sys, 1e-3, 250);
    assert!((end.t - 0.25).abs() < 1e-12);
    let c = &end.curves().unwrap()[0];
    let r = (1.0 - 2.0 * end.t).sqrt();
    assert!(radial_error(c, Vec2::ZERO, r) < 1e-6);
    assert!(end.interfaces[0].centroid.norm() < 1e-12);
}

/// `R' = -1/R - c` by classical RK4 on a much finer step.
fn radius_oracle(r0: f64, c: f64, t: f64) -> f64 {
    let f = |r: f64| -1.0 / r - c;
    let n = 100_000;
    let h = t / n as f64;
    let mut r = r0;
    for _ in 0..n {
        let k1 = f(r);
        let k2 = f(r + 0.5 * h * k1);
        let k3 = f(r + 0.5 * h * k2);
        let k4 = f(r + h * k3);
        r += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    r
}

#[test]
fn growing_circle_follows_radius_ode() {
    for c in [-0.5, -2.0, 0.7] {
        let sys = InteractionSystem::single(KernelSpec::zero(), c);
        let state = TangentAngleState::from_curves(&[circle(64, 1.0)]).unwrap();
        let end = march(state, &sys, 5e-4, 400);
        let r = radius_oracle(1.0, c, end.t);
        let curve = &end.curves().unwrap()[0];
        assert!(radial_error(curve, Vec2::ZERO, r) < 1e-6, "c = {c}");
    }
}

#[test]
fn frozen_forcing_update_is_exact() {
    let m = 64;
    let g: Vec<Complex64> = (0..m)
        .map(|k| Complex64::new((k as f64).sin(), 0.5 * (k as f64).cos()))
        .collect();
    let eta0: Vec<Complex64> = (0..m).map(|k| Complex64::new(1.0 / (1.0 + k as f64), -0.25)).collect();
    for dw in [1e-6, 1e-3, 0.1, 2.0] {
        let mut eta = eta0.clone();
        fourier_update(&mut eta, &g, &g, dw);
        for idx in 0..m {
            let l2 = (spectral::wavenumber(m, idx) as f64).powi(2);
            let want = if l2 == 0.0 {
                eta0[idx] + g[idx] * dw
            } else {
                eta0[idx] * (-l2 * dw).exp() - g[idx] * ((-l2 * dw).exp_m1() / l2)
            };
            let scale = eta0[idx].norm() + g[idx].norm() * dw + want.norm();
            assert!(
                (eta[idx] - want).norm() <= 4.0 * f64::EPSILON * scale,
                "dw {dw}, idx {idx}"
            );
        }
    }
}

#[test]
fn phi_functions_match_their_recursion() {
    for x in [-50.0, -3.0, -0.5, -1e-2, -9e-3, -1e-6, 0.0, 1e-6, 0.3] {
        let e0 = phi_function(0, x);
        let e1 = phi_function(1, x);
        let e2 = phi_function(2, x);
        if x != 0.0 {
            assert!((x * e1 - (e0 - 1.0)).abs() < 1e-15 * (1.0 + e0.abs()));
            assert!((x * e2 - (e1 - 1.0)).abs() < 1e-15 * (1.0 + e1.abs()));
        } else {
            assert_eq!((e1, e2), (1.0, 0.5));
        }
    }
}

#[test]
fn epsilon_stays_inverse_square_speed() {
    let sys = InteractionSystem::single(KernelSpec::gaussian(0.3, 1.0).unwrap(), -0.5);
    let mut state = TangentAngleState::from_curves(&[ellipse(128)]).unwrap();
    for _ in 0..20 {
        let (next, rec) = step(&state, &sys, 1e-3, 0.5).unwrap();
        let s = &next.interfaces[0];
        assert!((s.epsilon * s.sigma().powi(2) - 1.0).abs() < 1e-14);
        assert!((rec.interfaces[0].length - s.length()).abs() < 1e-12 * s.length());
        state = next;
    }
}

/// `½ ∮ (x dy - y dx)` with spectral derivatives, positive for clockwise curves.
fn spectral_area(c: &Curve) -> f64 {
    let (x, y) = (c.x_field(), c.y_field());
    let integrand = x.mul(&y.derivative(1)).sub(&y.mul(&x.derivative(1)));
    -PI * integrand.mean()
}

#[test]
fn ellipse_area_decreases_at_two_pi() {
    // enclosed area under curve shortening falls at exactly 2π
    let sys = InteractionSystem::single(KernelSpec::zero(), 0.0);
    let state = TangentAngleState::from_curves(&[ellipse(256)]).unwrap();
    let a0 = spectral_area(&state.curves().unwrap()[0]);
    let end = march(state, &sys, 1e-3, 200);
    let a1 = spectral_area(&end.curves().unwrap()[0]);
    assert!((a0 - a1 - 2.0 * PI * end.t).abs() < 1e-6 * a0, "{}", a0 - a1);
    assert!(state_closure_defect(&end, 0) < 1e-6);
}

#[test]
fn rigid_motions_commute_with_the_flow() {
    let sys = InteractionSystem::single(KernelSpec::gaussian(0.3, 1.0).unwrap(), -0.5);
    let base = TangentAngleState::from_curves(&[ellipse(128)]).unwrap();
    let angle = 0.7;
    let shift = Vec2::new(3.0, -1.0);
    let moved_curve = ellipse(128).rotate(angle).translate(shift);
    let moved = TangentAngleState::from_curves(&[moved_curve]).unwrap();
    let a = march(base, &sys, 1e-3, 100).curves().unwrap().remove(0);
    let b = march(moved, &sys, 1e-3, 100).curves().unwrap().remove(0);
    let expected = a.rotate(angle).translate(shift);
    let err = expected
        .points()
        .iter()
        .zip(b.points())
        .map(|(p, q)| (*p - *q).norm())
        .fold(0.0, f64::max);
    assert!(err < 1e-8, "{err}");
}

#[test]
fn cloned_states_evolve_identically() {
    let sys = InteractionSystem::single(KernelSpec::gaussian(0.2, 1.0).unwrap(), -1.0);
    let state = march(TangentAngleState::from_curves(&[ellipse(128)]).unwrap(), &sys, 1e-3, 5);
    let a = march(state.clone(), &sys, 1e-3, 20);
    let b = march(state, &sys, 1e-3, 20);
    assert_eq!(a, b);
}

#[test]
fn circle_collapses_near_one_half() {
    let sys = InteractionSystem::single(KernelSpec::zero(), 0.0);
    let state = TangentAngleState::from_curves(&[circle(64, 1.0)]).unwrap();
    let out = run(state, &sys, &SolverSettings::new(1e-3, 0.6), &mut NullObserver);
    let end = out.terminal().expect("terminal event");
    assert_eq!(end.kind, EventKind::SpeedCollapse);
    assert!(end.t > 0.49 && end.t <= 0.5, "{}", end.t);
    assert!(!out.completed());
}

#[test]
fn run_lands_on_end_time() {
    let sys = InteractionSystem::single(KernelSpec::zero(), -1.0);
    let state = TangentAngleState::from_curves(&[circle(32, 1.0)]).unwrap();
    let out = run(state, &sys, &SolverSettings::new(0.03, 0.1), &mut NullObserver);
    assert!(out.completed());
    assert_eq!(out.state.t, 0.1);
    assert_eq!(out.events.len(), 1);
}
