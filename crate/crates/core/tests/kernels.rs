use std::f64::consts::{E, PI, SQRT_2};

use arrestflow_core::kernels::{
    classify_with, envelope_c0, envelope_c0_with, envelope_c2_with, regularity_c1_with,
    KernelSpec, TabulatedKernel,
};

const ERFC_1: f64 = 0.157_299_207_050_285_13;

/// Log grid with exactly `per_decade` rows per decade, so `s = 1` is a row.
fn table(g: impl Fn(f64) -> f64, gdot: impl Fn(f64) -> f64, lo: i32, hi: i32, per_decade: i32) -> KernelSpec {
    let rows = (lo * per_decade..=hi * per_decade)
        .map(|k| {
            let s = 10f64.powf(k as f64 / per_decade as f64);
            (s, g(s), gdot(s))
        })
        .collect();
    KernelSpec::tabulated(TabulatedKernel::new(rows).unwrap()).unwrap()
}

fn capped_inverse() -> KernelSpec {
    table(
        |s| if s <= 1.0 { 1.0 } else { 1.0 / s },
        |s| if s <= 1.0 { 0.0 } else { -1.0 / (s * s) },
        -12,
        12,
        200,
    )
}

fn inverse() -> KernelSpec {
    table(|s| 1.0 / s, |s| -1.0 / (s * s), -12, 8, 100)
}

fn three_quarter() -> KernelSpec {
    table(|s| s.powf(-0.75), |s| -0.75 * s.powf(-1.75), -12, 6, 100)
}

#[test]
fn gaussian_c0_is_half_beta() {
    for alpha in [0.01, 0.1, 1.0, 10.0] {
        for beta in [0.5, 1.0, 3.0] {
            let k = KernelSpec::gaussian(alpha, beta).unwrap();
            assert_eq!(k.c0star(), Some(beta / 2.0));
            let numeric = envelope_c0_with(&k, 20_000).unwrap();
            assert!((numeric - beta / 2.0).abs() < 1e-8 * beta, "alpha {alpha}: {numeric}");
        }
    }
}

#[test]
fn gaussian_constants_scale_with_alpha() {
    let base = KernelSpec::gaussian(1.0, 1.0).unwrap();
    for alpha in [0.01, 0.1, 10.0] {
        let k = KernelSpec::gaussian(alpha, 2.0).unwrap();
        let c1 = k.c1star().unwrap();
        assert!((c1 - 2.0 * base.c1star().unwrap() / alpha).abs() < 1e-12 * c1);
        let c2 = k.c2star().unwrap();
        assert!((c2 - 2.0 * base.c2star().unwrap()).abs() < 1e-5 * c2, "{c2}");
    }
}

#[test]
fn gaussian_c1_matches_dense_scan() {
    for alpha in [0.05, 1.0] {
        let k = KernelSpec::gaussian(alpha, 1.0).unwrap();
        let scanned = regularity_c1_with(&k, 200_000);
        let closed = k.c1star().unwrap();
        assert!(scanned <= closed * (1.0 + 1e-12));
        assert!((scanned - closed).abs() < 1e-6 * closed, "{scanned} vs {closed}");
    }
}

#[test]
fn gaussian_c2_matches_closed_form() {
    // envelope of w e^{-w} is 1/e up to w = 1; the remaining tail is a
    // half-moment of the normal density.
    let oracle = (1.5 * SQRT_2 / E + 0.5 * (PI / 2.0).sqrt() * ERFC_1) / (2.0 * PI).sqrt();
    for alpha in [0.05, 1.0, 4.0] {
        let k = KernelSpec::gaussian(alpha, 1.0).unwrap();
        let c2 = envelope_c2_with(&k, 20_000).unwrap();
        assert!((c2 - oracle).abs() < 1e-6 * oracle, "alpha {alpha}: {c2} vs {oracle}");
    }
}

#[test]
fn capped_inverse_has_c0_two() {
    // ∫ min(1, 1/u²) du = 2, less the 1e-6 tail beyond the table
    let k = capped_inverse();
    let c0 = envelope_c0(&k).unwrap();
    assert!((c0 - 2.0).abs() < 1e-5, "{c0}");
    assert!(k.flags().h0 && k.flags().h1 && k.flags().h3);
}

#[test]
fn inverse_is_not_integrable() {
    let k = inverse();
    assert!(envelope_c0(&k).is_err());
    assert!(!k.flags().h0);
    assert_eq!(k.c0star(), None);
}

#[test]
fn three_quarter_power_is_asymptotically_finite_only() {
    let k = three_quarter();
    let f = k.flags();
    assert!(!f.h0);
    assert!(f.h3);
}

#[test]
fn classification_is_scan_independent() {
    let gauss_table = KernelSpec::tabulated(
        TabulatedKernel::from_fn(
            |s| (-s / 2.0).exp(),
            |s| -0.5 * (-s / 2.0).exp(),
            1e-12,
            200.0,
            4000,
        )
        .unwrap(),
    )
    .unwrap();
    for k in [
        KernelSpec::gaussian(0.1, 1.0).unwrap(),
        gauss_table,
        capped_inverse(),
        inverse(),
        three_quarter(),
    ] {
        let flags: Vec<_> = [1_000, 10_000, 100_000].iter().map(|&p| classify_with(&k, p)).collect();
        assert!(flags.windows(2).all(|w| w[0] == w[1]), "{:?}: {flags:?}", k.family());
    }
}

#[test]
fn tabulated_gaussian_matches_analytic() {
    let alpha: f64 = 0.5;
    let amp = 1.0 / ((2.0 * PI).sqrt() * alpha);
    let g = move |s: f64| amp * (-s / (2.0 * alpha * alpha)).exp();
    let t = KernelSpec::tabulated(
        TabulatedKernel::from_fn(g, move |s| -g(s) / (2.0 * alpha * alpha), 1e-12, 50.0, 4000).unwrap(),
    )
    .unwrap();
    let analytic = KernelSpec::gaussian(alpha, 1.0).unwrap();
    assert_eq!(t.flags(), analytic.flags());
    assert!((t.c0star().unwrap() - 0.5).abs() < 1e-6);
    assert!((t.c1star().unwrap() - analytic.c1star().unwrap()).abs() < 1e-4 * analytic.c1star().unwrap());
    for s in [1e-6, 0.01, 0.3, 2.0, 10.0] {
        assert!((t.eval(s) - analytic.eval(s)).abs() < 1e-9, "s = {s}");
    }
}
