use std::f64::consts::PI;

use proptest::prelude::*;
use scalespace::kernels::{eval_series_derivs, eval_series_even, eval_series_odd, ode_residual, profile_even, profile_odd, Z_MAX};
use scalespace::{eval_kernel, eval_kernel_wide, transfer, Error, KernelParams, Parity, SeriesEvalConfig};

fn cfg() -> SeriesEvalConfig<f64> {
    SeriesEvalConfig::default()
}

fn gauss(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Composite Simpson rule on `[0, top]` after `ω = t⁴`, which smooths the
/// `ω^p` endpoint behaviour.
fn simpson_omega(f: impl Fn(f64) -> f64, top: f64, n: usize) -> f64 {
    let tmax = top.powf(0.25);
    let h = tmax / n as f64;
    let g = |t: f64| {
        let w = t.powi(4);
        f(w) * 4.0 * t.powi(3)
    };
    let mut s = g(0.0) + g(tmax);
    for i in 1..n {
        let t = i as f64 * h;
        s += if i % 2 == 1 { 4.0 * g(t) } else { 2.0 * g(t) };
    }
    s * h / 3.0
}

/// `Λ_p^e` from its Fourier integral, normalised so that `Λ_p^e(0) = 1/√(2π)`.
fn fourier_even(z: f64, p: f64) -> f64 {
    let weight = |w: f64| if w == 0.0 { if p == 0.0 { 1.0 } else { 0.0 } } else { w.powf(p) } * (-0.5 * w * w).exp();
    let num = simpson_omega(|w| weight(w) * (w * z).cos(), 40.0, 40_000);
    let den = simpson_omega(weight, 40.0, 40_000);
    num / den / (2.0 * PI).sqrt()
}

/// `Λ_p^o` from its Fourier integral, normalised so that `(Λ_p^o)'(0) = p/√(2π)`.
fn fourier_odd(z: f64, p: f64) -> f64 {
    let weight = |w: f64| if w == 0.0 { 0.0 } else { w.powf(p) } * (-0.5 * w * w).exp();
    let num = simpson_omega(|w| weight(w) * (w * z).sin(), 40.0, 40_000);
    let den = simpson_omega(|w| weight(w) * w, 40.0, 40_000);
    p * num / den / (2.0 * PI).sqrt()
}

#[test]
fn even_series_examples() {
    let v = eval_series_even(0.0, 0.7, &cfg()).unwrap();
    assert!((v - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
    let v = eval_series_even(1.0, 0.0, &cfg()).unwrap();
    assert!((v - 0.24197072451914337).abs() < 1e-12, "{v}");
    let v = eval_series_even(1.0, 2.0, &cfg()).unwrap();
    assert!(v.abs() < 1e-12, "{v}");
}

#[test]
fn odd_series_examples() {
    assert_eq!(eval_series_odd(0.0, 1.7, &cfg()).unwrap(), 0.0);
    let v = eval_series_odd(1.0, 1.0, &cfg()).unwrap();
    assert!((v - 0.24197072451914337).abs() < 1e-12, "{v}");
    let a = eval_series_odd(-1.3, 1.0, &cfg()).unwrap();
    let b = eval_series_odd(1.3, 1.0, &cfg()).unwrap();
    assert_eq!(a, -b);
}

#[test]
fn kernel_examples() {
    let gaussian = KernelParams::new(0.0, 1.0, 0.0).unwrap();
    let v = eval_kernel(&gaussian, 0.0, 1.0, &cfg()).unwrap();
    assert!((v - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);

    let odd = KernelParams::new(1.0, 0.0, 1.0).unwrap();
    let v = eval_kernel(&odd, 2.0, 0.5, &cfg()).unwrap();
    assert!((v - 0.25 * 0.24197072451914337).abs() < 1e-12, "{v}");

    let mixed = KernelParams::new(1.0, 1.0, 1.0).unwrap();
    let v = eval_kernel(&mixed, 0.0, 3.0, &cfg()).unwrap();
    let expect = 9.0 * eval_series_even(0.0, 1.0, &cfg()).unwrap();
    assert!((v - expect).abs() < 1e-13);
}

#[test]
fn transfer_examples() {
    let gaussian = KernelParams::new(0.0, 1.0, 0.0).unwrap();
    for w in [-3.0f64, -0.4, 0.0, 1.0, 2.5] {
        let t = transfer(&gaussian, w, 1.0);
        assert!((t.re - (-0.5 * w * w).exp()).abs() < 1e-15);
        assert_eq!(t.im, 0.0);
    }
    for params in [KernelParams::new(0.0, 1.0, 0.5).unwrap(), KernelParams::new(1.0, 2.0, 1.5).unwrap()] {
        let t = transfer(&params, 0.0, 0.8);
        assert_eq!(t.norm(), 0.0);
    }
    let t = transfer(&KernelParams::new(0.0, 1.0, 1.0).unwrap(), 1.0, 0.0);
    assert_eq!(t.re, 1.0);
    assert_eq!(t.im, 0.0);
}

#[test]
fn ode_residual_examples() {
    assert!(ode_residual(0.0, 0.5, Parity::Even, &cfg()).unwrap().abs() < 1e-10);
    assert!(ode_residual(1.0, 2.0, Parity::Odd, &cfg()).unwrap().abs() < 1e-10);
    assert!(ode_residual(2.5, 1.2, Parity::Even, &cfg()).unwrap().abs() < 1e-9);
}

#[test]
fn ode_residual_over_grid() {
    for p in [0.3, 1.0, 2.0, 2.5] {
        for parity in [Parity::Even, Parity::Odd] {
            for i in 0..=80 {
                let z = -4.0 + 0.1 * i as f64;
                let h = eval_series_derivs(z, p, parity, &cfg()).unwrap();
                let r = ode_residual(p, z, parity, &cfg()).unwrap();
                assert!(r.abs() <= 1e-8 * (1.0 + h.value.abs()), "p={p} {parity:?} z={z}: {r:e}");
            }
        }
    }
}

#[test]
fn closed_form_anchors() {
    for i in 0..=160 {
        let z = -4.0 + 0.05 * i as f64;
        let e0 = eval_series_even(z, 0.0, &cfg()).unwrap();
        let o1 = eval_series_odd(z, 1.0, &cfg()).unwrap();
        let e2 = eval_series_even(z, 2.0, &cfg()).unwrap();
        assert!((e0 - gauss(z)).abs() <= 1e-10, "z={z}");
        assert!((o1 - z * gauss(z)).abs() <= 1e-10, "z={z}");
        assert!((e2 - (1.0 - z * z) * gauss(z)).abs() <= 1e-10, "z={z}");
    }
}

#[test]
fn series_matches_fourier_integral_at_fractional_order() {
    for p in [0.3, 0.7, 2.5] {
        for z in [-3.5, -1.1, 0.0, 0.4, 2.0, 3.9] {
            let e = eval_series_even(z, p, &cfg()).unwrap();
            let o = eval_series_odd(z, p, &cfg()).unwrap();
            assert!((e - fourier_even(z, p)).abs() < 1e-9, "even p={p} z={z}: {e} vs {}", fourier_even(z, p));
            assert!((o - fourier_odd(z, p)).abs() < 1e-9, "odd p={p} z={z}: {o} vs {}", fourier_odd(z, p));
        }
    }
}

#[test]
fn wide_profiles_agree_with_series() {
    for p in [0.0, 0.3, 1.0, 2.5, 4.0] {
        for i in 0..=100 {
            let z = -Z_MAX + 0.1 * i as f64;
            // alternating-term cancellation grows towards the series limit
            let tol = if z.abs() <= 4.0 { 1e-10 } else { 1e-9 };
            let e = eval_series_even(z, p, &cfg()).unwrap();
            assert!((profile_even(z, p) - e).abs() < tol, "even p={p} z={z}");
            if p > 0.0 {
                let o = eval_series_odd(z, p, &cfg()).unwrap();
                assert!((profile_odd(z, p) - o).abs() < tol, "odd p={p} z={z}");
            }
        }
    }
}

#[test]
fn wide_kernel_beyond_series_domain() {
    let params = KernelParams::new(0.0, 1.0, 2.0).unwrap();
    for z in [6.0, 9.0, 15.0, 30.0] {
        let v = eval_kernel_wide(&params, z, 1.0);
        assert!((v - (1.0 - z * z) * gauss(z)).abs() < 1e-12, "z={z}");
    }
    // algebraic tail of a fractional order
    let frac = KernelParams::new(0.0, 1.0, 0.5).unwrap();
    let far: f64 = eval_kernel_wide(&frac, 30.0, 1.0);
    assert!(far.is_finite() && far != 0.0);
    assert!((fourier_even(12.0, 0.5) - eval_kernel_wide(&frac, 12.0, 1.0)).abs() < 1e-9);
}

#[test]
fn series_rejects_out_of_domain() {
    let err = eval_series_even(Z_MAX + 0.5, 1.0, &cfg()).unwrap_err();
    assert!(matches!(err, Error::TruncationFailure { .. }));
    let err = eval_series_odd(f64::NAN, 1.0, &cfg()).unwrap_err();
    assert!(matches!(err, Error::TruncationFailure { .. }));
    let tight = SeriesEvalConfig { abs_tol: 1e-30, max_terms: 10 };
    assert!(matches!(eval_series_even(4.0, 1.0, &tight), Err(Error::TruncationFailure { terms: 10, .. })));
    let bad = SeriesEvalConfig { abs_tol: 0.0, max_terms: 200 };
    assert!(matches!(eval_series_even(1.0, 1.0, &bad), Err(Error::InvalidConfig(_))));
}

#[test]
fn params_validation() {
    assert!(matches!(KernelParams::new(0.0, 0.0, 1.0), Err(Error::InvalidParams(_))));
    assert!(matches!(KernelParams::new(0.0, 1.0, -0.1), Err(Error::InvalidParams(_))));
    assert!(matches!(KernelParams::new(1.0, 0.0, 0.0), Err(Error::InvalidParams(_))));
    assert!(matches!(KernelParams::new(f64::NAN, 1.0, 1.0), Err(Error::InvalidParams(_))));
    let ok = KernelParams::new(1.0, 0.0, 0.5).unwrap();
    assert!(matches!(eval_kernel(&ok, 0.0, 0.0, &cfg()), Err(Error::InvalidParams(_))));
    assert!(ok.with_p(0.0).is_err());
}

#[test]
fn single_precision_path() {
    let cfg32 = SeriesEvalConfig::<f32> { abs_tol: 1e-9, max_terms: 200 };
    let v = eval_series_even(1.0f32, 0.0f32, &cfg32).unwrap();
    assert!((v - 0.24197072f32).abs() < 1e-6);
}

proptest! {
    #[test]
    fn parity_is_exact(z in -4.0f64..4.0, pi in 0usize..3) {
        let p = [0.3, 1.0, 2.5][pi];
        prop_assert_eq!(eval_series_even(-z, p, &cfg()).unwrap(), eval_series_even(z, p, &cfg()).unwrap());
        prop_assert_eq!(eval_series_odd(-z, p, &cfg()).unwrap(), -eval_series_odd(z, p, &cfg()).unwrap());
    }

    #[test]
    fn transfer_parts_have_parity(w in 0.01f64..8.0, p in 0.01f64..3.0, s in 0.0f64..2.0) {
        let params = KernelParams::new(0.7, -0.4, p).unwrap();
        let a = transfer(&params, w, s);
        let b = transfer(&params, -w, s);
        prop_assert!((a.re - b.re).abs() <= 1e-15 * a.re.abs().max(1.0));
        prop_assert!((a.im + b.im).abs() <= 1e-15 * a.im.abs().max(1.0));
    }
}
