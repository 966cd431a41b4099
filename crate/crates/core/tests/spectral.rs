mod common;

use std::f64::consts::PI;

use common::*;
use num_complex::Complex;
use scalespace::spectral::{Residual, Spectrum};
use scalespace::{
    estimate_decay_order, forward_transform, fractional_derivative, geometric_sigma_ladder, inverse_transform,
    pde_residual, synth_checked, synth_field, Deriv, Error, FieldStack, KernelParams, ScaleSpace, SignalGrid,
    SmoothnessBudget,
};

fn unit_gaussian(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `[-20, 20)` with `N = 2048`.
fn plain_grid(f: impl Fn(f64) -> f64) -> SignalGrid<f64> {
    let n = 2048;
    let dx = 40.0 / n as f64;
    SignalGrid::new(-20.0, dx, (0..n).map(|j| f(-20.0 + j as f64 * dx)).collect()).unwrap()
}

fn tent(x: f64) -> f64 {
    (1.0 - x.abs()).max(0.0)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn gaussian_params() -> KernelParams<f64> {
    KernelParams::new(0.0, 1.0, 0.0).unwrap()
}

fn open_budget() -> SmoothnessBudget<f64> {
    SmoothnessBudget { m: f64::INFINITY, l: 2 }
}

#[test]
fn zero_signal_has_zero_spectrum() {
    let spec = forward_transform(&plain_grid(|_| 0.0));
    assert!(spec.coeffs.iter().all(|c| c.norm() == 0.0));
    assert!(estimate_decay_order(&spec).is_infinite());
}

#[test]
fn gaussian_spectrum_matches_analytic_pair() {
    let spec = forward_transform(&plain_grid(unit_gaussian));
    assert!((spec.domega - 2.0 * PI / 40.0).abs() < 1e-15);
    for i in 0..spec.len() {
        let w = spec.omega(i);
        if w.abs() <= 10.0 {
            let c = spec.coeffs[i];
            assert!((c.re - (-0.5 * w * w).exp()).abs() <= 1e-8, "w={w}");
            assert!(c.im.abs() <= 1e-12, "w={w}");
        }
    }
}

#[test]
fn shifted_bump_gains_linear_phase() {
    let xc = 1.3;
    let spec = forward_transform(&plain_grid(|x| unit_gaussian(x - xc)));
    for i in 0..spec.len() {
        let w = spec.omega(i);
        if w.abs() <= 8.0 {
            let expect = Complex::from_polar((-0.5 * w * w).exp(), -w * xc);
            assert!((spec.coeffs[i] - expect).norm() <= 1e-8, "w={w}");
        }
    }
}

#[test]
fn inverse_round_trips() {
    let sig = grid_of(s3);
    let back = inverse_transform(&forward_transform(&sig)).unwrap();
    assert_eq!(back.x0, sig.x0);
    assert!(sup_diff(&back.samples, &sig.samples) <= 1e-12 * sig.scale());
}

#[test]
fn gaussian_spectrum_inverts_to_gaussian() {
    let n = 2048;
    let dx = 40.0 / n as f64;
    let domega = 2.0 * PI / (n as f64 * dx);
    let coeffs = (0..n)
        .map(|i| {
            let w = (i as f64 - (n / 2) as f64) * domega;
            Complex::new((-0.5 * w * w).exp(), 0.0)
        })
        .collect();
    let spec = Spectrum { domega, x0: -20.0, dx, coeffs };
    let sig = inverse_transform(&spec).unwrap();
    for j in 0..n {
        assert!((sig.samples[j] - unit_gaussian(sig.x(j))).abs() <= 1e-12);
    }
}

#[test]
fn asymmetric_spectrum_is_rejected() {
    let mut spec = forward_transform(&plain_grid(unit_gaussian));
    let i = spec.len() / 2 + 5;
    spec.coeffs[i] += Complex::new(0.0, 0.1);
    assert!(matches!(inverse_transform(&spec), Err(Error::InvalidInput(_))));
}

#[test]
fn fractional_derivative_of_order_zero_is_identity() {
    let sig = grid_of(s2);
    let d = fractional_derivative(&sig, 0.0).unwrap();
    assert!(sup_diff(&d.samples, &sig.samples) <= 1e-12 * sig.scale());
}

#[test]
fn first_derivative_of_gaussian() {
    let sig = plain_grid(unit_gaussian);
    let d = fractional_derivative(&sig, 1.0).unwrap();
    for j in 0..sig.len() {
        let x = sig.x(j);
        if x.abs() <= 6.0 {
            let expect = -x * unit_gaussian(x);
            assert!((d.samples[j] - expect).abs() <= 1e-6 * expect.abs().max(1e-9), "x={x}");
        }
    }
}

#[test]
fn fractional_semigroup() {
    let sig = grid_of(s2);
    let half = fractional_derivative(&sig, 0.5).unwrap();
    let quarter = fractional_derivative(&fractional_derivative(&sig, 0.25).unwrap(), 0.25).unwrap();
    assert!(sup_diff(&half.samples, &quarter.samples) <= 1e-8 * sup(&half.samples));
}

#[test]
fn rough_signal_violates_smoothness() {
    let sig = grid_of(tent);
    let m = estimate_decay_order(&forward_transform(&sig));
    // aliasing of the kink flattens the sampled spectrum near Nyquist
    assert!(m > 1.3 && m < 2.3, "tent decay order {m}");
    assert!(fractional_derivative(&sig, 0.5).is_ok());
    assert!(matches!(fractional_derivative(&sig, 1.5), Err(Error::SmoothnessViolation { .. })));
    assert!(matches!(fractional_derivative(&sig, -0.5), Err(Error::InvalidParams(_))));
}

#[test]
fn budget_bookkeeping() {
    let spec = forward_transform(&grid_of(tent));
    let budget = SmoothnessBudget::estimate_for(&spec, 1, 0);
    assert_eq!(budget.l, 1);
    assert!(budget.admits(0.0, 1, 0) == (budget.m > 3.0));
    assert!(!budget.admits(0.0, 3, 0));
    let sig = grid_of(tent);
    let ladder = ladder();
    let err = synth_field(&sig, &gaussian_params(), 1, &ladder, &budget).unwrap_err();
    assert!(matches!(err, Error::SmoothnessViolation { .. }), "{err}");
    let err = synth_field(&grid_of(s1), &gaussian_params(), 3, &ladder, &SmoothnessBudget { m: f64::INFINITY, l: 1 }).unwrap_err();
    assert!(matches!(err, Error::InvalidConfig(_)));
}

#[test]
fn gaussian_rows_match_quadrature_convolution() {
    let sig = grid_of(s2);
    let sigmas = [0.0, 0.5, 1.0, 2.0];
    let field = synth_field(&sig, &gaussian_params(), 0, &sigmas, &open_budget()).unwrap();
    let dx = sig.dx;
    for (i, &s) in sigmas.iter().enumerate().skip(1) {
        for j in (0..sig.len()).step_by(37) {
            let x = sig.x(j);
            let direct: f64 = (0..sig.len())
                .map(|l| {
                    let u = (x - sig.x(l)) / s;
                    sig.samples[l] * (-0.5 * u * u).exp() / (s * (2.0 * PI).sqrt())
                })
                .sum::<f64>()
                * dx;
            assert!((field.at(i, j) - direct).abs() <= 1e-6, "sigma={s} x={x}");
        }
    }
    assert!(sup_diff(field.row(0), &sig.samples) <= 1e-12);
}

#[test]
fn mirror_query_is_even() {
    let sig = grid_of(s3);
    let params = KernelParams::new(0.4, 1.0, 0.7).unwrap();
    let ladder = ladder();
    let space = ScaleSpace::new(&sig, params).unwrap();
    let field = space.synth(1, 0, &ladder).unwrap();
    let level_sigma = space.synth(1, 1, &ladder).unwrap();
    for &s in &ladder[1..] {
        assert_eq!(field.query(-s).unwrap(), field.query(s).unwrap());
        let up = level_sigma.query(s).unwrap();
        let down = level_sigma.query(-s).unwrap();
        assert!(up.iter().zip(&down).all(|(a, b)| *a == -*b));
    }
    assert!(field.query(0.123456).is_none());
}

#[test]
fn point_evaluation_matches_rows() {
    let sig = grid_of(s2);
    let space = ScaleSpace::new(&sig, KernelParams::new(0.3, 1.0, 0.6).unwrap()).unwrap();
    for d in [Deriv::new(0, 0, 0), Deriv::new(1, 0, 0), Deriv::new(1, 1, 0), Deriv::new(2, 0, 1)] {
        let row = space.row(0.8, d);
        let scale = sup(&row);
        for j in (0..sig.len()).step_by(97) {
            let v = space.eval(sig.x(j), 0.8, d);
            assert!((v - row[j]).abs() <= 1e-11 * scale, "{d:?} j={j}");
        }
    }
}

#[test]
fn top_row_vanishes_beyond_decay_scale() {
    let sig = grid_of(s2);
    let params = KernelParams::new(0.0, 1.0, 0.5).unwrap();
    let space = ScaleSpace::new(&sig, params).unwrap();
    let max_psi = sup(&space.row(0.0, Deriv::new(0, 0, 0)));
    let eps = 1e-6 * max_psi;
    let w_min = space.spectrum.domega;
    let sigma_max = (2.0 * (max_psi / eps).ln() / (w_min * w_min)).sqrt();
    let top = space.row(sigma_max, Deriv::new(0, 0, 0));
    assert!(sup(&top) < eps, "sup {:e} vs {eps:e} at sigma {sigma_max}", sup(&top));
}

#[test]
fn pde_residual_of_zero_signal_is_zero() {
    let field = synth_field(&grid_of(|_| 0.0), &gaussian_params(), 0, &uniform_sigma(1.0, 0.1), &open_budget()).unwrap();
    assert_eq!(pde_residual(&field).unwrap().max(), 0.0);
}

/// Residual of S1 on `[0, 3]` restricted to `σ ≥ 0.5`, where the field is
/// resolved by the grid.
fn interior_residual(dx_scale: usize, h: f64) -> f64 {
    let n = N * dx_scale;
    let step = dx() / dx_scale as f64;
    let x0 = -2.0 * WINDOW;
    let sig = SignalGrid::new(x0, step, (0..n).map(|j| s1(x0 + j as f64 * step)).collect()).unwrap();
    let grid = uniform_sigma(3.0, h);
    let field = synth_field(&sig, &gaussian_params(), 0, &grid, &open_budget()).unwrap();
    let res: Residual<f64> = pde_residual(&field).unwrap();
    let first = grid.iter().position(|&s| s >= 0.5).unwrap() - 1;
    res.values[first * res.cols..].iter().fold(0.0, |m, v| m.max(*v))
}

#[test]
fn pde_residual_is_second_order() {
    let coarse = interior_residual(1, 0.05);
    let fine = interior_residual(2, 0.025);
    assert!(coarse <= 1e-3, "coarse residual {coarse:e}");
    assert!(coarse / fine >= 3.0, "ratio {}", coarse / fine);
}

#[test]
fn aliasing_guard() {
    let n = 256;
    let sig = SignalGrid::new(0.0, 1.0, (0..n).map(|j| if j % 2 == 0 { 1.0 } else { -1.0 } * (j as f64 / 20.0).sin().powi(2)).collect()).unwrap();
    let space = ScaleSpace::new(&sig, gaussian_params()).unwrap();
    let budget = SmoothnessBudget { m: 100.0, l: 1 };
    let err = synth_checked(&space, 0, 0, &[0.0, 1e-3, 1.0], &budget).unwrap_err();
    assert!(matches!(err, Error::GridTooCoarse(_)));
    assert!(synth_checked(&space, 0, 0, &[0.0, 1.0, 2.0], &budget).is_ok());
}

#[test]
fn sigma_grid_validation() {
    let sig = grid_of(s1);
    let space = ScaleSpace::new(&sig, gaussian_params()).unwrap();
    assert!(matches!(space.synth(0, 0, &[0.5, 1.0]), Err(Error::InvalidConfig(_))));
    assert!(matches!(space.synth(0, 0, &[0.0, 1.0, 1.0]), Err(Error::InvalidConfig(_))));
    assert!(geometric_sigma_ladder(0.0, 2.0, 8).is_err());
    assert!(geometric_sigma_ladder(1.0, 1.0, 8).is_err());
    let l = geometric_sigma_ladder(0.5, 2.0, 4).unwrap();
    assert_eq!(l, vec![0.0, 0.5, 1.0, 2.0]);
    assert!(SignalGrid::new(0.0, 1.0, vec![0.0; 24]).is_err());
    assert!(SignalGrid::new(0.0, -1.0, vec![0.0; 32]).is_err());
}

fn superlevel_box(field: &scalespace::FieldGrid<f64>, eps: f64) -> Option<(usize, usize, usize)> {
    let mut lo = usize::MAX;
    let mut hi = 0;
    let mut top = 0;
    for i in 0..field.rows() {
        for (j, v) in field.row(i).iter().enumerate() {
            if v.abs() >= eps {
                lo = lo.min(j);
                hi = hi.max(j);
                top = top.max(i);
            }
        }
    }
    (lo <= hi).then_some((lo, hi, top))
}

/// Geometric rows reaching far beyond the standard ladder.
fn tall_ladder() -> Vec<f64> {
    geometric_sigma_ladder(dx(), 2f64.sqrt(), 36).unwrap()
}

#[test]
fn significant_field_is_localized() {
    let sig = grid_of(s2);
    let tall = tall_ladder();
    let cases = [(0.0, 0.0, 1.0, 1u32), (1.0, 1.0, 0.0, 0), (2.0, 0.0, 1.0, 1), (0.5, 0.0, 1.0, 1), (0.5, 1.0, 1.0, 2)];
    for (p, alpha, beta, k) in cases {
        let space = ScaleSpace::new(&sig, KernelParams::new(alpha, beta, p).unwrap()).unwrap();
        let field = space.synth(k, 0, &tall).unwrap();
        let eps = 1e-3 * field.scale();
        let (lo, hi, top) = superlevel_box(&field, eps).unwrap();
        assert!(lo > 0 && hi < field.cols() - 1, "p={p} k={k}: columns {lo}..{hi}");
        assert!(top < field.rows() - 1, "p={p} k={k}: rows up to {top}");
    }
}

#[test]
fn gaussian_mean_survives_on_periodic_grid() {
    // with p = 0 and k = 0 the zero-frequency bin is never damped, so the
    // superlevel set is unbounded in sigma on a periodic lattice
    let sig = grid_of(s2);
    let field = ScaleSpace::new(&sig, gaussian_params()).unwrap().synth(0, 0, &tall_ladder()).unwrap();
    let mean = sig.samples.iter().sum::<f64>() / sig.len() as f64;
    let top = field.row(field.rows() - 1);
    assert!(top.iter().all(|v| (v - mean).abs() < 1e-6 * field.scale()));
    assert!(mean > 1e-3 * field.scale());
}

#[test]
fn significant_stack_is_uniform_in_p() {
    let sig = grid_of(s3);
    let tall = tall_ladder();
    let base = ScaleSpace::new(&sig, KernelParams::new(0.0, 1.0, 0.0).unwrap()).unwrap();
    let fields: Vec<_> = (0..=8)
        .map(|i| base.with_params(KernelParams::new(0.0, 1.0, 0.125 * i as f64).unwrap()).unwrap().synth(1, 0, &tall).unwrap())
        .collect();
    let eps = 1e-3 * fields.iter().fold(0.0, |m: f64, f| m.max(f.scale()));
    let boxes: Vec<_> = fields.iter().filter_map(|f| superlevel_box(f, eps)).collect();
    assert_eq!(boxes.len(), fields.len());
    let lo = boxes.iter().map(|b| b.0).min().unwrap();
    let hi = boxes.iter().map(|b| b.1).max().unwrap();
    let top = boxes.iter().map(|b| b.2).max().unwrap();
    assert!(lo > 0 && hi < N - 1 && top < tall.len() - 1, "box {lo}..{hi} up to row {top}");
}

#[test]
fn field_stack_shapes() {
    let sig = grid_of(s2);
    let ladder = ladder();
    let stack = FieldStack::build(&sig, &gaussian_params(), 1, &ladder, &open_budget()).unwrap();
    assert_eq!(stack.level.k, 1);
    assert_eq!(stack.level_sigma.sigma_order, 1);
    assert_eq!(stack.next.k, 2);
    assert_eq!(stack.lower.as_ref().unwrap().k, 0);
    let stack0 = FieldStack::build(&sig, &gaussian_params(), 0, &ladder, &open_budget()).unwrap();
    assert!(stack0.lower.is_none());
}

#[test]
fn single_precision_field() {
    let n = 1024;
    let dx = 80.0f32 / n as f32;
    let samples: Vec<f32> = (0..n).map(|j| s2((-40.0 + j as f32 * dx) as f64) as f32).collect();
    let sig = SignalGrid::new(-40.0f32, dx, samples).unwrap();
    let params = KernelParams::new(0.0f32, 1.0, 0.0).unwrap();
    let field = ScaleSpace::new(&sig, params).unwrap().synth(0, 0, &[0.0f32, 0.5, 1.0]).unwrap();
    let back: Vec<f64> = field.row(0).iter().map(|&v| v as f64).collect();
    let orig: Vec<f64> = sig.samples.iter().map(|&v| v as f64).collect();
    assert!(sup_diff(&back, &orig) < 1e-5);
}
