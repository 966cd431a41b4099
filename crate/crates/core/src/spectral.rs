//! Discrete Fourier machinery for scale-space fields.
//!
//! Transform convention: `F(ω) = ∫ f(x) e^{-iωx} dx`, approximated by
//! `dx Σ f_n e^{-iω(x0 + n dx)}` on the bins `ω_m = m Δω`, `m ∈ [-N/2, N/2)`.
//! The Nyquist bin of every multiplier is replaced by its real part, which is
//! the symmetric average of `±ω_N` and keeps real inputs real.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{kernel_multiplier, KernelParams};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct SignalGrid<T> {
    pub x0: T,
    pub dx: T,
    pub samples: Vec<T>,
}

impl<T: Real> SignalGrid<T> {
    pub fn new(x0: T, dx: T, samples: Vec<T>) -> Result<Self> {
        let grid = Self { x0, dx, samples };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.samples.len();
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!("sample count {n} must be a power of two >= 16")));
        }
        if !(self.dx > T::zero()) || !self.dx.is_finite() || !self.x0.is_finite() {
            return Err(Error::InvalidInput("axis must have finite x0 and dx > 0".into()));
        }
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn x(&self, j: usize) -> T {
        self.x0 + T::of_usize(j) * self.dx
    }

    pub fn scale(&self) -> T {
        max_abs(&self.samples)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    pub domega: T,
    pub x0: T,
    pub dx: T,
    /// Coefficient `i` belongs to `m = i - N/2`.
    pub coeffs: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Bin number `m` of coefficient index `i`.
    pub fn bin(&self, i: usize) -> i64 {
        i as i64 - (self.len() / 2) as i64
    }

    pub fn omega(&self, i: usize) -> T {
        T::from_i64(self.bin(i)).unwrap() * self.domega
    }

    pub fn nyquist(&self) -> T {
        T::of_usize(self.len() / 2) * self.domega
    }
}

pub(crate) fn max_abs<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

/// `e^{-iω_m x0}` with the phase reduced modulo one turn before the sine and cosine.
fn shift_phase<T: Real>(m: i64, x0: T, n: usize, dx: T) -> Complex<T> {
    let turns = T::from_i64(m).unwrap() * x0 / (T::of_usize(n) * dx);
    let frac = turns - turns.round();
    let theta = -T::lit(2.0) * T::PI() * frac;
    Complex::new(theta.cos(), theta.sin())
}

pub fn forward_transform<T: Real>(sig: &SignalGrid<T>) -> Spectrum<T> {
    let n = sig.len();
    let mut buf: Vec<Complex<T>> = sig.samples.iter().map(|&v| Complex::new(v, T::zero())).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = (n / 2) as i64;
    let mut coeffs: Vec<Complex<T>> = (0..n)
        .map(|i| {
            let m = i as i64 - half;
            let k = m.rem_euclid(n as i64) as usize;
            buf[k] * sig.dx * shift_phase(m, sig.x0, n, sig.dx)
        })
        .collect();
    // real input: drop the round-off asymmetry between ω and -ω
    let two = T::lit(2.0);
    for i in n / 2..n {
        let j = n - i;
        let sym = (coeffs[i] + coeffs[j].conj()) / two;
        coeffs[i] = sym;
        coeffs[j] = sym.conj();
    }
    Spectrum { domega: T::lit(2.0) * T::PI() / (T::of_usize(n) * sig.dx), x0: sig.x0, dx: sig.dx, coeffs }
}

/// Places centred coefficients times `mult` into FFT order, undoing the axis phase.
fn to_fft_order<T: Real>(spec: &Spectrum<T>, mult: impl Fn(usize) -> Complex<T>) -> Vec<Complex<T>> {
    let n = spec.len();
    let half = (n / 2) as i64;
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n];
    for (i, c) in spec.coeffs.iter().enumerate() {
        let m = i as i64 - half;
        let k = m.rem_euclid(n as i64) as usize;
        buf[k] = *c * mult(i) * shift_phase(m, spec.x0, n, spec.dx).conj();
    }
    buf
}

/// Inverse transform returning the real part and the imaginary residue in
/// excess of the FFT round-off bound `ε log2(N) Σ|c|`.
fn inverse_with_residue<T: Real>(
    spec: &Spectrum<T>,
    fft: &Arc<dyn Fft<T>>,
    mult: impl Fn(usize) -> Complex<T>,
) -> (Vec<T>, T) {
    let mut buf = to_fft_order(spec, mult);
    let norm = T::one() / (T::of_usize(spec.len()) * spec.dx);
    let mass = buf.iter().fold(T::zero(), |s, c| s + c.norm()) * norm;
    let roundoff = T::epsilon() * T::lit(4.0) * T::of_usize(spec.len()).log2() * mass;
    fft.process(&mut buf);
    let mut residue = T::zero();
    let values = buf
        .iter()
        .map(|c| {
            residue = residue.max((c.im * norm).abs());
            c.re * norm
        })
        .collect();
    (values, (residue - roundoff).max(T::zero()))
}

pub fn inverse_transform<T: Real>(spec: &Spectrum<T>) -> Result<SignalGrid<T>> {
    let fft = FftPlanner::new().plan_fft_inverse(spec.len());
    let (samples, residue) = inverse_with_residue(spec, &fft, |_| Complex::new(T::one(), T::zero()));
    let scale = max_abs(&samples);
    if residue > T::lit(1e-10) * scale.max(T::min_positive_value()) {
        return Err(Error::InvalidInput(format!(
            "spectrum is not conjugate-symmetric (imaginary residue {residue:e})"
        )));
    }
    SignalGrid::new(spec.x0, spec.dx, samples)
}

/// `cos(pπ/2)` and `sin(pπ/2)`, exact for integer `p`.
fn branch<T: Real>(p: T) -> (T, T) {
    if p == p.round() {
        match (p.as_f64() as i64).rem_euclid(4) {
            0 => (T::one(), T::zero()),
            1 => (T::zero(), T::one()),
            2 => (-T::one(), T::zero()),
            _ => (T::zero(), -T::one()),
        }
    } else {
        let t = p * T::FRAC_PI_2();
        (t.cos(), t.sin())
    }
}

/// Fourier fractional derivative: inverse transform of `(iω)^p F`.
pub fn fractional_derivative<T: Real>(sig: &SignalGrid<T>, p: T) -> Result<SignalGrid<T>> {
    sig.validate()?;
    if !(p >= T::zero()) || !p.is_finite() {
        return Err(Error::InvalidParams(format!("order p = {p} must be a finite nonnegative number")));
    }
    let spec = forward_transform(sig);
    let m = estimate_decay_order(&spec);
    if !(m > p + T::one()) {
        return Err(Error::SmoothnessViolation { m: m.as_f64(), required: (p + T::one()).as_f64() });
    }
    let (c, s) = branch(p);
    let params = KernelParams { alpha: s, beta: c, p };
    let fft = FftPlanner::new().plan_fft_inverse(spec.len());
    let (samples, _) = inverse_with_residue(&spec, &fft, |i| {
        let h = kernel_multiplier(&params, spec.omega(i));
        if i == 0 { Complex::new(h.re, T::zero()) } else { h }
    });
    SignalGrid::new(sig.x0, sig.dx, samples)
}

/// Empirical decay order `m` of `|F(ω)| ~ |ω|^{-m}` over the top octave.
///
/// The octave is split into eight bands; a line is fitted to the log of each
/// band maximum against the log of the band centre. Bands at the round-off
/// floor carry no information; when fewer than three bands rise above it the
/// spectrum decays faster than any power and `m` is infinite.
pub fn estimate_decay_order<T: Real>(spec: &Spectrum<T>) -> T {
    let n = spec.len();
    let peak = spec.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    if peak == T::zero() {
        return T::infinity();
    }
    let floor = peak * T::lit(1e-13);
    let half = n / 2;
    let lo = half / 2;
    let bands = 8usize;
    let width = ((half - lo) / bands).max(1);
    let mut pts = Vec::new();
    for b in 0..bands {
        let start = lo + b * width;
        let end = (start + width).min(half);
        if start >= end {
            break;
        }
        let mut top = T::zero();
        for m in start..end {
            // bins m and -m
            let a = spec.coeffs[half + m].norm();
            let b2 = spec.coeffs[half - m].norm();
            top = top.max(a).max(b2);
        }
        if top > floor {
            let centre = T::of_usize(start + end) * T::lit(0.5) * spec.domega;
            pts.push((centre.ln(), top.ln()));
        }
    }
    if pts.len() < 3 {
        return T::infinity();
    }
    let k = T::of_usize(pts.len());
    let mx = pts.iter().fold(T::zero(), |s, p| s + p.0) / k;
    let my = pts.iter().fold(T::zero(), |s, p| s + p.1) / k;
    let sxy = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.1 - my));
    let sxx = pts.iter().fold(T::zero(), |s, p| s + (p.0 - mx) * (p.0 - mx));
    -(sxy / sxx)
}

/// Decay order `m` of the signal spectrum and derivative budget `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothnessBudget<T> {
    pub m: T,
    pub l: u32,
}

impl<T: Real> SmoothnessBudget<T> {
    pub fn estimate(spec: &Spectrum<T>, l: u32) -> Self {
        Self { m: estimate_decay_order(spec), l }
    }

    /// Budget large enough for `k` x-derivatives and `n` σ-derivatives.
    pub fn estimate_for(spec: &Spectrum<T>, k: u32, n: u32) -> Self {
        Self::estimate(spec, (2 * n + k).div_ceil(2))
    }

    pub fn required(&self, p: T) -> T {
        p + T::one() + T::lit(2.0) * T::from_u32(self.l).unwrap()
    }

    pub fn admits(&self, p: T, k: u32, n: u32) -> bool {
        self.m > self.required(p) && 2 * n + k <= 2 * self.l
    }

    fn check(&self, p: T, k: u32, n: u32) -> Result<()> {
        if 2 * n + k > 2 * self.l {
            return Err(Error::InvalidConfig(format!(
                "derivative orders (k = {k}, n = {n}) exceed the budget l = {}",
                self.l
            )));
        }
        if !(self.m > self.required(p)) {
            return Err(Error::SmoothnessViolation { m: self.m.as_f64(), required: self.required(p).as_f64() });
        }
        Ok(())
    }
}

/// Derivative orders of a field query: `∂x^x ∂σ^sigma ∂p^p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Deriv {
    pub x: u32,
    pub sigma: u32,
    pub p: u32,
}

impl Deriv {
    pub const fn new(x: u32, sigma: u32, p: u32) -> Self {
        Self { x, sigma, p }
    }
}

/// `∂σ^b e^{-ω²σ²/2}`.
fn gauss_sigma_derivative<T: Real>(omega: T, sigma: T, b: u32) -> T {
    let w2 = omega * omega;
    let g = (-(w2 * sigma * sigma) * T::lit(0.5)).exp();
    let poly = match b {
        0 => T::one(),
        1 => -w2 * sigma,
        2 => w2 * w2 * sigma * sigma - w2,
        3 => -(w2 * w2 * w2) * sigma * sigma * sigma + T::lit(3.0) * w2 * w2 * sigma,
        _ => panic!("sigma derivative order {b} unsupported"),
    };
    poly * g
}

/// `(iω)^k`.
fn i_omega_pow<T: Real>(omega: T, k: u32) -> Complex<T> {
    let mag = omega.powi(k as i32);
    match k % 4 {
        0 => Complex::new(mag, T::zero()),
        1 => Complex::new(T::zero(), mag),
        2 => Complex::new(-mag, T::zero()),
        _ => Complex::new(T::zero(), -mag),
    }
}

/// A signal spectrum paired with kernel weights: the continuous field
/// `∂x^k Ψ(x, σ)` as a trigonometric sum, sampled by FFT on grids or summed
/// directly at arbitrary points.
#[derive(Debug, Clone)]
pub struct ScaleSpace<T> {
    pub spectrum: Spectrum<T>,
    pub params: KernelParams<T>,
}

impl<T: Real> ScaleSpace<T> {
    pub fn new(sig: &SignalGrid<T>, params: KernelParams<T>) -> Result<Self> {
        sig.validate()?;
        params.validate()?;
        Ok(Self { spectrum: forward_transform(sig), params })
    }

    pub fn from_spectrum(spectrum: Spectrum<T>, params: KernelParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Self { spectrum, params })
    }

    pub fn with_params(&self, params: KernelParams<T>) -> Result<Self> {
        params.validate()?;
        Ok(Self { spectrum: self.spectrum.clone(), params })
    }

    pub fn n(&self) -> usize {
        self.spectrum.len()
    }

    pub fn x0(&self) -> T {
        self.spectrum.x0
    }

    pub fn dx(&self) -> T {
        self.spectrum.dx
    }

    /// Full multiplier of coefficient `i` for the requested derivative orders.
    fn multiplier(&self, i: usize, sigma: T, d: Deriv) -> Complex<T> {
        let w = self.spectrum.omega(i);
        let mut h = kernel_multiplier(&self.params, w) * i_omega_pow(w, d.x) * gauss_sigma_derivative(w, sigma, d.sigma);
        if d.p > 0 {
            let lw = if w == T::zero() { T::zero() } else { w.abs().ln() };
            h = h * lw.powi(d.p as i32);
        }
        if i == 0 {
            h = Complex::new(h.re, T::zero());
        }
        h
    }

    fn plan(&self) -> Arc<dyn Fft<T>> {
        FftPlanner::new().plan_fft_inverse(self.n())
    }

    /// One σ row on the signal's x grid, with the imaginary residue.
    fn row_with(&self, fft: &Arc<dyn Fft<T>>, sigma: T, d: Deriv) -> (Vec<T>, T) {
        inverse_with_residue(&self.spectrum, fft, |i| self.multiplier(i, sigma, d))
    }

    pub fn row(&self, sigma: T, d: Deriv) -> Vec<T> {
        self.row_with(&self.plan(), sigma, d).0
    }

    /// Field on `sigma_grid × x-grid`; rows are synthesised in parallel.
    pub fn synth(&self, k: u32, sigma_order: u32, sigma_grid: &[T]) -> Result<FieldGrid<T>> {
        validate_sigma_grid(sigma_grid)?;
        let fft = self.plan();
        let d = Deriv::new(k, sigma_order, 0);
        let rows: Vec<(Vec<T>, T)> = sigma_grid.par_iter().map(|&s| self.row_with(&fft, s, d)).collect();
        let n = self.n();
        let mut values = Vec::with_capacity(n * sigma_grid.len());
        for (i, (row, residue)) in rows.into_iter().enumerate() {
            let scale = max_abs(&row);
            if residue > T::lit(1e-10) * scale && residue > T::lit(1e-300).max(T::min_positive_value()) {
                return Err(Error::InvalidInput(format!(
                    "row {i} has imaginary residue {residue:e} against scale {scale:e}"
                )));
            }
            values.extend(row);
        }
        Ok(FieldGrid {
            x0: self.x0(),
            dx: self.dx(),
            n,
            sigma_grid: sigma_grid.to_vec(),
            k,
            sigma_order,
            params: self.params,
            values,
        })
    }

    /// Direct evaluation of several derivatives at one point `(x, σ)`.
    pub fn eval_many(&self, x: T, sigma: T, ds: &[Deriv]) -> Vec<T> {
        let n = self.n();
        let two = T::lit(2.0);
        let mut out = vec![T::zero(); ds.len()];
        // bins ±m are conjugate, so positive bins count twice; DC and Nyquist once
        for i in 0..n {
            let m = self.spectrum.bin(i);
            if m < 0 && i != 0 {
                continue;
            }
            let f = self.spectrum.coeffs[i];
            if f.re == T::zero() && f.im == T::zero() {
                continue;
            }
            let fe = f * shift_phase(m, x, n, self.dx()).conj();
            let weight = if m > 0 { two } else { T::one() };
            for (o, d) in out.iter_mut().zip(ds) {
                *o = *o + weight * (self.multiplier(i, sigma, *d) * fe).re;
            }
        }
        let norm = T::one() / (T::of_usize(n) * self.dx());
        out.iter().map(|v| *v * norm).collect()
    }

    pub fn eval(&self, x: T, sigma: T, d: Deriv) -> T {
        self.eval_many(x, sigma, &[d])[0]
    }
}

pub(crate) fn validate_sigma_grid<T: Real>(sigma_grid: &[T]) -> Result<()> {
    if sigma_grid.is_empty() || sigma_grid[0] != T::zero() {
        return Err(Error::InvalidConfig("sigma grid must start at 0".into()));
    }
    for w in sigma_grid.windows(2) {
        if !(w[1] > w[0]) || !w[1].is_finite() {
            return Err(Error::InvalidConfig("sigma grid must be strictly ascending and finite".into()));
        }
    }
    Ok(())
}

/// `[0, σ_min, σ_min r, …]` with `count` rows in total.
pub fn geometric_sigma_ladder<T: Real>(sigma_min: T, ratio: T, count: usize) -> Result<Vec<T>> {
    if count < 2 || !(sigma_min > T::zero()) || !(ratio > T::one()) {
        return Err(Error::InvalidConfig("ladder needs count >= 2, sigma_min > 0, ratio > 1".into()));
    }
    let mut out = vec![T::zero()];
    let mut s = sigma_min;
    for _ in 1..count {
        out.push(s);
        s = s * ratio;
    }
    Ok(out)
}

/// Sampled `∂x^k ∂σ^{sigma_order} Ψ` over `sigma_grid × {x0 + j dx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid<T> {
    pub x0: T,
    pub dx: T,
    pub n: usize,
    pub sigma_grid: Vec<T>,
    pub k: u32,
    pub sigma_order: u32,
    pub params: KernelParams<T>,
    /// Row-major `[sigma][x]`.
    pub values: Vec<T>,
}

impl<T: Real> FieldGrid<T> {
    pub fn rows(&self) -> usize {
        self.sigma_grid.len()
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn x(&self, j: usize) -> T {
        self.x0 + T::of_usize(j) * self.dx
    }

    pub fn scale(&self) -> T {
        max_abs(&self.values)
    }

    /// Row at signed `σ`; negative values use the mirror `Ψ(x, -σ) = ±Ψ(x, σ)`,
    /// with the sign set by the parity of the σ-derivative order.
    pub fn query(&self, sigma: T) -> Option<Vec<T>> {
        let target = sigma.abs();
        let i = self.sigma_grid.iter().position(|&s| s == target)?;
        let flip = sigma < T::zero() && self.sigma_order % 2 == 1;
        Some(self.row(i).iter().map(|&v| if flip { -v } else { v }).collect())
    }
}

pub fn synth_field<T: Real>(
    sig: &SignalGrid<T>,
    params: &KernelParams<T>,
    k: u32,
    sigma_grid: &[T],
    budget: &SmoothnessBudget<T>,
) -> Result<FieldGrid<T>> {
    let space = ScaleSpace::new(sig, *params)?;
    synth_checked(&space, k, 0, sigma_grid, budget)
}

/// Synthesis behind the budget and aliasing checks.
pub fn synth_checked<T: Real>(
    space: &ScaleSpace<T>,
    k: u32,
    sigma_order: u32,
    sigma_grid: &[T],
    budget: &SmoothnessBudget<T>,
) -> Result<FieldGrid<T>> {
    validate_sigma_grid(sigma_grid)?;
    budget.check(space.params.p, k, sigma_order)?;
    check_aliasing(space, k, sigma_grid)?;
    space.synth(k, sigma_order, sigma_grid)
}

fn check_aliasing<T: Real>(space: &ScaleSpace<T>, k: u32, sigma_grid: &[T]) -> Result<()> {
    let Some(&s1) = sigma_grid.get(1) else { return Ok(()) };
    let wn = space.spectrum.nyquist();
    let attenuation = (-(wn * wn * s1 * s1) * T::lit(0.5)).exp();
    if attenuation <= T::lit(0.99) {
        return Ok(());
    }
    let d = Deriv::new(k, 0, 0);
    let spec = &space.spectrum;
    let mag: Vec<T> = (0..spec.len()).map(|i| (space.multiplier(i, T::zero(), d) * spec.coeffs[i]).norm()).collect();
    let peak = max_abs(&mag);
    let n = spec.len();
    let edge = (n / 64).max(1);
    let top = mag[..edge].iter().chain(mag[n - edge..].iter()).fold(T::zero(), |m, v| m.max(*v));
    if peak > T::zero() && top > T::lit(1e-8) * peak {
        return Err(Error::GridTooCoarse(format!(
            "smallest positive sigma {s1} leaves {:.3} of the Nyquist band and the spectrum is not negligible there",
            attenuation.as_f64()
        )));
    }
    Ok(())
}

/// Row-major matrix of residual magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual<T> {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<T>,
}

impl<T: Real> Residual<T> {
    pub fn max(&self) -> T {
        max_abs(&self.values)
    }
}

/// `|Ψ_σ - σ Ψ_xx| / max|Ψ|` on interior nodes by second-order central differences
/// (three-point nonuniform stencil in σ).
pub fn pde_residual<T: Real>(field: &FieldGrid<T>) -> Result<Residual<T>> {
    let (r, n) = (field.rows(), field.cols());
    if r < 3 || n < 3 {
        return Err(Error::GridTooCoarse(format!("need at least 3x3 nodes, have {r}x{n}")));
    }
    if field.sigma_order != 0 {
        return Err(Error::InvalidInput("residual is defined for sigma_order = 0 fields".into()));
    }
    let scale = field.scale();
    let inv_dx2 = T::one() / (field.dx * field.dx);
    let two = T::lit(2.0);
    let mut values = Vec::with_capacity((r - 2) * (n - 2));
    for i in 1..r - 1 {
        let (s0, s1, s2) = (field.sigma_grid[i - 1], field.sigma_grid[i], field.sigma_grid[i + 1]);
        let (h1, h2) = (s1 - s0, s2 - s1);
        let (a, b, c) = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)));
        for j in 1..n - 1 {
            let ds = a * field.at(i - 1, j) + b * field.at(i, j) + c * field.at(i + 1, j);
            let dxx = (field.at(i, j - 1) - two * field.at(i, j) + field.at(i, j + 1)) * inv_dx2;
            let res = (ds - s1 * dxx).abs();
            values.push(if scale > T::zero() { res / scale } else { T::zero() });
        }
    }
    Ok(Residual { rows: r - 2, cols: n - 2, values })
}

/// The fields needed by contour orientation and genericity checks at order `k`:
/// `Ψ_{kx}`, `Ψ_{kxσ}`, `Ψ_{(k+1)x}` and, for `k ≥ 1`, `Ψ_{(k-1)x}`.
#[derive(Debug, Clone)]
pub struct FieldStack<T> {
    pub space: ScaleSpace<T>,
    pub k: u32,
    pub level: FieldGrid<T>,
    pub level_sigma: FieldGrid<T>,
    pub next: FieldGrid<T>,
    pub lower: Option<FieldGrid<T>>,
}

impl<T: Real> FieldStack<T> {
    pub fn build(
        sig: &SignalGrid<T>,
        params: &KernelParams<T>,
        k: u32,
        sigma_grid: &[T],
        budget: &SmoothnessBudget<T>,
    ) -> Result<Self> {
        let space = ScaleSpace::new(sig, *params)?;
        Self::from_space(space, k, sigma_grid, budget)
    }

    pub fn from_space(space: ScaleSpace<T>, k: u32, sigma_grid: &[T], budget: &SmoothnessBudget<T>) -> Result<Self> {
        let level = synth_checked(&space, k, 0, sigma_grid, budget)?;
        let level_sigma = synth_checked(&space, k, 1, sigma_grid, budget)?;
        let next = synth_checked(&space, k + 1, 0, sigma_grid, budget)?;
        let lower = if k >= 1 { Some(synth_checked(&space, k - 1, 0, sigma_grid, budget)?) } else { None };
        Ok(Self { space, k, level, level_sigma, next, lower })
    }
}
