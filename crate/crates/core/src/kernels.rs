//! The kernel family `α ρ^{p+1} Λ_p^o(xρ) + β ρ^{p+1} Λ_p^e(xρ)` in the spatial
//! domain (power series and a confluent hypergeometric form) and in the
//! frequency domain.
//!
//! `alpha` weights the odd part and `beta` the even part. The odd part is
//! identically zero at `p = 0`, so a nonzero `alpha` requires `p > 0`.

use num_complex::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest `|z|` accepted by the power series. Beyond it cancellation between
/// alternating terms costs more than ten significant digits in `f64`.
pub const Z_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelParams<T> {
    pub alpha: T,
    pub beta: T,
    pub p: T,
}

impl<T: Real> KernelParams<T> {
    pub fn new(alpha: T, beta: T, p: T) -> Result<Self> {
        let params = Self { alpha, beta, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.beta.is_finite() && self.p.is_finite()) {
            return Err(Error::InvalidParams("non-finite kernel parameter".into()));
        }
        if self.alpha == T::zero() && self.beta == T::zero() {
            return Err(Error::InvalidParams("alpha and beta are both zero".into()));
        }
        if self.p < T::zero() {
            return Err(Error::InvalidParams(format!("order p = {} is negative", self.p)));
        }
        if self.alpha != T::zero() && self.p == T::zero() {
            return Err(Error::InvalidParams("odd weight alpha != 0 requires p > 0".into()));
        }
        Ok(())
    }

    /// Same weights at another order.
    pub fn with_p(&self, p: T) -> Result<Self> {
        Self::new(self.alpha, self.beta, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEvalConfig<T> {
    pub abs_tol: T,
    pub max_terms: usize,
}

impl<T: Real> Default for SeriesEvalConfig<T> {
    fn default() -> Self {
        Self { abs_tol: T::lit(1e-18), max_terms: 200 }
    }
}

impl<T: Real> SeriesEvalConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > T::zero()) || !self.abs_tol.is_finite() {
            return Err(Error::InvalidConfig("abs_tol must be positive".into()));
        }
        if self.max_terms < 8 {
            return Err(Error::InvalidConfig("max_terms must be at least 8".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Parity {
    Even,
    Odd,
}

/// Value and first two derivatives of a series profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue<T> {
    pub value: T,
    pub d1: T,
    pub d2: T,
}

fn sqrt_two_pi<T: Real>() -> T {
    (T::lit(2.0) * T::PI()).sqrt()
}

fn series<T: Real>(z: T, p: T, parity: Parity, cfg: &SeriesEvalConfig<T>, derivs: bool) -> Result<SeriesValue<T>> {
    cfg.validate()?;
    if !z.is_finite() || z.abs() > T::lit(Z_MAX) {
        return Err(Error::TruncationFailure { z: z.as_f64(), terms: 0 });
    }
    let y = z * z;
    let one = T::one();
    let two = T::lit(2.0);
    // term_n = a_n z^{e_n}; the derivative terms are a_n e z^{e-1} and a_n e (e-1) z^{e-2}.
    let (mut term, e0) = match parity {
        Parity::Even => (one, T::zero()),
        Parity::Odd => (p * z, one),
    };
    let mut sum = SeriesValue { value: term, d1: T::zero(), d2: T::zero() };
    if parity == Parity::Odd {
        sum.d1 = p;
    }
    for n in 0..cfg.max_terms {
        let nf = T::of_usize(n);
        let e = e0 + two * nf;
        let ratio = -(p + e + one) / ((e + one) * (e + two));
        let next = term * ratio * y;
        let e_next = e + two;
        let (d1, d2) = if !derivs {
            (T::zero(), T::zero())
        } else if z == T::zero() {
            // only the z^1 and z^2 powers survive at the origin
            let a_next = match parity {
                Parity::Even if n == 0 => ratio,
                Parity::Odd if n == 0 => p * ratio,
                _ => T::zero(),
            };
            match parity {
                Parity::Even => (T::zero(), a_next * two),
                Parity::Odd => (T::zero(), T::zero()),
            }
        } else {
            (next * e_next / z, next * e_next * (e_next - one) / y)
        };
        let small = next.abs() < cfg.abs_tol && (!derivs || (d1.abs() < cfg.abs_tol && d2.abs() < cfg.abs_tol));
        if small {
            return Ok(sum);
        }
        term = next;
        sum.value = sum.value + next;
        sum.d1 = sum.d1 + d1;
        sum.d2 = sum.d2 + d2;
    }
    Err(Error::TruncationFailure { z: z.as_f64(), terms: cfg.max_terms })
}

fn scaled<T: Real>(s: SeriesValue<T>) -> SeriesValue<T> {
    let c = sqrt_two_pi::<T>();
    SeriesValue { value: s.value / c, d1: s.d1 / c, d2: s.d2 / c }
}

/// `Λ_p^e(z)` by direct summation of its power series.
pub fn eval_series_even<T: Real>(z: T, p: T, cfg: &SeriesEvalConfig<T>) -> Result<T> {
    Ok(series(z, p, Parity::Even, cfg, false)?.value / sqrt_two_pi::<T>())
}

/// `Λ_p^o(z)` by direct summation of its power series.
pub fn eval_series_odd<T: Real>(z: T, p: T, cfg: &SeriesEvalConfig<T>) -> Result<T> {
    Ok(series(z, p, Parity::Odd, cfg, false)?.value / sqrt_two_pi::<T>())
}

/// Series value with term-wise first and second derivatives.
pub fn eval_series_derivs<T: Real>(z: T, p: T, parity: Parity, cfg: &SeriesEvalConfig<T>) -> Result<SeriesValue<T>> {
    Ok(scaled(series(z, p, parity, cfg, true)?))
}

/// `h'' + z h' + (p + 1) h` for the series profile of the given parity.
pub fn ode_residual<T: Real>(p: T, z: T, parity: Parity, cfg: &SeriesEvalConfig<T>) -> Result<T> {
    let h = eval_series_derivs(z, p, parity, cfg)?;
    Ok(h.d2 + z * h.d1 + (p + T::one()) * h.value)
}

/// `e^{-y} M(a, b, y)` for `y ≥ 0`, summed with running rescaling so that
/// large `y` neither overflows nor underflows.
fn kummer_damped<T: Real>(a: T, b: T, y: T) -> T {
    let big = T::lit(1e15);
    let ln_big = big.ln();
    let eps = T::epsilon();
    let mut term = T::one();
    let mut sum = T::one();
    let mut log_scale = T::zero();
    let limit = 64 + 8 * (y.as_f64().max(0.0) as usize);
    for n in 0..limit {
        let nf = T::of_usize(n);
        term = term * (a + nf) / ((b + nf) * (nf + T::one())) * y;
        sum = sum + term;
        if term == T::zero() {
            break;
        }
        if term.abs() > big || sum.abs() > big {
            term = term / big;
            sum = sum / big;
            log_scale = log_scale + ln_big;
        }
        let next_ratio = ((a + nf + T::one()) * y / ((b + nf + T::one()) * (nf + T::lit(2.0)))).abs();
        if nf > y && next_ratio < T::lit(0.5) && term.abs() <= eps * sum.abs() {
            break;
        }
    }
    sum * (log_scale - y).exp()
}

/// `Λ_p^e(z) = e^{-z²/2} M(-p/2, 1/2, z²/2) / √(2π)`, valid for any `z`.
pub fn profile_even<T: Real>(z: T, p: T) -> T {
    let half = T::lit(0.5);
    kummer_damped(-p * half, half, z * z * half) / sqrt_two_pi::<T>()
}

/// `Λ_p^o(z) = p z e^{-z²/2} M((1-p)/2, 3/2, z²/2) / √(2π)`, valid for any `z`.
pub fn profile_odd<T: Real>(z: T, p: T) -> T {
    let half = T::lit(0.5);
    p * z * kummer_damped((T::one() - p) * half, T::lit(1.5), z * z * half) / sqrt_two_pi::<T>()
}

/// Spatial kernel `α ρ^{p+1} Λ_p^o(xρ) + β ρ^{p+1} Λ_p^e(xρ)` via the series.
pub fn eval_kernel<T: Real>(params: &KernelParams<T>, x: T, rho: T, cfg: &SeriesEvalConfig<T>) -> Result<T> {
    params.validate()?;
    if !(rho > T::zero()) {
        return Err(Error::InvalidParams(format!("rho = {rho} must be positive")));
    }
    let z = x * rho;
    let amp = rho.powf(params.p + T::one());
    let mut out = T::zero();
    if params.alpha != T::zero() {
        out = out + params.alpha * amp * eval_series_odd(z, params.p, cfg)?;
    }
    if params.beta != T::zero() {
        out = out + params.beta * amp * eval_series_even(z, params.p, cfg)?;
    }
    Ok(out)
}

/// Spatial kernel at any `x` through the hypergeometric profiles.
pub fn eval_kernel_wide<T: Real>(params: &KernelParams<T>, x: T, rho: T) -> T {
    let z = x * rho;
    let amp = rho.powf(params.p + T::one());
    let mut out = T::zero();
    if params.alpha != T::zero() {
        out = out + params.alpha * amp * profile_odd(z, params.p);
    }
    if params.beta != T::zero() {
        out = out + params.beta * amp * profile_even(z, params.p);
    }
    out
}

/// `sgn(ω)|ω|^p` and `|ω|^p` with the convention `|0|^0 = 1`, `sgn(0) = 0`.
pub(crate) fn power_pair<T: Real>(omega: T, p: T) -> (T, T) {
    let a = omega.abs();
    let mag = if a == T::zero() {
        if p == T::zero() { T::one() } else { T::zero() }
    } else {
        a.powf(p)
    };
    let sgn = if omega > T::zero() {
        T::one()
    } else if omega < T::zero() {
        -T::one()
    } else {
        T::zero()
    };
    (sgn * mag, mag)
}

/// Kernel multiplier without the Gaussian factor: `α i sgn(ω)|ω|^p + β |ω|^p`.
pub(crate) fn kernel_multiplier<T: Real>(params: &KernelParams<T>, omega: T) -> Complex<T> {
    let (odd, even) = power_pair(omega, params.p);
    Complex::new(params.beta * even, params.alpha * odd)
}

/// Transfer function `[α i sgn(ω)|ω|^p + β |ω|^p] e^{-ω²σ²/2}` (unit normalisation).
pub fn transfer<T: Real>(params: &KernelParams<T>, omega: T, sigma: T) -> Complex<T> {
    let g = (-(omega * omega * sigma * sigma) * T::lit(0.5)).exp();
    kernel_multiplier(params, omega) * g
}
