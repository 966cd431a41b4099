//! Damped Newton refinement of critical points of `G = ∂x^k Ψ` in `(x, σ)`:
//! `Ψ_{(k+1)x} = Ψ_{kxσ} = 0`.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{Deriv, ScaleSpace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CriticalPoint<T> {
    pub x: T,
    pub sigma: T,
    /// `Ψ_{(k+1)x}` and `Ψ_{kxσ}` at the point.
    pub residuals: (T, T),
    /// `Ψ_{kx}` at the point.
    pub value: T,
    /// Hessian of `G` in `(x, σ)`.
    pub hessian: [[T; 2]; 2],
}

pub(crate) struct NewtonSettings<T> {
    pub max_iter: usize,
    /// Absolute residual accepted as converged.
    pub tol: T,
    /// Largest allowed distance from the seed.
    pub radius: T,
    /// Determinants below this are treated as singular.
    pub det_floor: T,
}

fn probe<T: Real>(space: &ScaleSpace<T>, k: u32, x: T, sigma: T) -> ([T; 2], [[T; 2]; 2], T) {
    let ds = [
        Deriv::new(k + 1, 0, 0),
        Deriv::new(k, 1, 0),
        Deriv::new(k + 2, 0, 0),
        Deriv::new(k + 1, 1, 0),
        Deriv::new(k, 2, 0),
        Deriv::new(k, 0, 0),
    ];
    let v = space.eval_many(x, sigma, &ds);
    ([v[0], v[1]], [[v[2], v[3]], [v[3], v[4]]], v[5])
}

fn norm2<T: Real>(r: [T; 2]) -> T {
    r[0].abs().max(r[1].abs())
}

pub(crate) fn newton_critical<T: Real>(
    space: &ScaleSpace<T>,
    k: u32,
    seed: (T, T),
    cfg: &NewtonSettings<T>,
) -> Result<CriticalPoint<T>> {
    let (mut x, mut s) = (seed.0, seed.1.abs());
    let (mut r, mut h, mut value) = probe(space, k, x, s);
    for it in 0..=cfg.max_iter {
        let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
        if norm2(r) <= cfg.tol {
            if det.abs() <= cfg.det_floor {
                return Err(Error::NoConvergence { iterations: it, residual: norm2(r).as_f64() });
            }
            return Ok(CriticalPoint { x, sigma: s, residuals: (r[0], r[1]), value, hessian: h });
        }
        if it == cfg.max_iter || det.abs() <= cfg.det_floor || !det.is_finite() {
            break;
        }
        let dx = -(h[1][1] * r[0] - h[0][1] * r[1]) / det;
        let ds = -(h[0][0] * r[1] - h[1][0] * r[0]) / det;
        let mut step = T::one();
        let current = norm2(r);
        let mut accepted = false;
        for _ in 0..30 {
            let (nx, ns) = (x + step * dx, (s + step * ds).abs());
            let (nr, nh, nv) = probe(space, k, nx, ns);
            if norm2(nr) < current || norm2(nr) <= cfg.tol {
                x = nx;
                s = ns;
                r = nr;
                h = nh;
                value = nv;
                accepted = true;
                break;
            }
            step = step * T::lit(0.5);
        }
        if !accepted {
            break;
        }
        let dist = ((x - seed.0) * (x - seed.0) + (s - seed.1.abs()) * (s - seed.1.abs())).sqrt();
        if dist > cfg.radius {
            break;
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iter, residual: norm2(r).as_f64() })
}
