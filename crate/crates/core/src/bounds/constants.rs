//! Derived exponents and the closed-form constants of the short- and middle-range bounds.

use crate::error::{Error, Result};
use crate::logreal::LogReal;
use serde::Serialize;
use std::f64::consts::E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub eta_bar: f64,
    pub eta: f64,
    pub eta_tilde: f64,
    pub alpha_tilde: f64,
}

pub(crate) fn check_regime(alpha: f64, d: usize) -> Result<()> {
    let threshold = 2.0 * d as f64 + 1.0;
    if !(alpha > threshold) || d == 0 {
        return Err(Error::OutOfRegime { alpha, threshold });
    }
    Ok(())
}

pub fn derived_exponents(alpha: f64, d: usize) -> Result<Exponents> {
    check_regime(alpha, d)?;
    let df = d as f64;
    let alpha_tilde = alpha - 2.0 * df - 1.0;
    let eta_bar = alpha_tilde / (df + 2.0);
    Ok(Exponents {
        eta_bar,
        eta: (1.0 + eta_bar).sqrt() - 1.0,
        eta_tilde: 1.0 - alpha_tilde / (2.0 * (alpha - df)),
        alpha_tilde,
    })
}

/// Short-range velocity `2 e^3 g gamma (alpha-2D)/(alpha-2D-1)`.
pub fn v0(alpha: f64, d: usize, g: f64, gamma: f64) -> Result<f64> {
    check_regime(alpha, d)?;
    let df = d as f64;
    Ok(2.0 * E.powi(3) * g * gamma * (alpha - 2.0 * df) / (alpha - 2.0 * df - 1.0))
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn zeta1(d: usize, gamma: f64) -> f64 {
    2f64.powi(d as i32 + 1) * E * E * gamma * gamma * factorial(d)
}

pub fn zeta2(d: usize, gamma: f64) -> f64 {
    16.0 * E.powi(3) * gamma * gamma * 45f64.powi(d as i32)
}

/// Prefactor `(4/3) e^{10/3} 15^D D! gamma zeta_2` of the middle-range bound.
pub fn ctilde0(d: usize, gamma: f64) -> f64 {
    4.0 / 3.0 * (10.0f64 / 3.0).exp() * 15f64.powi(d as i32) * factorial(d) * gamma * zeta2(d, gamma)
}

/// `C_{xi,xi0} = 2^{D+2} D! gamma (1 + xi0/xi)^D e^{5 xi/xi0}`.
pub fn connector_c(xi: f64, xi0: f64, d: usize, gamma: f64) -> Result<f64> {
    if !(xi > 0.0 && xi0 > 0.0) {
        return Err(crate::error::invalid("xi and xi0 must be positive"));
    }
    Ok(2f64.powi(d as i32 + 2) * factorial(d) * gamma * (1.0 + xi0 / xi).powi(d as i32) * (5.0 * xi / xi0).exp())
}

/// `ln(e^a + e^b)`.
pub(crate) fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Maximum of `f` on `[lo, hi]`: a uniform grid of `n` cells, then golden-section
/// search on the two cells around the best node.
pub fn grid_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let h = (hi - lo) / n as f64;
    let (mut best_i, mut best) = (0, f(lo));
    for i in 1..=n {
        let v = f(lo + i as f64 * h);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut a = lo + best_i.saturating_sub(1) as f64 * h;
    let mut b = (lo + (best_i + 1) as f64 * h).min(hi);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut dd) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(dd));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = dd;
            dd = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = dd;
            fc = fd;
            dd = a + r * (b - a);
            fd = f(dd);
        }
    }
    let (arg, val) = if fc > fd { (c, fc) } else { (dd, fd) };
    if val > best {
        (arg, val)
    } else {
        (lo + best_i as f64 * h, best)
    }
}

/// `ln C~_{kappa,p,alpha0} = ln sup_{z >= kappa+3} z^{D+1}(2 ln z + 1)^p / (z-kappa-2)^{alpha0}`,
/// with `kappa` given by its logarithm so that astronomically large values stay exact.
pub(crate) fn ln_ctilde_sup(ln_kappa: f64, p: f64, alpha0: f64, d: usize, n: usize) -> f64 {
    let df = d as f64;
    // w = z - kappa - 2 = e^u >= 1
    let f = |u: f64| {
        let ln_z = log_add(ln_kappa, (2.0 + u.exp()).ln());
        (df + 1.0) * ln_z + p * (2.0 * ln_z + 1.0).ln() - alpha0 * u
    };
    let hi = ln_kappa.max(0.0) + 60.0;
    grid_max(f, 0.0, hi, n).1
}

/// `C'_{kappa,p,alpha0} = C~ 2^{D+2} gamma D (kappa+3)^{alpha0-1}` for a kappa given in log space.
pub fn connector_cprime_log(kappa: LogReal, p: f64, alpha0: f64, d: usize, gamma: f64) -> Result<LogReal> {
    let df = d as f64;
    if !(alpha0 > df + 1.0) {
        return Err(Error::Regime(format!("alpha0 = {alpha0} must exceed D+1 = {}", df + 1.0)));
    }
    if kappa.sign < 0 {
        return Err(crate::error::invalid("kappa must be nonnegative"));
    }
    let ln_sup = ln_ctilde_sup(kappa.ln_abs, p, alpha0, d, 4000);
    let ln_k3 = log_add(kappa.ln_abs, 3f64.ln());
    Ok(LogReal::from_ln(ln_sup + (df + 2.0) * 2f64.ln() + gamma.ln() + df.ln() + (alpha0 - 1.0) * ln_k3))
}

pub fn connector_cprime(kappa: f64, p: f64, alpha0: f64, d: usize, gamma: f64) -> Result<f64> {
    Ok(connector_cprime_log(LogReal::new(kappa), p, alpha0, d, gamma)?.to_f64())
}
