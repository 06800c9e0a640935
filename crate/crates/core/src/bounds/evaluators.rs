//! Bound functions. Every evaluator returns a [`LogReal`] capped at 2.

use super::long_range::LongRangeConstants;
use crate::error::{invalid, Error, Result};
use crate::logreal::LogReal;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

pub(crate) fn cap2(v: LogReal) -> LogReal {
    v.min(LogReal::new(2.0))
}

/// `ln(x + 1)` for a positive `x` given in log space.
pub(crate) fn ln_1p_log(x: LogReal) -> f64 {
    if x.ln_abs > 30.0 {
        x.ln_abs + (-x.ln_abs).exp()
    } else {
        x.to_f64().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortRange {
    /// `min(2|X| (v0|t| / (e^2 m))^m, 2)` with `m = ceil(x/xi)`.
    pub min_form: LogReal,
    /// `min(2|X| e^{-2(x - xi v0 |t|)/xi}, 2)`.
    pub exp_form: LogReal,
}

pub fn short_range_bound(x: f64, t: f64, size_x: f64, xi: f64, v0: f64) -> ShortRange {
    let m = (x / xi).ceil();
    let min_form = if m <= 0.0 {
        cap2(LogReal::new(2.0 * size_x))
    } else if t == 0.0 {
        LogReal::ZERO
    } else {
        cap2(LogReal::new(2.0 * size_x) * LogReal::from_ln(m * ((v0 * t.abs()).ln() - 2.0 - m.ln())))
    };
    let exp_form = cap2(LogReal::from_ln((2.0 * size_x).ln() - 2.0 * (x - xi * v0 * t.abs()) / xi));
    ShortRange { min_form, exp_form }
}

/// `C~0 |X|^2 (1 + x/l)^{D-1} e^{-2(x - v*|t|)/l}`.
pub fn middle_range_bound(x: f64, t: f64, size_x: f64, ell: f64, d: usize, ctilde0: f64, v_star: LogReal) -> LogReal {
    let front = v_star * t.abs();
    let gap = LogReal::new(x) - front;
    if !gap.is_positive() {
        return LogReal::new(2.0);
    }
    let expo = -2.0 * (gap / ell).to_f64();
    cap2(LogReal::from_ln(ctilde0.ln() + 2.0 * size_x.ln() + (d as f64 - 1.0) * (x / ell).ln_1p() + expo))
}

/// `e |X^(xi)| [ v~|t| exp(-(mu-1)x/(2xi) + v~|t|) + (e^2 v~|t| / m*)^{m*} ]`
/// with `v~ = 4 g~ gamma (4D)^D` and `m* = floor((mu-1)x/(2 mu xi)) + 1`.
#[allow(clippy::too_many_arguments)]
pub fn quasi_local_bound(x: f64, t: f64, size_x_xi: f64, g_tilde: f64, mu: f64, xi: f64, d: usize, gamma: f64) -> Result<LogReal> {
    if !(mu > 1.0) {
        return Err(Error::Regime(format!("mu = {mu} must exceed 1")));
    }
    let df = d as f64;
    let vt = 4.0 * g_tilde * gamma * (4.0 * df).powf(df) * t.abs();
    if vt == 0.0 {
        return Ok(LogReal::ZERO);
    }
    let m = ((mu - 1.0) * x / (2.0 * mu * xi)).floor() + 1.0;
    let first = LogReal::from_ln(vt.ln() - (mu - 1.0) * x / (2.0 * xi) + vt);
    let second = LogReal::from_ln(m * (2.0 + vt.ln() - m.ln()));
    Ok(cap2(LogReal::new(E * size_x_xi) * (first + second)))
}

/// `J0 |X^(v*t)| |Y^(v*t)| |t|^{2D+1} log^{2D}(x+1) / (x - kappa0 v*|t|)^alpha`; the k-local
/// constants drop the logarithm.
#[allow(clippy::too_many_arguments)]
pub fn long_range_bound(
    x: impl Into<LogReal>,
    t: f64,
    size_x: f64,
    size_y: f64,
    d: usize,
    alpha: f64,
    v_star: LogReal,
    lr: &LongRangeConstants,
) -> Result<LogReal> {
    let x = x.into();
    let t = t.abs();
    if t < 1.0 {
        return Err(invalid("the long-range bound needs |t| >= 1"));
    }
    let gap = x - lr.kappa0 * v_star * t;
    if !gap.is_positive() {
        return Ok(LogReal::new(2.0));
    }
    let df = d as f64;
    let logs = if lr.k_local.is_some() { 0.0 } else { 2.0 * df * ln_1p_log(x).ln() };
    let ln = lr.j0.ln() + (size_x * size_y).ln() + (2.0 * df + 1.0) * t.ln() + logs - alpha * gap.ln();
    Ok(cap2(LogReal::from_ln(ln)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MainForm {
    /// `C_H |X||Y| t^{2D+1} log^{2D}(x+1) / (x - v_bar t)^alpha`, bounding commutators.
    Commutator,
    /// `C'_H |X|^2 t^{D+1} log^{2D}(x+1) / (x - v_bar t)^{alpha-D}`, bounding local approximations.
    Local,
}

#[allow(clippy::too_many_arguments)]
pub fn main_bound(
    x: impl Into<LogReal>,
    t: f64,
    size_x: f64,
    size_y: f64,
    d: usize,
    alpha: f64,
    lr: &LongRangeConstants,
    which: MainForm,
) -> Result<LogReal> {
    let x = x.into();
    let t = t.abs();
    if t < 1.0 {
        return Err(invalid("the main bound needs |t| >= 1"));
    }
    let gap = x - lr.v_bar * t;
    if !gap.is_positive() {
        return Ok(LogReal::new(2.0));
    }
    let df = d as f64;
    let logs = if lr.k_local.is_some() { 0.0 } else { 2.0 * df * ln_1p_log(x).ln() };
    let ln = match which {
        MainForm::Commutator => {
            lr.c_h.ln() + (size_x * size_y).ln() + (2.0 * df + 1.0) * t.ln() + logs - alpha * gap.ln()
        }
        MainForm::Local => lr.c_h_prime.ln() + 2.0 * size_x.ln() + (df + 1.0) * t.ln() + logs - (alpha - df) * gap.ln(),
    };
    Ok(cap2(LogReal::from_ln(ln)))
}

/// Distance at which the local form of the main bound (with `|X| = 1`) equals `delta`.
pub fn main_local_front(delta: f64, t: f64, d: usize, alpha: f64, lr: &LongRangeConstants) -> Result<LogReal> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(invalid("delta must lie in (0, 2)"));
    }
    let cone = lr.v_bar * t.abs();
    let ln_delta = delta.ln();
    let above = |ln_y: f64| -> Result<bool> {
        Ok(main_bound(cone + LogReal::from_ln(ln_y), t, 1.0, 1.0, d, alpha, lr, MainForm::Local)?.ln() > ln_delta)
    };
    // the bound decreases in y = x - v_bar t; bracket ln y, then bisect
    let (mut a, mut b) = (cone.ln() - 50.0, cone.ln() + 50.0);
    while !above(a)? {
        a -= 100.0;
    }
    let mut step = 100.0;
    while above(b)? {
        b += step;
        step *= 2.0;
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if above(m)? {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(cone + LogReal::from_ln(0.5 * (a + b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn short_range_examples() {
        assert!(short_range_bound(3.0, 0.0, 1.0, 1.0, 5.0).min_form.is_zero());
        assert_eq!(short_range_bound(0.0, 1.0, 1.0, 1.0, 5.0).min_form.to_f64(), 2.0);
        // x = 10 xi, v0|t| = xi with xi = 1
        let b = short_range_bound(10.0, 1.0, 3.0, 1.0, 1.0);
        let expect = 6.0 * (1.0 / (10.0 * E * E)).powi(10);
        assert!((b.min_form.to_f64() / expect - 1.0).abs() < 1e-12);
        assert!(b.exp_form > b.min_form);
        assert!((b.exp_form.to_f64() - 6.0 * (-18.0f64).exp()).abs() < 1e-20);
    }

    #[test]
    fn middle_range_cap_and_rate() {
        let v = LogReal::new(3.0);
        assert_eq!(middle_range_bound(2.0, 1.0, 1.0, 5.0, 1, 1e4, v).to_f64(), 2.0);
        let a = middle_range_bound(400.0, 1.0, 1.0, 5.0, 1, 1e4, v).ln();
        let b = middle_range_bound(410.0, 1.0, 1.0, 5.0, 1, 1e4, v).ln();
        assert!(((a - b) / 10.0 - 2.0 / 5.0).abs() < 1e-12);
    }

    #[test]
    fn quasi_local_hand_value() {
        // x = 20 xi, mu = 3, v~|t| = 1 -> m* = floor(20/3) + 1 = 7
        let (xi, d, gamma) = (2.0, 1, 1.0);
        let g_tilde = 1.0 / (4.0 * gamma * 4.0);
        let v = quasi_local_bound(20.0 * xi, 1.0, 1.0, g_tilde, 3.0, xi, d, gamma).unwrap();
        // e (e^{-19} + (e^2/7)^7) = 3.97 exceeds the cap
        let expect = E * ((-20.0f64 + 1.0).exp() + (E * E / 7.0).powi(7));
        assert!(expect > 2.0 && v.to_f64() == 2.0);
        let v = quasi_local_bound(20.0 * xi, 0.1, 1.0, g_tilde, 3.0, xi, d, gamma).unwrap();
        let expect = E * (0.1 * (-20.0f64 + 0.1).exp() + (E * E * 0.1 / 7.0).powi(7));
        assert!((v.to_f64() / expect - 1.0).abs() < 1e-12);
        assert!(quasi_local_bound(1.0, 0.0, 1.0, 1.0, 3.0, 1.0, 1, 1.0).unwrap().is_zero());
        assert!(quasi_local_bound(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1, 1.0).is_err());
    }

    #[test]
    fn quasi_local_large_mu_limit() {
        // the exponential term vanishes and m* -> floor(x/(2 xi)) + 1
        let (x, xi, vt) = (61.0, 2.0, 0.016);
        let v = quasi_local_bound(x, 1.0, 1.0, vt / 16.0, 1e9, xi, 1, 1.0).unwrap();
        let m = (x / (2.0 * xi)).floor() + 1.0;
        let expect = E * (E * E * vt / m).powf(m);
        assert!((v.to_f64() / expect - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn short_range_capped_and_monotone(x in 0.0f64..50.0, dx in 0.0f64..10.0, t in 0.0f64..5.0, sx in 1.0f64..10.0, xi in 1.0f64..4.0, v0 in 0.1f64..10.0) {
            let a = short_range_bound(x, t, sx, xi, v0);
            let b = short_range_bound(x + dx, t, sx, xi, v0);
            for v in [a.min_form, a.exp_form] {
                prop_assert!(v.to_f64() <= 2.0 && v.to_f64() >= 0.0);
            }
            prop_assert!(b.exp_form <= a.exp_form);
        }

        #[test]
        fn middle_range_capped_and_monotone(x in 0.0f64..200.0, dx in 0.0f64..50.0, t in 0.0f64..5.0, ell in 1.0f64..20.0) {
            let v = LogReal::new(4.0);
            let a = middle_range_bound(x, t, 2.0, ell, 2, 1e5, v);
            let b = middle_range_bound(x + dx, t, 2.0, ell, 2, 1e5, v);
            prop_assert!(a.to_f64() <= 2.0 && b <= a);
        }

        #[test]
        fn quasi_local_capped(x in 0.0f64..100.0, t in 0.0f64..3.0, mu in 1.01f64..10.0) {
            let v = quasi_local_bound(x, t, 3.0, 0.2, mu, 1.5, 1, 2.0).unwrap();
            prop_assert!(v.to_f64() <= 2.0 && v.to_f64() >= 0.0);
        }
    }
}
