//! Constants of the long-range contribution and of the main bound.
//!
//! The proofs only assert that these constants exist. Each one is fixed here as
//! the smallest value meeting its defining inequalities, found by bisection in
//! log space because `v*` and everything downstream of it are astronomically large.

use super::constants::{connector_cprime_log, factorial, grid_max, log_add, Exponents};
use crate::error::Result;
use crate::logreal::LogReal;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{E, LN_2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LongRangeInputs {
    pub d: usize,
    pub alpha: f64,
    pub g0: f64,
    pub g: f64,
    pub gamma: f64,
    pub exps: Exponents,
    pub ctilde0: f64,
    pub v_star: LogReal,
    /// Interaction locality `k` for the k-local variant.
    pub k_local: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LongRangeConstants {
    pub k_local: Option<usize>,
    pub j1: LogReal,
    pub j2: LogReal,
    /// Zero in the k-local variant.
    pub j3: LogReal,
    pub kappa_tilde: f64,
    pub c_star: f64,
    pub j1_prime: LogReal,
    pub j2_prime: LogReal,
    pub c_p_kappa: LogReal,
    pub lambda0: LogReal,
    pub j0: LogReal,
    pub kappa0: LogReal,
    /// `(c1 - 1) v*`; `c1` itself rounds to 1 in `f64` once `v*` is large.
    pub c1_excess: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub kappa0_tilde: LogReal,
    pub c_h: LogReal,
    pub c_h_prime: LogReal,
    pub v_bar: LogReal,
}

/// `ln c_{alpha,D}` with `c_{alpha,D} = D^{-1} sup_{r >= 1} (1 + 2D ln r)^D / r^{alpha-2D-1}`.
pub fn ln_c_alpha_d(alpha_tilde: f64, d: usize) -> f64 {
    let df = d as f64;
    let f = |u: f64| df * (1.0 + 2.0 * df * u).ln() - alpha_tilde * u;
    grid_max(f, 0.0, 50.0 + 10.0 * df / alpha_tilde, 4000).1 - df.ln()
}

/// Smallest `x` in `[lo, inf)` (log-space bisection on `ln x`) with `ok(ln x)`; `ok` must be monotone.
fn first_true(ln_lo: f64, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(ln_lo) {
        return ln_lo;
    }
    let mut a = ln_lo;
    let mut step = 1.0;
    let mut b = a + step;
    while !ok(b) {
        a = b;
        step *= 2.0;
        b = a + step;
        assert!(b.is_finite() && step < 1e300, "no solution in range");
    }
    for _ in 0..300 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if ok(m) {
            b = m;
        } else {
            a = m;
        }
    }
    b
}

/// `ln(e^y - 1)` for `y = exp(ln_y)`.
fn ln_expm1(y: LogReal) -> f64 {
    let v = y.to_f64();
    if v > 40.0 {
        v
    } else {
        v.exp_m1().ln()
    }
}

pub fn assemble(inp: &LongRangeInputs) -> Result<LongRangeConstants> {
    let LongRangeInputs { d, alpha, g0, g, gamma, exps, ctilde0, v_star, k_local } = *inp;
    super::constants::check_regime(alpha, d)?;
    let df = d as f64;
    let lv = v_star.ln();
    let ln_g = gamma.ln();

    let mut j1 = LogReal::from_ln((6.0 * df + alpha) * LN_2 + 1.0 + factorial(2 * d).ln() + 2.0 * ln_g);
    let mut j2 = LogReal::from_ln(1.0 + df * 6f64.ln() + ln_g + factorial(d).ln());
    let j3 = match k_local {
        Some(_) => LogReal::ZERO,
        None => LogReal::from_ln(
            1.0 + ln_g + factorial(d).ln() + df * (8.0 * (2.0 * E * gamma * gamma).ln()).ln() + ln_c_alpha_d(exps.alpha_tilde, d),
        ),
    };
    if let Some(k) = k_local {
        let f = LogReal::new(2.0 * E * (k * k) as f64);
        j1 = j1 * f;
        j2 = j2 * f;
    }

    let l0 = (2.0 * df + 1.0) * LN_2 + 1.0 + 2.0 * ln_g;
    let aux = 1.0 / (E * (1.0 - exps.eta_tilde));
    let inv_v = (-lv).exp();
    let ln_kt = first_true(16f64.ln(), |lk| {
        let lkv = lk + lv;
        let a = lk >= (16.0 + 8.0 * (l0 + 2.0 * alpha * (lkv + aux)) * inv_v).ln();
        let b = lkv - 16f64.ln() >= (alpha * (lkv + aux)).ln();
        let c = lkv >= (16.0 * alpha).ln();
        a && b && c
    });
    let kappa_tilde = if ln_kt == 16f64.ln() { 16.0 } else { ln_kt.exp() };
    let c_star = (2.0 + (l0 + 2.0 * alpha * (ln_kt + lv) + 2.0 * alpha * aux) * inv_v).max(2.0 + (l0 + 2.0 * alpha) * inv_v);

    let two_v = LogReal::from_ln(LN_2 + lv);
    let (j1_prime, j2_prime) = match k_local {
        None => (
            LogReal::new(2.0 * g0) * j1 * (LogReal::new(c_star) * v_star).powf(2.0 * df) + LogReal::new(g) * j3 * two_v.powf(df),
            LogReal::new(g) * (j2 * LogReal::new(c_star.powi(d as i32)) + j3 * LogReal::new(2f64.powi(d as i32))) * v_star.powf(df),
        ),
        Some(_) => (LogReal::new(2.0 * g0) * j1 * two_v.powf(2.0 * df), LogReal::new(g) * j2 * two_v.powf(df)),
    };

    let p = if k_local.is_some() { 0.0 } else { 2.0 * df };
    // c_{p,kappa} = sup_{z >= kappa+2} (ln z + 1)^p / (z-2)^{alpha-D-1}, with u = ln(z - 2)
    let c_p_kappa = LogReal::from_ln(
        grid_max(|u| p * (log_add(u, LN_2) + 1.0).ln() - (alpha - df - 1.0) * u, ln_kt, ln_kt + 80.0, 4000).1,
    );
    // sup_{t >= 1} t^{-alpha~/2} ln^p(kappa~ v* t + 1), with s = ln t
    let ln_sup_t = grid_max(
        |s| -exps.alpha_tilde / 2.0 * s + p * log_add(ln_kt + lv + s, 0.0).ln(),
        0.0,
        400.0,
        8000,
    )
    .1;
    let lambda0 = j2_prime * LogReal::from_ln(ln_g + df * (2.0 * (kappa_tilde + 3.0)).ln())
        + c_p_kappa * j1_prime
            * LogReal::from_ln(ln_g + df.ln() + (df + 1.0) * LN_2 - alpha * lv - (kappa_tilde + 2.0).ln() + ln_sup_t);

    let y = lambda0 * LogReal::from_ln(1.0 + LN_2 + 2.0 * ln_g + df * 9f64.ln());
    let j0 = LogReal::from_ln((alpha + 2.0) * LN_2 + 1.0 + ln_gamma(alpha + 2.0) + ln_expm1(y) - lambda0.ln()) * j1_prime;

    // kappa0: where the power-law term of the long-range bound dominates its exponential term
    let b_prime = lambda0 * LogReal::from_ln(2f64.ln() * 2.0 + 1.0 + ln_kt + 2.0 * ln_g + df * 9f64.ln());
    let lower = (b_prime * E).max(LogReal::new(kappa_tilde * alpha)).max(LogReal::new(4.0 * kappa_tilde));
    let ln_b = b_prime.ln();
    let h = |ln_rho: f64| {
        let rho_over = LogReal::from_ln(ln_rho - (2.0 * kappa_tilde).ln()).to_f64();
        j0.ln() - 2.0 * LN_2 - alpha * (ln_rho + lv) - rho_over * (ln_b - ln_rho) >= 0.0
    };
    let kappa0 = LogReal::from_ln(first_true(lower.ln(), h));

    // c1 via s = (c1 - 1) v*, with c2 = 1
    let c2 = 1.0;
    let ln_c0 = ctilde0.ln();
    let ln_2v1 = log_add(LN_2 + lv, 0.0);
    let s_min = (2.0 * df / (1.0 - exps.eta_tilde) + df - 1.0) / 2.0;
    let g_ok = |s: f64| {
        (1..=d + 1).all(|j| {
            let jf = j as f64;
            ln_c0 + 2.0 * ln_g + 2.0 * df * ln_2v1 + (df - 1.0) * log_add(lv, (1.0 + s + jf).ln()) - 2.0 * s - jf <= 0.0
        })
    };
    let c1_excess = if g_ok(s_min) { s_min } else { s_min + first_true(0.0, |ls| g_ok(s_min + ls.exp())).exp() };
    let c1 = 1.0 + c1_excess * inv_v;
    let mut c3 = 0.0;
    for j in 1..=5000 {
        let term = (1.0 - j as f64).exp() * (3.0 + 2.0 * c1 + 2.0 * c2 * j as f64 * inv_v).powi(d as i32);
        c3 += term;
        if term < 1e-18 * c3 {
            break;
        }
    }

    // kappa0~: rho = 2 kappa0~ = 2 + w
    let ln_rhs = alpha * LN_2 + c3.ln() + j0.ln() + ln_g;
    let ln_w_lo = ((alpha + df) / (1.0 - exps.eta_tilde)).ln() - lv;
    let f_ok = |ln_w: f64| {
        let rho = LogReal::new(2.0) + LogReal::from_ln(ln_w);
        let ln_rv = rho.ln() + lv;
        let wv = LogReal::from_ln(ln_w + lv).to_f64();
        ln_c0 + 2.0 * ln_g + 2.0 * df * (3f64.ln() + lv) + (df - 1.0) * log_add(ln_rv, 0.0) + alpha * ln_rv - wv + 2.0
            <= ln_rhs
    };
    let rho = LogReal::new(2.0) + LogReal::from_ln(first_true(ln_w_lo, f_ok));
    let kappa0_tilde = (kappa0 * (1.0 + 1e-9)).max(rho / 2.0);

    let c = kappa0_tilde * 2.0 + LogReal::new(5.0);
    let coarse = (LogReal::new(gamma) * (c * 2.0).powf(df)).powf(2.0);
    let base = LogReal::new(c3 * gamma) * j0;
    let c_h = LogReal::from_ln((alpha + 3.0) * LN_2) * base * coarse;
    let cprime = connector_cprime_log(kappa0_tilde * 2.0, p, alpha, d, gamma)?;
    let c_h_prime = LogReal::from_ln((alpha + 2.0) * LN_2) * base * cprime * v_star.powf(-df) * coarse;

    Ok(LongRangeConstants {
        k_local,
        j1,
        j2,
        j3,
        kappa_tilde,
        c_star,
        j1_prime,
        j2_prime,
        c_p_kappa,
        lambda0,
        j0,
        kappa0,
        c1_excess,
        c1,
        c2,
        c3,
        kappa0_tilde,
        c_h,
        c_h_prime,
        v_bar: c * v_star,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::constants::{ctilde0, derived_exponents};

    fn inputs(ln_v: f64, k_local: Option<usize>) -> LongRangeInputs {
        LongRangeInputs {
            d: 1,
            alpha: 4.0,
            g0: 8.0,
            g: 1.0,
            gamma: 1.5,
            exps: derived_exponents(4.0, 1).unwrap(),
            ctilde0: ctilde0(1, 1.5),
            v_star: LogReal::from_ln(ln_v),
            k_local,
        }
    }

    #[test]
    fn c_alpha_d_matches_stationary_point() {
        // d/du [D ln(1+2Du) - a u] = 0 at u* = (2D^2/a - 1)/(2D)
        for (a, d) in [(0.5, 1usize), (1.0, 2), (0.2, 1), (3.0, 1)] {
            let df = d as f64;
            let u = ((2.0 * df * df / a - 1.0) / (2.0 * df)).max(0.0);
            let expect = df * (1.0 + 2.0 * df * u).ln() - a * u - df.ln();
            assert!((ln_c_alpha_d(a, d) - expect).abs() < 1e-10, "{a} {d}");
        }
    }

    #[test]
    fn kappa_tilde_inequalities_hold_and_are_tight() {
        for ln_v in [3.0, 6.0, 418.0] {
            let lr = assemble(&inputs(ln_v, None)).unwrap();
            assert!(lr.kappa_tilde >= 16.0);
            let v = ln_v.exp();
            let k = lr.kappa_tilde;
            let aux = 1.0 / (E * (1.0 / 6.0));
            let l0 = 3.0 * LN_2 + 1.0 + 2.0 * 1.5f64.ln();
            assert!(k * v >= 64.0 * (1.0 - 1e-9));
            assert!(k >= 16.0 + 8.0 * (l0 + 8.0 * ((k * v).ln() + aux)) / v - 1e-9);
            if ln_v > 100.0 {
                assert_eq!(k, 16.0);
                assert!((lr.c_star - 2.0).abs() < 1e-100);
            }
        }
    }

    #[test]
    fn kappa0_dominance_holds() {
        let lr = assemble(&inputs(418.0, None)).unwrap();
        assert!(lr.kappa0 > LogReal::new(lr.kappa_tilde));
        assert!(lr.kappa0_tilde > lr.kappa0);
        assert!(lr.v_bar > LogReal::from_ln(418.0));
        assert!(lr.j0.ln().is_finite());
        assert!(lr.c_h.is_positive() && lr.c_h_prime.is_positive());
        // the defining inequality for c1 at j = 1..=D+1
        let ln_c0 = ctilde0(1, 1.5).ln();
        for j in 1..=2 {
            let lhs = ln_c0 + 2.0 * 1.5f64.ln() + 2.0 * (LN_2 + 418.0) - 2.0 * lr.c1_excess - j as f64;
            assert!(lhs <= 1e-9);
        }
        assert!(lr.c3 > 5.0 && lr.c3 < 5.0 * E / (E - 1.0) + 1e-9);
    }

    #[test]
    fn k_local_drops_j3() {
        let lr = assemble(&inputs(418.0, Some(2))).unwrap();
        assert!(lr.j3.is_zero());
        let full = assemble(&inputs(418.0, None)).unwrap();
        assert!((lr.j1.ln() - full.j1.ln() - (8.0 * E).ln()).abs() < 1e-12);
    }

    #[test]
    fn moderate_velocity_chain_is_finite() {
        let lr = assemble(&inputs(5.0, None)).unwrap();
        assert!(lr.v_bar.ln().is_finite());
        assert!(lr.c_h.ln().is_finite());
    }
}
