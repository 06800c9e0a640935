//! The doubly exponential ladder of length scales and the velocity recursion along it.

use super::constants::zeta2;
use super::ell1::delta;
use crate::error::{Error, Result};
use serde::Serialize;

/// Below this, `ln l` values are rounded to integers; above it rounding is below `f64` resolution.
const INTEGER_LN_LIMIT: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderBranch {
    /// `target < l1^{1+eta_bar}`: the single-scale short-range bound applies.
    SingleScale,
    MultiScale,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ladder {
    /// `ln l_1, ..., ln l_{q*}`.
    pub ln_ell: Vec<f64>,
    /// `eta_q` for `q = 2..=q*` (empty for the single-scale branch).
    pub eta_q: Vec<f64>,
    pub q_star: usize,
    pub branch: LadderBranch,
    /// The last rung needed `eta_{q*} < eta`.
    pub final_clamped: bool,
}

fn round_rung(ln_prev: f64, step: f64, eta: f64, eta_bar: f64) -> (f64, f64) {
    let ln_raw = ln_prev * (1.0 + step);
    if ln_raw > INTEGER_LN_LIMIT {
        return (ln_raw, step);
    }
    let raw = ln_raw.exp();
    let up = raw.ceil().ln();
    let eta_up = up / ln_prev - 1.0;
    if eta_up <= eta_bar {
        return (up, eta_up);
    }
    let down = raw.floor().ln();
    let eta_down = down / ln_prev - 1.0;
    if eta_down >= eta {
        (down, eta_down)
    } else {
        (up, eta_up)
    }
}

/// Ladder `l_1 < l_2 < ... < l_{q*} = target` with `eta_q` in `[eta, eta_bar]`.
///
/// Steps take `eta_bar` while at least one more full step fits; the remaining
/// exponent is then split into one or two steps inside the admissible range.
pub fn ell_ladder(ln_ell1: f64, ln_target: f64, eta: f64, eta_bar: f64) -> Ladder {
    let round_target = |l: f64| if l <= INTEGER_LN_LIMIT { l.exp().ceil().ln() } else { l };
    let ln_target = round_target(ln_target);
    if ln_target < (1.0 + eta_bar) * ln_ell1 {
        return Ladder { ln_ell: vec![ln_target], eta_q: vec![], q_star: 1, branch: LadderBranch::SingleScale, final_clamped: false };
    }
    let mut ln_ell = vec![ln_ell1];
    let mut eta_q = vec![];
    let final_clamped;
    loop {
        let prev = *ln_ell.last().unwrap();
        let p = ln_target / prev;
        if p <= 1.0 + eta_bar {
            let e = p - 1.0;
            final_clamped = e < eta;
            ln_ell.push(ln_target);
            eta_q.push(e);
            break;
        }
        let step = if p >= (1.0 + eta_bar) * (1.0 + eta) { eta_bar } else { p.sqrt() - 1.0 };
        let (next, e) = round_rung(prev, step, eta, eta_bar);
        ln_ell.push(next);
        eta_q.push(e);
    }
    let q_star = ln_ell.len();
    Ladder { ln_ell, eta_q, q_star, branch: LadderBranch::MultiScale, final_clamped }
}

impl Ladder {
    /// `ln l_q - (1+eta)^{q-1} ln l_1` per rung; nonnegative when the doubly exponential bound holds.
    pub fn growth_margins(&self, eta: f64) -> Vec<f64> {
        let l1 = self.ln_ell[0];
        self.ln_ell.iter().enumerate().map(|(q, l)| l - (1.0 + eta).powi(q as i32) * l1).collect()
    }

    /// `ln(g l_{q-1}^{-eta}) - ln(l_q^{D+1} g_q)` with `g_q = g l_{q-1}^{-alpha+D}`, per rung `q >= 2`.
    pub fn band_energy_margins(&self, alpha: f64, d: usize, eta: f64) -> Vec<f64> {
        let df = d as f64;
        self.ln_ell
            .windows(2)
            .map(|w| -eta * w[0] - ((df + 1.0) * w[1] + (df - alpha) * w[0]))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VelocityTrace {
    /// `ln v_1, ln v_2, ...`.
    pub ln_v: Vec<f64>,
    /// `ln l_{q-1}` used for each step `q >= 2`.
    pub ln_ell: Vec<f64>,
    pub delta: Vec<f64>,
    /// Bound on the remaining `sum_k ln(v_k / v_{k-1})` after the last step.
    pub tail: f64,
    pub converged: bool,
}

impl VelocityTrace {
    pub fn ln_v_final(&self) -> f64 {
        *self.ln_v.last().unwrap()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VelocityInputs {
    pub d: usize,
    pub gamma: f64,
    pub eta: f64,
    pub v0: f64,
}

fn step_factor(inp: &VelocityInputs, ln_prev: f64, eta_q: f64, ln_next: f64) -> Result<(f64, f64, f64)> {
    let dl = delta(inp.d, inp.gamma, ln_prev, eta_q, ln_next);
    if dl >= 1.0 {
        return Err(Error::Regime(format!("delta = {dl} >= 1 at ln l = {ln_prev}; the l1 conditions are violated")));
    }
    let eps = 192.0 * zeta2(inp.d, inp.gamma).ln() / (inp.eta * ln_prev);
    Ok((dl, eps, (1.0 / (1.0 - dl) + eps).ln()))
}

/// Recursion along a given ladder, stopping at its last rung or once steps drop below `1e-9`.
pub fn velocity_along(inp: &VelocityInputs, ladder: &Ladder) -> Result<VelocityTrace> {
    let mut tr = VelocityTrace {
        ln_v: vec![ladder.ln_ell[0] + inp.v0.ln()],
        ln_ell: vec![],
        delta: vec![],
        tail: f64::NAN,
        converged: false,
    };
    for (q, w) in ladder.ln_ell.windows(2).enumerate() {
        let (dl, _, ln_f) = step_factor(inp, w[0], ladder.eta_q[q], w[1])?;
        tr.ln_v.push(tr.ln_v.last().unwrap() + ln_f);
        tr.ln_ell.push(w[0]);
        tr.delta.push(dl);
        if ln_f.exp_m1() < 1e-9 {
            tr.converged = true;
            break;
        }
    }
    Ok(tr)
}

/// Recursion on the slowest admissible ladder `ln l_q = (1+eta)^{q-1} ln l1`, run until the
/// remaining product is within `1e-9` (Cauchy tail).
///
/// Every admissible ladder has `l_{q-1}` at least as large at each step and every
/// factor decreases in `l_{q-1}`, so the limit bounds the velocity of any ladder.
pub fn velocity_limit(inp: &VelocityInputs, ln_ell1: f64) -> Result<VelocityTrace> {
    let r = 1.0 / (1.0 + inp.eta);
    let mut tr = VelocityTrace { ln_v: vec![ln_ell1 + inp.v0.ln()], ln_ell: vec![], delta: vec![], tail: f64::INFINITY, converged: false };
    let mut ln_prev = ln_ell1;
    for _ in 0..100_000 {
        let ln_next = (1.0 + inp.eta) * ln_prev;
        let (dl, _, ln_f) = step_factor(inp, ln_prev, inp.eta, ln_next)?;
        tr.ln_v.push(tr.ln_v.last().unwrap() + ln_f);
        tr.ln_ell.push(ln_prev);
        tr.delta.push(dl);
        ln_prev = ln_next;
        // ln(1/(1-d) + e) <= 2d + e for d <= 1/2; both decay at least geometrically with ratio r
        let (d_next, e_next, _) = step_factor(inp, ln_prev, inp.eta, (1.0 + inp.eta) * ln_prev)?;
        tr.tail = (2.0 * d_next + e_next) / (1.0 - r);
        if tr.tail < 1e-9 {
            tr.converged = true;
            break;
        }
    }
    Ok(tr)
}
