//! The ten conditions on the initial length scale `l1` and the search for the smallest one.
//!
//! Every condition is written as a margin in `L = ln l1` that is nonnegative when
//! the condition holds. Conditions that involve a rung `q` are evaluated with
//! `l_{q-1} -> l1`, `eta_q -> eta`, `l_q -> l1^{1+eta}`.

use super::constants::{ctilde0, derived_exponents, v0, zeta1, Exponents};
use crate::error::Result;
use crate::logreal::LogReal;
use serde::Serialize;

/// Upper end of the search over `ln l1`.
pub const LN_ELL1_SEARCH_CAP: f64 = (1u64 << 60) as f64;

pub const CONDITION_LABELS: [&str; 10] = [
    "delta_{q-1} <= 1/2",
    "l1^eta >= max(24 log(2 gamma^2), 48)",
    "e^2 g gamma^2 (20D)^D / (3 l1 v0) <= 1",
    "l^eta / log l >= eta log(zeta1) / 16",
    "l^eta / log l >= 9 eta / 4",
    "log l1 >= 48 / eta",
    "2 log(zeta1) / l1^eta <= 1",
    "l1 >= 3",
    "l1 >= (4 zeta1 / e)^{2/eta}",
    "[log C~0 + (D-1) log(v0 l1 + 1)] / (2 v0 l1) <= 1/2",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ell1Inputs {
    pub d: usize,
    pub alpha: f64,
    pub g: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub index: usize,
    pub label: &'static str,
    /// Smallest `ln l1` from which the condition holds.
    pub threshold_ln: f64,
    /// Margin at the returned `l1`; nonnegative means satisfied.
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Ell1Result {
    pub ln_ell1: f64,
    /// The integer value when it fits in a `u64`.
    pub exact: Option<u64>,
    pub conditions: Vec<ConditionReport>,
    /// Index (1-based) of the condition with the largest threshold.
    pub dominant: usize,
}

impl Ell1Result {
    pub fn ell1(&self) -> LogReal {
        LogReal::from_ln(self.ln_ell1)
    }

    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|c| c.margin >= 0.0)
    }
}

/// `delta_{q-1}` from the velocity recursion, for `ln l_{q-1}`, `eta_q` and `ln l_q`.
pub fn delta(d: usize, gamma: f64, ln_prev: f64, eta_q: f64, ln_next: f64) -> f64 {
    let df = d as f64;
    let ln_c0 = ctilde0(d, gamma).ln();
    let pow = eta_q * ln_prev;
    let log_term = if pow > 30.0 { pow - 12f64.ln() } else { (pow.exp() / 12.0).ln_1p() };
    let num = 6.0 * (ln_c0 + 2.0 * gamma.ln() + 2.0 * df * (2f64.ln() + ln_next)) + 6.0 * (df - 1.0) * log_term;
    num * (-pow).exp()
}

#[derive(Debug, Clone, Copy)]
pub struct Ell1Context {
    pub inputs: Ell1Inputs,
    pub exps: Exponents,
    pub v0: f64,
    pub zeta1: f64,
    pub ctilde0: f64,
}

impl Ell1Context {
    pub fn new(inputs: Ell1Inputs) -> Result<Self> {
        let exps = derived_exponents(inputs.alpha, inputs.d)?;
        Ok(Ell1Context {
            inputs,
            exps,
            v0: v0(inputs.alpha, inputs.d, inputs.g, inputs.gamma)?,
            zeta1: zeta1(inputs.d, inputs.gamma),
            ctilde0: ctilde0(inputs.d, inputs.gamma),
        })
    }

    /// Margin of condition `k` (0-based) at `L = ln l1`.
    pub fn margin(&self, k: usize, l: f64) -> f64 {
        let Ell1Inputs { d, g, gamma, .. } = self.inputs;
        let df = d as f64;
        let eta = self.exps.eta;
        let ln_v0 = self.v0.ln();
        match k {
            0 => 0.5 - delta(d, gamma, l, eta, (1.0 + eta) * l),
            1 => eta * l - (24.0 * (2.0 * gamma * gamma).ln()).max(48.0).ln(),
            2 => (3f64.ln() + l + ln_v0) - (2.0 + g.ln() + 2.0 * gamma.ln() + df * (20.0 * df).ln()),
            3 => eta * l - l.ln() - (eta * self.zeta1.ln() / 16.0).ln(),
            4 => eta * l - l.ln() - (9.0 * eta / 4.0).ln(),
            5 => l - 48.0 / eta,
            6 => eta * l - (2.0 * self.zeta1.ln()).ln(),
            7 => l - 3f64.ln(),
            8 => l - 2.0 / eta * (4.0 * self.zeta1 / std::f64::consts::E).ln(),
            9 => {
                let ln_v0l = ln_v0 + l;
                let ln_v0l_plus1 = ln_v0l + (-ln_v0l).exp().ln_1p();
                let num = self.ctilde0.ln() + (df - 1.0) * ln_v0l_plus1;
                0.5f64.ln() - (num.ln() - 2f64.ln() - ln_v0l)
            }
            _ => panic!("condition index out of range"),
        }
    }

    pub fn margins(&self, l: f64) -> [f64; 10] {
        std::array::from_fn(|k| self.margin(k, l))
    }

    /// Smallest `L` from which condition `k` holds for all larger `L`.
    pub fn threshold(&self, k: usize) -> f64 {
        let lo = 3f64.ln();
        // conditions 4 and 5 have `eta L - ln L`, which decreases up to L = 1/eta
        let start = if k == 3 || k == 4 { lo.max(1.0 / self.exps.eta) } else { lo };
        if self.margin(k, start) >= 0.0 {
            return if start == lo || self.margin(k, lo) >= 0.0 { lo } else { start };
        }
        let mut a = start;
        let mut b = start.max(1.0) * 2.0;
        while self.margin(k, b) < 0.0 {
            a = b;
            b *= 2.0;
            assert!(b <= LN_ELL1_SEARCH_CAP, "condition {} has no solution below the search cap", k + 1);
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if self.margin(k, m) >= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        b
    }
}

/// Smallest `l1 >= 3` meeting all ten conditions, returned in log space.
pub fn find_ell1(inputs: Ell1Inputs) -> Result<Ell1Result> {
    let ctx = Ell1Context::new(inputs)?;
    let thresholds: Vec<f64> = (0..10).map(|k| ctx.threshold(k)).collect();
    let (dom, &l_max) = thresholds
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let mut l = l_max;
    let mut exact = None;
    if l < 43.0 {
        let mut n = l.exp().ceil().max(3.0) as u64;
        // the threshold is a bisection endpoint; step to the first integer that passes
        if n > 3 && ctx.margins(((n - 1) as f64).ln()).iter().all(|m| *m >= 0.0) {
            n -= 1;
        }
        while ctx.margins((n as f64).ln()).iter().any(|m| *m < 0.0) {
            n += 1;
        }
        exact = Some(n);
        l = (n as f64).ln();
    } else {
        while ctx.margins(l).iter().any(|m| *m < 0.0) {
            l = l.next_up();
        }
    }
    let margins = ctx.margins(l);
    let conditions = (0..10)
        .map(|k| ConditionReport { index: k + 1, label: CONDITION_LABELS[k], threshold_ln: thresholds[k], margin: margins[k] })
        .collect();
    Ok(Ell1Result { ln_ell1: l, exact, conditions, dominant: dom + 1 })
}
