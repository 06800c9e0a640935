//! Analytic light-cone bounds with explicit constants.
//!
//! The initial length scale forced by the ladder conditions is of order
//! `exp(300)` already for a chain, so every constant downstream of it is
//! carried as a [`LogReal`].

pub mod constants;
pub mod ell1;
pub mod evaluators;
pub mod ladder;
pub mod long_range;

pub use constants::{
    connector_c, connector_cprime, connector_cprime_log, ctilde0, derived_exponents, v0, zeta1, zeta2, Exponents,
};
pub use ell1::{find_ell1, ConditionReport, Ell1Context, Ell1Inputs, Ell1Result, CONDITION_LABELS};
pub use evaluators::{long_range_bound, main_bound, middle_range_bound, quasi_local_bound, short_range_bound, MainForm, ShortRange};
pub use ladder::{ell_ladder, velocity_along, velocity_limit, Ladder, LadderBranch, VelocityInputs, VelocityTrace};
pub use long_range::{LongRangeConstants, LongRangeInputs};

use crate::error::{invalid, Result};
use crate::logreal::LogReal;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    #[serde(rename = "D")]
    pub d: usize,
    pub alpha: f64,
    pub g0: f64,
    #[serde(default = "one")]
    pub g: f64,
    pub gamma: f64,
    /// Locality `k` for the k-local constants, if the Hamiltonian has bounded term size.
    #[serde(default)]
    pub k_local: Option<usize>,
    /// `ln` of the ladder target; defaults to `(1+eta_bar)^4 ln l1`.
    #[serde(default)]
    pub ladder_target_ln: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl BoundInputs {
    pub fn new(d: usize, alpha: f64, g0: f64, gamma: f64) -> Self {
        BoundInputs { d, alpha, g0, g: 1.0, gamma, k_local: None, ladder_target_ln: None }
    }
}

/// Fully assembled bound apparatus; immutable once built.
#[derive(Debug, Clone, Serialize)]
pub struct BoundParams {
    pub inputs: BoundInputs,
    pub exponents: Exponents,
    pub v0: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub ctilde0: f64,
    pub ell1: Ell1Result,
    pub ladder: Ladder,
    /// Velocities along [`BoundParams::ladder`].
    pub ladder_velocity: VelocityTrace,
    /// Velocities along the slowest admissible ladder, run to convergence.
    pub velocity: VelocityTrace,
    /// `ln(l1^{1+eta_bar} v0)`, the single-scale velocity.
    pub ln_v_single_scale: f64,
    pub v_star: LogReal,
    pub long_range: LongRangeConstants,
    pub long_range_k: Option<LongRangeConstants>,
}

impl BoundParams {
    pub fn new(inputs: BoundInputs) -> Result<Self> {
        let BoundInputs { d, alpha, g0, g, gamma, k_local, ladder_target_ln } = inputs;
        if !(g > 0.0 && g0 > 0.0 && gamma >= 1.0) {
            return Err(invalid("need g > 0, g0 > 0 and gamma >= 1"));
        }
        let exps = derived_exponents(alpha, d)?;
        let ell1 = find_ell1(Ell1Inputs { d, alpha, g, gamma })?;
        let v0 = v0(alpha, d, g, gamma)?;
        let ln_l1 = ell1.ln_ell1;
        let target = ladder_target_ln.unwrap_or((1.0 + exps.eta_bar).powi(4) * ln_l1);
        let ladder = ell_ladder(ln_l1, target, exps.eta, exps.eta_bar);
        let vin = VelocityInputs { d, gamma, eta: exps.eta, v0 };
        let ladder_velocity = velocity_along(&vin, &ladder)?;
        let velocity = velocity_limit(&vin, ln_l1)?;
        let ln_v_single_scale = (1.0 + exps.eta_bar) * ln_l1 + v0.ln();
        let v_star = LogReal::from_ln(ln_v_single_scale.max(velocity.ln_v_final()));
        let ct0 = ctilde0(d, gamma);
        let lr_in = LongRangeInputs { d, alpha, g0, g, gamma, exps, ctilde0: ct0, v_star, k_local: None };
        let long_range = long_range::assemble(&lr_in)?;
        let long_range_k = match k_local {
            Some(k) => Some(long_range::assemble(&LongRangeInputs { k_local: Some(k), ..lr_in })?),
            None => None,
        };
        Ok(BoundParams {
            inputs,
            exponents: exps,
            v0,
            zeta1: zeta1(d, gamma),
            zeta2: zeta2(d, gamma),
            ctilde0: ct0,
            ell1,
            ladder,
            ladder_velocity,
            velocity,
            ln_v_single_scale,
            v_star,
            long_range,
            long_range_k,
        })
    }

    pub fn v_bar(&self) -> LogReal {
        self.long_range.v_bar
    }

    fn constants(&self, k_local: bool) -> Result<&LongRangeConstants> {
        if k_local {
            self.long_range_k.as_ref().ok_or_else(|| invalid("k-local constants were not requested"))
        } else {
            Ok(&self.long_range)
        }
    }

    pub fn middle_range(&self, x: f64, t: f64, size_x: f64, ell: f64) -> LogReal {
        middle_range_bound(x, t, size_x, ell, self.inputs.d, self.ctilde0, self.v_star)
    }

    pub fn long_range(&self, x: impl Into<LogReal>, t: f64, size_x: f64, size_y: f64, k_local: bool) -> Result<LogReal> {
        long_range_bound(x, t, size_x, size_y, self.inputs.d, self.inputs.alpha, self.v_star, self.constants(k_local)?)
    }

    pub fn main(&self, x: impl Into<LogReal>, t: f64, size_x: f64, size_y: f64, which: MainForm, k_local: bool) -> Result<LogReal> {
        main_bound(x, t, size_x, size_y, self.inputs.d, self.inputs.alpha, self.constants(k_local)?, which)
    }

    /// Distance `x` at which the local form of the main bound (with `|X| = 1`) equals `delta`.
    pub fn local_front(&self, delta: f64, t: f64) -> Result<LogReal> {
        evaluators::main_local_front(delta, t, self.inputs.d, self.inputs.alpha, &self.long_range)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> BoundParams {
        let mut inp = BoundInputs::new(1, 4.0, 8.0, 1.5);
        inp.k_local = Some(2);
        BoundParams::new(inp).unwrap()
    }

    #[test]
    fn assembles_for_chain() {
        let p = chain();
        assert!(p.ell1.all_hold());
        assert!(p.velocity.converged && p.velocity.tail < 1e-9);
        assert!(p.v_star.ln() >= p.velocity.ln_v_final());
        assert!(p.v_bar() > p.v_star);
        assert!(p.ladder.growth_margins(p.exponents.eta).iter().all(|m| *m >= -1e-9));
        assert!(p.ladder.band_energy_margins(4.0, 1, p.exponents.eta).iter().all(|m| *m >= -1e-9));
        assert!(p.ladder_velocity.ln_v.windows(2).all(|w| w[1] > w[0]));
    }

    /// Frozen output of the full constant chain for D = 1, alpha = 4, g0 = 16, gamma = 1.
    #[test]
    fn golden_long_range_chain() {
        let p = BoundParams::new(BoundInputs::new(1, 4.0, 16.0, 1.0)).unwrap();
        let lr = &p.long_range;
        let close = |a: f64, b: f64| (a / b - 1.0).abs() < 1e-9;
        assert!(close(p.ell1.ln_ell1, 310.27687752661234));
        assert!(close(p.v_star.ln(), 418.08879772993635));
        assert!(close(lr.kappa0.ln(), 434.8860884938129));
        assert!(close(lr.j0.ln(), 8.495403853376942e186));
        assert!(close(lr.v_bar.ln(), 853.6680334053092));
        let x = LogReal::from_ln(lr.j0.ln() / 2.0);
        assert!(close(p.long_range(x, 1.0, 1.0, 1.0, false).unwrap().ln(), -8.495403853376942e186));
    }

    #[test]
    fn out_of_regime() {
        assert!(matches!(
            BoundParams::new(BoundInputs::new(1, 3.0, 8.0, 1.0)),
            Err(crate::Error::OutOfRegime { .. })
        ));
    }

    #[test]
    fn cone_caps_and_monotone_outside() {
        let p = chain();
        let cone = p.v_bar() * 2.0;
        for which in [MainForm::Commutator, MainForm::Local] {
            assert_eq!(p.main(cone * 0.5, 2.0, 1.0, 1.0, which, false).unwrap().to_f64(), 2.0);
            let mut prev = LogReal::new(2.0);
            for k in 1..40 {
                let x = cone * (1.0 + 10f64.powi(k - 20));
                let v = p.main(x, 2.0, 1.0, 1.0, which, false).unwrap();
                assert!(v <= prev);
                prev = v;
            }
        }
        let lr_cone = p.long_range.kappa0 * p.v_star * 1.5;
        assert_eq!(p.long_range(lr_cone * 0.9, 1.5, 1.0, 1.0, false).unwrap().to_f64(), 2.0);
        assert!(p.long_range(lr_cone * 0.9, 0.5, 1.0, 1.0, false).is_err());
    }

    /// Constants from a moderate `v*`, so that slopes stay resolvable in `f64` log space.
    fn moderate(k_local: Option<usize>) -> LongRangeConstants {
        let exps = derived_exponents(4.0, 1).unwrap();
        long_range::assemble(&LongRangeInputs {
            d: 1,
            alpha: 4.0,
            g0: 8.0,
            g: 1.0,
            gamma: 1.5,
            exps,
            ctilde0: ctilde0(1, 1.5),
            v_star: LogReal::new(30.0),
            k_local,
        })
        .unwrap()
    }

    #[test]
    fn asymptotic_exponents() {
        let v = LogReal::new(30.0);
        for k_local in [None, Some(2)] {
            let lr = moderate(k_local);
            let x0 = lr.c_h.ln() / 2.0;
            let slope = |f: &dyn Fn(LogReal) -> LogReal| f(LogReal::from_ln(x0 + 1.0)).ln() - f(LogReal::from_ln(x0)).ln();
            let tol = if k_local.is_some() { 1e-6 } else { 1e-3 };
            let s = slope(&|x| long_range_bound(x, 1.0, 1.0, 1.0, 1, 4.0, v, &lr).unwrap());
            assert!((s + 4.0).abs() < tol, "{s}");
            let s = slope(&|x| main_bound(x, 1.0, 1.0, 1.0, 1, 4.0, &lr, MainForm::Commutator).unwrap());
            assert!((s + 4.0).abs() < tol, "{s}");
            let s = slope(&|x| main_bound(x, 1.0, 1.0, 1.0, 1, 4.0, &lr, MainForm::Local).unwrap());
            assert!((s + 3.0).abs() < tol, "{s}");
        }
    }

    #[test]
    fn local_front_scaling() {
        // (v_{delta,t} - v_bar) t = y with y^{alpha-D} proportional to t^{D+1} log^{2D}(x+1) / delta
        let lr = moderate(None);
        let (alpha, d) = (4.0, 1.0);
        let excess = |delta: f64, t: f64| {
            let x = evaluators::main_local_front(delta, t, 1, alpha, &lr).unwrap();
            ((x - lr.v_bar * t) / t).ln()
        };
        let (a, b) = (excess(1e-3, 2.0), excess(1e-6, 2.0));
        let s_delta = (b - a) / (1e-6f64.ln() - 1e-3f64.ln());
        assert!((s_delta / (-1.0 / (alpha - d)) - 1.0).abs() < 0.01, "{s_delta}");
        let (a, b) = (excess(1e-3, 1.0), excess(1e-3, 10.0));
        let s_t = (b - a) / 10f64.ln();
        let expect = (2.0 * d + 1.0 - alpha) / (alpha - d);
        assert!((s_t / expect - 1.0).abs() < 0.01, "{s_t}");
    }

    #[test]
    fn chain_front_is_finite() {
        let p = chain();
        let x = p.local_front(1e-3, 1.0).unwrap();
        assert!(x > p.v_bar() && x.ln().is_finite());
    }

    #[test]
    fn all_evaluators_capped_on_grid() {
        let p = chain();
        for lx in [0.0, 1.0, 10.0, 1e3] {
            for t in [1.0, 3.0] {
                let x = p.v_bar() * t + LogReal::new(lx);
                for which in [MainForm::Commutator, MainForm::Local] {
                    assert!(p.main(x, t, 2.0, 3.0, which, false).unwrap().to_f64() <= 2.0);
                }
                assert!(p.long_range(x, t, 2.0, 3.0, false).unwrap().to_f64() <= 2.0);
                assert!(p.middle_range(lx, t, 2.0, 5.0).to_f64() <= 2.0);
            }
        }
    }
}
