//! GHZ state transfer between two distant spins under long-range Ising couplings.
//!
//! The sender spin `A` is copied across `L_A` with a CNOT fan-out, the receiver
//! region `L_B` is prepared in a GHZ state, both evolve under `Z_i Z_j` couplings
//! for `t2`, and inverse fan-outs concentrate the accumulated phase on `B`.
//! Only the sites of `L_A ∪ L_B` are simulated; idle sites stay in `|0>`.

use crate::dynamics::line_fit;
use crate::dynamics::operator::CMatrix;
use crate::error::{invalid, Error, Result};
use crate::lattice::{Lattice, SiteSet};
use crate::C64;
use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default cap on the number of simulated (active) sites.
pub const DEFAULT_PROTOCOL_CAP: usize = 20;

/// Largest `theta` admitted into the saturation fits.
pub const SMALL_ANGLE_MAX: f64 = 0.1;

pub const PROTOCOL_CSV_HEADER: &str = "D,alpha,t,R,sizeLA,sizeLB,theta,signal_analytic,signal_sim,mode";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// Every pair in `L_A x L_B` couples with `g / R^alpha`.
    #[default]
    Idealized,
    /// Pair `(i, j)` couples with `g / d_ij^alpha`.
    DistanceResolved,
}

impl CouplingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CouplingMode::Idealized => "idealized",
            CouplingMode::DistanceResolved => "distance-resolved",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub lattice: Lattice,
    pub sender: usize,
    pub receiver: usize,
    pub l_a: SiteSet,
    pub l_b: SiteSet,
    pub alpha: f64,
    pub g: f64,
    pub g0: f64,
    /// `(t1, t2, t3)`; only `t2` enters the phase.
    pub stages: (f64, f64, f64),
    #[serde(default)]
    pub mode: CouplingMode,
    /// When set, enforces `|L_A|, |L_B| <= (c_speed t1)^D`.
    #[serde(default)]
    pub c_speed: Option<f64>,
}

impl ProtocolConfig {
    /// Chain layout: `L_A` is the `n_a` sites ending at the sender, `L_B` the `n_b`
    /// sites starting at the receiver `r` sites further; all three stages last `t2`.
    pub fn chain(n_a: usize, n_b: usize, r: usize, alpha: f64, g: f64, t2: f64, mode: CouplingMode) -> Result<Self> {
        if n_a == 0 || n_b == 0 || r == 0 {
            return Err(invalid("chain protocol needs n_a, n_b, r >= 1"));
        }
        let sender = n_a - 1;
        let receiver = sender + r;
        let cfg = ProtocolConfig {
            lattice: Lattice::chain(receiver + n_b)?,
            sender,
            receiver,
            l_a: (0..n_a).collect(),
            l_b: (receiver..receiver + n_b).collect(),
            alpha,
            g,
            g0: g,
            stages: (t2, t2, t2),
            mode,
            c_speed: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn distance(&self) -> f64 {
        self.lattice.distance(self.sender, self.receiver) as f64
    }

    pub fn t_total(&self) -> f64 {
        self.stages.0 + self.stages.1 + self.stages.2
    }

    pub fn active(&self) -> SiteSet {
        self.l_a.union(&self.l_b)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lattice.n_sites();
        if self.active().iter().any(|i| i >= n) {
            return Err(invalid("L_A or L_B contains a site outside the lattice"));
        }
        if !self.l_a.contains(self.sender) || !self.l_b.contains(self.receiver) {
            return Err(invalid("sender must lie in L_A and receiver in L_B"));
        }
        if !self.l_a.is_disjoint(&self.l_b) {
            return Err(invalid("L_A and L_B must be disjoint"));
        }
        if !(self.alpha > 0.0 && self.g >= 0.0 && self.g <= self.g0) {
            return Err(invalid(format!("need alpha > 0 and 0 <= g <= g0, got g = {}, g0 = {}", self.g, self.g0)));
        }
        let (t1, t2, t3) = self.stages;
        if [t1, t2, t3].iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(invalid("stage durations must be finite and nonnegative"));
        }
        if let Some(c) = self.c_speed {
            let cap = (c * t1).powi(self.lattice.dim() as i32);
            if self.l_a.len() as f64 > cap || self.l_b.len() as f64 > cap {
                return Err(invalid(format!("|L_A| = {}, |L_B| = {} exceed (c t1)^D = {cap}", self.l_a.len(), self.l_b.len())));
            }
        }
        Ok(())
    }

    /// Accumulated phase `theta`: `g t2 |L_A||L_B| R^-alpha`, or `g t2 sum d_ij^-alpha`.
    pub fn theta(&self) -> f64 {
        let t2 = self.stages.1;
        match self.mode {
            CouplingMode::Idealized => {
                self.g * t2 * (self.l_a.len() * self.l_b.len()) as f64 * self.distance().powf(-self.alpha)
            }
            CouplingMode::DistanceResolved => {
                let s: f64 = self
                    .l_a
                    .iter()
                    .flat_map(|i| self.l_b.iter().map(move |j| (i, j)))
                    .map(|(i, j)| (self.lattice.distance(i, j) as f64).powf(-self.alpha))
                    .sum();
                self.g * t2 * s
            }
        }
    }

    fn coupling(&self, i: usize, j: usize) -> f64 {
        match self.mode {
            CouplingMode::Idealized => self.g * self.distance().powf(-self.alpha),
            CouplingMode::DistanceResolved => self.g * (self.lattice.distance(i, j) as f64).powf(-self.alpha),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticSignal {
    pub theta: f64,
    pub signal: f64,
}

pub fn signal_of_theta(theta: f64) -> f64 {
    2.0 * (2.0 * theta).sin().abs()
}

pub fn analytic_signal(cfg: &ProtocolConfig) -> AnalyticSignal {
    let theta = cfg.theta();
    AnalyticSignal { theta, signal: signal_of_theta(theta) }
}

/// Statevector on the active sites, first active site as the most significant bit.
#[derive(Debug, Clone)]
pub struct Register {
    sites: SiteSet,
    amp: Vec<C64>,
}

impl Register {
    pub fn basis(sites: SiteSet, index: usize) -> Self {
        let mut amp = vec![C64::new(0.0, 0.0); 1 << sites.len()];
        amp[index] = C64::new(1.0, 0.0);
        Register { sites, amp }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn mask(&self, site: usize) -> usize {
        let k = self.sites.position(site).expect("site is not active");
        1 << (self.sites.len() - 1 - k)
    }

    pub fn hadamard(&mut self, site: usize) {
        let m = self.mask(site);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.amp.len() {
            if i & m == 0 {
                let (a, b) = (self.amp[i], self.amp[i | m]);
                self.amp[i] = (a + b) * s;
                self.amp[i | m] = (a - b) * s;
            }
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        let (c, t) = (self.mask(control), self.mask(target));
        for i in 0..self.amp.len() {
            if i & c != 0 && i & t == 0 {
                self.amp.swap(i, i | t);
            }
        }
    }

    /// Fan-out of `control` onto every other site of `region`.
    pub fn fan_out(&mut self, control: usize, region: &SiteSet) {
        for j in region.iter().filter(|&j| j != control) {
            self.cnot(control, j);
        }
    }

    /// `exp(-i t sum_k J_k Z_ik Z_jk)`, diagonal in the computational basis.
    pub fn zz_evolve(&mut self, pairs: &[(usize, usize, f64)], t: f64) {
        let masks: Vec<(usize, usize, f64)> = pairs.iter().map(|&(i, j, c)| (self.mask(i), self.mask(j), c)).collect();
        for (idx, a) in self.amp.iter_mut().enumerate() {
            let e: f64 = masks
                .iter()
                .map(|&(mi, mj, c)| if ((idx & mi) != 0) == ((idx & mj) != 0) { c } else { -c })
                .sum();
            *a *= C64::from_polar(1.0, -e * t);
        }
    }

    /// Reduced density matrix of one site.
    pub fn reduced(&self, site: usize) -> CMatrix {
        let m = self.mask(site);
        let mut rho = CMatrix::zeros(2, 2);
        for i in 0..self.amp.len() {
            if i & m == 0 {
                let (a0, a1) = (self.amp[i], self.amp[i | m]);
                rho[(0, 0)] += a0 * a0.conj();
                rho[(0, 1)] += a0 * a1.conj();
                rho[(1, 0)] += a1 * a0.conj();
                rho[(1, 1)] += a1 * a1.conj();
            }
        }
        rho
    }
}

/// State of the active register after the initial preparation and each stage.
#[derive(Debug, Clone)]
pub struct ProtocolRun {
    pub initial: Register,
    pub after_stage1: Register,
    pub after_stage2: Register,
    pub final_state: Register,
    pub rho_b: CMatrix,
}

impl ProtocolRun {
    pub fn stage_norms(&self) -> [f64; 4] {
        [self.initial.norm(), self.after_stage1.norm(), self.after_stage2.norm(), self.final_state.norm()]
    }
}

fn check_cap(active: usize, cap: usize) -> Result<()> {
    if active > cap {
        return Err(Error::ResourceLimit { sites: active, cap, dim: 1u128 << active.min(127) });
    }
    Ok(())
}

/// Runs the three stages for sender bit `s` and returns every intermediate state.
pub fn run_protocol_states(cfg: &ProtocolConfig, s: bool, cap: usize) -> Result<ProtocolRun> {
    cfg.validate()?;
    let active = cfg.active();
    check_cap(active.len(), cap)?;
    let n = active.len();
    let a_bit = 1 << (n - 1 - active.position(cfg.sender).unwrap());
    let initial = Register::basis(active.clone(), if s { a_bit } else { 0 });

    let mut psi = initial.clone();
    psi.fan_out(cfg.sender, &cfg.l_a);
    psi.hadamard(cfg.receiver);
    psi.fan_out(cfg.receiver, &cfg.l_b);
    let after_stage1 = psi.clone();

    let pairs: Vec<(usize, usize, f64)> =
        cfg.l_a.iter().flat_map(|i| cfg.l_b.iter().map(move |j| (i, j))).map(|(i, j)| (i, j, cfg.coupling(i, j))).collect();
    psi.zz_evolve(&pairs, cfg.stages.1);
    let after_stage2 = psi.clone();

    psi.fan_out(cfg.receiver, &cfg.l_b);
    psi.fan_out(cfg.sender, &cfg.l_a);
    let rho_b = psi.reduced(cfg.receiver);
    Ok(ProtocolRun { initial, after_stage1, after_stage2, final_state: psi, rho_b })
}

/// Reduced state of the receiver for sender bit `s`.
pub fn run_protocol(cfg: &ProtocolConfig, s: bool, cap: usize) -> Result<CMatrix> {
    Ok(run_protocol_states(cfg, s, cap)?.rho_b)
}

/// `||rho1 - rho0||_1` from the singular values of the difference.
pub fn trace_distance_svd(rho0: &CMatrix, rho1: &CMatrix) -> f64 {
    (rho1 - rho0).svd(false, false).singular_values.sum()
}

/// State vector of a pure density matrix, read off its heaviest column.
pub fn pure_state(rho: &CMatrix) -> Vec<C64> {
    let j = (0..rho.ncols()).max_by(|&a, &b| rho[(a, a)].re.total_cmp(&rho[(b, b)].re)).unwrap_or(0);
    let col: Vec<C64> = rho.column(j).iter().copied().collect();
    let n = col.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    col.into_iter().map(|c| c / n).collect()
}

/// `2 sqrt(1 - |<psi0|psi1>|^2)` for unit vectors, with `1 - |<.|.>|^2` summed
/// as `sum_{i<j} |a_i b_j - a_j b_i|^2` to avoid cancellation.
pub fn trace_distance_pure(psi0: &[C64], psi1: &[C64]) -> f64 {
    let mut s = 0.0;
    for i in 0..psi0.len() {
        for j in i + 1..psi0.len() {
            s += (psi0[i] * psi1[j] - psi0[j] * psi1[i]).norm_sqr();
        }
    }
    2.0 * s.sqrt()
}

pub fn purity(rho: &CMatrix) -> f64 {
    (rho * rho).trace().re
}

#[derive(Debug, Clone, Serialize)]
pub struct ProtocolResult {
    pub theta_exact: f64,
    pub signal_sim: f64,
    pub signal_analytic: f64,
    /// Trace distance from the pure-state overlap formula.
    pub signal_overlap: f64,
    /// `||psi||` after preparation and each stage, for `s = 0` then `s = 1`.
    pub stage_norms: [[f64; 4]; 2],
    /// `tr rho_B^2` for `s = 0, 1`.
    pub purity: [f64; 2],
    /// `|<B state|(|0> + e^{i phi}|1>)/sqrt 2>|^2` with `phi = +-2 theta`, for `s = 0, 1`.
    pub fidelity: [f64; 2],
}

fn phase_state_fidelity(rho: &CMatrix, phi: f64) -> f64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = [C64::new(s, 0.0), C64::from_polar(s, phi)];
    let mut f = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            f += v[i].conj() * rho[(i, j)] * v[j];
        }
    }
    f.re
}

/// Runs both sender bits and compares the receiver outputs.
pub fn run_pair(cfg: &ProtocolConfig, cap: usize) -> Result<ProtocolResult> {
    let r0 = run_protocol_states(cfg, false, cap)?;
    let r1 = run_protocol_states(cfg, true, cap)?;
    let an = analytic_signal(cfg);
    Ok(ProtocolResult {
        theta_exact: an.theta,
        signal_sim: trace_distance_svd(&r0.rho_b, &r1.rho_b),
        signal_analytic: an.signal,
        signal_overlap: trace_distance_pure(&pure_state(&r0.rho_b), &pure_state(&r1.rho_b)),
        stage_norms: [r0.stage_norms(), r1.stage_norms()],
        purity: [purity(&r0.rho_b), purity(&r1.rho_b)],
        fidelity: [phase_state_fidelity(&r0.rho_b, 2.0 * an.theta), phase_state_fidelity(&r1.rho_b, -2.0 * an.theta)],
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SaturationRequest {
    #[serde(rename = "D")]
    pub d: usize,
    pub alpha: f64,
    pub t_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub c_speed: f64,
    #[serde(default = "one")]
    pub g: f64,
    #[serde(default)]
    pub mode: CouplingMode,
    /// Contour level; defaults to the geometric mean of the extreme unflagged signals.
    #[serde(default)]
    pub contour_level: Option<f64>,
    /// Cap for the statevector spot checks; rows above it are analytic only.
    #[serde(default = "default_cap")]
    pub cap_sites: usize,
}

fn one() -> f64 {
    1.0
}

fn default_cap() -> usize {
    DEFAULT_PROTOCOL_CAP
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturationRow {
    pub d: usize,
    pub alpha: f64,
    pub t: f64,
    pub r: f64,
    pub size_la: usize,
    pub size_lb: usize,
    pub theta: f64,
    pub signal_analytic: f64,
    pub signal_sim: Option<f64>,
    pub mode: CouplingMode,
    /// Outside the small-angle regime or with an empty region; excluded from fits.
    pub flagged: bool,
}

impl SaturationRow {
    pub fn csv_record(&self) -> Vec<String> {
        vec![
            self.d.to_string(),
            self.alpha.to_string(),
            self.t.to_string(),
            self.r.to_string(),
            self.size_la.to_string(),
            self.size_lb.to_string(),
            format!("{:.17e}", self.theta),
            format!("{:.17e}", self.signal_analytic),
            self.signal_sim.map(|s| format!("{s:.17e}")).unwrap_or_default(),
            self.mode.as_str().to_string(),
        ]
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturationFit {
    pub t_slope: f64,
    pub r_slope: f64,
    pub intercept: f64,
    pub rms: f64,
    pub rows_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourFit {
    pub level: f64,
    /// `(t, R)` where the signal crosses the level.
    pub points: Vec<(f64, f64)>,
    pub exponent: f64,
    pub intercept: f64,
    pub rms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturationScan {
    pub rows: Vec<SaturationRow>,
    pub fit: Option<SaturationFit>,
    pub contour: Option<ContourFit>,
    pub expected_t_slope: f64,
    pub expected_r_slope: f64,
    pub expected_contour_exponent: f64,
    /// Largest `|signal_sim - signal_analytic|` over the simulated rows.
    pub max_sim_deviation: f64,
}

/// Least squares for `ln s = c0 + c1 ln t + c2 ln R`.
fn joint_fit(rows: &[&SaturationRow]) -> Option<SaturationFit> {
    if rows.len() < 3 {
        return None;
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    let feats: Vec<(Vector3<f64>, f64)> =
        rows.iter().map(|r| (Vector3::new(1.0, r.t.ln(), r.r.ln()), r.signal_analytic.ln())).collect();
    for (x, y) in &feats {
        ata += x * x.transpose();
        atb += x * *y;
    }
    let c = ata.lu().solve(&atb)?;
    let ss: f64 = feats.iter().map(|(x, y)| (y - c.dot(x)).powi(2)).sum();
    Some(SaturationFit { t_slope: c[1], r_slope: c[2], intercept: c[0], rms: (ss / feats.len() as f64).sqrt(), rows_used: feats.len() })
}

/// For each `t`, the first `R` where the signal drops through `level`, interpolated in log-log.
fn contour(rows: &[&SaturationRow], level: f64) -> Option<ContourFit> {
    let mut points = vec![];
    let mut ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    ts.dedup();
    for t in ts {
        let line: Vec<&&SaturationRow> = rows.iter().filter(|r| r.t == t).collect();
        for w in line.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.signal_analytic >= level && b.signal_analytic < level {
                let (la, lb) = (a.signal_analytic.ln(), b.signal_analytic.ln());
                let f = (la - level.ln()) / (la - lb);
                points.push((t, (a.r.ln() + f * (b.r.ln() - a.r.ln())).exp()));
                break;
            }
        }
    }
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(t, r)| (t.ln(), r.ln())).collect();
    let (exponent, intercept, rms) = line_fit(&logs);
    Some(ContourFit { level, points, exponent, intercept, rms })
}

/// Sweeps `(t, R)` with `|L_A| = |L_B| = floor((c t)^D)` and `t2 = t / 3`, then fits the
/// scaling of the signal and of its constant-signal contour.
pub fn saturation_scan(req: &SaturationRequest) -> Result<SaturationScan> {
    if req.d == 0 || !(req.alpha > 0.0) || !(req.c_speed > 0.0) || !(req.g > 0.0) {
        return Err(invalid("saturation scan needs D >= 1 and positive alpha, c_speed, g"));
    }
    if req.t_grid.iter().chain(&req.r_grid).any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("t and R grids must be positive and finite"));
    }
    let grid: Vec<(f64, f64)> = req.t_grid.iter().flat_map(|&t| req.r_grid.iter().map(move |&r| (t, r))).collect();
    let mut rows: Vec<SaturationRow> = grid
        .par_iter()
        .map(|&(t, r)| -> Result<SaturationRow> {
            // the small offset keeps exact powers from flooring one below
            let size = ((req.c_speed * t).powi(req.d as i32) * (1.0 + 1e-12)).floor() as usize;
            let t2 = t / 3.0;
            let r_int = r.round();
            let sim_ok = req.d == 1 && size > 0 && 2 * size <= req.cap_sites && (r - r_int).abs() < 1e-12 && r_int >= 1.0;
            let (theta, signal_sim) = if sim_ok {
                let cfg = ProtocolConfig::chain(size, size, r_int as usize, req.alpha, req.g, t2, req.mode)?;
                let res = run_pair(&cfg, req.cap_sites)?;
                (res.theta_exact, Some(res.signal_sim))
            } else {
                if req.mode == CouplingMode::DistanceResolved && req.d != 1 {
                    return Err(invalid("distance-resolved sweeps are only defined on chains"));
                }
                let theta = if req.mode == CouplingMode::DistanceResolved && size > 0 {
                    ProtocolConfig::chain(size, size, r_int.max(1.0) as usize, req.alpha, req.g, t2, req.mode)?.theta()
                } else {
                    req.g * t2 * (size * size) as f64 * r.powf(-req.alpha)
                };
                (theta, None)
            };
            Ok(SaturationRow {
                d: req.d,
                alpha: req.alpha,
                t,
                r,
                size_la: size,
                size_lb: size,
                theta,
                signal_analytic: signal_of_theta(theta),
                signal_sim,
                mode: req.mode,
                flagged: size == 0 || theta > SMALL_ANGLE_MAX,
            })
        })
        .collect::<Result<_>>()?;
    rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.r.total_cmp(&b.r)));

    let used: Vec<&SaturationRow> = rows.iter().filter(|r| !r.flagged).collect();
    let fit = joint_fit(&used);
    let level = req.contour_level.or_else(|| {
        let lo = used.iter().map(|r| r.signal_analytic).fold(f64::INFINITY, f64::min);
        let hi = used.iter().map(|r| r.signal_analytic).fold(0.0, f64::max);
        (lo.is_finite() && hi > 0.0).then(|| (lo * hi).sqrt())
    });
    let contour = level.and_then(|l| contour(&used, l));
    let max_sim_deviation = rows
        .iter()
        .filter_map(|r| r.signal_sim.map(|s| (s - r.signal_analytic).abs()))
        .fold(0.0, f64::max);
    let df = req.d as f64;
    Ok(SaturationScan {
        rows,
        fit,
        contour,
        expected_t_slope: 2.0 * df + 1.0,
        expected_r_slope: -req.alpha,
        expected_contour_exponent: (2.0 * df + 1.0) / req.alpha,
        max_sim_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn t2_for(theta: f64, n_a: usize, n_b: usize, r: f64, alpha: f64) -> f64 {
        theta * r.powf(alpha) / (n_a * n_b) as f64
    }

    #[test]
    fn no_evolution_no_signal() {
        let cfg = ProtocolConfig::chain(3, 2, 4, 3.0, 1.0, 0.0, CouplingMode::Idealized).unwrap();
        let res = run_pair(&cfg, 20).unwrap();
        assert!(res.signal_sim.abs() < 1e-14);
        let r0 = run_protocol(&cfg, false, 20).unwrap();
        let r1 = run_protocol(&cfg, true, 20).unwrap();
        assert!((r0 - r1).norm() < 1e-14);
    }

    #[test]
    fn two_qubit_phase() {
        // Z_A Z_B with coupling J for time t: the |1>_B branch picks up e^{+-2iJt} relative to |0>_B
        let (alpha, r, t2) = (2.0, 3usize, 0.7);
        let cfg = ProtocolConfig::chain(1, 1, r, alpha, 1.0, t2, CouplingMode::Idealized).unwrap();
        let theta = t2 / 9.0;
        for (s, sign) in [(false, 1.0), (true, -1.0)] {
            let rho = run_protocol(&cfg, s, 4).unwrap();
            assert!((rho[(0, 0)].re - 0.5).abs() < 1e-14);
            let coh = rho[(1, 0)] * 2.0;
            let want = C64::from_polar(1.0, sign * 2.0 * theta);
            assert!((coh - want).norm() < 1e-14, "s = {s}: {coh} vs {want}");
        }
    }

    #[test]
    fn quarter_turn_gives_orthogonal_outputs() {
        let t2 = t2_for(PI / 4.0, 4, 4, 8.0, 3.0);
        let cfg = ProtocolConfig::chain(4, 4, 8, 3.0, 1.0, t2, CouplingMode::Idealized).unwrap();
        let res = run_pair(&cfg, 20).unwrap();
        assert!((res.signal_sim - 2.0).abs() < 1e-8);
        assert!((analytic_signal(&cfg).signal - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hand_example_four_by_four() {
        let cfg = ProtocolConfig::chain(4, 4, 8, 3.0, 1.0, 1.0, CouplingMode::Idealized).unwrap();
        let an = analytic_signal(&cfg);
        assert_eq!(cfg.distance(), 8.0);
        assert!((an.theta - 0.03125).abs() < 1e-15);
        assert!((an.signal - 2.0 * 0.0625f64.sin()).abs() < 1e-15);
        let res = run_pair(&cfg, 20).unwrap();
        assert!((res.signal_sim - an.signal).abs() < 1e-8);
    }

    #[test]
    fn small_angle_limit() {
        let cfg = ProtocolConfig::chain(2, 3, 10, 3.0, 1.0, 1e-3, CouplingMode::Idealized).unwrap();
        let an = analytic_signal(&cfg);
        assert!((an.signal / (4.0 * an.theta) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn stages_are_pure_and_unit_norm() {
        let cfg = ProtocolConfig::chain(3, 4, 5, 3.5, 0.8, 2.3, CouplingMode::DistanceResolved).unwrap();
        let res = run_pair(&cfg, 20).unwrap();
        for norms in res.stage_norms {
            assert!(norms.iter().all(|n| (n - 1.0).abs() < 1e-12));
        }
        assert!(res.purity.iter().all(|p| (p - 1.0).abs() < 1e-12));
        assert!(res.fidelity.iter().all(|f| (f - 1.0).abs() < 1e-12));
        assert!((res.signal_sim - res.signal_analytic).abs() < 1e-10);
    }

    #[test]
    fn zero_phase_run_returns_to_input_after_hadamard() {
        let cfg = ProtocolConfig::chain(3, 3, 4, 3.0, 1.0, 0.0, CouplingMode::Idealized).unwrap();
        for s in [false, true] {
            let run = run_protocol_states(&cfg, s, 20).unwrap();
            let mut back = run.final_state.clone();
            back.hadamard(cfg.receiver);
            let diff: f64 =
                back.amplitudes().iter().zip(run.initial.amplitudes()).map(|(a, b)| (a - b).norm()).sum();
            assert!(diff < 1e-15);
        }
    }

    #[test]
    fn ghz_after_stage_one() {
        let cfg = ProtocolConfig::chain(2, 3, 3, 3.0, 1.0, 1.0, CouplingMode::Idealized).unwrap();
        let run = run_protocol_states(&cfg, true, 20).unwrap();
        // active order: L_A = {0, 1}, L_B = {4, 5, 6}; both L_A bits set, L_B in GHZ
        let amp = run.after_stage1.amplitudes();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((amp[0b11000].re - s).abs() < 1e-15);
        assert!((amp[0b11111].re - s).abs() < 1e-15);
    }

    #[test]
    fn overlapping_regions_rejected() {
        let mut cfg = ProtocolConfig::chain(2, 2, 3, 3.0, 1.0, 1.0, CouplingMode::Idealized).unwrap();
        cfg.l_b = SiteSet::new(vec![1, 3]);
        assert!(matches!(run_protocol(&cfg, false, 20), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn cap_is_enforced() {
        let cfg = ProtocolConfig::chain(5, 5, 6, 3.0, 1.0, 1.0, CouplingMode::Idealized).unwrap();
        assert!(matches!(run_protocol(&cfg, false, 9), Err(Error::ResourceLimit { sites: 10, cap: 9, .. })));
    }

    #[test]
    fn region_size_limited_by_speed() {
        let mut cfg = ProtocolConfig::chain(4, 4, 8, 3.0, 1.0, 1.0, CouplingMode::Idealized).unwrap();
        cfg.c_speed = Some(3.0);
        assert!(cfg.validate().is_err());
        cfg.c_speed = Some(4.0);
        assert!(cfg.validate().is_ok());
        cfg.g0 = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn distance_resolved_phase_is_weaker_than_nearest_pair() {
        let ideal = ProtocolConfig::chain(3, 3, 6, 3.0, 1.0, 1.0, CouplingMode::Idealized).unwrap();
        let mut resolved = ideal.clone();
        resolved.mode = CouplingMode::DistanceResolved;
        // R is the closest pair; the farthest of the nine pairs sits at R + 4
        assert!(resolved.theta() < ideal.theta());
        assert!(resolved.theta() > 9.0 * 1.0 / (10f64).powi(3));
    }

    fn sweep(alpha: f64) -> SaturationRequest {
        SaturationRequest {
            d: 1,
            alpha,
            t_grid: (2..=8).map(|t| t as f64).collect(),
            r_grid: (0..8).map(|k| 24.0 * 1.25f64.powi(k)).collect(),
            c_speed: 1.0,
            g: 1.0,
            mode: CouplingMode::Idealized,
            contour_level: None,
            cap_sites: 16,
        }
    }

    #[test]
    fn saturation_slopes_match_scaling() {
        let scan = saturation_scan(&sweep(3.0)).unwrap();
        let fit = scan.fit.unwrap();
        assert!((fit.t_slope - 3.0).abs() < 0.05, "{}", fit.t_slope);
        assert!((fit.r_slope + 3.0).abs() < 0.05, "{}", fit.r_slope);
        let c = scan.contour.unwrap();
        assert!((c.exponent - 1.0).abs() < 0.02, "{}", c.exponent);
        assert!(scan.max_sim_deviation < 1e-8);
        assert!(scan.rows.iter().any(|r| r.signal_sim.is_some()));
    }

    #[test]
    fn signal_decreases_along_r() {
        let scan = saturation_scan(&sweep(4.0)).unwrap();
        for t in 2..=8 {
            let line: Vec<f64> = scan.rows.iter().filter(|r| r.t == t as f64).map(|r| r.signal_analytic).collect();
            assert!(line.windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn large_angles_are_flagged() {
        let mut req = sweep(3.0);
        req.r_grid = vec![2.0, 40.0];
        let scan = saturation_scan(&req).unwrap();
        assert!(scan.rows.iter().filter(|r| r.r == 2.0).all(|r| r.flagged));
        assert!(scan.rows.iter().filter(|r| r.r == 40.0).all(|r| !r.flagged && r.theta <= SMALL_ANGLE_MAX));
    }

    #[test]
    fn rows_sorted_and_reproducible() {
        let a = saturation_scan(&sweep(3.0)).unwrap();
        let b = saturation_scan(&sweep(3.0)).unwrap();
        let ka: Vec<(f64, f64)> = a.rows.iter().map(|r| (r.t, r.r)).collect();
        assert!(ka.windows(2).all(|w| w[0] < w[1]));
        let ca: Vec<Vec<String>> = a.rows.iter().map(|r| r.csv_record()).collect();
        let cb: Vec<Vec<String>> = b.rows.iter().map(|r| r.csv_record()).collect();
        assert_eq!(ca, cb);
    }

    proptest! {
        #[test]
        fn both_trace_distance_routes_agree(n_a in 1usize..4, n_b in 1usize..4, r in 1usize..6, t2 in 0.0f64..40.0, alpha in 2.0f64..5.0, resolved in any::<bool>()) {
            let mode = if resolved { CouplingMode::DistanceResolved } else { CouplingMode::Idealized };
            let r = r + n_a.max(n_b);
            let cfg = ProtocolConfig::chain(n_a, n_b, r, alpha, 1.0, t2, mode).unwrap();
            let res = run_pair(&cfg, 20).unwrap();
            prop_assert!((res.signal_sim - res.signal_overlap).abs() < 1e-10);
            prop_assert!((res.signal_sim - res.signal_analytic).abs() < 1e-8);
            prop_assert!((0.0..=2.0 + 1e-12).contains(&res.signal_sim));
        }
    }
}
