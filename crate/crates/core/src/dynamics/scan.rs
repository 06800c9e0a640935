//! Locality diagnostics built on exact evolution: approximation errors, shell
//! decompositions, light-cone scans and front extraction.

use super::evolve::{commutator_norm_local, Evolver};
use super::linalg::LanczosOpts;
use super::operator::DenseOperator;
use crate::error::{invalid, Result};
use crate::hamiltonian::{HamiltonianSpec, InteractionTerm, Pauli};
use crate::lattice::{Lattice, SiteSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// `|| O(t) - local_approx(O(t), X[r]) ||` for an already evolved `O(t)` on the whole lattice.
pub fn approx_error_evolved(lattice: &Lattice, o_t: &DenseOperator, x: &SiteSet, r: f64) -> Result<f64> {
    let region = lattice.ball(x, r);
    if region.len() == o_t.support().len() {
        return Ok(0.0);
    }
    Ok(o_t.sub(&o_t.local_approx(&region)?)?.norm())
}

/// `|| O_X(t) - local_approx(O_X(t), X[r]) ||` with `H` simulated on the full lattice.
pub fn approx_error(h: &HamiltonianSpec, o_x: &DenseOperator, t: f64, r: f64, cap: usize) -> Result<f64> {
    let ev = Evolver::new(h, &h.lattice.full(), cap)?;
    let o_t = ev.evolve_dense(o_x, t)?;
    approx_error_evolved(&h.lattice, &o_t, o_x.support(), r)
}

#[derive(Debug, Clone)]
pub struct Shell {
    pub s: usize,
    pub region: SiteSet,
    pub operator: DenseOperator,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct ShellDecomposition {
    pub shells: Vec<Shell>,
    /// `|| a_Z(t) - sum_s shells ||`.
    pub residual: f64,
}

/// Telescoping decomposition of `a_Z(t)` over the balls `Z[s xi]`, `s = 1..=s_max`.
pub fn decompose_evolved_operator(
    h0: &HamiltonianSpec,
    a_z: &InteractionTerm,
    t: f64,
    xi_tilde: f64,
    s_max: usize,
    cap: usize,
) -> Result<ShellDecomposition> {
    if !(xi_tilde > 0.0) || s_max == 0 {
        return Err(invalid("shell width must be positive and s_max at least 1"));
    }
    let lat = &h0.lattice;
    let ev = Evolver::new(h0, &lat.full(), cap)?;
    let a_t = ev.evolve_dense(&DenseOperator::from_term(a_z), t)?;
    let mut shells = Vec::with_capacity(s_max);
    let mut prev: Option<DenseOperator> = None;
    let mut sum = DenseOperator::zeros(lat.full());
    for s in 1..=s_max {
        let region = lat.ball(a_z.support(), s as f64 * xi_tilde);
        let la = a_t.local_approx(&region)?;
        let op = match &prev {
            None => la.clone(),
            Some(p) => la.sub(p)?,
        };
        sum = sum.add(&op)?;
        let norm = op.norm();
        shells.push(Shell { s, region, operator: op, norm });
        prev = Some(la);
    }
    let residual = a_t.sub(&sum)?.norm();
    Ok(ShellDecomposition { shells, residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Probe {
    /// Commutators with a Pauli on each listed site.
    Sites(Vec<usize>),
    /// Approximation errors at each radius, plus the largest commutator at that exact distance.
    Radii(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    /// Site index in site mode, radius in radius mode.
    pub probe: usize,
    /// Distance from the operator support.
    pub distance: usize,
    pub comm_norm: Option<f64>,
    pub approx_err: Option<f64>,
    pub bound_comm: Option<f64>,
    pub bound_approx: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LightConeScan {
    pub rows: Vec<ScanRow>,
    pub n_sites: usize,
    pub dim: usize,
    pub alpha: f64,
    pub model: String,
    pub operator_support: Vec<usize>,
    pub probe_pauli: Pauli,
}

pub const SCAN_CSV_HEADER: [&str; 6] = ["t", "probe", "comm_norm", "approx_err", "bound_comm", "bound_approx"];

impl LightConeScan {
    /// Rows as CSV records in [`SCAN_CSV_HEADER`] order; missing values are empty.
    pub fn csv_records(&self) -> Vec<[String; 6]> {
        let f = |v: Option<f64>| v.map(|x| format!("{x:.12e}")).unwrap_or_default();
        self.rows
            .iter()
            .map(|r| [format!("{}", r.t), r.probe.to_string(), f(r.comm_norm), f(r.approx_err), f(r.bound_comm), f(r.bound_approx)])
            .collect()
    }

    /// Synthetic scan with `comm_norm = exp(-(r - v t))` at distances `0..=r_max`, for testing front fits.
    pub fn synthetic_front(v: f64, t_grid: &[f64], r_max: usize) -> Self {
        let rows = t_grid
            .iter()
            .flat_map(|&t| {
                (0..=r_max).map(move |r| ScanRow {
                    t,
                    probe: r,
                    distance: r,
                    comm_norm: Some((-(r as f64 - v * t)).exp()),
                    approx_err: None,
                    bound_comm: None,
                    bound_approx: None,
                })
            })
            .collect();
        LightConeScan {
            rows,
            n_sites: r_max + 1,
            dim: 1,
            alpha: f64::INFINITY,
            model: "synthetic".into(),
            operator_support: vec![0],
            probe_pauli: Pauli::Z,
        }
    }
}

/// Envelope `(x, t) -> (commutator bound, approximation bound)` attached to scan rows.
pub type Envelope<'a> = &'a (dyn Fn(f64, f64) -> (f64, f64) + Sync);

pub struct ScanRequest<'a> {
    pub operator: DenseOperator,
    pub probe_pauli: Pauli,
    pub t_grid: Vec<f64>,
    pub probe: Probe,
    pub cap: usize,
    pub envelope: Option<Envelope<'a>>,
    /// Stopping rules for matrix-free commutator norms (systems above eight sites).
    pub lanczos: LanczosOpts,
}

/// Evaluates the diagnostics over `t_grid x probe` with rows sorted by `(t, probe)`.
pub fn lightcone_scan(h: &HamiltonianSpec, req: &ScanRequest) -> Result<LightConeScan> {
    let lat = &h.lattice;
    let full = lat.full();
    let ev = Evolver::new(h, &full, req.cap)?;
    let x = req.operator.support().clone();
    if let Some(t) = req.t_grid.iter().find(|t| !t.is_finite()) {
        return Err(invalid(format!("time {t} is not finite")));
    }
    let pauli_at = |j: usize| DenseOperator::pauli_string(&[(j, req.probe_pauli)], 1.0);
    let mut rows: Vec<ScanRow> = match &req.probe {
        Probe::Sites(js) => {
            if let Some(j) = js.iter().find(|&&j| j >= lat.n_sites()) {
                return Err(invalid(format!("probe site {j} is outside the lattice")));
            }
            let small = ev.n_sites() <= super::evolve::EIGEN_MAX_SITES;
            let per_t = |t: f64| -> Result<Vec<ScanRow>> {
                let o_t = if small { Some(ev.evolve_dense(&req.operator, t)?) } else { None };
                let eval = |j: usize| -> Result<ScanRow> {
                    let p = pauli_at(j)?;
                    let c = match &o_t {
                        Some(o) => commutator_norm_local(o, &p)?,
                        None => ev.commutator_norm_matrix_free(&req.operator, t, &p, &req.lanczos)?,
                    };
                    Ok(ScanRow {
                        t,
                        probe: j,
                        distance: lat.distance_to_set(&x, j),
                        comm_norm: Some(c),
                        approx_err: None,
                        bound_comm: None,
                        bound_approx: None,
                    })
                };
                if small {
                    js.iter().map(|&j| eval(j)).collect()
                } else {
                    js.par_iter().map(|&j| eval(j)).collect()
                }
            };
            let chunks: Result<Vec<Vec<ScanRow>>> = if small {
                req.t_grid.par_iter().map(|&t| per_t(t)).collect()
            } else {
                req.t_grid.iter().map(|&t| per_t(t)).collect()
            };
            chunks?.into_iter().flatten().collect()
        }
        Probe::Radii(rs) => {
            let mut out = Vec::new();
            for &t in &req.t_grid {
                let o_t = ev.evolve_dense(&req.operator, t)?;
                let part: Result<Vec<ScanRow>> = rs
                    .par_iter()
                    .map(|&r| {
                        let err = approx_error_evolved(lat, &o_t, &x, r as f64)?;
                        let mut comm: Option<f64> = None;
                        for j in (0..lat.n_sites()).filter(|&j| lat.distance_to_set(&x, j) == r) {
                            let c = commutator_norm_local(&o_t, &pauli_at(j)?)?;
                            comm = Some(comm.map_or(c, |m| m.max(c)));
                        }
                        Ok(ScanRow {
                            t,
                            probe: r,
                            distance: r,
                            comm_norm: comm,
                            approx_err: Some(err),
                            bound_comm: None,
                            bound_approx: None,
                        })
                    })
                    .collect();
                out.extend(part?);
            }
            out
        }
    };
    if let Some(env) = req.envelope {
        for row in &mut rows {
            let (bc, ba) = env(row.distance as f64, row.t);
            row.bound_comm = Some(bc);
            row.bound_approx = Some(ba);
        }
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.probe.cmp(&b.probe)));
    Ok(LightConeScan {
        rows,
        n_sites: lat.n_sites(),
        dim: lat.dim(),
        alpha: h.alpha,
        model: h.model.clone(),
        operator_support: x.members().to_vec(),
        probe_pauli: req.probe_pauli,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Diagnostic {
    Commutator,
    Approximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub t: f64,
    pub r_front: usize,
    /// The front has reached the farthest probe, so the point is left out of the fit.
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontFit {
    pub points: Vec<FrontPoint>,
    pub v_fit: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the line fit.
    pub residual: f64,
}

/// Smallest `r` such that the diagnostic is below `delta` at every probed distance `>= r`,
/// then a least-squares line `r_front = v t + c` through the unsaturated points.
pub fn front_extract(scan: &LightConeScan, delta: f64, diagnostic: Diagnostic) -> Result<FrontFit> {
    if !(delta >= 1e-12) {
        return Err(invalid(format!("delta = {delta} is below the numerical floor 1e-12")));
    }
    let mut ts: Vec<f64> = scan.rows.iter().map(|r| r.t).collect();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    let mut points = Vec::with_capacity(ts.len());
    for &t in &ts {
        let mut by_r: Vec<(usize, f64)> = scan
            .rows
            .iter()
            .filter(|r| r.t == t)
            .filter_map(|r| {
                let v = match diagnostic {
                    Diagnostic::Commutator => r.comm_norm,
                    Diagnostic::Approximation => r.approx_err,
                }?;
                Some((r.distance, v))
            })
            .collect();
        by_r.sort_by_key(|p| p.0);
        let r_max = by_r.last().map_or(0, |p| p.0);
        let r_front = by_r.iter().filter(|p| p.1 >= delta).map(|p| p.0 + 1).max().unwrap_or(0);
        points.push(FrontPoint { t, r_front, saturated: !by_r.is_empty() && r_front > r_max });
    }
    let fit: Vec<(f64, f64)> = points.iter().filter(|p| !p.saturated).map(|p| (p.t, p.r_front as f64)).collect();
    let (v_fit, intercept, residual) = line_fit(&fit);
    Ok(FrontFit { points, v_fit, intercept, residual })
}

/// Ordinary least squares `y = a x + b`; `NaN` slope when fewer than two distinct `x`.
pub fn line_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    if pts.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (f64::NAN, my, f64::NAN);
    }
    let a = sxy / sxx;
    let b = my - a * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum();
    (a, b, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::linalg::haar_unitary;
    use crate::dynamics::operator::CMatrix;
    use crate::hamiltonian::build_power_law_ising;
    use crate::C64;
    use rand::SeedableRng;

    fn z(s: usize) -> DenseOperator {
        DenseOperator::pauli_string(&[(s, Pauli::Z)], 1.0).unwrap()
    }

    #[test]
    fn approx_error_trivial_cases() {
        let h = build_power_law_ising(&Lattice::chain(5).unwrap(), 3.0, 1.0, 0.7).unwrap();
        assert_eq!(approx_error(&h, &z(0), 0.0, 0.0, 14).unwrap(), 0.0);
        assert!(approx_error(&h, &z(0), 0.0, 0.0, 14).unwrap() < 1e-15);
        assert_eq!(approx_error(&h, &z(0), 1.3, 4.0, 14).unwrap(), 0.0);
    }

    #[test]
    fn approx_error_nonincreasing_on_eight_sites() {
        let h = build_power_law_ising(&Lattice::chain(8).unwrap(), 4.0, 1.0, 0.9).unwrap();
        let ev = Evolver::new(&h, &h.lattice.full(), 14).unwrap();
        let o_t = ev.evolve_dense(&z(0), 0.4).unwrap();
        let errs: Vec<f64> =
            (1..=7).map(|r| approx_error_evolved(&h.lattice, &o_t, &SiteSet::single(0), r as f64).unwrap()).collect();
        assert!(errs[0] > 1e-6);
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{errs:?}");
        assert_eq!(errs[6], 0.0);
    }

    #[test]
    fn haar_average_converges_to_partial_trace() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let o = DenseOperator::new(haar_unitary(8, &mut rng), (0..3).collect()).unwrap();
        let region = SiteSet::new(vec![1]);
        let exact = o.local_approx(&region).unwrap();
        let samples = 400;
        let comp = SiteSet::new(vec![0, 2]);
        let mut acc = CMatrix::zeros(8, 8);
        for _ in 0..samples {
            let u = DenseOperator::new(haar_unitary(4, &mut rng), comp.clone()).unwrap();
            acc += u.mul(&o).unwrap().mul(&u.adjoint()).unwrap().matrix();
        }
        let avg = DenseOperator::new(acc / C64::new(samples as f64, 0.0), o.support().clone()).unwrap();
        let dev = avg.sub(&exact).unwrap().norm();
        assert!(dev <= 5.0 / (samples as f64).sqrt(), "{dev}");
    }

    #[test]
    fn shells_at_time_zero() {
        let h = build_power_law_ising(&Lattice::chain(5).unwrap(), 3.0, 1.0, 0.5).unwrap();
        let a = InteractionTerm::new(vec![(1, Pauli::X), (2, Pauli::X)], 1.0).unwrap();
        let d = decompose_evolved_operator(&h, &a, 0.0, 1.0, 3, 14).unwrap();
        assert!((d.shells[0].norm - 1.0).abs() < 1e-12);
        assert!(d.shells[1..].iter().all(|s| s.norm < 1e-14));
        let dt = decompose_evolved_operator(&h, &a, 0.8, 1.0, 3, 14).unwrap();
        assert!(dt.residual < 1e-12);
    }

    fn synthetic(ts: &[f64]) -> LightConeScan {
        let mut rows = Vec::new();
        for &t in ts {
            for r in 0..=30usize {
                rows.push(ScanRow {
                    t,
                    probe: r,
                    distance: r,
                    comm_norm: Some((-(r as f64 - 2.0 * t)).exp()),
                    approx_err: Some(0.0),
                    bound_comm: None,
                    bound_approx: None,
                });
            }
        }
        LightConeScan {
            rows,
            n_sites: 31,
            dim: 1,
            alpha: 4.0,
            model: "synthetic".into(),
            operator_support: vec![0],
            probe_pauli: Pauli::Z,
        }
    }

    #[test]
    fn front_on_synthetic_exponential() {
        let scan = synthetic(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let fit = front_extract(&scan, (-3.0f64).exp(), Diagnostic::Commutator).unwrap();
        // exp(-(r - 2t)) < e^{-3} holds exactly for r > 2t + 3.
        for p in &fit.points {
            assert_eq!(p.r_front as f64, 2.0 * p.t + 4.0);
        }
        assert!((fit.v_fit - 2.0).abs() < 1e-12 && fit.residual < 1e-12);
        let zero = front_extract(&scan, 1.0, Diagnostic::Approximation).unwrap();
        assert!(zero.points.iter().all(|p| p.r_front == 0));
        assert!(front_extract(&scan, 1e-13, Diagnostic::Commutator).is_err());
    }

    #[test]
    fn scan_rows_sorted_and_zero_at_t0() {
        let h = build_power_law_ising(&Lattice::chain(6).unwrap(), 4.0, 1.0, 0.8).unwrap();
        let req = ScanRequest {
            operator: z(0),
            probe_pauli: Pauli::Z,
            t_grid: vec![0.5, 0.0, 0.25],
            probe: Probe::Sites(vec![5, 1, 3]),
            cap: 14,
            envelope: None,
            lanczos: LanczosOpts::default(),
        };
        let scan = lightcone_scan(&h, &req).unwrap();
        assert_eq!(scan.rows.len(), 9);
        assert!(scan.rows.windows(2).all(|w| (w[0].t, w[0].probe) < (w[1].t, w[1].probe)));
        assert!(scan.rows.iter().filter(|r| r.t == 0.0).all(|r| r.comm_norm == Some(0.0)));
    }

    #[test]
    fn scan_invariant_under_global_flip() {
        use crate::dynamics::evolve::{commutator_norm, evolve_operator, realize, Backend};
        let n = 6;
        let h = build_power_law_ising(&Lattice::chain(n).unwrap(), 4.0, 1.0, 0.0).unwrap();
        let full = h.lattice.full();
        let req = ScanRequest {
            operator: z(0),
            probe_pauli: Pauli::Z,
            t_grid: vec![0.3, 0.9],
            probe: Probe::Radii(vec![1, 2, 3]),
            cap: 14,
            envelope: None,
            lanczos: LanczosOpts::default(),
        };
        let scan = lightcone_scan(&h, &req).unwrap();
        // Recompute with everything conjugated by F = prod_i X_i, built from Kronecker products.
        let f = DenseOperator::pauli_string(&(0..n).map(|i| (i, Pauli::X)).collect::<Vec<_>>(), 1.0).unwrap();
        let conj = |a: &DenseOperator| f.mul(&a.embed(&full).unwrap()).unwrap().mul(&f).unwrap();
        let hm = realize(&h, &full, 14).unwrap().operator;
        let hf = conj(&hm);
        assert!(hf.sub(&hm).unwrap().norm() < 1e-12);
        for row in &scan.rows {
            let o_t = evolve_operator(&hf, &conj(&z(0)), row.t, Backend::Expm).unwrap();
            let c = commutator_norm(&o_t, &conj(&z(row.probe))).unwrap();
            assert!((c - row.comm_norm.unwrap()).abs() < 1e-9, "{row:?} {c}");
            let e = approx_error_evolved(&h.lattice, &o_t, &SiteSet::single(0), row.probe as f64).unwrap();
            assert!((e - row.approx_err.unwrap()).abs() < 1e-9);
        }
    }
}
