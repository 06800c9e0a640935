//! One function per subcommand; each writes its artifacts into the output directory.

use crate::config::*;
use crate::output::OutDir;
use anyhow::{bail, Context, Result};
use lclab_core::bounds::{BoundInputs, BoundParams, MainForm};
use lclab_core::dynamics::linalg::haar_unitary;
use lclab_core::dynamics::{
    front_extract, lightcone_scan, DenseOperator, LanczosOpts, LightConeScan, ScanRequest, SCAN_CSV_HEADER,
};
use lclab_core::hamiltonian::HamiltonianSpec;
use lclab_core::protocol::{saturation_scan, SaturationRequest, PROTOCOL_CSV_HEADER};
use lclab_core::{Lattice, LogReal, SiteSet, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

fn build_operator(spec: &OperatorSpec, seed: u64) -> Result<DenseOperator> {
    Ok(match spec {
        OperatorSpec::Pauli(term) => DenseOperator::from_term(term),
        OperatorSpec::RandomHermitian { sites } => {
            let support = SiteSet::new(sites.clone());
            if support.is_empty() || support.len() > 6 {
                bail!("random_hermitian needs between 1 and 6 sites");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = haar_unitary(1 << support.len(), &mut rng);
            let h = (&u + u.adjoint()) * C64::new(0.5, 0.0);
            let op = DenseOperator::new(h, support)?;
            let n = op.norm();
            op.scale(C64::new(1.0 / n, 0.0))
        }
    })
}

fn bound_inputs(d: usize, alpha: f64, g0: f64, g: f64, gamma: f64, k_local: Option<usize>) -> BoundInputs {
    BoundInputs { g, k_local, ..BoundInputs::new(d, alpha, g0, gamma) }
}

/// Main bound as `f64`; below `|t| = 1` the trivial value 2 is used.
fn bound_or_trivial(b: Result<LogReal, lclab_core::Error>) -> f64 {
    b.map(|v| v.to_f64()).unwrap_or(2.0)
}

pub fn scan(cfg: &ScanConfig, seed: u64, cap: usize, out: &mut OutDir) -> Result<()> {
    let h = HamiltonianSpec::from_json(&cfg.hamiltonian)?;
    let operator = build_operator(&cfg.operator, seed)?;
    let params = match &cfg.bounds {
        Some(b) => Some(BoundParams::new(bound_inputs(
            h.lattice.dim(),
            h.alpha,
            h.g0,
            h.g,
            b.gamma,
            None,
        ))?),
        None => None,
    };
    let size_x = operator.support().len() as f64;
    let env = params.as_ref().map(|p| {
        move |x: f64, t: f64| {
            (
                bound_or_trivial(p.main(x, t, size_x, 1.0, MainForm::Commutator, false)),
                bound_or_trivial(p.main(x, t, size_x, 1.0, MainForm::Local, false)),
            )
        }
    });
    let req = ScanRequest {
        operator,
        probe_pauli: cfg.probe_pauli,
        t_grid: cfg.t_grid.clone(),
        probe: cfg.probe.clone(),
        cap,
        envelope: env.as_ref().map(|f| f as &(dyn Fn(f64, f64) -> (f64, f64) + Sync)),
        lanczos: LanczosOpts::scan(),
    };
    let result = lightcone_scan(&h, &req)?;
    out.csv("scan.csv", &SCAN_CSV_HEADER, result.csv_records())?;
    out.json("scan.json", &result)?;
    Ok(())
}

#[derive(Serialize)]
struct ProtocolReport<'a> {
    fit: &'a Option<lclab_core::protocol::SaturationFit>,
    contour: &'a Option<lclab_core::protocol::ContourFit>,
    expected_t_slope: f64,
    expected_r_slope: f64,
    expected_contour_exponent: f64,
    max_sim_deviation: f64,
    flagged_rows: usize,
    simulated_rows: usize,
}

pub fn protocol(cfg: &SaturationRequest, out: &mut OutDir) -> Result<()> {
    let scan = saturation_scan(cfg)?;
    let header: Vec<&str> = PROTOCOL_CSV_HEADER.split(',').collect();
    out.csv("protocol.csv", &header, scan.rows.iter().map(|r| r.csv_record()))?;
    let report = ProtocolReport {
        fit: &scan.fit,
        contour: &scan.contour,
        expected_t_slope: scan.expected_t_slope,
        expected_r_slope: scan.expected_r_slope,
        expected_contour_exponent: scan.expected_contour_exponent,
        max_sim_deviation: scan.max_sim_deviation,
        flagged_rows: scan.rows.iter().filter(|r| r.flagged).count(),
        simulated_rows: scan.rows.iter().filter(|r| r.signal_sim.is_some()).count(),
    };
    out.json("protocol_fit.json", &report)?;
    Ok(())
}

pub fn bounds(cfg: &BoundsConfig, out: &mut OutDir) -> Result<()> {
    let params = BoundParams::new(bound_inputs(cfg.d, cfg.alpha, cfg.g0, cfg.g, cfg.gamma, cfg.k_local))?;
    let c = &cfg.curves;
    let ln_vbar = params.v_bar().ln();
    let mut rows = vec![];
    for &t in &c.t_grid {
        for &off in &c.ln_x_offsets {
            let x = LogReal::from_ln(ln_vbar + t.abs().ln() + off);
            let comm = params.main(x, t, c.size_x, c.size_y, MainForm::Commutator, false)?;
            let local = params.main(x, t, c.size_x, c.size_y, MainForm::Local, false)?;
            let long = params.long_range(x, t, c.size_x, c.size_y, false)?;
            rows.push([t, off, x.ln(), comm.ln(), local.ln(), long.ln()].map(|v| format!("{v:.17e}")));
        }
    }
    let header = ["t", "ln_x_offset", "ln_x", "ln_commutator", "ln_local", "ln_long_range"];
    out.csv("bounds_curves.csv", &header, rows)?;
    let mut fronts = vec![];
    for &delta in &cfg.delta_grid {
        for &t in &c.t_grid {
            fronts.push(json!({ "delta": delta, "t": t, "ln_x": params.local_front(delta, t)?.ln() }));
        }
    }
    out.json("bounds.json", &json!({ "params": params, "local_front": fronts }))?;
    Ok(())
}

/// Returns whether every check passed.
pub fn validate_lattice(cfg: &LatticeConfig, out: &mut OutDir) -> Result<bool> {
    let lat = Lattice::new(cfg.dim, &cfg.extents)?;
    let report = lat.estimate_gamma(&cfg.xi_range, &cfg.r_range)?;
    let certified = report.certify(&lat)?;
    let s = &cfg.summation;
    let mut summation = vec![];
    for &alpha in &s.alphas {
        let check = lat.validate_summation_lemma(&|z: f64| z.powf(-alpha), s.xi, s.x0, report.gamma)?;
        summation.push(json!({ "alpha": alpha, "check": check }));
    }
    let singles: Vec<SiteSet> = (0..lat.n_sites()).map(SiteSet::single).chain([lat.full()]).collect();
    let (xi1, xi2) = cfg.nesting;
    let nesting = singles.iter().all(|x| lat.check_nesting(x, xi1, xi2));
    let (xi, c) = cfg.two_scale;
    let worst_two_scale = singles.iter().map(|x| lat.two_scale_ratio(x, xi, c, report.gamma)).fold(0.0, f64::max);
    let pass = certified
        && nesting
        && worst_two_scale <= 1.0
        && summation.iter().all(|v| v["check"]["pass"] == Value::Bool(true));
    out.json(
        "validate_lattice.json",
        &json!({
            "gamma": report,
            "certified": certified,
            "summation": summation,
            "nesting": { "xi1": xi1, "xi2": xi2, "pass": nesting },
            "two_scale": { "xi": xi, "c": c, "worst_ratio": worst_two_scale },
            "pass": pass,
        }),
    )?;
    Ok(pass)
}

fn load_scan(path: &Path) -> Result<LightConeScan> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read scan {}", path.display()))?;
    let v: Value = serde_json::from_str(&text)?;
    let body = v.get("result").cloned().unwrap_or(v);
    Ok(serde_json::from_value(body).context("scan file does not hold a light-cone scan")?)
}

pub fn front(cfg: &FrontConfig, config_dir: &Path, out: &mut OutDir) -> Result<()> {
    let scan = match &cfg.source {
        FrontSource::Scan(p) => load_scan(&config_dir.join(p))?,
        FrontSource::Synthetic(s) => LightConeScan::synthetic_front(s.v, &s.t_grid, s.r_max),
    };
    let fit = front_extract(&scan, cfg.delta, cfg.diagnostic)?;
    let rows = fit.points.iter().map(|p| [p.t.to_string(), p.r_front.to_string(), p.saturated.to_string()]);
    out.csv("front.csv", &["t", "r_front", "saturated"], rows)?;
    out.json("front_fit.json", &fit)?;
    Ok(())
}
