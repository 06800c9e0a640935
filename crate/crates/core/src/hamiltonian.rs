//! Symbolic Hamiltonians as lists of real-coefficient Pauli strings.

use crate::error::{invalid, Result};
use crate::lattice::{Lattice, SiteSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// One term `coefficient * P_Z` with a Pauli string on the support `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TermJson", into = "TermJson")]
pub struct InteractionTerm {
    support: SiteSet,
    paulis: Vec<Pauli>,
    pub coefficient: f64,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    sites: Vec<usize>,
    paulis: String,
    coeff: f64,
}

impl TryFrom<TermJson> for InteractionTerm {
    type Error = crate::Error;
    fn try_from(t: TermJson) -> Result<Self> {
        let ps: Option<Vec<Pauli>> = t.paulis.chars().map(Pauli::from_char).collect();
        let ps = ps.ok_or_else(|| invalid(format!("bad Pauli string {:?}", t.paulis)))?;
        InteractionTerm::new(t.sites.into_iter().zip(ps).collect(), t.coeff)
    }
}

impl From<InteractionTerm> for TermJson {
    fn from(t: InteractionTerm) -> Self {
        TermJson {
            sites: t.support.members().to_vec(),
            paulis: t.paulis.iter().map(|p| p.as_char()).collect(),
            coeff: t.coefficient,
        }
    }
}

impl InteractionTerm {
    /// Builds a term from `(site, pauli)` pairs in any order.
    pub fn new(mut ops: Vec<(usize, Pauli)>, coefficient: f64) -> Result<Self> {
        if ops.is_empty() {
            return Err(invalid("an interaction term needs at least one site"));
        }
        if !coefficient.is_finite() {
            return Err(invalid("coefficient must be finite"));
        }
        ops.sort_by_key(|&(s, _)| s);
        if ops.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("repeated site in Pauli string"));
        }
        Ok(InteractionTerm {
            support: ops.iter().map(|&(s, _)| s).collect(),
            paulis: ops.iter().map(|&(_, p)| p).collect(),
            coefficient,
        })
    }

    pub fn support(&self) -> &SiteSet {
        &self.support
    }

    /// Pauli letters aligned with `support().members()`.
    pub fn paulis(&self) -> &[Pauli] {
        &self.paulis
    }

    pub fn ops(&self) -> impl Iterator<Item = (usize, Pauli)> + '_ {
        self.support.iter().zip(self.paulis.iter().copied())
    }

    /// Spectral norm; Pauli strings have unit norm.
    pub fn norm(&self) -> f64 {
        self.coefficient.abs()
    }
}

/// Hamiltonian `H = sum_Z h_Z` over a lattice plus the decay parameters it was built with.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    pub lattice: Lattice,
    pub terms: Vec<InteractionTerm>,
    pub alpha: f64,
    pub g0: f64,
    pub g: f64,
    pub model: String,
    pub b_field: f64,
}

/// JSON shape `{model, dim, extents, alpha, g0, B, g?, terms?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HamiltonianJson {
    pub model: String,
    pub dim: usize,
    pub extents: Vec<usize>,
    pub alpha: f64,
    pub g0: f64,
    #[serde(rename = "B", default)]
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<InteractionTerm>>,
}

pub const POWER_LAW_ISING: &str = "power_law_ising";

impl HamiltonianSpec {
    /// Custom term list; every support must lie on the lattice.
    pub fn from_terms(lattice: Lattice, terms: Vec<InteractionTerm>, alpha: f64, g0: f64) -> Result<Self> {
        let n = lattice.n_sites();
        if let Some(t) = terms.iter().find(|t| t.support().iter().any(|s| s >= n)) {
            return Err(invalid(format!("term on sites {:?} leaves the lattice of {n} sites", t.support().members())));
        }
        Ok(HamiltonianSpec { lattice, terms, alpha, g0, g: 1.0, model: "custom".into(), b_field: 0.0 })
    }

    pub fn from_json(j: &HamiltonianJson) -> Result<Self> {
        let lattice = Lattice::new(j.dim, &j.extents)?;
        let mut h = match &j.terms {
            Some(terms) => {
                let mut h = Self::from_terms(lattice, terms.clone(), j.alpha, j.g0)?;
                h.model = j.model.clone();
                h.b_field = j.b;
                h
            }
            None if j.model == POWER_LAW_ISING => build_power_law_ising(&lattice, j.alpha, j.g0, j.b)?,
            None => return Err(invalid(format!("model {:?} needs an explicit term list", j.model))),
        };
        if let Some(g) = j.g {
            h.g = g;
        }
        Ok(h)
    }

    pub fn to_json(&self, with_terms: bool) -> HamiltonianJson {
        HamiltonianJson {
            model: self.model.clone(),
            dim: self.lattice.dim(),
            extents: self.lattice.extents().to_vec(),
            alpha: self.alpha,
            g0: self.g0,
            b: self.b_field,
            g: Some(self.g),
            terms: with_terms.then(|| self.terms.clone()),
        }
    }

    /// Whether `alpha > 2D + 1`, the regime where the bounds apply.
    pub fn in_bound_regime(&self) -> bool {
        self.alpha > 2.0 * self.lattice.dim() as f64 + 1.0
    }

    fn with_terms(&self, terms: Vec<InteractionTerm>) -> HamiltonianSpec {
        HamiltonianSpec { terms, ..self.clone() }
    }

    fn term_diam(&self, t: &InteractionTerm) -> usize {
        self.lattice.diam(t.support())
    }

    /// `H_{<= ell}`: terms with `diam(Z) <= ell`.
    pub fn truncate_by_diameter(&self, ell: f64) -> HamiltonianSpec {
        self.split_by_diameter(ell).0
    }

    /// `(H_{<= ell}, H_{> ell})`.
    pub fn split_by_diameter(&self, ell: f64) -> (HamiltonianSpec, HamiltonianSpec) {
        let (le, gt): (Vec<_>, Vec<_>) =
            self.terms.iter().cloned().partition(|t| self.term_diam(t) as f64 <= ell);
        (self.with_terms(le), self.with_terms(gt))
    }

    /// Terms with `ell_lo <= diam(Z) < ell_hi`, or `<= ell_hi` when `closed_top`.
    pub fn band(&self, ell_lo: f64, ell_hi: f64, closed_top: bool) -> HamiltonianSpec {
        let keep = |d: f64| d >= ell_lo && (d < ell_hi || (closed_top && d <= ell_hi));
        self.with_terms(self.terms.iter().filter(|t| keep(self.term_diam(t) as f64)).cloned().collect())
    }

    /// `max_i sum_{Z contains i} ||h_Z||`.
    pub fn one_site_energy(&self) -> f64 {
        let mut acc = vec![0.0; self.lattice.n_sites()];
        for t in &self.terms {
            for s in t.support().iter() {
                acc[s] += t.norm();
            }
        }
        acc.into_iter().fold(0.0, f64::max)
    }

    /// Direct-summation check of the two power-law decay assumptions.
    pub fn check_assumptions(&self, g: f64, g0: f64) -> AssumptionReport {
        let lat = &self.lattice;
        let n = lat.n_sites();
        let d = lat.dim() as f64;
        let alpha = self.alpha;
        let diams: Vec<usize> = self.terms.iter().map(|t| self.term_diam(t)).collect();
        let r_max = diams.iter().copied().max().unwrap_or(1).max(1);

        // (a) sup_i sum_{Z contains i, diam Z >= r} ||h_Z|| <= g r^{D - alpha}
        let mut g_min = 0.0f64;
        let mut worst_a = 0.0f64;
        for r in 1..=r_max {
            let mut acc = vec![0.0; n];
            for (t, &dz) in self.terms.iter().zip(&diams) {
                if dz >= r {
                    for s in t.support().iter() {
                        acc[s] += t.norm();
                    }
                }
            }
            let lhs = acc.into_iter().fold(0.0, f64::max);
            let scale = (r as f64).powf(alpha - d);
            g_min = g_min.max(lhs * scale);
            worst_a = worst_a.max(lhs * scale / g);
        }

        // (b) sup_{i,j} sum_{Z contains i and j} ||h_Z|| <= g0 (d_ij + 1)^{-alpha}
        let mut pair = vec![0.0; n * n];
        for t in &self.terms {
            let m = t.support().members();
            for (a, &i) in m.iter().enumerate() {
                for &j in &m[a..] {
                    pair[i * n + j] += t.norm();
                }
            }
        }
        let mut g0_min = 0.0f64;
        let mut g0_min_unshifted = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let lhs = pair[i * n + j];
                if lhs == 0.0 {
                    continue;
                }
                let dij = lat.distance(i, j) as f64;
                g0_min = g0_min.max(lhs * (dij + 1.0).powf(alpha));
                if i != j {
                    g0_min_unshifted = g0_min_unshifted.max(lhs * dij.powf(alpha));
                }
            }
        }
        AssumptionReport {
            g_min,
            g0_min,
            g0_min_unshifted,
            worst_ratio_a: worst_a,
            worst_ratio_b: g0_min / g0,
            pass_a: g_min <= g,
            pass_b: g0_min <= g0,
            r_max,
        }
    }
}

/// Outcome of [`HamiltonianSpec::check_assumptions`]; failing is a report, not an error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Smallest `g` passing the single-site tail condition.
    pub g_min: f64,
    /// Smallest `g0` passing the pair condition with `(d+1)^{-alpha}`.
    pub g0_min: f64,
    /// Smallest prefactor of `d^{-alpha}` over distinct pairs, the normalization of the model itself.
    pub g0_min_unshifted: f64,
    pub worst_ratio_a: f64,
    pub worst_ratio_b: f64,
    pub pass_a: bool,
    pub pass_b: bool,
    pub r_max: usize,
}

/// `sum_{i<j} g0 d_ij^{-alpha} X_i X_j + B sum_i Z_i`; zero fields are omitted.
pub fn build_power_law_ising(lattice: &Lattice, alpha: f64, g0: f64, b: f64) -> Result<HamiltonianSpec> {
    if !(alpha > 0.0) || !(g0 > 0.0) {
        return Err(invalid(format!("power-law Ising needs alpha > 0 and g0 > 0, got alpha={alpha}, g0={g0}")));
    }
    let n = lattice.n_sites();
    let mut terms = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d = lattice.distance(i, j) as f64;
            terms.push(InteractionTerm::new(vec![(i, Pauli::X), (j, Pauli::X)], g0 * d.powf(-alpha))?);
        }
    }
    if b != 0.0 {
        for i in 0..n {
            terms.push(InteractionTerm::new(vec![(i, Pauli::Z)], b)?);
        }
    }
    Ok(HamiltonianSpec {
        lattice: lattice.clone(),
        terms,
        alpha,
        g0,
        g: 1.0,
        model: POWER_LAW_ISING.into(),
        b_field: b,
    })
}
