//! Open-boundary hypercubic lattices with the l1 (graph) metric.
//!
//! Balls `X[r]`, greedy coarse-grained subsets `X^(xi)`, an empirical
//! estimate of the geometric constant `gamma`, and a direct check of the
//! discrete summation inequality over the coarse-grained lattice.

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};

/// D-dimensional open-boundary hypercubic lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LatticeJson", into = "LatticeJson")]
pub struct Lattice {
    dim: usize,
    extents: Vec<usize>,
    coords: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    dim: usize,
    extents: Vec<usize>,
}

impl TryFrom<LatticeJson> for Lattice {
    type Error = crate::Error;
    fn try_from(j: LatticeJson) -> Result<Self> {
        Lattice::new(j.dim, &j.extents)
    }
}

impl From<Lattice> for LatticeJson {
    fn from(l: Lattice) -> Self {
        LatticeJson { dim: l.dim, extents: l.extents }
    }
}

/// Sorted, duplicate-free set of site indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct SiteSet(Vec<usize>);

impl From<Vec<usize>> for SiteSet {
    fn from(v: Vec<usize>) -> Self {
        SiteSet::new(v)
    }
}

impl From<SiteSet> for Vec<usize> {
    fn from(s: SiteSet) -> Self {
        s.0
    }
}

impl FromIterator<usize> for SiteSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        SiteSet::new(iter.into_iter().collect())
    }
}

impl SiteSet {
    pub fn new(mut v: Vec<usize>) -> Self {
        v.sort_unstable();
        v.dedup();
        SiteSet(v)
    }

    pub fn single(i: usize) -> Self {
        SiteSet(vec![i])
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &SiteSet) -> bool {
        self.0.iter().all(|&i| other.contains(i))
    }

    pub fn is_disjoint(&self, other: &SiteSet) -> bool {
        self.0.iter().all(|&i| !other.contains(i))
    }

    pub fn union(&self, other: &SiteSet) -> SiteSet {
        SiteSet::new(self.0.iter().chain(other.0.iter()).copied().collect())
    }

    /// Position of site `i` inside the sorted member list.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.0.binary_search(&i).ok()
    }
}

/// Fixed-size bitset over lattice sites, used by the greedy cover.
#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and_count(&self, other: &Bits) -> u32 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a & b).count_ones()).sum()
    }

    fn clear_from(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= !b;
        }
    }

    fn any(&self) -> bool {
        self.0.iter().any(|&w| w != 0)
    }
}

impl Lattice {
    /// Builds a lattice with `extents[k]` sites along axis `k`.
    pub fn new(dim: usize, extents: &[usize]) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("lattice dimension must be at least 1"));
        }
        if extents.len() != dim {
            return Err(invalid(format!("expected {dim} extents, got {}", extents.len())));
        }
        if extents.iter().any(|&e| e == 0) {
            return Err(invalid("every lattice extent must be positive"));
        }
        let n: usize = extents.iter().product();
        let mut coords = vec![0i64; n * dim];
        for i in 0..n {
            let mut rem = i;
            for k in (0..dim).rev() {
                coords[i * dim + k] = (rem % extents[k]) as i64;
                rem /= extents[k];
            }
        }
        Ok(Lattice { dim, extents: extents.to_vec(), coords })
    }

    /// Open chain of `n` sites.
    pub fn chain(n: usize) -> Result<Self> {
        Lattice::new(1, &[n])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn n_sites(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn coords(&self, i: usize) -> &[i64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Site index of integer coordinates (last axis fastest).
    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let mut idx = 0;
        for (k, &c) in coords.iter().enumerate() {
            if c >= self.extents[k] {
                return None;
            }
            idx = idx * self.extents[k] + c;
        }
        Some(idx)
    }

    pub fn full(&self) -> SiteSet {
        SiteSet((0..self.n_sites()).collect())
    }

    pub fn distance(&self, i: usize, j: usize) -> usize {
        self.coords(i)
            .iter()
            .zip(self.coords(j))
            .map(|(a, b)| (a - b).unsigned_abs() as usize)
            .sum()
    }

    /// `d(X, i) = min_{x in X} d(x, i)`.
    pub fn distance_to_set(&self, x: &SiteSet, i: usize) -> usize {
        x.iter().map(|j| self.distance(i, j)).min().unwrap_or(usize::MAX)
    }

    /// Minimum distance between two sets.
    pub fn set_distance(&self, x: &SiteSet, y: &SiteSet) -> usize {
        y.iter().map(|j| self.distance_to_set(x, j)).min().unwrap_or(usize::MAX)
    }

    /// `diam(X) = max_{i,j in X} d(i,j) + 1`; zero for the empty set.
    pub fn diam(&self, x: &SiteSet) -> usize {
        if x.is_empty() {
            return 0;
        }
        let m = x.members();
        let mut best = 0;
        for (a, &i) in m.iter().enumerate() {
            for &j in &m[a + 1..] {
                best = best.max(self.distance(i, j));
            }
        }
        best + 1
    }

    /// Largest distance realized on the lattice.
    pub fn max_distance(&self) -> usize {
        self.extents.iter().map(|e| e - 1).sum()
    }

    /// `X[r] = {i : d(X, i) <= r}`.
    pub fn ball(&self, x: &SiteSet, r: f64) -> SiteSet {
        (0..self.n_sites())
            .filter(|&i| (self.distance_to_set(x, i) as f64) <= r)
            .collect()
    }

    fn ball_bits(&self, center: usize, r: f64) -> Bits {
        let mut b = Bits::empty(self.n_sites());
        for i in 0..self.n_sites() {
            if (self.distance(center, i) as f64) <= r {
                b.set(i);
            }
        }
        b
    }

    /// Greedy cover of `targets` by balls of radius `xi` centred on `candidates`:
    /// repeatedly take the candidate covering the most uncovered targets,
    /// breaking ties towards the lowest site index.
    fn greedy_cover(&self, targets: &SiteSet, candidates: &SiteSet, xi: f64) -> SiteSet {
        let n = self.n_sites();
        let mut uncovered = Bits::empty(n);
        for i in targets.iter() {
            uncovered.set(i);
        }
        let balls: Vec<(usize, Bits)> =
            candidates.iter().map(|c| (c, self.ball_bits(c, xi))).collect();
        let mut chosen = Vec::new();
        while uncovered.any() {
            let mut best: Option<(u32, usize)> = None;
            for (k, (_, b)) in balls.iter().enumerate() {
                let gain = b.and_count(&uncovered);
                if gain > 0 && best.is_none_or(|(g, _)| gain > g) {
                    best = Some((gain, k));
                }
            }
            let Some((_, k)) = best else {
                panic!("greedy cover: candidates cannot cover the targets");
            };
            chosen.push(balls[k].0);
            uncovered.clear_from(&balls[k].1);
        }
        SiteSet::new(chosen)
    }

    /// Coarse-grained total set `Lambda^(xi)`: greedy subset whose xi-balls cover the lattice.
    pub fn coarse_grain_total(&self, xi: f64) -> SiteSet {
        if xi <= 0.0 {
            return self.full();
        }
        let all = self.full();
        self.greedy_cover(&all, &all, xi)
    }

    /// Coarse-grained subset `X^(xi)`, a greedy cover of `X` drawn from `Lambda^(xi)`.
    pub fn coarse_grain(&self, x: &SiteSet, xi: f64) -> SiteSet {
        if xi <= 0.0 {
            return x.clone();
        }
        let total = self.coarse_grain_total(xi);
        self.coarse_grain_within(x, xi, &total)
    }

    /// As [`Lattice::coarse_grain`] with a precomputed `Lambda^(xi)`.
    pub fn coarse_grain_within(&self, x: &SiteSet, xi: f64, total: &SiteSet) -> SiteSet {
        if xi <= 0.0 {
            return x.clone();
        }
        self.greedy_cover(x, total, xi)
    }

    /// Number of coarse-grained sites `j` with `r <= d(i, j) < r + xi`.
    fn shell_count(&self, total: &SiteSet, i: usize, r: f64, xi: f64) -> usize {
        total
            .iter()
            .filter(|&j| {
                let d = self.distance(i, j) as f64;
                r <= d && d < r + xi
            })
            .count()
    }

    /// Sample sets for the gamma inequalities: every ball `i[r]`, `r in {0} u r_range`, and the full lattice.
    fn gamma_samples(&self, r_range: &[f64]) -> Vec<SiteSet> {
        let mut out = vec![self.full()];
        for i in 0..self.n_sites() {
            out.push(SiteSet::single(i));
            for &r in r_range {
                out.push(self.ball(&SiteSet::single(i), r));
            }
        }
        out.sort_by(|a, b| a.members().cmp(b.members()));
        out.dedup();
        out
    }

    /// Smallest `gamma >= 1` satisfying the four geometric inequalities on the sampled ranges.
    pub fn estimate_gamma(&self, xi_range: &[f64], r_range: &[f64]) -> Result<GammaReport> {
        if xi_range.is_empty() || r_range.is_empty() {
            return Err(invalid("estimate_gamma needs nonempty xi and r ranges"));
        }
        if xi_range.iter().chain(r_range).any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(invalid("xi and r values must be positive and finite"));
        }
        let d = self.dim as i32;
        let samples = self.gamma_samples(r_range);
        let mut worst = [0.0f64; 4];

        for x in &samples {
            worst[0] = worst[0].max(x.len() as f64 / (self.diam(x) as f64).powi(d));
        }
        for &r in r_range.iter().filter(|&&r| r >= 1.0) {
            for i in 0..self.n_sites() {
                let size = self.ball(&SiteSet::single(i), r).len() as f64;
                worst[1] = worst[1].max(size / (2.0 * r).powi(d));
            }
        }
        for &xi in xi_range {
            let total = self.coarse_grain_total(xi);
            for x in &samples {
                let cg = self.coarse_grain_within(x, xi, &total).len();
                if cg > 1 {
                    worst[2] = worst[2].max(cg as f64 / (self.diam(x) as f64 / xi).powi(d));
                }
            }
            if xi >= 1.0 {
                for &r in r_range.iter().filter(|&&r| r >= xi) {
                    let rhs = 2.0 * self.dim as f64 * (2.0 * r / xi).powi(d - 1);
                    for i in 0..self.n_sites() {
                        let c = self.shell_count(&total, i, r, xi) as f64;
                        worst[3] = worst[3].max(c / rhs);
                    }
                }
            }
        }
        let gamma = worst.iter().copied().fold(1.0, f64::max);
        Ok(GammaReport {
            gamma,
            worst_ratios: worst,
            xi_range: xi_range.to_vec(),
            r_range: r_range.to_vec(),
        })
    }

    /// Checks `X[xi1] ⊆ X^(xi2)[xi1 + xi2]`.
    pub fn check_nesting(&self, x: &SiteSet, xi1: f64, xi2: f64) -> bool {
        let lhs = self.ball(x, xi1);
        let rhs = self.ball(&self.coarse_grain(x, xi2), xi1 + xi2);
        lhs.is_subset(&rhs)
    }

    /// Ratio `|X^(xi)| / (gamma (2c)^D |X^(c xi)|)`; at most one when the two-scale inequality holds.
    pub fn two_scale_ratio(&self, x: &SiteSet, xi: f64, c: f64, gamma: f64) -> f64 {
        let fine = self.coarse_grain(x, xi).len() as f64;
        let coarse = self.coarse_grain(x, c * xi).len() as f64;
        fine / (gamma * (2.0 * c).powi(self.dim as i32) * coarse)
    }

    /// Checks `sum_{j in Lambda^(xi), d(i,j) >= x0} f(d(i,j)) <= 2^{D+1} C gamma D xi^{-D} x0^D f(x0)`
    /// for every site `i`, with `C = sup_{z >= x0} z^{D+1} f(z) / (x0^{D+1} f(x0))` taken over `x0`
    /// and the realized lattice distances.
    pub fn validate_summation_lemma(
        &self,
        f: &dyn Fn(f64) -> f64,
        xi: f64,
        x0: f64,
        gamma: f64,
    ) -> Result<SummationCheck> {
        if !(xi >= 1.0 && x0 >= xi) {
            return Err(invalid(format!("summation check needs x0 >= xi >= 1, got xi={xi}, x0={x0}")));
        }
        let dd = self.dim as f64;
        let f0 = f(x0);
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(invalid("f must be positive and finite at x0"));
        }
        let mut zs: Vec<f64> = (0..=self.max_distance())
            .map(|d| d as f64)
            .filter(|&d| d >= x0)
            .collect();
        zs.insert(0, x0);
        let mut c_sup: f64 = 1.0;
        let mut prev = f0;
        for &z in &zs[1..] {
            let fz = f(z);
            if !(fz > 0.0) || fz > prev {
                return Err(invalid(format!("f must be positive and nonincreasing; fails at z={z}")));
            }
            prev = fz;
            c_sup = c_sup.max(z.powf(dd + 1.0) * fz / (x0.powf(dd + 1.0) * f0));
        }
        let rhs = 2f64.powf(dd + 1.0) * c_sup * gamma * dd * xi.powf(-dd) * x0.powf(dd) * f0;
        let total = self.coarse_grain_total(xi);
        let mut worst_lhs = 0.0f64;
        for i in 0..self.n_sites() {
            let lhs: f64 = total
                .iter()
                .map(|j| self.distance(i, j) as f64)
                .filter(|&d| d >= x0)
                .map(f)
                .sum();
            worst_lhs = worst_lhs.max(lhs);
        }
        Ok(SummationCheck { pass: worst_lhs <= rhs, worst_ratio: worst_lhs / rhs, c_sup, rhs })
    }
}

/// Empirical geometric constant and the worst ratio of each defining inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaReport {
    pub gamma: f64,
    /// Worst `lhs / rhs_without_gamma` for: volume vs diameter, ball volume,
    /// coarse-grain cardinality, coarse-grained shell count.
    pub worst_ratios: [f64; 4],
    pub xi_range: Vec<f64>,
    pub r_range: Vec<f64>,
}

impl GammaReport {
    /// Re-runs all four inequalities with `self.gamma` and reports whether every one holds.
    pub fn certify(&self, lattice: &Lattice) -> Result<bool> {
        let again = lattice.estimate_gamma(&self.xi_range, &self.r_range)?;
        Ok(again.worst_ratios.iter().all(|&w| w <= self.gamma))
    }
}

/// Outcome of [`Lattice::validate_summation_lemma`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummationCheck {
    pub pass: bool,
    pub worst_ratio: f64,
    pub c_sup: f64,
    pub rhs: f64,
}
