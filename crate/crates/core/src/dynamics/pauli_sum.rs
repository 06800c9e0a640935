//! Matrix-free Pauli-sum Hamiltonians.
//!
//! A Pauli string acts on a basis state as `P|k> = i^{#Y} (-1)^{|k & zmask|} |k ^ xmask>`.
//! Terms sharing an `xmask` are merged into one diagonal, so `H v` costs one pass
//! per distinct flip pattern. When a global Hadamard rotation reduces the number
//! of patterns (the Ising case: all `XX` couplings become diagonal), the sum is
//! stored in the rotated frame and vectors are rotated on the way in and out.

use super::operator::{bit_of, CMatrix};
use crate::error::{invalid, Result};
use crate::hamiltonian::{HamiltonianSpec, InteractionTerm, Pauli};
use crate::lattice::SiteSet;
use crate::C64;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliString {
    pub xmask: usize,
    pub zmask: usize,
    pub n_y: u32,
    pub coeff: f64,
}

impl PauliString {
    /// Encodes `term` in the basis of `support`; `None` when the term leaves the support.
    pub fn encode(term: &InteractionTerm, support: &SiteSet) -> Option<PauliString> {
        let m = support.len();
        let (mut xmask, mut zmask, mut n_y) = (0, 0, 0);
        for (s, p) in term.ops() {
            let b = bit_of(support.position(s)?, m);
            match p {
                Pauli::X => xmask |= b,
                Pauli::Z => zmask |= b,
                Pauli::Y => {
                    xmask |= b;
                    zmask |= b;
                    n_y += 1;
                }
            }
        }
        Some(PauliString { xmask, zmask, n_y, coeff: term.coefficient })
    }

    /// `H P H` with `H` the Hadamard on every site: X and Z swap, Y flips sign.
    fn hadamard_conjugate(self) -> PauliString {
        let y = self.xmask & self.zmask;
        let x_only = self.xmask & !y;
        let z_only = self.zmask & !y;
        let sign = if self.n_y % 2 == 1 { -1.0 } else { 1.0 };
        PauliString { xmask: z_only | y, zmask: x_only | y, n_y: self.n_y, coeff: self.coeff * sign }
    }

    /// Matrix element `<k ^ xmask| P |k>`.
    #[inline]
    pub fn phase(&self, k: usize) -> C64 {
        let i_pow = match self.n_y % 4 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
        let s = if (k & self.zmask).count_ones() % 2 == 1 { -self.coeff } else { self.coeff };
        i_pow * s
    }
}

#[derive(Debug, Clone)]
pub struct PauliSum {
    n: usize,
    hadamard_frame: bool,
    /// `(xmask, d)` with `(H v)[j] = sum d[j] v[j ^ xmask]`, in the stored frame.
    groups: Vec<(usize, Vec<C64>)>,
    norm_bound: f64,
    dropped: usize,
}

fn group_count(strings: &[PauliString]) -> usize {
    strings.iter().map(|s| s.xmask).collect::<std::collections::BTreeSet<_>>().len()
}

impl PauliSum {
    /// Restriction of `h` to the terms inside `support`.
    pub fn new(h: &HamiltonianSpec, support: &SiteSet) -> Result<Self> {
        if support.len() > 30 {
            return Err(invalid("matrix-free sums are limited to 30 sites"));
        }
        let mut strings = Vec::new();
        let mut dropped = 0;
        for t in &h.terms {
            match PauliString::encode(t, support) {
                Some(p) => strings.push(p),
                None if t.support().is_disjoint(support) => {}
                None => dropped += 1,
            }
        }
        Ok(Self::from_strings(support.len(), strings, dropped))
    }

    pub fn from_strings(n: usize, strings: Vec<PauliString>, dropped: usize) -> Self {
        let rotated: Vec<PauliString> = strings.iter().map(|s| s.hadamard_conjugate()).collect();
        let hadamard_frame = group_count(&rotated) < group_count(&strings);
        let used = if hadamard_frame { rotated } else { strings };
        let dim = 1usize << n;
        let mut by_mask: BTreeMap<usize, Vec<C64>> = BTreeMap::new();
        let mut norm_bound = 0.0;
        for s in &used {
            norm_bound += s.coeff.abs();
            let d = by_mask.entry(s.xmask).or_insert_with(|| vec![C64::new(0.0, 0.0); dim]);
            // (P v)[j] = phase(j ^ xmask) v[j ^ xmask]
            for (j, dj) in d.iter_mut().enumerate() {
                *dj += s.phase(j ^ s.xmask);
            }
        }
        PauliSum { n, hadamard_frame, groups: by_mask.into_iter().collect(), norm_bound, dropped }
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Number of terms that straddled the support boundary and were left out.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// `sum |c|`, an upper bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn passes(&self) -> usize {
        self.groups.len()
    }

    pub fn uses_hadamard_frame(&self) -> bool {
        self.hadamard_frame
    }

    /// `out = H v` with both vectors in the stored frame.
    pub fn apply_frame(&self, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (m, d) in &self.groups {
            for (j, o) in out.iter_mut().enumerate() {
                *o += d[j] * v[j ^ m];
            }
        }
    }

    /// Rotates a computational-basis vector into the stored frame, or back; the map is an involution.
    pub fn to_frame(&self, v: &mut [C64]) {
        if self.hadamard_frame {
            walsh_hadamard(v);
        }
    }

    /// `out = H v` in the computational basis.
    pub fn apply(&self, v: &[C64], out: &mut [C64]) {
        if self.hadamard_frame {
            let mut w = v.to_vec();
            walsh_hadamard(&mut w);
            self.apply_frame(&w, out);
            walsh_hadamard(out);
        } else {
            self.apply_frame(v, out);
        }
    }

    /// Dense matrix in the computational basis.
    pub fn to_dense(&self) -> CMatrix {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            e[k] = C64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            e[k] = C64::new(0.0, 0.0);
            m.column_mut(k).copy_from_slice(&col);
        }
        m
    }
}

/// Normalized fast Walsh-Hadamard transform, `H^{(x)n} v`.
pub fn walsh_hadamard(v: &mut [C64]) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for i in (0..n).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|z| *z *= s);
}
