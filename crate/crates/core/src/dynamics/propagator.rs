//! Chebyshev propagation `v -> e^{-iHt} v` for matrix-free Hamiltonians.

use super::pauli_sum::PauliSum;
use crate::C64;

/// `J_0(x), ..., J_{kmax}(x)` for `x >= 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 sum J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, kmax: usize) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite());
    let mut out = vec![0.0; kmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = {
        let s = kmax.max(x.ceil() as usize) + 40 + (2.0 * x.sqrt()) as usize + (x.cbrt() * 10.0) as usize;
        s + s % 2
    };
    let mut vals = vec![0.0f64; start + 2];
    let (mut jp1, mut j) = (0.0f64, 1e-300f64);
    vals[start] = j;
    for k in (1..=start).rev() {
        let jm1 = 2.0 * k as f64 / x * j - jp1;
        jp1 = j;
        j = jm1;
        vals[k - 1] = j;
        if j.abs() > 1e250 {
            for v in vals[k - 1..=start].iter_mut() {
                *v *= 1e-250;
            }
            j *= 1e-250;
            jp1 *= 1e-250;
        }
    }
    let norm = vals[0] + 2.0 * vals.iter().skip(2).step_by(2).sum::<f64>();
    for (o, v) in out.iter_mut().zip(&vals) {
        *o = v / norm;
    }
    out
}

/// Expansion order beyond which `|J_k(x)|` stays below `tol`.
fn chebyshev_order(x: f64, tol: f64) -> (usize, Vec<f64>) {
    let mut kmax = (x * 1.2) as usize + 30;
    loop {
        let j = bessel_j_sequence(x, kmax);
        if let Some(k) = (0..=kmax).rev().find(|&k| j[k].abs() > tol) {
            if k + 8 < kmax {
                return (k + 1, j);
            }
        } else {
            return (1, j);
        }
        kmax *= 2;
    }
}

/// Evolution operator `e^{-iHt}` for a [`PauliSum`], applied to vectors.
pub struct Propagator<'a> {
    h: &'a PauliSum,
    t: f64,
    scale: f64,
    coeffs: Vec<C64>,
}

impl<'a> Propagator<'a> {
    pub fn new(h: &'a PauliSum, t: f64) -> Self {
        let scale = h.norm_bound() * (1.0 + 1e-12) + 1e-300;
        let x = scale * t.abs();
        let (order, j) = chebyshev_order(x, 1e-17);
        // e^{-i a t y} = J_0 + 2 sum_k (-i)^k J_k T_k(y), with t < 0 via J_k(-x) = (-1)^k J_k(x).
        let sgn: f64 = if t < 0.0 { -1.0 } else { 1.0 };
        let mut coeffs = Vec::with_capacity(order + 1);
        for (k, &jk) in j.iter().enumerate().take(order + 1) {
            let mi_k = match k % 4 {
                0 => C64::new(1.0, 0.0),
                1 => C64::new(0.0, -1.0),
                2 => C64::new(-1.0, 0.0),
                _ => C64::new(0.0, 1.0),
            };
            let f = if k == 0 { 1.0 } else { 2.0 };
            coeffs.push(mi_k * (f * jk * sgn.powi(k as i32)));
        }
        Propagator { h, t, scale, coeffs }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// In-place `v <- e^{-iHt} v` in the computational basis.
    pub fn apply(&self, v: &mut [C64]) {
        if self.t == 0.0 {
            return;
        }
        self.h.to_frame(v);
        self.apply_frame(v);
        self.h.to_frame(v);
    }

    fn apply_frame(&self, v: &mut [C64]) {
        let n = v.len();
        let inv = 1.0 / self.scale;
        let mut prev = v.to_vec();
        let mut cur = vec![C64::new(0.0, 0.0); n];
        self.h.apply_frame(&prev, &mut cur);
        cur.iter_mut().for_each(|z| *z *= inv);
        let mut acc: Vec<C64> = prev.iter().zip(&cur).map(|(a, b)| self.coeffs[0] * a + self.coeffs[1] * b).collect();
        let mut next = vec![C64::new(0.0, 0.0); n];
        for c in &self.coeffs[2..] {
            self.h.apply_frame(&cur, &mut next);
            for i in 0..n {
                next[i] = 2.0 * inv * next[i] - prev[i];
                acc[i] += c * next[i];
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        v.copy_from_slice(&acc);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::operator::CMatrix;
    use crate::hamiltonian::build_power_law_ising;
    use crate::lattice::Lattice;

    /// Power series `sum_m (-1)^m (x/2)^{2m+k} / (m! (m+k)!)`.
    fn bessel_series(x: f64, k: usize) -> f64 {
        let mut term = (x / 2.0).powi(k as i32) / (1..=k).map(|i| i as f64).product::<f64>();
        let mut sum = term;
        for m in 1..200 {
            term *= -(x * x / 4.0) / (m as f64 * (m + k) as f64);
            sum += term;
            if term.abs() < 1e-300 {
                break;
            }
        }
        sum
    }

    #[test]
    fn bessel_matches_series() {
        for x in [0.1, 1.0, 2.5, 5.0, 10.0] {
            let j = bessel_j_sequence(x, 25);
            for (k, jk) in j.iter().enumerate() {
                assert!((jk - bessel_series(x, k)).abs() < 1e-12, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn bessel_sum_of_squares() {
        for x in [30.0, 120.0] {
            let j = bessel_j_sequence(x, 400);
            let s = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn propagator_matches_dense_eigen() {
        let h = build_power_law_ising(&Lattice::chain(6).unwrap(), 2.5, 1.0, 0.9).unwrap();
        let ps = PauliSum::new(&h, &h.lattice.full()).unwrap();
        let dense = ps.to_dense();
        let eig = dense.clone().symmetric_eigen();
        for t in [0.3, -1.7, 4.0] {
            let phases = eig.eigenvalues.map(|e| C64::new(0.0, -e * t).exp());
            let u = &eig.eigenvectors * CMatrix::from_diagonal(&phases) * eig.eigenvectors.adjoint();
            let mut v: Vec<C64> = (0..64).map(|k| C64::new((k as f64).cos(), (k as f64 * 0.3).sin())).collect();
            let expect = &u * nalgebra::DVector::from_column_slice(&v);
            Propagator::new(&ps, t).apply(&mut v);
            for k in 0..64 {
                assert!((v[k] - expect[k]).norm() < 1e-11, "t={t}");
            }
        }
    }
}
