//! Heisenberg evolution `O(t) = e^{iHt} O e^{-iHt}` with several independent backends.

use super::linalg::{self, dense_apply, lanczos_max_abs, matmul, LanczosOpts, SVD_MAX_DIM};
use super::operator::{dense_limit, CMatrix, DenseOperator};
use super::pauli_sum::PauliSum;
use super::propagator::Propagator;
use crate::error::{invalid, Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::lattice::SiteSet;
use crate::C64;
use nalgebra::DVector;

/// Default cap on the number of simulated sites.
pub const DEFAULT_CAP_SITES: usize = 14;
/// Largest support for which full dense matrices are built (2^12 x 2^12 complex is 256 MiB).
pub const DENSE_MAX_SITES: usize = 12;
/// Largest support diagonalized directly; above it evolution runs through the Chebyshev propagator.
pub const EIGEN_MAX_SITES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Spectral decomposition of `H`.
    Eigen,
    /// Scaling-and-squaring Pade exponential of `-iHt`.
    Expm,
}

/// Dense `H` restricted to `support` plus the number of boundary-straddling terms left out.
#[derive(Debug, Clone)]
pub struct Realization {
    pub operator: DenseOperator,
    pub dropped: usize,
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        Err(Error::ResourceLimit { sites: n, cap, dim: 1u128 << n.min(127) })
    } else {
        Ok(())
    }
}

pub fn realize(h: &HamiltonianSpec, support: &SiteSet, cap: usize) -> Result<Realization> {
    check_cap(support.len(), cap)?;
    if support.len() > DENSE_MAX_SITES {
        return Err(dense_limit(support.len(), DENSE_MAX_SITES));
    }
    let ps = PauliSum::new(h, support)?;
    if ps.dropped() > 0 {
        log::debug!("realize: dropped {} straddling terms", ps.dropped());
    }
    Ok(Realization { operator: DenseOperator::new(ps.to_dense(), support.clone())?, dropped: ps.dropped() })
}

fn hermitian_checked(h: &DenseOperator) -> Result<()> {
    let tol = 1e-12 * h.matrix().camax().max(1.0);
    if !linalg::is_hermitian(h.matrix(), tol) {
        return Err(invalid("Hamiltonian is not Hermitian"));
    }
    Ok(())
}

fn conjugate(u: &CMatrix, o: &CMatrix) -> CMatrix {
    // U^dagger O U with U = e^{-iHt}.
    matmul(&u.adjoint(), &matmul(o, u))
}

/// `e^{iHt} O e^{-iHt}`; `O` is embedded into the support of `H`.
pub fn evolve_operator(h: &DenseOperator, o: &DenseOperator, t: f64, backend: Backend) -> Result<DenseOperator> {
    hermitian_checked(h)?;
    if !o.support().is_subset(h.support()) {
        return Err(invalid("operator support must lie inside the Hamiltonian support"));
    }
    let o = o.embed(h.support())?;
    if t == 0.0 {
        return Ok(o);
    }
    let u = match backend {
        Backend::Eigen => {
            let eig = h.matrix().clone().symmetric_eigen();
            eigen_propagator(&eig.eigenvalues, &eig.eigenvectors, t)
        }
        Backend::Expm => (h.matrix() * C64::new(0.0, -t)).exp(),
    };
    DenseOperator::new(conjugate(&u, o.matrix()), h.support().clone())
}

fn eigen_propagator(values: &DVector<f64>, vectors: &CMatrix, t: f64) -> CMatrix {
    let mut vd = vectors.clone();
    for (j, &e) in values.iter().enumerate() {
        let ph = C64::new(0.0, -e * t).exp();
        vd.column_mut(j).iter_mut().for_each(|z| *z *= ph);
    }
    matmul(&vd, &vectors.adjoint())
}

/// Truncated series `sum_{k <= kmax} (it)^k / k! ad_H^k(O)`, an independent check on the exact backends.
pub fn taylor_evolve(h: &DenseOperator, o: &DenseOperator, t: f64, kmax: usize) -> Result<DenseOperator> {
    let o = o.embed(h.support())?;
    let mut term = o.matrix().clone();
    let mut acc = term.clone();
    for k in 1..=kmax {
        term = (h.matrix() * &term - &term * h.matrix()) * C64::new(0.0, t / k as f64);
        acc += &term;
    }
    DenseOperator::new(acc, h.support().clone())
}

/// `|| AB - BA ||` after embedding into the union support.
pub fn commutator_norm(a: &DenseOperator, b: &DenseOperator) -> Result<f64> {
    if a.support().is_disjoint(b.support()) {
        return Ok(0.0);
    }
    let u = a.support().union(b.support());
    let dim = 1usize << u.len();
    let herm = |x: &DenseOperator| linalg::is_hermitian(x.matrix(), 1e-12 * x.matrix().camax().max(1.0));
    if dim <= SVD_MAX_DIM || !(herm(a) && herm(b)) {
        return Ok(a.commutator(b)?.norm());
    }
    // i[A, B] is Hermitian; apply it without forming the product.
    let (mut ta, mut tb) = (vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim]);
    let mut err = Ok(());
    let val = lanczos_max_abs(
        dim,
        |v, out| {
            let r = a
                .apply_embedded(&u, v, &mut ta)
                .and_then(|_| b.apply_embedded(&u, &ta, out))
                .and_then(|_| b.apply_embedded(&u, v, &mut tb))
                .and_then(|_| a.apply_embedded(&u, &tb, &mut ta));
            if r.is_err() {
                err = r;
            }
            // out = i(BA - AB)v: Hermitian, with largest |eigenvalue| equal to ||[A, B]||.
            out.iter_mut().zip(&ta).for_each(|(o, x)| *o = (*o - x) * C64::i());
        },
        &LanczosOpts::default(),
    );
    err.map(|_| val)
}

enum Kind {
    Eigen { values: DVector<f64>, vectors: CMatrix },
    Chebyshev { sum: PauliSum },
}

/// Cached evolution machinery for one Hamiltonian on one support.
pub struct Evolver {
    support: SiteSet,
    dropped: usize,
    kind: Kind,
}

impl Evolver {
    pub fn new(h: &HamiltonianSpec, support: &SiteSet, cap: usize) -> Result<Self> {
        check_cap(support.len(), cap)?;
        let sum = PauliSum::new(h, support)?;
        let dropped = sum.dropped();
        let kind = if support.len() <= EIGEN_MAX_SITES {
            let eig = sum.to_dense().symmetric_eigen();
            Kind::Eigen { values: eig.eigenvalues, vectors: eig.eigenvectors }
        } else {
            Kind::Chebyshev { sum }
        };
        Ok(Evolver { support: support.clone(), dropped, kind })
    }

    pub fn support(&self) -> &SiteSet {
        &self.support
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn n_sites(&self) -> usize {
        self.support.len()
    }

    /// Whether [`Evolver::evolve_dense`] is available.
    pub fn dense_ok(&self) -> bool {
        self.support.len() <= DENSE_MAX_SITES
    }

    /// `e^{-iHt}` as a dense matrix.
    fn unitary(&self, t: f64) -> Result<CMatrix> {
        match &self.kind {
            Kind::Eigen { values, vectors } => Ok(eigen_propagator(values, vectors, t)),
            Kind::Chebyshev { sum } => {
                if !self.dense_ok() {
                    return Err(dense_limit(self.support.len(), DENSE_MAX_SITES));
                }
                let dim = sum.dim();
                let prop = Propagator::new(sum, t);
                let mut u = CMatrix::zeros(dim, dim);
                let mut col = vec![C64::new(0.0, 0.0); dim];
                for k in 0..dim {
                    col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
                    col[k] = C64::new(1.0, 0.0);
                    prop.apply(&mut col);
                    u.column_mut(k).copy_from_slice(&col);
                }
                Ok(u)
            }
        }
    }

    /// Dense `O(t)` on the evolver support.
    pub fn evolve_dense(&self, o: &DenseOperator, t: f64) -> Result<DenseOperator> {
        if !self.dense_ok() {
            return Err(dense_limit(self.support.len(), DENSE_MAX_SITES));
        }
        let oe = o.embed(&self.support)?;
        if t == 0.0 {
            return Ok(oe);
        }
        let u = self.unitary(t)?;
        let dim = u.nrows();
        // O U column by column keeps a local O cheap.
        let mut ou = CMatrix::zeros(dim, dim);
        let mut col = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            o.apply_embedded(&self.support, u.column(k).as_slice(), &mut col)?;
            ou.column_mut(k).copy_from_slice(&col);
        }
        DenseOperator::new(matmul(&u.adjoint(), &ou), self.support.clone())
    }

    /// `v <- e^{-iHt} v`.
    pub fn propagate(&self, v: &mut [C64], t: f64) {
        match &self.kind {
            Kind::Eigen { values, vectors } => {
                let x = DVector::from_column_slice(v);
                let mut c = vectors.adjoint() * x;
                for (z, &e) in c.iter_mut().zip(values.iter()) {
                    *z *= C64::new(0.0, -e * t).exp();
                }
                v.copy_from_slice((vectors * c).as_slice());
            }
            Kind::Chebyshev { sum } => Propagator::new(sum, t).apply(v),
        }
    }

    /// Matrix-free `|| [O(t), P] ||` for Hermitian `O` and `P`, never forming `O(t)`.
    pub fn commutator_norm_matrix_free(
        &self,
        o: &DenseOperator,
        t: f64,
        p: &DenseOperator,
        opts: &LanczosOpts,
    ) -> Result<f64> {
        if !p.support().is_subset(&self.support) || !o.support().is_subset(&self.support) {
            return Err(invalid("operators must lie inside the evolver support"));
        }
        let dim = 1usize << self.support.len();
        let props = match &self.kind {
            Kind::Chebyshev { sum } => Some((Propagator::new(sum, t), Propagator::new(sum, -t))),
            Kind::Eigen { .. } => None,
        };
        let heis = |v: &[C64], out: &mut [C64]| -> Result<()> {
            let mut w = v.to_vec();
            match &props {
                Some((fwd, bwd)) => {
                    fwd.apply(&mut w);
                    o.apply_embedded(&self.support, &w, out)?;
                    bwd.apply(out);
                }
                None => {
                    self.propagate(&mut w, t);
                    o.apply_embedded(&self.support, &w, out)?;
                    self.propagate(out, -t);
                }
            }
            Ok(())
        };
        let (mut a, mut b) = (vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim]);
        let mut err = Ok(());
        let val = lanczos_max_abs(
            dim,
            |v, out| {
                let r = heis(v, &mut a)
                    .and_then(|_| p.apply_embedded(&self.support, &a, out))
                    .and_then(|_| p.apply_embedded(&self.support, v, &mut b))
                    .and_then(|_| heis(&b, &mut a));
                if r.is_err() {
                    err = r;
                }
                out.iter_mut().zip(&a).for_each(|(x, y)| *x = (*x - y) * C64::i());
            },
            opts,
        );
        err.map(|_| val)
    }
}

/// `|| [A, P] ||` for a dense `A` on `support` and a local `P`, without forming the product.
pub fn commutator_norm_local(a: &DenseOperator, p: &DenseOperator) -> Result<f64> {
    let dim = a.dim();
    if dim <= SVD_MAX_DIM {
        return commutator_norm(a, p);
    }
    let sup = a.support().clone();
    let (mut x, mut y) = (vec![C64::new(0.0, 0.0); dim], vec![C64::new(0.0, 0.0); dim]);
    let mut err = Ok(());
    let val = lanczos_max_abs(
        dim,
        |v, out| {
            dense_apply(a.matrix(), v, &mut x);
            if let Err(e) = p.apply_embedded(&sup, &x, out) {
                err = Err(e);
            }
            if let Err(e) = p.apply_embedded(&sup, v, &mut y) {
                err = Err(e);
            }
            dense_apply(a.matrix(), &y, &mut x);
            out.iter_mut().zip(&x).for_each(|(o, z)| *o = (*o - z) * C64::i());
        },
        &LanczosOpts::default(),
    );
    err.map(|_| val)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_power_law_ising, InteractionTerm, Pauli};
    use crate::lattice::Lattice;

    fn pauli(s: usize, p: Pauli) -> DenseOperator {
        DenseOperator::pauli_string(&[(s, p)], 1.0).unwrap()
    }

    #[test]
    fn realize_examples() {
        let lat = Lattice::chain(2).unwrap();
        let xx = InteractionTerm::new(vec![(0, Pauli::X), (1, Pauli::X)], 1.0).unwrap();
        let h = HamiltonianSpec::from_terms(lat.clone(), vec![xx], 3.0, 1.0).unwrap();
        let m = realize(&h, &lat.full(), 14).unwrap().operator;
        for i in 0..4 {
            for j in 0..4 {
                let e = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(m.matrix()[(i, j)], C64::new(e, 0.0));
            }
        }
        let b = 0.6;
        let hz = HamiltonianSpec::from_terms(
            Lattice::chain(1).unwrap(),
            vec![InteractionTerm::new(vec![(0, Pauli::Z)], b).unwrap()],
            3.0,
            1.0,
        )
        .unwrap();
        let mz = realize(&hz, &SiteSet::single(0), 14).unwrap().operator;
        assert_eq!(mz.matrix()[(0, 0)], C64::new(b, 0.0));
        assert_eq!(mz.matrix()[(1, 1)], C64::new(-b, 0.0));
        let r = realize(&h, &SiteSet::single(0), 14).unwrap();
        assert_eq!(r.dropped, 1);
    }

    #[test]
    fn realize_cap() {
        let h = build_power_law_ising(&Lattice::chain(16).unwrap(), 3.0, 1.0, 0.0).unwrap();
        match realize(&h, &h.lattice.full(), 14) {
            Err(Error::ResourceLimit { sites: 16, cap: 14, dim }) => assert_eq!(dim, 65536),
            other => panic!("{other:?}"),
        }
        assert!(Evolver::new(&h, &h.lattice.full(), 14).is_err());
    }

    #[test]
    fn ising_spectrum_matches_classical_energies() {
        // Without a field every term is diagonal in the X basis: eigenvalues are
        // sum_{i<j} J_ij s_i s_j over all sign patterns s.
        let n = 3;
        let h = build_power_law_ising(&Lattice::chain(n).unwrap(), 3.0, 1.0, 0.0).unwrap();
        let m = realize(&h, &h.lattice.full(), 14).unwrap().operator;
        let mut ev: Vec<f64> = m.matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        let mut oracle: Vec<f64> = (0..1usize << n)
            .map(|mask| {
                let s = |i: usize| if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                let mut e = 0.0;
                for i in 0..n {
                    for j in i + 1..n {
                        e += ((j - i) as f64).powf(-3.0) * s(i) * s(j);
                    }
                }
                e
            })
            .collect();
        ev.sort_by(f64::total_cmp);
        oracle.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(ev.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn single_spin_rotation() {
        let h = pauli(0, Pauli::Z);
        let x = pauli(0, Pauli::X);
        let y = pauli(0, Pauli::Y);
        for t in [0.0f64, 0.3, 1.1, -2.0] {
            let expect = x.scale(C64::new((2.0 * t).cos(), 0.0)).sub(&y.scale(C64::new((2.0 * t).sin(), 0.0))).unwrap();
            for be in [Backend::Eigen, Backend::Expm] {
                let got = evolve_operator(&h, &x, t, be).unwrap();
                assert!(got.sub(&expect).unwrap().norm() < 1e-12, "{be:?} t={t}");
            }
        }
    }

    #[test]
    fn commuting_and_invalid_inputs() {
        let h = DenseOperator::pauli_string(&[(0, Pauli::Z), (1, Pauli::Z)], 1.0).unwrap();
        let z = pauli(1, Pauli::Z);
        let got = evolve_operator(&h, &z, 3.7, Backend::Eigen).unwrap();
        assert!(got.sub(&z).unwrap().norm() < 1e-12);
        let bad = DenseOperator::new(CMatrix::from_row_slice(2, 2, &[C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]), SiteSet::single(0)).unwrap();
        assert!(matches!(evolve_operator(&bad, &z, 1.0, Backend::Eigen), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn four_site_commutator_against_taylor() {
        let h = build_power_law_ising(&Lattice::chain(4).unwrap(), 3.0, 1.0, 0.5).unwrap();
        let hm = realize(&h, &h.lattice.full(), 14).unwrap().operator;
        let (o0, o3) = (pauli(0, Pauli::Z), pauli(3, Pauli::Z));
        let exact = evolve_operator(&hm, &o0, 0.5, Backend::Eigen).unwrap();
        let series = taylor_evolve(&hm, &o0, 0.5, 40).unwrap();
        let a = commutator_norm(&exact, &o3).unwrap();
        let b = commutator_norm(&series, &o3).unwrap();
        assert!(a > 1e-4 && (a - b).abs() < 1e-9, "{a} {b}");
    }

    #[test]
    fn chebyshev_evolver_matches_eigen() {
        let h = build_power_law_ising(&Lattice::chain(9).unwrap(), 3.0, 1.0, 0.8).unwrap();
        let full = h.lattice.full();
        let ev = Evolver::new(&h, &full, 14).unwrap();
        let hm = DenseOperator::new(PauliSum::new(&h, &full).unwrap().to_dense(), full.clone()).unwrap();
        let o = pauli(4, Pauli::Z);
        let a = ev.evolve_dense(&o, 0.7).unwrap();
        let b = evolve_operator(&hm, &o, 0.7, Backend::Eigen).unwrap();
        assert!((a.matrix() - b.matrix()).camax() < 1e-10);
        let p = pauli(7, Pauli::Z);
        let c1 = ev.commutator_norm_matrix_free(&o, 0.7, &p, &LanczosOpts::default()).unwrap();
        let c2 = commutator_norm_local(&a, &p).unwrap();
        let c3 = a.commutator(&p).unwrap().matrix().clone().svd(false, false).singular_values.max();
        assert!((c1 - c3).abs() < 1e-8 && (c2 - c3).abs() < 1e-8, "{c1} {c2} {c3}");
    }
}
