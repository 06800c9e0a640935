use crate::error::{invalid, Error, Result};
use crate::hamiltonian::Pauli;
use crate::lattice::SiteSet;
use crate::C64;
use nalgebra::DMatrix;

pub type CMatrix = DMatrix<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

pub fn pauli_matrix(p: Pauli) -> CMatrix {
    match p {
        Pauli::X => CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        Pauli::Y => CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        Pauli::Z => CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
    }
}

/// Bit of site `pos` (position within a support of `m` sites) in a basis index.
/// The first tensor factor is the most significant bit.
#[inline]
pub(crate) fn bit_of(pos: usize, m: usize) -> usize {
    1 << (m - 1 - pos)
}

/// Scatters the low bits of `v` into the positions of `mask` (low to high).
#[inline]
pub(crate) fn deposit(mut v: usize, mask: usize) -> usize {
    let mut out = 0;
    let mut m = mask;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if v & 1 == 1 {
            out |= low;
        }
        v >>= 1;
        m &= m - 1;
    }
    out
}

/// Gathers the bits of `v` at `mask` into the low bits.
#[inline]
pub(crate) fn extract(v: usize, mask: usize) -> usize {
    let mut out = 0;
    let mut m = mask;
    let mut k = 0;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if v & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        m &= m - 1;
    }
    out
}

/// Mask of the bits occupied by `sub` inside the basis of `sup`.
pub(crate) fn sub_mask(sub: &SiteSet, sup: &SiteSet) -> Result<usize> {
    let m = sup.len();
    let mut mask = 0;
    for s in sub.iter() {
        let pos = sup
            .position(s)
            .ok_or_else(|| invalid(format!("site {s} is outside the support {:?}", sup.members())))?;
        mask |= bit_of(pos, m);
    }
    Ok(mask)
}

/// Operator on the tensor product of qubits labelled by `support`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: CMatrix,
    support: SiteSet,
}

impl DenseOperator {
    pub fn new(matrix: CMatrix, support: SiteSet) -> Result<Self> {
        let dim = 1usize << support.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(invalid(format!(
                "matrix is {}x{} but support of {} sites needs {dim}",
                matrix.nrows(),
                matrix.ncols(),
                support.len()
            )));
        }
        Ok(DenseOperator { matrix, support })
    }

    pub fn identity(support: SiteSet) -> Self {
        let dim = 1 << support.len();
        DenseOperator { matrix: CMatrix::identity(dim, dim), support }
    }

    pub fn zeros(support: SiteSet) -> Self {
        let dim = 1 << support.len();
        DenseOperator { matrix: CMatrix::zeros(dim, dim), support }
    }

    /// Pauli string `coeff * prod_s P_s`; sites may come in any order.
    pub fn pauli_string(ops: &[(usize, Pauli)], coeff: f64) -> Result<Self> {
        let term = crate::hamiltonian::InteractionTerm::new(ops.to_vec(), coeff)?;
        Ok(Self::from_term(&term))
    }

    pub fn from_term(term: &crate::hamiltonian::InteractionTerm) -> Self {
        let mut m = CMatrix::from_element(1, 1, C64::new(term.coefficient, 0.0));
        for &p in term.paulis() {
            m = m.kronecker(&pauli_matrix(p));
        }
        DenseOperator { matrix: m, support: term.support().clone() }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn support(&self) -> &SiteSet {
        &self.support
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (i..n).all(|j| (self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm() <= tol))
    }

    pub fn adjoint(&self) -> Self {
        DenseOperator { matrix: self.matrix.adjoint(), support: self.support.clone() }
    }

    /// Tensors with identities so the result acts on `target`, which must contain the support.
    pub fn embed(&self, target: &SiteSet) -> Result<Self> {
        if target == &self.support {
            return Ok(self.clone());
        }
        let mask = sub_mask(&self.support, target)?;
        let dim = 1usize << target.len();
        let small = self.dim();
        let rest = (dim - 1) & !mask;
        let mut out = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            let ri = i & rest;
            let a = extract(i, mask);
            for b in 0..small {
                let v = self.matrix[(a, b)];
                if v != ZERO {
                    out[(i, ri | deposit(b, mask))] = v;
                }
            }
        }
        Ok(DenseOperator { matrix: out, support: target.clone() })
    }

    fn aligned(&self, other: &Self) -> Result<(Self, Self)> {
        let u = self.support.union(&other.support);
        Ok((self.embed(&u)?, other.embed(&u)?))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other)?;
        Ok(DenseOperator { matrix: a.matrix + b.matrix, support: a.support })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other)?;
        Ok(DenseOperator { matrix: a.matrix - b.matrix, support: a.support })
    }

    pub fn scale(&self, c: C64) -> Self {
        DenseOperator { matrix: &self.matrix * c, support: self.support.clone() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other)?;
        Ok(DenseOperator { matrix: super::linalg::matmul(&a.matrix, &b.matrix), support: a.support })
    }

    /// `AB - BA` on the union support.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let (a, b) = self.aligned(other)?;
        let m = super::linalg::matmul(&a.matrix, &b.matrix) - super::linalg::matmul(&b.matrix, &a.matrix);
        Ok(DenseOperator { matrix: m, support: a.support })
    }

    /// Largest singular value.
    pub fn norm(&self) -> f64 {
        super::linalg::spectral_norm(&self.matrix)
    }

    /// Normalized partial trace over `support \ region`, as an operator on `region`.
    pub fn reduce(&self, region: &SiteSet) -> Result<Self> {
        let keep = sub_mask(region, &self.support)?;
        let dim = self.dim();
        let traced = (dim - 1) & !keep;
        let kd = 1usize << region.len();
        let td = 1usize << (self.support.len() - region.len());
        let mut out = CMatrix::zeros(kd, kd);
        for a in 0..kd {
            let ia = deposit(a, keep);
            for b in 0..kd {
                let ib = deposit(b, keep);
                let mut acc = ZERO;
                for c in 0..td {
                    let ic = deposit(c, traced);
                    acc += self.matrix[(ia | ic, ib | ic)];
                }
                out[(a, b)] = acc / td as f64;
            }
        }
        Ok(DenseOperator { matrix: out, support: region.clone() })
    }

    /// `tr_{region^c}[O] / tr_{region^c}[1]`, tensored back with the identity on `region^c`.
    pub fn local_approx(&self, region: &SiteSet) -> Result<Self> {
        if !region.is_subset(&self.support) {
            return Err(invalid(format!(
                "region {:?} is not inside the support {:?}",
                region.members(),
                self.support.members()
            )));
        }
        self.reduce(region)?.embed(&self.support)
    }

    /// Applies the operator, embedded by identities, to a vector on `full`.
    pub fn apply_embedded(&self, full: &SiteSet, v: &[C64], out: &mut [C64]) -> Result<()> {
        let mask = sub_mask(&self.support, full)?;
        let dim = 1usize << full.len();
        if v.len() != dim || out.len() != dim {
            return Err(invalid("vector length does not match the support"));
        }
        if self.support.len() == full.len() {
            super::linalg::dense_apply(&self.matrix, v, out);
            return Ok(());
        }
        let small = self.dim();
        let rest = (dim - 1) & !mask;
        let offsets: Vec<usize> = (0..small).map(|b| deposit(b, mask)).collect();
        for (i, o) in out.iter_mut().enumerate() {
            let ri = i & rest;
            let a = extract(i, mask);
            let mut acc = ZERO;
            for (b, &off) in offsets.iter().enumerate() {
                acc += self.matrix[(a, b)] * v[ri | off];
            }
            *o = acc;
        }
        Ok(())
    }
}

impl From<DenseOperator> for CMatrix {
    fn from(o: DenseOperator) -> CMatrix {
        o.matrix
    }
}

/// Error for dense objects beyond what memory allows.
pub(crate) fn dense_limit(sites: usize, cap: usize) -> Error {
    Error::ResourceLimit { sites, cap, dim: 1u128 << sites }
}
