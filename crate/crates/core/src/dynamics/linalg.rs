//! Dense and matrix-free linear algebra kernels: products, spectral norms, Haar sampling.

use super::operator::CMatrix;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Largest dimension whose spectral norm is taken from a full SVD.
pub const SVD_MAX_DIM: usize = 256;

/// Stopping rules for [`lanczos_max_abs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOpts {
    /// Relative tolerance on both the Ritz residual and the drift over `window` steps.
    pub tol: f64,
    pub min_iter: usize,
    pub max_iter: usize,
    pub window: usize,
    /// Stop as soon as the estimate reaches this value; Ritz values only grow.
    pub stop_above: Option<f64>,
}

impl Default for LanczosOpts {
    fn default() -> Self {
        LanczosOpts { tol: 1e-10, min_iter: 100, max_iter: 300, window: 20, stop_above: None }
    }
}

impl LanczosOpts {
    /// Cheaper settings for matrix-free scans, where each step costs several propagations.
    pub fn scan() -> Self {
        LanczosOpts { tol: 1e-8, min_iter: 40, max_iter: 150, window: 10, stop_above: None }
    }
}

/// Complex product; large operands go through four real BLAS-style products.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    if a.nrows().max(a.ncols()).max(b.ncols()) < 64 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re: DMatrix<f64> = &ar * &br - &ai * &bi;
    let im: DMatrix<f64> = &ar * &bi + &ai * &br;
    re.zip_map(&im, C64::new)
}

/// `A^dagger B` without materializing the adjoint twice.
pub fn adjoint_matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    matmul(&a.adjoint(), b)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    let n = m.nrows();
    m.ncols() == n && (0..n).all(|i| (i..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

/// Largest singular value: SVD for small matrices, Lanczos above [`SVD_MAX_DIM`].
pub fn spectral_norm(m: &CMatrix) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return 0.0;
    }
    if m.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return 0.0;
    }
    if n <= SVD_MAX_DIM {
        return m.clone().svd(false, false).singular_values.max();
    }
    if is_hermitian(m, 1e-13 * m.camax().max(1.0)) {
        lanczos_max_abs(n, |v, out| dense_apply(m, v, out), &LanczosOpts::default())
    } else {
        let mut tmp = vec![C64::new(0.0, 0.0); n];
        let ad = m.adjoint();
        lanczos_max_abs(
            n,
            |v, out| {
                dense_apply(m, v, &mut tmp);
                dense_apply(&ad, &tmp, out);
            },
            &LanczosOpts::default(),
        )
        .sqrt()
    }
}

pub fn dense_apply(m: &CMatrix, v: &[C64], out: &mut [C64]) {
    let x = DVector::from_column_slice(v);
    let mut y = DVector::from_column_slice(out);
    y.gemv(C64::new(1.0, 0.0), m, &x, C64::new(0.0, 0.0));
    out.copy_from_slice(y.as_slice());
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest `|lambda|` of a Hermitian operator given as `apply(v, out)`.
///
/// Lanczos with full reorthogonalization from a fixed pseudo-random start. It stops
/// when the extreme Ritz value has a residual below `tol * |theta|` and has not moved
/// by more than that over the last `window` steps, and not before `min_iter` steps:
/// clustered spectra otherwise converge to an inner member of the cluster first. Ritz values interlace, so the
/// estimate never exceeds the true value.
pub fn lanczos_max_abs<F>(dim: usize, mut apply: F, opts: &LanczosOpts) -> f64
where
    F: FnMut(&[C64], &mut [C64]),
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_1a2c);
    let mut q: Vec<C64> = (0..dim).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let nq = vnorm(&q);
    q.iter_mut().for_each(|z| *z /= nq);
    let max_iter = opts.max_iter.min(dim);
    let tol = opts.tol;
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(max_iter);
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut best = 0.0;
    let mut history: Vec<f64> = Vec::with_capacity(max_iter);
    for k in 0..max_iter {
        apply(&q, &mut w);
        let a = dot(&q, &w).re;
        basis.push(q.clone());
        alphas.push(a);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &w);
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = vnorm(&w);
        let t = nalgebra::DMatrix::<f64>::from_fn(k + 1, k + 1, |i, j| {
            if i == j {
                alphas[i]
            } else if i + 1 == j {
                betas[i]
            } else if j + 1 == i {
                betas[j]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (idx, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, v)| (i, *v))
            .unwrap();
        best = theta.abs();
        history.push(best);
        if beta <= 1e-14 * best.max(1e-300) {
            break;
        }
        let resid = beta * eig.eigenvectors[(k, idx)].abs();
        if opts.stop_above.is_some_and(|s| best >= s) {
            break;
        }
        let stable = k + 1 >= opts.min_iter && k >= opts.window && best - history[k - opts.window] <= tol * best;
        if stable && resid <= tol * best.max(f64::MIN_POSITIVE) {
            break;
        }
        betas.push(beta);
        q.iter_mut().zip(&w).for_each(|(x, y)| *x = y / beta);
    }
    best
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phase fix.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            u[(i, j)] *= ph;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(seed: u64, n: usize, herm: bool) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        if herm {
            (&m + m.adjoint()) * C64::new(0.5, 0.0)
        } else {
            m
        }
    }

    #[test]
    fn split_product_matches_naive() {
        let a = random(1, 80, false);
        let b = random(2, 80, false);
        assert!((matmul(&a, &b) - &a * &b).camax() < 1e-12);
    }

    #[test]
    fn lanczos_matches_svd() {
        for (seed, herm) in [(3, true), (4, false), (5, true)] {
            let m = random(seed, 300, herm);
            let svd = m.clone().svd(false, false).singular_values.max();
            let lz = spectral_norm(&m);
            assert!((svd - lz).abs() <= 1e-8 * svd, "seed {seed}: {svd} vs {lz}");
        }
    }

    #[test]
    fn lanczos_on_rank_one() {
        let v = DVector::from_fn(400, |i, _| C64::new((i as f64).sin(), 0.0));
        let m = &v * v.adjoint();
        let expect = v.norm_squared();
        assert!((spectral_norm(&m) - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = haar_unitary(8, &mut rng);
        assert!((u.adjoint() * &u - CMatrix::identity(8, 8)).camax() < 1e-12);
    }
}
