//! Dense linear-algebra helpers shared by every stage.
//!
//! Everything here is thin glue over `nalgebra`: sorted eigendecompositions,
//! Kronecker products, clustering of eigenvalues and random orthogonal frames.

use std::ops::Range;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;
pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(c)
}

/// Eigendecomposition of a real symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(a: &RMat) -> (Vec<f64>, RMat) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = RMat::from_fn(a.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Eigendecomposition of a complex Hermitian matrix, eigenvalues ascending.
pub fn herm_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let herm = (a + a.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(a.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
///
/// nalgebra's shifted QR can cycle on matrices with exactly paired spectra, so
/// a stalled attempt is retried on `Q (A + σ) Qᵀ` with a seeded random
/// orthogonal `Q` and complex shift `σ`. `None` when every attempt stalls.
pub fn complex_eigenvalues(a: &CMat) -> Option<Vec<Complex64>> {
    if a.is_empty() {
        return Some(Vec::new());
    }
    let n = a.nrows();
    let max_iter = 200 * n;
    let diag = |t: CMat, shift: Complex64| (0..n).map(|i| t[(i, i)] - shift).collect::<Vec<_>>();
    if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, max_iter) {
        return Some(diag(s.unpack().1, Complex64::ZERO));
    }
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    for _ in 0..8 {
        let q = to_complex(&random_orthogonal(n, &mut rng));
        let shift = Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)) * scale;
        let b = &q * (a + CMat::identity(n, n) * shift) * q.transpose();
        if let Some(s) = Schur::try_new(b, f64::EPSILON, max_iter) {
            return Some(diag(s.unpack().1, shift));
        }
    }
    None
}

/// Symmetric positive square root and its inverse of an SPD matrix.
/// Returns `None` when the smallest eigenvalue is not positive.
pub fn spd_sqrt_and_inv_sqrt(a: &RMat) -> Option<(RMat, RMat)> {
    let (vals, vecs) = sym_eigen(a);
    if vals.first().is_some_and(|&v| v <= 0.0) {
        return None;
    }
    let sq = RVec::from_iterator(vals.len(), vals.iter().map(|v| v.sqrt()));
    let isq = sq.map(|v| 1.0 / v);
    let root = &vecs * RMat::from_diagonal(&sq) * vecs.transpose();
    let inv_root = &vecs * RMat::from_diagonal(&isq) * vecs.transpose();
    Some((root, inv_root))
}

/// Kronecker product `a ⊗ b` (block `(i, j)` is `a[i, j] * b`).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == Complex64::ZERO {
                continue;
            }
            out.view_mut((i * br, j * bc), (br, bc)).copy_from(&(b * s));
        }
    }
    out
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub fn cmax_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.norm()))
}

/// Group sorted values into clusters whose consecutive relative gap is below
/// `rel_tol` (relative to the largest magnitude present, floored at 1).
/// Returns `Err(index)` when a cluster spreads over more than `100 * rel_tol`,
/// i.e. a chain of near-coincident values that cannot be merged consistently.
pub fn cluster_sorted(values: &[f64], rel_tol: f64) -> Result<Vec<Range<usize>>, usize> {
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || (values[i] - values[i - 1]).abs() > rel_tol * scale;
        if split {
            if (values[i - 1] - values[start]).abs() > 100.0 * rel_tol * scale {
                return Err(start);
            }
            clusters.push(start..i);
            start = i;
        }
    }
    Ok(clusters)
}

/// Columns of `basis` orthonormalised with respect to the Gram matrix `gram`
/// by modified Gram–Schmidt, dropping columns whose residual norm falls below
/// `drop_tol` times their original norm.
pub fn gram_schmidt(candidates: &RMat, gram: &RMat, drop_tol: f64, limit: usize) -> RMat {
    let mut kept: Vec<RVec> = Vec::new();
    for col in candidates.column_iter() {
        if kept.len() == limit {
            break;
        }
        let orig = col.into_owned();
        let orig_norm = orig.dot(&(gram * &orig)).max(0.0).sqrt();
        if orig_norm == 0.0 {
            continue;
        }
        let mut v = orig.clone();
        for _ in 0..2 {
            for q in &kept {
                let proj = q.dot(&(gram * &v));
                v -= q * proj;
            }
        }
        let n = v.dot(&(gram * &v)).max(0.0).sqrt();
        if n > drop_tol * orig_norm {
            kept.push(v / n);
        }
    }
    if kept.is_empty() {
        return RMat::zeros(candidates.nrows(), 0);
    }
    RMat::from_columns(&kept)
}

pub fn random_normal_vec<R: Rng>(n: usize, rng: &mut R) -> RVec {
    RVec::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Haar-ish random orthogonal matrix from a QR factorisation of a Gaussian
/// matrix, with column signs fixed so the result is well distributed.
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> RMat {
    let g = RMat::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random matrix with orthonormal columns spanning an `r`-dimensional
/// subspace after conjugation by `frame` (columns orthonormal for the inner
/// product that `frame` diagonalises).
pub fn random_rotation_in_frame<R: Rng>(frame: &RMat, rng: &mut R) -> RMat {
    frame * random_orthogonal(frame.ncols(), rng)
}

/// Numerical rank of a set of complex vectors (columns), via the Hermitian
/// Gram matrix eigenvalues relative to the largest one.
pub fn numerical_rank(columns: &CMat, rel_tol: f64) -> usize {
    let gram = columns.adjoint() * columns;
    let (vals, _) = herm_eigen(&gram);
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    vals.iter().filter(|&&v| v > rel_tol * top).count()
}
