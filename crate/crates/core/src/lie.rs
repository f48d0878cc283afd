//! Compact semisimple Lie algebras given by real structure constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, max_abs, CMat, RMat, RVec, I};

pub type AlgebraElement = RVec;

#[derive(Debug, Error)]
pub enum LieError {
    #[error("structure constants not antisymmetric: c[{i}][{j}][{k}] = {a} but c[{j}][{i}][{k}] = {b}")]
    AntisymmetryViolation { i: usize, j: usize, k: usize, a: f64, b: f64 },
    #[error("Jacobi identity fails for basis pair ({i}, {j}) with defect {defect:e}")]
    JacobiViolation { i: usize, j: usize, defect: f64 },
    #[error("negative Killing form is not positive-definite (smallest eigenvalue {min_eig:e})")]
    DegenerateKilling { min_eig: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported algebra {0:?}")]
    BadSpec(String),
    #[error("structure table index {index} out of range for dim {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// How to build an algebra: a built-in family or an explicit table.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraSpec {
    Su(usize),
    Table(StructureTable),
}

impl FromStr for AlgebraSpec {
    type Err = LieError;

    /// Accepts `su(n)` / `sun` style names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase();
        let inner = t
            .strip_prefix("su(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| t.strip_prefix("su"));
        match inner.and_then(|n| n.parse::<usize>().ok()) {
            Some(n) if n >= 2 => Ok(AlgebraSpec::Su(n)),
            _ => Err(LieError::BadSpec(s.to_string())),
        }
    }
}

/// Sparse structure-constant table, 0-based, as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureTable {
    pub dim: usize,
    pub c: Vec<(usize, usize, usize, f64)>,
}

/// kil-orthonormal subspace of the algebra together with its kil-orthogonal projector.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub basis: RMat,
    pub projector: RMat,
}

impl Subspace {
    pub fn new(basis: RMat, kil: &RMat) -> Self {
        let projector = &basis * basis.transpose() * kil;
        Subspace { basis, projector }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Coordinates of the projection of `v` in this subspace's basis.
    pub fn coords(&self, kil: &RMat, v: &RVec) -> RVec {
        self.basis.transpose() * (kil * v)
    }
}

#[derive(Debug, Clone)]
pub struct LieAlgebra {
    dim: usize,
    /// c[(i * dim + j) * dim + k]
    c: Vec<f64>,
    ad: Vec<RMat>,
    kil: RMat,
    /// Columns form a kil-orthonormal basis (`F^T kil F = I`).
    frame: RMat,
    name: String,
    matrices: Option<Vec<CMat>>,
}

impl fmt::Display for LieAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (dim {})", self.name, self.dim)
    }
}

const VALIDATION_TOL: f64 = 1e-10;

pub fn build_algebra(spec: &AlgebraSpec) -> Result<LieAlgebra, LieError> {
    match spec {
        AlgebraSpec::Su(n) => su(*n),
        AlgebraSpec::Table(t) => from_table(t),
    }
}

/// Structure constants from a sparse table. Entries with `i < j` are completed
/// antisymmetrically; entries given on both sides must agree.
pub fn from_table(table: &StructureTable) -> Result<LieAlgebra, LieError> {
    let n = table.dim;
    let mut c = vec![0.0; n * n * n];
    let mut set = vec![false; n * n * n];
    for &(i, j, k, v) in &table.c {
        for index in [i, j, k] {
            if index >= n {
                return Err(LieError::IndexOutOfRange { index, dim: n });
            }
        }
        let at = (i * n + j) * n + k;
        c[at] = v;
        set[at] = true;
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let a = (i * n + j) * n + k;
                let b = (j * n + i) * n + k;
                if set[a] && !set[b] {
                    c[b] = -c[a];
                }
            }
        }
    }
    LieAlgebra::from_constants(n, c, format!("table(dim {n})"), None)
}

/// su(n) in the basis of anti-Hermitian traceless matrices scaled by 1/2:
/// for each j < k the pair (E_jk - E_kj)/2, i(E_jk + E_kj)/2, then the
/// diagonals i(E_jj - E_{j+1,j+1})/2. For n = 2 this gives [X_i, X_j] = ε_ijk X_k.
pub fn su(n: usize) -> Result<LieAlgebra, LieError> {
    if n < 2 {
        return Err(LieError::BadSpec(format!("su({n})")));
    }
    let mut mats = Vec::with_capacity(n * n - 1);
    for j in 0..n {
        for k in (j + 1)..n {
            let mut a = CMat::zeros(n, n);
            a[(j, k)] = c(0.5);
            a[(k, j)] = c(-0.5);
            mats.push(a);
            let mut b = CMat::zeros(n, n);
            b[(j, k)] = I * 0.5;
            b[(k, j)] = I * 0.5;
            mats.push(b);
        }
    }
    for j in 0..n - 1 {
        let mut d = CMat::zeros(n, n);
        d[(j, j)] = I * 0.5;
        d[(j + 1, j + 1)] = -I * 0.5;
        mats.push(d);
    }
    let dim = mats.len();
    let gram = RMat::from_fn(dim, dim, |a, b| (mats[a].adjoint() * &mats[b]).trace().re);
    let gram_inv = gram.try_inverse().expect("su(n) basis is linearly independent");
    let mut cst = vec![0.0; dim * dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let br = &mats[i] * &mats[j] - &mats[j] * &mats[i];
            let rhs = RVec::from_fn(dim, |a, _| (mats[a].adjoint() * &br).trace().re);
            let coeffs = &gram_inv * rhs;
            for k in 0..dim {
                let v = coeffs[k];
                cst[(i * dim + j) * dim + k] = if v.abs() < 1e-14 { 0.0 } else { v };
            }
        }
    }
    LieAlgebra::from_constants(dim, cst, format!("su({n})"), Some(mats))
}

impl LieAlgebra {
    /// Validates antisymmetry, Jacobi and definiteness, then caches ad matrices and kil.
    pub fn from_constants(
        dim: usize,
        c: Vec<f64>,
        name: String,
        matrices: Option<Vec<CMat>>,
    ) -> Result<Self, LieError> {
        if c.len() != dim * dim * dim {
            return Err(LieError::DimensionMismatch { expected: dim * dim * dim, got: c.len() });
        }
        let scale = c.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let a = c[(i * dim + j) * dim + k];
                    let b = c[(j * dim + i) * dim + k];
                    if (a + b).abs() > VALIDATION_TOL * scale {
                        return Err(LieError::AntisymmetryViolation { i, j, k, a, b });
                    }
                }
            }
        }
        // ad_i[k][j] = c[i][j][k]
        let ad: Vec<RMat> = (0..dim)
            .map(|i| RMat::from_fn(dim, dim, |k, j| c[(i * dim + j) * dim + k]))
            .collect();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let mut lhs = RMat::zeros(dim, dim);
                for k in 0..dim {
                    let v = c[(i * dim + j) * dim + k];
                    if v != 0.0 {
                        lhs += &ad[k] * v;
                    }
                }
                let rhs = &ad[i] * &ad[j] - &ad[j] * &ad[i];
                let defect = max_abs(&(lhs - rhs));
                if defect > VALIDATION_TOL * scale * scale {
                    return Err(LieError::JacobiViolation { i, j, defect });
                }
            }
        }
        let kil = RMat::from_fn(dim, dim, |i, j| -(&ad[i] * &ad[j]).trace());
        let kil = (&kil + kil.transpose()) * 0.5;
        let (vals, _) = crate::linalg::sym_eigen(&kil);
        let min_eig = vals.first().copied().unwrap_or(0.0);
        let max_eig = vals.last().copied().unwrap_or(0.0);
        if dim == 0 || min_eig <= VALIDATION_TOL * max_eig.max(1.0) {
            return Err(LieError::DegenerateKilling { min_eig });
        }
        let chol = kil.clone().cholesky().ok_or(LieError::DegenerateKilling { min_eig })?;
        let l_inv = chol.l().try_inverse().ok_or(LieError::DegenerateKilling { min_eig })?;
        let frame = l_inv.transpose();
        Ok(LieAlgebra { dim, c, ad, kil, frame, name, matrices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[(i * self.dim + j) * self.dim + k]
    }

    pub fn kil(&self) -> &RMat {
        &self.kil
    }

    pub fn frame(&self) -> &RMat {
        &self.frame
    }

    /// Matrix of `ad_{X_i}` in the fixed basis.
    pub fn ad_basis(&self, i: usize) -> &RMat {
        &self.ad[i]
    }

    /// Defining matrices, when the algebra came from a matrix family.
    pub fn matrices(&self) -> Option<&[CMat]> {
        self.matrices.as_deref()
    }

    pub fn basis_vector(&self, i: usize) -> AlgebraElement {
        let mut v = RVec::zeros(self.dim);
        v[i] = 1.0;
        v
    }

    fn check_dim(&self, v: &RVec) -> Result<(), LieError> {
        if v.len() != self.dim {
            return Err(LieError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    pub fn ad(&self, z: &RVec) -> RMat {
        let mut m = RMat::zeros(self.dim, self.dim);
        for (i, &zi) in z.iter().enumerate() {
            if zi != 0.0 {
                m += &self.ad[i] * zi;
            }
        }
        m
    }

    pub fn bracket(&self, a: &RVec, b: &RVec) -> Result<AlgebraElement, LieError> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.br(a, b))
    }

    /// Unchecked bracket used on hot paths where dimensions are already known.
    pub fn br(&self, a: &RVec, b: &RVec) -> AlgebraElement {
        self.ad(a) * b
    }

    pub fn killing(&self, a: &RVec, b: &RVec) -> f64 {
        a.dot(&(&self.kil * b))
    }

    /// `Ad_{exp(tZ)}` as `exp(t ad_Z)`.
    pub fn ad_exp(&self, z: &RVec, t: f64) -> Result<RMat, LieError> {
        self.check_dim(z)?;
        Ok((self.ad(z) * t).exp())
    }

    /// True when the constants are exactly ε_ijk.
    pub fn is_su2_standard(&self) -> bool {
        if self.dim != 3 {
            return false;
        }
        (0..3).all(|i| {
            (0..3).all(|j| {
                (0..3).all(|k| (self.structure_constant(i, j, k) - levi_civita(i, j, k)).abs() < 1e-12)
            })
        })
    }
}

pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    if i == j || j == k || i == k {
        return 0.0;
    }
    if (i + 1) % 3 == j {
        1.0
    } else {
        -1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn oracle_kil(c: &dyn Fn(usize, usize, usize) -> f64, n: usize) -> RMat {
        // -tr(ad_i ad_j) = -Σ_{k,l} c_ikl c_jlk, written out as a plain quadruple loop
        let mut k = RMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += c(i, a, b) * c(j, b, a);
                    }
                }
                k[(i, j)] = -s;
            }
        }
        k
    }

    #[test]
    fn su2_matches_epsilon_and_kil_is_two() {
        let g = su(2).unwrap();
        assert!(g.is_su2_standard());
        let k = oracle_kil(&levi_civita, 3);
        assert!(max_abs(&(k.clone() - RMat::identity(3, 3) * 2.0)) < 1e-15);
        assert!(max_abs(&(g.kil() - k)) < 1e-12);
    }

    #[test]
    fn su3_kil_matches_oracle() {
        let g = su(3).unwrap();
        assert_eq!(g.dim(), 8);
        let k = oracle_kil(&|i, j, l| g.structure_constant(i, j, l), 8);
        assert!(max_abs(&(g.kil() - &k)) < 1e-12);
        // -tr(ad X ad Y) = -6 tr(XY); off-diagonal generators have tr(X^2) = -1/2
        assert!((k[(0, 0)] - 3.0).abs() < 1e-12);
        // neighbouring Cartan generators overlap: tr(XY) = 1/4
        assert!((k[(6, 7)] + 1.5).abs() < 1e-12);
    }

    #[test]
    fn brackets_of_su2() {
        let g = su(2).unwrap();
        let x = |i| g.basis_vector(i);
        assert!((g.bracket(&x(0), &x(1)).unwrap() - x(2)).norm() < 1e-15);
        assert!((g.bracket(&x(2), &x(0)).unwrap() - x(1)).norm() < 1e-15);
        assert!(g.bracket(&x(1), &x(1)).unwrap().norm() == 0.0);
        assert!(matches!(
            g.bracket(&RVec::zeros(2), &x(0)),
            Err(LieError::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn antisymmetry_violation() {
        let t = StructureTable { dim: 3, c: vec![(0, 1, 2, 1.0), (1, 0, 2, 1.0)] };
        assert!(matches!(from_table(&t), Err(LieError::AntisymmetryViolation { .. })));
    }

    #[test]
    fn table_round_trip_su2() {
        let t = StructureTable { dim: 3, c: vec![(0, 1, 2, 1.0), (1, 2, 0, 1.0), (0, 2, 1, -1.0)] };
        let g = from_table(&t).unwrap();
        assert!(g.is_su2_standard());
    }

    #[test]
    fn jacobi_violation_detected() {
        // so(3) plus [X0,X3] = X0 breaks Jacobi on (X0, X1, X3)
        let t = StructureTable {
            dim: 4,
            c: vec![(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0), (0, 3, 0, 1.0)],
        };
        assert!(matches!(from_table(&t), Err(LieError::JacobiViolation { .. })));
    }

    #[test]
    fn abelian_is_degenerate() {
        let t = StructureTable { dim: 2, c: vec![] };
        assert!(matches!(from_table(&t), Err(LieError::DegenerateKilling { .. })));
    }

    #[test]
    fn heisenberg_is_degenerate() {
        let t = StructureTable { dim: 3, c: vec![(0, 1, 2, 1.0)] };
        assert!(matches!(from_table(&t), Err(LieError::DegenerateKilling { .. })));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!("su(3)".parse::<AlgebraSpec>().unwrap(), AlgebraSpec::Su(3));
        assert_eq!("SU4".parse::<AlgebraSpec>().unwrap(), AlgebraSpec::Su(4));
        assert!("su(1)".parse::<AlgebraSpec>().is_err());
        assert!("so(3)".parse::<AlgebraSpec>().is_err());
    }

    #[test]
    fn ad_exp_quarter_turn() {
        let g = su(2).unwrap();
        let r = g.ad_exp(&g.basis_vector(2), std::f64::consts::FRAC_PI_2).unwrap();
        // X1 -> X2, X2 -> -X1, X3 fixed
        let expected = RMat::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(max_abs(&(&r - &expected)) < 1e-12);
        // cross-check against the eigendecomposition of the skew generator
        let a = g.ad(&g.basis_vector(2)) * std::f64::consts::FRAC_PI_2;
        let h = crate::linalg::to_complex(&a) * (-I);
        let (vals, vecs) = crate::linalg::herm_eigen(&h);
        let d = CMat::from_diagonal(&crate::linalg::CVec::from_iterator(
            3,
            vals.iter().map(|&v| (I * v).exp()),
        ));
        let via_eig = &vecs * d * vecs.adjoint();
        assert!(crate::linalg::cmax_abs(&(via_eig - crate::linalg::to_complex(&r))) < 1e-12);
        assert!(max_abs(&(g.ad_exp(&g.basis_vector(0), 0.0).unwrap() - RMat::identity(3, 3))) == 0.0);
    }

    fn small_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-2.0..2.0f64, n)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn ad_is_kil_skew(z in small_vec(8)) {
            let g = su(3).unwrap();
            let a = g.ad(&RVec::from_vec(z));
            let s = g.kil() * &a + a.transpose() * g.kil();
            prop_assert!(max_abs(&s) < 1e-10);
        }

        #[test]
        fn jacobi_random_triples(x in small_vec(8), y in small_vec(8), z in small_vec(8)) {
            let g = su(3).unwrap();
            let (x, y, z) = (RVec::from_vec(x), RVec::from_vec(y), RVec::from_vec(z));
            let j = g.br(&x, &g.br(&y, &z)) + g.br(&y, &g.br(&z, &x)) + g.br(&z, &g.br(&x, &y));
            prop_assert!(j.amax() < 1e-10);
        }

        #[test]
        fn ad_exp_orthogonal_and_one_parameter(z in small_vec(8), s in -3.0..3.0f64, t in -3.0..3.0f64) {
            let g = su(3).unwrap();
            let z = RVec::from_vec(z);
            let es = g.ad_exp(&z, s).unwrap();
            let et = g.ad_exp(&z, t).unwrap();
            let est = g.ad_exp(&z, s + t).unwrap();
            prop_assert!(max_abs(&(es.transpose() * g.kil() * &es - g.kil())) < 1e-10);
            prop_assert!(max_abs(&(est - es * et)) < 1e-9);
        }
    }
}
