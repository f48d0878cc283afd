//! Fock space over (𝔪, J, g0) and the spinor representation κ of the complex
//! Clifford algebra of 𝔪.
//!
//! Basis vectors of the Fock space are bitmasks over the J-orthonormal complex
//! basis `e_1..e_n`; bit `k` set means `e_{k+1}` occurs in the wedge, and wedges
//! are written with increasing index.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{c, cmax_abs, max_abs, CMat, CVec, RMat, RVec, I};

#[derive(Debug, Error)]
pub enum CliffordError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("J is not a g0-orthogonal complex structure (defect {0:e})")]
    BadComplexStructure(f64),
    #[error("map is not in U(𝔪_J): J-commutator {commutator:e}, metric defect {metric:e}")]
    NotUnitaryForJ { commutator: f64, metric: f64 },
    #[error("map is not in u(𝔪_J): J-commutator {commutator:e}, skewness defect {skew:e}")]
    NotSkewForJ { commutator: f64, skew: f64 },
    #[error("complex dimension {0} exceeds the dense cap {MAX_N}")]
    TooLarge(usize),
}

pub const MAX_N: usize = 12;
const CHECK_TOL: f64 = 1e-9;

/// 𝔪 viewed as a complex vector space through J, with ⟨X,Y⟩_J = g0(X,Y) + i g0(JX,Y).
#[derive(Debug, Clone)]
pub struct ComplexModel {
    pub n: usize,
    /// Columns `e_1..e_n`, ⟨·,·⟩_J-orthonormal.
    pub complex_basis: RMat,
    pub j_matrix: RMat,
    pub g0: RMat,
}

impl ComplexModel {
    /// J-Gram–Schmidt of the standard basis of 𝔪 taken in order.
    pub fn new(j: &RMat, g0: &RMat) -> Result<Self, CliffordError> {
        let r = j.nrows();
        if j.ncols() != r || g0.nrows() != r || g0.ncols() != r {
            return Err(CliffordError::DimensionMismatch { expected: r, got: g0.nrows() });
        }
        if !r.is_multiple_of(2) {
            return Err(CliffordError::BadComplexStructure(1.0));
        }
        let defect = max_abs(&(j * j + RMat::identity(r, r))).max(max_abs(&(j.transpose() * g0 * j - g0)));
        if defect > CHECK_TOL {
            return Err(CliffordError::BadComplexStructure(defect));
        }
        let n = r / 2;
        if n > MAX_N {
            return Err(CliffordError::TooLarge(n));
        }
        let mut basis: Vec<RVec> = Vec::with_capacity(n);
        for i in 0..r {
            if basis.len() == n {
                break;
            }
            let mut u = RVec::zeros(r);
            u[i] = 1.0;
            for _ in 0..2 {
                for e in &basis {
                    let je = j * e;
                    let (re, im) = (e.dot(&(g0 * &u)), je.dot(&(g0 * &u)));
                    u -= e * re + je * im;
                }
            }
            let norm = u.dot(&(g0 * &u)).max(0.0).sqrt();
            if norm > 1e-6 {
                basis.push(u / norm);
            }
        }
        Ok(ComplexModel { n, complex_basis: RMat::from_columns(&basis), j_matrix: j.clone(), g0: g0.clone() })
    }

    pub fn r(&self) -> usize {
        2 * self.n
    }

    pub fn inner(&self, x: &RVec, y: &RVec) -> Complex64 {
        let gy = &self.g0 * y;
        Complex64::new(x.dot(&gy), (&self.j_matrix * x).dot(&gy))
    }

    /// Complex coordinates `z_k = ⟨e_k, X⟩_J`, so `X = Σ z_k e_k`.
    pub fn coords(&self, x: &RVec) -> CVec {
        let gx = &self.g0 * x;
        CVec::from_fn(self.n, |k, _| {
            let e = self.complex_basis.column(k);
            Complex64::new(e.dot(&gx), (&self.j_matrix * e).dot(&gx))
        })
    }

    /// Real vector `Σ z_k e_k` with `i` acting as J.
    pub fn from_coords(&self, z: &CVec) -> RVec {
        let mut x = RVec::zeros(self.r());
        for k in 0..self.n {
            let e = self.complex_basis.column(k).into_owned();
            x += &e * z[k].re + (&self.j_matrix * &e) * z[k].im;
        }
        x
    }

    /// Complex matrix `⟨e_l, A e_k⟩_J` of a real map (exact for J-linear maps).
    pub fn complex_matrix(&self, a: &RMat) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for k in 0..self.n {
            let col = self.coords(&(a * self.complex_basis.column(k)));
            m.set_column(k, &col);
        }
        m
    }

    /// Real r×r matrix of the J-linear map with complex matrix `u`.
    pub fn real_matrix(&self, u: &CMat) -> RMat {
        let r = self.r();
        let mut m = RMat::zeros(r, r);
        for i in 0..r {
            let mut ei = RVec::zeros(r);
            ei[i] = 1.0;
            let z = u * self.coords(&ei);
            m.set_column(i, &self.from_coords(&z));
        }
        m
    }

    /// Positively oriented g0-orthonormal real basis `(e_1, Je_1, ..., e_n, Je_n)`.
    pub fn oriented_basis(&self) -> RMat {
        let mut cols = Vec::with_capacity(self.r());
        for k in 0..self.n {
            let e = self.complex_basis.column(k).into_owned();
            cols.push(&self.j_matrix * &e);
            cols.insert(cols.len() - 1, e);
        }
        RMat::from_columns(&cols)
    }

    pub fn random_unitary<R: Rng>(&self, rng: &mut R) -> RMat {
        self.real_matrix(&random_unitary(self.n, rng))
    }

    /// Random element of u(𝔪_J): a skew-Hermitian complex matrix.
    pub fn random_skew<R: Rng>(&self, rng: &mut R) -> RMat {
        let g = random_complex(self.n, rng);
        self.real_matrix(&((&g - g.adjoint()) * c(0.5)))
    }
}

fn random_complex<R: Rng>(n: usize, rng: &mut R) -> CMat {
    CMat::from_fn(n, n, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMat {
    let (q, r) = random_complex(n, rng).qr().unpack();
    let phases = CMat::from_diagonal(&CVec::from_fn(n, |i, _| {
        let d = r[(i, i)];
        if d.norm() == 0.0 {
            c(1.0)
        } else {
            d / d.norm()
        }
    }));
    q * phases
}

#[inline]
fn parity_below(mask: usize, k: usize) -> f64 {
    if (mask & ((1 << k) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone)]
pub struct FockSpace {
    pub model: ComplexModel,
    pub dim: usize,
}

impl FockSpace {
    pub fn new(model: ComplexModel) -> Self {
        let dim = 1 << model.n;
        FockSpace { model, dim }
    }

    pub fn n(&self) -> usize {
        self.model.n
    }

    pub fn vacuum(&self) -> CVec {
        let mut v = CVec::zeros(self.dim);
        v[0] = c(1.0);
        v
    }

    fn check(&self, x: &RVec) -> Result<(), CliffordError> {
        if x.len() != self.model.r() {
            return Err(CliffordError::DimensionMismatch { expected: self.model.r(), got: x.len() });
        }
        Ok(())
    }

    /// Creation operator from complex coordinates.
    fn create_coords(&self, z: &CVec) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for mask in 0..self.dim {
            for k in 0..self.n() {
                if mask & (1 << k) == 0 && z[k] != Complex64::ZERO {
                    m[(mask | (1 << k), mask)] += z[k] * parity_below(mask, k);
                }
            }
        }
        m
    }

    /// Applies the creation operator with coordinates `z` to `psi` without forming a matrix.
    fn apply_create(&self, z: &CVec, psi: &CVec) -> CVec {
        let mut out = CVec::zeros(self.dim);
        for mask in 0..self.dim {
            if psi[mask] == Complex64::ZERO {
                continue;
            }
            for k in 0..self.n() {
                if mask & (1 << k) == 0 {
                    out[mask | (1 << k)] += z[k] * psi[mask] * parity_below(mask, k);
                }
            }
        }
        out
    }

    pub fn create(&self, x: &RVec) -> Result<CMat, CliffordError> {
        self.check(x)?;
        Ok(self.create_coords(&self.model.coords(x)))
    }

    pub fn annihilate(&self, x: &RVec) -> Result<CMat, CliffordError> {
        Ok(self.create(x)?.adjoint())
    }

    /// κ(X) = i(a(X) + a†(X)).
    pub fn kappa(&self, x: &RVec) -> CMat {
        let cr = self.create_coords(&self.model.coords(x));
        (cr.adjoint() + cr) * I
    }

    /// γ = iⁿ κ(b_1)⋯κ(b_2n) for the columns of `basis`.
    pub fn chirality_with_basis(&self, basis: &RMat) -> CMat {
        let mut g = CMat::identity(self.dim, self.dim) * I.powu(self.n() as u32);
        for col in basis.column_iter() {
            g *= self.kappa(&col.into_owned());
        }
        g
    }

    /// Chirality for the oriented basis `(e_1, Je_1, ...)`, negated when `orientation < 0`.
    pub fn chirality(&self, orientation: i8) -> CMat {
        let g = self.chirality_with_basis(&self.model.oriented_basis());
        if orientation < 0 {
            -g
        } else {
            g
        }
    }

    fn unitary_defects(&self, r: &RMat) -> (f64, f64) {
        let j = &self.model.j_matrix;
        let g0 = &self.model.g0;
        (max_abs(&(r * j - j * r)), max_abs(&(r.transpose() * g0 * r - g0)))
    }

    /// Exterior-power action of `R ∈ U(𝔪_J)`: `e_I ↦ Re_{i1} ∧ ⋯ ∧ Re_{ip}`.
    pub fn lift_unitary(&self, r: &RMat) -> Result<CMat, CliffordError> {
        let (commutator, metric) = self.unitary_defects(r);
        if commutator > CHECK_TOL || metric > CHECK_TOL {
            return Err(CliffordError::NotUnitaryForJ { commutator, metric });
        }
        let images: Vec<CVec> = (0..self.n())
            .map(|k| self.model.coords(&(r * self.model.complex_basis.column(k))))
            .collect();
        let mut out = CMat::zeros(self.dim, self.dim);
        for mask in 0..self.dim {
            let mut psi = self.vacuum();
            // e_{i1} ∧ ⋯ ∧ e_{ip} = a†(e_{i1}) ⋯ a†(e_{ip}) Ω, so apply the highest index first
            for k in (0..self.n()).rev() {
                if mask & (1 << k) != 0 {
                    psi = self.apply_create(&images[k], &psi);
                }
            }
            out.set_column(mask, &psi);
        }
        Ok(out)
    }

    /// Derivation extension `Σ A_lk a†_l a_k`, `A = ⟨e_l, L e_k⟩_J`, of a J-linear map.
    pub fn lift_j_linear(&self, l: &RMat) -> CMat {
        let a = self.model.complex_matrix(l);
        let n = self.n();
        let mut m = CMat::zeros(self.dim, self.dim);
        for mask in 0..self.dim {
            for k in 0..n {
                if mask & (1 << k) == 0 {
                    continue;
                }
                let s1 = parity_below(mask, k);
                let removed = mask & !(1 << k);
                for lidx in 0..n {
                    if removed & (1 << lidx) != 0 || a[(lidx, k)] == Complex64::ZERO {
                        continue;
                    }
                    let s2 = parity_below(removed, lidx);
                    m[(removed | (1 << lidx), mask)] += a[(lidx, k)] * (s1 * s2);
                }
            }
        }
        m
    }

    fn skew_defects(&self, l: &RMat) -> (f64, f64) {
        let j = &self.model.j_matrix;
        let g0 = &self.model.g0;
        (max_abs(&(l * j - j * l)), max_abs(&(g0 * l + l.transpose() * g0)))
    }

    /// Fock lift of `L ∈ u(𝔪_J)` as a derivation.
    pub fn lift_skew(&self, l: &RMat) -> Result<CMat, CliffordError> {
        let (commutator, skew) = self.skew_defects(l);
        if commutator > CHECK_TOL || skew > CHECK_TOL {
            return Err(CliffordError::NotSkewForJ { commutator, skew });
        }
        Ok(self.lift_j_linear(l))
    }

    /// Lift of a g0-skew map `A` through the spin representation,
    /// `-¼ Σ_a κ(A f_a) κ(f_a)`, shifted by a scalar so that the vacuum
    /// expectation vanishes. On u(𝔪_J) this coincides with [`Self::lift_skew`].
    pub fn lift_orthogonal(&self, a: &RMat) -> CMat {
        let basis = self.model.oriented_basis();
        let mut m = CMat::zeros(self.dim, self.dim);
        for f in basis.column_iter() {
            let f = f.into_owned();
            m -= self.kappa(&(a * &f)) * self.kappa(&f) * c(0.25);
        }
        let shift = m[(0, 0)];
        for i in 0..self.dim {
            m[(i, i)] -= shift;
        }
        m
    }

    /// Spinor lift of one slice `ℓ(X, ·)` of a connection: the spin lift for
    /// g0-skew maps, otherwise the derivation lift of its J-linear part.
    pub fn lift_connection_slice(&self, l: &RMat) -> (CMat, bool) {
        let (_, skew) = self.skew_defects(l);
        if skew <= CHECK_TOL {
            (self.lift_orthogonal(l), true)
        } else {
            let j = &self.model.j_matrix;
            let linear = (l - j * l * j) * 0.5;
            (self.lift_j_linear(&linear), false)
        }
    }

    /// Rank of the span of all ordered products of distinct κ generators.
    pub fn clifford_span_rank(&self) -> usize {
        let basis = self.model.oriented_basis();
        let gens: Vec<CMat> = basis.column_iter().map(|c| self.kappa(&c.into_owned())).collect();
        let count = 1usize << gens.len();
        let mut cols = CMat::zeros(self.dim * self.dim, count);
        for word in 0..count {
            let mut p = CMat::identity(self.dim, self.dim);
            for (a, g) in gens.iter().enumerate() {
                if word & (1 << a) != 0 {
                    p *= g;
                }
            }
            cols.set_column(word, &CVec::from_column_slice(p.as_slice()));
        }
        crate::linalg::numerical_rank(&cols, 1e-10)
    }
}

/// Defect of `κ(X)κ(Y) + κ(Y)κ(X) = -2 g0(X,Y)`.
pub fn clifford_defect(fock: &FockSpace, x: &RVec, y: &RVec) -> f64 {
    let (kx, ky) = (fock.kappa(x), fock.kappa(y));
    let g = x.dot(&(&fock.model.g0 * y));
    cmax_abs(&(&kx * &ky + &ky * &kx + CMat::identity(fock.dim, fock.dim) * c(2.0 * g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::su;
    use crate::orbit::Orbit;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn su2_fock() -> FockSpace {
        let g = su(2).unwrap();
        let o = Orbit::from_z(&g, &g.basis_vector(2)).unwrap();
        // g0 measured against kil coordinates: g⋄ = α Kil with α = 1
        let model = ComplexModel::new(&o.geom.j, &o.geom.g_metric).unwrap();
        FockSpace::new(model)
    }

    /// Block-diagonal J with random positive g0 commuting with it.
    fn model(n: usize, seed: u64) -> ComplexModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = 2 * n;
        let mut j = RMat::zeros(r, r);
        let mut g0 = RMat::zeros(r, r);
        for k in 0..n {
            j[(2 * k + 1, 2 * k)] = 1.0;
            j[(2 * k, 2 * k + 1)] = -1.0;
            let w = 0.5 + rng.random::<f64>();
            g0[(2 * k, 2 * k)] = w;
            g0[(2 * k + 1, 2 * k + 1)] = w;
        }
        ComplexModel::new(&j, &g0).unwrap()
    }

    fn cdiff(a: &CMat, b: &CMat) -> f64 {
        cmax_abs(&(a - b))
    }

    #[test]
    fn one_generator() {
        let f = FockSpace::new(model(1, 0));
        let e1 = f.model.complex_basis.column(0).into_owned();
        let cr = f.create(&e1).unwrap();
        let an = f.annihilate(&e1).unwrap();
        let vac = f.vacuum();
        let one = &cr * &vac;
        assert!((one[1] - c(1.0)).norm() < 1e-15 && one[0].norm() == 0.0);
        assert!(((&an * one) - &vac).norm() < 1e-15);
        assert!((&an * &vac).norm() == 0.0);
    }

    #[test]
    fn su2_kappa_squares_to_minus_two_over_kil_scale() {
        // g0 here is g⋄ in kil-orthonormal coordinates; the basis (X1,X2)/√2 has g0 = I,
        // so X1 itself has g0(X1,X1) = 2 and κ(X1)² = -2
        let f = su2_fock();
        let x1 = RVec::from_vec(vec![2f64.sqrt(), 0.0]);
        let k = f.kappa(&x1);
        assert!(cdiff(&(&k * &k), &(CMat::identity(2, 2) * c(-2.0))) < 1e-14);
    }

    #[test]
    fn chirality_n1_is_diag_plus_minus() {
        let f = su2_fock();
        let g = f.chirality(1);
        let expected = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-1.0)]));
        assert!(cdiff(&g, &expected) < 1e-14);
        assert!(cdiff(&f.chirality(-1), &(-expected)) < 1e-14);
        // swapping two basis vectors negates γ
        let mut b = f.model.oriented_basis();
        b.swap_columns(0, 1);
        assert!(cdiff(&f.chirality_with_basis(&b), &(-f.chirality(1))) < 1e-14);
    }

    #[test]
    fn chirality_n2_splits_evenly() {
        let f = FockSpace::new(model(2, 1));
        let g = f.chirality(1);
        assert!(g.trace().norm() < 1e-12);
        let (vals, _) = crate::linalg::herm_eigen(&g);
        assert_eq!(vals.iter().filter(|v| **v > 0.0).count(), 2);
    }

    #[test]
    fn lift_of_j_has_degree_phases() {
        let f = FockSpace::new(model(3, 2));
        let rho = f.lift_unitary(&f.model.j_matrix).unwrap();
        for mask in 0..f.dim {
            let p = mask.count_ones();
            let expected = I.powu(p);
            assert!((rho[(mask, mask)] - expected).norm() < 1e-12);
        }
        assert!(cdiff(&rho, &CMat::from_diagonal(&rho.diagonal())) < 1e-12);
        let id = f.lift_unitary(&RMat::identity(6, 6)).unwrap();
        assert!(cdiff(&id, &CMat::identity(8, 8)) < 1e-14);
    }

    #[test]
    fn derivation_of_j_in_degree_one() {
        let f = FockSpace::new(model(1, 3));
        let s = f.lift_skew(&f.model.j_matrix).unwrap();
        let vac = f.vacuum();
        assert!((&s * &vac).norm() < 1e-15);
        let mut e1 = CVec::zeros(2);
        e1[1] = c(1.0);
        assert!((&s * &e1 - e1 * I).norm() < 1e-14);
        assert!(cmax_abs(&f.lift_skew(&RMat::zeros(2, 2)).unwrap()) == 0.0);
    }

    #[test]
    fn rejects_maps_outside_unitary_group() {
        let f = FockSpace::new(model(2, 4));
        let mut bad = RMat::identity(4, 4);
        bad[(0, 0)] = 2.0;
        assert!(matches!(f.lift_unitary(&bad), Err(CliffordError::NotUnitaryForJ { .. })));
        assert!(matches!(f.lift_skew(&bad), Err(CliffordError::NotSkewForJ { .. })));
        assert!(matches!(f.create(&RVec::zeros(3)), Err(CliffordError::DimensionMismatch { .. })));
    }

    #[test]
    fn full_matrix_algebra() {
        for n in 1..=3 {
            let f = FockSpace::new(model(n, 5 + n as u64));
            assert_eq!(f.clifford_span_rank(), 1 << (2 * n));
        }
    }

    #[test]
    fn spin_lift_agrees_with_derivation_on_unitary_algebra() {
        let f = FockSpace::new(model(3, 9));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let l = f.model.random_skew(&mut rng);
        assert!(cdiff(&f.lift_orthogonal(&l), &f.lift_skew(&l).unwrap()) < 1e-12);
    }

    #[test]
    fn spin_lift_of_general_skew_map() {
        let f = FockSpace::new(model(2, 12));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = crate::linalg::random_normal_vec(16, &mut rng);
        let m = RMat::from_column_slice(4, 4, g.as_slice());
        // g0-skew: A = g0^{-1}(M - M^T)
        let a = f.model.g0.clone().try_inverse().unwrap() * (&m - m.transpose());
        let s = f.lift_orthogonal(&a);
        let x = crate::linalg::random_normal_vec(4, &mut rng);
        let lhs = &s * f.kappa(&x) - f.kappa(&x) * &s;
        assert!(cdiff(&lhs, &f.kappa(&(&a * &x))) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn canonical_anticommutators(n in 1usize..=3, seed in 0u64..1000) {
            let f = FockSpace::new(model(n, seed));
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            let x = crate::linalg::random_normal_vec(2 * n, &mut rng);
            let y = crate::linalg::random_normal_vec(2 * n, &mut rng);
            let (ax, ay) = (f.annihilate(&x).unwrap(), f.annihilate(&y).unwrap());
            let cy = f.create(&y).unwrap();
            let ip = f.model.inner(&x, &y);
            let id = CMat::identity(f.dim, f.dim);
            prop_assert!(cdiff(&(&ax * &cy + &cy * &ax), &(id * ip)) < 1e-12);
            prop_assert!(cmax_abs(&(&ax * &ay + &ay * &ax)) < 1e-12);
            prop_assert!(cdiff(&cy, &f.annihilate(&y).unwrap().adjoint()) == 0.0);
            prop_assert!(clifford_defect(&f, &x, &y) < 1e-12);
            let kx = f.kappa(&x);
            prop_assert!(cdiff(&kx.adjoint(), &(-&kx)) < 1e-14);
            let jx = &f.model.j_matrix * &x;
            prop_assert!(cmax_abs(&(&kx * f.kappa(&jx) + f.kappa(&jx) * &kx)) < 1e-12);
        }

        #[test]
        fn unitary_lift_equivariance(n in 1usize..=3, seed in 0u64..1000) {
            let f = FockSpace::new(model(n, seed));
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
            let r = f.model.random_unitary(&mut rng);
            let rho = f.lift_unitary(&r).unwrap();
            let id = CMat::identity(f.dim, f.dim);
            prop_assert!(cdiff(&(rho.adjoint() * &rho), &id) < 1e-12);
            let x = crate::linalg::random_normal_vec(2 * n, &mut rng);
            let lhs = &rho * f.kappa(&x) * rho.adjoint();
            prop_assert!(cdiff(&lhs, &f.kappa(&(&r * &x))) < 1e-10);
            let g = f.chirality(1);
            prop_assert!(cdiff(&(&rho * &g), &(&g * &rho)) < 1e-12);
        }

        #[test]
        fn skew_lift_leibniz_and_exponential(n in 1usize..=3, seed in 0u64..1000) {
            let f = FockSpace::new(model(n, seed));
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 3);
            let l = f.model.random_skew(&mut rng);
            let s = f.lift_skew(&l).unwrap();
            prop_assert!(cdiff(&s.adjoint(), &(-&s)) < 1e-12);
            let x = crate::linalg::random_normal_vec(2 * n, &mut rng);
            let comm = &s * f.kappa(&x) - f.kappa(&x) * &s;
            prop_assert!(cdiff(&comm, &f.kappa(&(&l * &x))) < 1e-10);
            let u = f.lift_unitary(&l.clone().exp()).unwrap();
            prop_assert!(cdiff(&s.clone().exp(), &u) < 1e-8);
            // d/dt lift(exp(tL)) at 0
            let h = 1e-5;
            let up = f.lift_unitary(&(&l * h).exp()).unwrap();
            let um = f.lift_unitary(&(&l * -h).exp()).unwrap();
            prop_assert!(cdiff(&((up - um) * c(0.5 / h)), &s) < 1e-7);
            // Leibniz on a two-vector
            if n >= 2 {
                let y = crate::linalg::random_normal_vec(2 * n, &mut rng);
                let vac = f.vacuum();
                let wedge = |a: &RVec, b: &RVec| f.create(a).unwrap() * f.create(b).unwrap() * &vac;
                let lhs = &s * wedge(&x, &y);
                let rhs = wedge(&(&l * &x), &y) + wedge(&x, &(&l * &y));
                prop_assert!((lhs - rhs).norm() < 1e-10);
            }
        }

        #[test]
        fn chirality_properties(n in 1usize..=3, seed in 0u64..1000) {
            let f = FockSpace::new(model(n, seed));
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 5);
            let g = f.chirality(1);
            let id = CMat::identity(f.dim, f.dim);
            prop_assert!(cdiff(&(&g * &g), &id) < 1e-12);
            prop_assert!(cdiff(&g.adjoint(), &g) < 1e-12);
            let x = crate::linalg::random_normal_vec(2 * n, &mut rng);
            let kx = f.kappa(&x);
            prop_assert!(cmax_abs(&(&g * &kx + &kx * &g)) < 1e-12);
            // another oriented orthonormal basis: rotate by a proper orthogonal matrix
            let mut q = crate::linalg::random_orthogonal(2 * n, &mut rng);
            if q.determinant() < 0.0 {
                q.column_mut(0).neg_mut();
            }
            let b = f.model.oriented_basis() * q;
            prop_assert!(cdiff(&f.chirality_with_basis(&b), &g) < 1e-10);
        }
    }
}
