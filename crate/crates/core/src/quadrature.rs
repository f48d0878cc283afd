//! Quadrature cross-checks on SU(2) in Euler angles `x = e^{φX₃} e^{θX₂} e^{ψX₃}`,
//! Haar density ∝ sin θ. Periodic angles use the trapezoid rule, θ uses Gauss–Legendre.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::connection::ConnectionMap;
use crate::dirac::{cmp_complex, DiracContext};
use crate::irrep::IrrepData;
use crate::lie::LieAlgebra;
use crate::linalg::{c, complex_eigenvalues, herm_eigen, CMat, CVec, RMat, RVec, I};
use crate::orbit::OrbitGeometry;

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error("quadrature checks need su(2) in its standard basis, got {0}")]
    UnsupportedAlgebra(String),
    #[error("grid sizes must be positive")]
    EmptyGrid,
    #[error("metric is not positive definite")]
    BadMetric,
    #[error("test field has {0} coefficients, expected 3")]
    FieldShape(usize),
    #[error("eigensolver did not converge on the reduced Galerkin matrix")]
    EigenSolver,
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EulerGrid {
    pub n_phi: usize,
    pub n_theta: usize,
    pub n_psi: usize,
}

impl Default for EulerGrid {
    fn default() -> Self {
        EulerGrid { n_phi: 64, n_theta: 64, n_psi: 64 }
    }
}

impl EulerGrid {
    pub fn cube(n: usize) -> Self {
        EulerGrid { n_phi: n, n_theta: n, n_psi: n }
    }

    /// θ nodes on [0, π] with weights already multiplied by sin θ and normalized to total 1.
    fn theta_rule(&self) -> Vec<(f64, f64)> {
        let (x, w) = gauss_legendre(self.n_theta);
        x.iter()
            .zip(&w)
            .map(|(&xi, &wi)| {
                let th = 0.5 * PI * (xi + 1.0);
                (th, wi * 0.5 * PI * th.sin() / 2.0)
            })
            .collect()
    }

    fn check(&self) -> Result<(), QuadratureError> {
        if self.n_phi == 0 || self.n_theta == 0 || self.n_psi == 0 {
            return Err(QuadratureError::EmptyGrid);
        }
        Ok(())
    }
}

fn require_su2(alg: &LieAlgebra) -> Result<(), QuadratureError> {
    if alg.is_su2_standard() {
        Ok(())
    } else {
        Err(QuadratureError::UnsupportedAlgebra(alg.name().to_string()))
    }
}

/// `c0 + b·y + yᵀ A y` in the coordinates of `y = Ad_x Z`.
#[derive(Debug, Clone)]
pub struct CoefficientPoly {
    pub c0: f64,
    pub b: RVec,
    pub a: RMat,
}

impl CoefficientPoly {
    pub fn constant(c0: f64) -> Self {
        CoefficientPoly { c0, b: RVec::zeros(3), a: RMat::zeros(3, 3) }
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        CoefficientPoly {
            c0: rng.random_range(-1.0..1.0),
            b: RVec::from_fn(3, |_, _| rng.random_range(-1.0..1.0)),
            a: RMat::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)),
        }
    }

    pub fn eval(&self, y: &RVec) -> f64 {
        self.c0 + self.b.dot(y) + y.dot(&(&self.a * y))
    }

    pub fn grad(&self, y: &RVec) -> RVec {
        &self.b + (&self.a + self.a.transpose()) * y
    }
}

/// `V(x) = Σ_k p_k(Ad_x Z) X̂_k(x)` with `X̂_k(x) = -P Ad_x⁻¹ X_k` as an equivariant map into 𝔪.
#[derive(Debug, Clone)]
pub struct TestField {
    pub coeffs: Vec<CoefficientPoly>,
}

impl TestField {
    pub fn zero() -> Self {
        TestField { coeffs: (0..3).map(|_| CoefficientPoly::constant(0.0)).collect() }
    }

    pub fn fundamental(k: usize) -> Self {
        let mut f = TestField::zero();
        f.coeffs[k] = CoefficientPoly::constant(1.0);
        f
    }

    pub fn random_single<R: Rng>(k: usize, rng: &mut R) -> Self {
        let mut f = TestField::zero();
        f.coeffs[k] = CoefficientPoly::random(rng);
        f
    }

    pub fn random<R: Rng>(rng: &mut R) -> Self {
        TestField { coeffs: (0..3).map(|_| CoefficientPoly::random(rng)).collect() }
    }
}

/// The five fields of the divergence battery: three fundamental fields and two with
/// random quadratic coefficients.
pub fn standard_test_fields(seed: u64) -> Vec<(String, TestField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        ("X1-hat".into(), TestField::fundamental(0)),
        ("X2-hat".into(), TestField::fundamental(1)),
        ("X3-hat".into(), TestField::fundamental(2)),
        ("quadratic*X1-hat".into(), TestField::random_single(0, &mut rng)),
        ("quadratic-combination".into(), TestField::random(&mut rng)),
    ]
}

fn euler_ad(alg: &LieAlgebra, phi: f64, theta: f64, psi: f64) -> RMat {
    let e = |k: usize, t: f64| alg.ad_exp(&alg.basis_vector(k), t).expect("basis vector has algebra dimension");
    e(2, phi) * e(1, theta) * e(2, psi)
}

fn euler_ad_inv(alg: &LieAlgebra, phi: f64, theta: f64, psi: f64) -> RMat {
    let e = |k: usize, t: f64| alg.ad_exp(&alg.basis_vector(k), t).expect("basis vector has algebra dimension");
    e(2, -psi) * e(1, -theta) * e(2, -phi)
}

/// Pointwise `div V` at the Euler point `(φ, θ, ψ)`, using `∇ = ∇^c + ℓ` on equivariant maps.
pub struct DivergenceIntegrand<'a> {
    geom: &'a OrbitGeometry,
    conn: &'a ConnectionMap,
    g0: &'a RMat,
    field: &'a TestField,
    frame: Vec<RVec>,
    frame_alg: Vec<RVec>,
    basis: Vec<RVec>,
}

impl<'a> DivergenceIntegrand<'a> {
    pub fn new(
        geom: &'a OrbitGeometry,
        conn: &'a ConnectionMap,
        g0: &'a RMat,
        field: &'a TestField,
    ) -> Result<Self, QuadratureError> {
        require_su2(&geom.algebra)?;
        if field.coeffs.len() != 3 {
            return Err(QuadratureError::FieldShape(field.coeffs.len()));
        }
        let frame_m = crate::connection::g0_orthonormal_frame(g0).map_err(|_| QuadratureError::BadMetric)?;
        let frame: Vec<RVec> = frame_m.column_iter().map(|f| f.into_owned()).collect();
        let frame_alg = frame.iter().map(|f| geom.embed(f)).collect();
        let basis = (0..3).map(|k| geom.algebra.basis_vector(k)).collect();
        Ok(DivergenceIntegrand { geom, conn, g0, field, frame, frame_alg, basis })
    }

    pub fn eval(&self, phi: f64, theta: f64, psi: f64) -> f64 {
        let alg = &self.geom.algebra;
        self.eval_at(&euler_ad(alg, phi, theta, psi), &euler_ad_inv(alg, phi, theta, psi))
    }

    /// Same as [`eval`](Self::eval) given `Ad_x` and `Ad_x⁻¹`.
    pub fn eval_at(&self, ad: &RMat, ad_inv: &RMat) -> f64 {
        let (geom, alg) = (self.geom, &self.geom.algebra);
        let z = &geom.datum.z;
        let y = ad * z;
        let inv_x: Vec<RVec> = self.basis.iter().map(|x| ad_inv * x).collect();
        let hat: Vec<RVec> = inv_x.iter().map(|v| -geom.project(v)).collect();
        let mut v = RVec::zeros(geom.r());
        for (p, h) in self.field.coeffs.iter().zip(&hat) {
            v += h * p.eval(&y);
        }
        let mut div = 0.0;
        for (fa, fa_alg) in self.frame.iter().zip(&self.frame_alg) {
            let dy = ad * alg.br(fa_alg, z);
            let mut dv = self.conn.eval(fa, &v);
            for (k, p) in self.field.coeffs.iter().enumerate() {
                dv += &hat[k] * p.grad(&y).dot(&dy);
                dv += geom.project(&alg.br(fa_alg, &inv_x[k])) * p.eval(&y);
            }
            div += fa.dot(&(self.g0 * dv));
        }
        div
    }
}

/// Haar average of `div V` for the connection `conn` and the metric `g0` it is compatible with.
pub fn divergence_integral(
    geom: &OrbitGeometry,
    conn: &ConnectionMap,
    g0: &RMat,
    field: &TestField,
    grid: EulerGrid,
) -> Result<f64, QuadratureError> {
    grid.check()?;
    let integrand = DivergenceIntegrand::new(geom, conn, g0, field)?;
    let alg = &geom.algebra;
    let e = |k: usize, t: f64| alg.ad_exp(&alg.basis_vector(k), t).expect("basis vector has algebra dimension");
    let dphi = 1.0 / grid.n_phi as f64;
    let dpsi = 1.0 / grid.n_psi as f64;
    let phis: Vec<(RMat, RMat)> =
        (0..grid.n_phi).map(|i| 2.0 * PI * i as f64 * dphi).map(|t| (e(2, t), e(2, -t))).collect();
    let psis: Vec<(RMat, RMat)> =
        (0..grid.n_psi).map(|i| 2.0 * PI * i as f64 * dpsi).map(|t| (e(2, t), e(2, -t))).collect();
    let slices: Vec<f64> = grid
        .theta_rule()
        .par_iter()
        .map(|&(theta, wt)| {
            let (e_th, e_th_inv) = (e(1, theta), e(1, -theta));
            let mut acc = 0.0;
            for (e_ph, e_ph_inv) in &phis {
                let left = e_ph * &e_th;
                let right = &e_th_inv * e_ph_inv;
                for (e_ps, e_ps_inv) in &psis {
                    acc += integrand.eval_at(&(&left * e_ps), &(e_ps_inv * &right));
                }
            }
            acc * wt * dphi * dpsi
        })
        .collect();
    Ok(slices.iter().sum())
}

#[derive(Debug, Clone, Copy)]
pub struct GalerkinGrid {
    pub n_angle: usize,
    pub n_theta: usize,
    pub n_average: usize,
    pub step: f64,
}

impl Default for GalerkinGrid {
    fn default() -> Self {
        GalerkinGrid { n_angle: 32, n_theta: 32, n_average: 64, step: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct GalerkinResult {
    pub eigenvalues: Vec<Complex64>,
    pub rank: usize,
}

/// Dirac eigenvalues on the λ-isotypic equivariant sections, computed from scratch:
/// project `Hom(V_λ, 𝓢)` onto K-equivariant maps by averaging over K, build the
/// functions `x ↦ T π(x)⁻¹ v` for a fixed generic `v`, differentiate them by finite
/// differences and assemble the Gram and Dirac matrices by Euler-angle quadrature.
pub fn galerkin_eigenvalues(
    ctx: &DiracContext,
    irrep: &IrrepData,
    grid: GalerkinGrid,
) -> Result<GalerkinResult, QuadratureError> {
    let geom = &ctx.geom;
    let alg = &geom.algebra;
    require_su2(alg)?;
    if grid.n_angle == 0 || grid.n_theta == 0 || grid.n_average == 0 {
        return Err(QuadratureError::EmptyGrid);
    }
    let (d, s) = (irrep.dim, ctx.spinor_dim());
    let fock = &ctx.fock;

    // K = exp(τ u), u the unit generator of 𝔨, over τ ∈ [0, 4π)
    let zk = geom.k_basis_vector(0);
    let u = &zk / zk.norm();
    let w_u = ctx.k_lifts.iter().map(|(z, _, w)| w * z.dot(&u) / z.norm_squared()).sum::<f64>();
    let dpi_u = irrep.dpi(&u);
    let mut spanning = Vec::with_capacity(d * s);
    let mut averaged: Vec<CMat> = vec![CMat::zeros(s, d); d * s];
    for it in 0..grid.n_average {
        let tau = 4.0 * PI * it as f64 / grid.n_average as f64;
        let rho = fock.lift_unitary(&geom.ad_exp_on_m(&u, tau)).expect("Ad_s is unitary on 𝔪");
        let pi_inv = (&dpi_u * c(-tau)).exp();
        let chi = (I * (w_u * tau)).exp();
        for (m, t) in averaged.iter_mut().enumerate() {
            let mut e = CMat::zeros(s, d);
            e[(m % s, m / s)] = c(1.0);
            *t += &rho * e * &pi_inv * chi;
        }
    }
    for t in averaged {
        spanning.push(t / c(grid.n_average as f64));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let v = CVec::from_fn(d, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));

    let h = grid.step;
    let e3 = alg.basis_vector(2);
    let e2 = alg.basis_vector(1);
    let (dpi3, dpi2) = (irrep.dpi(&e3), irrep.dpi(&e2));
    let fd: Vec<CMat> = ctx
        .frame_alg
        .iter()
        .map(|fa| {
            let g = irrep.dpi(fa);
            let ex = |sh: f64| (&g * c(-sh * h)).exp();
            (ex(-2.0) - ex(2.0) + (ex(1.0) - ex(-1.0)) * c(8.0)) / c(12.0 * h)
        })
        .collect();

    let n = spanning.len();
    let thetas = EulerGrid { n_phi: 1, n_theta: grid.n_theta, n_psi: 1 }.theta_rule();
    let na = grid.n_angle as f64;
    let parts: Vec<(CMat, CMat)> = thetas
        .par_iter()
        .map(|&(theta, wt)| {
            let mut gram = CMat::zeros(n, n);
            let mut bmat = CMat::zeros(n, n);
            let e_theta = (&dpi2 * c(-theta)).exp();
            let mut psi_vals = CMat::zeros(s, n);
            let mut dpsi_vals = CMat::zeros(s, n);
            for ip in 0..grid.n_angle {
                let phi = 4.0 * PI * ip as f64 / na;
                let e_phi = (&dpi3 * c(-phi)).exp();
                for is in 0..grid.n_angle {
                    let psi = 4.0 * PI * is as f64 / na;
                    let e_psi = (&dpi3 * c(-psi)).exp();
                    let ux = &e_psi * (&e_theta * (&e_phi * &v));
                    let dux: Vec<CVec> = fd.iter().map(|m| m * &ux).collect();
                    for (m, t) in spanning.iter().enumerate() {
                        let val = t * &ux;
                        let mut dval = CVec::zeros(s);
                        for (a, du) in dux.iter().enumerate() {
                            dval += &ctx.kappa_f[a] * (t * du + &ctx.sigma_ell[a] * &val);
                        }
                        psi_vals.set_column(m, &val);
                        dpsi_vals.set_column(m, &dval);
                    }
                    gram += psi_vals.adjoint() * &psi_vals;
                    bmat += psi_vals.adjoint() * &dpsi_vals;
                }
            }
            let scale = c(wt / (na * na));
            (gram * scale, bmat * scale)
        })
        .collect();
    let mut gram = CMat::zeros(n, n);
    let mut bmat = CMat::zeros(n, n);
    for (g, b) in parts {
        gram += g;
        bmat += b;
    }

    let gram = (&gram + gram.adjoint()) * c(0.5);
    let (vals, vecs) = herm_eigen(&gram);
    let top = vals.last().copied().unwrap_or(0.0);
    // an unprojected unit T has Gram entry ‖v‖²/d by Schur orthogonality
    let floor = 1e-9 * top.max(v.norm_squared() / d as f64);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > floor).collect();
    let rank = keep.len();
    if rank == 0 {
        return Ok(GalerkinResult { eigenvalues: Vec::new(), rank });
    }
    let w = DMatrix::from_fn(n, rank, |i, k| vecs[(i, keep[k])] / vals[keep[k]].sqrt());
    let reduced = w.adjoint() * bmat * &w;
    let mut eigenvalues = complex_eigenvalues(&reduced).ok_or(QuadratureError::EigenSolver)?;
    eigenvalues.sort_by(cmp_complex);
    Ok(GalerkinResult { eigenvalues, rank })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{full_connection, ConnectionLabel};
    use crate::dirac::{CharacterData, Reduction};
    use crate::irrep::su2_irrep;
    use crate::lie::su;
    use crate::orbit::Orbit;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let total: f64 = w.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // exact up to degree 15
        let m14: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(14)).sum();
        assert!((m14 - 2.0 / 15.0).abs() < 1e-14);
        let (x1, w1) = gauss_legendre(1);
        assert_eq!((x1[0], w1[0]), (0.0, 2.0));
    }

    #[test]
    fn haar_weights_sum_to_one() {
        let t: f64 = EulerGrid::cube(16).theta_rule().iter().map(|p| p.1).sum();
        assert!((t - 1.0).abs() < 1e-13);
    }

    fn s2() -> Orbit {
        let g = su(2).unwrap();
        Orbit::from_z(&g, &g.basis_vector(2)).unwrap()
    }

    #[test]
    fn zero_field_is_exactly_zero() {
        let o = s2();
        let conn = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        let v = divergence_integral(&o.geom, &conn, &o.geom.g_metric, &TestField::zero(), EulerGrid::cube(8)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn divergence_of_fundamental_field_integrates_to_zero() {
        let o = s2();
        let conn = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        let f = TestField::fundamental(0);
        let v = divergence_integral(&o.geom, &conn, &o.geom.g_metric, &f, EulerGrid::cube(16)).unwrap();
        assert!(v.abs() < 1e-10, "{v}");
    }

    #[test]
    fn quadratic_field_divergence_is_pointwise_nonzero() {
        let o = s2();
        let conn = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        let fields = standard_test_fields(7);
        let integrand = DivergenceIntegrand::new(&o.geom, &conn, &o.geom.g_metric, &fields[4].1).unwrap();
        let peak = (0..20).map(|i| integrand.eval(0.3 * i as f64, 0.17 * i as f64, 1.1).abs()).fold(0.0, f64::max);
        assert!(peak > 1e-2);
        // fundamental fields are Killing fields, divergence-free at every point
        let killing = DivergenceIntegrand::new(&o.geom, &conn, &o.geom.g_metric, &fields[0].1).unwrap();
        assert!(killing.eval(0.4, 1.2, 2.2).abs() < 1e-12);
        let v = divergence_integral(&o.geom, &conn, &o.geom.g_metric, &fields[4].1, EulerGrid::cube(16)).unwrap();
        assert!(v.abs() < 1e-10, "{v}");
    }

    #[test]
    fn standard_battery_at_full_grid() {
        let o = s2();
        let conn = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        for (name, f) in standard_test_fields(11) {
            let v = divergence_integral(&o.geom, &conn, &o.geom.g_metric, &f, EulerGrid::default()).unwrap();
            assert!(v.abs() < 1e-6, "{name}: {v}");
        }
    }

    #[test]
    fn galerkin_agrees_up_to_spin_three() {
        let o = s2();
        let conn = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        let cx = DiracContext::new(&o.geom, &o.geom.g_metric, &conn, &CharacterData::trivial(1), 1).unwrap();
        for two_j in 0..=6 {
            let ir = su2_irrep(&o.geom.algebra, two_j).unwrap();
            let block = cx.block(&ir, Reduction::Invariant).unwrap();
            let gal = galerkin_eigenvalues(&cx, &ir, GalerkinGrid::default()).unwrap();
            assert_eq!(gal.rank, block.dim(), "2j = {two_j}");
            for (a, b) in gal.eigenvalues.iter().zip(&block.eigenvalues) {
                assert!((a - b).norm() < 1e-6, "2j = {two_j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn unsupported_algebra() {
        let g = su(3).unwrap();
        let mut z = RVec::zeros(8);
        z[6] = 2.0;
        z[7] = 2.6;
        let o = Orbit::from_z(&g, &z).unwrap();
        let conn = ConnectionMap::zero(o.r(), ConnectionLabel::Canonical);
        assert!(matches!(
            divergence_integral(&o.geom, &conn, &o.geom.g_metric, &TestField::zero(), EulerGrid::cube(4)),
            Err(QuadratureError::UnsupportedAlgebra(_))
        ));
    }

    #[test]
    fn galerkin_matches_block_for_spin_one() {
        let o = s2();
        let conn = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        let cx = DiracContext::new(&o.geom, &o.geom.g_metric, &conn, &CharacterData::trivial(1), 1).unwrap();
        let ir = su2_irrep(&o.geom.algebra, 2).unwrap();
        let block = cx.block(&ir, Reduction::Invariant).unwrap();
        let gal = galerkin_eigenvalues(&cx, &ir, GalerkinGrid::default()).unwrap();
        assert_eq!(gal.rank, block.dim());
        for (a, b) in gal.eigenvalues.iter().zip(&block.eigenvalues) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn galerkin_half_integer_is_empty() {
        let o = s2();
        let conn = full_connection(&ConnectionLabel::Canonical, &o.geom, &o.weights).unwrap();
        let cx = DiracContext::new(&o.geom, &o.geom.g_metric, &conn, &CharacterData::trivial(1), 1).unwrap();
        let ir = su2_irrep(&o.geom.algebra, 3).unwrap();
        let gal = galerkin_eigenvalues(&cx, &ir, GalerkinGrid { n_angle: 16, n_theta: 16, ..Default::default() }).unwrap();
        assert_eq!(gal.rank, 0);
    }
}
