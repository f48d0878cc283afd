//! Coadjoint orbit data: Z⋄, the split 𝔤 = 𝔨 ⊕ 𝔪, the Kähler triple (ω, J, g)
//! and the weight decomposition of 𝔪.
//!
//! Coordinates on 𝔪 are taken against a kil-orthonormal basis, so kil on 𝔪 is
//! the identity Gram matrix. That basis is ordered by weight (ascending) and
//! inside each weight space is obtained by kil-Gram–Schmidt of the projected
//! standard basis vectors, which makes it reproducible.

use thiserror::Error;

use crate::lie::{LieAlgebra, LieError, Subspace};
use crate::linalg::{cluster_sorted, gram_schmidt, max_abs, sym_eigen, RMat, RVec};

#[derive(Debug, Error)]
pub enum OrbitError {
    #[error("the functional μ is zero")]
    ZeroFunctional,
    #[error("Γ is singular on 𝔪 (smallest singular value {0:e})")]
    SingularGamma(f64),
    #[error("weight clustering is ambiguous near eigenvalue index {0}")]
    ClusterAmbiguity(usize),
    #[error(transparent)]
    Lie(#[from] LieError),
}

pub const KERNEL_TOL: f64 = 1e-9;
pub const CLUSTER_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OrbitDatum {
    pub mu: RVec,
    pub z: RVec,
}

pub fn solve_z(alg: &LieAlgebra, mu: &RVec) -> Result<OrbitDatum, OrbitError> {
    if mu.len() != alg.dim() {
        return Err(LieError::DimensionMismatch { expected: alg.dim(), got: mu.len() }.into());
    }
    if mu.amax() == 0.0 {
        return Err(OrbitError::ZeroFunctional);
    }
    let chol = alg.kil().clone().cholesky().expect("kil validated as positive-definite");
    let z = chol.solve(mu);
    Ok(OrbitDatum { mu: mu.clone(), z })
}

pub fn datum_from_z(alg: &LieAlgebra, z: &RVec) -> Result<OrbitDatum, OrbitError> {
    if z.len() != alg.dim() {
        return Err(LieError::DimensionMismatch { expected: alg.dim(), got: z.len() }.into());
    }
    if z.amax() == 0.0 {
        return Err(OrbitError::ZeroFunctional);
    }
    Ok(OrbitDatum { mu: alg.kil() * z, z: z.clone() })
}

/// Number of singular values at or below `KERNEL_TOL` times the largest.
pub fn kernel_dim(a: &RMat) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s <= KERNEL_TOL * top).count()
}

#[derive(Debug, Clone)]
pub struct Split {
    pub k_sub: Subspace,
    pub m_sub: Subspace,
}

/// Columns of `candidates` kil-orthonormalised inside the span of `proj`.
fn canonical_basis(alg: &LieAlgebra, proj: &RMat, dim: usize) -> RMat {
    let n = alg.dim();
    let candidates = proj * RMat::identity(n, n);
    gram_schmidt(&candidates, alg.kil(), 1e-6, dim)
}

pub fn stabilizer_split(alg: &LieAlgebra, datum: &OrbitDatum) -> Split {
    let f = alg.frame();
    let f_inv = f.transpose() * alg.kil();
    let a = &f_inv * alg.ad(&datum.z) * f;
    let (vals, vecs) = sym_eigen(&(a.transpose() * &a));
    let sing: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    // rank from an SVD of A itself: squaring would push the noise floor to √ε
    let n_ker = kernel_dim(&a);

    let block_projector = |range: std::ops::Range<usize>| {
        let v = vecs.columns(range.start, range.len());
        f * (v * v.transpose()) * &f_inv
    };
    let k_basis = canonical_basis(alg, &block_projector(0..n_ker), n_ker);

    // group the nonzero singular values (= weights) so 𝔪 can be laid out weight by weight
    let nonzero = &sing[n_ker..];
    let clusters = cluster_sorted(nonzero, CLUSTER_TOL).unwrap_or_else(|_| std::iter::once(0..nonzero.len()).collect());
    let mut columns = Vec::new();
    for cl in clusters {
        let range = (cl.start + n_ker)..(cl.end + n_ker);
        let len = range.len();
        let b = canonical_basis(alg, &block_projector(range), len);
        columns.extend(b.column_iter().map(|c| c.into_owned()));
    }
    let m_basis = if columns.is_empty() {
        RMat::zeros(alg.dim(), 0)
    } else {
        RMat::from_columns(&columns)
    };
    Split { k_sub: Subspace::new(k_basis, alg.kil()), m_sub: Subspace::new(m_basis, alg.kil()) }
}

#[derive(Debug, Clone)]
pub struct WeightData {
    pub weights: Vec<f64>,
    pub projectors: Vec<RMat>,
    pub subspace_dims: Vec<usize>,
    /// Coordinate range of each weight space inside the 𝔪 basis.
    pub ranges: Vec<std::ops::Range<usize>>,
}

impl WeightData {
    /// Index of the weight space containing basis direction `a`.
    pub fn block_of(&self, a: usize) -> usize {
        self.ranges.iter().position(|r| r.contains(&a)).expect("index inside 𝔪")
    }
}

#[derive(Debug, Clone)]
pub struct OrbitGeometry {
    pub algebra: LieAlgebra,
    pub datum: OrbitDatum,
    pub k_sub: Subspace,
    pub m_sub: Subspace,
    pub gamma: RMat,
    pub gamma_abs: RMat,
    pub j: RMat,
    pub g_metric: RMat,
    pub omega: RMat,
}

pub fn kahler_structure(
    alg: &LieAlgebra,
    datum: &OrbitDatum,
    split: &Split,
) -> Result<OrbitGeometry, OrbitError> {
    let b = &split.m_sub.basis;
    let gamma = b.transpose() * alg.kil() * alg.ad(&datum.z) * b;
    if b.ncols() == 0 || kernel_dim(&gamma) > 0 {
        let smin = gamma.singular_values().min();
        return Err(OrbitError::SingularGamma(smin));
    }
    let (vals, vecs) = sym_eigen(&(gamma.transpose() * &gamma));
    let sing: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let s = RVec::from_vec(sing.clone());
    let gamma_abs = &vecs * RMat::from_diagonal(&s) * vecs.transpose();
    let inv = &vecs * RMat::from_diagonal(&s.map(|x| 1.0 / x)) * vecs.transpose();
    let j = &inv * &gamma;
    Ok(OrbitGeometry {
        algebra: alg.clone(),
        datum: datum.clone(),
        k_sub: split.k_sub.clone(),
        m_sub: split.m_sub.clone(),
        omega: gamma.transpose(),
        g_metric: gamma_abs.clone(),
        gamma,
        gamma_abs,
        j,
    })
}

pub fn weight_decomposition(geom: &OrbitGeometry) -> Result<WeightData, OrbitError> {
    let (vals, vecs) = sym_eigen(&geom.gamma_abs);
    let clusters = cluster_sorted(&vals, CLUSTER_TOL).map_err(OrbitError::ClusterAmbiguity)?;
    let mut weights = Vec::new();
    let mut projectors = Vec::new();
    let mut dims = Vec::new();
    let mut ranges = Vec::new();
    let r = geom.r();
    for cl in clusters {
        let v = vecs.columns(cl.start, cl.len());
        let p = v * v.transpose();
        weights.push(vals[cl.clone()].iter().sum::<f64>() / cl.len() as f64);
        dims.push(cl.len());
        // the 𝔪 basis is weight-ordered, so P_α is a coordinate block
        let diag = p.diagonal();
        let first = (0..r).find(|&i| diag[i] > 0.5).unwrap_or(0);
        ranges.push(first..first + cl.len());
        projectors.push(p);
    }
    Ok(WeightData { weights, projectors, subspace_dims: dims, ranges })
}

/// The whole construction from a datum.
#[derive(Debug, Clone)]
pub struct Orbit {
    pub geom: OrbitGeometry,
    pub weights: WeightData,
}

impl Orbit {
    pub fn new(alg: &LieAlgebra, datum: &OrbitDatum) -> Result<Self, OrbitError> {
        let split = stabilizer_split(alg, datum);
        let geom = kahler_structure(alg, datum, &split)?;
        let weights = weight_decomposition(&geom)?;
        Ok(Orbit { geom, weights })
    }

    pub fn from_z(alg: &LieAlgebra, z: &RVec) -> Result<Self, OrbitError> {
        Orbit::new(alg, &datum_from_z(alg, z)?)
    }

    pub fn r(&self) -> usize {
        self.geom.r()
    }
}

impl OrbitGeometry {
    pub fn r(&self) -> usize {
        self.m_sub.dim()
    }

    pub fn dim_k(&self) -> usize {
        self.k_sub.dim()
    }

    /// 𝔪-coordinates to algebra coordinates.
    pub fn embed(&self, x: &RVec) -> RVec {
        &self.m_sub.basis * x
    }

    /// Algebra vector to 𝔪-coordinates of its projection `P v`.
    pub fn project(&self, v: &RVec) -> RVec {
        self.m_sub.coords(self.algebra.kil(), v)
    }

    /// 𝔨-coordinates (kil-orthonormal) of the 𝔨-component of `v`.
    pub fn project_k(&self, v: &RVec) -> RVec {
        self.k_sub.coords(self.algebra.kil(), v)
    }

    /// `P[X, Y]` for `X, Y` in 𝔪-coordinates.
    pub fn pbracket(&self, x: &RVec, y: &RVec) -> RVec {
        self.project(&self.algebra.br(&self.embed(x), &self.embed(y)))
    }

    /// Full bracket in algebra coordinates of two 𝔪 vectors.
    pub fn bracket_m(&self, x: &RVec, y: &RVec) -> RVec {
        self.algebra.br(&self.embed(x), &self.embed(y))
    }

    /// Matrix of `ad_Z` restricted to 𝔪, for `Z` in the algebra.
    pub fn ad_on_m(&self, z: &RVec) -> RMat {
        let b = &self.m_sub.basis;
        b.transpose() * self.algebra.kil() * self.algebra.ad(z) * b
    }

    /// Restriction of `ad_exp(Z, t)` to 𝔪, for `Z` in 𝔨.
    pub fn ad_exp_on_m(&self, z: &RVec, t: f64) -> RMat {
        let b = &self.m_sub.basis;
        let e = self.algebra.ad_exp(z, t).expect("dimension checked by caller");
        b.transpose() * self.algebra.kil() * e * b
    }

    /// Algebra vector of the i-th kil-orthonormal 𝔨 basis element.
    pub fn k_basis_vector(&self, i: usize) -> RVec {
        self.k_sub.basis.column(i).into_owned()
    }

    /// Maximum defect of `ω(X,Y) = μ([X,Y])` over basis pairs.
    pub fn kks_defect(&self) -> f64 {
        let r = self.r();
        let mut worst = 0.0_f64;
        for a in 0..r {
            for b in 0..r {
                let ea = unit(r, a);
                let eb = unit(r, b);
                let mu_br = self.datum.mu.dot(&self.bracket_m(&ea, &eb));
                worst = worst.max((self.omega[(a, b)] - mu_br).abs());
            }
        }
        worst
    }

    /// Largest violation of `[𝔨, 𝔪] ⊆ 𝔪`.
    pub fn k_preserves_m_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim_k() {
            let zk = self.k_basis_vector(i);
            for a in 0..self.r() {
                let v = self.algebra.br(&zk, &self.m_sub.basis.column(a).into_owned());
                worst = worst.max(self.project_k(&v).amax());
            }
        }
        worst
    }
}

pub fn unit(n: usize, i: usize) -> RVec {
    let mut v = RVec::zeros(n);
    v[i] = 1.0;
    v
}

/// Residual of `kil · z = μ`.
pub fn datum_residual(alg: &LieAlgebra, d: &OrbitDatum) -> f64 {
    (alg.kil() * &d.z - &d.mu).amax()
}

/// Defects of the Kähler invariants that do not involve K-invariance.
#[derive(Debug, Clone, Copy)]
pub struct KahlerDefects {
    pub j_squared: f64,
    pub polar: f64,
    pub j_orthogonal: f64,
    pub j_commutes_abs: f64,
    pub weight_reconstruction: f64,
    pub weight_metric: f64,
    pub weight_ad: f64,
    pub projector_algebra: f64,
}

pub fn kahler_defects(geom: &OrbitGeometry, w: &WeightData) -> KahlerDefects {
    let r = geom.r();
    let id = RMat::identity(r, r);
    let j = &geom.j;
    let mut recon = geom.gamma_abs.clone();
    let mut proj_sum = RMat::zeros(r, r);
    let mut weight_metric = 0.0_f64;
    let mut weight_ad = 0.0_f64;
    let mut projector_algebra = 0.0_f64;
    for (i, (alpha, p)) in w.weights.iter().zip(&w.projectors).enumerate() {
        recon -= p * *alpha;
        proj_sum += p;
        weight_metric = weight_metric.max(max_abs(&(p * &geom.g_metric * p - p * *alpha)));
        weight_ad = weight_ad.max(max_abs(&((&geom.gamma - j * *alpha) * p)));
        projector_algebra = projector_algebra
            .max(max_abs(&(p * p - p)))
            .max(max_abs(&(p * j - j * p)));
        for q in &w.projectors[i + 1..] {
            projector_algebra = projector_algebra.max(max_abs(&(p * q)));
        }
    }
    projector_algebra = projector_algebra.max(max_abs(&(proj_sum - &id)));
    KahlerDefects {
        j_squared: max_abs(&(j * j + &id)),
        polar: max_abs(&(&geom.gamma_abs * j - &geom.gamma)),
        j_orthogonal: max_abs(&(j.transpose() * j - &id)),
        j_commutes_abs: max_abs(&(j * &geom.gamma_abs - &geom.gamma_abs * j)),
        weight_reconstruction: max_abs(&recon),
        weight_metric,
        weight_ad,
        projector_algebra,
    }
}

/// K-invariance defect of (ω, J, g) under `exp(t ad_Z)|𝔪` for `Z` in 𝔨.
pub fn k_invariance_defect(geom: &OrbitGeometry, z: &RVec, t: f64) -> f64 {
    let r_m = geom.ad_exp_on_m(z, t);
    let om = max_abs(&(r_m.transpose() * &geom.omega * &r_m - &geom.omega));
    let jj = max_abs(&(&r_m * &geom.j - &geom.j * &r_m));
    let gg = max_abs(&(r_m.transpose() * &geom.g_metric * &r_m - &geom.g_metric));
    om.max(jj).max(gg)
}
