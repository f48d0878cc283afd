//! G-invariant connections on G/K encoded by their deviation ℓ from the
//! canonical connection at the identity coset, plus the algebraic checks
//! (torsion, metric compatibility, J-commutation, trace criterion, frame sums).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{max_abs, random_orthogonal, spd_sqrt_and_inv_sqrt, sym_eigen, RMat, RVec};
use crate::orbit::{unit, OrbitGeometry, WeightData};

#[derive(Debug, Error)]
pub enum ConnectionError {
    #[error("S is not positive-definite")]
    SingularS,
    #[error("g0 is not positive-definite")]
    IndefiniteMetric,
    #[error("connection tensor has r = {got}, orbit has r = {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tensor index {index} out of range for r = {r}")]
    IndexOutOfRange { index: usize, r: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConnectionLabel {
    Canonical,
    NaturalTorsionFree,
    LeviCivita(RMat),
    CoadjointLeviCivita,
    Custom(String),
}

impl fmt::Display for ConnectionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectionLabel::Canonical => write!(f, "canonical"),
            ConnectionLabel::NaturalTorsionFree => write!(f, "natural-torsion-free"),
            ConnectionLabel::LeviCivita(_) => write!(f, "levi-civita"),
            ConnectionLabel::CoadjointLeviCivita => write!(f, "coadjoint-levi-civita"),
            ConnectionLabel::Custom(name) => write!(f, "custom:{name}"),
        }
    }
}

/// ℓ stored as matrices `L_a = ℓ(e_a, ·)`, so `ℓ(e_a, e_b)_c = L_a[(c, b)]`.
#[derive(Debug, Clone)]
pub struct ConnectionMap {
    pub r: usize,
    pub l: Vec<RMat>,
    pub label: ConnectionLabel,
}

/// On-disk form of a custom ℓ: entries `[a, b, c, value]` meaning `ℓ(e_a, e_b)_c = value`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EllFile {
    pub r: usize,
    pub ell: Vec<(usize, usize, usize, f64)>,
}

impl ConnectionMap {
    pub fn zero(r: usize, label: ConnectionLabel) -> Self {
        ConnectionMap { r, l: vec![RMat::zeros(r, r); r], label }
    }

    /// Tabulates a bilinear map given on basis pairs.
    pub fn from_fn(r: usize, label: ConnectionLabel, f: impl Fn(&RVec, &RVec) -> RVec) -> Self {
        let mut l = vec![RMat::zeros(r, r); r];
        for (a, la) in l.iter_mut().enumerate() {
            let ea = unit(r, a);
            for b in 0..r {
                la.set_column(b, &f(&ea, &unit(r, b)));
            }
        }
        ConnectionMap { r, l, label }
    }

    pub fn from_file(file: &EllFile, name: &str) -> Result<Self, ConnectionError> {
        let r = file.r;
        let mut m = ConnectionMap::zero(r, ConnectionLabel::Custom(name.to_string()));
        for &(a, b, c, v) in &file.ell {
            for index in [a, b, c] {
                if index >= r {
                    return Err(ConnectionError::IndexOutOfRange { index, r });
                }
            }
            m.l[a][(c, b)] = v;
        }
        Ok(m)
    }

    pub fn to_file(&self) -> EllFile {
        let mut ell = Vec::new();
        for (a, la) in self.l.iter().enumerate() {
            for b in 0..self.r {
                for c in 0..self.r {
                    if la[(c, b)] != 0.0 {
                        ell.push((a, b, c, la[(c, b)]));
                    }
                }
            }
        }
        EllFile { r: self.r, ell }
    }

    pub fn eval(&self, x: &RVec, y: &RVec) -> RVec {
        self.left(x) * y
    }

    /// Matrix of `Y ↦ ℓ(X, Y)`.
    pub fn left(&self, x: &RVec) -> RMat {
        let mut m = RMat::zeros(self.r, self.r);
        for (a, la) in self.l.iter().enumerate() {
            if x[a] != 0.0 {
                m += la * x[a];
            }
        }
        m
    }

    pub fn add(&self, other: &ConnectionMap, label: ConnectionLabel) -> ConnectionMap {
        let l = self.l.iter().zip(&other.l).map(|(a, b)| a + b).collect();
        ConnectionMap { r: self.r, l, label }
    }

    pub fn max_diff(&self, other: &ConnectionMap) -> f64 {
        self.l.iter().zip(&other.l).map(|(a, b)| max_abs(&(a - b))).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.l.iter().map(max_abs).fold(0.0, f64::max)
    }
}

/// `½ P[X, Y]`.
pub fn lct(geom: &OrbitGeometry, x: &RVec, y: &RVec) -> RVec {
    geom.pbracket(x, y) * 0.5
}

/// `½ S⁻¹ P([X, SY] + [Y, SX])`.
pub fn ls_general(geom: &OrbitGeometry, s: &RMat, x: &RVec, y: &RVec) -> Result<RVec, ConnectionError> {
    let (vals, _) = sym_eigen(s);
    if vals.first().is_none_or(|&v| v <= 0.0) {
        return Err(ConnectionError::SingularS);
    }
    let s_inv = s.clone().try_inverse().ok_or(ConnectionError::SingularS)?;
    let rhs = geom.pbracket(x, &(s * y)) + geom.pbracket(y, &(s * x));
    Ok(s_inv * rhs * 0.5)
}

/// Solves `2 g0(Φ(X,Y), Z) = g0(X, P[Z,Y]) + g0(P[Z,X], Y)` over a g0-orthonormal basis of Z.
pub fn koszul_solve(geom: &OrbitGeometry, g0: &RMat, x: &RVec, y: &RVec) -> Result<RVec, ConnectionError> {
    let frame = g0_orthonormal_frame(g0)?;
    let mut phi = RVec::zeros(geom.r());
    for fz in frame.column_iter() {
        let z = fz.into_owned();
        let rhs = x.dot(&(g0 * geom.pbracket(&z, y))) + geom.pbracket(&z, x).dot(&(g0 * y));
        phi += &z * (0.5 * rhs);
    }
    Ok(phi)
}

fn sign(v: f64, scale: f64) -> f64 {
    if v.abs() <= 1e-12 * scale {
        0.0
    } else {
        v.signum()
    }
}

/// Weight formula for the Kähler Levi–Civita correction, extended bilinearly
/// over the weight-space decomposition.
pub fn ldiamond(geom: &OrbitGeometry, weights: &WeightData, x: &RVec, y: &RVec) -> RVec {
    let j = &geom.j;
    let scale = weights.weights.iter().fold(0.0_f64, |a, w| a.max(*w));
    let mut out = RVec::zeros(geom.r());
    for (pa, &alpha) in weights.projectors.iter().zip(&weights.weights) {
        let xa = pa * x;
        if xa.amax() == 0.0 {
            continue;
        }
        for (pb, &beta) in weights.projectors.iter().zip(&weights.weights) {
            let yb = pb * y;
            if yb.amax() == 0.0 {
                continue;
            }
            let c1 = (beta - alpha) / (alpha + beta);
            let c2 = sign(beta - alpha, scale);
            if c1 == 0.0 && c2 == 0.0 {
                continue;
            }
            let b0 = geom.pbracket(&xa, &yb);
            let bj = geom.pbracket(&(j * &xa), &(j * &yb));
            out += ((&b0 - &bj) * c1 + (b0 + bj) * c2) * 0.25;
        }
    }
    out
}

/// Assembles ℓ for a built-in label. Custom labels are loaded with [`ConnectionMap::from_file`].
pub fn full_connection(
    label: &ConnectionLabel,
    geom: &OrbitGeometry,
    weights: &WeightData,
) -> Result<ConnectionMap, ConnectionError> {
    let r = geom.r();
    let lct_map = || ConnectionMap::from_fn(r, ConnectionLabel::NaturalTorsionFree, |x, y| lct(geom, x, y));
    Ok(match label {
        ConnectionLabel::Canonical => ConnectionMap::zero(r, label.clone()),
        ConnectionLabel::NaturalTorsionFree => lct_map(),
        ConnectionLabel::LeviCivita(s) => {
            if s.nrows() != r || s.ncols() != r {
                return Err(ConnectionError::DimensionMismatch { expected: r, got: s.nrows() });
            }
            ls_general(geom, s, &unit(r, 0), &unit(r, 0))?;
            let ls = ConnectionMap::from_fn(r, label.clone(), |x, y| {
                ls_general(geom, s, x, y).expect("S checked above")
            });
            lct_map().add(&ls, label.clone())
        }
        ConnectionLabel::CoadjointLeviCivita => {
            let ld = ConnectionMap::from_fn(r, label.clone(), |x, y| ldiamond(geom, weights, x, y));
            lct_map().add(&ld, label.clone())
        }
        ConnectionLabel::Custom(_) => ConnectionMap::zero(r, label.clone()),
    })
}

/// Levi–Civita map of an arbitrary invariant metric `g0` via the Koszul solve.
pub fn koszul_connection(geom: &OrbitGeometry, g0: &RMat) -> Result<ConnectionMap, ConnectionError> {
    let r = geom.r();
    g0_orthonormal_frame(g0)?;
    let phi = ConnectionMap::from_fn(r, ConnectionLabel::Custom("koszul".into()), |x, y| {
        koszul_solve(geom, g0, x, y).expect("g0 checked above")
    });
    let lct_map = ConnectionMap::from_fn(r, ConnectionLabel::NaturalTorsionFree, |x, y| lct(geom, x, y));
    Ok(lct_map.add(&phi, ConnectionLabel::Custom("koszul".into())))
}

#[derive(Debug, Clone)]
pub struct TorsionTensor {
    pub t: Vec<RMat>,
}

impl TorsionTensor {
    pub fn eval(&self, x: &RVec, y: &RVec) -> RVec {
        let r = x.len();
        let mut out = RVec::zeros(r);
        for (a, ta) in self.t.iter().enumerate() {
            if x[a] != 0.0 {
                out += ta * y * x[a];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.t.iter().map(max_abs).fold(0.0, f64::max)
    }
}

/// `t(X,Y) = -P[X,Y] + ℓ(X,Y) - ℓ(Y,X)`.
pub fn torsion(geom: &OrbitGeometry, conn: &ConnectionMap) -> TorsionTensor {
    let r = conn.r;
    let mut t = vec![RMat::zeros(r, r); r];
    for (a, ta) in t.iter_mut().enumerate() {
        let ea = unit(r, a);
        for b in 0..r {
            let eb = unit(r, b);
            let v = -geom.pbracket(&ea, &eb) + conn.eval(&ea, &eb) - conn.eval(&eb, &ea);
            ta.set_column(b, &v);
        }
    }
    TorsionTensor { t }
}

/// Columns form a g0-orthonormal basis: `g0^{-1/2}`.
pub fn g0_orthonormal_frame(g0: &RMat) -> Result<RMat, ConnectionError> {
    spd_sqrt_and_inv_sqrt(g0).map(|(_, inv)| inv).ok_or(ConnectionError::IndefiniteMetric)
}

/// A random g0-orthonormal basis.
pub fn random_g0_frame<R: rand::Rng>(g0: &RMat, rng: &mut R) -> Result<RMat, ConnectionError> {
    Ok(g0_orthonormal_frame(g0)? * random_orthogonal(g0.nrows(), rng))
}

/// Component `u` is `Σ_a g0(t(e_u, f_a), f_a)` over the columns `f_a` of `frame`.
pub fn trace_criterion_with_frame(
    geom: &OrbitGeometry,
    conn: &ConnectionMap,
    g0: &RMat,
    frame: &RMat,
) -> RVec {
    let t = torsion(geom, conn);
    let r = conn.r;
    RVec::from_fn(r, |u, _| {
        let eu = unit(r, u);
        frame
            .column_iter()
            .map(|f| {
                let f = f.into_owned();
                t.eval(&eu, &f).dot(&(g0 * &f))
            })
            .sum()
    })
}

pub fn trace_criterion(geom: &OrbitGeometry, conn: &ConnectionMap, g0: &RMat) -> Result<RVec, ConnectionError> {
    Ok(trace_criterion_with_frame(geom, conn, g0, &g0_orthonormal_frame(g0)?))
}

#[derive(Debug, Clone, Copy)]
pub struct FrameSum {
    /// `‖Σ_a ℓ(f_a, f_a)‖_{g0}`.
    pub norm: f64,
    /// Disagreement with the fundamental-field form.
    pub agreement: f64,
}

/// Frame sum `Σ_a ℓ(f_a, f_a)` and its rewrite through fundamental fields
/// `X̂_j(e) = -P X_j` over a kil-orthonormal basis of the whole algebra,
/// `Σ_j ℓ(X̂_j(e), S⁻¹ X̂_j(e))` where `g0 = kil(S·, ·)` on 𝔪.
pub fn frame_sum_check(geom: &OrbitGeometry, conn: &ConnectionMap, g0: &RMat) -> Result<FrameSum, ConnectionError> {
    let v = frame_sum_vector(conn, g0)?;
    let s_inv = g0.clone().try_inverse().ok_or(ConnectionError::IndefiniteMetric)?;
    let alg = &geom.algebra;
    let mut w = RVec::zeros(conn.r);
    for col in alg.frame().column_iter() {
        let xhat = -geom.project(&col.into_owned());
        w += conn.eval(&xhat, &(&s_inv * &xhat));
    }
    Ok(FrameSum { norm: v.dot(&(g0 * &v)).max(0.0).sqrt(), agreement: (v - w).amax() })
}

pub fn frame_sum_vector(conn: &ConnectionMap, g0: &RMat) -> Result<RVec, ConnectionError> {
    let frame = g0_orthonormal_frame(g0)?;
    let mut v = RVec::zeros(conn.r);
    for f in frame.column_iter() {
        let f = f.into_owned();
        v += conn.eval(&f, &f);
    }
    Ok(v)
}

/// Max over `X = e_a` of the g0-skewness defect of `Y ↦ ℓ(X, Y)`.
pub fn metric_compat_defect(conn: &ConnectionMap, g0: &RMat) -> f64 {
    conn.l.iter().map(|la| max_abs(&(g0 * la + la.transpose() * g0))).fold(0.0, f64::max)
}

/// Max over basis pairs of `‖J ℓ(X,Y) - ℓ(X, JY)‖`.
pub fn j_commutation_check(geom: &OrbitGeometry, conn: &ConnectionMap) -> f64 {
    conn.l.iter().map(|la| max_abs(&(&geom.j * la - la * &geom.j))).fold(0.0, f64::max)
}

/// Defect of `ℓ(AX, Y) + ℓ(X, AY) = A ℓ(X, Y)` for `A = ad_Z|𝔪`, `Z` over the 𝔨 basis.
pub fn k_equivariance_defect(geom: &OrbitGeometry, conn: &ConnectionMap) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..geom.dim_k() {
        let a = geom.ad_on_m(&geom.k_basis_vector(i));
        for (idx, la) in conn.l.iter().enumerate() {
            let mut d = &a * la - la * &a;
            for (b, lb) in conn.l.iter().enumerate() {
                d -= lb * a[(b, idx)];
            }
            worst = worst.max(max_abs(&d));
        }
    }
    worst
}

/// The five bracket-decomposition identities for `X ∈ 𝔪_α`, `Y ∈ 𝔪_β`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BracketReport {
    /// `[X,Y] - [JX,JY] ∈ 𝔪_{α+β}`.
    pub minus_membership: f64,
    /// `[X,Y] + [JX,JY] ∈ 𝔨` (α = β) or `𝔪_{|α-β|}`.
    pub plus_membership: f64,
    /// `[X,Y] ∈ 𝔨 ⊕ 𝔪_{α+β} ⊕ 𝔪_{|α-β|}`.
    pub bracket_membership: f64,
    /// `J P([X,Y] - [JX,JY]) = P([JX,Y] + [X,JY])`.
    pub minus_intertwining: f64,
    /// `J P([X,Y] + [JX,JY]) = sign(α-β) P([JX,Y] - [X,JY])`, i.e. zero when α = β.
    pub plus_intertwining: f64,
}

impl BracketReport {
    pub fn max(&self) -> f64 {
        [
            self.minus_membership,
            self.plus_membership,
            self.bracket_membership,
            self.minus_intertwining,
            self.plus_intertwining,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Projector onto the weight space with weight `w`, or zero when `w` is not a weight.
fn weight_projector(weights: &WeightData, w: f64, r: usize) -> RMat {
    let scale = weights.weights.iter().fold(1.0_f64, |a, v| a.max(*v));
    weights
        .weights
        .iter()
        .zip(&weights.projectors)
        .find(|(v, _)| (*v - w).abs() <= 1e-8 * scale)
        .map(|(_, p)| p.clone())
        .unwrap_or_else(|| RMat::zeros(r, r))
}

pub fn bracket_decomposition_check(
    geom: &OrbitGeometry,
    weights: &WeightData,
    ia: usize,
    ib: usize,
    x: &RVec,
    y: &RVec,
) -> BracketReport {
    let r = geom.r();
    let alg = &geom.algebra;
    let j = &geom.j;
    let (alpha, beta) = (weights.weights[ia], weights.weights[ib]);
    let x = &weights.projectors[ia] * x;
    let y = &weights.projectors[ib] * y;
    let (jx, jy) = (j * &x, j * &y);
    let b = geom.bracket_m(&x, &y);
    let bj = geom.bracket_m(&jx, &jy);
    let minus = &b - &bj;
    let plus = &b + &bj;
    let scale = weights.weights.iter().fold(1.0_f64, |a, v| a.max(*v));
    let equal = (alpha - beta).abs() <= 1e-8 * scale;

    let p_sum = weight_projector(weights, alpha + beta, r);
    let p_diff = if equal { RMat::zeros(r, r) } else { weight_projector(weights, (alpha - beta).abs(), r) };
    let id = RMat::identity(r, r);

    // algebra vector -> (𝔨 part norm, 𝔪 coordinates)
    let split = |v: &RVec| {
        let m = geom.project(v);
        let k = v - geom.embed(&m);
        (alg.killing(&k, &k).max(0.0).sqrt(), m)
    };
    let (minus_k, minus_m) = split(&minus);
    let (plus_k, plus_m) = split(&plus);
    let (b_k, b_m) = split(&b);

    let minus_membership = minus_k.max(((&id - &p_sum) * &minus_m).amax());
    let plus_membership = if equal {
        plus_m.amax()
    } else {
        plus_k.max(((&id - &p_diff) * &plus_m).amax())
    };
    let mut bracket_membership = ((&id - &p_sum - &p_diff) * &b_m).amax();
    if !equal {
        bracket_membership = bracket_membership.max(b_k);
    }

    let cross_plus = geom.pbracket(&jx, &y) + geom.pbracket(&x, &jy);
    let cross_minus = geom.pbracket(&jx, &y) - geom.pbracket(&x, &jy);
    let minus_intertwining = (j * &minus_m - cross_plus).amax();
    let plus_intertwining = if equal {
        (j * &plus_m).amax()
    } else {
        (j * &plus_m - cross_minus * (alpha - beta).signum()).amax()
    };
    BracketReport { minus_membership, plus_membership, bracket_membership, minus_intertwining, plus_intertwining }
}

/// A metric-compatible, J-commuting but non-K-equivariant ℓ with nonzero trace
/// criterion: `ℓ(X, Y) = g0(X, w) J Y`.
pub fn adversarial(geom: &OrbitGeometry, g0: &RMat, w: &RVec) -> ConnectionMap {
    let gw = g0 * w;
    let l = (0..geom.r()).map(|a| &geom.j * gw[a]).collect();
    ConnectionMap { r: geom.r(), l, label: ConnectionLabel::Custom("adversarial".into()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::su;
    use crate::orbit::Orbit;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn su2(scale: f64) -> Orbit {
        let g = su(2).unwrap();
        Orbit::from_z(&g, &(g.basis_vector(2) * scale)).unwrap()
    }

    pub(crate) fn su3_flag() -> Orbit {
        let g = su(3).unwrap();
        // i·diag(1, 0.3, -1.3) in the halved basis
        let mut z = RVec::zeros(8);
        z[6] = 2.0;
        z[7] = 2.6;
        Orbit::from_z(&g, &z).unwrap()
    }

    #[test]
    fn su2_lct_vanishes() {
        let o = su2(1.0);
        let v = lct(&o.geom, &unit(2, 0), &unit(2, 1));
        assert!(v.amax() < 1e-15);
        let t = torsion(&o.geom, &ConnectionMap::zero(2, ConnectionLabel::Canonical));
        assert!(t.max_abs() < 1e-15);
    }

    #[test]
    fn scalar_s_gives_zero() {
        let o = su3_flag();
        let s = RMat::identity(6, 6) * 2.5;
        for a in 0..6 {
            for b in 0..6 {
                assert!(ls_general(&o.geom, &s, &unit(6, a), &unit(6, b)).unwrap().amax() < 1e-14);
            }
        }
        assert!(matches!(
            ls_general(&o.geom, &(-s), &unit(6, 0), &unit(6, 1)),
            Err(ConnectionError::SingularS)
        ));
    }

    #[test]
    fn koszul_with_killing_metric_is_zero() {
        let o = su3_flag();
        let id = RMat::identity(6, 6);
        for a in 0..6 {
            for b in 0..6 {
                assert!(koszul_solve(&o.geom, &id, &unit(6, a), &unit(6, b)).unwrap().amax() < 1e-14);
            }
        }
        let o2 = su2(3.0);
        let phi = koszul_solve(&o2.geom, &o2.geom.g_metric, &unit(2, 0), &unit(2, 1)).unwrap();
        assert!(phi.amax() < 1e-14);
    }

    #[test]
    fn three_routes_agree_on_flag() {
        let o = su3_flag();
        let lc = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        let ls = full_connection(&ConnectionLabel::LeviCivita(o.geom.gamma_abs.clone()), &o.geom, &o.weights)
            .unwrap();
        let kz = koszul_connection(&o.geom, &o.geom.g_metric).unwrap();
        assert!(lc.max_diff(&ls) < 1e-10);
        assert!(lc.max_diff(&kz) < 1e-10);
        let lct_map = full_connection(&ConnectionLabel::NaturalTorsionFree, &o.geom, &o.weights).unwrap();
        // not a symmetric space: the weight correction is present
        assert!(lc.max_diff(&lct_map) > 1e-3);
        assert!(torsion(&o.geom, &lc).max_abs() < 1e-12);
        assert!(metric_compat_defect(&lc, &o.geom.g_metric) < 1e-12);
        assert!(j_commutation_check(&o.geom, &lc) < 1e-12);
        assert!(k_equivariance_defect(&o.geom, &lc) < 1e-12);
    }

    #[test]
    fn su2_coadjoint_is_lct() {
        let o = su2(1.0);
        let lc = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        assert!(lc.max_abs() < 1e-15);
        assert!(j_commutation_check(&o.geom, &lc) == 0.0);
    }

    #[test]
    fn canonical_torsion_is_minus_bracket() {
        let o = su3_flag();
        let c = ConnectionMap::zero(6, ConnectionLabel::Canonical);
        let t = torsion(&o.geom, &c);
        for a in 0..6 {
            for b in 0..6 {
                let (ea, eb) = (unit(6, a), unit(6, b));
                assert!((t.eval(&ea, &eb) + o.geom.pbracket(&ea, &eb)).amax() < 1e-15);
            }
        }
        let tr = trace_criterion(&o.geom, &c, &o.geom.g_metric).unwrap();
        assert!(tr.amax() < 1e-12);
    }

    #[test]
    fn adversarial_trace_is_g0_of_jw() {
        let o = su3_flag();
        let g0 = &o.geom.g_metric;
        let w = RVec::from_fn(6, |i, _| 0.3 + i as f64 * 0.1);
        let adv = adversarial(&o.geom, g0, &w);
        assert!(metric_compat_defect(&adv, g0) < 1e-12);
        assert!(j_commutation_check(&o.geom, &adv) < 1e-12);
        assert!(k_equivariance_defect(&o.geom, &adv) > 1e-3);
        let tr = trace_criterion(&o.geom, &adv, g0).unwrap();
        let expected = g0 * (&o.geom.j * &w);
        assert!((tr - expected).amax() < 1e-12);
        let fs = frame_sum_check(&o.geom, &adv, g0).unwrap();
        assert!(fs.norm > 1e-3 && fs.agreement < 1e-12);
    }

    #[test]
    fn ell_file_round_trip() {
        let o = su3_flag();
        let lc = full_connection(&ConnectionLabel::CoadjointLeviCivita, &o.geom, &o.weights).unwrap();
        let back = ConnectionMap::from_file(&lc.to_file(), "x").unwrap();
        assert_eq!(back.max_diff(&lc), 0.0);
        let bad = EllFile { r: 2, ell: vec![(0, 2, 1, 1.0)] };
        assert!(ConnectionMap::from_file(&bad, "bad").is_err());
    }

    #[test]
    fn su2_bracket_decomposition() {
        let o = su2(1.0);
        let rep = bracket_decomposition_check(&o.geom, &o.weights, 0, 0, &unit(2, 0), &unit(2, 1));
        assert!(rep.max() < 1e-14, "{rep:?}");
        // [X1, X2] + [JX1, JX2] is a nonzero element of 𝔨
        let b = o.geom.bracket_m(&unit(2, 0), &unit(2, 1));
        assert!(o.geom.project(&b).amax() < 1e-15 && b.amax() > 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn frame_independence(seed in 0u64..10_000) {
            let o = su3_flag();
            let g0 = o.geom.g_metric.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = crate::linalg::random_normal_vec(6, &mut rng);
            let conn = adversarial(&o.geom, &g0, &w);
            let f1 = random_g0_frame(&g0, &mut rng).unwrap();
            let f2 = random_g0_frame(&g0, &mut rng).unwrap();
            let t1 = trace_criterion_with_frame(&o.geom, &conn, &g0, &f1);
            let t2 = trace_criterion_with_frame(&o.geom, &conn, &g0, &f2);
            prop_assert!((t1 - t2).amax() < 1e-10);
        }

        #[test]
        fn koszul_symmetric(x in proptest::collection::vec(-1.0..1.0f64, 6), y in proptest::collection::vec(-1.0..1.0f64, 6)) {
            let o = su3_flag();
            let (x, y) = (RVec::from_vec(x), RVec::from_vec(y));
            let a = koszul_solve(&o.geom, &o.geom.g_metric, &x, &y).unwrap();
            let b = koszul_solve(&o.geom, &o.geom.g_metric, &y, &x).unwrap();
            prop_assert!((a - b).amax() < 1e-12);
            let l = lct(&o.geom, &x, &y) + lct(&o.geom, &y, &x);
            prop_assert!(l.amax() < 1e-14);
        }
    }
}
