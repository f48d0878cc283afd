//! Dirac operators on twisted spinor bundles over G/K, one finite block per
//! irreducible representation.
//!
//! An equivariant section paired with `v ∈ V_λ` is `x ↦ T π(x)⁻¹ v` for
//! `T ∈ Hom(V_λ, 𝓢)`, and equivariance `ψ(xs) = χ̄(s) ρ(s)⁻¹ ψ(x)` becomes
//! `ρ(s) T = χ̄(s) T π(s)`. With column-stacking `vec(A T B) = (Bᵀ ⊗ A) vec T`
//! the infinitesimal conditions are
//! `(I ⊗ σ(ad_Z|𝔪) - dπ(Z)ᵀ ⊗ I + i w(Z)) vec T = 0` for `Z ∈ 𝔨`, and the
//! right derivative of `T π(x)⁻¹ v` along `Y` contributes `-dπ(Y)ᵀ ⊗ I`.

use std::cmp::Ordering;

use num_complex::Complex64;
use thiserror::Error;

use crate::clifford::{CliffordError, ComplexModel, FockSpace};
use crate::connection::ConnectionMap;
use crate::irrep::IrrepData;
use crate::linalg::{c, cmax_abs, complex_eigenvalues, herm_eigen, kron, CMat, RMat, RVec, I};
use crate::orbit::OrbitGeometry;

#[derive(Debug, Error)]
pub enum DiracError {
    #[error("block {label}: operator does not preserve the invariant subspace (defect {defect:e})")]
    SubspaceNotPreserved { label: String, defect: f64 },
    #[error("character weight has {got} entries, 𝔨 has dimension {expected}")]
    CharacterDimension { expected: usize, got: usize },
    #[error("character weight does not vanish on [𝔨, 𝔨] (defect {0:e})")]
    CharacterNotAbelian(f64),
    #[error("connection tensor has r = {got}, orbit has r = {expected}")]
    ConnectionDimension { expected: usize, got: usize },
    #[error("block {0}: eigensolver did not converge")]
    EigenSolver(String),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
}

pub const HERMITIAN_TOL: f64 = 1e-8;
pub const PRESERVE_TOL: f64 = 1e-8;
const KERNEL_REL_TOL: f64 = 1e-9;

/// Character of K with `dχ(Z) = i·weight(Z)`, weight given over the kil-orthonormal 𝔨 basis.
#[derive(Debug, Clone)]
pub struct CharacterData {
    pub weight: RVec,
}

impl CharacterData {
    pub fn trivial(dim_k: usize) -> Self {
        CharacterData { weight: RVec::zeros(dim_k) }
    }

    pub fn validate(&self, geom: &OrbitGeometry) -> Result<(), DiracError> {
        let dk = geom.dim_k();
        if self.weight.len() != dk {
            return Err(DiracError::CharacterDimension { expected: dk, got: self.weight.len() });
        }
        let mut worst = 0.0_f64;
        for i in 0..dk {
            for j in (i + 1)..dk {
                let b = geom.algebra.br(&geom.k_basis_vector(i), &geom.k_basis_vector(j));
                worst = worst.max(self.weight.dot(&geom.project_k(&b)).abs());
            }
        }
        if worst > 1e-9 {
            return Err(DiracError::CharacterNotAbelian(worst));
        }
        Ok(())
    }
}

/// How a block is represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    /// Restrict to the K-equivariant subspace of `V_λ* ⊗ 𝓢`.
    Invariant,
    /// Keep the whole of `V_λ* ⊗ 𝓢`; used for connections that are not K-equivariant.
    Unreduced,
}

/// Spinor-level data shared by all blocks of one run.
#[derive(Debug, Clone)]
pub struct DiracContext {
    pub geom: OrbitGeometry,
    pub g0: RMat,
    pub fock: FockSpace,
    /// g0-orthonormal frame of 𝔪 (columns), and the same vectors in algebra coordinates.
    pub frame: RMat,
    pub frame_alg: Vec<RVec>,
    pub kappa_f: Vec<CMat>,
    pub sigma_ell: Vec<CMat>,
    /// `Σ_a κ(f_a) σ(ℓ(f_a, ·))` on 𝓢.
    pub m_spinor: CMat,
    pub gamma: CMat,
    /// `(Z, σ(ad_Z|𝔪), weight(Z))` for the 𝔨 basis.
    pub k_lifts: Vec<(RVec, CMat, f64)>,
    /// False when some slice of ℓ was not g0-skew and only its J-linear part was lifted.
    pub spin_lift_exact: bool,
    pub orientation: i8,
}

impl DiracContext {
    pub fn new(
        geom: &OrbitGeometry,
        g0: &RMat,
        conn: &ConnectionMap,
        character: &CharacterData,
        orientation: i8,
    ) -> Result<Self, DiracError> {
        if conn.r != geom.r() {
            return Err(DiracError::ConnectionDimension { expected: geom.r(), got: conn.r });
        }
        character.validate(geom)?;
        let fock = FockSpace::new(ComplexModel::new(&geom.j, g0)?);
        let frame = fock.model.oriented_basis();
        let frame_alg = frame.column_iter().map(|f| geom.embed(&f.into_owned())).collect();
        let kappa_f: Vec<CMat> = frame.column_iter().map(|f| fock.kappa(&f.into_owned())).collect();
        let mut spin_lift_exact = true;
        let sigma_ell: Vec<CMat> = frame
            .column_iter()
            .map(|f| {
                let (s, exact) = fock.lift_connection_slice(&conn.left(&f.into_owned()));
                spin_lift_exact &= exact;
                s
            })
            .collect();
        let mut m_spinor = CMat::zeros(fock.dim, fock.dim);
        for (k, s) in kappa_f.iter().zip(&sigma_ell) {
            m_spinor += k * s;
        }
        let gamma = fock.chirality(orientation);
        let mut k_lifts = Vec::with_capacity(geom.dim_k());
        for i in 0..geom.dim_k() {
            let z = geom.k_basis_vector(i);
            let s = fock.lift_skew(&geom.ad_on_m(&z))?;
            k_lifts.push((z, s, character.weight[i]));
        }
        Ok(DiracContext {
            geom: geom.clone(),
            g0: g0.clone(),
            fock,
            frame,
            frame_alg,
            kappa_f,
            sigma_ell,
            m_spinor,
            gamma,
            k_lifts,
            spin_lift_exact,
            orientation,
        })
    }

    pub fn spinor_dim(&self) -> usize {
        self.fock.dim
    }

    /// Orthonormal basis (columns) of the joint kernel of the K-equivariance operators.
    pub fn invariant_subspace(&self, irrep: &IrrepData) -> CMat {
        let (d, s) = (irrep.dim, self.spinor_dim());
        let id_d = CMat::identity(d, d);
        let id_s = CMat::identity(s, s);
        let mut h = CMat::zeros(d * s, d * s);
        for (z, sigma, w) in &self.k_lifts {
            let a = kron(&id_d, sigma) - kron(&irrep.dpi(z).transpose(), &id_s)
                + CMat::identity(d * s, d * s) * (I * *w);
            h += a.adjoint() * &a;
        }
        let (vals, vecs) = herm_eigen(&h);
        let top = vals.last().copied().unwrap_or(0.0).max(1.0);
        let k = vals.iter().take_while(|&&v| v <= KERNEL_REL_TOL * top).count();
        vecs.columns(0, k).into_owned()
    }

    /// `D` on all of `V_λ* ⊗ 𝓢`.
    pub fn full_operator(&self, irrep: &IrrepData) -> CMat {
        let (d, s) = (irrep.dim, self.spinor_dim());
        let id_d = CMat::identity(d, d);
        let mut op = kron(&id_d, &self.m_spinor);
        for (fa, ka) in self.frame_alg.iter().zip(&self.kappa_f) {
            op -= kron(&irrep.dpi(fa).transpose(), ka);
        }
        debug_assert_eq!(op.nrows(), d * s);
        op
    }

    pub fn block(&self, irrep: &IrrepData, reduction: Reduction) -> Result<DiracBlock, DiracError> {
        let basis = match reduction {
            Reduction::Invariant => self.invariant_subspace(irrep),
            Reduction::Unreduced => {
                let n = irrep.dim * self.spinor_dim();
                CMat::identity(n, n)
            }
        };
        self.block_operator(irrep, basis, reduction)
    }

    /// Restricts `D`, `M̂` and the chirality to `inv_basis` after checking that `D` preserves it.
    pub fn block_operator(
        &self,
        irrep: &IrrepData,
        inv_basis: CMat,
        reduction: Reduction,
    ) -> Result<DiracBlock, DiracError> {
        let d = irrep.dim;
        let id_d = CMat::identity(d, d);
        let full = self.full_operator(irrep);
        let q = &inv_basis;
        let dq = &full * q;
        let d_matrix = q.adjoint() * &dq;
        let preservation_defect = if q.ncols() == 0 { 0.0 } else { cmax_abs(&(&dq - q * &d_matrix)) };
        if preservation_defect > PRESERVE_TOL {
            return Err(DiracError::SubspaceNotPreserved { label: irrep.label.clone(), defect: preservation_defect });
        }
        let m_hat = q.adjoint() * kron(&id_d, &self.m_spinor) * q;
        let chirality = q.adjoint() * kron(&id_d, &self.gamma) * q;
        DiracBlock::new(irrep, inv_basis, d_matrix, m_hat, chirality, reduction)
    }

    /// Block of `D̃ = D - ½(M̂ - M̂*)`.
    pub fn modified_block(&self, block: &DiracBlock) -> Result<DiracBlock, DiracError> {
        let skew = (&block.m_hat - block.m_hat.adjoint()) * c(0.5);
        let d = &block.d_matrix - skew;
        DiracBlock::from_parts(
            block.label.clone(),
            block.irrep_dim,
            block.inv_basis.clone(),
            d,
            block.m_hat.clone(),
            block.chirality.clone(),
            block.reduction,
        )
    }
}

#[derive(Debug, Clone)]
pub struct DiracBlock {
    pub label: String,
    pub irrep_dim: usize,
    pub inv_basis: CMat,
    pub d_matrix: CMat,
    pub m_hat: CMat,
    pub chirality: CMat,
    pub reduction: Reduction,
    pub hermiticity_defect: f64,
    pub chirality_defect: f64,
    pub eigenvalues: Vec<Complex64>,
}

impl DiracBlock {
    fn new(irrep: &IrrepData, q: CMat, d: CMat, m: CMat, g: CMat, reduction: Reduction) -> Result<Self, DiracError> {
        DiracBlock::from_parts(irrep.label.clone(), irrep.dim, q, d, m, g, reduction)
    }

    fn from_parts(
        label: String,
        irrep_dim: usize,
        inv_basis: CMat,
        d_matrix: CMat,
        m_hat: CMat,
        chirality: CMat,
        reduction: Reduction,
    ) -> Result<Self, DiracError> {
        let empty = d_matrix.is_empty();
        let hermiticity_defect = if empty { 0.0 } else { cmax_abs(&(&d_matrix - d_matrix.adjoint())) };
        let chirality_defect =
            if empty { 0.0 } else { cmax_abs(&(&d_matrix * &chirality + &chirality * &d_matrix)) };
        let mut eigenvalues = if empty {
            Vec::new()
        } else if hermiticity_defect <= HERMITIAN_TOL {
            herm_eigen(&d_matrix).0.into_iter().map(c).collect()
        } else {
            complex_eigenvalues(&d_matrix).ok_or_else(|| DiracError::EigenSolver(label.clone()))?
        };
        eigenvalues.sort_by(cmp_complex);
        Ok(DiracBlock {
            label,
            irrep_dim,
            inv_basis,
            d_matrix,
            m_hat,
            chirality,
            reduction,
            hermiticity_defect,
            chirality_defect,
            eigenvalues,
        })
    }

    pub fn dim(&self) -> usize {
        self.d_matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_defect <= HERMITIAN_TOL
    }

    /// Dimensions of the +1 and -1 eigenspaces of the restricted chirality.
    pub fn chirality_split(&self) -> (usize, usize) {
        if self.dim() == 0 {
            return (0, 0);
        }
        let (vals, _) = herm_eigen(&self.chirality);
        let plus = vals.iter().filter(|&&v| v > 0.0).count();
        (plus, vals.len() - plus)
    }

    /// Largest mismatch between the sorted spectrum and its negation.
    pub fn symmetry_defect(&self) -> f64 {
        negation_symmetry_defect(&self.eigenvalues)
    }
}

pub fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Compares a sorted list of real parts with its negation.
pub fn negation_symmetry_defect(vals: &[Complex64]) -> f64 {
    let n = vals.len();
    (0..n).map(|i| (vals[i] + vals[n - 1 - i]).norm()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumEntry {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    pub irrep_label: String,
    pub block_dim: usize,
}

/// Per-block eigenvalues merged into rows, each carrying multiplicity `count · d_λ`.
pub fn spectrum(blocks: &[DiracBlock]) -> Vec<SpectrumEntry> {
    let mut out = Vec::new();
    for b in blocks {
        let mut i = 0;
        while i < b.eigenvalues.len() {
            let v = b.eigenvalues[i];
            let mut j = i + 1;
            while j < b.eigenvalues.len() && (b.eigenvalues[j] - v).norm() <= 1e-9 * v.norm().max(1.0) {
                j += 1;
            }
            let group = &b.eigenvalues[i..j];
            let mean = group.iter().sum::<Complex64>() / (group.len() as f64);
            out.push(SpectrumEntry {
                re: clean(mean.re),
                im: clean(mean.im),
                multiplicity: group.len() * b.irrep_dim,
                irrep_label: b.label.clone(),
                block_dim: b.dim(),
            });
            i = j;
        }
    }
    out.sort_by(|a, b| {
        a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)).then_with(|| a.irrep_label.cmp(&b.irrep_label))
    });
    out
}

/// Rounds values that are zero to working precision, and strips the sign of zero.
pub fn clean(v: f64) -> f64 {
    if v.abs() < 1e-11 {
        0.0
    } else {
        v
    }
}
