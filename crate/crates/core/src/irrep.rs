//! Unitary representations of the algebra, given by anti-Hermitian generator
//! matrices `dπ(X_i)` for each basis element.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lie::LieAlgebra;
use crate::linalg::{c, cmax_abs, to_complex, CMat, RVec, I};

#[derive(Debug, Error)]
pub enum IrrepError {
    #[error("built-in representation {what} needs {needs}, got {got}")]
    UnsupportedAlgebra { what: String, needs: String, got: String },
    #[error("representation {label}: expected {expected} generators of size {dim}, got {got}")]
    DimensionMismatch { label: String, expected: usize, dim: usize, got: usize },
    #[error("representation {label} is not a homomorphism on ({i}, {j}): defect {defect:e}")]
    NotHomomorphism { label: String, i: usize, j: usize, defect: f64 },
    #[error("representation {label}: generator {i} is not anti-Hermitian (defect {defect:e})")]
    NotAntiHermitian { label: String, i: usize, defect: f64 },
    #[error("unknown built-in representation {0:?}")]
    UnknownBuiltin(String),
}

const REP_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct IrrepData {
    pub label: String,
    pub dim: usize,
    pub generators: Vec<CMat>,
}

/// On-disk form: each generator is a list of rows of `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrrepFile {
    pub label: String,
    pub dim: usize,
    pub generators: Vec<Vec<Vec<[f64; 2]>>>,
}

impl IrrepData {
    pub fn from_file(f: &IrrepFile, alg: &LieAlgebra) -> Result<Self, IrrepError> {
        let bad = |got| IrrepError::DimensionMismatch {
            label: f.label.clone(),
            expected: alg.dim(),
            dim: f.dim,
            got,
        };
        if f.generators.len() != alg.dim() {
            return Err(bad(f.generators.len()));
        }
        let mut generators = Vec::with_capacity(alg.dim());
        for g in &f.generators {
            if g.len() != f.dim || g.iter().any(|row| row.len() != f.dim) {
                return Err(bad(g.len()));
            }
            generators.push(CMat::from_fn(f.dim, f.dim, |i, j| {
                let [re, im] = g[i][j];
                Complex64::new(re, im)
            }));
        }
        let rep = IrrepData { label: f.label.clone(), dim: f.dim, generators };
        rep.validate(alg)?;
        Ok(rep)
    }

    pub fn to_file(&self) -> IrrepFile {
        let generators = self
            .generators
            .iter()
            .map(|g| (0..self.dim).map(|i| (0..self.dim).map(|j| [g[(i, j)].re, g[(i, j)].im]).collect()).collect())
            .collect();
        IrrepFile { label: self.label.clone(), dim: self.dim, generators }
    }

    /// Checks the bracket relations and anti-Hermiticity.
    pub fn validate(&self, alg: &LieAlgebra) -> Result<(), IrrepError> {
        let n = alg.dim();
        if self.generators.len() != n || self.generators.iter().any(|g| g.shape() != (self.dim, self.dim)) {
            return Err(IrrepError::DimensionMismatch {
                label: self.label.clone(),
                expected: n,
                dim: self.dim,
                got: self.generators.len(),
            });
        }
        for (i, g) in self.generators.iter().enumerate() {
            let defect = cmax_abs(&(g + g.adjoint()));
            if defect > REP_TOL {
                return Err(IrrepError::NotAntiHermitian { label: self.label.clone(), i, defect });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let lhs = &self.generators[i] * &self.generators[j] - &self.generators[j] * &self.generators[i];
                let rhs = self.dpi(&alg.br(&alg.basis_vector(i), &alg.basis_vector(j)));
                let defect = cmax_abs(&(lhs - rhs));
                if defect > REP_TOL {
                    return Err(IrrepError::NotHomomorphism { label: self.label.clone(), i, j, defect });
                }
            }
        }
        Ok(())
    }

    /// `dπ(X) = Σ x_i dπ(X_i)`.
    pub fn dpi(&self, x: &RVec) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (i, g) in self.generators.iter().enumerate() {
            if x[i] != 0.0 {
                m += g * c(x[i]);
            }
        }
        m
    }

    /// Casimir `Σ dπ(F_a)²` over a kil-orthonormal basis `F`.
    pub fn casimir(&self, alg: &LieAlgebra) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for col in alg.frame().column_iter() {
            let d = self.dpi(&col.into_owned());
            m += &d * &d;
        }
        m
    }

    /// Generators conjugated by a unitary: `U* dπ U`.
    pub fn conjugated(&self, u: &CMat) -> IrrepData {
        IrrepData {
            label: format!("{}~", self.label),
            dim: self.dim,
            generators: self.generators.iter().map(|g| u.adjoint() * g * u).collect(),
        }
    }

    /// Complex-conjugate representation.
    pub fn dual(&self) -> IrrepData {
        IrrepData {
            label: format!("{}*", self.label),
            dim: self.dim,
            generators: self.generators.iter().map(|g| g.map(|z| z.conj())).collect(),
        }
    }
}

/// Spin-j representation, `dπ(X_k) = -i J_k` from the ladder construction.
pub fn su2_irrep(alg: &LieAlgebra, two_j: usize) -> Result<IrrepData, IrrepError> {
    if !alg.is_su2_standard() {
        return Err(IrrepError::UnsupportedAlgebra {
            what: "spin-j".into(),
            needs: "su(2) with [X_i, X_j] = ε_ijk X_k".into(),
            got: alg.name().into(),
        });
    }
    let d = two_j + 1;
    let j = two_j as f64 / 2.0;
    // index a ↔ m = j - a
    let m = |a: usize| j - a as f64;
    let mut jp = CMat::zeros(d, d);
    for a in 1..d {
        let mm = m(a);
        jp[(a - 1, a)] = c((j * (j + 1.0) - mm * (mm + 1.0)).sqrt());
    }
    let jm = jp.adjoint();
    let j1 = (&jp + &jm) * c(0.5);
    let j2 = (&jp - &jm) * (-I * 0.5);
    let j3 = CMat::from_fn(d, d, |a, b| if a == b { c(m(a)) } else { c(0.0) });
    let generators = vec![j1 * (-I), j2 * (-I), j3 * (-I)];
    Ok(IrrepData { label: spin_label(two_j), dim: d, generators })
}

/// Defining representation of su(n).
pub fn su_defining(alg: &LieAlgebra) -> Result<IrrepData, IrrepError> {
    let mats = matrices_of(alg, "defining")?;
    let n = mats[0].nrows();
    Ok(IrrepData { label: format!("su{n}-defining"), dim: n, generators: mats.to_vec() })
}

fn matrices_of<'a>(alg: &'a LieAlgebra, what: &str) -> Result<&'a [CMat], IrrepError> {
    alg.matrices().ok_or_else(|| IrrepError::UnsupportedAlgebra {
        what: what.into(),
        needs: "a built-in su(n) algebra".into(),
        got: alg.name().into(),
    })
}

/// Multi-indices of length `n` summing to `k`, in lexicographically decreasing order.
fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![k]];
    }
    let mut out = Vec::new();
    for first in (0..=k).rev() {
        for mut rest in compositions(n - 1, k - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// k-th symmetric power of the defining representation of su(n), realised on
/// degree-k monomials in n bosonic modes: `dπ(X) = Σ X_ab b†_a b_b`.
pub fn su_symmetric_power(alg: &LieAlgebra, k: usize) -> Result<IrrepData, IrrepError> {
    let mats = matrices_of(alg, "symmetric power")?;
    let n = mats[0].nrows();
    let states = compositions(n, k);
    let index = |s: &Vec<usize>| states.iter().position(|t| t == s).expect("state in basis");
    let d = states.len();
    let generators = mats
        .iter()
        .map(|x| {
            let mut g = CMat::zeros(d, d);
            for (col, s) in states.iter().enumerate() {
                for b in 0..n {
                    if s[b] == 0 {
                        continue;
                    }
                    for a in 0..n {
                        if x[(a, b)] == Complex64::ZERO {
                            continue;
                        }
                        let mut t = s.clone();
                        t[b] -= 1;
                        let amp = (s[b] as f64).sqrt() * ((t[a] + 1) as f64).sqrt();
                        t[a] += 1;
                        g[(index(&t), col)] += x[(a, b)] * amp;
                    }
                }
            }
            g
        })
        .collect();
    Ok(IrrepData { label: format!("su{n}-sym{k}"), dim: d, generators })
}

/// Adjoint representation in a kil-orthonormal frame, so the generators are real skew.
pub fn adjoint(alg: &LieAlgebra) -> IrrepData {
    let f = alg.frame();
    let f_inv = f.transpose() * alg.kil();
    let generators = (0..alg.dim()).map(|i| to_complex(&(&f_inv * alg.ad_basis(i) * f))).collect();
    IrrepData { label: "adjoint".into(), dim: alg.dim(), generators }
}

/// `spin-1/2`, `spin-1`, `spin-3/2`, ...
pub fn spin_label(two_j: usize) -> String {
    if two_j.is_multiple_of(2) {
        format!("spin-{}", two_j / 2)
    } else {
        format!("spin-{two_j}/2")
    }
}

fn parse_spin(j: &str) -> Option<usize> {
    match j.strip_suffix("/2") {
        Some(odd) => odd.parse::<usize>().ok().filter(|n| n % 2 == 1),
        None => j.parse::<usize>().ok().map(|n| 2 * n),
    }
}

/// Resolves a built-in name: `spin-<j>` (j integer or `n/2`), `defining`, `sym<k>`, `adjoint`, with an
/// optional `*` suffix for the conjugate representation.
pub fn builtin(alg: &LieAlgebra, name: &str) -> Result<IrrepData, IrrepError> {
    if let Some(base) = name.strip_suffix('*') {
        return Ok(builtin(alg, base)?.dual());
    }
    let rep = if let Some(j) = name.strip_prefix("spin-") {
        let two_j = parse_spin(j).ok_or_else(|| IrrepError::UnknownBuiltin(name.into()))?;
        su2_irrep(alg, two_j)?
    } else if name == "defining" {
        su_defining(alg)?
    } else if let Some(k) = name.strip_prefix("sym") {
        let k = k.parse().map_err(|_| IrrepError::UnknownBuiltin(name.into()))?;
        su_symmetric_power(alg, k)?
    } else if name == "adjoint" {
        adjoint(alg)
    } else {
        return Err(IrrepError::UnknownBuiltin(name.into()));
    };
    rep.validate(alg)?;
    Ok(rep)
}
