//! Numerical batteries behind the report checks. Each returns the largest defect it saw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clifford::{clifford_defect, ComplexModel, FockSpace};
use crate::connection::{
    bracket_decomposition_check, full_connection, j_commutation_check, koszul_connection, metric_compat_defect,
    torsion, ConnectionError, ConnectionLabel,
};
use crate::dirac::{negation_symmetry_defect, DiracBlock};
use crate::linalg::{cmax_abs, random_normal_vec, random_orthogonal, CMat, RMat, RVec};
use crate::orbit::{kahler_defects, k_invariance_defect, Orbit};

/// Kähler invariants plus K-invariance of (ω, J, g) under `samples` random `exp(t ad_Z)`.
pub fn kahler_suite(orbit: &Orbit, samples: usize, seed: u64) -> f64 {
    let geom = &orbit.geom;
    let d = kahler_defects(geom, &orbit.weights);
    let mut worst = [
        d.j_squared,
        d.polar,
        d.j_orthogonal,
        d.j_commutes_abs,
        d.weight_reconstruction,
        d.weight_metric,
        d.weight_ad,
        d.projector_algebra,
        geom.kks_defect(),
        geom.k_preserves_m_defect(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dk = geom.dim_k();
    for _ in 0..samples {
        let coeffs = random_normal_vec(dk, &mut rng);
        let z = (0..dk).fold(RVec::zeros(geom.algebra.dim()), |acc, i| acc + geom.k_basis_vector(i) * coeffs[i]);
        let t = rng.random_range(-3.0..3.0);
        worst = worst.max(k_invariance_defect(geom, &z, t));
    }
    worst
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LeviCivitaReport {
    pub route_agreement: f64,
    pub torsion: f64,
    pub metric_compat: f64,
    pub j_commutation: f64,
}

impl LeviCivitaReport {
    pub fn max(&self) -> f64 {
        self.route_agreement.max(self.torsion).max(self.metric_compat).max(self.j_commutation)
    }
}

/// Weight formula, `S`-formula with `S = |Γ|` and the dense Koszul solve for g⋄, compared pairwise.
pub fn levi_civita_routes(orbit: &Orbit) -> Result<LeviCivitaReport, ConnectionError> {
    let geom = &orbit.geom;
    let weight = full_connection(&ConnectionLabel::CoadjointLeviCivita, geom, &orbit.weights)?;
    let s_formula = full_connection(&ConnectionLabel::LeviCivita(geom.gamma_abs.clone()), geom, &orbit.weights)?;
    let koszul = koszul_connection(geom, &geom.g_metric)?;
    let route_agreement =
        weight.max_diff(&s_formula).max(weight.max_diff(&koszul)).max(s_formula.max_diff(&koszul));
    Ok(LeviCivitaReport {
        route_agreement,
        torsion: torsion(geom, &weight).max_abs(),
        metric_compat: metric_compat_defect(&weight, &geom.g_metric),
        j_commutation: j_commutation_check(geom, &weight),
    })
}

/// The five bracket identities for `pairs` random pairs of single-weight vectors.
pub fn bracket_battery(orbit: &Orbit, pairs: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nw = orbit.weights.weights.len();
    let r = orbit.r();
    let mut worst = 0.0_f64;
    for _ in 0..pairs {
        let (ia, ib) = (rng.random_range(0..nw), rng.random_range(0..nw));
        let x = random_normal_vec(r, &mut rng);
        let y = random_normal_vec(r, &mut rng);
        let rep = bracket_decomposition_check(&orbit.geom, &orbit.weights, ia, ib, &x, &y);
        worst = worst.max(rep.max());
    }
    worst
}

/// Complex structure in 2×2 blocks with a random J-compatible metric, for Fock spaces of any size.
pub fn random_complex_model<R: Rng>(n: usize, rng: &mut R) -> ComplexModel {
    let r = 2 * n;
    let mut j0 = RMat::zeros(r, r);
    let mut g = RMat::zeros(r, r);
    for k in 0..n {
        j0[(2 * k + 1, 2 * k)] = 1.0;
        j0[(2 * k, 2 * k + 1)] = -1.0;
        let w = 0.5 + rng.random::<f64>();
        g[(2 * k, 2 * k)] = w;
        g[(2 * k + 1, 2 * k + 1)] = w;
    }
    // conjugate by a random orthogonal change of coordinates
    let q = random_orthogonal(r, rng);
    let j = &q * j0 * q.transpose();
    let g0 = &q * g * q.transpose();
    ComplexModel::new(&j, &g0).expect("conjugated block structure is a complex structure")
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CliffordReport {
    pub relation: f64,
    pub involution: f64,
    pub equivariance: f64,
    pub leibniz: f64,
    pub chirality: f64,
}

impl CliffordReport {
    pub fn max(&self) -> f64 {
        [self.relation, self.involution, self.equivariance, self.leibniz, self.chirality]
            .into_iter()
            .fold(0.0, f64::max)
    }
}

/// Clifford relation, `κ(X)* = -κ(X)`, unitary equivariance and Leibniz rule for
/// `samples` random group and algebra elements, and the chirality properties.
pub fn clifford_suite(fock: &FockSpace, samples: usize, seed: u64) -> CliffordReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = fock.model.r();
    let id = CMat::identity(fock.dim, fock.dim);
    let mut rep = CliffordReport::default();
    let g = fock.chirality(1);
    rep.chirality = cmax_abs(&(&g * &g - &id)).max(cmax_abs(&(g.adjoint() - &g)));
    for _ in 0..samples {
        let x = random_normal_vec(r, &mut rng);
        let y = random_normal_vec(r, &mut rng);
        let kx = fock.kappa(&x);
        rep.relation = rep.relation.max(clifford_defect(fock, &x, &y)).max(clifford_defect(fock, &x, &x));
        rep.involution = rep.involution.max(cmax_abs(&(kx.adjoint() + &kx)));
        rep.chirality = rep.chirality.max(cmax_abs(&(&g * &kx + &kx * &g)));

        let u = fock.model.random_unitary(&mut rng);
        let rho = fock.lift_unitary(&u).expect("random unitary is J-unitary");
        let lhs = &rho * &kx * rho.adjoint();
        rep.equivariance = rep
            .equivariance
            .max(cmax_abs(&(lhs - fock.kappa(&(&u * &x)))))
            .max(cmax_abs(&(rho.adjoint() * &rho - &id)));

        let l = fock.model.random_skew(&mut rng);
        let s = fock.lift_skew(&l).expect("random skew map is in u(m_J)");
        let comm = &s * &kx - &kx * &s;
        rep.leibniz = rep.leibniz.max(cmax_abs(&(comm - fock.kappa(&(&l * &x)))));
        let vac = fock.vacuum();
        let wedge = |a: &RVec, b: &RVec| fock.create(a).unwrap() * fock.create(b).unwrap() * &vac;
        let lw = &s * wedge(&x, &y) - wedge(&(&l * &x), &y) - wedge(&x, &(&l * &y));
        rep.leibniz = rep.leibniz.max(lw.camax());

        let mut q = random_orthogonal(r, &mut rng);
        if q.determinant() < 0.0 {
            q.column_mut(0).neg_mut();
        }
        let other = fock.chirality_with_basis(&(fock.model.oriented_basis() * q));
        rep.chirality = rep.chirality.max(cmax_abs(&(other - &g)));
    }
    rep
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BlockSummary {
    pub hermiticity: f64,
    pub chirality: f64,
    pub symmetry: f64,
    pub all_hermitian: bool,
    pub nonempty: usize,
}

pub fn summarize_blocks(blocks: &[DiracBlock]) -> BlockSummary {
    let mut s = BlockSummary { all_hermitian: true, ..Default::default() };
    for b in blocks {
        if b.dim() > 0 {
            s.nonempty += 1;
        }
        s.hermiticity = s.hermiticity.max(b.hermiticity_defect);
        s.chirality = s.chirality.max(b.chirality_defect);
        s.all_hermitian &= b.is_hermitian();
        if b.is_hermitian() {
            s.symmetry = s.symmetry.max(negation_symmetry_defect(&b.eigenvalues));
        }
    }
    s
}

/// Largest relative mismatch between `scaled` and `base · factor` over matching sorted eigenvalue lists.
pub fn scaling_defect(base: &[DiracBlock], scaled: &[DiracBlock], factor: f64) -> f64 {
    let mut worst = 0.0_f64;
    for (a, b) in base.iter().zip(scaled) {
        if a.eigenvalues.len() != b.eigenvalues.len() {
            return f64::INFINITY;
        }
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            let expected = x * factor;
            worst = worst.max((y - expected).norm() / expected.norm().max(1e-12));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::su;

    fn su3(z6: f64, z7: f64) -> Orbit {
        let g = su(3).unwrap();
        let mut z = RVec::zeros(8);
        z[6] = z6;
        z[7] = z7;
        Orbit::from_z(&g, &z).unwrap()
    }

    #[test]
    fn kahler_suite_on_regular_and_degenerate_orbits() {
        assert!(kahler_suite(&su3(2.0, 2.6), 20, 1) < 1e-10);
        assert!(kahler_suite(&su3(2.0, 4.0), 20, 2) < 1e-10);
    }

    #[test]
    fn routes_agree_on_flag() {
        let rep = levi_civita_routes(&su3(2.0, 2.6)).unwrap();
        assert!(rep.max() < 1e-10, "{rep:?}");
    }

    #[test]
    fn random_models_are_valid_and_suite_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 1..=3 {
            let fock = FockSpace::new(random_complex_model(n, &mut rng));
            let rep = clifford_suite(&fock, 10, n as u64);
            assert!(rep.max() < 1e-10, "n = {n}: {rep:?}");
        }
    }

    #[test]
    fn scaling_detects_mismatch() {
        assert_eq!(scaling_defect(&[], &[], 0.5), 0.0);
    }
}
