//! Canonical qutrit realization of the n-cycle scenario, stabilizer
//! operators for its optimal state, and embeddings into larger spaces.
//!
//! The canonical realization places the state at (1,0,0) and the n effect
//! vectors on a cone around it, with consecutive vectors orthogonal. It
//! attains the maximal quantum value of the modified inequality and is the
//! reference object the self-testing pipeline certifies against.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::coefficients::{reduce_angle, SosCoefficients};
use crate::numerics::{hermitian_eig, orthonormal_basis, ComplexMatrix, ComplexVector};
use crate::{Error, Result};

/// A state vector plus n measurement effects on a common space.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Realization {
    pub dim: usize,
    pub psi: ComplexVector,
    pub effects: Vec<ComplexMatrix>,
}

/// Solution of the stabilizer ansatz a A_i + b A_{i+k} + b' A_{i-k}.
#[derive(Clone, Debug, Serialize)]
pub struct StabilizerCoefficients {
    pub a: f64,
    pub b: f64,
    pub b_prime: f64,
    pub k: usize,
}

/// Map a 1-based cyclic index (as an offset expression) into 0..n.
pub(crate) fn cyc(i: isize, n: usize) -> usize {
    (i - 1).rem_euclid(n as isize) as usize
}

impl Realization {
    pub fn n(&self) -> usize {
        self.effects.len()
    }

    /// Observables A_i = 2 F_i - 1.
    pub fn observables(&self) -> Vec<ComplexMatrix> {
        let eye = ComplexMatrix::identity(self.dim);
        self.effects
            .iter()
            .map(|f| &f.scale(2.0) - &eye)
            .collect()
    }

    /// Effect for a 1-based cyclic index.
    pub fn effect(&self, i: isize) -> &ComplexMatrix {
        &self.effects[cyc(i, self.n())]
    }

    /// Check the structural invariants: unit state, Hermitian effects
    /// with spectrum inside [-1e-10, 1 + 1e-10].
    pub fn validate(&self) -> Result<()> {
        if self.psi.dim() != self.dim {
            return Err(Error::InvalidRealization(format!(
                "state dimension {} != dim {}",
                self.psi.dim(),
                self.dim
            )));
        }
        if (self.psi.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidRealization(format!(
                "state norm {} is not 1",
                self.psi.norm()
            )));
        }
        for (idx, f) in self.effects.iter().enumerate() {
            if f.rows() != self.dim || f.cols() != self.dim {
                return Err(Error::InvalidRealization(format!(
                    "effect {} is {}x{}, expected {}x{}",
                    idx + 1,
                    f.rows(),
                    f.cols(),
                    self.dim,
                    self.dim
                )));
            }
            if !f.is_hermitian() {
                return Err(Error::InvalidRealization(format!(
                    "effect {} is not Hermitian",
                    idx + 1
                )));
            }
            let (values, _) = hermitian_eig(f)?;
            for &l in &values {
                if !(-1e-10..=1.0 + 1e-10).contains(&l) {
                    return Err(Error::EffectOutOfRange { eigenvalue: l });
                }
            }
        }
        Ok(())
    }
}

/// The canonical qutrit realization for odd n >= 5.
///
/// State (1,0,0); effect i is the projector onto
/// (cos t, sin t sin phi_i, sin t cos phi_i) with cos t = (1+2 alpha)^(-1/2),
/// alpha = sec(pi/n)/2 and phi_i = (n-1) pi i / n. Consecutive vectors are
/// orthogonal by construction.
pub fn canonical(n: usize) -> Result<Realization> {
    if n < 5 || n % 2 == 0 {
        return Err(Error::BadN {
            n,
            reason: "canonical realization needs odd n >= 5",
        });
    }
    let alpha = 0.5 / (PI / n as f64).cos();
    let cos_t = (1.0 / (1.0 + 2.0 * alpha)).sqrt();
    let sin_t = (1.0 - cos_t * cos_t).sqrt();
    let effects = (1..=n)
        .map(|i| {
            let phi = reduce_angle((n as f64 - 1.0) / n as f64 * PI * i as f64);
            let v = ComplexVector::from_real(&[cos_t, sin_t * phi.sin(), sin_t * phi.cos()]);
            v.outer(&v)
        })
        .collect();
    Ok(Realization {
        dim: 3,
        psi: ComplexVector::basis(3, 0),
        effects,
    })
}

/// Solve the 2x2 stabilizer system for the canonical realization:
/// b/a = b'/a = -sec(phi_k)/2 and a = 1/[(1 - sec phi_k)(2 cos^2 t - 1)].
pub fn solve_stabilizer_coeffs(n: usize, k: usize) -> Result<StabilizerCoefficients> {
    if n < 5 || n % 2 == 0 {
        return Err(Error::BadN {
            n,
            reason: "stabilizer coefficients need odd n >= 5",
        });
    }
    let half = (n - 1) / 2;
    if k < 1 || k > half {
        return Err(Error::BadK { k, max: half });
    }
    let phi_k = (n as f64 - 1.0) / n as f64 * PI * k as f64;
    if phi_k.sin().abs() < 1e-12 {
        return Err(Error::Singular(phi_k.sin().abs()));
    }
    let sec = 1.0 / phi_k.cos();
    let alpha = 0.5 / (PI / n as f64).cos();
    let cos2t = (1.0 - 2.0 * alpha) / (1.0 + 2.0 * alpha); // 2 cos^2 t - 1
    let a = 1.0 / ((1.0 - sec) * cos2t);
    let b = -a * sec / 2.0;
    Ok(StabilizerCoefficients {
        a,
        b,
        b_prime: b,
        k,
    })
}

/// The stabilizing operator
/// `alpha_bar [ (1 - 2 beta_k) A_i + beta_k (A_{i+k} + A_{i-k}) ]`
/// with indices taken modulo n (1-based).
pub fn stabilizer_matrix(
    coeffs: &SosCoefficients,
    a_ops: &[ComplexMatrix],
    i: usize,
    k: usize,
) -> Result<ComplexMatrix> {
    let n = coeffs.n;
    if a_ops.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {} observables, got {}",
            n,
            a_ops.len()
        )));
    }
    let dim = a_ops[0].rows();
    for m in a_ops {
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "observables must all be {dim}x{dim}"
            )));
        }
    }
    let half = (n - 1) / 2;
    if k < 1 || k > half {
        return Err(Error::BadK { k, max: half });
    }
    let beta = coeffs.beta_at(k);
    let center = &a_ops[cyc(i as isize, n)];
    let plus = &a_ops[cyc(i as isize + k as isize, n)];
    let minus = &a_ops[cyc(i as isize - k as isize, n)];
    let combo = &center.scale(1.0 - 2.0 * beta) + &(&plus.scale(beta) + &minus.scale(beta));
    Ok(combo.scale(coeffs.alpha_bar))
}

fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    // Box-Muller
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    Complex64::new(r * (2.0 * PI * u2).cos(), r * (2.0 * PI * u2).sin())
}

fn ginibre(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let entries: Vec<Complex64> = (0..dim * dim).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_row_major(dim, dim, &entries)
}

/// Haar-random unitary via Gram-Schmidt of a Ginibre matrix.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    loop {
        let g = ginibre(dim, rng);
        let cols: Vec<ComplexVector> = (0..dim)
            .map(|j| ComplexVector::from_fn(dim, |i| g.get(i, j)))
            .collect();
        let basis = orthonormal_basis(&cols, 1e-10);
        if basis.len() == dim {
            // basis vectors become the columns of U
            return ComplexMatrix::from_fn(dim, dim, |i, j| basis[j].get(i));
        }
    }
}

/// Haar-random unit state.
pub fn haar_state(dim: usize, rng: &mut impl Rng) -> ComplexVector {
    loop {
        let v = ComplexVector::from_fn(dim, |_| complex_gaussian(rng));
        if v.norm() > 1e-6 {
            return v.normalized();
        }
    }
}

/// Random effect with spectrum in [0, 1]: Z†Z normalized to unit
/// operator norm, Z complex Gaussian.
pub fn random_effect(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let z = ginibre(dim, rng);
    let gram = (&z.adjoint() * &z).hermitian_part();
    let (values, _) = hermitian_eig(&gram).expect("Gram matrix is Hermitian");
    let top = values[0];
    if top <= 0.0 {
        return ComplexMatrix::zeros(dim, dim);
    }
    gram.scale(1.0 / top)
}

/// Embed a realization into `dim + extra` dimensions: the state is
/// zero-padded, each effect gains an arbitrary valid junk block, and the
/// whole thing is conjugated by `u` (Haar-random from `seed` when `None`).
/// In-block expectation values are preserved exactly.
pub fn embed(
    r: &Realization,
    extra: usize,
    u: Option<&ComplexMatrix>,
    seed: u64,
) -> Result<Realization> {
    let dim = r.dim + extra;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unitary = match u {
        Some(m) => {
            if m.rows() != dim || m.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "embedding unitary must be {dim}x{dim}, got {}x{}",
                    m.rows(),
                    m.cols()
                )));
            }
            let defect = m.unitary_defect();
            if defect > 1e-10 * dim as f64 {
                return Err(Error::NotUnitary(defect));
            }
            m.clone()
        }
        None => haar_unitary(dim, &mut rng),
    };
    let udag = unitary.adjoint();
    let psi = unitary.matvec(&r.psi.zero_padded(extra));
    let effects = r
        .effects
        .iter()
        .map(|f| {
            let block = if extra == 0 {
                f.clone()
            } else {
                f.direct_sum(&random_effect(extra, &mut rng))
            };
            (&(&unitary * &block) * &udag).hermitian_part()
        })
        .collect();
    Ok(Realization { dim, psi, effects })
}

#[cfg(test)]
mod tests {
    use super::*;

    const COS_T_5: f64 = 0.668740304976422; // (1 + 2 alpha)^(-1/2) at n = 5
    const OVERLAP_5: f64 = 0.6180339887498949; // (1 - alpha)/alpha at n = 5

    #[test]
    fn rejects_bad_n() {
        assert!(canonical(4).is_err());
        assert!(canonical(3).is_err());
        assert!(canonical(6).is_err());
        assert!(canonical(7).is_ok()); // any odd n, not only 2^m + 1
    }

    #[test]
    fn canonical_five_geometry() {
        let r = canonical(5).unwrap();
        r.validate().unwrap();
        assert_eq!(r.dim, 3);
        assert!(r.psi.sub(&ComplexVector::basis(3, 0)).norm() < 1e-15);
        // first effect column gives the vector; check cos t via <psi|F_i|psi>
        for i in 1..=5 {
            let marg = r.effect(i as isize).expectation(&r.psi).re;
            assert!((marg.sqrt() - COS_T_5).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_orthogonality_and_next_nearest_overlap() {
        for n in [5usize, 9, 17] {
            let r = canonical(n).unwrap();
            let alpha = 0.5 / (PI / n as f64).cos();
            for i in 1..=n as isize {
                // tr(F_i F_{i+1}) = |<v_i|v_{i+1}>|^2
                let near = (r.effect(i) * r.effect(i + 1)).trace().re;
                assert!(near.abs() < 1e-12, "n={n} i={i}: {near:e}");
                let far = (r.effect(i - 1) * r.effect(i + 1)).trace().re.sqrt();
                let expect = (1.0 - alpha) / alpha;
                assert!((far - expect).abs() < 1e-12, "n={n} i={i}");
            }
        }
        let r5 = canonical(5).unwrap();
        let far = (r5.effect(0) * r5.effect(2)).trace().re.sqrt();
        assert!((far - OVERLAP_5).abs() < 1e-12);
    }

    #[test]
    fn canonical_relations_hold() {
        // stabilization, unit squares, cyclic orthogonality on the state
        for n in [5usize, 9, 17] {
            let r = canonical(n).unwrap();
            let alpha = 0.5 / (PI / n as f64).cos();
            let a = r.observables();
            for i in 1..=n as isize {
                let ai = &a[cyc(i, n)];
                let am = &a[cyc(i - 1, n)];
                let ap = &a[cyc(i + 1, n)];
                let lhs = (&(ai + &ap.scale(alpha)) + &am.scale(alpha)).matvec(&r.psi);
                let rhs = r.psi.scale(1.0 - 2.0 * alpha);
                assert!(lhs.sub(&rhs).norm() <= 1e-11, "stabilization n={n} i={i}");
                let sq = (ai * ai).matvec(&r.psi).sub(&r.psi).norm();
                assert!(sq <= 1e-11, "squares n={n} i={i}");
                for off in [-1isize, 1] {
                    let orth = (r.effect(i) * r.effect(i + off)).matvec(&r.psi).norm();
                    assert!(orth <= 1e-11, "orthogonality n={n} i={i} off={off}");
                }
            }
        }
    }

    #[test]
    fn canonical_angle_increment() {
        // consecutive reduced angles differ by (n-1) pi / n modulo 2 pi
        for n in [5usize, 9] {
            let c = SosCoefficients::derive(n).unwrap();
            let step = (n as f64 - 1.0) * PI / n as f64;
            for i in 1..n {
                let diff = reduce_angle(c.phi_at(i + 1) - c.phi_at(i) - step);
                assert!(diff.abs() < 1e-12, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn stabilizer_coefficients_match_reference() {
        // 50-digit reference evaluations of the closed forms
        let s = solve_stabilizer_coeffs(5, 1).unwrap();
        assert!((s.a - -4.2360679774997897).abs() < 1e-12);
        assert!((s.b / s.a - 0.6180339887498949).abs() < 1e-12);
        assert_eq!(s.b, s.b_prime);

        let s2 = solve_stabilizer_coeffs(5, 2).unwrap();
        assert!((s2.a - 4.2360679774997897).abs() < 1e-12);
        assert!((s2.b - -6.854101966249685).abs() < 1e-12);

        let s9 = solve_stabilizer_coeffs(9, 1).unwrap();
        assert!((s9.a - -15.581718738763179).abs() < 1e-11);
        assert!((s9.b / s9.a - 0.5320888862379561).abs() < 1e-12);

        assert!(matches!(
            solve_stabilizer_coeffs(5, 3),
            Err(Error::BadK { .. })
        ));
    }

    #[test]
    fn stabilizer_coefficients_stabilize_canonical() {
        for n in [5usize, 9, 17] {
            let r = canonical(n).unwrap();
            let a_ops = r.observables();
            for k in 1..=(n - 1) / 2 {
                let s = solve_stabilizer_coeffs(n, k).unwrap();
                for i in 1..=n as isize {
                    let combo = &(&a_ops[cyc(i, n)].scale(s.a)
                        + &a_ops[cyc(i + k as isize, n)].scale(s.b))
                        + &a_ops[cyc(i - k as isize, n)].scale(s.b_prime);
                    let resid = combo.matvec(&r.psi).sub(&r.psi).norm();
                    assert!(resid <= 1e-10, "n={n} k={k} i={i}: {resid:e}");
                }
            }
        }
    }

    #[test]
    fn state_and_translates_span_the_qutrit_space() {
        let r = canonical(5).unwrap();
        let a = r.observables();
        let candidates = [r.psi.clone(), a[0].matvec(&r.psi), a[2].matvec(&r.psi)];
        let basis = orthonormal_basis(&candidates, 1e-8);
        assert_eq!(basis.len(), 3);
        // independent route: the 3x3 Gram determinant is bounded away
        // from zero
        let g = |i: usize, j: usize| candidates[i].dot(&candidates[j]);
        let det = g(0, 0) * (g(1, 1) * g(2, 2) - g(1, 2) * g(2, 1))
            - g(0, 1) * (g(1, 0) * g(2, 2) - g(1, 2) * g(2, 0))
            + g(0, 2) * (g(1, 0) * g(2, 1) - g(1, 1) * g(2, 0));
        assert!(det.re > 1e-3, "Gram determinant {det}");
        assert!(det.im.abs() < 1e-12);
    }

    #[test]
    fn stabilizer_matrix_identity_inputs() {
        let c = SosCoefficients::derive(5).unwrap();
        let eye = vec![ComplexMatrix::identity(3); 5];
        let m = stabilizer_matrix(&c, &eye, 1, 1).unwrap();
        let expect = ComplexMatrix::identity(3).scale(c.alpha_bar);
        assert!((&m - &expect).frobenius_norm() < 1e-12);
    }

    #[test]
    fn stabilizer_matrix_fixes_canonical_state() {
        for n in [5usize, 9, 17] {
            let c = SosCoefficients::derive(n).unwrap();
            let r = canonical(n).unwrap();
            let a_ops = r.observables();
            for i in 1..=n {
                for &k in c.c.keys() {
                    let m = stabilizer_matrix(&c, &a_ops, i, k).unwrap();
                    let resid = m.matvec(&r.psi).sub(&r.psi).norm();
                    assert!(resid <= 1e-10, "n={n} i={i} k={k}: {resid:e}");
                }
            }
        }
    }

    #[test]
    fn stabilizer_k1_rescaling_equivalence() {
        // alpha_bar (1-2 beta_1) = 1/(1-2 alpha): the k=1 stabilizer is the
        // three-term stabilization relation in disguise
        let c = SosCoefficients::derive(9).unwrap();
        let scale = c.alpha_bar * (1.0 - 2.0 * c.beta_at(1));
        assert!((scale - 1.0 / (1.0 - 2.0 * c.alpha)).abs() < 1e-12);
        let ratio = c.beta_at(1) / (1.0 - 2.0 * c.beta_at(1));
        assert!((ratio - c.alpha).abs() < 1e-12);
    }

    #[test]
    fn embed_identity_is_noop() {
        let r = canonical(5).unwrap();
        let eye = ComplexMatrix::identity(3);
        let e = embed(&r, 0, Some(&eye), 0).unwrap();
        assert!(e.psi.sub(&r.psi).norm() < 1e-15);
        for (a, b) in e.effects.iter().zip(&r.effects) {
            assert!((a - b).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn embed_preserves_expectations() {
        let r = canonical(9).unwrap();
        let e = embed(&r, 2, None, 42).unwrap();
        e.validate().unwrap();
        assert_eq!(e.dim, 5);
        for (f_orig, f_emb) in r.effects.iter().zip(&e.effects) {
            let orig = f_orig.expectation(&r.psi).re;
            let emb = f_emb.expectation(&e.psi).re;
            assert!((orig - emb).abs() < 1e-12);
        }
    }

    #[test]
    fn embed_is_deterministic_and_checks_unitarity() {
        let r = canonical(5).unwrap();
        let a = embed(&r, 1, None, 7).unwrap();
        let b = embed(&r, 1, None, 7).unwrap();
        for (x, y) in a.effects.iter().zip(&b.effects) {
            assert!((x - y).frobenius_norm() == 0.0);
        }
        let c = embed(&r, 1, None, 8).unwrap();
        assert!((&a.effects[0] - &c.effects[0]).frobenius_norm() > 1e-6);

        let not_unitary = ComplexMatrix::identity(4).scale(2.0);
        assert!(matches!(
            embed(&r, 1, Some(&not_unitary), 0),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2usize, 4, 6] {
            let u = haar_unitary(dim, &mut rng);
            assert!(u.unitary_defect() < 1e-12);
        }
    }

    #[test]
    fn random_effect_spectrum_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for dim in [1usize, 2, 4] {
            let f = random_effect(dim, &mut rng);
            let (values, _) = hermitian_eig(&f).unwrap();
            for v in values {
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }
}
