//! Randomized invariants: decomposition contracts, the SOS identity on
//! arbitrary valid inputs, covariance, and the brute-force oracle.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kcbs::classical::{brute_force, CycleExpression};
use kcbs::coefficients::SosCoefficients;
use kcbs::numerics::{hermitian_eig, orthonormal_basis, psd_sqrt, ComplexMatrix, ComplexVector};
use kcbs::operators::{build_bn, sos_certificate_bn};
use kcbs::realization::{canonical, haar_unitary, random_effect};
use kcbs::sequential::{evaluate_expression, exact_statistics, operator_value};
use num_complex::Complex64;

fn hermitian_from(dim: usize, entries: &[f64]) -> ComplexMatrix {
    let raw = ComplexMatrix::from_fn(dim, dim, |i, j| {
        let k = 2 * (i * dim + j);
        Complex64::new(entries[k], entries[k + 1])
    });
    raw.hermitian_part()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eig_reconstructs_hermitian(
        dim in 2usize..7,
        entries in prop::collection::vec(-1.0f64..1.0, 2 * 7 * 7),
    ) {
        let a = hermitian_from(dim, &entries);
        let (values, vectors) = hermitian_eig(&a).unwrap();
        let mut recon = ComplexMatrix::zeros(dim, dim);
        for (l, v) in values.iter().zip(&vectors) {
            recon = &recon + &v.outer(v).scale(*l);
        }
        let scale = a.frobenius_norm().max(1.0);
        prop_assert!((&recon - &a).frobenius_norm() <= 1e-9 * scale);
        for (l, v) in values.iter().zip(&vectors) {
            prop_assert!(a.matvec(v).sub(&v.scale(*l)).norm() <= 1e-10 * scale);
        }
        for w in values.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn psd_sqrt_squares_to_input(dim in 2usize..6, seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_effect(dim, &mut rng);
        let s = psd_sqrt(&f).unwrap();
        prop_assert!(s.is_hermitian());
        let (values, _) = hermitian_eig(&s).unwrap();
        prop_assert!(values.iter().all(|&l| l >= -1e-12));
        prop_assert!(
            (&(&s * &s) - &f).frobenius_norm() <= 1e-9 * f.frobenius_norm().max(1.0)
        );
    }

    #[test]
    fn orthonormal_basis_spans_inputs(
        dim in 2usize..6,
        count in 1usize..6,
        entries in prop::collection::vec(-1.0f64..1.0, 2 * 6 * 6),
    ) {
        let vectors: Vec<ComplexVector> = (0..count)
            .map(|k| {
                ComplexVector::from_fn(dim, |i| {
                    let idx = 2 * (k * dim + i);
                    Complex64::new(entries[idx], entries[idx + 1])
                })
            })
            .collect();
        let basis = orthonormal_basis(&vectors, 1e-9);
        for (i, u) in basis.iter().enumerate() {
            for (j, w) in basis.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((u.dot(w).norm() - expect).abs() < 1e-10);
            }
        }
        // every input is reproduced by its expansion in the basis
        for v in &vectors {
            let mut recon = ComplexVector::zeros(dim);
            for u in &basis {
                recon = recon.add(&u.scale_complex(u.dot(v)));
            }
            prop_assert!(recon.sub(v).norm() <= 1e-7 * v.norm().max(1.0));
        }
    }

    #[test]
    fn sos_identity_on_random_effects(
        n_pick in 0usize..2,
        dim in 3usize..7,
        seed in 0u64..10_000,
    ) {
        let n = [5usize, 9][n_pick];
        let coeffs = SosCoefficients::derive(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let effects: Vec<_> = (0..n).map(|_| random_effect(dim, &mut rng)).collect();
        let cert = sos_certificate_bn(&coeffs, &effects).unwrap();
        prop_assert!(cert.residual <= 1e-9 * dim as f64, "residual {:e}", cert.residual);
    }

    #[test]
    fn cycle_operator_is_unitarily_covariant(seed in 0u64..10_000) {
        let coeffs = SosCoefficients::derive(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 4;
        let eye = ComplexMatrix::identity(dim);
        let a_ops: Vec<ComplexMatrix> = (0..5)
            .map(|_| &random_effect(dim, &mut rng).scale(2.0) - &eye)
            .collect();
        let u = haar_unitary(dim, &mut rng);
        let rotated: Vec<ComplexMatrix> =
            a_ops.iter().map(|a| &(&u * a) * &u.adjoint()).collect();
        let lhs = build_bn(&coeffs, &rotated).unwrap();
        let rhs = &(&u * &build_bn(&coeffs, &a_ops).unwrap()) * &u.adjoint();
        prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-10);
    }

    #[test]
    fn brute_force_matches_naive_oracle(
        n in 3usize..11,
        pair in prop::collection::vec(-3.0f64..3.0, 11),
        single in prop::collection::vec(-3.0f64..3.0, 11),
    ) {
        let expr = CycleExpression {
            n,
            pair_coeffs: pair[..n].to_vec(),
            single_coeffs: single[..n].to_vec(),
            penalized: false,
        };
        let mut naive: f64 = f64::NEG_INFINITY;
        for code in 0u64..(1 << n) {
            let assignment: Vec<i8> = (0..n)
                .map(|i| if code >> i & 1 == 1 { -1 } else { 1 })
                .collect();
            naive = naive.max(expr.evaluate(&assignment));
        }
        let (value, assignment) = brute_force(&expr).unwrap();
        prop_assert!((value - naive).abs() <= 1e-10);
        prop_assert!((expr.evaluate(&assignment) - value).abs() == 0.0);
    }

    #[test]
    fn projective_statistics_match_operator(seed in 0u64..10_000) {
        // rotated canonical stays projective and cyclically orthogonal, so
        // the sequential expression equals the operator expectation
        let coeffs = SosCoefficients::derive(5).unwrap();
        let base = canonical(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = haar_unitary(3, &mut rng);
        let r = kcbs::realization::Realization {
            dim: 3,
            psi: u.matvec(&base.psi),
            effects: base
                .effects
                .iter()
                .map(|f| (&(&u * f) * &u.adjoint()).hermitian_part())
                .collect(),
        };
        let stats = exact_statistics(&r).unwrap();
        for penalized in [false, true] {
            let expr = evaluate_expression(&stats, &coeffs, penalized).unwrap();
            let op = operator_value(&r, &coeffs, penalized).unwrap();
            prop_assert!((expr - op).abs() <= 1e-10);
        }
    }
}

#[test]
fn soundness_probe_suboptimal_realizations_fail() {
    // realizations whose expression value sits measurably below the
    // quantum bound must never pass the self test
    use kcbs::selftest::{self_test, DEFAULT_TOL};
    let coeffs = SosCoefficients::derive(5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    let mut tested = 0;
    for _ in 0..40 {
        let effects: Vec<_> = (0..5).map(|_| random_effect(3, &mut rng)).collect();
        let r = kcbs::realization::Realization {
            dim: 3,
            psi: kcbs::realization::haar_state(3, &mut rng),
            effects,
        };
        let value = operator_value(&r, &coeffs, true).unwrap();
        if value < coeffs.eta_q - 0.01 {
            tested += 1;
            assert!(
                !self_test(&r, &coeffs, DEFAULT_TOL).passed(),
                "suboptimal realization (value {value}) must fail"
            );
        }
    }
    assert!(tested >= 30, "random draws should be suboptimal");
}
