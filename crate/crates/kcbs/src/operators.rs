//! Inequality operators and their sum-of-squares certificates.
//!
//! The central identity is
//! `eta 1 - B = sum_k E_k† E_k`,
//! which holds as exact operator algebra for arbitrary Hermitian inputs
//! with spectrum in [-1, 1] and certifies eta as the quantum bound. Every
//! stored term is literally a square: the stabilizer terms are Hermitian,
//! the effect-defect terms are stored as PSD square roots.

use std::f64::consts::PI;

use crate::coefficients::SosCoefficients;
use crate::numerics::{hermitian_eig, psd_sqrt, ComplexMatrix};
use crate::realization::{cyc, stabilizer_matrix};
use crate::{Error, Result};

/// An SOS certificate: the bound, the term list, and the Frobenius
/// residual of `eta 1 - B - sum E†E`.
#[derive(Clone, Debug)]
pub struct SosCertificate {
    pub n: usize,
    pub eta: f64,
    pub terms: Vec<ComplexMatrix>,
    pub residual: f64,
}

impl SosCertificate {
    /// Largest violation of the stabilization relations `E_k psi = 0` on a
    /// given state; zero exactly at the maximal quantum value.
    pub fn max_state_residual(&self, psi: &crate::numerics::ComplexVector) -> f64 {
        self.terms
            .iter()
            .map(|e| e.matvec(psi).norm())
            .fold(0.0, f64::max)
    }

    /// Largest PSD defect over the stored squares `E_k† E_k`; a sanity
    /// figure that stays at rounding level by construction.
    pub fn max_term_violation(&self) -> f64 {
        self.terms
            .iter()
            .map(|e| {
                let sq = (&e.adjoint() * e).hermitian_part();
                let (values, _) = hermitian_eig(&sq).expect("E†E is Hermitian");
                (-values[values.len() - 1]).max(0.0)
            })
            .fold(0.0, f64::max)
    }
}

fn check_family(mats: &[ComplexMatrix], expected: usize) -> Result<usize> {
    if mats.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "expected {expected} matrices, got {}",
            mats.len()
        )));
    }
    let dim = mats[0].rows();
    for m in mats {
        if m.rows() != dim || m.cols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "matrices must all be {dim}x{dim}"
            )));
        }
    }
    Ok(dim)
}

/// Verify every eigenvalue of every matrix lies in [lo - 1e-8, hi + 1e-8].
fn check_spectra(mats: &[ComplexMatrix], lo: f64, hi: f64) -> Result<()> {
    for m in mats {
        let (values, _) = hermitian_eig(m)?;
        for &l in &values {
            if l < lo - 1e-8 || l > hi + 1e-8 {
                return Err(Error::EffectOutOfRange { eigenvalue: l });
            }
        }
    }
    Ok(())
}

fn anticommutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    &(a * b) + &(b * a)
}

/// `-1/2 sum_i {A_i, A_{i+1}} - gamma sum_i A_i` over a cyclic family.
fn cycle_operator(a_ops: &[ComplexMatrix], gamma: f64) -> ComplexMatrix {
    let n = a_ops.len();
    let dim = a_ops[0].rows();
    let mut b = ComplexMatrix::zeros(dim, dim);
    for i in 1..=n as isize {
        let ai = &a_ops[cyc(i, n)];
        let next = &a_ops[cyc(i + 1, n)];
        b = &b - &anticommutator(ai, next).scale(0.5);
        b = &b - &ai.scale(gamma);
    }
    b
}

/// The pentagon operator `-1/2 sum {A_i, A_{i+1}} - alpha^2 sum A_i`.
pub fn build_b5(a_ops: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    check_family(a_ops, 5)?;
    let alpha = 0.5 / (PI / 5.0).cos();
    Ok(cycle_operator(a_ops, alpha * alpha))
}

/// Pentagon SOS certificate with the explicit closed-form weights
/// alpha^5/5, alpha^8/10 and 1/(2 alpha).
pub fn sos_certificate_b5(a_ops: &[ComplexMatrix]) -> Result<SosCertificate> {
    let dim = check_family(a_ops, 5)?;
    check_spectra(a_ops, -1.0, 1.0)?;
    let alpha = 0.5 / (PI / 5.0).cos();
    let eye = ComplexMatrix::identity(dim);

    let mut terms = Vec::with_capacity(15);
    for i in 1..=5isize {
        // M_{i,1} = -(1/alpha^3)(A_i + alpha A_{i-1} + alpha A_{i+1})
        let m1 = (&(&a_ops[cyc(i, 5)] + &a_ops[cyc(i - 1, 5)].scale(alpha))
            + &a_ops[cyc(i + 1, 5)].scale(alpha))
            .scale(-1.0 / alpha.powi(3));
        terms.push((&eye - &m1).scale((alpha.powi(5) / 5.0).sqrt()));
    }
    for i in 1..=5isize {
        // M_{i,2} = -(1/alpha^4)(-alpha A_i + A_{i-2} + A_{i+2})
        let m2 = (&(&a_ops[cyc(i, 5)].scale(-alpha) + &a_ops[cyc(i - 2, 5)])
            + &a_ops[cyc(i + 2, 5)])
            .scale(-1.0 / alpha.powi(4));
        terms.push((&eye - &m2).scale((alpha.powi(8) / 10.0).sqrt()));
    }
    for a in a_ops {
        let defect = (&eye - &(a * a)).scale(1.0 / (2.0 * alpha));
        terms.push(psd_sqrt(&defect.hermitian_part())?);
    }

    let eta = 3.0 * (1.0 + alpha * alpha);
    let b = build_b5(a_ops)?;
    Ok(SosCertificate {
        n: 5,
        eta,
        residual: certificate_residual(eta, &b, &terms),
        terms,
    })
}

/// The modified n-cycle operator `-1/2 sum {A_i, A_{i+1}} - gamma sum A_i`.
pub fn build_bn(coeffs: &SosCoefficients, a_ops: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    check_family(a_ops, coeffs.n)?;
    Ok(cycle_operator(a_ops, coeffs.gamma))
}

/// General SOS certificate from effects: stabilizer squares
/// `sqrt(c_k) (1 - M_{i,k})` on the power-of-two distances plus PSD roots
/// of `d (1 - A_i^2)`.
pub fn sos_certificate_bn(
    coeffs: &SosCoefficients,
    effects: &[ComplexMatrix],
) -> Result<SosCertificate> {
    let dim = check_family(effects, coeffs.n)?;
    check_spectra(effects, 0.0, 1.0)?;
    let eye = ComplexMatrix::identity(dim);
    let a_ops: Vec<ComplexMatrix> = effects.iter().map(|f| &f.scale(2.0) - &eye).collect();

    let mut terms = Vec::new();
    for (&k, &ck) in &coeffs.c {
        for i in 1..=coeffs.n {
            let m = stabilizer_matrix(coeffs, &a_ops, i, k)?;
            terms.push((&eye - &m).scale(ck.sqrt()));
        }
    }
    for a in &a_ops {
        let defect = (&eye - &(a * a)).scale(coeffs.d);
        terms.push(psd_sqrt(&defect.hermitian_part())?);
    }

    let b = build_bn(coeffs, &a_ops)?;
    Ok(SosCertificate {
        n: coeffs.n,
        eta: coeffs.eta_q,
        residual: certificate_residual(coeffs.eta_q, &b, &terms),
        terms,
    })
}

/// The penalized operator: the cycle operator minus the sequential
/// double-click penalties `(K_i K_{i±1})† (K_i K_{i±1})` with K = sqrt(F).
/// For cyclically orthogonal projective effects the penalties vanish.
pub fn build_btilde(coeffs: &SosCoefficients, effects: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let dim = check_family(effects, coeffs.n)?;
    check_spectra(effects, 0.0, 1.0)?;
    let eye = ComplexMatrix::identity(dim);
    let a_ops: Vec<ComplexMatrix> = effects.iter().map(|f| &f.scale(2.0) - &eye).collect();
    let kraus: Vec<ComplexMatrix> = effects
        .iter()
        .map(psd_sqrt)
        .collect::<Result<_>>()?;
    let mut b = cycle_operator(&a_ops, coeffs.gamma);
    let n = coeffs.n;
    for i in 1..=n as isize {
        for off in [1isize, -1] {
            let prod = &kraus[cyc(i, n)] * &kraus[cyc(i + off, n)];
            b = &b - &(&prod.adjoint() * &prod);
        }
    }
    Ok(b.hermitian_part())
}

fn certificate_residual(eta: f64, b: &ComplexMatrix, terms: &[ComplexMatrix]) -> f64 {
    let dim = b.rows();
    let mut shifted = &ComplexMatrix::identity(dim).scale(eta) - b;
    for e in terms {
        shifted = &shifted - &(&e.adjoint() * e);
    }
    shifted.frobenius_norm()
}
