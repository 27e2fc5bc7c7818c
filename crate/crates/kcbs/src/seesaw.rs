//! Alternating (see-saw) optimization of the cycle operator over the
//! state and each observable, giving monotone lower bounds that confirm
//! the quantum bound is attainable.
//!
//! The objective is linear in each observable: with the state fixed, the
//! contribution of A_i is tr(A_i H) for an effective Hermitian H built
//! from the two neighbours and the linear weight, and the maximizer over
//! -1 ≤ A_i ≤ 1 is the sign operator of H. The state step takes the top
//! eigenvector. Both steps never decrease the value; converged
//! observables have ±1 spectrum, so the attained value is also witnessed
//! by projective effects.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coefficients::SosCoefficients;
use crate::numerics::{hermitian_eig, ComplexMatrix, ComplexVector};
use crate::operators::build_bn;
use crate::realization::{cyc, haar_state, haar_unitary, Realization};
use crate::{Error, Result};

/// Stop a restart once the per-sweep improvement drops below this.
pub const CONVERGENCE_EPS: f64 = 1e-12;

/// Full record of a see-saw run.
#[derive(Clone, Debug, Serialize)]
pub struct SeesawTrace {
    pub n: usize,
    pub dim: usize,
    pub restarts: usize,
    /// Sweeps used by each restart.
    pub iterations: Vec<usize>,
    /// Value after each sweep, per restart; nondecreasing within rounding.
    pub values: Vec<Vec<f64>>,
    pub best_restart: usize,
    pub best_value: f64,
    pub best_realization: Realization,
}

/// Top eigenvector of a Hermitian operator and its eigenvalue.
pub fn optimal_state(b: &ComplexMatrix) -> Result<(ComplexVector, f64)> {
    let (values, vectors) = hermitian_eig(b)?;
    Ok((vectors[0].clone(), values[0]))
}

/// Sign operator of a Hermitian matrix: +1 on the non-negative
/// eigenspace (zero eigenvalues break toward +1), -1 elsewhere.
pub fn sign_operator(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eig(h)?;
    let mut a = ComplexMatrix::zeros(h.rows(), h.cols());
    for (l, v) in values.iter().zip(&vectors) {
        let sign = if *l >= 0.0 { 1.0 } else { -1.0 };
        a = &a + &v.outer(v).scale(sign);
    }
    Ok(a.hermitian_part())
}

/// The exact maximizer of the objective over observable i (1-based) with
/// the state and the other observables held fixed.
pub fn optimal_observable(
    i: usize,
    psi: &ComplexVector,
    a_ops: &[ComplexMatrix],
    coeffs: &SosCoefficients,
) -> Result<ComplexMatrix> {
    let n = coeffs.n;
    if a_ops.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {n} observables, got {}",
            a_ops.len()
        )));
    }
    let rho = psi.outer(psi);
    let neighbours = &a_ops[cyc(i as isize - 1, n)] + &a_ops[cyc(i as isize + 1, n)];
    let h = (&(&(&neighbours * &rho) + &(&rho * &neighbours)).scale(-0.5)
        - &rho.scale(coeffs.gamma))
        .hermitian_part();
    sign_operator(&h)
}

fn random_observable(dim: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let u = haar_unitary(dim, rng);
    let diag: Vec<f64> = (0..dim)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect();
    (&(&u * &ComplexMatrix::from_diagonal(&diag)) * &u.adjoint()).hermitian_part()
}

/// Run `restarts` independent see-saw optimizations of the n-cycle
/// operator in the given dimension and keep the best.
pub fn seesaw(
    n: usize,
    dim: usize,
    restarts: usize,
    max_iters: usize,
    seed: u64,
) -> Result<SeesawTrace> {
    if dim < 3 {
        return Err(Error::DimensionMismatch(format!(
            "see-saw needs dim >= 3, got {dim}"
        )));
    }
    let coeffs = SosCoefficients::derive(n)?;
    let mut trace = SeesawTrace {
        n,
        dim,
        restarts,
        iterations: Vec::with_capacity(restarts),
        values: Vec::with_capacity(restarts),
        best_restart: 0,
        best_value: f64::NEG_INFINITY,
        best_realization: Realization {
            dim,
            psi: ComplexVector::basis(dim, 0),
            effects: vec![ComplexMatrix::zeros(dim, dim); n],
        },
    };

    for restart in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let mut a_ops: Vec<ComplexMatrix> =
            (0..n).map(|_| random_observable(dim, &mut rng)).collect();
        let mut psi = haar_state(dim, &mut rng);
        let mut values = Vec::new();
        let mut previous = f64::NEG_INFINITY;

        for _sweep in 0..max_iters {
            let b = build_bn(&coeffs, &a_ops)?;
            let (state, _) = optimal_state(&b)?;
            psi = state;
            for i in 1..=n {
                a_ops[i - 1] = optimal_observable(i, &psi, &a_ops, &coeffs)?;
            }
            let value = build_bn(&coeffs, &a_ops)?.expectation(&psi).re;
            values.push(value);
            if value - previous < CONVERGENCE_EPS {
                previous = value;
                break;
            }
            previous = value;
        }

        if previous > trace.best_value {
            trace.best_value = previous;
            trace.best_restart = restart;
            let eye = ComplexMatrix::identity(dim);
            trace.best_realization = Realization {
                dim,
                psi: psi.clone(),
                effects: a_ops.iter().map(|a| (a + &eye).scale(0.5)).collect(),
            };
        }
        trace.iterations.push(values.len());
        trace.values.push(values);
    }
    Ok(trace)
}
