//! Exact classical (noncontextual-value) bounds by exhaustive ±1
//! assignment over the cycle.
//!
//! Enumeration walks a Gray code so each step flips a single spin and
//! updates only the two touched pair products and one single term, which
//! keeps 2^n sweeps cheap up to the n = 26 budget.

use serde::Serialize;

use crate::coefficients::SosCoefficients;
use crate::{Error, Result};

/// Enumeration budget: 2^26 assignments.
pub const MAX_BRUTE_N: usize = 26;

/// A cyclic ±1 expression `sum_i pair_i a_i a_{i+1} + sum_i single_i a_i`.
///
/// `pair_coeffs[i]` is the merged weight of the product `a_i a_{i+1}`,
/// i.e. both sequential orders folded together (classically they
/// coincide). The `penalized` flag records whether the expression came
/// from the penalized inequality; the penalties vanish on deterministic
/// assignments, so it does not affect the maximum.
#[derive(Clone, Debug, Serialize)]
pub struct CycleExpression {
    pub n: usize,
    pub pair_coeffs: Vec<f64>,
    pub single_coeffs: Vec<f64>,
    pub penalized: bool,
}

impl CycleExpression {
    /// The modified inequality: pair weight -1, single weight -gamma.
    pub fn modified(coeffs: &SosCoefficients, penalized: bool) -> Self {
        Self {
            n: coeffs.n,
            pair_coeffs: vec![-1.0; coeffs.n],
            single_coeffs: vec![-coeffs.gamma; coeffs.n],
            penalized,
        }
    }

    /// The unmodified n-cycle KCBS expression: pair weight -1, no singles.
    pub fn kcbs(n: usize) -> Self {
        Self {
            n,
            pair_coeffs: vec![-1.0; n],
            single_coeffs: vec![0.0; n],
            penalized: false,
        }
    }

    /// Value of the expression on a fixed ±1 assignment.
    pub fn evaluate(&self, assignment: &[i8]) -> f64 {
        let n = self.n;
        let mut value = 0.0;
        for i in 0..n {
            let ai = assignment[i] as f64;
            value += self.pair_coeffs[i] * ai * assignment[(i + 1) % n] as f64;
            value += self.single_coeffs[i] * ai;
        }
        value
    }
}

/// Result of checking the closed-form classical bound against brute force.
#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub brute: f64,
    pub formula: f64,
    pub k_star: usize,
    pub assignment: Vec<i8>,
}

/// Maximize the expression over all 2^n assignments.
///
/// Ties are broken toward the smallest binary encoding, where bit i of the
/// encoding is set iff a_{i+1} = -1.
pub fn brute_force(expr: &CycleExpression) -> Result<(f64, Vec<i8>)> {
    let n = expr.n;
    if n > MAX_BRUTE_N {
        return Err(Error::TooLarge { n, max: MAX_BRUTE_N });
    }
    assert!(n >= 2, "cycle expression needs n >= 2");
    assert_eq!(expr.pair_coeffs.len(), n, "pair coefficient map incomplete");
    assert_eq!(expr.single_coeffs.len(), n, "single coefficient map incomplete");

    let mut spins = vec![1.0f64; n];
    let mut value: f64 =
        expr.pair_coeffs.iter().sum::<f64>() + expr.single_coeffs.iter().sum::<f64>();
    let mut best = value;
    let mut best_code: u64 = 0;

    for idx in 1u64..(1 << n) {
        let gray = idx ^ (idx >> 1);
        let prev = (idx - 1) ^ ((idx - 1) >> 1);
        let j = (gray ^ prev).trailing_zeros() as usize;
        let jm = (j + n - 1) % n;
        let jp = (j + 1) % n;
        // terms that contain a_j, evaluated before the flip
        let touched = expr.pair_coeffs[jm] * spins[jm] * spins[j]
            + expr.pair_coeffs[j] * spins[j] * spins[jp]
            + expr.single_coeffs[j] * spins[j];
        value -= 2.0 * touched;
        spins[j] = -spins[j];
        if value > best || (value == best && gray < best_code) {
            best = value;
            best_code = gray;
        }
    }

    let assignment: Vec<i8> = (0..n)
        .map(|i| if best_code >> i & 1 == 1 { -1 } else { 1 })
        .collect();
    // the incremental value can carry rounding from 2^n updates; report
    // the exact re-evaluation at the winning assignment
    Ok((expr.evaluate(&assignment), assignment))
}

/// Brute-force the modified expression and compare with n + gamma - 2.
pub fn bound_formula_check(coeffs: &SosCoefficients) -> Result<BoundCheck> {
    let expr = CycleExpression::modified(coeffs, false);
    let (brute, assignment) = brute_force(&expr)?;
    let k_star = assignment.iter().filter(|&&a| a == -1).count();
    Ok(BoundCheck {
        brute,
        formula: coeffs.n as f64 + coeffs.gamma - 2.0,
        k_star,
        assignment,
    })
}
