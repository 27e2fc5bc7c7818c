//! Closed-form scalars of the modified n-cycle construction, n = 2^m + 1.
//!
//! Everything downstream — stabilizer operators, inequality operators, SOS
//! certificates, bounds — is driven by the numbers derived here: the
//! geometry angle `alpha`, the stabilizer weights `beta_k` and `alpha_bar`,
//! the square coefficients `c_k` supported on powers of two, the effect
//! penalty weight `d`, the linear-term weight `gamma`, and the quantum and
//! classical bounds `eta_q`, `eta_c`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

/// Largest exponent m accepted by [`SosCoefficients::derive`]; beyond this
/// the secant products grow enough to start eating mantissa digits, so the
/// unrestricted constructor must be chosen explicitly.
pub const DEFAULT_MAX_M: u32 = 5;

/// All derived scalars for a given n = 2^m + 1.
#[derive(Clone, Debug, Serialize)]
pub struct SosCoefficients {
    pub n: usize,
    pub m: u32,
    /// alpha = sec(pi/n)/2; always > 1/2 for finite n.
    pub alpha: f64,
    /// phi[i-1] is the cycle angle of vector i, reduced to (-pi, pi].
    pub phi: Vec<f64>,
    /// beta[k-1] for distances k = 1..(n-1)/2.
    pub beta: Vec<f64>,
    /// alpha_bar = (1+2 alpha)/(1-2 alpha); negative since alpha > 1/2.
    pub alpha_bar: f64,
    /// Square coefficients, supported exactly on k = 2^x, x = 0..m-1.
    pub c: BTreeMap<usize, f64>,
    /// Weight of the (1 - A_i^2) squares.
    pub d: f64,
    /// Weight of the linear term in the inequality.
    pub gamma: f64,
    /// Maximal quantum value of the modified expression.
    pub eta_q: f64,
    /// Maximal classical value, n + gamma - 2.
    pub eta_c: f64,
}

/// Reduce an angle modulo 2*pi into (-pi, pi].
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Unreduced cycle angle phi_i = (n-1) pi i / n.
fn phi_raw(n: usize, i: usize) -> f64 {
    (n as f64 - 1.0) / n as f64 * PI * i as f64
}

fn beta_of(n: usize, k: usize) -> f64 {
    1.0 / (2.0 * (1.0 - phi_raw(n, k).cos()))
}

fn sec_phi(n: usize, k: usize) -> f64 {
    1.0 / phi_raw(n, k).cos()
}

/// Decompose n as 2^m + 1, m >= 2.
fn exponent_of(n: usize) -> Option<u32> {
    if n < 5 {
        return None;
    }
    let p = n - 1;
    if p.is_power_of_two() {
        Some(p.trailing_zeros())
    } else {
        None
    }
}

impl SosCoefficients {
    /// Derive every scalar for n = 2^m + 1 with m in 2..=[`DEFAULT_MAX_M`].
    pub fn derive(n: usize) -> Result<Self> {
        let coeffs = Self::derive_unrestricted(n)?;
        if coeffs.m > DEFAULT_MAX_M {
            return Err(Error::BadN {
                n,
                reason: "m > 5 needs the unrestricted constructor (conditioning degrades)",
            });
        }
        Ok(coeffs)
    }

    /// Same derivation without the m cap. Secant products grow roughly
    /// like (2n/pi)^(m-1), so expect fewer trustworthy digits as m grows.
    pub fn derive_unrestricted(n: usize) -> Result<Self> {
        let m = exponent_of(n).ok_or(Error::BadN {
            n,
            reason: "n must be 2^m + 1 with m >= 2",
        })?;

        let alpha = 0.5 / (PI / n as f64).cos();
        let alpha_bar = (1.0 + 2.0 * alpha) / (1.0 - 2.0 * alpha);
        let half = (n - 1) / 2;
        let beta: Vec<f64> = (1..=half).map(|k| beta_of(n, k)).collect();
        let phi: Vec<f64> = (1..=n).map(|i| reduce_angle(phi_raw(n, i))).collect();

        // Secant product over j = 1..=x, accumulated from the largest
        // factor down to limit rounding.
        let sec_product = |x: u32| -> f64 {
            (1..=x)
                .rev()
                .map(|j| sec_phi(n, 1 << j))
                .product::<f64>()
        };

        let b1 = beta[0];
        let exp2 = |p: u32| (1u64 << p) as f64;
        let c1 = exp2(2 * m - 3) / alpha_bar.powi(2)
            / (exp2(2 * m - 1) * b1 * (1.0 - 2.0 * b1) + b1 * b1 * sec_product(m - 1));

        let mut c = BTreeMap::new();
        c.insert(1, c1);
        for x in 1..m {
            let k = 1usize << x;
            let bk = beta[k - 1];
            let ratio = (b1 / (exp2(x) * bk)).powi(2) * sec_product(x);
            c.insert(k, c1 * ratio);
        }

        let weighted: f64 = c
            .iter()
            .map(|(&k, &ck)| {
                let b = beta[k - 1];
                ck * (1.0 + 6.0 * b * b - 4.0 * b)
            })
            .sum();
        let sum_c: f64 = c.values().sum();
        let d = alpha_bar.powi(2) * weighted;
        let gamma = -2.0 * alpha_bar * sum_c;
        let eta_q = (n as f64)
            * alpha_bar.powi(2)
            * c.iter()
                .map(|(&k, &ck)| {
                    let b = beta[k - 1];
                    ck * (1.0 / alpha_bar.powi(2) + 1.0 + 6.0 * b * b - 4.0 * b)
                })
                .sum::<f64>();
        let eta_c = n as f64 + gamma - 2.0;

        Ok(Self {
            n,
            m,
            alpha,
            phi,
            beta,
            alpha_bar,
            c,
            d,
            gamma,
            eta_q,
            eta_c,
        })
    }

    /// beta_k for a 1-based distance k.
    pub fn beta_at(&self, k: usize) -> f64 {
        self.beta[k - 1]
    }

    /// c_k, zero off the power-of-two support.
    pub fn c_at(&self, k: usize) -> f64 {
        self.c.get(&k).copied().unwrap_or(0.0)
    }

    /// Reduced angle phi_i for a 1-based index, taken modulo n.
    pub fn phi_at(&self, i: usize) -> f64 {
        self.phi[(i - 1) % self.n]
    }
}

/// Maximal classical value of the modified expression, n + gamma - 2.
pub fn eta_classical(coeffs: &SosCoefficients) -> f64 {
    coeffs.n as f64 + coeffs.gamma - 2.0
}

/// Classical and quantum values of the unmodified n-cycle KCBS expression
/// for odd n >= 5: classical n - 2, quantum n(3cos(pi/n) - 1)/(1 + cos(pi/n)).
pub fn kcbs_reference(n: usize) -> Result<(f64, f64)> {
    if n < 5 || n % 2 == 0 {
        return Err(Error::BadN {
            n,
            reason: "KCBS reference values need odd n >= 5",
        });
    }
    let classical = n as f64 - 2.0;
    let cosn = (PI / n as f64).cos();
    let quantum = n as f64 * (3.0 * cosn - 1.0) / (1.0 + cosn);
    Ok((classical, quantum))
}

/// Coefficient of {A_i, A_{i+k}} in the expanded sum of squares.
///
/// The construction tunes the c_k so this is 1/2 at distance 1 and
/// cancels to zero at every other distance.
pub fn anticommutator_coefficient(coeffs: &SosCoefficients, k: usize) -> Result<f64> {
    let half = (coeffs.n - 1) / 2;
    if k < 1 || k > half {
        return Err(Error::BadK { k, max: half });
    }
    let bracket = if k == 1 {
        let b1 = coeffs.beta_at(1);
        let bh = coeffs.beta_at(half);
        2.0 * coeffs.c_at(1) * b1 * (1.0 - 2.0 * b1) + coeffs.c_at(half) * bh * bh
    } else {
        // the squared term at distance k folds back from distance
        // f = k/2 (k even) or (n-k)/2 (k odd)
        let f = if k % 2 == 0 { k / 2 } else { (coeffs.n - k) / 2 };
        let bk = coeffs.beta_at(k);
        let bf = coeffs.beta_at(f);
        2.0 * coeffs.c_at(k) * bk * (1.0 - 2.0 * bk) + coeffs.c_at(f) * bf * bf
    };
    Ok(coeffs.alpha_bar.powi(2) * bracket)
}
