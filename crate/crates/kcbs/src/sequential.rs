//! Preparation → two-sequential-measurements protocol and the evaluation
//! of the inequality from its statistics.
//!
//! A context is an ordered pair of settings (first, second) with
//! second = first ± 1 on the cycle. The '+' outcome updates the state by
//! the Lüders rule K = sqrt(F); the '-' outcome uses sqrt(1 - F), with an
//! optional unitary twist hook for probing that choice.
//!
//! Exact tables come from the Kraus chain directly. Sampled tables draw
//! independent protocol runs per context from a per-context counter-based
//! stream, so contexts are reproducible in isolation and safe to
//! parallelize.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::coefficients::SosCoefficients;
use crate::numerics::{psd_sqrt, ComplexMatrix};
use crate::operators::{build_bn, build_btilde};
use crate::realization::{cyc, Realization};
use crate::{Error, Result};

/// Outcome index: 0 ↔ +1, 1 ↔ -1.
fn outcome_slot(a: i8) -> usize {
    assert!(a == 1 || a == -1, "outcomes are ±1");
    if a == 1 {
        0
    } else {
        1
    }
}

/// Joint and marginal outcome tables of the sequential protocol.
#[derive(Clone, Debug)]
pub struct SequentialStatistics {
    pub n: usize,
    /// `None` for exact tables, `Some(shots)` for sampled frequencies.
    pub shots: Option<u64>,
    /// (first, second) → [p(++), p(+-), p(-+), p(--)], 1-based settings.
    joint: BTreeMap<(usize, usize), [f64; 4]>,
    /// first setting → [p(+), p(-)].
    marginal: BTreeMap<usize, [f64; 2]>,
}

impl SequentialStatistics {
    /// p(a, b | first i, then j); `None` when the context is not recorded.
    pub fn joint(&self, i: usize, j: usize, a: i8, b: i8) -> Option<f64> {
        self.joint
            .get(&(i, j))
            .map(|t| t[outcome_slot(a) * 2 + outcome_slot(b)])
    }

    /// p(a | first measurement i).
    pub fn marginal(&self, i: usize, a: i8) -> Option<f64> {
        self.marginal.get(&i).map(|t| t[outcome_slot(a)])
    }

    /// Sequential correlator ⟨A_i A_j⟩ for first i, then j.
    pub fn correlator(&self, i: usize, j: usize) -> Result<f64> {
        let table = self
            .joint
            .get(&(i, j))
            .ok_or(Error::MissingContext { first: i, second: j })?;
        Ok(table[0] - table[1] - table[2] + table[3])
    }

    /// Single-measurement expectation ⟨A_i⟩.
    pub fn single(&self, i: usize) -> Result<f64> {
        let table = self
            .marginal
            .get(&i)
            .ok_or(Error::MissingContext { first: i, second: i })?;
        Ok(table[0] - table[1])
    }

    /// Ordered contexts present in the table.
    pub fn contexts(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.joint.keys().copied()
    }
}

impl Serialize for SequentialStatistics {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct JointRow {
            first: usize,
            second: usize,
            pp: f64,
            pm: f64,
            mp: f64,
            mm: f64,
        }
        #[derive(Serialize)]
        struct MarginalRow {
            setting: usize,
            p_plus: f64,
            p_minus: f64,
        }
        let joint: Vec<JointRow> = self
            .joint
            .iter()
            .map(|(&(first, second), t)| JointRow {
                first,
                second,
                pp: t[0],
                pm: t[1],
                mp: t[2],
                mm: t[3],
            })
            .collect();
        let marginal: Vec<MarginalRow> = self
            .marginal
            .iter()
            .map(|(&setting, t)| MarginalRow {
                setting,
                p_plus: t[0],
                p_minus: t[1],
            })
            .collect();
        let mut s = ser.serialize_struct("SequentialStatistics", 4)?;
        s.serialize_field("n", &self.n)?;
        s.serialize_field("shots", &self.shots)?;
        s.serialize_field("joint", &joint)?;
        s.serialize_field("marginal", &marginal)?;
        s.end()
    }
}

/// The state-update rule: which Kraus operator each outcome applies.
#[derive(Clone, Debug, Default)]
pub struct Instrument {
    minus_twist: Option<ComplexMatrix>,
}

impl Instrument {
    /// Symmetric Lüders instrument: K_+ = sqrt(F), K_- = sqrt(1 - F).
    pub fn luders() -> Self {
        Self { minus_twist: None }
    }

    /// Replace the '-' Kraus operator by U sqrt(1 - F); the effects and
    /// hence all first-measurement marginals are unchanged.
    pub fn with_minus_twist(u: ComplexMatrix) -> Result<Self> {
        let defect = u.unitary_defect();
        if defect > 1e-10 * u.rows() as f64 {
            return Err(Error::NotUnitary(defect));
        }
        Ok(Self {
            minus_twist: Some(u),
        })
    }

    /// Kraus operator of an effect for outcome ±1.
    pub fn kraus(&self, effect: &ComplexMatrix, outcome: i8) -> Result<ComplexMatrix> {
        let root = if outcome == 1 {
            psd_sqrt(effect)?
        } else {
            let defect = &ComplexMatrix::identity(effect.rows()) - effect;
            psd_sqrt(&defect.hermitian_part())?
        };
        match (&self.minus_twist, outcome) {
            (Some(u), -1) => {
                if u.rows() != effect.rows() {
                    return Err(Error::DimensionMismatch(format!(
                        "twist is {}x{}, effect is {}x{}",
                        u.rows(),
                        u.cols(),
                        effect.rows(),
                        effect.cols()
                    )));
                }
                Ok(u * &root)
            }
            _ => Ok(root),
        }
    }
}

/// Lüders Kraus operator: sqrt(F) for '+', sqrt(1 - F) for '-'.
pub fn kraus(effect: &ComplexMatrix, outcome: i8) -> Result<ComplexMatrix> {
    Instrument::luders().kraus(effect, outcome)
}

fn check_spectrum_raises_effect_error(f: &ComplexMatrix) -> Result<()> {
    let (values, _) = crate::numerics::hermitian_eig(f)?;
    for &l in &values {
        if !(-1e-8..=1.0 + 1e-8).contains(&l) {
            return Err(Error::EffectOutOfRange { eigenvalue: l });
        }
    }
    Ok(())
}

/// Exact outcome tables of the protocol under the Lüders instrument.
pub fn exact_statistics(r: &Realization) -> Result<SequentialStatistics> {
    exact_statistics_with(r, &Instrument::luders())
}

/// Exact outcome tables under a custom instrument.
pub fn exact_statistics_with(
    r: &Realization,
    instrument: &Instrument,
) -> Result<SequentialStatistics> {
    r.validate()?;
    let n = r.n();
    for f in &r.effects {
        check_spectrum_raises_effect_error(f)?;
    }
    let kraus_ops: Vec<[ComplexMatrix; 2]> = r
        .effects
        .iter()
        .map(|f| Ok([instrument.kraus(f, 1)?, instrument.kraus(f, -1)?]))
        .collect::<Result<_>>()?;

    let mut joint = BTreeMap::new();
    let mut marginal = BTreeMap::new();
    for i in 1..=n {
        let mut marg = [0.0; 2];
        for (slot, k) in kraus_ops[i - 1].iter().enumerate() {
            marg[slot] = k.matvec(&r.psi).norm().powi(2);
        }
        debug_assert!((marg[0] + marg[1] - 1.0).abs() < 1e-10);
        marginal.insert(i, marg);

        for off in [1isize, -1] {
            let j = cyc(i as isize + off, n) + 1;
            let mut table = [0.0; 4];
            for (a_slot, ka) in kraus_ops[i - 1].iter().enumerate() {
                let post = ka.matvec(&r.psi);
                for (b_slot, kb) in kraus_ops[j - 1].iter().enumerate() {
                    table[a_slot * 2 + b_slot] = kb.matvec(&post).norm().powi(2);
                }
            }
            let total: f64 = table.iter().sum();
            assert!(
                (total - 1.0).abs() < 1e-10,
                "joint table for ({i},{j}) sums to {total}"
            );
            // no-signaling within the sequence: the first marginal must not
            // depend on which second setting follows
            assert!((table[0] + table[1] - marg[0]).abs() < 1e-10);
            assert!((table[2] + table[3] - marg[1]).abs() < 1e-10);
            joint.insert((i, j), table);
        }
    }
    Ok(SequentialStatistics {
        n,
        shots: None,
        joint,
        marginal,
    })
}

/// Empirical tables from `shots` independent protocol runs per ordered
/// context; converges to [`exact_statistics`] as shots grow. Each context
/// draws from its own stream of a counter-based generator, so tables are
/// reproducible per context and independent of enumeration order.
pub fn sample_statistics(r: &Realization, shots: u64, seed: u64) -> Result<SequentialStatistics> {
    assert!(shots >= 1, "need at least one shot");
    let exact = exact_statistics(r)?;
    let n = r.n();
    let mut joint = BTreeMap::new();
    let mut first_counts: BTreeMap<usize, [u64; 2]> = BTreeMap::new();

    for (ctx_index, (i, j)) in exact.contexts().enumerate() {
        let dist = *exact.joint.get(&(i, j)).expect("context exists");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(ctx_index as u64);
        let mut counts = [0u64; 4];
        for _ in 0..shots {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut slot = 3;
            for (s, &p) in dist.iter().enumerate() {
                acc += p;
                if u < acc {
                    slot = s;
                    break;
                }
            }
            counts[slot] += 1;
        }
        let entry = first_counts.entry(i).or_insert([0, 0]);
        entry[0] += counts[0] + counts[1];
        entry[1] += counts[2] + counts[3];
        joint.insert(
            (i, j),
            [
                counts[0] as f64 / shots as f64,
                counts[1] as f64 / shots as f64,
                counts[2] as f64 / shots as f64,
                counts[3] as f64 / shots as f64,
            ],
        );
    }

    // marginals pool the first outcomes of both contexts sharing a first
    // setting (2*shots runs each)
    let marginal = first_counts
        .into_iter()
        .map(|(i, c)| {
            let total = (c[0] + c[1]) as f64;
            (i, [c[0] as f64 / total, c[1] as f64 / total])
        })
        .collect();

    Ok(SequentialStatistics {
        n,
        shots: Some(shots),
        joint,
        marginal,
    })
}

/// Evaluate the inequality expression from statistics:
/// `-1/2 sum_i (⟨A_i A_{i+1}⟩ + ⟨A_{i+1} A_i⟩) - gamma sum_i ⟨A_i⟩`,
/// minus the double-click penalties `p(++|first i±1, then i)` when
/// `penalized` is set.
pub fn evaluate_expression(
    stats: &SequentialStatistics,
    coeffs: &SosCoefficients,
    penalized: bool,
) -> Result<f64> {
    if stats.n != coeffs.n {
        return Err(Error::DimensionMismatch(format!(
            "statistics are for n = {}, coefficients for n = {}",
            stats.n, coeffs.n
        )));
    }
    let n = stats.n;
    let next = |i: usize| cyc(i as isize + 1, n) + 1;
    let prev = |i: usize| cyc(i as isize - 1, n) + 1;
    let mut value = 0.0;
    for i in 1..=n {
        value -= 0.5 * (stats.correlator(i, next(i))? + stats.correlator(next(i), i)?);
        value -= coeffs.gamma * stats.single(i)?;
    }
    if penalized {
        for i in 1..=n {
            for first in [next(i), prev(i)] {
                value -= stats
                    .joint(first, i, 1, 1)
                    .ok_or(Error::MissingContext { first, second: i })?;
            }
        }
    }
    Ok(value)
}

/// Direct operator expectation ⟨ψ|B_n|ψ⟩, or ⟨ψ|B̃_n|ψ⟩ when penalized.
pub fn operator_value(
    r: &Realization,
    coeffs: &SosCoefficients,
    penalized: bool,
) -> Result<f64> {
    let b = if penalized {
        build_btilde(coeffs, &r.effects)?
    } else {
        build_bn(coeffs, &r.observables())?
    };
    Ok(b.expectation(&r.psi).re)
}

/// Both evaluation routes side by side. The statistics route composes
/// Kraus chains; the operator route contracts anticommutators. For
/// projective first measurements they agree; for general effects under
/// the square-root instrument they can differ, and the gap is reported
/// rather than adjudicated.
#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub expression_value: f64,
    pub operator_value: f64,
    pub gap: f64,
}

pub fn consistency_report(
    r: &Realization,
    coeffs: &SosCoefficients,
    penalized: bool,
) -> Result<ConsistencyReport> {
    let stats = exact_statistics(r)?;
    let expression_value = evaluate_expression(&stats, coeffs, penalized)?;
    let operator = operator_value(r, coeffs, penalized)?;
    Ok(ConsistencyReport {
        expression_value,
        operator_value: operator,
        gap: expression_value - operator,
    })
}
