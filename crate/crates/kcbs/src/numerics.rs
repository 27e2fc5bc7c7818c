//! Minimal dense complex linear algebra used by every other module.
//!
//! Matrices and vectors are thin wrappers around `nalgebra` dense storage
//! with a fixed JSON wire format: a matrix serializes as
//! `{"rows", "cols", "re": [...], "im": [...]}` with row-major entry order,
//! a vector as `{"re": [...], "im": [...]}`.
//!
//! All operations are pure functions on immutable inputs; values can be
//! shared and sent across threads freely.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative tolerance for the Hermitian symmetry check.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Dense complex matrix with row-major JSON serialization.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<Complex64>,
}

/// Dense complex vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector {
    inner: DVector<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            inner: DMatrix::identity(dim, dim),
        }
    }

    /// Build from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    /// Build from a row-major slice of entries.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count must be rows*cols");
        Self::from_fn(rows, cols, |i, j| entries[i * cols + j])
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), diag.len(), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.inner[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.inner[(i, j)] = value;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            inner: &self.inner * Complex64::new(s, 0.0),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            inner: &self.inner * s,
        }
    }

    /// Hermitian part (A + A†)/2.
    pub fn hermitian_part(&self) -> Self {
        Self {
            inner: (&self.inner + self.inner.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    /// ‖A − A†‖_F ≤ HERMITIAN_TOL · max(1, ‖A‖_F)
    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_TOL * self.frobenius_norm().max(1.0)
    }

    fn hermitian_defect(&self) -> f64 {
        (&self.inner - self.inner.adjoint()).norm()
    }

    fn require_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        let tol = HERMITIAN_TOL * self.frobenius_norm().max(1.0);
        if defect > tol {
            return Err(Error::NotHermitian {
                asymmetry: defect,
                tol,
            });
        }
        Ok(())
    }

    /// ‖U†U − 1‖_F, zero for unitary U.
    pub fn unitary_defect(&self) -> f64 {
        let gram = self.inner.adjoint() * &self.inner;
        let eye = DMatrix::<Complex64>::identity(self.cols(), self.cols());
        (gram - eye).norm()
    }

    pub fn matvec(&self, v: &ComplexVector) -> ComplexVector {
        assert_eq!(self.cols(), v.dim(), "matvec dimension mismatch");
        ComplexVector {
            inner: &self.inner * &v.inner,
        }
    }

    /// ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, psi: &ComplexVector) -> Complex64 {
        psi.dot(&self.matvec(psi))
    }

    /// Direct sum `self ⊕ other` (block diagonal).
    pub fn direct_sum(&self, other: &ComplexMatrix) -> Self {
        let (r, c) = (self.rows(), self.cols());
        Self::from_fn(r + other.rows(), c + other.cols(), |i, j| {
            if i < r && j < c {
                self.get(i, j)
            } else if i >= r && j >= c {
                other.get(i - r, j - c)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Rows of the matrix as vectors.
    pub fn row_vectors(&self) -> Vec<ComplexVector> {
        (0..self.rows())
            .map(|i| ComplexVector::from_fn(self.cols(), |j| self.get(i, j)))
            .collect()
    }

    /// Stack vectors as the rows of a matrix.
    pub fn from_row_vectors(rows: &[ComplexVector]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].dim();
        Self::from_fn(rows.len(), cols, |i, j| rows[i].get(j))
    }
}

impl ComplexVector {
    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: DVector::zeros(dim),
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize) -> Complex64) -> Self {
        Self {
            inner: DVector::from_fn(dim, |i, _| f(i)),
        }
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self::from_fn(entries.len(), |i| Complex64::new(entries[i], 0.0))
    }

    pub fn from_complex(entries: &[Complex64]) -> Self {
        Self::from_fn(entries.len(), |i| entries[i])
    }

    /// Standard basis vector e_k.
    pub fn basis(dim: usize, k: usize) -> Self {
        Self::from_fn(dim, |i| {
            if i == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.len()
    }

    pub fn get(&self, i: usize) -> Complex64 {
        self.inner[i]
    }

    pub fn set(&mut self, i: usize, value: Complex64) {
        self.inner[i] = value;
    }

    pub fn norm(&self) -> f64 {
        self.inner.norm()
    }

    /// ⟨self|other⟩ with the left argument conjugated.
    pub fn dot(&self, other: &ComplexVector) -> Complex64 {
        self.inner.dotc(&other.inner)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            inner: &self.inner * Complex64::new(s, 0.0),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            inner: &self.inner * s,
        }
    }

    pub fn add(&self, other: &ComplexVector) -> Self {
        Self {
            inner: &self.inner + &other.inner,
        }
    }

    pub fn sub(&self, other: &ComplexVector) -> Self {
        Self {
            inner: &self.inner - &other.inner,
        }
    }

    pub fn normalized(&self) -> Self {
        self.scale(1.0 / self.norm())
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= 1e-12
    }

    /// Outer product |self⟩⟨other|.
    pub fn outer(&self, other: &ComplexVector) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner * other.inner.adjoint(),
        }
    }

    /// Append `extra` zero entries.
    pub fn zero_padded(&self, extra: usize) -> Self {
        Self::from_fn(self.dim() + extra, |i| {
            if i < self.dim() {
                self.get(i)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Largest |imaginary part| over the entries.
    pub fn max_imag(&self) -> f64 {
        self.inner
            .iter()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl std::ops::Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl std::ops::Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl std::ops::Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix {
            inner: -&self.inner,
        }
    }
}

// --- JSON wire format ---

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut re = Vec::with_capacity(self.rows() * self.cols());
        let mut im = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                let z = self.get(i, j);
                re.push(z.re);
                im.push(z.im);
            }
        }
        MatrixRepr {
            rows: self.rows(),
            cols: self.cols(),
            re,
            im,
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(de)?;
        let len = repr.rows * repr.cols;
        if repr.re.len() != len || repr.im.len() != len {
            return Err(serde::de::Error::custom(format!(
                "matrix entry count {}/{} does not match rows*cols = {}",
                repr.re.len(),
                repr.im.len(),
                len
            )));
        }
        Ok(Self::from_fn(repr.rows, repr.cols, |i, j| {
            let k = i * repr.cols + j;
            Complex64::new(repr.re[k], repr.im[k])
        }))
    }
}

#[derive(Serialize, Deserialize)]
struct VectorRepr {
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for ComplexVector {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        VectorRepr {
            re: self.inner.iter().map(|z| z.re).collect(),
            im: self.inner.iter().map(|z| z.im).collect(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ComplexVector {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = VectorRepr::deserialize(de)?;
        if repr.re.len() != repr.im.len() {
            return Err(serde::de::Error::custom(
                "vector re/im lengths do not match",
            ));
        }
        Ok(Self::from_fn(repr.re.len(), |i| {
            Complex64::new(repr.re[i], repr.im[i])
        }))
    }
}

// --- Decompositions ---

/// Iteration cap for the Jacobi eigensolver; quadratic convergence makes
/// more than ~15 sweeps unheard of at these dimensions.
const MAX_JACOBI_SWEEPS: usize = 100;

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Eigenvalues are sorted descending; eigenvectors are orthonormal and
/// phase-fixed so that the first component of modulus above 1e-12 is real
/// and positive, which makes the output deterministic.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<(Vec<f64>, Vec<ComplexVector>)> {
    a.require_hermitian()?;
    let dim = a.rows();
    let mut work = a.hermitian_part().inner;
    let mut vecs = DMatrix::<Complex64>::identity(dim, dim);
    let scale = a.frobenius_norm().max(1.0);

    let mut converged = false;
    for _sweep in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..dim)
            .flat_map(|p| ((p + 1)..dim).map(move |q| (p, q)))
            .map(|(p, q)| work[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            converged = true;
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let apq = work[(p, q)];
                let r = apq.norm();
                if r <= 1e-300 {
                    continue;
                }
                let app = work[(p, p)].re;
                let aqq = work[(q, q)].re;
                // small-angle root of the 2x2 secular equation
                let tau = (aqq - app) / (2.0 * r);
                let t = -tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let phase = apq / r;
                // columns: J = [[c, -s*phase], [s*conj(phase), c]]
                for k in 0..dim {
                    let akp = work[(k, p)];
                    let akq = work[(k, q)];
                    work[(k, p)] = akp * c + akq * phase.conj() * s;
                    work[(k, q)] = akq * c - akp * phase * s;
                }
                for k in 0..dim {
                    let apk = work[(p, k)];
                    let aqk = work[(q, k)];
                    work[(p, k)] = apk * c + aqk * phase * s;
                    work[(q, k)] = aqk * c - apk * phase.conj() * s;
                }
                for k in 0..dim {
                    let vkp = vecs[(k, p)];
                    let vkq = vecs[(k, q)];
                    vecs[(k, p)] = vkp * c + vkq * phase.conj() * s;
                    vecs[(k, q)] = vkq * c - vkp * phase * s;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence);
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&p, &q| {
        work[(q, q)]
            .re
            .partial_cmp(&work[(p, p)].re)
            .expect("eigenvalues are finite")
            .then(p.cmp(&q))
    });
    let mut values = Vec::with_capacity(dim);
    let mut vectors = Vec::with_capacity(dim);
    for &k in &order {
        values.push(work[(k, k)].re);
        let mut v = ComplexVector::from_fn(dim, |i| vecs[(i, k)]);
        if let Some(lead) = (0..dim).find(|&i| v.get(i).norm() > 1e-12) {
            let z = v.get(lead);
            v = v.scale_complex(z.conj() / z.norm());
        }
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Principal (unique PSD) square root of a positive semidefinite matrix.
///
/// Eigenvalues in [-1e-8, 0) are clamped to zero, as is eigenvalue noise
/// below dim·eps on the scale of max(1, top eigenvalue) — taking a square
/// root would otherwise amplify rank-deficiency noise from 1e-16 to 1e-8.
/// (Effects and ±1-spectrum observables keep everything here O(1), so the
/// absolute part of that cut stays far below any genuine eigenvalue.)
/// Anything below -1e-8 is rejected as not PSD.
pub fn psd_sqrt(f: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eig(f)?;
    if let Some(&bad) = values.iter().find(|&&l| l < -1e-8) {
        return Err(Error::NotPsd { eigenvalue: bad });
    }
    let dim = f.rows();
    let zero_cut = dim as f64 * f64::EPSILON * values[0].max(1.0);
    let mut root = ComplexMatrix::zeros(dim, dim);
    for (lambda, v) in values.iter().zip(&vectors) {
        if *lambda > zero_cut {
            root = &root + &v.outer(v).scale(lambda.sqrt());
        }
    }
    Ok(root.hermitian_part())
}

/// Orthonormal basis of the span of `vectors` by modified Gram-Schmidt
/// with one re-orthogonalization pass. Vectors whose residual norm after
/// projection falls below `tol` are dropped.
pub fn orthonormal_basis(vectors: &[ComplexVector], tol: f64) -> Vec<ComplexVector> {
    let mut basis: Vec<ComplexVector> = Vec::new();
    for v in vectors {
        if let Some(first) = basis.first() {
            assert_eq!(v.dim(), first.dim(), "vectors must share one dimension");
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for u in &basis {
                let overlap = u.dot(&w);
                w = w.sub(&u.scale_complex(overlap));
            }
        }
        if w.norm() >= tol {
            basis.push(w.normalized());
        }
    }
    basis
}
