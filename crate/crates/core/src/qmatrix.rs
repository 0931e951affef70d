//! Dense complex linear algebra for small quantum operators.
//!
//! Every composite space in this crate uses the system-major index convention:
//! for `a ⊗ b` the row index is `r_a * b.rows + r_b`. Partial traces and block
//! extractions elsewhere rely on this ordering.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Column state vector.
pub type CVector = DVector<C64>;

/// Largest row or column count produced by [`tensor`] unless a caller supplies its own limit.
pub const DEFAULT_MAX_DIM: usize = 4096;

/// Relative tolerance used for Hermiticity checks and the PSD clamp.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues at or below this (relative) level are treated as exact zeros when taking roots.
const ROOT_ZERO_FLOOR: f64 = 64.0 * f64::EPSILON;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Scale-aware tolerance `tol * max(1, norm)`.
pub fn relative_tol(tol: f64, norm: f64) -> f64 {
    tol * norm.max(1.0)
}

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ComplexMatrix {}x{} ", self.rows(), self.cols())?;
        f.debug_list().entries(self.to_row_major()).finish()
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Wraps an nalgebra matrix, rejecting empty shapes and non-finite entries.
    pub fn from_inner(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() == 0 || m.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some((idx, z)) = m.iter().enumerate().find(|(_, z)| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite entry {z} at column-major offset {idx}"
            )));
        }
        Ok(Self(m))
    }

    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Self::from_inner(DMatrix::from_row_slice(rows, cols, &entries))
    }

    /// Builds a matrix from nested rows; all rows must share a length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != m) {
            return Err(Error::Dimension(format!(
                "row {bad} has length {}, expected {m}",
                rows[bad].len()
            )));
        }
        Self::from_row_major(n, m, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self::from_fn(n, n, |r, c| if r == c { C64::new(values[r], 0.0) } else { ZERO })
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &CVector, b: &CVector) -> Self {
        Self(a * b.adjoint())
    }

    /// `|v⟩⟨v|`
    pub fn projector(v: &CVector) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.0[(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, value: C64) {
        self.0[(r, c)] = value;
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        self.0.transpose().iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self(&self.0 * factor)
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.0 * v
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖self − other‖_F`; shapes must agree.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(
            (self.rows(), self.cols()),
            (other.rows(), other.cols()),
            "distance between matrices of different shapes"
        );
        (&self.0 - &other.0).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖self − I‖_F` for square matrices.
    pub fn identity_residual(&self) -> f64 {
        self.distance(&Self::identity(self.rows()))
    }

    /// `‖M − M†‖_F`
    pub fn hermiticity_residual(&self) -> f64 {
        self.distance(&self.adjoint())
    }

    /// `‖U†U − I‖_F`
    pub fn unitarity_residual(&self) -> f64 {
        (&self.adjoint() * self).identity_residual()
    }

    /// `(M + M†)/2`
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0))
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square()
            && self.hermiticity_residual() <= relative_tol(HERMITIAN_TOL, self.frobenius_norm())
    }

    /// Sub-matrix of shape `rows x cols` whose top-left corner is `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self(self.0.view((r0, c0), (rows, cols)).into_owned())
    }

    pub fn column(&self, c: usize) -> CVector {
        self.0.column(c).into_owned()
    }

    /// Conjugation `self · m · self†`.
    pub fn conjugate(&self, m: &Self) -> Self {
        Self(&self.0 * &m.0 * self.0.adjoint())
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: Self) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl std::iter::Sum for ComplexMatrix {
    /// Panics on an empty iterator, since the shape would be unknown.
    fn sum<It: Iterator<Item = Self>>(mut iter: It) -> Self {
        let first = iter.next().expect("sum of an empty operator list");
        iter.fold(first, |acc, m| ComplexMatrix(acc.0 + m.0))
    }
}

/// Kronecker product `a ⊗ b` with the default dimension cap.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    tensor_with_limit(a, b, DEFAULT_MAX_DIM)
}

pub fn tensor_with_limit(a: &ComplexMatrix, b: &ComplexMatrix, max_dim: usize) -> Result<ComplexMatrix> {
    let rows = a.rows().checked_mul(b.rows());
    let cols = a.cols().checked_mul(b.cols());
    match (rows, cols) {
        (Some(r), Some(c)) if r <= max_dim && c <= max_dim => Ok(ComplexMatrix(a.0.kronecker(&b.0))),
        _ => Err(Error::Dimension(format!(
            "tensor product of {}x{} and {}x{} exceeds the maximum dimension {max_dim}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        ))),
    }
}

/// Kronecker product of column vectors.
pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Which factor of a bipartite operator survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

pub fn partial_trace(m: &ComplexMatrix, dim_first: usize, dim_second: usize, keep: Keep) -> Result<ComplexMatrix> {
    let n = dim_first * dim_second;
    if dim_first == 0 || dim_second == 0 || !m.is_square() || m.rows() != n {
        return Err(Error::Dimension(format!(
            "partial trace needs a square {n}x{n} matrix for factors {dim_first}x{dim_second}, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let out = match keep {
        Keep::First => ComplexMatrix::from_fn(dim_first, dim_first, |r, c| {
            (0..dim_second).map(|k| m.get(r * dim_second + k, c * dim_second + k)).sum()
        }),
        Keep::Second => ComplexMatrix::from_fn(dim_second, dim_second, |r, c| {
            (0..dim_first).map(|k| m.get(k * dim_second + r, k * dim_second + c)).sum()
        }),
    };
    Ok(out)
}

/// Spectral decomposition `H = V diag(λ) V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    /// Unitary whose columns are the eigenvectors, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermEig {
    /// `V f(Λ) V†` for a scalar function of the spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = &self.eigenvectors.0;
        let n = v.nrows();
        let mut scaled = v.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let fk = f(lambda);
            for r in 0..n {
                scaled[(r, k)] *= fk;
            }
        }
        ComplexMatrix(scaled * v.adjoint())
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| C64::new(l, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

fn hermitian_input_check(h: &ComplexMatrix, what: &str) -> Result<()> {
    if !h.is_square() {
        return Err(Error::Dimension(format!(
            "{what} needs a square matrix, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    let residual = h.hermiticity_residual();
    let tol = relative_tol(HERMITIAN_TOL, h.frobenius_norm());
    if residual > tol {
        return Err(Error::Validation(format!(
            "{what} needs a Hermitian matrix: ||H - H†||_F = {residual:e} > {tol:e}"
        )));
    }
    Ok(())
}

pub fn herm_eig(h: &ComplexMatrix) -> Result<HermEig> {
    hermitian_input_check(h, "Hermitian eigendecomposition")?;
    let n = h.rows();
    let sym = h.hermitian_part().0;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Degenerate("Hermitian eigensolver failed to converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermEig {
        eigenvalues,
        eigenvectors: ComplexMatrix(eigenvectors),
    })
}

/// `e^{-iHt}` with ħ = 1.
pub fn evolve_unitary(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(Error::Validation(format!("evolution time must be finite, got {t}")));
    }
    let eig = herm_eig(h)?;
    Ok(evolution_from_eig(&eig, t))
}

/// `e^{-iHt}` from a precomputed decomposition of `H`.
pub fn evolution_from_eig(eig: &HermEig, t: f64) -> ComplexMatrix {
    eig.map_spectrum(|l| C64::from_polar(1.0, -l * t))
}

/// Principal square root of a positive-semidefinite Hermitian matrix.
///
/// Eigenvalues within `-1e-10·max(1, ‖F‖_F)` of zero are clamped; anything more
/// negative is rejected.
pub fn psd_sqrt(f: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = herm_eig(f)?;
    let tol = relative_tol(HERMITIAN_TOL, f.frobenius_norm());
    if let Some(&min) = eig.eigenvalues.first() {
        if min < -tol {
            return Err(Error::NotPsd { eigenvalue: min, tolerance: tol });
        }
    }
    // Round-off sized eigenvalues of rank-deficient inputs would otherwise
    // contribute O(sqrt(eps)) garbage to the root.
    let floor = ROOT_ZERO_FLOOR * f.frobenius_norm().max(1.0);
    Ok(eig.map_spectrum(|l| {
        if l <= floor {
            ZERO
        } else {
            C64::new(l.sqrt(), 0.0)
        }
    }))
}

/// Trace norm `Σ|λ|` of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(herm_eig(m)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// Trace distance `½‖a − b‖₁` between Hermitian matrices.
pub fn trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    Ok(0.5 * trace_norm(&(a - b))?)
}

/// Pauli matrices, handy in tests and fixtures.
pub mod pauli {
    use super::{ComplexMatrix, C64};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        let i = C64::new(0.0, 1.0);
        let z = C64::new(0.0, 0.0);
        ComplexMatrix::from_rows(&[vec![z, -i], vec![i, z]]).unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&[1.0, -1.0])
    }
}
