//! Dense complex matrix kernel.
//!
//! Everything downstream works with square matrices over `Complex64`. The
//! eigensolver is in-house (Householder tridiagonalization plus implicit-shift
//! QL, see [`eigh`]); matrix functions, divided-difference transforms and
//! superoperator vectorization are built on top of it.
//!
//! Vectorization is column-stacking throughout: `vec(a x b) = (bᵀ ⊗ a) vec(x)`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

mod eigh;
mod funcs;
pub mod random;

pub use eigh::{eigh, eigvalsh, Eigh};
pub use funcs::{
    choi_matrix, divided_difference_transform, exp_anti_hermitian, is_completely_positive,
    log_transform, matrix_function, superop_adjoint, superop_exp_hermitian, vectorize_map,
};

/// Square complex matrix.
pub type CMat = Array2<Complex64>;

/// Complex column vector.
pub type CVec = Array1<Complex64>;

pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Shorthand complex constructor.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: deviation {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },
    #[error("eigensolver did not converge within {max_iter} iterations")]
    NoConvergence { max_iter: usize },
    #[error("scalar function undefined at eigenvalue {eigenvalue}")]
    Domain { eigenvalue: f64 },
    #[error("matrix is singular on the required support (min eigenvalue {min_eigenvalue:.3e})")]
    Singular { min_eigenvalue: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("trace must be 1 within {tol:.1e}, got {trace:.12}")]
    NotUnitTrace { trace: f64, tol: f64 },
    #[error("eigenvalue {eigenvalue:.3e} below -{tol:.1e}; not positive semidefinite")]
    NotPositive { eigenvalue: f64, tol: f64 },
    #[error("Choi matrix is not Hermitian (deviation {deviation:.3e}); map is not Hermiticity-preserving")]
    NonHermitianChoi { deviation: f64 },
}

/// `n x n` identity.
pub fn identity(n: usize) -> CMat {
    Array2::eye(n)
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

/// Matrix trace.
pub fn trace(a: &CMat) -> Complex64 {
    a.diag().sum()
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

/// Hilbert-Schmidt inner product `tr(a† b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Frobenius norm.
pub fn norm_fro(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entry modulus.
pub fn norm_max(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    ndarray::linalg::kron(a, b)
}

/// Column-stacking vectorization.
pub fn vec_col(a: &CMat) -> CVec {
    let n = a.nrows();
    Array1::from_shape_fn(n * n, |k| a[[k % n, k / n]])
}

/// Inverse of [`vec_col`].
pub fn unvec(v: &CVec, n: usize) -> CMat {
    debug_assert_eq!(v.len(), n * n);
    Array2::from_shape_fn((n, n), |(i, j)| v[i + j * n])
}

fn check_square(a: &CMat) -> Result<usize, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Relative Hermiticity deviation `max|A - A†| / max|A|` (0 for the zero matrix).
pub fn hermiticity_deviation(a: &CMat) -> f64 {
    let scale = norm_max(a);
    if scale == 0.0 {
        return 0.0;
    }
    let dev = norm_max(&(a - &dagger(a)));
    dev / scale
}

/// A Hermitian matrix, stored exactly symmetrized.
///
/// Construction rejects inputs whose Hermiticity deviation exceeds `1e-12`
/// relative to the largest entry, then stores `(A + A†)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    mat: CMat,
}

impl HermitianOperator {
    pub const HERMITICITY_TOL: f64 = 1e-12;

    pub fn new(a: CMat) -> Result<Self, LinalgError> {
        check_square(&a)?;
        let dev = hermiticity_deviation(&a);
        if dev > Self::HERMITICITY_TOL {
            return Err(LinalgError::NotHermitian {
                deviation: dev,
                tol: Self::HERMITICITY_TOL,
            });
        }
        Ok(Self::symmetrize(a))
    }

    /// Symmetrize without a deviation check, for matrices Hermitian by
    /// construction up to roundoff.
    pub fn symmetrize(a: CMat) -> Self {
        let h = (&a + &dagger(&a)).mapv(|z| 0.5 * z);
        Self { mat: h }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn eigh(&self) -> Result<Eigh, LinalgError> {
        eigh(&self.mat)
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        eigvalsh(&self.mat)
    }

    /// Spectral norm (largest eigenvalue modulus).
    pub fn norm_spectral(&self) -> Result<f64, LinalgError> {
        let ev = self.eigenvalues()?;
        Ok(ev.iter().map(|x| x.abs()).fold(0.0, f64::max))
    }
}

/// A quantum state: Hermitian, unit trace, positive semidefinite up to a
/// clamping tolerance.
///
/// Construction clamps eigenvalues in `[-tol, 0)` to zero and renormalizes
/// the trace to exactly one; eigenvalues below `-tol` are rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    op: HermitianOperator,
}

impl DensityOperator {
    pub const TRACE_TOL: f64 = 1e-10;
    pub const EIG_CLAMP_TOL: f64 = 1e-12;

    pub fn new(op: HermitianOperator) -> Result<Self, LinalgError> {
        Self::with_clamp(op, Self::EIG_CLAMP_TOL)
    }

    pub fn from_matrix(a: CMat) -> Result<Self, LinalgError> {
        Self::new(HermitianOperator::new(a)?)
    }

    /// Construct with a caller-supplied negative-eigenvalue tolerance.
    /// Semigroup evolution uses `1e-9` to absorb floating-point noise.
    pub fn with_clamp(op: HermitianOperator, neg_tol: f64) -> Result<Self, LinalgError> {
        let tr = trace(op.matrix()).re;
        if (tr - 1.0).abs() > Self::TRACE_TOL {
            return Err(LinalgError::NotUnitTrace {
                trace: tr,
                tol: Self::TRACE_TOL,
            });
        }
        let dec = op.eigh()?;
        let min_ev = dec.values[0];
        if min_ev < -neg_tol {
            return Err(LinalgError::NotPositive {
                eigenvalue: min_ev,
                tol: neg_tol,
            });
        }
        if min_ev < 0.0 {
            let clamped: Vec<f64> = dec.values.iter().map(|&x| x.max(0.0)).collect();
            let total: f64 = clamped.iter().sum();
            let scaled: Vec<f64> = clamped.iter().map(|&x| x / total).collect();
            let mat = dec.reassemble(&scaled);
            Ok(Self {
                op: HermitianOperator::symmetrize(mat),
            })
        } else {
            // Renormalize the trace exactly.
            let mat = op.into_matrix().mapv(|z| z / tr);
            Ok(Self {
                op: HermitianOperator::symmetrize(mat),
            })
        }
    }

    /// Pure state from an (unnormalized) state vector.
    pub fn pure(psi: &CVec) -> Result<Self, LinalgError> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 == 0.0 {
            return Err(LinalgError::NotUnitTrace {
                trace: 0.0,
                tol: Self::TRACE_TOL,
            });
        }
        let n = psi.len();
        let mat = Array2::from_shape_fn((n, n), |(i, j)| psi[i] * psi[j].conj() / norm2);
        Self::from_matrix(mat)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let mat = identity(n).mapv(|z| z / n as f64);
        Self {
            op: HermitianOperator { mat },
        }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn hermitian(&self) -> &HermitianOperator {
        &self.op
    }
}

/// A linear map on matrices, stored as its `n² x n²` matrix acting on the
/// column-stacked vectorization.
#[derive(Debug, Clone)]
pub struct Superoperator {
    dim: usize,
    mat: CMat,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, mat: CMat) -> Result<Self, LinalgError> {
        let m = check_square(&mat)?;
        if m != dim * dim {
            return Err(LinalgError::DimensionMismatch {
                expected: dim * dim,
                got: m,
            });
        }
        Ok(Self { dim, mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            mat: identity(dim * dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Apply to a matrix: `unvec(S vec(x))`.
    pub fn apply(&self, x: &CMat) -> Result<CMat, LinalgError> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                got: x.nrows(),
            });
        }
        Ok(unvec(&self.mat.dot(&vec_col(x)), self.dim))
    }

    pub fn compose(&self, other: &Superoperator) -> Result<Self, LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            mat: self.mat.dot(&other.mat),
        })
    }
}
