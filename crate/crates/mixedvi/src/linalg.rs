//! Small dense and banded symmetric linear algebra.
//!
//! The stiffness and tangent matrices of the structured triangulation are
//! symmetric with a fixed half-bandwidth, so a banded Cholesky factorization
//! covers every linear solve in the Newton loop. Dense routines (Cholesky,
//! cyclic Jacobi eigenvalues) serve the low-dimensional multiplier-space
//! computations. Everything is generic over [`Real`] to keep the `f32`/`f64`
//! instantiations in sync.

use crate::scalar::{lit, Real};
use thiserror::Error;

/// Failures of the factorization routines.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    /// Cholesky hit a nonpositive pivot: the matrix is not positive definite.
    #[error("matrix is not positive definite (pivot failure at row {row})")]
    NotPositiveDefinite {
        /// Row index of the failing pivot.
        row: usize,
    },
    /// Operand dimensions do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch {
        /// Required length.
        expected: usize,
        /// Supplied length.
        got: usize,
    },
}

/// Symmetric band matrix in lower-triangle storage.
///
/// Entry `(i, j)` with `i >= j` and `i - j <= half_bandwidth` lives at
/// `data[i * (p + 1) + (j + p - i)]` where `p` is the half-bandwidth. Reads
/// outside the band return zero; writes outside the band are rejected.
#[derive(Debug, Clone)]
pub struct BandMatrix<T> {
    n: usize,
    half_bandwidth: usize,
    data: Vec<T>,
}

impl<T: Real> BandMatrix<T> {
    /// Zero matrix of size `n` with the given half-bandwidth.
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        let p = half_bandwidth.min(n.saturating_sub(1));
        Self {
            n,
            half_bandwidth: p,
            data: vec![T::zero(); n * (p + 1)],
        }
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-bandwidth of the stored band.
    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.half_bandwidth);
        i * (self.half_bandwidth + 1) + (j + self.half_bandwidth - i)
    }

    /// Symmetric read; entries outside the band are zero.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.half_bandwidth {
            T::zero()
        } else {
            self.data[self.idx(hi, lo)]
        }
    }

    /// Symmetric accumulate: adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    ///
    /// Panics if the entry lies outside the band; callers size the band from
    /// the mesh connectivity so this indicates a programming error.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(
            hi - lo <= self.half_bandwidth,
            "entry ({i}, {j}) outside half-bandwidth {}",
            self.half_bandwidth
        );
        let k = self.idx(hi, lo);
        self.data[k] += v;
    }

    /// Symmetric matrix-vector product `y = M x`.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n, "matvec operand length");
        let mut y = vec![T::zero(); self.n];
        let p = self.half_bandwidth;
        for i in 0..self.n {
            let lo = i.saturating_sub(p);
            let mut acc = T::zero();
            for j in lo..i {
                let a = self.data[self.idx(i, j)];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            acc += self.data[self.idx(i, i)] * x[i];
            y[i] += acc;
        }
        y
    }

    /// Zeroes row and column `i` and puts `1` on the diagonal.
    ///
    /// This is the standard homogeneous-Dirichlet elimination; it preserves
    /// symmetry and the band profile.
    pub fn eliminate_row_col(&mut self, i: usize) {
        let p = self.half_bandwidth;
        for j in i.saturating_sub(p)..i {
            let k = self.idx(i, j);
            self.data[k] = T::zero();
        }
        for hi in (i + 1)..self.n.min(i + p + 1) {
            let k = self.idx(hi, i);
            self.data[k] = T::zero();
        }
        let k = self.idx(i, i);
        self.data[k] = T::one();
    }

    /// Cholesky factorization `M = L Lᵀ` within the band.
    pub fn cholesky(&self) -> Result<BandCholesky<T>, LinalgError> {
        let n = self.n;
        let p = self.half_bandwidth;
        let mut l = self.clone();
        for j in 0..n {
            let hi = n.min(j + p + 1);
            for i in j..hi {
                let k0 = i.saturating_sub(p);
                let mut sum = l.data[l.idx(i, j)];
                for k in k0..j {
                    sum -= l.data[l.idx(i, k)] * l.data[l.idx(j, k)];
                }
                if i == j {
                    if sum <= T::zero() || !sum.is_finite() {
                        return Err(LinalgError::NotPositiveDefinite { row: j });
                    }
                    let k = l.idx(j, j);
                    l.data[k] = sum.sqrt();
                } else {
                    let d = l.data[l.idx(j, j)];
                    let k = l.idx(i, j);
                    l.data[k] = sum / d;
                }
            }
        }
        Ok(BandCholesky { l })
    }
}

/// Banded Cholesky factor; solves `M x = b` by forward/back substitution.
#[derive(Debug, Clone)]
pub struct BandCholesky<T> {
    l: BandMatrix<T>,
}

impl<T: Real> BandCholesky<T> {
    /// Solves `M x = b` for the factored matrix.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.n;
        assert_eq!(b.len(), n, "solve rhs length");
        let p = self.l.half_bandwidth;
        let mut x = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(p);
            let mut acc = x[i];
            for k in lo..i {
                acc -= self.l.data[self.l.idx(i, k)] * x[k];
            }
            x[i] = acc / self.l.data[self.l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let hi = n.min(i + p + 1);
            let mut acc = x[i];
            for k in (i + 1)..hi {
                acc -= self.l.data[self.l.idx(k, i)] * x[k];
            }
            x[i] = acc / self.l.data[self.l.idx(i, i)];
        }
        x
    }
}

/// Dense row-major matrix for the small multiplier-space problems.
#[derive(Debug, Clone)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    /// Zero matrix of shape `rows x cols`.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    /// Number of rows.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of columns.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Reads entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    /// Writes entry `(i, j)`.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] += v;
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.cols, "matvec operand length");
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j) * x[j])
                    .sum::<T>()
            })
            .collect()
    }
}

/// Solves a symmetric positive definite dense system by Cholesky.
pub fn dense_spd_solve<T: Real>(a: &DenseMatrix<T>, b: &[T]) -> Result<Vec<T>, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: a.cols(),
        });
    }
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut l = vec![T::zero(); n * n];
    for j in 0..n {
        for i in j..n {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= T::zero() || !sum.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite { row: j });
                }
                l[j * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut x = b.to_vec();
    for i in 0..n {
        let mut acc = x[i];
        for k in 0..i {
            acc -= l[i * n + k] * x[k];
        }
        x[i] = acc / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in (i + 1)..n {
            acc -= l[k * n + i] * x[k];
        }
        x[i] = acc / l[i * n + i];
    }
    Ok(x)
}

/// Eigenvalues of a symmetric dense matrix by cyclic Jacobi sweeps.
///
/// Returns the spectrum sorted ascending. Convergence is driven to the square
/// root of machine epsilon times the Frobenius norm, which is ample for the
/// constant estimates built on top of it.
pub fn symmetric_eigenvalues<T: Real>(a: &DenseMatrix<T>) -> Vec<T> {
    let n = a.rows();
    assert_eq!(a.cols(), n, "eigenvalue input must be square");
    if n == 0 {
        return Vec::new();
    }
    let mut m = a.clone();
    // Symmetrize defensively; the inputs are symmetric up to rounding.
    for i in 0..n {
        for j in 0..i {
            let s = (m.get(i, j) + m.get(j, i)) * lit::<T>(0.5);
            m.set(i, j, s);
            m.set(j, i, s);
        }
    }
    let frob = m
        .data
        .iter()
        .map(|&v| v * v)
        .sum::<T>()
        .sqrt()
        .max(T::min_positive_value());
    let tol = frob * T::epsilon() * lit::<T>(16.0);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq.abs() <= tol * lit::<T>(1e-3) {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (lit::<T>(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set(k, p, c * akp - s * akq);
                    m.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = m.get(p, k);
                    let aqk = m.get(q, k);
                    m.set(p, k, c * apk - s * aqk);
                    m.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut eigs: Vec<T> = (0..n).map(|i| m.get(i, i)).collect();
    eigs.sort_by(|a, b| a.partial_cmp(b).expect("eigenvalue comparison"));
    eigs
}

/// Euclidean norm of a vector.
pub fn euclidean_norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}
