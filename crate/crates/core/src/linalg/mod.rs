//! Dense symmetric linear algebra: the [`SymMatrix`] type, symmetric
//! eigendecomposition, truncated pseudo-inverse, numerical rank, Gram–Schmidt
//! orthonormalization and Frobenius norms.

mod eigen;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

pub use eigen::{eig_sym, eig_sym_with, EigenDecomp, EigenMethod};

/// Relative tolerance below which eigenvalues are clamped to zero on inputs
/// declared SPSD. Anything more negative is rejected.
pub const PSD_CLAMP: f64 = 1e-10;

/// Dense `n x n` real symmetric matrix.
///
/// Construction symmetrizes the input as `(A + Aᵀ)/2`, so `a[i,j] == a[j,i]`
/// holds bit-for-bit afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: Array2<f64>,
}

impl SymMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (rows, cols) = a.dim();
        if rows != cols || rows == 0 {
            return Err(Error::NotSquare { rows, cols });
        }
        let mut data = a;
        let n = rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (data[[i, j]] + data[[j, i]]);
                data[[i, j]] = v;
                data[[j, i]] = v;
            }
        }
        Ok(Self { data })
    }

    /// Wraps an array the caller guarantees to be exactly symmetric.
    pub(crate) fn from_symmetric_unchecked(data: Array2<f64>) -> Self {
        debug_assert_eq!(data.nrows(), data.ncols());
        Self { data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(Array2::from_shape_fn((n, n), |(i, j)| f(i, j)))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "n must be positive");
        Self { data: Array2::zeros((n, n)) }
    }

    pub fn identity(n: usize) -> Self {
        assert!(n >= 1, "n must be positive");
        Self { data: Array2::eye(n) }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "n must be positive");
        Self { data: Array2::from_diag(&Array1::from(diag.to_vec())) }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.diag().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        for ((row, col), v) in self.data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(())
    }

    /// Principal submatrix `A[idx, idx]`. Repeated indices are allowed.
    pub fn principal(&self, idx: &[usize]) -> SymMatrix {
        let sub = self.data.select(Axis(0), idx).select(Axis(1), idx);
        SymMatrix::from_symmetric_unchecked(sub)
    }

    /// The `n x idx.len()` block of selected columns.
    pub fn columns(&self, idx: &[usize]) -> Array2<f64> {
        self.data.select(Axis(1), idx)
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix::from_symmetric_unchecked(&self.data * s)
    }
}

/// Numerical-rank cutoff. An eigenvalue counts when
/// `|σ| > max(relative_cutoff * |σ|_max, absolute_floor)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTolerance {
    relative: Option<f64>,
    absolute_floor: f64,
}

impl Default for RankTolerance {
    /// `n * 1e-12` relative cutoff, no absolute floor.
    fn default() -> Self {
        Self { relative: None, absolute_floor: 0.0 }
    }
}

impl RankTolerance {
    pub const DIM_SCALED_EPS: f64 = 1e-12;

    /// Fixed relative cutoff, independent of the matrix dimension.
    pub fn relative(cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::invalid(format!("relative cutoff must be positive, got {cutoff}")));
        }
        Ok(Self { relative: Some(cutoff), absolute_floor: 0.0 })
    }

    pub fn with_absolute_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(Error::invalid(format!("absolute floor must be >= 0, got {floor}")));
        }
        self.absolute_floor = floor;
        Ok(self)
    }

    pub fn relative_cutoff(&self, n: usize) -> f64 {
        self.relative.unwrap_or(n as f64 * Self::DIM_SCALED_EPS)
    }

    pub fn absolute_floor(&self) -> f64 {
        self.absolute_floor
    }

    /// Absolute threshold for a spectrum whose largest magnitude is `sigma_max`.
    pub fn threshold(&self, n: usize, sigma_max: f64) -> f64 {
        (self.relative_cutoff(n) * sigma_max).max(self.absolute_floor)
    }
}

/// Number of eigenvalues above the cutoff.
pub fn rank_numeric(a: &SymMatrix, tol: RankTolerance) -> Result<usize> {
    let decomp = eig_sym(a)?;
    Ok(decomp.rank(tol))
}

/// Truncated Moore–Penrose pseudo-inverse: `Σ_{t ≤ min(k, rank)} σ_t⁻¹ v_t v_tᵀ`.
///
/// Only eigenvalues above the rank cutoff are inverted. A numerically zero
/// input yields the zero matrix.
pub fn pinv_trunc(a: &SymMatrix, k: usize, tol: RankTolerance) -> Result<SymMatrix> {
    let n = a.n();
    if k == 0 || k > n {
        return Err(Error::invalid(format!("truncation rank k={k} must be in 1..={n}")));
    }
    let decomp = eig_sym(a)?;
    Ok(decomp.pinv(k, tol))
}

/// Modified Gram–Schmidt with one reorthogonalization pass.
///
/// Column order is preserved: column `j` of the output spans the same flag as
/// the first `j+1` input columns, so the first output column is the first
/// input column normalized.
pub fn qr_orthonormalize(m: ArrayView2<f64>) -> Result<Array2<f64>> {
    let (n, cols) = m.dim();
    if cols > n {
        return Err(Error::invalid(format!("cannot orthonormalize {cols} columns in dimension {n}")));
    }
    // column-major working copy
    let mut q: Vec<Vec<f64>> = (0..cols).map(|j| m.column(j).to_vec()).collect();
    for j in 0..cols {
        let (done, rest) = q.split_at_mut(j);
        let v = &mut rest[0];
        let original = norm2(v);
        if !(original > 0.0) || !original.is_finite() {
            return Err(Error::RankDeficient { column: j });
        }
        for _ in 0..2 {
            for u in done.iter() {
                let proj = dot(u, v);
                axpy(-proj, u, v);
            }
        }
        let norm = norm2(v);
        if norm <= 1e-10 * original {
            return Err(Error::RankDeficient { column: j });
        }
        v.iter_mut().for_each(|x| *x /= norm);
    }
    let mut out = Array2::zeros((n, cols));
    for (j, col) in q.iter().enumerate() {
        out.column_mut(j).assign(&ndarray::ArrayView1::from(col.as_slice()));
    }
    Ok(out)
}

pub fn frobenius(a: &SymMatrix) -> f64 {
    frobenius_array(a.as_array().view())
}

pub fn frobenius_array(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn frobenius_diff(a: &SymMatrix, b: &SymMatrix) -> Result<f64> {
    if a.n() != b.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), found: b.n() });
    }
    Ok(a.as_array()
        .iter()
        .zip(b.as_array().iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// `max |MᵀM - I|` over all entries.
pub fn orthonormality_deviation(m: ArrayView2<f64>) -> f64 {
    let gram = m.t().dot(&m);
    gram.indexed_iter()
        .map(|((i, j), v)| if i == j { (v - 1.0).abs() } else { v.abs() })
        .fold(0.0, f64::max)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

#[inline]
fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
