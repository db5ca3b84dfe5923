use ndarray::{s, Array1, Array2};

use super::{RankTolerance, SymMatrix, PSD_CLAMP};
use crate::error::{Error, Result};

/// Sweep budget for cyclic Jacobi.
pub const JACOBI_MAX_SWEEPS: usize = 30;
/// Jacobi stops once the off-diagonal norm is below this fraction of `‖A‖_F`.
pub const JACOBI_OFF_TOL: f64 = 1e-12;
/// `Auto` uses Jacobi up to this dimension and tridiagonal QL above it.
pub const JACOBI_MAX_DIM: usize = 96;

const QL_MAX_ITER: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    /// Cyclic Jacobi rotations on the full matrix.
    Jacobi,
    /// Householder tridiagonalization followed by implicit QL.
    Tridiagonal,
    #[default]
    Auto,
}

/// Eigenpairs of a symmetric matrix, values sorted non-increasing.
///
/// Each eigenvector is normalized so its first entry of largest magnitude is
/// positive.
#[derive(Debug, Clone)]
pub struct EigenDecomp {
    pub vectors: Array2<f64>,
    pub values: Array1<f64>,
}

pub fn eig_sym(a: &SymMatrix) -> Result<EigenDecomp> {
    eig_sym_with(a, EigenMethod::Auto)
}

pub fn eig_sym_with(a: &SymMatrix, method: EigenMethod) -> Result<EigenDecomp> {
    a.check_finite()?;
    let n = a.n();
    let (values, vectors) = match method {
        EigenMethod::Jacobi => jacobi(a)?,
        EigenMethod::Tridiagonal => tridiagonal_ql(a)?,
        EigenMethod::Auto if n <= JACOBI_MAX_DIM => jacobi(a)?,
        EigenMethod::Auto => tridiagonal_ql(a)?,
    };
    Ok(EigenDecomp::sorted(values, vectors))
}

impl EigenDecomp {
    fn sorted(values: Vec<f64>, vectors: Array2<f64>) -> Self {
        let n = values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
        let mut out = Array2::zeros(vectors.dim());
        for (dst, &src) in order.iter().enumerate() {
            let col = vectors.column(src);
            let mut pivot = 0.0f64;
            for &v in col.iter() {
                if v.abs() > pivot.abs() {
                    pivot = v;
                }
            }
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            out.column_mut(dst).zip_mut_with(&col, |o, &v| *o = sign * v);
        }
        let values = order.iter().map(|&i| values[i]).collect();
        Self { vectors: out, values }
    }

    pub fn dim(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn sigma_max(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn rank(&self, tol: RankTolerance) -> usize {
        let thr = tol.threshold(self.dim(), self.sigma_max());
        self.values.iter().filter(|v| v.abs() > thr).count()
    }

    /// Clamps eigenvalues in `[-1e-10 σ₁, 0)` to zero; rejects anything lower.
    pub fn into_psd(mut self) -> Result<Self> {
        let top = self.values.first().copied().unwrap_or(0.0).max(0.0);
        let threshold = PSD_CLAMP * top;
        for v in self.values.iter_mut() {
            if *v < 0.0 {
                if *v < -threshold {
                    return Err(Error::NotPsd { value: *v, threshold });
                }
                *v = 0.0;
            }
        }
        Ok(self)
    }

    /// Leading `r` eigenpairs.
    pub fn top(&self, r: usize) -> EigenDecomp {
        let r = r.min(self.len());
        EigenDecomp {
            vectors: self.vectors.slice(s![.., ..r]).to_owned(),
            values: self.values.slice(s![..r]).to_owned(),
        }
    }

    /// `V diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let scaled = &self.vectors * &self.values.view().insert_axis(ndarray::Axis(0));
        let full = scaled.dot(&self.vectors.t());
        SymMatrix::new(full).expect("square by construction")
    }

    /// `Σ σ_t⁻¹ v_t v_tᵀ` over the leading `k` eigenvalues that are above the
    /// rank cutoff. Non-positive eigenvalues are never inverted.
    pub fn pinv(&self, k: usize, tol: RankTolerance) -> SymMatrix {
        let n = self.dim();
        let thr = tol.threshold(n, self.sigma_max());
        let kept: Vec<usize> = self
            .values
            .iter()
            .enumerate()
            .take(k)
            .filter(|(_, &v)| v > thr && v > 0.0)
            .map(|(i, _)| i)
            .collect();
        if kept.is_empty() {
            return SymMatrix::zeros(n);
        }
        let basis = self.vectors.select(ndarray::Axis(1), &kept);
        let inv: Array1<f64> = kept.iter().map(|&i| 1.0 / self.values[i]).collect();
        let scaled = &basis * &inv.view().insert_axis(ndarray::Axis(0));
        SymMatrix::new(scaled.dot(&basis.t())).expect("square by construction")
    }
}

fn jacobi(a: &SymMatrix) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.n();
    let mut m: Vec<f64> = a.as_array().iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = JACOBI_OFF_TOL * norm;

    let off_norm = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&m);
        if off <= target {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { off_norm: off, sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| m[i * n + i]).collect();
    let vectors = Array2::from_shape_vec((n, n), v).expect("n*n entries");
    Ok((values, vectors))
}

/// Householder reduction to tridiagonal form followed by the implicit QL
/// algorithm (EISPACK tred2/tql2 lineage).
fn tridiagonal_ql(a: &SymMatrix) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.n();
    let mut v: Vec<Vec<f64>> = a.as_array().rows().into_iter().map(|r| r.to_vec()).collect();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e);
    // rows of z are eigenvectors so the QL rotations touch contiguous memory
    let mut z: Vec<Vec<f64>> = (0..n).map(|j| (0..n).map(|i| v[i][j]).collect()).collect();
    drop(v);
    tql2(&mut z, &mut d, &mut e)?;
    let mut vectors = Array2::zeros((n, n));
    for (j, row) in z.iter().enumerate() {
        for (i, &x) in row.iter().enumerate() {
            vectors[[i, j]] = x;
        }
    }
    Ok((d, vectors))
}

fn tred2(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for &dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }
            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

/// `z` holds eigenvectors as rows.
fn tql2(z: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    let off = e.iter().map(|x| x * x).sum::<f64>().sqrt();
                    return Err(Error::NoConvergence { off_norm: off, sweeps: iter });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (lo, hi) = z.split_at_mut(i + 1);
                    let zi = &mut lo[i];
                    let zi1 = &mut hi[0];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let hk = *b;
                        *b = s * *a + c * hk;
                        *a = c * *a - s * hk;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
