//! Synthetic SPSD matrices with prescribed rank, eigenvalue decay and
//! coherence.
//!
//! Coherence is controlled through the first eigenvector only: it is pinned to
//! `v₁ = (μ/√n, b, …, b)` and the rest of the basis is completed by
//! Gram–Schmidt against a seeded Gaussian block. The completion columns are
//! random, so the realized coherence of the whole basis can exceed the target
//! when the target is small; it is always measured and reported.

use ndarray::{Array1, Array2, Axis};
use rand_distr::{Distribution, StandardNormal};

use crate::coherence;
use crate::error::{Error, Result};
use crate::linalg::{self, SymMatrix};
use crate::seed;

/// Gram matrix of `[e₁ … e_r 0 … 0]`: `diag(1, …, 1, 0, …, 0)` with `r` ones.
pub fn pathological(n: usize, r: usize) -> SymMatrix {
    assert!(n >= 1 && r <= n, "pathological matrix needs 1 <= n and r <= n (n={n}, r={r})");
    let diag: Vec<f64> = (0..n).map(|i| if i < r { 1.0 } else { 0.0 }).collect();
    SymMatrix::from_diag(&diag)
}

fn check_mu(n: usize, mu: f64) -> Result<()> {
    let max = (n as f64).sqrt();
    if !(mu >= 1.0 && mu <= max + 1e-12) {
        return Err(Error::invalid(format!("coherence target {mu} outside [1, sqrt({n})]")));
    }
    Ok(())
}

/// Unit vector with first entry `μ/√n` and the remaining entries equal and
/// non-negative.
pub fn targeted_first_vector(n: usize, mu_target: f64) -> Result<Array1<f64>> {
    check_mu(n, mu_target)?;
    let nf = n as f64;
    let head = (mu_target / nf.sqrt()).min(1.0);
    let mut v = Array1::zeros(n);
    v[0] = head;
    if n > 1 {
        let b = ((1.0 - head * head).max(0.0) / (nf - 1.0)).sqrt();
        v.slice_mut(ndarray::s![1..]).fill(b);
    }
    Ok(v)
}

/// Orthonormal basis whose first column is [`targeted_first_vector`].
#[derive(Debug, Clone)]
pub struct TargetedBasis {
    pub basis: Array2<f64>,
    /// Coherence of all columns of `basis`.
    pub realized_mu: f64,
}

/// Full `n x n` targeted basis.
pub fn targeted_basis(n: usize, mu_target: f64, seed: u64) -> Result<TargetedBasis> {
    let basis = targeted_columns(n, mu_target, n, seed)?;
    let realized_mu = coherence::coherence_of(basis.view())?.mu;
    Ok(TargetedBasis { basis, realized_mu })
}

/// First `m` columns of the targeted basis for `seed`. The Gaussian block is
/// drawn column by column, so this equals the leading block of
/// [`targeted_basis`] for the same seed.
pub fn targeted_columns(n: usize, mu_target: f64, m: usize, seed: u64) -> Result<Array2<f64>> {
    if m == 0 || m > n {
        return Err(Error::invalid(format!("column count {m} must be in 1..={n}")));
    }
    let v1 = targeted_first_vector(n, mu_target)?;
    let mut rng = seed::rng(seed);
    let mut block = Array2::zeros((n, m));
    block.column_mut(0).assign(&v1);
    for j in 1..m {
        for i in 0..n {
            block[[i, j]] = StandardNormal.sample(&mut rng);
        }
    }
    linalg::qr_orthonormalize(block.view())
}

/// `n x r` column-orthonormal matrix distributed uniformly (Gram–Schmidt of
/// an i.i.d. Gaussian block).
pub fn haar_basis(n: usize, r: usize, seed: u64) -> Result<Array2<f64>> {
    if r == 0 || r > n {
        return Err(Error::invalid(format!("rank {r} must be in 1..={n}")));
    }
    let mut rng = seed::rng(seed);
    let mut block = Array2::zeros((n, r));
    for j in 0..r {
        for i in 0..n {
            block[[i, j]] = StandardNormal.sample(&mut rng);
        }
    }
    linalg::qr_orthonormalize(block.view())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spectrum {
    /// Rank `r`. `eta = None` gives σ_i = 1 for `i ≤ r`; `Some(η)` gives
    /// σ_i = exp(−iη) for `i ≤ r`.
    LowRank { r: usize, eta: Option<f64> },
    /// σ_i = exp(−iη) for `i = 1..=n`.
    Full { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub spectrum: Spectrum,
    pub mu_target: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        check_mu(self.n, self.mu_target)?;
        let eta = match self.spectrum {
            Spectrum::LowRank { r, eta } => {
                if r == 0 || r > self.n {
                    return Err(Error::invalid(format!("rank {r} must be in 1..={}", self.n)));
                }
                eta.unwrap_or(0.0)
            }
            Spectrum::Full { eta } => eta,
        };
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!("decay rate must be finite and >= 0, got {eta}")));
        }
        Ok(())
    }

    /// Prescribed eigenvalues, descending, length `n`.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self.spectrum {
            Spectrum::LowRank { r, eta } => (1..=self.n)
                .map(|i| match (i <= r, eta) {
                    (false, _) => 0.0,
                    (true, None) => 1.0,
                    (true, Some(eta)) => (-(i as f64) * eta).exp(),
                })
                .collect(),
            Spectrum::Full { eta } => (1..=self.n).map(|i| (-(i as f64) * eta).exp()).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticMatrix {
    pub matrix: SymMatrix,
    pub eigenvalues: Vec<f64>,
    /// Coherence of the eigenvectors carrying the spectrum: the top `r` in
    /// low-rank mode, the whole basis in full mode.
    pub realized_mu: f64,
}

/// `G = V diag(σ) Vᵀ` with `V` the targeted basis.
pub fn synth_spsd(spec: &SyntheticSpec) -> Result<SyntheticMatrix> {
    spec.validate()?;
    let n = spec.n;
    let cols = match spec.spectrum {
        Spectrum::LowRank { r, .. } => r,
        Spectrum::Full { .. } => n,
    };
    let basis = targeted_columns(n, spec.mu_target, cols, spec.seed)?;
    let realized_mu = coherence::coherence_of(basis.view())?.mu;
    let eigenvalues = spec.eigenvalues();
    let sigma = Array1::from(eigenvalues[..cols].to_vec());
    let scaled = &basis * &sigma.view().insert_axis(Axis(0));
    let matrix = SymMatrix::new(scaled.dot(&basis.t()))?;
    Ok(SyntheticMatrix { matrix, eigenvalues, realized_mu })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumReport {
    pub k: usize,
    pub fraction: f64,
}

/// `Σ_{i≤k} σ_i / Σ_i σ_i` for a non-negative descending spectrum.
pub fn spectrum_fraction(values: &[f64], k: usize) -> Result<SpectrumReport> {
    if k == 0 || k > values.len() {
        return Err(Error::invalid(format!("k={k} must be in 1..={}", values.len())));
    }
    if values.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::invalid("spectrum must be non-negative"));
    }
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroSpectrum);
    }
    let head: f64 = values[..k].iter().sum();
    Ok(SpectrumReport { k, fraction: head / total })
}

/// Closed form of the top-`k` fraction for σ_i = exp(−iη), i = 1..=n:
/// `(1 − e^{−kη}) / (1 − e^{−nη})`, with the `η → 0` limit `k/n`.
pub fn decay_fraction(n: usize, k: usize, eta: f64) -> f64 {
    if eta == 0.0 {
        return k as f64 / n as f64;
    }
    (-(k as f64) * eta).exp_m1() / (-(n as f64) * eta).exp_m1()
}

/// Decay rate whose top-`k` fraction equals `target`, by bisection on
/// [`decay_fraction`].
pub fn solve_eta_for_fraction(n: usize, k: usize, target: f64) -> Result<f64> {
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("k={k} must be in 1..{n}")));
    }
    let floor = k as f64 / n as f64;
    if !(target > floor && target < 1.0) {
        return Err(Error::invalid(format!(
            "target fraction {target} unreachable: must lie in ({floor}, 1)"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0 / k as f64;
    while decay_fraction(n, k, hi) < target {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::invalid("decay rate bracket overflowed"));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if decay_fraction(n, k, mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
