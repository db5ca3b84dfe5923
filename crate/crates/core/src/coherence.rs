//! Coherence `μ(V_r) = √n · max_{i,j} |V_r[i,j]|` of an orthonormal basis,
//! its growth under subsampling, and the coherence-based sample-size bound.

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, eig_sym, RankTolerance, SymMatrix};
use crate::nystrom::{sample_columns, SampleScheme};
use crate::seed;
use crate::synth;

/// Inputs to [`coherence_of`] may deviate from orthonormality by this much.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    pub mu: f64,
    pub r: usize,
    pub n: usize,
    /// `(row, column)` of the largest-magnitude entry; ties resolve to the
    /// lexicographically smallest position.
    pub argmax: (usize, usize),
}

/// Coherence of an `n x r` column-orthonormal matrix.
pub fn coherence_of(v: ArrayView2<f64>) -> Result<CoherenceReport> {
    let (n, r) = v.dim();
    if n == 0 || r == 0 {
        return Err(Error::invalid(format!("basis must be non-empty, got {n}x{r}")));
    }
    let deviation = linalg::orthonormality_deviation(v);
    if !(deviation <= ORTHONORMAL_TOL) {
        return Err(Error::NotOrthonormal { deviation });
    }
    let mut best = -1.0;
    let mut argmax = (0, 0);
    for ((i, j), x) in v.indexed_iter() {
        if x.abs() > best {
            best = x.abs();
            argmax = (i, j);
        }
    }
    Ok(CoherenceReport { mu: (n as f64).sqrt() * best, r, n, argmax })
}

/// Coherence of the top-`r` eigenvectors of `g`.
pub fn coherence_of_matrix(g: &SymMatrix, r: usize, tol: RankTolerance) -> Result<CoherenceReport> {
    let decomp = eig_sym(g)?;
    let rank = decomp.rank(tol);
    if r == 0 || r > rank {
        return Err(Error::invalid(format!("requested rank {r} exceeds numerical rank {rank}")));
    }
    coherence_of(decomp.vectors.slice(ndarray::s![.., ..r]))
}

/// What [`coherence_growth`] measures at each size.
#[derive(Debug, Clone, Copy)]
pub enum GrowthSource<'a> {
    /// Uniform principal submatrices of a fixed SPSD matrix.
    Matrix(&'a SymMatrix),
    /// A fresh uniformly random `size x r` orthonormal basis per trial.
    Haar,
    /// The diagonal rank-`r` matrix of canonical columns at each size.
    Pathological,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthPoint {
    pub n: usize,
    pub r: usize,
    /// Per-trial coherence, in trial order.
    pub mus: Vec<f64>,
    pub mean_mu: f64,
    /// Set when the size was not measured.
    pub skipped: Option<String>,
}

/// Default rank at a given size: 100 when it fits, else `max(1, size/2)`.
pub fn default_growth_rank(size: usize) -> usize {
    if size >= 200 {
        100
    } else {
        (size / 2).max(1)
    }
}

/// Mean coherence at each size over `trials` seeded trials. Trial `t` at size
/// `m` uses seed `derive(derive(seed, m), t)`.
pub fn coherence_growth(
    source: GrowthSource<'_>,
    sizes: &[usize],
    rank: Option<usize>,
    trials: usize,
    seed: u64,
    tol: RankTolerance,
) -> Result<Vec<GrowthPoint>> {
    if sizes.is_empty() {
        return Err(Error::invalid("size grid must be non-empty"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    if let GrowthSource::Matrix(g) = source {
        if let Some(&too_big) = sizes.iter().find(|&&m| m > g.n()) {
            return Err(Error::invalid(format!("size {too_big} exceeds source dimension {}", g.n())));
        }
    }
    sizes
        .iter()
        .map(|&size| {
            let r = rank.unwrap_or_else(|| default_growth_rank(size));
            if size == 0 || size < r {
                return Ok(GrowthPoint {
                    n: size,
                    r,
                    mus: Vec::new(),
                    mean_mu: f64::NAN,
                    skipped: Some(format!("size {size} smaller than rank {r}")),
                });
            }
            let size_seed = seed::derive(seed, size as u64);
            let mus = (0..trials)
                .into_par_iter()
                .map(|t| growth_trial(source, size, r, seed::derive(size_seed, t as u64), tol))
                .collect::<Result<Vec<Option<f64>>>>()?;
            if mus.iter().any(Option::is_none) {
                return Ok(GrowthPoint {
                    n: size,
                    r,
                    mus: Vec::new(),
                    mean_mu: f64::NAN,
                    skipped: Some(format!("subsample of size {size} has numerical rank below {r}")),
                });
            }
            let mus: Vec<f64> = mus.into_iter().flatten().collect();
            let mean_mu = mus.iter().sum::<f64>() / mus.len() as f64;
            Ok(GrowthPoint { n: size, r, mus, mean_mu, skipped: None })
        })
        .collect()
}

fn growth_trial(source: GrowthSource<'_>, size: usize, r: usize, seed: u64, tol: RankTolerance) -> Result<Option<f64>> {
    match source {
        GrowthSource::Matrix(g) => {
            let sub = if size == g.n() {
                g.clone()
            } else {
                g.principal(&sample_columns(g.n(), &SampleScheme::new(size, seed))?)
            };
            let decomp = eig_sym(&sub)?;
            if decomp.rank(tol) < r {
                return Ok(None);
            }
            Ok(Some(coherence_of(decomp.vectors.slice(ndarray::s![.., ..r]))?.mu))
        }
        GrowthSource::Haar => Ok(Some(coherence_of(synth::haar_basis(size, r, seed)?.view())?.mu)),
        // eigenvectors of diag(1..1, 0..0) are the leading canonical vectors
        GrowthSource::Pathological => {
            let basis = Array2::<f64>::eye(size).slice_move(ndarray::s![.., ..r]);
            Ok(Some(coherence_of(basis.view())?.mu))
        }
    }
}

/// Parameters of `l ≥ r μ² max(C₁ ln r, C₂ ln(3/δ))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingBoundParams {
    pub r: usize,
    pub mu: f64,
    pub delta: f64,
    pub c1: f64,
    pub c2: f64,
}

impl SamplingBoundParams {
    /// Uses `C₁ = C₂ = 1`.
    pub fn new(r: usize, mu: f64, delta: f64) -> Result<Self> {
        Self::with_constants(r, mu, delta, 1.0, 1.0)
    }

    pub fn with_constants(r: usize, mu: f64, delta: f64, c1: f64, c2: f64) -> Result<Self> {
        if r == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if !(mu >= 1.0 && mu.is_finite()) {
            return Err(Error::invalid(format!("coherence must be >= 1, got {mu}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
        }
        if !(c1 > 0.0 && c2 > 0.0 && c1.is_finite() && c2.is_finite()) {
            return Err(Error::invalid("constants C1, C2 must be positive"));
        }
        Ok(Self { r, mu, delta, c1, c2 })
    }
}

/// `⌈r μ² max(C₁ ln r, C₂ ln(3/δ))⌉`.
pub fn min_samples(p: &SamplingBoundParams) -> usize {
    let r = p.r as f64;
    let factor = (p.c1 * r.ln()).max(p.c2 * (3.0 / p.delta).ln());
    let raw = r * p.mu * p.mu * factor;
    // absorb round-off from ln() before taking the ceiling
    let nearest = raw.round();
    let snapped = if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) { nearest } else { raw.ceil() };
    snapped.max(0.0) as usize
}

/// The bound cannot be met by sampling at most `n` distinct columns.
pub fn bound_is_vacuous(samples: usize, n: usize) -> bool {
    samples > n
}

/// Rows of `V_r` picked by uniform sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledRows {
    pub matrix: Array2<f64>,
    pub indices: Vec<usize>,
}

/// Samples `l` rows of `v` uniformly, without replacement unless
/// `replacement` is set (which also allows `l > n`).
pub fn sample_rows(v: ArrayView2<f64>, l: usize, replacement: bool, seed: u64) -> Result<SampledRows> {
    let scheme = SampleScheme { l, replacement, seed };
    let indices = sample_columns(v.nrows(), &scheme)?;
    Ok(SampledRows { matrix: v.select(Axis(0), &indices), indices })
}

/// Spectral norm `‖(n/l) SᵀS − I‖₂` for the `l x r` sample `S`.
pub fn check_isometry(s: &SampledRows, n: usize) -> Result<f64> {
    let l = s.matrix.nrows();
    let r = s.matrix.ncols();
    let mut m = s.matrix.t().dot(&s.matrix) * (n as f64 / l as f64);
    for i in 0..r {
        m[[i, i]] -= 1.0;
    }
    let decomp = eig_sym(&SymMatrix::new(m)?)?;
    Ok(decomp.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}
