//! Uniform column sampling and the Nyström approximation `G̃_k = C W_k⁺ Cᵀ`.

use ndarray::{s, Array2};
use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, RankTolerance, SymMatrix};
use crate::seed;

/// Rows per block when accumulating `‖G - G̃‖_F` without forming `G̃`.
const STREAM_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleScheme {
    pub l: usize,
    pub replacement: bool,
    pub seed: u64,
}

impl SampleScheme {
    /// Uniform sampling without replacement.
    pub fn new(l: usize, seed: u64) -> Self {
        Self { l, replacement: false, seed }
    }

    pub fn with_replacement(l: usize, seed: u64) -> Self {
        Self { l, replacement: true, seed }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.l == 0 {
            return Err(Error::invalid("sample count l must be at least 1"));
        }
        if !self.replacement && self.l > n {
            return Err(Error::invalid(format!(
                "cannot sample l={} of n={} columns without replacement",
                self.l, n
            )));
        }
        Ok(())
    }
}

/// Column indices drawn under `scheme`.
///
/// With replacement the draws are returned in draw order and may repeat;
/// without replacement they form an ascending `l`-subset.
pub fn sample_columns(n: usize, scheme: &SampleScheme) -> Result<Vec<usize>> {
    scheme.validate(n)?;
    let mut rng = seed::rng(scheme.seed);
    if scheme.replacement {
        Ok((0..scheme.l).map(|_| rng.random_range(0..n)).collect())
    } else {
        let mut idx = rand::seq::index::sample(&mut rng, n, scheme.l).into_vec();
        idx.sort_unstable();
        Ok(idx)
    }
}

/// Fitted Nyström factors. `G̃_k` is only formed by [`NystromModel::reconstruct`].
#[derive(Debug, Clone, PartialEq)]
pub struct NystromModel {
    indices: Vec<usize>,
    c: Array2<f64>,
    w: SymMatrix,
    k: usize,
    w_pinv: SymMatrix,
}

/// Samples columns under `scheme` and fits the rank-`k` model.
pub fn fit(g: &SymMatrix, scheme: &SampleScheme, k: usize, tol: RankTolerance) -> Result<NystromModel> {
    let indices = sample_columns(g.n(), scheme)?;
    fit_indices(g, indices, k, tol)
}

/// Fits the rank-`k` model on a caller-chosen column set.
pub fn fit_indices(g: &SymMatrix, indices: Vec<usize>, k: usize, tol: RankTolerance) -> Result<NystromModel> {
    let n = g.n();
    let l = indices.len();
    if l == 0 {
        return Err(Error::invalid("at least one column must be sampled"));
    }
    if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
        return Err(Error::invalid(format!("column index {bad} out of range for n={n}")));
    }
    if k == 0 || k > l {
        return Err(Error::invalid(format!("truncation rank k={k} must be in 1..={l}")));
    }
    let c = g.columns(&indices);
    let w = g.principal(&indices);
    let w_pinv = linalg::pinv_trunc(&w, k, tol)?;
    Ok(NystromModel { indices, c, w, k, w_pinv })
}

impl NystromModel {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn c(&self) -> &Array2<f64> {
        &self.c
    }

    pub fn w(&self) -> &SymMatrix {
        &self.w
    }

    pub fn w_pinv(&self) -> &SymMatrix {
        &self.w_pinv
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn l(&self) -> usize {
        self.indices.len()
    }

    /// Materializes `C W_k⁺ Cᵀ` (O(n²) memory).
    pub fn reconstruct(&self) -> SymMatrix {
        let left = self.c.dot(self.w_pinv.as_array());
        SymMatrix::new(left.dot(&self.c.t())).expect("square by construction")
    }

    /// `‖G - G̃_k‖_F`, accumulated over row blocks of `G̃_k`.
    pub fn frobenius_diff(&self, g: &SymMatrix) -> Result<f64> {
        let n = self.n();
        if g.n() != n {
            return Err(Error::DimensionMismatch { expected: n, found: g.n() });
        }
        let left = self.c.dot(self.w_pinv.as_array());
        let ct = self.c.t();
        let mut acc = 0.0;
        let mut start = 0;
        while start < n {
            let end = (start + STREAM_BLOCK).min(n);
            let block = left.slice(s![start..end, ..]).dot(&ct);
            let g_block = g.as_array().slice(s![start..end, ..]);
            acc += block
                .iter()
                .zip(g_block.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            start = end;
        }
        Ok(acc.sqrt())
    }
}

/// `100 · ‖G - G̃_k‖_F / ‖G‖_F`.
pub fn percent_error(g: &SymMatrix, model: &NystromModel) -> Result<f64> {
    let denom = linalg::frobenius(g);
    if denom == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(100.0 * model.frobenius_diff(g)? / denom)
}

/// Monte Carlo estimate of `Pr[rank(W) = r]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryEstimate {
    pub successes: usize,
    pub trials: usize,
    pub probability: f64,
    /// Binomial standard error `sqrt(p(1-p)/trials)` at the estimate.
    pub std_error: f64,
}

/// Fraction of `trials` column draws whose intersection block `W` has
/// numerical rank `r`. Trial `t` samples with seed `derive(seed, t)`.
pub fn estimate_recovery_prob(
    g: &SymMatrix,
    r: usize,
    l: usize,
    replacement: bool,
    trials: usize,
    seed: u64,
    tol: RankTolerance,
) -> Result<RecoveryEstimate> {
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    SampleScheme { l, replacement, seed }.validate(g.n())?;
    let hits = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let scheme = SampleScheme { l, replacement, seed: seed::derive(seed, t as u64) };
            let idx = sample_columns(g.n(), &scheme)?;
            Ok(linalg::rank_numeric(&g.principal(&idx), tol)? == r)
        })
        .collect::<Result<Vec<bool>>>()?;
    let successes = hits.iter().filter(|&&h| h).count();
    let p = successes as f64 / trials as f64;
    Ok(RecoveryEstimate {
        successes,
        trials,
        probability: p,
        std_error: (p * (1.0 - p) / trials as f64).sqrt(),
    })
}

/// Exact probability that an `l`-subset drawn uniformly without replacement
/// from `n` columns contains all `r` designated columns:
/// `C(n-r, l-r) / C(n, l) = Π_{i<r} (l-i)/(n-i)`.
pub fn hypergeometric_capture_all(n: usize, r: usize, l: usize) -> f64 {
    if r > l || l > n {
        return 0.0;
    }
    (0..r).map(|i| (l - i) as f64 / (n - i) as f64).product()
}

/// Probability that `l` i.i.d. uniform draws from `n` columns hit every one
/// of `r` designated columns, by inclusion–exclusion.
pub fn replacement_capture_all(n: usize, r: usize, l: usize) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0;
    for j in 0..=r {
        let term = binom * (1.0 - j as f64 / n as f64).powi(l as i32);
        total += if j % 2 == 0 { term } else { -term };
        binom = binom * (r - j) as f64 / (j + 1) as f64;
    }
    total.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use ndarray::array;

    #[test]
    fn full_sample_without_replacement() {
        let idx = sample_columns(7, &SampleScheme::new(7, 99)).unwrap();
        assert_eq!(idx, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = SampleScheme::new(10, 42);
        assert_eq!(sample_columns(100, &s).unwrap(), sample_columns(100, &s).unwrap());
        let r = SampleScheme::with_replacement(10, 42);
        assert_eq!(sample_columns(100, &r).unwrap(), sample_columns(100, &r).unwrap());
        assert_ne!(sample_columns(100, &s).unwrap(), sample_columns(100, &SampleScheme::new(10, 43)).unwrap());
    }

    #[test]
    fn without_replacement_is_sorted_subset() {
        let idx = sample_columns(50, &SampleScheme::new(20, 5)).unwrap();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(idx.iter().all(|&i| i < 50));
    }

    #[test]
    fn with_replacement_covers_small_population() {
        let idx = sample_columns(10, &SampleScheme::with_replacement(1000, 2024)).unwrap();
        assert_eq!(idx.len(), 1000);
        let mut seen = [false; 10];
        idx.iter().for_each(|&i| seen[i] = true);
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn oversampling_without_replacement_fails() {
        assert!(sample_columns(5, &SampleScheme::new(6, 0)).is_err());
        assert!(sample_columns(5, &SampleScheme::new(0, 0)).is_err());
        assert!(sample_columns(5, &SampleScheme::with_replacement(6, 0)).is_ok());
    }

    #[test]
    fn full_columns_reproduce_invertible_matrix() {
        let g = SymMatrix::new(array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]]).unwrap();
        let m = fit(&g, &SampleScheme::new(3, 1), 3, RankTolerance::default()).unwrap();
        assert!(percent_error(&g, &m).unwrap() < 1e-6);
        let rec = m.reconstruct();
        assert!(linalg::frobenius_diff(&g, &rec).unwrap() / linalg::frobenius(&g) < 1e-8);
    }

    #[test]
    fn rank_two_from_known_factors() {
        // G = FᵀF with F 2x5
        let f = array![[1.0, 0.0, 2.0, -1.0, 0.5], [0.0, 1.0, 1.0, 3.0, -2.0]];
        let g = SymMatrix::new(f.t().dot(&f)).unwrap();
        let m = fit_indices(&g, vec![0, 1], 2, RankTolerance::default()).unwrap();
        assert!(m.frobenius_diff(&g).unwrap() < 1e-10);
        // direct product check
        let direct = m.c().dot(m.w_pinv().as_array()).dot(&m.c().t());
        assert!(linalg::frobenius_diff(&g, &SymMatrix::new(direct).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn w_is_submatrix_of_c() {
        let g = SymMatrix::from_fn(6, |i, j| 1.0 / (1.0 + i as f64 + j as f64)).unwrap();
        let m = fit(&g, &SampleScheme::new(3, 8), 2, RankTolerance::default()).unwrap();
        for (a, &i) in m.indices().iter().enumerate() {
            for b in 0..m.l() {
                assert_eq!(m.w().get(a, b), m.c()[[i, b]]);
            }
        }
    }

    #[test]
    fn fit_rejects_bad_rank() {
        let g = SymMatrix::identity(4);
        assert!(fit(&g, &SampleScheme::new(2, 0), 3, RankTolerance::default()).is_err());
        assert!(fit(&g, &SampleScheme::new(2, 0), 0, RankTolerance::default()).is_err());
        assert!(fit_indices(&g, vec![0, 9], 1, RankTolerance::default()).is_err());
    }

    #[test]
    fn pathological_miss_is_not_recovered() {
        let g = synth::pathological(50, 5);
        let m = fit_indices(&g, vec![10, 20, 30, 40, 45], 5, RankTolerance::default()).unwrap();
        assert!((percent_error(&g, &m).unwrap() - 100.0).abs() < 1e-12);
        let partial = fit_indices(&g, vec![0, 1, 20, 30, 40], 5, RankTolerance::default()).unwrap();
        let expected = 100.0 * (3.0f64 / 5.0).sqrt();
        assert!((percent_error(&g, &partial).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn zero_matrix_cases() {
        let g = SymMatrix::zeros(4);
        let m = fit(&g, &SampleScheme::new(2, 0), 2, RankTolerance::default()).unwrap();
        assert!(m.reconstruct().as_array().iter().all(|&v| v == 0.0));
        assert!(matches!(percent_error(&g, &m), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn streaming_matches_materialized() {
        let n = 600;
        let g = SymMatrix::from_fn(n, |i, j| (-((i as f64 - j as f64) / 40.0).powi(2)).exp()).unwrap();
        let m = fit(&g, &SampleScheme::new(40, 3), 30, RankTolerance::default()).unwrap();
        let streamed = m.frobenius_diff(&g).unwrap();
        let direct = linalg::frobenius_diff(&g, &m.reconstruct()).unwrap();
        assert!((streamed - direct).abs() <= 1e-10 * direct.max(1.0));
    }

    #[test]
    fn recovery_full_sample_is_certain() {
        let g = synth::pathological(20, 4);
        let est = estimate_recovery_prob(&g, 4, 20, false, 10, 1, RankTolerance::default()).unwrap();
        assert_eq!(est.probability, 1.0);
        assert_eq!(est.std_error, 0.0);
        assert!(estimate_recovery_prob(&g, 4, 20, false, 0, 1, RankTolerance::default()).is_err());
    }

    #[test]
    fn hypergeometric_values() {
        let p = hypergeometric_capture_all(100, 5, 5);
        let c100_5 = 75_287_520.0;
        assert!((p - 1.0 / c100_5).abs() < 1e-22);
        assert_eq!(hypergeometric_capture_all(10, 3, 10), 1.0);
        assert_eq!(hypergeometric_capture_all(10, 3, 2), 0.0);
    }

    #[test]
    fn replacement_capture_small_enumeration() {
        // brute force over all n^l draw sequences
        let (n, r, l) = (4usize, 2usize, 3usize);
        let mut hits = 0;
        for code in 0..n.pow(l as u32) {
            let mut c = code;
            let mut seen = [false; 4];
            for _ in 0..l {
                seen[c % n] = true;
                c /= n;
            }
            if seen[..r].iter().all(|&s| s) {
                hits += 1;
            }
        }
        let exact = hits as f64 / n.pow(l as u32) as f64;
        assert!((replacement_capture_all(n, r, l) - exact).abs() < 1e-15);
    }
}
