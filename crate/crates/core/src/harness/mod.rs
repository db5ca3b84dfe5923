//! Experiment drivers behind the `nyscoh` CLI.
//!
//! Each driver expands a parameter grid into independent cells, runs them on
//! the rayon pool, and returns records in grid order. A cell's seed is
//! derived from the base seed, the experiment, its parameters and its trial
//! index ([`cell_seed`]), so any single cell can be replayed.

mod record;

use std::path::PathBuf;

use rayon::prelude::*;

pub use record::{cell_seed, write_records, Experiment, ExperimentRecord, OutputFormat, Params, CSV_HEADER};

use crate::coherence::{self, GrowthSource, SamplingBoundParams};
use crate::error::{Error, Result};
use crate::kernel::{self, KernelSpec};
use crate::linalg::{eig_sym, RankTolerance, SymMatrix};
use crate::nystrom::{self, SampleScheme};
use crate::seed;
use crate::synth::{self, Spectrum, SyntheticSpec};

/// Records plus per-cell problems. Failures make the CLI exit nonzero;
/// warnings do not.
#[derive(Debug, Default)]
pub struct Outcome {
    pub records: Vec<ExperimentRecord>,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Where the matrix under study comes from.
#[derive(Debug, Clone)]
pub enum MatrixSource {
    Synthetic(SyntheticSpec),
    Pathological { n: usize, r: usize },
    Dataset { path: PathBuf, has_header: bool, kernel: KernelSpec, standardize: bool },
    MatrixFile { path: PathBuf },
}

/// A materialized source with the metadata that goes into records.
#[derive(Debug, Clone)]
pub struct BuiltSource {
    pub matrix: SymMatrix,
    pub rank: Option<usize>,
    pub mu_target: Option<f64>,
    pub mu_realized: Option<f64>,
    pub kernel: Option<String>,
}

impl MatrixSource {
    pub fn build(&self) -> Result<BuiltSource> {
        match self {
            MatrixSource::Synthetic(spec) => {
                let s = synth::synth_spsd(spec)?;
                let rank = match spec.spectrum {
                    Spectrum::LowRank { r, .. } => Some(r),
                    Spectrum::Full { .. } => None,
                };
                Ok(BuiltSource {
                    matrix: s.matrix,
                    rank,
                    mu_target: Some(spec.mu_target),
                    mu_realized: Some(s.realized_mu),
                    kernel: None,
                })
            }
            MatrixSource::Pathological { n, r } => {
                if *r == 0 || r > n {
                    return Err(Error::invalid(format!("pathological rank {r} must be in 1..={n}")));
                }
                Ok(BuiltSource {
                    matrix: synth::pathological(*n, *r),
                    rank: Some(*r),
                    mu_target: None,
                    mu_realized: Some((*n as f64).sqrt()),
                    kernel: Some("pathological".into()),
                })
            }
            MatrixSource::Dataset { path, has_header, kernel, standardize } => {
                let mut data = kernel::load_csv(path, *has_header)?;
                if *standardize {
                    data = data.standardized();
                }
                Ok(BuiltSource {
                    matrix: kernel::gram(&data, *kernel)?,
                    rank: None,
                    mu_target: None,
                    mu_realized: None,
                    kernel: Some(kernel.label()),
                })
            }
            MatrixSource::MatrixFile { path } => Ok(BuiltSource {
                matrix: kernel::load_matrix_csv(path)?,
                rank: None,
                mu_target: None,
                mu_realized: None,
                kernel: Some("matrix".into()),
            }),
        }
    }
}

/// Best rank-`r` approximation `Σ_{t≤r} σ_t v_t v_tᵀ` of an SPSD matrix.
/// Round-off negatives are clamped; genuinely indefinite input is rejected.
pub fn truncate_rank(g: &SymMatrix, r: usize) -> Result<SymMatrix> {
    if r == 0 || r > g.n() {
        return Err(Error::invalid(format!("truncation rank {r} must be in 1..={}", g.n())));
    }
    Ok(eig_sym(g)?.into_psd()?.top(r).reconstruct())
}

/// Reconstruction sweep: `k = l`, percent error per `(l, trial)`.
#[derive(Debug, Clone)]
pub struct ReconConfig {
    pub source: MatrixSource,
    /// Truncate the source to this rank first. Synthetic and pathological
    /// sources are already low rank and default to no truncation.
    pub truncate: Option<usize>,
    pub l_grid: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub replacement: bool,
    pub tol: RankTolerance,
}

pub fn default_l_grid() -> Vec<usize> {
    (5..=200).step_by(5).collect()
}

/// Percent error of one reconstruction cell.
pub fn recon_cell(g: &SymMatrix, l: usize, k: usize, replacement: bool, seed: u64, tol: RankTolerance) -> Result<f64> {
    let model = nystrom::fit(g, &SampleScheme { l, replacement, seed }, k, tol)?;
    nystrom::percent_error(g, &model)
}

pub fn run_recon(cfg: &ReconConfig) -> Result<Outcome> {
    check_grid(&cfg.l_grid, cfg.trials)?;
    let built = cfg.source.build()?;
    let n = built.matrix.n();
    if !cfg.replacement {
        if let Some(&l) = cfg.l_grid.iter().find(|&&l| l > n) {
            return Err(Error::invalid(format!("l={l} exceeds matrix dimension n={n}")));
        }
    }
    if cfg.l_grid.contains(&0) {
        return Err(Error::invalid("l must be at least 1"));
    }
    let (g, r) = match cfg.truncate {
        Some(r) => (truncate_rank(&built.matrix, r)?, Some(r)),
        None => (built.matrix, built.rank),
    };

    let cells: Vec<(usize, usize)> =
        cfg.l_grid.iter().flat_map(|&l| (0..cfg.trials).map(move |t| (l, t))).collect();
    let results: Vec<(u64, Result<f64>)> = cells
        .par_iter()
        .map(|&(l, t)| {
            let s = cell_seed(cfg.base_seed, Experiment::Recon, &[("n", n.to_string()), ("l", l.to_string())], t);
            (s, recon_cell(&g, l, l, cfg.replacement, s, cfg.tol))
        })
        .collect();

    let base = Params {
        n: Some(n),
        r,
        mu_target: built.mu_target,
        mu_realized: built.mu_realized,
        kernel: built.kernel.clone(),
        ..Default::default()
    };
    let mut out = Outcome::default();
    for (li, &l) in cfg.l_grid.iter().enumerate() {
        let mut vals = Vec::with_capacity(cfg.trials);
        for t in 0..cfg.trials {
            let (s, res) = &results[li * cfg.trials + t];
            match res {
                Ok(v) => {
                    vals.push(*v);
                    out.records.push(ExperimentRecord::new(
                        Experiment::Recon,
                        "percent_error",
                        *v,
                        Params { k: Some(l), l: Some(l), seed: *s, trial: Some(t), ..base.clone() },
                    ));
                }
                Err(e) => out.failures.push(format!("recon l={l} trial={t}: {e}")),
            }
        }
        if !vals.is_empty() {
            out.records.push(ExperimentRecord::new(
                Experiment::Recon,
                "mean_percent_error",
                mean(&vals),
                Params { k: Some(l), l: Some(l), seed: cfg.base_seed, ..base.clone() },
            ));
        }
    }
    Ok(out)
}

/// What to measure in a coherence-growth run.
#[derive(Debug, Clone)]
pub enum GrowthInput {
    Matrix(MatrixSource),
    Haar,
    Pathological,
}

#[derive(Debug, Clone)]
pub struct GrowthConfig {
    pub input: GrowthInput,
    pub sizes: Vec<usize>,
    pub rank: Option<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub tol: RankTolerance,
}

pub fn run_coherence_growth(cfg: &GrowthConfig) -> Result<Outcome> {
    check_grid(&cfg.sizes, cfg.trials)?;
    let built = match &cfg.input {
        GrowthInput::Matrix(src) => Some(src.build()?),
        _ => None,
    };
    let (source, kernel) = match (&cfg.input, &built) {
        (GrowthInput::Matrix(_), Some(b)) => (GrowthSource::Matrix(&b.matrix), b.kernel.clone()),
        (GrowthInput::Haar, _) => (GrowthSource::Haar, Some("haar".to_string())),
        _ => (GrowthSource::Pathological, Some("pathological".to_string())),
    };
    let points = coherence::coherence_growth(source, &cfg.sizes, cfg.rank, cfg.trials, cfg.base_seed, cfg.tol)?;
    let mut out = Outcome::default();
    for p in points {
        if let Some(reason) = p.skipped {
            out.warnings.push(format!("coherence-growth size {}: skipped ({reason})", p.n));
            continue;
        }
        let size_seed = seed::derive(cfg.base_seed, p.n as u64);
        let base = Params { n: Some(p.n), r: Some(p.r), kernel: kernel.clone(), ..Default::default() };
        for (t, mu) in p.mus.iter().enumerate() {
            out.records.push(ExperimentRecord::new(
                Experiment::CoherenceGrowth,
                "coherence",
                *mu,
                Params { seed: seed::derive(size_seed, t as u64), trial: Some(t), ..base.clone() },
            ));
        }
        out.records.push(ExperimentRecord::new(
            Experiment::CoherenceGrowth,
            "mean_coherence",
            p.mean_mu,
            Params { seed: cfg.base_seed, ..base.clone() },
        ));
        out.records.push(ExperimentRecord::new(
            Experiment::CoherenceGrowth,
            "mean_coherence_over_sqrt_log_n",
            p.mean_mu / (p.n as f64).ln().sqrt(),
            Params { seed: cfg.base_seed, ..base },
        ));
    }
    Ok(out)
}

/// Full-rank grid: spectrum fraction × coherence target × percent of
/// columns sampled, `matrices` random matrices per level and `subsets`
/// column subsets per matrix.
#[derive(Debug, Clone)]
pub struct FullRankConfig {
    pub n: usize,
    /// Spectrum-fraction rank; also the Nyström truncation rank unless
    /// `approx_rank` is set.
    pub k: usize,
    pub approx_rank: Option<usize>,
    pub fractions: Vec<f64>,
    pub mu_targets: Vec<f64>,
    pub percents: Vec<f64>,
    pub matrices: usize,
    pub subsets: usize,
    pub base_seed: u64,
    pub replacement: bool,
    pub tol: RankTolerance,
}

impl FullRankConfig {
    pub fn default_grid(base_seed: u64) -> Self {
        let n = 2000;
        let root = (n as f64).sqrt();
        Self {
            n,
            k: 50,
            approx_rank: None,
            fractions: vec![0.8, 0.9, 0.95, 0.99],
            mu_targets: vec![1.0, root / 4.0, root / 2.0, root],
            percents: vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            matrices: 10,
            subsets: 5,
            base_seed,
            replacement: false,
            tol: RankTolerance::default(),
        }
    }

    /// Truncation rank used for sample size `l`.
    pub fn rank_for(&self, l: usize) -> usize {
        self.approx_rank.unwrap_or(self.k).min(l)
    }

    pub fn l_for(&self, percent: f64) -> usize {
        ((percent / 100.0 * self.n as f64).round() as usize).clamp(1, self.n)
    }
}

/// Mean over matrices and subsets at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullRankCell {
    pub fraction: f64,
    pub eta: f64,
    pub mu_target: f64,
    pub mu_realized: f64,
    pub percent: f64,
    pub l: usize,
    pub mean_error: f64,
}

/// Seed of matrix `m` at a `(n, eta, mu_target)` level.
pub fn full_rank_matrix_seed(base_seed: u64, n: usize, eta: f64, mu_target: f64, m: usize) -> u64 {
    cell_seed(
        base_seed,
        Experiment::FullRank,
        &[("n", n.to_string()), ("eta", eta.to_string()), ("mu_target", mu_target.to_string())],
        m,
    )
}

/// Column-subset seed for subset `s` at sample size `l` of a matrix seeded
/// with `matrix_seed`.
pub fn full_rank_subset_seed(matrix_seed: u64, l: usize, s: usize) -> u64 {
    seed::derive(seed::derive(matrix_seed, l as u64), s as u64)
}

pub fn run_full_rank(cfg: &FullRankConfig) -> Result<(Outcome, Vec<FullRankCell>)> {
    if cfg.fractions.is_empty() || cfg.mu_targets.is_empty() || cfg.percents.is_empty() {
        return Err(Error::invalid("full-rank grids must be non-empty"));
    }
    if cfg.matrices == 0 || cfg.subsets == 0 {
        return Err(Error::invalid("matrices and subsets must be at least 1"));
    }
    if cfg.k == 0 || cfg.k >= cfg.n {
        return Err(Error::invalid(format!("k={} must be in 1..{}", cfg.k, cfg.n)));
    }
    if let Some(a) = cfg.approx_rank.filter(|&a| a == 0 || a > cfg.n) {
        return Err(Error::invalid(format!("approximation rank {a} must be in 1..={}", cfg.n)));
    }
    if let Some(p) = cfg.percents.iter().find(|p| !(**p > 0.0 && **p <= 100.0)) {
        return Err(Error::invalid(format!("percent sampled {p} must lie in (0, 100]")));
    }
    let etas = cfg
        .fractions
        .iter()
        .map(|&f| synth::solve_eta_for_fraction(cfg.n, cfg.k, f))
        .collect::<Result<Vec<f64>>>()?;
    let ls: Vec<usize> = cfg.percents.iter().map(|&p| cfg.l_for(p)).collect();

    // one job per generated matrix; each evaluates every (percent, subset)
    let jobs: Vec<(usize, usize, usize)> = (0..etas.len())
        .flat_map(|e| (0..cfg.mu_targets.len()).flat_map(move |u| (0..cfg.matrices).map(move |m| (e, u, m))))
        .collect();
    type MatrixResult = Result<(u64, f64, Vec<Vec<Result<f64>>>)>;
    let per_matrix: Vec<MatrixResult> = jobs
        .par_iter()
        .map(|&(e, u, m)| {
            let eta = etas[e];
            let mu = cfg.mu_targets[u];
            let mseed = full_rank_matrix_seed(cfg.base_seed, cfg.n, eta, mu, m);
            let spec = SyntheticSpec { n: cfg.n, spectrum: Spectrum::Full { eta }, mu_target: mu, seed: mseed };
            let s = synth::synth_spsd(&spec)?;
            let errs = ls
                .iter()
                .map(|&l| {
                    (0..cfg.subsets)
                        .map(|sub| {
                            let sseed = full_rank_subset_seed(mseed, l, sub);
                            recon_cell(&s.matrix, l, cfg.rank_for(l), cfg.replacement, sseed, cfg.tol)
                        })
                        .collect()
                })
                .collect();
            Ok((mseed, s.realized_mu, errs))
        })
        .collect();

    let mut out = Outcome::default();
    let mut cells = Vec::new();
    for (e, &eta) in etas.iter().enumerate() {
        for (u, &mu) in cfg.mu_targets.iter().enumerate() {
            let level: Vec<(usize, &MatrixResult)> = (0..cfg.matrices)
                .map(|m| (m, &per_matrix[(e * cfg.mu_targets.len() + u) * cfg.matrices + m]))
                .collect();
            let realized: Vec<f64> = level.iter().filter_map(|(_, r)| r.as_ref().ok().map(|x| x.1)).collect();
            for (_, r) in &level {
                if let Err(err) = r {
                    out.failures.push(format!("full-rank eta={eta} mu={mu}: {err}"));
                }
            }
            for (pi, (&pct, &l)) in cfg.percents.iter().zip(&ls).enumerate() {
                let mut vals = Vec::new();
                for (m, r) in &level {
                    let Ok((mseed, mu_real, errs)) = r else { continue };
                    for (sub, res) in errs[pi].iter().enumerate() {
                        let params = Params {
                            n: Some(cfg.n),
                            k: Some(cfg.rank_for(l)),
                            l: Some(l),
                            eta: Some(eta),
                            mu_target: Some(mu),
                            mu_realized: Some(*mu_real),
                            seed: *mseed,
                            trial: Some(m * cfg.subsets + sub),
                            ..Default::default()
                        };
                        match res {
                            Ok(v) => {
                                vals.push(*v);
                                out.records.push(ExperimentRecord::new(Experiment::FullRank, "percent_error", *v, params));
                            }
                            Err(err) => out.failures.push(format!("full-rank eta={eta} mu={mu} l={l} trial={}: {err}", m * cfg.subsets + sub)),
                        }
                    }
                }
                if vals.is_empty() {
                    continue;
                }
                let cell = FullRankCell {
                    fraction: cfg.fractions[e],
                    eta,
                    mu_target: mu,
                    mu_realized: mean(&realized),
                    percent: pct,
                    l,
                    mean_error: mean(&vals),
                };
                let params = Params {
                    n: Some(cfg.n),
                    k: Some(cfg.rank_for(l)),
                    l: Some(l),
                    eta: Some(eta),
                    mu_target: Some(mu),
                    mu_realized: Some(cell.mu_realized),
                    seed: cfg.base_seed,
                    ..Default::default()
                };
                out.records.push(ExperimentRecord::new(Experiment::FullRank, "mean_percent_error", cell.mean_error, params.clone()));
                out.records.push(ExperimentRecord::new(Experiment::FullRank, "spectrum_fraction", cell.fraction, params));
                cells.push(cell);
            }
        }
    }
    Ok((out, cells))
}

#[derive(Debug, Clone)]
pub struct RecoveryConfig {
    pub source: MatrixSource,
    /// Target rank; defaults to the numerical rank of the source.
    pub rank: Option<usize>,
    pub l: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub replacement: bool,
    pub tol: RankTolerance,
}

pub fn run_recovery(cfg: &RecoveryConfig) -> Result<Outcome> {
    let built = cfg.source.build()?;
    let g = &built.matrix;
    let n = g.n();
    let r = match cfg.rank {
        Some(r) => r,
        None => crate::linalg::rank_numeric(g, cfg.tol)?,
    };
    let seed = cell_seed(cfg.base_seed, Experiment::RecoveryProb, &[("n", n.to_string()), ("l", cfg.l.to_string())], 0);
    let est = nystrom::estimate_recovery_prob(g, r, cfg.l, cfg.replacement, cfg.trials, seed, cfg.tol)?;
    let params = Params {
        n: Some(n),
        r: Some(r),
        l: Some(cfg.l),
        mu_target: built.mu_target,
        mu_realized: built.mu_realized,
        kernel: built.kernel.clone(),
        seed,
        ..Default::default()
    };
    let mut out = Outcome::default();
    out.records.push(ExperimentRecord::new(Experiment::RecoveryProb, "recovery_probability", est.probability, params.clone()));
    out.records.push(ExperimentRecord::new(Experiment::RecoveryProb, "std_error", est.std_error, params.clone()));
    out.records.push(ExperimentRecord::new(Experiment::RecoveryProb, "trials", est.trials as f64, params.clone()));
    if let MatrixSource::Pathological { n, r } = cfg.source {
        let exact = if cfg.replacement {
            nystrom::replacement_capture_all(n, r, cfg.l)
        } else {
            nystrom::hypergeometric_capture_all(n, r, cfg.l)
        };
        out.records.push(ExperimentRecord::new(Experiment::RecoveryProb, "analytic_probability", exact, params));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct BoundConfig {
    pub params: SamplingBoundParams,
    /// When set, also report whether the bound exceeds `n`.
    pub n: Option<usize>,
}

pub fn run_bound(cfg: &BoundConfig) -> Outcome {
    let l = coherence::min_samples(&cfg.params);
    let params = Params {
        n: cfg.n,
        r: Some(cfg.params.r),
        l: Some(l),
        mu_realized: Some(cfg.params.mu),
        ..Default::default()
    };
    let mut out = Outcome::default();
    out.records.push(ExperimentRecord::new(Experiment::Bound, "min_samples", l as f64, params.clone()));
    if let Some(n) = cfg.n {
        let vacuous = coherence::bound_is_vacuous(l, n);
        out.records.push(ExperimentRecord::new(Experiment::Bound, "bound_vacuous", f64::from(u8::from(vacuous)), params));
        if vacuous {
            out.warnings.push(format!("bound vacuous: {l} samples exceed n={n}"));
        }
    }
    out
}

fn check_grid(grid: &[usize], trials: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("parameter grid must be non-empty"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> RankTolerance {
        RankTolerance::default()
    }

    #[test]
    fn recon_full_sample_is_exact() {
        let cfg = ReconConfig {
            source: MatrixSource::Pathological { n: 30, r: 4 },
            truncate: None,
            l_grid: vec![30],
            trials: 2,
            base_seed: 1,
            replacement: false,
            tol: tol(),
        };
        let out = run_recon(&cfg).unwrap();
        assert!(out.is_complete());
        assert_eq!(out.records.len(), 3);
        assert!(out.records.iter().all(|r| r.value < 1e-9));
    }

    #[test]
    fn recon_rejects_oversized_l_before_running() {
        let cfg = ReconConfig {
            source: MatrixSource::Pathological { n: 10, r: 2 },
            truncate: None,
            l_grid: vec![5, 11],
            trials: 1,
            base_seed: 1,
            replacement: false,
            tol: tol(),
        };
        assert!(run_recon(&cfg).is_err());
    }

    #[test]
    fn recon_records_replay_bitwise() {
        let spec = SyntheticSpec { n: 80, spectrum: Spectrum::LowRank { r: 5, eta: None }, mu_target: 3.0, seed: 4 };
        let cfg = ReconConfig {
            source: MatrixSource::Synthetic(spec),
            truncate: None,
            l_grid: vec![4, 8],
            trials: 3,
            base_seed: 9,
            replacement: false,
            tol: tol(),
        };
        let out = run_recon(&cfg).unwrap();
        let g = synth::synth_spsd(&spec).unwrap().matrix;
        for rec in out.records.iter().filter(|r| r.metric == "percent_error") {
            let l = rec.params.l.unwrap();
            let again = recon_cell(&g, l, l, false, rec.params.seed, tol()).unwrap();
            assert_eq!(again.to_bits(), rec.value.to_bits());
        }
        let again = run_recon(&cfg).unwrap();
        assert_eq!(again.records, out.records);
    }

    #[test]
    fn truncation_keeps_leading_spectrum() {
        let g = SymMatrix::from_diag(&[3.0, 1.0, 2.0]);
        let t = truncate_rank(&g, 2).unwrap();
        assert!((t.get(0, 0) - 3.0).abs() < 1e-15);
        assert!((t.get(2, 2) - 2.0).abs() < 1e-15);
        assert!(t.get(1, 1).abs() < 1e-15);
        assert!(truncate_rank(&SymMatrix::from_diag(&[1.0, -1.0]), 1).is_err());
    }

    #[test]
    fn bound_records() {
        let out = run_bound(&BoundConfig { params: SamplingBoundParams::new(100, 1.0, 0.05).unwrap(), n: Some(300) });
        assert_eq!(out.records[0].value, 461.0);
        assert_eq!(out.records[1].metric, "bound_vacuous");
        assert_eq!(out.records[1].value, 1.0);
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn recovery_on_full_sample() {
        let cfg = RecoveryConfig {
            source: MatrixSource::Pathological { n: 12, r: 3 },
            rank: None,
            l: 12,
            trials: 20,
            base_seed: 3,
            replacement: false,
            tol: tol(),
        };
        let out = run_recovery(&cfg).unwrap();
        let get = |m: &str| out.records.iter().find(|r| r.metric == m).unwrap().value;
        assert_eq!(get("recovery_probability"), 1.0);
        assert_eq!(get("analytic_probability"), 1.0);
    }

    #[test]
    fn full_rank_complete_sampling_is_exact() {
        let cfg = FullRankConfig {
            n: 40,
            k: 5,
            approx_rank: Some(40),
            fractions: vec![0.9],
            mu_targets: vec![1.0],
            percents: vec![100.0],
            matrices: 2,
            subsets: 2,
            base_seed: 5,
            replacement: false,
            tol: tol(),
        };
        let (out, cells) = run_full_rank(&cfg).unwrap();
        assert!(out.is_complete());
        assert_eq!(cells.len(), 1);
        assert!(cells[0].mean_error < 1e-6, "{}", cells[0].mean_error);
    }

    #[test]
    fn growth_records_and_warnings() {
        let cfg = GrowthConfig {
            input: GrowthInput::Pathological,
            sizes: vec![3, 16, 64],
            rank: Some(4),
            trials: 2,
            base_seed: 0,
            tol: tol(),
        };
        let out = run_coherence_growth(&cfg).unwrap();
        assert_eq!(out.warnings.len(), 1);
        let means: Vec<f64> = out.records.iter().filter(|r| r.metric == "mean_coherence").map(|r| r.value).collect();
        assert_eq!(means.len(), 2);
        assert!((means[0] - 4.0).abs() < 1e-12);
        assert!((means[1] - 8.0).abs() < 1e-12);
    }
}
