use std::fs::OpenOptions;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nystrom_coherence::coherence::SamplingBoundParams;
use nystrom_coherence::harness::{
    self, BoundConfig, FullRankConfig, GrowthConfig, GrowthInput, MatrixSource, Outcome, OutputFormat,
    RecoveryConfig, ReconConfig,
};
use nystrom_coherence::kernel::{self, KernelSpec};
use nystrom_coherence::linalg::RankTolerance;
use nystrom_coherence::synth::{Spectrum, SyntheticSpec};
use nystrom_coherence::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "nyscoh", version, about = "Nyström approximation and matrix coherence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Trials per grid cell (command-specific default when omitted).
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Output file; records are appended when it already has content.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Relative eigenvalue cutoff for numerical rank (default n·1e-12).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Sample columns with replacement instead of without.
    #[arg(long, global = true)]
    with_replacement: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Percent error of rank-l Nyström approximations over an l grid (k = l).
    Recon {
        #[command(flatten)]
        source: SourceArgs,
        /// l values: comma list or start:end:step.
        #[arg(long, default_value = "5:200:5")]
        l_grid: String,
        /// Truncate the source to this rank first (default 100 for dataset and matrix sources).
        #[arg(long)]
        truncate: Option<usize>,
    },
    /// Mean coherence of subsampled matrices across sizes.
    CoherenceGrowth {
        #[command(flatten)]
        source: SourceArgs,
        /// Sizes: comma list or start:end:step.
        #[arg(long)]
        sizes: String,
        /// Rank of the eigenvector block (default min(100, size/2)).
        #[arg(long = "growth-rank")]
        growth_rank: Option<usize>,
    },
    /// Full-rank grid over spectrum fraction, coherence and percent sampled.
    FullRank {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        k: usize,
        /// Nyström truncation rank (defaults to k).
        #[arg(long)]
        approx_rank: Option<usize>,
        #[arg(long, default_value = "0.8,0.9,0.95,0.99")]
        fractions: String,
        /// Coherence targets; accepts numbers and `sqrtn`, `sqrtn/4` style tokens.
        #[arg(long, default_value = "1,sqrtn/4,sqrtn/2,sqrtn")]
        mu: String,
        #[arg(long, default_value = "5,10,15,20,25,30")]
        percents: String,
        #[arg(long, default_value_t = 10)]
        matrices: usize,
        #[arg(long, default_value_t = 5)]
        subsets: usize,
    },
    /// Monte Carlo estimate of Pr[rank(W) = r].
    RecoveryProb {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        l: usize,
        /// Target rank (default: numerical rank of the source).
        #[arg(long = "target-rank")]
        target_rank: Option<usize>,
    },
    /// Coherence-based minimum column count (C1 = C2 = 1 unless overridden).
    Bound {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        mu: f64,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        /// Report whether the bound exceeds this dimension.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Export a synthetic matrix as a square CSV grid.
    Gen {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Build a kernel Gram matrix from a CSV dataset and export it.
    Gram {
        #[command(flatten)]
        source: SourceArgs,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
enum SourceKind {
    Synthetic,
    Pathological,
    Haar,
    Dataset,
    Matrix,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Args, Debug)]
struct SourceArgs {
    #[arg(long, value_enum, default_value_t = SourceKind::Synthetic)]
    source: SourceKind,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Rank of the synthetic or pathological matrix.
    #[arg(long, default_value_t = 100)]
    rank: usize,
    #[arg(long, default_value_t = 1.0)]
    mu_target: f64,
    /// Decay rate η; with --full the whole spectrum decays as exp(-iη).
    #[arg(long)]
    eta: Option<f64>,
    /// Full-rank synthetic spectrum instead of exact rank.
    #[arg(long)]
    full: bool,
    /// Seed of the synthetic matrix (defaults to --seed).
    #[arg(long)]
    matrix_seed: Option<u64>,
    /// Dataset CSV (one point per row).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum, default_value_t = KernelKind::Linear)]
    kernel: KernelKind,
    /// RBF γ; the median heuristic is used when omitted.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, default_value_t = 256)]
    median_cap: usize,
    /// Standardize features before building the kernel.
    #[arg(long)]
    zscore: bool,
    /// Square matrix CSV.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

impl SourceArgs {
    fn kernel_spec(&self, seed: u64) -> Result<KernelSpec> {
        match (self.kernel, self.gamma) {
            (KernelKind::Linear, _) => Ok(KernelSpec::Linear),
            (KernelKind::Rbf, Some(g)) => KernelSpec::rbf(g),
            (KernelKind::Rbf, None) => Ok(KernelSpec::rbf_median(self.median_cap, seed)),
        }
    }

    fn matrix_source(&self, seed: u64) -> Result<MatrixSource> {
        match self.source {
            SourceKind::Synthetic => {
                let spectrum = match (self.full, self.eta) {
                    (true, eta) => Spectrum::Full { eta: eta.unwrap_or(0.0) },
                    (false, eta) => Spectrum::LowRank { r: self.rank, eta },
                };
                Ok(MatrixSource::Synthetic(SyntheticSpec {
                    n: self.n,
                    spectrum,
                    mu_target: self.mu_target,
                    seed: self.matrix_seed.unwrap_or(seed),
                }))
            }
            SourceKind::Pathological => Ok(MatrixSource::Pathological { n: self.n, r: self.rank }),
            SourceKind::Dataset => Ok(MatrixSource::Dataset {
                path: self.data.clone().ok_or_else(|| Error::InvalidParameter("--data is required".into()))?,
                has_header: self.header,
                kernel: self.kernel_spec(seed)?,
                standardize: self.zscore,
            }),
            SourceKind::Matrix => Ok(MatrixSource::MatrixFile {
                path: self.matrix.clone().ok_or_else(|| Error::InvalidParameter("--matrix is required".into()))?,
            }),
            SourceKind::Haar => Err(Error::InvalidParameter(
                "the haar source is only available for coherence-growth".into(),
            )),
        }
    }
}

fn parse_usize_grid(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter(format!("cannot parse grid {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let nums = parts.iter().map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        if nums[2] == 0 || nums[0] > nums[1] {
            return Err(bad());
        }
        return Ok((nums[0]..=nums[1]).step_by(nums[2]).collect());
    }
    s.split(',').map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| Error::InvalidParameter(format!("cannot parse {p:?} as a number"))))
        .collect()
}

/// `sqrtn`, `sqrtn/4`, `2*sqrtn` or a plain number.
fn parse_mu_list(s: &str, n: usize) -> Result<Vec<f64>> {
    let root = (n as f64).sqrt();
    s.split(',')
        .map(|tok| {
            let tok = tok.trim();
            let bad = || Error::InvalidParameter(format!("cannot parse coherence target {tok:?}"));
            if let Some(rest) = tok.strip_prefix("sqrtn") {
                return match rest.strip_prefix('/') {
                    Some(div) => Ok(root / div.parse::<f64>().map_err(|_| bad())?),
                    None if rest.is_empty() => Ok(root),
                    None => Err(bad()),
                };
            }
            if let Some(mult) = tok.strip_suffix("*sqrtn") {
                return Ok(mult.parse::<f64>().map_err(|_| bad())? * root);
            }
            tok.parse::<f64>().map_err(|_| bad())
        })
        .collect()
}

fn tolerance(cli: &Cli) -> Result<RankTolerance> {
    match cli.tol {
        Some(t) => RankTolerance::relative(t),
        None => Ok(RankTolerance::default()),
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Jsonl => OutputFormat::JsonLines,
    };
    match &cli.out {
        Some(path) => {
            let has_content = std::fs::metadata(path).map(|m| m.len() > 0).unwrap_or(false);
            let file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|source| Error::Io { path: path.clone(), source })?;
            harness::write_records(&outcome.records, format, !has_content, file)
        }
        None => harness::write_records(&outcome.records, format, true, io::stdout().lock()),
    }
}

fn export_matrix(cli: &Cli, m: &nystrom_coherence::linalg::SymMatrix) -> Result<()> {
    let io_err = |path: PathBuf| move |source| Error::Io { path, source };
    match &cli.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(io_err(path.clone()))?;
            let mut w = io::BufWriter::new(file);
            kernel::write_matrix_csv(m, &mut w).map_err(io_err(path.clone()))?;
            w.flush().map_err(io_err(path.clone()))
        }
        None => kernel::write_matrix_csv(m, io::stdout().lock()).map_err(io_err(PathBuf::from("<stdout>"))),
    }
}

fn run(cli: &Cli) -> Result<Option<Outcome>> {
    let tol = tolerance(cli)?;
    let outcome = match &cli.command {
        Command::Recon { source, l_grid, truncate } => {
            let default_truncate = matches!(source.source, SourceKind::Dataset | SourceKind::Matrix).then_some(100);
            harness::run_recon(&ReconConfig {
                source: source.matrix_source(cli.seed)?,
                truncate: truncate.or(default_truncate),
                l_grid: parse_usize_grid(l_grid)?,
                trials: cli.trials.unwrap_or(10),
                base_seed: cli.seed,
                replacement: cli.with_replacement,
                tol,
            })?
        }
        Command::CoherenceGrowth { source, sizes, growth_rank } => {
            let input = match source.source {
                SourceKind::Haar => GrowthInput::Haar,
                SourceKind::Pathological => GrowthInput::Pathological,
                _ => GrowthInput::Matrix(source.matrix_source(cli.seed)?),
            };
            harness::run_coherence_growth(&GrowthConfig {
                input,
                sizes: parse_usize_grid(sizes)?,
                rank: growth_rank.or(match source.source {
                    SourceKind::Pathological => Some(source.rank),
                    _ => None,
                }),
                trials: cli.trials.unwrap_or(10),
                base_seed: cli.seed,
                tol,
            })?
        }
        Command::FullRank { n, k, approx_rank, fractions, mu, percents, matrices, subsets } => {
            let cfg = FullRankConfig {
                n: *n,
                k: *k,
                approx_rank: *approx_rank,
                fractions: parse_f64_list(fractions)?,
                mu_targets: parse_mu_list(mu, *n)?,
                percents: parse_f64_list(percents)?,
                matrices: cli.trials.unwrap_or(*matrices),
                subsets: *subsets,
                base_seed: cli.seed,
                replacement: cli.with_replacement,
                tol,
            };
            harness::run_full_rank(&cfg)?.0
        }
        Command::RecoveryProb { source, l, target_rank } => harness::run_recovery(&RecoveryConfig {
            source: source.matrix_source(cli.seed)?,
            rank: *target_rank,
            l: *l,
            trials: cli.trials.unwrap_or(200),
            base_seed: cli.seed,
            replacement: cli.with_replacement,
            tol,
        })?,
        Command::Bound { r, mu, delta, c1, c2, n } => {
            eprintln!("note: C1 = {c1}, C2 = {c2}; the bound is qualitative unless the constants are calibrated");
            harness::run_bound(&BoundConfig {
                params: SamplingBoundParams::with_constants(*r, *mu, *delta, *c1, *c2)?,
                n: *n,
            })
        }
        Command::Gen { source } => {
            let built = source.matrix_source(cli.seed)?.build()?;
            if let Some(mu) = built.mu_realized {
                eprintln!("realized coherence: {mu}");
            }
            export_matrix(cli, &built.matrix)?;
            return Ok(None);
        }
        Command::Gram { source } => {
            let path = source.data.clone().ok_or_else(|| Error::InvalidParameter("--data is required".into()))?;
            let mut data = kernel::load_csv(&path, source.header)?;
            if source.zscore {
                data = data.standardized();
            }
            let g = kernel::gram(&data, source.kernel_spec(cli.seed)?)?;
            export_matrix(cli, &g)?;
            return Ok(None);
        }
    };
    emit(cli, &outcome)?;
    Ok(Some(outcome))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Some(outcome)) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            for f in &outcome.failures {
                eprintln!("failed: {f}");
            }
            if outcome.is_complete() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
