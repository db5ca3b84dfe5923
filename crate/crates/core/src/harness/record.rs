use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::seed;

/// Column order of the CSV output. Fields that do not apply are left empty.
pub const CSV_HEADER: [&str; 13] = [
    "experiment",
    "metric",
    "value",
    "n",
    "r",
    "k",
    "l",
    "eta",
    "mu_target",
    "mu_realized",
    "kernel",
    "seed",
    "trial",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Recon,
    CoherenceGrowth,
    FullRank,
    RecoveryProb,
    Bound,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Recon => "recon",
            Experiment::CoherenceGrowth => "coherence_growth",
            Experiment::FullRank => "full_rank",
            Experiment::RecoveryProb => "recovery_prob",
            Experiment::Bound => "bound",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: Option<usize>,
    pub r: Option<usize>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub eta: Option<f64>,
    pub mu_target: Option<f64>,
    pub mu_realized: Option<f64>,
    pub kernel: Option<String>,
    pub seed: u64,
    pub trial: Option<usize>,
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: Experiment,
    pub metric: String,
    pub value: f64,
    #[serde(flatten)]
    pub params: Params,
}

impl ExperimentRecord {
    pub fn new(experiment: Experiment, metric: &str, value: f64, params: Params) -> Self {
        Self { experiment, metric: metric.to_string(), value, params }
    }

    fn csv_fields(&self) -> [String; 13] {
        fn opt<T: ToString>(v: &Option<T>) -> String {
            v.as_ref().map(ToString::to_string).unwrap_or_default()
        }
        let p = &self.params;
        [
            self.experiment.to_string(),
            self.metric.clone(),
            fmt_f64(self.value),
            opt(&p.n),
            opt(&p.r),
            opt(&p.k),
            opt(&p.l),
            p.eta.map(fmt_f64).unwrap_or_default(),
            p.mu_target.map(fmt_f64).unwrap_or_default(),
            p.mu_realized.map(fmt_f64).unwrap_or_default(),
            opt(&p.kernel),
            p.seed.to_string(),
            opt(&p.trial),
        ]
    }
}

/// Shortest round-trip representation, in exponent form outside `[1e-4, 1e15)`.
fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

/// Writes records; the CSV header is emitted only when `with_header` is set,
/// so appending to an existing file keeps a single header.
pub fn write_records<W: Write>(
    records: &[ExperimentRecord],
    format: OutputFormat,
    with_header: bool,
    out: W,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            if with_header {
                w.write_record(CSV_HEADER)?;
            }
            for rec in records {
                w.write_record(rec.csv_fields())?;
            }
            w.flush().map_err(csv::Error::from)?;
        }
        OutputFormat::JsonLines => {
            let mut out = out;
            for rec in records {
                serde_json::to_writer(&mut out, rec)?;
                out.write_all(b"\n").map_err(csv::Error::from)?;
            }
        }
    }
    Ok(())
}

/// Seed of one grid cell:
/// `hash64(base_seed, "experiment;key=value;...;trial=t")` with keys sorted
/// ascending, where `hash64` is FNV-1a folded into the base seed and
/// finalized with SplitMix64 (see [`crate::seed::hash_bytes`]).
pub fn cell_seed(base_seed: u64, experiment: Experiment, params: &[(&str, String)], trial: usize) -> u64 {
    let mut kv: Vec<&(&str, String)> = params.iter().collect();
    kv.sort_by(|a, b| a.0.cmp(b.0));
    let mut key = experiment.as_str().to_string();
    for (k, v) in kv {
        key.push(';');
        key.push_str(k);
        key.push('=');
        key.push_str(v);
    }
    key.push_str(";trial=");
    key.push_str(&trial.to_string());
    seed::hash_bytes(base_seed, key.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentRecord {
        ExperimentRecord::new(
            Experiment::Recon,
            "percent_error",
            1.5,
            Params { n: Some(10), l: Some(3), k: Some(3), seed: 7, trial: Some(0), ..Default::default() },
        )
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_records(&[sample()], OutputFormat::Csv, true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "recon,percent_error,1.5,10,,3,3,,,,,7,0");
    }

    #[test]
    fn small_values_use_exponent_and_round_trip() {
        for v in [1.3282413871515494e-8, 0.0, 461.0, 2.5e-300, -7.0e20] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(1.5e-8), "1.5e-8");
    }

    #[test]
    fn appending_skips_header() {
        let mut buf = Vec::new();
        write_records(&[sample()], OutputFormat::Csv, false, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("recon,"));
    }

    #[test]
    fn jsonl_round_trip() {
        let mut buf = Vec::new();
        write_records(&[sample(), sample()], OutputFormat::JsonLines, true, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back: Vec<ExperimentRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(back, vec![sample(), sample()]);
    }

    #[test]
    fn cell_seed_ignores_param_order() {
        let a = cell_seed(1, Experiment::Recon, &[("l", "5".into()), ("n", "10".into())], 2);
        let b = cell_seed(1, Experiment::Recon, &[("n", "10".into()), ("l", "5".into())], 2);
        assert_eq!(a, b);
        assert_ne!(a, cell_seed(1, Experiment::Recon, &[("l", "5".into()), ("n", "10".into())], 3));
        assert_ne!(a, cell_seed(1, Experiment::FullRank, &[("l", "5".into()), ("n", "10".into())], 2));
    }
}
