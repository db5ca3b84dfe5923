//! Point datasets from CSV and the Gram matrices built on them.

use std::io::Read;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// `n x d` table of finite features, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    rows: Array2<f64>,
}

impl DataTable {
    pub fn new(rows: Array2<f64>) -> Result<Self> {
        let (n, d) = rows.dim();
        if n == 0 || d == 0 {
            return Err(Error::invalid(format!("data table must be non-empty, got {n}x{d}")));
        }
        for ((row, col), v) in rows.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
        Ok(Self { rows })
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn d(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    /// Rows reordered (or resampled) by `idx`.
    pub fn select(&self, idx: &[usize]) -> DataTable {
        DataTable { rows: self.rows.select(Axis(0), idx) }
    }

    /// Centers each feature and scales it to unit standard deviation.
    /// Constant features are only centered.
    pub fn standardized(&self) -> DataTable {
        let mut rows = self.rows.clone();
        let n = rows.nrows() as f64;
        for mut col in rows.columns_mut() {
            let mean = col.sum() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let sd = var.sqrt();
            col.mapv_inplace(|v| if sd > 0.0 { (v - mean) / sd } else { v - mean });
        }
        DataTable { rows }
    }
}

/// Reads a numeric CSV file. With `has_header`, the first line is skipped.
pub fn load_csv(path: impl AsRef<Path>, has_header: bool) -> Result<DataTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io { path: path.into(), source })?;
    read_csv(file, has_header)
}

/// Parses numeric CSV from any reader. Line and column numbers in errors are
/// 1-based and refer to physical lines of the input.
pub fn read_csv(reader: impl Read, has_header: bool) -> Result<DataTable> {
    let rows = parse_grid(reader, has_header)?;
    let n = rows.len();
    if n == 0 {
        return Err(Error::invalid("csv contains no data rows"));
    }
    let d = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    DataTable::new(Array2::from_shape_vec((n, d), flat).expect("rectangular by parse"))
}

fn parse_grid(reader: impl Read, has_header: bool) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    let mut record = csv::StringRecord::new();
    let mut first = true;
    while rdr.read_record(&mut record)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if first && has_header {
            first = false;
            continue;
        }
        first = false;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::RaggedRow { line, expected, found: record.len() });
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, text)| {
                text.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::ParseCell {
                    line,
                    column: c + 1,
                    text: text.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a square numeric grid (no header) as a symmetric matrix.
pub fn load_matrix_csv(path: impl AsRef<Path>) -> Result<SymMatrix> {
    let table = load_csv(path, false)?;
    SymMatrix::new(table.rows)
}

/// Writes a matrix as a headerless comma-separated grid, full precision.
pub fn write_matrix_csv(m: &SymMatrix, mut out: impl std::io::Write) -> std::io::Result<()> {
    for row in m.as_array().rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RbfWidth {
    Gamma(f64),
    /// `γ = 1/(2m²)` with `m` the median pairwise distance of a seeded sample.
    MedianHeuristic { sample_cap: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf(RbfWidth),
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::invalid(format!("rbf gamma must be positive, got {gamma}")));
        }
        Ok(KernelSpec::Rbf(RbfWidth::Gamma(gamma)))
    }

    pub fn rbf_median(sample_cap: usize, seed: u64) -> Self {
        KernelSpec::Rbf(RbfWidth::MedianHeuristic { sample_cap, seed })
    }

    pub fn label(&self) -> String {
        match self {
            KernelSpec::Linear => "linear".into(),
            KernelSpec::Rbf(RbfWidth::Gamma(g)) => format!("rbf:{g}"),
            KernelSpec::Rbf(RbfWidth::MedianHeuristic { .. }) => "rbf:median".into(),
        }
    }
}

/// Builds the kernel Gram matrix over the rows of `data`.
pub fn gram(data: &DataTable, spec: KernelSpec) -> Result<SymMatrix> {
    let x = data.rows();
    let inner = x.dot(&x.t());
    let n = data.n();
    let out = match spec {
        KernelSpec::Linear => inner,
        KernelSpec::Rbf(width) => {
            let gamma = match width {
                RbfWidth::Gamma(g) if g > 0.0 && g.is_finite() => g,
                RbfWidth::Gamma(g) => {
                    return Err(Error::invalid(format!("rbf gamma must be positive, got {g}")))
                }
                RbfWidth::MedianHeuristic { sample_cap, seed } => {
                    median_heuristic_gamma(data, sample_cap, seed)?
                }
            };
            let sq: Array1<f64> = inner.diag().to_owned();
            Array2::from_shape_fn((n, n), |(i, j)| {
                if i == j {
                    1.0
                } else {
                    let d2 = (sq[i] + sq[j] - 2.0 * inner[[i, j]]).max(0.0);
                    (-gamma * d2).exp()
                }
            })
        }
    };
    for ((i, j), v) in out.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::KernelOverflow { i, j });
        }
    }
    SymMatrix::new(out)
}

/// Median-heuristic RBF width over at most `sample_cap` points drawn without
/// replacement under `seed`.
pub fn median_heuristic_gamma(data: &DataTable, sample_cap: usize, seed: u64) -> Result<f64> {
    let n = data.n();
    if n < 2 {
        return Err(Error::invalid("median heuristic needs at least two points"));
    }
    if sample_cap < 2 {
        return Err(Error::invalid("median heuristic sample cap must be at least 2"));
    }
    let idx: Vec<usize> = if n <= sample_cap {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = rand::seq::index::sample(&mut rng, n, sample_cap).into_vec();
        v.sort_unstable();
        v
    };
    let x = data.rows();
    let mut dists = Vec::with_capacity(idx.len() * (idx.len() - 1) / 2);
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            let d2: f64 = x.row(i).iter().zip(x.row(j).iter()).map(|(p, q)| (p - q) * (p - q)).sum();
            dists.push(d2.sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let median = if m % 2 == 1 { dists[m / 2] } else { 0.5 * (dists[m / 2 - 1] + dists[m / 2]) };
    if median <= 0.0 {
        return Err(Error::DegenerateData);
    }
    Ok(1.0 / (2.0 * median * median))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn table(rows: Array2<f64>) -> DataTable {
        DataTable::new(rows).unwrap()
    }

    #[test]
    fn parses_plain_grid() {
        let t = read_csv("1,2\n3,4\n".as_bytes(), false).unwrap();
        assert_eq!(t.rows(), &array![[1.0, 2.0], [3.0, 4.0]]);
    }

    #[test]
    fn skips_header_and_handles_crlf() {
        let t = read_csv("a,b\r\n1,2\r\n3,4\r\n5,6\r\n".as_bytes(), true).unwrap();
        assert_eq!(t.n(), 3);
        assert_eq!(t.d(), 2);
        assert_eq!(t.rows()[[2, 1]], 6.0);
    }

    #[test]
    fn reports_bad_cell_position() {
        match read_csv("1,2\nabc,4\n".as_bytes(), false) {
            Err(Error::ParseCell { line, column, text }) => {
                assert_eq!((line, column), (2, 1));
                assert_eq!(text, "abc");
            }
            other => panic!("unexpected {other:?}"),
        }
        // header line still counts toward the physical line number
        match read_csv("x,y\n1,2\n3,zz\n".as_bytes(), true) {
            Err(Error::ParseCell { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_ragged_row() {
        match read_csv("1,2\n3,4\n5\n".as_bytes(), false) {
            Err(Error::RaggedRow { line, expected, found }) => assert_eq!((line, expected, found), (3, 2, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_error() {
        assert!(read_csv("".as_bytes(), false).is_err());
        assert!(read_csv("a,b\n".as_bytes(), true).is_err());
    }

    #[test]
    fn linear_gram_of_canonical_rows() {
        let g = gram(&table(array![[1.0, 0.0], [0.0, 1.0]]), KernelSpec::Linear).unwrap();
        assert_eq!(g, SymMatrix::identity(2));
    }

    #[test]
    fn rbf_gram_values() {
        let t = table(array![[0.0], [1.0]]);
        let g = gram(&t, KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.get(1, 1), 1.0);
        assert_abs_diff_eq!(g.get(0, 1), (-1.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(0, 1), 0.367879, epsilon = 1e-6);
    }

    #[test]
    fn rbf_rejects_bad_gamma() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(f64::NAN).is_err());
        let t = table(array![[0.0], [1.0]]);
        assert!(gram(&t, KernelSpec::Rbf(RbfWidth::Gamma(-1.0))).is_err());
    }

    #[test]
    fn linear_overflow_names_pair() {
        let t = table(array![[1e200, 0.0], [0.0, 1.0]]);
        assert!(matches!(gram(&t, KernelSpec::Linear), Err(Error::KernelOverflow { i: 0, j: 0 })));
    }

    #[test]
    fn median_heuristic_small_cases() {
        let two = table(array![[0.0, 0.0], [2.0, 0.0]]);
        assert_abs_diff_eq!(median_heuristic_gamma(&two, 256, 0).unwrap(), 0.125, epsilon = 1e-15);
        let three = table(array![[0.0], [1.0], [2.0]]);
        assert_abs_diff_eq!(median_heuristic_gamma(&three, 256, 0).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn median_heuristic_degenerate() {
        let same = table(array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        assert!(matches!(median_heuristic_gamma(&same, 10, 0), Err(Error::DegenerateData)));
        let one = table(array![[1.0]]);
        assert!(median_heuristic_gamma(&one, 10, 0).is_err());
    }

    #[test]
    fn standardize_centers_and_scales() {
        let t = table(array![[1.0, 5.0], [3.0, 5.0]]).standardized();
        assert_eq!(t.rows(), &array![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = SymMatrix::new(array![[1.0, 0.25], [0.25, 1.0 / 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&m, &mut buf).unwrap();
        let back = SymMatrix::new(read_csv(buf.as_slice(), false).unwrap().rows().clone()).unwrap();
        assert_eq!(back, m);
    }
}
