//! Sparse datasets, seeded synthetic fixtures and the client partition rule.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::point::Point;

/// One sparse feature row. Column indices are zero-based and strictly
/// increasing; the LIBSVM reader and writer shift them by one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    entries: Vec<(usize, f64)>,
}

impl SparseRow {
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::invalid(format!(
                    "column indices must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if entries.iter().any(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
        Ok(SparseRow { entries })
    }

    /// Builds a row from dense values, dropping exact zeros.
    pub fn from_dense(values: &[f64]) -> Self {
        SparseRow { entries: values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)).collect() }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Largest column index plus one, or zero for an empty row.
    pub fn width(&self) -> usize {
        self.entries.last().map_or(0, |(j, _)| j + 1)
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(j, v)| v * x[j]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum()
    }

    /// `out += alpha * row`
    pub fn axpy_into(&self, alpha: f64, out: &mut [f64]) {
        for &(j, v) in &self.entries {
            out[j] += alpha * v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetKind {
    RegressionTargets,
    BinaryLabels,
}

/// Ordered collection of `(a_i, b_i)` pairs: the index set of the finite sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<SparseRow>,
    targets: Vec<f64>,
    dim: usize,
    kind: DatasetKind,
}

impl Dataset {
    pub fn new(rows: Vec<SparseRow>, targets: Vec<f64>, dim: usize, kind: DatasetKind) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if rows.len() != targets.len() {
            return Err(Error::invalid(format!("{} rows but {} targets", rows.len(), targets.len())));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if let Some(w) = rows.iter().map(SparseRow::width).max() {
            if w > dim {
                return Err(Error::invalid(format!("row references feature {w} but dimension is {dim}")));
            }
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("non-finite target"));
        }
        if kind == DatasetKind::BinaryLabels && targets.iter().any(|&t| t != 1.0 && t != -1.0) {
            return Err(Error::invalid("binary labels must be -1 or +1"));
        }
        Ok(Dataset { rows, targets, dim, kind })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> DatasetKind {
        self.kind
    }

    pub fn rows(&self) -> &[SparseRow] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseRow {
        &self.rows[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn max_row_norm_sq(&self) -> f64 {
        self.rows.iter().map(SparseRow::norm_sq).fold(0.0, f64::max)
    }

    /// Contiguous sub-dataset `[start, end)`, keeping dimension and kind.
    pub fn slice(&self, start: usize, end: usize) -> Result<Dataset> {
        if start >= end || end > self.len() {
            return Err(Error::invalid(format!("bad slice {start}..{end} of {} rows", self.len())));
        }
        Ok(Dataset {
            rows: self.rows[start..end].to_vec(),
            targets: self.targets[start..end].to_vec(),
            dim: self.dim,
            kind: self.kind,
        })
    }

    pub fn metadata(&self) -> DatasetMeta {
        dataset_metadata(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMeta {
    pub name: String,
    pub n: usize,
    pub d: usize,
}

pub fn dataset_metadata(ds: &Dataset) -> DatasetMeta {
    DatasetMeta { name: String::new(), n: ds.len(), d: ds.dim() }
}

/// Samples per client and number of dropped trailing rows when `n` rows
/// are split across `n_clients`.
pub fn partition_shape(n: usize, n_clients: usize) -> Result<(usize, usize)> {
    if n_clients == 0 || n_clients > n {
        return Err(Error::invalid(format!("cannot split {n} rows across {n_clients} clients")));
    }
    let m = n / n_clients;
    Ok((m, n - n_clients * m))
}

/// Splits `ds` across `n_clients` simulated clients.
///
/// Client `k` (zero-based) receives rows `k*m .. (k+1)*m` with
/// `m = floor(n / n_clients)`; the trailing `n - n_clients*m` rows are dropped.
pub fn partition_clients(ds: &Dataset, n_clients: usize) -> Result<Vec<Dataset>> {
    let (m, _) = partition_shape(ds.len(), n_clients)?;
    (0..n_clients).map(|k| ds.slice(k * m, (k + 1) * m)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Regression,
    Classification,
}

/// Seeded synthetic fixture.
///
/// Rows are dense with coordinates uniform on `[-1, 1)`. A planted model
/// `x*` (coordinates uniform on `[-1, 1)`) generates the targets:
/// regression uses `b = a.x* + noise * N(0,1)`, classification uses
/// `b = sign(a.x* + noise * N(0,1))` with ties mapped to `+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    pub kind: SyntheticKind,
    pub noise_scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub planted: Point,
}

impl SyntheticSpec {
    pub fn new(n: usize, d: usize, kind: SyntheticKind, noise_scale: f64, seed: u64) -> Self {
        SyntheticSpec { n, d, kind, noise_scale, seed }
    }

    pub fn generate(&self) -> Result<Synthetic> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::invalid("synthetic spec needs n >= 1 and d >= 1"));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid("noise scale must be finite and >= 0"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let planted: Point = (0..self.d).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>().into();
        let mut rows = Vec::with_capacity(self.n);
        let mut targets = Vec::with_capacity(self.n);
        let mut dense = alloc::vec![0.0; self.d];
        for _ in 0..self.n {
            for v in dense.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
            let row = SparseRow::from_dense(&dense);
            let clean = row.dot(planted.as_slice());
            let noisy =
                if self.noise_scale > 0.0 { clean + self.noise_scale * standard_normal(&mut rng) } else { clean };
            targets.push(match self.kind {
                SyntheticKind::Regression => noisy,
                SyntheticKind::Classification => {
                    if noisy >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    }
                }
            });
            rows.push(row);
        }
        let kind = match self.kind {
            SyntheticKind::Regression => DatasetKind::RegressionTargets,
            SyntheticKind::Classification => DatasetKind::BinaryLabels,
        };
        Ok(Synthetic { dataset: Dataset::new(rows, targets, self.d, kind)?, planted })
    }
}

pub fn synthesize_dataset(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.generate().map(|s| s.dataset)
}

// Box-Muller; one draw per call keeps the stream layout simple.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn partition_shape_drops_the_remainder() {
        assert_eq!(partition_shape(4177, 10).unwrap(), (417, 7));
        assert_eq!(partition_shape(20, 4).unwrap(), (5, 0));
        assert!(partition_shape(3, 4).is_err());
        assert!(partition_shape(3, 0).is_err());
    }

    fn tiny(n: usize) -> Dataset {
        let rows = (0..n).map(|i| SparseRow::from_dense(&[i as f64 + 1.0])).collect();
        Dataset::new(rows, vec![0.0; n], 1, DatasetKind::RegressionTargets).unwrap()
    }

    #[test]
    fn row_rejects_unsorted_indices() {
        assert!(SparseRow::new(vec![(2, 1.0), (1, 1.0)]).is_err());
        assert!(SparseRow::new(vec![(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseRow::new(vec![(0, 1.0), (4, 2.0)]).is_ok());
    }

    #[test]
    fn dataset_validates_labels_and_width() {
        let row = SparseRow::new(vec![(2, 1.0)]).unwrap();
        assert!(Dataset::new(vec![row.clone()], vec![1.0], 2, DatasetKind::RegressionTargets).is_err());
        assert!(Dataset::new(vec![row.clone()], vec![0.5], 3, DatasetKind::BinaryLabels).is_err());
        assert!(Dataset::new(vec![row], vec![-1.0], 3, DatasetKind::BinaryLabels).is_ok());
        assert_eq!(Dataset::new(vec![], vec![], 3, DatasetKind::BinaryLabels), Err(Error::EmptyDataset));
    }

    #[test]
    fn partition_even_split() {
        let parts = partition_clients(&tiny(6), 3).unwrap();
        let firsts: Vec<f64> = parts.iter().map(|p| p.row(0).entries()[0].1).collect();
        assert_eq!(firsts, vec![1.0, 3.0, 5.0]);
        assert!(parts.iter().all(|p| p.len() == 2));
    }

    #[test]
    fn partition_drops_remainder() {
        let parts = partition_clients(&tiny(7), 3).unwrap();
        assert_eq!(parts.iter().map(Dataset::len).collect::<Vec<_>>(), vec![2, 2, 2]);
        assert_eq!(parts[2].row(1).entries()[0].1, 6.0);
    }

    #[test]
    fn partition_rejects_too_many_clients() {
        assert!(partition_clients(&tiny(3), 4).is_err());
        assert!(partition_clients(&tiny(3), 0).is_err());
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec::new(4, 2, SyntheticKind::Regression, 0.3, 7);
        assert_eq!(spec.generate().unwrap(), spec.generate().unwrap());
        let other = SyntheticSpec { seed: 8, ..spec };
        assert_ne!(spec.generate().unwrap(), other.generate().unwrap());
    }

    #[test]
    fn synthetic_classification_labels() {
        let spec = SyntheticSpec::new(100, 5, SyntheticKind::Classification, 0.5, 1);
        let ds = synthesize_dataset(&spec).unwrap();
        assert_eq!(ds.kind(), DatasetKind::BinaryLabels);
        assert!(ds.targets().iter().all(|&t| t == 1.0 || t == -1.0));
    }

    #[test]
    fn noiseless_regression_fits_planted_model() {
        let spec = SyntheticSpec::new(50, 4, SyntheticKind::Regression, 0.0, 3);
        let syn = spec.generate().unwrap();
        for (row, &b) in syn.dataset.rows().iter().zip(syn.dataset.targets()) {
            assert_eq!(b - row.dot(syn.planted.as_slice()), 0.0);
        }
    }

    #[test]
    fn metadata_reports_shape() {
        let spec = SyntheticSpec::new(10, 3, SyntheticKind::Regression, 0.0, 0);
        let meta = synthesize_dataset(&spec).unwrap().metadata();
        assert_eq!((meta.n, meta.d), (10, 3));
    }
}
