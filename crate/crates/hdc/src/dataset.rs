//! Dataset ingestion, per-feature quantization, and synthetic data.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("row {row}, column {col}: cannot parse {value:?} as a finite number")]
    ParseNumber {
        row: usize,
        col: usize,
        value: String,
    },
    #[error("label column {0:?} not found")]
    MissingLabelColumn(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("{0}")]
    Invalid(String),
}

/// How to pick the label column of a CSV file. Negative indices count
/// from the last column, so `Index(-1)` is the rightmost one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(isize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<isize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Name(n) => write!(f, "{n}"),
            LabelColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

impl LabelColumn {
    fn resolve(&self, headers: Option<&csv::StringRecord>, width: usize) -> Option<usize> {
        match self {
            LabelColumn::Name(name) => headers?.iter().position(|h| h == name),
            LabelColumn::Index(i) => {
                let idx = if *i < 0 {
                    width.checked_sub(i.unsigned_abs())?
                } else {
                    *i as usize
                };
                (idx < width).then_some(idx)
            }
        }
    }
}

/// A labeled dataset: a rectangular real-valued feature matrix plus one
/// categorical label per row. Row order is preserved from the source.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<String>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<String>) -> Result<Self, DataError> {
        if features.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        if features.len() != labels.len() {
            return Err(DataError::Invalid(format!(
                "{} feature rows vs {} labels",
                features.len(),
                labels.len()
            )));
        }
        let width = features[0].len();
        if width == 0 {
            return Err(DataError::NoFeatures);
        }
        if features.iter().any(|r| r.len() != width) {
            return Err(DataError::Invalid("ragged feature matrix".into()));
        }
        Ok(Self { features, labels })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.features[0].len()
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Distinct labels in sorted order; class indices everywhere else in
    /// the crate refer to positions in this list.
    pub fn class_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self.labels.clone();
        names.sort();
        names.dedup();
        names
    }

    /// Split off the first `n` rows, preserving order.
    pub fn split_at(&self, n: usize) -> Result<(Dataset, Dataset), DataError> {
        if n == 0 || n >= self.len() {
            return Err(DataError::Invalid(format!(
                "cannot split {} rows at {n}",
                self.len()
            )));
        }
        let head = Dataset::new(self.features[..n].to_vec(), self.labels[..n].to_vec())?;
        let tail = Dataset::new(self.features[n..].to_vec(), self.labels[n..].to_vec())?;
        Ok((head, tail))
    }
}

/// Load a CSV file of numeric features plus one label column.
///
/// With `has_header` the label column may be picked by name; otherwise
/// only positional selection works. Cell errors carry 1-based row and
/// column numbers counted over data rows.
pub fn load_csv(
    path: impl AsRef<Path>,
    label: &LabelColumn,
    has_header: bool,
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .trim(csv::Trim::All)
        .from_reader(file);

    let headers = if has_header {
        Some(reader.headers()?.clone())
    } else {
        None
    };

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut label_idx: Option<usize> = None;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let idx = match label_idx {
            Some(i) => i,
            None => {
                let i = label
                    .resolve(headers.as_ref(), record.len())
                    .ok_or_else(|| DataError::MissingLabelColumn(label.to_string()))?;
                label_idx = Some(i);
                i
            }
        };
        if idx >= record.len() {
            return Err(DataError::MissingLabelColumn(label.to_string()));
        }
        let mut row = Vec::with_capacity(record.len() - 1);
        for (c, cell) in record.iter().enumerate() {
            if c == idx {
                labels.push(cell.to_string());
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| DataError::ParseNumber {
                row: r + 1,
                col: c + 1,
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(DataError::ParseNumber {
                    row: r + 1,
                    col: c + 1,
                    value: cell.to_string(),
                });
            }
            row.push(value);
        }
        features.push(row);
    }
    Dataset::new(features, labels)
}

/// Write a dataset as CSV with headers `f0..f{d-1},label`.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<String> = (0..dataset.feature_count())
        .map(|i| format!("f{i}"))
        .collect();
    header.push("label".into());
    writer.write_record(&header)?;
    for (row, label) in dataset.features().iter().zip(dataset.labels()) {
        let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        record.push(label.clone());
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

/// Per-feature linear quantizer with `L` bins.
///
/// Each feature carries `L - 1` strictly increasing interior edges spaced
/// evenly between its training minimum and maximum; a constant feature
/// degenerates to a single bin. Queries outside the training range clamp
/// to the first or last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    edges: Vec<Vec<f64>>,
    levels: usize,
}

impl Quantizer {
    /// Fit linear min-max bins on the training features.
    pub fn fit(features: &[Vec<f64>], levels: usize) -> Result<Self, DataError> {
        if levels < 2 {
            return Err(DataError::Invalid(format!(
                "need at least 2 quantization bins, got {levels}"
            )));
        }
        if features.is_empty() {
            return Err(DataError::EmptyDataset);
        }
        let width = features[0].len();
        let mut edges = Vec::with_capacity(width);
        for f in 0..width {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for row in features {
                lo = lo.min(row[f]);
                hi = hi.max(row[f]);
            }
            if hi > lo {
                let step = (hi - lo) / levels as f64;
                edges.push((1..levels).map(|t| lo + step * t as f64).collect());
            } else {
                edges.push(Vec::new()); // constant feature: everything maps to bin 0
            }
        }
        Ok(Self { edges, levels })
    }

    /// Rebuild from stored edges, validating strict monotonicity.
    pub fn from_edges(edges: Vec<Vec<f64>>, levels: usize) -> Result<Self, DataError> {
        if levels < 2 {
            return Err(DataError::Invalid("quantizer needs at least 2 bins".into()));
        }
        for (f, e) in edges.iter().enumerate() {
            if !e.is_empty() && e.len() != levels - 1 {
                return Err(DataError::Invalid(format!(
                    "feature {f}: {} edges for {levels} bins",
                    e.len()
                )));
            }
            if e.windows(2).any(|w| w[0] >= w[1]) || e.iter().any(|x| !x.is_finite()) {
                return Err(DataError::Invalid(format!(
                    "feature {f}: edges not finite and strictly increasing"
                )));
            }
        }
        Ok(Self { edges, levels })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn feature_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Vec<f64>] {
        &self.edges
    }

    /// Bin index of `value` for feature `f`, always in `[0, levels)`.
    #[inline]
    pub fn quantize_value(&self, f: usize, value: f64) -> usize {
        self.edges[f].partition_point(|&e| e <= value)
    }

    /// Quantize a full sample.
    pub fn quantize(&self, sample: &[f64]) -> Result<Vec<usize>, DataError> {
        if sample.len() != self.edges.len() {
            return Err(DataError::Invalid(format!(
                "sample has {} features, quantizer expects {}",
                sample.len(),
                self.edges.len()
            )));
        }
        Ok(sample
            .iter()
            .enumerate()
            .map(|(f, &v)| self.quantize_value(f, v))
            .collect())
    }
}

/// Generate Gaussian clusters with unit within-class deviation and the
/// given centroid separation.
///
/// Centroids are `(separation / sqrt(2))` times orthonormal random
/// directions, so every centroid pair sits exactly `separation` apart
/// and the class signal spreads over all features rather than a single
/// coordinate; this needs `class_count <= d_iv`. Samples interleave
/// classes (`class = n mod class_count`) and labels are the class
/// indices as strings. Deterministic for a given RNG state.
pub fn gen_synthetic(
    class_count: usize,
    per_class: usize,
    d_iv: usize,
    separation: f64,
    rng: &mut impl Rng,
) -> Result<Dataset, DataError> {
    if class_count < 1 || per_class < 1 || d_iv < 1 {
        return Err(DataError::Invalid(
            "class count, samples per class, and feature count must be positive".into(),
        ));
    }
    if class_count > d_iv {
        return Err(DataError::Invalid(format!(
            "cannot place {class_count} equidistant centroids in {d_iv} dimensions"
        )));
    }
    // Gram-Schmidt over Gaussian draws: orthonormal centroid directions.
    let mut directions: Vec<Vec<f64>> = Vec::with_capacity(class_count);
    while directions.len() < class_count {
        let mut v: Vec<f64> = (0..d_iv).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        for prev in &directions {
            let proj: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (x, p) in v.iter_mut().zip(prev) {
                *x -= proj * p;
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len < 1e-9 {
            continue; // vanishingly rare: redraw a dependent vector
        }
        v.iter_mut().for_each(|x| *x /= len);
        directions.push(v);
    }
    let offset = separation / std::f64::consts::SQRT_2;
    let total = class_count * per_class;
    let mut features = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for n in 0..total {
        let class = n % class_count;
        let row: Vec<f64> = (0..d_iv)
            .map(|f| rng.sample::<f64, _>(StandardNormal) + offset * directions[class][f])
            .collect();
        features.push(row);
        labels.push(class.to_string());
    }
    Dataset::new(features, labels)
}
