//! Dataset ingestion, min-max scaling, labeled benchmark conversion and
//! synthetic benchmark generation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{config, input, Error, Result};
use crate::rng;

/// Row-major `n x d` table of feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_cols == 0 {
            return config("data matrix needs at least one column");
        }
        if values.len() != n_rows * n_cols {
            return config(format!(
                "{} values cannot fill a {n_rows}x{n_cols} matrix",
                values.len()
            ));
        }
        Ok(Self {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return input("no rows given");
        };
        let n_cols = first.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return config(format!("row {i} has {} values, expected {n_cols}", r.len()));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), n_cols, values)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows().map(move |r| r[j])
    }

    /// Gathers the given rows (duplicates allowed) into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        DataMatrix {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            values,
        }
    }

    /// Fails unless every entry lies in `[-slack, 1 + slack]`.
    pub fn check_unit_range(&self, slack: f64) -> Result<()> {
        for (k, v) in self.values.iter().enumerate() {
            if !(*v >= -slack && *v <= 1.0 + slack) {
                return input(format!(
                    "entry ({}, {}) = {v} lies outside [0, 1]; normalize the data first",
                    k / self.n_cols,
                    k % self.n_cols
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: Option<String>,
    /// Per-feature ranges of the last min-max pass, if any.
    pub normalization: Option<Vec<FeatureRange>>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub matrix: DataMatrix,
    /// `true` marks an outlier. Only ever used for evaluation.
    pub labels: Option<Vec<bool>>,
    pub feature_names: Option<Vec<String>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(matrix: DataMatrix, labels: Option<Vec<bool>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != matrix.n_rows() {
                return config(format!("{} labels for {} rows", l.len(), matrix.n_rows()));
            }
        }
        Ok(Self {
            matrix,
            labels,
            feature_names: None,
            provenance: Provenance::default(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn outlier_count(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().filter(|x| **x).count())
    }

    pub fn outlier_fraction(&self) -> Option<f64> {
        self.outlier_count()
            .map(|c| c as f64 / self.n_rows().max(1) as f64)
    }

    fn feature_name(&self, j: usize) -> String {
        self.feature_names
            .as_ref()
            .and_then(|n| n.get(j).cloned())
            .unwrap_or_else(|| format!("x{j}"))
    }
}

/// Which CSV column carries the labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// A purely numeric spec is a zero-based index, anything else a header name.
    pub fn parse(spec: &str) -> Self {
        match spec.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(spec.to_owned()),
        }
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Name(n) => f.write_str(n),
            LabelColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub has_header: bool,
    pub delimiter: u8,
    pub label_column: Option<LabelColumn>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            has_header: true,
            delimiter: b',',
            label_column: None,
        }
    }
}

/// Loads a numeric CSV. Missing or non-numeric feature cells are rejected.
///
/// Labels may be binary (`0/1`, `true/false`, `yes/no`, `outlier/inlier`,
/// case-insensitive) or class names, in which case the most frequent class
/// is the inlier class and every other class is an outlier.
pub fn load_csv(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(opts.has_header)
        .delimiter(opts.delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(file);

    let header: Option<Vec<String>> = if opts.has_header {
        Some(reader.headers()?.iter().map(str::to_owned).collect())
    } else {
        None
    };

    let mut records = Vec::new();
    for rec in reader.records() {
        records.push(rec?);
    }
    let width = match (&header, records.first()) {
        (Some(h), _) => h.len(),
        (None, Some(r)) => r.len(),
        (None, None) => return input(format!("{}: no data rows", path.display())),
    };

    let label_idx = match &opts.label_column {
        None => None,
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => {
            return config(format!(
                "label column index {i} out of range (width {width})"
            ))
        }
        Some(LabelColumn::Name(name)) => {
            let Some(h) = &header else {
                return config(format!(
                    "label column '{name}' given by name but the file has no header"
                ));
            };
            match h.iter().position(|c| c == name) {
                Some(i) => Some(i),
                None => return config(format!("no column named '{name}' in {}", path.display())),
            }
        }
    };
    let feature_cols: Vec<usize> = (0..width).filter(|c| Some(*c) != label_idx).collect();
    if feature_cols.is_empty() {
        return input(format!("{}: no feature columns", path.display()));
    }

    let column_name = |c: usize| -> String {
        header
            .as_ref()
            .and_then(|h| h.get(c).cloned())
            .unwrap_or_else(|| format!("#{c}"))
    };
    let ingest = |row: usize, col: usize, message: String| Error::Ingest {
        path: path.to_owned(),
        row,
        column: column_name(col),
        message,
    };

    let mut values = Vec::with_capacity(records.len() * feature_cols.len());
    let mut raw_labels = Vec::new();
    for rec in &records {
        let row = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != width {
            return Err(ingest(
                row,
                rec.len().min(width.saturating_sub(1)),
                format!("expected {width} fields, found {}", rec.len()),
            ));
        }
        for &c in &feature_cols {
            let cell = &rec[c];
            if cell.is_empty() || cell == "?" {
                return Err(ingest(row, c, "missing value".into()));
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| ingest(row, c, format!("not a number: '{cell}'")))?;
            if !v.is_finite() {
                return Err(ingest(row, c, format!("non-finite value '{cell}'")));
            }
            values.push(v);
        }
        if let Some(l) = label_idx {
            if rec[l].is_empty() {
                return Err(ingest(row, l, "missing label".into()));
            }
            raw_labels.push(rec[l].to_owned());
        }
    }
    if records.is_empty() {
        return input(format!("{}: no data rows", path.display()));
    }

    let matrix = DataMatrix::new(records.len(), feature_cols.len(), values)?;
    let labels = label_idx.map(|_| interpret_labels(&raw_labels));
    let mut ds = Dataset::new(matrix, labels)?;
    ds.feature_names = header.map(|h| feature_cols.iter().map(|&c| h[c].clone()).collect());
    ds.provenance.source = Some(path.display().to_string());
    Ok(ds)
}

fn binary_label(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "yes" | "outlier" | "o" => Some(true),
        "0" | "0.0" | "false" | "no" | "inlier" | "n" => Some(false),
        _ => None,
    }
}

fn interpret_labels(raw: &[String]) -> Vec<bool> {
    let binary: Option<Vec<bool>> = raw.iter().map(|r| binary_label(r)).collect();
    if let Some(b) = binary {
        return b;
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in raw {
        *counts.entry(r.as_str()).or_default() += 1;
    }
    // BTreeMap iteration order makes the tie-break lexicographic.
    let majority = counts
        .iter()
        .fold(None::<(&str, usize)>, |best, (k, c)| match best {
            Some((_, bc)) if bc >= *c => best,
            _ => Some((k, *c)),
        })
        .map(|(k, _)| k)
        .unwrap_or_default();
    raw.iter().map(|r| r != majority).collect()
}

/// Per-feature `(x - min) / (max - min)`; constant features map to 0.
pub fn normalize_min_max(ds: &Dataset) -> Dataset {
    let m = &ds.matrix;
    let ranges: Vec<FeatureRange> = (0..m.n_cols())
        .map(|j| {
            let (min, max) = m
                .column(j)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            FeatureRange { min, max }
        })
        .collect();
    let values = m
        .rows()
        .flat_map(|row| {
            row.iter().zip(&ranges).map(|(v, r)| {
                let span = r.max - r.min;
                if span > 0.0 {
                    ((v - r.min) / span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
        })
        .collect();
    let mut out = ds.clone();
    out.matrix = DataMatrix {
        n_rows: m.n_rows(),
        n_cols: m.n_cols(),
        values,
    };
    out.provenance.normalization = Some(ranges);
    out
}

/// Gaussian inlier cluster plus uniform outliers, inliers first.
///
/// Inliers are `0.5 + z / 12` per coordinate with `z ~ N(0, 1)`, clamped to
/// `[0.25, 0.75]` (the clamp sits at three standard deviations). Outliers are
/// uniform over `[0, 1]^d`.
pub fn make_synthetic(
    n_inliers: usize,
    n_outliers: usize,
    dim: usize,
    seed: u64,
) -> Result<Dataset> {
    if n_inliers == 0 || n_outliers == 0 {
        return config("synthetic benchmark needs at least one inlier and one outlier");
    }
    if dim == 0 {
        return config("synthetic benchmark needs at least one dimension");
    }
    let mut r = rng::stream(seed, 0);
    let mut values = Vec::with_capacity((n_inliers + n_outliers) * dim);
    for _ in 0..n_inliers * dim {
        let z: f64 = r.sample(StandardNormal);
        values.push((0.5 + z / 12.0).clamp(0.25, 0.75));
    }
    for _ in 0..n_outliers * dim {
        values.push(r.random::<f64>());
    }
    let matrix = DataMatrix::new(n_inliers + n_outliers, dim, values)?;
    let labels = (0..n_inliers + n_outliers)
        .map(|i| i >= n_inliers)
        .collect();
    let mut ds = Dataset::new(matrix, Some(labels))?;
    ds.provenance.source = Some(format!(
        "synthetic(inliers={n_inliers}, outliers={n_outliers}, dim={dim}, seed={seed})"
    ));
    Ok(ds)
}

/// Keeps every inlier and a seeded uniform subset of the outliers.
///
/// The number of retained outliers is `round(target * n_in / (1 - target))`,
/// capped at the current outlier count; row order is preserved.
pub fn downsample_outliers(ds: &Dataset, target_fraction: f64, seed: u64) -> Result<Dataset> {
    let Some(labels) = &ds.labels else {
        return input("downsampling outliers requires labels");
    };
    if !(0.0..1.0).contains(&target_fraction) {
        return config(format!(
            "target fraction {target_fraction} must lie in [0, 1)"
        ));
    }
    let outliers: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let n_in = labels.len() - outliers.len();
    let current = outliers.len() as f64 / labels.len().max(1) as f64;
    if target_fraction > current + 1e-12 {
        return config(format!(
            "target fraction {target_fraction} exceeds current outlier fraction {current}"
        ));
    }
    let keep = ((target_fraction * n_in as f64 / (1.0 - target_fraction)).round() as usize)
        .min(outliers.len());

    let mut r = rng::stream(seed, 0);
    let mut retained = vec![false; labels.len()];
    for i in 0..labels.len() {
        retained[i] = !labels[i];
    }
    for k in index::sample(&mut r, outliers.len(), keep) {
        retained[outliers[k]] = true;
    }
    let rows: Vec<usize> = (0..labels.len()).filter(|&i| retained[i]).collect();

    let mut out = Dataset::new(
        ds.matrix.select_rows(&rows),
        Some(rows.iter().map(|&i| labels[i]).collect()),
    )?;
    out.feature_names = ds.feature_names.clone();
    out.provenance = ds.provenance.clone();
    out.provenance.notes.push(format!(
        "outliers downsampled to fraction {target_fraction} ({keep} of {} kept, seed {seed})",
        outliers.len()
    ));
    Ok(out)
}

const CACHE_MAGIC: &str = "# bae-dataset-cache v1";
const LABEL_HEADER: &str = "label";

/// Writes a dataset as CSV preceded by `#` provenance lines. Values use the
/// shortest representation that parses back to the identical `f64`.
pub fn write_cache(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let mut head = String::new();
    head.push_str(CACHE_MAGIC);
    head.push('\n');
    if let Some(src) = &ds.provenance.source {
        head.push_str(&format!("# source: {}\n", src.replace('\n', " ")));
    }
    if let Some(ranges) = &ds.provenance.normalization {
        let join = |f: fn(&FeatureRange) -> f64| {
            ranges
                .iter()
                .map(|r| f(r).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        head.push_str(&format!("# feature_min: {}\n", join(|r| r.min)));
        head.push_str(&format!("# feature_max: {}\n", join(|r| r.max)));
    }
    for note in &ds.provenance.notes {
        head.push_str(&format!("# note: {}\n", note.replace('\n', " ")));
    }
    w.write_all(head.as_bytes()).map_err(io)?;

    let mut cw = csv::Writer::from_writer(w);
    let mut names: Vec<String> = (0..ds.n_cols()).map(|j| ds.feature_name(j)).collect();
    if ds.labels.is_some() {
        names.push(LABEL_HEADER.to_owned());
    }
    cw.write_record(&names)?;
    for (i, row) in ds.matrix.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        if let Some(l) = &ds.labels {
            rec.push(if l[i] { "1" } else { "0" }.to_owned());
        }
        cw.write_record(&rec)?;
    }
    cw.flush().map_err(io)?;
    Ok(())
}

/// Reads a file produced by [`write_cache`], restoring its provenance.
pub fn read_cache(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut lines = BufReader::new(file).lines();
    let first = lines.next().transpose().map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    if first.as_deref() != Some(CACHE_MAGIC) {
        return input(format!("{}: not a dataset cache file", path.display()));
    }
    let mut provenance = Provenance::default();
    let mut mins = None;
    let mut maxs = None;
    let parse_list = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Input(format!("bad range value '{v}' in cache header")))
            })
            .collect()
    };
    for line in lines {
        let line = line.map_err(|source| Error::Io {
            path: path.to_owned(),
            source,
        })?;
        let Some(rest) = line.strip_prefix("# ") else {
            break;
        };
        if let Some(v) = rest.strip_prefix("source: ") {
            provenance.source = Some(v.to_owned());
        } else if let Some(v) = rest.strip_prefix("feature_min: ") {
            mins = Some(parse_list(v)?);
        } else if let Some(v) = rest.strip_prefix("feature_max: ") {
            maxs = Some(parse_list(v)?);
        } else if let Some(v) = rest.strip_prefix("note: ") {
            provenance.notes.push(v.to_owned());
        }
    }
    if let (Some(mins), Some(maxs)) = (mins, maxs) {
        provenance.normalization = Some(
            mins.into_iter()
                .zip(maxs)
                .map(|(min, max)| FeatureRange { min, max })
                .collect(),
        );
    }

    let has_labels = {
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(path)?;
        r.headers()?.iter().next_back() == Some(LABEL_HEADER)
    };
    let opts = CsvOptions {
        label_column: has_labels.then(|| LabelColumn::Name(LABEL_HEADER.to_owned())),
        ..CsvOptions::default()
    };
    let mut ds = load_csv(path, &opts)?;
    ds.provenance = provenance;
    Ok(ds)
}

/// Writes labeled data as a plain CSV with a trailing `label` column.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut cw = csv::Writer::from_path(path)?;
    let mut names: Vec<String> = (0..ds.n_cols()).map(|j| ds.feature_name(j)).collect();
    if ds.labels.is_some() {
        names.push(LABEL_HEADER.to_owned());
    }
    cw.write_record(&names)?;
    for (i, row) in ds.matrix.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        if let Some(l) = &ds.labels {
            rec.push(if l[i] { "1" } else { "0" }.to_owned());
        }
        cw.write_record(&rec)?;
    }
    cw.flush().map_err(|source| Error::Io {
        path: PathBuf::from(path),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_plain_numeric_csv() {
        let f = write_tmp("a,b\n1,2\n3,4\n5,6\n");
        let ds = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!((ds.n_rows(), ds.n_cols()), (3, 2));
        assert!(ds.labels.is_none());
        assert_eq!(ds.matrix.row(2), &[5.0, 6.0]);
        assert_eq!(
            ds.feature_names.as_deref(),
            Some(&["a".to_owned(), "b".to_owned()][..])
        );
    }

    #[test]
    fn loads_binary_label_column() {
        let f = write_tmp("x,label,y\n0.1,0,1\n0.2,1,2\n0.3,1,3\n0.4,0,4\n");
        let opts = CsvOptions {
            label_column: Some(LabelColumn::Name("label".into())),
            ..CsvOptions::default()
        };
        let ds = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.n_cols(), 2);
        assert_eq!(ds.outlier_count(), Some(2));
        assert_eq!(ds.matrix.row(1), &[0.2, 2.0]);
    }

    #[test]
    fn class_labels_use_majority_as_inliers() {
        let f = write_tmp("1;a\n2;a\n3;b\n4;a\n5;c\n");
        let opts = CsvOptions {
            has_header: false,
            delimiter: b';',
            label_column: Some(LabelColumn::Index(1)),
        };
        let ds = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.labels.unwrap(), vec![false, false, true, false, true]);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        let f = write_tmp("a,b\n1,2\n3,oops\n");
        let err = load_csv(f.path(), &CsvOptions::default()).unwrap_err();
        match err {
            Error::Ingest { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn missing_value_is_rejected() {
        let f = write_tmp("a,b\n1,\n");
        assert!(matches!(
            load_csv(f.path(), &CsvOptions::default()),
            Err(Error::Ingest { .. })
        ));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_csv("/definitely/not/here.csv", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn normalization_examples() {
        let m = DataMatrix::from_rows(&[[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]]).unwrap();
        let ds = normalize_min_max(&Dataset::new(m, None).unwrap());
        assert_eq!(ds.matrix.column(0).collect::<Vec<_>>(), vec![0.0, 0.5, 1.0]);
        assert_eq!(ds.matrix.column(1).collect::<Vec<_>>(), vec![0.0; 3]);
        let ranges = ds.provenance.normalization.as_ref().unwrap();
        assert_eq!(
            ranges[0],
            FeatureRange {
                min: 0.0,
                max: 10.0
            }
        );
        let twice = normalize_min_max(&ds);
        assert_eq!(twice.matrix, ds.matrix);
    }

    #[test]
    fn synthetic_counts_and_determinism() {
        let a = make_synthetic(98, 2, 2, 9).unwrap();
        assert_eq!(a.n_rows(), 100);
        assert_eq!(a.outlier_fraction(), Some(0.02));
        let b = make_synthetic(98, 2, 2, 9).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_ne!(a.matrix, make_synthetic(98, 2, 2, 10).unwrap().matrix);
        a.matrix.check_unit_range(0.0).unwrap();
        assert!(make_synthetic(10, 0, 2, 1).is_err());
    }

    #[test]
    fn synthetic_inlier_mean_is_centered() {
        let ds = make_synthetic(10_000, 1, 3, 4).unwrap();
        for j in 0..3 {
            let mean = ds.matrix.column(j).take(10_000).sum::<f64>() / 10_000.0;
            assert!((mean - 0.5).abs() < 0.05, "dim {j}: {mean}");
        }
    }

    fn labeled(n_in: usize, n_out: usize) -> Dataset {
        let rows: Vec<[f64; 1]> = (0..n_in + n_out).map(|i| [i as f64]).collect();
        let labels = (0..n_in + n_out).map(|i| i >= n_in).collect();
        Dataset::new(DataMatrix::from_rows(&rows).unwrap(), Some(labels)).unwrap()
    }

    #[test]
    fn downsample_hits_target_count() {
        let ds = labeled(100, 10);
        let out = downsample_outliers(&ds, 0.05, 3).unwrap();
        // round(0.05 * 100 / 0.95) = round(5.26) = 5
        assert_eq!(out.outlier_count(), Some(5));
        assert_eq!(out.n_rows(), 105);
        // Inliers untouched and in order.
        assert_eq!(
            out.matrix.column(0).take(100).collect::<Vec<_>>(),
            (0..100).map(|i| i as f64).collect::<Vec<_>>()
        );
    }

    #[test]
    fn downsample_to_current_fraction_keeps_rows() {
        let ds = labeled(100, 10);
        let out = downsample_outliers(&ds, 10.0 / 110.0, 3).unwrap();
        assert_eq!(out.matrix, ds.matrix);
        assert_eq!(out.labels, ds.labels);
        assert_eq!(out.provenance.notes.len(), 1);
    }

    #[test]
    fn downsample_requires_labels() {
        let ds = Dataset::new(DataMatrix::from_rows(&[[1.0]]).unwrap(), None).unwrap();
        assert!(matches!(
            downsample_outliers(&ds, 0.1, 0),
            Err(Error::Input(_))
        ));
        assert!(downsample_outliers(&labeled(10, 1), 0.5, 0).is_err());
    }

    #[test]
    fn cache_round_trips_bit_exactly() {
        let f = write_tmp("u,v,label\n0.1,3.3333333333333335,0\n1e-300,2.5,1\n7,-0.000001,0\n");
        let opts = CsvOptions {
            label_column: Some(LabelColumn::Name("label".into())),
            ..CsvOptions::default()
        };
        let ds = normalize_min_max(&load_csv(f.path(), &opts).unwrap());
        let cache = tempfile::NamedTempFile::new().unwrap();
        write_cache(&ds, cache.path()).unwrap();
        let back = read_cache(cache.path()).unwrap();
        assert_eq!(
            back.matrix
                .values()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>(),
            ds.matrix
                .values()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        );
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.provenance, ds.provenance);
    }
}
