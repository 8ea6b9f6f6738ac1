//! Dataset ingestion, normalization, stratified splitting and synthetic
//! imbalanced data generation.
//!
//! Datasets are immutable after construction. Labels are canonical: the
//! majority class is 0 and every other class is collapsed to 1 (the
//! minority / outlier class), which is what the loss and metric code rely
//! on for binary runs.

use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, stream};

/// Labeled feature matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    n_features: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        n_features: usize,
        features: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Config("dataset needs at least one feature".into()));
        }
        if features.len() != labels.len() * n_features {
            return Err(Error::Shape(format!(
                "feature buffer holds {} values but {} rows x {} features were declared",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        Ok(Dataset {
            name: name.into(),
            n_features,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features_flat(&self) -> &[f64] {
        &self.features
    }

    /// Number of classes, i.e. `max(label) + 1`.
    pub fn n_classes(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Share of minority (label 1) samples.
    pub fn outlier_ratio(&self) -> f64 {
        if self.labels.is_empty() {
            return 0.0;
        }
        let minority = self.labels.iter().filter(|&&l| l == 1).count();
        minority as f64 / self.labels.len() as f64
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            name: self.name.clone(),
            n_features: self.n_features,
            features,
            labels,
        }
    }
}

/// Loads a headered CSV whose columns are numeric features followed by one
/// integer label column. Labels are remapped so the majority class becomes 0
/// and everything else 1.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Config(format!("cannot read header: {e}")))?
        .clone();
    if headers.is_empty() || headers.len() < 2 {
        return Err(Error::Ingest {
            row: 1,
            column: 1,
            message: "expected a header row with at least one feature and a label column".into(),
        });
    }
    // A header whose every cell parses as a number is a data row in disguise.
    if headers.iter().all(|h| h.trim().parse::<f64>().is_ok()) {
        return Err(Error::Ingest {
            row: 1,
            column: 1,
            message: "first row is numeric; a header row is required".into(),
        });
    }

    let n_features = headers.len() - 1;
    let mut features = Vec::new();
    let mut raw_labels = Vec::new();
    for (rec_idx, record) in reader.records().enumerate() {
        let row = rec_idx + 2; // 1-based, after the header
        let record = record.map_err(|e| Error::Ingest {
            row,
            column: 1,
            message: format!("malformed record: {e}"),
        })?;
        if record.len() != headers.len() {
            return Err(Error::Ingest {
                row,
                column: record.len(),
                message: format!(
                    "ragged row: expected {} fields, found {}",
                    headers.len(),
                    record.len()
                ),
            });
        }
        for (col, field) in record.iter().take(n_features).enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::Ingest {
                row,
                column: col + 1,
                message: format!("non-numeric feature cell {field:?}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Ingest {
                    row,
                    column: col + 1,
                    message: format!("non-finite feature cell {field:?}"),
                });
            }
            features.push(value);
        }
        let label_field = record.get(n_features).unwrap_or("");
        let label: i64 = label_field.trim().parse().map_err(|_| Error::Ingest {
            row,
            column: n_features + 1,
            message: format!("non-integer label cell {label_field:?}"),
        })?;
        if label < 0 {
            return Err(Error::Ingest {
                row,
                column: n_features + 1,
                message: format!("negative label {label}"),
            });
        }
        raw_labels.push(label as usize);
    }
    if raw_labels.is_empty() {
        return Err(Error::Ingest {
            row: 2,
            column: 1,
            message: "no data rows".into(),
        });
    }

    let labels = relabel_minority_as_one(&raw_labels);
    Dataset::new(name, n_features, features, labels)
}

/// Majority class becomes 0; all other classes collapse to 1. Ties on the
/// majority count are broken toward the smaller original label.
fn relabel_minority_as_one(raw: &[usize]) -> Vec<usize> {
    let max = raw.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &l in raw {
        counts[l] += 1;
    }
    let majority = counts
        .iter()
        .enumerate()
        .max_by_key(|&(label, &count)| (count, std::cmp::Reverse(label)))
        .map(|(label, _)| label)
        .unwrap_or(0);
    raw.iter()
        .map(|&l| if l == majority { 0 } else { 1 })
        .collect()
}

/// Writes a dataset as headered CSV (`f0..f{d-1},label`). Feature values use
/// the shortest representation that round-trips exactly.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for j in 0..ds.n_features() {
        out.push_str(&format!("f{j},"));
    }
    out.push_str("label\n");
    for i in 0..ds.len() {
        for v in ds.row(i) {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", ds.label(i)));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Per-feature min-max scaling into [0, 1]; constant features map to 0.
pub fn minmax_normalize(ds: &Dataset) -> Dataset {
    let d = ds.n_features();
    let mut mins = vec![f64::INFINITY; d];
    let mut maxs = vec![f64::NEG_INFINITY; d];
    for i in 0..ds.len() {
        for (j, &v) in ds.row(i).iter().enumerate() {
            mins[j] = mins[j].min(v);
            maxs[j] = maxs[j].max(v);
        }
    }
    let mut features = Vec::with_capacity(ds.features.len());
    for i in 0..ds.len() {
        for (j, &v) in ds.row(i).iter().enumerate() {
            let range = maxs[j] - mins[j];
            features.push(if range > 0.0 { (v - mins[j]) / range } else { 0.0 });
        }
    }
    Dataset {
        name: ds.name.clone(),
        n_features: d,
        features,
        labels: ds.labels.clone(),
    }
}

/// Class-proportional train/test split. Each class contributes
/// `round(count * test_fraction)` test rows (clamped so both sides keep at
/// least one sample per class). Row order within each side follows the
/// original dataset.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_fraction must lie strictly between 0 and 1, got {test_fraction}"
        )));
    }
    let counts = ds.class_counts();
    for (c, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::Config(format!(
                "class {c} has {count} samples; at least 2 are required to split"
            )));
        }
    }

    let mut rng = seed::rng(seed, &[stream::SPLIT]);
    let mut test_indices = Vec::new();
    for c in 0..counts.len() {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.label(i) == c).collect();
        members.shuffle(&mut rng);
        let n_test = ((members.len() as f64 * test_fraction).round() as usize)
            .clamp(1, members.len() - 1);
        test_indices.extend_from_slice(&members[..n_test]);
    }
    test_indices.sort_unstable();
    let mut in_test = vec![false; ds.len()];
    for &i in &test_indices {
        in_test[i] = true;
    }
    let train_indices: Vec<usize> = (0..ds.len()).filter(|&i| !in_test[i]).collect();
    Ok((ds.subset(&train_indices), ds.subset(&test_indices)))
}

/// Parameters for [`synth_imbalanced`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub n: usize,
    pub features: usize,
    pub clusters: usize,
    pub minority_fraction: f64,
    pub separation: f64,
}

/// Gaussian-blob dataset with `round(n * minority_fraction)` minority rows.
///
/// Majority rows are spread evenly over `clusters` blobs (unit standard
/// deviation) whose centers sit on a grid with the given separation. The
/// minority rows form a tight clump (std 0.3) offset by 2.0 from the last
/// blob's center: locally dominant enough to be detectable, but inside the
/// host blob's basin, so coarse clusterings mix it with its host blob while
/// fine clusterings isolate it.
pub fn synth_imbalanced(spec: &SynthSpec, seed: u64) -> Result<Dataset> {
    if spec.clusters < 2 {
        return Err(Error::Config("synthetic data needs at least 2 clusters".into()));
    }
    if spec.features == 0 || spec.n == 0 {
        return Err(Error::Config("synthetic data needs n > 0 and features > 0".into()));
    }
    if !(spec.minority_fraction > 0.0 && spec.minority_fraction < 0.5) {
        return Err(Error::Config(format!(
            "minority_fraction must lie in (0, 0.5), got {}",
            spec.minority_fraction
        )));
    }

    let d = spec.features;
    let n_minority = (spec.n as f64 * spec.minority_fraction).round() as usize;
    let n_majority = spec.n - n_minority;
    let centers = grid_centers(spec.clusters, d, spec.separation);

    let mut rng = seed::rng(seed, &[stream::SYNTH]);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut features = Vec::with_capacity(spec.n * d);
    let mut labels = Vec::with_capacity(spec.n);

    for i in 0..n_majority {
        let center = &centers[i % spec.clusters];
        for &c in center {
            features.push(c + unit.sample(&mut rng));
        }
        labels.push(0);
    }
    // Minority clump: offset 2.0 along the first axis from the last center,
    // std 0.3 in every dimension.
    let host = &centers[spec.clusters - 1];
    for _ in 0..n_minority {
        for (j, &c) in host.iter().enumerate() {
            let offset = if j == 0 { 2.0 } else { 0.0 };
            features.push(c + offset + 0.3 * unit.sample(&mut rng));
        }
        labels.push(1);
    }

    Dataset::new("synth", d, features, labels)
}

/// Blob centers on an axis-aligned grid scaled by `separation`, so any two
/// centers are at least `separation` apart.
fn grid_centers(clusters: usize, d: usize, separation: f64) -> Vec<Vec<f64>> {
    let side = (clusters as f64).powf(1.0 / d as f64).ceil() as usize;
    let side = side.max(2);
    (0..clusters)
        .map(|b| {
            let mut id = b;
            (0..d)
                .map(|_| {
                    let coord = (id % side) as f64 * separation;
                    id /= side;
                    coord
                })
                .collect()
        })
        .collect()
}

/// Two well-separated Gaussian blobs with the blob id as the label; used by
/// clustering checks and training sanity runs.
pub fn two_blobs(n_per_blob: usize, distance: f64, seed: u64) -> Dataset {
    let mut rng = seed::rng(seed, &[stream::SYNTH, 2]);
    let unit = Normal::new(0.0, 1.0).expect("valid normal");
    let mut features = Vec::with_capacity(n_per_blob * 4);
    let mut labels = Vec::with_capacity(n_per_blob * 2);
    for blob in 0..2usize {
        let cx = blob as f64 * distance;
        for _ in 0..n_per_blob {
            features.push(cx + unit.sample(&mut rng));
            features.push(unit.sample(&mut rng));
            labels.push(blob);
        }
    }
    Dataset::new("blobs", 2, features, labels).expect("consistent by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_csv(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
        let path = dir.join("tiny.csv");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn load_csv_parses_rows_and_relabels() {
        let dir = std::env::temp_dir().join("fedcrit_data_test_load");
        std::fs::create_dir_all(&dir).unwrap();
        let path = tiny_csv(&dir, "a,b,label\n1.0,2.0,0\n3.0,4.0,0\n5.0,6.0,0\n7.0,8.0,1\n");
        let ds = load_csv(&path).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels(), &[0, 0, 0, 1]);
        assert!((ds.outlier_ratio() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn load_csv_relabels_when_minority_is_zero() {
        let dir = std::env::temp_dir().join("fedcrit_data_test_swap");
        std::fs::create_dir_all(&dir).unwrap();
        let path = tiny_csv(&dir, "a,label\n1,1\n2,1\n3,1\n4,0\n");
        let ds = load_csv(&path).unwrap();
        // Original majority 1 becomes 0, original 0 becomes the minority 1.
        assert_eq!(ds.labels(), &[0, 0, 0, 1]);
    }

    #[test]
    fn load_csv_names_bad_cell() {
        let dir = std::env::temp_dir().join("fedcrit_data_test_bad");
        std::fs::create_dir_all(&dir).unwrap();
        let path = tiny_csv(&dir, "a,b,label\n1.0,oops,0\n3.0,4.0,1\n");
        let err = load_csv(&path).unwrap_err();
        match err {
            Error::Ingest { row, column, .. } => {
                assert_eq!(row, 2);
                assert_eq!(column, 2);
            }
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn load_csv_rejects_headerless_numeric_file() {
        let dir = std::env::temp_dir().join("fedcrit_data_test_hdr");
        std::fs::create_dir_all(&dir).unwrap();
        let path = tiny_csv(&dir, "1.0,2.0,0\n3.0,4.0,1\n");
        assert!(matches!(load_csv(&path), Err(Error::Ingest { row: 1, .. })));
    }

    #[test]
    fn minmax_normalizes_and_zeroes_constant_columns() {
        let ds = Dataset::new("t", 2, vec![2.0, 5.0, 4.0, 5.0, 6.0, 5.0], vec![0, 0, 1]).unwrap();
        let norm = minmax_normalize(&ds);
        assert_eq!(norm.row(0), &[0.0, 0.0]);
        assert_eq!(norm.row(1), &[0.5, 0.0]);
        assert_eq!(norm.row(2), &[1.0, 0.0]);
    }

    #[test]
    fn minmax_is_idempotent_on_normalized_data() {
        let ds = Dataset::new("t", 1, vec![0.0, 0.25, 1.0], vec![0, 0, 1]).unwrap();
        let once = minmax_normalize(&ds);
        let twice = minmax_normalize(&once);
        for i in 0..ds.len() {
            assert!((once.row(i)[0] - twice.row(i)[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn stratified_split_is_proportional_and_disjoint() {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            features.push(i as f64);
            labels.push(if i < 90 { 0 } else { 1 });
        }
        let ds = Dataset::new("t", 1, features, labels).unwrap();
        let (train, test) = stratified_split(&ds, 0.3, 11).unwrap();
        assert_eq!(test.class_counts(), vec![27, 3]);
        assert_eq!(train.class_counts(), vec![63, 7]);
        assert_eq!(train.len() + test.len(), 100);
        // Disjoint union: every original feature value appears exactly once.
        let mut seen: Vec<f64> = train
            .features_flat()
            .iter()
            .chain(test.features_flat())
            .copied()
            .collect();
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn stratified_split_is_deterministic() {
        let ds = two_blobs(50, 10.0, 3);
        let (a_train, a_test) = stratified_split(&ds, 0.3, 7).unwrap();
        let (b_train, b_test) = stratified_split(&ds, 0.3, 7).unwrap();
        assert_eq!(a_train, b_train);
        assert_eq!(a_test, b_test);
    }

    #[test]
    fn synth_has_exact_minority_count() {
        let spec = SynthSpec {
            n: 2000,
            features: 2,
            clusters: 8,
            minority_fraction: 0.05,
            separation: 8.0,
        };
        let ds = synth_imbalanced(&spec, 5).unwrap();
        assert_eq!(ds.len(), 2000);
        assert_eq!(ds.class_counts(), vec![1900, 100]);
        let again = synth_imbalanced(&spec, 5).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let spec = SynthSpec {
            n: 120,
            features: 3,
            clusters: 2,
            minority_fraction: 0.1,
            separation: 6.0,
        };
        let ds = synth_imbalanced(&spec, 9).unwrap();
        let dir = std::env::temp_dir().join("fedcrit_data_test_rt");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rt.csv");
        write_csv(&ds, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(back.n_features(), ds.n_features());
        assert_eq!(back.labels(), ds.labels());
        assert_eq!(back.features_flat(), ds.features_flat());
    }
}
