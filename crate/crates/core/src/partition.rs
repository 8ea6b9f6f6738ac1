//! Non-i.i.d. data division via k-means on feature space, plus the
//! diagnostics that characterize critical imbalance: homogeneity, per
//! partition outlier ratios, and the guarantee that at least one partition
//! is at least as imbalanced as the whole dataset.

use std::path::Path;

use rand::Rng;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::seed::{self, stream};

const MAX_ITERATIONS: usize = 300;
const SHIFT_TOLERANCE: f64 = 1e-6;

/// One worker's share of the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Row indices into the source dataset.
    pub indices: Vec<usize>,
    /// Per-class sample counts.
    pub class_counts: Vec<usize>,
    /// Share of minority (label 1) samples in this partition.
    pub outlier_ratio: f64,
}

/// A disjoint division of a dataset whose union is the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSet {
    pub partitions: Vec<Partition>,
    pub global_class_counts: Vec<usize>,
    pub global_outlier_ratio: f64,
}

impl PartitionSet {
    /// Builds a partition set from per-row partition assignments.
    pub fn from_assignments(ds: &Dataset, assignments: &[usize], k: usize) -> Result<PartitionSet> {
        if assignments.len() != ds.len() {
            return Err(Error::Shape(format!(
                "{} assignments for {} rows",
                assignments.len(),
                ds.len()
            )));
        }
        let n_classes = ds.n_classes().max(2);
        let mut partitions: Vec<Partition> = (0..k)
            .map(|_| Partition {
                indices: Vec::new(),
                class_counts: vec![0; n_classes],
                outlier_ratio: 0.0,
            })
            .collect();
        for (row, &p) in assignments.iter().enumerate() {
            if p >= k {
                return Err(Error::Contract(format!(
                    "assignment {p} outside {k} partitions"
                )));
            }
            partitions[p].indices.push(row);
            partitions[p].class_counts[ds.label(row)] += 1;
        }
        for part in &mut partitions {
            let total = part.indices.len();
            part.outlier_ratio = if total == 0 {
                0.0
            } else {
                part.class_counts[1] as f64 / total as f64
            };
        }
        let mut global_class_counts = vec![0; n_classes];
        for &l in ds.labels() {
            global_class_counts[l] += 1;
        }
        let global_outlier_ratio = global_class_counts[1] as f64 / ds.len() as f64;
        Ok(PartitionSet {
            partitions,
            global_class_counts,
            global_outlier_ratio,
        })
    }

    pub fn k(&self) -> usize {
        self.partitions.len()
    }
}

/// Lloyd's k-means on the feature rows (labels are never consulted),
/// k-means++ seeding, at most 300 iterations or a centroid shift below 1e-6.
/// Empty clusters are repaired by stealing the farthest point from the
/// largest cluster, so every partition is non-empty.
pub fn kmeans_partition(ds: &Dataset, k: usize, seed: u64) -> Result<PartitionSet> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > ds.len() {
        return Err(Error::Config(format!(
            "k = {k} exceeds the dataset size {}",
            ds.len()
        )));
    }
    let d = ds.n_features();
    let n = ds.len();
    let mut rng = seed::rng(seed, &[stream::KMEANS]);

    let mut centroids = plus_plus_init(ds, k, &mut rng);
    let mut assignments = vec![0usize; n];
    let rows: Vec<usize> = (0..n).collect();

    for _ in 0..MAX_ITERATIONS {
        // Assignment step; ties break toward the lowest centroid index.
        assignments = exec::map_indexed(&rows, |_, &row| nearest_centroid(ds.row(row), &centroids));
        repair_empty_clusters(ds, k, &centroids, &mut assignments);

        // Update step, accumulated in row order for determinism.
        let mut sums = vec![0.0; k * d];
        let mut counts = vec![0usize; k];
        for (row, &c) in assignments.iter().enumerate() {
            counts[c] += 1;
            for (j, &v) in ds.row(row).iter().enumerate() {
                sums[c * d + j] += v;
            }
        }
        let mut shift: f64 = 0.0;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let mut dist2 = 0.0;
            for j in 0..d {
                let new = sums[c * d + j] / counts[c] as f64;
                let delta = new - centroids[c * d + j];
                dist2 += delta * delta;
                centroids[c * d + j] = new;
            }
            shift = shift.max(dist2.sqrt());
        }
        if shift < SHIFT_TOLERANCE {
            break;
        }
    }

    // Final assignment against the converged centroids.
    assignments = exec::map_indexed(&rows, |_, &row| nearest_centroid(ds.row(row), &centroids));
    repair_empty_clusters(ds, k, &centroids, &mut assignments);
    PartitionSet::from_assignments(ds, &assignments, k)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_centroid(row: &[f64], centroids: &[f64]) -> usize {
    let d = row.len();
    let k = centroids.len() / d;
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for c in 0..k {
        let dist = squared_distance(row, &centroids[c * d..(c + 1) * d]);
        if dist < best_dist {
            best_dist = dist;
            best = c;
        }
    }
    best
}

/// k-means++ seeding: first center uniform, each next drawn with probability
/// proportional to the squared distance to the nearest chosen center.
fn plus_plus_init(ds: &Dataset, k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<f64> {
    let d = ds.n_features();
    let n = ds.len();
    let mut centroids = Vec::with_capacity(k * d);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(ds.row(first));

    let mut dist2: Vec<f64> = (0..n)
        .map(|i| squared_distance(ds.row(i), &centroids[..d]))
        .collect();
    for _ in 1..k {
        let total: f64 = dist2.iter().sum();
        let chosen = if total > 0.0 {
            let mut u = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &w) in dist2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            pick
        } else {
            // All remaining mass at distance zero (duplicate points).
            rng.random_range(0..n)
        };
        let start = centroids.len();
        centroids.extend_from_slice(ds.row(chosen));
        for i in 0..n {
            let dnew = squared_distance(ds.row(i), &centroids[start..start + d]);
            if dnew < dist2[i] {
                dist2[i] = dnew;
            }
        }
    }
    centroids
}

/// Gives every empty cluster the member of the largest cluster that lies
/// farthest from its centroid. Ties break toward lower indices.
fn repair_empty_clusters(ds: &Dataset, k: usize, centroids: &[f64], assignments: &mut [usize]) {
    let d = ds.n_features();
    loop {
        let mut counts = vec![0usize; k];
        for &a in assignments.iter() {
            counts[a] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let largest = counts
            .iter()
            .enumerate()
            .max_by_key(|&(i, &c)| (c, std::cmp::Reverse(i)))
            .map(|(i, _)| i)
            .expect("k >= 1");
        let mut steal = None;
        let mut best = f64::NEG_INFINITY;
        for (row, &a) in assignments.iter().enumerate() {
            if a == largest {
                let dist = squared_distance(ds.row(row), &centroids[largest * d..(largest + 1) * d]);
                if dist > best {
                    best = dist;
                    steal = Some(row);
                }
            }
        }
        assignments[steal.expect("largest cluster is non-empty")] = empty;
    }
}

/// Homogeneity `1 - H(class | partition) / H(class)` with natural logs,
/// 1 by convention when the class entropy is zero.
pub fn homogeneity(parts: &PartitionSet) -> f64 {
    let n: usize = parts.global_class_counts.iter().sum();
    if n == 0 {
        return 1.0;
    }
    let h_class = entropy(&parts.global_class_counts, n);
    if h_class == 0.0 {
        return 1.0;
    }
    let mut h_conditional = 0.0;
    for p in &parts.partitions {
        let size: usize = p.class_counts.iter().sum();
        if size == 0 {
            continue;
        }
        h_conditional += size as f64 / n as f64 * entropy(&p.class_counts, size);
    }
    1.0 - h_conditional / h_class
}

fn entropy(counts: &[usize], total: usize) -> f64 {
    let mut h = 0.0;
    for &c in counts {
        if c > 0 {
            let p = c as f64 / total as f64;
            h -= p * p.ln();
        }
    }
    h
}

/// Critical-imbalance diagnostics of one partition set.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionStats {
    /// Per-partition outlier ratios.
    pub outlier_ratios: Vec<f64>,
    /// Partitions holding zero minority samples.
    pub minority_free: usize,
    /// Partitions whose outlier ratio is strictly below the global ratio.
    pub below_global: usize,
}

pub fn partition_stats(parts: &PartitionSet) -> PartitionStats {
    let r = parts.global_outlier_ratio;
    let outlier_ratios: Vec<f64> = parts.partitions.iter().map(|p| p.outlier_ratio).collect();
    let minority_free = parts
        .partitions
        .iter()
        .filter(|p| p.class_counts[1] == 0)
        .count();
    let below_global = outlier_ratios.iter().filter(|&&ri| ri < r).count();
    PartitionStats {
        outlier_ratios,
        minority_free,
        below_global,
    }
}

/// Checks that the most imbalance-favored partition matches or exceeds the
/// global outlier ratio. Holds for every legal division of the dataset.
pub fn verify_theorem1(parts: &PartitionSet) -> bool {
    let max_ratio = parts
        .partitions
        .iter()
        .map(|p| p.outlier_ratio)
        .fold(f64::NEG_INFINITY, f64::max);
    max_ratio >= parts.global_outlier_ratio - 1e-12
}

/// Writes `row_index,partition_id` rows for experiment reproducibility.
pub fn write_partition_manifest(parts: &PartitionSet, path: impl AsRef<Path>) -> Result<()> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (pid, p) in parts.partitions.iter().enumerate() {
        for &row in &p.indices {
            pairs.push((row, pid));
        }
    }
    pairs.sort_unstable();
    let mut out = String::from("row_index,partition_id\n");
    for (row, pid) in pairs {
        out.push_str(&format!("{row},{pid}\n"));
    }
    std::fs::write(path, out)?;
    Ok(())
}
