//! Config-driven experiment execution: single runs, worker-count sweeps,
//! multi-seed medians, and partition diagnostics.
//!
//! For one run seed, every method sees the same dataset, the same split and
//! the same partitions; only training-related streams differ. A results CSV
//! is therefore a pure function of its config file and seed list.

use std::path::{Path, PathBuf};

use crate::config::{DatasetSource, ExperimentConfig, Method};
use crate::data::{load_csv, minmax_normalize, stratified_split, synth_imbalanced, Dataset};
use crate::error::Result;
use crate::federation::{run_federated, FederationConfig};
use crate::nn::Initializer;
use crate::partition::{
    homogeneity, kmeans_partition, partition_stats, verify_theorem1, write_partition_manifest,
    PartitionSet,
};
use crate::report::{
    diagnostics_csv, results_csv, summarize, summary_csv, write_text, DiagnosticsRow, ResultRow,
};
use crate::seed::{self, stream};

/// Every initializer exercised by the single-model comparison.
pub const ALL_INITIALIZERS: [Initializer; 7] = [
    Initializer::AePretrained,
    Initializer::RandomNormal,
    Initializer::RandomUniform,
    Initializer::GlorotNormal,
    Initializer::GlorotUniform,
    Initializer::HeNormal,
    Initializer::HeUniform,
];

fn initializer_name(init: Initializer) -> &'static str {
    match init {
        Initializer::AePretrained => "ae_pretrained",
        Initializer::RandomNormal => "random_normal",
        Initializer::RandomUniform => "random_uniform",
        Initializer::GlorotNormal => "glorot_normal",
        Initializer::GlorotUniform => "glorot_uniform",
        Initializer::HeNormal => "he_normal",
        Initializer::HeUniform => "he_uniform",
    }
}

/// Normalized dataset for one run seed. CSV sources are fixed across seeds;
/// synthetic sources are regenerated from a seed-derived stream.
pub fn dataset_for_seed(cfg: &ExperimentConfig, run_seed: u64) -> Result<Dataset> {
    let ds = match &cfg.dataset {
        DatasetSource::Csv { path } => load_csv(path)?,
        DatasetSource::Synth(spec) => {
            synth_imbalanced(spec, seed::derive(run_seed, &[stream::DATASET]))?
        }
    };
    Ok(minmax_normalize(&ds))
}

/// Normalized train/test split for one run seed.
pub fn prepare_split(cfg: &ExperimentConfig, run_seed: u64) -> Result<(Dataset, Dataset)> {
    let ds = dataset_for_seed(cfg, run_seed)?;
    stratified_split(&ds, cfg.test_fraction, run_seed)
}

/// Worker partitions of a training set for one `(k, run_seed)` cell.
pub fn partition_for(train: &Dataset, k: usize, run_seed: u64) -> Result<PartitionSet> {
    kmeans_partition(train, k, run_seed)
}

/// Assembles the federation config of one sweep cell.
pub fn federation_config(
    cfg: &ExperimentConfig,
    input_dim: usize,
    k: usize,
    run_seed: u64,
    initializer: Initializer,
) -> FederationConfig {
    FederationConfig {
        n_workers: k,
        rounds: cfg.rounds,
        pretrain_rounds: cfg.pretrain_rounds,
        aggregation: cfg.resolve_aggregation(),
        train: cfg.train_config(seed::derive(run_seed, &[stream::SHUFFLE])),
        loss: cfg.resolve_loss(),
        network: cfg.network_spec(
            input_dim,
            initializer,
            seed::derive(run_seed, &[stream::INIT]),
        ),
        master_seed: seed::derive(run_seed, &[stream::FEDERATION, k as u64]),
    }
}

/// Runs the full sweep (`node_counts x seeds`, and for the initializer
/// comparison additionally every initializer) and returns the raw rows in
/// deterministic order.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &k in &cfg.node_counts {
        for &run_seed in &cfg.seeds {
            let (train, test) = prepare_split(cfg, run_seed)?;
            let parts = partition_for(&train, k, run_seed)?;
            let dataset_name = train.name.clone();

            let mut run_one = |initializer: Initializer, method_name: &str| -> Result<()> {
                let fed = federation_config(cfg, train.n_features(), k, run_seed, initializer);
                let (_, records) = run_federated(&fed, &parts, &train, &test)?;
                rows.extend(records.iter().map(|r| {
                    ResultRow::from_record(&dataset_name, method_name, k, run_seed, r)
                }));
                Ok(())
            };

            match cfg.method {
                Method::SingleModelInitComparison => {
                    for init in ALL_INITIALIZERS {
                        run_one(init, &format!("init_{}", initializer_name(init)))?;
                    }
                }
                _ => run_one(cfg.resolve_initializer(), cfg.method.name())?,
            }
        }
    }
    Ok(rows)
}

/// Paths of the files a sweep writes.
#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub results_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Runs the sweep and writes `results.csv` plus `summary.csv` under `out`.
pub fn run_sweep_to_dir(cfg: &ExperimentConfig, out: impl AsRef<Path>) -> Result<SweepOutput> {
    let out = out.as_ref();
    let rows = run_sweep(cfg)?;
    let summary = summarize(&rows)?;
    let results_path = out.join("results.csv");
    let summary_path = out.join("summary.csv");
    write_text(&results_path, &results_csv(&rows))?;
    write_text(&summary_path, &summary_csv(&summary))?;
    Ok(SweepOutput { results_path, summary_path })
}

/// Partition diagnostics over the configured node counts, computed on the
/// training split of the first seed.
pub fn diagnose_partitions(cfg: &ExperimentConfig) -> Result<Vec<DiagnosticsRow>> {
    cfg.validate()?;
    let run_seed = cfg.seeds[0];
    let (train, _test) = prepare_split(cfg, run_seed)?;
    let mut rows = Vec::with_capacity(cfg.node_counts.len());
    for &k in &cfg.node_counts {
        let parts = partition_for(&train, k, run_seed)?;
        let stats = partition_stats(&parts);
        rows.push(DiagnosticsRow {
            dataset: train.name.clone(),
            k,
            homogeneity: homogeneity(&parts),
            minority_free: stats.minority_free,
            below_global: stats.below_global,
            theorem1_holds: verify_theorem1(&parts),
        });
    }
    Ok(rows)
}

/// Writes `diagnostics.csv` (and per-k partition manifests when requested)
/// under `out`; returns the diagnostics path.
pub fn diagnose_to_dir(
    cfg: &ExperimentConfig,
    out: impl AsRef<Path>,
    manifests: bool,
) -> Result<PathBuf> {
    let out = out.as_ref();
    let rows = diagnose_partitions(cfg)?;
    let path = out.join("diagnostics.csv");
    write_text(&path, &diagnostics_csv(&rows))?;
    if manifests {
        let run_seed = cfg.seeds[0];
        let (train, _) = prepare_split(cfg, run_seed)?;
        for &k in &cfg.node_counts {
            let parts = partition_for(&train, k, run_seed)?;
            std::fs::create_dir_all(out)?;
            write_partition_manifest(&parts, out.join(format!("partitions_k{k}.csv")))?;
        }
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(method: &str) -> ExperimentConfig {
        let json = format!(
            r#"{{
                "dataset": {{"synth": {{"n": 200, "features": 2, "clusters": 3,
                             "minority_fraction": 0.1, "separation": 8.0}}}},
                "method": "{method}",
                "node_counts": [1, 2],
                "seeds": [0],
                "rounds": 2,
                "pretrain_rounds": 1,
                "train": {{"learning_rate": 0.3, "local_epochs": 1, "batch_size": 16}},
                "network": {{"hidden_sizes": [4]}}
            }}"#
        );
        ExperimentConfig::from_json(&json).unwrap()
    }

    #[test]
    fn sweep_emits_rows_per_round_and_scope() {
        let cfg = tiny_cfg("easgd_ce");
        let rows = run_sweep(&cfg).unwrap();
        // k=1: 2 rounds x (1 worker + global) = 4 rows;
        // k=2: 2 rounds x (2 workers + global) = 6 rows.
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.method == "easgd_ce"));
        assert_eq!(rows.iter().filter(|r| r.scope == "global").count(), 4);
    }

    #[test]
    fn methods_share_data_and_partitions_per_seed() {
        let a = prepare_split(&tiny_cfg("easgd_ce"), 3).unwrap();
        let b = prepare_split(&tiny_cfg("proposed"), 3).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn diagnostics_cover_every_node_count() {
        let cfg = tiny_cfg("easgd_ce");
        let rows = diagnose_partitions(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.theorem1_holds));
        assert_eq!(rows[0].k, 1);
        // A single partition matches the global mix exactly.
        assert!(rows[0].homogeneity.abs() < 1e-12);
        assert_eq!(rows[0].minority_free, 0);
        assert_eq!(rows[0].below_global, 0);
    }

    #[test]
    fn init_comparison_runs_every_initializer() {
        let json = r#"{
            "dataset": {"synth": {"n": 150, "features": 2, "clusters": 2,
                         "minority_fraction": 0.1, "separation": 8.0}},
            "method": "single_model_init_comparison",
            "node_counts": [1],
            "seeds": [0],
            "rounds": 1,
            "pretrain_rounds": 1,
            "train": {"learning_rate": 0.3, "local_epochs": 1, "batch_size": 16},
            "network": {"hidden_sizes": [3]}
        }"#;
        let cfg = ExperimentConfig::from_json(json).unwrap();
        let rows = run_sweep(&cfg).unwrap();
        let methods: std::collections::BTreeSet<&str> =
            rows.iter().map(|r| r.method.as_str()).collect();
        assert_eq!(methods.len(), 7);
        assert!(methods.contains("init_ae_pretrained"));
        assert!(methods.contains("init_random_normal"));
    }
}
