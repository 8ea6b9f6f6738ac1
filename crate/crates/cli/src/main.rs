//! `fedcrit` — experiment runner for the federated imbalanced-learning
//! simulator. Runs config-driven sweeps, partition diagnostics and
//! synthetic dataset generation; everything is deterministic given the
//! config and seeds.

mod plots;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fedcrit_core::config::ExperimentConfig;
use fedcrit_core::data::{synth_imbalanced, write_csv, SynthSpec};
use fedcrit_core::error::Result;
use fedcrit_core::experiment::{diagnose_partitions, run_sweep};
use fedcrit_core::report::{
    diagnostics_csv, results_csv, summarize, summary_csv, write_text,
};

/// Environment variable that overrides the configured seed list.
const SEED_ENV: &str = "FEDCRIT_SEED";

#[derive(Parser)]
#[command(name = "fedcrit", version, about = "Federated learning under critical class imbalance, simulated deterministically")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep; writes results.csv and summary.csv.
    Run {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Run only this master seed instead of the configured list.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Also emit SVG plots next to the CSVs.
        #[arg(long)]
        plots: bool,
    },
    /// Partition diagnostics over the configured node counts; writes
    /// diagnostics.csv.
    Diagnose {
        /// Experiment config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write a row-to-partition manifest per node count.
        #[arg(long)]
        manifests: bool,
        /// Also emit SVG plots next to the CSV.
        #[arg(long)]
        plots: bool,
    },
    /// Generate a synthetic imbalanced dataset CSV.
    Synth {
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Total number of rows.
        #[arg(long)]
        n: usize,
        /// Feature dimension.
        #[arg(long)]
        features: usize,
        /// Number of majority blobs.
        #[arg(long)]
        clusters: usize,
        /// Minority share of rows, in (0, 0.5).
        #[arg(long)]
        minority_fraction: f64,
        /// Distance between adjacent blob centers (blob std is 1).
        #[arg(long)]
        separation: f64,
        /// Generation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

/// Flag beats environment variable beats config file.
fn apply_seed_override(cfg: &mut ExperimentConfig, flag: Option<u64>) -> Result<()> {
    if let Some(seed) = flag {
        cfg.seeds = vec![seed];
        return Ok(());
    }
    if let Ok(raw) = std::env::var(SEED_ENV) {
        let seed: u64 = raw.trim().parse().map_err(|_| {
            fedcrit_core::Error::Config(format!("{SEED_ENV} must be an unsigned integer, got {raw:?}"))
        })?;
        cfg.seeds = vec![seed];
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed_override, plots } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            apply_seed_override(&mut cfg, seed_override)?;
            cfg.validate()?;
            let rows = run_sweep(&cfg)?;
            let summary = summarize(&rows)?;
            std::fs::create_dir_all(&out)?;
            write_text(out.join("results.csv"), &results_csv(&rows))?;
            write_text(out.join("summary.csv"), &summary_csv(&summary))?;
            println!("wrote {}", out.join("results.csv").display());
            println!("wrote {}", out.join("summary.csv").display());
            if plots {
                plots::fscore_vs_workers(&summary, out.join("fscore_vs_workers.svg"))?;
                plots::per_round_fscore(&rows, out.join("per_round_fscore.svg"))?;
                println!("wrote {}", out.join("fscore_vs_workers.svg").display());
                println!("wrote {}", out.join("per_round_fscore.svg").display());
            }
            Ok(())
        }
        Command::Diagnose { config, out, manifests, plots } => {
            let mut cfg = ExperimentConfig::from_path(&config)?;
            apply_seed_override(&mut cfg, None)?;
            cfg.validate()?;
            let rows = diagnose_partitions(&cfg)?;
            std::fs::create_dir_all(&out)?;
            write_text(out.join("diagnostics.csv"), &diagnostics_csv(&rows))?;
            println!("wrote {}", out.join("diagnostics.csv").display());
            if manifests {
                let run_seed = cfg.seeds[0];
                let (train, _) = fedcrit_core::experiment::prepare_split(&cfg, run_seed)?;
                for &k in &cfg.node_counts {
                    let parts = fedcrit_core::experiment::partition_for(&train, k, run_seed)?;
                    let path = out.join(format!("partitions_k{k}.csv"));
                    fedcrit_core::partition::write_partition_manifest(&parts, &path)?;
                    println!("wrote {}", path.display());
                }
            }
            if plots {
                plots::homogeneity_vs_k(&rows, out.join("homogeneity_vs_k.svg"))?;
                plots::critical_imbalance_vs_k(&rows, out.join("critical_imbalance_vs_k.svg"))?;
                println!("wrote {}", out.join("homogeneity_vs_k.svg").display());
                println!("wrote {}", out.join("critical_imbalance_vs_k.svg").display());
            }
            Ok(())
        }
        Command::Synth { out, n, features, clusters, minority_fraction, separation, seed } => {
            let spec = SynthSpec { n, features, clusters, minority_fraction, separation };
            let ds = synth_imbalanced(&spec, seed)?;
            write_csv(&ds, &out)?;
            println!(
                "wrote {} ({} rows, {} features, {:.4}% outliers)",
                out.display(),
                ds.len(),
                ds.n_features(),
                100.0 * ds.outlier_ratio()
            );
            Ok(())
        }
    }
}
