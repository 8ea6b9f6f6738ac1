//! The simulated parameter server and its workers: two-phase training
//! (federated autoencoder pre-training, then cost-sensitive retraining)
//! over a fixed number of communication rounds.
//!
//! Within a round the workers run independently (and in parallel under the
//! `parallel` feature); aggregation and broadcast form a synchronous
//! barrier. Every worker's randomness is derived from the master seed, the
//! worker id and the round number, so results do not depend on scheduling.

use crate::aggregate::{
    easgd_aggregate, fed_avg, fedadp_aggregate, ss_fed_avg, AggregationKind, AggregationSpec,
    FedAdpState,
};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::exec;
use crate::loss::{ImbalanceProfile, LossSpec, ResolvedLoss};
use crate::metrics::{self, MetricRecord, ScoredLabels};
use crate::nn::{
    init_from_autoencoder, init_params, train_local, Initializer, Network, NetworkSpec,
    TrainConfig,
};
use crate::param::ParamVector;
use crate::partition::PartitionSet;
use crate::seed::{self, stream};

/// Full configuration of one federated run.
#[derive(Debug, Clone, PartialEq)]
pub struct FederationConfig {
    pub n_workers: usize,
    /// Retraining communication rounds.
    pub rounds: u32,
    /// Autoencoder pre-training communication rounds.
    pub pretrain_rounds: u32,
    pub aggregation: AggregationSpec,
    pub train: TrainConfig,
    pub loss: LossSpec,
    pub network: NetworkSpec,
    pub master_seed: u64,
}

impl FederationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_workers == 0 {
            return Err(Error::Config("n_workers must be at least 1".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        self.aggregation.validate()?;
        self.train.validate()?;
        self.loss.validate()?;
        self.network.validate()
    }
}

/// Whose test metrics a report row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Global,
    Worker(usize),
}

impl std::fmt::Display for Scope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scope::Global => write!(f, "global"),
            Scope::Worker(i) => write!(f, "worker_{i}"),
        }
    }
}

/// One per-round metric record. Worker rows are measured after local
/// training and before aggregation; the global row after aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u32,
    pub scope: Scope,
    pub metrics: MetricRecord,
}

/// Test metrics of a parameter vector under the given classifier topology.
pub fn evaluate_params(
    spec: &NetworkSpec,
    params: &ParamVector,
    test: &Dataset,
) -> Result<MetricRecord> {
    let net = Network::from_params(spec.clone(), params.clone())?;
    let mut scores = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        scores.push(net.predict_proba(test.row(i))?[1]);
    }
    metrics::evaluate(&ScoredLabels::new(scores, test.labels().to_vec())?)
}

fn worker_train_config(cfg: &FederationConfig, phase: u64, worker: usize, round: u32) -> TrainConfig {
    TrainConfig {
        seed: seed::derive(cfg.master_seed, &[phase, worker as u64, round as u64]),
        ..cfg.train
    }
}

/// Federated autoencoder pre-training: every worker fits its local features
/// under mean squared error, the server applies the elastic moving average
/// and broadcasts. No cost-sensitivity is involved. Returns the final
/// autoencoder parameters.
pub fn run_pretraining(cfg: &FederationConfig, locals: &[Dataset]) -> Result<ParamVector> {
    cfg.validate()?;
    if locals.len() != cfg.n_workers {
        return Err(Error::Shape(format!(
            "{} local datasets for {} workers",
            locals.len(),
            cfg.n_workers
        )));
    }
    let ae_spec = cfg.network.autoencoder();
    // Elastic moving average for the elastic preset; a zero coefficient
    // (plain averaging) otherwise, which makes a one-worker run exactly
    // centralized autoencoder training.
    let gamma = if cfg.aggregation.kind == AggregationKind::Easgd {
        cfg.aggregation.gamma
    } else {
        0.0
    };
    let mut server = init_params(&ae_spec)?;
    for round in 1..=cfg.pretrain_rounds {
        let trained: Result<Vec<ParamVector>> = exec::map_indexed(locals, |i, local| {
            let net = Network::from_params(ae_spec.clone(), server.clone())?;
            let wcfg = worker_train_config(cfg, stream::PRETRAIN, i, round);
            Ok(train_local(&net, local, &wcfg, &ResolvedLoss::Mse, round as u64)?.into_params())
        })
        .into_iter()
        .collect();
        server = easgd_aggregate(&server, &trained?, gamma)?;
    }
    Ok(server)
}

/// Cost-sensitive retraining rounds. Workers start each round from the
/// server parameters (broadcast contract), train with their per-worker
/// resolved loss, and the server aggregates under the configured rule.
/// Returns the final server parameters and the per-round records.
pub fn run_retraining(
    cfg: &FederationConfig,
    locals: &[Dataset],
    test: &Dataset,
    ae_params: Option<&ParamVector>,
) -> Result<(ParamVector, Vec<RoundRecord>)> {
    cfg.validate()?;
    if locals.len() != cfg.n_workers {
        return Err(Error::Shape(format!(
            "{} local datasets for {} workers",
            locals.len(),
            cfg.n_workers
        )));
    }
    for (i, local) in locals.iter().enumerate() {
        if local.is_empty() {
            return Err(Error::Contract(format!("worker {i} has an empty partition")));
        }
    }

    // Each worker's loss scale is fixed once from its full local partition.
    let losses: Vec<ResolvedLoss> = locals
        .iter()
        .map(|local| {
            let profile =
                ImbalanceProfile::from_counts(&local.class_counts(), cfg.loss.a, cfg.loss.b)?;
            cfg.loss.resolve(Some(&profile))
        })
        .collect::<Result<_>>()?;

    let spec = &cfg.network;
    let mut server = match spec.initializer {
        Initializer::AePretrained => {
            let ae = ae_params.ok_or_else(|| {
                Error::Contract("ae_pretrained initializer needs autoencoder parameters".into())
            })?;
            init_from_autoencoder(spec, ae)?
        }
        _ => init_params(spec)?,
    };

    let sizes: Vec<usize> = locals.iter().map(|l| l.len()).collect();
    let mut adp_state = FedAdpState::new();
    let mut records = Vec::with_capacity((cfg.rounds as usize) * (cfg.n_workers + 1));

    for round in 1..=cfg.rounds {
        let results: Result<Vec<(ParamVector, MetricRecord)>> =
            exec::map_indexed(locals, |i, local| {
                let net = Network::from_params(spec.clone(), server.clone())?;
                let wcfg = worker_train_config(cfg, stream::WORKER, i, round);
                let trained = train_local(&net, local, &wcfg, &losses[i], round as u64)?;
                let metrics = evaluate_params(spec, trained.params(), test)?;
                Ok((trained.into_params(), metrics))
            })
            .into_iter()
            .collect();
        let (worker_params, worker_metrics): (Vec<ParamVector>, Vec<MetricRecord>) =
            results?.into_iter().unzip();

        for (i, m) in worker_metrics.iter().enumerate() {
            records.push(RoundRecord { round, scope: Scope::Worker(i), metrics: *m });
        }

        server = match cfg.aggregation.kind {
            AggregationKind::FedAvg => fed_avg(&worker_params)?,
            AggregationKind::SsFedAvg => ss_fed_avg(&worker_params, &sizes)?,
            AggregationKind::Easgd => {
                easgd_aggregate(&server, &worker_params, cfg.aggregation.gamma)?
            }
            AggregationKind::FedAdp => {
                let grads = local_gradients(&server, &worker_params, cfg.train.learning_rate)?;
                fedadp_aggregate(
                    &worker_params,
                    &sizes,
                    &grads,
                    &mut adp_state,
                    cfg.aggregation.alpha,
                )?
            }
        };

        let global = evaluate_params(spec, &server, test)?;
        records.push(RoundRecord { round, scope: Scope::Global, metrics: global });
    }

    Ok((server, records))
}

/// Round-level pseudo-gradients: the local update was
/// `w_i = w_server - eta * g_i`, so `g_i = (w_server - w_i) / eta`.
fn local_gradients(
    server: &ParamVector,
    worker_params: &[ParamVector],
    eta: f64,
) -> Result<Vec<ParamVector>> {
    worker_params
        .iter()
        .map(|w| {
            let mut g = server.sub(w)?;
            if eta > 0.0 {
                g.scale(1.0 / eta);
            }
            Ok(g)
        })
        .collect()
}

/// End-to-end federated run over a partition set: materializes worker-local
/// datasets, pre-trains the autoencoder when the classifier is configured
/// for it, then retrains.
pub fn run_federated(
    cfg: &FederationConfig,
    parts: &PartitionSet,
    train: &Dataset,
    test: &Dataset,
) -> Result<(ParamVector, Vec<RoundRecord>)> {
    if parts.k() != cfg.n_workers {
        return Err(Error::Shape(format!(
            "partition set has {} parts for {} workers",
            parts.k(),
            cfg.n_workers
        )));
    }
    let locals: Vec<Dataset> = parts
        .partitions
        .iter()
        .map(|p| train.subset(&p.indices))
        .collect();
    let ae = if cfg.network.initializer == Initializer::AePretrained {
        Some(run_pretraining(cfg, &locals)?)
    } else {
        None
    };
    run_retraining(cfg, &locals, test, ae.as_ref())
}
