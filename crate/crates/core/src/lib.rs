//! Single-process simulator of federated training on severely imbalanced
//! binary datasets.
//!
//! A global dataset is divided across simulated worker nodes by k-means
//! clustering on feature space, each worker trains a small dense network
//! locally, and a parameter server aggregates the parameters once per
//! communication round under a configurable rule (plain averaging,
//! sample-size weighting, gradient-angle adaptive weighting, or an elastic
//! moving average). Classifiers can be pre-initialized from a federatedly
//! trained autoencoder, and the adaptive focal loss scales each worker's
//! error by its local class imbalance. Every run is a deterministic
//! function of its configuration and seeds.

pub mod aggregate;
pub mod config;
pub mod data;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod federation;
pub mod loss;
pub mod metrics;
pub mod nn;
pub mod param;
pub mod partition;
pub mod report;
pub mod seed;

pub use error::{Error, Result};
pub use param::ParamVector;
