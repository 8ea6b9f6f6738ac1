//! Dense feed-forward networks: selectable initializers, backpropagation
//! against a pluggable loss, mini-batch SGD, and autoencoder pre-training
//! with classifier re-initialization.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::loss::ResolvedLoss;
use crate::param::{layer_offsets, param_len, ParamVector};
use crate::seed::{self, stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenActivation {
    Sigmoid,
    Relu,
    Tanh,
}

impl HiddenActivation {
    fn apply(self, z: f64) -> f64 {
        match self {
            HiddenActivation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            HiddenActivation::Relu => z.max(0.0),
            HiddenActivation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation value itself.
    fn derivative(self, a: f64) -> f64 {
        match self {
            HiddenActivation::Sigmoid => a * (1.0 - a),
            HiddenActivation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            HiddenActivation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    /// Distribution over the output units.
    Softmax,
    /// Element-wise logistic; one unit for binary classification, several
    /// for reconstruction of [0, 1]-scaled inputs.
    Sigmoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initializer {
    RandomNormal,
    RandomUniform,
    GlorotNormal,
    GlorotUniform,
    HeNormal,
    HeUniform,
    AePretrained,
}

/// Topology, activations, initializer and seed of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Input dimension first, output dimension last.
    pub layer_sizes: Vec<usize>,
    pub hidden_activation: HiddenActivation,
    pub output_activation: OutputActivation,
    pub initializer: Initializer,
    pub seed: u64,
}

impl NetworkSpec {
    /// Classifier spec. When `hidden` is `None` a small pyramid is used:
    /// `ceil(2d/3)` then `ceil(d/3)` units.
    pub fn classifier(
        input_dim: usize,
        n_classes: usize,
        hidden: Option<&[usize]>,
        hidden_activation: HiddenActivation,
        initializer: Initializer,
        seed: u64,
    ) -> NetworkSpec {
        let hidden: Vec<usize> = match hidden {
            Some(h) => h.to_vec(),
            None => pyramid_hidden(input_dim),
        };
        let mut layer_sizes = Vec::with_capacity(hidden.len() + 2);
        layer_sizes.push(input_dim);
        layer_sizes.extend_from_slice(&hidden);
        layer_sizes.push(n_classes);
        NetworkSpec {
            layer_sizes,
            hidden_activation,
            output_activation: OutputActivation::Softmax,
            initializer,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::Config(
                "a network needs at least an input and an output layer".into(),
            ));
        }
        if self.layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("every layer size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated layer sizes")
    }

    pub fn param_len(&self) -> usize {
        param_len(&self.layer_sizes)
    }

    /// Hidden layer sizes, i.e. everything between input and output.
    pub fn hidden_sizes(&self) -> &[usize] {
        &self.layer_sizes[1..self.layer_sizes.len() - 1]
    }

    /// Autoencoder spec for this classifier: the encoder is the classifier's
    /// hidden stack and the decoder its mirror, with a sigmoid output layer
    /// reconstructing [0, 1]-scaled inputs.
    pub fn autoencoder(&self) -> NetworkSpec {
        let hidden = self.hidden_sizes();
        let mut layer_sizes = Vec::with_capacity(2 * hidden.len() + 1);
        layer_sizes.push(self.input_dim());
        layer_sizes.extend_from_slice(hidden);
        for &h in hidden.iter().rev().skip(1) {
            layer_sizes.push(h);
        }
        layer_sizes.push(self.input_dim());
        NetworkSpec {
            layer_sizes,
            hidden_activation: self.hidden_activation,
            output_activation: OutputActivation::Sigmoid,
            initializer: Initializer::GlorotUniform,
            seed: seed::derive(self.seed, &[stream::PRETRAIN]),
        }
    }

    /// Flat length of the encoder prefix (the hidden-stack layers).
    pub fn encoder_param_len(&self) -> usize {
        param_len(&self.layer_sizes[..self.layer_sizes.len() - 1])
    }
}

/// Hidden pyramid `ceil(2d/3)`, `ceil(d/3)`.
pub fn pyramid_hidden(input_dim: usize) -> Vec<usize> {
    let h1 = (2 * input_dim).div_ceil(3).max(1);
    let h2 = input_dim.div_ceil(3).max(1);
    vec![h1, h2]
}

/// Freshly drawn parameters for `spec`. All biases start at zero.
pub fn init_params(spec: &NetworkSpec) -> Result<ParamVector> {
    spec.validate()?;
    if spec.initializer == Initializer::AePretrained {
        return Err(Error::Config(
            "ae_pretrained parameters come from init_from_autoencoder, not init_params".into(),
        ));
    }
    let mut values = vec![0.0; spec.param_len()];
    let mut rng = seed::rng(spec.seed, &[stream::INIT]);
    let offsets = layer_offsets(&spec.layer_sizes);
    for (l, &(w_off, b_off)) in offsets.iter().enumerate() {
        let fan_in = spec.layer_sizes[l];
        let fan_out = spec.layer_sizes[l + 1];
        draw_layer_weights(
            &mut rng,
            spec.initializer,
            fan_in,
            fan_out,
            &mut values[w_off..b_off],
        );
    }
    Ok(ParamVector::from_vec(values))
}

fn draw_layer_weights(
    rng: &mut ChaCha8Rng,
    initializer: Initializer,
    fan_in: usize,
    fan_out: usize,
    weights: &mut [f64],
) {
    let uniform = |rng: &mut ChaCha8Rng, bound: f64| rng.random_range(-bound..bound);
    match initializer {
        Initializer::RandomNormal => {
            let dist = Normal::new(0.0, 0.05).expect("valid normal");
            for w in weights.iter_mut() {
                *w = dist.sample(rng);
            }
        }
        Initializer::RandomUniform => {
            for w in weights.iter_mut() {
                *w = uniform(rng, 0.05);
            }
        }
        Initializer::GlorotNormal => {
            let std = (2.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Normal::new(0.0, std).expect("valid normal");
            for w in weights.iter_mut() {
                *w = dist.sample(rng);
            }
        }
        Initializer::GlorotUniform => {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for w in weights.iter_mut() {
                *w = uniform(rng, bound);
            }
        }
        Initializer::HeNormal => {
            let std = (2.0 / fan_in as f64).sqrt();
            let dist = Normal::new(0.0, std).expect("valid normal");
            for w in weights.iter_mut() {
                *w = dist.sample(rng);
            }
        }
        Initializer::HeUniform => {
            let bound = (6.0 / fan_in as f64).sqrt();
            for w in weights.iter_mut() {
                *w = uniform(rng, bound);
            }
        }
        Initializer::AePretrained => unreachable!("rejected by init_params"),
    }
}

/// A network: topology plus its current flat parameters.
#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    params: ParamVector,
}

impl Network {
    pub fn new(spec: NetworkSpec) -> Result<Network> {
        let params = init_params(&spec)?;
        Ok(Network { spec, params })
    }

    pub fn from_params(spec: NetworkSpec, params: ParamVector) -> Result<Network> {
        spec.validate()?;
        if params.len() != spec.param_len() {
            return Err(Error::Shape(format!(
                "spec needs {} parameters, got {}",
                spec.param_len(),
                params.len()
            )));
        }
        Ok(Network { spec, params })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamVector {
        &self.params
    }

    pub fn into_params(self) -> ParamVector {
        self.params
    }

    /// Output-layer activation values for one input row.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.activations(x)?.pop().expect("at least one layer"))
    }

    /// Activation values of every layer, input first, output last.
    pub fn activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.spec.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.spec.input_dim()
            )));
        }
        let sizes = &self.spec.layer_sizes;
        let offsets = layer_offsets(sizes);
        let values = self.params.as_slice();
        let mut trace = Vec::with_capacity(sizes.len());
        trace.push(x.to_vec());
        for (l, &(w_off, b_off)) in offsets.iter().enumerate() {
            let fan_in = sizes[l];
            let fan_out = sizes[l + 1];
            let input = &trace[l];
            let mut z = vec![0.0; fan_out];
            for j in 0..fan_out {
                let mut sum = values[b_off + j];
                for i in 0..fan_in {
                    sum += input[i] * values[w_off + i * fan_out + j];
                }
                z[j] = sum;
            }
            let last = l + 1 == offsets.len();
            let a = if last {
                match self.spec.output_activation {
                    OutputActivation::Softmax => softmax(&z),
                    OutputActivation::Sigmoid => {
                        z.iter().map(|&v| HiddenActivation::Sigmoid.apply(v)).collect()
                    }
                }
            } else {
                z.iter().map(|&v| self.spec.hidden_activation.apply(v)).collect()
            };
            trace.push(a);
        }
        Ok(trace)
    }

    /// Class-probability distribution for one input row. Softmax outputs are
    /// returned as-is; a single sigmoid unit expands to `[1 - p, p]`.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        let out = self.forward(x)?;
        match self.spec.output_activation {
            OutputActivation::Softmax => Ok(out),
            OutputActivation::Sigmoid if out.len() == 1 => Ok(vec![1.0 - out[0], out[0]]),
            OutputActivation::Sigmoid => Err(Error::Contract(
                "a multi-unit sigmoid output is not a classifier".into(),
            )),
        }
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// A mini-batch: feature rows plus either class labels or target rows.
#[derive(Debug, Clone, Copy)]
pub struct Batch<'a> {
    features: &'a [f64],
    n_features: usize,
    n_rows: usize,
    targets: BatchTargets<'a>,
}

#[derive(Debug, Clone, Copy)]
enum BatchTargets<'a> {
    Classes(&'a [usize]),
    Rows { data: &'a [f64], width: usize },
    /// Reconstruction targets are the input rows themselves.
    Inputs,
}

impl<'a> Batch<'a> {
    pub fn classification(
        features: &'a [f64],
        n_features: usize,
        labels: &'a [usize],
    ) -> Result<Batch<'a>> {
        if n_features == 0 || features.len() != labels.len() * n_features {
            return Err(Error::Shape(format!(
                "{} feature values do not form {} rows of width {}",
                features.len(),
                labels.len(),
                n_features
            )));
        }
        if labels.is_empty() {
            return Err(Error::Contract("empty batch".into()));
        }
        Ok(Batch {
            features,
            n_features,
            n_rows: labels.len(),
            targets: BatchTargets::Classes(labels),
        })
    }

    /// Reconstruction batch: each row is its own target.
    pub fn reconstruction(features: &'a [f64], n_features: usize) -> Result<Batch<'a>> {
        if n_features == 0 || features.len() % n_features != 0 {
            return Err(Error::Shape(format!(
                "{} feature values are not rows of width {}",
                features.len(),
                n_features
            )));
        }
        let n_rows = features.len() / n_features;
        if n_rows == 0 {
            return Err(Error::Contract("empty batch".into()));
        }
        Ok(Batch {
            features,
            n_features,
            n_rows,
            targets: BatchTargets::Inputs,
        })
    }

    /// Regression batch with explicit target rows of the given width.
    pub fn regression(
        features: &'a [f64],
        n_features: usize,
        targets: &'a [f64],
        target_width: usize,
    ) -> Result<Batch<'a>> {
        if n_features == 0 || features.len() % n_features != 0 {
            return Err(Error::Shape("misaligned feature rows".into()));
        }
        let n_rows = features.len() / n_features;
        if n_rows == 0 {
            return Err(Error::Contract("empty batch".into()));
        }
        if targets.len() != n_rows * target_width {
            return Err(Error::Shape(format!(
                "{} target values do not form {} rows of width {}",
                targets.len(),
                n_rows,
                target_width
            )));
        }
        Ok(Batch {
            features,
            n_features,
            n_rows,
            targets: BatchTargets::Rows { data: targets, width: target_width },
        })
    }

    /// Classification batch over a whole dataset.
    pub fn from_dataset(ds: &'a Dataset) -> Result<Batch<'a>> {
        Batch::classification(ds.features_flat(), ds.n_features(), ds.labels())
    }

    pub fn len(&self) -> usize {
        self.n_rows
    }

    pub fn is_empty(&self) -> bool {
        self.n_rows == 0
    }

    fn row(&self, i: usize) -> &'a [f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }
}

/// Mean loss of the batch under `loss`.
pub fn loss_value(net: &Network, batch: &Batch, loss: &ResolvedLoss) -> Result<f64> {
    let mut ws = Workspace::new(&net.spec);
    let mut total = 0.0;
    for s in 0..batch.len() {
        ws.forward(&net.spec, net.params.as_slice(), batch.row(s));
        total += ws.sample_loss(&net.spec, batch, s, loss)?;
    }
    Ok(total / batch.len() as f64)
}

/// Mean loss and its gradient with respect to every parameter, in the same
/// layout as the network's `ParamVector`.
pub fn loss_gradient(net: &Network, batch: &Batch, loss: &ResolvedLoss) -> Result<(f64, ParamVector)> {
    let mut grad = ParamVector::zeros(net.params.len());
    let mut ws = Workspace::new(&net.spec);
    let value = accumulate_gradient(
        &net.spec,
        net.params.as_slice(),
        batch,
        loss,
        &mut ws,
        grad.as_mut_slice(),
    )?;
    Ok((value, grad))
}

/// Scratch buffers reused across samples of a batch.
struct Workspace {
    /// Per-layer activations, input first.
    acts: Vec<Vec<f64>>,
    /// dL/d(output activations).
    out_grad: Vec<f64>,
    /// Current and previous layer deltas.
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl Workspace {
    fn new(spec: &NetworkSpec) -> Workspace {
        let widest = *spec.layer_sizes.iter().max().expect("non-empty");
        Workspace {
            acts: spec.layer_sizes.iter().map(|&s| vec![0.0; s]).collect(),
            out_grad: vec![0.0; spec.output_dim().max(2)],
            delta: vec![0.0; widest],
            delta_prev: vec![0.0; widest],
        }
    }

    fn forward(&mut self, spec: &NetworkSpec, values: &[f64], x: &[f64]) {
        self.acts[0].copy_from_slice(x);
        let sizes = &spec.layer_sizes;
        let offsets = layer_offsets(sizes);
        for (l, &(w_off, b_off)) in offsets.iter().enumerate() {
            let fan_in = sizes[l];
            let fan_out = sizes[l + 1];
            let (before, after) = self.acts.split_at_mut(l + 1);
            let input = &before[l];
            let out = &mut after[0];
            for j in 0..fan_out {
                let mut sum = values[b_off + j];
                for i in 0..fan_in {
                    sum += input[i] * values[w_off + i * fan_out + j];
                }
                out[j] = sum;
            }
            let last = l + 1 == offsets.len();
            if last {
                match spec.output_activation {
                    OutputActivation::Softmax => {
                        let sm = softmax(out);
                        out.copy_from_slice(&sm);
                    }
                    OutputActivation::Sigmoid => {
                        for v in out.iter_mut() {
                            *v = HiddenActivation::Sigmoid.apply(*v);
                        }
                    }
                }
            } else {
                for v in out.iter_mut() {
                    *v = spec.hidden_activation.apply(*v);
                }
            }
        }
    }

    fn sample_loss(
        &self,
        spec: &NetworkSpec,
        batch: &Batch,
        s: usize,
        loss: &ResolvedLoss,
    ) -> Result<f64> {
        let out = self.acts.last().expect("forward ran");
        match batch.targets {
            BatchTargets::Classes(labels) => {
                let class = labels[s];
                match spec.output_activation {
                    OutputActivation::Softmax => {
                        if class >= out.len() {
                            return Err(Error::Contract(format!(
                                "label {class} outside the {}-class output",
                                out.len()
                            )));
                        }
                        Ok(loss.class_value(class, out))
                    }
                    OutputActivation::Sigmoid => {
                        if out.len() != 1 || class > 1 {
                            return Err(Error::Contract(
                                "sigmoid-output classification needs one unit and binary labels"
                                    .into(),
                            ));
                        }
                        Ok(loss.class_value(class, &[1.0 - out[0], out[0]]))
                    }
                }
            }
            BatchTargets::Inputs => loss.vector_value(batch.row(s), out),
            BatchTargets::Rows { data, width } => {
                loss.vector_value(&data[s * width..(s + 1) * width], out)
            }
        }
    }

    /// Sets `self.delta` to dL/dz of the output layer for sample `s`.
    fn output_delta(
        &mut self,
        spec: &NetworkSpec,
        batch: &Batch,
        s: usize,
        loss: &ResolvedLoss,
    ) -> Result<()> {
        let out = self.acts.last().expect("forward ran");
        let n_out = out.len();
        match batch.targets {
            BatchTargets::Classes(labels) => {
                let class = labels[s];
                match spec.output_activation {
                    OutputActivation::Softmax => {
                        loss.class_grad(class, out, &mut self.out_grad[..n_out]);
                        // dL/dz_k = p_k (g_k - sum_i g_i p_i)
                        let inner: f64 = self.out_grad[..n_out]
                            .iter()
                            .zip(out)
                            .map(|(g, p)| g * p)
                            .sum();
                        for k in 0..n_out {
                            self.delta[k] = out[k] * (self.out_grad[k] - inner);
                        }
                    }
                    OutputActivation::Sigmoid => {
                        let p = out[0];
                        loss.class_grad(class, &[1.0 - p, p], &mut self.out_grad[..2]);
                        self.delta[0] =
                            (self.out_grad[1] - self.out_grad[0]) * p * (1.0 - p);
                    }
                }
            }
            BatchTargets::Inputs | BatchTargets::Rows { .. } => {
                let target: &[f64] = match batch.targets {
                    BatchTargets::Inputs => batch.row(s),
                    BatchTargets::Rows { data, width } => &data[s * width..(s + 1) * width],
                    BatchTargets::Classes(_) => unreachable!(),
                };
                if target.len() != n_out {
                    return Err(Error::Shape(format!(
                        "target width {} vs output width {}",
                        target.len(),
                        n_out
                    )));
                }
                loss.vector_grad(target, out, &mut self.out_grad[..n_out]);
                match spec.output_activation {
                    OutputActivation::Sigmoid => {
                        for k in 0..n_out {
                            self.delta[k] = self.out_grad[k] * out[k] * (1.0 - out[k]);
                        }
                    }
                    OutputActivation::Softmax => {
                        let inner: f64 = self.out_grad[..n_out]
                            .iter()
                            .zip(out)
                            .map(|(g, p)| g * p)
                            .sum();
                        for k in 0..n_out {
                            self.delta[k] = out[k] * (self.out_grad[k] - inner);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Accumulates the mean-batch gradient into `grad` and returns the mean loss.
fn accumulate_gradient(
    spec: &NetworkSpec,
    values: &[f64],
    batch: &Batch,
    loss: &ResolvedLoss,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> Result<f64> {
    let sizes = &spec.layer_sizes;
    let offsets = layer_offsets(sizes);
    let n_layers = offsets.len();
    let mut total_loss = 0.0;

    for s in 0..batch.len() {
        ws.forward(spec, values, batch.row(s));
        total_loss += ws.sample_loss(spec, batch, s, loss)?;
        ws.output_delta(spec, batch, s, loss)?;

        for l in (0..n_layers).rev() {
            let (w_off, b_off) = offsets[l];
            let fan_in = sizes[l];
            let fan_out = sizes[l + 1];
            for j in 0..fan_out {
                let d = ws.delta[j];
                grad[b_off + j] += d;
                for i in 0..fan_in {
                    grad[w_off + i * fan_out + j] += ws.acts[l][i] * d;
                }
            }
            if l > 0 {
                for i in 0..fan_in {
                    let mut sum = 0.0;
                    for j in 0..fan_out {
                        sum += values[w_off + i * fan_out + j] * ws.delta[j];
                    }
                    ws.delta_prev[i] = sum * spec.hidden_activation.derivative(ws.acts[l][i]);
                }
                std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
            }
        }
    }

    let scale = 1.0 / batch.len() as f64;
    for g in grad.iter_mut() {
        *g *= scale;
    }
    Ok(total_loss * scale)
}

/// Hyperparameters of one worker's local SGD.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub local_epochs: u32,
    pub batch_size: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "learning_rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Mini-batch SGD over `data` for `cfg.local_epochs` epochs. Shuffling is
/// seeded by `(cfg.seed, round, epoch)`, so repeated invocations are
/// bit-identical. MSE losses train reconstruction (labels ignored); focal
/// losses train classification.
pub fn train_local(
    net: &Network,
    data: &Dataset,
    cfg: &TrainConfig,
    loss: &ResolvedLoss,
    round: u64,
) -> Result<Network> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Contract("cannot train on an empty partition".into()));
    }
    let spec = net.spec.clone();
    let mut params = net.params.clone();
    let mut grad = vec![0.0; params.len()];
    let mut ws = Workspace::new(&spec);
    let d = data.n_features();

    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut batch_features = Vec::with_capacity(cfg.batch_size * d);
    let mut batch_labels = Vec::with_capacity(cfg.batch_size);

    for epoch in 0..cfg.local_epochs {
        let mut rng = seed::rng(cfg.seed, &[stream::SHUFFLE, round, epoch as u64]);
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(cfg.batch_size) {
            batch_features.clear();
            batch_labels.clear();
            for &i in chunk {
                batch_features.extend_from_slice(data.row(i));
                batch_labels.push(data.label(i));
            }
            let batch = match loss {
                ResolvedLoss::Mse => Batch::reconstruction(&batch_features, d)?,
                ResolvedLoss::Focal { .. } => {
                    Batch::classification(&batch_features, d, &batch_labels)?
                }
            };
            grad.fill(0.0);
            accumulate_gradient(&spec, params.as_slice(), &batch, loss, &mut ws, &mut grad)?;
            let eta = cfg.learning_rate;
            for (p, g) in params.as_mut_slice().iter_mut().zip(&grad) {
                *p -= eta * g;
            }
        }
    }
    Network::from_params(spec, params)
}

/// Trains an autoencoder (derived from the classifier spec) to reconstruct
/// `data`'s feature rows under mean squared error. Labels are ignored.
pub fn pretrain_autoencoder(
    spec: &NetworkSpec,
    data: &Dataset,
    cfg: &TrainConfig,
) -> Result<ParamVector> {
    let ae_spec = spec.autoencoder();
    if ae_spec.input_dim() != data.n_features() {
        return Err(Error::Shape(format!(
            "autoencoder expects {} features, data has {}",
            ae_spec.input_dim(),
            data.n_features()
        )));
    }
    let net = Network::new(ae_spec)?;
    let trained = train_local(&net, data, cfg, &ResolvedLoss::Mse, 0)?;
    Ok(trained.into_params())
}

/// Classifier parameters whose hidden layers copy the autoencoder's encoder;
/// the output layer is freshly drawn (glorot uniform, seeded by the spec).
pub fn init_from_autoencoder(spec: &NetworkSpec, ae_params: &ParamVector) -> Result<ParamVector> {
    spec.validate()?;
    let ae_spec = spec.autoencoder();
    if ae_params.len() != ae_spec.param_len() {
        return Err(Error::Shape(format!(
            "autoencoder parameters have length {}, expected {}",
            ae_params.len(),
            ae_spec.param_len()
        )));
    }
    let encoder_len = spec.encoder_param_len();
    let mut values = vec![0.0; spec.param_len()];
    values[..encoder_len].copy_from_slice(&ae_params.as_slice()[..encoder_len]);

    let sizes = &spec.layer_sizes;
    let fan_in = sizes[sizes.len() - 2];
    let fan_out = sizes[sizes.len() - 1];
    let mut rng = seed::rng(spec.seed, &[stream::OUTPUT_LAYER]);
    let (w_off, b_off) = *layer_offsets(sizes).last().expect("validated");
    draw_layer_weights(
        &mut rng,
        Initializer::GlorotUniform,
        fan_in,
        fan_out,
        &mut values[w_off..b_off],
    );
    Ok(ParamVector::from_vec(values))
}
