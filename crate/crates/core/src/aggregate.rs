//! Server-side parameter aggregation rules: plain averaging, sample-size
//! weighted averaging, gradient-angle adaptive weighting, and the elastic
//! moving average.
//!
//! All weighted forms are normalized so the aggregation weights sum to one;
//! every output coordinate therefore stays inside the convex hull of the
//! inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationKind {
    FedAvg,
    SsFedAvg,
    FedAdp,
    Easgd,
}

/// Aggregation rule plus its scalar parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationSpec {
    pub kind: AggregationKind,
    /// Elastic moving-average coefficient in [0, 1].
    pub gamma: f64,
    /// Steepness of the adaptive angle-to-weight map.
    pub alpha: f64,
}

impl AggregationSpec {
    pub fn new(kind: AggregationKind) -> Self {
        AggregationSpec { kind, gamma: 0.9, alpha: 5.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma must lie in [0, 1], got {}",
                self.gamma
            )));
        }
        if self.alpha <= 0.0 {
            return Err(Error::Config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

fn check_uniform(workers: &[ParamVector]) -> Result<usize> {
    let first = workers
        .first()
        .ok_or_else(|| Error::Contract("aggregation needs at least one worker".into()))?;
    for w in workers {
        if w.len() != first.len() {
            return Err(Error::Shape(format!(
                "worker parameter lengths differ: {} vs {}",
                first.len(),
                w.len()
            )));
        }
    }
    Ok(first.len())
}

/// Element-wise mean of the worker parameters.
pub fn fed_avg(workers: &[ParamVector]) -> Result<ParamVector> {
    let len = check_uniform(workers)?;
    let mut out = ParamVector::zeros(len);
    let scale = 1.0 / workers.len() as f64;
    for w in workers {
        out.add_scaled(w, scale)?;
    }
    Ok(out)
}

/// Sample-size weighted mean: `sum(d_i w_i) / sum(d_i)`.
pub fn ss_fed_avg(workers: &[ParamVector], sizes: &[usize]) -> Result<ParamVector> {
    let len = check_uniform(workers)?;
    if workers.len() != sizes.len() {
        return Err(Error::Shape(format!(
            "{} workers vs {} sizes",
            workers.len(),
            sizes.len()
        )));
    }
    let total: usize = sizes.iter().sum();
    if total == 0 {
        return Err(Error::Contract("total sample size is zero".into()));
    }
    let mut out = ParamVector::zeros(len);
    for (w, &d) in workers.iter().zip(sizes) {
        out.add_scaled(w, d as f64 / total as f64)?;
    }
    Ok(out)
}

/// Elastic moving average: `gamma * prev_server + (1 - gamma) * mean(workers)`.
pub fn easgd_aggregate(
    prev_server: &ParamVector,
    workers: &[ParamVector],
    gamma: f64,
) -> Result<ParamVector> {
    let mut out = fed_avg(workers)?;
    if out.len() != prev_server.len() {
        return Err(Error::Shape(format!(
            "server length {} vs worker length {}",
            prev_server.len(),
            out.len()
        )));
    }
    out.scale(1.0 - gamma);
    out.add_scaled(prev_server, gamma)?;
    Ok(out)
}

/// Sample-size weighted mean of the local gradients.
pub fn global_gradient(grads: &[ParamVector], sizes: &[usize]) -> Result<ParamVector> {
    ss_fed_avg(grads, sizes)
}

/// Angle in radians between the global and a local gradient, in [0, pi].
pub fn fedadp_angle(global_grad: &ParamVector, local_grad: &ParamVector) -> Result<f64> {
    let gn = global_grad.norm();
    let ln = local_grad.norm();
    if gn == 0.0 || ln == 0.0 {
        return Err(Error::DegenerateGradient(
            "zero-norm gradient has no direction".into(),
        ));
    }
    let cos = (global_grad.dot(local_grad)? / (gn * ln)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// Running average of a worker's angle. At the first round the smoothed
/// angle equals the observed angle.
pub fn fedadp_smooth(prev_smoothed: Option<f64>, theta: f64, t: u64) -> f64 {
    match prev_smoothed {
        Some(prev) if t > 1 => {
            let t = t as f64;
            (t - 1.0) / t * prev + theta / t
        }
        _ => theta,
    }
}

/// Non-linear decreasing map from smoothed angle to contribution score:
/// `alpha * (1 - exp(-exp(-alpha * (theta - 1))))`.
pub fn fedadp_weight_map(theta_smoothed: f64, alpha: f64) -> f64 {
    alpha * (1.0 - (-(-alpha * (theta_smoothed - 1.0)).exp()).exp())
}

/// Per-worker smoothed angles and the round counter.
#[derive(Debug, Clone, Default)]
pub struct FedAdpState {
    smoothed: Vec<f64>,
    round: u64,
}

impl FedAdpState {
    pub fn new() -> Self {
        FedAdpState::default()
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn smoothed_angles(&self) -> &[f64] {
        &self.smoothed
    }
}

/// One adaptive aggregation step. Advances the round counter, smooths each
/// worker's gradient angle, and returns `sum(phi_i w_i)` with
/// `phi_i = d_i exp(f(theta_i)) / sum(d_k exp(f(theta_k)))`.
pub fn fedadp_aggregate(
    workers: &[ParamVector],
    sizes: &[usize],
    grads: &[ParamVector],
    state: &mut FedAdpState,
    alpha: f64,
) -> Result<ParamVector> {
    let len = check_uniform(workers)?;
    if workers.len() != sizes.len() || workers.len() != grads.len() {
        return Err(Error::Shape(format!(
            "inconsistent cardinalities: {} workers, {} sizes, {} gradients",
            workers.len(),
            sizes.len(),
            grads.len()
        )));
    }
    if !state.smoothed.is_empty() && state.smoothed.len() != workers.len() {
        return Err(Error::Shape(format!(
            "state tracks {} workers, got {}",
            state.smoothed.len(),
            workers.len()
        )));
    }

    let t = state.round + 1;
    let global = global_gradient(grads, sizes)?;
    let mut scores = Vec::with_capacity(workers.len());
    let mut new_smoothed = Vec::with_capacity(workers.len());
    for (i, grad) in grads.iter().enumerate() {
        let theta = fedadp_angle(&global, grad)?;
        let smoothed = fedadp_smooth(state.smoothed.get(i).copied(), theta, t);
        new_smoothed.push(smoothed);
        scores.push(fedadp_weight_map(smoothed, alpha));
    }

    let weights: Vec<f64> = scores
        .iter()
        .zip(sizes)
        .map(|(&f, &d)| d as f64 * f.exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut out = ParamVector::zeros(len);
    for (w, weight) in workers.iter().zip(&weights) {
        out.add_scaled(w, weight / total)?;
    }

    state.smoothed = new_smoothed;
    state.round = t;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::from_vec(values.to_vec())
    }

    #[test]
    fn fed_avg_is_elementwise_mean() {
        let out = fed_avg(&[pv(&[1.0, 3.0]), pv(&[3.0, 5.0])]).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 4.0]);
    }

    #[test]
    fn fed_avg_single_worker_is_identity() {
        let w = pv(&[1.5, -2.0, 0.25]);
        assert_eq!(fed_avg(std::slice::from_ref(&w)).unwrap(), w);
    }

    #[test]
    fn fed_avg_is_permutation_invariant() {
        let a = pv(&[1.0, 2.0]);
        let b = pv(&[5.0, -1.0]);
        let c = pv(&[0.5, 0.5]);
        let x = fed_avg(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let y = fed_avg(&[c, a, b]).unwrap();
        for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn fed_avg_rejects_mismatched_lengths() {
        assert!(fed_avg(&[pv(&[1.0]), pv(&[1.0, 2.0])]).is_err());
        assert!(fed_avg(&[]).is_err());
    }

    #[test]
    fn ss_fed_avg_weights_by_sample_size() {
        let out = ss_fed_avg(&[pv(&[0.0]), pv(&[4.0])], &[1, 3]).unwrap();
        assert_eq!(out.as_slice(), &[3.0]);
    }

    #[test]
    fn ss_fed_avg_equal_sizes_reduces_to_fed_avg() {
        let ws = [pv(&[1.0, 4.0]), pv(&[3.0, 0.0]), pv(&[2.0, 2.0])];
        let a = ss_fed_avg(&ws, &[7, 7, 7]).unwrap();
        let b = fed_avg(&ws).unwrap();
        for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn ss_fed_avg_single_holder_dominates() {
        let ws = [pv(&[9.0, -9.0]), pv(&[1.0, 1.0])];
        let out = ss_fed_avg(&ws, &[10, 0]).unwrap();
        assert_eq!(out.as_slice(), ws[0].as_slice());
    }

    #[test]
    fn ss_fed_avg_zero_total_is_contract_violation() {
        assert!(matches!(
            ss_fed_avg(&[pv(&[1.0])], &[0]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn easgd_blends_server_and_mean() {
        let prev = pv(&[2.0]);
        let ws = [pv(&[3.0]), pv(&[5.0])];
        let out = easgd_aggregate(&prev, &ws, 0.5).unwrap();
        assert_eq!(out.as_slice(), &[3.0]);
    }

    #[test]
    fn easgd_gamma_extremes() {
        let prev = pv(&[2.0, -1.0]);
        let ws = [pv(&[4.0, 1.0]), pv(&[6.0, 3.0])];
        let frozen = easgd_aggregate(&prev, &ws, 1.0).unwrap();
        assert_eq!(frozen.as_slice(), prev.as_slice());
        let plain = easgd_aggregate(&prev, &ws, 0.0).unwrap();
        let avg = fed_avg(&ws).unwrap();
        for (p, q) in plain.as_slice().iter().zip(avg.as_slice()) {
            assert!((p - q).abs() < 1e-15);
        }
    }

    #[test]
    fn angle_reference_cases() {
        let g = pv(&[1.0, 0.0]);
        assert!((fedadp_angle(&g, &pv(&[0.0, 1.0])).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert!(fedadp_angle(&g, &pv(&[3.0, 0.0])).unwrap().abs() < 1e-12);
        assert!((fedadp_angle(&g, &pv(&[-1.0, 0.0])).unwrap() - std::f64::consts::PI).abs() < 1e-12);
        assert!(matches!(
            fedadp_angle(&g, &pv(&[0.0, 0.0])),
            Err(Error::DegenerateGradient(_))
        ));
    }

    #[test]
    fn smoothing_follows_running_average() {
        assert_eq!(fedadp_smooth(None, 0.7, 1), 0.7);
        assert!((fedadp_smooth(Some(0.5), 1.0, 2) - 0.75).abs() < 1e-15);
        // Constant angles are a fixed point.
        let mut s = 0.42;
        for t in 2..10 {
            s = fedadp_smooth(Some(s), 0.42, t);
            assert!((s - 0.42).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_map_reference_values() {
        assert!((fedadp_weight_map(1.0, 5.0) - 5.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert!((fedadp_weight_map(1.0, 5.0) - 3.1606).abs() < 1e-4);
        assert!((fedadp_weight_map(0.0, 5.0) - 5.0).abs() < 1e-3);
        assert!(fedadp_weight_map(10.0, 5.0).abs() < 1e-3);
        // Non-increasing everywhere (the map saturates at both ends in f64),
        // strictly decreasing through the transition region.
        let mut prev = f64::INFINITY;
        for i in 0..=40 {
            let v = fedadp_weight_map(i as f64 * 0.1, 5.0);
            assert!(v <= prev);
            prev = v;
        }
        for i in 5..=15 {
            let lo = fedadp_weight_map(i as f64 * 0.1, 5.0);
            let hi = fedadp_weight_map((i - 1) as f64 * 0.1, 5.0);
            assert!(lo < hi, "map must fall strictly around theta = 1");
        }
    }

    #[test]
    fn fedadp_symmetric_workers_match_fed_avg() {
        let ws = [pv(&[1.0, 5.0]), pv(&[3.0, 1.0])];
        let grads = [pv(&[0.5, 0.5]), pv(&[0.5, 0.5])];
        let mut state = FedAdpState::new();
        let out = fedadp_aggregate(&ws, &[10, 10], &grads, &mut state, 5.0).unwrap();
        let avg = fed_avg(&ws).unwrap();
        for (p, q) in out.as_slice().iter().zip(avg.as_slice()) {
            assert!((p - q).abs() < 1e-12);
        }
        assert_eq!(state.round(), 1);
    }

    #[test]
    fn fedadp_prefers_aligned_gradients() {
        // Mirror-image gradients make equal angles with their mean.
        let ws = [pv(&[1.0, 0.0]), pv(&[0.0, 1.0])];
        let sizes = [10, 10];
        let grads = [pv(&[1.0, 0.2]), pv(&[-1.0, 0.2])];
        let mut state = FedAdpState::new();
        let _ = fedadp_aggregate(&ws, &sizes, &grads, &mut state, 5.0).unwrap();
        let angles = state.smoothed_angles();
        assert!((angles[0] - angles[1]).abs() < 1e-12);

        // Skewed setup: worker 1's gradient is far better aligned with the
        // weighted mean direction, so the blend must sit closer to w1.
        let grads = [pv(&[1.0, 0.0]), pv(&[1.0, 5.0])];
        let mut state = FedAdpState::new();
        let out = fedadp_aggregate(&ws, &sizes, &grads, &mut state, 5.0).unwrap();
        let angles = state.smoothed_angles();
        assert!(angles[1] < angles[0]);
        let d0: f64 = out.sub(&ws[0]).unwrap().norm();
        let d1: f64 = out.sub(&ws[1]).unwrap().norm();
        assert!(d1 < d0);
    }

    #[test]
    fn fedadp_two_worker_reference_weights() {
        // Score values f = (3.1606, 0) with equal sizes give
        // phi ~ (0.9593, 0.0407).
        let f0 = 3.1606f64;
        let e0 = f0.exp();
        let phi0 = e0 / (e0 + 1.0);
        assert!((phi0 - 0.9593).abs() < 1e-4);
    }

    #[test]
    fn aggregates_stay_in_convex_hull() {
        use rand::Rng;
        let mut rng = crate::seed::rng(77, &[1]);
        for _ in 0..200 {
            let n = rng.random_range(1..6);
            let len = 5;
            let workers: Vec<ParamVector> = (0..n)
                .map(|_| {
                    ParamVector::from_vec((0..len).map(|_| rng.random_range(-4.0..4.0)).collect())
                })
                .collect();
            let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..50)).collect();
            let prev =
                ParamVector::from_vec((0..len).map(|_| rng.random_range(-4.0..4.0)).collect());
            let gamma: f64 = rng.random_range(0.0..1.0);

            let check = |out: &ParamVector, include_prev: bool| {
                for k in 0..len {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for w in &workers {
                        lo = lo.min(w.as_slice()[k]);
                        hi = hi.max(w.as_slice()[k]);
                    }
                    if include_prev {
                        lo = lo.min(prev.as_slice()[k]);
                        hi = hi.max(prev.as_slice()[k]);
                    }
                    let v = out.as_slice()[k];
                    assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "coordinate escaped hull");
                }
            };

            check(&fed_avg(&workers).unwrap(), false);
            check(&ss_fed_avg(&workers, &sizes).unwrap(), false);
            check(&easgd_aggregate(&prev, &workers, gamma).unwrap(), true);
        }
    }

    #[test]
    fn fedadp_weights_sum_to_one_on_random_inputs() {
        use rand::Rng;
        let mut rng = crate::seed::rng(78, &[2]);
        for _ in 0..50 {
            let n = rng.random_range(2..6);
            let len = 4;
            let workers: Vec<ParamVector> = (0..n)
                .map(|_| ParamVector::from_vec((0..len).map(|_| rng.random_range(-1.0..1.0)).collect()))
                .collect();
            let grads: Vec<ParamVector> = (0..n)
                .map(|_| ParamVector::from_vec((0..len).map(|_| rng.random_range(-1.0..1.0)).collect()))
                .collect();
            let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..100)).collect();
            let mut state = FedAdpState::new();
            let out = fedadp_aggregate(&workers, &sizes, &grads, &mut state, 5.0).unwrap();
            // Aggregating constant-one vectors with the same weights must give 1.
            let ones: Vec<ParamVector> = (0..n).map(|_| ParamVector::from_vec(vec![1.0; len])).collect();
            let mut state2 = FedAdpState::new();
            let out_ones = fedadp_aggregate(&ones, &sizes, &grads, &mut state2, 5.0).unwrap();
            for &v in out_ones.as_slice() {
                assert!((v - 1.0).abs() < 1e-12);
            }
            // And the real output stays in the hull.
            for k in 0..len {
                let lo = workers.iter().map(|w| w.as_slice()[k]).fold(f64::INFINITY, f64::min);
                let hi = workers.iter().map(|w| w.as_slice()[k]).fold(f64::NEG_INFINITY, f64::max);
                assert!(out.as_slice()[k] >= lo - 1e-9 && out.as_slice()[k] <= hi + 1e-9);
            }
        }
    }
}
