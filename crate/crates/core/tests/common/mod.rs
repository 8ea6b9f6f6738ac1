//! Shared helpers for the integration suites: a finite-difference gradient
//! oracle that goes only through the public loss-value API, and relative
//! error measurement.

use fedcrit_core::loss::ResolvedLoss;
use fedcrit_core::nn::{loss_value, Batch, Network, NetworkSpec};
use fedcrit_core::ParamVector;

/// Central finite differences of the batch loss with respect to every
/// parameter. Independent of the backpropagation path: it only evaluates
/// the loss at perturbed parameter vectors.
pub fn finite_difference_gradient(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: &Batch,
    loss: &ResolvedLoss,
    step: f64,
) -> Vec<f64> {
    let mut grad = vec![0.0; params.len()];
    for k in 0..params.len() {
        let mut plus = params.clone();
        plus.as_mut_slice()[k] += step;
        let mut minus = params.clone();
        minus.as_mut_slice()[k] -= step;
        let net_plus = Network::from_params(spec.clone(), plus).unwrap();
        let net_minus = Network::from_params(spec.clone(), minus).unwrap();
        let l_plus = loss_value(&net_plus, batch, loss).unwrap();
        let l_minus = loss_value(&net_minus, batch, loss).unwrap();
        grad[k] = (l_plus - l_minus) / (2.0 * step);
    }
    grad
}

/// Central finite differences plus a per-coordinate smoothness mask. A
/// coordinate is flagged non-smooth when its two one-sided differences
/// disagree, which happens when the perturbation interval straddles a
/// piecewise-linear kink (relu). Non-smooth coordinates have no meaningful
/// central-difference estimate.
pub fn finite_difference_gradient_masked(
    spec: &NetworkSpec,
    params: &ParamVector,
    batch: &Batch,
    loss: &ResolvedLoss,
    step: f64,
) -> (Vec<f64>, Vec<bool>) {
    let mut grad = vec![0.0; params.len()];
    let mut smooth = vec![true; params.len()];
    let net0 = Network::from_params(spec.clone(), params.clone()).unwrap();
    let l0 = loss_value(&net0, batch, loss).unwrap();
    for k in 0..params.len() {
        let mut plus = params.clone();
        plus.as_mut_slice()[k] += step;
        let mut minus = params.clone();
        minus.as_mut_slice()[k] -= step;
        let l_plus = loss_value(&Network::from_params(spec.clone(), plus).unwrap(), batch, loss)
            .unwrap();
        let l_minus = loss_value(&Network::from_params(spec.clone(), minus).unwrap(), batch, loss)
            .unwrap();
        grad[k] = (l_plus - l_minus) / (2.0 * step);
        let fwd = (l_plus - l0) / step;
        let bwd = (l0 - l_minus) / step;
        if (fwd - bwd).abs() > 1e-3 * fwd.abs().max(bwd.abs()).max(1.0) {
            smooth[k] = false;
        }
    }
    (grad, smooth)
}

/// Relative error with a small floor so near-zero entries compare by
/// absolute difference.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Largest relative error over paired gradient entries.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max)
}
