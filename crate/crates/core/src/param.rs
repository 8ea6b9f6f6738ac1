//! Flattened network parameters, the unit exchanged between workers and the
//! parameter server.

use crate::error::{Error, Result};

/// All trainable parameters of one network as a flat vector.
///
/// Layout is layer-major: for each weight layer, the weight matrix in
/// row-major order (`fan_in` rows by `fan_out` columns, entry `i * fan_out + j`
/// connecting input unit `i` to output unit `j`), followed by the `fan_out`
/// biases of that layer. Two vectors built from the same layer sizes are
/// element-wise compatible.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// `self += k * other`. Shapes must agree.
    pub fn add_scaled(&mut self, other: &ParamVector, k: f64) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "parameter length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        for (a, b) in self.0.iter_mut().zip(other.0.iter()) {
            *a += k * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, k: f64) {
        for v in &mut self.0 {
            *v *= k;
        }
    }

    /// Element-wise difference `self - other`.
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        let mut out = self.clone();
        out.add_scaled(other, -1.0)?;
        Ok(out)
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Shape(format!(
                "parameter length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Total parameter count for consecutive layer sizes:
/// sum over layers of `fan_in * fan_out + fan_out`.
pub fn param_len(layer_sizes: &[usize]) -> usize {
    layer_sizes
        .windows(2)
        .map(|w| w[0] * w[1] + w[1])
        .sum()
}

/// `(weight_offset, bias_offset)` of each weight layer within the flat vector.
pub fn layer_offsets(layer_sizes: &[usize]) -> Vec<(usize, usize)> {
    let mut offsets = Vec::with_capacity(layer_sizes.len().saturating_sub(1));
    let mut pos = 0;
    for w in layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        offsets.push((pos, pos + fan_in * fan_out));
        pos += fan_in * fan_out + fan_out;
    }
    offsets
}
