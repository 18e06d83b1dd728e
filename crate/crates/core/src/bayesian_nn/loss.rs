//! Binary cross-entropy on occupancy labels, with exact gradients.

use super::model::{BnnModel, OutputTransform};
use super::noise::NoiseSource;
use super::params::ParamVector;
use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` so the loss
/// stays finite at fully confident predictions.
pub const PROB_CLAMP: f64 = 1e-7;

/// One supervised point: network input and a binary target.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub input: Vec<f64>,
    pub target: f64,
}

impl Example {
    pub fn new(input: Vec<f64>, target: f64) -> Self {
        Example { input, target }
    }
}

fn check_batch(model: &BnnModel, batch: &[Example]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    if model.output_dim() != 1 {
        return Err(Error::Shape(format!(
            "binary cross-entropy needs a scalar output, model has {}",
            model.output_dim()
        )));
    }
    for ex in batch {
        if ex.target != 0.0 && ex.target != 1.0 {
            return Err(Error::InvalidArgument(format!(
                "labels must be 0 or 1, got {}",
                ex.target
            )));
        }
    }
    Ok(())
}

fn point_loss(p: f64, y: f64) -> f64 {
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Mean binary cross-entropy of one stochastic forward pass per batch point.
pub fn bce_loss(model: &BnnModel, batch: &[Example], noise: &mut NoiseSource) -> Result<f64> {
    check_batch(model, batch)?;
    let cache = model.sigma_cache();
    let mut total = 0.0;
    for ex in batch {
        let raw = model.forward_sample_cached(&ex.input, noise, &cache)?[0];
        let p = model
            .output_transform()
            .apply(raw)
            .clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total += point_loss(p, ex.target);
    }
    Ok(total / batch.len() as f64)
}

/// Records one stochastic loss evaluation so its exact gradient can be taken.
///
/// The recorded pass keeps the sampled noise, making the reparameterized path
/// differentiable. Asking for a gradient before any forward pass is a state
/// error; taking it consumes the recording.
#[derive(Debug, Default)]
pub struct BceRecorder {
    recorded: Option<(f64, ParamVector)>,
}

impl BceRecorder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Run one stochastic pass per batch point, accumulating the exact
    /// gradient of the mean loss as it goes. Returns the loss.
    pub fn forward(
        &mut self,
        model: &BnnModel,
        batch: &[Example],
        noise: &mut NoiseSource,
    ) -> Result<f64> {
        check_batch(model, batch)?;
        let cache = model.sigma_cache();
        let (mu_len, rho_len) = model.param_counts();
        let mut grad = ParamVector::zeros(mu_len, rho_len);
        let inv_n = 1.0 / batch.len() as f64;
        let mut total = 0.0;
        for ex in batch {
            let trace = model.forward_traced_cached(&ex.input, noise, &cache)?;
            let raw = trace.output()[0];
            let p_raw = model.output_transform().apply(raw);
            let p = p_raw.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            total += point_loss(p, ex.target);
            // Gradient w.r.t. the raw output; zero where the clamp is active.
            let d_raw = if p_raw != p {
                0.0
            } else {
                match model.output_transform() {
                    OutputTransform::Sigmoid => p - ex.target,
                    OutputTransform::Identity => -ex.target / p + (1.0 - ex.target) / (1.0 - p),
                }
            };
            model.backward_into_cached(&trace, &[d_raw * inv_n], &mut grad, &cache)?;
        }
        let loss = total * inv_n;
        self.recorded = Some((loss, grad));
        Ok(loss)
    }

    /// Gradient of the most recent recorded loss, in parameter-vector layout.
    pub fn backward(&mut self) -> Result<ParamVector> {
        match self.recorded.take() {
            Some((_, grad)) => Ok(grad),
            None => Err(Error::InvalidState(
                "backward called before any recorded forward pass".into(),
            )),
        }
    }
}
