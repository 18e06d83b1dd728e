//! Feed-forward network with Gaussian weight posteriors on its linear layers.
//!
//! A Bayesian layer keeps a mean `mu` and an unconstrained spread `rho` per
//! weight and bias. The positive standard deviation is `softplus(rho)`, and a
//! stochastic pass samples every weight as `w = mu + softplus(rho) * eps` with
//! `eps` drawn from a standard normal. Because the noise enters additively,
//! gradients flow to both `mu` (factor 1) and `rho` (factor
//! `eps * sigmoid(rho)`), which is what [`BnnModel::backward`] implements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::noise::NoiseSource;
use super::params::ParamVector;
use crate::error::{Error, Result};

/// Numerically stable `ln(1 + exp(x))`.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Numerically stable logistic function; also `d softplus / dx`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`]: the `rho` whose spread is `sigma`.
pub fn softplus_inverse(sigma: f64) -> f64 {
    // ln(e^sigma - 1) = sigma + ln(1 - e^{-sigma}); expm1 keeps the small-
    // sigma branch accurate.
    sigma + (-(-sigma).exp_m1()).ln()
}

/// Nonlinearity applied after a layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Sine,
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Sine => z.sin(),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Sine => z.cos(),
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Transform applied to the final layer's output at prediction time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputTransform {
    Identity,
    Sigmoid,
}

impl OutputTransform {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            OutputTransform::Identity => z,
            OutputTransform::Sigmoid => sigmoid(z),
        }
    }
}

/// Linear layer with Gaussian posteriors over weights and biases.
///
/// `mu_*` and `rho_*` have identical shapes; weights are row-major
/// `[out_dim x in_dim]`. `softplus` keeps every derived sigma strictly
/// positive for finite rho.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianLinear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub mu_w: Vec<f64>,
    pub rho_w: Vec<f64>,
    pub mu_b: Vec<f64>,
    pub rho_b: Vec<f64>,
}

impl BayesianLinear {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        BayesianLinear {
            in_dim,
            out_dim,
            mu_w: vec![0.0; in_dim * out_dim],
            rho_w: vec![0.0; in_dim * out_dim],
            mu_b: vec![0.0; out_dim],
            rho_b: vec![0.0; out_dim],
        }
    }
}

/// Plain linear layer without a posterior; its weights live in the mu section.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicLinear {
    pub in_dim: usize,
    pub out_dim: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Bayesian(BayesianLinear),
    Deterministic(DeterministicLinear),
}

impl Layer {
    pub fn in_dim(&self) -> usize {
        match self {
            Layer::Bayesian(l) => l.in_dim,
            Layer::Deterministic(l) => l.in_dim,
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Layer::Bayesian(l) => l.out_dim,
            Layer::Deterministic(l) => l.out_dim,
        }
    }
}

/// Fixed affine rescaling applied to network inputs (not trainable, not part
/// of the parameter vector). Used to map world coordinates into a range the
/// sine features handle well.
#[derive(Debug, Clone, PartialEq)]
pub struct InputScaler {
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl InputScaler {
    /// Maps the axis-aligned box `[lo, hi]` onto `[-1, 1]` per dimension.
    pub fn for_bounds(lo: &[f64], hi: &[f64]) -> Self {
        let offset = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let scale = lo.iter().zip(hi).map(|(a, b)| 2.0 / (b - a)).collect();
        InputScaler { offset, scale }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            x.iter()
                .zip(self.offset.iter().zip(&self.scale))
                .map(|(v, (o, s))| (v - o) * s),
        );
    }
}

/// Per-layer record of one stochastic forward pass.
#[derive(Debug, Clone)]
struct LayerTrace {
    /// Activation output of the previous layer (or the scaled input).
    input: Vec<f64>,
    /// Pre-activation values.
    preact: Vec<f64>,
    /// Sampled weight matrix actually used in the pass.
    w: Vec<f64>,
    /// Noise draws for weights / biases; empty for deterministic layers.
    eps_w: Vec<f64>,
    eps_b: Vec<f64>,
}

/// Precomputed `softplus(rho)` and `sigmoid(rho)` per layer. Parameters are
/// fixed across the many stochastic passes of one batch or prediction sweep,
/// so hoisting these transcendentals out of the per-pass path saves most of
/// its cost.
#[derive(Debug, Clone, Default)]
pub(crate) struct SigmaCache {
    /// Per layer: (sigma_w, sigma_b, dsigma_w, dsigma_b); empty vectors for
    /// deterministic layers.
    layers: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)>,
}

/// Everything needed to backpropagate through one recorded forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    layers: Vec<LayerTrace>,
    output: Vec<f64>,
}

impl ForwardTrace {
    /// Raw network output (before any output transform).
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// Layered MLP whose linear layers carry Gaussian weight posteriors.
#[derive(Debug, Clone, PartialEq)]
pub struct BnnModel {
    layers: Vec<Layer>,
    activations: Vec<Activation>,
    output_transform: OutputTransform,
    input_scaler: Option<InputScaler>,
}

impl BnnModel {
    /// Build a model from explicit layers. `activations` holds one entry per
    /// layer; the final entry is usually `Identity`, with probability mapping
    /// delegated to `output_transform`.
    pub fn new(
        layers: Vec<Layer>,
        activations: Vec<Activation>,
        output_transform: OutputTransform,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("model needs at least one layer".into()));
        }
        if activations.len() != layers.len() {
            return Err(Error::Shape(format!(
                "{} activations for {} layers",
                activations.len(),
                layers.len()
            )));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Shape(format!(
                    "layer {} outputs {} but layer {} expects {}",
                    k,
                    pair[0].out_dim(),
                    k + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(BnnModel {
            layers,
            activations,
            output_transform,
            input_scaler: None,
        })
    }

    /// Randomly initialized all-Bayesian MLP.
    ///
    /// `layer_sizes` runs input..output, `hidden` lists one activation per
    /// hidden transition. Means are uniform with fan-in scaling
    /// `U(-b, b), b = scale / sqrt(fan_in)` where `scale` is
    /// `first_layer_scale` on layer 0 and 1 elsewhere; every rho starts at
    /// `rho_init`. A large first-layer scale gives sine features useful
    /// spatial frequency over inputs normalized to `[-1, 1]`.
    pub fn bayesian_mlp(
        layer_sizes: &[usize],
        hidden: &[Activation],
        output_transform: OutputTransform,
        rho_init: f64,
        first_layer_scale: f64,
        seed: u64,
    ) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidArgument(
                "layer_sizes needs at least input and output".into(),
            ));
        }
        if hidden.len() + 2 != layer_sizes.len() {
            return Err(Error::Shape(format!(
                "{} hidden activations for {} layers",
                hidden.len(),
                layer_sizes.len() - 1
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        for (k, pair) in layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let scale = if k == 0 { first_layer_scale } else { 1.0 };
            let bound = scale / (fan_in as f64).sqrt();
            let mut layer = BayesianLinear::new(fan_in, fan_out);
            for w in layer.mu_w.iter_mut() {
                *w = rng.gen_range(-bound..bound);
            }
            // Biases use the same fan-in bound without the frequency scale.
            let b_bound = 1.0 / (fan_in as f64).sqrt();
            for b in layer.mu_b.iter_mut() {
                *b = rng.gen_range(-b_bound..b_bound);
            }
            layer.rho_w.fill(rho_init);
            layer.rho_b.fill(rho_init);
            layers.push(Layer::Bayesian(layer));
        }
        let mut activations: Vec<Activation> = hidden.to_vec();
        activations.push(Activation::Identity);
        BnnModel::new(layers, activations, output_transform)
    }

    pub fn with_input_scaler(mut self, scaler: InputScaler) -> Self {
        self.input_scaler = Some(scaler);
        self
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn output_transform(&self) -> OutputTransform {
        self.output_transform
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Lengths of the (mu, rho) parameter sections.
    pub fn param_counts(&self) -> (usize, usize) {
        let mut mu = 0;
        let mut rho = 0;
        for layer in &self.layers {
            match layer {
                Layer::Bayesian(l) => {
                    mu += l.mu_w.len() + l.mu_b.len();
                    rho += l.rho_w.len() + l.rho_b.len();
                }
                Layer::Deterministic(l) => {
                    mu += l.w.len() + l.b.len();
                }
            }
        }
        (mu, rho)
    }

    /// Flatten all parameters into the canonical layout.
    pub fn extract_params(&self) -> ParamVector {
        let (mu_len, rho_len) = self.param_counts();
        let mut mu = Vec::with_capacity(mu_len);
        let mut rho = Vec::with_capacity(rho_len);
        for layer in &self.layers {
            match layer {
                Layer::Bayesian(l) => {
                    mu.extend_from_slice(&l.mu_w);
                    mu.extend_from_slice(&l.mu_b);
                    rho.extend_from_slice(&l.rho_w);
                    rho.extend_from_slice(&l.rho_b);
                }
                Layer::Deterministic(l) => {
                    mu.extend_from_slice(&l.w);
                    mu.extend_from_slice(&l.b);
                }
            }
        }
        ParamVector::new(mu, rho)
    }

    /// Inverse of [`extract_params`]; exact round trip.
    pub fn load_params(&mut self, params: &ParamVector) -> Result<()> {
        let (mu_len, rho_len) = self.param_counts();
        if params.mu.len() != mu_len || params.rho.len() != rho_len {
            return Err(Error::Shape(format!(
                "parameter vector ({}, {}) does not fit model ({}, {})",
                params.mu.len(),
                params.rho.len(),
                mu_len,
                rho_len
            )));
        }
        let mut mu = params.mu.iter();
        let mut rho = params.rho.iter();
        for layer in &mut self.layers {
            match layer {
                Layer::Bayesian(l) => {
                    for v in l.mu_w.iter_mut().chain(l.mu_b.iter_mut()) {
                        *v = *mu.next().unwrap();
                    }
                    for v in l.rho_w.iter_mut().chain(l.rho_b.iter_mut()) {
                        *v = *rho.next().unwrap();
                    }
                }
                Layer::Deterministic(l) => {
                    for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                        *v = *mu.next().unwrap();
                    }
                }
            }
        }
        Ok(())
    }

    fn scale_input(&self, x: &[f64]) -> Vec<f64> {
        match &self.input_scaler {
            Some(s) => {
                let mut out = Vec::new();
                s.apply(x, &mut out);
                out
            }
            None => x.to_vec(),
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Shape(format!(
                "input length {} does not match input dimension {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    pub(crate) fn sigma_cache(&self) -> SigmaCache {
        SigmaCache {
            layers: self
                .layers
                .iter()
                .map(|layer| match layer {
                    Layer::Bayesian(l) => (
                        l.rho_w.iter().map(|&r| softplus(r)).collect(),
                        l.rho_b.iter().map(|&r| softplus(r)).collect(),
                        l.rho_w.iter().map(|&r| sigmoid(r)).collect(),
                        l.rho_b.iter().map(|&r| sigmoid(r)).collect(),
                    ),
                    Layer::Deterministic(_) => Default::default(),
                })
                .collect(),
        }
    }

    /// One stochastic pass: every Bayesian weight is sampled as
    /// `mu + softplus(rho) * eps`. Returns the raw output of the layer chain
    /// (no output transform). Deterministic given (model, x, noise state).
    pub fn forward_sample(&self, x: &[f64], noise: &mut NoiseSource) -> Result<Vec<f64>> {
        Ok(self.forward_impl(x, noise, false, None)?.0)
    }

    pub(crate) fn forward_sample_cached(
        &self,
        x: &[f64],
        noise: &mut NoiseSource,
        cache: &SigmaCache,
    ) -> Result<Vec<f64>> {
        Ok(self.forward_impl(x, noise, false, Some(cache))?.0)
    }

    /// Like [`forward_sample`], but records everything backprop needs.
    pub fn forward_traced(&self, x: &[f64], noise: &mut NoiseSource) -> Result<ForwardTrace> {
        let (output, layers) = self.forward_impl(x, noise, true, None)?;
        Ok(ForwardTrace {
            layers: layers.unwrap(),
            output,
        })
    }

    pub(crate) fn forward_traced_cached(
        &self,
        x: &[f64],
        noise: &mut NoiseSource,
        cache: &SigmaCache,
    ) -> Result<ForwardTrace> {
        let (output, layers) = self.forward_impl(x, noise, true, Some(cache))?;
        Ok(ForwardTrace {
            layers: layers.unwrap(),
            output,
        })
    }

    /// Deterministic pass through the means only (the sigma -> 0 limit).
    pub fn forward_mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut noise = NoiseSource::zero();
        self.forward_sample(x, &mut noise)
    }

    fn forward_impl(
        &self,
        x: &[f64],
        noise: &mut NoiseSource,
        traced: bool,
        cache: Option<&SigmaCache>,
    ) -> Result<(Vec<f64>, Option<Vec<LayerTrace>>)> {
        self.check_input(x)?;
        let mut traces = traced.then(Vec::new);
        let mut act = self.scale_input(x);
        for (k, (layer, activation)) in self.layers.iter().zip(&self.activations).enumerate() {
            let (in_dim, out_dim) = (layer.in_dim(), layer.out_dim());
            let mut w = vec![0.0; in_dim * out_dim];
            let mut b = vec![0.0; out_dim];
            let mut eps_w = Vec::new();
            let mut eps_b = Vec::new();
            match layer {
                Layer::Bayesian(l) => {
                    eps_w.reserve(w.len());
                    eps_b.reserve(b.len());
                    let sigmas = cache.map(|c| &c.layers[k]);
                    for (i, w_i) in w.iter_mut().enumerate() {
                        let eps = noise.draw();
                        let sigma = match sigmas {
                            Some((sw, _, _, _)) => sw[i],
                            None => softplus(l.rho_w[i]),
                        };
                        *w_i = l.mu_w[i] + sigma * eps;
                        eps_w.push(eps);
                    }
                    for (i, b_i) in b.iter_mut().enumerate() {
                        let eps = noise.draw();
                        let sigma = match sigmas {
                            Some((_, sb, _, _)) => sb[i],
                            None => softplus(l.rho_b[i]),
                        };
                        *b_i = l.mu_b[i] + sigma * eps;
                        eps_b.push(eps);
                    }
                }
                Layer::Deterministic(l) => {
                    w.copy_from_slice(&l.w);
                    b.copy_from_slice(&l.b);
                }
            }
            let mut preact = b;
            for (o, pre) in preact.iter_mut().enumerate() {
                let row = &w[o * in_dim..(o + 1) * in_dim];
                *pre += row.iter().zip(&act).map(|(wi, ai)| wi * ai).sum::<f64>();
            }
            let next = preact.iter().map(|&z| activation.apply(z)).collect();
            if let Some(traces) = traces.as_mut() {
                traces.push(LayerTrace {
                    input: std::mem::take(&mut act),
                    preact: preact.clone(),
                    w,
                    eps_w,
                    eps_b,
                });
            }
            act = next;
        }
        Ok((act, traces))
    }

    /// Monte-Carlo prediction: mean and population standard deviation over
    /// `passes` stochastic forward passes, after the output transform.
    pub fn predict_mc(
        &self,
        x: &[f64],
        passes: usize,
        noise: &mut NoiseSource,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        if passes == 0 {
            return Err(Error::InvalidArgument("predict_mc needs passes >= 1".into()));
        }
        let dim = self.output_dim();
        let cache = self.sigma_cache();
        // Welford accumulation keeps the variance stable over many passes.
        let mut mean = vec![0.0; dim];
        let mut m2 = vec![0.0; dim];
        for pass in 0..passes {
            let out = self.forward_sample_cached(x, noise, &cache)?;
            for (i, &raw) in out.iter().enumerate() {
                let y = self.output_transform.apply(raw);
                let delta = y - mean[i];
                mean[i] += delta / (pass as f64 + 1.0);
                m2[i] += delta * (y - mean[i]);
            }
        }
        let std = m2.iter().map(|v| (v / passes as f64).sqrt()).collect();
        Ok((mean, std))
    }

    /// Exact gradient of a scalar loss with respect to every mu and rho
    /// parameter, accumulated into `grad` (canonical layout). `d_output` is
    /// the loss gradient with respect to the raw network output recorded in
    /// `trace`. The reparameterized path gives `d w / d mu = 1` and
    /// `d w / d rho = eps * sigmoid(rho)`.
    pub fn backward_into(
        &self,
        trace: &ForwardTrace,
        d_output: &[f64],
        grad: &mut ParamVector,
    ) -> Result<()> {
        self.backward_into_impl(trace, d_output, grad, None)
    }

    pub(crate) fn backward_into_cached(
        &self,
        trace: &ForwardTrace,
        d_output: &[f64],
        grad: &mut ParamVector,
        cache: &SigmaCache,
    ) -> Result<()> {
        self.backward_into_impl(trace, d_output, grad, Some(cache))
    }

    fn backward_into_impl(
        &self,
        trace: &ForwardTrace,
        d_output: &[f64],
        grad: &mut ParamVector,
        cache: Option<&SigmaCache>,
    ) -> Result<()> {
        if trace.layers.len() != self.layers.len() {
            return Err(Error::InvalidState(
                "forward trace does not match model depth".into(),
            ));
        }
        if d_output.len() != self.output_dim() {
            return Err(Error::Shape(format!(
                "output gradient length {} does not match output dimension {}",
                d_output.len(),
                self.output_dim()
            )));
        }
        let (mu_len, rho_len) = self.param_counts();
        if grad.mu.len() != mu_len || grad.rho.len() != rho_len {
            return Err(Error::Shape("gradient vector does not fit model".into()));
        }

        // Section offsets of each layer within the flat layout.
        let mut mu_offsets = Vec::with_capacity(self.layers.len());
        let mut rho_offsets = Vec::with_capacity(self.layers.len());
        let (mut mu_off, mut rho_off) = (0usize, 0usize);
        for layer in &self.layers {
            mu_offsets.push(mu_off);
            rho_offsets.push(rho_off);
            match layer {
                Layer::Bayesian(l) => {
                    mu_off += l.mu_w.len() + l.mu_b.len();
                    rho_off += l.rho_w.len() + l.rho_b.len();
                }
                Layer::Deterministic(l) => {
                    mu_off += l.w.len() + l.b.len();
                }
            }
        }

        let mut g = d_output.to_vec();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let lt = &trace.layers[k];
            let (in_dim, out_dim) = (layer.in_dim(), layer.out_dim());
            let activation = self.activations[k];
            let dz: Vec<f64> = g
                .iter()
                .zip(&lt.preact)
                .map(|(gi, &z)| gi * activation.derivative(z))
                .collect();

            match layer {
                Layer::Bayesian(l) => {
                    let dsigmas = cache.map(|c| &c.layers[k]);
                    let w_grad = &mut grad.mu[mu_offsets[k]..mu_offsets[k] + l.mu_w.len()];
                    let rho_w_grad = &mut grad.rho[rho_offsets[k]..rho_offsets[k] + l.rho_w.len()];
                    for o in 0..out_dim {
                        for i in 0..in_dim {
                            let idx = o * in_dim + i;
                            let dw = dz[o] * lt.input[i];
                            let dsig = match dsigmas {
                                Some((_, _, dw_cache, _)) => dw_cache[idx],
                                None => sigmoid(l.rho_w[idx]),
                            };
                            w_grad[idx] += dw;
                            rho_w_grad[idx] += dw * lt.eps_w[idx] * dsig;
                        }
                    }
                    let b_base = mu_offsets[k] + l.mu_w.len();
                    let rho_b_base = rho_offsets[k] + l.rho_w.len();
                    for o in 0..out_dim {
                        let dsig = match dsigmas {
                            Some((_, _, _, db_cache)) => db_cache[o],
                            None => sigmoid(l.rho_b[o]),
                        };
                        grad.mu[b_base + o] += dz[o];
                        grad.rho[rho_b_base + o] += dz[o] * lt.eps_b[o] * dsig;
                    }
                }
                Layer::Deterministic(l) => {
                    let w_grad = &mut grad.mu[mu_offsets[k]..mu_offsets[k] + l.w.len()];
                    for o in 0..out_dim {
                        for i in 0..in_dim {
                            w_grad[o * in_dim + i] += dz[o] * lt.input[i];
                        }
                    }
                    let b_base = mu_offsets[k] + l.w.len();
                    for o in 0..out_dim {
                        grad.mu[b_base + o] += dz[o];
                    }
                }
            }

            if k > 0 {
                let mut g_prev = vec![0.0; in_dim];
                for o in 0..out_dim {
                    let row = &lt.w[o * in_dim..(o + 1) * in_dim];
                    for (i, wi) in row.iter().enumerate() {
                        g_prev[i] += wi * dz[o];
                    }
                }
                g = g_prev;
            }
        }
        Ok(())
    }

    /// Convenience wrapper allocating a fresh gradient vector.
    pub fn backward(&self, trace: &ForwardTrace, d_output: &[f64]) -> Result<ParamVector> {
        let (mu_len, rho_len) = self.param_counts();
        let mut grad = ParamVector::zeros(mu_len, rho_len);
        self.backward_into(trace, d_output, &mut grad)?;
        Ok(grad)
    }
}
