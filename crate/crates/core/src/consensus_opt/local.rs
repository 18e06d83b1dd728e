//! Dual-augmented local optimization with separate mu and rho optimizers.
//!
//! Each iteration resets the gradients, evaluates the prediction loss once,
//! and assembles the two objectives
//!
//! `loss_mu  = pred + <theta_mu, duals_mu>  + w_mu  * l2(theta_mu, target_mu)`
//! `loss_rho =        <theta_rho, duals_rho> + w_rho * kl(theta_rho, target_rho)`
//!
//! then applies one Adam step per parameter group. The prediction loss enters
//! only the mu objective; the spreads are informed by data solely through
//! consensus, unless `rho_uses_pred_loss` flips the alternative on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::{AdamConfig, AdamOptimizer};
use super::node_update::{ConsensusTargets, DualState, PenaltyWeights};
use super::regularizer::{kl_rho_gradient, kl_rho_regularizer, l2_mu_gradient, l2_mu_regularizer};
use crate::bayesian_nn::{BceRecorder, BnnModel, Example, NoiseSource, ParamVector};
use crate::error::{Error, Result};

/// Prediction-loss value and its gradients at a parameter point.
#[derive(Debug, Clone)]
pub struct PredEval {
    pub loss: f64,
    pub grad_mu: Vec<f64>,
    pub grad_rho: Vec<f64>,
}

/// Pluggable prediction loss. The Bayesian network's cross-entropy is the
/// production objective; convex quadratics stand in for it when checking
/// consensus convergence against closed-form optima.
pub trait PredictionObjective {
    fn eval(&mut self, params: &ParamVector, iter: usize) -> Result<PredEval>;
}

/// Quadratic `sum_i (mu_i - center_i)^2` over the mu section; no rho path.
#[derive(Debug, Clone)]
pub struct QuadraticObjective {
    pub centers: Vec<f64>,
}

impl QuadraticObjective {
    pub fn new(centers: Vec<f64>) -> Self {
        QuadraticObjective { centers }
    }
}

impl PredictionObjective for QuadraticObjective {
    fn eval(&mut self, params: &ParamVector, _iter: usize) -> Result<PredEval> {
        if params.mu.len() != self.centers.len() {
            return Err(Error::Shape(format!(
                "quadratic objective over {} centers, got {} parameters",
                self.centers.len(),
                params.mu.len()
            )));
        }
        let mut loss = 0.0;
        let mut grad_mu = vec![0.0; params.mu.len()];
        for i in 0..params.mu.len() {
            let d = params.mu[i] - self.centers[i];
            loss += d * d;
            grad_mu[i] = 2.0 * d;
        }
        Ok(PredEval {
            loss,
            grad_mu,
            grad_rho: vec![0.0; params.rho.len()],
        })
    }
}

/// A prediction loss that is identically zero (pure-consensus runs).
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroObjective;

impl PredictionObjective for ZeroObjective {
    fn eval(&mut self, params: &ParamVector, _iter: usize) -> Result<PredEval> {
        Ok(PredEval {
            loss: 0.0,
            grad_mu: vec![0.0; params.mu.len()],
            grad_rho: vec![0.0; params.rho.len()],
        })
    }
}

/// Minibatch policy: full batch up to a limit, uniform random minibatches
/// beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MinibatchPolicy {
    pub full_batch_limit: usize,
    pub minibatch: usize,
}

impl Default for MinibatchPolicy {
    fn default() -> Self {
        MinibatchPolicy {
            full_batch_limit: 1024,
            minibatch: 512,
        }
    }
}

/// Binary cross-entropy of a Bayesian model over a labeled dataset, with one
/// stochastic pass per point and the minibatch policy above.
pub struct BnnObjective<'a> {
    model: BnnModel,
    data: &'a [Example],
    noise: NoiseSource,
    batch_rng: ChaCha8Rng,
    policy: MinibatchPolicy,
    recorder: BceRecorder,
    scratch: Vec<Example>,
}

impl<'a> BnnObjective<'a> {
    pub fn new(
        model: BnnModel,
        data: &'a [Example],
        noise: NoiseSource,
        batch_seed: u64,
        policy: MinibatchPolicy,
    ) -> Self {
        BnnObjective {
            model,
            data,
            noise,
            batch_rng: ChaCha8Rng::seed_from_u64(batch_seed),
            policy,
            recorder: BceRecorder::new(),
            scratch: Vec::new(),
        }
    }

    /// The model with the most recently evaluated parameters loaded.
    pub fn into_model(self) -> BnnModel {
        self.model
    }

    fn batch(&mut self) -> &[Example] {
        if self.data.len() <= self.policy.full_batch_limit {
            self.data
        } else {
            self.scratch.clear();
            for _ in 0..self.policy.minibatch {
                let idx = self.batch_rng.gen_range(0..self.data.len());
                self.scratch.push(self.data[idx].clone());
            }
            &self.scratch
        }
    }
}

impl PredictionObjective for BnnObjective<'_> {
    fn eval(&mut self, params: &ParamVector, _iter: usize) -> Result<PredEval> {
        self.model.load_params(params)?;
        if self.data.len() <= self.policy.full_batch_limit {
            let loss = self
                .recorder
                .forward(&self.model, self.data, &mut self.noise)?;
            let grad = self.recorder.backward()?;
            Ok(PredEval {
                loss,
                grad_mu: grad.mu,
                grad_rho: grad.rho,
            })
        } else {
            self.batch();
            let loss = self
                .recorder
                .forward(&self.model, &self.scratch, &mut self.noise)?;
            let grad = self.recorder.backward()?;
            Ok(PredEval {
                loss,
                grad_mu: grad.mu,
                grad_rho: grad.rho,
            })
        }
    }
}

/// Loss trace of one local optimization run.
#[derive(Debug, Clone, Default)]
pub struct LocalRunStats {
    pub pred_losses: Vec<f64>,
    pub last_loss_mu: f64,
    pub last_loss_rho: f64,
}

/// The two Adam instances of a node plus the data/consensus split flag.
/// Moments persist across protocol rounds.
pub struct LocalOptimizer {
    adam_mu: AdamOptimizer,
    adam_rho: AdamOptimizer,
    rho_uses_pred_loss: bool,
}

impl LocalOptimizer {
    pub fn new(
        mu_len: usize,
        rho_len: usize,
        mu_config: AdamConfig,
        rho_config: AdamConfig,
        rho_uses_pred_loss: bool,
    ) -> Result<Self> {
        Ok(LocalOptimizer {
            adam_mu: AdamOptimizer::new(mu_len, mu_config)?,
            adam_rho: AdamOptimizer::new(rho_len, rho_config)?,
            rho_uses_pred_loss,
        })
    }

    /// Run `iters` iterations of the dual-augmented objective, updating
    /// `params` in place.
    pub fn run(
        &mut self,
        params: &mut ParamVector,
        objective: &mut dyn PredictionObjective,
        duals: &DualState,
        targets: &ConsensusTargets,
        weights: &PenaltyWeights,
        iters: usize,
    ) -> Result<LocalRunStats> {
        if iters == 0 {
            return Err(Error::InvalidArgument("local optimization needs iters >= 1".into()));
        }
        if !duals.matches(params) || !targets.matches(params) {
            return Err(Error::InvalidArgument(
                "duals/targets layout does not match parameters".into(),
            ));
        }
        let mut stats = LocalRunStats::default();
        for iter in 0..iters {
            let pred = objective.eval(params, iter)?;
            if pred.grad_mu.len() != params.mu.len() || pred.grad_rho.len() != params.rho.len() {
                return Err(Error::Shape("objective gradient layout mismatch".into()));
            }

            let reg_mu = l2_mu_regularizer(&params.mu, &targets.mu)?;
            let reg_rho = kl_rho_regularizer(&params.rho, &targets.rho)?;
            let dual_mu: f64 = params.mu.iter().zip(&duals.mu).map(|(p, d)| p * d).sum();
            let dual_rho: f64 = params.rho.iter().zip(&duals.rho).map(|(p, d)| p * d).sum();
            let loss_mu = pred.loss + dual_mu + weights.w_mu * reg_mu;
            let loss_rho = if self.rho_uses_pred_loss {
                pred.loss + dual_rho + weights.w_rho * reg_rho
            } else {
                dual_rho + weights.w_rho * reg_rho
            };
            if !loss_mu.is_finite() || !loss_rho.is_finite() {
                return Err(Error::Diverged {
                    iter,
                    detail: format!("loss_mu = {loss_mu}, loss_rho = {loss_rho}"),
                });
            }

            let mut grad_mu = pred.grad_mu;
            for (g, d) in grad_mu.iter_mut().zip(&duals.mu) {
                *g += d;
            }
            l2_mu_gradient(&params.mu, &targets.mu, weights.w_mu, &mut grad_mu)?;

            let mut grad_rho = if self.rho_uses_pred_loss {
                pred.grad_rho
            } else {
                vec![0.0; params.rho.len()]
            };
            for (g, d) in grad_rho.iter_mut().zip(&duals.rho) {
                *g += d;
            }
            kl_rho_gradient(&params.rho, &targets.rho, weights.w_rho, &mut grad_rho)?;

            self.adam_mu.step(&mut params.mu, &grad_mu)?;
            self.adam_rho.step(&mut params.rho, &grad_rho)?;

            stats.pred_losses.push(pred.loss);
            stats.last_loss_mu = loss_mu;
            stats.last_loss_rho = loss_rho;
        }
        Ok(stats)
    }
}

/// Full local optimization of a Bayesian model over its dataset, as invoked
/// from the protocol's node update. Updates the model in place.
#[allow(clippy::too_many_arguments)]
pub fn local_optimize(
    model: &mut BnnModel,
    data: &[Example],
    duals: &DualState,
    targets: &ConsensusTargets,
    weights: &PenaltyWeights,
    iters: usize,
    optimizer: &mut LocalOptimizer,
    noise: NoiseSource,
    batch_seed: u64,
    policy: MinibatchPolicy,
) -> Result<LocalRunStats> {
    let mut params = model.extract_params();
    let mut objective = BnnObjective::new(model.clone(), data, noise, batch_seed, policy);
    let stats = optimizer.run(&mut params, &mut objective, duals, targets, weights, iters)?;
    model.load_params(&params)?;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayesian_nn::{Activation, OutputTransform};
    use crate::consensus_opt::node_update::{node_update, NodeId};
    use std::collections::BTreeMap;

    fn zero_duals(params: &ParamVector) -> DualState {
        DualState::zeros_for(params)
    }

    fn separable_toy_set() -> Vec<Example> {
        // Points left of x = 0 are free, right are occupied.
        let mut data = Vec::new();
        for i in 0..10 {
            let y = -1.0 + 0.2 * i as f64;
            data.push(Example::new(vec![-0.8, y], 0.0));
            data.push(Example::new(vec![0.8, y], 1.0));
        }
        data
    }

    #[test]
    fn zero_penalty_reduces_to_plain_bce_descent() {
        let mut model = BnnModel::bayesian_mlp(
            &[2, 8, 1],
            &[Activation::Tanh],
            OutputTransform::Sigmoid,
            -6.0,
            1.0,
            41,
        )
        .unwrap();
        let data = separable_toy_set();
        let params = model.extract_params();
        let duals = zero_duals(&params);
        let targets = ConsensusTargets::from_own(&params);
        let weights = PenaltyWeights::new(0.0, 0.0, 1.0).unwrap();
        let mut opt = LocalOptimizer::new(
            params.mu.len(),
            params.rho.len(),
            AdamConfig::with_step_size(5e-3),
            AdamConfig::with_step_size(1e-4),
            false,
        )
        .unwrap();
        let stats = local_optimize(
            &mut model,
            &data,
            &duals,
            &targets,
            &weights,
            100,
            &mut opt,
            NoiseSource::seeded(5),
            0,
            MinibatchPolicy::default(),
        )
        .unwrap();
        for pair in stats.pred_losses.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-6,
                "loss increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        assert!(stats.pred_losses.last().unwrap() < &0.5);
    }

    #[test]
    fn pure_quadratic_penalty_pulls_mu_toward_target() {
        // No prediction loss, no duals: mu must descend toward mu_reg with
        // monotonically shrinking distance under a small step size.
        let mut params = ParamVector::new(vec![2.0, -1.0], vec![0.0]);
        let duals = zero_duals(&params);
        let targets = ConsensusTargets {
            mu: vec![0.5, 0.5],
            rho: vec![0.0],
        };
        let weights = PenaltyWeights::new(1.0, 1.0, 1.0).unwrap();
        let mut opt = LocalOptimizer::new(
            2,
            1,
            AdamConfig::with_step_size(1e-3),
            AdamConfig::with_step_size(1e-3),
            false,
        )
        .unwrap();
        let mut objective = ZeroObjective;
        let dist = |p: &ParamVector| {
            p.mu.iter()
                .zip(&targets.mu)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        };
        let mut last = dist(&params);
        for _ in 0..200 {
            opt.run(&mut params, &mut objective, &duals, &targets, &weights, 1)
                .unwrap();
            let now = dist(&params);
            assert!(now <= last + 1e-12, "distance grew: {last} -> {now}");
            last = now;
        }
        assert!(last < dist(&ParamVector::new(vec![2.0, -1.0], vec![0.0])));
    }

    #[test]
    fn ring_of_quadratics_converges_to_the_centralized_mean() {
        // Three nodes on a ring with local losses (theta - a_i)^2,
        // a = {0, 1, 2}. The centralized minimizer of the sum is mean(a) = 1.
        let centers = [0.0, 1.0, 2.0];
        let neighbors = [(1u32, 2u32), (0, 2), (0, 1)];
        let mut states: Vec<ParamVector> =
            (0..3).map(|_| ParamVector::new(vec![0.0], vec![])).collect();
        let mut duals: Vec<DualState> = states.iter().map(DualState::zeros_for).collect();
        let weights = PenaltyWeights::new(0.5, 0.5, 1.0).unwrap();
        let mut opts: Vec<LocalOptimizer> = (0..3)
            .map(|_| {
                LocalOptimizer::new(
                    1,
                    0,
                    AdamConfig::with_step_size(0.05),
                    AdamConfig::with_step_size(0.05),
                    false,
                )
                .unwrap()
            })
            .collect();
        for _round in 0..50 {
            let snapshot = states.clone();
            for i in 0..3 {
                let mut peers = BTreeMap::new();
                let (a, b) = neighbors[i];
                peers.insert(a as NodeId, snapshot[a as usize].clone());
                peers.insert(b as NodeId, snapshot[b as usize].clone());
                let (targets, new_duals) =
                    node_update(&snapshot[i], &peers, &duals[i], &weights).unwrap();
                duals[i] = new_duals;
                let mut objective = QuadraticObjective::new(vec![centers[i]]);
                opts[i]
                    .run(&mut states[i], &mut objective, &duals[i], &targets, &weights, 20)
                    .unwrap();
            }
        }
        for (i, s) in states.iter().enumerate() {
            assert!(
                (s.mu[0] - 1.0).abs() < 1e-2,
                "node {i} ended at {}",
                s.mu[0]
            );
        }
    }

    #[test]
    fn rho_gradient_ignores_the_data() {
        // Perturbing the dataset must not change the rho update when the
        // prediction loss is confined to the mu objective.
        let model = BnnModel::bayesian_mlp(
            &[2, 6, 1],
            &[Activation::Tanh],
            OutputTransform::Sigmoid,
            -2.0,
            1.0,
            13,
        )
        .unwrap();
        let params = model.extract_params();
        let duals = zero_duals(&params);
        let mut targets = ConsensusTargets::from_own(&params);
        for t in targets.rho.iter_mut() {
            *t += 0.3;
        }
        let weights = PenaltyWeights::new(0.7, 0.7, 1.0).unwrap();

        let run = |data: &[Example]| {
            let mut m = model.clone();
            let mut opt = LocalOptimizer::new(
                params.mu.len(),
                params.rho.len(),
                AdamConfig::default(),
                AdamConfig::default(),
                false,
            )
            .unwrap();
            local_optimize(
                &mut m,
                data,
                &duals,
                &targets,
                &weights,
                5,
                &mut opt,
                NoiseSource::seeded(3),
                0,
                MinibatchPolicy::default(),
            )
            .unwrap();
            m.extract_params().rho
        };

        let data_a = separable_toy_set();
        let mut data_b = separable_toy_set();
        for ex in data_b.iter_mut() {
            ex.input[0] *= 3.0;
            ex.target = 1.0 - ex.target;
        }
        let rho_a = run(&data_a);
        let rho_b = run(&data_b);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&rho_a), bits(&rho_b));
    }

    #[test]
    fn non_finite_loss_reports_divergence_with_iteration() {
        let mut params = ParamVector::new(vec![1e308], vec![]);
        let duals = zero_duals(&params);
        let targets = ConsensusTargets {
            mu: vec![-1e308],
            rho: vec![],
        };
        let weights = PenaltyWeights::new(1.0, 1.0, 1.0).unwrap();
        let mut opt = LocalOptimizer::new(
            1,
            0,
            AdamConfig::default(),
            AdamConfig::default(),
            false,
        )
        .unwrap();
        let mut objective = ZeroObjective;
        match opt.run(&mut params, &mut objective, &duals, &targets, &weights, 3) {
            Err(Error::Diverged { iter, .. }) => assert_eq!(iter, 0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_iterations_is_an_error() {
        let mut params = ParamVector::new(vec![0.0], vec![]);
        let duals = zero_duals(&params);
        let targets = ConsensusTargets::from_own(&params);
        let weights = PenaltyWeights::new(1.0, 1.0, 1.0).unwrap();
        let mut opt = LocalOptimizer::new(
            1,
            0,
            AdamConfig::default(),
            AdamConfig::default(),
            false,
        )
        .unwrap();
        assert!(opt
            .run(&mut params, &mut ZeroObjective, &duals, &targets, &weights, 0)
            .is_err());
    }
}
