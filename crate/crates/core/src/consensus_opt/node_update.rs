//! The per-round consensus step: dual accumulation and target averaging.

use std::collections::BTreeMap;

use crate::bayesian_nn::ParamVector;
use crate::error::{Error, Result};

/// Node identifier shared with the peer protocol.
pub type NodeId = u32;

/// Dual variables accumulating inter-node disagreement, one entry per
/// parameter. Initialized to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl DualState {
    pub fn zeros_for(params: &ParamVector) -> Self {
        DualState {
            mu: vec![0.0; params.mu.len()],
            rho: vec![0.0; params.rho.len()],
        }
    }

    pub fn matches(&self, params: &ParamVector) -> bool {
        self.mu.len() == params.mu.len() && self.rho.len() == params.rho.len()
    }
}

/// Regularization targets for the next local optimization.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusTargets {
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl ConsensusTargets {
    /// Targets equal to the node's own parameters (the no-peer degenerate case).
    pub fn from_own(params: &ParamVector) -> Self {
        ConsensusTargets {
            mu: params.mu.clone(),
            rho: params.rho.clone(),
        }
    }

    pub fn matches(&self, params: &ParamVector) -> bool {
        self.mu.len() == params.mu.len() && self.rho.len() == params.rho.len()
    }
}

/// Penalty weights for the two regularizers, with an optional per-round
/// multiplicative growth schedule.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PenaltyWeights {
    pub w_mu: f64,
    pub w_rho: f64,
    pub growth: f64,
}

impl PenaltyWeights {
    pub fn new(w_mu: f64, w_rho: f64, growth: f64) -> Result<Self> {
        if !(w_mu >= 0.0 && w_mu.is_finite()) || !(w_rho >= 0.0 && w_rho.is_finite()) {
            return Err(Error::InvalidArgument(
                "penalty weights must be finite and nonnegative".into(),
            ));
        }
        if !(growth >= 1.0 && growth.is_finite()) {
            return Err(Error::InvalidArgument("penalty growth must be >= 1".into()));
        }
        Ok(PenaltyWeights { w_mu, w_rho, growth })
    }

    /// Apply the growth schedule; call at most once per protocol round.
    pub fn grow(&mut self) {
        self.w_mu *= self.growth;
        self.w_rho *= self.growth;
    }
}

/// Consensus update against the received peer states.
///
/// Duals accumulate the summed disagreement, `duals += w * sum_j (own - peer_j)`
/// per section; targets are the elementwise mean of the node's own state and
/// all peer states. Peers are consumed in ascending id order, so the result
/// is bit-identical regardless of arrival order.
pub fn node_update(
    own: &ParamVector,
    peers: &BTreeMap<NodeId, ParamVector>,
    duals: &DualState,
    weights: &PenaltyWeights,
) -> Result<(ConsensusTargets, DualState)> {
    if peers.is_empty() {
        return Err(Error::InvalidArgument("node_update needs at least one peer".into()));
    }
    for (id, peer) in peers {
        if !peer.same_layout(own) {
            return Err(Error::InvalidArgument(format!(
                "peer {id} layout ({}, {}) does not match own ({}, {})",
                peer.mu.len(),
                peer.rho.len(),
                own.mu.len(),
                own.rho.len()
            )));
        }
    }
    if !duals.matches(own) {
        return Err(Error::InvalidArgument("dual state layout mismatch".into()));
    }

    let mut new_duals = duals.clone();
    let mut target_mu = own.mu.clone();
    let mut target_rho = own.rho.clone();
    for peer in peers.values() {
        for i in 0..own.mu.len() {
            new_duals.mu[i] += weights.w_mu * (own.mu[i] - peer.mu[i]);
            target_mu[i] += peer.mu[i];
        }
        for i in 0..own.rho.len() {
            new_duals.rho[i] += weights.w_rho * (own.rho[i] - peer.rho[i]);
            target_rho[i] += peer.rho[i];
        }
    }
    let scale = 1.0 / (peers.len() + 1) as f64;
    for v in target_mu.iter_mut().chain(target_rho.iter_mut()) {
        *v *= scale;
    }
    Ok((
        ConsensusTargets {
            mu: target_mu,
            rho: target_rho,
        },
        new_duals,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(mu: &[f64], rho: &[f64]) -> ParamVector {
        ParamVector::new(mu.to_vec(), rho.to_vec())
    }

    fn weights(w: f64) -> PenaltyWeights {
        PenaltyWeights::new(w, w, 1.0).unwrap()
    }

    #[test]
    fn consensus_reached_leaves_duals_unchanged() {
        let own = pv(&[1.0, -2.0], &[0.5]);
        let mut peers = BTreeMap::new();
        peers.insert(1, own.clone());
        peers.insert(2, own.clone());
        let duals = DualState::zeros_for(&own);
        let (targets, new_duals) = node_update(&own, &peers, &duals, &weights(0.7)).unwrap();
        assert_eq!(new_duals, duals);
        assert_eq!(targets.mu, own.mu);
        assert_eq!(targets.rho, own.rho);
    }

    #[test]
    fn hand_arithmetic_single_scalar() {
        let own = pv(&[1.0], &[]);
        let mut peers = BTreeMap::new();
        peers.insert(1, pv(&[0.0], &[]));
        let duals = DualState::zeros_for(&own);
        let (targets, new_duals) = node_update(&own, &peers, &duals, &weights(0.5)).unwrap();
        assert_eq!(new_duals.mu, vec![0.5]);
        assert_eq!(targets.mu, vec![0.5]);
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let own = pv(&[0.25, 0.5], &[1.0]);
        let states = [
            (3u32, pv(&[1.5, -0.25], &[0.125])),
            (1u32, pv(&[-2.0, 0.75], &[2.5])),
            (7u32, pv(&[0.375, 4.0], &[-1.0])),
        ];
        let mut forward = BTreeMap::new();
        for (id, s) in states.iter() {
            forward.insert(*id, s.clone());
        }
        let mut reversed = BTreeMap::new();
        for (id, s) in states.iter().rev() {
            reversed.insert(*id, s.clone());
        }
        let duals = DualState::zeros_for(&own);
        let (t1, d1) = node_update(&own, &forward, &duals, &weights(0.3)).unwrap();
        let (t2, d2) = node_update(&own, &reversed, &duals, &weights(0.3)).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&t1.mu), bits(&t2.mu));
        assert_eq!(bits(&d1.mu), bits(&d2.mu));
        assert_eq!(bits(&d1.rho), bits(&d2.rho));
    }

    #[test]
    fn empty_peer_list_is_an_error() {
        let own = pv(&[1.0], &[]);
        let duals = DualState::zeros_for(&own);
        assert!(node_update(&own, &BTreeMap::new(), &duals, &weights(0.5)).is_err());
    }

    #[test]
    fn layout_mismatch_is_an_error() {
        let own = pv(&[1.0], &[]);
        let mut peers = BTreeMap::new();
        peers.insert(1, pv(&[1.0, 2.0], &[]));
        let duals = DualState::zeros_for(&own);
        assert!(node_update(&own, &peers, &duals, &weights(0.5)).is_err());
    }

    #[test]
    fn duals_sum_to_zero_on_a_symmetric_graph() {
        // Fully connected graph of 4 nodes, several rounds of updates with
        // states drifting; the summed dual over all nodes must stay zero.
        let n = 4usize;
        let mut states: Vec<ParamVector> = (0..n)
            .map(|i| pv(&[i as f64, -(i as f64) * 0.5], &[0.1 * i as f64]))
            .collect();
        let mut duals: Vec<DualState> = states.iter().map(DualState::zeros_for).collect();
        let w = weights(0.25);
        for round in 0..5 {
            let snapshot = states.clone();
            for i in 0..n {
                let mut peers = BTreeMap::new();
                for (j, s) in snapshot.iter().enumerate() {
                    if j != i {
                        peers.insert(j as NodeId, s.clone());
                    }
                }
                let (targets, new_duals) = node_update(&snapshot[i], &peers, &duals[i], &w).unwrap();
                duals[i] = new_duals;
                // Drift each state toward its target a little, like a crude
                // local optimizer would.
                for k in 0..states[i].mu.len() {
                    states[i].mu[k] += 0.5 * (targets.mu[k] - states[i].mu[k]);
                }
            }
            for k in 0..states[0].mu.len() {
                let total: f64 = duals.iter().map(|d| d.mu[k]).sum();
                assert!(total.abs() < 1e-10, "round {round}, entry {k}: {total}");
            }
            for k in 0..states[0].rho.len() {
                let total: f64 = duals.iter().map(|d| d.rho[k]).sum();
                assert!(total.abs() < 1e-10, "round {round}, rho entry {k}: {total}");
            }
        }
    }

    #[test]
    fn growth_schedule_multiplies_weights() {
        let mut w = PenaltyWeights::new(1.0, 2.0, 1.1).unwrap();
        w.grow();
        assert!((w.w_mu - 1.1).abs() < 1e-15);
        assert!((w.w_rho - 2.2).abs() < 1e-15);
        assert!(PenaltyWeights::new(1.0, 1.0, 0.9).is_err());
        assert!(PenaltyWeights::new(-1.0, 1.0, 1.0).is_err());
    }
}
