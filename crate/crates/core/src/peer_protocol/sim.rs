//! Deterministic in-memory network: a single-owner event queue over virtual
//! time. Sends are assigned seeded random delays, so delivery order differs
//! from send order while the whole run stays replayable from the seed.
//!
//! Two guarantees shape the default behavior. Each directed channel delivers
//! in send order (datagram flows on loopback behave this way), and the
//! default delay window keeps every single-hop delay below twice the minimum
//! delay. Together these ensure a state message for round r+2 can never
//! overtake the round r+1 states it causally depends on, which is what makes
//! the exchange protocol hit exactly one update per round. Reordering across
//! channels is unrestricted. The knobs accept wider windows (and drops) for
//! demonstrating how the protocol degrades outside that envelope.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::message::{Message, MessageBody, NodeId};
use super::node::NodeHandle;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Minimum message delay (virtual time units).
    pub delay_min: f64,
    /// Maximum base message delay.
    pub delay_max: f64,
    /// Probability that a message gets an extra delay boost.
    pub reorder_prob: f64,
    /// Upper bound of the extra boost.
    pub reorder_boost: f64,
    /// Probability that a message is silently dropped.
    pub drop_prob: f64,
    /// Seed of the delay/drop stream.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            delay_min: 1.2,
            delay_max: 1.9,
            reorder_prob: 0.25,
            reorder_boost: 0.45,
            drop_prob: 0.0,
            seed: 0,
        }
    }
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delay_min > 0.0 && self.delay_max >= self.delay_min) {
            return Err(Error::Config(
                "simulated transport needs 0 < delay_min <= delay_max".into(),
            ));
        }
        for (name, p) in [("reorder_prob", self.reorder_prob), ("drop_prob", self.drop_prob)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be within [0, 1]")));
            }
        }
        if self.reorder_boost < 0.0 {
            return Err(Error::Config("reorder_boost must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
struct Delivery {
    at: f64,
    seq: u64,
    to: NodeId,
    msg: Message,
}

impl PartialEq for Delivery {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl Eq for Delivery {}
impl PartialOrd for Delivery {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Delivery {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want earliest first.
        // Ties break on the send sequence number for determinism.
        other
            .at
            .total_cmp(&self.at)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// One delivery record, exposed for replay comparisons across seeds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeliveryLogEntry {
    pub to: NodeId,
    pub sender: NodeId,
    pub round: u32,
    pub is_round_complete: bool,
}

/// Outcome of a completed simulated run.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub update_counts: BTreeMap<NodeId, u32>,
    pub final_rounds: BTreeMap<NodeId, u32>,
    pub delivered: u64,
    pub dropped: u64,
    pub virtual_time: f64,
}

/// The simulated network owning every node.
pub struct SimNet<'a> {
    nodes: BTreeMap<NodeId, NodeHandle<'a>>,
    queue: BinaryHeap<Delivery>,
    rng: ChaCha8Rng,
    config: SimConfig,
    time: f64,
    seq: u64,
    delivered: u64,
    dropped: u64,
    // Last scheduled delivery per directed channel; enforces FIFO order.
    channel_clock: BTreeMap<(NodeId, NodeId), f64>,
    log: Vec<DeliveryLogEntry>,
    keep_log: bool,
}

impl<'a> SimNet<'a> {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(SimNet {
            nodes: BTreeMap::new(),
            queue: BinaryHeap::new(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            time: 0.0,
            seq: 0,
            delivered: 0,
            dropped: 0,
            channel_clock: BTreeMap::new(),
            log: Vec::new(),
            keep_log: false,
        })
    }

    /// Record every delivery for replay comparison.
    pub fn with_delivery_log(mut self) -> Self {
        self.keep_log = true;
        self
    }

    pub fn add_node(&mut self, handle: NodeHandle<'a>) -> Result<()> {
        if self.nodes.contains_key(&handle.id()) {
            return Err(Error::Config(format!("duplicate node id {}", handle.id())));
        }
        self.nodes.insert(handle.id(), handle);
        Ok(())
    }

    fn schedule_broadcast(&mut self, from: NodeId, msg: &Message) {
        let neighbors: Vec<NodeId> = self.nodes[&from].runtime().neighbors().collect();
        for to in neighbors {
            if self.config.drop_prob > 0.0 && self.rng.gen::<f64>() < self.config.drop_prob {
                self.dropped += 1;
                continue;
            }
            let mut delay = self
                .rng
                .gen_range(self.config.delay_min..=self.config.delay_max);
            if self.config.reorder_prob > 0.0 && self.rng.gen::<f64>() < self.config.reorder_prob {
                delay += self.rng.gen_range(0.0..=self.config.reorder_boost);
            }
            let mut at = self.time + delay;
            let clock = self.channel_clock.entry((from, to)).or_insert(0.0);
            if at <= *clock {
                at = *clock + 1e-9;
            }
            *clock = at;
            let seq = self.seq;
            self.seq += 1;
            self.queue.push(Delivery {
                at,
                seq,
                to,
                msg: msg.clone(),
            });
        }
    }

    /// Run every node to termination. Errors on deadlock (no messages left
    /// while some node has not reached the final round).
    pub fn run(&mut self) -> Result<SimReport> {
        let ids: Vec<NodeId> = self.nodes.keys().copied().collect();
        for id in &ids {
            let msg = self.nodes[id].initial_message();
            self.schedule_broadcast(*id, &msg);
        }
        while let Some(delivery) = self.queue.pop() {
            if self.nodes.values().all(|n| n.is_finished()) {
                break;
            }
            self.time = self.time.max(delivery.at);
            let node = self
                .nodes
                .get_mut(&delivery.to)
                .ok_or_else(|| Error::Protocol(format!("delivery to unknown node {}", delivery.to)))?;
            if node.is_finished() {
                continue;
            }
            self.delivered += 1;
            if self.keep_log {
                self.log.push(DeliveryLogEntry {
                    to: delivery.to,
                    sender: delivery.msg.sender,
                    round: delivery.msg.round,
                    is_round_complete: matches!(delivery.msg.body, MessageBody::RoundComplete),
                });
            }
            let outbox = node.on_message(&delivery.msg)?;
            for out in outbox {
                self.schedule_broadcast(delivery.to, &out);
            }
        }
        for (id, node) in &self.nodes {
            if !node.is_finished() {
                return Err(Error::Protocol(format!(
                    "deadlock: node {id} stuck at round {} of {}",
                    node.runtime().round(),
                    node.runtime().max_round()
                )));
            }
        }
        Ok(SimReport {
            update_counts: self
                .nodes
                .iter()
                .map(|(id, n)| (*id, n.update_count()))
                .collect(),
            final_rounds: self
                .nodes
                .iter()
                .map(|(id, n)| (*id, n.runtime().round()))
                .collect(),
            delivered: self.delivered,
            dropped: self.dropped,
            virtual_time: self.time,
        })
    }

    pub fn delivery_log(&self) -> &[DeliveryLogEntry] {
        &self.log
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeHandle<'a>> {
        self.nodes.get(&id)
    }

    /// Final states of all nodes.
    pub fn into_states(self) -> BTreeMap<NodeId, crate::bayesian_nn::ParamVector> {
        self.nodes
            .into_iter()
            .map(|(id, n)| (id, n.into_state()))
            .collect()
    }
}
