//! Exhaustive asynchronous-schedule exploration for small meshes.
//!
//! Models the transports' actual delivery contract: each directed channel is
//! a FIFO queue, and the scheduler may next deliver the head of any non-empty
//! channel. Every reachable interleaving of a fully connected mesh is
//! explored, checking that each terminal state has all nodes at the final
//! round with exactly one update per round, and that no deadlock exists.
//! States are deduplicated on the protocol control state, which is sound
//! because the transition function never branches on parameter values.

use std::collections::{HashSet, VecDeque};

use super::message::{Message, NodeId};
use super::runtime::NodeRuntime;
use crate::bayesian_nn::ParamVector;
use crate::error::{Error, Result};

/// Control-state digest of a single node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct NodeDigest {
    round: u32,
    self_complete: bool,
    peer_complete: Vec<(NodeId, bool)>,
    slots_filled: Vec<(NodeId, bool)>,
    updates: u32,
}

/// A queued message, stripped of its payload (which never affects control
/// flow: all states share one layout and the update is value-agnostic here).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct QueuedMsg {
    round: u32,
    round_complete: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct WorldState {
    nodes: Vec<NodeDigest>,
    channels: Vec<Vec<QueuedMsg>>,
}

#[derive(Debug, Clone)]
struct World {
    nodes: Vec<ExploreNode>,
    /// FIFO queue per directed channel, indexed `from * n + to`.
    channels: Vec<VecDeque<QueuedMsg>>,
}

#[derive(Debug, Clone)]
struct ExploreNode {
    runtime: NodeRuntime,
    updates: u32,
}

impl World {
    fn digest(&self) -> WorldState {
        WorldState {
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeDigest {
                    round: n.runtime.round(),
                    self_complete: n.runtime.self_complete(),
                    peer_complete: n.runtime.completion_flags(),
                    slots_filled: n.runtime.filled_slots(),
                    updates: n.updates,
                })
                .collect(),
            channels: self
                .channels
                .iter()
                .map(|q| q.iter().copied().collect())
                .collect(),
        }
    }

    fn all_quiet(&self) -> bool {
        self.channels.iter().all(|q| q.is_empty())
    }
}

/// Statistics of an exhaustive exploration.
#[derive(Debug, Clone, Default)]
pub struct ExplorationReport {
    pub distinct_states: usize,
    pub terminal_states: usize,
    pub max_in_flight: usize,
}

/// Explore every delivery interleaving of a fully connected `n_nodes` mesh
/// running `max_round` rounds over FIFO channels. Errors on any reachable
/// deadlock, wrong final round, or update count differing from `max_round`;
/// `max_states` bounds the search.
pub fn explore_all_interleavings(
    n_nodes: u32,
    max_round: u32,
    max_states: usize,
) -> Result<ExplorationReport> {
    if n_nodes < 2 {
        return Err(Error::InvalidArgument("exploration needs at least 2 nodes".into()));
    }
    let n = n_nodes as usize;
    let empty = ParamVector::new(vec![], vec![]);
    let mut start = World {
        nodes: (0..n_nodes)
            .map(|id| {
                let neighbors = (0..n_nodes).filter(|&j| j != id);
                Ok(ExploreNode {
                    runtime: NodeRuntime::new(id, neighbors, max_round, empty.clone())?,
                    updates: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        channels: vec![VecDeque::new(); n * n],
    };
    for from in 0..n_nodes {
        for to in 0..n_nodes {
            if from != to {
                start.channels[from as usize * n + to as usize].push_back(QueuedMsg {
                    round: 0,
                    round_complete: false,
                });
            }
        }
    }

    let mut visited: HashSet<WorldState> = HashSet::new();
    let mut frontier: VecDeque<World> = VecDeque::new();
    visited.insert(start.digest());
    frontier.push_back(start);
    let mut report = ExplorationReport::default();

    while let Some(world) = frontier.pop_front() {
        report.distinct_states += 1;
        report.max_in_flight = report
            .max_in_flight
            .max(world.channels.iter().map(|q| q.len()).sum());
        if visited.len() > max_states {
            return Err(Error::Protocol(format!(
                "exploration exceeded {max_states} states"
            )));
        }
        if world.all_quiet() {
            report.terminal_states += 1;
            for node in &world.nodes {
                if node.runtime.round() != max_round {
                    return Err(Error::Protocol(format!(
                        "terminal state with node {} at round {} of {max_round}",
                        node.runtime.id(),
                        node.runtime.round()
                    )));
                }
                if node.updates != max_round {
                    return Err(Error::Protocol(format!(
                        "terminal state with node {} having {} updates, expected {max_round}",
                        node.runtime.id(),
                        node.updates
                    )));
                }
            }
            continue;
        }
        // Branch: deliver the head of each non-empty channel.
        for channel in 0..world.channels.len() {
            if world.channels[channel].is_empty() {
                continue;
            }
            let mut next = world.clone();
            let qm = next.channels[channel].pop_front().unwrap();
            let from = (channel / n) as NodeId;
            let to = (channel % n) as NodeId;
            deliver(&mut next, from, to, qm)?;
            let digest = next.digest();
            if visited.insert(digest) {
                frontier.push_back(next);
            }
        }
    }
    Ok(report)
}

fn deliver(world: &mut World, from: NodeId, to: NodeId, qm: QueuedMsg) -> Result<()> {
    let n = world.nodes.len();
    let node = &mut world.nodes[to as usize];
    if node.runtime.is_finished() {
        return Ok(()); // dropped at a terminated node
    }
    let msg = if qm.round_complete {
        Message::round_complete(from, qm.round)
    } else {
        Message::state(from, qm.round, ParamVector::new(vec![], vec![]))
    };
    let actions = node.runtime.handle_message(&msg)?;
    let mut outbox: Vec<QueuedMsg> = Vec::new();
    for action in actions {
        use super::runtime::{Action, Outbound};
        match action {
            Action::DoUpdate { .. } => node.updates += 1,
            Action::Send(Outbound::State { round }) => outbox.push(QueuedMsg {
                round,
                round_complete: false,
            }),
            Action::Send(Outbound::RoundComplete { round }) => outbox.push(QueuedMsg {
                round,
                round_complete: true,
            }),
            _ => {}
        }
    }
    for qm in outbox {
        for dest in 0..n as u32 {
            if dest != to {
                world.channels[to as usize * n + dest as usize].push_back(qm);
            }
        }
    }
    Ok(())
}
