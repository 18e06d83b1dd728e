//! The round-synchronization state machine, separated from all I/O.
//!
//! [`NodeRuntime::handle_message`] is a pure transition function: it applies
//! the bookkeeping for one received message and returns the resulting actions
//! in deterministic order. Side effects (running the node update, building
//! outgoing frames) are left to the caller, which lets the state machine be
//! unit-tested exhaustively without any transport.
//!
//! Rules, per received message:
//! - ROUND_COMPLETE from a peer marks that peer complete.
//! - A STATE message whose round exceeds the local round finishes the local
//!   round first, then the state is stored; stale states are stored too.
//! - When every neighbor slot is filled, the node update runs, slots clear,
//!   the node marks itself complete and broadcasts ROUND_COMPLETE.
//! - When the node and all neighbors are complete, the round finishes:
//!   completion flags reset, the round increments, and the node broadcasts
//!   its state under the new round number.
//!
//! Peer tables are keyed by neighbors only; a node records its own completion
//! in a separate flag that participates in the all-complete check (a node
//! never receives its own datagrams, so a self slot would never fill).

use std::collections::BTreeMap;

use super::message::{Message, MessageBody, NodeId};
use crate::bayesian_nn::ParamVector;
use crate::error::{Error, Result};

/// What the caller must do after a message was handled, in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// The sender's state was stored into its slot.
    StoreState(NodeId),
    /// The sender was marked complete for this round.
    MarkComplete(NodeId),
    /// All neighbor slots were filled: run the node update over these states
    /// (ascending id order) and replace the node's state with the result.
    DoUpdate { peers: Vec<(NodeId, ParamVector)> },
    /// The round counter advanced (flags were reset).
    FinishRound,
    /// Broadcast to all neighbors. State payloads are read from the node's
    /// state at execution time, so a send emitted before an update carries
    /// the pre-update state and one emitted after carries the new state.
    Send(Outbound),
}

/// An outgoing broadcast, with the round number captured when it was emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outbound {
    State { round: u32 },
    RoundComplete { round: u32 },
}

/// Per-node protocol state.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRuntime {
    id: NodeId,
    round: u32,
    max_round: u32,
    state: ParamVector,
    peer_state: BTreeMap<NodeId, Option<ParamVector>>,
    peer_complete: BTreeMap<NodeId, bool>,
    self_complete: bool,
}

impl NodeRuntime {
    pub fn new(
        id: NodeId,
        neighbors: impl IntoIterator<Item = NodeId>,
        max_round: u32,
        state: ParamVector,
    ) -> Result<Self> {
        let mut peer_state = BTreeMap::new();
        let mut peer_complete = BTreeMap::new();
        for n in neighbors {
            if n == id {
                return Err(Error::InvalidArgument(format!(
                    "node {id} cannot be its own neighbor"
                )));
            }
            peer_state.insert(n, None);
            peer_complete.insert(n, false);
        }
        if peer_state.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "node {id} needs a non-empty neighbor set"
            )));
        }
        Ok(NodeRuntime {
            id,
            round: 0,
            max_round,
            state,
            peer_state,
            peer_complete,
            self_complete: false,
        })
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    pub fn max_round(&self) -> u32 {
        self.max_round
    }

    pub fn state(&self) -> &ParamVector {
        &self.state
    }

    pub fn set_state(&mut self, state: ParamVector) {
        self.state = state;
    }

    pub fn neighbors(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.peer_state.keys().copied()
    }

    pub fn neighbor_count(&self) -> usize {
        self.peer_state.len()
    }

    /// True once the round counter reached the termination bound.
    pub fn is_finished(&self) -> bool {
        self.round >= self.max_round
    }

    /// Whether this node already ran its update in the current round.
    pub fn self_complete(&self) -> bool {
        self.self_complete
    }

    /// Completion flags per neighbor, ascending id.
    pub fn completion_flags(&self) -> Vec<(NodeId, bool)> {
        self.peer_complete.iter().map(|(id, c)| (*id, *c)).collect()
    }

    /// Slot occupancy per neighbor, ascending id.
    pub fn filled_slots(&self) -> Vec<(NodeId, bool)> {
        self.peer_state
            .iter()
            .map(|(id, s)| (*id, s.is_some()))
            .collect()
    }

    /// The protocol's opening broadcast: `(state, 0)`.
    pub fn initial_message(&self) -> Message {
        Message::state(self.id, 0, self.state.clone())
    }

    /// Apply one received message. Pure with respect to I/O; identical
    /// (runtime, message) pairs produce identical action lists and identical
    /// successor runtimes. Messages arriving after termination are ignored.
    pub fn handle_message(&mut self, msg: &Message) -> Result<Vec<Action>> {
        if !self.peer_state.contains_key(&msg.sender) {
            return Err(Error::Protocol(format!(
                "node {}: message from unknown sender {}",
                self.id, msg.sender
            )));
        }
        if self.is_finished() {
            return Ok(Vec::new());
        }
        let mut actions = Vec::new();
        match &msg.body {
            MessageBody::RoundComplete => {
                *self.peer_complete.get_mut(&msg.sender).unwrap() = true;
                actions.push(Action::MarkComplete(msg.sender));
            }
            MessageBody::State(params) => {
                if !params.same_layout(&self.state) {
                    return Err(Error::Protocol(format!(
                        "node {}: state from {} has layout ({}, {}), expected ({}, {})",
                        self.id,
                        msg.sender,
                        params.mu.len(),
                        params.rho.len(),
                        self.state.mu.len(),
                        self.state.rho.len()
                    )));
                }
                if self.round < msg.round {
                    self.finish_round(&mut actions);
                }
                *self.peer_state.get_mut(&msg.sender).unwrap() = Some(params.clone());
                actions.push(Action::StoreState(msg.sender));
            }
        }

        if !self.is_finished() && self.peer_state.values().all(|s| s.is_some()) {
            let peers: Vec<(NodeId, ParamVector)> = self
                .peer_state
                .iter_mut()
                .map(|(id, slot)| (*id, slot.take().unwrap()))
                .collect();
            self.self_complete = true;
            let round = self.round;
            actions.push(Action::DoUpdate { peers });
            actions.push(Action::Send(Outbound::RoundComplete { round }));
        }

        if !self.is_finished() && self.self_complete && self.peer_complete.values().all(|c| *c) {
            self.finish_round(&mut actions);
        }
        Ok(actions)
    }

    fn finish_round(&mut self, actions: &mut Vec<Action>) {
        for flag in self.peer_complete.values_mut() {
            *flag = false;
        }
        self.self_complete = false;
        self.round += 1;
        actions.push(Action::FinishRound);
        actions.push(Action::Send(Outbound::State { round: self.round }));
    }
}
