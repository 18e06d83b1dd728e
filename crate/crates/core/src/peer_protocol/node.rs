//! Driving a node: action execution, the update callback, and the blocking
//! receive loop used with real transports.

use super::message::{Message, NodeId};
use super::runtime::{Action, NodeRuntime, Outbound};
use crate::bayesian_nn::ParamVector;
use crate::error::{Error, Result};

/// Per-round update invoked when all neighbor states arrived. Receives the
/// current round, the node's own state and the peer states in ascending id
/// order; returns the node's new state. This is where the consensus update
/// and the local optimization run.
pub type UpdateCallback<'a> =
    Box<dyn FnMut(u32, &ParamVector, &[(NodeId, ParamVector)]) -> Result<ParamVector> + Send + 'a>;

/// Delivers broadcasts to all neighbors and blocks for incoming messages.
pub trait Transport {
    fn broadcast(&mut self, msg: &Message) -> Result<()>;
    fn receive(&mut self) -> Result<Message>;
}

/// A protocol runtime coupled with its update callback.
pub struct NodeHandle<'a> {
    runtime: NodeRuntime,
    on_update: UpdateCallback<'a>,
    update_count: u32,
}

impl<'a> NodeHandle<'a> {
    pub fn new(runtime: NodeRuntime, on_update: UpdateCallback<'a>) -> Self {
        NodeHandle {
            runtime,
            on_update,
            update_count: 0,
        }
    }

    pub fn runtime(&self) -> &NodeRuntime {
        &self.runtime
    }

    pub fn id(&self) -> NodeId {
        self.runtime.id()
    }

    pub fn is_finished(&self) -> bool {
        self.runtime.is_finished()
    }

    /// How many times the node update has run.
    pub fn update_count(&self) -> u32 {
        self.update_count
    }

    pub fn initial_message(&self) -> Message {
        self.runtime.initial_message()
    }

    pub fn state(&self) -> &ParamVector {
        self.runtime.state()
    }

    pub fn into_state(self) -> ParamVector {
        let NodeHandle { runtime, .. } = self;
        runtime.state().clone()
    }

    /// Handle one message: run the state machine, execute its actions, and
    /// return the broadcasts to send. Callback failures carry the round.
    pub fn on_message(&mut self, msg: &Message) -> Result<Vec<Message>> {
        let actions = self.runtime.handle_message(msg)?;
        let mut outbox = Vec::new();
        for action in actions {
            match action {
                Action::StoreState(_) | Action::MarkComplete(_) | Action::FinishRound => {}
                Action::DoUpdate { peers } => {
                    let round = self.runtime.round();
                    let new_state = (self.on_update)(round, self.runtime.state(), &peers)
                        .map_err(|e| Error::NodeUpdate {
                            round,
                            source: Box::new(e),
                        })?;
                    self.runtime.set_state(new_state);
                    self.update_count += 1;
                }
                Action::Send(out) => outbox.push(match out {
                    Outbound::State { round } => {
                        Message::state(self.id(), round, self.runtime.state().clone())
                    }
                    Outbound::RoundComplete { round } => Message::round_complete(self.id(), round),
                }),
            }
        }
        Ok(outbox)
    }
}

/// Blocking node loop: broadcast the initial state, then receive and react
/// until the round counter reaches its bound. Returns the final state.
pub fn run_node(handle: &mut NodeHandle<'_>, transport: &mut dyn Transport) -> Result<ParamVector> {
    transport.broadcast(&handle.initial_message())?;
    while !handle.is_finished() {
        let msg = transport.receive()?;
        for out in handle.on_message(&msg)? {
            transport.broadcast(&out)?;
        }
    }
    Ok(handle.state().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::VecDeque;

    fn pv(v: f64) -> ParamVector {
        ParamVector::new(vec![v], vec![])
    }

    /// In-memory transport for a deterministic two-node exchange: receives
    /// come from a scripted queue, broadcasts are recorded.
    struct Scripted {
        incoming: VecDeque<Message>,
        sent: Vec<Message>,
    }

    impl Transport for Scripted {
        fn broadcast(&mut self, msg: &Message) -> Result<()> {
            self.sent.push(msg.clone());
            Ok(())
        }
        fn receive(&mut self) -> Result<Message> {
            self.incoming
                .pop_front()
                .ok_or_else(|| Error::Transport("scripted queue exhausted".into()))
        }
    }

    fn mean_update(_: u32, own: &ParamVector, peers: &[(NodeId, ParamVector)]) -> Result<ParamVector> {
        let mut acc = own.clone();
        for (_, p) in peers {
            for (a, b) in acc.mu.iter_mut().zip(&p.mu) {
                *a += b;
            }
        }
        let n = (peers.len() + 1) as f64;
        for a in acc.mu.iter_mut() {
            *a /= n;
        }
        Ok(acc)
    }

    #[test]
    fn zero_rounds_returns_the_initial_state_immediately() {
        let rt = NodeRuntime::new(0, [1], 0, pv(4.0)).unwrap();
        let mut handle = NodeHandle::new(rt, Box::new(mean_update));
        let mut transport = Scripted {
            incoming: VecDeque::new(),
            sent: Vec::new(),
        };
        let state = run_node(&mut handle, &mut transport).unwrap();
        assert_eq!(state, pv(4.0));
        assert_eq!(handle.update_count(), 0);
        // The initial broadcast still happens before the loop.
        assert_eq!(transport.sent.len(), 1);
    }

    #[test]
    fn two_node_in_order_trace_runs_each_round_once() {
        // Drive node 0 against a scripted peer that behaves like a correct
        // node 1 over 2 rounds of in-order delivery.
        let rt = NodeRuntime::new(0, [1], 2, pv(0.0)).unwrap();
        let mut handle = NodeHandle::new(rt, Box::new(mean_update));
        let mut transport = Scripted {
            incoming: VecDeque::from(vec![
                Message::state(1, 0, pv(2.0)),
                Message::round_complete(1, 0),
                Message::state(1, 1, pv(2.0)),
                Message::round_complete(1, 1),
            ]),
            sent: Vec::new(),
        };
        let state = run_node(&mut handle, &mut transport).unwrap();
        assert_eq!(handle.update_count(), 2);
        assert_eq!(handle.runtime().round(), 2);
        // Round 0: mean(0, 2) = 1; round 1: mean(1, 2) = 1.5.
        assert_eq!(state, pv(1.5));
    }

    #[test]
    fn callback_errors_carry_the_round() {
        let rt = NodeRuntime::new(0, [1], 2, pv(0.0)).unwrap();
        let failing: UpdateCallback = Box::new(|_, _, _| {
            Err(Error::InvalidArgument("boom".into()))
        });
        let mut handle = NodeHandle::new(rt, failing);
        let err = handle
            .on_message(&Message::state(1, 0, pv(1.0)))
            .unwrap_err();
        match err {
            Error::NodeUpdate { round, .. } => assert_eq!(round, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
