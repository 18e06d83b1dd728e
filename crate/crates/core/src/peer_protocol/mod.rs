//! Round-synchronized asynchronous peer state exchange.
//!
//! Each node broadcasts its state, collects the states of all neighbors,
//! runs its update, signals completion, and advances to the next round once
//! everyone (itself included) is complete. The state machine is pure and
//! transport-agnostic; deterministic in-memory simulation and UDP datagrams
//! are provided as transports.

mod explore;
mod message;
mod node;
mod runtime;
mod sim;
mod udp;

pub use explore::{explore_all_interleavings, ExplorationReport};
pub use message::{decode_message, encode_message, Message, MessageBody, NodeId, MAX_FRAME_LEN};
pub use node::{run_node, NodeHandle, Transport, UpdateCallback};
pub use runtime::{Action, NodeRuntime, Outbound};
pub use sim::{DeliveryLogEntry, SimConfig, SimNet, SimReport};
pub use udp::UdpTransport;
