//! Protocol messages and their wire codec.
//!
//! Wire format (all integers little-endian):
//!
//! ```text
//! [u32 total_length][u32 sender_id][u8 kind][u32 round]
//! [if kind == STATE: u32 mu_count, u32 rho_count, (mu_count + rho_count) x f64]
//! ```
//!
//! `total_length` counts the entire frame including itself, so a
//! ROUND_COMPLETE frame is exactly 13 bytes. The state section is the
//! parameter-vector serialization used everywhere else. Decoding is total: any
//! byte string either parses or returns a decode error, never panics.

use crate::bayesian_nn::ParamVector;
use crate::error::{Error, Result};

pub type NodeId = u32;

const KIND_STATE: u8 = 0;
const KIND_ROUND_COMPLETE: u8 = 1;
const HEADER_LEN: usize = 13;

/// Hard cap on accepted frames; prevents allocation bombs from hostile
/// length fields.
pub const MAX_FRAME_LEN: usize = 64 * 1024 * 1024;

/// A state payload is present exactly when the message kind is STATE.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageBody {
    State(ParamVector),
    RoundComplete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: NodeId,
    pub round: u32,
    pub body: MessageBody,
}

impl Message {
    pub fn state(sender: NodeId, round: u32, params: ParamVector) -> Self {
        Message {
            sender,
            round,
            body: MessageBody::State(params),
        }
    }

    pub fn round_complete(sender: NodeId, round: u32) -> Self {
        Message {
            sender,
            round,
            body: MessageBody::RoundComplete,
        }
    }

    pub fn is_round_complete(&self) -> bool {
        matches!(self.body, MessageBody::RoundComplete)
    }
}

/// Encode into a self-delimiting frame.
pub fn encode_message(msg: &Message) -> Vec<u8> {
    let payload_len = match &msg.body {
        MessageBody::State(pv) => pv.byte_len(),
        MessageBody::RoundComplete => 0,
    };
    let total = HEADER_LEN + payload_len;
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&msg.sender.to_le_bytes());
    out.push(match &msg.body {
        MessageBody::State(_) => KIND_STATE,
        MessageBody::RoundComplete => KIND_ROUND_COMPLETE,
    });
    out.extend_from_slice(&msg.round.to_le_bytes());
    if let MessageBody::State(pv) = &msg.body {
        pv.write_bytes(&mut out);
    }
    out
}

/// Decode one frame, requiring the buffer to contain exactly that frame.
pub fn decode_message(bytes: &[u8]) -> Result<Message> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Decode(format!(
            "frame needs at least {HEADER_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    let total = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
    if total > MAX_FRAME_LEN {
        return Err(Error::Decode(format!("frame length {total} exceeds cap")));
    }
    if total != bytes.len() {
        return Err(Error::Decode(format!(
            "frame length field {total} does not match buffer length {}",
            bytes.len()
        )));
    }
    let sender = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let kind = bytes[8];
    let round = u32::from_le_bytes(bytes[9..13].try_into().unwrap());
    let payload = &bytes[13..];
    match kind {
        KIND_STATE => {
            let params = ParamVector::from_bytes(payload)?;
            Ok(Message::state(sender, round, params))
        }
        KIND_ROUND_COMPLETE => {
            if !payload.is_empty() {
                return Err(Error::Decode(format!(
                    "round-complete frame carries {} unexpected payload bytes",
                    payload.len()
                )));
            }
            Ok(Message::round_complete(sender, round))
        }
        other => Err(Error::Decode(format!("unknown message kind tag {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn round_complete_frame_is_13_bytes() {
        let bytes = encode_message(&Message::round_complete(7, 3));
        assert_eq!(bytes.len(), 13);
        assert_eq!(&bytes[0..4], &13u32.to_le_bytes());
        assert_eq!(&bytes[4..8], &7u32.to_le_bytes());
        assert_eq!(bytes[8], KIND_ROUND_COMPLETE);
        assert_eq!(&bytes[9..13], &3u32.to_le_bytes());
    }

    #[test]
    fn state_round_trip() {
        let pv = ParamVector::new((0..60).map(|i| i as f64 * 0.25).collect(), vec![1.5; 40]);
        let msg = Message::state(42, 9, pv);
        let decoded = decode_message(&encode_message(&msg)).unwrap();
        assert_eq!(decoded, msg);
    }

    #[test]
    fn empty_input_is_a_decode_error() {
        assert!(matches!(decode_message(&[]), Err(Error::Decode(_))));
    }

    #[test]
    fn truncation_is_a_decode_error() {
        let bytes = encode_message(&Message::state(1, 2, ParamVector::new(vec![1.0], vec![2.0])));
        for cut in 0..bytes.len() {
            assert!(decode_message(&bytes[..cut]).is_err(), "cut {cut}");
        }
    }

    #[test]
    fn unknown_kind_is_a_decode_error() {
        let mut bytes = encode_message(&Message::round_complete(1, 2));
        bytes[8] = 77;
        assert!(matches!(decode_message(&bytes), Err(Error::Decode(_))));
    }

    #[test]
    fn hostile_length_field_is_rejected_without_allocation() {
        let mut bytes = encode_message(&Message::round_complete(1, 2));
        bytes[0..4].copy_from_slice(&u32::MAX.to_le_bytes());
        assert!(decode_message(&bytes).is_err());
    }

    proptest! {
        #[test]
        fn decode_never_panics_on_arbitrary_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let _ = decode_message(&bytes);
        }

        #[test]
        fn encode_decode_identity(
            sender in any::<u32>(),
            round in any::<u32>(),
            complete in any::<bool>(),
            mu in proptest::collection::vec(-1e9f64..1e9, 0..32),
            rho in proptest::collection::vec(-40.0f64..40.0, 0..32),
        ) {
            let msg = if complete {
                Message::round_complete(sender, round)
            } else {
                Message::state(sender, round, ParamVector::new(mu, rho))
            };
            prop_assert_eq!(decode_message(&encode_message(&msg)).unwrap(), msg);
        }
    }
}
