//! Datagram transport over UDP sockets.
//!
//! Frames larger than a single datagram are split into fragments, each
//! prefixed with `[u32 frame_len][u32 offset]` (little-endian). The receiver
//! reassembles per sender; an offset-0 fragment always starts a fresh frame,
//! so a lost fragment costs at most the frame it belonged to. There is no
//! retransmission; reliability is out of scope for the protocol itself.

use std::collections::HashMap;
use std::net::{SocketAddr, UdpSocket};
use std::time::Duration;

use super::message::{decode_message, encode_message, Message, MAX_FRAME_LEN};
use super::node::Transport;
use crate::error::{Error, Result};

const FRAG_HEADER: usize = 8;
/// Payload bytes per datagram; safely under the UDP maximum.
const FRAG_PAYLOAD: usize = 60_000;

struct Reassembly {
    frame_len: usize,
    buf: Vec<u8>,
    received: usize,
}

pub struct UdpTransport {
    socket: UdpSocket,
    neighbors: Vec<SocketAddr>,
    partial: HashMap<SocketAddr, Reassembly>,
    recv_buf: Vec<u8>,
}

impl UdpTransport {
    /// Bind to `local` and broadcast to `neighbors`. `recv_timeout` bounds
    /// each blocking receive; elapsing it is a transport error.
    pub fn bind(
        local: SocketAddr,
        neighbors: Vec<SocketAddr>,
        recv_timeout: Duration,
    ) -> Result<Self> {
        let socket = UdpSocket::bind(local)
            .map_err(|e| Error::Transport(format!("bind {local}: {e}")))?;
        socket
            .set_read_timeout(Some(recv_timeout))
            .map_err(|e| Error::Transport(format!("set timeout: {e}")))?;
        Ok(UdpTransport {
            socket,
            neighbors,
            partial: HashMap::new(),
            recv_buf: vec![0u8; FRAG_HEADER + FRAG_PAYLOAD],
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        self.socket
            .local_addr()
            .map_err(|e| Error::Transport(format!("local_addr: {e}")))
    }

    fn feed_fragment(&mut self, from: SocketAddr, datagram: &[u8]) -> Result<Option<Message>> {
        if datagram.len() < FRAG_HEADER {
            return Err(Error::Decode(format!(
                "fragment of {} bytes is shorter than its header",
                datagram.len()
            )));
        }
        let frame_len = u32::from_le_bytes(datagram[0..4].try_into().unwrap()) as usize;
        let offset = u32::from_le_bytes(datagram[4..8].try_into().unwrap()) as usize;
        let chunk = &datagram[FRAG_HEADER..];
        if frame_len > MAX_FRAME_LEN {
            return Err(Error::Decode(format!("fragmented frame length {frame_len} exceeds cap")));
        }
        if offset + chunk.len() > frame_len {
            return Err(Error::Decode("fragment overruns its frame".into()));
        }
        if offset == 0 {
            // A fresh frame; any partial predecessor from this sender is lost.
            self.partial.insert(
                from,
                Reassembly {
                    frame_len,
                    buf: vec![0u8; frame_len],
                    received: 0,
                },
            );
        }
        let Some(entry) = self.partial.get_mut(&from) else {
            // Tail fragment of a frame whose start we never saw; drop it.
            return Ok(None);
        };
        if entry.frame_len != frame_len {
            self.partial.remove(&from);
            return Ok(None);
        }
        entry.buf[offset..offset + chunk.len()].copy_from_slice(chunk);
        entry.received += chunk.len();
        if entry.received >= entry.frame_len {
            let entry = self.partial.remove(&from).unwrap();
            return decode_message(&entry.buf).map(Some);
        }
        Ok(None)
    }
}

impl Transport for UdpTransport {
    fn broadcast(&mut self, msg: &Message) -> Result<()> {
        let frame = encode_message(msg);
        let mut datagram = Vec::with_capacity(FRAG_HEADER + FRAG_PAYLOAD.min(frame.len()));
        for offset in (0..frame.len()).step_by(FRAG_PAYLOAD) {
            let end = (offset + FRAG_PAYLOAD).min(frame.len());
            datagram.clear();
            datagram.extend_from_slice(&(frame.len() as u32).to_le_bytes());
            datagram.extend_from_slice(&(offset as u32).to_le_bytes());
            datagram.extend_from_slice(&frame[offset..end]);
            for addr in &self.neighbors {
                self.socket
                    .send_to(&datagram, addr)
                    .map_err(|e| Error::Transport(format!("send to {addr}: {e}")))?;
            }
        }
        Ok(())
    }

    fn receive(&mut self) -> Result<Message> {
        loop {
            let mut buf = std::mem::take(&mut self.recv_buf);
            let result = self.socket.recv_from(&mut buf);
            self.recv_buf = buf;
            let (len, from) = result.map_err(|e| {
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut
                {
                    Error::Transport("receive timed out".into())
                } else {
                    Error::Transport(format!("recv: {e}"))
                }
            })?;
            let datagram = self.recv_buf[..len].to_vec();
            if let Some(msg) = self.feed_fragment(from, &datagram)? {
                return Ok(msg);
            }
        }
    }
}
