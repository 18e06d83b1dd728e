//! Flat parameter vectors and their wire serialization.

use crate::error::{Error, Result};

/// All parameters of a model flattened into two sections.
///
/// Layout is deterministic: layers in ascending order, and within a layer
/// weights in row-major order followed by biases. The `mu` section holds the
/// Gaussian means (plus any deterministic layer's plain weights); the `rho`
/// section holds the unconstrained spread parameters of Bayesian layers only.
/// Two nodes built from the same architecture description therefore agree on
/// the meaning of every index.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub mu: Vec<f64>,
    pub rho: Vec<f64>,
}

impl ParamVector {
    pub fn new(mu: Vec<f64>, rho: Vec<f64>) -> Self {
        ParamVector { mu, rho }
    }

    pub fn zeros(mu_len: usize, rho_len: usize) -> Self {
        ParamVector {
            mu: vec![0.0; mu_len],
            rho: vec![0.0; rho_len],
        }
    }

    pub fn zeros_like(other: &ParamVector) -> Self {
        Self::zeros(other.mu.len(), other.rho.len())
    }

    pub fn same_layout(&self, other: &ParamVector) -> bool {
        self.mu.len() == other.mu.len() && self.rho.len() == other.rho.len()
    }

    pub fn is_finite(&self) -> bool {
        self.mu.iter().chain(self.rho.iter()).all(|v| v.is_finite())
    }

    /// Serialized size in bytes: two u32 counts plus one f64 per entry.
    pub fn byte_len(&self) -> usize {
        8 + 8 * (self.mu.len() + self.rho.len())
    }

    /// Wire form: `u32 mu_count, u32 rho_count`, then all values as little-endian f64,
    /// mu section first.
    pub fn write_bytes(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.mu.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.rho.len() as u32).to_le_bytes());
        for v in self.mu.iter().chain(self.rho.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        self.write_bytes(&mut out);
        out
    }

    /// Parse a serialized vector, consuming the whole buffer.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (pv, used) = Self::read_bytes(bytes)?;
        if used != bytes.len() {
            return Err(Error::Decode(format!(
                "trailing bytes after parameter vector: {} of {}",
                bytes.len() - used,
                bytes.len()
            )));
        }
        Ok(pv)
    }

    /// Parse a serialized vector from the front of `bytes`; returns bytes consumed.
    pub fn read_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        if bytes.len() < 8 {
            return Err(Error::Decode(format!(
                "parameter vector header needs 8 bytes, got {}",
                bytes.len()
            )));
        }
        let mu_count = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let rho_count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let need = 8 + 8 * (mu_count + rho_count);
        if bytes.len() < need {
            return Err(Error::Decode(format!(
                "parameter vector needs {} bytes, got {}",
                need,
                bytes.len()
            )));
        }
        let mut read_f64 = {
            let mut off = 8;
            move |bytes: &[u8]| {
                let v = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
                off += 8;
                v
            }
        };
        let mu = (0..mu_count).map(|_| read_f64(bytes)).collect();
        let rho = (0..rho_count).map(|_| read_f64(bytes)).collect();
        Ok((ParamVector { mu, rho }, need))
    }
}
