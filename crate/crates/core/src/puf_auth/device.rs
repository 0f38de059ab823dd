use std::collections::BTreeMap;

use rand::Rng;
use sha2::{Digest, Sha256};

use super::{Challenge, PufError, Response, Width};
use crate::messages::NodeId;

const KEYED_DOMAIN: &[u8] = b"lisec-puf-v1";

/// Emulated PUF. Responses are noise-free and fully reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PufDevice {
    /// Explicit challenge -> response table.
    Table { node_id: NodeId, width: Width, crps: BTreeMap<u64, u64> },
    /// Keyed pseudorandom mapping: the first `width` bits of
    /// `SHA-256("lisec-puf-v1" || node_id || secret || challenge || width)`.
    Keyed { node_id: NodeId, width: Width, secret: [u8; 16] },
}

impl PufDevice {
    pub fn table(node_id: NodeId, width: Width, pairs: impl IntoIterator<Item = (u64, u64)>) -> Result<Self, PufError> {
        let mut crps = BTreeMap::new();
        for (ch, r) in pairs {
            Challenge::new(ch, width)?;
            Response::new(r, width)?;
            crps.insert(ch, r);
        }
        Ok(PufDevice::Table { node_id, width, crps })
    }

    pub fn keyed(node_id: NodeId, width: Width, secret: [u8; 16]) -> Self {
        PufDevice::Keyed { node_id, width, secret }
    }

    pub fn node_id(&self) -> NodeId {
        match self {
            PufDevice::Table { node_id, .. } | PufDevice::Keyed { node_id, .. } => *node_id,
        }
    }

    pub fn width(&self) -> Width {
        match self {
            PufDevice::Table { width, .. } | PufDevice::Keyed { width, .. } => *width,
        }
    }

    pub fn derive_response(&self, ch: Challenge) -> Result<Response, PufError> {
        assert_eq!(ch.width(), self.width(), "challenge width differs from device width");
        match self {
            PufDevice::Table { node_id, width, crps } => crps
                .get(&ch.value())
                .map(|&r| Response::new(r, *width).expect("validated at construction"))
                .ok_or(PufError::MissingCrp { node: *node_id, challenge: ch.value() }),
            PufDevice::Keyed { node_id, width, secret } => {
                let digest = Sha256::new()
                    .chain_update(KEYED_DOMAIN)
                    .chain_update(node_id.0.to_be_bytes())
                    .chain_update(secret)
                    .chain_update(ch.value().to_be_bytes())
                    .chain_update([width.bits()])
                    .finalize();
                let mut head = [0u8; 8];
                head.copy_from_slice(&digest[..8]);
                let value = u64::from_be_bytes(head) >> (64 - width.bits() as u32);
                Ok(Response::new(value, *width).expect("shifted into range"))
            }
        }
    }

    /// Draws a registration challenge: uniform over the table's recorded
    /// challenges, or uniform over all `2^width` values for keyed devices.
    pub fn draw_challenge<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Challenge, PufError> {
        match self {
            PufDevice::Table { node_id, width, crps } => {
                if crps.is_empty() {
                    return Err(PufError::MissingCrp { node: *node_id, challenge: 0 });
                }
                let idx = rng.random_range(0..crps.len());
                let ch = *crps.keys().nth(idx).expect("index in range");
                Ok(Challenge::new(ch, *width).expect("validated at construction"))
            }
            PufDevice::Keyed { width, .. } => {
                let v = rng.random::<u64>() & width.mask();
                Ok(Challenge::new(v, *width).expect("masked"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn secret() -> [u8; 16] {
        let mut s = [0u8; 16];
        for (i, b) in s.iter_mut().enumerate() {
            *b = i as u8;
        }
        s
    }

    #[test]
    fn table_device_worked_example() {
        let dev = PufDevice::table(NodeId(1), Width::W8, [(0b0111_0101, 0b1011_0101)]).unwrap();
        let r = dev.derive_response(Challenge::from_u8(0b0111_0101)).unwrap();
        assert_eq!(r, Response::from_u8(0b1011_0101));
    }

    #[test]
    fn table_device_missing_challenge() {
        let dev = PufDevice::table(NodeId(1), Width::W8, [(1, 2)]).unwrap();
        let err = dev.derive_response(Challenge::from_u8(3)).unwrap_err();
        assert!(matches!(err, PufError::MissingCrp { challenge: 3, .. }));
    }

    #[test]
    fn keyed_device_frozen_vectors() {
        // values from tests/oracles/puf_cipher_vectors.py
        let dev = PufDevice::keyed(NodeId(7), Width::W8, secret());
        let r = dev.derive_response(Challenge::from_u8(0x3a)).unwrap();
        assert_eq!(r.value(), 0xf6);

        let w16 = Width::new(16).unwrap();
        let dev16 = PufDevice::keyed(NodeId(7), w16, secret());
        let r16 = dev16.derive_response(Challenge::new(0x3a, w16).unwrap()).unwrap();
        assert_eq!(r16.value(), 0x3b1d);

        let other = PufDevice::keyed(NodeId(8), Width::W8, secret());
        assert_eq!(other.derive_response(Challenge::from_u8(0x3a)).unwrap().value(), 0xba);
    }

    #[test]
    fn derive_is_deterministic() {
        let dev = PufDevice::keyed(NodeId(3), Width::W8, [9; 16]);
        for ch in 0..=255u8 {
            let a = dev.derive_response(Challenge::from_u8(ch)).unwrap();
            let b = dev.clone().derive_response(Challenge::from_u8(ch)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn distinct_nodes_have_distinct_mappings() {
        let a = PufDevice::keyed(NodeId(3), Width::W8, [1; 16]);
        let b = PufDevice::keyed(NodeId(4), Width::W8, [2; 16]);
        let differing = (0..=255u8)
            .filter(|&c| {
                a.derive_response(Challenge::from_u8(c)).unwrap() != b.derive_response(Challenge::from_u8(c)).unwrap()
            })
            .count();
        // independent uniform 8-bit maps agree on ~1/256 of inputs
        assert!(differing > 240, "only {differing} of 256 responses differ");
    }
}
