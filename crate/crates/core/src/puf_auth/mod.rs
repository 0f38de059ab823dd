//! PUF emulation and license-based authentication of DAO originators.
//!
//! A node's license is `challenge XOR response`, where the response comes from
//! the node's PUF. The border router keeps the `(challenge, response)` pair
//! recorded at registration and recovers the response from a received
//! license as `challenge XOR license`; the node is accepted when the recovered
//! response equals the stored one.

mod bits;
mod cipher;
mod database;
mod device;

pub use bits::{generate_license, recover_response, Challenge, License, Response, Width};
pub use cipher::{
    decrypt_license, encrypt_license, EncryptedLicense, HashStreamCipher, LicenseCipher, Nonce, SharedKey, NONCE_LEN,
    SHARED_KEY_LEN,
};
pub use database::{CrDatabase, CrPair, Verdict};
pub use device::PufDevice;

use crate::messages::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum PufError {
    #[error("license width must be a multiple of 8 in 8..=64, got {0}")]
    InvalidWidth(u32),
    #[error("value {value:#x} does not fit in {width} bits")]
    ValueOutOfRange { value: u64, width: u8 },
    #[error("device for node {node} has no response recorded for challenge {challenge:#x}")]
    MissingCrp { node: NodeId, challenge: u64 },
    #[error("node {0} is already registered")]
    AlreadyRegistered(NodeId),
    #[error("challenge-response database is full (capacity {0})")]
    CapacityExceeded(usize),
    #[error("device width {device} does not match database width {database}")]
    WidthMismatch { device: u8, database: u8 },
    #[error("malformed encrypted license: {0}")]
    Decode(String),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
