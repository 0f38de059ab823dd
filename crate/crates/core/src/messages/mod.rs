//! RPL control messages exchanged by the simulator.
//!
//! DIS and DIO only exist as in-memory values. DAO and DAO-ACK/NACK have a
//! fixed binary layout (see [`codec`]) that the trace logger dumps as hex.

pub mod codec;

use std::fmt;
use std::net::Ipv6Addr;

use crate::puf_auth::License;

pub use codec::{decode_dao, decode_status, encode_dao, encode_status, CodecError};

/// Simulation-wide node identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u16);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// 16-octet IPv6-style node address.
///
/// Real nodes live in `fd00::<id>`; attacker-invented identities are drawn
/// from `fd00::fffe:0:0/96` and therefore never collide with a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address(pub [u8; 16]);

const FORGED_MARK: [u8; 2] = [0xff, 0xfe];

impl Address {
    pub fn of_node(id: NodeId) -> Self {
        let mut b = [0u8; 16];
        b[0] = 0xfd;
        b[14..16].copy_from_slice(&id.0.to_be_bytes());
        Address(b)
    }

    pub fn forged(suffix: u32) -> Self {
        let mut b = [0u8; 16];
        b[0] = 0xfd;
        b[10..12].copy_from_slice(&FORGED_MARK);
        b[12..16].copy_from_slice(&suffix.to_be_bytes());
        Address(b)
    }

    /// Node id when the address is in the node block.
    pub fn node_id(&self) -> Option<NodeId> {
        let b = &self.0;
        if b[0] == 0xfd && b[1..14].iter().all(|&x| x == 0) {
            Some(NodeId(u16::from_be_bytes([b[14], b[15]])))
        } else {
            None
        }
    }

    pub fn is_forged_block(&self) -> bool {
        let b = &self.0;
        b[0] == 0xfd && b[1..10].iter().all(|&x| x == 0) && b[10..12] == FORGED_MARK
    }

    pub fn octets(&self) -> &[u8; 16] {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Ipv6Addr::from(self.0).fmt(f)
    }
}

/// Objective function code point; MRHOF is 1.
pub const OF_MRHOF: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DisMessage {
    pub sender: Address,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DioMessage {
    pub sender: Address,
    pub dodag_id: Address,
    pub version: u8,
    pub rank: u16,
    pub of_id: u16,
}

/// DAO with the license in the Reserved octet (plain mode) or an encrypted
/// license in `options` (encrypted mode, Reserved = 0).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DaoModified {
    /// Claimed originator of the DAO.
    pub src: Address,
    /// Advertised destination.
    pub target: Address,
    pub sequence: u8,
    pub reserved: License,
    pub options: Vec<u8>,
}

impl DaoModified {
    pub fn plain(src: Address, target: Address, sequence: u8, license: License) -> Self {
        DaoModified { src, target, sequence, reserved: license, options: Vec::new() }
    }

    pub fn encrypted(src: Address, target: Address, sequence: u8, options: Vec<u8>) -> Self {
        DaoModified { src, target, sequence, reserved: License::from_u8(0), options }
    }
}

pub const STATUS_ACK: u8 = 0;
/// First rejection status; RFC 6550 reserves 128..=255 for rejects.
pub const STATUS_NACK_MIN: u8 = 128;
/// Status sent when license verification fails.
pub const STATUS_NACK_AUTH: u8 = 0xe0;

/// DAO-ACK (status 0) or DAO-NACK (status >= 128).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DaoStatus {
    pub originator: Address,
    pub sequence: u8,
    pub status: u8,
}

impl DaoStatus {
    pub fn ack(originator: Address, sequence: u8) -> Self {
        DaoStatus { originator, sequence, status: STATUS_ACK }
    }

    pub fn nack(originator: Address, sequence: u8) -> Self {
        DaoStatus { originator, sequence, status: STATUS_NACK_AUTH }
    }

    pub fn is_nack(&self) -> bool {
        self.status >= STATUS_NACK_MIN
    }

    pub fn is_ack(&self) -> bool {
        self.status == STATUS_ACK
    }
}
