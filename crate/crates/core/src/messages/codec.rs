//! Bit-exact wire layout for DAO and DAO-ACK/NACK.
//!
//! DAO (36 octets, plus `1 + n` when `n > 0` option bytes are present):
//!
//! ```text
//!  0      instance id (always 0)
//!  1      flags: K (0x80) set, all other bits clear
//!  2      Reserved: the license
//!  3      DAO sequence
//!  4..20  target address
//! 20..36  source (claimed originator) address
//! 36      option length n (only present when n > 0)
//! 37..    option bytes
//! ```
//!
//! DAO-ACK / DAO-NACK (20 octets):
//!
//! ```text
//!  0      instance id (always 0)
//!  1      flags (0)
//!  2      DAO sequence being acknowledged
//!  3      status: 0 = ACK, >= 128 = NACK
//!  4..20  originator address
//! ```

use super::{Address, DaoModified, DaoStatus};
use crate::puf_auth::License;

pub const DAO_FIXED_LEN: usize = 36;
pub const STATUS_LEN: usize = 20;
pub const MAX_OPTIONS_LEN: usize = 255;
pub const INSTANCE_ID: u8 = 0;
pub const FLAG_K: u8 = 0x80;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("buffer too short: {got} bytes, need at least {need}")]
    Short { got: usize, need: usize },
    #[error("option length {declared} does not match {available} trailing bytes")]
    BadOptionLength { declared: usize, available: usize },
    #[error("options too long to encode: {0} bytes (max 255)")]
    OptionsTooLong(usize),
    #[error("unexpected instance id {0}")]
    BadInstance(u8),
    #[error("unexpected flags {0:#04x}")]
    BadFlags(u8),
    #[error("status {0} is neither ACK (0) nor NACK (>= 128)")]
    BadStatus(u8),
}

pub fn encode_dao(m: &DaoModified) -> Result<Vec<u8>, CodecError> {
    if m.options.len() > MAX_OPTIONS_LEN {
        return Err(CodecError::OptionsTooLong(m.options.len()));
    }
    let extra = if m.options.is_empty() { 0 } else { 1 + m.options.len() };
    let mut out = Vec::with_capacity(DAO_FIXED_LEN + extra);
    out.push(INSTANCE_ID);
    out.push(FLAG_K);
    out.push(m.reserved.value() as u8);
    out.push(m.sequence);
    out.extend_from_slice(m.target.octets());
    out.extend_from_slice(m.src.octets());
    if !m.options.is_empty() {
        out.push(m.options.len() as u8);
        out.extend_from_slice(&m.options);
    }
    Ok(out)
}

fn address_at(buf: &[u8], at: usize) -> Address {
    let mut a = [0u8; 16];
    a.copy_from_slice(&buf[at..at + 16]);
    Address(a)
}

pub fn decode_dao(buf: &[u8]) -> Result<DaoModified, CodecError> {
    if buf.len() < DAO_FIXED_LEN {
        return Err(CodecError::Short { got: buf.len(), need: DAO_FIXED_LEN });
    }
    if buf[0] != INSTANCE_ID {
        return Err(CodecError::BadInstance(buf[0]));
    }
    if buf[1] != FLAG_K {
        return Err(CodecError::BadFlags(buf[1]));
    }
    let options = if buf.len() == DAO_FIXED_LEN {
        Vec::new()
    } else {
        let declared = buf[DAO_FIXED_LEN] as usize;
        let available = buf.len() - DAO_FIXED_LEN - 1;
        // a zero length byte would alias the option-less encoding
        if declared == 0 || declared != available {
            return Err(CodecError::BadOptionLength { declared, available });
        }
        buf[DAO_FIXED_LEN + 1..].to_vec()
    };
    Ok(DaoModified {
        reserved: License::from_u8(buf[2]),
        sequence: buf[3],
        target: address_at(buf, 4),
        src: address_at(buf, 20),
        options,
    })
}

pub fn encode_status(s: &DaoStatus) -> Vec<u8> {
    let mut out = Vec::with_capacity(STATUS_LEN);
    out.push(INSTANCE_ID);
    out.push(0);
    out.push(s.sequence);
    out.push(s.status);
    out.extend_from_slice(s.originator.octets());
    out
}

pub fn decode_status(buf: &[u8]) -> Result<DaoStatus, CodecError> {
    if buf.len() != STATUS_LEN {
        return Err(CodecError::Short { got: buf.len(), need: STATUS_LEN });
    }
    if buf[0] != INSTANCE_ID {
        return Err(CodecError::BadInstance(buf[0]));
    }
    if buf[1] != 0 {
        return Err(CodecError::BadFlags(buf[1]));
    }
    let status = buf[3];
    if status != 0 && status < super::STATUS_NACK_MIN {
        return Err(CodecError::BadStatus(status));
    }
    Ok(DaoStatus { sequence: buf[2], status, originator: address_at(buf, 4) })
}

pub fn to_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
