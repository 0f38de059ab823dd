use std::fmt;

use super::PufError;

/// Bit width shared by challenges, responses and licenses.
///
/// The DAO Reserved octet fits exactly 8 bits; wider licenses travel in the
/// DAO options field (encrypted mode only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Width(u8);

impl Width {
    pub const W8: Width = Width(8);

    pub fn new(bits: u32) -> Result<Self, PufError> {
        if (8..=64).contains(&bits) && bits.is_multiple_of(8) {
            Ok(Width(bits as u8))
        } else {
            Err(PufError::InvalidWidth(bits))
        }
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn bytes(self) -> usize {
        self.0 as usize / 8
    }

    pub fn mask(self) -> u64 {
        if self.0 == 64 {
            u64::MAX
        } else {
            (1u64 << self.0) - 1
        }
    }
}

impl Default for Width {
    fn default() -> Self {
        Width::W8
    }
}

macro_rules! word_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name {
            value: u64,
            width: Width,
        }

        impl $name {
            pub fn new(value: u64, width: Width) -> Result<Self, PufError> {
                if value & !width.mask() != 0 {
                    return Err(PufError::ValueOutOfRange { value, width: width.bits() });
                }
                Ok(Self { value, width })
            }

            /// 8-bit value, the width carried in the DAO Reserved octet.
            pub const fn from_u8(value: u8) -> Self {
                Self { value: value as u64, width: Width::W8 }
            }

            pub fn value(self) -> u64 {
                self.value
            }

            pub fn width(self) -> Width {
                self.width
            }

            /// Big-endian byte image, `width / 8` bytes long.
            pub fn to_be_bytes(self) -> Vec<u8> {
                self.value.to_be_bytes()[8 - self.width.bytes()..].to_vec()
            }

            pub fn from_be_bytes(bytes: &[u8]) -> Result<Self, PufError> {
                let width = Width::new(bytes.len() as u32 * 8)?;
                let mut buf = [0u8; 8];
                buf[8 - bytes.len()..].copy_from_slice(bytes);
                Self::new(u64::from_be_bytes(buf), width)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:0w$b}", self.value, w = self.width.bits() as usize)
            }
        }
    };
}

word_type!(
    /// Random value presented to a PUF at registration.
    Challenge
);
word_type!(
    /// Device-unique PUF output for a challenge.
    Response
);
word_type!(
    /// Authentication code provisioned onto a node: challenge XOR response.
    License
);

/// `License = challenge XOR response`.
///
/// Panics if the two operands have different widths.
pub fn generate_license(ch: Challenge, r: Response) -> License {
    assert_eq!(ch.width, r.width, "challenge and response widths differ");
    License { value: ch.value ^ r.value, width: ch.width }
}

/// `response = challenge XOR license`, the inverse of [`generate_license`].
///
/// Panics if the two operands have different widths.
pub fn recover_response(ch: Challenge, l: License) -> Response {
    assert_eq!(ch.width, l.width, "challenge and license widths differ");
    Response { value: ch.value ^ l.value, width: ch.width }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_license() {
        let ch = Challenge::from_u8(0b0111_0101);
        let r = Response::from_u8(0b1011_0101);
        let l = generate_license(ch, r);
        assert_eq!(l, License::from_u8(0b1100_0000));
        assert_eq!(l.to_string(), "11000000");
        assert_eq!(recover_response(ch, l), r);
    }

    #[test]
    fn self_xor_is_zero() {
        for x in 0..=255u8 {
            let l = generate_license(Challenge::from_u8(x), Response::from_u8(x));
            assert_eq!(l.value(), 0);
        }
    }

    #[test]
    fn zero_license_recovers_challenge() {
        let ch = Challenge::from_u8(0x5a);
        assert_eq!(recover_response(ch, License::from_u8(0)).value(), 0x5a);
    }

    #[test]
    fn exhaustive_against_bitwise_oracle() {
        for ch in 0..=255u8 {
            for r in 0..=255u8 {
                // per-bit reference: a bit is set iff exactly one operand has it
                let mut oracle = 0u8;
                for bit in 0..8 {
                    let a = (ch >> bit) & 1;
                    let b = (r >> bit) & 1;
                    if a != b {
                        oracle |= 1 << bit;
                    }
                }
                let l = generate_license(Challenge::from_u8(ch), Response::from_u8(r));
                assert_eq!(l.value(), oracle as u64);
                assert_eq!(recover_response(Challenge::from_u8(ch), l).value(), r as u64);
            }
        }
    }

    #[test]
    fn width_validation() {
        assert!(Width::new(8).is_ok());
        assert!(Width::new(64).is_ok());
        assert!(matches!(Width::new(12), Err(PufError::InvalidWidth(12))));
        assert!(matches!(Width::new(0), Err(PufError::InvalidWidth(0))));
        assert!(matches!(Width::new(72), Err(PufError::InvalidWidth(72))));
        assert!(Challenge::new(256, Width::W8).is_err());
        assert!(Challenge::new(255, Width::W8).is_ok());
    }

    #[test]
    fn byte_image_round_trip() {
        let w = Width::new(16).unwrap();
        let l = License::new(0xbeef, w).unwrap();
        assert_eq!(l.to_be_bytes(), vec![0xbe, 0xef]);
        assert_eq!(License::from_be_bytes(&[0xbe, 0xef]).unwrap(), l);
    }

    #[test]
    #[should_panic]
    fn mixed_widths_panic() {
        let ch = Challenge::new(1, Width::new(16).unwrap()).unwrap();
        generate_license(ch, Response::from_u8(1));
    }
}
