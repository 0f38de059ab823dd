use std::fmt;

use sha2::{Digest, Sha256};

use super::{License, PufError, Width};

pub const SHARED_KEY_LEN: usize = 16;
pub const NONCE_LEN: usize = 8;

const KEYSTREAM_DOMAIN: &[u8] = b"lisec-ks-v1";

/// Symmetric secret shared by one node and the border router. Never placed
/// in a frame.
#[derive(Clone, PartialEq, Eq)]
pub struct SharedKey([u8; SHARED_KEY_LEN]);

impl SharedKey {
    pub fn new(bytes: [u8; SHARED_KEY_LEN]) -> Self {
        SharedKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; SHARED_KEY_LEN] {
        &self.0
    }
}

impl fmt::Debug for SharedKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SharedKey(..)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Nonce(pub [u8; NONCE_LEN]);

impl From<u64> for Nonce {
    fn from(v: u64) -> Self {
        Nonce(v.to_be_bytes())
    }
}

/// `nonce || ciphertext`, carried in the DAO options field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncryptedLicense(Vec<u8>);

impl EncryptedLicense {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        EncryptedLicense(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }

    /// Encoded length for a license of `width`.
    pub fn encoded_len(width: Width) -> usize {
        NONCE_LEN + width.bytes()
    }
}

/// Cipher used by the encrypted license variant.
pub trait LicenseCipher {
    fn encrypt(&self, key: &SharedKey, license: License, nonce: Nonce) -> EncryptedLicense;

    fn decrypt(&self, key: &SharedKey, ciphertext: &EncryptedLicense, width: Width) -> Result<License, PufError>;
}

/// Nonce-based stream construction: keystream block `i` is
/// `SHA-256("lisec-ks-v1" || key || nonce || i)`, XORed over the license's
/// big-endian bytes. No authentication tag, so a wrong key yields a
/// uniformly scrambled license rather than an error.
#[derive(Debug, Clone, Copy, Default)]
pub struct HashStreamCipher;

impl HashStreamCipher {
    fn apply(key: &SharedKey, nonce: &[u8], data: &mut [u8]) {
        for (block, chunk) in data.chunks_mut(32).enumerate() {
            let ks = Sha256::new()
                .chain_update(KEYSTREAM_DOMAIN)
                .chain_update(key.as_bytes())
                .chain_update(nonce)
                .chain_update((block as u32).to_be_bytes())
                .finalize();
            for (b, k) in chunk.iter_mut().zip(ks.iter()) {
                *b ^= k;
            }
        }
    }
}

impl LicenseCipher for HashStreamCipher {
    fn encrypt(&self, key: &SharedKey, license: License, nonce: Nonce) -> EncryptedLicense {
        let mut body = license.to_be_bytes();
        Self::apply(key, &nonce.0, &mut body);
        let mut out = Vec::with_capacity(NONCE_LEN + body.len());
        out.extend_from_slice(&nonce.0);
        out.extend_from_slice(&body);
        EncryptedLicense(out)
    }

    fn decrypt(&self, key: &SharedKey, ciphertext: &EncryptedLicense, width: Width) -> Result<License, PufError> {
        let bytes = ciphertext.as_bytes();
        let expected = EncryptedLicense::encoded_len(width);
        if bytes.len() != expected {
            return Err(PufError::Decode(format!(
                "expected {expected} bytes for a {}-bit license, got {}",
                width.bits(),
                bytes.len()
            )));
        }
        let (nonce, body) = bytes.split_at(NONCE_LEN);
        let mut plain = body.to_vec();
        Self::apply(key, nonce, &mut plain);
        License::from_be_bytes(&plain)
    }
}

pub fn encrypt_license(key: &SharedKey, license: License, nonce: Nonce) -> EncryptedLicense {
    HashStreamCipher.encrypt(key, license, nonce)
}

pub fn decrypt_license(key: &SharedKey, ciphertext: &EncryptedLicense, width: Width) -> Result<License, PufError> {
    HashStreamCipher.decrypt(key, ciphertext, width)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::messages::NodeId;
    use crate::puf_auth::{CrDatabase, PufDevice};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn key0() -> SharedKey {
        let mut k = [0u8; 16];
        for (i, b) in k.iter_mut().enumerate() {
            *b = i as u8;
        }
        SharedKey::new(k)
    }

    #[test]
    fn frozen_test_vectors() {
        // values from tests/oracles/puf_cipher_vectors.py
        let nonce = Nonce([1, 2, 3, 4, 5, 6, 7, 8]);
        let c = encrypt_license(&key0(), License::from_u8(0xc0), nonce);
        assert_eq!(c.as_bytes(), &[1, 2, 3, 4, 5, 6, 7, 8, 0x8b]);

        let w16 = Width::new(16).unwrap();
        let c16 = encrypt_license(&key0(), License::new(0xbeef, w16).unwrap(), nonce);
        assert_eq!(c16.as_bytes(), &[1, 2, 3, 4, 5, 6, 7, 8, 0xf5, 0xbd]);
    }

    #[test]
    fn round_trip_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let key = SharedKey::new(rng.random());
            let l = License::from_u8(rng.random());
            let n = Nonce(rng.random());
            let c = encrypt_license(&key, l, n);
            assert_eq!(decrypt_license(&key, &c, Width::W8).unwrap(), l);
        }
    }

    #[test]
    fn nonce_changes_ciphertext() {
        let l = License::from_u8(0x42);
        let a = encrypt_license(&key0(), l, Nonce::from(1));
        let b = encrypt_license(&key0(), l, Nonce::from(2));
        assert_ne!(a, b);
    }

    #[test]
    fn truncated_ciphertext_is_decode_error() {
        let c = encrypt_license(&key0(), License::from_u8(1), Nonce::from(7));
        let mut bytes = c.into_bytes();
        bytes.pop();
        let err = decrypt_license(&key0(), &EncryptedLicense::from_bytes(bytes), Width::W8);
        assert!(matches!(err, Err(PufError::Decode(_))));
        let err = decrypt_license(&key0(), &EncryptedLicense::from_bytes(vec![]), Width::W8);
        assert!(matches!(err, Err(PufError::Decode(_))));
    }

    #[test]
    fn wrong_key_acceptance_is_binomial() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut db = CrDatabase::new(4, Width::W8);
        let dev = PufDevice::keyed(NodeId(2), Width::W8, [2; 16]);
        let (_, license) = db.register_node(NodeId(2), &dev, &mut rng).unwrap();
        let right = SharedKey::new([0xaa; 16]);
        let n = 10_000u32;
        let mut accepted = 0u32;
        for _ in 0..n {
            let c = encrypt_license(&right, license, Nonce(rng.random()));
            let wrong = SharedKey::new(rng.random());
            let l = decrypt_license(&wrong, &c, Width::W8).unwrap();
            if db.verify_license(NodeId(2), l).is_accept() {
                accepted += 1;
            }
        }
        let p = 1.0 / 256.0;
        let mean = n as f64 * p;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (accepted as f64 - mean).abs() <= 3.0 * sigma,
            "{accepted} accepts, expected {mean:.1} +- {:.1}",
            3.0 * sigma
        );
    }
}
