//! Versioned binary envelope shared by every on-disk artifact that carries a
//! raw payload (weights, datasets, raster sidecars).
//!
//! Layout, all integers little-endian:
//! `magic[8] | version u32 | header_len u64 | header JSON | payload_len u64 |
//! payload | fnv1a64(payload) u64`.
//!
//! Loads refuse on magic/version mismatch and on any length or checksum
//! inconsistency; there is no silent partial read.

use serde::{de::DeserializeOwned, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvelopeError {
    #[error("format version mismatch: expected {expected}, found {found}")]
    FormatVersionMismatch { expected: u32, found: u32 },
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("header encode/decode: {0}")]
    Header(#[from] serde_json::Error),
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn write_envelope<H: Serialize>(
    magic: &[u8; 8],
    version: u32,
    header: &H,
    payload: &[u8],
) -> Result<Vec<u8>, EnvelopeError> {
    let header_bytes = serde_json::to_vec(header)?;
    let mut out = Vec::with_capacity(8 + 4 + 8 + header_bytes.len() + 8 + payload.len() + 8);
    out.extend_from_slice(magic);
    out.extend_from_slice(&version.to_le_bytes());
    out.extend_from_slice(&(header_bytes.len() as u64).to_le_bytes());
    out.extend_from_slice(&header_bytes);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&fnv1a64(payload).to_le_bytes());
    Ok(out)
}

pub fn read_envelope<H: DeserializeOwned>(
    bytes: &[u8],
    magic: &[u8; 8],
    version: u32,
) -> Result<(H, Vec<u8>), EnvelopeError> {
    let need = |n: usize, at: usize| -> Result<(), EnvelopeError> {
        if bytes.len() < at + n {
            Err(EnvelopeError::CorruptPayload(format!(
                "truncated: need {} bytes at offset {at}, have {}",
                n,
                bytes.len()
            )))
        } else {
            Ok(())
        }
    };
    need(8, 0)?;
    if &bytes[..8] != magic {
        return Err(EnvelopeError::CorruptPayload(format!(
            "bad magic {:?}, expected {:?}",
            &bytes[..8],
            magic
        )));
    }
    need(4, 8)?;
    let found = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if found != version {
        return Err(EnvelopeError::FormatVersionMismatch { expected: version, found });
    }
    need(8, 12)?;
    let header_len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    need(header_len, 20)?;
    let header: H = serde_json::from_slice(&bytes[20..20 + header_len])?;
    let p0 = 20 + header_len;
    need(8, p0)?;
    let payload_len = u64::from_le_bytes(bytes[p0..p0 + 8].try_into().unwrap()) as usize;
    need(payload_len + 8, p0 + 8)?;
    let payload = bytes[p0 + 8..p0 + 8 + payload_len].to_vec();
    let stored = u64::from_le_bytes(bytes[p0 + 8 + payload_len..p0 + 16 + payload_len].try_into().unwrap());
    let actual = fnv1a64(&payload);
    if stored != actual {
        return Err(EnvelopeError::CorruptPayload(format!(
            "checksum mismatch: stored {stored:#x}, computed {actual:#x}"
        )));
    }
    Ok((header, payload))
}

/// Encode f32 slices as little-endian bytes. Bit-exact round trip.
pub fn f32s_to_bytes(values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn bytes_to_f32s(bytes: &[u8]) -> Result<Vec<f32>, EnvelopeError> {
    if bytes.len() % 4 != 0 {
        return Err(EnvelopeError::CorruptPayload(format!(
            "payload length {} is not a multiple of 4",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    const MAGIC: &[u8; 8] = b"TFTEST01";

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Hdr {
        name: String,
        count: usize,
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let hdr = Hdr { name: "x".into(), count: 3 };
        let payload = f32s_to_bytes(&[1.0, -2.5, 3.25]);
        let a = write_envelope(MAGIC, 1, &hdr, &payload).unwrap();
        let (h2, p2): (Hdr, _) = read_envelope(&a, MAGIC, 1).unwrap();
        assert_eq!(h2, hdr);
        assert_eq!(p2, payload);
        let b = write_envelope(MAGIC, 1, &h2, &p2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn version_mismatch_refused() {
        let a = write_envelope(MAGIC, 1, &Hdr { name: "x".into(), count: 0 }, &[]).unwrap();
        match read_envelope::<Hdr>(&a, MAGIC, 2) {
            Err(EnvelopeError::FormatVersionMismatch { expected: 2, found: 1 }) => {}
            other => panic!("expected version mismatch, got {other:?}"),
        }
    }

    #[test]
    fn truncation_and_corruption_detected() {
        let payload = f32s_to_bytes(&[9.0; 16]);
        let a = write_envelope(MAGIC, 1, &Hdr { name: "y".into(), count: 16 }, &payload).unwrap();
        for cut in [3usize, 10, a.len() - 1] {
            assert!(matches!(
                read_envelope::<Hdr>(&a[..cut], MAGIC, 1),
                Err(EnvelopeError::CorruptPayload(_))
            ));
        }
        let mut flipped = a.clone();
        let idx = flipped.len() - 20; // inside payload
        flipped[idx] ^= 0xFF;
        assert!(matches!(
            read_envelope::<Hdr>(&flipped, MAGIC, 1),
            Err(EnvelopeError::CorruptPayload(_))
        ));
    }

    #[test]
    fn f32_codec_rejects_ragged_lengths() {
        assert!(bytes_to_f32s(&[1, 2, 3]).is_err());
        let v = vec![0.1f32, f32::MIN_POSITIVE, -0.0];
        assert_eq!(bytes_to_f32s(&f32s_to_bytes(&v)).unwrap(), v);
    }
}
