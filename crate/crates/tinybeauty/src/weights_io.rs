//! Binary weight files.
//!
//! Layout, little-endian: `"TBW1"`, `u32` version (1), `u32` tensor count,
//! then per tensor `u16` name length, UTF-8 name, `u8` rank, `rank × u32`
//! dims and `Π dims × f32` values; finally a `u32` CRC-32 of every
//! preceding byte.

use std::fs;
use std::path::Path;

use tinybeauty_core::net::{NetworkWeights, Param};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"TBW1";
pub const VERSION: u32 = 1;

pub fn encode_weights(w: &NetworkWeights) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * w.param_count() + 64 * w.params().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(w.params().len() as u32).to_le_bytes());
    for p in w.params() {
        out.extend_from_slice(&(p.name.len() as u16).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.push(p.dims.len() as u8);
        for &d in &p.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &v in p.value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or(Error::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(Error::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode_weights(bytes: &[u8]) -> Result<NetworkWeights> {
    if bytes.len() < 4 {
        return Err(Error::Truncated);
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    let mut cur = Cursor { buf: bytes, pos: 4 };
    let version = cur.u32()?;
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let count = cur.u32()? as usize;
    let mut params = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let len = cur.u16()? as usize;
        let name = std::str::from_utf8(cur.take(len)?)
            .map_err(|_| Error::ShapePayloadMismatch("tensor name is not UTF-8".into()))?
            .to_owned();
        let rank = cur.u8()? as usize;
        let dims = (0..rank).map(|_| cur.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let numel = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or(Error::Truncated)?;
        let raw = cur.take(numel.checked_mul(4).ok_or(Error::Truncated)?)?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        let param = Param::new(name.clone(), dims, data).map_err(|e| Error::ShapePayloadMismatch(format!("{name}: {e}")))?;
        params.push(param);
    }
    let body_end = cur.pos;
    let stored = cur.u32()?;
    if cur.pos != bytes.len() {
        return Err(Error::ShapePayloadMismatch(format!(
            "{} bytes follow the checksum",
            bytes.len() - cur.pos
        )));
    }
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    NetworkWeights::from_params(params).map_err(|e| Error::ShapePayloadMismatch(e.to_string()))
}

pub fn save_weights(w: &NetworkWeights, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_weights(w)).map_err(Error::io(path))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<NetworkWeights> {
    let path = path.as_ref();
    decode_weights(&fs::read(path).map_err(Error::io(path))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tinybeauty_core::net::{build_default, init_weights, NetworkConfig};

    fn sample() -> NetworkWeights {
        init_weights(&NetworkConfig::new(4, 6, 8), 5)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let w = init_weights(&build_default(), 1);
        let bytes = encode_weights(&w);
        assert_eq!(&bytes[..4], b"TBW1");
        let back = decode_weights(&bytes).unwrap();
        assert_eq!(back, w);
        assert_eq!(encode_weights(&back), bytes);
    }

    #[test]
    fn distinct_errors() {
        let bytes = encode_weights(&sample());

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_weights(&bad), Err(Error::BadMagic)));

        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_weights(&bad), Err(Error::UnsupportedVersion(2))));

        assert!(matches!(decode_weights(&bytes[..bytes.len() - 9]), Err(Error::Truncated)));
        assert!(matches!(decode_weights(&bytes[..2]), Err(Error::Truncated)));

        let mut bad = bytes.clone();
        let i = bytes.len() - 8;
        bad[i] ^= 0x40;
        assert!(matches!(decode_weights(&bad), Err(Error::Checksum { .. })));

        let mut bad = bytes.clone();
        bad.extend_from_slice(&[0; 8]);
        assert!(matches!(decode_weights(&bad), Err(Error::ShapePayloadMismatch(_))));
    }

    #[test]
    fn wrong_tensor_table_is_rejected() {
        let w = sample();
        let mut params = w.params().to_vec();
        params.swap(0, 1);
        // hand-encode a table in the wrong order
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        for p in &params {
            out.extend_from_slice(&(p.name.len() as u16).to_le_bytes());
            out.extend_from_slice(p.name.as_bytes());
            out.push(p.dims.len() as u8);
            for &d in &p.dims {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &v in p.value.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        assert!(matches!(decode_weights(&out), Err(Error::ShapePayloadMismatch(_))));
    }
}
