//! Binary descriptor files.
//!
//! Layout, little-endian: `"FDD1"`, `u8` variant count, then per variant
//! `u16 channels | u16 grid_h | u16 grid_w | u16 flags | f32 values[..] |
//! f32 mask[..] | u32 crc32`, where the CRC covers that variant's header and
//! payload bytes.

use std::path::Path;

use crate::error::{Error, Result};

use super::DenseDescriptor;

pub const MAGIC: &[u8; 4] = b"FDD1";
const HEADER_LEN: usize = 8;

fn format_err(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

pub fn encode(variants: &[DenseDescriptor]) -> Result<Vec<u8>> {
    if variants.is_empty() || variants.len() > u8::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "descriptor file holds 1..=255 variants, got {}",
            variants.len()
        )));
    }
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.push(variants.len() as u8);
    for d in variants {
        let dims = [d.channels(), d.grid_h(), d.grid_w()];
        if dims.iter().any(|&v| v > u16::MAX as usize) {
            return Err(Error::InvalidArgument(format!("descriptor shape {dims:?} exceeds u16")));
        }
        let start = out.len();
        for v in dims {
            out.extend_from_slice(&(v as u16).to_le_bytes());
        }
        out.extend_from_slice(&0u16.to_le_bytes());
        for v in d.values().iter().chain(d.mask()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Vec<DenseDescriptor>> {
    if bytes.len() < 5 {
        return Err(format_err("file shorter than its preamble"));
    }
    if &bytes[..4] != MAGIC {
        return Err(format_err("bad magic"));
    }
    let count = bytes[4] as usize;
    if count == 0 {
        return Err(format_err("zero variants"));
    }
    let mut pos = 5;
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let rest = &bytes[pos..];
        if rest.len() < HEADER_LEN {
            return Err(format_err(format!("variant {k}: truncated header")));
        }
        let u16_at = |o: usize| u16::from_le_bytes([rest[o], rest[o + 1]]) as u64;
        let (channels, gh, gw, flags) = (u16_at(0), u16_at(2), u16_at(4), u16_at(6));
        let n_values = channels * gh * gw;
        let payload = (n_values + gh * gw) * 4;
        let record = HEADER_LEN as u64 + payload + 4;
        if record > rest.len() as u64 {
            return Err(format_err(format!(
                "variant {k}: {channels}x{gh}x{gw} needs {record} bytes, {} left",
                rest.len()
            )));
        }
        let record = record as usize;
        let body = &rest[..record - 4];
        let stored = u32::from_le_bytes(rest[record - 4..record].try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(format_err(format!("variant {k}: checksum mismatch")));
        }
        if flags != 0 {
            return Err(format_err(format!("variant {k}: unknown flags {flags:#06x}")));
        }
        let floats: Vec<f32> = body[HEADER_LEN..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let (values, mask) = floats.split_at(n_values as usize);
        let d = DenseDescriptor::new(
            channels as usize,
            gh as usize,
            gw as usize,
            values.to_vec(),
            mask.to_vec(),
        )
        .map_err(|e| format_err(format!("variant {k}: {e}")))?;
        out.push(d);
        pos += record;
    }
    if pos != bytes.len() {
        return Err(format_err(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(out)
}

/// Single-descriptor convenience over [`encode`].
pub fn serialize(d: &DenseDescriptor) -> Vec<u8> {
    encode(std::slice::from_ref(d)).expect("a single descriptor always fits the format")
}

/// Decodes a file that must hold exactly one variant.
pub fn deserialize(bytes: &[u8]) -> Result<DenseDescriptor> {
    let mut v = decode(bytes)?;
    if v.len() != 1 {
        return Err(format_err(format!("expected one variant, found {}", v.len())));
    }
    Ok(v.pop().expect("length checked"))
}

pub fn write_descriptor_file(path: impl AsRef<Path>, variants: &[DenseDescriptor]) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(variants)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_descriptor_file(path: impl AsRef<Path>) -> Result<Vec<DenseDescriptor>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}
