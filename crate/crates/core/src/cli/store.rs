//! Gallery store: every enrolled id with its encoded descriptor variants.
//!
//! Layout (little-endian): `FDG1`, u32 entry count, then per entry a u32 id
//! length, UTF-8 id bytes, u64 blob length and a descriptor blob as written by
//! [`encode`].

use std::path::Path;

use crate::descriptor::{decode, encode, DenseDescriptor};
use crate::error::{Error, Result};

pub const STORE_MAGIC: &[u8; 4] = b"FDG1";

pub fn encode_store(entries: &[(String, Vec<DenseDescriptor>)]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(STORE_MAGIC);
    let n = u32::try_from(entries.len()).map_err(|_| Error::InvalidArgument("too many gallery entries".into()))?;
    out.extend_from_slice(&n.to_le_bytes());
    for (id, variants) in entries {
        let blob = encode(variants)?;
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        out.extend_from_slice(&(blob.len() as u64).to_le_bytes());
        out.extend_from_slice(&blob);
    }
    Ok(out)
}

pub fn decode_store(bytes: &[u8]) -> Result<Vec<(String, Vec<DenseDescriptor>)>> {
    let bad = |m: &str| Error::Format(format!("gallery store: {m}"));
    let mut pos = 0usize;
    let mut take = |n: u64| -> Result<&[u8]> {
        let end = (pos as u64)
            .checked_add(n)
            .filter(|&e| e <= bytes.len() as u64)
            .ok_or_else(|| bad("truncated"))?;
        let s = &bytes[pos..end as usize];
        pos = end as usize;
        Ok(s)
    };
    if take(4)? != STORE_MAGIC {
        return Err(bad("bad magic"));
    }
    let n = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes"));
    let mut entries = Vec::new();
    for _ in 0..n {
        let id_len = u32::from_le_bytes(take(4)?.try_into().expect("4 bytes"));
        let id = std::str::from_utf8(take(id_len as u64)?)
            .map_err(|_| bad("id is not UTF-8"))?
            .to_string();
        let blob_len = u64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
        entries.push((id, decode(take(blob_len)?)?));
    }
    if take(1).is_ok() {
        return Err(bad("trailing bytes"));
    }
    Ok(entries)
}

pub fn write_store(path: impl AsRef<Path>, entries: &[(String, Vec<DenseDescriptor>)]) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_store(entries)?).map_err(|e| Error::io(path, e))
}

pub fn read_store(path: impl AsRef<Path>) -> Result<Vec<(String, Vec<DenseDescriptor>)>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_store(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: f32) -> DenseDescriptor {
        DenseDescriptor::new(1, 1, 2, vec![v, 0.0], vec![1.0, 0.0]).unwrap()
    }

    #[test]
    fn round_trip() {
        let entries = vec![
            ("a".to_string(), vec![d(1.0), d(2.0)]),
            ("béta".to_string(), vec![d(3.0), d(4.0)]),
        ];
        let bytes = encode_store(&entries).unwrap();
        assert_eq!(decode_store(&bytes).unwrap(), entries);
        assert_eq!(decode_store(&encode_store(&[]).unwrap()).unwrap(), vec![]);
    }

    #[test]
    fn corruption_rejected() {
        let bytes = encode_store(&[("a".to_string(), vec![d(1.0)])]).unwrap();
        assert!(matches!(decode_store(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode_store(&extra), Err(Error::Format(_))));
        let mut flipped = bytes;
        let last = flipped.len() - 6;
        flipped[last] ^= 0x10;
        assert!(matches!(decode_store(&flipped), Err(Error::Format(_))));
    }
}
