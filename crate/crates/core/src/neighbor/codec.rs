//! Difference encoding for sorted neighbor blocks.
//!
//! A block `(v0, v1, ..., vk)` is stored as `v0` followed by the offsets
//! `v1 - v0, v2 - v0, ...`, each written as a base-128 varint.

use crate::error::{Error, Result};

fn put_varint(out: &mut Vec<u8>, mut x: u64) {
    while x >= 0x80 {
        out.push((x as u8) | 0x80);
        x >>= 7;
    }
    out.push(x as u8);
}

fn get_varint(bytes: &[u8], pos: &mut usize) -> Result<u64> {
    let mut x = 0u64;
    let mut shift = 0u32;
    loop {
        let b = *bytes
            .get(*pos)
            .ok_or_else(|| Error::Corrupt(format!("truncated varint at byte {}", *pos)))?;
        *pos += 1;
        if shift >= 64 || (shift == 63 && b > 1) {
            return Err(Error::Corrupt("varint overflows 64 bits".into()));
        }
        x |= ((b & 0x7f) as u64) << shift;
        if b & 0x80 == 0 {
            return Ok(x);
        }
        shift += 7;
    }
}

/// Encode a strictly ascending block.
pub fn encode(block: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(block.len() + 8);
    if let Some(&v0) = block.first() {
        put_varint(&mut out, v0);
        for &v in &block[1..] {
            debug_assert!(v > v0);
            put_varint(&mut out, v - v0);
        }
    }
    out
}

/// Decode `len` values.
pub fn decode(bytes: &[u8], len: usize) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(len);
    let mut pos = 0;
    if len > 0 {
        let v0 = get_varint(bytes, &mut pos)?;
        out.push(v0);
        for _ in 1..len {
            let d = get_varint(bytes, &mut pos)?;
            out.push(
                v0.checked_add(d)
                    .ok_or_else(|| Error::Corrupt("offset overflows".into()))?,
            );
        }
    }
    if pos != bytes.len() {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes",
            bytes.len() - pos
        )));
    }
    Ok(out)
}

/// Visit decoded values in order; stops early when `f` returns false.
/// The encoding is produced internally, so corruption here is a bug.
pub fn for_each(bytes: &[u8], len: usize, mut f: impl FnMut(u64) -> bool) {
    let mut pos = 0;
    if len == 0 {
        return;
    }
    let v0 = get_varint(bytes, &mut pos).expect("packed block");
    if !f(v0) {
        return;
    }
    for _ in 1..len {
        let d = get_varint(bytes, &mut pos).expect("packed block");
        if !f(v0 + d) {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn encodes_offsets_from_first() {
        let bytes = encode(&[100, 101, 300]);
        // 100 | 1 | 200 (two bytes)
        assert_eq!(bytes, vec![100, 1, 0xC8, 0x01]);
        assert_eq!(decode(&bytes, 3).unwrap(), vec![100, 101, 300]);
    }

    #[test]
    fn truncated_input_is_corruption() {
        let mut bytes = encode(&[5, 1_000_000]);
        bytes.pop();
        assert!(matches!(decode(&bytes, 2), Err(Error::Corrupt(_))));
    }

    proptest! {
        #[test]
        fn round_trip(mut xs in proptest::collection::vec(0u64..u64::MAX / 2, 0..200)) {
            xs.sort_unstable();
            xs.dedup();
            let enc = encode(&xs);
            prop_assert_eq!(decode(&enc, xs.len()).unwrap(), xs);
        }
    }

    #[test]
    fn offset_examples() {
        // (1000, 3, 10) before byte coding.
        assert_eq!(encode(&[1000, 1003, 1010]), vec![0xE8, 0x07, 3, 10]);
        assert_eq!(encode(&[42]), vec![42]);
        // An offset of 300 takes two bytes.
        assert_eq!(encode(&[0, 300]).len(), 3);
        assert_eq!(decode(&encode(&[1000, 1003, 1010]), 3).unwrap(), vec![1000, 1003, 1010]);
    }
}
