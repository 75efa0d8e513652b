//! Varbyte and delta coding for postings.
//!
//! Varbyte layout: little-endian 7-bit groups, least significant first. The
//! high bit is a continuation flag, set on every byte except the last of a
//! value. Canonical vectors: 0 -> [0x00], 127 -> [0x7F], 128 -> [0x80, 0x01],
//! 300 -> [0xAC, 0x02].

use crate::error::{Error, Result};

pub fn encode_vbyte_into(mut value: u64, out: &mut Vec<u8>) {
    while value >= 0x80 {
        out.push((value as u8 & 0x7F) | 0x80);
        value >>= 7;
    }
    out.push(value as u8);
}

pub fn encode_vbyte(values: &[u64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len());
    for &v in values {
        encode_vbyte_into(v, &mut out);
    }
    out
}

/// Cursor over a varbyte stream. Decode errors carry the byte offset of the
/// value that failed.
pub struct VbyteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> VbyteReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        VbyteReader { buf, pos: 0 }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }

    /// Reads `n` raw bytes (for inline strings between varbyte fields).
    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(Error::Codec { offset: self.pos })?;
        let slice = &self.buf[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    pub fn read(&mut self) -> Result<u64> {
        let start = self.pos;
        let mut value: u64 = 0;
        let mut shift: u32 = 0;
        loop {
            let byte = *self
                .buf
                .get(self.pos)
                .ok_or(Error::Codec { offset: start })?;
            self.pos += 1;
            let payload = (byte & 0x7F) as u64;
            // A u64 needs at most ten groups; the tenth may only hold one bit.
            if shift >= 64 || (shift == 63 && payload > 1) {
                return Err(Error::Codec { offset: start });
            }
            value |= payload << shift;
            if byte & 0x80 == 0 {
                return Ok(value);
            }
            shift += 7;
        }
    }
}

/// Decodes an entire buffer; trailing garbage or truncation is an error.
pub fn decode_vbyte(buf: &[u8]) -> Result<Vec<u64>> {
    let mut reader = VbyteReader::new(buf);
    let mut out = Vec::new();
    while !reader.is_empty() {
        out.push(reader.read()?);
    }
    Ok(out)
}

/// First value absolute, the rest gaps. Input must be strictly increasing.
pub fn delta_encode(values: &[u64]) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        if i == 0 {
            out.push(v);
        } else {
            if v <= values[i - 1] {
                return Err(Error::NotIncreasing { position: i });
            }
            out.push(v - values[i - 1]);
        }
    }
    Ok(out)
}

pub fn delta_decode(gaps: &[u64]) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(gaps.len());
    let mut acc: u64 = 0;
    for (i, &g) in gaps.iter().enumerate() {
        if i == 0 {
            acc = g;
        } else {
            if g == 0 {
                return Err(Error::NotIncreasing { position: i });
            }
            acc = acc
                .checked_add(g)
                .ok_or(Error::Codec { offset: i })?;
        }
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pinned_vectors() {
        assert_eq!(encode_vbyte(&[0]), vec![0x00]);
        assert_eq!(encode_vbyte(&[127]), vec![0x7F]);
        assert_eq!(encode_vbyte(&[128]), vec![0x80, 0x01]);
        assert_eq!(encode_vbyte(&[300]), vec![0xAC, 0x02]);
        assert_eq!(encode_vbyte(&[0, 127, 128, 300]).len(), 1 + 1 + 2 + 2);
    }

    #[test]
    fn u64_extremes() {
        for v in [u64::MAX, u64::MAX - 1, 1u64 << 63, (1u64 << 56) - 1] {
            assert_eq!(decode_vbyte(&encode_vbyte(&[v])).unwrap(), vec![v]);
        }
        assert_eq!(encode_vbyte(&[u64::MAX]).len(), 10);
    }

    #[test]
    fn truncation_is_an_error() {
        let mut bytes = encode_vbyte(&[300]);
        bytes.pop();
        assert!(matches!(decode_vbyte(&bytes), Err(Error::Codec { .. })));
        // A lone continuation byte is also truncated.
        assert!(matches!(decode_vbyte(&[0x80]), Err(Error::Codec { .. })));
    }

    #[test]
    fn overlong_stream_rejected() {
        // Eleven continuation groups cannot fit in a u64.
        let bytes = [0xFFu8; 10];
        assert!(matches!(decode_vbyte(&bytes), Err(Error::Codec { .. })));
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_encode(&[5, 7, 12]).unwrap(), vec![5, 2, 5]);
        assert_eq!(delta_decode(&[5, 2, 5]).unwrap(), vec![5, 7, 12]);
        assert!(matches!(
            delta_encode(&[5, 5]),
            Err(Error::NotIncreasing { position: 1 })
        ));
        assert!(matches!(
            delta_encode(&[5, 4]),
            Err(Error::NotIncreasing { position: 1 })
        ));
        assert_eq!(delta_encode(&[]).unwrap(), Vec::<u64>::new());
    }

    proptest! {
        #[test]
        fn vbyte_roundtrip(values in prop::collection::vec(any::<u64>(), 0..64)) {
            let encoded = encode_vbyte(&values);
            prop_assert_eq!(decode_vbyte(&encoded).unwrap(), values);
        }

        #[test]
        fn vbyte_length_bounds(v in any::<u64>()) {
            let len = encode_vbyte(&[v]).len();
            let bits = 64 - v.leading_zeros() as usize;
            let expect = std::cmp::max(1, bits.div_ceil(7));
            prop_assert_eq!(len, expect);
        }

        #[test]
        fn delta_roundtrip(mut values in prop::collection::vec(any::<u32>(), 1..64)) {
            values.sort_unstable();
            values.dedup();
            let values: Vec<u64> = values.into_iter().map(u64::from).collect();
            let gaps = delta_encode(&values).unwrap();
            prop_assert_eq!(delta_decode(&gaps).unwrap(), values);
        }
    }
}
