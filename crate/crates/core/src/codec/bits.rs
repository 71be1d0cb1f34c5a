use super::DecodeError;

/// Bit-granular buffer, most significant bit first within each byte. Bits past
/// `len` in the last byte are always zero, so the backing bytes are the
/// zero-padded form of the stream.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BitStream {
    bytes: Vec<u8>,
    len: usize,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    /// Treats every bit of `bytes` as content; any padding is skipped by the
    /// decoder.
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let len = bytes.len() * 8;
        BitStream { bytes, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn byte_len(&self) -> usize {
        self.bytes.len()
    }

    /// The stream zero-padded to a byte boundary.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn push_bit(&mut self, bit: bool) {
        if self.len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 0x80 >> (self.len % 8);
        }
        self.len += 1;
    }

    /// Appends the low `width` bits of `value`, high bit first.
    pub fn push_bits(&mut self, value: u64, width: u32) {
        debug_assert!(width <= 64);
        debug_assert!(
            width == 64 || value >> width == 0,
            "{value} wider than {width} bits"
        );
        for i in (0..width).rev() {
            self.push_bit((value >> i) & 1 == 1);
        }
    }

    /// Unsigned LEB128-style groups, bit-packed: each group is a continuation
    /// bit followed by 7 payload bits, least significant group first.
    pub fn push_varint(&mut self, mut value: u64) {
        loop {
            let group = value & 0x7f;
            value >>= 7;
            self.push_bit(value != 0);
            self.push_bits(group, 7);
            if value == 0 {
                break;
            }
        }
    }

    pub fn push_signed_varint(&mut self, value: i64) {
        self.push_varint(((value << 1) ^ (value >> 63)) as u64);
    }

    /// Keeps only the first `len` bits.
    pub fn truncate(&mut self, len: usize) {
        if len >= self.len {
            return;
        }
        self.len = len;
        self.bytes.truncate(len.div_ceil(8));
        if !len.is_multiple_of(8) {
            let last = self.bytes.len() - 1;
            self.bytes[last] &= 0xffu8 << (8 - len % 8);
        }
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader {
            stream: self,
            pos: 0,
        }
    }
}

pub struct BitReader<'a> {
    stream: &'a BitStream,
    pos: usize,
}

impl BitReader<'_> {
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.stream.len - self.pos
    }

    pub fn read_bit(&mut self) -> Result<bool, DecodeError> {
        if self.pos >= self.stream.len {
            return Err(DecodeError::TruncatedStream { at_bit: self.pos });
        }
        let bit = self.stream.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Ok(bit)
    }

    pub fn read_bits(&mut self, width: u32) -> Result<u64, DecodeError> {
        debug_assert!(width <= 64);
        if self.remaining() < width as usize {
            return Err(DecodeError::TruncatedStream {
                at_bit: self.stream.len,
            });
        }
        let mut value = 0u64;
        for _ in 0..width {
            value = (value << 1) | u64::from(self.read_bit()?);
        }
        Ok(value)
    }

    pub fn read_varint(&mut self) -> Result<u64, DecodeError> {
        let start = self.pos;
        let mut value = 0u64;
        for shift in (0..64).step_by(7) {
            let more = self.read_bit()?;
            let group = self.read_bits(7)?;
            if shift == 63 && group > 1 {
                return Err(DecodeError::VarintOverflow { at_bit: start });
            }
            value |= group << shift;
            if !more {
                return Ok(value);
            }
        }
        Err(DecodeError::VarintOverflow { at_bit: start })
    }

    pub fn read_signed_varint(&mut self) -> Result<i64, DecodeError> {
        let z = self.read_varint()?;
        Ok((z >> 1) as i64 ^ -((z & 1) as i64))
    }
}

/// Bits needed to store any value in `0..=count`.
pub fn ref_width(count: usize) -> u32 {
    usize::BITS - count.leading_zeros()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bits_are_msb_first_and_padded() {
        let mut s = BitStream::new();
        s.push_bits(0b101, 3);
        assert_eq!(s.len(), 3);
        assert_eq!(s.as_bytes(), &[0b1010_0000]);
        s.push_bits(0x1ff, 9);
        assert_eq!(s.as_bytes(), &[0b1011_1111, 0b1111_0000]);
    }

    #[test]
    fn varint_sizes() {
        let mut s = BitStream::new();
        s.push_varint(127);
        assert_eq!(s.len(), 8);
        s.push_varint(128);
        assert_eq!(s.len(), 24);
        let mut r = s.reader();
        assert_eq!(r.read_varint().unwrap(), 127);
        assert_eq!(r.read_varint().unwrap(), 128);
        assert!(matches!(
            r.read_bit(),
            Err(DecodeError::TruncatedStream { .. })
        ));
    }

    #[test]
    fn reference_widths() {
        assert_eq!(ref_width(0), 0);
        assert_eq!(ref_width(1), 1);
        assert_eq!(ref_width(3), 2);
        assert_eq!(ref_width(6), 3);
        assert_eq!(ref_width(7), 3);
        assert_eq!(ref_width(8), 4);
    }

    #[test]
    fn overlong_varint_is_rejected() {
        let s = BitStream::from_bytes(vec![0xff; 16]);
        assert!(matches!(
            s.reader().read_varint(),
            Err(DecodeError::VarintOverflow { .. })
        ));
    }

    #[test]
    fn truncate_clears_tail() {
        let mut s = BitStream::new();
        s.push_bits(0xffff, 16);
        s.truncate(5);
        assert_eq!(s.as_bytes(), &[0b1111_1000]);
        assert_eq!(s.len(), 5);
    }

    proptest! {
        #[test]
        fn mixed_fields_read_back(values in proptest::collection::vec((any::<u64>(), 0u32..=64, any::<i64>()), 0..20)) {
            let mut s = BitStream::new();
            for &(v, w, i) in &values {
                let v = if w == 64 { v } else { v & ((1u64 << w) - 1) };
                s.push_bits(v, w);
                s.push_varint(v);
                s.push_signed_varint(i);
            }
            let mut r = s.reader();
            for &(v, w, i) in &values {
                let v = if w == 64 { v } else { v & ((1u64 << w) - 1) };
                prop_assert_eq!(r.read_bits(w).unwrap(), v);
                prop_assert_eq!(r.read_varint().unwrap(), v);
                prop_assert_eq!(r.read_signed_varint().unwrap(), i);
            }
            prop_assert_eq!(r.remaining(), 0);
        }
    }
}
