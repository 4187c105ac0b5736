//! Little-endian bit packing of fixed-width codes.
//!
//! Code `i` occupies stream bits `[i·b, (i+1)·b)`; stream bit `j` is bit
//! `j % 8` (least significant first) of byte `j / 8`.

use crate::error::FormatError;

/// Bytes needed for `count` codes of `bits` bits each.
pub fn packed_len(count: usize, bits: u8) -> usize {
    (count * bits as usize).div_ceil(8)
}

pub fn pack_codes(codes: &[u8], bits: u8) -> Vec<u8> {
    assert!((1..=8).contains(&bits), "bit width {bits} out of range");
    let mut out = vec![0u8; packed_len(codes.len(), bits)];
    let mask = ((1u16 << bits) - 1) as u8;
    let mut bit = 0usize;
    for &code in codes {
        debug_assert!(code & !mask == 0, "code {code} does not fit in {bits} bits");
        let value = ((code & mask) as u16) << (bit % 8);
        let byte = bit / 8;
        out[byte] |= value as u8;
        if (bit % 8) + bits as usize > 8 {
            out[byte + 1] |= (value >> 8) as u8;
        }
        bit += bits as usize;
    }
    out
}

pub fn unpack_codes(bytes: &[u8], bits: u8, count: usize) -> Result<Vec<u8>, FormatError> {
    if !(1..=8).contains(&bits) {
        return Err(FormatError::Malformed(format!("bit width {bits} out of range")));
    }
    let needed = packed_len(count, bits);
    if bytes.len() < needed {
        return Err(FormatError::TruncatedCodes {
            needed,
            available: bytes.len(),
        });
    }
    let mask = (1u16 << bits) - 1;
    let mut out = Vec::with_capacity(count);
    let mut bit = 0usize;
    for _ in 0..count {
        let byte = bit / 8;
        let mut word = bytes[byte] as u16;
        if byte + 1 < bytes.len() {
            word |= (bytes[byte + 1] as u16) << 8;
        }
        out.push(((word >> (bit % 8)) & mask) as u8);
        bit += bits as usize;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_layout() {
        // 3-bit codes 5, 2, 7 -> bits 101 010 111 (LSB first) -> 0b11_010_101, 0b1
        assert_eq!(pack_codes(&[5, 2, 7], 3), vec![0b1101_0101, 0b0000_0001]);
        assert_eq!(pack_codes(&[1, 0, 1, 1], 1), vec![0b1101]);
        assert_eq!(packed_len(257, 3), 97);
    }

    #[test]
    fn truncated_stream_is_rejected() {
        let packed = pack_codes(&[1, 2, 3, 4], 4);
        assert!(matches!(
            unpack_codes(&packed[..1], 4, 4),
            Err(FormatError::TruncatedCodes { needed: 2, available: 1 })
        ));
    }

    #[test]
    fn exhaustive_small_round_trips() {
        for bits in 1..=8u8 {
            for len in 1..=257usize {
                let codes: Vec<u8> = (0..len)
                    .map(|i| ((i * 131 + 7 * bits as usize) % (1usize << bits)) as u8)
                    .collect();
                let packed = pack_codes(&codes, bits);
                assert_eq!(packed.len(), packed_len(len, bits));
                assert_eq!(unpack_codes(&packed, bits, len).unwrap(), codes);
            }
        }
    }

    proptest! {
        #[test]
        fn pack_unpack_round_trip(bits in 1u8..=8, raw in proptest::collection::vec(any::<u8>(), 1..=257)) {
            let mask = ((1u16 << bits) - 1) as u8;
            let codes: Vec<u8> = raw.iter().map(|c| c & mask).collect();
            let packed = pack_codes(&codes, bits);
            prop_assert_eq!(unpack_codes(&packed, bits, codes.len()).unwrap(), codes);
        }
    }
}
