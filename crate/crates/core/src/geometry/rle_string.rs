//! COCO compressed RLE strings: each count (from the fourth on, as a delta
//! against the count two positions earlier) is written as little-endian 5-bit
//! groups, sign-extended from the top group bit, with 0x20 as the
//! continuation flag and an offset of 48 into printable ASCII.

use super::RleMask;
use crate::error::{Error, Result};

pub fn rle_to_string(rle: &RleMask) -> String {
    let counts = rle.counts();
    let mut s = String::with_capacity(counts.len() * 2);
    for (i, &c) in counts.iter().enumerate() {
        let mut x = c as i64;
        if i > 2 {
            x -= counts[i - 2] as i64;
        }
        loop {
            let mut ch = (x & 0x1f) as u8;
            x >>= 5;
            let more = if ch & 0x10 != 0 { x != -1 } else { x != 0 };
            if more {
                ch |= 0x20;
            }
            s.push((ch + 48) as char);
            if !more {
                break;
            }
        }
    }
    s
}

pub fn rle_from_string(s: &str, width: u32, height: u32) -> Result<RleMask> {
    let bytes = s.as_bytes();
    let mut counts: Vec<u32> = Vec::with_capacity(bytes.len());
    let mut p = 0;
    while p < bytes.len() {
        let mut x: i64 = 0;
        let mut k = 0u32;
        loop {
            let Some(&b) = bytes.get(p) else {
                return Err(Error::Codec("truncated RLE string".into()));
            };
            if !(48..48 + 64).contains(&b) {
                return Err(Error::Codec(format!("invalid RLE character {:?} at {p}", b as char)));
            }
            if k >= 12 {
                return Err(Error::Codec(format!("RLE count too long at {p}")));
            }
            let c = (b - 48) as i64;
            x |= (c & 0x1f) << (5 * k);
            p += 1;
            k += 1;
            if c & 0x20 == 0 {
                if c & 0x10 != 0 {
                    x |= -1i64 << (5 * k);
                }
                break;
            }
        }
        let m = counts.len();
        if m > 2 {
            x += counts[m - 2] as i64;
        }
        let c = u32::try_from(x)
            .map_err(|_| Error::Codec(format!("RLE count {x} out of range (run {m})")))?;
        counts.push(c);
    }
    RleMask::new(width, height, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{decode_rle, encode_rle, Bitmask};
    use proptest::prelude::*;

    #[test]
    fn known_string() {
        // 4 wide, 5 tall; block at rows 1-2, cols 1-2 plus pixel (x=3, y=4).
        // Produced by pycocotools.mask.encode.
        let mut m = Bitmask::new(4, 5);
        for (x, y) in [(1, 1), (2, 1), (1, 2), (2, 2), (3, 4)] {
            m.set(x, y, true);
        }
        let rle = encode_rle(&m);
        assert_eq!(rle_to_string(&rle), "62303O");
        assert_eq!(decode_rle(&rle_from_string("62303O", 4, 5).unwrap()), m);
    }

    #[test]
    fn rejects_garbage() {
        assert!(rle_from_string("6~", 4, 5).is_err());
        assert!(rle_from_string("6", 4, 5).is_err());
        assert!(rle_from_string("0o", 4, 5).is_err());
    }

    proptest! {
        #[test]
        fn string_round_trip(counts in proptest::collection::vec(0u32..5000, 1..40)) {
            let total: u64 = counts.iter().map(|&c| c as u64).sum();
            let rle = RleMask::new(1, total as u32, counts).unwrap();
            let s = rle_to_string(&rle);
            prop_assert_eq!(rle_from_string(&s, 1, total as u32).unwrap(), rle);
        }
    }
}
