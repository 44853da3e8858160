//! Packed binary codes and Hamming-style distances.

use std::fmt;

use crate::error::Error;
use crate::Result;

/// A fixed-length binary code packed into 64-bit words.
///
/// Bit `i` lives in word `i / 64` at position `i % 64`. Bits past `len` in
/// the last word are always zero, which keeps whole-word XOR/popcount
/// distances correct without masking.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitCode {
    len: usize,
    words: Vec<u64>,
}

impl BitCode {
    /// Builds a code of `len` bits by evaluating `f(0), f(1), …` in order.
    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> BitCode {
        let mut words = vec![0u64; len.div_ceil(64)];
        for i in 0..len {
            if f(i) {
                words[i / 64] |= 1u64 << (i % 64);
            }
        }
        BitCode { len, words }
    }

    /// An all-zero code of `len` bits.
    pub fn zeros(len: usize) -> BitCode {
        BitCode {
            len,
            words: vec![0u64; len.div_ceil(64)],
        }
    }

    /// Reassembles a code from raw words, validating shape and padding.
    pub fn from_words(len: usize, words: Vec<u64>) -> Result<BitCode> {
        if words.len() != len.div_ceil(64) {
            return Err(Error::InvalidParameter(format!(
                "{} words cannot hold exactly {len} bits",
                words.len()
            )));
        }
        if !len.is_multiple_of(64) {
            if let Some(&last) = words.last() {
                if last >> (len % 64) != 0 {
                    return Err(Error::InvalidParameter(
                        "nonzero padding bits after the code length".into(),
                    ));
                }
            }
        }
        Ok(BitCode { len, words })
    }

    /// Number of bits in the code.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The packed words, little bit first.
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Value of bit `i`. Panics if `i >= len`.
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for {} bits", self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    /// Number of set bits.
    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Bitwise XOR with an equal-length code. Handy for expressing the
    /// "recall is invariant under flipping a fixed set of bit positions
    /// across all codes" property.
    pub fn xor(&self, other: &BitCode) -> Result<BitCode> {
        check_lengths(self, other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(BitCode {
            len: self.len,
            words,
        })
    }
}

impl fmt::Display for BitCode {
    /// Bits in index order, bit 0 leftmost.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Packs a slice of booleans into a [`BitCode`].
pub fn pack_bits(bits: &[bool]) -> BitCode {
    BitCode::from_fn(bits.len(), |i| bits[i])
}

fn check_lengths(a: &BitCode, b: &BitCode) -> Result<()> {
    if a.len != b.len {
        return Err(Error::CodeLengthMismatch {
            left: a.len,
            right: b.len,
        });
    }
    Ok(())
}

/// Hamming distance between two equal-length codes: XOR then popcount over
/// whole words.
pub fn hamming_distance(a: &BitCode, b: &BitCode) -> Result<u32> {
    check_lengths(a, b)?;
    Ok(a.words
        .iter()
        .zip(&b.words)
        .map(|(x, y)| (x ^ y).count_ones())
        .sum())
}

/// Spherical Hamming distance: `popcount(a XOR b) / popcount(a AND b)`.
///
/// The denominator counts shared set bits, so the distance is undefined when
/// the codes share none: an empty intersection with differing bits divides
/// by zero, and two all-zero codes give the indeterminate 0/0. Both cases
/// are reported as errors rather than folded into a sentinel value.
pub fn spherical_hamming_distance(a: &BitCode, b: &BitCode) -> Result<f64> {
    check_lengths(a, b)?;
    let mut xor = 0u32;
    let mut and = 0u32;
    for (x, y) in a.words.iter().zip(&b.words) {
        xor += (x ^ y).count_ones();
        and += (x & y).count_ones();
    }
    if and == 0 {
        if xor == 0 {
            return Err(Error::SphericalHammingIndeterminate);
        }
        return Err(Error::SphericalHammingDivision { differing: xor as usize });
    }
    Ok(f64::from(xor) / f64::from(and))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(bits: &[u8]) -> BitCode {
        BitCode::from_fn(bits.len(), |i| bits[i] == 1)
    }

    #[test]
    fn packing_layout_is_little_bit_first() {
        let c = code(&[1, 0, 1]);
        assert_eq!(c.words(), &[0b101]);
        assert!(c.get(0) && !c.get(1) && c.get(2));
        assert_eq!(c.to_string(), "101");
    }

    #[test]
    fn padding_bits_stay_zero_across_word_boundary() {
        let c = BitCode::from_fn(65, |i| i >= 63);
        assert_eq!(c.words().len(), 2);
        assert_eq!(c.words()[1], 0b1);
        assert_eq!(c.count_ones(), 2);
    }

    #[test]
    fn from_words_rejects_dirty_padding() {
        assert!(BitCode::from_words(3, vec![0b1101]).is_err());
        assert!(BitCode::from_words(3, vec![0b101]).is_ok());
        assert!(BitCode::from_words(3, vec![0b101, 0]).is_err());
    }

    #[test]
    fn hamming_basics() {
        let a = code(&[1, 0, 1, 1, 0]);
        let b = code(&[1, 0, 0, 1, 1]);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 2);
        assert_eq!(hamming_distance(&a, &a).unwrap(), 0);
    }

    #[test]
    fn hamming_rejects_length_mismatch() {
        let a = code(&[1, 0]);
        let b = code(&[1, 0, 0]);
        assert!(matches!(
            hamming_distance(&a, &b),
            Err(Error::CodeLengthMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn hamming_spans_word_boundaries() {
        let a = BitCode::from_fn(130, |i| i % 2 == 0);
        let b = BitCode::from_fn(130, |i| i % 2 == 1);
        assert_eq!(hamming_distance(&a, &b).unwrap(), 130);
    }

    #[test]
    fn spherical_hamming_ratio() {
        let a = code(&[1, 0, 1]);
        let b = code(&[1, 0, 0]);
        assert_eq!(spherical_hamming_distance(&a, &b).unwrap(), 1.0);
        // Equal codes with at least one shared bit: zero distance.
        assert_eq!(spherical_hamming_distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn spherical_hamming_failure_modes() {
        let z = BitCode::zeros(4);
        assert!(matches!(
            spherical_hamming_distance(&z, &z),
            Err(Error::SphericalHammingIndeterminate)
        ));
        let a = code(&[1, 0, 0, 0]);
        let b = code(&[0, 1, 0, 0]);
        assert!(matches!(
            spherical_hamming_distance(&a, &b),
            Err(Error::SphericalHammingDivision { differing: 2 })
        ));
    }

    #[test]
    fn xor_flips_exactly_the_masked_bits() {
        let a = code(&[1, 0, 1, 1]);
        let mask = code(&[0, 1, 1, 0]);
        assert_eq!(a.xor(&mask).unwrap(), code(&[1, 1, 0, 1]));
    }
}
