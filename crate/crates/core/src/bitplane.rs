//! Bit-layer arithmetic on single samples.
//!
//! Layers are numbered from 1 (the LSB); layer `j` carries place value
//! `2^(j-1)`. A [`BitPattern`] lists payload bits lowest target layer first.
//! Distance between samples is always measured on the numeric value (signed
//! for 16-bit audio), never on the raw bit pattern.

use std::fmt;

use thiserror::Error;

use crate::wav::BitDepth;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LayerError {
    #[error("layer mask is empty")]
    Empty,
    #[error("layer {layer} outside 1..={bits}")]
    OutOfRange { layer: u32, bits: u32 },
    #[error("layer {0} listed twice")]
    Duplicate(u32),
    #[error("cannot parse layer list {0:?}")]
    Parse(String),
}

/// The set of target layers within a sample of a given width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerMask {
    bits: u32,
    depth: BitDepth,
}

impl LayerMask {
    pub fn new(layers: &[u32], depth: BitDepth) -> Result<Self, LayerError> {
        if layers.is_empty() {
            return Err(LayerError::Empty);
        }
        let mut bits = 0u32;
        for &layer in layers {
            if layer == 0 || layer > depth.bits() {
                return Err(LayerError::OutOfRange {
                    layer,
                    bits: depth.bits(),
                });
            }
            let b = 1u32 << (layer - 1);
            if bits & b != 0 {
                return Err(LayerError::Duplicate(layer));
            }
            bits |= b;
        }
        Ok(Self { bits, depth })
    }

    /// Builds a mask from raw place-value bits (bit 0 = layer 1).
    pub fn from_bits(bits: u32, depth: BitDepth) -> Result<Self, LayerError> {
        if bits == 0 {
            return Err(LayerError::Empty);
        }
        if bits & !depth.full_mask() != 0 {
            return Err(LayerError::OutOfRange {
                layer: 32 - bits.leading_zeros(),
                bits: depth.bits(),
            });
        }
        Ok(Self { bits, depth })
    }

    /// Parses `"4,5"` style lists. Order in the input is irrelevant.
    pub fn parse(list: &str, depth: BitDepth) -> Result<Self, LayerError> {
        let layers = list
            .split(',')
            .map(|s| s.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| LayerError::Parse(list.to_string()))?;
        Self::new(&layers, depth)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn depth(&self) -> BitDepth {
        self.depth
    }

    /// Payload width `k`.
    pub fn width(&self) -> u32 {
        self.bits.count_ones()
    }

    /// Layer numbers in ascending order.
    pub fn layers(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.depth.bits())
            .filter(move |i| self.bits & (1 << i) != 0)
            .map(|i| i + 1)
    }

    /// Spreads a pattern over the mask positions of a raw sample.
    pub fn scatter(&self, pattern: BitPattern) -> u32 {
        debug_assert_eq!(pattern.len, self.width());
        let mut out = 0;
        let mut src = 0;
        let mut m = self.bits;
        while m != 0 {
            let low = m & m.wrapping_neg();
            if pattern.bits >> src & 1 == 1 {
                out |= low;
            }
            src += 1;
            m &= m - 1;
        }
        out
    }

    /// Inverse of [`LayerMask::scatter`].
    pub fn gather(&self, raw: u32) -> BitPattern {
        let mut out = 0;
        let mut dst = 0;
        let mut m = self.bits;
        while m != 0 {
            let low = m & m.wrapping_neg();
            if raw & low != 0 {
                out |= 1 << dst;
            }
            dst += 1;
            m &= m - 1;
        }
        BitPattern {
            bits: out,
            len: self.width(),
        }
    }
}

impl fmt::Display for LayerMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list: Vec<String> = self.layers().map(|l| l.to_string()).collect();
        f.write_str(&list.join(","))
    }
}

/// `len` payload bits; bit `i` of `bits` belongs to the `i`-th lowest target layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitPattern {
    bits: u32,
    len: u32,
}

impl BitPattern {
    /// Keeps the low `len` bits of `bits`.
    pub fn new(bits: u32, len: u32) -> Self {
        assert!(len <= 16, "pattern wider than any sample");
        Self {
            bits: bits & ((1u32 << len) - 1),
            len,
        }
    }

    pub fn from_bools(bools: &[bool]) -> Self {
        let bits = bools
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | (u32::from(b) << i));
        Self::new(bits, bools.len() as u32)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: u32) -> bool {
        self.bits >> i & 1 == 1
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.bit(i)).collect()
    }
}

/// `|a - b|` on numeric sample values.
pub fn distance(a: i32, b: i32) -> u32 {
    a.abs_diff(b)
}

pub fn read_bits(sample: i32, mask: &LayerMask) -> BitPattern {
    mask.gather(mask.depth.to_raw(sample))
}

/// Overwrites the mask layers of `sample` with `pattern`; every other bit is kept.
pub fn alter(sample: i32, mask: &LayerMask, pattern: BitPattern) -> i32 {
    let depth = mask.depth;
    let raw = depth.to_raw(sample);
    depth.from_raw((raw & !mask.bits) | mask.scatter(pattern))
}

/// Value closest to `sample` that carries `pattern` at the mask layers.
/// Ties go to the smaller value.
///
/// Works in offset-binary space, where unsigned order equals numeric order,
/// and picks the better of the constrained predecessor and successor.
pub fn adjust_nearest(sample: i32, mask: &LayerMask, pattern: BitPattern) -> i32 {
    let depth = mask.depth;
    let bias = offset_bias(depth);
    let m = mask.bits;
    let q = mask.scatter(pattern) ^ (bias & m);
    let s = depth.to_raw(sample) ^ bias;
    let width = depth.bits();

    if s & m == q {
        return sample;
    }
    let below = predecessor(s, m, q, width);
    let above = successor(s, m, q, width);
    let pick = match (below, above) {
        (Some(lo), Some(hi)) => {
            if s - lo <= hi - s {
                lo
            } else {
                hi
            }
        }
        (Some(lo), None) => lo,
        (None, Some(hi)) => hi,
        (None, None) => unreachable!("every pattern has at least one carrier value"),
    };
    depth.from_raw(pick ^ bias)
}

fn offset_bias(depth: BitDepth) -> u32 {
    match depth {
        BitDepth::Eight => 0,
        BitDepth::Sixteen => 0x8000,
    }
}

/// Largest `x < s` with `x & m == q`.
///
/// Such an `x` agrees with `s` above some bit `i`, has 0 where `s` has 1 at
/// `i`, and is maximal below `i`. The lowest feasible `i` gives the largest `x`.
fn predecessor(s: u32, m: u32, q: u32, width: u32) -> Option<u32> {
    let full = (1u32 << width) - 1;
    (0..width).find_map(|i| {
        let bit = 1u32 << i;
        let above = full & !((bit << 1) - 1);
        let feasible = s & bit != 0 && (s ^ q) & m & above == 0 && (m & bit == 0 || q & bit == 0);
        feasible.then(|| {
            let low = bit - 1;
            (s & above) | (q & low) | (!m & low)
        })
    })
}

/// Smallest `x > s` with `x & m == q`; mirror image of [`predecessor`].
fn successor(s: u32, m: u32, q: u32, width: u32) -> Option<u32> {
    let full = (1u32 << width) - 1;
    (0..width).find_map(|i| {
        let bit = 1u32 << i;
        let above = full & !((bit << 1) - 1);
        let feasible = s & bit == 0 && (s ^ q) & m & above == 0 && (m & bit == 0 || q & bit != 0);
        feasible.then(|| {
            let low = bit - 1;
            (s & above) | bit | (q & low)
        })
    })
}

/// Ground truth for [`adjust_nearest`] by enumerating every in-range value.
pub fn oracle_nearest(sample: i32, mask: &LayerMask, pattern: BitPattern) -> i32 {
    let depth = mask.depth;
    let want = mask.scatter(pattern);
    (depth.min_value()..=depth.max_value())
        .filter(|&v| depth.to_raw(v) & mask.bits == want)
        .min_by_key(|&v| (distance(v, sample), v))
        .expect("every pattern has at least one carrier value")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m8(layers: &[u32]) -> LayerMask {
        LayerMask::new(layers, BitDepth::Eight).unwrap()
    }

    #[test]
    fn worked_example_single_layer() {
        let mask = m8(&[5]);
        assert_eq!(read_bits(47, &mask), BitPattern::new(0, 1));
        let p = BitPattern::new(1, 1);
        assert_eq!(alter(47, &mask, p), 63);
        assert_eq!(adjust_nearest(47, &mask, p), 48);
        assert_eq!(oracle_nearest(47, &mask, p), 48);
        assert_eq!(distance(48, 47), 1);
    }

    #[test]
    fn worked_example_two_layers() {
        let mask = m8(&[4, 5]);
        let p = BitPattern::new(0b11, 2);
        assert_eq!(alter(39, &mask, p), 63);
        assert_eq!(distance(63, 39), 24);
        assert_eq!(adjust_nearest(39, &mask, p), 31);
        assert_eq!(distance(31, 39), 8);
    }

    #[test]
    fn zero_sample_reads_zero() {
        for bits in 1..=255u32 {
            let mask = LayerMask::from_bits(bits, BitDepth::Eight).unwrap();
            assert_eq!(read_bits(0, &mask).bits(), 0);
        }
        assert_eq!(oracle_nearest(0, &m8(&[1]), BitPattern::new(0, 1)), 0);
    }

    #[test]
    fn pattern_order_is_lowest_layer_first() {
        let mask = m8(&[2, 7]);
        // layer 2 set, layer 7 clear
        assert_eq!(read_bits(0b0000_0010, &mask), BitPattern::new(0b01, 2));
        assert_eq!(read_bits(0b0100_0000, &mask), BitPattern::new(0b10, 2));
        assert_eq!(alter(0, &mask, BitPattern::from_bools(&[false, true])), 64);
    }

    #[test]
    fn sixteen_bit_sign_boundary() {
        let mask = LayerMask::new(&[16], BitDepth::Sixteen).unwrap();
        // -1 with sign bit cleared: the nearest non-negative value is 0.
        assert_eq!(adjust_nearest(-1, &mask, BitPattern::new(0, 1)), 0);
        assert_eq!(adjust_nearest(0, &mask, BitPattern::new(1, 1)), -1);
        assert_eq!(alter(0, &mask, BitPattern::new(1, 1)), -32768);
    }

    #[test]
    fn tie_breaks_to_smaller() {
        // 2 with layer 2 cleared: 1 (d=1) beats 4 (d=2).
        assert_eq!(adjust_nearest(2, &m8(&[2]), BitPattern::new(0, 1)), 1);
        // 6 = 110, layers {1,3} must be 0,0 -> candidates 2 (d=4) and 8 (d=2) -> 8.
        assert_eq!(adjust_nearest(6, &m8(&[1, 3]), BitPattern::new(0, 2)), 8);
        // 1 with layer 1 cleared: 0 and 2 are both at distance 1 -> 0.
        assert_eq!(adjust_nearest(1, &m8(&[1]), BitPattern::new(0, 1)), 0);
    }

    #[test]
    fn mask_validation() {
        assert_eq!(LayerMask::new(&[], BitDepth::Eight), Err(LayerError::Empty));
        assert!(matches!(
            LayerMask::new(&[9], BitDepth::Eight),
            Err(LayerError::OutOfRange { .. })
        ));
        assert!(matches!(
            LayerMask::new(&[0], BitDepth::Eight),
            Err(LayerError::OutOfRange { .. })
        ));
        assert_eq!(
            LayerMask::new(&[3, 3], BitDepth::Eight),
            Err(LayerError::Duplicate(3))
        );
        assert_eq!(
            LayerMask::parse("5, 4", BitDepth::Eight).unwrap(),
            m8(&[4, 5])
        );
        assert_eq!(m8(&[5, 4, 1]).to_string(), "1,4,5");
        assert!(LayerMask::parse("a", BitDepth::Eight).is_err());
        assert!(LayerMask::from_bits(0x100, BitDepth::Eight).is_err());
    }

    #[test]
    fn exhaustive_8bit_against_oracle() {
        for bits in 1..=255u32 {
            let mask = LayerMask::from_bits(bits, BitDepth::Eight).unwrap();
            let k = mask.width();
            for p in 0..(1u32 << k) {
                let pattern = BitPattern::new(p, k);
                // The oracle is O(256) per call; precompute carriers once per pattern.
                let carriers: Vec<i32> = (0..=255)
                    .filter(|&v| read_bits(v, &mask) == pattern)
                    .collect();
                for s in 0..=255 {
                    let expect = *carriers
                        .iter()
                        .min_by_key(|&&v| (distance(v, s), v))
                        .unwrap();
                    let got = adjust_nearest(s, &mask, pattern);
                    assert_eq!(got, expect, "s={s} mask={bits:#x} p={p:#b}");
                    assert!(distance(got, s) <= distance(alter(s, &mask, pattern), s));
                    assert_eq!(read_bits(alter(s, &mask, pattern), &mask), pattern);
                }
            }
        }
    }
}
