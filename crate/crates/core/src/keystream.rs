//! Keyed randomness: seed derivation, the sample-visit permutation and the
//! payload keystream.
//!
//! Everything here is normative. Stego files move between machines and
//! implementations, so the generator and mixing function are fixed below
//! rather than borrowed from a platform RNG.
//!
//! **Generator** (SplitMix64). State is one `u64`. Each step:
//!
//! ```text
//! state = state + 0x9E3779B97F4A7C15          (wrapping)
//! return mix64(state)
//! ```
//!
//! **Mixer** `mix64(z)`:
//!
//! ```text
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9    (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB    (wrapping)
//! z =  z ^ (z >> 31)
//! ```
//!
//! **Seed derivation** `derive_seed(seed, purpose, index)`, where `fnv1a64`
//! is 64-bit FNV-1a over the UTF-8 bytes of the label:
//!
//! ```text
//! h = mix64(seed + 0x9E3779B97F4A7C15)
//! h = mix64(h ^ fnv1a64(purpose))
//! h = mix64(h ^ (index * 0x9E3779B97F4A7C15))
//! ```
//!
//! **Bounded draw** `below(n)`: draw `x` until `x >= (2^64 - n) mod n`, return
//! `x mod n`. Unit floats take the top 53 bits: `(x >> 11) * 2^-53`.
//!
//! The XOR keystream is obfuscation only. It is not a cipher.

use std::fmt;
use std::str::FromStr;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub const PURPOSE_PERMUTE: &str = "permute";
pub const PURPOSE_ENCRYPT: &str = "encrypt";
pub const PURPOSE_GA: &str = "ga";

/// The user's secret. Zero is a valid key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MasterKey(pub u64);

impl fmt::Display for MasterKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for MasterKey {
    type Err = std::num::ParseIntError;

    /// Accepts plain hex, with or without a `0x` prefix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s
            .strip_prefix("0x")
            .or_else(|| s.strip_prefix("0X"))
            .unwrap_or(s);
        u64::from_str_radix(s, 16).map(MasterKey)
    }
}

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn derive_seed(key: MasterKey, purpose: &str, index: u64) -> u64 {
    let h = mix64(key.0.wrapping_add(GAMMA));
    let h = mix64(h ^ fnv1a64(purpose.as_bytes()));
    mix64(h ^ index.wrapping_mul(GAMMA))
}

/// SplitMix64 stream. See the module docs for the exact definition.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix64(self.state)
    }

    /// Uniform in `[0, n)`. `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`; `p <= 0` never fires, `p >= 1` always does.
    pub fn chance(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }
}

/// Keyed Fisher-Yates shuffle of `0..n`.
pub fn permute_indices(n: usize, key: MasterKey) -> Vec<usize> {
    let mut rng = SplitMix64::new(derive_seed(key, PURPOSE_PERMUTE, 0));
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    order
}

/// XORs `data` with the keyed stream. Applying it twice is the identity.
///
/// Stream bytes are the little-endian bytes of successive generator outputs.
pub fn xor_keystream(data: &[u8], key: MasterKey) -> Vec<u8> {
    let mut rng = SplitMix64::new(derive_seed(key, PURPOSE_ENCRYPT, 0));
    let mut out = Vec::with_capacity(data.len());
    for chunk in data.chunks(8) {
        let ks = rng.next_u64().to_le_bytes();
        out.extend(chunk.iter().zip(ks).map(|(d, k)| d ^ k));
    }
    out
}
