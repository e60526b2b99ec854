//! Embedding and extraction over whole buffers.
//!
//! Embedding walks the keyed sample permutation and, per sample, runs
//! alteration, modification (plain, closed-form nearest or GA), verification
//! against the distortion threshold, and reconstruction. Rejected samples keep
//! their original value; their indices go into the [`StegoKey`] so that
//! extraction can step over them.
//!
//! Payload layout: the message is XORed with the keystream, read
//! most-significant bit first, and cut into groups of `k` bits (one group per
//! used sample, first stream bit on the lowest target layer). The final group
//! is zero padded.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::bitplane::{adjust_nearest, alter, distance, read_bits, BitPattern, LayerMask};
use crate::ga_adjust::{run_ga, GaParams, GaParamsError};
use crate::keystream::{derive_seed, permute_indices, xor_keystream, MasterKey, PURPOSE_GA};
use crate::wav::{AudioBuffer, BitDepth};

pub use crate::stegokey::{KeyFileError, StegoKey, KEY_FORMAT_VERSION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("message needs {needed} bits but the cover holds only {available}")]
    InsufficientCapacity { needed: u64, available: u64 },
    #[error(
        "ran out of samples after {used} accepted and {skipped} rejected; {remaining_bits} payload bits left"
    )]
    CapacityExhaustedBySkips {
        used: usize,
        skipped: usize,
        remaining_bits: u64,
    },
    #[error("bit depth mismatch: audio is {audio}-bit, layers are for {mask}-bit")]
    BitDepthMismatch { audio: u32, mask: u32 },
    #[error("key does not match stego audio: {0}")]
    KeyMismatch(String),
    #[error("invalid GA parameters: {0}")]
    InvalidGaParams(#[from] GaParamsError),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnrError {
    #[error("buffers differ in length or format")]
    LengthMismatch,
    #[error("SNR undefined: original is silent but the stego is not")]
    NotDefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Plain,
    Nearest,
    #[default]
    Ga,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Plain, Mode::Nearest, Mode::Ga];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Nearest => "nearest",
            Mode::Ga => "ga",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(Mode::Plain),
            "nearest" => Ok(Mode::Nearest),
            "ga" => Ok(Mode::Ga),
            other => Err(format!(
                "unknown mode {other:?} (expected plain, nearest or ga)"
            )),
        }
    }
}

/// Largest per-sample distance verification accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Threshold {
    Finite(u32),
    #[default]
    Infinite,
}

impl Threshold {
    pub fn accepts(self, dist: u32) -> bool {
        match self {
            Threshold::Finite(t) => dist <= t,
            Threshold::Infinite => true,
        }
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Threshold::Finite(t) => write!(f, "{t}"),
            Threshold::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Threshold {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inf" => Ok(Threshold::Infinite),
            n => n.parse().map(Threshold::Finite).map_err(|_| {
                format!("threshold must be a non-negative integer or \"inf\", got {n:?}")
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedConfig {
    pub mask: LayerMask,
    pub key: MasterKey,
    pub mode: Mode,
    pub threshold: Threshold,
    pub ga_params: GaParams,
}

impl EmbedConfig {
    /// LSB only, GA modification, no threshold.
    pub fn new(depth: BitDepth, key: MasterKey) -> Self {
        Self {
            mask: LayerMask::new(&[1], depth).expect("layer 1 exists at every depth"),
            key,
            mode: Mode::default(),
            threshold: Threshold::default(),
            ga_params: GaParams::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbedReport {
    pub samples_used: usize,
    pub samples_skipped: usize,
    pub max_deviation: u32,
    /// `+inf` when stego equals cover, NaN when the cover is silent but the
    /// stego is not. Serialized as `"inf"` and `null` respectively.
    #[serde(serialize_with = "ser_snr", deserialize_with = "de_snr")]
    pub snr_db: f64,
    pub capacity_bits: u64,
}

fn ser_snr<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_nan() {
        s.serialize_none()
    } else if v.is_infinite() {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    } else {
        s.serialize_f64(*v)
    }
}

fn de_snr<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
        Null(()),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Repr::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
        Repr::Text(t) => Err(serde::de::Error::custom(format!("bad snr_db {t:?}"))),
        Repr::Null(()) => Ok(f64::NAN),
    }
}

pub fn capacity_bits(buffer: &AudioBuffer, mask: &LayerMask) -> u64 {
    buffer.len() as u64 * mask.width() as u64
}

pub fn verify_sample(original: i32, modified: i32, threshold: Threshold) -> bool {
    threshold.accepts(distance(original, modified))
}

/// Modification stage for one sample.
pub fn modify_sample(sample: i32, index: usize, pattern: BitPattern, config: &EmbedConfig) -> i32 {
    match config.mode {
        Mode::Plain => alter(sample, &config.mask, pattern),
        Mode::Nearest => adjust_nearest(sample, &config.mask, pattern),
        Mode::Ga => run_ga(
            sample,
            &config.mask,
            pattern,
            &config.ga_params,
            derive_seed(config.key, PURPOSE_GA, index as u64),
        ),
    }
}

/// Bit `i` of a byte stream, most significant bit of each byte first.
fn stream_bit(bytes: &[u8], i: u64) -> bool {
    let byte = (i / 8) as usize;
    byte < bytes.len() && bytes[byte] >> (7 - i % 8) & 1 == 1
}

fn group_pattern(bytes: &[u8], group: u64, width: u32) -> BitPattern {
    let bits = (0..width).fold(0u32, |acc, j| {
        acc | (u32::from(stream_bit(bytes, group * width as u64 + j as u64)) << j)
    });
    BitPattern::new(bits, width)
}

fn check_depth(audio: BitDepth, mask: &LayerMask) -> Result<(), PipelineError> {
    if audio != mask.depth() {
        return Err(PipelineError::BitDepthMismatch {
            audio: audio.bits(),
            mask: mask.depth().bits(),
        });
    }
    Ok(())
}

pub fn embed(
    cover: &AudioBuffer,
    message: &[u8],
    config: &EmbedConfig,
) -> Result<(AudioBuffer, StegoKey, EmbedReport), PipelineError> {
    check_depth(cover.bit_depth(), &config.mask)?;
    if config.mode == Mode::Ga {
        config.ga_params.validate()?;
    }
    let width = config.mask.width();
    let needed = message.len() as u64 * 8;
    let available = capacity_bits(cover, &config.mask);
    if needed > available {
        return Err(PipelineError::InsufficientCapacity { needed, available });
    }

    let ciphertext = xor_keystream(message, config.key);
    let total_groups = needed.div_ceil(width as u64);
    let original = cover.samples();
    let order = permute_indices(original.len(), config.key);

    let mut stego = original.to_vec();
    let mut skipped = Vec::new();
    let mut max_deviation = 0u32;
    let mut group = 0u64;
    let mut pos = 0usize;

    // Speculatively modify a batch assuming every sample is accepted, then
    // verify in order. A rejection shifts all later bit groups by one sample,
    // so the rest of the batch is recomputed. The batch shrinks after a
    // rejection and grows back while samples keep being accepted.
    let batch_cap: usize = match config.threshold {
        Threshold::Infinite => 4096,
        Threshold::Finite(_) => 64,
    };
    let mut batch_len = batch_cap;
    while group < total_groups {
        let remaining_samples = order.len() - pos;
        if remaining_samples == 0 {
            return Err(PipelineError::CapacityExhaustedBySkips {
                used: group as usize,
                skipped: skipped.len(),
                remaining_bits: needed - group * width as u64,
            });
        }
        let batch = (total_groups - group)
            .min(remaining_samples as u64)
            .min(batch_len as u64) as usize;
        let modified: Vec<(usize, i32)> = order[pos..pos + batch]
            .par_iter()
            .enumerate()
            .map(|(j, &idx)| {
                let pattern = group_pattern(&ciphertext, group + j as u64, width);
                (idx, modify_sample(original[idx], idx, pattern, config))
            })
            .collect();
        let mut accepted = 0;
        let mut rejected = false;
        for (idx, value) in modified {
            pos += 1;
            let dev = distance(original[idx], value);
            if config.threshold.accepts(dev) {
                stego[idx] = value;
                max_deviation = max_deviation.max(dev);
                group += 1;
                accepted += 1;
            } else {
                skipped.push(idx);
                rejected = true;
                break;
            }
        }
        batch_len = if rejected {
            (2 * accepted).clamp(4, batch_cap)
        } else {
            (2 * batch_len).min(batch_cap)
        };
    }
    skipped.sort_unstable();

    let stego = cover.with_samples(stego);
    let snr = snr_db(cover, &stego).unwrap_or(f64::NAN);
    let report = EmbedReport {
        samples_used: total_groups as usize,
        samples_skipped: skipped.len(),
        max_deviation,
        snr_db: snr,
        capacity_bits: available,
    };
    let key = StegoKey {
        format_version: KEY_FORMAT_VERSION,
        key: config.key,
        mask: config.mask,
        mode: config.mode,
        threshold: config.threshold,
        ga_params: config.ga_params,
        payload_len_bytes: message.len(),
        skipped_indices: skipped,
    };
    Ok((stego, key, report))
}

pub fn extract(stego: &AudioBuffer, key: &StegoKey) -> Result<Vec<u8>, PipelineError> {
    check_depth(stego.bit_depth(), &key.mask)?;
    let samples = stego.samples();
    if let Some(&last) = key.skipped_indices.last() {
        if last >= samples.len() {
            return Err(PipelineError::KeyMismatch(format!(
                "skipped index {last} beyond {} samples",
                samples.len()
            )));
        }
    }
    let width = key.mask.width() as u64;
    let needed = key.payload_len_bytes as u64 * 8;
    let mut ciphertext = vec![0u8; key.payload_len_bytes];
    let mut got = 0u64;

    for idx in permute_indices(samples.len(), key.key) {
        if got >= needed {
            break;
        }
        if key.skipped_indices.binary_search(&idx).is_ok() {
            continue;
        }
        let pattern = read_bits(samples[idx], &key.mask);
        for j in 0..width {
            let bit = got + j;
            if bit < needed && pattern.bit(j as u32) {
                ciphertext[(bit / 8) as usize] |= 0x80 >> (bit % 8);
            }
        }
        got += width;
    }
    if got < needed {
        return Err(PipelineError::KeyMismatch(format!(
            "declared payload needs {needed} bits, audio yields {got}"
        )));
    }
    Ok(xor_keystream(&ciphertext, key.key))
}

/// `10 log10(sum s^2 / sum (s - t)^2)` over zero-centred sample values.
pub fn snr_db(original: &AudioBuffer, stego: &AudioBuffer) -> Result<f64, SnrError> {
    if original.len() != stego.len()
        || original.bit_depth() != stego.bit_depth()
        || original.channels() != stego.channels()
    {
        return Err(SnrError::LengthMismatch);
    }
    let depth = original.bit_depth();
    let (signal, noise) = original.samples().iter().zip(stego.samples()).fold(
        (0u128, 0u128),
        |(sig, noi), (&s, &t)| {
            let s = depth.signed(s) as i64;
            let t = depth.signed(t) as i64;
            (sig + (s * s) as u128, noi + ((s - t) * (s - t)) as u128)
        },
    );
    if noise == 0 {
        return Ok(f64::INFINITY);
    }
    if signal == 0 {
        return Err(SnrError::NotDefined);
    }
    Ok(10.0 * (signal as f64 / noise as f64).log10())
}

/// Sum of squared per-sample errors.
pub fn noise_energy(original: &AudioBuffer, stego: &AudioBuffer) -> u128 {
    original
        .samples()
        .iter()
        .zip(stego.samples())
        .map(|(&a, &b)| {
            let d = distance(a, b) as u128;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf8(samples: Vec<i32>) -> AudioBuffer {
        AudioBuffer::new(samples, BitDepth::Eight, 8000, 1).unwrap()
    }

    fn buf16(samples: Vec<i32>) -> AudioBuffer {
        AudioBuffer::new(samples, BitDepth::Sixteen, 8000, 1).unwrap()
    }

    #[test]
    fn capacity() {
        let b = buf8(vec![0; 1000]);
        assert_eq!(
            capacity_bits(&b, &LayerMask::new(&[1], BitDepth::Eight).unwrap()),
            1000
        );
        assert_eq!(
            capacity_bits(&b, &LayerMask::new(&[4, 5], BitDepth::Eight).unwrap()),
            2000
        );
        assert_eq!(
            capacity_bits(
                &buf8(vec![]),
                &LayerMask::new(&[1], BitDepth::Eight).unwrap()
            ),
            0
        );
    }

    #[test]
    fn verification() {
        assert!(!verify_sample(47, 63, Threshold::Finite(10)));
        assert!(verify_sample(47, 48, Threshold::Finite(10)));
        assert!(verify_sample(0, 255, Threshold::Infinite));
        assert!(verify_sample(5, 5, Threshold::Finite(0)));
    }

    #[test]
    fn snr_examples() {
        let a = buf16(vec![2, 2]);
        let b = buf16(vec![1, 1]);
        assert!((snr_db(&a, &b).unwrap() - 6.020599913279624).abs() < 1e-12);
        assert_eq!(snr_db(&a, &a).unwrap(), f64::INFINITY);
        assert_eq!(snr_db(&buf16(vec![0, 0]), &b), Err(SnrError::NotDefined));
        assert_eq!(snr_db(&a, &buf16(vec![1])), Err(SnrError::LengthMismatch));
        assert_eq!(snr_db(&buf8(vec![1, 1]), &a), Err(SnrError::LengthMismatch));
    }

    #[test]
    fn empty_message_leaves_cover_untouched() {
        let cover = buf8((0..200).map(|i| (i * 7) % 256).collect());
        let cfg = EmbedConfig::new(BitDepth::Eight, MasterKey(3));
        let (stego, key, report) = embed(&cover, b"", &cfg).unwrap();
        assert_eq!(stego, cover);
        assert_eq!(report.samples_used, 0);
        assert_eq!(key.payload_len_bytes, 0);
        assert!(extract(&stego, &key).unwrap().is_empty());
    }

    #[test]
    fn all_47_cover_nearest() {
        // A message whose ciphertext is all ones: pre-XOR with the keystream.
        let key = MasterKey(77);
        let message = xor_keystream(&[0xFF; 8], key);
        let cover = buf8(vec![47; 256]);
        let cfg = EmbedConfig {
            mask: LayerMask::new(&[5], BitDepth::Eight).unwrap(),
            mode: Mode::Nearest,
            ..EmbedConfig::new(BitDepth::Eight, key)
        };
        let (stego, skey, report) = embed(&cover, &message, &cfg).unwrap();
        assert_eq!(report.samples_used, 64);
        assert_eq!(report.max_deviation, 1);
        assert_eq!(stego.samples().iter().filter(|&&s| s == 48).count(), 64);
        assert_eq!(stego.samples().iter().filter(|&&s| s == 47).count(), 192);
        assert_eq!(extract(&stego, &skey).unwrap(), message);
    }

    #[test]
    fn bit_packing_golden() {
        // Single-sample cover, identity permutation: the first (MSB) ciphertext
        // bit lands on the lowest target layer.
        let key = MasterKey(5);
        let ct = [0b1010_0000u8];
        let msg = xor_keystream(&ct, key);
        let cover = buf16(vec![0; 2]);
        let cfg = EmbedConfig {
            mask: LayerMask::new(&[1, 2, 3, 4, 5, 6, 7, 8], BitDepth::Sixteen).unwrap(),
            mode: Mode::Plain,
            ..EmbedConfig::new(BitDepth::Sixteen, key)
        };
        let (stego, _, _) = embed(&cover, &msg, &cfg).unwrap();
        let used: Vec<i32> = stego
            .samples()
            .iter()
            .copied()
            .filter(|&s| s != 0)
            .collect();
        // bits 1,0,1,0,0,0,0,0 on layers 1..8 => 0b0000_0101
        assert_eq!(used, vec![0b0000_0101]);
    }

    #[test]
    fn capacity_errors() {
        let cover = buf8(vec![0; 15]);
        let cfg = EmbedConfig::new(BitDepth::Eight, MasterKey(0));
        assert_eq!(
            embed(&cover, b"ab", &cfg).unwrap_err(),
            PipelineError::InsufficientCapacity {
                needed: 16,
                available: 15
            }
        );
        let cfg16 = EmbedConfig::new(BitDepth::Sixteen, MasterKey(0));
        assert!(matches!(
            embed(&cover, b"a", &cfg16),
            Err(PipelineError::BitDepthMismatch { .. })
        ));
    }

    #[test]
    fn skips_exhaust_capacity() {
        // Layer 8 flips cost >= 1 whenever the bit differs; threshold 0 rejects them.
        let cover = buf8(vec![0; 16]);
        let cfg = EmbedConfig {
            mask: LayerMask::new(&[8], BitDepth::Eight).unwrap(),
            threshold: Threshold::Finite(0),
            mode: Mode::Nearest,
            ..EmbedConfig::new(BitDepth::Eight, MasterKey(1))
        };
        let msg = xor_keystream(&[0xFF], MasterKey(1));
        assert!(matches!(
            embed(&cover, &msg, &cfg),
            Err(PipelineError::CapacityExhaustedBySkips {
                used: 0,
                skipped: 16,
                ..
            })
        ));
    }

    #[test]
    fn extract_key_mismatch() {
        let cover = buf8(vec![100; 64]);
        let cfg = EmbedConfig::new(BitDepth::Eight, MasterKey(2));
        let (stego, mut key, _) = embed(&cover, b"hi", &cfg).unwrap();
        key.payload_len_bytes = 9;
        assert!(matches!(
            extract(&stego, &key),
            Err(PipelineError::KeyMismatch(_))
        ));
        key.payload_len_bytes = 2;
        key.skipped_indices = vec![64];
        assert!(matches!(
            extract(&stego, &key),
            Err(PipelineError::KeyMismatch(_))
        ));
    }

    #[test]
    fn report_json_round_trip() {
        for snr in [12.5, f64::INFINITY] {
            let r = EmbedReport {
                samples_used: 3,
                samples_skipped: 1,
                max_deviation: 2,
                snr_db: snr,
                capacity_bits: 40,
            };
            let json = serde_json::to_string(&r).unwrap();
            assert_eq!(serde_json::from_str::<EmbedReport>(&json).unwrap(), r);
        }
        let r = EmbedReport {
            samples_used: 0,
            samples_skipped: 0,
            max_deviation: 0,
            snr_db: f64::NAN,
            capacity_bits: 0,
        };
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.contains("\"snr_db\":null"));
        assert!(serde_json::from_str::<EmbedReport>(&json)
            .unwrap()
            .snr_db
            .is_nan());
    }
}
