//! Canonical RIFF/WAVE PCM reader and writer.
//!
//! Only integer PCM (format code 1) at 8 or 16 bits per sample is accepted.
//! Unknown chunks are skipped on read; the writer always emits the 44-byte
//! canonical layout (`RIFF` header, 16-byte `fmt ` chunk, `data` chunk), so
//! `parse_wav(&write_wav(&b)) == b` for every valid buffer.

use thiserror::Error;

const PCM_FORMAT: u16 = 1;
const CANONICAL_HEADER_LEN: usize = 44;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WavError {
    #[error("malformed RIFF/WAVE container: {0}")]
    MalformedContainer(String),
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("data chunk truncated: declared {declared} bytes, found {available}")]
    TruncatedData { declared: usize, available: usize },
    #[error("invalid audio buffer: {0}")]
    InvalidBuffer(String),
}

/// Sample width. 8-bit PCM is unsigned, 16-bit PCM is two's complement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    pub fn from_bits(bits: u16) -> Option<Self> {
        match bits {
            8 => Some(BitDepth::Eight),
            16 => Some(BitDepth::Sixteen),
            _ => None,
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            BitDepth::Eight => 8,
            BitDepth::Sixteen => 16,
        }
    }

    pub fn min_value(self) -> i32 {
        match self {
            BitDepth::Eight => 0,
            BitDepth::Sixteen => i16::MIN as i32,
        }
    }

    pub fn max_value(self) -> i32 {
        match self {
            BitDepth::Eight => u8::MAX as i32,
            BitDepth::Sixteen => i16::MAX as i32,
        }
    }

    pub fn contains(self, value: i32) -> bool {
        (self.min_value()..=self.max_value()).contains(&value)
    }

    /// All-ones mask over the raw bit pattern.
    pub fn full_mask(self) -> u32 {
        (1u32 << self.bits()) - 1
    }

    /// Raw (unsigned) bit pattern of an in-range sample value.
    pub fn to_raw(self, value: i32) -> u32 {
        match self {
            BitDepth::Eight => value as u8 as u32,
            BitDepth::Sixteen => value as i16 as u16 as u32,
        }
    }

    /// Numeric sample value of a raw bit pattern; bits above the width are ignored.
    pub fn from_raw(self, raw: u32) -> i32 {
        match self {
            BitDepth::Eight => (raw as u8) as i32,
            BitDepth::Sixteen => (raw as u16 as i16) as i32,
        }
    }

    /// Value centred on zero: 8-bit samples are offset by 128, 16-bit are already signed.
    pub fn signed(self, value: i32) -> i32 {
        match self {
            BitDepth::Eight => value - 128,
            BitDepth::Sixteen => value,
        }
    }

    fn bytes_per_sample(self) -> usize {
        self.bits() as usize / 8
    }
}

/// Decoded PCM audio. Samples are interleaved across channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioBuffer {
    samples: Vec<i32>,
    bit_depth: BitDepth,
    sample_rate: u32,
    channels: u16,
}

impl AudioBuffer {
    pub fn new(
        samples: Vec<i32>,
        bit_depth: BitDepth,
        sample_rate: u32,
        channels: u16,
    ) -> Result<Self, WavError> {
        if channels == 0 {
            return Err(WavError::InvalidBuffer(
                "channel count must be at least 1".into(),
            ));
        }
        if !samples.len().is_multiple_of(channels as usize) {
            return Err(WavError::InvalidBuffer(format!(
                "{} samples is not a multiple of {} channels",
                samples.len(),
                channels
            )));
        }
        if let Some((i, v)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !bit_depth.contains(**v))
        {
            return Err(WavError::InvalidBuffer(format!(
                "sample {i} = {v} out of range for {}-bit PCM",
                bit_depth.bits()
            )));
        }
        Ok(Self {
            samples,
            bit_depth,
            sample_rate,
            channels,
        })
    }

    pub fn samples(&self) -> &[i32] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<i32> {
        self.samples
    }

    pub fn bit_depth(&self) -> BitDepth {
        self.bit_depth
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn channels(&self) -> u16 {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Same format, different samples. Samples must already be in range.
    pub(crate) fn with_samples(&self, samples: Vec<i32>) -> Self {
        debug_assert_eq!(samples.len(), self.samples.len());
        Self {
            samples,
            bit_depth: self.bit_depth,
            sample_rate: self.sample_rate,
            channels: self.channels,
        }
    }
}

struct Format {
    channels: u16,
    sample_rate: u32,
    bit_depth: BitDepth,
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn parse_fmt(body: &[u8]) -> Result<Format, WavError> {
    if body.len() < 16 {
        return Err(WavError::MalformedContainer(format!(
            "fmt chunk is {} bytes, need at least 16",
            body.len()
        )));
    }
    let audio_format = read_u16(body, 0);
    let channels = read_u16(body, 2);
    let sample_rate = read_u32(body, 4);
    let block_align = read_u16(body, 12);
    let bits = read_u16(body, 14);

    if audio_format != PCM_FORMAT {
        return Err(WavError::UnsupportedFormat(format!(
            "format code {audio_format:#06x}, only PCM (1) is supported"
        )));
    }
    let bit_depth = BitDepth::from_bits(bits).ok_or_else(|| {
        WavError::UnsupportedFormat(format!(
            "{bits} bits per sample, only 8 and 16 are supported"
        ))
    })?;
    if channels == 0 {
        return Err(WavError::MalformedContainer("zero channels".into()));
    }
    let expected_align = channels as u32 * bit_depth.bytes_per_sample() as u32;
    if block_align as u32 != expected_align {
        return Err(WavError::MalformedContainer(format!(
            "block align {block_align}, expected {expected_align}"
        )));
    }
    Ok(Format {
        channels,
        sample_rate,
        bit_depth,
    })
}

/// Decodes a RIFF/WAVE PCM file.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioBuffer, WavError> {
    if bytes.len() < 12 {
        return Err(WavError::MalformedContainer(
            "shorter than RIFF header".into(),
        ));
    }
    if &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(WavError::MalformedContainer(
            "missing RIFF/WAVE magic".into(),
        ));
    }
    let riff_size = read_u32(bytes, 4) as usize;
    if riff_size < 4 {
        return Err(WavError::MalformedContainer(format!(
            "RIFF size {riff_size} too small"
        )));
    }
    // Chunks are walked inside whichever is shorter: the declared RIFF body or the file.
    let end = bytes.len().min(riff_size.saturating_add(8));

    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= end {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body_start = pos + 8;
        let available = end - body_start;
        match id {
            b"fmt " => {
                if size > available {
                    return Err(WavError::MalformedContainer(
                        "fmt chunk overruns file".into(),
                    ));
                }
                if format.is_some() {
                    return Err(WavError::MalformedContainer("duplicate fmt chunk".into()));
                }
                format = Some(parse_fmt(&bytes[body_start..body_start + size])?);
            }
            b"data" => {
                if data.is_some() {
                    return Err(WavError::MalformedContainer("duplicate data chunk".into()));
                }
                if size > available {
                    return Err(WavError::TruncatedData {
                        declared: size,
                        available,
                    });
                }
                data = Some(&bytes[body_start..body_start + size]);
            }
            _ => {
                if size > available {
                    return Err(WavError::MalformedContainer(format!(
                        "chunk {:?} overruns file",
                        String::from_utf8_lossy(id)
                    )));
                }
            }
        }
        // Chunk bodies are word aligned; a trailing pad byte may be absent at EOF.
        pos = body_start + size + (size & 1);
    }

    let format = format.ok_or_else(|| WavError::MalformedContainer("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| WavError::MalformedContainer("no data chunk".into()))?;

    let frame = format.channels as usize * format.bit_depth.bytes_per_sample();
    if data.len() % frame != 0 {
        return Err(WavError::TruncatedData {
            declared: data.len(),
            available: data.len() - data.len() % frame,
        });
    }

    let samples: Vec<i32> = match format.bit_depth {
        BitDepth::Eight => data.iter().map(|&b| b as i32).collect(),
        BitDepth::Sixteen => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as i32)
            .collect(),
    };

    Ok(AudioBuffer {
        samples,
        bit_depth: format.bit_depth,
        sample_rate: format.sample_rate,
        channels: format.channels,
    })
}

/// Encodes a buffer as a canonical 44-byte-header PCM WAV file.
pub fn write_wav(buffer: &AudioBuffer) -> Vec<u8> {
    let depth = buffer.bit_depth;
    let bps = depth.bytes_per_sample();
    let data_len = buffer.samples.len() * bps;
    let pad = data_len & 1;
    let block_align = buffer.channels as usize * bps;

    let mut out = Vec::with_capacity(CANONICAL_HEADER_LEN + data_len + pad);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len + pad) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");

    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM_FORMAT.to_le_bytes());
    out.extend_from_slice(&buffer.channels.to_le_bytes());
    out.extend_from_slice(&buffer.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buffer.sample_rate.wrapping_mul(block_align as u32)).to_le_bytes());
    out.extend_from_slice(&(block_align as u16).to_le_bytes());
    out.extend_from_slice(&(depth.bits() as u16).to_le_bytes());

    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    match depth {
        BitDepth::Eight => out.extend(buffer.samples.iter().map(|&s| s as u8)),
        BitDepth::Sixteen => {
            for &s in &buffer.samples {
                out.extend_from_slice(&(s as i16).to_le_bytes());
            }
        }
    }
    if pad == 1 {
        out.push(0);
    }
    out
}
