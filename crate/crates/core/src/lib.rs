//! Keyed audio steganography over the bit layers of PCM WAV samples.
//!
//! Payload bits replace chosen bit layers of samples visited in a keyed
//! pseudo-random order. The remaining bits of each sample are then adjusted,
//! either in closed form or by a small genetic search, so the stego sample
//! stays as close as possible to the original. A per-sample distortion
//! threshold can reject samples outright; rejections are recorded in the key.

pub mod bitplane;
pub mod cli;
pub mod ga_adjust;
pub mod keystream;
pub mod msg_ga;
pub mod pipeline;
pub mod stegokey;
pub mod wav;

pub use bitplane::{
    adjust_nearest, alter, distance, oracle_nearest, read_bits, BitPattern, LayerMask,
};
pub use ga_adjust::{run_ga, GaParams};
pub use keystream::{derive_seed, permute_indices, xor_keystream, MasterKey};
pub use pipeline::{
    embed, extract, snr_db, EmbedConfig, EmbedReport, Mode, PipelineError, Threshold,
};
pub use stegokey::StegoKey;
pub use wav::{parse_wav, write_wav, AudioBuffer, BitDepth, WavError};
