//! C ABI over `stegga`.
//!
//! Every fallible function returns a [`SteggaStatus`]; on failure a message is
//! available from [`stegga_last_error`] on the same thread. Objects are
//! opaque handles released with their matching `_free` function. Byte
//! buffers handed out by the library are released with [`stegga_bytes_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use stegga::bitplane::{adjust_nearest, alter, BitPattern, LayerMask};
use stegga::ga_adjust::GaParams;
use stegga::keystream::MasterKey;
use stegga::pipeline::{self, EmbedConfig, Mode, PipelineError, Threshold};
use stegga::stegokey::StegoKey;
use stegga::wav::{self, AudioBuffer, BitDepth, WavError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteggaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    MalformedWav = 3,
    UnsupportedWav = 4,
    TruncatedWav = 5,
    InsufficientCapacity = 6,
    KeyMismatch = 7,
    MalformedKey = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteggaMode {
    Plain = 0,
    Nearest = 1,
    Ga = 2,
}

/// Decoded PCM audio.
pub struct SteggaAudio(AudioBuffer);

/// Extraction key.
pub struct SteggaKey(StegoKey);

/// Library-owned bytes.
#[repr(C)]
pub struct SteggaBytes {
    pub data: *mut u8,
    pub len: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SteggaAudioInfo {
    pub bit_depth: u16,
    pub channels: u16,
    pub sample_rate: u32,
    pub samples: usize,
}

/// `layer_bits` has bit `j - 1` set for each target layer `j`.
/// A negative `threshold` means unbounded.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SteggaEmbedConfig {
    pub layer_bits: u32,
    pub seed: u64,
    pub mode: SteggaMode,
    pub threshold: i64,
    pub ga_population: u32,
    pub ga_generations: u32,
    pub ga_crossover_prob: f64,
    pub ga_mutation_prob: f64,
}

/// `snr_db` is +infinity for an unchanged cover and NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SteggaEmbedReport {
    pub samples_used: usize,
    pub samples_skipped: usize,
    pub max_deviation: u32,
    pub snr_db: f64,
    pub capacity_bits: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SteggaStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SteggaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SteggaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SteggaStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SteggaStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(SteggaStatus::InvalidArgument, msg.into())
}

fn wav_failure(e: WavError) -> Failure {
    let status = match e {
        WavError::MalformedContainer(_) => SteggaStatus::MalformedWav,
        WavError::UnsupportedFormat(_) => SteggaStatus::UnsupportedWav,
        WavError::TruncatedData { .. } => SteggaStatus::TruncatedWav,
        WavError::InvalidBuffer(_) => SteggaStatus::InvalidArgument,
    };
    Failure(status, e.to_string())
}

fn pipeline_failure(e: PipelineError) -> Failure {
    let status = match e {
        PipelineError::InsufficientCapacity { .. }
        | PipelineError::CapacityExhaustedBySkips { .. } => SteggaStatus::InsufficientCapacity,
        PipelineError::KeyMismatch(_) | PipelineError::BitDepthMismatch { .. } => {
            SteggaStatus::KeyMismatch
        }
        PipelineError::InvalidGaParams(_) => SteggaStatus::InvalidArgument,
    };
    Failure(status, e.to_string())
}

unsafe fn input<'a>(data: *const u8, len: usize, what: &str) -> Result<&'a [u8], Failure> {
    if len == 0 {
        Ok(&[])
    } else if data.is_null() {
        Err(null(what))
    } else {
        Ok(slice::from_raw_parts(data, len))
    }
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

fn into_bytes(v: Vec<u8>) -> SteggaBytes {
    let boxed = v.into_boxed_slice();
    let len = boxed.len();
    SteggaBytes {
        data: Box::into_raw(boxed) as *mut u8,
        len,
    }
}

fn depth_of(bits: u16) -> Result<BitDepth, Failure> {
    BitDepth::from_bits(bits).ok_or_else(|| invalid(format!("bit depth {bits} (expected 8 or 16)")))
}

fn mask_of(layer_bits: u32, depth: BitDepth) -> Result<LayerMask, Failure> {
    LayerMask::from_bits(layer_bits, depth).map_err(|e| invalid(e.to_string()))
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn stegga_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn stegga_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `data` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_audio_parse(
    data: *const u8,
    len: usize,
    out: *mut *mut SteggaAudio,
) -> SteggaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let buf = wav::parse_wav(input(data, len, "data")?).map_err(wav_failure)?;
        *out = Box::into_raw(Box::new(SteggaAudio(buf)));
        Ok(())
    })
}

/// Builds audio from interleaved samples (8-bit: 0..=255, 16-bit: signed).
///
/// # Safety
/// `samples` must point to `count` readable values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_audio_new(
    samples: *const i32,
    count: usize,
    bit_depth: u16,
    sample_rate: u32,
    channels: u16,
    out: *mut *mut SteggaAudio,
) -> SteggaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let samples = if count == 0 {
            Vec::new()
        } else if samples.is_null() {
            return Err(null("samples"));
        } else {
            slice::from_raw_parts(samples, count).to_vec()
        };
        let buf = AudioBuffer::new(samples, depth_of(bit_depth)?, sample_rate, channels)
            .map_err(wav_failure)?;
        *out = Box::into_raw(Box::new(SteggaAudio(buf)));
        Ok(())
    })
}

/// # Safety
/// `audio` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_audio_info(
    audio: *const SteggaAudio,
    out: *mut SteggaAudioInfo,
) -> SteggaStatus {
    guard(|| {
        let a = &audio.as_ref().ok_or_else(|| null("audio"))?.0;
        *out_ptr(out, "out")? = SteggaAudioInfo {
            bit_depth: a.bit_depth().bits() as u16,
            channels: a.channels(),
            sample_rate: a.sample_rate(),
            samples: a.len(),
        };
        Ok(())
    })
}

/// Copies up to `capacity` samples into `dest`; `written` receives the count.
///
/// # Safety
/// `audio` must be a live handle, `dest` must hold `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn stegga_audio_samples(
    audio: *const SteggaAudio,
    dest: *mut i32,
    capacity: usize,
    written: *mut usize,
) -> SteggaStatus {
    guard(|| {
        let a = &audio.as_ref().ok_or_else(|| null("audio"))?.0;
        let written = out_ptr(written, "written")?;
        let n = a.len().min(capacity);
        if n > 0 {
            if dest.is_null() {
                return Err(null("dest"));
            }
            slice::from_raw_parts_mut(dest, n).copy_from_slice(&a.samples()[..n]);
        }
        *written = n;
        Ok(())
    })
}

/// Encodes as a canonical WAV file.
///
/// # Safety
/// `audio` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_audio_write(
    audio: *const SteggaAudio,
    out: *mut SteggaBytes,
) -> SteggaStatus {
    guard(|| {
        let a = &audio.as_ref().ok_or_else(|| null("audio"))?.0;
        *out_ptr(out, "out")? = into_bytes(wav::write_wav(a));
        Ok(())
    })
}

/// # Safety
/// `audio` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stegga_audio_free(audio: *mut SteggaAudio) {
    if !audio.is_null() {
        drop(Box::from_raw(audio));
    }
}

/// # Safety
/// `bytes` must be null or a buffer returned by this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn stegga_bytes_free(bytes: SteggaBytes) {
    if !bytes.data.is_null() {
        drop(Box::from_raw(ptr::slice_from_raw_parts_mut(
            bytes.data, bytes.len,
        )));
    }
}

/// Layer 1, GA mode, unbounded threshold, default GA parameters.
#[no_mangle]
pub extern "C" fn stegga_embed_config_default(seed: u64) -> SteggaEmbedConfig {
    let ga = GaParams::default();
    SteggaEmbedConfig {
        layer_bits: 1,
        seed,
        mode: SteggaMode::Ga,
        threshold: -1,
        ga_population: ga.population_size as u32,
        ga_generations: ga.generations as u32,
        ga_crossover_prob: ga.crossover_prob,
        ga_mutation_prob: ga.mutation_prob,
    }
}

fn embed_config(c: &SteggaEmbedConfig, depth: BitDepth) -> Result<EmbedConfig, Failure> {
    let threshold = if c.threshold < 0 {
        Threshold::Infinite
    } else {
        Threshold::Finite(u32::try_from(c.threshold).map_err(|_| invalid("threshold too large"))?)
    };
    Ok(EmbedConfig {
        mask: mask_of(c.layer_bits, depth)?,
        key: MasterKey(c.seed),
        mode: match c.mode {
            SteggaMode::Plain => Mode::Plain,
            SteggaMode::Nearest => Mode::Nearest,
            SteggaMode::Ga => Mode::Ga,
        },
        threshold,
        ga_params: GaParams {
            population_size: c.ga_population as usize,
            generations: c.ga_generations as usize,
            crossover_prob: c.ga_crossover_prob,
            mutation_prob: c.ga_mutation_prob,
            ..GaParams::default()
        },
    })
}

/// Hides `message` in `cover`. On success `stego_out` and `key_out` receive
/// new handles; `report_out` may be null.
///
/// # Safety
/// Pointers must be valid for their stated use; `config.mode` must be a
/// declared `SteggaMode` value.
#[no_mangle]
pub unsafe extern "C" fn stegga_embed(
    cover: *const SteggaAudio,
    message: *const u8,
    message_len: usize,
    config: *const SteggaEmbedConfig,
    stego_out: *mut *mut SteggaAudio,
    key_out: *mut *mut SteggaKey,
    report_out: *mut SteggaEmbedReport,
) -> SteggaStatus {
    guard(|| {
        let cover = &cover.as_ref().ok_or_else(|| null("cover"))?.0;
        let config = config.as_ref().ok_or_else(|| null("config"))?;
        let stego_out = out_ptr(stego_out, "stego_out")?;
        let key_out = out_ptr(key_out, "key_out")?;
        let message = input(message, message_len, "message")?;
        let config = embed_config(config, cover.bit_depth())?;
        let (stego, key, report) =
            pipeline::embed(cover, message, &config).map_err(pipeline_failure)?;
        *stego_out = Box::into_raw(Box::new(SteggaAudio(stego)));
        *key_out = Box::into_raw(Box::new(SteggaKey(key)));
        if let Some(r) = report_out.as_mut() {
            *r = SteggaEmbedReport {
                samples_used: report.samples_used,
                samples_skipped: report.samples_skipped,
                max_deviation: report.max_deviation,
                snr_db: report.snr_db,
                capacity_bits: report.capacity_bits,
            };
        }
        Ok(())
    })
}

/// Recovers the message; release `out` with [`stegga_bytes_free`].
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_extract(
    stego: *const SteggaAudio,
    key: *const SteggaKey,
    out: *mut SteggaBytes,
) -> SteggaStatus {
    guard(|| {
        let stego = &stego.as_ref().ok_or_else(|| null("stego"))?.0;
        let key = &key.as_ref().ok_or_else(|| null("key"))?.0;
        let out = out_ptr(out, "out")?;
        *out = into_bytes(pipeline::extract(stego, key).map_err(pipeline_failure)?);
        Ok(())
    })
}

/// Parses the text key format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_key_parse(
    text: *const c_char,
    out: *mut *mut SteggaKey,
) -> SteggaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Failure(SteggaStatus::MalformedKey, "key text is not UTF-8".into()))?;
        let key: StegoKey = text.parse().map_err(|e: stegga::stegokey::KeyFileError| {
            Failure(SteggaStatus::MalformedKey, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(SteggaKey(key)));
        Ok(())
    })
}

/// Renders the key in its text format (not NUL-terminated).
///
/// # Safety
/// `key` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_key_to_string(
    key: *const SteggaKey,
    out: *mut SteggaBytes,
) -> SteggaStatus {
    guard(|| {
        let key = &key.as_ref().ok_or_else(|| null("key"))?.0;
        *out_ptr(out, "out")? = into_bytes(key.to_string().into_bytes());
        Ok(())
    })
}

/// # Safety
/// `key` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn stegga_key_free(key: *mut SteggaKey) {
    if !key.is_null() {
        drop(Box::from_raw(key));
    }
}

unsafe fn adjust_with(
    f: fn(i32, &LayerMask, BitPattern) -> i32,
    sample: i32,
    bit_depth: u16,
    layer_bits: u32,
    pattern: u32,
    out: *mut i32,
) -> SteggaStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let depth = depth_of(bit_depth)?;
        if !depth.contains(sample) {
            return Err(invalid(format!(
                "sample {sample} outside {}-bit range",
                depth.bits()
            )));
        }
        let mask = mask_of(layer_bits, depth)?;
        *out = f(sample, &mask, BitPattern::new(pattern, mask.width()));
        Ok(())
    })
}

/// Closest in-range value carrying `pattern` (lowest layer in bit 0).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_adjust_nearest(
    sample: i32,
    bit_depth: u16,
    layer_bits: u32,
    pattern: u32,
    out: *mut i32,
) -> SteggaStatus {
    adjust_with(adjust_nearest, sample, bit_depth, layer_bits, pattern, out)
}

/// `sample` with only the target layers overwritten.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stegga_alter(
    sample: i32,
    bit_depth: u16,
    layer_bits: u32,
    pattern: u32,
    out: *mut i32,
) -> SteggaStatus {
    adjust_with(alter, sample, bit_depth, layer_bits, pattern, out)
}
