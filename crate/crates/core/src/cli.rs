//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 I/O or parse failure, 2 capacity or configuration
//! error, 3 key does not match the stego audio, 4 oracle violation.

use std::collections::hash_map::RandomState;
use std::fmt::Write as _;
use std::fs;
use std::hash::BuildHasher;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::bitplane::{adjust_nearest, alter, distance, oracle_nearest, BitPattern, LayerMask};
use crate::ga_adjust::{run_ga, GaParams};
use crate::keystream::{MasterKey, SplitMix64};
use crate::msg_ga::{self, MsgGaError, MsgGaParams};
use crate::pipeline::{self, capacity_bits, EmbedConfig, Mode, PipelineError, Threshold};
use crate::stegokey::StegoKey;
use crate::wav::{self, AudioBuffer, BitDepth, WavError};

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_KEY_MISMATCH: u8 = 3;
pub const EXIT_ORACLE: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::InsufficientCapacity { .. }
            | PipelineError::CapacityExhaustedBySkips { .. }
            | PipelineError::InvalidGaParams(_) => EXIT_CONFIG,
            PipelineError::KeyMismatch(_) | PipelineError::BitDepthMismatch { .. } => {
                EXIT_KEY_MISMATCH
            }
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stegga",
    version,
    about = "Hide messages in the bit layers of PCM WAV audio"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed a message file into a cover WAV
    Embed(EmbedArgs),
    /// Recover a message from a stego WAV and its key file
    Extract(ExtractArgs),
    /// Print WAV metadata and embedding capacity
    Inspect(InspectArgs),
    /// Run the message genetic algorithm and optionally derive a master key
    KeygenGa(KeygenArgs),
    /// Check the nearest-value adjuster and the GA against brute force
    OracleCheck(OracleArgs),
    /// Time embedding throughput per mode
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Master seed as hex (up to 16 digits)
    #[arg(long, default_value = "0")]
    pub seed: String,
    /// Draw the master seed from the OS instead of --seed
    #[arg(long, conflicts_with = "seed")]
    pub random_seed: bool,
}

impl SeedArgs {
    fn key(&self) -> Result<MasterKey, Failure> {
        if self.random_seed {
            return Ok(MasterKey(RandomState::new().hash_one(Instant::now())));
        }
        self.seed
            .parse()
            .map_err(|e| Failure::config(format!("bad --seed {:?}: {e}", self.seed)))
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub cover: PathBuf,
    #[arg(long)]
    pub message: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub key_out: PathBuf,
    /// Comma-separated target layers, 1 = LSB
    #[arg(long, default_value = "1")]
    pub layers: String,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// plain, nearest or ga
    #[arg(long, default_value = "ga")]
    pub mode: String,
    /// Largest accepted per-sample deviation, or "inf"
    #[arg(long, default_value = "inf")]
    pub threshold: String,
    #[arg(long, default_value_t = GaParams::default().population_size)]
    pub ga_pop: usize,
    #[arg(long, default_value_t = GaParams::default().generations)]
    pub ga_gens: usize,
    #[arg(long, default_value_t = GaParams::default().crossover_prob)]
    pub ga_pc: f64,
    #[arg(long, default_value_t = GaParams::default().mutation_prob)]
    pub ga_pm: f64,
    /// Derive the master key from the message GA's best individual
    #[arg(long)]
    pub seed_from_message_ga: bool,
    /// Also write the report as JSON
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub stego: PathBuf,
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub wav: PathBuf,
    /// Extra layer list to report capacity for
    #[arg(long)]
    pub layers: Option<String>,
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long)]
    pub message: PathBuf,
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub genes: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub max_gens: usize,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Print a master key derived from the best individual
    #[arg(long)]
    pub emit_master_key: bool,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Number of random GA cases
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    /// Bit depth of the GA cases (8 or 16)
    #[arg(long, default_value_t = 8)]
    pub bit_depth: u16,
    /// Number of random 16-bit cases for the nearest-value check
    #[arg(long, default_value_t = 10_000)]
    pub nearest_samples: usize,
    #[arg(long, default_value = "0")]
    pub seed: String,
    /// Swap the adjuster for plain alteration to prove the check can fail
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Cover WAV; a synthetic 16-bit tone is used when omitted
    #[arg(long)]
    pub cover: Option<PathBuf>,
    /// Message size in bytes
    #[arg(long, default_value_t = 1024)]
    pub bytes: usize,
    #[arg(long, default_value = "1")]
    pub layers: String,
}

pub fn run(cli: Cli) -> Result<String, Failure> {
    match cli.command {
        Command::Embed(a) => cmd_embed(&a),
        Command::Extract(a) => cmd_extract(&a),
        Command::Inspect(a) => cmd_inspect(&a),
        Command::KeygenGa(a) => cmd_keygen_ga(&a),
        Command::OracleCheck(a) => cmd_oracle_check(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

/// Parses `std::env::args`, runs, prints, and maps failures to exit codes.
pub fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("stegga: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn read_wav(path: &Path) -> Result<AudioBuffer, Failure> {
    wav::parse_wav(&read(path)?).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn mask_for(list: &str, depth: BitDepth) -> Result<LayerMask, Failure> {
    LayerMask::parse(list, depth).map_err(|e| Failure::config(format!("--layers {list:?}: {e}")))
}

fn format_snr(snr: f64) -> String {
    if snr.is_nan() {
        "undefined".into()
    } else if snr.is_infinite() {
        "inf".into()
    } else {
        format!("{snr:.4}")
    }
}

pub fn cmd_embed(a: &EmbedArgs) -> Result<String, Failure> {
    let cover = read_wav(&a.cover)?;
    let message = read(&a.message)?;
    let mask = mask_for(&a.layers, cover.bit_depth())?;
    let mode: Mode = a.mode.parse().map_err(Failure::config)?;
    let threshold: Threshold = a.threshold.parse().map_err(Failure::config)?;
    let mut key = a.seed.key()?;
    if a.seed_from_message_ga {
        let evo = msg_ga::evolve(
            &message,
            &MsgGaParams {
                seed: key.0,
                ..Default::default()
            },
        )
        .map_err(|e| Failure::config(format!("message GA: {e}")))?;
        key = msg_ga::master_key_from_genes(key, &evo.best);
    }
    let config = EmbedConfig {
        mask,
        key,
        mode,
        threshold,
        ga_params: GaParams {
            population_size: a.ga_pop,
            generations: a.ga_gens,
            crossover_prob: a.ga_pc,
            mutation_prob: a.ga_pm,
            ..GaParams::default()
        },
    };
    let (stego, stego_key, report) = pipeline::embed(&cover, &message, &config)?;
    write(&a.out, &wav::write_wav(&stego))?;
    write(&a.key_out, stego_key.to_string().as_bytes())?;
    if let Some(path) = &a.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write(path, json.as_bytes())?;
    }

    let mut out = String::new();
    writeln!(out, "samples_used: {}", report.samples_used).unwrap();
    writeln!(out, "samples_skipped: {}", report.samples_skipped).unwrap();
    writeln!(out, "max_deviation: {}", report.max_deviation).unwrap();
    writeln!(out, "snr_db: {}", format_snr(report.snr_db)).unwrap();
    writeln!(out, "capacity_bits: {}", report.capacity_bits).unwrap();
    Ok(out)
}

pub fn cmd_extract(a: &ExtractArgs) -> Result<String, Failure> {
    let key_text =
        fs::read_to_string(&a.key).map_err(|e| Failure::io(format!("{}: {e}", a.key.display())))?;
    let key: StegoKey = key_text
        .parse()
        .map_err(|e| Failure::io(format!("{}: {e}", a.key.display())))?;
    let stego = wav::parse_wav(&read(&a.stego)?).map_err(|e| {
        let code = match e {
            WavError::TruncatedData { .. } => EXIT_KEY_MISMATCH,
            _ => EXIT_IO,
        };
        Failure {
            code,
            message: format!("{}: {e}", a.stego.display()),
        }
    })?;
    let message = pipeline::extract(&stego, &key)?;
    write(&a.out, &message)?;
    Ok(format!("extracted {} bytes\n", message.len()))
}

pub fn cmd_inspect(a: &InspectArgs) -> Result<String, Failure> {
    let audio = read_wav(&a.wav)?;
    let depth = audio.bit_depth();
    let mut out = String::new();
    writeln!(out, "bit_depth: {}", depth.bits()).unwrap();
    writeln!(out, "channels: {}", audio.channels()).unwrap();
    writeln!(out, "sample_rate: {}", audio.sample_rate()).unwrap();
    writeln!(out, "samples: {}", audio.len()).unwrap();
    let frames = audio.len() / audio.channels() as usize;
    if audio.sample_rate() > 0 {
        writeln!(
            out,
            "duration_s: {:.3}",
            frames as f64 / audio.sample_rate() as f64
        )
        .unwrap();
    }
    let mut masks: Vec<LayerMask> = (1..=depth.bits())
        .map(|top| LayerMask::new(&(1..=top).collect::<Vec<_>>(), depth).unwrap())
        .collect();
    if let Some(list) = &a.layers {
        masks.push(mask_for(list, depth)?);
    }
    for mask in masks {
        let bits = capacity_bits(&audio, &mask);
        writeln!(out, "capacity[{mask}]: {bits} bits ({} bytes)", bits / 8).unwrap();
    }
    Ok(out)
}

pub fn cmd_keygen_ga(a: &KeygenArgs) -> Result<String, Failure> {
    let message = read(&a.message)?;
    let base = a.seed.key()?;
    let params = MsgGaParams {
        population_size: a.pop,
        genes: a.genes,
        max_generations: a.max_gens,
        seed: base.0,
    };
    let evo = msg_ga::evolve(&message, &params).map_err(|e| match e {
        MsgGaError::UnreachableOptimum { .. } => {
            Failure::config(format!("{e}; raise --genes to at least the distinct count"))
        }
        other => Failure::config(other.to_string()),
    })?;
    let genes: Vec<String> = evo.best.iter().map(|g| g.to_string()).collect();
    let mut out = String::new();
    writeln!(out, "best: [{}]", genes.join(", ")).unwrap();
    writeln!(out, "fitness: {}", evo.best_fitness).unwrap();
    writeln!(out, "distinct: {}", evo.target_fitness).unwrap();
    writeln!(out, "generations: {}", evo.generations_used).unwrap();
    if a.emit_master_key {
        writeln!(
            out,
            "master_key: {}",
            msg_ga::master_key_from_genes(base, &evo.best)
        )
        .unwrap();
    }
    Ok(out)
}

fn percent(hits: usize, total: usize) -> f64 {
    if total == 0 {
        100.0
    } else {
        100.0 * hits as f64 / total as f64
    }
}

fn random_case(depth: BitDepth, rng: &mut SplitMix64) -> (i32, LayerMask, BitPattern) {
    let sample = depth.from_raw(rng.next_u64() as u32);
    let bits = 1 + rng.below(depth.full_mask() as u64) as u32;
    let mask = LayerMask::from_bits(bits, depth).expect("non-empty in-range mask");
    let pattern = BitPattern::new(rng.next_u64() as u32, mask.width());
    (sample, mask, pattern)
}

pub fn cmd_oracle_check(a: &OracleArgs) -> Result<String, Failure> {
    let seed: MasterKey = a
        .seed
        .parse()
        .map_err(|e| Failure::config(format!("bad --seed: {e}")))?;
    let ga_depth = BitDepth::from_bits(a.bit_depth).ok_or_else(|| {
        Failure::config(format!("--bit-depth {} (expected 8 or 16)", a.bit_depth))
    })?;
    let adjust = |s: i32, m: &LayerMask, p: BitPattern| {
        if a.inject_fault {
            alter(s, m, p)
        } else {
            adjust_nearest(s, m, p)
        }
    };
    let mut rng = SplitMix64::new(seed.0);
    let mut out = String::new();

    // Exhaustive at 8 bits over every mask and pattern.
    let (mut hits8, mut total8) = (0usize, 0usize);
    for bits in 1..=255u32 {
        let mask = LayerMask::from_bits(bits, BitDepth::Eight).unwrap();
        for p in 0..1u32 << mask.width() {
            let pattern = BitPattern::new(p, mask.width());
            let target = mask.scatter(pattern);
            let carriers: Vec<i32> = (0..=255).filter(|&v| v as u32 & bits == target).collect();
            for s in 0..=255 {
                let best = *carriers
                    .iter()
                    .min_by_key(|&&v| (distance(v, s), v))
                    .unwrap();
                total8 += 1;
                hits8 += usize::from(adjust(s, &mask, pattern) == best);
            }
        }
    }
    writeln!(
        out,
        "nearest 8-bit: {:.2}% match ({hits8}/{total8})",
        percent(hits8, total8)
    )
    .unwrap();

    let mut hits16 = 0usize;
    for _ in 0..a.nearest_samples {
        let (s, mask, pattern) = random_case(BitDepth::Sixteen, &mut rng);
        hits16 += usize::from(adjust(s, &mask, pattern) == oracle_nearest(s, &mask, pattern));
    }
    writeln!(
        out,
        "nearest 16-bit: {:.2}% match ({hits16}/{})",
        percent(hits16, a.nearest_samples),
        a.nearest_samples
    )
    .unwrap();
    let nearest_ok = hits8 == total8 && hits16 == a.nearest_samples;
    if nearest_ok {
        writeln!(out, "nearest: 100% match").unwrap();
    }

    let params = GaParams::default();
    let (mut ga_hits, mut ga_worse) = (0usize, 0usize);
    for _ in 0..a.samples {
        let (s, mask, pattern) = random_case(ga_depth, &mut rng);
        let got = run_ga(s, &mask, pattern, &params, rng.next_u64());
        let d = distance(got, s);
        ga_hits += usize::from(d == distance(oracle_nearest(s, &mask, pattern), s));
        ga_worse += usize::from(d > distance(alter(s, &mask, pattern), s));
    }
    let ga_rate = percent(ga_hits, a.samples);
    writeln!(
        out,
        "ga {}-bit: {ga_rate:.2}% match ({ga_hits}/{}), worse than alteration: {ga_worse}",
        ga_depth.bits(),
        a.samples
    )
    .unwrap();

    if !nearest_ok {
        return Err(Failure {
            code: EXIT_ORACLE,
            message: format!("nearest-value adjuster disagrees with brute force\n{out}"),
        });
    }
    if ga_rate < 99.0 || ga_worse > 0 {
        return Err(Failure {
            code: EXIT_ORACLE,
            message: format!("GA below 99% oracle agreement\n{out}"),
        });
    }
    Ok(out)
}

/// One second of a deterministic two-tone signal at 44.1 kHz, 16-bit mono.
fn synthetic_cover() -> AudioBuffer {
    let rate = 44_100u32;
    let samples = (0..rate)
        .map(|i| {
            let t = i as f64 / rate as f64;
            let v = 0.5 * (2.0 * std::f64::consts::PI * 440.0 * t).sin()
                + 0.25 * (2.0 * std::f64::consts::PI * 1250.0 * t).sin();
            (v * 32767.0 * 0.9).round() as i32
        })
        .collect();
    AudioBuffer::new(samples, BitDepth::Sixteen, rate, 1).expect("in range")
}

pub fn cmd_bench(a: &BenchArgs) -> Result<String, Failure> {
    let cover = match &a.cover {
        Some(path) => read_wav(path)?,
        None => synthetic_cover(),
    };
    let mask = mask_for(&a.layers, cover.bit_depth())?;
    let mut rng = SplitMix64::new(1);
    let message: Vec<u8> = (0..a.bytes).map(|_| rng.next_u64() as u8).collect();
    let mut out = String::new();
    for mode in Mode::ALL {
        let config = EmbedConfig {
            mask,
            mode,
            ..EmbedConfig::new(cover.bit_depth(), MasterKey(1))
        };
        let start = Instant::now();
        let (_, _, report) = pipeline::embed(&cover, &message, &config)?;
        let secs = start.elapsed().as_secs_f64();
        writeln!(
            out,
            "{mode:>8}: {:.3} s, {:.0} samples/s, snr_db {}",
            secs,
            report.samples_used as f64 / secs.max(1e-9),
            format_snr(report.snr_db)
        )
        .unwrap();
    }
    Ok(out)
}
