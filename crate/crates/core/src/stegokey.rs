//! Text form of the extraction key.
//!
//! UTF-8, one `field = value` per line, fields in this order:
//!
//! ```text
//! version = 1
//! seed = 000000000000002a
//! bit_depth = 16
//! layers = 1,2
//! mode = ga
//! threshold = inf
//! ga_pop = 16
//! ga_gens = 64
//! ga_pc = 0.8
//! ga_pm = 0.05
//! payload_len = 12
//! skipped = 3,17
//! ```
//!
//! The reader accepts any field order and blank lines, but rejects unknown,
//! duplicate or missing fields. The GA elitism count is not part of the file
//! and reads back as the default.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::bitplane::LayerMask;
use crate::ga_adjust::GaParams;
use crate::keystream::MasterKey;
use crate::pipeline::{Mode, Threshold};
use crate::wav::BitDepth;

pub const KEY_FORMAT_VERSION: u32 = 1;

const FIELDS: [&str; 12] = [
    "version",
    "seed",
    "bit_depth",
    "layers",
    "mode",
    "threshold",
    "ga_pop",
    "ga_gens",
    "ga_pc",
    "ga_pm",
    "payload_len",
    "skipped",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyFileError {
    #[error("line {0}: expected `field = value`")]
    Syntax(usize),
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("field {0:?} given twice")]
    DuplicateField(String),
    #[error("missing field {0:?}")]
    MissingField(&'static str),
    #[error("field {field}: {reason}")]
    InvalidValue { field: &'static str, reason: String },
    #[error("unsupported key format version {0}")]
    UnsupportedVersion(u32),
}

/// Everything extraction needs, plus the settings used to embed.
#[derive(Debug, Clone, PartialEq)]
pub struct StegoKey {
    pub format_version: u32,
    pub key: MasterKey,
    pub mask: LayerMask,
    pub mode: Mode,
    pub threshold: Threshold,
    pub ga_params: GaParams,
    pub payload_len_bytes: usize,
    /// Rejected sample indices, strictly increasing.
    pub skipped_indices: Vec<usize>,
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for StegoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "version = {}", self.format_version)?;
        writeln!(f, "seed = {}", self.key)?;
        writeln!(f, "bit_depth = {}", self.mask.depth().bits())?;
        writeln!(f, "layers = {}", self.mask)?;
        writeln!(f, "mode = {}", self.mode)?;
        writeln!(f, "threshold = {}", self.threshold)?;
        writeln!(f, "ga_pop = {}", self.ga_params.population_size)?;
        writeln!(f, "ga_gens = {}", self.ga_params.generations)?;
        writeln!(f, "ga_pc = {}", self.ga_params.crossover_prob)?;
        writeln!(f, "ga_pm = {}", self.ga_params.mutation_prob)?;
        writeln!(f, "payload_len = {}", self.payload_len_bytes)?;
        writeln!(f, "skipped = {}", join(&self.skipped_indices))
    }
}

fn value<T: FromStr>(fields: &HashMap<&str, &str>, name: &'static str) -> Result<T, KeyFileError>
where
    T::Err: fmt::Display,
{
    let raw = fields.get(name).ok_or(KeyFileError::MissingField(name))?;
    raw.parse().map_err(|e: T::Err| KeyFileError::InvalidValue {
        field: name,
        reason: e.to_string(),
    })
}

fn invalid(field: &'static str, reason: impl fmt::Display) -> KeyFileError {
    KeyFileError::InvalidValue {
        field,
        reason: reason.to_string(),
    }
}

impl FromStr for StegoKey {
    type Err = KeyFileError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (name, val) = line.split_once('=').ok_or(KeyFileError::Syntax(n + 1))?;
            let name = name.trim();
            if !FIELDS.contains(&name) {
                return Err(KeyFileError::UnknownField(name.to_string()));
            }
            if fields.insert(name, val.trim()).is_some() {
                return Err(KeyFileError::DuplicateField(name.to_string()));
            }
        }

        let version: u32 = value(&fields, "version")?;
        if version != KEY_FORMAT_VERSION {
            return Err(KeyFileError::UnsupportedVersion(version));
        }
        let seed: String = value(&fields, "seed")?;
        if seed.len() != 16 {
            return Err(invalid("seed", "expected 16 hex digits"));
        }
        let key: MasterKey = seed.parse().map_err(|e| invalid("seed", e))?;
        let bits: u16 = value(&fields, "bit_depth")?;
        let depth =
            BitDepth::from_bits(bits).ok_or_else(|| invalid("bit_depth", "must be 8 or 16"))?;
        let layers: String = value(&fields, "layers")?;
        let mask = LayerMask::parse(&layers, depth).map_err(|e| invalid("layers", e))?;
        let ga_params = GaParams {
            population_size: value(&fields, "ga_pop")?,
            generations: value(&fields, "ga_gens")?,
            crossover_prob: value(&fields, "ga_pc")?,
            mutation_prob: value(&fields, "ga_pm")?,
            ..GaParams::default()
        };

        let skipped_raw: String = value(&fields, "skipped")?;
        let skipped_indices = if skipped_raw.is_empty() {
            Vec::new()
        } else {
            skipped_raw
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| invalid("skipped", e))?
        };
        if skipped_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("skipped", "indices must be strictly increasing"));
        }

        Ok(StegoKey {
            format_version: version,
            key,
            mask,
            mode: value(&fields, "mode")?,
            threshold: value(&fields, "threshold")?,
            ga_params,
            payload_len_bytes: value(&fields, "payload_len")?,
            skipped_indices,
        })
    }
}
