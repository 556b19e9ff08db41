//! Scenario configuration: flat `key = value` files, CLI overrides, and
//! validation.
//!
//! The file grammar is one `key = value` pair per line; blank lines and
//! `#` comments are ignored. Unknown keys are rejected. All constraint
//! violations are reported together rather than one at a time.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

/// Slot-selection scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Lri,
    Saloha,
    Mmpc,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Lri => "lri",
            Scheme::Saloha => "saloha",
            Scheme::Mmpc => "mmpc",
        })
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lri" => Ok(Scheme::Lri),
            "saloha" | "s-aloha" | "s_aloha" => Ok(Scheme::Saloha),
            "mmpc" => Ok(Scheme::Mmpc),
            other => Err(format!("unknown scheme '{other}' (lri | saloha | mmpc)")),
        }
    }
}

/// What happens when a packet arrives at a device whose buffer is busy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BufferPolicy {
    /// The new packet is dropped; the buffered one keeps retransmitting.
    DropNew,
    /// The old packet is dropped and the attempt counter restarts at 1.
    DropOldRestart,
}

impl FromStr for BufferPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "drop_new" => Ok(BufferPolicy::DropNew),
            "drop_old_restart" => Ok(BufferPolicy::DropOldRestart),
            other => Err(format!(
                "unknown buffer_policy '{other}' (drop_new | drop_old_restart)"
            )),
        }
    }
}

/// All scenario parameters for one experiment.
#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub n_devices: usize,
    pub k_slots: usize,
    /// Maximum number of transmission attempts per packet.
    pub beta: usize,
    /// LRI learning rate.
    pub alpha: f64,
    /// Spatial event intensity, events per m².
    pub lambda: f64,
    /// Temporal active-frame intensity, events per frame (0 = episodic).
    pub mu: f64,
    /// Arena side length, meters.
    pub side: f64,
    /// Activation radius around an event, meters.
    pub radius: f64,
    pub scheme: Scheme,
    pub buffer_policy: BufferPolicy,
    /// Measurement length in frames (μ > 0 runs).
    pub frames: u64,
    /// Measurement length in episodes (μ = 0 runs).
    pub episodes: u64,
    /// Learning budget in frames (μ > 0 runs).
    pub learning_frames: u64,
    /// Learning budget in episodes (μ = 0 runs).
    pub learning_episodes: u64,
    pub replications: usize,
    pub base_seed: u64,
    /// Stop the learning phase early once every strategy is pure.
    pub learning_frozen_after_purity: bool,
    pub purity_epsilon: f64,
    /// Frames between strategy snapshots on gain curves.
    pub gain_window: u64,
    /// Length of each frozen snapshot evaluation (episodes when μ = 0,
    /// frames otherwise).
    pub gain_eval_frames: u64,
    /// Active frames observed to estimate correlations for MMPC.
    pub warmup_active_frames: usize,
    /// Dump strategy snapshots every this many frames in trace mode
    /// (0 = final only).
    pub snapshot_every: u64,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    Invalid(Vec<String>),
}

/// Raw key-value view of a config before validation.
#[derive(Debug, Default, Clone)]
pub struct ConfigDraft {
    values: HashMap<String, String>,
}

const KNOWN_KEYS: &[&str] = &[
    "n_devices",
    "k_slots",
    "beta",
    "alpha",
    "lambda",
    "mu",
    "side",
    "radius",
    "scheme",
    "buffer_policy",
    "frames",
    "episodes",
    "learning_frames",
    "learning_episodes",
    "replications",
    "base_seed",
    "learning_frozen_after_purity",
    "purity_epsilon",
    "gain_window",
    "gain_eval_frames",
    "warmup_active_frames",
    "snapshot_every",
];

const REQUIRED_KEYS: &[&str] = &[
    "n_devices",
    "k_slots",
    "beta",
    "alpha",
    "lambda",
    "mu",
    "side",
    "radius",
    "scheme",
];

impl ConfigDraft {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut draft = ConfigDraft::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Parse {
                    line: idx + 1,
                    message: format!("expected 'key = value', got '{line}'"),
                });
            };
            draft.set(key.trim(), value.trim()).map_err(|message| {
                ConfigError::Parse {
                    line: idx + 1,
                    message,
                }
            })?;
        }
        Ok(draft)
    }

    /// Sets or overrides one key (also used for CLI `--set key=value`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(format!("unknown key '{key}'"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Validates everything at once and builds the config.
    pub fn build(&self) -> Result<SimConfig, ConfigError> {
        let mut errors = Vec::new();
        for &key in REQUIRED_KEYS {
            if !self.values.contains_key(key) {
                errors.push(format!("missing required field '{key}'"));
            }
        }

        macro_rules! field {
            ($key:literal, $ty:ty, $default:expr) => {
                match self.values.get($key) {
                    Some(raw) => match raw.parse::<$ty>() {
                        Ok(v) => v,
                        Err(e) => {
                            errors.push(format!("field '{}': {:?} ({})", $key, raw, e));
                            $default
                        }
                    },
                    None => $default,
                }
            };
        }

        let config = SimConfig {
            n_devices: field!("n_devices", usize, 1),
            k_slots: field!("k_slots", usize, 1),
            beta: field!("beta", usize, 1),
            alpha: field!("alpha", f64, 0.01),
            lambda: field!("lambda", f64, 0.0),
            mu: field!("mu", f64, 0.0),
            side: field!("side", f64, 10.0),
            radius: field!("radius", f64, 1.25),
            scheme: field!("scheme", Scheme, Scheme::Lri),
            buffer_policy: field!("buffer_policy", BufferPolicy, BufferPolicy::DropOldRestart),
            frames: field!("frames", u64, 10_000),
            episodes: field!("episodes", u64, 5_000),
            learning_frames: field!("learning_frames", u64, 20_000),
            learning_episodes: field!("learning_episodes", u64, 20_000),
            replications: field!("replications", usize, 100),
            base_seed: field!("base_seed", u64, 1),
            learning_frozen_after_purity: field!("learning_frozen_after_purity", bool, true),
            purity_epsilon: field!("purity_epsilon", f64, 0.01),
            gain_window: field!("gain_window", u64, 250),
            gain_eval_frames: field!("gain_eval_frames", u64, 2_000),
            warmup_active_frames: field!("warmup_active_frames", usize, 10_000),
            snapshot_every: field!("snapshot_every", u64, 0),
        };

        config.check(&mut errors);
        if errors.is_empty() {
            Ok(config)
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }
}

impl SimConfig {
    fn check(&self, errors: &mut Vec<String>) {
        if self.n_devices < 1 {
            errors.push("n_devices must be >= 1".into());
        }
        if self.k_slots < 1 {
            errors.push("k_slots must be >= 1".into());
        }
        if self.beta < 1 {
            errors.push("beta must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            errors.push("alpha must be in (0, 1)".into());
        }
        if self.lambda < 0.0 {
            errors.push("lambda must be >= 0".into());
        }
        if self.mu < 0.0 {
            errors.push("mu must be >= 0".into());
        }
        if self.side <= 0.0 {
            errors.push("side must be > 0".into());
        }
        if self.radius <= 0.0 {
            errors.push("radius must be > 0".into());
        }
        if self.frames < 1 {
            errors.push("frames must be >= 1".into());
        }
        if self.episodes < 1 {
            errors.push("episodes must be >= 1".into());
        }
        if self.replications < 1 {
            errors.push("replications must be >= 1".into());
        }
        if !(self.purity_epsilon > 0.0 && self.purity_epsilon < 0.5) {
            errors.push("purity_epsilon must be in (0, 0.5)".into());
        }
        if self.gain_window < 1 {
            errors.push("gain_window must be >= 1".into());
        }
        if self.gain_eval_frames < 1 {
            errors.push("gain_eval_frames must be >= 1".into());
        }
        if self.warmup_active_frames < 2 {
            errors.push("warmup_active_frames must be >= 2".into());
        }
        if self.scheme == Scheme::Mmpc && self.beta != 1 {
            errors.push(format!(
                "mmpc supports no retransmissions: beta must be 1, got {}",
                self.beta
            ));
        }
    }

    /// Re-validates after programmatic mutation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        self.check(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }
}

/// Loads and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<SimConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    ConfigDraft::parse(&text)?.build()
}
