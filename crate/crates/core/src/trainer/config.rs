//! `key = value` training configuration.
//!
//! Conv layers are written as space-separated `channels:kernel:stride` tokens
//! with optional `:bn` and `:pool` suffixes, e.g. `16:8:4:bn 32:4:2:bn 32:3:1`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::agent::{ConvBlock, NetworkConfig, TrainStep, BURN_IN, WINDOW_LEN};
use crate::env::{EnvConfig, Preset, ACTION_COUNT};
use crate::error::{Error, Result};
use crate::trainer::schedule::Schedule;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub minibatch: usize,
    pub memory_capacity: usize,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub epsilon_decay_steps: u64,
    /// RMSProp step size.
    pub lr_start: f64,
    pub lr_end: f64,
    pub lr_decay_steps: u64,
    /// Step size of the tabular update (tabular harness only).
    pub alpha_start: f64,
    pub alpha_end: f64,
    pub alpha_decay_steps: u64,
    pub target_sync_episodes: u64,
    pub frame_skip: u32,
    pub step_limit: u64,
    pub obs_preset: Preset,
    pub conv: Vec<ConvBlock>,
    pub lstm_units: usize,
    pub aux_units: usize,
    pub batchnorm: bool,
    pub burn_in: usize,
    pub window_len: usize,
    pub dup_c: f64,
    pub dup_r_scale: f64,
    pub warmup: usize,
    /// Global-norm clip; 0 disables.
    pub grad_clip: f64,
    pub step_penalty: f64,
    pub r_land: f64,
    pub r_finish: f64,
    pub seed: u64,
    pub checkpoint_every: u64,
    pub record_wall_time: bool,
}

/// Keys that only affect how a run is executed or logged. They are left out
/// of the digest so a checkpoint stays loadable when they change.
const RUNTIME_KEYS: [&str; 3] = ["seed", "checkpoint_every", "record_wall_time"];

impl Default for TrainConfig {
    fn default() -> Self {
        let env = EnvConfig::default();
        let net = NetworkConfig::desk();
        Self {
            gamma: 0.9,
            minibatch: 40,
            memory_capacity: 10_000,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            epsilon_decay_steps: 50_000,
            lr_start: 1e-3,
            lr_end: 1e-4,
            lr_decay_steps: 50_000,
            alpha_start: 1.0,
            alpha_end: 0.1,
            alpha_decay_steps: 5_000,
            target_sync_episodes: 5,
            frame_skip: env.frame_skip,
            step_limit: env.step_limit,
            obs_preset: env.preset,
            conv: net.conv,
            lstm_units: net.lstm_units,
            aux_units: net.aux_units,
            batchnorm: true,
            burn_in: BURN_IN,
            window_len: WINDOW_LEN,
            dup_c: 3.0,
            dup_r_scale: env.r_land,
            warmup: 500,
            grad_clip: 0.0,
            step_penalty: env.step_penalty,
            r_land: env.r_land,
            r_finish: env.r_finish,
            seed: 0,
            checkpoint_every: 100,
            record_wall_time: false,
        }
    }
}

fn conv_text(conv: &[ConvBlock]) -> String {
    conv.iter()
        .map(|b| {
            let mut s = format!("{}:{}:{}", b.channels, b.kernel, b.stride);
            if b.batchnorm {
                s.push_str(":bn");
            }
            if b.pool {
                s.push_str(":pool");
            }
            s
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_conv(value: &str) -> Result<Vec<ConvBlock>> {
    value
        .split_whitespace()
        .map(|tok| {
            let parts: Vec<&str> = tok.split(':').collect();
            if parts.len() < 3 {
                return Err(Error::Config(format!("conv layer {tok:?}: expected channels:kernel:stride")));
            }
            let num = |s: &str| {
                s.parse::<usize>()
                    .map_err(|_| Error::Config(format!("conv layer {tok:?}: bad number {s:?}")))
            };
            let mut b = ConvBlock::new(num(parts[0])?, num(parts[1])?, num(parts[2])?);
            for flag in &parts[3..] {
                match *flag {
                    "bn" => b.batchnorm = true,
                    "pool" => b.pool = true,
                    other => return Err(Error::Config(format!("conv layer {tok:?}: unknown flag {other:?}"))),
                }
            }
            Ok(b)
        })
        .collect()
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got {value:?}"))),
    }
}

impl TrainConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: duplicate key {key}", lineno + 1)));
            }
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "gamma" => self.gamma = parse_num(key, v)?,
            "minibatch" => self.minibatch = parse_num(key, v)?,
            "memory_capacity" => self.memory_capacity = parse_num(key, v)?,
            "epsilon_start" => self.epsilon_start = parse_num(key, v)?,
            "epsilon_end" => self.epsilon_end = parse_num(key, v)?,
            "epsilon_decay_steps" => self.epsilon_decay_steps = parse_num(key, v)?,
            "lr_start" => self.lr_start = parse_num(key, v)?,
            "lr_end" => self.lr_end = parse_num(key, v)?,
            "lr_decay_steps" => self.lr_decay_steps = parse_num(key, v)?,
            "alpha_start" => self.alpha_start = parse_num(key, v)?,
            "alpha_end" => self.alpha_end = parse_num(key, v)?,
            "alpha_decay_steps" => self.alpha_decay_steps = parse_num(key, v)?,
            "target_sync_episodes" => self.target_sync_episodes = parse_num(key, v)?,
            "frame_skip" => self.frame_skip = parse_num(key, v)?,
            "step_limit" => self.step_limit = parse_num(key, v)?,
            "obs_preset" => {
                self.obs_preset =
                    Preset::parse(v).ok_or_else(|| Error::Config(format!("obs_preset: unknown preset {v:?}")))?
            }
            "conv" => self.conv = parse_conv(v)?,
            "lstm_units" => self.lstm_units = parse_num(key, v)?,
            "aux_units" => self.aux_units = parse_num(key, v)?,
            "batchnorm" => self.batchnorm = parse_bool(key, v)?,
            "burn_in" => self.burn_in = parse_num(key, v)?,
            "window_len" => self.window_len = parse_num(key, v)?,
            "dup_c" => self.dup_c = parse_num(key, v)?,
            "dup_r_scale" => self.dup_r_scale = parse_num(key, v)?,
            "warmup" => self.warmup = parse_num(key, v)?,
            "grad_clip" => self.grad_clip = parse_num(key, v)?,
            "step_penalty" => self.step_penalty = parse_num(key, v)?,
            "r_land" => self.r_land = parse_num(key, v)?,
            "r_finish" => self.r_finish = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "checkpoint_every" => self.checkpoint_every = parse_num(key, v)?,
            "record_wall_time" => self.record_wall_time = parse_bool(key, v)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, x: f64| {
            if x > 0.0 && x <= 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in (0, 1], got {x}")))
            }
        };
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma must be in (0, 1), got {}", self.gamma)));
        }
        unit("epsilon_start", self.epsilon_start)?;
        unit("epsilon_end", self.epsilon_end)?;
        unit("lr_start", self.lr_start)?;
        unit("lr_end", self.lr_end)?;
        unit("alpha_start", self.alpha_start)?;
        unit("alpha_end", self.alpha_end)?;
        self.epsilon_schedule()?;
        self.lr_schedule()?;
        self.alpha_schedule()?;
        if self.minibatch == 0 || self.memory_capacity == 0 || self.target_sync_episodes == 0 {
            return Err(Error::Config(
                "minibatch, memory_capacity and target_sync_episodes must be >= 1".into(),
            ));
        }
        if self.step_limit == 0 || self.checkpoint_every == 0 {
            return Err(Error::Config("step_limit and checkpoint_every must be >= 1".into()));
        }
        if self.window_len < self.burn_in + 2 {
            return Err(Error::Config(format!(
                "window_len {} must be at least burn_in + 2 = {}",
                self.window_len,
                self.burn_in + 2
            )));
        }
        if !(self.dup_r_scale > 0.0) || self.dup_c < 0.0 {
            return Err(Error::Config("dup_r_scale must be > 0 and dup_c >= 0".into()));
        }
        if self.grad_clip < 0.0 {
            return Err(Error::Config("grad_clip must be >= 0".into()));
        }
        self.network()?.validate()
    }

    pub fn epsilon_schedule(&self) -> Result<Schedule> {
        Schedule::new(self.epsilon_start, self.epsilon_end, self.epsilon_decay_steps)
    }

    pub fn lr_schedule(&self) -> Result<Schedule> {
        Schedule::new(self.lr_start, self.lr_end, self.lr_decay_steps)
    }

    pub fn alpha_schedule(&self) -> Result<Schedule> {
        Schedule::new(self.alpha_start, self.alpha_end, self.alpha_decay_steps)
    }

    pub fn network(&self) -> Result<NetworkConfig> {
        let (w, h) = self.obs_preset.dims();
        Ok(NetworkConfig {
            input_h: h,
            input_w: w,
            conv: self.conv.clone(),
            lstm_units: self.lstm_units,
            aux_units: self.aux_units,
            action_count: ACTION_COUNT,
            batchnorm_enabled: self.batchnorm,
        })
    }

    pub fn env(&self) -> EnvConfig {
        EnvConfig {
            step_penalty: self.step_penalty,
            r_land: self.r_land,
            r_finish: self.r_finish,
            step_limit: self.step_limit,
            frame_skip: self.frame_skip,
            preset: self.obs_preset,
            ..EnvConfig::default()
        }
    }

    pub fn train_step(&self, lr: f64) -> TrainStep {
        TrainStep {
            gamma: self.gamma,
            burn_in: self.burn_in,
            lr,
            grad_clip: (self.grad_clip > 0.0).then_some(self.grad_clip),
        }
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("gamma", format!("{:?}", self.gamma)),
            ("minibatch", self.minibatch.to_string()),
            ("memory_capacity", self.memory_capacity.to_string()),
            ("epsilon_start", format!("{:?}", self.epsilon_start)),
            ("epsilon_end", format!("{:?}", self.epsilon_end)),
            ("epsilon_decay_steps", self.epsilon_decay_steps.to_string()),
            ("lr_start", format!("{:?}", self.lr_start)),
            ("lr_end", format!("{:?}", self.lr_end)),
            ("lr_decay_steps", self.lr_decay_steps.to_string()),
            ("alpha_start", format!("{:?}", self.alpha_start)),
            ("alpha_end", format!("{:?}", self.alpha_end)),
            ("alpha_decay_steps", self.alpha_decay_steps.to_string()),
            ("target_sync_episodes", self.target_sync_episodes.to_string()),
            ("frame_skip", self.frame_skip.to_string()),
            ("step_limit", self.step_limit.to_string()),
            ("obs_preset", self.obs_preset.name().to_string()),
            ("conv", conv_text(&self.conv)),
            ("lstm_units", self.lstm_units.to_string()),
            ("aux_units", self.aux_units.to_string()),
            ("batchnorm", self.batchnorm.to_string()),
            ("burn_in", self.burn_in.to_string()),
            ("window_len", self.window_len.to_string()),
            ("dup_c", format!("{:?}", self.dup_c)),
            ("dup_r_scale", format!("{:?}", self.dup_r_scale)),
            ("warmup", self.warmup.to_string()),
            ("grad_clip", format!("{:?}", self.grad_clip)),
            ("step_penalty", format!("{:?}", self.step_penalty)),
            ("r_land", format!("{:?}", self.r_land)),
            ("r_finish", format!("{:?}", self.r_finish)),
            ("seed", self.seed.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("record_wall_time", self.record_wall_time.to_string()),
        ]
    }

    /// Every key with its value, one per line, in a fixed order. Parsing this
    /// text gives back an equal config.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.pairs() {
            writeln!(out, "{k} = {v}").unwrap();
        }
        out
    }

    /// SHA-256 of the canonical text without the runtime-only keys.
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        for (k, v) in self.pairs() {
            if !RUNTIME_KEYS.contains(&k) {
                h.update(format!("{k} = {v}\n"));
            }
        }
        h.finalize().into()
    }
}
