//! Simulation configuration: defaults, TOML loading and validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::{Association, Fading};
use crate::power::PowerParams;
use crate::scheduler::RbNumerology;
use crate::strategies::StrategyKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{key}`: {reason}")]
    OutOfRange { key: &'static str, reason: String },
}

/// Every simulation parameter. Defaults follow the reference LTE-like setup:
/// 19 cells at 500 m, 10 MHz over 50 subcarriers, 10 slots of 1 ms,
/// 10 mobiles per cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub tiers: usize,
    pub isd_m: f64,
    pub mobiles_per_cell: usize,
    pub subcarriers: usize,
    pub slots: usize,
    pub bandwidth_hz: f64,
    pub slot_duration_s: f64,
    pub target_rate_mbps: f64,
    pub strategy: StrategyKind,
    pub p: f64,
    pub psi_ul: i32,
    pub psi_ll: i32,
    pub p_sleep_w: f64,
    pub p_idle_w: f64,
    pub load_factor: f64,
    pub p_rb_tx_w: f64,
    pub noise_temperature_k: f64,
    pub shadowing_std_db: f64,
    pub association: Association,
    pub fading: Fading,
    /// Alignment frames after the full-power initial frame.
    pub frames: usize,
    pub drops: usize,
    /// Leading trace entries excluded from steady-state statistics.
    pub warmup_frames: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let power = PowerParams::default();
        SimConfig {
            tiers: 2,
            isd_m: 500.0,
            mobiles_per_cell: 10,
            subcarriers: 50,
            slots: 10,
            bandwidth_hz: 10e6,
            slot_duration_s: 1e-3,
            target_rate_mbps: 2.0,
            strategy: StrategyKind::Memory,
            p: 0.3,
            psi_ul: 5,
            psi_ll: 0,
            p_sleep_w: power.p_sleep,
            p_idle_w: power.p_idle,
            load_factor: power.load_factor,
            p_rb_tx_w: power.p_rb_tx,
            noise_temperature_k: 290.0,
            shadowing_std_db: 8.0,
            association: Association::StrongestCell,
            fading: Fading::PerResourceBlock,
            frames: 50,
            drops: 20,
            warmup_frames: 10,
            seed: 1,
        }
    }
}

fn check(ok: bool, key: &'static str, reason: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::OutOfRange { key, reason: reason() })
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;
        check(positive(self.isd_m), "isd_m", || format!("{} is not positive", self.isd_m))?;
        check(self.mobiles_per_cell >= 1, "mobiles_per_cell", || "must be at least 1".into())?;
        check(self.subcarriers >= 1, "subcarriers", || "must be at least 1".into())?;
        check(self.slots >= 1, "slots", || "must be at least 1".into())?;
        check(positive(self.bandwidth_hz), "bandwidth_hz", || format!("{} is not positive", self.bandwidth_hz))?;
        check(positive(self.slot_duration_s), "slot_duration_s", || {
            format!("{} is not positive", self.slot_duration_s)
        })?;
        check(positive(self.target_rate_mbps), "target_rate_mbps", || {
            format!("{} is not positive", self.target_rate_mbps)
        })?;
        check((0.0..=1.0).contains(&self.p), "p", || format!("{} is not in [0, 1]", self.p))?;
        check(self.psi_ll <= self.psi_ul, "psi_ll", || {
            format!("lower bound {} exceeds upper bound {}", self.psi_ll, self.psi_ul)
        })?;
        for (key, v) in [
            ("p_sleep_w", self.p_sleep_w),
            ("p_idle_w", self.p_idle_w),
            ("load_factor", self.load_factor),
            ("shadowing_std_db", self.shadowing_std_db),
        ] {
            check(non_negative(v), key, || format!("{v} is negative"))?;
        }
        check(positive(self.p_rb_tx_w), "p_rb_tx_w", || format!("{} is not positive", self.p_rb_tx_w))?;
        check(positive(self.noise_temperature_k), "noise_temperature_k", || {
            format!("{} is not positive", self.noise_temperature_k)
        })?;
        check(self.frames >= 1, "frames", || "must be at least 1".into())?;
        check(self.drops >= 1, "drops", || "must be at least 1".into())?;
        check(self.warmup_frames <= self.frames, "warmup_frames", || {
            format!("{} leaves no steady-state frames out of {}", self.warmup_frames, self.frames)
        })?;
        Ok(())
    }

    pub fn power_params(&self) -> PowerParams {
        PowerParams {
            p_sleep: self.p_sleep_w,
            p_idle: self.p_idle_w,
            load_factor: self.load_factor,
            p_rb_tx: self.p_rb_tx_w,
        }
    }

    pub fn subcarrier_bw_hz(&self) -> f64 {
        self.bandwidth_hz / self.subcarriers as f64
    }

    pub fn numerology(&self) -> RbNumerology {
        RbNumerology {
            subcarrier_bw_hz: self.subcarrier_bw_hz(),
            slot_duration_s: self.slot_duration_s,
        }
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.slot_duration_s * self.slots as f64
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the TOML rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub strategy: Option<StrategyKind>,
    pub target_rate_mbps: Option<f64>,
    pub drops: Option<usize>,
    pub frames: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut SimConfig) {
        if let Some(s) = self.strategy {
            cfg.strategy = s;
        }
        if let Some(r) = self.target_rate_mbps {
            cfg.target_rate_mbps = r;
        }
        if let Some(d) = self.drops {
            cfg.drops = d;
        }
        if let Some(f) = self.frames {
            cfg.frames = f;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
    }
}

pub fn parse_config_str(text: &str, overrides: &Overrides) -> Result<SimConfig, ConfigError> {
    let mut cfg: SimConfig = toml::from_str(text)?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

/// Loads `path` (or defaults when `None`) and applies `overrides`.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<SimConfig, ConfigError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|source| ConfigError::Io {
            path: p.display().to_string(),
            source,
        })?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}
