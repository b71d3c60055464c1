//! TOML configuration files.
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//! slots = 900
//!
//! [[users]]
//! user_id = 1
//! dataset = "bdd100k-like"
//! q_min = 33.0
//! trajectory = { length = 100.0, width = 50.0, height = 0.0 }
//! ```
//!
//! Every key other than `schema_version`, the user list and each user's
//! `user_id`, `q_min`, `trajectory` and `dataset` (or an inline
//! `quality_model` table) has a default; see `configs/default.toml` for the
//! full set.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, Trajectory};
use crate::env::{calibrate_default, QualityModel};
use crate::error::{Error, Result};
use crate::gp::GpSettings;
use crate::model::{
    SystemConfig, UserProfile, DEFAULT_BITS_PER_SYMBOL, DEFAULT_CR_MAX, DEFAULT_CR_MIN,
    DEFAULT_SOURCE_DIM,
};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_TOTAL_RATE: f64 = 400e6;
pub const DEFAULT_ALPHA: f64 = 200.0;
pub const DEFAULT_WINDOW: usize = 20;
pub const DEFAULT_UPDATE_INTERVAL: usize = 20;
pub const DEFAULT_MC_SAMPLES: usize = 10_000;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_SLOTS: usize = 900;
pub const DEFAULT_SEED: u64 = 2024;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const DEFAULT_SAFETY_MARGIN: f64 = 1.0;
pub const DEFAULT_PERIOD: usize = 900;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default = "d_seed")]
    pub seed: u64,
    #[serde(default = "d_slots")]
    pub slots: usize,
    #[serde(default = "d_total_rate")]
    pub total_rate: f64,
    #[serde(default = "d_bits")]
    pub bits_per_symbol: u32,
    #[serde(default = "d_alpha")]
    pub alpha: f64,
    #[serde(default = "d_window")]
    pub window_size: usize,
    #[serde(default = "d_update")]
    pub update_interval: usize,
    #[serde(default = "d_mc")]
    pub mc_samples: usize,
    #[serde(default = "d_lr")]
    pub learning_rate: f64,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub gp: GpSettings,
    pub users: Vec<UserEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserEntry {
    pub user_id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality_model: Option<QualityModel>,
    pub q_min: f64,
    #[serde(default = "d_confidence")]
    pub confidence: f64,
    #[serde(default = "d_margin")]
    pub safety_margin: f64,
    #[serde(default = "d_source_dim")]
    pub source_dim: u64,
    #[serde(default = "d_cr_min")]
    pub cr_min: f64,
    #[serde(default = "d_cr_max")]
    pub cr_max: f64,
    pub trajectory: TrajectoryEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryEntry {
    #[serde(default)]
    pub center: [f64; 2],
    pub length: f64,
    pub width: f64,
    pub height: f64,
    #[serde(default = "d_period")]
    pub period: usize,
}

fn d_seed() -> u64 {
    DEFAULT_SEED
}
fn d_slots() -> usize {
    DEFAULT_SLOTS
}
fn d_total_rate() -> f64 {
    DEFAULT_TOTAL_RATE
}
fn d_bits() -> u32 {
    DEFAULT_BITS_PER_SYMBOL
}
fn d_alpha() -> f64 {
    DEFAULT_ALPHA
}
fn d_window() -> usize {
    DEFAULT_WINDOW
}
fn d_update() -> usize {
    DEFAULT_UPDATE_INTERVAL
}
fn d_mc() -> usize {
    DEFAULT_MC_SAMPLES
}
fn d_lr() -> f64 {
    DEFAULT_LEARNING_RATE
}
fn d_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}
fn d_margin() -> f64 {
    DEFAULT_SAFETY_MARGIN
}
fn d_source_dim() -> u64 {
    DEFAULT_SOURCE_DIM
}
fn d_cr_min() -> f64 {
    DEFAULT_CR_MIN
}
fn d_cr_max() -> f64 {
    DEFAULT_CR_MAX
}
fn d_period() -> usize {
    DEFAULT_PERIOD
}

impl UserEntry {
    fn resolve(&self) -> Result<UserProfile> {
        let quality_model = match (&self.quality_model, &self.dataset) {
            (Some(m), None) => m.clone(),
            (None, Some(tag)) => calibrate_default(tag)?,
            _ => {
                return Err(Error::config(format!(
                    "user {}: give exactly one of `dataset` or `quality_model`",
                    self.user_id
                )))
            }
        };
        let t = &self.trajectory;
        Ok(UserProfile {
            user_id: self.user_id,
            source_dim: self.source_dim,
            cr_min: self.cr_min,
            cr_max: self.cr_max,
            q_min: self.q_min,
            confidence: self.confidence,
            safety_margin: self.safety_margin,
            trajectory: Trajectory {
                center: t.center,
                length: t.length,
                width: t.width,
                height: t.height,
                period: t.period,
            },
            quality_model,
        })
    }
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<SystemConfig> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let users = self
            .users
            .iter()
            .map(UserEntry::resolve)
            .collect::<Result<_>>()?;
        let cfg = SystemConfig {
            users,
            total_rate: self.total_rate,
            bits_per_symbol: self.bits_per_symbol,
            alpha: self.alpha,
            window_size: self.window_size,
            update_interval: self.update_interval,
            mc_samples: self.mc_samples,
            learning_rate: self.learning_rate,
            slots: self.slots,
            seed: self.seed,
            channel: self.channel.clone(),
            gp: self.gp.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn parse_config(text: &str) -> Result<SystemConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
    file.resolve()
}

pub fn load_config(path: &Path) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Profile with default dimensions, CR range, confidence and margin.
pub fn default_user(
    user_id: u32,
    dataset: &str,
    q_min: f64,
    trajectory: Trajectory,
) -> Result<UserProfile> {
    Ok(UserProfile {
        user_id,
        source_dim: DEFAULT_SOURCE_DIM,
        cr_min: DEFAULT_CR_MIN,
        cr_max: DEFAULT_CR_MAX,
        q_min,
        confidence: DEFAULT_CONFIDENCE,
        safety_margin: DEFAULT_SAFETY_MARGIN,
        trajectory,
        quality_model: calibrate_default(dataset)?,
    })
}

/// The four reference users: vehicle, drone and two pedestrians.
pub fn default_users() -> Vec<UserProfile> {
    let specs = [
        (1, "bdd100k-like", 33.0, 100.0, 50.0, 0.0),
        (2, "mtdt-like", 33.0, 100.0, 100.0, 50.0),
        (3, "ubs-like", 26.0, 100.0, 150.0, 20.0),
        (4, "ubm-like", 26.0, 100.0, 150.0, 30.0),
    ];
    specs
        .into_iter()
        .map(|(id, tag, q, l, w, h)| {
            default_user(id, tag, q, Trajectory::rectangle(l, w, h, DEFAULT_PERIOD))
                .expect("committed dataset tags are valid")
        })
        .collect()
}

pub fn default_config() -> SystemConfig {
    SystemConfig {
        users: default_users(),
        total_rate: DEFAULT_TOTAL_RATE,
        bits_per_symbol: DEFAULT_BITS_PER_SYMBOL,
        alpha: DEFAULT_ALPHA,
        window_size: DEFAULT_WINDOW,
        update_interval: DEFAULT_UPDATE_INTERVAL,
        mc_samples: DEFAULT_MC_SAMPLES,
        learning_rate: DEFAULT_LEARNING_RATE,
        slots: DEFAULT_SLOTS,
        seed: DEFAULT_SEED,
        channel: ChannelParams::default(),
        gp: GpSettings::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema_version = 1

[[users]]
user_id = 9
dataset = "ubs-like"
q_min = 26.0
trajectory = { length = 100.0, width = 150.0, height = 20.0 }
"#;

    #[test]
    fn minimal_file_fills_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.slots, DEFAULT_SLOTS);
        assert_eq!(cfg.alpha, DEFAULT_ALPHA);
        let u = &cfg.users[0];
        assert_eq!(u.user_id, 9);
        assert_eq!(u.confidence, 0.95);
        assert_eq!(u.safety_margin, 1.0);
        assert_eq!(u.trajectory.period, 900);
        assert_eq!(u.quality_model, calibrate_default("ubs-like").unwrap());
    }

    #[test]
    fn committed_default_file_matches_builtin() {
        let text = include_str!("../../../configs/default.toml");
        assert_eq!(parse_config(text).unwrap(), default_config());
    }

    #[test]
    fn rejects_bad_files() {
        let bad_version = MINIMAL.replace("schema_version = 1", "schema_version = 2");
        assert!(parse_config(&bad_version).unwrap_err().is_config_error());
        let unknown_key = format!("{MINIMAL}\nfoo = 1\n");
        assert!(parse_config(&unknown_key).is_err());
        let bad_tag = MINIMAL.replace("ubs-like", "kitti");
        assert!(parse_config(&bad_tag).unwrap_err().is_config_error());
        let no_users = "schema_version = 1\nusers = []\n";
        assert!(parse_config(no_users).unwrap_err().is_config_error());
        let bad_alpha = MINIMAL.replace("schema_version = 1", "schema_version = 1\nalpha = -1.0");
        assert!(parse_config(&bad_alpha).is_err());
    }

    #[test]
    fn default_config_is_valid() {
        let cfg = default_config();
        cfg.validate().unwrap();
        let q: Vec<f64> = cfg.users.iter().map(|u| u.q_min).collect();
        assert_eq!(q, [33.0, 33.0, 26.0, 26.0]);
    }
}
