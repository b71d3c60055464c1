//! Shared domain types and the two scalar helpers every module leans on.
//!
//! Units at module boundaries:
//! - rates in bits/second, with the slot length normalized to one second,
//! - latencies in seconds (the CSV writer converts to milliseconds),
//! - SNR and quality in dB.

use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, Trajectory};
use crate::env::QualityModel;
use crate::error::{Error, Result};
use crate::gp::GpSettings;

/// Bits per transmitted complex symbol (two 32-bit components).
pub const DEFAULT_BITS_PER_SYMBOL: u32 = 64;

/// Real-valued dimension of a 3x512x512 frame.
pub const DEFAULT_SOURCE_DIM: u64 = 3 * 512 * 512;

pub const DEFAULT_CR_MIN: f64 = 1.0 / 30.0;
pub const DEFAULT_CR_MAX: f64 = 3.0 / 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: u32,
    pub source_dim: u64,
    pub cr_min: f64,
    pub cr_max: f64,
    /// Reconstruction-quality floor in dB.
    pub q_min: f64,
    /// Required probability of meeting `q_min`.
    pub confidence: f64,
    /// Added to `q_min` while optimizing.
    pub safety_margin: f64,
    pub trajectory: Trajectory,
    pub quality_model: QualityModel,
}

impl UserProfile {
    /// Quality floor actually enforced by the controllers.
    pub fn q_min_eff(&self) -> f64 {
        self.q_min + self.safety_margin
    }

    pub fn validate(&self) -> Result<()> {
        let id = self.user_id;
        if self.source_dim < 1 {
            return Err(Error::config(format!("user {id}: source_dim must be >= 1")));
        }
        if !(self.cr_min > 0.0 && self.cr_min <= self.cr_max && self.cr_max <= 1.0) {
            return Err(Error::config(format!(
                "user {id}: need 0 < cr_min <= cr_max <= 1, got [{}, {}]",
                self.cr_min, self.cr_max
            )));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::config(format!(
                "user {id}: confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if !(self.safety_margin >= 0.0) {
            return Err(Error::config(format!(
                "user {id}: safety_margin must be >= 0"
            )));
        }
        if !self.q_min.is_finite() {
            return Err(Error::config(format!("user {id}: q_min must be finite")));
        }
        self.trajectory
            .validate()
            .map_err(|e| Error::config(format!("user {id}: {e}")))?;
        self.quality_model
            .validate()
            .map_err(|e| Error::config(format!("user {id}: {e}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub users: Vec<UserProfile>,
    /// Total rate shared by all users, bits/second.
    pub total_rate: f64,
    pub bits_per_symbol: u32,
    /// Quality-latency weight.
    pub alpha: f64,
    /// Sliding-window capacity of each GP.
    pub window_size: usize,
    /// Slots between GP hyperparameter updates.
    pub update_interval: usize,
    /// Monte-Carlo candidates per slot.
    pub mc_samples: usize,
    pub learning_rate: f64,
    pub slots: usize,
    pub seed: u64,
    pub channel: ChannelParams,
    pub gp: GpSettings,
}

impl SystemConfig {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::config("at least one user is required"));
        }
        for u in &self.users {
            u.validate()?;
        }
        let mut ids: Vec<u32> = self.users.iter().map(|u| u.user_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("user ids must be unique"));
        }
        if !(self.total_rate > 0.0 && self.total_rate.is_finite()) {
            return Err(Error::config("total_rate must be positive"));
        }
        if self.bits_per_symbol == 0 {
            return Err(Error::config("bits_per_symbol must be positive"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::config("alpha must be positive"));
        }
        if self.window_size < 2 {
            return Err(Error::config("window_size must be >= 2"));
        }
        if self.update_interval < 1 {
            return Err(Error::config("update_interval must be >= 1"));
        }
        if self.mc_samples < 1 {
            return Err(Error::config("mc_samples must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        self.channel
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        self.gp
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        Ok(())
    }
}

/// One slot's decision for all users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDecision {
    pub cr: Vec<f64>,
    /// Bits/second.
    pub rate: Vec<f64>,
    /// Transmitted complex symbols per user.
    pub feature_len: Vec<u64>,
    /// Controller's own quality estimate, when it has one.
    pub predicted_quality_mean: Vec<Option<f64>>,
    /// Seconds.
    pub latency: Vec<f64>,
}

/// Full log of one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub t: usize,
    pub snr_db: Vec<f64>,
    pub decision: SlotDecision,
    pub true_quality: Vec<f64>,
    pub oracle_quality: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub objective: f64,
}

/// Number of complex symbols sent for compression ratio `eps`: `ceil(eps * source_dim)`.
///
/// Products within 1e-9 (relative) of an integer are snapped to it, so `0.3 * 10`
/// gives 3 rather than 4.
pub fn feature_length(eps: f64, source_dim: u64) -> Result<u64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::invalid(format!(
            "compression ratio must lie in (0, 1], got {eps}"
        )));
    }
    if source_dim < 1 {
        return Err(Error::invalid("source dimension must be >= 1"));
    }
    let product = eps * source_dim as f64;
    let nearest = product.round();
    let len = if (product - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        product.ceil()
    };
    Ok((len as u64).max(1))
}

/// Sum over users of `quality - alpha * latency / N`, latency in seconds.
pub fn objective_value(quality: &[f64], latency: &[f64], alpha: f64) -> Result<f64> {
    if quality.len() != latency.len() {
        return Err(Error::invalid(format!(
            "quality has {} entries but latency has {}",
            quality.len(),
            latency.len()
        )));
    }
    let n = quality.len() as f64;
    Ok(quality
        .iter()
        .zip(latency)
        .map(|(q, t)| q - alpha * t / n)
        .sum())
}
