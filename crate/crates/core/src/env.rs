//! Synthetic semantic-codec environment.
//!
//! Stands in for the learned codec and its transmitter-side quality oracle:
//! a smooth ground-truth quality surface `Q̄(snr, eps)` (logistic in SNR,
//! exponentially saturating in CR), per-slot Gaussian content noise, and an
//! oracle that reports the slot's true quality plus a bounded uniform error.
//! Controllers only ever see oracle outputs, never these parameters.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DEFAULT_CR_MAX, DEFAULT_CR_MIN};
use crate::rng::{stream_rng, Stream};

/// Committed calibration constants (see `scripts/fit_quality_models.py`).
pub const QUALITY_MODELS_TOML: &str = include_str!("../data/quality_models.toml");

pub const QUALITY_MODELS_SCHEMA_VERSION: u32 = 1;

/// Slack allowed on the CR range check.
const CR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QualityModel {
    /// Quality as SNR goes to minus infinity, dB.
    pub q_floor: f64,
    /// Saturated high-SNR quality at the lowest CR, dB.
    pub q_ceil_min_cr: f64,
    /// Saturated high-SNR quality at the highest CR, dB.
    pub q_ceil_max_cr: f64,
    /// Logistic midpoint in SNR, dB.
    pub snr_mid: f64,
    /// Logistic steepness, 1/dB.
    pub snr_slope: f64,
    /// Exponential saturation rate over the normalized CR range.
    pub cr_sat: f64,
    pub content_noise_std: f64,
    pub oracle_error_bound: f64,
    #[serde(default = "default_cr_range")]
    pub cr_range: [f64; 2],
}

fn default_cr_range() -> [f64; 2] {
    [DEFAULT_CR_MIN, DEFAULT_CR_MAX]
}

impl QualityModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.q_floor < self.q_ceil_min_cr && self.q_ceil_min_cr <= self.q_ceil_max_cr) {
            return Err(Error::config(
                "quality model: need q_floor < q_ceil_min_cr <= q_ceil_max_cr",
            ));
        }
        if !(self.snr_slope > 0.0 && self.cr_sat > 0.0) {
            return Err(Error::config(
                "quality model: snr_slope and cr_sat must be positive",
            ));
        }
        if !(self.content_noise_std >= 0.0 && self.oracle_error_bound >= 0.0) {
            return Err(Error::config("quality model: noise levels must be >= 0"));
        }
        if !(self.cr_range[0] > 0.0 && self.cr_range[0] < self.cr_range[1]) {
            return Err(Error::config(
                "quality model: cr_range must be increasing and positive",
            ));
        }
        Ok(())
    }

    /// Saturated (high-SNR) quality at CR `eps`.
    fn ceiling(&self, eps: f64) -> f64 {
        let u = (eps - self.cr_range[0]) / (self.cr_range[1] - self.cr_range[0]);
        let k = self.cr_sat;
        let tail = ((-k * u).exp() - (-k).exp()) / (1.0 - (-k).exp());
        self.q_ceil_max_cr - (self.q_ceil_max_cr - self.q_ceil_min_cr) * tail
    }

    fn snr_response(&self, snr_db: f64) -> f64 {
        1.0 / (1.0 + (-self.snr_slope * (snr_db - self.snr_mid)).exp())
    }
}

/// Noise-free quality `Q̄(snr, eps)` in dB.
pub fn mean_quality(snr_db: f64, eps: f64, model: &QualityModel) -> Result<f64> {
    let [lo, hi] = model.cr_range;
    if !(eps >= lo - CR_TOLERANCE && eps <= hi + CR_TOLERANCE) {
        return Err(Error::invalid(format!(
            "compression ratio {eps} outside [{lo}, {hi}]"
        )));
    }
    let eps = eps.clamp(lo, hi);
    Ok(model.q_floor + (model.ceiling(eps) - model.q_floor) * model.snr_response(snr_db))
}

/// `Q̄` plus one Gaussian content-noise draw.
pub fn true_quality<R: Rng + ?Sized>(
    snr_db: f64,
    eps: f64,
    model: &QualityModel,
    rng: &mut R,
) -> Result<f64> {
    let mean = mean_quality(snr_db, eps, model)?;
    Ok(mean + draw_content_noise(model, rng))
}

/// Oracle report: draws the slot's true quality as `true_quality` does, then
/// adds the bounded prediction error. Cloning `rng` first reproduces the true
/// value.
pub fn oracle_predict<R: Rng + ?Sized>(
    snr_db: f64,
    eps: f64,
    model: &QualityModel,
    rng: &mut R,
) -> Result<f64> {
    let q = true_quality(snr_db, eps, model, rng)?;
    Ok(q + draw_oracle_error(model, rng))
}

fn draw_content_noise<R: Rng + ?Sized>(model: &QualityModel, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    model.content_noise_std * z
}

fn draw_oracle_error<R: Rng + ?Sized>(model: &QualityModel, rng: &mut R) -> f64 {
    let b = model.oracle_error_bound;
    let u: f64 = rng.random();
    b * (2.0 * u - 1.0)
}

/// Dataset profiles with committed calibration constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DatasetTag {
    #[serde(rename = "bdd100k-like")]
    Bdd100k,
    #[serde(rename = "mtdt-like")]
    Mtdt,
    #[serde(rename = "ubs-like")]
    Ubs,
    #[serde(rename = "ubm-like")]
    Ubm,
}

impl DatasetTag {
    pub const ALL: [DatasetTag; 4] = [
        DatasetTag::Bdd100k,
        DatasetTag::Mtdt,
        DatasetTag::Ubs,
        DatasetTag::Ubm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetTag::Bdd100k => "bdd100k-like",
            DatasetTag::Mtdt => "mtdt-like",
            DatasetTag::Ubs => "ubs-like",
            DatasetTag::Ubm => "ubm-like",
        }
    }
}

impl FromStr for DatasetTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DatasetTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QualityModelFile {
    schema_version: u32,
    datasets: BTreeMap<String, QualityModel>,
}

fn committed_models() -> &'static BTreeMap<String, QualityModel> {
    static MODELS: OnceLock<BTreeMap<String, QualityModel>> = OnceLock::new();
    MODELS.get_or_init(|| {
        let file: QualityModelFile =
            toml::from_str(QUALITY_MODELS_TOML).expect("committed quality_models.toml must parse");
        assert_eq!(file.schema_version, QUALITY_MODELS_SCHEMA_VERSION);
        file.datasets
    })
}

/// Calibrated model for one of the dataset profiles.
pub fn calibrate_default(tag: &str) -> Result<QualityModel> {
    let tag: DatasetTag = tag.parse()?;
    committed_models()
        .get(tag.as_str())
        .cloned()
        .ok_or_else(|| Error::UnknownDataset(tag.as_str().to_string()))
}

/// One slot's draws for a user, shared by the true quality and the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotNoise {
    pub content: f64,
    pub oracle_error: f64,
}

/// A user's environment with its own content and oracle streams.
///
/// Noise is drawn per slot before the decision, so every policy run on the
/// same seed faces identical realizations.
#[derive(Debug, Clone)]
pub struct UserEnvironment {
    model: QualityModel,
    content_rng: ChaCha8Rng,
    oracle_rng: ChaCha8Rng,
}

impl UserEnvironment {
    pub fn new(user_id: u32, seed: u64, model: QualityModel) -> Self {
        Self {
            model,
            content_rng: stream_rng(seed, user_id, Stream::Content),
            oracle_rng: stream_rng(seed, user_id, Stream::Oracle),
        }
    }

    pub fn draw_slot(&mut self) -> SlotNoise {
        SlotNoise {
            content: draw_content_noise(&self.model, &mut self.content_rng),
            oracle_error: draw_oracle_error(&self.model, &mut self.oracle_rng),
        }
    }

    pub fn true_quality(&self, snr_db: f64, eps: f64, noise: &SlotNoise) -> Result<f64> {
        Ok(mean_quality(snr_db, eps, &self.model)? + noise.content)
    }

    /// What the transmitter-side oracle reports for CR `eps` in this slot.
    pub fn oracle_quality(&self, snr_db: f64, eps: f64, noise: &SlotNoise) -> Result<f64> {
        Ok(self.true_quality(snr_db, eps, noise)? + noise.oracle_error)
    }
}
