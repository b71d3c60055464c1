//! CR-selection policies: the GP-based controller and three baselines.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::acquisition::select_cr;
use crate::error::{Error, Result};
use crate::gp::{GpModel, InputNormalizer};
use crate::model::{SystemConfig, UserProfile};
use crate::rng::controller_rng;

/// Bisection stops once the bracket is this narrow.
pub const FEASIBLE_RESOLUTION: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyTag {
    Proposed,
    PsnrMax,
    LatencyMin,
    PsnrFeasible,
}

impl PolicyTag {
    pub const ALL: [PolicyTag; 4] = [
        PolicyTag::Proposed,
        PolicyTag::PsnrMax,
        PolicyTag::LatencyMin,
        PolicyTag::PsnrFeasible,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyTag::Proposed => "proposed",
            PolicyTag::PsnrMax => "psnr_max",
            PolicyTag::LatencyMin => "latency_min",
            PolicyTag::PsnrFeasible => "psnr_feasible",
        }
    }
}

impl fmt::Display for PolicyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        if norm == "drl_sac" {
            return Err(Error::config("policy `drl_sac` is not implemented"));
        }
        PolicyTag::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| Error::config(format!("unknown policy `{s}`")))
    }
}

/// Transmitter-side quality predictor for the current slot.
pub trait QualityOracle {
    /// Predicted quality of user `n` at CR `eps`, dB.
    fn predict(&self, n: usize, eps: f64) -> Result<f64>;
}

impl<F: Fn(usize, f64) -> Result<f64>> QualityOracle for F {
    fn predict(&self, n: usize, eps: f64) -> Result<f64> {
        self(n, eps)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub cr: Vec<f64>,
    pub predicted_mean: Vec<Option<f64>>,
    /// Whether the acquisition found a candidate meeting every constraint;
    /// `None` when no acquisition ran.
    pub feasible: Option<bool>,
}

/// Common interface the simulator drives once per slot.
pub trait Policy {
    fn tag(&self) -> PolicyTag;

    fn decide(
        &mut self,
        t: usize,
        snr_db: &[f64],
        oracle: &dyn QualityOracle,
    ) -> Result<PolicyDecision>;

    /// Feedback after transmission: the oracle's prediction at the chosen CRs.
    fn observe(
        &mut self,
        _t: usize,
        _snr_db: &[f64],
        _cr: &[f64],
        _oracle_quality: &[f64],
    ) -> Result<()> {
        Ok(())
    }

    /// Wall-clock of each acquisition call so far, milliseconds.
    fn inference_ms(&self) -> &[f64] {
        &[]
    }

    /// Wall-clock of each hyperparameter-update round so far, milliseconds.
    fn update_ms(&self) -> &[f64] {
        &[]
    }
}

pub fn psnr_max_policy(profiles: &[UserProfile]) -> Vec<f64> {
    profiles.iter().map(|p| p.cr_max).collect()
}

pub fn latency_min_policy(profiles: &[UserProfile]) -> Vec<f64> {
    profiles.iter().map(|p| p.cr_min).collect()
}

/// Smallest CR in `[lo, hi]` whose predicted quality reaches `target`, to
/// within [`FEASIBLE_RESOLUTION`]. Assumes `predict` is nondecreasing.
pub fn lowest_feasible_cr(
    lo: f64,
    hi: f64,
    target: f64,
    mut predict: impl FnMut(f64) -> Result<f64>,
) -> Result<f64> {
    if predict(lo)? >= target {
        return Ok(lo);
    }
    if predict(hi)? < target {
        return Ok(hi);
    }
    let (mut bad, mut good) = (lo, hi);
    while good - bad > FEASIBLE_RESOLUTION {
        let mid = 0.5 * (bad + good);
        if predict(mid)? >= target {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok(good)
}

pub fn psnr_feasible_policy(
    oracle: &dyn QualityOracle,
    profiles: &[UserProfile],
) -> Result<Vec<f64>> {
    profiles
        .iter()
        .enumerate()
        .map(|(n, p)| {
            lowest_feasible_cr(p.cr_min, p.cr_max, p.q_min_eff(), |e| oracle.predict(n, e))
        })
        .collect()
}

/// One of the oracle-free or oracle-only baselines.
#[derive(Debug, Clone)]
pub struct Baseline {
    tag: PolicyTag,
    profiles: Vec<UserProfile>,
}

impl Baseline {
    pub fn new(tag: PolicyTag, profiles: Vec<UserProfile>) -> Result<Self> {
        if tag == PolicyTag::Proposed {
            return Err(Error::invalid("the proposed policy is not a baseline"));
        }
        Ok(Self { tag, profiles })
    }
}

impl Policy for Baseline {
    fn tag(&self) -> PolicyTag {
        self.tag
    }

    fn decide(
        &mut self,
        _t: usize,
        _snr_db: &[f64],
        oracle: &dyn QualityOracle,
    ) -> Result<PolicyDecision> {
        let cr = match self.tag {
            PolicyTag::PsnrMax => psnr_max_policy(&self.profiles),
            PolicyTag::LatencyMin => latency_min_policy(&self.profiles),
            PolicyTag::PsnrFeasible => psnr_feasible_policy(oracle, &self.profiles)?,
            PolicyTag::Proposed => unreachable!("rejected in Baseline::new"),
        };
        let n = cr.len();
        Ok(PolicyDecision {
            cr,
            predicted_mean: vec![None; n],
            feasible: None,
        })
    }
}

/// GP-based controller.
///
/// Decisions at slot `t` use observations through `t - 1`. While any window
/// holds fewer than `gp.cold_start` points every user transmits at `cr_max`.
/// Hyperparameters are refit after observing slot `t` whenever `t > 0` and
/// `t % update_interval == 0`.
#[derive(Debug, Clone)]
pub struct ProposedController {
    cfg: SystemConfig,
    gps: Vec<GpModel>,
    rng: ChaCha8Rng,
    inference_ms: Vec<f64>,
    update_ms: Vec<f64>,
    updates: usize,
}

impl ProposedController {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let params = cfg.gp.initial_params(cfg.learning_rate);
        let gps = cfg
            .users
            .iter()
            .map(|u| {
                let norm = InputNormalizer::new(u.cr_min, u.cr_max, cfg.gp.snr_range_db);
                GpModel::new(norm, params, cfg.window_size)
            })
            .collect();
        Ok(Self {
            cfg: cfg.clone(),
            gps,
            rng: controller_rng(cfg.seed),
            inference_ms: Vec::new(),
            update_ms: Vec::new(),
            updates: 0,
        })
    }

    pub fn gps(&self) -> &[GpModel] {
        &self.gps
    }

    /// Number of hyperparameter-update rounds run so far.
    pub fn update_rounds(&self) -> usize {
        self.updates
    }

    pub fn warming_up(&self) -> bool {
        self.gps
            .iter()
            .any(|g| g.window.len() < self.cfg.gp.cold_start)
    }

    /// Acquisition step alone, without bookkeeping.
    pub fn step(&mut self, snr_db: &[f64]) -> Result<PolicyDecision> {
        if self.warming_up() {
            return Ok(PolicyDecision {
                cr: psnr_max_policy(&self.cfg.users),
                predicted_mean: vec![None; self.gps.len()],
                feasible: None,
            });
        }
        let res = select_cr(&self.gps, snr_db, &self.cfg, &mut self.rng)?;
        Ok(PolicyDecision {
            cr: res.cr,
            predicted_mean: res.predicted_mean.into_iter().map(Some).collect(),
            feasible: Some(res.feasible),
        })
    }
}

impl Policy for ProposedController {
    fn tag(&self) -> PolicyTag {
        PolicyTag::Proposed
    }

    fn decide(
        &mut self,
        _t: usize,
        snr_db: &[f64],
        _oracle: &dyn QualityOracle,
    ) -> Result<PolicyDecision> {
        let timed = !self.warming_up();
        let start = Instant::now();
        let d = self.step(snr_db)?;
        if timed {
            self.inference_ms.push(start.elapsed().as_secs_f64() * 1e3);
        }
        Ok(d)
    }

    fn observe(
        &mut self,
        t: usize,
        snr_db: &[f64],
        cr: &[f64],
        oracle_quality: &[f64],
    ) -> Result<()> {
        let n = self.gps.len();
        if snr_db.len() != n || cr.len() != n || oracle_quality.len() != n {
            return Err(Error::invalid(
                "observation length does not match the number of users",
            ));
        }
        for (k, gp) in self.gps.iter_mut().enumerate() {
            gp.observe(cr[k], snr_db[k], oracle_quality[k]);
        }
        if t > 0 && t.is_multiple_of(self.cfg.update_interval) {
            let start = Instant::now();
            for gp in &mut self.gps {
                gp.update(&self.cfg.gp);
            }
            self.update_ms.push(start.elapsed().as_secs_f64() * 1e3);
            self.updates += 1;
        }
        Ok(())
    }

    fn inference_ms(&self) -> &[f64] {
        &self.inference_ms
    }

    fn update_ms(&self) -> &[f64] {
        &self.update_ms
    }
}

pub fn make_policy(tag: PolicyTag, cfg: &SystemConfig) -> Result<Box<dyn Policy>> {
    Ok(match tag {
        PolicyTag::Proposed => Box::new(ProposedController::new(cfg)?),
        other => Box::new(Baseline::new(other, cfg.users.clone())?),
    })
}
