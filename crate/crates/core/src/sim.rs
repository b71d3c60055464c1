//! Slot loop, metric aggregation and parameter sweeps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::UserChannel;
use crate::env::{SlotNoise, UserEnvironment};
use crate::error::{Error, Result};
use crate::model::{
    feature_length, objective_value, SlotDecision, SlotRecord, SystemConfig, UserProfile,
};
use crate::policy::{make_policy, PolicyTag};
use crate::rate::allocate_rates;

/// CRs this far outside a user's bounds are rejected rather than clamped.
const CR_BOUND_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub count: usize,
    pub mean_ms: f64,
    pub std_ms: f64,
}

impl TimingStats {
    pub fn from_samples(ms: &[f64]) -> Self {
        if ms.is_empty() {
            return Self::default();
        }
        let n = ms.len() as f64;
        let mean = ms.iter().sum::<f64>() / n;
        let var = if ms.len() > 1 {
            ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            count: ms.len(),
            mean_ms: mean,
            std_ms: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub user_id: u32,
    pub satisfaction_pct: f64,
    pub mean_psnr_db: f64,
    pub mean_latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub slots: usize,
    pub users: Vec<UserSummary>,
    pub avg_satisfaction_pct: f64,
    pub avg_psnr_db: f64,
    pub avg_latency_ms: f64,
    /// Objective per slot, averaged over slots.
    pub total_objective: f64,
    pub update_ms: TimingStats,
    pub inference_ms: TimingStats,
}

impl RunSummary {
    /// Summary of a zero-slot run: nothing could be violated, so satisfaction
    /// is 100% and every other figure is zero.
    pub fn empty(user_ids: &[u32]) -> Self {
        Self {
            slots: 0,
            users: user_ids
                .iter()
                .map(|&user_id| UserSummary {
                    user_id,
                    satisfaction_pct: 100.0,
                    mean_psnr_db: 0.0,
                    mean_latency_ms: 0.0,
                })
                .collect(),
            avg_satisfaction_pct: 100.0,
            avg_psnr_db: 0.0,
            avg_latency_ms: 0.0,
            total_objective: 0.0,
            update_ms: TimingStats::default(),
            inference_ms: TimingStats::default(),
        }
    }
}

/// Aggregates records the way the comparison table does: per-user means over
/// slots, then arithmetic means over users. Users are numbered from 1 in
/// record order; [`run_simulation`] substitutes the configured ids.
pub fn compute_metrics(records: &[SlotRecord]) -> Result<RunSummary> {
    let first = records.first().ok_or(Error::EmptyRecords)?;
    let n = first.snr_db.len();
    if records.iter().any(|r| {
        r.snr_db.len() != n
            || r.true_quality.len() != n
            || r.satisfied.len() != n
            || r.decision.latency.len() != n
    }) {
        return Err(Error::invalid("records disagree on the number of users"));
    }
    let t = records.len() as f64;
    let users: Vec<UserSummary> = (0..n)
        .map(|k| {
            let sat = records.iter().filter(|r| r.satisfied[k]).count() as f64;
            UserSummary {
                user_id: k as u32 + 1,
                satisfaction_pct: 100.0 * sat / t,
                mean_psnr_db: records.iter().map(|r| r.true_quality[k]).sum::<f64>() / t,
                mean_latency_ms: 1e3 * records.iter().map(|r| r.decision.latency[k]).sum::<f64>()
                    / t,
            }
        })
        .collect();
    let mean_over = |f: fn(&UserSummary) -> f64| users.iter().map(f).sum::<f64>() / n as f64;
    Ok(RunSummary {
        slots: records.len(),
        avg_satisfaction_pct: mean_over(|u| u.satisfaction_pct),
        avg_psnr_db: mean_over(|u| u.mean_psnr_db),
        avg_latency_ms: mean_over(|u| u.mean_latency_ms),
        total_objective: records.iter().map(|r| r.objective).sum::<f64>() / t,
        users,
        update_ms: TimingStats::default(),
        inference_ms: TimingStats::default(),
    })
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub policy: PolicyTag,
    pub records: Vec<SlotRecord>,
    pub summary: RunSummary,
}

fn check_bounds(cr: &[f64], users: &[UserProfile]) -> Result<Vec<f64>> {
    if cr.len() != users.len() {
        return Err(Error::invalid("policy returned the wrong number of CRs"));
    }
    cr.iter()
        .zip(users)
        .map(|(&e, u)| {
            if e < u.cr_min - CR_BOUND_TOLERANCE
                || e > u.cr_max + CR_BOUND_TOLERANCE
                || !e.is_finite()
            {
                Err(Error::invalid(format!(
                    "user {}: CR {e} outside [{}, {}]",
                    u.user_id, u.cr_min, u.cr_max
                )))
            } else {
                Ok(e.clamp(u.cr_min, u.cr_max))
            }
        })
        .collect()
}

pub fn run_simulation(cfg: &SystemConfig, policy: PolicyTag) -> Result<SimOutput> {
    cfg.validate()?;
    let mut pol = make_policy(policy, cfg)?;
    let mut channels = cfg
        .users
        .iter()
        .map(|u| UserChannel::new(u.user_id, cfg.seed, u.trajectory.clone(), &cfg.channel))
        .collect::<Result<Vec<_>>>()?;
    let mut envs: Vec<UserEnvironment> = cfg
        .users
        .iter()
        .map(|u| UserEnvironment::new(u.user_id, cfg.seed, u.quality_model.clone()))
        .collect();
    let dims: Vec<u64> = cfg.users.iter().map(|u| u.source_dim).collect();
    let ids: Vec<u32> = cfg.users.iter().map(|u| u.user_id).collect();

    let mut records = Vec::with_capacity(cfg.slots);
    for t in 0..cfg.slots {
        let snr_db = channels
            .iter_mut()
            .map(|c| c.sample(t))
            .collect::<Result<Vec<_>>>()?;
        let noise: Vec<SlotNoise> = envs.iter_mut().map(UserEnvironment::draw_slot).collect();
        let oracle = |n: usize, eps: f64| envs[n].oracle_quality(snr_db[n], eps, &noise[n]);

        let decision = pol.decide(t, &snr_db, &oracle)?;
        let cr = check_bounds(&decision.cr, &cfg.users)?;
        let alloc = allocate_rates(&cr, &dims, cfg.total_rate, cfg.bits_per_symbol)?;

        let mut true_quality = Vec::with_capacity(cr.len());
        let mut oracle_quality = Vec::with_capacity(cr.len());
        for (n, &e) in cr.iter().enumerate() {
            true_quality.push(envs[n].true_quality(snr_db[n], e, &noise[n])?);
            oracle_quality.push(oracle(n, e)?);
        }
        let satisfied = true_quality
            .iter()
            .zip(&cfg.users)
            .map(|(q, u)| *q >= u.q_min)
            .collect();
        let objective = objective_value(&true_quality, &alloc.latencies, cfg.alpha)?;
        pol.observe(t, &snr_db, &cr, &oracle_quality)?;

        let feature_len = cr
            .iter()
            .zip(&dims)
            .map(|(&e, &l)| feature_length(e, l))
            .collect::<Result<Vec<_>>>()?;
        records.push(SlotRecord {
            t,
            snr_db,
            decision: SlotDecision {
                cr,
                rate: alloc.rates,
                feature_len,
                predicted_quality_mean: decision.predicted_mean,
                latency: alloc.latencies,
            },
            true_quality,
            oracle_quality,
            satisfied,
            objective,
        });
    }

    let mut summary = if records.is_empty() {
        RunSummary::empty(&ids)
    } else {
        compute_metrics(&records)?
    };
    for (u, &id) in summary.users.iter_mut().zip(&ids) {
        u.user_id = id;
    }
    summary.inference_ms = TimingStats::from_samples(pol.inference_ms());
    summary.update_ms = TimingStats::from_samples(pol.update_ms());
    Ok(SimOutput {
        policy,
        records,
        summary,
    })
}

/// Runs every policy on the same configuration (and so the same random draws).
pub fn bench(cfg: &SystemConfig) -> Result<Vec<SimOutput>> {
    PolicyTag::ALL
        .iter()
        .map(|&p| run_simulation(cfg, p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Alpha,
    QMinVector,
    NUsers,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::Alpha => "alpha",
            SweepParameter::QMinVector => "q_min_vector",
            SweepParameter::NUsers => "n_users",
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepParameter::Alpha,
            SweepParameter::QMinVector,
            SweepParameter::NUsers,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
        .ok_or_else(|| Error::UnknownSweepParameter(s.to_string()))
    }
}

/// Rate granted per user when `n_users` is swept.
pub const RATE_PER_USER: f64 = 100e6;

/// `n` users cycling through the base profiles, with fresh ids `1..=n` and
/// the total rate scaled to keep [`RATE_PER_USER`] each.
pub fn scale_users(cfg: &SystemConfig, n: usize) -> Result<SystemConfig> {
    if n == 0 {
        return Err(Error::invalid("n_users must be >= 1"));
    }
    let mut out = cfg.clone();
    out.users = (0..n)
        .map(|k| {
            let mut u = cfg.users[k % cfg.users.len()].clone();
            u.user_id = k as u32 + 1;
            u
        })
        .collect();
    out.total_rate = RATE_PER_USER * n as f64;
    Ok(out)
}

/// Configuration for one sweep point. `value` holds one number, except for
/// `q_min_vector`, which takes one entry per user.
pub fn apply_sweep_value(
    cfg: &SystemConfig,
    param: SweepParameter,
    value: &[f64],
) -> Result<SystemConfig> {
    let scalar = || -> Result<f64> {
        match value {
            [v] => Ok(*v),
            _ => Err(Error::invalid(format!(
                "{param} takes a single value, got {value:?}"
            ))),
        }
    };
    let out = match param {
        SweepParameter::Alpha => {
            let mut c = cfg.clone();
            c.alpha = scalar()?;
            c
        }
        SweepParameter::QMinVector => {
            if value.len() != cfg.num_users() {
                return Err(Error::invalid(format!(
                    "q_min_vector needs {} entries, got {}",
                    cfg.num_users(),
                    value.len()
                )));
            }
            let mut c = cfg.clone();
            for (u, &q) in c.users.iter_mut().zip(value) {
                u.q_min = q;
            }
            c
        }
        SweepParameter::NUsers => {
            let v = scalar()?;
            if !(v >= 1.0 && v.fract() == 0.0) {
                return Err(Error::invalid(format!(
                    "n_users must be a positive integer, got {v}"
                )));
            }
            scale_users(cfg, v as usize)?
        }
    };
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub parameter: SweepParameter,
    pub value: Vec<f64>,
    pub policy: PolicyTag,
    pub summary: RunSummary,
}

/// One run per value, all sharing `cfg.seed`.
pub fn sweep(
    cfg: &SystemConfig,
    param: SweepParameter,
    values: &[Vec<f64>],
    policy: PolicyTag,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(Error::invalid("sweep needs at least one value"));
    }
    values
        .iter()
        .map(|v| {
            let c = apply_sweep_value(cfg, param, v)?;
            Ok(SweepRow {
                parameter: param,
                value: v.clone(),
                policy,
                summary: run_simulation(&c, policy)?.summary,
            })
        })
        .collect()
}
