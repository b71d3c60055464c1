//! Constrained Monte-Carlo acquisition over joint compression-ratio vectors.
//!
//! Each user's probabilistic quality requirement `P(Q >= q) >= c` becomes the
//! deterministic `mu - beta * sigma >= q` with `beta = Φ⁻¹(c)`. Candidates are
//! drawn uniformly from the CR box, scored by
//! `Σ mu_n - alpha B/(N R) (Σ sqrt(eps_n L_n))²`, and the best feasible one
//! wins. See [`select_from_candidates`] for what happens when none is.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::gp::{GpModel, InputNormalizer, Posterior, PosteriorPredictor};
use crate::model::{SystemConfig, UserProfile};
use crate::rate::{LatencyPenalty, MIN_CR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionResult {
    pub cr: Vec<f64>,
    /// Whether the chosen candidate satisfied every user's constraint.
    pub feasible: bool,
    pub evaluated: usize,
    pub best_surrogate_objective: f64,
    /// Posterior means at the chosen candidate.
    pub predicted_mean: Vec<f64>,
}

/// Standard-normal quantile `Φ⁻¹(c)`.
pub fn confidence_to_beta(c: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!(
            "confidence must lie in (0, 1), got {c}"
        )));
    }
    Ok(Normal::standard().inverse_cdf(c))
}

/// `mu - beta * sigma >= q_min_eff`, inclusive.
#[inline]
pub fn constraint_satisfied(post: &Posterior, q_min_eff: f64, beta: f64) -> bool {
    constraint_slack(post, q_min_eff, beta) >= 0.0
}

#[inline]
pub fn constraint_slack(post: &Posterior, q_min_eff: f64, beta: f64) -> f64 {
    post.mean - beta * post.std() - q_min_eff
}

/// Row-major `M x N` block of joint CR candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    num_users: usize,
    values: Vec<f64>,
}

impl Candidates {
    pub fn len(&self) -> usize {
        self.values.len().checked_div(self.num_users).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn get(&self, m: usize) -> &[f64] {
        &self.values[m * self.num_users..(m + 1) * self.num_users]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.num_users.max(1))
    }
}

/// `m` joint vectors, entry `n` uniform on `bounds[n]`.
pub fn sample_candidates<R: Rng + ?Sized>(
    bounds: &[(f64, f64)],
    m: usize,
    rng: &mut R,
) -> Candidates {
    let mut values = Vec::with_capacity(m * bounds.len());
    for _ in 0..m {
        for &(lo, hi) in bounds {
            let u: f64 = rng.random();
            values.push(lo + (hi - lo) * u);
        }
    }
    Candidates {
        num_users: bounds.len(),
        values,
    }
}

pub fn cr_bounds(profiles: &[UserProfile]) -> Vec<(f64, f64)> {
    profiles.iter().map(|p| (p.cr_min, p.cr_max)).collect()
}

/// A user's surrogate at the current slot, as a function of its CR alone.
pub trait CrSurrogate {
    fn posterior_at(&self, eps: f64) -> Posterior;
}

impl<F: Fn(f64) -> Posterior> CrSurrogate for F {
    fn posterior_at(&self, eps: f64) -> Posterior {
        self(eps)
    }
}

/// A factored GP with the slot's SNR already bound in.
#[derive(Debug, Clone, Copy)]
pub struct SlotSurrogate {
    predictor: PosteriorPredictor,
    normalizer: InputNormalizer,
    snr_db: f64,
}

impl SlotSurrogate {
    pub fn new(gp: &GpModel, snr_db: f64) -> Result<Self> {
        Ok(Self {
            predictor: gp.factor()?.predictor(),
            normalizer: gp.normalizer,
            snr_db,
        })
    }
}

impl CrSurrogate for SlotSurrogate {
    #[inline]
    fn posterior_at(&self, eps: f64) -> Posterior {
        self.predictor
            .posterior(self.normalizer.normalize(eps, self.snr_db))
    }
}

/// Per-user constants used while scoring.
#[derive(Debug, Clone, Copy)]
pub struct UserConstraint {
    pub q_min_eff: f64,
    pub beta: f64,
    pub source_dim: u64,
    /// CR used when the constraint cannot be met by any candidate.
    pub cr_max: f64,
}

impl UserConstraint {
    pub fn from_profile(p: &UserProfile) -> Result<Self> {
        Ok(Self {
            q_min_eff: p.q_min_eff(),
            beta: confidence_to_beta(p.confidence)?,
            source_dim: p.source_dim,
            cr_max: p.cr_max,
        })
    }
}

/// Scores every candidate and returns the constrained argmax (ties go to the
/// lowest index).
///
/// When no candidate meets every constraint, users whose constraint fails on
/// every sampled CR are pinned to their upper CR bound (the same quality-safe
/// choice as the cold start) and the argmax is retaken over the remaining
/// users' constraints. If that set is empty too, the candidate with the
/// largest minimum slack is returned. Both fallbacks report
/// `feasible = false`.
pub fn select_from_candidates<S: CrSurrogate>(
    surrogates: &[S],
    users: &[UserConstraint],
    penalty: &LatencyPenalty,
    candidates: &Candidates,
) -> Result<AcquisitionResult> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let n = surrogates.len();
    if users.len() != n || candidates.num_users() != n {
        return Err(Error::invalid(
            "surrogates, users and candidates disagree on N",
        ));
    }
    let sqrt_dims: Vec<f64> = users.iter().map(|u| (u.source_dim as f64).sqrt()).collect();

    let mut best_feasible: Option<(usize, f64)> = None;
    let mut best_slack: (usize, f64, f64) = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut user_best = vec![f64::NEG_INFINITY; n];
    let mut slacks = vec![0.0; candidates.len() * n];

    for (m, cand) in candidates.iter().enumerate() {
        let mut mean_sum = 0.0;
        let mut sqrt_sum = 0.0;
        let mut min_slack = f64::INFINITY;
        for k in 0..n {
            let eps = cand[k];
            let post = surrogates[k].posterior_at(eps);
            mean_sum += post.mean;
            sqrt_sum += eps.max(MIN_CR).sqrt() * sqrt_dims[k];
            let s = constraint_slack(&post, users[k].q_min_eff, users[k].beta);
            slacks[m * n + k] = s;
            user_best[k] = user_best[k].max(s);
            min_slack = min_slack.min(s);
        }
        let score = mean_sum - penalty.apply(sqrt_sum);
        if min_slack >= 0.0 {
            if best_feasible.is_none_or(|(_, s)| score > s) {
                best_feasible = Some((m, score));
            }
        } else if best_feasible.is_none() && min_slack > best_slack.1 {
            best_slack = (m, min_slack, score);
        }
    }

    if let Some((m, score)) = best_feasible {
        return Ok(finish(
            surrogates,
            candidates.get(m).to_vec(),
            true,
            score,
            candidates.len(),
        ));
    }

    // Users that no sampled CR can satisfy go to the top of their range.
    let pinned: Vec<Option<f64>> = (0..n)
        .map(|k| (user_best[k] < 0.0).then_some(users[k].cr_max))
        .collect();
    let mut best_pinned: Option<(Vec<f64>, f64)> = None;
    if pinned.iter().any(Option::is_some) && pinned.iter().any(Option::is_none) {
        let pinned_post: Vec<Option<(f64, f64)>> = pinned
            .iter()
            .zip(surrogates)
            .map(|(p, s)| p.map(|e| (s.posterior_at(e).mean, e.max(MIN_CR).sqrt())))
            .collect();
        for (m, cand) in candidates.iter().enumerate() {
            let mut mean_sum = 0.0;
            let mut sqrt_sum = 0.0;
            let mut ok = true;
            for k in 0..n {
                match pinned_post[k] {
                    Some((mu, root)) => {
                        mean_sum += mu;
                        sqrt_sum += root * sqrt_dims[k];
                    }
                    None => {
                        if slacks[m * n + k] < 0.0 {
                            ok = false;
                            break;
                        }
                        mean_sum += surrogates[k].posterior_at(cand[k]).mean;
                        sqrt_sum += cand[k].max(MIN_CR).sqrt() * sqrt_dims[k];
                    }
                }
            }
            if !ok {
                continue;
            }
            let score = mean_sum - penalty.apply(sqrt_sum);
            if best_pinned.as_ref().is_none_or(|(_, s)| score > *s) {
                let cr = (0..n).map(|k| pinned[k].unwrap_or(cand[k])).collect();
                best_pinned = Some((cr, score));
            }
        }
    }
    let (cr, score) = match best_pinned {
        Some(found) => found,
        None => (candidates.get(best_slack.0).to_vec(), best_slack.2),
    };
    Ok(finish(surrogates, cr, false, score, candidates.len()))
}

fn finish<S: CrSurrogate>(
    surrogates: &[S],
    cr: Vec<f64>,
    feasible: bool,
    score: f64,
    evaluated: usize,
) -> AcquisitionResult {
    let predicted_mean = cr
        .iter()
        .zip(surrogates)
        .map(|(&e, s)| s.posterior_at(e).mean)
        .collect();
    AcquisitionResult {
        cr,
        feasible,
        evaluated,
        best_surrogate_objective: score,
        predicted_mean,
    }
}

/// One acquisition step for all users. Every GP window must be non-empty.
pub fn select_cr<R: Rng + ?Sized>(
    gps: &[GpModel],
    snr_db: &[f64],
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<AcquisitionResult> {
    let n = cfg.num_users();
    if gps.len() != n || snr_db.len() != n {
        return Err(Error::invalid("one GP and one SNR per user are required"));
    }
    if cfg.mc_samples == 0 {
        return Err(Error::EmptyCandidateSet);
    }
    let surrogates = gps
        .iter()
        .zip(snr_db)
        .map(|(gp, &s)| SlotSurrogate::new(gp, s))
        .collect::<Result<Vec<_>>>()?;
    let users = cfg
        .users
        .iter()
        .map(UserConstraint::from_profile)
        .collect::<Result<Vec<_>>>()?;
    let penalty = LatencyPenalty::new(n, cfg.total_rate, cfg.bits_per_symbol, cfg.alpha);
    let candidates = sample_candidates(&cr_bounds(&cfg.users), cfg.mc_samples, rng);
    select_from_candidates(&surrogates, &users, &penalty, &candidates)
}
