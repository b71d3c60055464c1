//! Closed-form rate split for fixed compression ratios.
//!
//! Minimizing the mean latency `(B/N) Σ eps_n L_n / R_n` subject to
//! `Σ R_n <= R` gives `R_n ∝ sqrt(eps_n L_n)`; the budget is always spent in
//! full. Rates and the latency penalty use the continuous `eps_n L_n`, while
//! per-user latency is computed from the integer symbol count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::feature_length;

/// Compression ratios below this are treated as this value inside square roots.
pub const MIN_CR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateAllocation {
    /// Bits/second.
    pub rates: Vec<f64>,
    /// Seconds.
    pub latencies: Vec<f64>,
    pub avg_latency: f64,
}

fn check_inputs(eps: &[f64], source_dim: &[u64], total_rate: f64) -> Result<()> {
    if eps.is_empty() {
        return Err(Error::invalid("at least one user is required"));
    }
    if eps.len() != source_dim.len() {
        return Err(Error::invalid("eps and source_dim differ in length"));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::invalid(format!(
            "compression ratio must be positive, got {e}"
        )));
    }
    if source_dim.iter().any(|&l| l < 1) {
        return Err(Error::invalid("source dimension must be >= 1"));
    }
    if !(total_rate > 0.0 && total_rate.is_finite()) {
        return Err(Error::invalid(format!(
            "total rate must be positive, got {total_rate}"
        )));
    }
    Ok(())
}

#[inline]
fn weight(eps: f64, source_dim: u64) -> f64 {
    (eps.max(MIN_CR) * source_dim as f64).sqrt()
}

pub fn allocate_rates(
    eps: &[f64],
    source_dim: &[u64],
    total_rate: f64,
    bits_per_symbol: u32,
) -> Result<RateAllocation> {
    check_inputs(eps, source_dim, total_rate)?;
    let weights: Vec<f64> = eps
        .iter()
        .zip(source_dim)
        .map(|(&e, &l)| weight(e, l))
        .collect();
    let total_weight: f64 = weights.iter().sum();
    let mut rates: Vec<f64> = weights
        .iter()
        .map(|w| total_rate * w / total_weight)
        .collect();
    spend_exactly(&mut rates, total_rate);

    let latencies = eps
        .iter()
        .zip(source_dim)
        .zip(&rates)
        .map(|((&e, &l), &r)| {
            Ok(bits_per_symbol as f64 * feature_length(e.min(1.0), l)? as f64 / r)
        })
        .collect::<Result<Vec<f64>>>()?;
    let avg_latency = latencies.iter().sum::<f64>() / latencies.len() as f64;

    Ok(RateAllocation {
        rates,
        latencies,
        avg_latency,
    })
}

/// Pushes the rounding residual of the proportional split into the last
/// rate so that a left-to-right sum of the rates equals the budget.
///
/// The final addition can still straddle the budget: when the partial sum
/// sits on an odd half-ulp of `total`, every candidate for the last rate
/// lands on a tie and rounds to even. Stepping the second-to-last rate moves
/// the partial sum by single ulps (its addition is the last rounding), which
/// gets it off that grid.
fn spend_exactly(rates: &mut [f64], total: f64) {
    let n = rates.len();
    if n == 0 {
        return;
    }
    for _ in 0..8 {
        let partial: f64 = rates[..n - 1].iter().sum();
        rates[n - 1] = total - partial;
        let mut was_below = None;
        for _ in 0..8 {
            let sum = partial + rates[n - 1];
            if sum == total {
                return;
            }
            let below = sum < total;
            if was_below == Some(!below) {
                break;
            }
            was_below = Some(below);
            rates[n - 1] = if below {
                rates[n - 1].next_up()
            } else {
                rates[n - 1].next_down()
            };
        }
        if n < 2 {
            return;
        }
        for _ in 0..64 {
            rates[n - 2] = rates[n - 2].next_up();
            if rates[..n - 1].iter().sum::<f64>() != partial {
                break;
            }
        }
    }
}

/// `alpha * B / (N R) * (Σ sqrt(eps_n L_n))²`: the latency penalty once the
/// optimal rates are substituted back in.
pub fn latency_term(
    eps: &[f64],
    source_dim: &[u64],
    total_rate: f64,
    bits_per_symbol: u32,
    alpha: f64,
) -> Result<f64> {
    check_inputs(eps, source_dim, total_rate)?;
    let s: f64 = eps
        .iter()
        .zip(source_dim)
        .map(|(&e, &l)| weight(e, l))
        .sum();
    Ok(LatencyPenalty::new(eps.len(), total_rate, bits_per_symbol, alpha).apply(s))
}

/// Precomputed scale of the latency penalty, for scoring many candidates.
#[derive(Debug, Clone, Copy)]
pub struct LatencyPenalty {
    coeff: f64,
}

impl LatencyPenalty {
    pub fn new(num_users: usize, total_rate: f64, bits_per_symbol: u32, alpha: f64) -> Self {
        Self {
            coeff: alpha * bits_per_symbol as f64 / (num_users as f64 * total_rate),
        }
    }

    /// Penalty for a given `Σ sqrt(eps_n L_n)`.
    #[inline]
    pub fn apply(&self, sqrt_sum: f64) -> f64 {
        self.coeff * sqrt_sum * sqrt_sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DEFAULT_CR_MAX, DEFAULT_CR_MIN, DEFAULT_SOURCE_DIM};

    #[test]
    fn two_to_one_split() {
        let a = allocate_rates(&[1.0, 1.0], &[4, 1], 3.0, 64).unwrap();
        assert!((a.rates[0] - 2.0).abs() < 1e-12);
        assert!((a.rates[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_users_split_evenly() {
        let a = allocate_rates(&[0.2; 5], &[1000; 5], 10.0, 64).unwrap();
        for r in &a.rates {
            assert!((r - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn default_dimension_latencies() {
        let dims = [DEFAULT_SOURCE_DIM; 4];
        let hi = allocate_rates(&[DEFAULT_CR_MAX; 4], &dims, 400e6, 64).unwrap();
        let lo = allocate_rates(&[DEFAULT_CR_MIN; 4], &dims, 400e6, 64).unwrap();
        for (h, l) in hi.latencies.iter().zip(&lo.latencies) {
            assert!((h * 1e3 - 150.99).abs() <= 0.01, "{}", h * 1e3);
            assert!((l * 1e3 - 16.78).abs() <= 0.01, "{}", l * 1e3);
        }
        assert!((hi.avg_latency / lo.avg_latency - 9.0).abs() <= 0.01);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(allocate_rates(&[0.0, 0.1], &[10, 10], 1.0, 64).is_err());
        assert!(allocate_rates(&[0.1, 0.1], &[10, 10], 0.0, 64).is_err());
        assert!(allocate_rates(&[0.1], &[10, 10], 1.0, 64).is_err());
        assert!(latency_term(&[-0.1], &[10], 1.0, 64, 1.0).is_err());
    }

    #[test]
    fn single_user_penalty() {
        let v = latency_term(&[0.25], &[1000], 5e3, 64, 200.0).unwrap();
        assert!((v - 200.0 * 64.0 * 0.25 * 1000.0 / 5e3).abs() < 1e-9);
    }

    #[test]
    fn penalty_is_homogeneous_of_degree_one() {
        let eps = [0.05, 0.1, 0.12];
        let dims = [1000, 2000, 3000];
        let a = latency_term(&eps, &dims, 1e6, 64, 50.0).unwrap();
        let doubled: Vec<f64> = eps.iter().map(|e| 2.0 * e).collect();
        let b = latency_term(&doubled, &dims, 1e6, 64, 50.0).unwrap();
        assert!((b / a - 2.0).abs() < 1e-12);
    }
}
