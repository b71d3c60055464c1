//! Block-fading channel: free-space path loss along a rectangular user
//! trajectory around a fixed edge server, times an Exp(1) fade per slot.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

const SPEED_OF_LIGHT: f64 = 3e8;

/// Smallest fade value used when computing dB.
const MIN_FADE: f64 = 1e-300;

/// Closed rectangular loop traversed at constant speed, counter-clockwise from
/// the `(-x, -y)` corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    /// Ground coordinates of the rectangle center, meters.
    pub center: [f64; 2],
    /// Extent along x, meters.
    pub length: f64,
    /// Extent along y, meters.
    pub width: f64,
    pub height: f64,
    /// Slots per loop.
    pub period: usize,
}

impl Trajectory {
    pub fn rectangle(length: f64, width: f64, height: f64, period: usize) -> Self {
        Self {
            center: [0.0, 0.0],
            length,
            width,
            height,
            period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(Error::config(
                "trajectory length and width must be positive",
            ));
        }
        if !(self.height >= 0.0) {
            return Err(Error::config("trajectory height must be >= 0"));
        }
        if self.period < 4 {
            return Err(Error::config("trajectory period must be >= 4 slots"));
        }
        Ok(())
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.length + self.width)
    }
}

pub fn user_position(t: usize, traj: &Trajectory) -> [f64; 3] {
    let phase = (t % traj.period) as f64 / traj.period as f64;
    let mut s = phase * traj.perimeter();
    let (l, w) = (traj.length, traj.width);
    let x0 = traj.center[0] - l / 2.0;
    let y0 = traj.center[1] - w / 2.0;
    let (x, y) = if s < l {
        (x0 + s, y0)
    } else {
        s -= l;
        if s < w {
            (x0 + l, y0 + s)
        } else {
            s -= w;
            if s < l {
                (x0 + l - s, y0 + w)
            } else {
                s -= l;
                (x0, y0 + w - s)
            }
        }
    };
    [x, y, traj.height]
}

pub fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Whether the Exp(1) multiplier scales channel power or amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    #[default]
    Power,
    Amplitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    pub antenna_gain: f64,
    /// Hz.
    pub carrier_freq: f64,
    pub pathloss_exp: f64,
    /// Linear noise power. `None` calibrates it per user from
    /// `median_snr_db`.
    pub noise_power: Option<f64>,
    /// Unit-fade SNR at the trajectory's median distance, used when
    /// `noise_power` is `None`.
    pub median_snr_db: f64,
    /// Edge-server position, meters.
    pub es_position: [f64; 3],
    pub fading: Fading,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            antenna_gain: 4.11,
            carrier_freq: 2.4e9,
            pathloss_exp: 3.0,
            noise_power: None,
            median_snr_db: 20.0,
            es_position: [0.0, 0.0, 20.0],
            fading: Fading::Power,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_freq > 0.0) {
            return Err(Error::config("channel: carrier_freq must be positive"));
        }
        if !(self.pathloss_exp >= 0.0) {
            return Err(Error::config("channel: pathloss_exp must be >= 0"));
        }
        if let Some(n) = self.noise_power {
            if !(n > 0.0) {
                return Err(Error::config("channel: noise_power must be positive"));
            }
        }
        Ok(())
    }

    /// Unit-fade power gain for a mean channel gain.
    fn unit_fade_power(&self, h_bar: f64) -> f64 {
        match self.fading {
            Fading::Power => h_bar,
            Fading::Amplitude => h_bar * h_bar,
        }
    }
}

/// `G_A (c / (4 pi f_c d))^{d_e}`.
pub fn path_loss_gain(d: f64, p: &ChannelParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::invalid(format!(
            "distance must be positive, got {d}"
        )));
    }
    Ok(p.antenna_gain
        * (SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * p.carrier_freq * d)).powf(p.pathloss_exp))
}

/// SNR for a given fade realization: `(linear, dB)`.
pub fn snr_from_fade(h_bar: f64, xi: f64, noise_power: f64, fading: Fading) -> (f64, f64) {
    let xi = xi.max(MIN_FADE);
    let gain = match fading {
        Fading::Power => h_bar * xi,
        Fading::Amplitude => (h_bar * xi).powi(2),
    };
    let lin = gain / noise_power;
    (lin, 10.0 * lin.log10())
}

/// Draws one block-fading SNR: `(linear, dB)`.
pub fn sample_snr<R: Rng + ?Sized>(
    h_bar: f64,
    noise_power: f64,
    fading: Fading,
    rng: &mut R,
) -> (f64, f64) {
    let xi: f64 = rng.sample(Exp1);
    snr_from_fade(h_bar, xi, noise_power, fading)
}

/// Median ES distance over one loop of the trajectory.
pub fn median_distance(traj: &Trajectory, es_position: [f64; 3]) -> f64 {
    let mut d: Vec<f64> = (0..traj.period)
        .map(|t| distance(user_position(t, traj), es_position))
        .collect();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    }
}

/// Noise power putting the unit-fade SNR at the median distance on `params.median_snr_db`.
pub fn calibrate_noise_power(traj: &Trajectory, params: &ChannelParams) -> Result<f64> {
    let d = median_distance(traj, params.es_position);
    let h = path_loss_gain(d, params)?;
    Ok(params.unit_fade_power(h) / 10f64.powf(params.median_snr_db / 10.0))
}

/// One user's channel: trajectory, resolved noise power and fading stream.
#[derive(Debug, Clone)]
pub struct UserChannel {
    trajectory: Trajectory,
    params: ChannelParams,
    noise_power: f64,
    rng: ChaCha8Rng,
}

impl UserChannel {
    pub fn new(
        user_id: u32,
        seed: u64,
        trajectory: Trajectory,
        params: &ChannelParams,
    ) -> Result<Self> {
        let noise_power = match params.noise_power {
            Some(n) => n,
            None => calibrate_noise_power(&trajectory, params)?,
        };
        Ok(Self {
            trajectory,
            params: params.clone(),
            noise_power,
            rng: stream_rng(seed, user_id, Stream::Channel),
        })
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn mean_gain(&self, t: usize) -> Result<f64> {
        let d = distance(user_position(t, &self.trajectory), self.params.es_position);
        path_loss_gain(d, &self.params)
    }

    /// SNR for slot `t` in dB; advances the fading stream by one draw.
    pub fn sample(&mut self, t: usize) -> Result<f64> {
        let h = self.mean_gain(t)?;
        Ok(sample_snr(h, self.noise_power, self.params.fading, &mut self.rng).1)
    }
}
