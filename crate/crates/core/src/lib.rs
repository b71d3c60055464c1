//! Online compression-ratio and rate allocation for multi-user semantic
//! communication.
//!
//! A per-user Gaussian-process surrogate predicts reconstruction quality from
//! `(compression ratio, SNR)`. Each slot a Monte-Carlo acquisition picks the
//! joint CR vector that maximizes predicted quality minus a latency penalty,
//! subject to `P(quality >= q_min) >= c` per user, and rates follow in closed
//! form. The crate also ships a simulator (block-fading channel, synthetic
//! codec quality, baseline policies) and the `semcom` command-line driver.
//!
//! ```
//! use semcom::{config::default_config, policy::PolicyTag, sim::run_simulation};
//!
//! let mut cfg = default_config();
//! cfg.slots = 10;
//! let out = run_simulation(&cfg, PolicyTag::PsnrMax).unwrap();
//! assert!((out.summary.avg_latency_ms - 150.99).abs() < 0.01);
//! ```

// Range checks are written `!(x > 0.0)` so that NaN fails them too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acquisition;
pub mod channel;
pub mod config;
pub mod env;
pub mod error;
pub mod gp;
pub mod model;
pub mod output;
pub mod policy;
pub mod rate;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
