//! Per-user Gaussian-process surrogate of reconstruction quality over
//! `(compression ratio, SNR dB)`.
//!
//! The kernel is the first-order polynomial `psi1 * (v·v' + psi2)` evaluated on
//! inputs normalized to the unit box. The prior mean is zero. Observations live
//! in a FIFO window of fixed capacity and hyperparameters are refined by
//! projected gradient ascent on the log marginal likelihood.
//!
//! The free functions take already-normalized inputs; [`GpModel`] owns the
//! normalization and the window.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

/// Normalized input pair.
pub type Input = [f64; 2];

/// Lower bound for `psi1` after each ascent step.
pub const PSI1_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyperParams {
    /// Kernel scale.
    pub psi1: f64,
    /// Kernel offset.
    pub psi2: f64,
    /// Observation-noise standard deviation, dB.
    pub sigma_obs: f64,
    /// Ascent learning rate.
    pub eta: f64,
}

/// Gradient of the log marginal likelihood w.r.t. `(psi1, psi2, sigma_obs)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MllGradient {
    pub psi1: f64,
    pub psi2: f64,
    pub sigma_obs: f64,
}

impl MllGradient {
    pub fn norm(&self) -> f64 {
        (self.psi1 * self.psi1 + self.psi2 * self.psi2 + self.sigma_obs * self.sigma_obs).sqrt()
    }
}

/// Tunables shared by every per-user GP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpSettings {
    pub init_psi1: f64,
    pub init_psi2: f64,
    pub init_sigma_obs: f64,
    pub sigma_floor: f64,
    /// Ascent steps per update call.
    pub n_steps: usize,
    /// Maximum step halvings per ascent step.
    pub max_backtracks: usize,
    /// SNR range mapped onto [0, 1] before the kernel, dB.
    pub snr_range_db: [f64; 2],
    /// Observations required before the acquisition takes over from `cr_max`.
    pub cold_start: usize,
}

impl Default for GpSettings {
    fn default() -> Self {
        Self {
            // Qualities are raw dB near 35 under a zero prior mean, so the
            // bias needs a prior std of order 10 dB; with a smaller offset the
            // level leaks into the CR weight and inflates the CR slope.
            init_psi1: 10.0,
            init_psi2: 10.0,
            init_sigma_obs: 1.0,
            sigma_floor: 1e-3,
            n_steps: 5,
            max_backtracks: 10,
            snr_range_db: [0.0, 30.0],
            cold_start: 3,
        }
    }
}

impl GpSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.init_psi1 > 0.0 && self.init_psi2 >= 0.0) {
            return Err(Error::config("gp: need init_psi1 > 0 and init_psi2 >= 0"));
        }
        if !(self.sigma_floor > 0.0 && self.init_sigma_obs >= self.sigma_floor) {
            return Err(Error::config(
                "gp: need sigma_floor > 0 and init_sigma_obs >= sigma_floor",
            ));
        }
        if !(self.snr_range_db[1] > self.snr_range_db[0]) {
            return Err(Error::config("gp: snr_range_db must be increasing"));
        }
        if self.cold_start < 1 {
            return Err(Error::config("gp: cold_start must be >= 1"));
        }
        Ok(())
    }

    pub fn initial_params(&self, eta: f64) -> GpHyperParams {
        GpHyperParams {
            psi1: self.init_psi1,
            psi2: self.init_psi2,
            sigma_obs: self.init_sigma_obs,
            eta,
        }
    }
}

/// Affine map of `(eps, snr_db)` onto the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputNormalizer {
    pub cr_min: f64,
    pub cr_max: f64,
    pub snr_min_db: f64,
    pub snr_max_db: f64,
}

impl InputNormalizer {
    pub fn new(cr_min: f64, cr_max: f64, snr_range_db: [f64; 2]) -> Self {
        Self {
            cr_min,
            cr_max,
            snr_min_db: snr_range_db[0],
            snr_max_db: snr_range_db[1],
        }
    }

    #[inline]
    pub fn normalize(&self, eps: f64, snr_db: f64) -> Input {
        let span = self.cr_max - self.cr_min;
        // Degenerate CR interval: every input shares the same CR coordinate.
        let x = if span > 0.0 {
            (eps - self.cr_min) / span
        } else {
            0.0
        };
        let g = (snr_db - self.snr_min_db) / (self.snr_max_db - self.snr_min_db);
        [x, g]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub eps: f64,
    pub snr_db: f64,
    /// Observed quality, dB.
    pub y: f64,
}

/// FIFO window holding the newest `capacity` observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationWindow {
    entries: VecDeque<Observation>,
    capacity: usize,
}

impl ObservationWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "window capacity must be positive");
        Self {
            entries: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, obs: Observation) {
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(obs);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.entries.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub mean: f64,
    /// Clamped at zero.
    pub variance: f64,
}

impl Posterior {
    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

#[inline]
pub fn kernel(v: Input, w: Input, params: &GpHyperParams) -> f64 {
    params.psi1 * (v[0] * w[0] + v[1] * w[1] + params.psi2)
}

/// `K[i][j] = k(v_i, v_j)`; the upper triangle is copied from the lower one.
pub fn gram_matrix(inputs: &[Input], params: &GpHyperParams) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel(inputs[i], inputs[j], params);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn check_data(inputs: &[Input], y: &[f64]) -> Result<()> {
    if inputs.is_empty() {
        return Err(Error::EmptyWindow);
    }
    if inputs.len() != y.len() {
        return Err(Error::invalid("inputs and targets differ in length"));
    }
    Ok(())
}

fn covariance(inputs: &[Input], params: &GpHyperParams) -> DMatrix<f64> {
    let mut sigma = gram_matrix(inputs, params);
    for i in 0..inputs.len() {
        sigma[(i, i)] += params.sigma_obs * params.sigma_obs;
    }
    sigma
}

/// Factorization of `K + sigma² I` plus `alpha = (K + sigma² I)⁻¹ y`.
#[derive(Debug, Clone)]
pub struct FactoredGp {
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    inputs: Vec<Input>,
    y: Vec<f64>,
    params: GpHyperParams,
}

impl FactoredGp {
    pub fn new(inputs: &[Input], y: &[f64], params: &GpHyperParams) -> Result<Self> {
        check_data(inputs, y)?;
        let cov = covariance(inputs, params);
        if cov.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        let chol = Cholesky::new(cov).ok_or(Error::SingularCovariance)?;
        let alpha = chol.solve(&DVector::from_column_slice(y));
        Ok(Self {
            chol,
            alpha,
            inputs: inputs.to_vec(),
            y: y.to_vec(),
            params: *params,
        })
    }

    pub fn posterior(&self, v_star: Input) -> Posterior {
        let k_star = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|&v| kernel(v, v_star, &self.params)),
        );
        let mean = k_star.dot(&self.alpha);
        let w = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k_star)
            .expect("Cholesky factor has a positive diagonal");
        let explained = w.norm_squared();
        let prior = kernel(v_star, v_star, &self.params);
        Posterior {
            mean,
            variance: (prior - explained).max(0.0),
        }
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        let t = self.y.len() as f64;
        let fit: f64 = self
            .y
            .iter()
            .zip(self.alpha.iter())
            .map(|(y, a)| y * a)
            .sum();
        -0.5 * fit - 0.5 * self.chol.ln_determinant() - 0.5 * t * (2.0 * PI).ln()
    }

    pub fn mll_gradient(&self) -> MllGradient {
        let n = self.y.len();
        let p = &self.params;
        let w = self.chol.inverse();
        let a = &self.alpha;

        // dSigma/dpsi1 = G with G[i][j] = v_i·v_j + psi2.
        let mut fit1 = 0.0;
        let mut tr1 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let g = self.inputs[i][0] * self.inputs[j][0]
                    + self.inputs[i][1] * self.inputs[j][1]
                    + p.psi2;
                fit1 += a[i] * g * a[j];
                tr1 += w[(i, j)] * g;
            }
        }

        // dSigma/dpsi2 = psi1 * 11ᵀ.
        let sum_a: f64 = a.iter().sum();
        let mut sum_w = 0.0;
        let mut tr_w = 0.0;
        for i in 0..n {
            tr_w += w[(i, i)];
            for j in 0..n {
                sum_w += w[(i, j)];
            }
        }

        // dSigma/dsigma = 2 sigma I.
        let aa: f64 = a.iter().map(|x| x * x).sum();

        MllGradient {
            psi1: 0.5 * fit1 - 0.5 * tr1,
            psi2: 0.5 * p.psi1 * sum_a * sum_a - 0.5 * p.psi1 * sum_w,
            sigma_obs: p.sigma_obs * aa - p.sigma_obs * tr_w,
        }
    }

    /// Collapses the posterior onto the kernel's three-dimensional feature
    /// space so each query costs O(1) instead of O(t²).
    pub fn predictor(&self) -> PosteriorPredictor {
        let p = &self.params;
        let n = self.inputs.len();
        // Feature map of the window: theta_i = (x_i, g_i, psi2), so that
        // k(v*, v_i) = psi1 * (x*, g*, 1)·theta_i.
        let theta: Vec<[f64; 3]> = self.inputs.iter().map(|v| [v[0], v[1], p.psi2]).collect();

        let mut weight = [0.0; 3];
        for (t, a) in theta.iter().zip(self.alpha.iter()) {
            for c in 0..3 {
                weight[c] += p.psi1 * t[c] * a;
            }
        }

        let mut quad = [[0.0; 3]; 3];
        for c in 0..3 {
            let col = DVector::from_iterator(n, theta.iter().map(|t| t[c]));
            let solved = self.chol.solve(&col);
            for r in 0..3 {
                let v: f64 = (0..n).map(|i| theta[i][r] * solved[i]).sum();
                quad[r][c] = p.psi1 * p.psi1 * v;
            }
        }
        #[allow(clippy::needless_range_loop)]
        for r in 0..3 {
            for c in 0..r {
                let v = 0.5 * (quad[r][c] + quad[c][r]);
                quad[r][c] = v;
                quad[c][r] = v;
            }
        }

        PosteriorPredictor {
            weight,
            quad,
            psi1: p.psi1,
            psi2: p.psi2,
        }
    }
}

/// Posterior evaluator precomputed from one factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorPredictor {
    weight: [f64; 3],
    quad: [[f64; 3]; 3],
    psi1: f64,
    psi2: f64,
}

impl PosteriorPredictor {
    /// Posterior without clamping, for diagnostics.
    #[inline]
    pub fn raw(&self, v: Input) -> (f64, f64) {
        let phi = [v[0], v[1], 1.0];
        let mean = self.weight[0] * phi[0] + self.weight[1] * phi[1] + self.weight[2];
        let mut explained = 0.0;
        for r in 0..3 {
            let row = &self.quad[r];
            explained += phi[r] * (row[0] * phi[0] + row[1] * phi[1] + row[2] * phi[2]);
        }
        let prior = self.psi1 * (v[0] * v[0] + v[1] * v[1] + self.psi2);
        (mean, prior - explained)
    }

    #[inline]
    pub fn posterior(&self, v: Input) -> Posterior {
        let (mean, var) = self.raw(v);
        Posterior {
            mean,
            variance: var.max(0.0),
        }
    }
}

pub fn posterior(
    inputs: &[Input],
    y: &[f64],
    params: &GpHyperParams,
    v_star: Input,
) -> Result<Posterior> {
    Ok(FactoredGp::new(inputs, y, params)?.posterior(v_star))
}

pub fn log_marginal_likelihood(inputs: &[Input], y: &[f64], params: &GpHyperParams) -> Result<f64> {
    Ok(FactoredGp::new(inputs, y, params)?.log_marginal_likelihood())
}

pub fn mll_gradient(inputs: &[Input], y: &[f64], params: &GpHyperParams) -> Result<MllGradient> {
    Ok(FactoredGp::new(inputs, y, params)?.mll_gradient())
}

fn project(mut p: GpHyperParams, sigma_floor: f64) -> GpHyperParams {
    p.psi1 = p.psi1.max(PSI1_FLOOR);
    p.psi2 = p.psi2.max(0.0);
    p.sigma_obs = p.sigma_obs.max(sigma_floor);
    p
}

/// Runs `settings.n_steps` projected ascent steps on the log marginal
/// likelihood. A step whose result lowers the likelihood is retried with
/// half the step size, at most `settings.max_backtracks` times; if it still
/// fails the current parameters are returned.
pub fn update_hyperparams(
    inputs: &[Input],
    y: &[f64],
    params: &GpHyperParams,
    settings: &GpSettings,
) -> GpHyperParams {
    if inputs.len() < 2 || inputs.len() != y.len() {
        return *params;
    }
    let mut current = *params;
    let Ok(mut fitted) = FactoredGp::new(inputs, y, &current) else {
        return current;
    };
    let mut current_mll = fitted.log_marginal_likelihood();

    for _ in 0..settings.n_steps {
        let g = fitted.mll_gradient();
        if !(g.norm() > 0.0) || !g.norm().is_finite() {
            break;
        }
        let mut step = current.eta;
        let mut accepted = None;
        for _ in 0..=settings.max_backtracks {
            let candidate = project(
                GpHyperParams {
                    psi1: current.psi1 + step * g.psi1,
                    psi2: current.psi2 + step * g.psi2,
                    sigma_obs: current.sigma_obs + step * g.sigma_obs,
                    eta: current.eta,
                },
                settings.sigma_floor,
            );
            if let Ok(f) = FactoredGp::new(inputs, y, &candidate) {
                let mll = f.log_marginal_likelihood();
                if mll >= current_mll {
                    accepted = Some((candidate, f, mll));
                    break;
                }
            }
            step *= 0.5;
        }
        match accepted {
            Some((p, f, mll)) => {
                current = p;
                fitted = f;
                current_mll = mll;
            }
            None => break,
        }
    }
    current
}

/// Per-user GP state: normalization, hyperparameters and observation window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    pub normalizer: InputNormalizer,
    pub params: GpHyperParams,
    pub window: ObservationWindow,
}

impl GpModel {
    pub fn new(normalizer: InputNormalizer, params: GpHyperParams, capacity: usize) -> Self {
        Self {
            normalizer,
            params,
            window: ObservationWindow::new(capacity),
        }
    }

    pub fn observe(&mut self, eps: f64, snr_db: f64, y: f64) {
        self.window.push(Observation { eps, snr_db, y });
    }

    pub fn normalize(&self, eps: f64, snr_db: f64) -> Input {
        self.normalizer.normalize(eps, snr_db)
    }

    pub fn training_data(&self) -> (Vec<Input>, Vec<f64>) {
        self.window
            .iter()
            .map(|o| (self.normalizer.normalize(o.eps, o.snr_db), o.y))
            .unzip()
    }

    pub fn factor(&self) -> Result<FactoredGp> {
        let (x, y) = self.training_data();
        FactoredGp::new(&x, &y, &self.params)
    }

    /// Posterior at `(eps, snr_db)`; the prior when the window is empty.
    pub fn posterior(&self, eps: f64, snr_db: f64) -> Result<Posterior> {
        let v = self.normalize(eps, snr_db);
        if self.window.is_empty() {
            return Ok(Posterior {
                mean: 0.0,
                variance: kernel(v, v, &self.params),
            });
        }
        Ok(self.factor()?.posterior(v))
    }

    pub fn log_marginal_likelihood(&self) -> Result<f64> {
        Ok(self.factor()?.log_marginal_likelihood())
    }

    /// One hyperparameter update call. Returns whether the parameters moved.
    pub fn update(&mut self, settings: &GpSettings) -> bool {
        let (x, y) = self.training_data();
        let next = update_hyperparams(&x, &y, &self.params, settings);
        let changed = next != self.params;
        self.params = next;
        changed
    }
}
