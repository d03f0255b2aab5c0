use rand::Rng;
use rand_distr::StandardNormal;

use super::{RunSummary, SamplerError, STREAM_BATCH, STREAM_EVENT, STREAM_VELOCITY};
use crate::core::{RngStream, TargetModel};

/// Configuration shared by the discrete-time baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub step_size: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    /// Thermostat diffusion constant (mSGNHT only).
    pub diffusion: f64,
    pub initial_position: Option<Vec<f64>>,
    /// Starting momentum (mSGNHT only); standard normal draws when unset.
    pub initial_momentum: Option<Vec<f64>>,
    /// Starting per-dimension thermostat value (mSGNHT only); defaults to
    /// the diffusion constant.
    pub initial_thermostat: Option<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            step_size: 0.1,
            batch_size: 100,
            steps: 1000,
            seed: 0,
            diffusion: 1.0,
            initial_position: None,
            initial_momentum: None,
            initial_thermostat: None,
        }
    }
}

impl BaselineConfig {
    fn validate(&self, n_data: usize) -> Result<(), SamplerError> {
        if !(self.step_size > 0.0) {
            return Err(SamplerError::InvalidConfig(format!(
                "step size {} not positive",
                self.step_size
            )));
        }
        if self.batch_size < 1 || self.batch_size > n_data {
            return Err(SamplerError::InvalidConfig(format!(
                "batch size {} outside 1..={n_data}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

/// Output of a discrete-time sampler: positions after every step.
#[derive(Debug, Clone)]
pub struct ChainRun {
    pub positions: Vec<Vec<f64>>,
    pub summary: RunSummary,
}

/// Stochastic gradient Langevin dynamics with a fixed step size:
/// `w <- w - (eta/2) grad U~(w) + N(0, eta I)` per step.
pub fn run_sgld<T: TargetModel + ?Sized>(
    target: &T,
    config: &BaselineConfig,
) -> Result<ChainRun, SamplerError> {
    config.validate(target.data_len())?;
    let dim = target.dim();
    let mut batch_rng = RngStream::new(config.seed, STREAM_BATCH).rng();
    let mut noise_rng = RngStream::new(config.seed, STREAM_EVENT).rng();
    let eta = config.step_size;
    let mut w = config
        .initial_position
        .clone()
        .unwrap_or_else(|| vec![0.0; dim]);
    let mut positions = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let batch = target.sample_batch(config.batch_size, &mut batch_rng);
        let grad = target.minibatch_gradient(&batch, &w);
        for (wi, gi) in w.iter_mut().zip(&grad) {
            let noise: f64 = noise_rng.sample(StandardNormal);
            *wi += -0.5 * eta * gi + eta.sqrt() * noise;
        }
        positions.push(w.clone());
    }
    Ok(ChainRun {
        positions,
        summary: chain_summary(config, target.data_len()),
    })
}

/// Multivariate stochastic gradient Nose-Hoover thermostat with
/// per-dimension thermostat variables:
///
/// `p <- p - xi . p h - h grad U~ + sqrt(2 D h) N(0, I)`
/// `w <- w + h p`
/// `xi <- xi + h (p . p - 1)`
pub fn run_msgnht<T: TargetModel + ?Sized>(
    target: &T,
    config: &BaselineConfig,
) -> Result<ChainRun, SamplerError> {
    config.validate(target.data_len())?;
    let dim = target.dim();
    let mut batch_rng = RngStream::new(config.seed, STREAM_BATCH).rng();
    let mut noise_rng = RngStream::new(config.seed, STREAM_EVENT).rng();
    let mut momentum_rng = RngStream::new(config.seed, STREAM_VELOCITY).rng();
    let h = config.step_size;
    let noise_scale = (2.0 * config.diffusion * h).sqrt();
    let mut w = config
        .initial_position
        .clone()
        .unwrap_or_else(|| vec![0.0; dim]);
    let mut p = config
        .initial_momentum
        .clone()
        .unwrap_or_else(|| (0..dim).map(|_| momentum_rng.sample(StandardNormal)).collect());
    let mut xi = vec![config.initial_thermostat.unwrap_or(config.diffusion); dim];
    let mut positions = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let batch = target.sample_batch(config.batch_size, &mut batch_rng);
        let grad = target.minibatch_gradient(&batch, &w);
        for i in 0..dim {
            let noise: f64 = noise_rng.sample(StandardNormal);
            p[i] += -xi[i] * p[i] * h - h * grad[i] + noise_scale * noise;
        }
        for i in 0..dim {
            w[i] += h * p[i];
        }
        for i in 0..dim {
            xi[i] += h * (p[i] * p[i] - 1.0);
        }
        positions.push(w.clone());
    }
    Ok(ChainRun {
        positions,
        summary: chain_summary(config, target.data_len()),
    })
}

fn chain_summary(config: &BaselineConfig, n_data: usize) -> RunSummary {
    let data_evals = (config.steps * config.batch_size) as u64;
    RunSummary {
        proposals: config.steps as u64,
        data_evals,
        epochs: data_evals as f64 / n_data as f64,
        total_time: config.steps as f64 * config.step_size,
        ..RunSummary::default()
    }
}
