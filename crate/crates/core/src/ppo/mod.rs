//! Proximal policy optimization for the learned signal controllers.

use serde::{Deserialize, Serialize};

use crate::net::DemandConfig;
use crate::sim::SimConfig;
use crate::{Error, Result};

pub mod checkpoint;
pub mod gae;
pub mod loss;
pub mod policy;
pub mod train;

pub use checkpoint::{LayerDims, PolicyCheckpoint, CHECKPOINT_FORMAT_VERSION};
pub use gae::{compute_gae, normalize_advantages};
pub use loss::{clip_grad_norm, clipped_surrogate, ppo_loss, LossBreakdown, LossCoefficients, Sample};
pub use policy::{ActionMode, Policy, PolicyController};
pub use train::{mix_seed, train, TrainLogRow, TrainOutcome, Trainer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub lr: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub episodes: usize,
    pub episode_duration_s: f64,
    pub eval_every: usize,
    pub train_seed: u64,
    pub demand: DemandConfig,
    pub hidden: Vec<usize>,
    pub phase_feature: bool,
    /// Density features are multiplied by this length before entering the
    /// networks. The default is the jam spacing (vehicle length plus minimum
    /// gap), which turns densities into occupancy fractions in `[0, 1]`.
    pub density_scale_m: f64,
    pub max_grad_norm: f64,
    /// Multiplier applied to rewards before advantage estimation.
    pub reward_scale: f64,
    /// Simulation settings for training and evaluation episodes. The duration
    /// is taken from `episode_duration_s`.
    pub sim: SimConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            epochs_per_update: 4,
            minibatch_size: 256,
            lr: 3e-4,
            value_coef: 0.5,
            entropy_coef: 0.01,
            episodes: 500,
            episode_duration_s: 10_000.0,
            eval_every: 10,
            train_seed: 0,
            demand: DemandConfig::symmetric(700.0, 700.0),
            hidden: vec![64, 64],
            phase_feature: false,
            density_scale_m: 7.0,
            max_grad_norm: 0.5,
            reward_scale: 0.01,
            sim: SimConfig::default(),
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda must lie in [0, 1]");
        }
        if !(self.clip_eps > 0.0) {
            return bad("clip_eps must be positive");
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive and finite");
        }
        if self.epochs_per_update == 0 || self.minibatch_size == 0 || self.episodes == 0 || self.eval_every == 0 {
            return bad("epochs_per_update, minibatch_size, episodes and eval_every must be positive");
        }
        if !(self.episode_duration_s > 0.0 && self.episode_duration_s.is_finite()) {
            return bad("episode_duration_s must be positive and finite");
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden layers must be non-empty with positive widths");
        }
        if !(self.density_scale_m > 0.0 && self.density_scale_m.is_finite()) {
            return bad("density_scale_m must be positive and finite");
        }
        if !(self.max_grad_norm > 0.0) {
            return bad("max_grad_norm must be positive");
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale must be positive and finite");
        }
        for x in [self.value_coef, self.entropy_coef] {
            if !(x >= 0.0 && x.is_finite()) {
                return bad("loss coefficients must be non-negative and finite");
            }
        }
        self.demand.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = PpoConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.demand, DemandConfig::new(700.0, 700.0, 700.0, 700.0));
    }

    #[test]
    fn invariants_are_enforced() {
        for f in [
            |c: &mut PpoConfig| c.gamma = 0.0,
            |c: &mut PpoConfig| c.gamma = 1.01,
            |c: &mut PpoConfig| c.gae_lambda = -0.1,
            |c: &mut PpoConfig| c.clip_eps = 0.0,
            |c: &mut PpoConfig| c.minibatch_size = 0,
            |c: &mut PpoConfig| c.hidden = vec![],
        ] {
            let mut cfg = PpoConfig::default();
            f(&mut cfg);
            assert!(cfg.validate().is_err());
        }
        let cfg = PpoConfig { gamma: 1.0, gae_lambda: 0.0, ..PpoConfig::default() };
        cfg.validate().unwrap();
    }
}
