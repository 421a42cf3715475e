//! Self-describing JSON checkpoints of trained policies.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::policy::Policy;
use super::PpoConfig;
use crate::mdp::ArchitectureKind;
use crate::nn::ActorCritic;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDims {
    pub actor: Vec<usize>,
    pub critic: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyCheckpoint {
    pub format_version: u32,
    pub architecture: ArchitectureKind,
    pub n: usize,
    pub observation_len: usize,
    pub phase_feature: bool,
    pub density_scale: f64,
    pub layer_dims: LayerDims,
    pub agents: Vec<ActorCritic>,
    pub hyperparameters: PpoConfig,
    pub link_length_m: f64,
    pub episode: usize,
    pub eval_return: f64,
    pub train_seed: u64,
}

impl PolicyCheckpoint {
    pub fn from_policy(
        policy: &Policy,
        hyperparameters: &PpoConfig,
        link_length_m: f64,
        episode: usize,
        eval_return: f64,
    ) -> Self {
        let first = &policy.agents[0];
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            architecture: policy.arch,
            n: policy.n,
            observation_len: first.actor.input_dim(),
            phase_feature: policy.phase_feature,
            density_scale: policy.density_scale,
            layer_dims: LayerDims {
                actor: first.actor.dims.clone(),
                critic: first.critic.dims.clone(),
            },
            agents: policy.agents.clone(),
            hyperparameters: hyperparameters.clone(),
            link_length_m,
            episode,
            eval_return,
            train_seed: hyperparameters.train_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Checkpoint(msg));
        if self.format_version != CHECKPOINT_FORMAT_VERSION {
            return fail(format!("unsupported format version {}", self.format_version));
        }
        if !self.architecture.is_learned() {
            return fail("checkpoint architecture must be a learned controller".into());
        }
        if self.n == 0 || self.n > 10_000 {
            return fail(format!("implausible junction count {}", self.n));
        }
        if !(self.density_scale > 0.0 && self.density_scale.is_finite()) {
            return fail(format!("invalid density scale {}", self.density_scale));
        }
        let expected_obs = self.architecture.observation_len(self.n, self.phase_feature);
        if self.observation_len != expected_obs {
            return fail(format!(
                "observation length {} does not match {} on {} junctions ({expected_obs})",
                self.observation_len, self.architecture, self.n
            ));
        }
        if self.agents.len() != self.architecture.agent_count(self.n) {
            return fail(format!(
                "{} parameter sets for {} on {} junctions",
                self.agents.len(),
                self.architecture,
                self.n
            ));
        }
        let bits = self.architecture.action_bits(self.n);
        for agent in &self.agents {
            agent.validate()?;
            if agent.actor.dims != self.layer_dims.actor || agent.critic.dims != self.layer_dims.critic {
                return fail("agent layer dims differ from the declared layer dims".into());
            }
            if agent.actor.input_dim() != self.observation_len || agent.actor.output_dim() != bits {
                return fail("agent input/output size does not match the architecture".into());
            }
        }
        Ok(())
    }

    /// Builds a policy for a corridor of `n` junctions. Only parameter-sharing
    /// checkpoints may be deployed on a different `n` than they were trained on.
    pub fn deploy(&self, n: usize) -> Result<Policy> {
        self.validate()?;
        if n != self.n && self.architecture != ArchitectureKind::ParameterSharing {
            return Err(Error::Checkpoint(format!(
                "{} checkpoint trained on {} junctions cannot run on {n}",
                self.architecture, self.n
            )));
        }
        Policy::new(self.architecture, n, self.phase_feature, self.density_scale, self.agents.clone())
            .map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a checkpoint document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let ckpt: PolicyCheckpoint = serde_json::from_str(text)?;
        ckpt.validate()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn checkpoint(arch: ArchitectureKind, n: usize) -> PolicyCheckpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let agents = (0..arch.agent_count(n))
            .map(|_| ActorCritic::new(arch.observation_len(n, false), arch.action_bits(n), &[16, 16], &mut rng))
            .collect();
        let policy = Policy::new(arch, n, false, 7.0, agents).unwrap();
        PolicyCheckpoint::from_policy(&policy, &PpoConfig::default(), 700.0, 40, -1234.5)
    }

    #[test]
    fn save_load_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt.json");
        let ckpt = checkpoint(ArchitectureKind::FullyDecentralized, 3);
        ckpt.save(&path).unwrap();
        let back = PolicyCheckpoint::load(&path).unwrap();
        assert_eq!(back, ckpt);
        for (a, b) in back.agents.iter().zip(&ckpt.agents) {
            let bits = |m: &ActorCritic| m.actor.params().chain(m.critic.params()).map(|p| p.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn parameter_sharing_deploys_on_any_n() {
        let ckpt = checkpoint(ArchitectureKind::ParameterSharing, 3);
        let policy = ckpt.deploy(13).unwrap();
        assert_eq!(policy.n, 13);
        assert_eq!(policy.streams(), 13);
    }

    #[test]
    fn centralized_and_fd_reject_other_n() {
        assert!(matches!(
            checkpoint(ArchitectureKind::Centralized, 3).deploy(13),
            Err(Error::Checkpoint(_))
        ));
        assert!(checkpoint(ArchitectureKind::FullyDecentralized, 3).deploy(13).is_err());
        assert!(checkpoint(ArchitectureKind::Centralized, 3).deploy(3).is_ok());
    }

    #[test]
    fn tampered_documents_are_rejected() {
        let ckpt = checkpoint(ArchitectureKind::Centralized, 3);
        let mut wrong_obs = ckpt.clone();
        wrong_obs.observation_len = 4;
        assert!(wrong_obs.validate().is_err());
        let mut wrong_version = ckpt.clone();
        wrong_version.format_version = 99;
        assert!(wrong_version.validate().is_err());
        let mut nan = ckpt.clone();
        nan.agents[0].actor.layers[0].weights[0] = f64::NAN;
        assert!(nan.validate().is_err());
        let mut wrong_arch = ckpt;
        wrong_arch.architecture = ArchitectureKind::MaxPressure;
        assert!(wrong_arch.validate().is_err());
        assert!(PolicyCheckpoint::from_json_str("{\"format_version\": 1}").is_err());
        assert!(PolicyCheckpoint::from_json_str("not json").is_err());
    }
}
