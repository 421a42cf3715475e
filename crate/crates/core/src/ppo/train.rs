//! Episode-based PPO training for the three learned architectures.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::checkpoint::PolicyCheckpoint;
use super::gae::{compute_gae, normalize_advantages};
use super::loss::{clip_grad_norm, ppo_loss, LossCoefficients, Sample};
use super::policy::{ActionMode, Policy, PolicyController};
use super::PpoConfig;
use crate::mdp::ArchitectureKind;
use crate::net::CorridorNetwork;
use crate::nn::{ActorCritic, AdamState};
use crate::sim::{run, SimConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainLogRow {
    pub episode: usize,
    pub mean_reward: f64,
    pub loss: f64,
    pub eval_return: Option<f64>,
    pub wall_s: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub best: PolicyCheckpoint,
    pub log: Vec<TrainLogRow>,
    /// Every checkpoint taken at an evaluation point, in episode order.
    pub evaluated: Vec<PolicyCheckpoint>,
}

/// SplitMix64 finalizer, used to derive per-episode seeds from the training seed.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const EVAL_SALT: u64 = 0xE7A1_0000;

struct Learner {
    ac: ActorCritic,
    actor_opt: AdamState,
    critic_opt: AdamState,
}

pub struct Trainer {
    network: Arc<CorridorNetwork>,
    config: PpoConfig,
    sim: SimConfig,
    arch: ArchitectureKind,
    learners: Vec<Learner>,
    rng: ChaCha8Rng,
}

impl Trainer {
    pub fn new(network: Arc<CorridorNetwork>, arch: ArchitectureKind, config: PpoConfig) -> Result<Self> {
        config.validate()?;
        if !arch.is_learned() {
            return Err(Error::InvalidConfig("MaxPressure is not trainable".into()));
        }
        let n = network.n();
        let mut init_rng = ChaCha8Rng::seed_from_u64(config.train_seed);
        let learners = (0..arch.agent_count(n))
            .map(|_| {
                let ac = ActorCritic::new(
                    arch.observation_len(n, config.phase_feature),
                    arch.action_bits(n),
                    &config.hidden,
                    &mut init_rng,
                );
                Learner {
                    actor_opt: AdamState::new(ac.actor.param_count(), config.lr),
                    critic_opt: AdamState::new(ac.critic.param_count(), config.lr),
                    ac,
                }
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.train_seed);
        rng.set_stream(1);
        let mut sim = config.sim.clone().with_duration(config.episode_duration_s);
        sim.record_lane_series = false;
        sim.validate()?;
        Ok(Self {
            network,
            arch,
            learners,
            rng,
            sim,
            config,
        })
    }

    pub fn policy(&self) -> Policy {
        Policy {
            arch: self.arch,
            n: self.network.n(),
            phase_feature: self.config.phase_feature,
            density_scale: self.config.density_scale_m,
            agents: self.learners.iter().map(|l| l.ac.clone()).collect(),
        }
    }

    /// Undiscounted global return of the greedy policy on the fixed evaluation seed.
    pub fn evaluate(&self, policy: &Policy) -> Result<f64> {
        let sim = self.sim.clone().with_seed(mix_seed(self.config.train_seed, EVAL_SALT));
        let mut ctl = PolicyController::greedy(policy);
        run(self.network.clone(), self.config.demand, sim, &mut ctl)?;
        Ok(ctl.global_return())
    }

    /// Runs one training episode and one update per learner. Returns
    /// `(mean reward per transition, mean minibatch loss)`.
    pub fn train_episode(&mut self, episode: usize) -> Result<(f64, f64)> {
        let policy = self.policy();
        let sim = self.sim.clone().with_seed(mix_seed(self.config.train_seed, episode as u64));
        let sample_rng = ChaCha8Rng::seed_from_u64(mix_seed(self.config.train_seed ^ 0x5A17, episode as u64));
        let mut ctl = PolicyController::new(&policy, ActionMode::Sample(sample_rng), true);
        run(self.network.clone(), self.config.demand, sim, &mut ctl)?;
        let (trajectories, bootstrap, _) = ctl.into_parts();

        let mut buffers: Vec<Vec<Sample>> = vec![Vec::new(); self.learners.len()];
        let (mut reward_sum, mut reward_count) = (0.0, 0usize);
        for (stream, trajectory) in trajectories.iter().enumerate() {
            let rewards: Vec<f64> = trajectory.iter().map(|t| t.reward * self.config.reward_scale).collect();
            let values: Vec<f64> = trajectory.iter().map(|t| t.value).collect();
            reward_sum += trajectory.iter().map(|t| t.reward).sum::<f64>();
            reward_count += trajectory.len();
            let (advantages, returns) = compute_gae(
                &rewards,
                &values,
                bootstrap[stream],
                self.config.gamma,
                self.config.gae_lambda,
            );
            let buffer = &mut buffers[policy.agent_for_stream(stream)];
            for ((t, advantage), ret) in trajectory.iter().zip(advantages).zip(returns) {
                buffer.push(Sample {
                    observation: t.observation.0.clone(),
                    action: t.action.clone(),
                    old_log_prob: t.log_prob,
                    advantage,
                    ret,
                });
            }
        }

        let coef = LossCoefficients {
            clip_eps: self.config.clip_eps,
            value_coef: self.config.value_coef,
            entropy_coef: self.config.entropy_coef,
        };
        let (mut loss_sum, mut loss_count) = (0.0, 0usize);
        for (learner, mut samples) in self.learners.iter_mut().zip(buffers) {
            if samples.is_empty() {
                continue;
            }
            let mut adv: Vec<f64> = samples.iter().map(|s| s.advantage).collect();
            normalize_advantages(&mut adv);
            for (s, a) in samples.iter_mut().zip(adv) {
                s.advantage = a;
            }
            let mut order: Vec<usize> = (0..samples.len()).collect();
            for _ in 0..self.config.epochs_per_update {
                order.shuffle(&mut self.rng);
                for chunk in order.chunks(self.config.minibatch_size) {
                    let batch: Vec<&Sample> = chunk.iter().map(|&i| &samples[i]).collect();
                    let (loss, mut grads) = ppo_loss(&learner.ac, &batch, &coef);
                    if !loss.total.is_finite() {
                        return Err(Error::NonFiniteLoss { episode });
                    }
                    clip_grad_norm(&mut grads, self.config.max_grad_norm);
                    learner.actor_opt.step(&mut learner.ac.actor, &grads.actor);
                    learner.critic_opt.step(&mut learner.ac.critic, &grads.critic);
                    loss_sum += loss.total;
                    loss_count += 1;
                }
            }
            if learner.ac.actor.params().chain(learner.ac.critic.params()).any(|p| !p.is_finite()) {
                return Err(Error::NonFiniteLoss { episode });
            }
        }
        Ok((
            reward_sum / reward_count.max(1) as f64,
            loss_sum / loss_count.max(1) as f64,
        ))
    }

    /// Full training run. Evaluates every `eval_every` episodes (and after the
    /// last one) and returns the checkpoint with the highest evaluation return.
    pub fn train(mut self) -> Result<TrainOutcome> {
        let start = Instant::now();
        let mut log = Vec::with_capacity(self.config.episodes);
        let mut evaluated: Vec<PolicyCheckpoint> = Vec::new();
        let mut best: Option<PolicyCheckpoint> = None;
        for episode in 0..self.config.episodes {
            let (mean_reward, loss) = self.train_episode(episode)?;
            let number = episode + 1;
            let due = number % self.config.eval_every == 0 || number == self.config.episodes;
            let eval_return = if due {
                let policy = self.policy();
                let ret = self.evaluate(&policy)?;
                let ckpt = PolicyCheckpoint::from_policy(
                    &policy,
                    &self.config,
                    self.network.link_length_m(),
                    number,
                    ret,
                );
                if best.as_ref().is_none_or(|b| ret > b.eval_return) {
                    best = Some(ckpt.clone());
                }
                evaluated.push(ckpt);
                Some(ret)
            } else {
                None
            };
            log.push(TrainLogRow {
                episode: number,
                mean_reward,
                loss,
                eval_return,
                wall_s: start.elapsed().as_secs_f64(),
            });
        }
        let best = match best {
            Some(b) => b,
            None => {
                let policy = self.policy();
                let ret = self.evaluate(&policy)?;
                PolicyCheckpoint::from_policy(&policy, &self.config, self.network.link_length_m(), 0, ret)
            }
        };
        Ok(TrainOutcome { best, log, evaluated })
    }
}

/// Trains `arch` on `network` and returns the best checkpoint with the log.
pub fn train(network: Arc<CorridorNetwork>, arch: ArchitectureKind, config: PpoConfig) -> Result<TrainOutcome> {
    Trainer::new(network, arch, config)?.train()
}
