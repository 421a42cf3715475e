//! Deployable policies and the controller that runs them inside a simulation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mdp::{apply_actions, observe, reward_global, reward_local, ArchitectureKind, Observation, Scope, Transition};
use crate::net::JunctionId;
use crate::nn::{bernoulli_log_prob, sigmoid, ActorCritic};
use crate::signal::ControlDecision;
use crate::sim::{Controller, SimState};
use crate::{Error, Result};

/// A set of actor-critic networks bound to an architecture and corridor size.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub arch: ArchitectureKind,
    pub n: usize,
    pub phase_feature: bool,
    /// Multiplier applied to the density features before they reach the networks.
    pub density_scale: f64,
    pub agents: Vec<ActorCritic>,
}

impl Policy {
    pub fn new(
        arch: ArchitectureKind,
        n: usize,
        phase_feature: bool,
        density_scale: f64,
        agents: Vec<ActorCritic>,
    ) -> Result<Self> {
        if !arch.is_learned() {
            return Err(Error::InvalidConfig("MaxPressure has no learned policy".into()));
        }
        if agents.len() != arch.agent_count(n) {
            return Err(Error::InvalidConfig(format!(
                "{arch} on {n} junctions needs {} parameter sets, got {}",
                arch.agent_count(n),
                agents.len()
            )));
        }
        if !(density_scale > 0.0 && density_scale.is_finite()) {
            return Err(Error::InvalidConfig("density scale must be positive and finite".into()));
        }
        let obs = arch.observation_len(n, phase_feature);
        let bits = arch.action_bits(n);
        for a in &agents {
            if a.actor.input_dim() != obs || a.actor.output_dim() != bits {
                return Err(Error::InvalidConfig(format!(
                    "{arch} on {n} junctions needs {obs} inputs and {bits} outputs"
                )));
            }
        }
        Ok(Self {
            arch,
            n,
            phase_feature,
            density_scale,
            agents,
        })
    }

    /// Decision streams per instant: one for centralized, one per junction otherwise.
    pub fn streams(&self) -> usize {
        match self.arch {
            ArchitectureKind::Centralized => 1,
            _ => self.n,
        }
    }

    pub fn agent_for_stream(&self, stream: usize) -> usize {
        match self.arch {
            ArchitectureKind::FullyDecentralized => stream,
            _ => 0,
        }
    }

    fn scope(&self, stream: usize) -> Scope {
        match self.arch {
            ArchitectureKind::Centralized => Scope::Global,
            _ => Scope::Junction(JunctionId(stream)),
        }
    }

    fn junction(&self, stream: usize) -> Option<JunctionId> {
        match self.arch {
            ArchitectureKind::Centralized => None,
            _ => Some(JunctionId(stream)),
        }
    }

    fn reward(&self, state: &SimState, stream: usize) -> Result<f64> {
        match self.arch {
            ArchitectureKind::Centralized => Ok(reward_global(state)),
            _ => reward_local(state, JunctionId(stream)),
        }
    }

    pub fn observe(&self, state: &SimState, stream: usize) -> Result<Observation> {
        let mut obs = observe(state, self.scope(stream), self.phase_feature)?;
        // Each junction contributes four densities, then the optional phase one-hot.
        let block = if self.phase_feature { 6 } else { 4 };
        for (i, x) in obs.0.iter_mut().enumerate() {
            if i % block < 4 {
                *x *= self.density_scale;
            }
        }
        Ok(obs)
    }
}

/// How actions are drawn from the policy head.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum ActionMode {
    /// Independent Bernoulli draws per bit.
    Sample(ChaCha8Rng),
    /// Most likely value per bit (`logit > 0`).
    Greedy,
}

/// Runs a [`Policy`] as a simulation controller, optionally recording
/// per-stream transitions for training.
pub struct PolicyController<'a> {
    policy: &'a Policy,
    mode: ActionMode,
    record: bool,
    trajectories: Vec<Vec<Transition>>,
    bootstrap_values: Vec<f64>,
    global_return: f64,
    decisions: usize,
}

impl<'a> PolicyController<'a> {
    pub fn new(policy: &'a Policy, mode: ActionMode, record: bool) -> Self {
        Self {
            policy,
            mode,
            record,
            trajectories: vec![Vec::new(); policy.streams()],
            bootstrap_values: vec![0.0; policy.streams()],
            global_return: 0.0,
            decisions: 0,
        }
    }

    pub fn greedy(policy: &'a Policy) -> Self {
        Self::new(policy, ActionMode::Greedy, false)
    }

    pub fn trajectories(&self) -> &[Vec<Transition>] {
        &self.trajectories
    }

    pub fn bootstrap_values(&self) -> &[f64] {
        &self.bootstrap_values
    }

    /// Undiscounted sum of global rewards, sampled after each decision window.
    pub fn global_return(&self) -> f64 {
        self.global_return
    }

    pub fn into_parts(self) -> (Vec<Vec<Transition>>, Vec<f64>, f64) {
        (self.trajectories, self.bootstrap_values, self.global_return)
    }

    /// Rewards for the step taken at the previous decision instant.
    fn settle_rewards(&mut self, state: &SimState) -> Result<()> {
        if self.decisions == 0 {
            return Ok(());
        }
        let global = reward_global(state);
        let local_sum: f64 = state
            .network()
            .junctions()
            .map(|j| reward_local(state, j))
            .sum::<Result<f64>>()?;
        if global != local_sum {
            return Err(Error::Invariant {
                t_s: state.clock_s(),
                detail: format!("global reward {global} != sum of local rewards {local_sum}"),
            });
        }
        self.global_return += global;
        if self.record {
            for stream in 0..self.policy.streams() {
                let reward = self.policy.reward(state, stream)?;
                if let Some(last) = self.trajectories[stream].last_mut() {
                    last.reward = reward;
                }
            }
        }
        Ok(())
    }
}

impl Controller for PolicyController<'_> {
    fn decide(&mut self, state: &SimState) -> Result<Vec<ControlDecision>> {
        if state.network().n() != self.policy.n {
            return Err(Error::InvalidConfig(format!(
                "policy built for {} junctions, network has {}",
                self.policy.n,
                state.network().n()
            )));
        }
        self.settle_rewards(state)?;
        let mut bits = Vec::with_capacity(self.policy.n);
        for stream in 0..self.policy.streams() {
            let observation = self.policy.observe(state, stream)?;
            let agent = &self.policy.agents[self.policy.agent_for_stream(stream)];
            let (logits, value) = agent.forward(observation.as_slice());
            let action: Vec<bool> = match &mut self.mode {
                ActionMode::Sample(rng) => logits.iter().map(|&z| rng.gen::<f64>() < sigmoid(z)).collect(),
                ActionMode::Greedy => logits.iter().map(|&z| z > 0.0).collect(),
            };
            bits.extend_from_slice(&action);
            if self.record {
                let log_prob = bernoulli_log_prob(&logits, &action);
                self.trajectories[stream].push(Transition {
                    observation,
                    action,
                    log_prob,
                    reward: 0.0,
                    value,
                    done: false,
                    junction: self.policy.junction(stream),
                });
            }
        }
        self.decisions += 1;
        apply_actions(self.policy.arch, &bits, state)
    }

    fn finish(&mut self, state: &SimState) -> Result<()> {
        self.settle_rewards(state)?;
        if self.record {
            for stream in 0..self.policy.streams() {
                let observation = self.policy.observe(state, stream)?;
                let agent = &self.policy.agents[self.policy.agent_for_stream(stream)];
                self.bootstrap_values[stream] = agent.forward(observation.as_slice()).1;
                if let Some(last) = self.trajectories[stream].last_mut() {
                    last.done = true;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_corridor, CorridorSpec, DemandConfig};
    use crate::sim::{run, SimConfig};
    use rand::SeedableRng;
    use std::sync::Arc;

    fn agent(obs: usize, bits: usize, seed: u64) -> ActorCritic {
        ActorCritic::new(obs, bits, &[8, 8], &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn stream_layout_per_architecture() {
        let c = Policy::new(ArchitectureKind::Centralized, 3, false, 1.0, vec![agent(12, 3, 1)]).unwrap();
        assert_eq!(c.streams(), 1);
        let ps = Policy::new(ArchitectureKind::ParameterSharing, 3, false, 1.0, vec![agent(4, 1, 1)]).unwrap();
        assert_eq!(ps.streams(), 3);
        assert_eq!(ps.agent_for_stream(2), 0);
        let fd = Policy::new(
            ArchitectureKind::FullyDecentralized,
            3,
            false, 1.0,
            (0..3).map(|s| agent(4, 1, s)).collect(),
        )
        .unwrap();
        assert_eq!(fd.agent_for_stream(2), 2);
        assert!(Policy::new(ArchitectureKind::FullyDecentralized, 3, false, 1.0, vec![agent(4, 1, 1)]).is_err());
        assert!(Policy::new(ArchitectureKind::Centralized, 3, false, 1.0, vec![agent(4, 1, 1)]).is_err());
    }

    #[test]
    fn recorded_rollout_shapes() {
        let net = Arc::new(build_corridor(CorridorSpec::new(3, 300.0)).unwrap());
        let demand = DemandConfig::symmetric(400.0, 400.0);
        let cfg = SimConfig::default().with_duration(1000.0);

        let ps = Policy::new(ArchitectureKind::ParameterSharing, 3, false, 1.0, vec![agent(4, 1, 2)]).unwrap();
        let mut ctl = PolicyController::new(&ps, ActionMode::Sample(ChaCha8Rng::seed_from_u64(1)), true);
        run(net.clone(), demand, cfg.clone(), &mut ctl).unwrap();
        assert_eq!(ctl.trajectories().len(), 3);
        assert!(ctl.trajectories().iter().all(|t| t.len() == 58));
        assert!(ctl.trajectories().iter().all(|t| t.last().unwrap().done));
        for t in ctl.trajectories().iter().flatten() {
            assert!(t.log_prob <= 0.0 && t.reward <= 0.0);
            assert_eq!(t.observation.len(), 4);
        }

        let c = Policy::new(ArchitectureKind::Centralized, 3, true, 1.0, vec![agent(18, 3, 2)]).unwrap();
        let mut ctl = PolicyController::new(&c, ActionMode::Sample(ChaCha8Rng::seed_from_u64(1)), true);
        run(net, demand, cfg, &mut ctl).unwrap();
        assert_eq!(ctl.trajectories().len(), 1);
        assert_eq!(ctl.trajectories()[0][0].action.len(), 3);
        let summed: f64 = ctl.trajectories()[0].iter().map(|t| t.reward).sum();
        assert_eq!(summed, ctl.global_return());
    }

    #[test]
    fn shared_policy_acts_identically_on_identical_inputs() {
        let ps = Policy::new(ArchitectureKind::ParameterSharing, 2, true, 1.0, vec![agent(6, 1, 4)]).unwrap();
        let x = [0.2, 0.1, 0.4, 0.0, 1.0, 0.0];
        let a = ps.agents[ps.agent_for_stream(0)].forward(&x);
        let b = ps.agents[ps.agent_for_stream(1)].forward(&x);
        assert_eq!(a, b);
    }

    #[test]
    fn density_scale_touches_only_densities() {
        let net = Arc::new(build_corridor(CorridorSpec::new(2, 300.0)).unwrap());
        let cfg = SimConfig::default().with_duration(600.0).with_seed(3);
        let mut state = SimState::new(net, DemandConfig::symmetric(900.0, 900.0), cfg).unwrap();
        for _ in 0..400 {
            state.step(None).unwrap();
        }
        for (arch, agents) in [
            (ArchitectureKind::ParameterSharing, vec![agent(6, 1, 1)]),
            (ArchitectureKind::Centralized, vec![agent(12, 2, 1)]),
        ] {
            let raw = Policy::new(arch, 2, true, 1.0, agents.clone()).unwrap();
            let scaled = Policy::new(arch, 2, true, 7.0, agents).unwrap();
            for stream in 0..raw.streams() {
                let a = raw.observe(&state, stream).unwrap();
                let b = scaled.observe(&state, stream).unwrap();
                assert!(a.as_slice().iter().any(|&x| x > 0.0));
                for (i, (x, y)) in a.as_slice().iter().zip(b.as_slice()).enumerate() {
                    let expected = if i % 6 < 4 { 7.0 * x } else { *x };
                    assert_eq!(*y, expected);
                }
            }
        }
        assert!(Policy::new(ArchitectureKind::ParameterSharing, 2, false, 0.0, vec![agent(4, 1, 1)]).is_err());
    }
}
