//! Clipped surrogate objective with value and entropy terms.

use crate::nn::{bernoulli_entropy, bernoulli_log_prob, sigmoid, ActorCritic, Mlp};

/// One training sample. `advantage` is expected to be normalized already.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub observation: Vec<f64>,
    pub action: Vec<bool>,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefficients {
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// Per-sample policy surrogate `min(r A, clip(r, 1-eps, 1+eps) A)` and its
/// derivative with respect to `r`.
pub fn clipped_surrogate(ratio: f64, advantage: f64, clip_eps: f64) -> (f64, f64) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    if unclipped <= clipped {
        (unclipped, advantage)
    } else {
        (clipped, 0.0)
    }
}

/// Mean loss over `batch` and its gradient with respect to both networks:
///
/// `-mean(surrogate) + value_coef * mean((V - R)^2) - entropy_coef * mean(H)`.
pub fn ppo_loss(ac: &ActorCritic, batch: &[&Sample], coef: &LossCoefficients) -> (LossBreakdown, ActorCritic) {
    let mut grads = ac.zeros_like();
    let mut out = LossBreakdown::default();
    if batch.is_empty() {
        return (out, grads);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut clipped = 0usize;
    for sample in batch {
        let actor_cache = ac.actor.forward_cached(&sample.observation);
        let logits = actor_cache.output();
        let log_prob = bernoulli_log_prob(logits, &sample.action);
        let ratio = (log_prob - sample.old_log_prob).exp();
        let (surrogate, d_ratio) = clipped_surrogate(ratio, sample.advantage, coef.clip_eps);
        if (ratio - 1.0).abs() > coef.clip_eps {
            clipped += 1;
        }
        let entropy = bernoulli_entropy(logits);
        out.policy -= surrogate * scale;
        out.entropy += entropy * scale;

        // d(-surrogate)/d logit = -d_ratio * ratio * (a - p)
        // d(-c_e H)/d logit = c_e * z p (1 - p)
        let d_logits: Vec<f64> = logits
            .iter()
            .zip(&sample.action)
            .map(|(&z, &a)| {
                let p = sigmoid(z);
                let d_log_prob = if a { 1.0 - p } else { -p };
                let policy = -d_ratio * ratio * d_log_prob;
                let entropy = coef.entropy_coef * z * p * (1.0 - p);
                (policy + entropy) * scale
            })
            .collect();
        ac.actor.backward(&actor_cache, &d_logits, &mut grads.actor);

        let critic_cache = ac.critic.forward_cached(&sample.observation);
        let value = critic_cache.output()[0];
        let err = value - sample.ret;
        out.value += err * err * scale;
        let d_value = 2.0 * coef.value_coef * err * scale;
        ac.critic.backward(&critic_cache, &[d_value], &mut grads.critic);
    }
    out.total = out.policy + coef.value_coef * out.value - coef.entropy_coef * out.entropy;
    out.clip_fraction = clipped as f64 / batch.len() as f64;
    (out, grads)
}

/// Rescales the actor and critic gradients in place, each to an L2 norm of at
/// most `max_norm`. Returns the norms before clipping.
pub fn clip_grad_norm(grads: &mut ActorCritic, max_norm: f64) -> (f64, f64) {
    (clip_mlp(&mut grads.actor, max_norm), clip_mlp(&mut grads.critic, max_norm))
}

fn clip_mlp(grads: &mut Mlp, max_norm: f64) -> f64 {
    let norm = grads.squared_norm().sqrt();
    if max_norm.is_finite() && norm > max_norm {
        grads.scale(max_norm / (norm + 1e-12));
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppo::gae::normalize_advantages;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positive_advantage_clips_at_upper_bound() {
        let (s, d) = clipped_surrogate(1.3, 1.0, 0.2);
        assert!((s - 1.2).abs() < 1e-12);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn negative_advantage_takes_pessimistic_branch() {
        let (s, d) = clipped_surrogate(0.5, -1.0, 0.2);
        assert!((s - -0.8).abs() < 1e-12);
        assert_eq!(d, 0.0);
        // Contribution to the loss is -(-0.8).
        assert!((-s - 0.8).abs() < 1e-12);
        let (s, d) = clipped_surrogate(1.5, -1.0, 0.2);
        assert_eq!(s, -1.5);
        assert_eq!(d, -1.0);
    }

    #[test]
    fn unchanged_policy_has_zero_policy_term_after_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ac = ActorCritic::new(4, 1, &[8], &mut rng);
        let mut adv: Vec<f64> = (0..16).map(|_| rng.gen_range(-3.0..3.0)).collect();
        normalize_advantages(&mut adv);
        let samples: Vec<Sample> = adv
            .iter()
            .map(|&a| {
                let obs: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
                let action = vec![rng.gen_bool(0.5)];
                let old = bernoulli_log_prob(&ac.actor.forward(&obs), &action);
                Sample { observation: obs, action, old_log_prob: old, advantage: a, ret: 0.0 }
            })
            .collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let coef = LossCoefficients { clip_eps: 0.2, value_coef: 0.5, entropy_coef: 0.01 };
        let (loss, _) = ppo_loss(&ac, &refs, &coef);
        assert!(loss.policy.abs() < 1e-9);
        assert_eq!(loss.clip_fraction, 0.0);
    }

    #[test]
    fn unclipped_single_epoch_matches_vanilla_policy_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ac = ActorCritic::new(5, 3, &[8, 8], &mut rng);
        let samples: Vec<Sample> = (0..12)
            .map(|_| {
                let obs: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let action: Vec<bool> = (0..3).map(|_| rng.gen_bool(0.5)).collect();
                let old = bernoulli_log_prob(&ac.actor.forward(&obs), &action);
                Sample { observation: obs, action, old_log_prob: old, advantage: rng.gen_range(-2.0..2.0), ret: 0.0 }
            })
            .collect();
        let refs: Vec<&Sample> = samples.iter().collect();
        let coef = LossCoefficients { clip_eps: f64::INFINITY, value_coef: 0.0, entropy_coef: 0.0 };
        let (_, grads) = ppo_loss(&ac, &refs, &coef);

        // -1/N sum_i A_i grad log pi(a_i | s_i)
        let mut vanilla = ac.actor.zeros_like();
        for s in &samples {
            let cache = ac.actor.forward_cached(&s.observation);
            let d: Vec<f64> = cache
                .output()
                .iter()
                .zip(&s.action)
                .map(|(&z, &a)| -s.advantage * ((a as u8 as f64) - sigmoid(z)) / samples.len() as f64)
                .collect();
            ac.actor.backward(&cache, &d, &mut vanilla);
        }
        for (g, v) in grads.actor.params().zip(vanilla.params()) {
            assert!((g - v).abs() < 1e-8);
        }
    }

    #[test]
    fn learns_a_contextual_bandit() {
        use crate::nn::AdamState;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ac = ActorCritic::new(2, 1, &[16, 16], &mut rng);
        let mut actor_opt = AdamState::new(ac.actor.param_count(), 3e-3);
        let mut critic_opt = AdamState::new(ac.critic.param_count(), 3e-3);
        let coef = LossCoefficients { clip_eps: 0.2, value_coef: 0.5, entropy_coef: 0.0 };
        for _ in 0..60 {
            let mut batch: Vec<Sample> = (0..64)
                .map(|_| {
                    let ctx = rng.gen_bool(0.5);
                    let obs = if ctx { vec![1.0, 0.0] } else { vec![0.0, 1.0] };
                    let (logits, value) = ac.forward(&obs);
                    let action = vec![rng.gen::<f64>() < sigmoid(logits[0])];
                    let reward = if action[0] == ctx { 1.0 } else { 0.0 };
                    let old = bernoulli_log_prob(&logits, &action);
                    Sample { observation: obs, action, old_log_prob: old, advantage: reward - value, ret: reward }
                })
                .collect();
            let mut adv: Vec<f64> = batch.iter().map(|s| s.advantage).collect();
            normalize_advantages(&mut adv);
            batch.iter_mut().zip(adv).for_each(|(s, a)| s.advantage = a);
            let refs: Vec<&Sample> = batch.iter().collect();
            for _ in 0..4 {
                let (_, mut grads) = ppo_loss(&ac, &refs, &coef);
                clip_grad_norm(&mut grads, 0.5);
                actor_opt.step(&mut ac.actor, &grads.actor);
                critic_opt.step(&mut ac.critic, &grads.critic);
            }
        }
        assert!(ac.forward(&[1.0, 0.0]).0[0] > 1.0);
        assert!(ac.forward(&[0.0, 1.0]).0[0] < -1.0);
    }

    #[test]
    fn grad_norm_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ac = ActorCritic::new(3, 1, &[4], &mut rng);
        let mut g = ac.clone();
        g.critic.scale(100.0);
        let (actor, critic) = clip_grad_norm(&mut g, 0.5);
        assert!(actor > 0.5 && critic > 0.5);
        assert!((g.actor.squared_norm().sqrt() - 0.5).abs() < 1e-9);
        assert!((g.critic.squared_norm().sqrt() - 0.5).abs() < 1e-9);
        let mut small = ac.zeros_like();
        small.actor.params_mut().for_each(|p| *p = 1e-3);
        let before = small.clone();
        clip_grad_norm(&mut small, 0.5);
        assert_eq!(small, before);
    }
}
