//! Generalized advantage estimation over one trajectory.

/// Returns `(advantages, returns)` for one trajectory.
///
/// `bootstrap_value` is the value estimate of the state after the last step
/// (zero for a true terminal state).
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len(), "rewards and values must align");
    let len = rewards.len();
    let mut advantages = vec![0.0; len];
    let mut running = 0.0;
    for t in (0..len).rev() {
        let next_value = if t + 1 < len { values[t + 1] } else { bootstrap_value };
        let delta = rewards[t] + gamma * next_value - values[t];
        running = delta + gamma * lambda * running;
        advantages[t] = running;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Shifts and scales to zero mean and unit standard deviation.
pub fn normalize_advantages(advantages: &mut [f64]) {
    if advantages.is_empty() {
        return;
    }
    let n = advantages.len() as f64;
    let mean = advantages.iter().sum::<f64>() / n;
    let var = advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for a in advantages.iter_mut() {
        *a = (*a - mean) / (std + 1e-8);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of `A_t = sum_k (gamma lambda)^k delta_{t+k}`.
    pub(crate) fn brute_force(rewards: &[f64], values: &[f64], bootstrap: f64, gamma: f64, lambda: f64) -> Vec<f64> {
        let len = rewards.len();
        let value_at = |t: usize| if t < len { values[t] } else { bootstrap };
        let deltas: Vec<f64> = (0..len)
            .map(|t| rewards[t] + gamma * value_at(t + 1) - values[t])
            .collect();
        (0..len)
            .map(|t| (t..len).map(|k| (gamma * lambda).powi((k - t) as i32) * deltas[k]).sum())
            .collect()
    }

    #[test]
    fn hand_evaluated_example() {
        let (adv, ret) = compute_gae(&[1.0, 1.0], &[0.5, 0.5], 0.0, 1.0, 1.0);
        assert_eq!(adv, vec![1.5, 0.5]);
        assert_eq!(ret, vec![2.0, 1.0]);
    }

    #[test]
    fn lambda_zero_is_td_error() {
        let r = [0.3, -1.0, 2.0];
        let v = [0.1, 0.4, -0.2];
        let (adv, _) = compute_gae(&r, &v, 0.7, 0.9, 0.0);
        assert_eq!(adv[0], 0.3 + 0.9 * 0.4 - 0.1);
        assert_eq!(adv[1], -1.0 + 0.9 * -0.2 - 0.4);
        assert_eq!(adv[2], 2.0 + 0.9 * 0.7 - -0.2);
    }

    #[test]
    fn all_zero_gives_zero() {
        let (adv, ret) = compute_gae(&[0.0; 5], &[0.0; 5], 0.0, 0.99, 0.95);
        assert!(adv.iter().chain(&ret).all(|x| *x == 0.0));
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let len = rng.gen_range(1..=50);
            let r: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let boot = rng.gen_range(-5.0..5.0);
            let gamma = rng.gen_range(0.5..=1.0);
            let lambda = rng.gen_range(0.0..=1.0);
            let (adv, _) = compute_gae(&r, &v, boot, gamma, lambda);
            for (a, b) in adv.iter().zip(brute_force(&r, &v, boot, gamma, lambda)) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn normalization_centres_and_scales() {
        let mut a = vec![1.0, 2.0, 3.0, 4.0];
        normalize_advantages(&mut a);
        let mean: f64 = a.iter().sum::<f64>() / 4.0;
        let var: f64 = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6);
        let mut constant = vec![3.0; 4];
        normalize_advantages(&mut constant);
        assert!(constant.iter().all(|x| *x == 0.0));
    }
}
