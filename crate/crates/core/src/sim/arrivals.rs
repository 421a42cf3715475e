//! Poisson arrival schedules, one independent stream per entry link.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::net::{CorridorNetwork, DemandConfig};
use crate::Result;

/// Event times (seconds) for a Poisson process of `rate_vph` vehicles per hour on `[0, duration_s)`.
pub fn poisson_times<R: rand::Rng>(rate_vph: f64, duration_s: f64, rng: &mut R) -> Vec<f64> {
    if rate_vph <= 0.0 {
        return Vec::new();
    }
    let inter = Exp::new(rate_vph / 3600.0).expect("positive finite rate");
    let mut times = Vec::with_capacity((rate_vph * duration_s / 3600.0 * 1.2) as usize + 4);
    let mut t = 0.0;
    loop {
        t += inter.sample(rng);
        if t >= duration_s {
            break;
        }
        times.push(t);
    }
    times
}

/// RNG for one entry stream. Streams share the seed and differ by ChaCha stream id.
pub fn entry_rng(seed: u64, entry_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(entry_index as u64);
    rng
}

/// Arrival times per entry link, in the order of [`CorridorNetwork::entries`].
#[derive(Debug, Clone, PartialEq)]
pub struct Arrivals {
    pub per_entry: Vec<Vec<f64>>,
}

impl Arrivals {
    pub fn total(&self) -> usize {
        self.per_entry.iter().map(Vec::len).sum()
    }

    /// Reassigns every entry's schedule to its west/east mirror image.
    pub fn mirrored(&self, network: &CorridorNetwork) -> Arrivals {
        let mut per_entry = vec![Vec::new(); self.per_entry.len()];
        for (k, &entry) in network.entries().iter().enumerate() {
            let target = network
                .entry_index(network.mirror_link(entry))
                .expect("mirror of an entry is an entry");
            per_entry[target] = self.per_entry[k].clone();
        }
        Arrivals { per_entry }
    }
}

pub fn sample_arrivals(
    network: &CorridorNetwork,
    demand: &DemandConfig,
    duration_s: f64,
    seed: u64,
) -> Result<Arrivals> {
    demand.validate()?;
    let per_entry = network
        .entries()
        .iter()
        .enumerate()
        .map(|(k, &entry)| {
            let rate = demand.rate(network.link(entry).direction);
            poisson_times(rate, duration_s, &mut entry_rng(seed, k))
        })
        .collect();
    Ok(Arrivals { per_entry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{build_corridor, CorridorSpec};

    #[test]
    fn zero_rate_yields_nothing() {
        let mut rng = entry_rng(1, 0);
        assert!(poisson_times(0.0, 10_000.0, &mut rng).is_empty());
    }

    #[test]
    fn one_per_second_on_average() {
        let total: usize = (0..2000)
            .map(|s| poisson_times(3600.0, 10.0, &mut entry_rng(s, 0)).len())
            .sum();
        let mean = total as f64 / 2000.0;
        // sd of the mean is sqrt(10 / 2000) ~ 0.07
        assert!((mean - 10.0).abs() < 0.3, "mean {mean}");
    }

    #[test]
    fn times_sorted_and_bounded() {
        let times = poisson_times(700.0, 10_000.0, &mut entry_rng(7, 3));
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        assert!(times.iter().all(|&t| t > 0.0 && t < 10_000.0));
    }

    #[test]
    fn streams_are_independent_of_other_rates() {
        let net = build_corridor(CorridorSpec::new(3, 700.0)).unwrap();
        let a = sample_arrivals(&net, &DemandConfig::new(700.0, 0.0, 100.0, 100.0), 3000.0, 9).unwrap();
        let b = sample_arrivals(&net, &DemandConfig::new(700.0, 500.0, 100.0, 100.0), 3000.0, 9).unwrap();
        assert_eq!(a.per_entry[0], b.per_entry[0]);
        assert!(a.per_entry[1].is_empty() && !b.per_entry[1].is_empty());
        assert_eq!(a.per_entry[2..], b.per_entry[2..]);
        assert_ne!(a.per_entry[2], a.per_entry[3]);
    }

    #[test]
    fn mirrored_is_involution() {
        let net = build_corridor(CorridorSpec::new(4, 300.0)).unwrap();
        let a = sample_arrivals(&net, &DemandConfig::new(600.0, 200.0, 150.0, 50.0), 2000.0, 3).unwrap();
        let m = a.mirrored(&net);
        assert_eq!(m.per_entry[1], a.per_entry[0]);
        assert_eq!(m.mirrored(&net), a);
    }
}
