//! Run-configuration files and list/range arguments.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ppo::PpoConfig;
use crate::{Error, Result};

/// Upper bound on the number of values a grid argument may expand to.
pub const MAX_GRID_POINTS: usize = 10_000;

/// Parses a list of non-negative values, either `start:stop:step` (inclusive)
/// or comma-separated (`100,200,400`).
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let bad = |msg: String| Error::InvalidConfig(format!("grid '{text}': {msg}"));
    let number = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().map_err(|_| bad(format!("'{}' is not a number", s.trim())))?;
        if !v.is_finite() || v < 0.0 {
            return Err(bad(format!("{v} must be finite and non-negative")));
        }
        Ok(v)
    };
    let text_trim = text.trim();
    if text_trim.is_empty() {
        return Err(bad("empty".into()));
    }
    if text_trim.contains(':') {
        let parts: Vec<&str> = text_trim.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return Err(bad("expected start:stop:step".into()));
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if step <= 0.0 {
            return Err(bad("step must be positive".into()));
        }
        if stop < start {
            return Err(bad("stop is below start".into()));
        }
        let count = ((stop - start) / step + 1e-9).floor() + 1.0;
        if count > MAX_GRID_POINTS as f64 {
            return Err(bad(format!("more than {MAX_GRID_POINTS} values")));
        }
        Ok((0..count as usize).map(|k| start + k as f64 * step).collect())
    } else {
        let values = text_trim.split(',').map(number).collect::<Result<Vec<f64>>>()?;
        if values.len() > MAX_GRID_POINTS {
            return Err(bad(format!("more than {MAX_GRID_POINTS} values")));
        }
        Ok(values)
    }
}

/// Every setting the command line accepts. Flags given on the command line
/// take precedence over values from a file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub link_length: Option<f64>,
    pub demand_ns: Option<f64>,
    pub demand_sn: Option<f64>,
    pub demand_we: Option<f64>,
    pub demand_ew: Option<f64>,
    pub arch: Option<String>,
    pub checkpoint: Option<PathBuf>,
    pub seed: Option<u64>,
    pub seeds: Option<usize>,
    pub duration: Option<f64>,
    pub warmup: Option<f64>,
    pub out: Option<PathBuf>,
    /// Side-road rates for `capacity`, as accepted by [`parse_grid`].
    pub grid_ns: Option<String>,
    /// Main-road rates for `capacity`.
    pub grid_we: Option<String>,
    /// Link lengths for `greenwave`.
    pub lengths: Option<String>,
    /// Step along the fixed-total demand line for `att`.
    pub att_step: Option<f64>,
    pub episodes: Option<usize>,
    pub eval_every: Option<usize>,
    /// Full training hyperparameters; individual flags override fields.
    pub ppo: Option<PpoConfig>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: RunConfig) -> RunConfig {
        RunConfig {
            n: over.n.or(self.n),
            link_length: over.link_length.or(self.link_length),
            demand_ns: over.demand_ns.or(self.demand_ns),
            demand_sn: over.demand_sn.or(self.demand_sn),
            demand_we: over.demand_we.or(self.demand_we),
            demand_ew: over.demand_ew.or(self.demand_ew),
            arch: over.arch.or(self.arch),
            checkpoint: over.checkpoint.or(self.checkpoint),
            seed: over.seed.or(self.seed),
            seeds: over.seeds.or(self.seeds),
            duration: over.duration.or(self.duration),
            warmup: over.warmup.or(self.warmup),
            out: over.out.or(self.out),
            grid_ns: over.grid_ns.or(self.grid_ns),
            grid_we: over.grid_we.or(self.grid_we),
            lengths: over.lengths.or(self.lengths),
            att_step: over.att_step.or(self.att_step),
            episodes: over.episodes.or(self.episodes),
            eval_every: over.eval_every.or(self.eval_every),
            ppo: over.ppo.or(self.ppo),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ranges_and_lists() {
        assert_eq!(parse_grid("100:500:100").unwrap(), vec![100.0, 200.0, 300.0, 400.0, 500.0]);
        assert_eq!(parse_grid("100:1500:100").unwrap().len(), 15);
        assert_eq!(parse_grid("200, 700,2000").unwrap(), vec![200.0, 700.0, 2000.0]);
        assert_eq!(parse_grid("5").unwrap(), vec![5.0]);
        assert_eq!(parse_grid("0:0:1").unwrap(), vec![0.0]);
    }

    #[test]
    fn bad_grids_are_config_errors() {
        for text in ["", "a", "1:2", "1:2:3:4", "5:1:1", "1:5:0", "1:5:-1", "-1", "nan", "inf", "0:1e9:1e-3", "1,,2"] {
            let err = parse_grid(text).unwrap_err();
            assert!(err.is_config(), "{text}");
        }
    }

    #[test]
    fn toml_round_trip_and_overlay() {
        let text = r#"
            n = 3
            link_length = 500.0
            arch = "maxpressure"
            grid_ns = "100:300:100"
            [ppo]
            episodes = 7
        "#;
        let cfg = RunConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.n, Some(3));
        assert_eq!(cfg.ppo.as_ref().unwrap().episodes, 7);
        assert_eq!(cfg.ppo.as_ref().unwrap().gamma, 0.99);
        let back = RunConfig::from_toml_str(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);

        let flags = RunConfig {
            n: Some(5),
            ..RunConfig::default()
        };
        let merged = cfg.overlay(flags);
        assert_eq!(merged.n, Some(5));
        assert_eq!(merged.link_length, Some(500.0));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("bogus = 1").unwrap_err().is_config());
        assert!(RunConfig::from_toml_str("n = -1").is_err());
    }

    proptest! {
        #[test]
        fn range_endpoints(start in 0u32..2000, count in 1usize..50, step in 1u32..500) {
            let stop = start as f64 + (count - 1) as f64 * step as f64;
            let v = parse_grid(&format!("{start}:{stop}:{step}")).unwrap();
            prop_assert_eq!(v.len(), count);
            prop_assert_eq!(v[0], start as f64);
            prop_assert_eq!(*v.last().unwrap(), stop);
        }

        #[test]
        fn never_panics(text in ".{0,40}") {
            let _ = parse_grid(&text);
        }
    }
}
