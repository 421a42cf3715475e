use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::stability::backup_verdict;
use super::svg::{Chart, Glyph, Series};
use super::ControllerSpec;
use crate::net::{CorridorNetwork, DemandConfig};
use crate::sim::SimConfig;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeedVerdict {
    pub seed: u64,
    pub slope: f64,
    pub final_backup: f64,
    pub stable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityVerdict {
    pub lambda_ns: f64,
    pub lambda_we: f64,
    pub seeds: Vec<SeedVerdict>,
    /// Majority vote: stable iff at least half the seeds (rounded up) are.
    pub stable: bool,
}

impl CapacityVerdict {
    pub fn from_seeds(lambda_ns: f64, lambda_we: f64, seeds: Vec<SeedVerdict>) -> Self {
        let votes = seeds.iter().filter(|s| s.stable).count();
        let stable = !seeds.is_empty() && votes >= seeds.len().div_ceil(2);
        Self {
            lambda_ns,
            lambda_we,
            seeds,
            stable,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CapacitySweep {
    pub verdicts: Vec<CapacityVerdict>,
    /// Grid points whose stable neighbours break downward closure.
    pub warnings: Vec<String>,
}

/// Symmetric demand: each side road carries `lambda_ns`, each main-road
/// direction carries `lambda_we`.
pub fn symmetric_demand(lambda_ns: f64, lambda_we: f64) -> DemandConfig {
    DemandConfig::symmetric(lambda_ns, lambda_we)
}

/// Evaluates every `(lambda_ns, lambda_we)` point on every seed. Simulations run
/// in parallel; results are ordered by point and seed.
pub fn capacity_sweep(
    spec: &ControllerSpec,
    network: Arc<CorridorNetwork>,
    points: &[(f64, f64)],
    config: &SimConfig,
    seeds: &[u64],
) -> Result<CapacitySweep> {
    spec.check(network.n())?;
    config.validate()?;
    for &(ns, we) in points {
        symmetric_demand(ns, we).validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let mut config = config.clone();
    config.record_lane_series = false;
    let outcomes: Vec<Result<SeedVerdict>> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let (ns, we) = points[p];
            let result = spec.run(network.clone(), symmetric_demand(ns, we), config.clone().with_seed(seed))?;
            let v = backup_verdict(&result.backup_series, config.duration_s)?;
            Ok(SeedVerdict {
                seed,
                slope: v.slope,
                final_backup: v.final_backup,
                stable: v.stable,
            })
        })
        .collect();
    let mut outcomes = outcomes.into_iter();
    let mut verdicts = Vec::with_capacity(points.len());
    for &(ns, we) in points {
        let per_seed = outcomes.by_ref().take(seeds.len()).collect::<Result<Vec<_>>>()?;
        verdicts.push(CapacityVerdict::from_seeds(ns, we, per_seed));
    }
    let mut sweep = CapacitySweep {
        verdicts,
        warnings: Vec::new(),
    };
    sweep.warnings = sweep.closure_warnings();
    Ok(sweep)
}

impl CapacitySweep {
    pub fn verdict(&self, lambda_ns: f64, lambda_we: f64) -> Option<&CapacityVerdict> {
        self.verdicts
            .iter()
            .find(|v| v.lambda_ns == lambda_ns && v.lambda_we == lambda_we)
    }

    /// Largest stable value along a line, counting only the unbroken run of
    /// stable points from the lowest tested value upward.
    fn max_stable_along(mut line: Vec<(f64, bool)>) -> Option<f64> {
        line.sort_by(|a, b| a.0.total_cmp(&b.0));
        line.iter().take_while(|p| p.1).last().map(|p| p.0)
    }

    /// Largest stable main-road rate with side-road rate fixed at `lambda_ns`.
    pub fn max_stable_we(&self, lambda_ns: f64) -> Option<f64> {
        Self::max_stable_along(
            self.verdicts
                .iter()
                .filter(|v| v.lambda_ns == lambda_ns)
                .map(|v| (v.lambda_we, v.stable))
                .collect(),
        )
    }

    /// Largest stable side-road rate with main-road rate fixed at `lambda_we`.
    pub fn max_stable_ns(&self, lambda_we: f64) -> Option<f64> {
        Self::max_stable_along(
            self.verdicts
                .iter()
                .filter(|v| v.lambda_we == lambda_we)
                .map(|v| (v.lambda_ns, v.stable))
                .collect(),
        )
    }

    /// A stable point whose tested lower neighbour along either axis is unstable.
    pub fn closure_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for v in self.verdicts.iter().filter(|v| v.stable) {
            let below_ns = self
                .verdicts
                .iter()
                .filter(|u| u.lambda_we == v.lambda_we && u.lambda_ns < v.lambda_ns)
                .max_by(|a, b| a.lambda_ns.total_cmp(&b.lambda_ns));
            let below_we = self
                .verdicts
                .iter()
                .filter(|u| u.lambda_ns == v.lambda_ns && u.lambda_we < v.lambda_we)
                .max_by(|a, b| a.lambda_we.total_cmp(&b.lambda_we));
            for u in [below_ns, below_we].into_iter().flatten() {
                if !u.stable {
                    out.push(format!(
                        "({}, {}) is stable but ({}, {}) is not",
                        v.lambda_ns, v.lambda_we, u.lambda_ns, u.lambda_we
                    ));
                }
            }
        }
        out
    }

    /// One row per point and seed, sorted by `(lambda_ns, lambda_we, seed)`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut rows: Vec<(f64, f64, &SeedVerdict)> = self
            .verdicts
            .iter()
            .flat_map(|v| v.seeds.iter().map(move |s| (v.lambda_ns, v.lambda_we, s)))
            .collect();
        rows.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.total_cmp(&b.1))
                .then(a.2.seed.cmp(&b.2.seed))
        });
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda_ns", "lambda_we", "seed", "slope", "final_backup", "stable"])?;
        for (ns, we, s) in rows {
            w.write_record([
                ns.to_string(),
                we.to_string(),
                s.seed.to_string(),
                format!("{:.6}", s.slope),
                s.final_backup.to_string(),
                s.stable.to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn svg(&self, title: &str) -> String {
        let max = self
            .verdicts
            .iter()
            .flat_map(|v| [v.lambda_ns, v.lambda_we])
            .fold(100.0, f64::max);
        let pick = |stable: bool| -> Vec<(f64, f64)> {
            self.verdicts
                .iter()
                .filter(|v| v.stable == stable)
                .map(|v| (v.lambda_we, v.lambda_ns))
                .collect()
        };
        Chart {
            title: title.to_string(),
            x_label: "lambda_WE = lambda_EW (veh/h)".into(),
            y_label: "lambda_NS = lambda_SN (veh/h)".into(),
            x_range: (0.0, max + 100.0),
            y_range: (0.0, max + 100.0),
            series: vec![
                Series::Points {
                    label: "stable".into(),
                    glyph: Glyph::Dot,
                    points: pick(true),
                },
                Series::Points {
                    label: "unstable".into(),
                    glyph: Glyph::Cross,
                    points: pick(false),
                },
            ],
        }
        .render()
    }
}
