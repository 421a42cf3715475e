use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use super::ControllerSpec;
use crate::net::{CorridorNetwork, DemandConfig};
use crate::sim::SimConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AttRecord {
    pub lambda_we: f64,
    pub lambda_ns: f64,
    pub architecture: String,
    /// Mean generation-to-exit time over vehicles completing after warm-up,
    /// pooled across seeds.
    pub att_s: f64,
    pub vehicles: usize,
}

/// Points `(lambda_we, lambda_ns)` with `lambda_we + lambda_ns = total`, from
/// `(step, total - step)` to `(total - step, step)`.
pub fn att_line(total: f64, step: f64) -> Vec<(f64, f64)> {
    let count = (total / step).round() as usize;
    (1..count).map(|k| (k as f64 * step, total - k as f64 * step)).collect()
}

/// Pooled ATT at each `(lambda_we, lambda_ns)` point over `seeds`.
pub fn att_eval(
    spec: &ControllerSpec,
    network: Arc<CorridorNetwork>,
    points: &[(f64, f64)],
    config: &SimConfig,
    seeds: &[u64],
) -> Result<Vec<AttRecord>> {
    spec.check(network.n())?;
    config.validate()?;
    let mut config = config.clone();
    config.record_lane_series = false;
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| seeds.iter().map(move |&s| (p, s)))
        .collect();
    let sums: Vec<Result<(f64, usize)>> = jobs
        .par_iter()
        .map(|&(p, seed)| {
            let (we, ns) = points[p];
            let demand = DemandConfig::symmetric(ns, we);
            demand.validate()?;
            let result = spec.run(network.clone(), demand, config.clone().with_seed(seed))?;
            Ok(result
                .completed_after_warmup()
                .filter_map(|r| r.travel_time_s())
                .fold((0.0, 0), |(s, c), tt| (s + tt, c + 1)))
        })
        .collect();
    let mut sums = sums.into_iter();
    let mut out = Vec::with_capacity(points.len());
    for &(we, ns) in points {
        let (mut total, mut count) = (0.0, 0usize);
        for item in sums.by_ref().take(seeds.len()) {
            let (s, c) = item?;
            total += s;
            count += c;
        }
        if count == 0 {
            return Err(Error::NoCompletedVehicles);
        }
        out.push(AttRecord {
            lambda_we: we,
            lambda_ns: ns,
            architecture: spec.label().to_string(),
            att_s: total / count as f64,
            vehicles: count,
        });
    }
    Ok(out)
}

/// Columns: `lambda_we,lambda_ns,architecture,att_s,vehicles`.
pub fn write_att_csv<W: Write>(records: &[AttRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["lambda_we", "lambda_ns", "architecture", "att_s", "vehicles"])?;
    for r in records {
        w.write_record([
            r.lambda_we.to_string(),
            r.lambda_ns.to_string(),
            r.architecture.clone(),
            format!("{:.4}", r.att_s),
            r.vehicles.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
