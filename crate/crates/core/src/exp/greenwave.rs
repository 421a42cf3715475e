use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use super::svg::{Chart, Series};
use super::ControllerSpec;
use crate::net::{build_corridor, CorridorSpec, DemandConfig, Direction};
use crate::sim::{SimConfig, VehicleRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenWaveRecord {
    pub link_length_m: f64,
    pub ratio: f64,
    pub vehicles: usize,
}

/// Side roads at 100 veh/h each way, 800 veh/h eastbound, no westbound traffic.
pub fn green_wave_demand() -> DemandConfig {
    DemandConfig::new(800.0, 0.0, 100.0, 100.0)
}

/// Share of completed eastbound through vehicles that never stopped, with the
/// number of such vehicles. Vehicles still in the network are ignored.
pub fn zero_stop_ratio<'a>(records: impl IntoIterator<Item = &'a VehicleRecord>) -> Result<(f64, usize)> {
    let (clean, total) = records
        .into_iter()
        .filter(|r| r.direction == Direction::WE && r.exited_at_s.is_some())
        .fold((0usize, 0usize), |(c, t), r| (c + usize::from(r.stop_count == 0), t + 1));
    if total == 0 {
        return Err(Error::NoCompletedVehicles);
    }
    Ok((clean as f64 / total as f64, total))
}

/// Zero-stop ratio for each link length on an `n`-junction corridor, pooled
/// over seeds and restricted to vehicles completing after warm-up.
pub fn green_wave_study(
    spec: &ControllerSpec,
    n: usize,
    lengths: &[f64],
    demand: DemandConfig,
    config: &SimConfig,
    seeds: &[u64],
) -> Result<Vec<GreenWaveRecord>> {
    spec.check(n)?;
    config.validate()?;
    demand.validate()?;
    let networks = lengths
        .iter()
        .map(|&l| build_corridor(CorridorSpec::new(n, l)).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let mut config = config.clone();
    config.record_lane_series = false;
    let jobs: Vec<(usize, u64)> = (0..lengths.len())
        .flat_map(|k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let counts: Vec<Result<(usize, usize)>> = jobs
        .par_iter()
        .map(|&(k, seed)| {
            let result = spec.run(networks[k].clone(), demand, config.clone().with_seed(seed))?;
            let completed: Vec<&VehicleRecord> = result.completed_after_warmup().collect();
            Ok(match zero_stop_ratio(completed) {
                Ok((ratio, total)) => ((ratio * total as f64).round() as usize, total),
                Err(Error::NoCompletedVehicles) => (0, 0),
                Err(e) => return Err(e),
            })
        })
        .collect();
    let mut counts = counts.into_iter();
    let mut out = Vec::with_capacity(lengths.len());
    for &l in lengths {
        let (mut clean, mut total) = (0, 0);
        for item in counts.by_ref().take(seeds.len()) {
            let (c, t) = item?;
            clean += c;
            total += t;
        }
        if total == 0 {
            return Err(Error::NoCompletedVehicles);
        }
        out.push(GreenWaveRecord {
            link_length_m: l,
            ratio: clean as f64 / total as f64,
            vehicles: total,
        });
    }
    Ok(out)
}

/// Columns: `link_length_m,zero_stop_ratio,vehicles`.
pub fn write_green_wave_csv<W: Write>(records: &[GreenWaveRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["link_length_m", "zero_stop_ratio", "vehicles"])?;
    for r in records {
        w.write_record([r.link_length_m.to_string(), format!("{:.6}", r.ratio), r.vehicles.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn green_wave_svg(records: &[GreenWaveRecord], title: &str) -> String {
    let max_l = records.iter().map(|r| r.link_length_m).fold(0.0, f64::max);
    Chart {
        title: title.to_string(),
        x_label: "inter-junction distance l (m)".into(),
        y_label: "zero-stop ratio".into(),
        x_range: (0.0, max_l.max(100.0)),
        y_range: (0.0, 1.0),
        series: vec![Series::Line {
            label: "eastbound zero-stop ratio".into(),
            points: records.iter().map(|r| (r.link_length_m, r.ratio)).collect(),
        }],
    }
    .render()
}
