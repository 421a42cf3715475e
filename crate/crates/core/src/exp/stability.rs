use serde::{Deserialize, Serialize};

use crate::sim::BackupSample;
use crate::{Error, Result};

/// Largest second-half backup growth rate (veh/s) still considered stable.
pub const MAX_STABLE_SLOPE: f64 = 0.01;
/// Largest final backup (vehicles) still considered stable.
pub const MAX_STABLE_BACKUP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub slope: f64,
    pub final_backup: f64,
    pub stable: bool,
}

/// Ordinary least-squares slope of `y` on `x`. Zero when `x` has no spread.
pub fn ols_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, y) in points {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// Judges a total-backup series `(t_s, vehicles)` from a run of `duration_s`.
/// The slope is fitted over the second half of the run.
pub fn stability_verdict(series: &[(f64, f64)], duration_s: f64) -> Result<StabilityVerdict> {
    if series.len() < 2 {
        return Err(Error::ShortSeries(series.len()));
    }
    let half = duration_s / 2.0;
    let tail: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 >= half).collect();
    let slope = if tail.len() >= 2 { ols_slope(&tail) } else { ols_slope(series) };
    let final_backup = series[series.len() - 1].1;
    Ok(StabilityVerdict {
        slope,
        final_backup,
        stable: slope <= MAX_STABLE_SLOPE && final_backup <= MAX_STABLE_BACKUP,
    })
}

pub fn backup_verdict(samples: &[BackupSample], duration_s: f64) -> Result<StabilityVerdict> {
    let series: Vec<(f64, f64)> = samples.iter().map(|s| (s.t_s, s.total() as f64)).collect();
    stability_verdict(&series, duration_s)
}
