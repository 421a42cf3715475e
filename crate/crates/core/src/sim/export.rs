//! CSV exports of a [`SimResult`](super::SimResult).

use std::io::Write;

use super::SimResult;
use crate::Result;

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

/// Columns: `id,route,generated_at,entered_at,exited_at,stop_count`.
pub fn write_vehicles<W: Write>(result: &SimResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "route", "generated_at", "entered_at", "exited_at", "stop_count"])?;
    for r in &result.records {
        w.write_record([
            r.id.to_string(),
            result.network.route(r.route).name(),
            r.generated_at_s.to_string(),
            opt(r.entered_at_s),
            opt(r.exited_at_s),
            r.stop_count.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Columns: `t_s,link,queue,count,density`.
pub fn write_lanes<W: Write>(result: &SimResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "link", "queue", "count", "density"])?;
    for s in &result.lane_series {
        w.write_record([
            s.t_s.to_string(),
            result.network.link(s.link).name(),
            s.stats.queue.to_string(),
            s.stats.count.to_string(),
            s.stats.density.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Columns: `t_s,total`, then one column per entry link.
pub fn write_backup<W: Write>(result: &SimResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t_s".to_string(), "total".to_string()];
    header.extend(
        result
            .network
            .entries()
            .iter()
            .map(|&e| result.network.link(e).name()),
    );
    w.write_record(&header)?;
    for s in &result.backup_series {
        let mut row = vec![s.t_s.to_string(), s.total().to_string()];
        row.extend(s.sizes.iter().map(usize::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Columns: `t_s,junction,decision,phase_after`.
pub fn write_decisions<W: Write>(result: &SimResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "junction", "decision", "phase_after"])?;
    for d in &result.decisions {
        w.write_record([
            d.t_s.to_string(),
            d.junction.to_string(),
            d.decision.as_str().to_string(),
            d.phase_after.as_str().to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
