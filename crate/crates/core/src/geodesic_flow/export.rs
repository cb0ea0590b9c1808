use std::io::Write;

use serde::Serialize;

use super::{GeodesicTrace, Termination, TraceEvent};
use crate::Result;

/// One row per sample: `s,r,theta,v_r,v_theta,region,I`. `I` is empty where
/// the metric is not rotationally symmetric.
pub fn write_csv<W: Write>(trace: &GeodesicTrace, mut out: W) -> Result<()> {
    writeln!(out, "s,r,theta,v_r,v_theta,region,I")?;
    for p in &trace.samples {
        let i = p.clairaut.map(|i| format!("{i:e}")).unwrap_or_default();
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{},{}",
            p.s,
            p.r,
            p.theta,
            p.v_r,
            p.v_theta,
            p.region.as_str(),
            i
        )?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Sidecar<'a> {
    termination: &'a Termination,
    length: f64,
    max_speed_drift: f64,
    events: &'a [TraceEvent],
}

/// Events, termination reason and drift as JSON.
pub fn write_events_json<W: Write>(trace: &GeodesicTrace, out: W) -> Result<()> {
    let side = Sidecar {
        termination: &trace.termination,
        length: trace.length(),
        max_speed_drift: trace.max_speed_drift,
        events: &trace.events,
    };
    serde_json::to_writer_pretty(out, &side).map_err(|e| crate::Error::Io(e.into()))
}
