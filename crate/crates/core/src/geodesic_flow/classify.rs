//! Finite-horizon signatures of traces.

use serde::{Deserialize, Serialize};

use super::{EventKind, GeodesicTrace, Region};

/// Drift of the Clairaut integral over one maximal stretch of samples where
/// the metric is rotationally symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcDrift {
    pub s_start: f64,
    pub s_end: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub arcs: Vec<ArcDrift>,
    pub max_drift: f64,
}

/// `max |I(s) - I(s₀)|` over each symmetric sub-arc.
pub fn clairaut_monitor(trace: &GeodesicTrace) -> DriftReport {
    let mut report = DriftReport::default();
    let mut current: Option<(f64, f64, f64, f64)> = None;
    for smp in &trace.samples {
        match (smp.clairaut, current.as_mut()) {
            (Some(i), Some((_, end, i0, drift))) => {
                *end = smp.s;
                *drift = drift.max((i - *i0).abs());
            }
            (Some(i), None) => current = Some((smp.s, smp.s, i, 0.0)),
            (None, _) => {
                if let Some((s_start, s_end, _, drift)) = current.take() {
                    report.arcs.push(ArcDrift { s_start, s_end, drift });
                }
            }
        }
    }
    if let Some((s_start, s_end, _, drift)) = current {
        report.arcs.push(ArcDrift { s_start, s_end, drift });
    }
    report.max_drift = report.arcs.iter().map(|a| a.drift).fold(0.0, f64::max);
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Leaves every compact set along a radial ray.
    Proper,
    /// Stays on the circle `r = R₀`.
    Bounded,
    /// Bounded between recurring turning radii `r₋ < r₊`.
    Oscillating,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonPolicy {
    pub escape_radius: f64,
    /// `|I|` below this counts as radial.
    pub radial_tol: f64,
    /// `||I| - 1|` below this counts as the circle geodesic.
    pub circle_tol: f64,
    /// Turning points needed before calling a trace oscillating.
    pub min_turning_points: usize,
}

impl Default for HorizonPolicy {
    fn default() -> Self {
        Self {
            escape_radius: 16.0,
            radial_tol: 1e-9,
            circle_tol: 1e-9,
            min_turning_points: 3,
        }
    }
}

pub fn classify(trace: &GeodesicTrace, policy: &HorizonPolicy) -> Classification {
    let last = trace.last();
    if last.region == Region::Outer
        && last.r >= policy.escape_radius
        && last.v_r > 0.0
        && last.clairaut.is_some_and(|i| i.abs() <= policy.radial_tol)
    {
        return Classification::Proper;
    }
    let r_max = trace.samples.iter().map(|s| s.r).fold(0.0, f64::max);
    let on_circle = trace
        .samples
        .iter()
        .all(|s| s.clairaut.is_some_and(|i| (i.abs() - 1.0).abs() <= policy.circle_tol));
    if r_max < policy.escape_radius && on_circle {
        return Classification::Bounded;
    }
    let turns = trace
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Pericentre | EventKind::Apocentre))
        .count();
    let has_both = trace.events_of(EventKind::Pericentre).next().is_some()
        && trace.events_of(EventKind::Apocentre).next().is_some();
    if r_max < policy.escape_radius && has_both && turns >= policy.min_turning_points {
        return Classification::Oscillating;
    }
    Classification::Undetermined
}
