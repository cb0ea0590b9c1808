//! Hybrid geodesic tracer for the perturbed plane: exact great-circle
//! propagation through the cap `r < R₀`, an adaptive Runge–Kutta integration
//! of the geodesic equation of the grid metric everywhere else.

mod cap_check;
mod classify;
mod export;

pub use cap_check::numeric_cap_transit;
pub use classify::{clairaut_monitor, classify, ArcDrift, Classification, DriftReport, HorizonPolicy};
pub use export::{write_csv, write_events_json};

use serde::{Deserialize, Serialize};

use crate::metric_forge::{MetricGrid, MetricJet};
use crate::numerics::ode::{dopri_step, step_factor, Dense, Tolerance};
use crate::numerics::roots::brent;
use crate::rotsym_metric::{PolarPoint, TangentVector};
use crate::sphere_geodesics::{cap_state, cap_transit};
use crate::{wrap_angle, Error, Result, R0, R1};

/// Inward crossings of `R₀` with `|v_r|` below this are treated as tangencies
/// and integrated through instead of being sent across the cap.
const GRAZE: f64 = 1e-9;
const EVENT_XTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Cap,
    Band,
    Outer,
}

impl Region {
    pub fn of(r: f64) -> Self {
        if r < R0 {
            Region::Cap
        } else if r <= R1 {
            Region::Band
        } else {
            Region::Outer
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Cap => "cap",
            Region::Band => "band",
            Region::Outer => "outer",
        }
    }
}

/// Position, velocity and arclength. `theta` is a continuous lift, so
/// windings survive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub s: f64,
    pub r: f64,
    pub theta: f64,
    pub v_r: f64,
    pub v_theta: f64,
    pub region: Region,
    /// Clairaut integral `f(r)² v_θ`, present where the metric is the
    /// rotationally symmetric one.
    pub clairaut: Option<f64>,
}

impl GeodesicState {
    /// Unit vector in the metric of `grid` whose direction makes angle
    /// `angle` with `∂_r` in the round frame, rotating towards `∂_θ`.
    pub fn launch(grid: &MetricGrid, r: f64, theta: f64, angle: f64) -> Self {
        let f = grid.profile().jet(r)[0];
        let (v_r, v_theta) = (angle.cos(), angle.sin() / f);
        let n = speed2(&grid.eval(r, wrap_angle(theta)), v_r, v_theta).sqrt();
        Self::from_parts(grid, 0.0, [r, theta, v_r / n, v_theta / n], Region::of(r))
    }

    /// Unit radial velocity, exactly free of `∂_θ`.
    pub fn radial(grid: &MetricGrid, r: f64, theta: f64, inward: bool) -> Self {
        let g_rr = grid.eval(r, wrap_angle(theta)).g[0];
        let v_r = if inward { -1.0 } else { 1.0 } / g_rr.sqrt();
        Self::from_parts(grid, 0.0, [r, theta, v_r, 0.0], Region::of(r))
    }

    fn from_parts(grid: &MetricGrid, s: f64, y: [f64; 4], region: Region) -> Self {
        let round = region == Region::Cap || grid.is_round_at(y[0], wrap_angle(y[1]));
        let clairaut = round.then(|| grid.profile().jet(y[0])[0].powi(2) * y[3]);
        Self {
            s,
            r: y[0],
            theta: y[1],
            v_r: y[2],
            v_theta: y[3],
            region,
            clairaut,
        }
    }

    fn y(&self) -> [f64; 4] {
        [self.r, self.theta, self.v_r, self.v_theta]
    }

    pub fn point(&self) -> PolarPoint {
        PolarPoint::new(self.r, self.theta)
    }

    pub fn planar(&self) -> [f64; 2] {
        [self.r * self.theta.cos(), self.r * self.theta.sin()]
    }

    /// Angle of the velocity from `∂_r` towards `∂_θ` in the round frame.
    pub fn angle(&self, grid: &MetricGrid) -> f64 {
        let f = grid.profile().jet(self.r)[0];
        (f * self.v_theta).atan2(self.v_r)
    }

    pub fn speed(&self, grid: &MetricGrid) -> f64 {
        speed2(&grid.eval(self.r, wrap_angle(self.theta)), self.v_r, self.v_theta).sqrt()
    }
}

fn speed2(j: &MetricJet, v_r: f64, v_th: f64) -> f64 {
    let [e, f, g] = j.g;
    e * v_r * v_r + 2.0 * f * v_r * v_th + g * v_th * v_th
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// `r = R₀`.
    InnerCrossing,
    /// `r = R₁`.
    OuterCrossing,
    CapEntry,
    CapExit,
    /// Local minimum of `r`.
    Pericentre,
    /// Local maximum of `r`.
    Apocentre,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub kind: EventKind,
    pub state: GeodesicState,
    /// Velocity angle from `∂_r` towards `∂_θ` in the round frame.
    pub angle: f64,
}

impl TraceEvent {
    pub fn inward(&self) -> bool {
        self.state.v_r < 0.0
    }
}

/// Requested early ends of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    CapEntry,
    /// Crossing the circle of this radius outwards.
    Outward(f64),
    Inward(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest arclength between consecutive samples.
    pub max_step: f64,
    /// Largest azimuth change between consecutive samples.
    pub max_turn: f64,
    /// Unit-speed drift beyond which the trace is truncated.
    pub speed_tol: f64,
    /// Hard bound on the number of samples.
    pub max_samples: usize,
    pub stops: Vec<Stop>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-13,
            atol: 1e-13,
            max_step: 0.05,
            max_turn: 0.05,
            speed_tol: 1e-6,
            max_samples: 2_000_000,
            stops: Vec::new(),
        }
    }
}

impl TraceOptions {
    pub fn with_stop(mut self, stop: Stop) -> Self {
        self.stops.push(stop);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.rtol, self.atol, self.max_step, self.max_turn, self.speed_tol];
        if positive.iter().any(|x| !(*x > 0.0)) {
            return Err(Error::Invalid(
                "trace tolerances and step bounds must be positive".into(),
            ));
        }
        if self.max_samples < 2 {
            return Err(Error::Invalid("max_samples must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Termination {
    Horizon,
    Stopped { stop: Stop },
    SpeedDrift { drift: f64 },
    SampleBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicTrace {
    pub samples: Vec<GeodesicState>,
    pub events: Vec<TraceEvent>,
    pub termination: Termination,
    pub max_speed_drift: f64,
}

impl GeodesicTrace {
    pub fn last(&self) -> &GeodesicState {
        self.samples.last().expect("a trace holds its start")
    }

    pub fn length(&self) -> f64 {
        self.last().s - self.samples[0].s
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// Velocity derivative from the Christoffel symbols of `j`.
fn acceleration(j: &MetricJet, v_r: f64, v_th: f64) -> [f64; 2] {
    let [e, f, g] = j.g;
    let [e_r, f_r, g_r] = j.d_r;
    let [e_t, f_t, g_t] = j.d_theta;
    // Christoffel symbols of the first kind, contracted with v twice.
    let w_r = 0.5 * e_r * v_r * v_r + e_t * v_r * v_th + (f_t - 0.5 * g_r) * v_th * v_th;
    let w_t = (f_r - 0.5 * e_t) * v_r * v_r + g_r * v_r * v_th + 0.5 * g_t * v_th * v_th;
    let det = e * g - f * f;
    [-(g * w_r - f * w_t) / det, -(-f * w_r + e * w_t) / det]
}

fn geodesic_field(grid: &MetricGrid, y: &[f64; 4]) -> [f64; 4] {
    let j = grid.eval(y[0], wrap_angle(y[1]));
    let [a_r, a_t] = acceleration(&j, y[2], y[3]);
    [y[2], y[3], a_r, a_t]
}

fn crosses(a: f64, b: f64) -> bool {
    (a > 0.0 && b <= 0.0) || (a < 0.0 && b >= 0.0)
}

/// Incremental tracer; `trace` drives it to completion.
pub struct Tracer<'a> {
    grid: &'a MetricGrid,
    opts: TraceOptions,
    tol: Tolerance,
    s_max: f64,
    s: f64,
    y: [f64; 4],
    k: [f64; 4],
    h: f64,
    region: Region,
    /// Multiple of 2π split off the azimuth so that the integrated `θ` stays
    /// small and its error tolerance absolute in effect.
    theta_base: f64,
    done: Option<Termination>,
    max_drift: f64,
}

impl<'a> Tracer<'a> {
    pub fn new(grid: &'a MetricGrid, start: &GeodesicState, s_max: f64, opts: TraceOptions) -> Result<Self> {
        opts.validate()?;
        if !(s_max > 0.0) {
            return Err(Error::Invalid(format!("arclength horizon {s_max} must be positive")));
        }
        if !(start.r >= R0 - 1e-12) {
            return Err(Error::Domain(format!(
                "start radius {} lies inside the cap; start on or outside R₀",
                start.r
            )));
        }
        let drift = (start.speed(grid) - 1.0).abs();
        if drift > 1e-9 {
            return Err(Error::Invalid(format!(
                "start velocity is not unit (|v| - 1 = {drift:.3e})"
            )));
        }
        let tol = Tolerance {
            rtol: opts.rtol,
            atol: opts.atol,
        };
        let mut t = Self {
            grid,
            tol,
            s_max: start.s + s_max,
            s: start.s,
            y: start.y(),
            theta_base: 0.0,
            k: [0.0; 4],
            h: opts.max_step.min(1e-2),
            region: Region::of(start.r),
            done: None,
            max_drift: drift,
            opts,
        };
        t.rebase();
        t.k = t.rhs(&t.y);
        Ok(t)
    }

    fn rhs(&self, y: &[f64; 4]) -> [f64; 4] {
        geodesic_field(self.grid, y)
    }

    fn state(&self, s: f64, y: [f64; 4]) -> GeodesicState {
        let [r, th, v_r, v_th] = y;
        GeodesicState::from_parts(self.grid, s, [r, th + self.theta_base, v_r, v_th], Region::of(r))
    }

    fn rebase(&mut self) {
        let k = (self.y[1] / crate::TAU).round();
        if k != 0.0 {
            self.y[1] -= k * crate::TAU;
            self.theta_base += k * crate::TAU;
        }
    }

    fn event(&self, kind: EventKind, state: GeodesicState) -> TraceEvent {
        TraceEvent {
            kind,
            angle: state.angle(self.grid),
            state,
        }
    }

    pub fn termination(&self) -> Option<Termination> {
        self.done
    }

    pub fn max_speed_drift(&self) -> f64 {
        self.max_drift
    }

    pub fn arclength(&self) -> f64 {
        self.s
    }

    /// Advances by one accepted step (or one cap transit), appending the new
    /// samples and events. Returns `false` once the trace has ended.
    pub fn advance(&mut self, samples: &mut Vec<GeodesicState>, events: &mut Vec<TraceEvent>) -> Result<bool> {
        if self.done.is_some() {
            return Ok(false);
        }
        if self.s >= self.s_max {
            self.done = Some(Termination::Horizon);
            return Ok(false);
        }
        if (self.y[0] - R0).abs() < 1e-12 && self.y[2] < -GRAZE {
            self.cross_cap(samples, events)?;
            return Ok(self.done.is_none());
        }

        let grid = self.grid;
        let f = move |_: f64, y: &[f64; 4]| geodesic_field(grid, y);
        let min_h = 1e-13 * self.s.abs().max(1.0);
        let mut h = self.h.min(self.opts.max_step);
        let st = loop {
            let last = self.s_max - self.s <= h;
            if last {
                h = self.s_max - self.s;
            }
            let st = dopri_step(&f, self.s, &self.y, &self.k, h, self.tol);
            if st.err <= 1.0 {
                self.h = if last { self.h } else { h * step_factor(st.err, true) };
                break st;
            }
            h *= step_factor(st.err, false);
            if h < min_h {
                return Err(Error::Numerical(format!(
                    "step size underflow at s = {} (r = {}, θ = {})",
                    self.s, self.y[0], self.y[1]
                )));
            }
        };
        let s0 = self.s;
        let y0 = self.y;
        let s1 = s0 + h;
        let y1 = st.y;

        // Locate the events inside the step; cap entries and stop rules cut it short.
        let mut found: Vec<(f64, EventKind)> = Vec::new();
        let mut cut: Option<(f64, Option<Stop>)> = None;
        let r_at = |s: f64| st.dense.eval(s)[0];
        let locate = |g: &dyn Fn(f64) -> f64| brent(g, s0, s1, EVENT_XTOL).unwrap_or(s1);
        for (radius, kind) in [(R0, EventKind::InnerCrossing), (R1, EventKind::OuterCrossing)] {
            if crosses(y0[0] - radius, y1[0] - radius) {
                let se = locate(&|s| r_at(s) - radius);
                found.push((se, kind));
                let v_r = st.dense.eval(se)[2];
                if radius == R0 && v_r < -GRAZE {
                    let stop = self.opts.stops.contains(&Stop::CapEntry).then_some(Stop::CapEntry);
                    if cut.is_none_or(|(c, _)| se < c) {
                        cut = Some((se, stop));
                    }
                }
            }
        }
        if crosses(y0[2], y1[2]) && y0[2].abs().max(y1[2].abs()) > 1e-10 {
            let se = locate(&|s| st.dense.eval(s)[2]);
            let kind = if y0[2] > 0.0 {
                EventKind::Apocentre
            } else {
                EventKind::Pericentre
            };
            found.push((se, kind));
        }
        for stop in &self.opts.stops {
            let (radius, outward) = match *stop {
                Stop::Outward(r) => (r, true),
                Stop::Inward(r) => (r, false),
                Stop::CapEntry => continue,
            };
            let hit = if outward {
                y0[0] < radius && y1[0] >= radius
            } else {
                y0[0] > radius && y1[0] <= radius
            };
            if hit {
                let se = locate(&|s| r_at(s) - radius);
                if cut.is_none_or(|(c, _)| se < c) {
                    cut = Some((se, Some(*stop)));
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0));

        let s_end = cut.map_or(s1, |(c, _)| c);
        let y_end = if cut.is_some() {
            dopri_step(&f, s0, &y0, &self.k, s_end - s0, self.tol).y
        } else {
            y1
        };
        for (se, kind) in found.iter().filter(|(se, _)| *se <= s_end) {
            let y = if *se == s_end { y_end } else { st.dense.eval(*se) };
            events.push(self.event(*kind, self.state(*se, y)));
        }
        self.emit_step(&st.dense, s0, y0, s_end, y_end, samples);
        self.s = s_end;
        self.y = y_end;
        self.region = Region::of(y_end[0]);
        self.k = if cut.is_some() { self.rhs(&y_end) } else { st.dy };
        self.rebase();
        self.track_drift();

        match cut {
            Some((_, Some(stop))) => {
                events.push(self.event(EventKind::Stop, self.state(self.s, self.y)));
                self.done = Some(Termination::Stopped { stop });
            }
            Some((_, None)) => {
                self.y[0] = R0;
                self.cross_cap(samples, events)?;
            }
            None => {}
        }
        Ok(self.done.is_none())
    }

    fn track_drift(&mut self) {
        if self.done.is_some() {
            return;
        }
        let j = self.grid.eval(self.y[0], wrap_angle(self.y[1]));
        let d = (speed2(&j, self.y[2], self.y[3]).sqrt() - 1.0).abs();
        self.max_drift = self.max_drift.max(d);
        if d > self.opts.speed_tol {
            self.done = Some(Termination::SpeedDrift { drift: d });
        }
    }

    /// Samples `(s0, s1]` of one step densely enough for `max_step` and
    /// `max_turn`.
    fn emit_step(
        &self,
        dense: &Dense<4>,
        s0: f64,
        y0: [f64; 4],
        s1: f64,
        y1: [f64; 4],
        samples: &mut Vec<GeodesicState>,
    ) {
        let by_len = (s1 - s0) / self.opts.max_step;
        let by_turn = (y1[1] - y0[1]).abs() / self.opts.max_turn;
        let n = by_len.max(by_turn).ceil().max(1.0) as usize;
        for i in 1..=n {
            let s = if i == n {
                s1
            } else {
                s0 + (s1 - s0) * i as f64 / n as f64
            };
            let y = if i == n { y1 } else { dense.eval(s) };
            samples.push(self.state(s, y));
        }
    }

    /// Replaces the cap crossing from the current state (on `R₀`, inward) by
    /// the exact great-circle transit.
    fn cross_cap(&mut self, samples: &mut Vec<GeodesicState>, events: &mut Vec<TraceEvent>) -> Result<()> {
        // Unit length in the round metric at the equator, where f = 1.
        let n = self.y[2].hypot(self.y[3]);
        let (v_r, v_th) = (self.y[2] / n, self.y[3] / n);
        let theta_in = self.y[1];
        let entry = PolarPoint::new(R0, theta_in);
        let dir = TangentVector {
            base: entry,
            v_r,
            v_theta: v_th,
        };
        let transit = cap_transit(entry, &dir)?;
        let s_in = self.s;
        let entry_state = self.state(s_in, [R0, theta_in, v_r, v_th]);
        events.push(self.event(EventKind::CapEntry, entry_state));

        let forward = transit.azimuth_shift > 0.0;
        let lift = |wrapped: f64| {
            if forward {
                theta_in + (wrapped - theta_in).rem_euclid(crate::TAU)
            } else {
                theta_in - (theta_in - wrapped).rem_euclid(crate::TAU)
            }
        };
        let span = transit.length.min(self.s_max - s_in);
        let n_sub = (span / self.opts.max_step).ceil().max(1.0) as usize;
        let mid = 0.5 * transit.length;
        let mut past_mid = false;
        for i in 1..=n_sub {
            let ds = span * i as f64 / n_sub as f64;
            if !past_mid && ds >= mid {
                past_mid = true;
                let (p, a, b) = cap_state(entry, &dir, mid)?;
                let st = self.cap_sample(s_in + mid, p, lift(p.theta), a, b);
                events.push(self.event(EventKind::Pericentre, st));
            }
            if i == n_sub && span == transit.length {
                break;
            }
            let (p, a, b) = cap_state(entry, &dir, ds)?;
            samples.push(self.cap_sample(s_in + ds, p, lift(p.theta), a, b));
        }
        if span < transit.length {
            self.s = self.s_max;
            self.done = Some(Termination::Horizon);
            return Ok(());
        }
        self.s = s_in + transit.length;
        self.y = [
            R0,
            theta_in + transit.azimuth_shift,
            transit.exit_dir.v_r,
            transit.exit_dir.v_theta,
        ];
        self.region = Region::Band;
        let exit = self.state(self.s, self.y);
        self.rebase();
        self.k = self.rhs(&self.y);
        samples.push(exit);
        events.push(self.event(EventKind::CapExit, exit));
        Ok(())
    }

    fn cap_sample(&self, s: f64, p: PolarPoint, theta: f64, v_r: f64, v_th: f64) -> GeodesicState {
        GeodesicState::from_parts(self.grid, s, [p.r, theta + self.theta_base, v_r, v_th], Region::Cap)
    }
}

/// Traces the geodesic from `start` over arclength `s_max` or until a stop
/// rule fires.
pub fn trace(grid: &MetricGrid, start: &GeodesicState, s_max: f64, opts: TraceOptions) -> Result<GeodesicTrace> {
    let budget = opts.max_samples;
    let mut tracer = Tracer::new(grid, start, s_max, opts)?;
    let mut samples = vec![tracer.state(start.s, tracer.y)];
    let mut events = Vec::new();
    while tracer.advance(&mut samples, &mut events)? {
        if samples.len() >= budget {
            samples.truncate(budget);
            tracer.done = Some(Termination::SampleBudget);
            break;
        }
    }
    Ok(GeodesicTrace {
        samples,
        events,
        termination: tracer.done.unwrap_or(Termination::Horizon),
        max_speed_drift: tracer.max_drift,
    })
}
