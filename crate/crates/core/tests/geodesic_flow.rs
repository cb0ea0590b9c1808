use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

use scatterplane::geodesic_flow::*;
use scatterplane::metric_forge::{forge, ForgeParams, MetricGrid};
use scatterplane::numerics::ode::Tolerance;
use scatterplane::rotsym_metric::{PolarPoint, ProfileFunction, TangentVector};
use scatterplane::sphere_geodesics::cap_transit;
use scatterplane::{angle_diff, Error, R0, R1};

fn round() -> &'static MetricGrid {
    static G: OnceLock<MetricGrid> = OnceLock::new();
    G.get_or_init(|| MetricGrid::round(&ProfileFunction::default(), 65, 256).unwrap())
}

fn perturbed() -> &'static MetricGrid {
    static G: OnceLock<MetricGrid> = OnceLock::new();
    G.get_or_init(|| {
        let p = ForgeParams {
            n_r: 513,
            n_theta: 512,
            ..ForgeParams::default()
        };
        forge(&p).unwrap().grid
    })
}

#[test]
fn radial_line_through_the_pole() {
    let grid = round();
    let start = GeodesicState::radial(grid, 2.0, 0.0, true);
    let opts = TraceOptions::default().with_stop(Stop::Outward(16.0));
    let t = trace(grid, &start, 40.0, opts).unwrap();
    assert!(matches!(t.termination, Termination::Stopped { .. }));
    let end = t.last();
    assert!((end.r - 16.0).abs() < 1e-10);
    assert!(angle_diff(end.theta, PI).abs() < 1e-12, "θ = {}", end.theta);
    assert!((end.v_r - 1.0).abs() < 1e-12);
    for s in &t.samples {
        let tol = if s.region == Region::Cap { 1e-13 } else { 0.0 };
        assert!(s.v_theta.abs() <= tol, "v_θ = {} at s = {}", s.v_theta, s.s);
    }
    assert_eq!(t.events_of(EventKind::CapEntry).count(), 1);
    assert_eq!(classify(&t, &HorizonPolicy::default()), Classification::Proper);
    assert!(clairaut_monitor(&t).max_drift < 1e-14);
}

#[test]
fn perturbed_radial_line_leaves_along_the_opposite_ray() {
    // The horn turns any residual Clairaut value into windings, so the line
    // is judged where it leaves the band.
    let grid = perturbed();
    let start = GeodesicState::radial(grid, 16.0, 0.0, true);
    let t = trace(
        grid,
        &start,
        40.0,
        TraceOptions::default().with_stop(Stop::Outward(R1 + 0.5)),
    )
    .unwrap();
    let exit = t.events_of(EventKind::OuterCrossing).find(|e| !e.inward()).unwrap();
    assert!(
        angle_diff(exit.state.theta, PI).abs() < 1e-6,
        "θ = {}",
        exit.state.theta
    );
    assert!(exit.angle.abs() < 1e-6, "angle {}", exit.angle);
}

#[test]
fn circle_geodesic_stays_on_the_equator() {
    let grid = perturbed();
    let start = GeodesicState::launch(grid, R0, 0.3, FRAC_PI_2);
    let t = trace(grid, &start, 20.0, TraceOptions::default()).unwrap();
    assert_eq!(t.termination, Termination::Horizon);
    assert!(t.samples.iter().all(|s| (s.r - R0).abs() < 1e-9));
    assert!((t.last().theta - 20.3).abs() < 1e-8);
    assert!(clairaut_monitor(&t).max_drift < 1e-12);
    assert_eq!(classify(&t, &HorizonPolicy::default()), Classification::Bounded);
}

#[test]
fn outer_geodesic_oscillates_between_clairaut_radii() {
    let grid = round();
    let profile = grid.profile();
    let start = GeodesicState::launch(grid, 3.0, 1.0, 1.0);
    let i = start.clairaut.unwrap().abs();
    assert!(i > 0.0 && i < 1.0);
    let t = trace(grid, &start, 50.0, TraceOptions::default()).unwrap();
    let turning: Vec<_> = t
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Pericentre | EventKind::Apocentre))
        .collect();
    assert!(turning.len() >= 4, "{} turning points", turning.len());
    for e in turning {
        let f = profile.jet(e.state.r)[0];
        assert!(
            (f - i).abs() < 1e-8,
            "{:?} at r = {}: f = {f}, |I| = {i}",
            e.kind,
            e.state.r
        );
    }
    assert!(clairaut_monitor(&t).max_drift < 1e-8);
    assert_eq!(classify(&t, &HorizonPolicy::default()), Classification::Oscillating);
}

#[test]
fn numeric_cap_crossing_agrees_with_exact_transit() {
    let profile = ProfileFunction::default();
    let tol = Tolerance {
        rtol: 1e-13,
        atol: 1e-13,
    };
    for (theta, angle) in [(0.0, PI), (1.3, 2.5), (4.0, 3.6), (2.2, 2.0), (5.9, 4.2)] {
        let entry = PolarPoint::new(R0, theta);
        let dir = TangentVector::at_angle(&profile, entry, angle);
        let exact = cap_transit(entry, &dir).unwrap();
        let (p, v) = numeric_cap_transit(entry, &dir, tol).unwrap();
        assert!((p.r - exact.exit.r).abs() < 1e-9);
        assert!(angle_diff(p.theta, exact.exit.theta).abs() < 1e-9);
        assert!((v.v_r - exact.exit_dir.v_r).abs() < 1e-9);
        assert!((v.v_theta - exact.exit_dir.v_theta).abs() < 1e-9);
    }
}

#[test]
fn events_are_refined_onto_their_circles() {
    let grid = perturbed();
    let start = GeodesicState::launch(grid, 2.9, 0.9, 2.8);
    let t = trace(grid, &start, 30.0, TraceOptions::default()).unwrap();
    let inner: Vec<_> = t.events_of(EventKind::InnerCrossing).collect();
    let outer: Vec<_> = t.events_of(EventKind::OuterCrossing).collect();
    assert!(!inner.is_empty() && !outer.is_empty());
    assert!(inner.iter().all(|e| (e.state.r - R0).abs() < 1e-10));
    assert!(outer.iter().all(|e| (e.state.r - R1).abs() < 1e-10));
    for w in t.samples.windows(2) {
        assert!(w[1].s - w[0].s <= 0.05 + 1e-12);
        assert!(w[1].s > w[0].s);
    }
}

#[test]
fn unit_speed_is_preserved() {
    let grid = perturbed();
    for theta in [0.4, 1.2, 2.0, 2.9] {
        let start = GeodesicState::launch(grid, R1, theta, PI);
        let t = trace(grid, &start, 12.0, TraceOptions::default()).unwrap();
        assert_eq!(t.termination, Termination::Horizon);
        assert!(
            t.max_speed_drift / t.length() < 1e-10,
            "θ = {theta}: {}",
            t.max_speed_drift
        );
    }
}

#[test]
fn tracing_is_reversible() {
    let grid = perturbed();
    let start = GeodesicState::launch(grid, 2.5, 1.1, 2.9);
    let fwd = trace(grid, &start, 7.0, TraceOptions::default()).unwrap();
    let mut back = *fwd.last();
    back.v_r = -back.v_r;
    back.v_theta = -back.v_theta;
    back.s = 0.0;
    let rev = trace(grid, &back, 7.0, TraceOptions::default()).unwrap();
    let end = rev.last();
    assert!(fwd.events_of(EventKind::CapEntry).count() == 1);
    assert!((end.r - start.r).abs() < 1e-8);
    assert!(angle_diff(end.theta, start.theta).abs() < 1e-8);
    assert!((end.v_r + start.v_r).abs() < 1e-8);
    assert!((end.v_theta + start.v_theta).abs() < 1e-8);
}

#[test]
fn stops_at_cap_entry() {
    let grid = perturbed();
    let start = GeodesicState::launch(grid, R1, 0.7, PI);
    let t = trace(grid, &start, 10.0, TraceOptions::default().with_stop(Stop::CapEntry)).unwrap();
    assert_eq!(t.termination, Termination::Stopped { stop: Stop::CapEntry });
    assert!((t.last().r - R0).abs() < 1e-10);
    assert_eq!(t.events_of(EventKind::CapEntry).count(), 0);
}

#[test]
fn rejects_bad_starts() {
    let grid = round();
    let mut s = GeodesicState::launch(grid, 2.0, 0.0, 1.0);
    assert!(matches!(
        trace(grid, &s, 0.0, TraceOptions::default()),
        Err(Error::Invalid(_))
    ));
    s.v_r *= 1.1;
    assert!(matches!(
        trace(grid, &s, 1.0, TraceOptions::default()),
        Err(Error::Invalid(_))
    ));
    let inside = GeodesicState::launch(grid, 1.0, 0.0, 1.0);
    assert!(matches!(
        trace(grid, &inside, 1.0, TraceOptions::default()),
        Err(Error::Domain(_))
    ));
    let bad = TraceOptions {
        max_step: 0.0,
        ..TraceOptions::default()
    };
    let ok = GeodesicState::launch(grid, 2.0, 0.0, 1.0);
    assert!(trace(grid, &ok, 1.0, bad).is_err());
}

#[test]
fn exports() {
    let grid = round();
    let start = GeodesicState::launch(grid, 2.0, 0.5, 2.0);
    let t = trace(grid, &start, 5.0, TraceOptions::default()).unwrap();
    let mut csv = Vec::new();
    write_csv(&t, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,r,theta,v_r,v_theta,region,I"));
    assert_eq!(lines.count(), t.samples.len());
    let mut json = Vec::new();
    write_events_json(&t, &mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["events"].as_array().unwrap().len(), t.events.len());
    assert_eq!(v["termination"]["reason"], "horizon");
}
