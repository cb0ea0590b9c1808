use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::sync::OnceLock;

use scatterplane::census::*;
use scatterplane::deflection::DeflectionParams;
use scatterplane::geodesic_flow::{trace, EventKind, GeodesicState, Stop, TraceOptions};
use scatterplane::metric_forge::{forge, ForgeParams, Forged};
use scatterplane::numerics::quadrature::integrate;
use scatterplane::{angle_diff, Error, R0, R1};

fn forged(epsilon: f64) -> Forged {
    forge(&ForgeParams {
        deflection: DeflectionParams {
            epsilon,
            ..DeflectionParams::default()
        },
        n_r: 513,
        n_theta: 512,
        ..ForgeParams::default()
    })
    .unwrap()
}

fn perturbed() -> &'static Forged {
    static F: OnceLock<Forged> = OnceLock::new();
    F.get_or_init(|| forged(0.1))
}

fn flat() -> &'static Forged {
    static F: OnceLock<Forged> = OnceLock::new();
    F.get_or_init(|| {
        forge(&ForgeParams {
            deflection: DeflectionParams {
                epsilon: 0.0,
                ..DeflectionParams::default()
            },
            n_r: 129,
            n_theta: 128,
            ..ForgeParams::default()
        })
        .unwrap()
    })
}

fn opts() -> TraceOptions {
    TraceOptions::default()
}

#[test]
fn scatter_at_the_special_azimuths() {
    let f = perturbed();
    let recs = scatter_experiment(&f.grid, &f.spec, 4, &opts()).unwrap();
    let zero = &recs[0];
    assert!(
        zero.azimuth_error.abs() < 1e-6 && zero.angle_error.abs() < 1e-6,
        "{zero:?}"
    );
    let south = &recs[3];
    assert!((south.theta - 3.0 * FRAC_PI_2).abs() < 1e-15);
    assert!(south.angle_error.abs() < 1e-6);
    assert!((south.length - FRAC_PI_4).abs() < 1e-8, "{}", south.length);
}

#[test]
fn scatter_law_on_a_coarse_azimuth_grid() {
    let f = perturbed();
    let recs = scatter_experiment(&f.grid, &f.spec, 72, &opts()).unwrap();
    let (az, ang) = scatter_errors(&recs);
    assert!(az < 1e-5 && ang < 1e-5, "{az:e} {ang:e}");
    assert!(length_offset_spread(&recs) < 1e-6);
}

#[test]
fn scatter_rejects_a_mismatched_grid() {
    let f = perturbed();
    let other = f.spec.with_epsilon(0.05).unwrap();
    assert!(matches!(
        scatter_experiment(&f.grid, &other, 8, &opts()),
        Err(Error::Invalid(_))
    ));
}

#[test]
fn c1_band_length_differs_from_the_round_value() {
    let f = perturbed();
    // Independent quadrature of π/4 - ∫₀^{π/2} sin φ_ε.
    let oracle = FRAC_PI_4 - integrate(|t| f.spec.phi_eps(t).sin(), 0.0, FRAC_PI_2, 1e-13).value[0];
    let recs = scatter_experiment(&f.grid, &f.spec, 4, &opts()).unwrap();
    let north = &recs[1];
    assert!((north.length - oracle).abs() < 1e-5, "{} vs {oracle}", north.length);
    assert!((north.length - FRAC_PI_4).abs() > 1e-4);
}

#[test]
fn radial_return_case_a_closes_up_into_c1() {
    let f = perturbed();
    let rr = radial_return(&f.grid, 3.0 * FRAC_PI_2, &opts()).unwrap();
    assert!(
        angle_diff(rr.theta_plus, FRAC_PI_2).abs() < 1e-9,
        "θ₊ = {}",
        rr.theta_plus
    );
    assert!(rr.deviation.abs() < 1e-9, "{}", rr.deviation);
}

#[test]
fn radial_return_case_b_leaves_the_cap_deflected() {
    let f = perturbed();
    let theta = FRAC_PI_4;
    let rr = radial_return(&f.grid, theta, &opts()).unwrap();
    let exit = rr.trace.events_of(EventKind::CapExit).next().unwrap();
    assert!(angle_diff(exit.state.theta, theta + PI).abs() < 1e-5);
    // cos φ ∂_r - sin φ ∂_θ, measured from ∂_r.
    let phi = f.spec.phi_eps(theta);
    assert!((exit.angle + phi).abs() < 1e-5, "{} vs {}", exit.angle, -phi);
    assert!(rr.deviation.abs() > 1e-3);
}

#[test]
fn radial_return_case_a_generic_hits_radially_then_deflects() {
    let f = perturbed();
    let rr = radial_return(&f.grid, 5.0 * FRAC_PI_4, &opts()).unwrap();
    let exit = rr.trace.events_of(EventKind::CapExit).next().unwrap();
    assert!(angle_diff(exit.state.theta, FRAC_PI_4).abs() < 1e-9);
    assert!(exit.angle.abs() < 1e-9);
    assert!(rr.deviation.abs() > 1e-3, "{}", rr.deviation);
}

#[test]
fn self_intersection_examples() {
    let f = perturbed();
    let radial = trace(
        &f.grid,
        &GeodesicState::radial(&f.grid, 10.0, FRAC_PI_2, true),
        30.0,
        opts().with_stop(Stop::Outward(10.0)),
    )
    .unwrap();
    assert!(self_intersection(&radial).is_none());

    let circle = trace(
        &f.grid,
        &GeodesicState::launch(&f.grid, R0, 0.3, FRAC_PI_2),
        7.0,
        opts(),
    )
    .unwrap();
    let ev = self_intersection(&circle).expect("closed circle");
    assert!((ev.s2 - ev.s1 - TAU).abs() < 1e-3, "{ev:?}");

    let copts = CensusOptions::default();
    let deflected = census_line_trace(&f.grid, FRAC_PI_4, &copts, &opts()).unwrap();
    let ev = self_intersection(&deflected).expect("deflected line crosses itself");
    assert!(ev.s2 - ev.s1 > MIN_SEPARATION);
    assert!(deflected.events_of(EventKind::CapEntry).count() >= 1);
}

#[test]
fn census_finds_exactly_two_lines() {
    let f = perturbed();
    let copts = CensusOptions {
        n_theta: 72,
        ..CensusOptions::default()
    };
    let report = injective_census(&f.grid, &f.spec, &copts, &opts()).unwrap();
    assert_eq!(report.radial_azimuths.len(), 4, "{:?}", report.radial_azimuths);
    assert!(report.special_set_matches);
    assert_eq!(report.undetermined, 0);
    assert_eq!(report.injective_lines, 2);
    assert!(report.confirms_two_lines());
    assert!(!report.degenerate);
    for r in &report.records {
        if r.status == LineStatus::SelfIntersecting {
            assert!(r.intersection.is_some());
        }
    }
}

#[test]
fn census_degenerates_without_deflection() {
    let f = flat();
    let copts = CensusOptions {
        n_theta: 16,
        ..CensusOptions::default()
    };
    let report = injective_census(&f.grid, &f.spec, &copts, &opts()).unwrap();
    assert!(report.degenerate);
    assert_eq!(report.injective_lines, 8);
    assert!(!report.confirms_two_lines());
}

#[test]
fn census_rejects_bad_options() {
    let f = perturbed();
    for bad in [
        CensusOptions {
            n_theta: 30,
            ..CensusOptions::default()
        },
        CensusOptions {
            escape_radius: 2.0,
            ..CensusOptions::default()
        },
        CensusOptions {
            horizon: Some(5.0),
            ..CensusOptions::default()
        },
    ] {
        assert!(matches!(
            injective_census(&f.grid, &f.spec, &bad, &opts()),
            Err(Error::Invalid(_))
        ));
    }
}

#[test]
fn deviation_halves_with_epsilon() {
    let full = perturbed();
    let half = forged(0.05);
    for theta in [FRAC_PI_4, 2.0, 4.0] {
        let d1 = radial_return(&full.grid, theta, &opts()).unwrap().deviation;
        let d2 = radial_return(&half.grid, theta, &opts()).unwrap().deviation;
        let ratio = d2 / d1;
        assert!((ratio - 0.5).abs() < 0.05, "θ = {theta}: {d1} → {d2}");
    }
}

#[test]
fn gauss_bonnet_checksum() {
    for f in [perturbed(), flat()] {
        for radius in [1.0, R1, 5.0, 10.0] {
            let v = gauss_bonnet_disk(&f.grid, radius, 3).unwrap();
            assert!((v - TAU).abs() < 1e-6, "R = {radius}: {v}");
        }
    }
    // Cutting through the band exercises the boundary integral.
    let v = gauss_bonnet_disk(&perturbed().grid, 2.0, 3).unwrap();
    assert!((v - TAU).abs() < 1e-6, "{v}");
    let exact_cap = TAU * (1.0 - 1f64.cos()) + TAU * 1f64.cos();
    assert!((gauss_bonnet_disk(&flat().grid, 1.0, 3).unwrap() - exact_cap).abs() < 1e-14);
    assert!(gauss_bonnet_disk(&flat().grid, 0.0, 3).is_err());
}

#[test]
fn outputs_are_well_formed() {
    let f = perturbed();
    let copts = CensusOptions {
        n_theta: 8,
        ..CensusOptions::default()
    };
    let report = injective_census(&f.grid, &f.spec, &copts, &opts()).unwrap();
    let mut json = Vec::new();
    write_census_json(&report, &mut json).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 8);
    let mut csv = Vec::new();
    write_census_csv(&report, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 9);
    let t = census_line_trace(&f.grid, 0.0, &copts, &opts()).unwrap();
    let mut svg = Vec::new();
    write_svg(&[("θ = 0", &t)], 4.0, &mut svg).unwrap();
    let s = String::from_utf8(svg).unwrap();
    assert!(s.starts_with("<svg") && s.contains("<path"));
}
