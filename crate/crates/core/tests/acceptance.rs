//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use scatterplane::census::*;
use scatterplane::geodesic_flow::{clairaut_monitor, trace, EventKind, GeodesicState, TraceOptions};
use scatterplane::metric_forge::{forge, verify_construction, ForgeParams, Forged};
use scatterplane::{R0, R1};

fn default_forge() -> &'static Forged {
    static F: OnceLock<Forged> = OnceLock::new();
    F.get_or_init(|| forge(&ForgeParams::default()).expect("default forge"))
}

fn round_forge() -> &'static Forged {
    static F: OnceLock<Forged> = OnceLock::new();
    F.get_or_init(|| forge(&ForgeParams::default().with_epsilon(0.0)).expect("unperturbed forge"))
}

fn default_scatter() -> &'static Vec<ScatterRecord> {
    static S: OnceLock<Vec<ScatterRecord>> = OnceLock::new();
    S.get_or_init(|| {
        let f = default_forge();
        scatter_experiment(&f.grid, &f.spec, 360, &TraceOptions::default()).expect("scatter")
    })
}

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn construction_fidelity() -> Outcome {
    let t = Instant::now();
    let f = round_forge();
    let report = verify_construction(&f.grid, &f.phi, &f.spec);
    let secs = t.elapsed().as_secs_f64();
    let dev = f.grid.max_round_deviation();
    let worst = report.checks.iter().map(|c| c.residual).fold(0.0, f64::max);
    outcome(
        dev < 1e-10 && worst < 1e-12 && secs < 30.0,
        format!("max |g_ε - g| = {dev:.2e}, worst residual {worst:.2e}, {secs:.1} s"),
    )
}

fn scattering_law() -> Outcome {
    let t = Instant::now();
    let (az, ang) = scatter_errors(default_scatter());
    let fine = forge(&ForgeParams::default().refined(2)).expect("refined forge");
    let fine_recs = scatter_experiment(&fine.grid, &fine.spec, 360, &TraceOptions::default()).expect("scatter");
    drop(fine);
    let (az2, ang2) = scatter_errors(&fine_recs);
    let (p_az, p_ang) = ((az / az2).log2(), (ang / ang2).log2());
    let secs = t.elapsed().as_secs_f64();
    outcome(
        az < 1e-5 && ang < 1e-4 && p_az >= 3.0 && p_ang >= 3.0 && secs < 300.0,
        format!(
            "azimuth {az:.2e} → {az2:.2e} (order {p_az:.2}), angle {ang:.2e} → {ang2:.2e} (order {p_ang:.2}), {secs:.1} s"
        ),
    )
}

fn first_variation() -> Outcome {
    let f = default_forge();
    let recs = default_scatter();
    let fv = first_variation_error(recs, &f.spec);
    let spread = length_offset_spread(recs);
    outcome(
        fv < 1e-4 && spread < 1e-5,
        format!("max |L' + sin φ_ε| = {fv:.2e}, spread of L - l = {spread:.2e}"),
    )
}

fn clairaut_conservation() -> Outcome {
    let f = default_forge();
    let g = &f.grid;
    let starts = [
        GeodesicState::launch(g, R0, 0.3, FRAC_PI_2),
        GeodesicState::launch(g, 3.0, 4.4, 0.3),
        GeodesicState::launch(g, 3.0, 4.7, PI - 0.3),
        GeodesicState::launch(g, 2.6, 5.0, 2.2),
        GeodesicState::launch(g, 4.0, 1.0, 1.0),
    ];
    let mut drift = 0.0f64;
    let mut gap = 0.0f64;
    let mut pairs = 0;
    for st in &starts {
        let t = trace(g, st, 50.0, TraceOptions::default()).expect("trace");
        let mon = clairaut_monitor(&t);
        drift = drift.max(mon.max_drift);
        // Turning points inside one symmetric stretch share |I|.
        for arc in &mon.arcs {
            let turns: Vec<f64> = t
                .events
                .iter()
                .filter(|e| matches!(e.kind, EventKind::Pericentre | EventKind::Apocentre))
                .filter(|e| e.state.s >= arc.s_start && e.state.s <= arc.s_end)
                .map(|e| g.profile().jet(e.state.r)[0])
                .collect();
            for w in turns.windows(2) {
                gap = gap.max((w[0] - w[1]).abs());
                pairs += 1;
            }
        }
    }
    outcome(
        drift < 1e-8 && gap < 1e-8 && pairs > 0,
        format!("max drift {drift:.2e} over s = 50, max |f(r₋) - f(r₊)| = {gap:.2e} over {pairs} pairs"),
    )
}

fn census() -> Outcome {
    let t = Instant::now();
    let f = default_forge();
    let report =
        injective_census(&f.grid, &f.spec, &CensusOptions::default(), &TraceOptions::default()).expect("census");
    let secs = t.elapsed().as_secs_f64();
    let all_cross = report
        .records
        .iter()
        .all(|r| r.status == LineStatus::BothEndsRadial || r.intersection.is_some());
    outcome(
        report.confirms_two_lines() && all_cross && secs < 600.0,
        format!(
            "radial set {:?}, {} undetermined, {} lines, threshold {:.1e}, {secs:.1} s",
            report.radial_azimuths, report.undetermined, report.injective_lines, report.threshold
        ),
    )
}

/// Composite Simpson rule, kept apart from the library quadrature.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 })
        .sum();
    h / 3.0 * (f(a) + inner + f(b))
}

fn length_anomaly() -> Outcome {
    let f = default_forge();
    let rec = &default_scatter()[90];
    assert!((rec.theta - FRAC_PI_2).abs() < 1e-15);
    let oracle = FRAC_PI_4 - simpson(|t| f.spec.phi_eps(t).sin(), 0.0, FRAC_PI_2, 20_000);
    let err = (rec.length - oracle).abs();
    let anomaly = (rec.length - FRAC_PI_4).abs();
    outcome(
        err < 1e-5 && anomaly >= 1e-4,
        format!(
            "L(π/2) = {:.10}, oracle {oracle:.10}, |L - π/4| = {anomaly:.3e}",
            rec.length
        ),
    )
}

fn global_checksum() -> Outcome {
    let mut worst = 0.0f64;
    for f in [round_forge(), default_forge()] {
        for r in [1.0, R1, 5.0, 10.0] {
            let v = gauss_bonnet_disk(&f.grid, r, 4).expect("quadrature");
            worst = worst.max((v - TAU).abs());
        }
    }
    outcome(worst < 1e-4, format!("max |total curvature - 2π| = {worst:.2e}"))
}

fn scaling() -> Outcome {
    let full = default_forge();
    let half = forge(&ForgeParams::default().with_epsilon(full.spec.epsilon() / 2.0)).expect("half-ε forge");
    let opts = TraceOptions::default();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for theta in [FRAC_PI_4, 2.0, 4.0, 5.0 * FRAC_PI_4] {
        let d1 = radial_return(&full.grid, theta, &opts).expect("return").deviation;
        let d2 = radial_return(&half.grid, theta, &opts).expect("return").deviation;
        let rel = (d2 / d1 / 0.5 - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("{:.3}", d2 / d1));
    }
    outcome(
        worst < 0.1,
        format!(
            "deviation ratios {} (worst relative error {worst:.3})",
            parts.join(", ")
        ),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("construction fidelity", construction_fidelity),
        ("scattering law", scattering_law),
        ("first variation", first_variation),
        ("Clairaut conservation", clairaut_conservation),
        ("census", census),
        ("length anomaly of c1", length_anomaly),
        ("global checksum", global_checksum),
        ("scaling in epsilon", scaling),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        if !out.pass {
            failed += 1;
        }
        println!(
            "{} {}. {name}: {}",
            if out.pass { "PASS" } else { "FAIL" },
            k + 1,
            out.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
