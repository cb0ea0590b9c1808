//! Residual checks of an assembled grid against the defining identities of
//! the construction.

use super::grid::{round_jet, MetricGrid};
use super::phi::PhiMap;
use crate::deflection::DeflectionSpec;
use crate::report::{Check, Report};

/// Default acceptance tolerance for every residual.
pub const VERIFY_TOL: f64 = 1e-6;

const FD_STEP_R: f64 = 1e-5;
const FD_STEP_THETA: f64 = 1e-3;

pub const UNIT_SPEED: &str = "unit leaf speed";
pub const LEAF_GEODESIC: &str = "leaf coordinate d_s g_s_theta";
pub const END_ORTHOGONALITY: &str = "end collar orthogonality";
pub const FIRST_VARIATION: &str = "first variation";

/// Residuals in leaf coordinates `(s̃, θ₀)`:
/// `g̃_ss - 1` and `∂_s g̃_sθ` for the interpolated grid metric pulled back
/// by `Φ̃`; `g(∂_s Φ̃, ∂_θ Φ̃)` for the round metric in both end collars; and
/// `-l'(θ) - sin φ_ε(θ)` with `l'` by finite differences.
pub fn verify_construction(grid: &MetricGrid, p_rev: &PhiMap, spec: &DeflectionSpec) -> Report {
    verify_with_tolerance(grid, p_rev, spec, VERIFY_TOL)
}

pub fn verify_with_tolerance(grid: &MetricGrid, p_rev: &PhiMap, spec: &DeflectionSpec, tol: f64) -> Report {
    let model = p_rev.model();
    let profile = grid.profile();
    let delta = model.delta();
    let (mut unit, mut geo, mut orth) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..p_rev.n_leaves() {
        let leaf = model.leaf(p_rev.theta0(i));
        let pull = |r: f64| {
            let pt = model.at_radius(&leaf, r);
            let fr = model.frame(&leaf, &pt, true);
            let g = grid.eval(r, pt.psi);
            (g.dot(fr.e_s, fr.e_s), g.dot(fr.e_s, fr.e_theta0), pt, fr)
        };
        for j in 0..p_rev.samples_per_leaf() {
            let smp = p_rev.sample(i, j);
            let (gss, _, pt, fr) = pull(smp.r);
            unit = unit.max((gss - 1.0).abs());
            let h = FD_STEP_R;
            let d_r = (pull(smp.r + h).1 - pull(smp.r - h).1) / (2.0 * h);
            geo = geo.max((d_r / pt.sigma).abs());
            if smp.s <= delta || smp.s >= leaf.length - delta {
                let g0 = round_jet(profile, smp.r);
                orth = orth.max(g0.dot(fr.e_s, fr.e_theta0).abs());
            }
        }
    }
    let mut first_var = 0.0f64;
    let h = FD_STEP_THETA;
    for i in 0..p_rev.n_leaves() {
        let t = p_rev.theta0(i);
        let l = |x: f64| spec.leaf_length_unchecked(x);
        let dl = (l(t - 2.0 * h) - 8.0 * l(t - h) + 8.0 * l(t + h) - l(t + 2.0 * h)) / (12.0 * h);
        first_var = first_var.max((-dl - spec.phi_eps(t).sin()).abs());
    }
    let mut report = Report::default();
    report.push(Check::below(UNIT_SPEED, unit, tol));
    report.push(Check::below(LEAF_GEODESIC, geo, tol));
    report.push(Check::below(END_ORTHOGONALITY, orth, tol));
    report.push(Check::below(FIRST_VARIATION, first_var, tol));
    report
}
