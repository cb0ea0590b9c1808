//! Pushes the leaf-coordinate metric `ds̃² + G dθ₀²` forward to polar nodes.

use rayon::prelude::*;

use super::grid::{GridMeta, MetricGrid};
use super::phi::PhiMap;
use crate::rotsym_metric::ProfileFunction;
use crate::{Error, Result, R0, R1, TAU};

/// Jacobian determinants below this are treated as degenerate.
pub const MIN_JACOBIAN: f64 = 1e-8;
/// Smallest admissible eigenvalue of an assembled tensor.
pub const MIN_EIGENVALUE: f64 = 1e-8;

/// `[g_rr, g_rθ, g_θθ]` of `g_ε` at `(r, θ)` in the band, from the reversed
/// parameterization. `guess` is a start azimuth near the leaf through the
/// point.
pub fn metric_at(p_rev: &PhiMap, profile: &ProfileFunction, r: f64, theta: f64, guess: f64) -> Result<[f64; 3]> {
    let model = p_rev.model();
    let theta0 = model.leaf_through(r, theta, guess);
    let f = profile.jet(r)[0];
    let [phi, dphi] = model.spec().phi_eps_jet(theta0);
    if phi == 0.0 && dphi == 0.0 {
        return Ok([1.0, 0.0, f * f]);
    }
    let leaf = model.leaf(theta0);
    let pt = model.at_radius(&leaf, r);
    let frame = model.frame(&leaf, &pt, true);
    let [a, c] = frame.e_s;
    let [b, d] = frame.e_theta0;
    let det = a * d - b * c;
    if !(det.abs() > MIN_JACOBIAN) {
        return Err(Error::Numerical(format!(
            "parameterization Jacobian {det:.3e} degenerate at (r, θ) = ({r}, {theta})"
        )));
    }
    // Leaf coordinates carry ds̃² + G dθ₀² with G the round length of ∂θ₀.
    let big_g = b * b + f * f * d * d;
    let inv2 = 1.0 / (det * det);
    Ok([
        (d * d + big_g * c * c) * inv2,
        (-d * b - big_g * c * a) * inv2,
        (b * b + big_g * a * a) * inv2,
    ])
}

fn min_eigenvalue(g: [f64; 3]) -> f64 {
    let tr = g[0] + g[2];
    let det = g[0] * g[2] - g[1] * g[1];
    let disc = (0.25 * (g[0] - g[2]).powi(2) + g[1] * g[1]).sqrt();
    let hi = 0.5 * tr + disc;
    // Stable smaller root.
    if hi > 0.0 {
        det / hi
    } else {
        0.5 * tr - disc
    }
}

/// Samples `g_ε` on the polar grid whose radii are the foliation radii and
/// whose azimuths are `2πj/n_theta`.
pub fn assemble_metric(p_rev: &PhiMap, profile: &ProfileFunction, n_theta: usize) -> Result<MetricGrid> {
    if !p_rev.is_reversed() {
        return Err(Error::Invalid(
            "metric assembly needs the reversed parameterization".into(),
        ));
    }
    let fol = p_rev.foliation();
    let radii = fol.radii();
    let n_r = radii.len();
    let dr = (R1 - R0) / (n_r - 1) as f64;
    if radii
        .iter()
        .enumerate()
        .any(|(i, &r)| (r - (R0 + i as f64 * dr)).abs() > 1e-12)
    {
        return Err(Error::Invalid("foliation radii must be uniform on [R₀, R₁]".into()));
    }
    let rows: Vec<Result<Vec<[f64; 3]>>> = (0..n_r)
        .into_par_iter()
        .map(|i| {
            let r = radii[i];
            let lift = fol.lift(i);
            (0..n_theta)
                .map(|j| {
                    let theta = TAU * j as f64 / n_theta as f64;
                    let g = metric_at(p_rev, profile, r, theta, lift.invert(theta))?;
                    let ev = min_eigenvalue(g);
                    if !(ev > MIN_EIGENVALUE) {
                        return Err(Error::Numerical(format!(
                            "assembled metric not positive definite at (r, θ) = ({r}, {theta}): λ_min = {ev:.3e}"
                        )));
                    }
                    Ok(g)
                })
                .collect()
        })
        .collect();
    let mut comps = [
        Vec::with_capacity(n_r * n_theta),
        Vec::with_capacity(n_r * n_theta),
        Vec::with_capacity(n_r * n_theta),
    ];
    for row in rows {
        for g in row? {
            for c in 0..3 {
                comps[c].push(g[c]);
            }
        }
    }
    let model = p_rev.model();
    let params = model.spec().params();
    let meta = GridMeta {
        epsilon: params.epsilon,
        amplitude: params.amplitude,
        flatness: params.flatness,
        delta: model.delta(),
        blend_start: profile.blend_start(),
        blend_end: profile.blend_end(),
        tail_rate: profile.tail_rate(),
    };
    MetricGrid::new(meta, n_r, n_theta, R0, dr, comps)
}
