//! Perturbed rotationally symmetric metrics on the plane built by prescribing
//! how geodesics scatter through an annulus, together with a hybrid geodesic
//! tracer and the experiments that count injective geodesic lines.
//!
//! The plane carries polar coordinates `(r, θ)`. Inside `r < 3π/4` the
//! unperturbed metric is the round unit sphere; the perturbation lives in the
//! band `R₀ ≤ r ≤ R₁` over the azimuths `(0, π)`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod census;
pub mod config;
pub mod deflection;
pub mod error;
pub mod foliation;
pub mod geodesic_flow;
pub mod metric_forge;
pub mod numerics;
pub mod report;
pub mod rotsym_metric;
pub mod sphere_geodesics;

pub use error::{Error, Result};

use std::f64::consts::PI;

/// Inner radius of the band: the equator of the round cap.
pub const R0: f64 = PI / 2.0;
/// Outer radius of the band.
pub const R1: f64 = 3.0 * PI / 4.0;
/// Width of the end collars where the construction is pinned.
pub const DELTA: f64 = PI / 12.0;
pub const TAU: f64 = 2.0 * PI;

/// Reduces an angle to `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Signed difference `a - b` reduced to `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}
