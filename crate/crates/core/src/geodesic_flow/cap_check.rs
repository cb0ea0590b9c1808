//! Numerical integration across the cap, as an independent check of the
//! exact transit. Never used on production paths.

use std::f64::consts::PI;

use crate::numerics::ode::{integrate_to, Tolerance};
use crate::rotsym_metric::{PolarPoint, TangentVector};
use crate::sphere_geodesics::{from_sphere, to_sphere, V3};
use crate::{Error, Result, R0};

/// Integrates the round-sphere geodesic equation for arclength `π` in polar
/// coordinates about the equator point a quarter turn from the entry, where
/// the chart is regular along the whole crossing unless the entry is nearly
/// tangent to the equator.
pub fn numeric_cap_transit(
    entry: PolarPoint,
    dir: &TangentVector,
    tol: Tolerance,
) -> Result<(PolarPoint, TangentVector)> {
    let (p, dr, dth) = to_sphere(R0, entry.theta);
    let t: V3 = std::array::from_fn(|k| dir.v_r * dr[k] + dir.v_theta * dth[k]);
    // Rotated frame: z' at the chart pole, x' at the north pole.
    let z = to_sphere(R0, entry.theta + 0.5 * PI).0;
    let x = [0.0, 0.0, 1.0];
    let y = cross(z, x);
    let into = |v: V3| [dot(v, x), dot(v, y), dot(v, z)];
    let back = |v: V3| -> V3 { std::array::from_fn(|k| v[0] * x[k] + v[1] * y[k] + v[2] * z[k]) };

    let (q, v_r, v_th) = from_sphere(into(p), into(t), 0.0);
    let rhs = |_: f64, s: &[f64; 4]| {
        let (sr, cr) = s[0].sin_cos();
        [s[2], s[3], sr * cr * s[3] * s[3], -2.0 * cr / sr * s[2] * s[3]]
    };
    let end = integrate_to(rhs, 0.0, [q.r, q.theta, v_r, v_th], PI, tol)
        .ok_or_else(|| Error::Numerical("cap cross-check integration failed".into()))?;
    let (q1, dr1, dth1) = to_sphere(end[0], end[1]);
    let v1: V3 = std::array::from_fn(|k| end[2] * dr1[k] + end[3] * dth1[k]);
    let (exit, v_r, v_theta) = from_sphere(back(q1), back(v1), entry.theta);
    Ok((
        exit,
        TangentVector {
            base: exit,
            v_r,
            v_theta,
        },
    ))
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
