//! Sampled metric components over the band with spline interpolation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::spline::{ClampedPeriodicSpline, Jet2};
use crate::rotsym_metric::ProfileFunction;
use crate::{Error, Result, TAU};

/// Construction parameters recorded with a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub epsilon: f64,
    pub amplitude: f64,
    pub flatness: f64,
    pub delta: f64,
    pub blend_start: f64,
    pub blend_end: f64,
    pub tail_rate: f64,
}

/// Smallest node-aligned box outside which the grid equals the round metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBox {
    pub r_min: f64,
    pub r_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl PerturbationBox {
    /// Whether `(r, θ)` is inside the box grown by the given margins, with
    /// the azimuth taken mod 2π.
    pub fn contains(&self, r: f64, theta: f64, r_margin: f64, theta_margin: f64) -> bool {
        if !(r > self.r_min - r_margin && r < self.r_max + r_margin) {
            return false;
        }
        let t = theta.rem_euclid(TAU);
        [t - TAU, t, t + TAU]
            .iter()
            .any(|&u| u > self.theta_min - theta_margin && u < self.theta_max + theta_margin)
    }
}

/// Component tolerance for "equals the round metric" at a node.
pub const ROUND_TOL: f64 = 1e-13;

/// Cells beyond the perturbation box where the spline is still evaluated;
/// the cubic spline's influence decays by about 0.27 per cell.
pub(crate) const SPLINE_PAD_CELLS: f64 = 30.0;

/// Metric `g_rr dr² + 2 g_rθ dr dθ + g_θθ dθ²` and its derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricJet {
    /// `[g_rr, g_rθ, g_θθ]`
    pub g: [f64; 3],
    pub d_r: [f64; 3],
    pub d_theta: [f64; 3],
    pub d_rr: [f64; 3],
    pub d_rtheta: [f64; 3],
    pub d_thetatheta: [f64; 3],
}

impl MetricJet {
    pub fn det(&self) -> f64 {
        self.g[0] * self.g[2] - self.g[1] * self.g[1]
    }

    /// Inner product of two `(r, θ)` vectors.
    pub fn dot(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.g[0] * a[0] * b[0] + self.g[1] * (a[0] * b[1] + a[1] * b[0]) + self.g[2] * a[1] * b[1]
    }
}

/// Round metric jet `dr² + f² dθ²`.
pub fn round_jet(profile: &ProfileFunction, r: f64) -> MetricJet {
    let [f, f1, f2] = profile.jet(r);
    MetricJet {
        g: [1.0, 0.0, f * f],
        d_r: [0.0, 0.0, 2.0 * f * f1],
        d_rr: [0.0, 0.0, 2.0 * (f1 * f1 + f * f2)],
        ..Default::default()
    }
}

/// `g_ε` sampled at `r_i = r_min + i dr`, `θ_j = j dθ`, stored row-major
/// (`i * n_theta + j`). The interpolant is the round metric plus a bicubic
/// spline of the deviation, so it is exact wherever the deviation vanishes.
#[derive(Debug, Clone)]
pub struct MetricGrid {
    meta: GridMeta,
    n_r: usize,
    n_theta: usize,
    r_min: f64,
    dr: f64,
    g_rr: Vec<f64>,
    g_rtheta: Vec<f64>,
    g_thetatheta: Vec<f64>,
    profile: ProfileFunction,
    splines: [ClampedPeriodicSpline; 3],
    bbox: Option<PerturbationBox>,
}

impl MetricGrid {
    /// Builds the interpolant; components are `[g_rr, g_rθ, g_θθ]`.
    pub fn new(
        meta: GridMeta,
        n_r: usize,
        n_theta: usize,
        r_min: f64,
        dr: f64,
        components: [Vec<f64>; 3],
    ) -> Result<Self> {
        if n_r < 4 || n_theta < 8 {
            return Err(Error::Invalid(format!("grid {n_r}×{n_theta} is too small")));
        }
        if !(dr > 0.0 && r_min > 0.0) {
            return Err(Error::Invalid("grid spacing and inner radius must be positive".into()));
        }
        if components.iter().any(|c| c.len() != n_r * n_theta) {
            return Err(Error::Invalid("component array length does not match grid".into()));
        }
        let profile = ProfileFunction::new(meta.blend_start, meta.blend_end, meta.tail_rate)?;
        let dtheta = TAU / n_theta as f64;
        let [g_rr, g_rtheta, g_thetatheta] = components;
        let mut dev = [
            vec![0.0; n_r * n_theta],
            vec![0.0; n_r * n_theta],
            vec![0.0; n_r * n_theta],
        ];
        let mut bbox: Option<PerturbationBox> = None;
        for i in 0..n_r {
            let r = r_min + i as f64 * dr;
            let f2 = profile.jet(r)[0].powi(2);
            for j in 0..n_theta {
                let k = i * n_theta + j;
                dev[0][k] = g_rr[k] - 1.0;
                dev[1][k] = g_rtheta[k];
                dev[2][k] = g_thetatheta[k] - f2;
                if dev.iter().any(|d| d[k].abs() > ROUND_TOL) {
                    let t = j as f64 * dtheta;
                    let b = bbox.get_or_insert(PerturbationBox {
                        r_min: r,
                        r_max: r,
                        theta_min: t,
                        theta_max: t,
                    });
                    b.r_min = b.r_min.min(r);
                    b.r_max = b.r_max.max(r);
                    b.theta_min = b.theta_min.min(t);
                    b.theta_max = b.theta_max.max(t);
                }
            }
        }
        let spline = |d: &[f64]| ClampedPeriodicSpline::new(d, n_r, n_theta, r_min, dr, dtheta);
        let splines = [spline(&dev[0]), spline(&dev[1]), spline(&dev[2])];
        Ok(Self {
            meta,
            n_r,
            n_theta,
            r_min,
            dr,
            g_rr,
            g_rtheta,
            g_thetatheta,
            profile,
            splines,
            bbox,
        })
    }

    /// The unperturbed metric of `profile` sampled over the band.
    pub fn round(profile: &ProfileFunction, n_r: usize, n_theta: usize) -> Result<Self> {
        let meta = GridMeta {
            epsilon: 0.0,
            amplitude: 0.0,
            flatness: 0.0,
            delta: crate::DELTA,
            blend_start: profile.blend_start(),
            blend_end: profile.blend_end(),
            tail_rate: profile.tail_rate(),
        };
        let dr = (crate::R1 - crate::R0) / (n_r - 1) as f64;
        let mut g_tt = Vec::with_capacity(n_r * n_theta);
        for i in 0..n_r {
            let f = profile.jet(crate::R0 + i as f64 * dr)[0];
            g_tt.extend(std::iter::repeat_n(f * f, n_theta));
        }
        let n = n_r * n_theta;
        Self::new(meta, n_r, n_theta, crate::R0, dr, [vec![1.0; n], vec![0.0; n], g_tt])
    }

    pub fn meta(&self) -> &GridMeta {
        &self.meta
    }

    pub fn profile(&self) -> &ProfileFunction {
        &self.profile
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_r, self.n_theta)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_min + (self.n_r - 1) as f64 * self.dr
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.dr
    }

    pub fn azimuth(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn components(&self) -> [&[f64]; 3] {
        [&self.g_rr, &self.g_rtheta, &self.g_thetatheta]
    }

    /// `[g_rr, g_rθ, g_θθ]` at node `(i, j)`.
    pub fn node(&self, i: usize, j: usize) -> [f64; 3] {
        let k = i * self.n_theta + j;
        [self.g_rr[k], self.g_rtheta[k], self.g_thetatheta[k]]
    }

    /// Measured support of the perturbation; `None` when the grid is round.
    pub fn perturbation_box(&self) -> Option<PerturbationBox> {
        self.bbox
    }

    /// Whether the interpolated metric at `(r, θ)` is the round metric.
    pub fn is_round_at(&self, r: f64, theta: f64) -> bool {
        match self.bbox {
            None => true,
            Some(b) => !b.contains(r, theta, SPLINE_PAD_CELLS * self.dr, SPLINE_PAD_CELLS * self.dtheta()),
        }
    }

    /// Largest component deviation from the round metric over all nodes.
    pub fn max_round_deviation(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n_r {
            let f2 = self.profile.jet(self.radius(i))[0].powi(2);
            for j in 0..self.n_theta {
                let [a, b, c] = self.node(i, j);
                m = m.max((a - 1.0).abs()).max(b.abs()).max((c - f2).abs());
            }
        }
        m
    }

    /// Interpolated metric with derivatives through second order; the round
    /// metric outside the sampled band.
    pub fn eval(&self, r: f64, theta: f64) -> MetricJet {
        let mut jet = round_jet(&self.profile, r);
        if r < self.r_min || r > self.r_max() || self.is_round_at(r, theta) {
            return jet;
        }
        for (c, s) in self.splines.iter().enumerate() {
            let Jet2 { v, x, y, xx, xy, yy } = s.eval(r, theta);
            jet.g[c] += v;
            jet.d_r[c] += x;
            jet.d_theta[c] += y;
            jet.d_rr[c] += xx;
            jet.d_rtheta[c] += xy;
            jet.d_thetatheta[c] += yy;
        }
        jet
    }

    /// Gaussian curvature of the interpolated metric (Brioschi formula).
    pub fn curvature(&self, r: f64, theta: f64) -> f64 {
        brioschi(&self.eval(r, theta))
    }
}

/// Gaussian curvature from first and second derivatives of `E, F, G` in
/// coordinates `(u, v) = (r, θ)`.
pub fn brioschi(j: &MetricJet) -> f64 {
    let [e, f, g] = j.g;
    let (e_u, f_u, g_u) = (j.d_r[0], j.d_r[1], j.d_r[2]);
    let (e_v, f_v, g_v) = (j.d_theta[0], j.d_theta[1], j.d_theta[2]);
    let e_vv = j.d_thetatheta[0];
    let f_uv = j.d_rtheta[1];
    let g_uu = j.d_rr[2];
    let m1 = [
        [-0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v],
        [f_v - 0.5 * g_u, e, f],
        [0.5 * g_v, f, g],
    ];
    let m2 = [[0.0, 0.5 * e_v, 0.5 * g_u], [0.5 * e_v, e, f], [0.5 * g_u, f, g]];
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let w = e * g - f * f;
    (det3(m1) - det3(m2)) / (w * w)
}

/// Azimuthal sampling used by default: `[0, 2π)` in `n` steps, with `π`
/// landing on a node when `n` is even.
pub fn default_azimuths(n: usize) -> Vec<f64> {
    (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
}
