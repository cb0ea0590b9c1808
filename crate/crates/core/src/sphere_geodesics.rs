//! Great-circle geodesics of the round region `r < 3π/4`, computed through
//! the isometry with the unit sphere in 3-space.
//!
//! The point `(r, θ)` is `(sin r cos θ, sin r sin θ, cos r)`; the cap
//! `r ≤ R₀` is the northern hemisphere and `{R₀} × S¹` the equator.

use std::f64::consts::PI;

use crate::deflection::DeflectionSpec;
use crate::rotsym_metric::{PolarPoint, TangentVector};
use crate::{Error, Result, R0, R1, TAU};

pub(crate) type V3 = [f64; 3];

pub(crate) fn to_sphere(r: f64, theta: f64) -> (V3, V3, V3) {
    let (sr, cr) = r.sin_cos();
    let (st, ct) = theta.sin_cos();
    let p = [sr * ct, sr * st, cr];
    let dr = [cr * ct, cr * st, -sr];
    let dth = [-sr * st, sr * ct, 0.0];
    (p, dr, dth)
}

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Polar state of the unit-sphere point `x` with velocity `v`. `theta_hint`
/// is used when `x` is the pole.
pub(crate) fn from_sphere(x: V3, v: V3, theta_hint: f64) -> (PolarPoint, f64, f64) {
    let rho = x[0].hypot(x[1]);
    let r = rho.atan2(x[2]);
    let theta = if rho > 0.0 { x[1].atan2(x[0]) } else { theta_hint };
    let (st, ct) = theta.sin_cos();
    let (sr, cr) = r.sin_cos();
    let v_r = v[0] * cr * ct + v[1] * cr * st - v[2] * sr;
    let v_th = if rho > 0.0 { (-v[0] * st + v[1] * ct) / sr } else { 0.0 };
    (PolarPoint::new(r, theta), v_r, v_th)
}

/// Result of crossing the hemisphere `r ≤ R₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapTransit {
    pub exit: PolarPoint,
    pub exit_dir: TangentVector,
    pub length: f64,
    /// Change of the continuous azimuth across the cap, `±π`.
    pub azimuth_shift: f64,
    /// Closest approach to the pole.
    pub r_min: f64,
}

/// Propagates an inward unit vector on `{R₀} × S¹` through the cap.
pub fn cap_transit(entry: PolarPoint, entry_dir: &TangentVector) -> Result<CapTransit> {
    check_on_equator(entry, entry_dir)?;
    let (v_r, v_th) = (entry_dir.v_r, entry_dir.v_theta);
    let exit = PolarPoint::new(R0, entry.theta + PI);
    Ok(CapTransit {
        exit,
        exit_dir: TangentVector {
            base: exit,
            v_r: -v_r,
            v_theta: v_th,
        },
        length: PI,
        azimuth_shift: if v_th >= 0.0 { PI } else { -PI },
        r_min: v_r.abs().min(1.0).acos(),
    })
}

/// Position and velocity at arclength `s ∈ [0, π]` inside the cap, by
/// rotation in the plane of the great circle.
pub fn cap_state(entry: PolarPoint, entry_dir: &TangentVector, s: f64) -> Result<(PolarPoint, f64, f64)> {
    check_on_equator(entry, entry_dir)?;
    let (p, dr, dth) = to_sphere(R0, entry.theta);
    let t: V3 = std::array::from_fn(|k| entry_dir.v_r * dr[k] + entry_dir.v_theta * dth[k]);
    let (ss, cs) = s.sin_cos();
    let x: V3 = std::array::from_fn(|k| p[k] * cs + t[k] * ss);
    let v: V3 = std::array::from_fn(|k| -p[k] * ss + t[k] * cs);
    Ok(from_sphere(x, v, entry.theta))
}

fn check_on_equator(entry: PolarPoint, dir: &TangentVector) -> Result<()> {
    if (entry.r - R0).abs() > 1e-9 {
        return Err(Error::Domain(format!("cap entry radius {} is not R₀", entry.r)));
    }
    let n2 = dir.v_r * dir.v_r + dir.v_theta * dir.v_theta;
    if (n2 - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("cap entry direction not unit (|v|² = {n2})")));
    }
    if dir.v_r >= 0.0 {
        return Err(Error::Invalid(
            "cap entry direction is not strictly inward; the geodesic never enters the cap".into(),
        ));
    }
    Ok(())
}

/// One sample of an arc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSample {
    pub s: f64,
    pub point: PolarPoint,
    pub dir: TangentVector,
}

/// Arc of the great circle leaving `(R₀, θ₀)` with direction
/// `cos φ ∂_r + sin φ ∂_θ`, followed outward until `r = R₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreatCircleArc {
    pub start: PolarPoint,
    pub start_dir: TangentVector,
    pub phi: f64,
    pub length: f64,
    pub samples: Vec<ArcSample>,
}

const ARC_SAMPLES: usize = 65;

impl GreatCircleArc {
    pub fn shoot(theta0: f64, phi: f64) -> Result<Self> {
        let cphi = phi.cos();
        let x = -R1.cos() / cphi;
        if !(cphi > 0.0) || x >= 1.0 {
            return Err(Error::Transversality(format!(
                "arc from θ = {theta0} with deflection {phi} does not reach R₁"
            )));
        }
        let start = PolarPoint::new(R0, theta0);
        let start_dir = TangentVector {
            base: start,
            v_r: cphi,
            v_theta: phi.sin(),
        };
        let mut arc = Self {
            start,
            start_dir,
            phi,
            length: x.asin(),
            samples: Vec::with_capacity(ARC_SAMPLES),
        };
        for i in 0..ARC_SAMPLES {
            let s = arc.length * i as f64 / (ARC_SAMPLES - 1) as f64;
            arc.samples.push(arc.sample(s));
        }
        Ok(arc)
    }

    /// Clairaut value `sin φ`.
    pub fn clairaut(&self) -> f64 {
        self.phi.sin()
    }

    /// State at arclength `s` along the great circle.
    pub fn sample(&self, s: f64) -> ArcSample {
        let (p, dr, dth) = to_sphere(R0, self.start.theta);
        let t: V3 = std::array::from_fn(|k| self.start_dir.v_r * dr[k] + self.start_dir.v_theta * dth[k]);
        let (ss, cs) = s.sin_cos();
        let x: V3 = std::array::from_fn(|k| p[k] * cs + t[k] * ss);
        let v: V3 = std::array::from_fn(|k| -p[k] * ss + t[k] * cs);
        let (point, v_r, v_theta) = from_sphere(x, v, self.start.theta);
        debug_assert!((dot(v, v) - 1.0).abs() < 1e-12);
        ArcSample {
            s,
            point,
            dir: TangentVector {
                base: point,
                v_r,
                v_theta,
            },
        }
    }

    pub fn profile(&self) -> ArcProfile {
        ArcProfile::new(self.phi)
    }

    /// Arclength at which the arc reaches radius `r ∈ [R₀, R₁]`.
    pub fn arclength_at_radius(&self, r: f64) -> f64 {
        self.profile().arclength(r)
    }

    /// `ds/dr` along the arc.
    pub fn speed_ratio(&self, r: f64) -> f64 {
        self.profile().speed_ratio(r)
    }

    /// `∂(ds/dr)/∂φ` at fixed `r`.
    pub fn speed_ratio_dphi(&self, r: f64) -> f64 {
        self.profile().speed_ratio_dphi(r)
    }

    /// `∂s/∂φ` at fixed `r`.
    pub fn arclength_dphi(&self, r: f64) -> f64 {
        self.profile().arclength_dphi(r)
    }

    /// Continuous azimuth (not reduced) where the arc meets radius `r`.
    pub fn azimuth_at_radius(&self, r: f64) -> f64 {
        self.start.theta + self.profile().azimuth_offset(r)
    }

    /// `dθ/dr` along the arc: `I / (f √(f² - I²))`.
    pub fn dazimuth_dr(&self, r: f64) -> f64 {
        self.profile().dazimuth_dr(r)
    }

    pub fn end_azimuth(&self) -> f64 {
        self.azimuth_at_radius(R1)
    }
}

/// Closed forms for the arc leaving the equator at angle `φ` to `∂_r`, as
/// functions of the radius it reaches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcProfile {
    phi: f64,
    sin_phi: f64,
    cos_phi: f64,
}

impl ArcProfile {
    pub fn new(phi: f64) -> Self {
        let (sin_phi, cos_phi) = phi.sin_cos();
        Self { phi, sin_phi, cos_phi }
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `S_g(r)`: arclength from the equator to radius `r`.
    pub fn arclength(&self, r: f64) -> f64 {
        (-r.cos() / self.cos_phi).clamp(-1.0, 1.0).asin()
    }

    /// `σ_g = ds/dr = sin r / √(sin² r - sin² φ)`.
    pub fn speed_ratio(&self, r: f64) -> f64 {
        let sr = r.sin();
        sr / (sr * sr - self.sin_phi * self.sin_phi).sqrt()
    }

    pub fn speed_ratio_dphi(&self, r: f64) -> f64 {
        let sr = r.sin();
        let q = sr * sr - self.sin_phi * self.sin_phi;
        sr * self.sin_phi * self.cos_phi / (q * q.sqrt())
    }

    pub fn arclength_dphi(&self, r: f64) -> f64 {
        let cr = r.cos();
        let x = -cr / self.cos_phi;
        -cr * self.sin_phi / (self.cos_phi * self.cos_phi) / (1.0 - x * x).sqrt()
    }

    /// Azimuth gained between the equator and radius `r`.
    pub fn azimuth_offset(&self, r: f64) -> f64 {
        let (ss, cs) = self.arclength(r).sin_cos();
        (self.sin_phi * ss).atan2(cs)
    }

    /// `∂/∂φ` of [`Self::azimuth_offset`] at fixed `r`.
    pub fn azimuth_offset_dphi(&self, r: f64) -> f64 {
        let s = self.arclength(r);
        let (ss, cs) = s.sin_cos();
        let ds = self.arclength_dphi(r);
        let a = self.sin_phi * ss;
        let b = cs;
        let da = self.cos_phi * ss + self.sin_phi * cs * ds;
        let db = -ss * ds;
        (b * da - a * db) / (a * a + b * b)
    }

    /// `dθ/dr = I / (f √(f² - I²))` with `I = sin φ`, `f = sin r`.
    pub fn dazimuth_dr(&self, r: f64) -> f64 {
        let f = r.sin();
        let i = self.sin_phi;
        i / (f * (f * f - i * i).sqrt())
    }
}

/// The unperturbed geodesic `c^g_{ε,θ}` shot from `(R₀, θ)`.
pub fn band_shoot(spec: &DeflectionSpec, theta: f64) -> Result<GreatCircleArc> {
    GreatCircleArc::shoot(theta, spec.phi_eps(theta))
}

/// Whether the arcs shot from `n_theta` equally spaced azimuths foliate the
/// band: each reaches `R₁` with positive radial speed, and at each of
/// `n_radii` radii the azimuth map is strictly increasing.
pub fn transversality_check(spec: &DeflectionSpec, n_theta: usize, n_radii: usize) -> bool {
    let arcs: Result<Vec<_>> = (0..n_theta)
        .map(|i| band_shoot(spec, TAU * i as f64 / n_theta as f64))
        .collect();
    let Ok(arcs) = arcs else {
        return false;
    };
    for j in 0..=n_radii {
        let r = R0 + (R1 - R0) * j as f64 / n_radii as f64;
        let mut prev: Option<f64> = None;
        for arc in &arcs {
            let sp = arc.clairaut();
            if !(r.sin() > sp.abs()) {
                return false;
            }
            let a = arc.azimuth_at_radius(r);
            if let Some(p) = prev {
                if !(a - p > 1e-10) {
                    return false;
                }
            }
            prev = Some(a);
        }
        let first = arcs[0].azimuth_at_radius(r);
        if !(first + TAU - prev.unwrap_or(first) > 1e-10) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deflection::DeflectionParams;
    use crate::numerics::quadrature::integrate;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn spec(eps: f64) -> DeflectionSpec {
        DeflectionSpec::new(DeflectionParams {
            epsilon: eps,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn radial_cap_transit() {
        let e = PolarPoint::new(R0, 0.4);
        let d = TangentVector {
            base: e,
            v_r: -1.0,
            v_theta: 0.0,
        };
        let t = cap_transit(e, &d).unwrap();
        assert!((t.exit.theta - (0.4 + PI)).abs() < 1e-15);
        assert_eq!(t.exit_dir.v_r, 1.0);
        assert_eq!(t.length, PI);
        assert_eq!(t.r_min, 0.0);
    }

    #[test]
    fn oblique_cap_transit_matches_rotation() {
        let alpha = 0.23f64;
        let e = PolarPoint::new(R0, 1.1);
        let d = TangentVector {
            base: e,
            v_r: -alpha.cos(),
            v_theta: -alpha.sin(),
        };
        let t = cap_transit(e, &d).unwrap();
        assert!((t.exit_dir.v_r - alpha.cos()).abs() < 1e-15);
        assert!((t.exit_dir.v_theta + alpha.sin()).abs() < 1e-15);
        assert_eq!(t.azimuth_shift, -PI);
        // The explicit rotation lands on the same state.
        let (p, vr, vth) = cap_state(e, &d, PI).unwrap();
        assert!((p.r - R0).abs() < 1e-15);
        assert!(crate::angle_diff(p.theta, t.exit.theta).abs() < 1e-14);
        assert!((vr - t.exit_dir.v_r).abs() < 1e-14);
        assert!((vth - t.exit_dir.v_theta).abs() < 1e-14);
        // Closest approach at the midpoint.
        let (mid, _, _) = cap_state(e, &d, FRAC_PI_2).unwrap();
        assert!((mid.r - t.r_min).abs() < 1e-14);
    }

    #[test]
    fn cap_transit_twice_restores_direction() {
        let e = PolarPoint::new(R0, 2.0);
        let d = TangentVector {
            base: e,
            v_r: -0.8,
            v_theta: 0.6,
        };
        let t1 = cap_transit(e, &d).unwrap();
        // Reflect back inward and cross again.
        let back = TangentVector {
            v_r: -t1.exit_dir.v_r,
            ..t1.exit_dir
        };
        let t2 = cap_transit(t1.exit, &back).unwrap();
        assert!(crate::angle_diff(t2.exit.theta, e.theta).abs() < 1e-13);
        assert!((t2.exit_dir.v_r + d.v_r).abs() < 1e-15);
        assert!((t2.exit_dir.v_theta - d.v_theta).abs() < 1e-15);
    }

    #[test]
    fn cap_rejects_tangential_entry() {
        let e = PolarPoint::new(R0, 0.0);
        let d = TangentVector {
            base: e,
            v_r: 0.0,
            v_theta: 1.0,
        };
        assert!(cap_transit(e, &d).is_err());
        let out = TangentVector {
            base: e,
            v_r: 0.6,
            v_theta: 0.8,
        };
        assert!(cap_transit(e, &out).is_err());
    }

    #[test]
    fn unperturbed_shoot_is_radial() {
        let s = spec(0.0);
        let arc = band_shoot(&s, 0.7).unwrap();
        assert!((arc.length - FRAC_PI_4).abs() < 1e-15);
        for smp in &arc.samples {
            assert!((smp.point.r - (R0 + smp.s)).abs() < 1e-14);
            assert!((smp.point.theta - 0.7).abs() < 1e-14);
        }
        let arc = band_shoot(&spec(0.1), 1.5 * PI).unwrap();
        assert!((arc.length - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn shoot_conserves_clairaut_and_reaches_r1() {
        let s = spec(0.1);
        let theta = 0.6;
        let arc = band_shoot(&s, theta).unwrap();
        let i0 = arc.start_dir.v_theta;
        assert_eq!(i0, s.phi_eps(theta).sin());
        let mut prev_r = 0.0;
        for smp in &arc.samples {
            let f = smp.point.r.sin();
            let i = f * f * smp.dir.v_theta;
            assert!((i - i0).abs() < 1e-12);
            let speed = (smp.dir.v_r.powi(2) + (f * smp.dir.v_theta).powi(2)).sqrt();
            assert!((speed - 1.0).abs() < 1e-12);
            assert!(smp.point.r > prev_r);
            prev_r = smp.point.r;
        }
        assert!((prev_r - R1).abs() < 1e-12);
    }

    #[test]
    fn end_azimuth_matches_clairaut_quadrature() {
        let s = spec(0.1);
        for &theta in &[0.3, 1.0, 2.2, 2.9] {
            let arc = band_shoot(&s, theta).unwrap();
            let i = arc.clairaut();
            let q = integrate(
                |r: f64| {
                    let f = r.sin();
                    i / (f * (f * f - i * i).sqrt())
                },
                R0,
                R1,
                1e-14,
            );
            assert!((arc.end_azimuth() - theta - q.value[0]).abs() < 1e-12);
            let qs = integrate(|r| arc.speed_ratio(r), R0, R1, 1e-14);
            assert!((arc.length - qs.value[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_derivatives_match_differences() {
        let h = 1e-6;
        let r = 2.1;
        for &phi in &[-0.08, 0.03, 0.1] {
            let a = GreatCircleArc::shoot(0.0, phi).unwrap();
            let ap = GreatCircleArc::shoot(0.0, phi + h).unwrap();
            let am = GreatCircleArc::shoot(0.0, phi - h).unwrap();
            let fd = (ap.arclength_at_radius(r) - am.arclength_at_radius(r)) / (2.0 * h);
            assert!((a.arclength_dphi(r) - fd).abs() < 1e-8);
            let fd = (ap.speed_ratio(r) - am.speed_ratio(r)) / (2.0 * h);
            assert!((a.speed_ratio_dphi(r) - fd).abs() < 1e-8);
            let fd = (a.azimuth_at_radius(r + h) - a.azimuth_at_radius(r - h)) / (2.0 * h);
            assert!((a.dazimuth_dr(r) - fd).abs() < 1e-8);
            let fd = (ap.azimuth_at_radius(r) - am.azimuth_at_radius(r)) / (2.0 * h);
            assert!((a.profile().azimuth_offset_dphi(r) - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn transversality() {
        assert!(transversality_check(&spec(0.0), 1024, 64));
        assert!(transversality_check(&spec(0.1), 1024, 64));
        assert!(!transversality_check(&spec(1.5), 1024, 64));
    }
}
