//! The unperturbed metric `dr² + f(r)² dθ²`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::numerics::SmoothStep;
use crate::{wrap_angle, Error, Result, R1};

/// Warping function: `sin r` up to `blend_start`, then a smooth hand-over to
/// an exponential tail `sin(blend_start) e^{-tail_rate (r - blend_start)}`
/// that is complete on `[blend_end, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileFunction {
    blend_start: f64,
    blend_end: f64,
    tail_rate: f64,
    step: SmoothStep,
}

impl Default for ProfileFunction {
    fn default() -> Self {
        Self::new(R1, PI, 1.0).expect("default profile is valid")
    }
}

impl ProfileFunction {
    /// Builds the profile and checks positivity and monotone decay on a
    /// sample grid past the equator.
    pub fn new(blend_start: f64, blend_end: f64, tail_rate: f64) -> Result<Self> {
        if !(blend_start >= R1 && blend_end > blend_start) {
            return Err(Error::Invalid(format!(
                "profile blend [{blend_start}, {blend_end}] must start at or after 3π/4"
            )));
        }
        if !(tail_rate > 0.0 && tail_rate.is_finite()) {
            return Err(Error::Invalid(format!("tail rate {tail_rate} must be positive")));
        }
        let p = Self {
            blend_start,
            blend_end,
            tail_rate,
            step: SmoothStep::new(blend_start, blend_end),
        };
        p.check_shape()?;
        Ok(p)
    }

    pub fn blend_start(&self) -> f64 {
        self.blend_start
    }

    pub fn blend_end(&self) -> f64 {
        self.blend_end
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    fn check_shape(&self) -> Result<()> {
        let r_hi = self.blend_end + 40.0 / self.tail_rate;
        let n = 20_000;
        for i in 1..=n {
            let r = FRAC_PI_2 + (r_hi - FRAC_PI_2) * i as f64 / n as f64;
            let [f, df, _] = self.jet(r);
            if !(f > 0.0) || !(df < 0.0) {
                return Err(Error::Invalid(format!(
                    "profile not positive and decreasing at r = {r} (f = {f}, f' = {df})"
                )));
            }
        }
        Ok(())
    }

    /// `[f, f', f'']` at `r > 0`. Callers must ensure `r > 0`.
    pub fn jet(&self, r: f64) -> [f64; 3] {
        let (s, c) = r.sin_cos();
        if r <= self.blend_start {
            return [s, c, -s];
        }
        let k = self.tail_rate;
        let e = self.blend_start.sin() * (-k * (r - self.blend_start)).exp();
        let tail = [e, -k * e, k * k * e];
        if r >= self.blend_end {
            return tail;
        }
        let sph = [s, c, -s];
        let [b, b1, b2] = self.step.jet(r);
        let d0 = tail[0] - sph[0];
        let d1 = tail[1] - sph[1];
        let d2 = tail[2] - sph[2];
        [
            sph[0] + b * d0,
            sph[1] + b * d1 + b1 * d0,
            sph[2] + b * d2 + 2.0 * b1 * d1 + b2 * d0,
        ]
    }

    /// `f`, `f'` or `f''` at `r`.
    pub fn eval(&self, r: f64, order: u8) -> Result<f64> {
        check_radius(r)?;
        match order {
            0..=2 => Ok(self.jet(r)[order as usize]),
            _ => Err(Error::Invalid(format!("derivative order {order} not in 0..=2"))),
        }
    }

    pub fn gaussian_curvature(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        let [f, _, f2] = self.jet(r);
        Ok(-f2 / f)
    }

    /// Clairaut integral `f(r)² v_θ` of a unit vector.
    pub fn clairaut(&self, v: &TangentVector) -> Result<f64> {
        check_radius(v.base.r)?;
        let f = self.jet(v.base.r)[0];
        let speed2 = v.v_r * v.v_r + f * f * v.v_theta * v.v_theta;
        if (speed2 - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("vector is not unit speed (|v|² = {speed2})")));
        }
        Ok(f * f * v.v_theta)
    }

    pub fn christoffel(&self, r: f64) -> Result<Christoffel> {
        check_radius(r)?;
        let [f, df, _] = self.jet(r);
        Ok(Christoffel {
            r_thth: -f * df,
            th_rth: df / f,
        })
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius {r} must be positive")))
    }
}

/// Non-zero Christoffel symbols of a warped product; `Γ^r_rr`, `Γ^r_rθ`,
/// `Γ^θ_rr` and `Γ^θ_θθ` vanish.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel {
    /// `Γ^r_θθ = -f f'`
    pub r_thth: f64,
    /// `Γ^θ_rθ = f'/f`
    pub th_rth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    /// Reduces `theta` into `[0, 2π)`; the pole gets azimuth 0.
    pub fn new(r: f64, theta: f64) -> Self {
        if r == 0.0 {
            return Self { r, theta: 0.0 };
        }
        Self {
            r,
            theta: wrap_angle(theta),
        }
    }

    pub fn planar(&self) -> [f64; 2] {
        [self.r * self.theta.cos(), self.r * self.theta.sin()]
    }
}

/// Coefficients of a tangent vector on `∂_r` and `∂_θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: PolarPoint,
    pub v_r: f64,
    pub v_theta: f64,
}

impl TangentVector {
    /// Unit vector making angle `angle` with `∂_r`, rotating towards `∂_θ`.
    pub fn at_angle(profile: &ProfileFunction, base: PolarPoint, angle: f64) -> Self {
        let f = profile.jet(base.r)[0];
        Self {
            base,
            v_r: angle.cos(),
            v_theta: angle.sin() / f,
        }
    }

    pub fn norm(&self, profile: &ProfileFunction) -> f64 {
        let f = profile.jet(self.base.r)[0];
        (self.v_r * self.v_r + f * f * self.v_theta * self.v_theta).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn sphere_region_is_exact() {
        let p = ProfileFunction::default();
        assert_eq!(p.eval(FRAC_PI_2, 0).unwrap(), 1.0);
        assert!((p.eval(FRAC_PI_4, 0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        for i in 1..=1000 {
            let r = R1 * i as f64 / 1000.0;
            let [f, df, d2f] = p.jet(r);
            assert_eq!(f, r.sin());
            assert_eq!(df, r.cos());
            assert_eq!(d2f, -r.sin());
            assert!((p.gaussian_curvature(r).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn tail_derivatives_match_central_differences() {
        let p = ProfileFunction::default();
        let h = 1e-6;
        for &r in &[2.4, 2.6, 2.8, 3.0, 3.1, 3.5, 6.0] {
            let [_, df, d2f] = p.jet(r);
            let fd1 = fd(|x| p.jet(x)[0], r, h);
            let fd2 = fd(|x| p.jet(x)[1], r, h);
            assert!((df - fd1).abs() < 1e-8, "r={r}: {df} vs {fd1}");
            assert!((d2f - fd2).abs() < 1e-7, "r={r}: {d2f} vs {fd2}");
        }
        assert!(p.eval(3.0, 1).unwrap() < 0.0);
        // Curvature from the closed tail form at r = 6: f'' / f = rate².
        assert!((p.gaussian_curvature(6.0).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn continuity_across_blend_ends() {
        let p = ProfileFunction::default();
        for &x in &[p.blend_start(), p.blend_end()] {
            let a = p.jet(x - 1e-9);
            let b = p.jet(x + 1e-9);
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 1e-7, "order {k} jumps at {x}");
            }
        }
    }

    #[test]
    fn decays_to_zero() {
        let p = ProfileFunction::default();
        assert!(p.eval(40.0, 0).unwrap() < 1e-15);
        let mut prev = p.jet(FRAC_PI_2 + 1e-6)[0];
        for i in 1..4000 {
            let r = FRAC_PI_2 + i as f64 * 0.005;
            let f = p.jet(r)[0];
            assert!(f < prev && f > 0.0);
            prev = f;
        }
    }

    #[test]
    fn domain_errors() {
        let p = ProfileFunction::default();
        assert!(matches!(p.eval(0.0, 0), Err(Error::Domain(_))));
        assert!(matches!(p.gaussian_curvature(-1.0), Err(Error::Domain(_))));
        assert!(matches!(p.christoffel(0.0), Err(Error::Domain(_))));
        assert!(ProfileFunction::new(2.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn clairaut_values() {
        let p = ProfileFunction::default();
        let base = PolarPoint::new(FRAC_PI_2, 0.3);
        let radial = TangentVector::at_angle(&p, PolarPoint::new(4.0, 1.0), 0.0);
        assert_eq!(p.clairaut(&radial).unwrap(), 0.0);
        let tangential = TangentVector::at_angle(&p, base, FRAC_PI_2);
        assert!((p.clairaut(&tangential).unwrap() - 1.0).abs() < 1e-15);
        let diag = TangentVector::at_angle(&p, base, FRAC_PI_4);
        assert!((p.clairaut(&diag).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        let bad = TangentVector {
            base,
            v_r: 1.0,
            v_theta: 1.0,
        };
        assert!(p.clairaut(&bad).is_err());
    }

    #[test]
    fn christoffels_match_metric_derivatives() {
        let p = ProfileFunction::default();
        let c = p.christoffel(FRAC_PI_2).unwrap();
        assert!(c.r_thth.abs() < 1e-16);
        let c = p.christoffel(FRAC_PI_4).unwrap();
        assert!((c.r_thth + 0.5).abs() < 1e-15);
        // Γ^r_θθ = -½ ∂_r g_θθ, Γ^θ_rθ = ½ g_θθ⁻¹ ∂_r g_θθ.
        let gthth = |r: f64| p.jet(r)[0].powi(2);
        for &r in &[2.5, 3.0, 5.0] {
            let c = p.christoffel(r).unwrap();
            let d = fd(gthth, r, 1e-6);
            assert!((c.r_thth + 0.5 * d).abs() < 1e-9 * d.abs().max(1e-3));
            assert!((c.th_rth - 0.5 * d / gthth(r)).abs() < 1e-7);
        }
    }

    #[test]
    fn great_circle_clairaut_constant() {
        // Great circle through (π/2, 0) tilted by α from the equator; in 3-space
        // x(s) = P cos s + T sin s with P = e1 and T = (0, cos α, sin α).
        let p = ProfileFunction::default();
        let alpha = 0.7f64;
        let mut first = None;
        for i in 0..200 {
            let s = i as f64 * 0.031;
            let x = [s.cos(), s.sin() * alpha.cos(), s.sin() * alpha.sin()];
            let v = [-s.sin(), s.cos() * alpha.cos(), s.cos() * alpha.sin()];
            let r = x[2].acos();
            let i_val = x[0] * v[1] - x[1] * v[0];
            // I = f² θ' equals the z-component of x × v.
            let th_dot = i_val / (x[0] * x[0] + x[1] * x[1]);
            let vr = -v[2] / r.sin();
            let tv = TangentVector {
                base: PolarPoint::new(r, x[1].atan2(x[0])),
                v_r: vr,
                v_theta: th_dot,
            };
            let ci = p.clairaut(&tv).unwrap();
            let c0 = *first.get_or_insert(ci);
            assert!((ci - c0).abs() < 1e-12);
        }
        assert!((first.unwrap() - alpha.cos()).abs() < 1e-12);
    }

    #[test]
    fn cap_gauss_bonnet_closed_form() {
        // ∫K dA over r ≤ R plus the boundary geodesic curvature f'/f · f · 2π.
        let p = ProfileFunction::default();
        for &rr in &[0.5, 1.0, 2.0, 2.3] {
            let area = 2.0
                * PI
                * crate::numerics::quadrature::integrate(
                    |r| p.gaussian_curvature(r).unwrap() * p.jet(r)[0],
                    1e-12,
                    rr,
                    1e-13,
                )
                .value[0];
            let boundary = 2.0 * PI * p.jet(rr)[1];
            assert!((area + boundary - 2.0 * PI).abs() < 1e-10);
        }
    }
}
