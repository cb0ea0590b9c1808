//! The deflection profile `φ`, its scaled family `φ_ε = εφ`, and the leaf
//! length `l_ε(θ) = π/4 - ∫₀^θ sin φ_ε`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use crate::numerics::quadrature::{integrate, GaussLegendre};
use crate::numerics::roots::golden_max;
use crate::report::{Check, Report};
use crate::{wrap_angle, Error, Result, TAU};

const LEAF_TOL: f64 = 1e-12;

/// Parameters of the deflection profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeflectionParams {
    /// Peak of `|φ|` before scaling by `ε`.
    pub amplitude: f64,
    pub epsilon: f64,
    /// The constant `c` in `exp(-c / (θ(π-θ)))`; smaller is less flat near
    /// `0` and `π`.
    pub flatness: f64,
    /// Number of panels in the cumulative leaf-length table.
    pub quadrature_nodes: usize,
}

impl Default for DeflectionParams {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            epsilon: 0.1,
            flatness: 0.25,
            quadrature_nodes: 1024,
        }
    }
}

/// `φ(θ) = A sin(2θ) exp(-c/(θ(π-θ))) / N` on `(0, π)`, zero elsewhere on the
/// circle, with `N` chosen so that `max|φ| = A`.
#[derive(Debug, Clone)]
pub struct DeflectionSpec {
    params: DeflectionParams,
    scale: f64,
    table: LeafTable,
}

impl DeflectionSpec {
    pub fn new(params: DeflectionParams) -> Result<Self> {
        if !(params.amplitude > 0.0 && params.amplitude.is_finite()) {
            return Err(Error::Invalid(format!(
                "amplitude {} must be positive",
                params.amplitude
            )));
        }
        if !(params.flatness > 0.0 && params.flatness.is_finite()) {
            return Err(Error::Invalid(format!("flatness {} must be positive", params.flatness)));
        }
        if !params.epsilon.is_finite() {
            return Err(Error::Invalid("epsilon must be finite".into()));
        }
        if params.quadrature_nodes < 16 {
            return Err(Error::Invalid("need at least 16 quadrature panels".into()));
        }
        let c = params.flatness;
        let (_, peak) = golden_max(|t| raw_shape(c, t), 0.0, FRAC_PI_2, 1e-12);
        let scale = params.amplitude / peak;
        let mut spec = Self {
            params,
            scale,
            table: LeafTable::default(),
        };
        spec.table = LeafTable::build(&spec, params.quadrature_nodes);
        Ok(spec)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(DeflectionParams { epsilon, ..self.params })
    }

    pub fn params(&self) -> &DeflectionParams {
        &self.params
    }

    pub fn epsilon(&self) -> f64 {
        self.params.epsilon
    }

    /// Unscaled `φ(θ)`.
    pub fn phi(&self, theta: f64) -> f64 {
        self.phi_jet(theta)[0]
    }

    /// `φ_ε(θ)`.
    pub fn phi_eps(&self, theta: f64) -> f64 {
        self.params.epsilon * self.phi(theta)
    }

    /// `[φ, φ']` (unscaled).
    pub fn phi_jet(&self, theta: f64) -> [f64; 2] {
        let t = wrap_angle(theta);
        if t <= 0.0 || t >= PI {
            return [0.0, 0.0];
        }
        // Offsets from π/2 keep the antisymmetry exact in floating point.
        let u = t - FRAC_PI_2;
        let c = self.params.flatness;
        let q = 0.25 * PI * PI - u * u;
        let e = (-c / q).exp();
        if e == 0.0 {
            return [0.0, 0.0];
        }
        let de = e * c * (-2.0 * u) / (q * q);
        let (s2, c2) = (2.0 * u).sin_cos();
        [-self.scale * s2 * e, -self.scale * (2.0 * c2 * e + s2 * de)]
    }

    /// `[φ_ε, φ_ε']`.
    pub fn phi_eps_jet(&self, theta: f64) -> [f64; 2] {
        let [p, dp] = self.phi_jet(theta);
        [self.params.epsilon * p, self.params.epsilon * dp]
    }

    /// `l_ε(θ)` from the cumulative table; errors if it is not positive.
    pub fn leaf_length(&self, theta: f64) -> Result<f64> {
        let l = self.leaf_length_unchecked(theta);
        if l > 0.0 {
            Ok(l)
        } else {
            Err(Error::Invalid(format!(
                "leaf length {l} at θ = {theta} is not positive; epsilon too large"
            )))
        }
    }

    pub fn leaf_length_unchecked(&self, theta: f64) -> f64 {
        FRAC_PI_4 - self.table.integral(self, wrap_angle(theta))
    }

    /// `l_ε'(θ) = -sin φ_ε(θ)`.
    pub fn leaf_length_derivative(&self, theta: f64) -> f64 {
        -self.phi_eps(theta).sin()
    }

    /// Direct adaptive evaluation of `l_ε(θ)`, independent of the table.
    pub fn leaf_length_adaptive(&self, theta: f64) -> f64 {
        let t = wrap_angle(theta).min(PI);
        FRAC_PI_4 - integrate(|x| self.phi_eps(x).sin(), 0.0, t, LEAF_TOL).value[0]
    }

    pub fn max_abs_phi_eps(&self) -> f64 {
        self.params.amplitude * self.params.epsilon.abs()
    }

    /// Checks the structural properties of `φ_ε` and `l_ε`.
    /// Checks `φ_ε`, except that the support condition is read off the base
    /// shape `φ`, since `ε = 0` is a legitimate (trivial) deflection.
    pub fn validate(&self) -> Report {
        const SUPPORT: &str = "nonzero off pi/2 in (0, pi)";
        let base = validate_profile(&|t| self.phi(t), 1000);
        let mut report = validate_profile(&|t| self.phi_eps(t), 1000);
        for c in report.checks.iter_mut().filter(|c| c.name == SUPPORT) {
            *c = base.get(SUPPORT).cloned().expect("support check present");
        }
        report
    }
}

fn raw_shape(c: f64, theta: f64) -> f64 {
    if theta <= 0.0 || theta >= PI {
        return 0.0;
    }
    (2.0 * theta).sin() * (-c / (theta * (PI - theta))).exp()
}

/// Cumulative `∫ sin φ_ε` at uniform panel edges on `[0, π]`; in-panel
/// remainders use a 15-point Gauss rule.
#[derive(Debug, Clone, Default)]
struct LeafTable {
    width: f64,
    cumulative: Vec<f64>,
    rule: Option<GaussLegendre>,
}

impl LeafTable {
    fn build(spec: &DeflectionSpec, panels: usize) -> Self {
        let width = PI / panels as f64;
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        let tol = LEAF_TOL / panels as f64;
        for k in 0..panels {
            let a = k as f64 * width;
            acc += integrate(|x| spec.phi_eps(x).sin(), a, a + width, tol).value[0];
            cumulative.push(acc);
        }
        Self {
            width,
            cumulative,
            rule: Some(GaussLegendre::new(15)),
        }
    }

    fn integral(&self, spec: &DeflectionSpec, theta: f64) -> f64 {
        let n = self.cumulative.len() - 1;
        if theta >= PI {
            return self.cumulative[n];
        }
        let k = ((theta / self.width) as usize).min(n - 1);
        let a = k as f64 * self.width;
        let rule = self.rule.as_ref().expect("table built");
        self.cumulative[k] + rule.integrate(a, theta, |x| spec.phi_eps(x).sin())
    }
}

/// Validation of an arbitrary (already scaled) deflection profile.
pub fn validate_profile(phi: &dyn Fn(f64) -> f64, samples: usize) -> Report {
    let mut report = Report::default();
    let n = samples.max(8);

    let anti = (1..n)
        .map(|i| {
            let t = FRAC_PI_2 * i as f64 / n as f64;
            (phi(FRAC_PI_2 + t) + phi(FRAC_PI_2 - t)).abs()
        })
        .fold(0.0, f64::max);
    report.push(Check::below("antisymmetry", anti, 1e-14));

    let mut off_support = 0.0f64;
    let mut interior_zeros = 0usize;
    for i in 0..=n {
        let t = PI + PI * i as f64 / n as f64;
        off_support = off_support.max(phi(t).abs());
    }
    for i in 1..n {
        let t = PI * i as f64 / n as f64;
        if (t - FRAC_PI_2).abs() > 1e-12 && phi(t) == 0.0 {
            interior_zeros += 1;
        }
    }
    let centre = phi(FRAC_PI_2).abs();
    report.push(Check::below("zero on [pi, 2pi]", off_support, 1e-300));
    report.push(Check::below("nonzero off pi/2 in (0, pi)", interior_zeros as f64, 0.5));
    report.push(Check::below("zero at pi/2", centre, 1e-300));

    let mut peak = 0.0f64;
    for i in 0..=4 * n {
        peak = peak.max(phi(TAU * i as f64 / (4 * n) as f64).abs());
    }
    report.push(Check {
        name: "amplitude below pi/4".into(),
        passed: peak < FRAC_PI_4,
        residual: peak,
        tolerance: FRAC_PI_4,
    });

    let mut acc = 0.0;
    let mut min_len = f64::INFINITY;
    for i in 0..n {
        let a = TAU * i as f64 / n as f64;
        let b = TAU * (i + 1) as f64 / n as f64;
        acc += integrate(|x| phi(x).sin(), a, b, LEAF_TOL / n as f64).value[0];
        min_len = min_len.min(FRAC_PI_4 - acc);
    }
    report.push(Check {
        name: "leaf length positive".into(),
        passed: min_len > 0.0,
        residual: min_len,
        tolerance: 0.0,
    });
    report.push(Check::below("zero mean of sin phi", acc.abs(), 1e-12));
    report
}
