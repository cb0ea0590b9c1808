//! Leaf parameterization `Φ_ε(s, θ₀)` of the interpolated foliation and its
//! reversal `Φ̃_ε(s, θ₀) = Φ_ε(l_ε(θ₀) - s, θ₀)`.
//!
//! A leaf starting at `(R₀, θ₀)` is the great circle shot at angle
//! `φ = φ_ε(θ₀)` until the blend `λ(r)` switches on, after which its azimuth
//! is `θ₀ + (1-λ(r)) Δ(r, φ)` and it ends radially. Along the leaf the
//! parameter grows at rate
//!
//! `σ(r) = σ_g + λ (1 - σ_g) + κ λ'`
//!
//! where `σ_g` is the great-circle rate. This equals `σ_g` near `R₀`, equals
//! one near `R₁`, and the constant `κ` makes the total parameter `l_ε(θ₀)`.

use std::sync::Arc;

use crate::deflection::DeflectionSpec;
use crate::foliation::TFoliation;
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::SmoothStep;
use crate::sphere_geodesics::ArcProfile;
use crate::{Error, Result, R0, R1, TAU};

const PANEL: f64 = 0.02;

/// Closed-form description of the leaves, shared by construction and
/// verification.
#[derive(Debug, Clone)]
pub struct LeafModel {
    spec: DeflectionSpec,
    blend: SmoothStep,
    delta: f64,
    rule: GaussLegendre,
}

/// Per-leaf constants.
#[derive(Debug, Clone, Copy)]
pub struct Leaf {
    pub theta0: f64,
    pub phi: f64,
    pub dphi: f64,
    pub length: f64,
    pub dlength: f64,
    pub kappa: f64,
    pub dkappa: f64,
    arc: ArcProfile,
}

/// Position of a leaf at radius `r` with the derivatives the metric needs.
#[derive(Debug, Clone, Copy)]
pub struct LeafPoint {
    pub r: f64,
    /// Forward parameter `S(r)`.
    pub s: f64,
    /// `σ = dS/dr`.
    pub sigma: f64,
    /// `∂S/∂θ₀` at fixed `r`.
    pub s_theta0: f64,
    /// Continuous azimuth `ψ(r, θ₀)`.
    pub psi: f64,
    pub psi_r: f64,
    pub psi_theta0: f64,
}

/// Tangent frame `∂Φ/∂s`, `∂Φ/∂θ₀` in `(r, θ)` components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub e_s: [f64; 2],
    pub e_theta0: [f64; 2],
}

impl LeafModel {
    pub fn new(spec: DeflectionSpec, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && 3.0 * delta <= R1 - R0 + 1e-12) {
            return Err(Error::Invalid(format!(
                "collar width {delta} must be positive and at most (R₁-R₀)/3"
            )));
        }
        Ok(Self {
            spec,
            blend: SmoothStep::new(R0 + delta, R1 - delta),
            delta,
            rule: GaussLegendre::new(10),
        })
    }

    pub fn spec(&self) -> &DeflectionSpec {
        &self.spec
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// `λ(r)`: zero up to `R₀+δ`, one from `R₁-δ`.
    pub fn blend(&self) -> &SmoothStep {
        &self.blend
    }

    /// `∫_{R₀+δ}^{b} λ (1-σ_g)` and `∫ λ ∂σ_g/∂φ` from `a` to `b`.
    fn blend_integrals(&self, arc: &ArcProfile, a: f64, b: f64) -> (f64, f64) {
        if b <= a {
            return (0.0, 0.0);
        }
        let panels = ((b - a) / PANEL).ceil().max(1.0) as usize;
        let w = (b - a) / panels as f64;
        let (mut ia, mut ib) = (0.0, 0.0);
        for p in 0..panels {
            let lo = a + p as f64 * w;
            for (x, wt) in self.rule.on(lo, lo + w) {
                let lam = self.blend.value(x);
                ia += wt * lam * (1.0 - arc.speed_ratio(x));
                ib += wt * lam * arc.speed_ratio_dphi(x);
            }
        }
        (ia, ib)
    }

    pub fn leaf(&self, theta0: f64) -> Leaf {
        let [phi, dphi] = self.spec.phi_eps_jet(theta0);
        let length = self.spec.leaf_length_unchecked(theta0);
        let dlength = -phi.sin();
        let arc = ArcProfile::new(phi);
        let m = R1 - self.delta;
        let (a_m, b_m) = self.blend_integrals(&arc, R0 + self.delta, m);
        let kappa = length - self.delta - arc.arclength(m) - a_m;
        let dkappa = dlength - (arc.arclength_dphi(m) - b_m) * dphi;
        Leaf {
            theta0,
            phi,
            dphi,
            length,
            dlength,
            kappa,
            dkappa,
            arc,
        }
    }

    /// `ψ(r, θ₀)` and `∂ψ/∂θ₀`, without the parameter integrals.
    pub fn azimuth(&self, theta0: f64, r: f64) -> (f64, f64) {
        let [phi, dphi] = self.spec.phi_eps_jet(theta0);
        let arc = ArcProfile::new(phi);
        let keep = 1.0 - self.blend.value(r);
        if keep == 0.0 {
            return (theta0, 1.0);
        }
        (
            theta0 + keep * arc.azimuth_offset(r),
            1.0 + keep * arc.azimuth_offset_dphi(r) * dphi,
        )
    }

    /// Start azimuth of the leaf through `(r, θ)`, refining `guess`.
    pub fn leaf_through(&self, r: f64, theta: f64, guess: f64) -> f64 {
        let mut x = guess;
        for _ in 0..50 {
            let (p, dp) = self.azimuth(x, r);
            let step = (p - theta) / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        x
    }

    pub fn at_radius(&self, leaf: &Leaf, r: f64) -> LeafPoint {
        let arc = &leaf.arc;
        let lo = R0 + self.delta;
        let hi = R1 - self.delta;
        if r >= hi {
            return LeafPoint {
                r,
                s: leaf.length - (R1 - r),
                sigma: 1.0,
                s_theta0: leaf.dlength,
                psi: leaf.theta0,
                psi_r: 0.0,
                psi_theta0: 1.0,
            };
        }
        let sg = arc.arclength(r);
        let sg_phi = arc.arclength_dphi(r);
        let sigma_g = arc.speed_ratio(r);
        let off = arc.azimuth_offset(r);
        let off_r = arc.dazimuth_dr(r);
        let off_phi = arc.azimuth_offset_dphi(r);
        if r <= lo {
            return LeafPoint {
                r,
                s: sg,
                sigma: sigma_g,
                s_theta0: sg_phi * leaf.dphi,
                psi: leaf.theta0 + off,
                psi_r: off_r,
                psi_theta0: 1.0 + off_phi * leaf.dphi,
            };
        }
        let (a, b) = self.blend_integrals(arc, lo, r);
        let [lam, dlam, _] = self.blend.jet(r);
        LeafPoint {
            r,
            s: sg + a + leaf.kappa * lam,
            sigma: sigma_g + lam * (1.0 - sigma_g) + leaf.kappa * dlam,
            s_theta0: (sg_phi - b) * leaf.dphi + leaf.dkappa * lam,
            psi: leaf.theta0 + (1.0 - lam) * off,
            psi_r: (1.0 - lam) * off_r - dlam * off,
            psi_theta0: 1.0 + (1.0 - lam) * off_phi * leaf.dphi,
        }
    }

    /// Radius at forward parameter `s ∈ [0, l]` along `leaf`.
    pub fn radius_at(&self, leaf: &Leaf, s: f64) -> f64 {
        if s >= leaf.length - self.delta {
            return R1 - (leaf.length - s);
        }
        // Bottom collar: invert the great-circle arclength directly.
        let r_lo = R0 + self.delta;
        if s <= leaf.arc.arclength(r_lo) {
            let x = -leaf.arc.phi().cos() * s.sin();
            return x.clamp(-1.0, 1.0).acos();
        }
        let (mut lo, mut hi) = (r_lo, R1 - self.delta);
        let mut r = 0.5 * (lo + hi);
        for _ in 0..100 {
            let p = self.at_radius(leaf, r);
            let g = p.s - s;
            if g > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let mut next = r - g / p.sigma;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - r).abs() < 1e-15 {
                return next;
            }
            r = next;
        }
        r
    }

    /// Frame of `Φ` (or of `Φ̃` when `reversed`) at the leaf point.
    pub fn frame(&self, leaf: &Leaf, p: &LeafPoint, reversed: bool) -> Frame {
        let inv = 1.0 / p.sigma;
        if reversed {
            let rt = (leaf.dlength - p.s_theta0) * inv;
            Frame {
                e_s: [-inv, -p.psi_r * inv],
                e_theta0: [rt, p.psi_theta0 + p.psi_r * rt],
            }
        } else {
            let rt = -p.s_theta0 * inv;
            Frame {
                e_s: [inv, p.psi_r * inv],
                e_theta0: [rt, p.psi_theta0 + p.psi_r * rt],
            }
        }
    }
}

/// One sample of the (possibly reversed) parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSample {
    pub s: f64,
    pub r: f64,
    pub theta: f64,
    pub frame: Frame,
}

#[derive(Debug, Clone)]
struct LeafSamples {
    theta0: f64,
    length: f64,
    forward: Vec<PhiSample>,
    // Frames of the reversed map at the same points.
    reversed: Vec<Frame>,
}

/// Sampled `Φ_ε` over a grid of leaves, backed by the closed-form model.
#[derive(Debug, Clone)]
pub struct PhiMap {
    model: Arc<LeafModel>,
    foliation: Arc<TFoliation>,
    leaves: Arc<Vec<LeafSamples>>,
    reversed: bool,
}

impl PhiMap {
    pub fn model(&self) -> &LeafModel {
        &self.model
    }

    pub fn foliation(&self) -> &TFoliation {
        &self.foliation
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves.len()
    }

    pub fn samples_per_leaf(&self) -> usize {
        self.leaves[0].forward.len()
    }

    pub fn theta0(&self, i: usize) -> f64 {
        self.leaves[i].theta0
    }

    pub fn leaf_length(&self, i: usize) -> f64 {
        self.leaves[i].length
    }

    /// Sample `j` of leaf `i`, ordered by the current parameter.
    pub fn sample(&self, i: usize, j: usize) -> PhiSample {
        let leaf = &self.leaves[i];
        if !self.reversed {
            return leaf.forward[j];
        }
        let k = leaf.forward.len() - 1 - j;
        let f = leaf.forward[k];
        PhiSample {
            s: leaf.length - f.s,
            frame: leaf.reversed[k],
            ..f
        }
    }

    /// `Φ(s, θ₀)` in the current orientation, as `(r, continuous θ)`.
    pub fn point(&self, s: f64, theta0: f64) -> (f64, f64) {
        let leaf = self.model.leaf(theta0);
        let fwd = if self.reversed { leaf.length - s } else { s };
        let r = self.model.radius_at(&leaf, fwd);
        (r, self.model.azimuth(theta0, r).0)
    }

    pub fn frame_at(&self, s: f64, theta0: f64) -> Frame {
        let leaf = self.model.leaf(theta0);
        let fwd = if self.reversed { leaf.length - s } else { s };
        let r = self.model.radius_at(&leaf, fwd);
        let p = self.model.at_radius(&leaf, r);
        self.model.frame(&leaf, &p, self.reversed)
    }
}

/// Parameterizes the leaves of the interpolated foliation `F`.
pub fn build_phi(
    foliation: TFoliation,
    spec: &DeflectionSpec,
    delta: f64,
    n_leaves: usize,
    samples_per_leaf: usize,
) -> Result<PhiMap> {
    let model = LeafModel::new(spec.clone(), delta)?;
    let radii = foliation.radii();
    if (radii[0] - R0).abs() > 1e-12 || (radii[radii.len() - 1] - R1).abs() > 1e-12 {
        return Err(Error::Invalid("foliation must span [R₀, R₁]".into()));
    }
    // The sampled foliation must be the one the model describes.
    let probe = 64.min(foliation.nodes());
    let mut mismatch = 0.0f64;
    for k in (0..radii.len()).step_by((radii.len() / 16).max(1)) {
        for i in 0..probe {
            let t = TAU * (i as f64 + 0.5) / probe as f64;
            let a = foliation.lift(k).eval(t);
            mismatch = mismatch.max((a - model.azimuth(t, radii[k]).0).abs());
        }
    }
    if mismatch > 1e-6 {
        return Err(Error::Invalid(format!(
            "foliation differs from the blended great-circle leaves by {mismatch:.3e}"
        )));
    }
    let n_s = samples_per_leaf.max(2);
    let mut leaves = Vec::with_capacity(n_leaves);
    for i in 0..n_leaves {
        let theta0 = TAU * i as f64 / n_leaves as f64;
        let leaf = model.leaf(theta0);
        if !(leaf.length > 0.0) {
            return Err(Error::Invalid(format!("leaf length at θ₀ = {theta0} is not positive")));
        }
        // EA.8-type coverage: the collar [0, δ] reaches at least R₀ + δ/2.
        if model.radius_at(&leaf, delta) < R0 + 0.5 * delta {
            return Err(Error::Numerical(format!(
                "collar at θ₀ = {theta0} does not cover R₀+δ/2"
            )));
        }
        // Speed positivity on a fine radial sweep.
        for k in 0..=256 {
            let r = R0 + (R1 - R0) * k as f64 / 256.0;
            let p = model.at_radius(&leaf, r);
            if !(p.sigma > 0.0) {
                return Err(Error::Numerical(format!(
                    "blended leaf speed {} at (r, θ₀) = ({r}, {theta0}) is not positive",
                    p.sigma
                )));
            }
        }
        let mut forward = Vec::with_capacity(n_s);
        let mut reversed = Vec::with_capacity(n_s);
        for j in 0..n_s {
            let r = R0 + (R1 - R0) * j as f64 / (n_s - 1) as f64;
            let p = model.at_radius(&leaf, r);
            forward.push(PhiSample {
                s: p.s,
                r,
                theta: p.psi,
                frame: model.frame(&leaf, &p, false),
            });
            reversed.push(model.frame(&leaf, &p, true));
        }
        leaves.push(LeafSamples {
            theta0,
            length: leaf.length,
            forward,
            reversed,
        });
    }
    Ok(PhiMap {
        model: Arc::new(model),
        foliation: Arc::new(foliation),
        leaves: Arc::new(leaves),
        reversed: false,
    })
}

/// `Φ̃(s, θ₀) = Φ(l(θ₀) - s, θ₀)`.
pub fn reverse_phi(p: &PhiMap) -> PhiMap {
    PhiMap {
        reversed: !p.reversed,
        ..p.clone()
    }
}
