//! Foliations of the band transverse to the circles `{r} × S¹`, stored as
//! the family of circle maps `S(r)` that carry the start azimuth of a leaf to
//! its azimuth at radius `r`.

use crate::numerics::spline::hermite;
use crate::numerics::SmoothStep;
use crate::sphere_geodesics::GreatCircleArc;
use crate::{Error, Result, TAU};

/// 2π-periodic function sampled at `n` uniform nodes, interpolated by cubic
/// Hermite segments.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicHermite {
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PeriodicHermite {
    pub fn new(values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert_eq!(values.len(), slopes.len());
        assert!(values.len() >= 8, "need at least 8 nodes");
        Self { values, slopes }
    }

    /// Slopes from sixth-order periodic central differences.
    pub fn from_values(values: Vec<f64>) -> Self {
        let slopes = periodic_derivative(&values);
        Self::new(values, slopes)
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n], vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    fn locate(&self, x: f64) -> (usize, usize, f64) {
        let n = self.values.len();
        let h = self.spacing();
        let u = x.rem_euclid(TAU) / h;
        let i = (u.floor() as usize).min(n - 1);
        (i, (i + 1) % n, u - i as f64)
    }

    /// Value and derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (i, j, t) = self.locate(x);
        hermite(
            self.values[i],
            self.values[j],
            self.slopes[i],
            self.slopes[j],
            self.spacing(),
            t,
        )
    }

    /// `a·self + b·other`, node by node.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.len(), other.len());
        let mix = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(x, y)| a * x + b * y).collect();
        Self::new(mix(&self.values, &other.values), mix(&self.slopes, &other.slopes))
    }
}

fn periodic_derivative(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let h = TAU / n as f64;
    let at = |i: isize| y[i.rem_euclid(n as isize) as usize];
    (0..n as isize)
        .map(|i| {
            (-at(i - 3) + 9.0 * at(i - 2) - 45.0 * at(i - 1) + 45.0 * at(i + 1) - 9.0 * at(i + 2) + at(i + 3))
                / (60.0 * h)
        })
        .collect()
}

/// Lift `x ↦ x + d(x)` of an orientation-preserving circle diffeomorphism of
/// degree one, with `d` 2π-periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleDiffeoLift {
    displacement: PeriodicHermite,
}

impl CircleDiffeoLift {
    pub fn identity(n: usize) -> Self {
        Self {
            displacement: PeriodicHermite::zeros(n),
        }
    }

    /// Lift through the samples `f̃(2πi/n)`, slopes estimated by finite
    /// differences. Fails unless the samples increase strictly and stay
    /// within one period.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let d: Vec<f64> = displacement(values);
        let slopes = periodic_derivative(&d);
        Self::from_displacement(d, slopes)
    }

    /// Lift through samples of `f̃` and `f̃'` at `2πi/n`.
    pub fn from_values_and_slopes(values: &[f64], slopes: &[f64]) -> Result<Self> {
        let d = displacement(values);
        let ds = slopes.iter().map(|m| m - 1.0).collect();
        Self::from_displacement(d, ds)
    }

    fn from_displacement(d: Vec<f64>, mut ds: Vec<f64>) -> Result<Self> {
        let n = d.len();
        let h = TAU / n as f64;
        // Secant slopes of the lift itself.
        let secant: Vec<f64> = (0..n)
            .map(|i| {
                let next = if i + 1 == n { d[0] } else { d[i + 1] };
                1.0 + (next - d[i]) / h
            })
            .collect();
        if let Some(i) = secant.iter().position(|&s| !(s > 0.0)) {
            return Err(Error::Transversality(format!(
                "circle map samples not strictly increasing near node {i}"
            )));
        }
        // Fritsch–Carlson: keep lift slopes positive and inside the
        // monotonicity disc on every interval.
        for i in 0..n {
            let m = 1.0 + ds[i];
            if !(m > 0.0) {
                let prev = secant[(i + n - 1) % n];
                ds[i] = prev.min(secant[i]) - 1.0;
            }
        }
        for i in 0..n {
            let j = (i + 1) % n;
            let a = (1.0 + ds[i]) / secant[i];
            let b = (1.0 + ds[j]) / secant[i];
            let r2 = a * a + b * b;
            if r2 > 9.0 {
                let tau = 3.0 / r2.sqrt();
                ds[i] = tau * a * secant[i] - 1.0;
                ds[j] = tau * b * secant[i] - 1.0;
            }
        }
        Ok(Self {
            displacement: PeriodicHermite::new(d, ds),
        })
    }

    pub fn nodes(&self) -> usize {
        self.displacement.len()
    }

    pub fn displacement(&self) -> &PeriodicHermite {
        &self.displacement
    }

    pub fn eval(&self, x: f64) -> f64 {
        x + self.displacement.eval(x).0
    }

    /// `(f̃(x), f̃'(x))`.
    pub fn eval_with_slope(&self, x: f64) -> (f64, f64) {
        let (d, dd) = self.displacement.eval(x);
        (x + d, 1.0 + dd)
    }

    /// Solves `f̃(x) = y`.
    pub fn invert(&self, y: f64) -> f64 {
        // |d| is bounded by its node values up to interpolation overshoot.
        let dmax = self.displacement.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pad = 2.0 * dmax + 1e-3;
        let (mut lo, mut hi) = (y - pad, y + pad);
        let mut x = y - self.displacement.eval(y).0;
        for _ in 0..100 {
            let (v, d) = self.eval_with_slope(x);
            let g = v - y;
            if g > 0.0 {
                hi = hi.min(x);
            } else {
                lo = lo.max(x);
            }
            let mut next = x - g / d;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() < 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }

    /// `f̃(0) = 0`.
    pub fn is_normalized(&self) -> bool {
        self.displacement.values()[0].abs() < 1e-14
    }

    /// Smallest `f̃'` over the nodes and interval midpoints.
    pub fn min_slope(&self) -> f64 {
        let h = self.displacement.spacing();
        (0..2 * self.nodes())
            .map(|k| self.eval_with_slope(0.5 * h * k as f64).1)
            .fold(f64::INFINITY, f64::min)
    }

    /// `(1-λ) f̃₀ + λ f̃₁`.
    pub fn affine_combination(f0: &Self, f1: &Self, lambda: f64) -> Self {
        Self {
            displacement: f0.displacement.combine(1.0 - lambda, &f1.displacement, lambda),
        }
    }
}

fn displacement(values: &[f64]) -> Vec<f64> {
    let h = TAU / values.len() as f64;
    values.iter().enumerate().map(|(i, v)| v - i as f64 * h).collect()
}

/// A t-foliation sampled at a radial grid: one lift per radius plus the
/// radial derivative of the lifts, for Hermite interpolation across radii.
#[derive(Debug, Clone)]
pub struct TFoliation {
    radii: Vec<f64>,
    lifts: Vec<CircleDiffeoLift>,
    radial: Vec<PeriodicHermite>,
}

impl TFoliation {
    pub fn new(radii: Vec<f64>, lifts: Vec<CircleDiffeoLift>, radial: Vec<PeriodicHermite>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != lifts.len() || radii.len() != radial.len() {
            return Err(Error::Invalid(
                "foliation needs matching radii, lifts and radial data".into(),
            ));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("foliation radii must increase".into()));
        }
        let n = lifts[0].nodes();
        if lifts.iter().any(|l| l.nodes() != n) || radial.iter().any(|d| d.len() != n) {
            return Err(Error::Invalid("all lifts must share one node count".into()));
        }
        Ok(Self { radii, lifts, radial })
    }

    /// Leaves `[R₀, R₁] × {θ}`.
    pub fn radial_foliation(radii: Vec<f64>, nodes: usize) -> Self {
        let m = radii.len();
        Self {
            radii,
            lifts: vec![CircleDiffeoLift::identity(nodes); m],
            radial: vec![PeriodicHermite::zeros(nodes); m],
        }
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn lifts(&self) -> &[CircleDiffeoLift] {
        &self.lifts
    }

    pub fn lift(&self, k: usize) -> &CircleDiffeoLift {
        &self.lifts[k]
    }

    /// Radial derivative of `S(r_k)` as a function of the start azimuth.
    pub fn radial_derivative(&self, k: usize) -> &PeriodicHermite {
        &self.radial[k]
    }

    pub fn nodes(&self) -> usize {
        self.lifts[0].nodes()
    }

    /// Continuous azimuth at radius `r` of the leaf through `(R₀, θ)`.
    pub fn leaf_lookup(&self, theta: f64, r: f64) -> Result<f64> {
        let (lo, hi) = (self.radii[0], *self.radii.last().unwrap());
        if !(r >= lo - 1e-12 && r <= hi + 1e-12) {
            return Err(Error::Domain(format!("radius {r} outside the band [{lo}, {hi}]")));
        }
        let r = r.clamp(lo, hi);
        let k = match self.radii.binary_search_by(|x| x.total_cmp(&r)) {
            Ok(k) => return Ok(self.lifts[k].eval(theta)),
            Err(k) => k - 1,
        };
        let h = self.radii[k + 1] - self.radii[k];
        let t = (r - self.radii[k]) / h;
        let v0 = self.lifts[k].eval(theta);
        let v1 = self.lifts[k + 1].eval(theta);
        let m0 = self.radial[k].eval(theta).0;
        let m1 = self.radial[k + 1].eval(theta).0;
        Ok(hermite(v0, v1, m0, m1, h, t).0)
    }

    /// Whether `S(R₀)` is the identity to `tol` at every node.
    pub fn starts_at_identity(&self, tol: f64) -> bool {
        self.lifts[0].displacement().values().iter().all(|d| d.abs() <= tol)
    }
}

/// Foliation whose leaves are the given arcs; `arcs[i]` must start at
/// azimuth `2πi/n`. The circle map at each radius is the arc intersection.
pub fn foliation_from_arcs(arcs: &[GreatCircleArc], radii: &[f64]) -> Result<TFoliation> {
    let n = arcs.len();
    for (i, a) in arcs.iter().enumerate() {
        let want = TAU * i as f64 / n as f64;
        if (a.start.theta - want).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "arc {i} starts at {} not {want}",
                a.start.theta
            )));
        }
    }
    let mut lifts = Vec::with_capacity(radii.len());
    let mut radial = Vec::with_capacity(radii.len());
    for &r in radii {
        let values: Vec<f64> = arcs.iter().map(|a| a.azimuth_at_radius(r)).collect();
        let lift = CircleDiffeoLift::from_values(&values).map_err(|e| match e {
            Error::Transversality(m) => Error::Transversality(format!("at r = {r}: {m}")),
            other => other,
        })?;
        lifts.push(lift);
        radial.push(PeriodicHermite::from_values(
            arcs.iter().map(|a| a.dazimuth_dr(r)).collect(),
        ));
    }
    TFoliation::new(radii.to_vec(), lifts, radial)
}

/// `S(r) = (1-λ(r)) S₀(r) + λ(r) S₁(r)`, so the result agrees with `F0` near
/// `R₀` and with `F1` near `R₁`.
pub fn interpolate_foliations(f0: &TFoliation, f1: &TFoliation, delta: f64, blend: &SmoothStep) -> Result<TFoliation> {
    if f0.radii != f1.radii || f0.nodes() != f1.nodes() {
        return Err(Error::Invalid("foliations must share radii and node counts".into()));
    }
    let (lo, hi) = (f0.radii[0], *f0.radii.last().unwrap());
    if blend.start() < lo + delta - 1e-12 || blend.end() > hi - delta + 1e-12 {
        return Err(Error::Invalid(format!(
            "blend [{}, {}] must be constant within {delta} of the band ends",
            blend.start(),
            blend.end()
        )));
    }
    let shared = f0.lifts.iter().chain(&f1.lifts).all(CircleDiffeoLift::is_normalized);
    if !shared {
        return Err(Error::Invalid(
            "foliations do not share the leaf through azimuth 0".into(),
        ));
    }
    let mut lifts = Vec::with_capacity(f0.radii.len());
    let mut radial = Vec::with_capacity(f0.radii.len());
    for (k, &r) in f0.radii.iter().enumerate() {
        let [lam, dlam, _] = blend.jet(r);
        lifts.push(CircleDiffeoLift::affine_combination(&f0.lifts[k], &f1.lifts[k], lam));
        let d0 = f0.lifts[k].displacement();
        let d1 = f1.lifts[k].displacement();
        let mixed = f0.radial[k].combine(1.0 - lam, &f1.radial[k], lam);
        radial.push(mixed.combine(1.0, &d1.combine(dlam, d0, -dlam), 1.0));
    }
    TFoliation::new(f0.radii.clone(), lifts, radial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deflection::{DeflectionParams, DeflectionSpec};
    use crate::sphere_geodesics::band_shoot;
    use crate::{DELTA, R0, R1};
    use std::f64::consts::PI;

    fn sample(n: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|i| f(TAU * i as f64 / n as f64)).collect()
    }

    fn wobble(a: f64, shift: f64) -> impl Fn(f64) -> f64 {
        move |x: f64| x + shift + a * x.sin() + 0.3 * a * (2.0 * x).sin()
    }

    #[test]
    fn lift_interpolates_smooth_map() {
        let f = wobble(0.4, 0.0);
        let df = |x: f64| 1.0 + 0.4 * x.cos() + 0.24 * (2.0 * x).cos();
        let lift = CircleDiffeoLift::from_values(&sample(256, &f)).unwrap();
        for k in 0..97 {
            let x = -3.0 + 0.13 * k as f64;
            let (v, d) = lift.eval_with_slope(x);
            assert!((v - f(x)).abs() < 1e-7, "x={x}");
            assert!((d - df(x)).abs() < 1e-4);
        }
        assert!((lift.eval(TAU + 0.7) - lift.eval(0.7) - TAU).abs() < 1e-13);
    }

    #[test]
    fn inversion_round_trips() {
        let lift = CircleDiffeoLift::from_values(&sample(128, wobble(0.7, 0.2))).unwrap();
        for k in 0..50 {
            let x = -1.0 + 0.17 * k as f64;
            assert!((lift.invert(lift.eval(x)) - x).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_folded_samples() {
        let mut v = sample(64, |x| x);
        v[10] = v[12];
        assert!(matches!(
            CircleDiffeoLift::from_values(&v),
            Err(Error::Transversality(_))
        ));
    }

    #[test]
    fn affine_combination_properties() {
        let f0 = CircleDiffeoLift::from_values(&sample(128, wobble(0.5, 0.0))).unwrap();
        let f1 = CircleDiffeoLift::from_values(&sample(128, wobble(-0.6, 0.0))).unwrap();
        assert_eq!(CircleDiffeoLift::affine_combination(&f0, &f1, 0.0), f0);
        for lam in [0.1, 0.5, 0.9] {
            let same = CircleDiffeoLift::affine_combination(&f0, &f0, lam);
            for k in 0..20 {
                let x = 0.31 * k as f64;
                assert!((same.eval(x) - f0.eval(x)).abs() < 1e-14);
            }
            let mix = CircleDiffeoLift::affine_combination(&f0, &f1, lam);
            assert!(mix.min_slope() > 0.0);
            // Both maps fix 0 and π.
            assert!(mix.eval(0.0).abs() < 1e-14);
            assert!(mix.is_normalized());
        }
    }

    fn radii(m: usize) -> Vec<f64> {
        (0..=m).map(|k| R0 + (R1 - R0) * k as f64 / m as f64).collect()
    }

    fn spec(eps: f64) -> DeflectionSpec {
        DeflectionSpec::new(DeflectionParams {
            epsilon: eps,
            ..Default::default()
        })
        .unwrap()
    }

    fn arcs(spec: &DeflectionSpec, n: usize) -> Vec<GreatCircleArc> {
        (0..n)
            .map(|i| band_shoot(spec, TAU * i as f64 / n as f64).unwrap())
            .collect()
    }

    #[test]
    fn radial_arcs_give_identity() {
        let fol = foliation_from_arcs(&arcs(&spec(0.0), 256), &radii(16)).unwrap();
        for lift in fol.lifts() {
            assert!(lift.displacement().values().iter().all(|d| d.abs() < 1e-15));
        }
    }

    #[test]
    fn arc_foliation_matches_arcs() {
        let s = spec(0.1);
        let n = 512;
        let fol = foliation_from_arcs(&arcs(&s, n), &radii(32)).unwrap();
        assert!(fol.starts_at_identity(1e-15));
        // The leaf through 3π/2 is radial.
        let k = 3 * n / 4;
        for j in 0..fol.radii().len() {
            assert!((fol.lift(j).eval(TAU * k as f64 / n as f64) - 1.5 * PI).abs() < 1e-13);
        }
        // Off-node lookup agrees with a directly shot arc.
        for &(theta, r) in &[(0.77, 2.0), (2.3, 2.31), (1.57, 1.9)] {
            let direct = band_shoot(&s, theta).unwrap().azimuth_at_radius(r);
            assert!((fol.leaf_lookup(theta, r).unwrap() - direct).abs() < 1e-7);
        }
        assert!(fol.leaf_lookup(0.1, R1 + 0.1).is_err());
    }

    #[test]
    fn interpolation_pins_ends_and_shared_leaves() {
        let s = spec(0.1);
        let n = 256;
        let rs = radii(48);
        let fg = foliation_from_arcs(&arcs(&s, n), &rs).unwrap();
        let fr = TFoliation::radial_foliation(rs.clone(), n);
        let blend = SmoothStep::new(R0 + DELTA, R1 - DELTA);
        let fi = interpolate_foliations(&fg, &fr, DELTA, &blend).unwrap();
        for (k, &r) in rs.iter().enumerate() {
            if r <= R0 + DELTA {
                assert_eq!(fi.lift(k), fg.lift(k));
            }
            if r >= R1 - DELTA {
                assert!(fi.lift(k).displacement().values().iter().all(|d| d.abs() < 1e-15));
            }
            let x = 1.5 * PI;
            assert!((fi.lift(k).eval(x) - x).abs() < 1e-13);
            assert!(fi.lift(k).min_slope() > 0.0);
        }
        let same = interpolate_foliations(&fg, &fg, DELTA, &blend).unwrap();
        for k in 0..rs.len() {
            let a = same.lift(k).displacement().values();
            let b = fg.lift(k).displacement().values();
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-16));
        }
    }

    #[test]
    fn interpolation_requires_shared_leaf() {
        let rs = radii(8);
        let n = 64;
        let shifted = CircleDiffeoLift::from_values(&sample(n, |x| x + 0.1)).unwrap();
        let f0 = TFoliation::new(
            rs.clone(),
            vec![shifted; rs.len()],
            vec![PeriodicHermite::zeros(n); rs.len()],
        )
        .unwrap();
        let f1 = TFoliation::radial_foliation(rs, n);
        let blend = SmoothStep::new(R0 + DELTA, R1 - DELTA);
        assert!(interpolate_foliations(&f0, &f1, DELTA, &blend).is_err());
    }
}
