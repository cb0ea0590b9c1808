//! Construction of the perturbed metric `g_ε`: foliate the band by blending
//! the scattered great circles into radial segments, parameterize the leaves
//! so they have prescribed lengths, declare them unit-speed geodesics
//! orthogonal to the start circle, and sample the result on a polar grid.

pub mod assemble;
pub mod grid;
pub mod grid_io;
pub mod phi;
pub mod verify;

use serde::{Deserialize, Serialize};

pub use assemble::assemble_metric;
pub use grid::{GridMeta, MetricGrid, MetricJet, PerturbationBox};
pub use grid_io::{export_grid, import_grid};
pub use phi::{build_phi, reverse_phi, PhiMap};
pub use verify::verify_construction;

use crate::deflection::{DeflectionParams, DeflectionSpec};
use crate::foliation::{foliation_from_arcs, interpolate_foliations, TFoliation};
use crate::rotsym_metric::ProfileFunction;
use crate::sphere_geodesics::{band_shoot, transversality_check};
use crate::{Error, Result, DELTA, R0, R1, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForgeParams {
    pub deflection: DeflectionParams,
    pub blend_start: f64,
    pub blend_end: f64,
    pub tail_rate: f64,
    pub delta: f64,
    pub n_r: usize,
    pub n_theta: usize,
    /// Nodes per circle map; zero means twice `n_theta`.
    pub lift_nodes: usize,
    pub n_leaves: usize,
    pub leaf_samples: usize,
}

impl Default for ForgeParams {
    fn default() -> Self {
        Self {
            deflection: DeflectionParams::default(),
            blend_start: R1,
            blend_end: std::f64::consts::PI,
            tail_rate: 1.0,
            delta: DELTA,
            n_r: 1025,
            n_theta: 1024,
            lift_nodes: 0,
            n_leaves: 256,
            leaf_samples: 65,
        }
    }
}

impl ForgeParams {
    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self {
            deflection: DeflectionParams {
                epsilon,
                ..self.deflection
            },
            ..self
        }
    }

    /// The same construction at `factor` times the grid resolution.
    pub fn refined(self, factor: usize) -> Self {
        Self {
            n_r: (self.n_r - 1) * factor + 1,
            n_theta: self.n_theta * factor,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < 17 || self.n_theta < 64 {
            return Err(Error::Invalid(format!(
                "grid {}×{} below the minimum 17×64",
                self.n_r, self.n_theta
            )));
        }
        if !self.n_theta.is_multiple_of(4) {
            return Err(Error::Invalid("n_theta must be divisible by 4".into()));
        }
        if self.lift_nodes != 0 && self.lift_nodes < 64 {
            return Err(Error::Invalid("lift_nodes must be zero or at least 64".into()));
        }
        if !(self.delta > 0.0 && 3.0 * self.delta <= R1 - R0 + 1e-12) {
            return Err(Error::Invalid(format!(
                "collar width {} must lie in (0, (R1 - R0)/3]",
                self.delta
            )));
        }
        if self.n_leaves < 8 || self.leaf_samples < 3 {
            return Err(Error::Invalid("verification sampling too coarse".into()));
        }
        Ok(())
    }

    fn lift_nodes(&self) -> usize {
        if self.lift_nodes == 0 {
            2 * self.n_theta
        } else {
            self.lift_nodes
        }
    }
}

/// Everything produced by one construction run.
#[derive(Debug, Clone)]
pub struct Forged {
    pub spec: DeflectionSpec,
    pub profile: ProfileFunction,
    /// `Φ̃_ε`.
    pub phi: PhiMap,
    pub grid: MetricGrid,
}

/// Radii `R₀ + k (R₁-R₀)/(n-1)`.
pub fn band_radii(n: usize) -> Vec<f64> {
    (0..n).map(|k| R0 + (R1 - R0) * k as f64 / (n - 1) as f64).collect()
}

/// The interpolated foliation: scattered great circles near `R₀`, radial
/// segments near `R₁`.
pub fn blended_foliation(spec: &DeflectionSpec, radii: &[f64], nodes: usize, delta: f64) -> Result<TFoliation> {
    let arcs: Result<Vec<_>> = (0..nodes)
        .map(|i| band_shoot(spec, TAU * i as f64 / nodes as f64))
        .collect();
    let scattered = foliation_from_arcs(&arcs?, radii)?;
    let radial = TFoliation::radial_foliation(radii.to_vec(), nodes);
    let blend = crate::numerics::SmoothStep::new(R0 + delta, R1 - delta);
    interpolate_foliations(&scattered, &radial, delta, &blend)
}

/// Runs the construction up to `Φ̃_ε`, without assembling the grid.
pub fn construct_phi(params: &ForgeParams) -> Result<(DeflectionSpec, ProfileFunction, PhiMap)> {
    params.validate()?;
    let spec = DeflectionSpec::new(params.deflection)?;
    let report = spec.validate();
    if let Some(c) = report.failures().next() {
        return Err(Error::Invalid(format!(
            "deflection check '{}' failed (value {:.3e})",
            c.name, c.residual
        )));
    }
    if !transversality_check(&spec, 1024, 64) {
        return Err(Error::Transversality(
            "scattered great circles do not foliate the band".into(),
        ));
    }
    let profile = ProfileFunction::new(params.blend_start, params.blend_end, params.tail_rate)?;
    let radii = band_radii(params.n_r);
    let foliation = blended_foliation(&spec, &radii, params.lift_nodes(), params.delta)?;
    let phi = build_phi(foliation, &spec, params.delta, params.n_leaves, params.leaf_samples)?;
    Ok((spec, profile, reverse_phi(&phi)))
}

pub fn forge(params: &ForgeParams) -> Result<Forged> {
    let (spec, profile, phi) = construct_phi(params)?;
    let grid = assemble_metric(&phi, &profile, params.n_theta)?;
    Ok(Forged {
        spec,
        profile,
        phi,
        grid,
    })
}
