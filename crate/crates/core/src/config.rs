//! Run configuration in TOML form.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::census::CensusOptions;
use crate::deflection::DeflectionParams;
use crate::geodesic_flow::TraceOptions;
use crate::metric_forge::ForgeParams;
use crate::{Error, Result};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeflectionSection {
    pub epsilon: f64,
    pub amplitude: f64,
    pub flatness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_r: usize,
    pub n_theta: usize,
    /// Collar width of the foliation blend.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracerSection {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub speed_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensusSection {
    pub n_theta: usize,
    pub escape_radius: f64,
    /// Omitted means `6π + 2 · escape_radius`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    pub output_dir: PathBuf,
    /// Recorded with every output. Nothing in the pipeline is randomized yet.
    pub seed: u64,
    pub deflection: DeflectionSection,
    pub grid: GridSection,
    pub tracer: TracerSection,
    pub census: CensusSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let f = ForgeParams::default();
        let t = TraceOptions::default();
        let c = CensusOptions::default();
        Self {
            version: CONFIG_VERSION,
            output_dir: PathBuf::from("out"),
            seed: 0,
            deflection: DeflectionSection {
                epsilon: f.deflection.epsilon,
                amplitude: f.deflection.amplitude,
                flatness: f.deflection.flatness,
            },
            grid: GridSection {
                n_r: f.n_r,
                n_theta: f.n_theta,
                delta: f.delta,
            },
            tracer: TracerSection {
                rtol: t.rtol,
                atol: t.atol,
                max_step: t.max_step,
                speed_tol: t.speed_tol,
            },
            census: CensusSection {
                n_theta: c.n_theta,
                escape_radius: c.escape_radius,
                horizon: c.horizon,
            },
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml())?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let t = &self.tracer;
        for (name, v) in [
            ("rtol", t.rtol),
            ("atol", t.atol),
            ("max_step", t.max_step),
            ("speed_tol", t.speed_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("tracer.{name} must be positive, got {v}")));
            }
        }
        self.forge_params()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.trace_options()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.census_options()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    pub fn forge_params(&self) -> ForgeParams {
        ForgeParams {
            deflection: DeflectionParams {
                epsilon: self.deflection.epsilon,
                amplitude: self.deflection.amplitude,
                flatness: self.deflection.flatness,
                ..DeflectionParams::default()
            },
            n_r: self.grid.n_r,
            n_theta: self.grid.n_theta,
            delta: self.grid.delta,
            ..ForgeParams::default()
        }
    }

    pub fn trace_options(&self) -> TraceOptions {
        TraceOptions {
            rtol: self.tracer.rtol,
            atol: self.tracer.atol,
            max_step: self.tracer.max_step,
            speed_tol: self.tracer.speed_tol,
            ..TraceOptions::default()
        }
    }

    pub fn census_options(&self) -> CensusOptions {
        CensusOptions {
            n_theta: self.census.n_theta,
            escape_radius: self.census.escape_radius,
            horizon: self.census.horizon,
            ..CensusOptions::default()
        }
    }
}
