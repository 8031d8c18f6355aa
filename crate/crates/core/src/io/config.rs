use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::continuation::{InitialGuess, Schedule, TrackSettings};
use crate::discretization::{BoundaryConditions, Model, Problem};
use crate::error::{Error, Result};
use crate::material::{MaterialParams1D, MaterialParams3D};
use crate::solvers::{EigenSettings, NewtonSettings};
use crate::spline::SplineSpace;

fn default_r() -> f64 {
    0.25
}

fn default_traction() -> f64 {
    0.01
}

fn default_d() -> f64 {
    2f64.powi(-10)
}

/// Material model, parameters and boundary data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum ModelConfig {
    #[serde(rename = "1d")]
    OneD {
        l: f64,
        /// End displacement at `X = 1`.
        #[serde(default = "default_d")]
        d: f64,
    },
    #[serde(rename = "3d")]
    ThreeD {
        b5: f64,
        l: f64,
        /// Well radius.
        #[serde(default = "default_r")]
        r: f64,
        #[serde(default = "default_traction")]
        t2: f64,
        #[serde(default = "default_traction")]
        t3: f64,
    },
}

impl ModelConfig {
    pub fn dim(&self) -> usize {
        match self {
            ModelConfig::OneD { .. } => 1,
            ModelConfig::ThreeD { .. } => 3,
        }
    }

    pub fn params(&self) -> (Option<f64>, f64) {
        match *self {
            ModelConfig::OneD { l, .. } => (None, l),
            ModelConfig::ThreeD { b5, l, .. } => (Some(b5), l),
        }
    }

    pub fn model(&self) -> Result<Model> {
        Ok(match *self {
            ModelConfig::OneD { l, .. } => Model::OneD(MaterialParams1D::new(l)?),
            ModelConfig::ThreeD { b5, l, r, .. } => Model::ThreeD(MaterialParams3D::from_b5(b5, r, l)?),
        })
    }

    pub fn bcs(&self) -> BoundaryConditions {
        match *self {
            ModelConfig::OneD { d, .. } => BoundaryConditions::OneD { d },
            ModelConfig::ThreeD { t2, t3, .. } => BoundaryConditions::ThreeD { t2, t3 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub degree: usize,
    /// Elements per direction.
    pub elements: usize,
}

/// A schedule target; `b5` is omitted for 1D runs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    #[serde(default)]
    pub b5: Option<f64>,
    pub l: f64,
}

fn default_db5() -> f64 {
    10.0
}

fn default_dl() -> f64 {
    0.01
}

fn default_bisections() -> usize {
    6
}

fn default_jump() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackConfig {
    pub waypoints: Vec<Waypoint>,
    #[serde(default = "default_db5")]
    pub db5: f64,
    #[serde(default = "default_dl")]
    pub dl: f64,
    #[serde(default = "default_bisections")]
    pub max_bisections: usize,
    #[serde(default = "default_jump")]
    pub jump_factor: f64,
    /// Eigenvalues at every tracked point, not only the last.
    #[serde(default)]
    pub stability_along: bool,
}

fn default_levels() -> usize {
    1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Smallest eigenvalues on every level.
    #[serde(default)]
    pub stability: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { levels: 1, stability: false }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportConfig {
    /// Sample points per direction; defaults to 33 in 3D and 1025 in 1D.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default = "default_true")]
    pub fields: bool,
    /// Strain scatter and deviatoric-energy contours (3D only).
    #[serde(default = "default_true")]
    pub strain_scatter: bool,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self { samples: None, fields: true, strain_scatter: true }
    }
}

impl ExportConfig {
    pub fn samples_for(&self, dim: usize) -> usize {
        self.samples.unwrap_or(if dim == 1 { 1025 } else { 33 })
    }
}

/// Complete description of a run, validated before any computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub mesh: MeshConfig,
    #[serde(default = "default_guess")]
    pub initial_guess: InitialGuess,
    #[serde(default)]
    pub newton: Option<NewtonSettings>,
    /// Stability analysis settings; solve and track skip it when absent.
    #[serde(default)]
    pub eigen: Option<EigenSettings>,
    #[serde(default)]
    pub track: Option<TrackConfig>,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub export: ExportConfig,
    /// Checkpoint to start from instead of the initial guess.
    #[serde(default)]
    pub resume: Option<PathBuf>,
    /// Accept a checkpoint written under a different problem definition.
    #[serde(default)]
    pub ignore_config_hash: bool,
}

fn default_guess() -> InitialGuess {
    InitialGuess::Homogeneous
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        self.space().map_err(cfg_err)?;
        self.model.model().map_err(cfg_err)?;
        if let ModelConfig::OneD { d, .. } = self.model {
            if !d.is_finite() {
                return Err(Error::Config(format!("end displacement {d} is not finite")));
            }
        }
        if let ModelConfig::ThreeD { t2, t3, .. } = self.model {
            if !(t2.is_finite() && t3.is_finite()) {
                return Err(Error::Config("tractions must be finite".into()));
            }
        }
        self.initial_guess.validate().map_err(cfg_err)?;
        self.newton_settings().validate().map_err(cfg_err)?;
        if let Some(e) = &self.eigen {
            e.validate().map_err(cfg_err)?;
        }
        if let Some(t) = &self.track {
            for w in &t.waypoints {
                if w.b5.is_some() != (self.model.dim() == 3) {
                    return Err(Error::Config(format!("waypoint {w:?}: b5 is required in 3D and not allowed in 1D")));
                }
            }
            if !(t.jump_factor > 0.0) {
                return Err(Error::Config("jump_factor must be positive".into()));
            }
            self.schedule().map_err(cfg_err)?;
        }
        if self.export.samples_for(self.model.dim()) < 2 {
            return Err(Error::Config("export.samples must be at least 2".into()));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<SplineSpace> {
        let comps = if self.model.dim() == 1 { 1 } else { 3 };
        SplineSpace::new(self.model.dim(), self.mesh.degree, self.mesh.elements, comps)
    }

    pub fn problem(&self) -> Result<Problem> {
        Problem::new(self.space()?, self.model.model()?, self.model.bcs())
    }

    /// Newton settings, with the tighter default tolerance in 1D.
    pub fn newton_settings(&self) -> NewtonSettings {
        self.newton.unwrap_or(if self.model.dim() == 1 { NewtonSettings::one_d() } else { NewtonSettings::default() })
    }

    pub fn schedule_from(&self, start: (Option<f64>, f64)) -> Result<Schedule> {
        let Some(t) = &self.track else { return Ok(Schedule::default()) };
        let key = |b5: Option<f64>, l: f64| (b5.unwrap_or(0.0), l);
        let points: Vec<(f64, f64)> = t.waypoints.iter().map(|w| key(w.b5, w.l)).collect();
        Schedule::through(key(start.0, start.1), &points, t.db5, t.dl)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        self.schedule_from(self.model.params())
    }

    pub fn track_settings(&self, with_eigen: bool) -> TrackSettings {
        let t = self.track.as_ref();
        TrackSettings {
            newton: self.newton_settings(),
            eigen: if with_eigen { self.eigen } else { None },
            max_bisections: t.map_or(6, |t| t.max_bisections),
            jump_factor: t.map_or(10.0, |t| t.jump_factor),
        }
    }

    /// Overrides the seed of a random initial guess and of the eigensolver.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let InitialGuess::Random { magnitude, .. } = self.initial_guess {
            self.initial_guess = InitialGuess::Random { seed, magnitude };
        }
        if let Some(e) = &mut self.eigen {
            e.seed = seed;
        }
        self
    }

    /// SHA-256 over the parts that define the discrete problem and its
    /// solution path: model, mesh, initial guess and Newton settings.
    pub fn problem_hash(&self) -> String {
        let key = serde_json::json!({
            "model": self.model,
            "mesh": self.mesh,
            "initial_guess": self.initial_guess,
            "newton": self.newton_settings(),
        });
        let digest = Sha256::digest(key.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
