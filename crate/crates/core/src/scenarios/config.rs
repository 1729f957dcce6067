use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bodies::{load_system, SystemAssembly};
use crate::dynamics::LagrangePoint;
use crate::error::{Error, Result};
use crate::orbits::{EpsilonSteps, FamilySteps};
use crate::propagate::IntegratorSettings;

use super::landing::LandingSpec;

/// One TOML file drives every subcommand. Relative paths inside it resolve
/// against the file's directory.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// System-assembly file.
    pub system: PathBuf,
    /// Output directory; the command line can override it.
    pub out: Option<PathBuf>,
    /// Reserved; nothing random runs by default.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    pub fli_map: Option<FliMapConfig>,
    pub family: Option<FamilyConfig>,
    pub epsilon: Option<EpsilonConfig>,
    pub landing: Option<LandingConfig>,
    pub ephem_check: Option<EphemCheckConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
    #[serde(skip)]
    pub source: PathBuf,
}

impl ScenarioConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.source = path.to_owned();
        cfg.validate()?;
        Ok(cfg)
    }

    fn config_error(&self, message: impl Into<String>) -> Error {
        Error::Config {
            path: self.source.clone(),
            message: message.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let system = self.system_path();
        if !system.is_file() {
            return Err(self.config_error(format!("system file {} not found", system.display())));
        }
        self.integrator
            .validate()
            .map_err(|e| self.config_error(e.to_string()))?;
        Ok(())
    }

    pub fn system_path(&self) -> PathBuf {
        self.base_dir.join(&self.system)
    }

    pub fn load_system(&self) -> Result<SystemAssembly> {
        load_system(self.system_path())
    }

    /// Sets both integrator tolerances.
    pub fn override_tolerance(&mut self, tol: f64) -> Result<()> {
        self.integrator = self.integrator.with_tolerance(tol);
        self.integrator
            .validate()
            .map_err(|e| self.config_error(e.to_string()))
    }

    /// The named block, or a config error naming the missing table.
    pub fn block<'a, T>(&self, block: &'a Option<T>, name: &str) -> Result<&'a T> {
        block
            .as_ref()
            .ok_or_else(|| self.config_error(format!("missing [{name}] table")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TisserandLine {
    /// Perturber whose circular orbit defines the curve.
    pub body: String,
    pub value: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FliMapConfig {
    pub a_min: f64,
    pub a_max: f64,
    pub n_a: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub n_e: usize,
    /// Horizon in Julian years (365.25 d).
    pub horizon_years: f64,
    /// Mean anomaly lead over M2.
    #[serde(default)]
    pub phase_offset_deg: f64,
    #[serde(default)]
    pub periapsis_longitude_deg: f64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
    /// Curves to write next to the map. Defaults to T = 3 for Jupiter and
    /// Saturn, keeping those present in the model.
    pub tisserand: Option<Vec<TisserandLine>>,
    #[serde(default = "default_band")]
    pub band_half_width: usize,
    #[serde(default = "default_polyline_points")]
    pub tisserand_points: usize,
}

fn default_checkpoints() -> usize {
    10
}

fn default_band() -> usize {
    2
}

fn default_polyline_points() -> usize {
    400
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedKind {
    Vertical,
    Planar,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default = "default_point")]
    pub point: String,
    #[serde(default = "default_kind")]
    pub kind: SeedKind,
    /// Linear seed amplitude (vertical: out-of-plane, planar: along x).
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub steps: FamilySteps,
    /// Closure residual target (∞-norm).
    #[serde(default = "default_closure")]
    pub closure_tol: f64,
    /// Period of the member to locate along the family; 0 skips the search.
    #[serde(default = "default_target")]
    pub target_period: f64,
    #[serde(default = "default_orbit_samples")]
    pub samples_per_orbit: usize,
}

fn default_point() -> String {
    "L3".into()
}

fn default_kind() -> SeedKind {
    SeedKind::Vertical
}

fn default_amplitude() -> f64 {
    1e-2
}

fn default_closure() -> f64 {
    1e-10
}

fn default_target() -> f64 {
    TAU
}

fn default_orbit_samples() -> usize {
    200
}

impl FamilyConfig {
    pub fn lagrange_point(&self) -> Result<LagrangePoint> {
        Ok(match self.point.as_str() {
            "L1" => LagrangePoint::L1,
            "L2" => LagrangePoint::L2,
            "L3" => LagrangePoint::L3,
            "L4" => LagrangePoint::L4,
            "L5" => LagrangePoint::L5,
            other => return Err(Error::InvalidInput(format!("unknown Lagrange point `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonConfig {
    /// Period multiple of the forcing period.
    #[serde(default = "default_p")]
    pub p: u32,
    #[serde(default)]
    pub steps: EpsilonSteps,
    #[serde(default = "default_closure_eps")]
    pub closure_tol: f64,
    #[serde(default = "default_melnikov")]
    pub melnikov_samples: usize,
    #[serde(default = "default_deformation")]
    pub deformation_samples: usize,
    /// Branch to keep, by Melnikov-root index; unset keeps the branch that
    /// deforms least.
    pub branch: Option<usize>,
    /// Number of ε values, evenly spread, whose orbits are written out.
    #[serde(default = "default_snapshots")]
    pub snapshots: usize,
    #[serde(default = "default_orbit_samples_eps")]
    pub samples_per_orbit: usize,
}

fn default_p() -> u32 {
    1
}

fn default_closure_eps() -> f64 {
    1e-10
}

fn default_melnikov() -> usize {
    256
}

fn default_deformation() -> usize {
    512
}

fn default_snapshots() -> usize {
    6
}

fn default_orbit_samples_eps() -> usize {
    400
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandingConfig {
    /// One sweep per arrival offset (days after the model epoch).
    #[serde(default = "default_arrivals")]
    pub arrival_days: Vec<f64>,
    #[serde(default = "default_altitude")]
    pub altitude_km: f64,
    #[serde(default)]
    pub theta_start_deg: f64,
    #[serde(default = "default_theta_stop")]
    pub theta_stop_deg: f64,
    #[serde(default = "default_theta_step")]
    pub theta_step_deg: f64,
    #[serde(default = "default_duration")]
    pub duration_days: f64,
    pub jacobi: Option<f64>,
    /// Keep every n-th integrator step in the trajectory files.
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

fn default_arrivals() -> Vec<f64> {
    vec![0.0]
}

fn default_altitude() -> f64 {
    50.0
}

fn default_theta_stop() -> f64 {
    360.0
}

fn default_theta_step() -> f64 {
    1.0
}

fn default_duration() -> f64 {
    30.0
}

fn default_stride() -> usize {
    1
}

impl LandingConfig {
    pub fn spec(&self, arrival_days: f64) -> LandingSpec {
        LandingSpec {
            altitude_km: self.altitude_km,
            theta_start_deg: self.theta_start_deg,
            theta_stop_deg: self.theta_stop_deg,
            theta_step_deg: self.theta_step_deg,
            arrival_days,
            duration_days: self.duration_days,
            jacobi: self.jacobi,
            keep_samples: true,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EphemCheckConfig {
    /// Epoch to check; defaults to the system's ephemeris epoch.
    pub jd: Option<f64>,
    /// Synodic test state for the synodic → fixed → synodic round trip.
    pub state: Option<[f64; 6]>,
    /// Canonical times at which the round trips run.
    pub times: Option<Vec<f64>>,
}
