//! End-to-end scenarios behind the command-line tool. Each runner reads its
//! table of a [`ScenarioConfig`], writes artifacts under an output directory
//! (each with a `.meta.json` sidecar) and returns a [`Report`].

mod config;
mod ephem_check;
mod family;
mod fli_map;
mod homotopy;
pub mod landing;
mod meta;

pub use config::{
    EphemCheckConfig, EpsilonConfig, FamilyConfig, FliMapConfig, LandingConfig, ScenarioConfig, SeedKind, TisserandLine,
};
pub use ephem_check::{ephem_check, run_ephem_check, EphemCheck};
pub use family::{closure_audit, compute_family, run_family, sample_orbit, FamilyRun};
pub use fli_map::{grid_spec, run_fli_map};
pub use homotopy::{compute_epsilon, run_epsilon, EpsilonRun};
pub use landing::run_landing;
pub use meta::Metadata;

use std::path::{Path, PathBuf};

use crate::error::Result;

#[derive(Debug, Clone, Default)]
pub struct Report {
    /// Human-readable summary, one finding per line.
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
    /// Some part of the run stopped early or failed without aborting it.
    pub partial: bool,
}

impl Report {
    fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }

    /// Records an artifact already written to `file` and attaches its sidecar.
    fn add(&mut self, file: PathBuf, meta: &Metadata) -> Result<()> {
        meta.attach(&file)?;
        self.files.push(file);
        Ok(())
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

/// Integrator settings for whole-trajectory runs: sampling options cleared.
fn plain(settings: &crate::propagate::IntegratorSettings) -> crate::propagate::IntegratorSettings {
    crate::propagate::IntegratorSettings {
        sample_stride: 1,
        sample_interval: None,
        ..*settings
    }
}
