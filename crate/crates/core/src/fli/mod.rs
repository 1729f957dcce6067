//! Fast Lyapunov Indicator maps over (a, e) grids.

mod kepler;
mod tisserand;

pub use kepler::{elements_to_inertial, elements_to_state, elements_to_state_with, solve_kepler};
pub use tisserand::{tisserand, tisserand_band, tisserand_curve, write_polyline_csv, BandStats};

use std::path::Path;

use nalgebra::{SVector, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::SystemModel;
use crate::dynamics::{body_position, State6};
use crate::error::{Error, Result};
use crate::propagate::dop853::{self, Flow};
use crate::propagate::{tangent_rhs, IntegratorSettings};

/// Initial tangent vector used for every cell.
pub fn default_tangent() -> Vector6<f64> {
    Vector6::repeat(1.0 / 6f64.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    Collided,
    EscapedSingularity,
}

impl CellStatus {
    pub fn code(self) -> u8 {
        match self {
            CellStatus::Ok => 0,
            CellStatus::Collided => 1,
            CellStatus::EscapedSingularity => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FliOutcome {
    /// Running supremum of ln‖V‖ at the last time reached.
    pub fli: f64,
    pub status: CellStatus,
    /// Time reached (the horizon unless the run was cut short).
    pub t_end: f64,
    /// Running supremum at each requested checkpoint time. Checkpoints past an
    /// early stop carry the value at the stop.
    pub checkpoints: Vec<f64>,
}

/// Running sup of ln‖V‖ over accepted steps from `t0` to `t0 + horizon`.
pub fn fli_of(
    model: &SystemModel,
    state0: &State6,
    v0: &Vector6<f64>,
    horizon: f64,
    settings: &IntegratorSettings,
) -> FliOutcome {
    fli_with_checkpoints(model, state0, v0, 0.0, horizon, &[], settings)
}

/// [`fli_of`] starting at `t0`, also recording the running value at the
/// checkpoint offsets (sorted, within `[0, horizon]`).
pub fn fli_with_checkpoints(
    model: &SystemModel,
    state0: &State6,
    v0: &Vector6<f64>,
    t0: f64,
    horizon: f64,
    checkpoints: &[f64],
    settings: &IntegratorSettings,
) -> FliOutcome {
    let mut best = v0.norm().ln();
    let mut marks = Vec::with_capacity(checkpoints.len());
    let fill = |marks: &mut Vec<f64>, upto: f64, value: f64, inclusive: bool| {
        while let Some(&c) = checkpoints.get(marks.len()) {
            if c < upto || (inclusive && c == upto) {
                marks.push(value);
            } else {
                break;
            }
        }
    };
    fill(&mut marks, 0.0, best, true);
    if horizon <= 0.0 {
        fill(&mut marks, f64::INFINITY, best, true);
        return FliOutcome {
            fli: best,
            status: CellStatus::Ok,
            t_end: t0,
            checkpoints: marks,
        };
    }

    let mut y0 = SVector::<f64, 12>::zeros();
    y0.fixed_rows_mut::<6>(0).copy_from(state0);
    y0.fixed_rows_mut::<6>(6).copy_from(v0);
    let radii = model.collision_radius();
    let mut collided = false;
    let mut t_last = t0;

    let result = dop853::solve(
        |t, y| tangent_rhs(model, t, y),
        t0,
        y0,
        t0 + horizon,
        &settings.tolerances(),
        false,
        |step| {
            let v = step.y1.fixed_rows::<6>(6).norm();
            // Checkpoints strictly inside this step see the value before it.
            fill(&mut marks, step.t1 - t0, best, false);
            best = best.max(v.ln());
            fill(&mut marks, step.t1 - t0, best, true);
            t_last = step.t1;
            let p = step.y1.fixed_rows::<3>(0);
            for (j, &r) in radii.iter().enumerate() {
                if r > 0.0 && (p - body_position(model, j, step.t1)).norm() <= r {
                    collided = true;
                    return Ok(Flow::Stop(step.t1, step.y1));
                }
            }
            Ok(Flow::Continue)
        },
    );
    let status = match result {
        Ok(_) if collided => CellStatus::Collided,
        Ok(_) => CellStatus::Ok,
        Err(_) => CellStatus::EscapedSingularity,
    };
    fill(&mut marks, f64::INFINITY, best, true);
    FliOutcome {
        fli: best,
        status,
        t_end: t_last,
        checkpoints: marks,
    }
}

/// Rectangular (a, e) lattice; `a` is canonical and relative to M1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub a_min: f64,
    pub a_max: f64,
    pub n_a: usize,
    pub e_min: f64,
    pub e_max: f64,
    pub n_e: usize,
    /// Canonical time.
    pub horizon: f64,
    /// Mean anomaly lead over M2, radians.
    pub phase_offset: f64,
    /// Periapsis longitude from the M1–M2 line, radians.
    #[serde(default)]
    pub periapsis_longitude: f64,
    /// Canonical start time of every cell.
    #[serde(default)]
    pub epoch: f64,
    /// Number of evenly spaced running-value checkpoints kept per cell.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: usize,
}

fn default_checkpoints() -> usize {
    10
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(format!("grid spec: {m}")));
        if !(self.a_min > 0.0 && self.a_max >= self.a_min) {
            return bad("need 0 < a_min <= a_max");
        }
        if !(self.e_min >= 0.0 && self.e_max >= self.e_min && self.e_max < 1.0) {
            return bad("need 0 <= e_min <= e_max < 1");
        }
        if !(self.horizon > 0.0) {
            return bad("horizon must be positive");
        }
        if self.n_a == 0 || self.n_e == 0 {
            return bad("grid must have at least one cell");
        }
        Ok(())
    }

    fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    pub fn a_values(&self) -> Vec<f64> {
        Self::axis(self.a_min, self.a_max, self.n_a)
    }

    pub fn e_values(&self) -> Vec<f64> {
        Self::axis(self.e_min, self.e_max, self.n_e)
    }

    pub fn checkpoint_times(&self) -> Vec<f64> {
        let k = self.checkpoints.max(1);
        (1..=k).map(|i| self.horizon * i as f64 / k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FliGrid {
    pub spec: GridSpec,
    /// Row-major n_e × n_a.
    pub values: Vec<f64>,
    pub status: Vec<CellStatus>,
    /// Per cell, running value at [`GridSpec::checkpoint_times`].
    pub history: Vec<Vec<f64>>,
}

impl FliGrid {
    pub fn at(&self, ie: usize, ia: usize) -> f64 {
        self.values[ie * self.spec.n_a + ia]
    }

    pub fn status_at(&self, ie: usize, ia: usize) -> CellStatus {
        self.status[ie * self.spec.n_a + ia]
    }

    pub fn median(&self) -> f64 {
        let mut v = self.values.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        let n = v.len();
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    /// True when every cell's stored running values never decrease.
    pub fn monotone_in_horizon(&self) -> bool {
        self.history
            .iter()
            .zip(&self.values)
            .all(|(h, &v)| h.windows(2).all(|w| w[1] >= w[0]) && h.last().map_or(true, |&l| l <= v))
    }

    /// Writes the FLI matrix: header `e\a, a_1, .., a_n`, then one row per e.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_matrix(path, |i| self.values[i].to_string())
    }

    /// Same layout as [`FliGrid::write_csv`] with status codes
    /// (0 ok, 1 collided, 2 escaped-singularity).
    pub fn write_status_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_matrix(path, |i| self.status[i].code().to_string())
    }

    fn write_matrix(&self, path: impl AsRef<Path>, cell: impl Fn(usize) -> String) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["e\\a".to_string()];
        header.extend(self.spec.a_values().iter().map(|a| a.to_string()));
        w.write_record(&header)?;
        for (ie, e) in self.spec.e_values().iter().enumerate() {
            let mut row = vec![e.to_string()];
            row.extend((0..self.spec.n_a).map(|ia| cell(ie * self.spec.n_a + ia)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long-format running values: `ie, ia, t, fli`.
    pub fn write_history_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["ie", "ia", "t", "fli"])?;
        let times = self.spec.checkpoint_times();
        for (cell, h) in self.history.iter().enumerate() {
            let (ie, ia) = (cell / self.spec.n_a, cell % self.spec.n_a);
            for (t, v) in times.iter().zip(h) {
                w.write_record([ie.to_string(), ia.to_string(), t.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Scores every cell of the grid. Results do not depend on the thread count.
pub fn scan(model: &SystemModel, spec: &GridSpec, settings: &IntegratorSettings) -> Result<FliGrid> {
    spec.validate()?;
    settings.validate()?;
    let a = spec.a_values();
    let e = spec.e_values();
    let v0 = default_tangent();
    let marks = spec.checkpoint_times();
    let outcomes: Vec<FliOutcome> = (0..spec.n_a * spec.n_e)
        .into_par_iter()
        .map(|cell| {
            let (ie, ia) = (cell / spec.n_a, cell % spec.n_a);
            match elements_to_state_with(model, a[ia], e[ie], spec.phase_offset, spec.periapsis_longitude, spec.epoch) {
                Ok(s0) => fli_with_checkpoints(model, &s0, &v0, spec.epoch, spec.horizon, &marks, settings),
                Err(_) => FliOutcome {
                    fli: 0.0,
                    status: CellStatus::EscapedSingularity,
                    t_end: spec.epoch,
                    checkpoints: vec![0.0; marks.len()],
                },
            }
        })
        .collect();
    Ok(FliGrid {
        spec: spec.clone(),
        values: outcomes.iter().map(|o| o.fli).collect(),
        status: outcomes.iter().map(|o| o.status).collect(),
        history: outcomes.into_iter().map(|o| o.checkpoints).collect(),
    })
}

/// Runs [`scan`] on a dedicated pool of `threads` workers.
pub fn scan_with_threads(
    model: &SystemModel,
    spec: &GridSpec,
    settings: &IntegratorSettings,
    threads: usize,
) -> Result<FliGrid> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| scan(model, spec, settings))
}
