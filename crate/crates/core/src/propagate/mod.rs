//! Time integration of the CRNBP state and its variational equations.

pub mod dop853;
mod events;

pub use events::{Crossing, EventFn, EventKind, EventRecord, EventSpec};

use std::path::Path;

use nalgebra::{Matrix6, SVector, Vector6};

use crate::bodies::SystemModel;
use crate::dynamics::{position_gradient, vector_field, State6};
use crate::error::{Error, Result};
use dop853::{DenseStep, Flow, Stats, Tolerances};
use events::EventTracker;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed step magnitude; 0 means unbounded.
    pub max_step: f64,
    pub max_steps: usize,
    /// Keep every n-th accepted step in the stored trajectory.
    pub sample_stride: usize,
    /// When set, samples are taken on a uniform time grid instead.
    pub sample_interval: Option<f64>,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            max_step: 0.0,
            max_steps: 2_000_000,
            sample_stride: 1,
            sample_interval: None,
        }
    }
}

impl IntegratorSettings {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self.abs_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| (1e-15..=1e-3).contains(&v);
        if !ok(self.rel_tol) || !ok(self.abs_tol) {
            return Err(Error::InvalidInput(format!(
                "tolerances must lie in [1e-15, 1e-3], got rel {} abs {}",
                self.rel_tol, self.abs_tol
            )));
        }
        if self.max_step < 0.0 || self.sample_stride == 0 {
            return Err(Error::InvalidInput("invalid max_step or sample_stride".into()));
        }
        if let Some(dt) = self.sample_interval {
            if !(dt > 0.0) {
                return Err(Error::InvalidInput("sample_interval must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn direction(t0: f64, t1: f64) -> Direction {
        if t1 >= t0 {
            Direction::Forward
        } else {
            Direction::Backward
        }
    }

    pub(crate) fn tolerances(&self) -> Tolerances {
        Tolerances {
            rel: self.rel_tol,
            abs: self.abs_tol,
            max_step: self.max_step,
            max_steps: self.max_steps,
            initial_step: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub samples: Vec<(f64, State6)>,
    pub events: Vec<EventRecord>,
    /// Index of the terminal event that stopped the run, if any.
    pub terminated_by: Option<usize>,
    pub stats: Stats,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        self.samples.last().map(|s| s.0).unwrap_or(f64::NAN)
    }

    pub fn final_state(&self) -> State6 {
        self.samples.last().map(|s| s.1).unwrap_or_else(State6::zeros)
    }
}

/// Decimates accepted steps into stored samples.
struct Sampler {
    stride: usize,
    interval: Option<f64>,
    count: usize,
    next: f64,
    dir: f64,
}

impl Sampler {
    fn new(settings: &IntegratorSettings, t0: f64, t1: f64) -> Self {
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        Sampler {
            stride: settings.sample_stride,
            interval: settings.sample_interval,
            count: 0,
            next: t0 + dir * settings.sample_interval.unwrap_or(0.0),
            dir,
        }
    }

    fn push<const N: usize>(&mut self, step: &DenseStep<N>, upto: f64, out: &mut Vec<(f64, SVector<f64, N>)>) {
        match self.interval {
            Some(dt) => {
                while (upto - self.next) * self.dir >= 0.0 {
                    out.push((self.next, step.eval(self.next)));
                    self.count += 1;
                    self.next = out[0].0 + self.dir * dt * (self.count + 1) as f64;
                }
            }
            None => {
                self.count += 1;
                if self.count % self.stride == 0 {
                    out.push((step.t1, step.y1));
                }
            }
        }
    }
}

/// Integrates the CRNBP from `t0` to `t1`, with optional event detection.
pub fn integrate(
    model: &SystemModel,
    state0: &State6,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
    events: &[EventSpec],
) -> Result<Trajectory> {
    settings.validate()?;
    if t1 == t0 {
        return Err(Error::InvalidInput("integration span is empty".into()));
    }
    check_state(state0, t0)?;
    for e in events {
        e.validate(model)?;
    }
    let mut traj = Trajectory {
        samples: vec![(t0, *state0)],
        ..Default::default()
    };
    let mut tracker = EventTracker::new(model, events, t0, state0);
    let mut sampler = Sampler::new(settings, t0, t1);
    let mut samples = std::mem::take(&mut traj.samples);
    let mut event_log = Vec::new();
    let mut terminated_by = None;
    let need_dense = !events.is_empty() || settings.sample_interval.is_some();

    let (tf, yf, stats) = dop853::solve(
        |t, y: &State6| vector_field(model, y, t),
        t0,
        *state0,
        t1,
        &settings.tolerances(),
        need_dense,
        |step| {
            let found = if events.is_empty() { Vec::new() } else { tracker.scan(step) };
            if let Some(last) = found.last().filter(|e| events[e.index].terminal) {
                let (te, ye) = (last.t, last.state);
                terminated_by = Some(last.index);
                sampler.push(step, te, &mut samples);
                event_log.extend(found);
                return Ok(Flow::Stop(te, ye));
            }
            event_log.extend(found);
            sampler.push(step, step.t1, &mut samples);
            Ok(Flow::Continue)
        },
    )?;
    if samples.last().map(|s| s.0) != Some(tf) {
        samples.push((tf, yf));
    }
    traj.samples = samples;
    traj.events = event_log;
    traj.terminated_by = terminated_by;
    traj.stats = stats;
    Ok(traj)
}

fn check_state(s: &State6, t: f64) -> Result<()> {
    if s.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Tangent-vector right-hand side: (F(X, t), ∂F/∂X · V).
pub(crate) fn tangent_rhs(model: &SystemModel, t: f64, y: &SVector<f64, 12>) -> Result<SVector<f64, 12>> {
    let x = State6::from_iterator(y.iter().take(6).copied());
    let f = vector_field(model, &x, t)?;
    let g = position_gradient(model, &x, t)?;
    let mut out = SVector::<f64, 12>::zeros();
    out.fixed_rows_mut::<6>(0).copy_from(&f);
    let (v_pos, v_vel) = (y.fixed_rows::<3>(6), y.fixed_rows::<3>(9));
    let acc = g * v_pos;
    out[6] = v_vel[0];
    out[7] = v_vel[1];
    out[8] = v_vel[2];
    out[9] = acc[0] + 2.0 * v_vel[1];
    out[10] = acc[1] - 2.0 * v_vel[0];
    out[11] = acc[2];
    Ok(out)
}

/// STM right-hand side with Φ stored column-major after the state.
pub(crate) fn stm_rhs(model: &SystemModel, t: f64, y: &SVector<f64, 42>) -> Result<SVector<f64, 42>> {
    let x = State6::from_iterator(y.iter().take(6).copied());
    let f = vector_field(model, &x, t)?;
    let g = position_gradient(model, &x, t)?;
    let mut out = SVector::<f64, 42>::zeros();
    out.fixed_rows_mut::<6>(0).copy_from(&f);
    for c in 0..6 {
        let o = 6 + 6 * c;
        let (p, v) = (y.fixed_rows::<3>(o), y.fixed_rows::<3>(o + 3));
        let acc = g * p;
        out[o] = v[0];
        out[o + 1] = v[1];
        out[o + 2] = v[2];
        out[o + 3] = acc[0] + 2.0 * v[1];
        out[o + 4] = acc[1] - 2.0 * v[0];
        out[o + 5] = acc[2];
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct TangentTrajectory {
    pub samples: Vec<(f64, State6, Vector6<f64>)>,
    pub stats: Stats,
}

/// Integrates the state together with a tangent vector V, V' = (∂F/∂X) V.
pub fn integrate_with_tangent(
    model: &SystemModel,
    state0: &State6,
    v0: &Vector6<f64>,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<TangentTrajectory> {
    settings.validate()?;
    if !(v0.norm() > 0.0) {
        return Err(Error::InvalidInput("tangent vector must be nonzero".into()));
    }
    if t1 == t0 {
        return Err(Error::InvalidInput("integration span is empty".into()));
    }
    check_state(state0, t0)?;
    let mut y0 = SVector::<f64, 12>::zeros();
    y0.fixed_rows_mut::<6>(0).copy_from(state0);
    y0.fixed_rows_mut::<6>(6).copy_from(v0);
    let mut raw = vec![(t0, y0)];
    let mut sampler = Sampler::new(settings, t0, t1);
    let (tf, yf, stats) = dop853::solve(
        |t, y| tangent_rhs(model, t, y),
        t0,
        y0,
        t1,
        &settings.tolerances(),
        settings.sample_interval.is_some(),
        |step| {
            sampler.push(step, step.t1, &mut raw);
            Ok(Flow::Continue)
        },
    )?;
    if raw.last().map(|s| s.0) != Some(tf) {
        raw.push((tf, yf));
    }
    let samples = raw
        .into_iter()
        .map(|(t, y)| {
            (
                t,
                State6::from_iterator(y.iter().take(6).copied()),
                Vector6::from_iterator(y.iter().skip(6).copied()),
            )
        })
        .collect();
    Ok(TangentTrajectory { samples, stats })
}

/// Final state and state-transition matrix from `t0` to `t1`.
pub fn stm_propagate(
    model: &SystemModel,
    state0: &State6,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<(State6, Matrix6<f64>)> {
    settings.validate()?;
    check_state(state0, t0)?;
    if t1 == t0 {
        return Ok((*state0, Matrix6::identity()));
    }
    let mut y0 = SVector::<f64, 42>::zeros();
    y0.fixed_rows_mut::<6>(0).copy_from(state0);
    for c in 0..6 {
        y0[6 + 7 * c] = 1.0;
    }
    let (_, yf, _) = dop853::solve(
        |t, y| stm_rhs(model, t, y),
        t0,
        y0,
        t1,
        &settings.tolerances(),
        false,
        |_| Ok(Flow::Continue),
    )?;
    let state = State6::from_iterator(yf.iter().take(6).copied());
    let phi = Matrix6::from_column_slice(&yf.as_slice()[6..]);
    Ok((state, phi))
}

/// Final state only, without storing samples.
pub fn propagate_final(
    model: &SystemModel,
    state0: &State6,
    t0: f64,
    t1: f64,
    settings: &IntegratorSettings,
) -> Result<State6> {
    settings.validate()?;
    check_state(state0, t0)?;
    if t1 == t0 {
        return Ok(*state0);
    }
    let (_, y, _) = dop853::solve(
        |t, y: &State6| vector_field(model, y, t),
        t0,
        *state0,
        t1,
        &settings.tolerances(),
        false,
        |_| Ok(Flow::Continue),
    )?;
    Ok(y)
}

/// Writes `t, x, y, z, vx, vy, vz` rows.
pub fn write_trajectory_csv(path: impl AsRef<Path>, samples: &[(f64, State6)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "y", "z", "vx", "vy", "vz"])?;
    for (t, s) in samples {
        let mut row = vec![t.to_string()];
        row.extend(s.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `t, x, .., vz, V1, .., V6` rows.
pub fn write_tangent_csv(path: impl AsRef<Path>, traj: &TangentTrajectory) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["t", "x", "y", "z", "vx", "vy", "vz", "V1", "V2", "V3", "V4", "V5", "V6"])?;
    for (t, s, v) in &traj.samples {
        let mut row = vec![t.to_string()];
        row.extend(s.iter().chain(v.iter()).map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_trajectory_csv`].
pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, State6)>> {
    let mut r = csv::Reader::from_path(path.as_ref())?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .take(7)
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.as_ref().display())))?;
        if v.len() != 7 {
            return Err(Error::InvalidInput("short trajectory row".into()));
        }
        out.push((v[0], State6::from_column_slice(&v[1..7])));
    }
    Ok(out)
}
