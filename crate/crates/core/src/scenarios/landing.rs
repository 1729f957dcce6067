//! Backward-in-time landing sweeps around M2.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::{SystemModel, SECONDS_PER_DAY};
use crate::dynamics::{jacobi_constant, lagrange_points, speed_squared_for_jacobi, LagrangePoint, State6};
use crate::error::{Error, Result};
use crate::propagate::{integrate, EventSpec, IntegratorSettings};

use nalgebra::Vector3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandingSpec {
    /// Altitude above the surface of M2, km.
    pub altitude_km: f64,
    pub theta_start_deg: f64,
    /// Exclusive end of the sweep.
    pub theta_stop_deg: f64,
    pub theta_step_deg: f64,
    /// Arrival offset after the model epoch, days.
    pub arrival_days: f64,
    /// Backward integration span, days.
    pub duration_days: f64,
    /// Jacobi level for the initial speed; defaults to that of L2.
    pub jacobi: Option<f64>,
    /// Keep every trajectory sample (otherwise only the summary).
    pub keep_samples: bool,
}

impl Default for LandingSpec {
    fn default() -> Self {
        LandingSpec {
            altitude_km: 50.0,
            theta_start_deg: 0.0,
            theta_stop_deg: 360.0,
            theta_step_deg: 1.0,
            arrival_days: 0.0,
            duration_days: 30.0,
            jacobi: None,
            keep_samples: true,
        }
    }
}

impl LandingSpec {
    pub fn thetas_deg(&self) -> Vec<f64> {
        let n = ((self.theta_stop_deg - self.theta_start_deg) / self.theta_step_deg - 1e-9).ceil().max(0.0) as usize;
        (0..n).map(|i| self.theta_start_deg + i as f64 * self.theta_step_deg).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_step_deg > 0.0 && self.theta_stop_deg > self.theta_start_deg) {
            return Err(Error::InvalidInput("θ sweep needs start < stop and a positive step".into()));
        }
        if !(self.duration_days > 0.0) || self.altitude_km < 0.0 {
            return Err(Error::InvalidInput("duration must be positive and altitude non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LandingOutcome {
    Survived,
    Collided { body: String },
    /// The Jacobi level is not reachable at this position.
    Infeasible,
    Failed { message: String },
}

#[derive(Debug, Clone)]
pub struct LandingResult {
    pub theta_deg: f64,
    pub outcome: LandingOutcome,
    pub state0: Option<State6>,
    /// Extremes of the distance to M1 along the trajectory.
    pub min_m1_distance: f64,
    pub max_m1_distance: f64,
    pub samples: Vec<(f64, State6)>,
}

impl LandingResult {
    /// Trajectory reached beyond `radius` from M1 without colliding.
    pub fn exits_beyond(&self, radius: f64) -> bool {
        self.outcome == LandingOutcome::Survived && self.max_m1_distance > radius
    }
}

/// Canonical time of the arrival epoch.
pub fn arrival_time(model: &SystemModel, days: f64) -> f64 {
    days * SECONDS_PER_DAY / model.time_unit()
}

/// Jacobi constant of L2, from the primaries only.
pub fn l2_jacobi(model: &SystemModel) -> Result<f64> {
    jacobi_constant(model, &lagrange_points(model)?[LagrangePoint::L2.index()])
}

/// Planar state at `altitude_km` above M2 at longitude `theta` (radians,
/// from the +x axis), moving prograde about M2 perpendicular to the radius,
/// with the speed fixed by the Jacobi level. `None` when the level is not
/// reachable there.
pub fn landing_state(model: &SystemModel, theta: f64, altitude_km: f64, jacobi: f64) -> Result<Option<State6>> {
    let r = model.collision_radius()[1] + altitude_km / model.length_unit();
    let rel = Vector3::new(r * theta.cos(), r * theta.sin(), 0.0);
    let pos = Vector3::new(model.mu1(), 0.0, 0.0) + rel;
    let v2 = speed_squared_for_jacobi(model, &pos, jacobi)?;
    if v2 < 0.0 {
        return Ok(None);
    }
    let dir = Vector3::z().cross(&rel).normalize();
    let v = dir * v2.sqrt();
    Ok(Some(State6::new(pos[0], pos[1], 0.0, v[0], v[1], 0.0)))
}

fn run_one(model: &SystemModel, spec: &LandingSpec, theta_deg: f64, jacobi: f64, settings: &IntegratorSettings, events: &[EventSpec]) -> LandingResult {
    let mut res = LandingResult {
        theta_deg,
        outcome: LandingOutcome::Infeasible,
        state0: None,
        min_m1_distance: f64::NAN,
        max_m1_distance: f64::NAN,
        samples: Vec::new(),
    };
    let s0 = match landing_state(model, theta_deg.to_radians(), spec.altitude_km, jacobi) {
        Ok(Some(s)) => s,
        Ok(None) => return res,
        Err(e) => {
            res.outcome = LandingOutcome::Failed { message: e.to_string() };
            return res;
        }
    };
    res.state0 = Some(s0);
    let t0 = arrival_time(model, spec.arrival_days);
    let t1 = t0 - arrival_time(model, spec.duration_days);
    match integrate(model, &s0, t0, t1, settings, events) {
        Ok(tr) => {
            let d: Vec<f64> = tr
                .samples
                .iter()
                .map(|(_, s)| ((s[0] + model.mu2()).powi(2) + s[1] * s[1] + s[2] * s[2]).sqrt())
                .collect();
            res.min_m1_distance = d.iter().copied().fold(f64::INFINITY, f64::min);
            res.max_m1_distance = d.iter().copied().fold(0.0, f64::max);
            res.outcome = match tr.terminated_by {
                Some(k) => LandingOutcome::Collided {
                    body: model.names()[collision_body(&events[k])].clone(),
                },
                None => LandingOutcome::Survived,
            };
            if spec.keep_samples {
                res.samples = tr.samples;
            }
        }
        Err(e) => res.outcome = LandingOutcome::Failed { message: e.to_string() },
    }
    res
}

fn collision_body(e: &EventSpec) -> usize {
    match e.kind {
        crate::propagate::EventKind::Collision { body, .. } => body,
        _ => unreachable!("landing sweeps only register collisions"),
    }
}

/// Runs the sweep; results follow the θ order of [`LandingSpec::thetas_deg`].
pub fn landing_sweep(model: &SystemModel, spec: &LandingSpec, settings: &IntegratorSettings) -> Result<Vec<LandingResult>> {
    spec.validate()?;
    settings.validate()?;
    let jacobi = match spec.jacobi {
        Some(j) => j,
        None => l2_jacobi(model)?,
    };
    let events: Vec<EventSpec> = model
        .collision_radius()
        .iter()
        .enumerate()
        .filter(|(_, &r)| r > 0.0)
        .map(|(j, &r)| EventSpec::collision(j, r))
        .collect();
    Ok(spec
        .thetas_deg()
        .into_par_iter()
        .map(|th| run_one(model, spec, th, jacobi, settings, &events))
        .collect())
}

/// Distance from M1 of the L2 gateway. A backward trajectory that gets farther
/// than this from M1 has left the M2 neighbourhood through the outer neck,
/// which is what counts as arriving from beyond M2's orbit.
pub fn gateway_radius(model: &SystemModel) -> Result<f64> {
    let l2 = lagrange_points(model)?[LagrangePoint::L2.index()];
    Ok(l2[0] + model.mu2())
}

/// θ values whose trajectories survive and exit beyond `radius`.
pub fn exiting_thetas(results: &[LandingResult], radius: f64) -> Vec<f64> {
    results.iter().filter(|r| r.exits_beyond(radius)).map(|r| r.theta_deg).collect()
}

/// Summary table: `theta_deg, outcome, body, min_m1_distance, max_m1_distance`.
pub fn write_summary_csv(path: impl AsRef<std::path::Path>, results: &[LandingResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta_deg", "outcome", "body", "min_m1_distance", "max_m1_distance"])?;
    for r in results {
        let (outcome, body) = match &r.outcome {
            LandingOutcome::Survived => ("survived", String::new()),
            LandingOutcome::Collided { body } => ("collided", body.clone()),
            LandingOutcome::Infeasible => ("infeasible", String::new()),
            LandingOutcome::Failed { .. } => ("failed", String::new()),
        };
        w.write_record([
            r.theta_deg.to_string(),
            outcome.to_string(),
            body,
            r.min_m1_distance.to_string(),
            r.max_m1_distance.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}


/// One sweep per configured arrival offset, written to `out/ta_<days>/`.
pub fn run_landing(cfg: &super::ScenarioConfig, out: &std::path::Path) -> Result<super::Report> {
    use super::{Metadata, Report};

    let block = cfg.block(&cfg.landing, "landing")?;
    let model = cfg.load_system()?.model;
    let settings = IntegratorSettings {
        sample_stride: block.sample_stride.max(1),
        sample_interval: None,
        ..cfg.integrator
    };
    let gateway = gateway_radius(&model)?;
    let m2_radius_km = model.collision_radius()[1] * model.length_unit();
    let mut report = Report::default();
    for &ta in &block.arrival_days {
        let spec = block.spec(ta);
        let jacobi = match spec.jacobi {
            Some(j) => j,
            None => l2_jacobi(&model)?,
        };
        let dir = out.join(format!("ta_{ta}"));
        super::ensure_dir(&dir.join("trajectories"))?;
        let results = landing_sweep(&model, &spec, &settings)?;
        let meta = Metadata::new("landing-sweep", &cfg.source, &model, &settings)
            .with("arrival_days", ta)
            .with("duration_days", spec.duration_days)
            .with("altitude_km", spec.altitude_km)
            .with("m2_radius_km", m2_radius_km)
            .with("jacobi", jacobi)
            .with("gateway_radius", gateway);
        let f = dir.join("summary.csv");
        write_summary_csv(&f, &results)?;
        report.add(f, &meta)?;
        for r in results.iter().filter(|r| r.outcome == LandingOutcome::Survived) {
            let f = dir.join("trajectories").join(format!("theta_{:07.3}.csv", r.theta_deg));
            crate::propagate::write_trajectory_csv(&f, &r.samples)?;
            report.add(f, &meta.clone().with("theta_deg", r.theta_deg))?;
        }
        let count = |pred: &dyn Fn(&LandingOutcome) -> bool| results.iter().filter(|r| pred(&r.outcome)).count();
        let survived = count(&|o| *o == LandingOutcome::Survived);
        let collided = count(&|o| matches!(o, LandingOutcome::Collided { .. }));
        let infeasible = count(&|o| *o == LandingOutcome::Infeasible);
        let failed = count(&|o| matches!(o, LandingOutcome::Failed { .. }));
        if failed > 0 {
            report.partial = true;
        }
        report.note(format!(
            "t_a = {ta} d: {survived} survived, {collided} collided, {infeasible} infeasible, {failed} failed; \
             beyond the L2 gateway (r > {gateway:.5}) at theta {:?}",
            exiting_thetas(&results, gateway)
        ));
    }
    Ok(report)
}
