use nalgebra::Vector3;

use crate::bodies::SystemModel;
use crate::dynamics::State6;
use crate::ephem::{t_matrix, SynodicMap};
use crate::error::{Error, Result};

/// Solves E - e sin E = M by Newton iteration.
pub fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidInput(format!("eccentricity {e} outside [0, 1)")));
    }
    let m = mean_anomaly;
    let mut ecc = if e < 0.8 { m } else { std::f64::consts::PI * m.signum() };
    for _ in 0..50 {
        let f = ecc - e * ecc.sin() - m;
        let step = f / (1.0 - e * ecc.cos());
        ecc -= step;
        if step.abs() < 1e-13 {
            return Ok(ecc);
        }
    }
    Err(Error::KeplerDivergence {
        mean_anomaly,
        eccentricity: e,
    })
}

/// Planar two-body position and velocity about a centre of gravitational
/// parameter `gm`, with the periapsis at longitude `varpi`.
pub fn elements_to_inertial(
    gm: f64,
    a: f64,
    e: f64,
    mean_anomaly: f64,
    varpi: f64,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    if !(a > 0.0) {
        return Err(Error::InvalidInput(format!("semi-major axis {a} must be positive")));
    }
    let big_e = solve_kepler(mean_anomaly, e)?;
    let (se, ce) = big_e.sin_cos();
    let b = a * (1.0 - e * e).sqrt();
    let n = (gm / (a * a * a)).sqrt();
    let edot = n / (1.0 - e * ce);
    let (px, py) = (a * (ce - e), b * se);
    let (vx, vy) = (-a * se * edot, b * ce * edot);
    let (sw, cw) = varpi.sin_cos();
    Ok((
        Vector3::new(cw * px - sw * py, sw * px + cw * py, 0.0),
        Vector3::new(cw * vx - sw * vy, sw * vx + cw * vy, 0.0),
    ))
}

/// Synodic state of a particle on an M1-centred planar ellipse whose mean
/// anomaly leads the M1–M2 line by `phase_offset` at canonical time `epoch`.
/// The periapsis lies on the M1–M2 line; see [`elements_to_state_with`].
pub fn elements_to_state(model: &SystemModel, a: f64, e: f64, phase_offset: f64, epoch: f64) -> Result<State6> {
    elements_to_state_with(model, a, e, phase_offset, 0.0, epoch)
}

/// As [`elements_to_state`] with the periapsis longitude `varpi` measured from
/// the M1–M2 line. Elements are osculating about M1 with GM = μ1 + μ2 = 1.
pub fn elements_to_state_with(
    model: &SystemModel,
    a: f64,
    e: f64,
    mean_anomaly: f64,
    varpi: f64,
    epoch: f64,
) -> Result<State6> {
    let (p, v) = elements_to_inertial(1.0, a, e, mean_anomaly, varpi)?;
    // Rotate into the fixed frame that coincides with the synodic one at t = 0.
    let back = t_matrix(epoch).transpose();
    Ok(SynodicMap::aligned(model.mu2()).to_synodic(epoch, &(back * p), &(back * v)))
}
