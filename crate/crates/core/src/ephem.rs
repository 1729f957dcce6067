//! Correspondence between an ephemeris fixed frame and the synodic frame.
//!
//! Ephemeris tables are whitespace-separated text, one row per body and date:
//!
//! ```text
//! # frame: ECLIPJ2000
//! # center: Sun
//! # columns: jd body x_km y_km z_km vx_kms vy_kms vz_kms
//! 2456200.5 Jupiter 3.1357e+08 6.8497e+08 -9.8611e+06 -12.05 6.058 0.2446
//! ```
//!
//! Positions and velocities are relative to M1. Lines starting with `#` are
//! comments; `# frame:` and `# center:` are kept as table metadata.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::bodies::SystemModel;
use crate::dynamics::State6;
use crate::error::{Error, Result};

/// Mean orientation elements of M2 in the fixed frame, radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MeanElements {
    pub inclination: f64,
    pub arg_periapsis: f64,
    pub node: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitFrame {
    pub h2: Vector3<f64>,
    pub e2: Vector3<f64>,
    pub e2perp: Vector3<f64>,
    pub elements: MeanElements,
}

pub fn orbit_frame(el: &MeanElements) -> OrbitFrame {
    let (si, ci) = el.inclination.sin_cos();
    let (sw, cw) = el.arg_periapsis.sin_cos();
    let (so, co) = el.node.sin_cos();
    let h2 = Vector3::new(si * so, -si * co, ci);
    let e2 = Vector3::new(cw * co - sw * so * ci, cw * so + sw * co * ci, sw * si);
    OrbitFrame {
        h2,
        e2,
        e2perp: h2.cross(&e2),
        elements: *el,
    }
}

pub fn project_to_plane(frame: &OrbitFrame, s: &Vector3<f64>) -> Vector3<f64> {
    frame.e2 * s.dot(&frame.e2) + frame.e2perp * s.dot(&frame.e2perp)
}

fn projected_nonzero(frame: &OrbitFrame, s: &Vector3<f64>) -> Result<Vector3<f64>> {
    let p = project_to_plane(frame, s);
    if p.norm() <= 1e-12 * s.norm() || p.norm() == 0.0 {
        Err(Error::DegenerateProjection)
    } else {
        Ok(p)
    }
}

/// Initial phase of body j measured from M2 in the orbital plane of M2.
///
/// Because the projected cross product is parallel to ĥ2, its z component is
/// ((a × b)·ĥ2)(ĥ2·ẑ); dividing the ẑ-weighted numerator and denominator by
/// ĥ2·ẑ gives the quadrant-safe pair used here, which also survives ĥ2·ẑ = 0.
pub fn initial_phase(frame: &OrbitFrame, s12: &Vector3<f64>, s1j: &Vector3<f64>) -> Result<f64> {
    let a = projected_nonzero(frame, s12)?;
    let b = projected_nonzero(frame, s1j)?;
    Ok(a.cross(&b).dot(&frame.h2).atan2(a.dot(&b)))
}

/// Rotation from the fixed frame to the synodic frame at t = 0.
pub fn s_matrix(frame: &OrbitFrame, s12: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let s1 = projected_nonzero(frame, s12)?.normalize();
    let s2 = frame.h2.cross(&s1);
    Ok(Matrix3::from_rows(&[s1.transpose(), s2.transpose(), frame.h2.transpose()]))
}

/// Rotation taking the t = 0 synodic axes to those at time t (n12 = 1).
pub fn t_matrix(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Time derivative of [`t_matrix`].
pub fn t_matrix_dot(t: f64) -> Matrix3<f64> {
    let (s, c) = t.sin_cos();
    Matrix3::new(-s, c, 0.0, -c, -s, 0.0, 0.0, 0.0, 0.0)
}

/// Fixed-frame (M1-centred, canonical) ↔ synodic transformation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynodicMap {
    pub s: Matrix3<f64>,
    pub mu2: f64,
}

impl SynodicMap {
    pub fn new(frame: &OrbitFrame, s12: &Vector3<f64>, mu2: f64) -> Result<Self> {
        Ok(SynodicMap {
            s: s_matrix(frame, s12)?,
            mu2,
        })
    }

    /// Map for a fixed frame already aligned with the synodic axes at t = 0.
    pub fn aligned(mu2: f64) -> Self {
        SynodicMap {
            s: Matrix3::identity(),
            mu2,
        }
    }

    /// ρ = TS(s - μ2 SᵀTᵀx̂), ρ̇ = ṪS(s - μ2 SᵀTᵀx̂) + TS(ṡ + μ2 SᵀTᵀṪTᵀx̂).
    pub fn to_synodic(&self, t: f64, s1n: &Vector3<f64>, v1n: &Vector3<f64>) -> State6 {
        let tm = t_matrix(t);
        let td = t_matrix_dot(t);
        let ts = tm * self.s;
        let back = ts.transpose();
        let x = Vector3::x();
        let p = s1n - back * x * self.mu2;
        let pdot = v1n + back * (td * (tm.transpose() * x)) * self.mu2;
        let rho = ts * p;
        let rho_dot = td * self.s * p + ts * pdot;
        State6::new(rho[0], rho[1], rho[2], rho_dot[0], rho_dot[1], rho_dot[2])
    }

    /// Inverse of [`SynodicMap::to_synodic`].
    pub fn to_fixed(&self, t: f64, state: &State6) -> (Vector3<f64>, Vector3<f64>) {
        let tm = t_matrix(t);
        let td = t_matrix_dot(t);
        let back = (tm * self.s).transpose();
        let x = Vector3::x();
        let rho = state.fixed_rows::<3>(0).into_owned();
        let rho_dot = state.fixed_rows::<3>(3).into_owned();
        let p = back * rho;
        let s1n = p + back * x * self.mu2;
        let pdot = back * (rho_dot - td * self.s * p);
        let v1n = pdot - back * (td * (tm.transpose() * x)) * self.mu2;
        (s1n, v1n)
    }
}

pub fn fixed_to_synodic(
    frame: &OrbitFrame,
    s12: &Vector3<f64>,
    mu2: f64,
    t_n: f64,
    s1n: &Vector3<f64>,
    v1n: &Vector3<f64>,
) -> Result<State6> {
    Ok(SynodicMap::new(frame, s12, mu2)?.to_synodic(t_n, s1n, v1n))
}

pub fn synodic_to_fixed(
    frame: &OrbitFrame,
    s12: &Vector3<f64>,
    mu2: f64,
    t_n: f64,
    state: &State6,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    Ok(SynodicMap::new(frame, s12, mu2)?.to_fixed(t_n, state))
}

/// Canonical time of an epoch given the mean motion of M2 in rad/s.
pub fn t_n_from_jd(jd: f64, jd0: f64, n12_si: f64) -> f64 {
    86_400.0 * (jd - jd0) * n12_si
}

/// Converts a km, km/s pair to canonical units of `model`.
pub fn to_canonical(model: &SystemModel, pos_km: &Vector3<f64>, vel_kms: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (pos_km / model.length_unit(), vel_kms / model.velocity_unit())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EphemerisRecord {
    pub body: String,
    pub jd: f64,
    /// km, relative to M1.
    pub position: Vector3<f64>,
    /// km/s.
    pub velocity: Vector3<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EphemerisTable {
    pub frame: Option<String>,
    pub center: Option<String>,
    pub records: Vec<EphemerisRecord>,
}

impl EphemerisTable {
    pub fn record(&self, body: &str, jd: f64) -> Result<&EphemerisRecord> {
        self.records
            .iter()
            .find(|r| r.body == body && (r.jd - jd).abs() < 1e-9)
            .ok_or_else(|| Error::InvalidInput(format!("no ephemeris row for {body} at JD {jd}")))
    }

    pub fn position(&self, body: &str, jd: f64) -> Result<Vector3<f64>> {
        Ok(self.record(body, jd)?.position)
    }

    /// Phase of every listed body relative to `m2` at `jd`.
    pub fn phases(&self, frame: &OrbitFrame, m2: &str, jd: f64) -> Result<Vec<(String, f64)>> {
        let s12 = self.position(m2, jd)?;
        self.records
            .iter()
            .filter(|r| (r.jd - jd).abs() < 1e-9)
            .map(|r| Ok((r.body.clone(), initial_phase(frame, &s12, &r.position)?)))
            .collect()
    }
}

pub fn load_table(path: impl AsRef<Path>) -> Result<EphemerisTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    parse_table(&text, path)
}

pub fn parse_table(text: &str, path: &Path) -> Result<EphemerisTable> {
    let mut table = EphemerisTable::default();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once(':') {
                match key.trim() {
                    "frame" => table.frame = Some(value.trim().to_owned()),
                    "center" => table.center = Some(value.trim().to_owned()),
                    _ => {}
                }
            }
            continue;
        }
        let bad = |message: String| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(bad(format!("expected 8 columns, found {}", fields.len())));
        }
        let num = |k: usize| {
            fields[k]
                .parse::<f64>()
                .map_err(|e| bad(format!("column {}: {e}", k + 1)))
        };
        let record = EphemerisRecord {
            body: fields[1].to_owned(),
            jd: num(0)?,
            position: Vector3::new(num(2)?, num(3)?, num(4)?),
            velocity: Vector3::new(num(5)?, num(6)?, num(7)?),
        };
        if record.position.norm() == 0.0 {
            return Err(bad(format!("{} coincides with M1", record.body)));
        }
        table.records.push(record);
    }
    Ok(table)
}
