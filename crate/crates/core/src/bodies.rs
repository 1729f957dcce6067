//! Body constants and canonical system models.
//!
//! Constants files are TOML with one `[[body]]` table per body:
//!
//! ```toml
//! [[body]]
//! name = "Jupiter"
//! center = "Sun"            # omitted for the central body
//! gm = 126712764.1          # km^3/s^2
//! radius = 69911.0          # km, default collision radius
//! orbit_radius = 778340821.0  # km, circular orbit radius about `center`
//! period_days = 4332.589    # required when `center` is set
//! retrograde = false        # optional
//! ```
//!
//! A system-assembly file names the primaries and the perturbing bodies and
//! points at a constants file (paths are relative to the assembly file):
//!
//! ```toml
//! constants = "../bodies/jovian.toml"
//! m1 = "Jupiter"
//! m2 = "Ganymede"
//! others = ["Io", "Europa"]
//! epsilon = 1.0
//!
//! [mean_motion]          # canonical mean-motion overrides
//! Io = 4.0
//!
//! [phases_deg]           # explicit initial phases, win over the ephemeris
//! Europa = 10.0
//!
//! [collision_altitude_km]
//! Europa = 50.0
//!
//! [ephemeris]            # initial phases from an ephemeris table
//! table = "../ephemeris/jovian_2016-04-09.txt"
//! jd0 = 2457487.5
//! m2_inclination_deg = 0.0
//! m2_arg_periapsis_deg = 0.0
//! m2_node_deg = 0.0
//! ```

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ephem::{self, EphemerisTable, MeanElements, OrbitFrame};
use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Default distance below which the vector field reports a singularity.
pub const DEFAULT_SINGULARITY_FLOOR: f64 = 1e-12;

/// Physical constants of one body, SI-ish units (km, s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BodyConstants {
    pub name: String,
    /// Body this one orbits; `None` for a central body.
    pub center: Option<String>,
    /// Gravitational parameter, km^3/s^2.
    pub gm: f64,
    /// Mean physical radius, km.
    pub radius: f64,
    /// Mean circular orbit radius about `center`, km.
    pub orbit_radius: f64,
    /// Mean orbital period, s.
    pub period: Option<f64>,
    pub retrograde: bool,
}

impl BodyConstants {
    fn validate(&self) -> Result<()> {
        let bad = |field, value| Error::InvalidConstant {
            body: self.name.clone(),
            field,
            value,
        };
        if !(self.gm > 0.0 && self.gm.is_finite()) {
            return Err(bad("gm", self.gm));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(bad("radius", self.radius));
        }
        if !(self.orbit_radius >= 0.0 && self.orbit_radius.is_finite()) {
            return Err(bad("orbit_radius", self.orbit_radius));
        }
        match (self.period, &self.center) {
            (Some(p), _) if !(p > 0.0 && p.is_finite()) => Err(bad("period", p)),
            (None, Some(_)) => Err(bad("period", f64::NAN)),
            _ => Ok(()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConstantsFile {
    body: Vec<RawBody>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBody {
    name: String,
    center: Option<String>,
    gm: f64,
    radius: f64,
    orbit_radius: f64,
    period_days: Option<f64>,
    #[serde(default)]
    retrograde: bool,
}

/// Reads a constants file. Duplicate names and invalid values are rejected.
pub fn load_constants(path: impl AsRef<Path>) -> Result<Vec<BodyConstants>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    parse_constants(&text, path)
}

pub fn parse_constants(text: &str, path: &Path) -> Result<Vec<BodyConstants>> {
    let raw: RawConstantsFile = toml::from_str(text).map_err(|e| toml_error(path, text, e))?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(raw.body.len());
    for b in raw.body {
        if !seen.insert(b.name.clone()) {
            return Err(Error::DuplicateBody(b.name));
        }
        let body = BodyConstants {
            name: b.name,
            center: b.center,
            gm: b.gm,
            radius: b.radius,
            orbit_radius: b.orbit_radius,
            period: b.period_days.map(|d| d * SECONDS_PER_DAY),
            retrograde: b.retrograde,
        };
        body.validate()?;
        out.push(body);
    }
    Ok(out)
}

pub(crate) fn toml_error(path: &Path, text: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
        .unwrap_or(0);
    Error::Parse {
        path: path.to_owned(),
        line,
        message: e.message().to_owned(),
    }
}

/// One massive body of a [`SystemModel`], canonical units.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBody {
    pub name: String,
    pub mu: f64,
    pub orbit_radius: f64,
    pub mean_motion: f64,
    pub psi0: f64,
    pub collision_radius: f64,
}

/// Circular restricted n-body configuration in canonical units.
///
/// Body index 0 is M1, index 1 is M2 and indices `2..` are the perturbing
/// bodies, so 1-based labels M_j map to index j - 1. The model is
/// immutable; the `with_*` methods return modified copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemModel {
    names: Vec<String>,
    mu: Vec<f64>,
    orbit_radius: Vec<f64>,
    mean_motion: Vec<f64>,
    psi0: Vec<f64>,
    collision_radius: Vec<f64>,
    epsilon: f64,
    length_unit: f64,
    time_unit: f64,
    singularity_floor: f64,
}

impl SystemModel {
    pub fn new(
        bodies: Vec<ModelBody>,
        epsilon: f64,
        length_unit: f64,
        time_unit: f64,
    ) -> Result<Self> {
        let model = SystemModel {
            names: bodies.iter().map(|b| b.name.clone()).collect(),
            mu: bodies.iter().map(|b| b.mu).collect(),
            orbit_radius: bodies.iter().map(|b| b.orbit_radius).collect(),
            mean_motion: bodies.iter().map(|b| b.mean_motion).collect(),
            psi0: bodies.iter().map(|b| b.psi0).collect(),
            collision_radius: bodies.iter().map(|b| b.collision_radius).collect(),
            epsilon,
            length_unit,
            time_unit,
            singularity_floor: DEFAULT_SINGULARITY_FLOOR,
        };
        model.validate()?;
        Ok(model)
    }

    /// Plain CR3BP with mass parameter `mu2`, unit scales and zero-size bodies.
    pub fn cr3bp(mu2: f64) -> Result<Self> {
        Self::new(
            vec![
                ModelBody {
                    name: "M1".into(),
                    mu: 1.0 - mu2,
                    orbit_radius: 0.0,
                    mean_motion: 0.0,
                    psi0: 0.0,
                    collision_radius: 0.0,
                },
                ModelBody {
                    name: "M2".into(),
                    mu: mu2,
                    orbit_radius: 1.0,
                    mean_motion: 1.0,
                    psi0: 0.0,
                    collision_radius: 0.0,
                },
            ],
            0.0,
            1.0,
            1.0,
        )
    }

    fn validate(&self) -> Result<()> {
        let n = self.mu.len();
        let invalid = |m: String| Err(Error::InvalidModel(m));
        if n < 2 {
            return invalid(format!("need at least two massive bodies, got {n}"));
        }
        if n > crate::dynamics::MAX_BODIES {
            return invalid(format!("at most {} massive bodies supported", crate::dynamics::MAX_BODIES));
        }
        if self.mu.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return invalid("all mass parameters must be positive".into());
        }
        if (self.mu[0] + self.mu[1] - 1.0).abs() > 1e-15 {
            return invalid(format!(
                "mu1 + mu2 = {} differs from 1",
                self.mu[0] + self.mu[1]
            ));
        }
        if self.orbit_radius[0] != 0.0 || self.orbit_radius[1] != 1.0 {
            return invalid("R1 must be 0 and R2 must be 1".into());
        }
        if self.psi0[1] != 0.0 || self.mean_motion[1] != 1.0 {
            return invalid("M2 must have psi0 = 0 and n = 1".into());
        }
        for j in 2..n {
            if !(self.orbit_radius[j] > 0.0 && self.orbit_radius[j].is_finite()) {
                return invalid(format!("perturber {} has non-positive radius", self.names[j]));
            }
            if !self.mean_motion[j].is_finite() || !self.psi0[j].is_finite() {
                return invalid(format!("perturber {} has non-finite phase law", self.names[j]));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return invalid(format!("epsilon {} outside [0, 1]", self.epsilon));
        }
        if self.collision_radius.iter().any(|&r| !(r >= 0.0)) {
            return invalid("collision radii must be non-negative".into());
        }
        if !(self.length_unit > 0.0 && self.time_unit > 0.0) {
            return invalid("units must be positive".into());
        }
        Ok(())
    }

    /// Number of massive bodies (N - 1).
    pub fn n_massive(&self) -> usize {
        self.mu.len()
    }

    /// Total number of bodies including the particle (N).
    pub fn n_bodies(&self) -> usize {
        self.mu.len() + 1
    }

    pub fn mu1(&self) -> f64 {
        self.mu[0]
    }

    pub fn mu2(&self) -> f64 {
        self.mu[1]
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn orbit_radius(&self) -> &[f64] {
        &self.orbit_radius
    }

    pub fn mean_motion(&self) -> &[f64] {
        &self.mean_motion
    }

    pub fn psi0(&self) -> &[f64] {
        &self.psi0
    }

    pub fn collision_radius(&self) -> &[f64] {
        &self.collision_radius
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// km per canonical distance unit.
    pub fn length_unit(&self) -> f64 {
        self.length_unit
    }

    /// s per canonical time unit.
    pub fn time_unit(&self) -> f64 {
        self.time_unit
    }

    /// km/s per canonical velocity unit.
    pub fn velocity_unit(&self) -> f64 {
        self.length_unit / self.time_unit
    }

    pub fn singularity_floor(&self) -> f64 {
        self.singularity_floor
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownBody(name.to_owned()))
    }

    /// Period of the forcing when every perturber mean motion is commensurate
    /// with the synodic rate, i.e. the smallest `T > 0` with `(n_j - 1) T` a
    /// multiple of 2π for all j. `None` for incommensurate systems; a system
    /// without perturbers is autonomous and also returns `None`.
    pub fn forcing_period(&self, max_multiple: u32) -> Option<f64> {
        let rel: Vec<f64> = self.mean_motion[2..].iter().map(|n| n - 1.0).collect();
        if rel.is_empty() {
            return None;
        }
        (1..=max_multiple).map(|m| m as f64 * TAU).find(|&period| {
            rel.iter().all(|w| {
                let turns = w * period / TAU;
                (turns - turns.round()).abs() < 1e-9
            })
        })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut m = self.clone();
        m.epsilon = epsilon;
        m.validate()?;
        Ok(m)
    }

    pub fn with_singularity_floor(&self, floor: f64) -> Self {
        let mut m = self.clone();
        m.singularity_floor = floor;
        m
    }

    /// Sets the initial phase of a perturber, radians.
    pub fn with_phase(&self, name: &str, psi0: f64) -> Result<Self> {
        let j = self.index_of(name)?;
        if j < 2 {
            return Err(Error::InvalidInput(format!("cannot set the phase of primary {name}")));
        }
        let mut m = self.clone();
        m.psi0[j] = psi0;
        m.validate()?;
        Ok(m)
    }

    /// Overrides a perturber's canonical mean motion.
    pub fn with_mean_motion(&self, name: &str, n: f64) -> Result<Self> {
        let j = self.index_of(name)?;
        if j < 2 {
            return Err(Error::InvalidInput(format!(
                "cannot override the mean motion of primary {name}"
            )));
        }
        let mut m = self.clone();
        m.mean_motion[j] = n;
        m.validate()?;
        Ok(m)
    }

    /// Adds an altitude (km) to a body's collision radius.
    pub fn with_collision_altitude(&self, name: &str, altitude_km: f64) -> Result<Self> {
        let j = self.index_of(name)?;
        let mut m = self.clone();
        m.collision_radius[j] += altitude_km / self.length_unit;
        m.validate()?;
        Ok(m)
    }

    /// Same model restricted to the two primaries.
    pub fn primaries_only(&self) -> Self {
        let mut m = self.clone();
        for v in [
            &mut m.mu,
            &mut m.orbit_radius,
            &mut m.mean_motion,
            &mut m.psi0,
            &mut m.collision_radius,
        ] {
            v.truncate(2);
        }
        m.names.truncate(2);
        m
    }

    /// Hex SHA-256 of the serialized model, used to tag output artifacts.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("model serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Assembles a canonical model. `m1` must be the most massive of the selected
/// bodies and every other body must orbit `m1`.
pub fn build_system(
    constants: &[BodyConstants],
    m1: &str,
    m2: &str,
    others: &[&str],
    epsilon: f64,
) -> Result<SystemModel> {
    let find = |name: &str| {
        constants
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| Error::UnknownBody(name.to_owned()))
    };
    let mut selected = vec![find(m1)?, find(m2)?];
    for &o in others {
        selected.push(find(o)?);
    }
    let mut seen = HashSet::new();
    for b in &selected {
        if !seen.insert(b.name.as_str()) {
            return Err(Error::DuplicateBody(b.name.clone()));
        }
    }
    let primary = selected[0];
    if let Some(heavier) = selected[1..].iter().find(|b| b.gm > primary.gm) {
        return Err(Error::InvalidModel(format!(
            "{} is more massive than M1 = {}",
            heavier.name, primary.name
        )));
    }
    for b in &selected[1..] {
        if b.center.as_deref() != Some(m1) {
            return Err(Error::NotOrbiting {
                body: b.name.clone(),
                center: m1.to_owned(),
            });
        }
    }

    let secondary = selected[1];
    let length_unit = secondary.orbit_radius;
    let t2 = secondary.period.expect("validated: orbiting bodies have periods");
    let time_unit = t2 / TAU;
    let total_gm = primary.gm + secondary.gm;
    let mu2 = secondary.gm / total_gm;

    let bodies = selected
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let (mu, orbit_radius, mean_motion) = match j {
                0 => (1.0 - mu2, 0.0, 0.0),
                1 => (mu2, 1.0, 1.0),
                _ => {
                    let n = TAU * time_unit / b.period.expect("validated");
                    (
                        b.gm / total_gm,
                        b.orbit_radius / length_unit,
                        if b.retrograde { -n } else { n },
                    )
                }
            };
            ModelBody {
                name: b.name.clone(),
                mu,
                orbit_radius,
                mean_motion,
                psi0: 0.0,
                collision_radius: b.radius / length_unit,
            }
        })
        .collect();
    SystemModel::new(bodies, epsilon, length_unit, time_unit)
}

/// Ephemeris correspondence attached to an assembled system.
#[derive(Debug, Clone)]
pub struct EphemerisSetup {
    pub table: EphemerisTable,
    pub jd0: f64,
    pub m2_elements: MeanElements,
    pub frame: OrbitFrame,
}

/// A model built from a system-assembly file.
#[derive(Debug, Clone)]
pub struct SystemAssembly {
    pub model: SystemModel,
    pub constants: Vec<BodyConstants>,
    pub ephemeris: Option<EphemerisSetup>,
    pub source: PathBuf,
}

fn default_epsilon() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAssembly {
    constants: PathBuf,
    m1: String,
    m2: String,
    #[serde(default)]
    others: Vec<String>,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default)]
    mean_motion: BTreeMap<String, f64>,
    #[serde(default)]
    phases_deg: BTreeMap<String, f64>,
    #[serde(default)]
    collision_altitude_km: BTreeMap<String, f64>,
    ephemeris: Option<RawEphemeris>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEphemeris {
    table: PathBuf,
    jd0: f64,
    #[serde(default)]
    m2_inclination_deg: f64,
    #[serde(default)]
    m2_arg_periapsis_deg: f64,
    #[serde(default)]
    m2_node_deg: f64,
}

/// Loads a system-assembly file and everything it references.
pub fn load_system(path: impl AsRef<Path>) -> Result<SystemAssembly> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.to_owned(),
        message: e.to_string(),
    })?;
    let raw: RawAssembly = toml::from_str(&text).map_err(|e| toml_error(path, &text, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let constants = load_constants(base.join(&raw.constants))?;
    let others: Vec<&str> = raw.others.iter().map(String::as_str).collect();
    let mut model = build_system(&constants, &raw.m1, &raw.m2, &others, raw.epsilon)?;

    for (name, n) in &raw.mean_motion {
        model = model.with_mean_motion(name, *n)?;
    }
    for (name, alt) in &raw.collision_altitude_km {
        model = model.with_collision_altitude(name, *alt)?;
    }

    let ephemeris = match raw.ephemeris {
        Some(e) => {
            let table = ephem::load_table(base.join(&e.table))?;
            let m2_elements = MeanElements {
                inclination: e.m2_inclination_deg.to_radians(),
                arg_periapsis: e.m2_arg_periapsis_deg.to_radians(),
                node: e.m2_node_deg.to_radians(),
            };
            let frame = ephem::orbit_frame(&m2_elements);
            let setup = EphemerisSetup {
                table,
                jd0: e.jd0,
                m2_elements,
                frame,
            };
            let s12 = setup.table.position(&raw.m2, e.jd0)?;
            for name in &raw.others {
                if raw.phases_deg.contains_key(name) {
                    continue;
                }
                let s1j = setup.table.position(name, e.jd0)?;
                let psi = ephem::initial_phase(&frame, &s12, &s1j)?;
                model = model.with_phase(name, psi)?;
            }
            Some(setup)
        }
        None => None,
    };
    for (name, deg) in &raw.phases_deg {
        model = model.with_phase(name, wrap_pi(deg.to_radians()))?;
    }

    Ok(SystemAssembly {
        model,
        constants,
        ephemeris,
        source: path.to_owned(),
    })
}

/// Reduces an angle to (-π, π].
pub fn wrap_pi(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(name: &str, center: Option<&str>, gm: f64, a: f64, days: Option<f64>) -> BodyConstants {
        BodyConstants {
            name: name.into(),
            center: center.map(Into::into),
            gm,
            radius: 1.0,
            orbit_radius: a,
            period: days.map(|d| d * SECONDS_PER_DAY),
            retrograde: false,
        }
    }

    #[test]
    fn minimal_two_body_file() {
        let text = r#"
            [[body]]
            name = "A"
            gm = 10.0
            radius = 1.0
            orbit_radius = 0.0

            [[body]]
            name = "B"
            center = "A"
            gm = 1.0
            radius = 0.5
            orbit_radius = 100.0
            period_days = 2.0
        "#;
        let bodies = parse_constants(text, Path::new("mem.toml")).unwrap();
        assert_eq!(bodies.len(), 2);
        assert_eq!(bodies[1].period, Some(2.0 * SECONDS_PER_DAY));
    }

    #[test]
    fn negative_gm_rejected() {
        let text = "[[body]]\nname = \"A\"\ngm = -1.0\nradius = 1.0\norbit_radius = 0.0\n";
        let err = parse_constants(text, Path::new("mem.toml")).unwrap_err();
        assert!(matches!(err, Error::InvalidConstant { field: "gm", .. }), "{err}");
    }

    #[test]
    fn missing_field_reports_line() {
        let text = "[[body]]\nname = \"A\"\nradius = 1.0\norbit_radius = 0.0\n";
        match parse_constants(text, Path::new("mem.toml")).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert!(line >= 1);
                assert!(message.contains("gm"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = "[[body]]\nname = \"A\"\ngm = 1.0\nradius = 1.0\norbit_radius = 0.0\n\
                    [[body]]\nname = \"A\"\ngm = 2.0\nradius = 1.0\norbit_radius = 0.0\n";
        assert!(matches!(
            parse_constants(text, Path::new("mem.toml")),
            Err(Error::DuplicateBody(_))
        ));
    }

    #[test]
    fn build_rejects_bad_topology() {
        let c = vec![
            body("S", None, 100.0, 0.0, None),
            body("J", Some("S"), 1.0, 5.0, Some(4000.0)),
            body("m", Some("J"), 0.01, 0.1, Some(3.0)),
        ];
        assert!(matches!(
            build_system(&c, "S", "J", &["m"], 1.0),
            Err(Error::NotOrbiting { .. })
        ));
        assert!(matches!(
            build_system(&c, "S", "J", &["J"], 1.0),
            Err(Error::DuplicateBody(_))
        ));
        assert!(matches!(
            build_system(&c, "J", "S", &[], 1.0),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn degenerate_cr3bp_system() {
        let c = vec![
            body("S", None, 100.0, 0.0, None),
            body("J", Some("S"), 1.0, 5.0, Some(4000.0)),
        ];
        let m = build_system(&c, "S", "J", &[], 0.3).unwrap();
        assert_eq!(m.n_bodies(), 3);
        assert_eq!(m.mu().len(), 2);
        assert_eq!(m.orbit_radius(), &[0.0, 1.0]);
        assert_eq!(m.mu1() + m.mu2(), 1.0);
    }

    #[test]
    fn forcing_period_of_resonant_chain() {
        let c = vec![
            body("J", None, 100.0, 0.0, None),
            body("G", Some("J"), 1.0, 4.0, Some(8.0)),
            body("I", Some("J"), 1.0, 1.0, Some(2.0)),
            body("E", Some("J"), 1.0, 2.0, Some(4.0)),
        ];
        let m = build_system(&c, "J", "G", &["I", "E"], 1.0).unwrap();
        let p = m.forcing_period(4).unwrap();
        assert!((p - TAU).abs() < 1e-12);
        let incommensurate = m.with_mean_motion("I", 4.1234567).unwrap();
        assert!(incommensurate.forcing_period(4).is_none());
    }

    #[test]
    fn wrap_pi_range() {
        assert_eq!(wrap_pi(PI), PI);
        assert!((wrap_pi(-PI) - PI).abs() < 1e-15);
        assert!((wrap_pi(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-15);
    }
}
