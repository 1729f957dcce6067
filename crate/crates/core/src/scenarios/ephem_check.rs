use std::path::Path;

use nalgebra::Matrix3;
use serde::Serialize;

use crate::bodies::{wrap_pi, SystemAssembly};
use crate::dynamics::State6;
use crate::ephem::{t_matrix, to_canonical, SynodicMap};
use crate::error::{Error, Result};

use super::{ensure_dir, EphemCheckConfig, Metadata, Report, ScenarioConfig};

#[derive(Debug, Clone, Serialize)]
pub struct PhaseRow {
    pub body: String,
    /// From the table, radians in (-π, π].
    pub psi0: f64,
    pub psi0_deg: f64,
    /// Difference to the phase stored in the model, when the body is in it.
    pub model_difference: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EphemCheck {
    pub jd: f64,
    pub phases: Vec<PhaseRow>,
    /// max |SᵀS − I| and |det S − 1|.
    pub s_orthonormality: f64,
    /// Same for T(t) over the check times.
    pub t_orthonormality: f64,
    /// Worst position/velocity mismatch of fixed → synodic → fixed over the
    /// table rows at `jd` and all check times.
    pub fixed_round_trip: f64,
    /// Worst mismatch of synodic → fixed → synodic for the test state.
    pub synodic_round_trip: f64,
}

fn orthonormality(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity())
        .amax()
        .max((m.determinant() - 1.0).abs())
}

/// Phases and frame round trips of an assembled system's ephemeris.
pub fn ephem_check(sys: &SystemAssembly, cfg: &EphemCheckConfig) -> Result<EphemCheck> {
    let setup = sys
        .ephemeris
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("system has no [ephemeris] table".into()))?;
    let model = &sys.model;
    let jd = cfg.jd.unwrap_or(setup.jd0);
    let m2 = &model.names()[1];
    let s12 = setup.table.position(m2, jd)?;
    let map = SynodicMap::new(&setup.frame, &s12, model.mu2())?;

    let phases = setup
        .table
        .phases(&setup.frame, m2, jd)?
        .into_iter()
        .map(|(body, psi)| {
            let psi = wrap_pi(psi);
            let model_difference = model
                .index_of(&body)
                .ok()
                .map(|j| wrap_pi(model.psi0()[j] - psi).abs());
            PhaseRow {
                psi0_deg: psi.to_degrees(),
                body,
                psi0: psi,
                model_difference,
            }
        })
        .collect();

    let times = cfg.times.clone().unwrap_or_else(|| vec![0.0, 0.7, 2.5, 10.0]);
    let test = cfg
        .state
        .map(|s| State6::from_column_slice(&s))
        .unwrap_or_else(|| State6::new(1.1, -0.05, 0.02, 0.01, 0.3, -0.004));
    let mut t_orth = 0.0f64;
    let mut fixed_rt = 0.0f64;
    let mut synodic_rt = 0.0f64;
    for &t in &times {
        t_orth = t_orth.max(orthonormality(&t_matrix(t)));
        for rec in setup.table.records.iter().filter(|r| (r.jd - jd).abs() < 1e-9) {
            let (p, v) = to_canonical(model, &rec.position, &rec.velocity);
            let s = map.to_synodic(t, &p, &v);
            let (p2, v2) = map.to_fixed(t, &s);
            fixed_rt = fixed_rt.max((p2 - p).amax() / p.amax().max(1.0)).max((v2 - v).amax() / v.amax().max(1.0));
        }
        let (p, v) = map.to_fixed(t, &test);
        synodic_rt = synodic_rt.max((map.to_synodic(t, &p, &v) - test).amax());
    }
    Ok(EphemCheck {
        jd,
        phases,
        s_orthonormality: orthonormality(&map.s),
        t_orthonormality: t_orth,
        fixed_round_trip: fixed_rt,
        synodic_round_trip: synodic_rt,
    })
}

pub fn run_ephem_check(cfg: &ScenarioConfig, out: &Path) -> Result<Report> {
    let block = cfg.ephem_check.clone().unwrap_or_default();
    let sys = cfg.load_system()?;
    let check = ephem_check(&sys, &block)?;
    ensure_dir(out)?;
    let meta = Metadata::new("ephem-check", &cfg.source, &sys.model, &cfg.integrator).with("jd", check.jd);
    let mut report = Report::default();
    for p in &check.phases {
        report.note(format!(
            "{:<10} psi0 = {:>11.6} deg{}",
            p.body,
            p.psi0_deg,
            p.model_difference
                .map_or(String::new(), |d| format!("  (model differs by {d:.1e} rad)"))
        ));
    }
    report.note(format!(
        "S orthonormality {:.1e}, T orthonormality {:.1e}",
        check.s_orthonormality, check.t_orthonormality
    ));
    report.note(format!(
        "round trips: fixed -> synodic -> fixed {:.1e}, synodic -> fixed -> synodic {:.1e}",
        check.fixed_round_trip, check.synodic_round_trip
    ));
    let f = out.join("ephem_check.json");
    std::fs::write(&f, serde_json::to_string_pretty(&check)? + "\n")?;
    report.add(f, &meta)?;
    Ok(report)
}
