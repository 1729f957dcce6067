use std::path::Path;

use serde_json::json;

use crate::bodies::SystemModel;
use crate::dynamics::{lagrange_points, State6};
use crate::error::Result;
use crate::orbits::{
    archive_record, continue_family, member_with_period, monodromy, newton_correct, planar_seed, vertical_seed,
    write_archive, Family, OrbitFamilyMember, PeriodicOrbitProblem,
};
use crate::propagate::{integrate, propagate_final, write_trajectory_csv, IntegratorSettings};

use super::{ensure_dir, plain, FamilyConfig, Metadata, Report, ScenarioConfig, SeedKind};

#[derive(Debug, Clone)]
pub struct FamilyRun {
    pub problem: PeriodicOrbitProblem,
    pub family: Family,
    /// Member with the requested period, when one was asked for and found.
    pub target: Option<OrbitFamilyMember>,
    /// Why the target search failed.
    pub target_error: Option<String>,
}

/// Seeds, corrects and continues a family in the autonomous `model`, then
/// locates the member with period `target` if given.
pub fn compute_family(
    model: &SystemModel,
    cfg: &FamilyConfig,
    settings: &IntegratorSettings,
    target: Option<f64>,
) -> Result<FamilyRun> {
    let point = cfg.lagrange_point()?;
    let problem = PeriodicOrbitProblem::free(model)?
        .with_tol(cfg.closure_tol)
        .with_settings(plain(settings));
    let (seed, period) = match cfg.kind {
        SeedKind::Vertical => vertical_seed(model, point, cfg.amplitude)?,
        SeedKind::Planar => planar_seed(model, point, cfg.amplitude)?,
    };
    let first = newton_correct(&problem, &seed, period)?;
    let centre = lagrange_points(model)?[point.index()];
    let family = continue_family(&problem, &first, &cfg.steps, &centre)?;
    let (target, target_error) = match target {
        Some(t) => match member_with_period(&problem, &family.members, t) {
            Ok(m) => (Some(m), None),
            Err(e) => (None, Some(e.to_string())),
        },
        None => (None, None),
    };
    Ok(FamilyRun {
        problem,
        family,
        target,
        target_error,
    })
}

/// `n` samples over one period starting at t = 0, endpoints included.
pub fn sample_orbit(model: &SystemModel, state0: &State6, period: f64, n: usize, settings: &IntegratorSettings) -> Result<Vec<(f64, State6)>> {
    let s = IntegratorSettings {
        sample_interval: Some(period / n.max(1) as f64),
        ..*settings
    };
    Ok(integrate(model, state0, 0.0, period, &s, &[])?.samples)
}

/// Closure residual of `member` re-integrated with both tolerances divided by
/// `tighten` (floored at 1e-15).
pub fn closure_audit(model: &SystemModel, member: &OrbitFamilyMember, settings: &IntegratorSettings, tighten: f64) -> Result<f64> {
    let tight = IntegratorSettings {
        rel_tol: (settings.rel_tol / tighten).max(1e-15),
        abs_tol: (settings.abs_tol / tighten).max(1e-15),
        ..plain(settings)
    };
    let end = propagate_final(model, &member.state0, 0.0, member.period, &tight)?;
    Ok((end - member.state0).amax())
}

fn write_summary(path: &Path, members: &[OrbitFamilyMember]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "index", "param", "period", "closure_residual", "iterations", "x", "y", "z", "vx", "vy", "vz",
    ])?;
    for (i, m) in members.iter().enumerate() {
        let mut row = vec![
            i.to_string(),
            m.param.to_string(),
            m.period.to_string(),
            m.closure_residual.to_string(),
            m.iterations.to_string(),
        ];
        row.extend(m.state0.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Family in the CR3BP part of the configured system.
pub fn run_family(cfg: &ScenarioConfig, out: &Path) -> Result<Report> {
    let block = cfg.block(&cfg.family, "family")?;
    let model = cfg.load_system()?.model.with_epsilon(0.0)?;
    let target = (block.target_period > 0.0).then_some(block.target_period);
    let run = compute_family(&model, block, &cfg.integrator, target)?;
    let settings = run.problem.settings;
    ensure_dir(&out.join("orbits"))?;
    let meta = Metadata::new("family", &cfg.source, &model, &settings)
        .with("point", &block.point)
        .with("seed", format!("{:?}", block.kind).to_lowercase())
        .with("closure_tol", block.closure_tol);
    let mut report = Report::default();
    let members = &run.family.members;

    let records: Vec<_> = members.iter().map(|m| archive_record(&run.problem, m, None)).collect();
    let f = out.join("family.jsonl");
    write_archive(&f, &records)?;
    report.add(f, &meta)?;
    let f = out.join("family_summary.csv");
    write_summary(&f, members)?;
    report.add(f, &meta)?;
    for (i, m) in members.iter().enumerate() {
        let f = out.join("orbits").join(format!("member_{i:04}.csv"));
        write_trajectory_csv(&f, &sample_orbit(&model, &m.state0, m.period, block.samples_per_orbit, &settings)?)?;
        report.add(f, &meta.clone().with("member", i).with("period", m.period))?;
    }

    let mut audit = 0.0f64;
    let mut audit_fail = 0;
    for m in members {
        let r = closure_audit(&model, m, &settings, 10.0)?;
        audit = audit.max(r);
        if r > 10.0 * block.closure_tol {
            audit_fail += 1;
        }
    }
    let worst = members.iter().map(|m| m.closure_residual).fold(0.0, f64::max);
    report.note(format!(
        "{} members, periods {:.9} .. {:.9}, worst closure {worst:.2e}",
        members.len(),
        members.first().map_or(f64::NAN, |m| m.period),
        members.last().map_or(f64::NAN, |m| m.period),
    ));
    report.note(format!(
        "re-verification at 10x tighter tolerances: worst {audit:.2e}, {audit_fail} above 10x the target"
    ));
    if let Some(why) = &run.family.stopped {
        report.note(format!("continuation stopped early: {why}"));
        report.partial = true;
    }

    let mut target_json = serde_json::Value::Null;
    if let Some(t) = &run.target {
        let mono = monodromy(&run.problem, t)?;
        let f = out.join("target_member.jsonl");
        write_archive(&f, &[archive_record(&run.problem, t, None)])?;
        report.add(f, &meta)?;
        let f = out.join("target_member.csv");
        write_trajectory_csv(&f, &sample_orbit(&model, &t.state0, t.period, block.samples_per_orbit, &settings)?)?;
        report.add(f, &meta)?;
        report.note(format!(
            "member with period {}: T - target = {:.2e}, closure {:.2e}, det(M) - 1 = {:.2e}, unit pair {:.2e}",
            block.target_period,
            t.period - block.target_period,
            t.closure_residual,
            mono.determinant - 1.0,
            mono.unit_pair_residual
        ));
        target_json = json!({
            "state0": t.state0.as_slice(),
            "period": t.period,
            "closure_residual": t.closure_residual,
            "determinant": mono.determinant,
            "reciprocal_residual": mono.reciprocal_residual,
            "unit_pair_residual": mono.unit_pair_residual,
        });
    } else if let Some(why) = &run.target_error {
        report.note(format!("no member with period {}: {why}", block.target_period));
        report.partial = true;
    }
    let summary = json!({
        "members": members.len(),
        "stopped": run.family.stopped,
        "worst_closure": worst,
        "audit_worst": audit,
        "audit_failures": audit_fail,
        "target_period": block.target_period,
        "target": target_json,
    });
    let f = out.join("family_report.json");
    std::fs::write(&f, serde_json::to_string_pretty(&summary)? + "\n")?;
    report.add(f, &meta)?;
    Ok(report)
}
