use std::path::Path;

use serde_json::json;

use crate::error::{Error, Result};
use crate::orbits::{
    archive_record, closest_branch, epsilon_branches, monodromy, write_archive, EpsilonBranch, OrbitFamilyMember,
    PeriodMode, PeriodicOrbitProblem,
};
use crate::propagate::write_trajectory_csv;

use super::{closure_audit, compute_family, ensure_dir, plain, sample_orbit, Metadata, Report, ScenarioConfig};

#[derive(Debug, Clone)]
pub struct EpsilonRun {
    /// Fixed-period problem in the full model.
    pub problem: PeriodicOrbitProblem,
    /// CR3BP orbit with the forcing period.
    pub parent: OrbitFamilyMember,
    pub branches: Vec<EpsilonBranch>,
    pub selected: usize,
}

impl EpsilonRun {
    pub fn branch(&self) -> &EpsilonBranch {
        &self.branches[self.selected]
    }
}

/// Runs the family to the CR3BP member whose period is p forcing periods and
/// continues it in ε from every Melnikov phase.
pub fn compute_epsilon(cfg: &ScenarioConfig) -> Result<EpsilonRun> {
    let fam_cfg = cfg.block(&cfg.family, "family")?;
    let block = cfg.block(&cfg.epsilon, "epsilon")?;
    let model = cfg.load_system()?.model;
    let problem = PeriodicOrbitProblem::fixed(&model, block.p)?
        .with_tol(block.closure_tol)
        .with_settings(plain(&cfg.integrator));
    let PeriodMode::Fixed { period } = problem.mode else {
        unreachable!("fixed() builds a fixed-period problem")
    };
    let fam = compute_family(&model.with_epsilon(0.0)?, fam_cfg, &cfg.integrator, Some(period))?;
    let parent = fam.target.ok_or_else(|| {
        Error::InvalidInput(format!(
            "family has no member with period {period}: {}",
            fam.target_error.unwrap_or_default()
        ))
    })?;
    let branches = epsilon_branches(&problem, &parent, &block.steps, block.melnikov_samples, block.deformation_samples)?;
    if branches.is_empty() {
        return Err(Error::InvalidInput("the Melnikov function has no zero; no branch to follow".into()));
    }
    let selected = match block.branch {
        Some(k) if k < branches.len() => k,
        Some(k) => {
            return Err(Error::InvalidInput(format!(
                "branch {k} requested but only {} Melnikov roots found",
                branches.len()
            )))
        }
        // Fall back to the branch that got furthest.
        None => closest_branch(&branches).unwrap_or_else(|| {
            (0..branches.len())
                .max_by(|&a, &b| {
                    let e = |i: usize| branches[i].family.members.last().map_or(0.0, |m| m.param);
                    e(a).total_cmp(&e(b))
                })
                .unwrap()
        }),
    };
    Ok(EpsilonRun {
        problem,
        parent,
        branches,
        selected,
    })
}

/// ε-homotopy of the p-periodic CR3BP orbit into the configured CRNBP.
pub fn run_epsilon(cfg: &ScenarioConfig, out: &Path) -> Result<Report> {
    let block = cfg.block(&cfg.epsilon, "epsilon")?;
    let run = compute_epsilon(cfg)?;
    let model = &run.problem.model;
    let settings = run.problem.settings;
    ensure_dir(&out.join("orbits"))?;
    let meta = Metadata::new("epsilon-continue", &cfg.source, model, &settings)
        .with("p", block.p)
        .with("period", run.parent.period)
        .with("closure_tol", block.closure_tol);
    let mut report = Report::default();
    let target = block.steps.target;

    let f = out.join("branches.csv");
    {
        let mut w = csv::Writer::from_path(&f)?;
        w.write_record(["index", "theta", "members", "final_epsilon", "deformation", "selected", "stopped"])?;
        for (i, b) in run.branches.iter().enumerate() {
            w.write_record([
                i.to_string(),
                b.theta.to_string(),
                b.family.members.len().to_string(),
                b.family.members.last().map_or(0.0, |m| m.param).to_string(),
                b.deformation.map_or(String::new(), |d| d.to_string()),
                (i == run.selected).to_string(),
                b.family.stopped.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    report.add(f, &meta)?;
    for (i, b) in run.branches.iter().enumerate() {
        report.note(format!(
            "branch {i}: theta {:.4}, {} members, reached eps {}, deformation {}{}",
            b.theta,
            b.family.members.len(),
            b.family.members.last().map_or(0.0, |m| m.param),
            b.deformation.map_or("-".into(), |d| format!("{d:.4}")),
            if i == run.selected { " (selected)" } else { "" }
        ));
        let records: Vec<_> = b
            .family
            .members
            .iter()
            .map(|m| {
                let sub = run.problem.with_model(model.with_epsilon(m.param).expect("ε in [0, 1]"));
                archive_record(&sub, m, Some(block.p))
            })
            .collect();
        let name = if i == run.selected {
            "epsilon.jsonl".to_string()
        } else {
            format!("epsilon_branch_{i}.jsonl")
        };
        let f = out.join(name);
        write_archive(&f, &records)?;
        report.add(f, &meta.clone().with("branch", i).with("theta", b.theta))?;
    }

    let branch = run.branch();
    let members = &branch.family.members;
    let n = block.snapshots.max(2);
    let mut written = Vec::new();
    for k in 0..n {
        let want = target * k as f64 / (n - 1) as f64;
        let m = members
            .iter()
            .min_by(|a, b| (a.param - want).abs().total_cmp(&(b.param - want).abs()))
            .expect("branch holds its start");
        if written.contains(&m.param.to_bits()) {
            continue;
        }
        written.push(m.param.to_bits());
        let eps_model = model.with_epsilon(m.param)?;
        let f = out.join("orbits").join(format!("eps_{:.4}.csv", m.param));
        write_trajectory_csv(&f, &sample_orbit(&eps_model, &m.state0, m.period, block.samples_per_orbit, &settings)?)?;
        report.add(f, &meta.clone().with("epsilon", m.param))?;
    }

    let last = members.last().expect("branch holds its start");
    let mut end_json = serde_json::Value::Null;
    if last.param >= target {
        let end_model = model.with_epsilon(last.param)?;
        let audit = closure_audit(&end_model, last, &settings, 10.0)?;
        let mono = monodromy(&run.problem.with_model(end_model), last)?;
        report.note(format!(
            "eps = {} orbit: closure {:.2e}, re-integrated at 10x tighter tolerances {audit:.2e}, det(M) - 1 = {:.2e}",
            last.param,
            last.closure_residual,
            mono.determinant - 1.0
        ));
        end_json = json!({
            "state0": last.state0.as_slice(),
            "period": last.period,
            "closure_residual": last.closure_residual,
            "audit_residual": audit,
            "determinant": mono.determinant,
            "reciprocal_residual": mono.reciprocal_residual,
            "eigenvalues": last.monodromy_eigs,
        });
    } else {
        report.note(format!("selected branch stopped at eps = {}", last.param));
        report.partial = true;
    }
    if run.branches.iter().any(|b| !b.reached(target)) {
        report.partial = true;
    }
    let summary = json!({
        "parent": { "state0": run.parent.state0.as_slice(), "period": run.parent.period },
        "thetas": run.branches.iter().map(|b| b.theta).collect::<Vec<_>>(),
        "deformations": run.branches.iter().map(|b| b.deformation).collect::<Vec<_>>(),
        "selected": run.selected,
        "end": end_json,
    });
    let f = out.join("epsilon_report.json");
    std::fs::write(&f, serde_json::to_string_pretty(&summary)? + "\n")?;
    report.add(f, &meta)?;
    Ok(report)
}
