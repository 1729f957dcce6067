//! Periodic orbits: differential correction, monodromy, family continuation
//! in the CR3BP and ε-homotopy into the CRNBP.

mod epsilon;
mod seeds;

pub use epsilon::{
    closest_branch, continue_epsilon, deformation, epsilon_branches, melnikov, melnikov_phases, shift_phase, EpsilonBranch,
    EpsilonSteps,
};
pub use seeds::{planar_seed, vertical_frequency, vertical_seed};

use std::f64::consts::TAU;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector, Matrix6, SVector};
use serde::{Deserialize, Serialize};

use crate::bodies::SystemModel;
use crate::dynamics::{vector_field, State6};
use crate::error::{Error, Result};
use crate::propagate::{stm_propagate, IntegratorSettings};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PeriodMode {
    /// Period is an unknown; only valid for autonomous models.
    Free,
    /// Period held at `period`, which must be a multiple of the forcing period.
    Fixed { period: f64 },
}

#[derive(Debug, Clone)]
pub struct PeriodicOrbitProblem {
    pub model: SystemModel,
    pub mode: PeriodMode,
    /// Closure residual target, ∞-norm.
    pub tol: f64,
    pub max_iterations: usize,
    pub settings: IntegratorSettings,
}

/// True when the vector field does not depend on time.
pub fn is_autonomous(model: &SystemModel) -> bool {
    model.epsilon() == 0.0 || model.n_massive() < 3
}

impl PeriodicOrbitProblem {
    fn with_mode(model: &SystemModel, mode: PeriodMode) -> Self {
        PeriodicOrbitProblem {
            model: model.clone(),
            mode,
            tol: 1e-10,
            max_iterations: 25,
            settings: IntegratorSettings::default().with_tolerance(1e-13),
        }
    }

    /// Free-period problem for an autonomous model.
    pub fn free(model: &SystemModel) -> Result<Self> {
        if !is_autonomous(model) {
            return Err(Error::InvalidInput(
                "free-period correction needs an autonomous model (ε = 0 or no perturbers)".into(),
            ));
        }
        Ok(Self::with_mode(model, PeriodMode::Free))
    }

    /// Period fixed at `p` forcing periods. For an autonomous model the
    /// forcing period is taken as 2π, the M1–M2 period.
    pub fn fixed(model: &SystemModel, p: u32) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidInput("period multiple must be positive".into()));
        }
        let base = if model.n_massive() < 3 {
            TAU
        } else {
            model.forcing_period(64).ok_or_else(|| {
                Error::InvalidInput("perturber mean motions are not commensurate; no periodic forcing".into())
            })?
        };
        Ok(Self::with_mode(model, PeriodMode::Fixed { period: p as f64 * base }))
    }

    /// Period fixed at an arbitrary value. Allowed for autonomous models, or
    /// when `period` is a multiple of the forcing period.
    pub fn fixed_period(model: &SystemModel, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::InvalidInput("period must be positive".into()));
        }
        if model.n_massive() >= 3 {
            let ok = model.forcing_period(64).is_some_and(|base| {
                let k = period / base;
                (k - k.round()).abs() < 1e-9 && k.round() >= 1.0
            });
            if !ok && !is_autonomous(model) {
                return Err(Error::InvalidInput(format!(
                    "period {period} is not a multiple of the forcing period"
                )));
            }
        }
        Ok(Self::with_mode(model, PeriodMode::Fixed { period }))
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_settings(mut self, settings: IntegratorSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn with_model(&self, model: SystemModel) -> Self {
        PeriodicOrbitProblem { model, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitFamilyMember {
    pub state0: State6,
    pub period: f64,
    /// Arclength along a family, or ε along a homotopy.
    pub param: f64,
    /// Monodromy eigenvalues as (re, im).
    pub monodromy_eigs: Vec<[f64; 2]>,
    pub closure_residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Monodromy {
    pub matrix: Matrix6<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub determinant: f64,
    /// Worst mismatch of λ_i λ_j = 1 over the best partner j of each i.
    pub reciprocal_residual: f64,
    /// Larger distance to 1 of the two eigenvalues closest to 1.
    pub unit_pair_residual: f64,
}

impl Monodromy {
    pub fn from_matrix(matrix: Matrix6<f64>) -> Self {
        let eigenvalues: Vec<Complex<f64>> = matrix.complex_eigenvalues().iter().copied().collect();
        let mut reciprocal_residual: f64 = 0.0;
        for (i, a) in eigenvalues.iter().enumerate() {
            let best = eigenvalues
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| (a * b - 1.0).norm())
                .fold(f64::INFINITY, f64::min);
            reciprocal_residual = reciprocal_residual.max(best);
        }
        let mut dist: Vec<f64> = eigenvalues.iter().map(|l| (l - 1.0).norm()).collect();
        dist.sort_by(|a, b| a.total_cmp(b));
        Monodromy {
            matrix,
            determinant: matrix.determinant(),
            reciprocal_residual,
            unit_pair_residual: dist[1],
            eigenvalues,
        }
    }
}

/// STM over one period of a member, starting at t = 0.
pub fn monodromy(problem: &PeriodicOrbitProblem, member: &OrbitFamilyMember) -> Result<Monodromy> {
    let (_, phi) = stm_propagate(&problem.model, &member.state0, 0.0, member.period, &problem.settings)?;
    Ok(Monodromy::from_matrix(phi))
}

fn eig_pairs(phi: &Matrix6<f64>) -> Vec<[f64; 2]> {
    phi.complex_eigenvalues().iter().map(|c| [c.re, c.im]).collect()
}

/// Minimum-norm least-squares solution, discarding the `drop` smallest
/// singular values.
fn svd_solve(a: DMatrix<f64>, b: DVector<f64>, drop: usize) -> Result<DVector<f64>> {
    let n = a.ncols();
    let svd = a.svd(true, true);
    let s = &svd.singular_values;
    let keep = s.len().saturating_sub(drop);
    if keep == 0 || !(s[keep - 1] > 1e-14 * s[0]) {
        return Err(Error::SingularCorrector);
    }
    let u = svd.u.as_ref().expect("u computed");
    let vt = svd.v_t.as_ref().expect("v_t computed");
    let mut x = DVector::zeros(n);
    for k in 0..keep {
        let coef = u.column(k).dot(&b) / s[k];
        x += vt.row(k).transpose() * coef;
    }
    Ok(x)
}

/// Right singular vector of the smallest singular value.
fn null_vector(a: DMatrix<f64>) -> DVector<f64> {
    let n = a.ncols();
    // Pad to square so the full right basis is available.
    let a = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(&a);
        p
    } else {
        a
    };
    let svd = a.svd(false, true);
    let vt = svd.v_t.expect("v_t computed");
    let k = (0..n)
        .min_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]))
        .unwrap();
    vt.row(k).transpose()
}

/// Period-map evaluation: end state, STM and closure residual.
struct Shot {
    end: State6,
    phi: Matrix6<f64>,
    residual: State6,
}

fn shoot(problem: &PeriodicOrbitProblem, x0: &State6, period: f64) -> Result<Shot> {
    let (end, phi) = stm_propagate(&problem.model, x0, 0.0, period, &problem.settings)?;
    Ok(Shot {
        end,
        phi,
        residual: end - x0,
    })
}

fn member_from(x0: State6, period: f64, param: f64, shot: &Shot, iterations: usize) -> OrbitFamilyMember {
    OrbitFamilyMember {
        state0: x0,
        period,
        param,
        monodromy_eigs: eig_pairs(&shot.phi),
        closure_residual: shot.residual.amax(),
        iterations,
    }
}

/// Extra linear constraint appended to the corrector rows.
struct Constraint {
    row: SVector<f64, 7>,
    value: f64,
}

/// Gauss–Newton on φ_T(X0) − X0 = 0 plus optional constraints, unknowns
/// (X0, T) or X0 alone when the period is fixed.
fn correct(
    problem: &PeriodicOrbitProblem,
    mut x0: State6,
    mut period: f64,
    free_period: bool,
    phase: bool,
    extra: Option<&Constraint>,
    drop: usize,
) -> Result<(OrbitFamilyMember, Matrix6<f64>)> {
    if !(period > 0.0) {
        return Err(Error::InvalidInput("period must be positive".into()));
    }
    let ncols = if free_period { 7 } else { 6 };
    let mut residual = f64::INFINITY;
    for it in 0..=problem.max_iterations {
        let shot = shoot(problem, &x0, period)?;
        let previous = residual;
        residual = shot.residual.amax();
        if !residual.is_finite() {
            return Err(Error::NonFinite { t: period });
        }
        if it >= 2 && residual > 10.0 * previous {
            // Diverging; report now rather than wander.
            return Err(Error::NewtonMaxIterations { iterations: it, residual });
        }
        if residual < problem.tol {
            return Ok((member_from(x0, period, 0.0, &shot, it), shot.phi));
        }
        if it == problem.max_iterations {
            break;
        }
        let nrows = 6 + phase as usize + extra.is_some() as usize;
        let mut a = DMatrix::zeros(nrows, ncols);
        let mut b = DVector::zeros(nrows);
        a.view_mut((0, 0), (6, 6))
            .copy_from(&(shot.phi - Matrix6::identity()));
        if free_period {
            let f_end = vector_field(&problem.model, &shot.end, period)?;
            a.view_mut((0, 6), (6, 1)).copy_from(&f_end);
        }
        for i in 0..6 {
            b[i] = -shot.residual[i];
        }
        let mut r = 6;
        if phase {
            let f0 = vector_field(&problem.model, &x0, 0.0)?;
            for i in 0..6 {
                a[(r, i)] = f0[i];
            }
            r += 1;
        }
        if let Some(c) = extra {
            let mut z = SVector::<f64, 7>::zeros();
            z.fixed_rows_mut::<6>(0).copy_from(&x0);
            z[6] = period;
            for i in 0..ncols {
                a[(r, i)] = c.row[i];
            }
            b[r] = c.value - c.row.dot(&z);
        }
        let dz = svd_solve(a, b, drop)?;
        for i in 0..6 {
            x0[i] += dz[i];
        }
        if free_period {
            period += dz[6];
        }
    }
    Err(Error::NewtonMaxIterations {
        iterations: problem.max_iterations,
        residual,
    })
}

/// Corrects a guess to a periodic orbit of the problem's model.
///
/// Free mode solves for (X0, T) with the correction kept orthogonal to the
/// flow at X0; the one-parameter family direction is removed by taking the
/// minimum-norm step. Fixed mode holds T and, for an autonomous model, adds
/// the same phase condition.
pub fn newton_correct(problem: &PeriodicOrbitProblem, guess_state: &State6, guess_period: f64) -> Result<OrbitFamilyMember> {
    let autonomous = is_autonomous(&problem.model);
    let out = match problem.mode {
        PeriodMode::Free => {
            if !autonomous {
                return Err(Error::InvalidInput("free-period mode needs an autonomous model".into()));
            }
            correct(problem, *guess_state, guess_period, true, true, None, 1)?
        }
        PeriodMode::Fixed { period } => correct(problem, *guess_state, period, false, autonomous, None, 0)?,
    };
    Ok(out.0)
}

/// Tangent to the family at a converged free-period member, normalized in
/// (X0, T) space.
fn family_tangent(problem: &PeriodicOrbitProblem, member: &OrbitFamilyMember, phi: &Matrix6<f64>) -> Result<SVector<f64, 7>> {
    let mut a = DMatrix::zeros(7, 7);
    a.view_mut((0, 0), (6, 6)).copy_from(&(phi - Matrix6::identity()));
    let end = member.state0; // closed orbit: φ_T(X0) = X0 to tolerance
    let f = vector_field(&problem.model, &end, member.period)?;
    a.view_mut((0, 6), (6, 1)).copy_from(&f);
    for i in 0..6 {
        a[(6, i)] = f[i];
    }
    let v = null_vector(a);
    let mut t = SVector::<f64, 7>::from_iterator(v.iter().copied());
    t /= t.norm();
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySteps {
    /// Total members wanted, seed included.
    pub members: usize,
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Stop after the first member whose period exceeds this value.
    pub stop_above_period: Option<f64>,
}

impl Default for FamilySteps {
    fn default() -> Self {
        FamilySteps {
            members: 40,
            step: 1e-2,
            min_step: 1e-6,
            max_step: 5e-2,
            stop_above_period: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Family {
    pub members: Vec<OrbitFamilyMember>,
    /// Why the run ended early, if it did.
    pub stopped: Option<String>,
}

/// Pseudo-arclength continuation of a free-period family from a converged
/// member. The first tangent is oriented so the state moves away from
/// `away_from`. Members are ordered by arclength (`param`).
pub fn continue_family(
    problem: &PeriodicOrbitProblem,
    first: &OrbitFamilyMember,
    steps: &FamilySteps,
    away_from: &State6,
) -> Result<Family> {
    if problem.mode != PeriodMode::Free {
        return Err(Error::InvalidInput("family continuation runs in free-period mode".into()));
    }
    if !(steps.step > 0.0 && steps.min_step > 0.0 && steps.max_step >= steps.min_step) {
        return Err(Error::InvalidInput("invalid continuation steps".into()));
    }
    let mut first = first.clone();
    first.param = 0.0;
    let phi = shoot(problem, &first.state0, first.period)?.phi;
    let mut tangent = family_tangent(problem, &first, &phi)?;
    let outward = first.state0 - away_from;
    if tangent.fixed_rows::<6>(0).dot(&outward) < 0.0 {
        tangent = -tangent;
    }
    let mut members = vec![first];
    let mut h = steps.step.min(steps.max_step);
    let mut stopped = None;
    while members.len() < steps.members {
        let last = members.last().unwrap();
        let mut z = SVector::<f64, 7>::zeros();
        z.fixed_rows_mut::<6>(0).copy_from(&last.state0);
        z[6] = last.period;
        let pred = z + tangent * h;
        let c = Constraint {
            row: tangent,
            value: tangent.dot(&pred),
        };
        let x_pred = State6::from_iterator(pred.iter().take(6).copied());
        match correct(problem, x_pred, pred[6], true, true, Some(&c), 0) {
            Ok((mut m, phi)) => {
                m.param = last.param + h;
                let mut next = family_tangent(problem, &m, &phi)?;
                if next.dot(&tangent) < 0.0 {
                    next = -next;
                }
                tangent = next;
                if m.iterations <= 6 {
                    h = (h * 1.5).min(steps.max_step);
                }
                let done = steps.stop_above_period.is_some_and(|p| m.period > p);
                members.push(m);
                if done {
                    break;
                }
            }
            Err(e) => {
                h *= 0.5;
                if h < steps.min_step {
                    stopped = Some(format!("step underflow at arclength {}: {e}", last.param));
                    break;
                }
            }
        }
    }
    Ok(Family { members, stopped })
}

/// Member of a family with period `target`: the bracketing pair is located
/// along the family and the interpolated guess is corrected with the period
/// held fixed.
pub fn member_with_period(problem: &PeriodicOrbitProblem, family: &[OrbitFamilyMember], target: f64) -> Result<OrbitFamilyMember> {
    let k = family
        .windows(2)
        .position(|w| (w[0].period - target) * (w[1].period - target) <= 0.0)
        .ok_or_else(|| Error::InvalidInput(format!("no family member brackets period {target}")))?;
    let (a, b) = (&family[k], &family[k + 1]);
    let mut lo = 0.0;
    let mut hi = 1.0;
    let fixed = PeriodicOrbitProblem {
        mode: PeriodMode::Fixed { period: target },
        ..problem.clone()
    };
    // Interpolation weight for the period; a few bisection passes on the
    // weight guard against a poor linear guess.
    let mut w = if a.period == b.period {
        0.5
    } else {
        (target - a.period) / (b.period - a.period)
    };
    let mut last_err = None;
    for _ in 0..20 {
        let guess = a.state0 + (b.state0 - a.state0) * w;
        match newton_correct(&fixed, &guess, target) {
            Ok(mut m) => {
                m.param = a.param + w * (b.param - a.param);
                return Ok(m);
            }
            Err(e) => last_err = Some(e),
        }
        if w - lo > hi - w {
            hi = w;
        } else {
            lo = w;
        }
        w = 0.5 * (lo + hi);
    }
    Err(last_err.unwrap_or(Error::SingularCorrector))
}

/// One JSON object per line: member fields plus provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArchiveRecord {
    pub model_hash: String,
    pub epsilon: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub closure_tol: f64,
    /// Period multiple of the forcing, when the period is fixed.
    pub p: Option<u32>,
    #[serde(flatten)]
    pub member: OrbitFamilyMember,
}

pub fn archive_record(problem: &PeriodicOrbitProblem, member: &OrbitFamilyMember, p: Option<u32>) -> ArchiveRecord {
    ArchiveRecord {
        model_hash: problem.model.hash(),
        epsilon: problem.model.epsilon(),
        rel_tol: problem.settings.rel_tol,
        abs_tol: problem.settings.abs_tol,
        closure_tol: problem.tol,
        p,
        member: member.clone(),
    }
}

pub fn write_archive(path: impl AsRef<Path>, records: &[ArchiveRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<Vec<ArchiveRecord>> {
    let f = std::io::BufReader::new(std::fs::File::open(path.as_ref())?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.as_ref().to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
