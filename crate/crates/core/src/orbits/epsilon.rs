use nalgebra::{DMatrix, DVector, Matrix6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bodies::SystemModel;
use crate::dynamics::{cr3bp_accel, crnbp_accel, vector_field, State6};
use crate::error::{Error, Result};
use crate::propagate::{integrate, propagate_final, stm_propagate, IntegratorSettings};

use super::{newton_correct, svd_solve, Family, OrbitFamilyMember, PeriodMode, PeriodicOrbitProblem};

/// `n` states at uniform times over one period, starting at t = 0.
fn uniform_samples(model: &SystemModel, x0: &State6, period: f64, n: usize, settings: &IntegratorSettings) -> Result<Vec<State6>> {
    let s = IntegratorSettings {
        sample_interval: Some(period / n as f64),
        ..*settings
    };
    let tr = integrate(model, x0, 0.0, period, &s, &[])?;
    Ok(tr.samples.into_iter().take(n).map(|(_, x)| x).collect())
}

/// Perturber part of the acceleration at ε = 1.
fn perturbation(full: &SystemModel, state: &State6, t: f64) -> Result<nalgebra::Vector3<f64>> {
    Ok(crnbp_accel(full, state, t)? - cr3bp_accel(full, state)?)
}

/// Moves the starting point of an autonomous orbit forward by `theta` along
/// the flow. Period and eigenvalues are unchanged.
pub fn shift_phase(model: &SystemModel, member: &OrbitFamilyMember, theta: f64, settings: &IntegratorSettings) -> Result<OrbitFamilyMember> {
    let cr3bp = model.with_epsilon(0.0)?;
    let theta = theta.rem_euclid(member.period);
    let state0 = propagate_final(&cr3bp, &member.state0, 0.0, theta, settings)?;
    Ok(OrbitFamilyMember {
        state0,
        ..member.clone()
    })
}

/// Averaged Jacobi-constant drift over one period that the perturbers would
/// impose on the CR3BP orbit started `theta` later along itself. Zeros mark
/// the phases from which a forced periodic orbit can branch.
pub fn melnikov(model: &SystemModel, member: &OrbitFamilyMember, theta: f64, samples: usize, settings: &IntegratorSettings) -> Result<f64> {
    let shifted = shift_phase(model, member, theta, settings)?;
    let cr3bp = model.with_epsilon(0.0)?;
    let full = model.with_epsilon(1.0)?;
    let xs = uniform_samples(&cr3bp, &shifted.state0, member.period, samples, settings)?;
    let dt = member.period / samples as f64;
    let mut sum = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let a = perturbation(&full, x, i as f64 * dt)?;
        sum += -2.0 * x.fixed_rows::<3>(3).dot(&a);
    }
    Ok(sum * dt)
}

/// Phases in [0, T) where [`melnikov`] changes sign, refined by bisection.
pub fn melnikov_phases(model: &SystemModel, member: &OrbitFamilyMember, samples: usize, settings: &IntegratorSettings) -> Result<Vec<f64>> {
    let cr3bp = model.with_epsilon(0.0)?;
    let full = model.with_epsilon(1.0)?;
    let xs = uniform_samples(&cr3bp, &member.state0, member.period, samples, settings)?;
    let n = xs.len();
    let dt = member.period / n as f64;
    // Circular correlation over all shifts on the sample comb.
    let mut grid = vec![0.0; n];
    for (k, g) in grid.iter_mut().enumerate() {
        let mut sum = 0.0;
        for i in 0..n {
            let x = &xs[(i + k) % n];
            sum += -2.0 * x.fixed_rows::<3>(3).dot(&perturbation(&full, x, i as f64 * dt)?);
        }
        *g = sum * dt;
    }
    let mut roots = Vec::new();
    for k in 0..n {
        let (a, b) = (grid[k], grid[(k + 1) % n]);
        if a == 0.0 {
            roots.push(k as f64 * dt);
            continue;
        }
        if a * b < 0.0 {
            let (mut lo, mut hi, mut flo) = (k as f64 * dt, (k + 1) as f64 * dt, a);
            for _ in 0..40 {
                let mid = 0.5 * (lo + hi);
                let fm = melnikov(model, member, mid, samples, settings)?;
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-12 * member.period {
                    break;
                }
            }
            roots.push((0.5 * (lo + hi)).rem_euclid(member.period));
        }
    }
    Ok(roots)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsilonSteps {
    pub initial: f64,
    pub min: f64,
    pub max: f64,
    /// Final ε, normally 1.
    pub target: f64,
}

impl Default for EpsilonSteps {
    fn default() -> Self {
        EpsilonSteps {
            initial: 0.02,
            min: 1e-6,
            max: 0.1,
            target: 1.0,
        }
    }
}

/// ∂φ_T/∂ε at fixed X0 by a one-sided difference.
fn flow_eps_derivative(problem: &PeriodicOrbitProblem, x0: &State6, eps: f64, period: f64) -> Result<State6> {
    let h = if eps + 1e-6 <= 1.0 { 1e-6 } else { -1e-6 };
    let a = propagate_final(&problem.model.with_epsilon(eps)?, x0, 0.0, period, &problem.settings)?;
    let b = propagate_final(&problem.model.with_epsilon(eps + h)?, x0, 0.0, period, &problem.settings)?;
    Ok((b - a) / h)
}

/// dX0/dε along the branch, from (Φ − I) dX0 = −∂φ_T/∂ε. At ε = 0 the
/// time-shift direction is removed with a phase condition.
fn eps_tangent(problem: &PeriodicOrbitProblem, x0: &State6, eps: f64, period: f64) -> Result<State6> {
    let model = problem.model.with_epsilon(eps)?;
    let (_, phi) = stm_propagate(&model, x0, 0.0, period, &problem.settings)?;
    let ge = flow_eps_derivative(problem, x0, eps, period)?;
    let phase = eps == 0.0;
    let rows = 6 + phase as usize;
    let mut a = DMatrix::zeros(rows, 6);
    a.view_mut((0, 0), (6, 6)).copy_from(&(phi - Matrix6::identity()));
    let mut b = DVector::zeros(rows);
    for i in 0..6 {
        b[i] = -ge[i];
    }
    if phase {
        let f = vector_field(&model, x0, 0.0)?;
        for i in 0..6 {
            a[(6, i)] = f[i];
        }
    }
    let v = svd_solve(a, b, 0)?;
    Ok(State6::from_iterator(v.iter().copied()))
}

/// Natural-parameter continuation in ε with the period held at the problem's
/// fixed value. The first member is `member0` unchanged (ε = 0); later members
/// carry their ε in `param`. A failed corrector halves the step; below
/// `steps.min` the run stops and the partial branch is returned.
pub fn continue_epsilon(problem: &PeriodicOrbitProblem, member0: &OrbitFamilyMember, steps: &EpsilonSteps) -> Result<Family> {
    let PeriodMode::Fixed { period } = problem.mode else {
        return Err(Error::InvalidInput("ε-continuation needs a fixed-period problem".into()));
    };
    if (member0.period - period).abs() > 1e-9 * period {
        return Err(Error::InvalidInput(format!(
            "member period {} differs from the fixed period {period}",
            member0.period
        )));
    }
    if !(steps.initial > 0.0 && steps.min > 0.0 && steps.max >= steps.min && (0.0..=1.0).contains(&steps.target)) {
        return Err(Error::InvalidInput("invalid ε steps".into()));
    }
    let mut members = vec![OrbitFamilyMember {
        param: 0.0,
        ..member0.clone()
    }];
    if problem.model.n_massive() < 3 || steps.target == 0.0 {
        // Nothing to deform: ε multiplies empty sums.
        if steps.target > 0.0 {
            members.push(OrbitFamilyMember {
                param: steps.target,
                ..member0.clone()
            });
        }
        return Ok(Family { members, stopped: None });
    }
    let mut h = steps.initial.min(steps.max);
    let mut stopped = None;
    let mut tangent = eps_tangent(problem, &member0.state0, 0.0, period)?;
    while members.last().unwrap().param < steps.target {
        let last = members.last().unwrap().clone();
        let eps = (last.param + h).min(steps.target);
        let step = eps - last.param;
        let guess = last.state0 + tangent * step;
        let sub = problem.with_model(problem.model.with_epsilon(eps)?);
        match newton_correct(&sub, &guess, period) {
            Ok(mut m) => {
                m.param = eps;
                if m.iterations <= 3 {
                    h = (h * 1.5).min(steps.max);
                }
                tangent = match eps_tangent(problem, &m.state0, eps, period) {
                    Ok(t) => t,
                    Err(_) => (m.state0 - last.state0) / step,
                };
                members.push(m);
            }
            Err(e) => {
                h *= 0.5;
                if h < steps.min {
                    stopped = Some(format!("step underflow at ε = {}: {e}", last.param));
                    break;
                }
            }
        }
    }
    Ok(Family { members, stopped })
}

/// Largest coordinate difference in position (max-norm) between two orbits
/// sampled at the same times over the first orbit's period.
pub fn deformation(
    model_a: &SystemModel,
    a: &OrbitFamilyMember,
    model_b: &SystemModel,
    b: &OrbitFamilyMember,
    samples: usize,
    settings: &IntegratorSettings,
) -> Result<f64> {
    let xa = uniform_samples(model_a, &a.state0, a.period, samples, settings)?;
    let xb = uniform_samples(model_b, &b.state0, a.period, samples, settings)?;
    Ok(xa
        .iter()
        .zip(&xb)
        .map(|(p, q)| (p.fixed_rows::<3>(0) - q.fixed_rows::<3>(0)).amax())
        .fold(0.0, f64::max))
}

/// One ε-continuation started from a Melnikov phase.
#[derive(Debug, Clone)]
pub struct EpsilonBranch {
    pub theta: f64,
    /// The CR3BP orbit shifted to `theta`; first member of `family`.
    pub start: OrbitFamilyMember,
    pub family: Family,
    /// [`deformation`] between the ends, when the branch reached the target.
    pub deformation: Option<f64>,
}

impl EpsilonBranch {
    pub fn reached(&self, target: f64) -> bool {
        self.family.members.last().is_some_and(|m| m.param >= target)
    }
}

/// Continues `member` in ε from every root of [`melnikov`], one branch per
/// root, in parallel. Branches keep the order of the roots.
pub fn epsilon_branches(
    problem: &PeriodicOrbitProblem,
    member: &OrbitFamilyMember,
    steps: &EpsilonSteps,
    melnikov_samples: usize,
    deformation_samples: usize,
) -> Result<Vec<EpsilonBranch>> {
    let cr3bp = problem.model.with_epsilon(0.0)?;
    let thetas = if problem.model.n_massive() < 3 {
        vec![0.0]
    } else {
        melnikov_phases(&problem.model, member, melnikov_samples, &problem.settings)?
    };
    thetas
        .into_par_iter()
        .map(|theta| {
            let start = shift_phase(&problem.model, member, theta, &problem.settings)?;
            let family = continue_epsilon(problem, &start, steps)?;
            let last = family.members.last().expect("branch holds its start");
            let deformation = if last.param >= steps.target {
                let end_model = problem.model.with_epsilon(steps.target)?;
                Some(deformation(&cr3bp, &start, &end_model, last, deformation_samples, &problem.settings)?)
            } else {
                None
            };
            Ok(EpsilonBranch {
                theta,
                start,
                family,
                deformation,
            })
        })
        .collect()
}

/// Index of the branch that reached the target with the least deformation:
/// the forced orbit that stays closest to its CR3BP parent.
pub fn closest_branch(branches: &[EpsilonBranch]) -> Option<usize> {
    branches
        .iter()
        .enumerate()
        .filter_map(|(i, b)| b.deformation.map(|d| (i, d)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}
