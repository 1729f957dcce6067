//! Synodic-frame equations of motion of the circular restricted n-body problem.
//!
//! M1 sits at (-μ2, 0, 0) and M2 at (μ1, 0, 0). Every other massive body j moves
//! on a circle of radius R_j about M1 with phase ψ_j(t) = ψ_0j + (n_j - 1) t.
//! Perturber terms are scaled by the model's homotopy factor ε.

mod lagrange;

pub use lagrange::{collinear_residual, lagrange_points, LagrangePoint};

use nalgebra::{Matrix3, Matrix6, Vector2, Vector3, Vector6};

use crate::bodies::{wrap_pi, SystemModel};
use crate::error::{Error, Result};

/// Synodic position and velocity, canonical units.
pub type State6 = Vector6<f64>;

/// Upper bound on the number of massive bodies a model may carry.
pub const MAX_BODIES: usize = 32;

/// Phases ψ_j(t) of the perturbing bodies (M1 and M2 excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector {
    pub psi: Vec<f64>,
}

pub fn phases_at(model: &SystemModel, t: f64) -> PhaseVector {
    let psi = model.psi0()[2..]
        .iter()
        .zip(&model.mean_motion()[2..])
        .map(|(p0, n)| wrap_pi(p0 + (n - 1.0) * t))
        .collect();
    PhaseVector { psi }
}

#[inline]
fn phase(model: &SystemModel, j: usize, t: f64) -> f64 {
    model.psi0()[j] + (model.mean_motion()[j] - 1.0) * t
}

/// Planar positions of all massive bodies relative to M1 at time t.
fn positions_from_m1(model: &SystemModel, t: f64, out: &mut [[f64; 2]; MAX_BODIES]) {
    let radius = model.orbit_radius();
    out[0] = [0.0, 0.0];
    out[1] = [1.0, 0.0];
    for j in 2..model.n_massive() {
        let (s, c) = phase(model, j, t).sin_cos();
        out[j] = [radius[j] * c, radius[j] * s];
    }
}

/// Synodic position of massive body `j` at time t.
pub fn body_position(model: &SystemModel, j: usize, t: f64) -> Vector3<f64> {
    let mu2 = model.mu2();
    match j {
        0 => Vector3::new(-mu2, 0.0, 0.0),
        1 => Vector3::new(model.mu1(), 0.0, 0.0),
        _ => {
            let r = model.orbit_radius()[j];
            let (s, c) = phase(model, j, t).sin_cos();
            Vector3::new(r * c - mu2, r * s, 0.0)
        }
    }
}

/// Synodic velocity of massive body `j` at time t.
pub fn body_velocity(model: &SystemModel, j: usize, t: f64) -> Vector3<f64> {
    if j < 2 {
        return Vector3::zeros();
    }
    let r = model.orbit_radius()[j];
    let w = model.mean_motion()[j] - 1.0;
    let (s, c) = phase(model, j, t).sin_cos();
    Vector3::new(-r * w * s, r * w * c, 0.0)
}

/// The bracketed double sum of the x and y equations, without ε and sign:
/// Σ_j μ_j Σ_{k≠j} μ_k (s_j - s_k) / |s_j - s_k|³ over perturbers j.
pub fn indirect_acceleration(model: &SystemModel, t: f64) -> Vector2<f64> {
    let mut pos = [[0.0; 2]; MAX_BODIES];
    positions_from_m1(model, t, &mut pos);
    indirect_from_positions(model, t, &pos)
}

fn indirect_from_positions(model: &SystemModel, t: f64, pos: &[[f64; 2]; MAX_BODIES]) -> Vector2<f64> {
    let mu = model.mu();
    let radius = model.orbit_radius();
    let n = model.n_massive();
    let (mut sx, mut sy) = (0.0, 0.0);
    for j in 2..n {
        let pj = phase(model, j, t);
        let (mut ix, mut iy) = (0.0, 0.0);
        for k in 0..n {
            if k == j {
                continue;
            }
            let pk = if k == 0 { 0.0 } else { phase(model, k, t) };
            let d2 = radius[k] * radius[k] + radius[j] * radius[j]
                - 2.0 * radius[k] * radius[j] * (pk - pj).cos();
            let d3 = d2 * d2.sqrt();
            ix += mu[k] * (pos[j][0] - pos[k][0]) / d3;
            iy += mu[k] * (pos[j][1] - pos[k][1]) / d3;
        }
        sx += mu[j] * ix;
        sy += mu[j] * iy;
    }
    Vector2::new(sx, sy)
}

#[inline]
fn check_floor(model: &SystemModel, body: usize, r2: f64) -> Result<()> {
    let floor = model.singularity_floor();
    if r2 < floor * floor || !r2.is_finite() {
        Err(Error::Singularity {
            body,
            distance: r2.sqrt(),
        })
    } else {
        Ok(())
    }
}

/// Centrifugal, Coriolis and primary terms; shared by both models.
#[inline]
fn primary_accel(model: &SystemModel, s: &State6) -> Result<Vector3<f64>> {
    let (mu1, mu2) = (model.mu1(), model.mu2());
    let (x, y, z) = (s[0], s[1], s[2]);
    let (dx1, dx2) = (x + mu2, x - mu1);
    let yz2 = y * y + z * z;
    let r1sq = dx1 * dx1 + yz2;
    let r2sq = dx2 * dx2 + yz2;
    check_floor(model, 0, r1sq)?;
    check_floor(model, 1, r2sq)?;
    let k1 = mu1 / (r1sq * r1sq.sqrt());
    let k2 = mu2 / (r2sq * r2sq.sqrt());
    Ok(Vector3::new(
        2.0 * s[4] + x - k1 * dx1 - k2 * dx2,
        -2.0 * s[3] + y - k1 * y - k2 * y,
        -k1 * z - k2 * z,
    ))
}

/// CR3BP acceleration: only μ1 and μ2 contribute.
pub fn cr3bp_accel(model: &SystemModel, state: &State6) -> Result<Vector3<f64>> {
    primary_accel(model, state)
}

/// Full CRNBP acceleration with the perturber sums scaled by ε.
pub fn crnbp_accel(model: &SystemModel, state: &State6, t: f64) -> Result<Vector3<f64>> {
    let mut a = primary_accel(model, state)?;
    let eps = model.epsilon();
    if eps == 0.0 || model.n_massive() < 3 {
        return Ok(a);
    }
    let mut pos = [[0.0; 2]; MAX_BODIES];
    positions_from_m1(model, t, &mut pos);
    let mu = model.mu();
    let mu2 = model.mu2();
    let (x, y, z) = (state[0], state[1], state[2]);
    let (mut px, mut py, mut pz) = (0.0, 0.0, 0.0);
    for j in 2..model.n_massive() {
        let dx = x + mu2 - pos[j][0];
        let dy = y - pos[j][1];
        let rsq = dx * dx + dy * dy + z * z;
        check_floor(model, j, rsq)?;
        let k = mu[j] / (rsq * rsq.sqrt());
        px += k * dx;
        py += k * dy;
        pz += k * z;
    }
    let ind = indirect_from_positions(model, t, &pos);
    a[0] -= eps * (px + ind[0]);
    a[1] -= eps * (py + ind[1]);
    a[2] -= eps * pz;
    Ok(a)
}

/// Right-hand side F(X, t) of the first-order system.
pub fn vector_field(model: &SystemModel, state: &State6, t: f64) -> Result<State6> {
    let a = crnbp_accel(model, state, t)?;
    Ok(State6::new(state[3], state[4], state[5], a[0], a[1], a[2]))
}

/// Gravity-gradient plus centrifugal block ∂a/∂ρ.
pub fn position_gradient(model: &SystemModel, state: &State6, t: f64) -> Result<Matrix3<f64>> {
    let rho = state.fixed_rows::<3>(0).into_owned();
    let mut g = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
    let mut add = |w: f64, p: Vector3<f64>, body: usize| -> Result<()> {
        let d = rho - p;
        let rsq = d.norm_squared();
        check_floor(model, body, rsq)?;
        let r = rsq.sqrt();
        let r3 = rsq * r;
        let r5 = r3 * rsq;
        g += (d * d.transpose()) * (3.0 * w / r5) - Matrix3::identity() * (w / r3);
        Ok(())
    };
    add(model.mu1(), body_position(model, 0, t), 0)?;
    add(model.mu2(), body_position(model, 1, t), 1)?;
    let eps = model.epsilon();
    if eps != 0.0 {
        for j in 2..model.n_massive() {
            add(eps * model.mu()[j], body_position(model, j, t), j)?;
        }
    }
    Ok(g)
}

/// Analytic ∂F/∂X.
pub fn state_jacobian(model: &SystemModel, state: &State6, t: f64) -> Result<Matrix6<f64>> {
    let g = position_gradient(model, state, t)?;
    Ok(assemble_jacobian(&g))
}

pub(crate) fn assemble_jacobian(g: &Matrix3<f64>) -> Matrix6<f64> {
    let mut j = Matrix6::zeros();
    j.fixed_view_mut::<3, 3>(0, 3).copy_from(&Matrix3::identity());
    j.fixed_view_mut::<3, 3>(3, 0).copy_from(g);
    j[(3, 4)] = 2.0;
    j[(4, 3)] = -2.0;
    j
}

/// Vector field and Jacobian in one pass, for the variational equations.
pub fn field_and_jacobian(
    model: &SystemModel,
    state: &State6,
    t: f64,
) -> Result<(State6, Matrix6<f64>)> {
    Ok((vector_field(model, state, t)?, state_jacobian(model, state, t)?))
}

/// J = x² + y² + 2(μ1/r1 + μ2/r2) - v², using only the primaries.
pub fn jacobi_constant(model: &SystemModel, state: &State6) -> Result<f64> {
    let (mu1, mu2) = (model.mu1(), model.mu2());
    let (x, y, z) = (state[0], state[1], state[2]);
    let r1sq = (x + mu2).powi(2) + y * y + z * z;
    let r2sq = (x - mu1).powi(2) + y * y + z * z;
    check_floor(model, 0, r1sq)?;
    check_floor(model, 1, r2sq)?;
    let v2 = state[3] * state[3] + state[4] * state[4] + state[5] * state[5];
    Ok(x * x + y * y + 2.0 * (mu1 / r1sq.sqrt() + mu2 / r2sq.sqrt()) - v2)
}

/// Speed squared implied by a Jacobi constant at a position; negative when the
/// position lies in the forbidden region.
pub fn speed_squared_for_jacobi(model: &SystemModel, position: &Vector3<f64>, jacobi: f64) -> Result<f64> {
    let s = State6::new(position[0], position[1], position[2], 0.0, 0.0, 0.0);
    Ok(jacobi_constant(model, &s)? - jacobi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::ModelBody;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn four_body(eps: f64) -> SystemModel {
        let mu2 = 0.01;
        let b = |name: &str, mu, r, n, psi0| ModelBody {
            name: name.into(),
            mu,
            orbit_radius: r,
            mean_motion: n,
            psi0,
            collision_radius: 0.0,
        };
        SystemModel::new(
            vec![
                b("A", 1.0 - mu2, 0.0, 0.0, 0.0),
                b("B", mu2, 1.0, 1.0, 0.0),
                b("C", 1e-3, 2.0, 0.35, 1.0),
                b("D", 2e-4, 0.5, 2.8, -2.0),
            ],
            eps,
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn phase_law_examples() {
        let m = four_body(1.0).with_mean_motion("C", 1.0).unwrap();
        let m = m.with_phase("C", 0.7).unwrap();
        assert_eq!(phases_at(&m, 123.4).psi[0], 0.7);

        let m = m.with_phase("C", 0.0).unwrap().with_mean_motion("C", 2.0).unwrap();
        assert!((phases_at(&m, PI).psi[0] - PI).abs() < 1e-15);

        let m = m.with_mean_motion("C", -1.0).unwrap();
        let psi = phases_at(&m, FRAC_PI_2).psi[0];
        // -π lands on +π in (-π, π]; both are the same direction.
        assert!((psi.abs() - PI).abs() < 1e-15);
    }

    #[test]
    fn planar_closure_is_exact() {
        let m = four_body(1.0);
        let s = State6::new(0.3, -0.8, 0.0, 0.1, 0.2, 0.0);
        let a = crnbp_accel(&m, &s, 3.3).unwrap();
        assert_eq!(a[2], 0.0);
    }

    #[test]
    fn equilateral_point_of_equal_masses() {
        let m = SystemModel::cr3bp(0.5).unwrap();
        let s = State6::new(0.0, 3f64.sqrt() / 2.0, 0.0, 0.0, 0.0, 0.0);
        assert!(cr3bp_accel(&m, &s).unwrap().norm() < 1e-15);
    }

    #[test]
    fn two_body_limit_points_to_m1() {
        let m = SystemModel::cr3bp(1e-14).unwrap();
        let s = State6::new(0.5, 0.0, 0.0, 0.0, 0.0, 0.0);
        let a = cr3bp_accel(&m, &s).unwrap();
        // centrifugal x plus gravity -1/x² toward M1
        assert!((a[0] - (0.5 - 4.0)).abs() < 1e-10);
        assert_eq!(a[1], 0.0);
    }

    #[test]
    fn singularity_is_reported() {
        let m = four_body(1.0);
        let s = State6::new(m.mu1(), 0.0, 0.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            crnbp_accel(&m, &s, 0.0),
            Err(Error::Singularity { body: 1, .. })
        ));
    }

    #[test]
    fn velocity_block_is_coriolis() {
        let m = four_body(1.0);
        let s = State6::new(0.3, -0.8, 0.1, 0.1, 0.2, 0.0);
        let j = state_jacobian(&m, &s, 1.0).unwrap();
        let v = j.fixed_view::<3, 3>(3, 3);
        assert_eq!(v[(0, 1)], 2.0);
        assert_eq!(v[(1, 0)], -2.0);
        for (r, c) in [(0, 0), (0, 2), (1, 1), (1, 2), (2, 0), (2, 1), (2, 2)] {
            assert_eq!(v[(r, c)], 0.0);
        }
        assert_eq!(j.fixed_view::<3, 3>(0, 3).into_owned(), Matrix3::identity());
        assert!(j.trace().abs() < 1e-14);
    }

    #[test]
    fn jacobi_velocity_scaling() {
        let m = SystemModel::cr3bp(0.0121).unwrap();
        let s = State6::new(0.5, 0.4, 0.1, 0.2, -0.1, 0.3);
        let mut s2 = s;
        for i in 3..6 {
            s2[i] *= 2.0;
        }
        let v2 = s.fixed_rows::<3>(3).norm_squared();
        let d = jacobi_constant(&m, &s).unwrap() - jacobi_constant(&m, &s2).unwrap();
        assert!((d - 3.0 * v2).abs() < 1e-14);
    }
}
