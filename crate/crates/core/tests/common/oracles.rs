use crnbp::dynamics::{cr3bp_accel, crnbp_accel, State6};
use crnbp::ephem::SynodicMap;
use crnbp::propagate::dop853::{self, Flow, Tolerances};
use crnbp::propagate::{integrate, propagate_final, IntegratorSettings};
use crnbp::SystemModel;
use nalgebra::{Vector2, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{body, random_state, system};

/// Σ_j μ_j Σ_{k≠j} μ_k (p_j − p_k)/|p_j − p_k|³ from positions built here.
pub fn cm12_acceleration(model: &SystemModel, t: f64) -> Vector3<f64> {
    let n = model.n_massive();
    let pos: Vec<Vector3<f64>> = (0..n)
        .map(|j| {
            let psi = model.psi0()[j] + (model.mean_motion()[j] - 1.0) * t;
            let r = model.orbit_radius()[j];
            Vector3::new(r * psi.cos() - model.mu2(), r * psi.sin(), 0.0)
        })
        .collect();
    let mut a = Vector3::zeros();
    for j in 2..n {
        for k in (0..n).filter(|&k| k != j) {
            let d = pos[j] - pos[k];
            a += d * (model.mu()[j] * model.mu()[k] / d.norm().powi(3));
        }
    }
    a
}

/// Binary-case BCR4BP: the fourth body circles the M1–M2 barycentre.
fn bcr4bp_accel(mu2: f64, mu3: f64, r3: f64, psi: f64, s: &State6) -> Vector3<f64> {
    let mu1 = 1.0 - mu2;
    let p = Vector3::new(s[0], s[1], s[2]);
    let p1 = Vector3::new(-mu2, 0.0, 0.0);
    let p2 = Vector3::new(mu1, 0.0, 0.0);
    let p3 = Vector3::new(r3 * psi.cos(), r3 * psi.sin(), 0.0);
    let grav = |m: f64, q: Vector3<f64>| (q - p) * (m / (q - p).norm().powi(3));
    let frame = Vector3::new(2.0 * s[4] + s[0], -2.0 * s[3] + s[1], 0.0);
    frame + grav(mu1, p1) + grav(mu2, p2) + grav(mu3, p3) - p3 * (mu3 / r3.powi(3))
}

/// Worst error of the CRNBP field against the BCR4BP one, relative to the
/// fourth body's net contribution, for a fourth body at distance `r3`.
pub fn bcr4bp_error(r3: f64) -> f64 {
    let (mu2, mu3) = (0.0121, 10.0);
    let n3 = ((1.0 + mu3) / f64::powi(r3, 3)).sqrt();
    let model = SystemModel::new(
        vec![
            body("M1", 1.0 - mu2, 0.0, 0.0, 0.0),
            body("M2", mu2, 1.0, 1.0, 0.0),
            body("M3", mu3, r3, n3, 0.7),
        ],
        1.0,
        1.0,
        1.0,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rand::Rng::gen_range(&mut rng, 0.0..30.0);
        let s = random_state(&mut rng, &model, t, 1.5, 0.05);
        let psi = 0.7 + (n3 - 1.0) * t;
        let reference = bcr4bp_accel(mu2, mu3, r3, psi, &s);
        // Relative to the fourth body's net (tidal) contribution.
        let tidal = reference - cr3bp_accel(&model, &s).unwrap();
        let d = crnbp_accel(&model, &s, t).unwrap() - reference;
        worst = worst.max(d.norm() / tidal.norm());
    }
    worst
}

fn positions(model: &SystemModel, t: f64) -> Vec<Vector2<f64>> {
    let mu2 = model.mu2();
    let p1 = Vector2::new(-mu2 * t.cos(), -mu2 * t.sin());
    let p2 = Vector2::new(model.mu1() * t.cos(), model.mu1() * t.sin());
    let mut out = vec![p1, p2];
    for j in 2..model.n_massive() {
        let ang = model.psi0()[j] + model.mean_motion()[j] * t;
        out.push(p1 + Vector2::new(ang.cos(), ang.sin()) * model.orbit_radius()[j]);
    }
    out
}

fn rhs(model: &SystemModel, t: f64, y: &Vector6<f64>) -> Vector6<f64> {
    let p = Vector3::new(y[0], y[1], y[2]);
    let bodies = positions(model, t);
    let mu = model.mu();
    let mut a = Vector3::zeros();
    for (j, b) in bodies.iter().enumerate() {
        let d = Vector3::new(b[0], b[1], 0.0) - p;
        a += d * (mu[j] / d.norm().powi(3));
    }
    // The barycentre of M1 and M2 is pulled by every perturber.
    for j in 2..bodies.len() {
        for k in 0..2 {
            let d = bodies[j] - bodies[k];
            let g = d * (mu[j] * mu[k] / d.norm().powi(3));
            a[0] -= g[0];
            a[1] -= g[1];
        }
    }
    Vector6::new(y[3], y[4], y[5], a[0], a[1], a[2])
}

/// Largest synodic position difference between the CRNBP integration and
/// direct summation, over `runs` random states and `span` time units.
pub fn inertial_deviation(runs_wanted: usize, span: f64) -> f64 {
    let model = system("jupiter_europa_crnbp");
    let map = SynodicMap::aligned(model.mu2());
    let settings = IntegratorSettings::default().with_tolerance(1e-13);
    let tol = Tolerances {
        rel: 1e-13,
        abs: 1e-13,
        max_step: 0.0,
        max_steps: 1_000_000,
        initial_step: 0.0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    let mut runs = 0;
    let want = runs_wanted;
    while runs < want {
        let s0 = random_state(&mut rng, &model, 0.0, 1.3, 0.2);
        let s0 = State6::new(s0[0], s0[1], s0[2], 0.3 * s0[3], 0.3 * s0[4], 0.3 * s0[5]);
        let Ok(tr) = integrate(&model, &s0, 0.0, span, &settings, &[]) else {
            continue;
        };
        // Skip close approaches; both integrations lose digits there.
        let clear = tr.samples.iter().all(|(t, s)| {
            (0..2).all(|j| (s.fixed_rows::<3>(0) - crnbp::dynamics::body_position(&model, j, *t)).norm() > 0.05)
        });
        if !clear {
            continue;
        }
        runs += 1;
        let (s1n, v1n) = map.to_fixed(0.0, &s0);
        let y0 = Vector6::new(
            s1n[0] - model.mu2(),
            s1n[1],
            s1n[2],
            v1n[0],
            v1n[1] - model.mu2(),
            v1n[2],
        );
        let mut checks = Vec::new();
        let (tf, yf, _) = dop853::solve(
            |t, y| Ok(rhs(&model, t, y)),
            0.0,
            y0,
            span,
            &tol,
            false,
            |step| {
                checks.push((step.t1, step.y1));
                Ok(Flow::Continue)
            },
        )
        .unwrap();
        assert_eq!(tf, span);
        checks.push((tf, yf));
        for (t, y) in checks.iter().step_by(7).chain(std::iter::once(checks.last().unwrap())) {
            let s1n = Vector3::new(y[0] + model.mu2() * t.cos(), y[1] + model.mu2() * t.sin(), y[2]);
            let v1n = Vector3::new(y[3] - model.mu2() * t.sin(), y[4] + model.mu2() * t.cos(), y[5]);
            let want = map.to_synodic(*t, &s1n, &v1n);
            let got = propagate_final(&model, &s0, 0.0, *t, &settings).unwrap();
            worst = worst.max((got.fixed_rows::<3>(0) - want.fixed_rows::<3>(0)).norm());
        }
    }
    worst
}
