#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;

use crnbp::bodies::{load_system, ModelBody};
use crnbp::dynamics::{body_position, State6};
use crnbp::SystemModel;
use rand::Rng;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

pub fn system(name: &str) -> SystemModel {
    load_system(data(&format!("systems/{name}.toml"))).unwrap().model
}

pub fn body(name: &str, mu: f64, r: f64, n: f64, psi0: f64) -> ModelBody {
    ModelBody {
        name: name.into(),
        mu,
        orbit_radius: r,
        mean_motion: n,
        psi0,
        collision_radius: 0.0,
    }
}

/// Hand-built models with one retrograde perturber and a four-perturber chain.
pub fn synthetic_models() -> Vec<SystemModel> {
    let mu2 = 0.0121;
    let a = SystemModel::new(
        vec![
            body("A", 1.0 - mu2, 0.0, 0.0, 0.0),
            body("B", mu2, 1.0, 1.0, 0.0),
            body("C", 3e-3, 2.2, -0.31, 1.1),
        ],
        1.0,
        1.0,
        1.0,
    )
    .unwrap();
    let mu2 = 1e-3;
    let b = SystemModel::new(
        vec![
            body("A", 1.0 - mu2, 0.0, 0.0, 0.0),
            body("B", mu2, 1.0, 1.0, 0.0),
            body("C", 2e-4, 0.4, 3.9, -2.0),
            body("D", 5e-5, 0.7, 1.7, 0.3),
            body("E", 3e-4, 1.9, 0.38, 2.9),
            body("F", 1e-5, 3.1, 0.18, -0.7),
        ],
        1.0,
        1.0,
        1.0,
    )
    .unwrap();
    vec![a, b]
}

/// Three shipped CRNBP systems plus the synthetic ones.
pub fn five_models() -> Vec<SystemModel> {
    let mut v = vec![
        system("jupiter_europa_crnbp"),
        system("sun_jupiter_9body"),
        system("jupiter_ganymede_laplace"),
    ];
    v.extend(synthetic_models());
    v
}

/// Random state at least `clearance` away from every massive body at `t`.
pub fn random_state(rng: &mut impl Rng, model: &SystemModel, t: f64, extent: f64, clearance: f64) -> State6 {
    loop {
        let s = State6::new(
            rng.gen_range(-extent..extent),
            rng.gen_range(-extent..extent),
            rng.gen_range(-0.3..0.3),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-0.3..0.3),
        );
        let p = s.fixed_rows::<3>(0).into_owned();
        if (0..model.n_massive()).all(|j| (p - body_position(model, j, t)).norm() > clearance) {
            return s;
        }
    }
}
