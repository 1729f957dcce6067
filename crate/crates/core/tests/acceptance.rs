//! Headline criteria at their stated tolerances. Prints one PASS/FAIL line
//! per criterion and exits non-zero if any fails.

mod common;

use std::f64::consts::TAU;
use std::time::Instant;

use common::oracles::inertial_deviation;
use common::{data, five_models, random_state, system};
use crnbp::bodies::load_system;
use crnbp::dynamics::{cr3bp_accel, crnbp_accel, jacobi_constant, state_jacobian, vector_field, State6};
use crnbp::ephem::{orbit_frame, parse_table, s_matrix, t_matrix, MeanElements, SynodicMap};
use crnbp::fli::{scan_with_threads, tisserand_band};
use crnbp::orbits::monodromy;
use crnbp::propagate::{integrate, propagate_final, IntegratorSettings};
use crnbp::scenarios::landing::{gateway_radius, landing_sweep, LandingOutcome, LandingResult};
use crnbp::scenarios::{compute_epsilon, compute_family, grid_spec, ScenarioConfig};
use nalgebra::{Matrix3, Matrix6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Line {
    name: &'static str,
    pass: bool,
    detail: String,
    seconds: f64,
}

fn run(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Line {
    let start = Instant::now();
    let (pass, detail) = f();
    let line = Line {
        name,
        pass,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    };
    println!(
        "{} {}: {} [{:.1} s]",
        if line.pass { "PASS" } else { "FAIL" },
        line.name,
        line.detail,
        line.seconds
    );
    line
}

fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(data(&format!("scenarios/{name}.toml"))).unwrap()
}

fn reduction() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let models = five_models();
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for model in &models {
        let m0 = model.with_epsilon(0.0).unwrap();
        for _ in 0..200 {
            let t = rng.gen_range(-100.0..100.0);
            let s = random_state(&mut rng, model, t, 3.0, 1e-3);
            let d = crnbp_accel(&m0, &s, t).unwrap() - cr3bp_accel(&m0, &s).unwrap();
            worst = worst.max(d.amax());
            n += 1;
        }
    }
    (worst <= 1e-15, format!("{n} states over {} models, max |difference| {worst:e}", models.len()))
}

fn jacobian() -> (bool, String) {
    let model = system("sun_jupiter_9body");
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let t = rng.gen_range(0.0..50.0);
        let s = random_state(&mut rng, &model, t, 3.0, 0.05);
        let j = state_jacobian(&model, &s, t).unwrap();
        let mut fd = Matrix6::zeros();
        for c in 0..6 {
            let (mut p, mut m) = (s, s);
            p[c] += 1e-7;
            m[c] -= 1e-7;
            let col = (vector_field(&model, &p, t).unwrap() - vector_field(&model, &m, t).unwrap()) / 2e-7;
            fd.set_column(c, &col);
        }
        worst = worst.max((j - fd).amax() / j.amax());
    }
    (worst < 1e-6, format!("100 states, 9-body model, max relative error {worst:e}"))
}

fn oracle() -> (bool, String) {
    let d = inertial_deviation(3, 10.0);
    (d < 1e-8, format!("3 states over 10 time units, max position deviation {d:e}"))
}

fn jacobi() -> (bool, String) {
    let model = system("jupiter_europa_cr3bp");
    let settings = IntegratorSettings::default().with_tolerance(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    // Random prograde near-circular start between the planet and the moon,
    // kept only if it stays bounded and clear of both bodies.
    for attempt in 1..=50 {
        let r: f64 = rng.gen_range(0.4..0.8);
        let phase = rng.gen_range(0.0..TAU);
        let speed = (1.0 / r).sqrt() * rng.gen_range(0.95..1.05) - r;
        let s0 = State6::new(
            r * phase.cos() - model.mu2(),
            r * phase.sin(),
            rng.gen_range(-0.02..0.02),
            -speed * phase.sin(),
            speed * phase.cos(),
            0.0,
        );
        let Ok(tr) = integrate(&model, &s0, 0.0, 100.0, &settings, &[]) else {
            continue;
        };
        let rmax = tr.samples.iter().map(|(_, s)| s.fixed_rows::<3>(0).norm()).fold(0.0, f64::max);
        if tr.final_time() != 100.0 || rmax > 0.95 {
            continue;
        }
        let j0 = jacobi_constant(&model, &s0).unwrap();
        let drift = tr
            .samples
            .iter()
            .map(|(_, s)| (jacobi_constant(&model, s).unwrap() - j0).abs())
            .fold(0.0, f64::max);
        return (
            drift < 1e-10,
            format!("orbit {attempt} (r0 {r:.3}), 100 time units, max |dJ| {drift:e}"),
        );
    }
    (false, "no bounded orbit found".into())
}

fn ephemerides() -> (bool, String) {
    let orth = |m: &Matrix3<f64>| (m * m.transpose() - Matrix3::identity()).amax();
    let text = "\
2451545.0 B 7.5e5 -1.2e5 3.3e4 1.1 12.9 -0.4
2451545.0 C 1.9e6 4.0e5 -2.1e4 -1.7 8.0 0.2
2451545.0 D -3.0e5 6.1e5 1.0e4 -15.0 -7.5 0.9
";
    let table = parse_table(text, std::path::Path::new("synthetic")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut rt, mut rot) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let el = MeanElements {
            inclination: rng.gen_range(0.0..3.14),
            arg_periapsis: rng.gen_range(-3.14..3.14),
            node: rng.gen_range(-3.14..3.14),
        };
        let f = orbit_frame(&el);
        let triad = Matrix3::from_rows(&[f.e2.transpose(), f.e2perp.transpose(), f.h2.transpose()]);
        let s12 = table.position("B", 2451545.0).unwrap();
        let s = s_matrix(&f, &s12).unwrap();
        rot = rot.max(orth(&triad)).max(orth(&s));
        let map = SynodicMap::new(&f, &s12, 2.5e-5).unwrap();
        for rec in &table.records {
            let (p, v) = (rec.position / 6.7e5, rec.velocity / 13.7);
            let t = rng.gen_range(-20.0..20.0);
            rot = rot.max(orth(&t_matrix(t)));
            let (p2, v2) = map.to_fixed(t, &map.to_synodic(t, &p, &v));
            rt = rt.max((p2 - p).amax()).max((v2 - v).amax());
        }
    }
    // The shipped tables go through the same path.
    for name in ["jupiter_europa_crnbp", "sun_jupiter_9body"] {
        let sys = load_system(data(&format!("systems/{name}.toml"))).unwrap();
        let e = sys.ephemeris.unwrap();
        let s12 = e.table.position(&sys.model.names()[1], e.jd0).unwrap();
        let map = SynodicMap::new(&e.frame, &s12, sys.model.mu2()).unwrap();
        rot = rot.max(orth(&map.s));
        for rec in &e.table.records {
            let (p, v) = crnbp::ephem::to_canonical(&sys.model, &rec.position, &rec.velocity);
            let (p2, v2) = map.to_fixed(3.7, &map.to_synodic(3.7, &p, &v));
            rt = rt.max((p2 - p).amax() / p.amax().max(1.0)).max((v2 - v).amax() / v.amax().max(1.0));
        }
    }
    (
        rt < 1e-10 && rot < 1e-13,
        format!("round trip {rt:e}, worst orthonormality {rot:e}"),
    )
}

fn fli_structure() -> (bool, String) {
    let cfg = scenario("fli_sun_jupiter");
    let model = cfg.load_system().unwrap().model;
    let spec = grid_spec(&model, cfg.fli_map.as_ref().unwrap());
    let one = scan_with_threads(&model, &spec, &cfg.integrator, 1).unwrap();
    let two = scan_with_threads(&model, &spec, &cfg.integrator, 2).unwrap();
    let monotone = one.monotone_in_horizon();
    let band = tisserand_band(&one, 1.0, 3.0, 2);
    let excess = band.band_mean - band.median;
    let same = one.values.iter().zip(&two.values).all(|(a, b)| a.to_bits() == b.to_bits()) && one.status == two.status;
    (
        monotone && excess >= 2.0 && same,
        format!(
            "{}x{} grid, {:.0}-year horizon: monotone {monotone}, band mean {:.3} over {} cells vs median {:.3} (excess {excess:.3}), 1 vs 2 threads identical {same}",
            spec.n_a,
            spec.n_e,
            cfg.fli_map.as_ref().unwrap().horizon_years,
            band.band_mean,
            band.band_cells,
            band.median
        ),
    )
}

fn family() -> (bool, String) {
    let cfg = scenario("family_ganymede_l3");
    let model = cfg.load_system().unwrap().model;
    let fam_cfg = cfg.family.as_ref().unwrap();
    let run = compute_family(&model, fam_cfg, &cfg.integrator, Some(TAU)).unwrap();
    let members = &run.family.members;
    let settings = IntegratorSettings::default().with_tolerance(1e-13);
    let mut worst: f64 = 0.0;
    for m in members {
        let end = propagate_final(&model, &m.state0, 0.0, m.period, &settings).unwrap();
        worst = worst.max((end - m.state0).amax()).max(m.closure_residual);
    }
    let Some(target) = run.target else {
        return (false, format!("no 2π member: {:?}", run.target_error));
    };
    let end = propagate_final(&model, &target.state0, 0.0, target.period, &settings).unwrap();
    let target_res = (end - target.state0).amax();
    let dt = (target.period - TAU).abs();
    (
        members.len() >= 30 && worst < 1e-10 && dt <= 1e-9 && target_res < 1e-10,
        format!(
            "{} members, worst closure {worst:e}; 2π member |T - 2π| {dt:e}, closure {target_res:e}",
            members.len()
        ),
    )
}

fn epsilon() -> (bool, String) {
    let cfg = scenario("epsilon_ganymede_laplace");
    let run = compute_epsilon(&cfg).unwrap();
    let branch = run.branch();
    let Some(end) = branch.family.members.last().filter(|m| m.param >= 1.0) else {
        return (false, "selected branch did not reach ε = 1".into());
    };
    let model = &run.problem.model;
    // Independent re-integration with tighter tolerances.
    let settings = IntegratorSettings::default().with_tolerance(1e-14);
    let tip = propagate_final(model, &end.state0, 0.0, end.period, &settings).unwrap();
    let residual = (tip - end.state0).amax();
    let deformation = branch.deformation.unwrap_or(f64::NAN);
    let mono = monodromy(&run.problem, end).unwrap();
    let all: Vec<String> = run
        .branches
        .iter()
        .map(|b| b.deformation.map_or("-".into(), |d| format!("{d:.4}")))
        .collect();
    (
        residual < 1e-8 && (0.1..=1.0).contains(&deformation),
        format!(
            "branch {} of {} (deformations {}), re-integrated closure {residual:e}, deformation {deformation:.4}, det {:.2e} off 1",
            run.selected,
            run.branches.len(),
            all.join(", "),
            (mono.determinant - 1.0).abs()
        ),
    )
}

struct Sweeps {
    cr3bp: Vec<LandingResult>,
    crnbp: Vec<(f64, Vec<LandingResult>)>,
    gateway: f64,
}

fn sweeps() -> Sweeps {
    let run_cfg = |name: &str| -> Vec<(f64, Vec<LandingResult>)> {
        let cfg = scenario(name);
        let model = cfg.load_system().unwrap().model;
        let block = cfg.landing.as_ref().unwrap();
        let settings = IntegratorSettings {
            sample_stride: 50,
            ..cfg.integrator
        };
        block
            .arrival_days
            .iter()
            .map(|&ta| {
                let mut spec = block.spec(ta);
                spec.keep_samples = false;
                (ta, landing_sweep(&model, &spec, &settings).unwrap())
            })
            .collect()
    };
    let model = system("jupiter_europa_crnbp");
    Sweeps {
        cr3bp: run_cfg("landing_europa_cr3bp").remove(0).1,
        crnbp: run_cfg("landing_europa_crnbp"),
        gateway: gateway_radius(&model).unwrap(),
    }
}

fn exits(results: &[LandingResult], lo: f64, hi: f64, radius: f64) -> Vec<f64> {
    results
        .iter()
        .filter(|r| (lo..=hi).contains(&r.theta_deg) && r.exits_beyond(radius))
        .map(|r| r.theta_deg)
        .collect()
}

fn count(results: &[LandingResult]) -> String {
    let survived = results.iter().filter(|r| r.outcome == LandingOutcome::Survived).count();
    let failed = results.iter().filter(|r| matches!(r.outcome, LandingOutcome::Failed { .. })).count();
    format!("{survived}/{} survive, {failed} failed", results.len())
}

fn landing(s: &Sweeps, radius: f64) -> (bool, String) {
    let complete = |r: &[LandingResult]| !r.is_empty() && !r.iter().any(|x| matches!(x.outcome, LandingOutcome::Failed { .. }));
    let mut ok = complete(&s.cr3bp) && s.crnbp.len() == 3;
    let mut parts = vec![format!("CR3BP {}", count(&s.cr3bp))];
    for (ta, res) in &s.crnbp {
        ok &= complete(res);
        let window = if (ta - 2.36).abs() < 1e-9 {
            Some((140.0, 160.0))
        } else if (ta - 7.1).abs() < 1e-9 {
            Some((340.0, 360.0))
        } else {
            None
        };
        let mut part = format!("t_a {ta}: {}", count(res));
        if let Some((lo, hi)) = window {
            let hit = exits(res, lo, hi, radius);
            ok &= !hit.is_empty();
            part += &format!(", exits in [{lo}, {hi}] at {hit:?}");
        }
        parts.push(part);
    }
    (ok, parts.join("; "))
}

fn main() {
    println!("acceptance criteria");
    let mut lines = vec![
        run("CR3BP reduction", reduction),
        run("Jacobian vs finite differences", jacobian),
        run("Oracle equivalence", oracle),
        run("Jacobi conservation", jacobi),
        run("Ephemerides pipeline", ephemerides),
        run("FLI structure", fli_structure),
        run("Vertical Lyapunov family", family),
        run("Epsilon continuation", epsilon),
    ];
    let mut swept = None;
    lines.push(run("Landing sweep (exit beyond Europa's orbit, r > 1)", || {
        let s = sweeps();
        let out = landing(&s, 1.0);
        swept = Some(s);
        out
    }));
    let s = swept.unwrap();
    // The gateway reading is stricter than the criterion and reported
    // alongside it; it does not gate the run.
    let gateway = s.gateway;
    let cr3bp_exits = s.cr3bp.iter().filter(|r| r.exits_beyond(1.0)).count();
    let strict = run("Landing sweep, supplementary (exit past the L2 gateway)", || {
        let (ok, d) = landing(&s, gateway);
        (ok, format!("r > {gateway:.5}; {d}; CR3BP survivors beyond r = 1: {cr3bp_exits}"))
    });

    let failed: Vec<&str> = lines.iter().filter(|l| !l.pass).map(|l| l.name).collect();
    let total: f64 = lines.iter().map(|l| l.seconds).sum();
    println!(
        "{} of {} criteria passed in {total:.0} s{}",
        lines.len() - failed.len(),
        lines.len(),
        if strict.pass { "" } else { "; supplementary landing check failed" }
    );
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
